//! Plain-text coefficient snapshots: one header line, then `k1 k2 k3 sign reB imB`.

use super::lattice::{ModeIndex, Sign};
use super::osc::OscState;
use super::params::Geometry;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::fmt::Write as _;

pub fn write_snapshot(state: &OscState) -> String {
    let g = state.geometry();
    let mut s = format!("# a1={} a2={} a3={} K={} t={}\n", g.a[0], g.a[1], g.a[2], state.k(), state.t);
    for (m, a, b) in state.iter() {
        let _ = writeln!(s, "{} {} {} {} {} {}", m.k1(), m.k2(), m.k3(), a.symbol(), b.re, b.im);
    }
    s
}

fn header_value<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    header
        .split_whitespace()
        .find_map(|t| t.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| Error::Config { field: key.into(), reason: "missing from snapshot header".into() })
}

fn num<T: std::str::FromStr>(s: &str, field: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Config { field: field.into(), reason: format!("cannot parse `{s}`") })
}

pub fn read_snapshot(text: &str) -> Result<OscState> {
    let mut lines = text.lines();
    let header =
        lines.next().ok_or_else(|| Error::Config { field: "header".into(), reason: "empty snapshot".into() })?;
    let a: Vec<f64> =
        ["a1", "a2", "a3"].iter().map(|k| header_value(header, k).and_then(|v| num(v, k))).collect::<Result<_>>()?;
    let k: usize = num(header_value(header, "K")?, "K")?;
    let mut state = OscState::zeros(Geometry::new(a[0], a[1], a[2])?, k)?;
    state.t = num(header_value(header, "t")?, "t")?;
    for (n, line) in lines.enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        let field = format!("line {}", n + 2);
        if f.len() != 6 {
            return Err(Error::Config { field, reason: "expected `k1 k2 k3 sign reB imB`".into() });
        }
        let mode = ModeIndex::new(num(f[0], &field)?, num(f[1], &field)?, num(f[2], &field)?)?;
        let sign =
            Sign::parse(f[3]).ok_or_else(|| Error::Config { field: field.clone(), reason: "bad sign".into() })?;
        let b = Complex64::new(num(f[4], &field)?, num(f[5], &field)?);
        let i = state.truncation().index(mode).ok_or(Error::OutsideTruncation(mode.k1(), mode.k2(), mode.k3()))?;
        state.as_mut_slice()[2 * i + sign.slot()] = b;
    }
    state.check_reality(1e-12)?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn snapshot_round_trip_is_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut s = OscState::random(Geometry::new(1.1, 2.3, 0.9).unwrap(), 2, &mut rng, 1.0, 1.0).unwrap();
        s.t = 0.123456789;
        let back = read_snapshot(&write_snapshot(&s)).unwrap();
        assert_eq!(back, s);
    }
}
