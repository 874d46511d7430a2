//! Finite-difference weights on arbitrary nodes.

/// Weights of derivative orders `0..=max_order` at `x0` from nodes `xs` (Fornberg's recursion),
/// indexed `[order][node]`.
pub fn fd_weights(x0: f64, xs: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0f64; max_order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] *= c4 / c3;
        }
        c1 = c2;
    }
    (0..=max_order).map(|k| c.iter().map(|r| r[k]).collect()).collect()
}

/// First-derivative stencils of `width` nodes on a sorted node set, centred where possible.
pub fn derivative_stencils(z: &[f64], width: usize) -> Vec<(usize, Vec<f64>)> {
    let n = z.len();
    let w = width.min(n);
    (0..n)
        .map(|j| {
            let start = j.saturating_sub(w / 2).min(n - w);
            let mut d = fd_weights(z[j], &z[start..start + w], 1).swap_remove(1);
            // constants map to exactly zero
            let drift: f64 = d.iter().sum();
            d[j - start] -= drift;
            (start, d)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centred_weights() {
        let w = fd_weights(1.0, &[0.0, 1.0, 2.0], 2);
        assert!((w[1][0] + 0.5).abs() < 1e-14 && w[1][1].abs() < 1e-14 && (w[1][2] - 0.5).abs() < 1e-14);
        assert!((w[2][0] - 1.0).abs() < 1e-14 && (w[2][1] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn five_point_stencils_differentiate_quartics_exactly() {
        let z: Vec<f64> = (0..12).map(|j| (j as f64 * 0.3).powf(1.4)).collect();
        let st = derivative_stencils(&z, 5);
        for (j, (s, w)) in st.iter().enumerate() {
            let d: f64 = w.iter().enumerate().map(|(i, c)| c * z[s + i].powi(4)).sum();
            assert!((d - 4.0 * z[j].powi(3)).abs() < 1e-9 * (1.0 + z[j].powi(3)));
        }
    }
}
