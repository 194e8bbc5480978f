#![allow(dead_code)]

use robust_toll::PriceGrid;

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Minimum of `sum_j x_j f(c_j)` over distributions on the grid with mean
/// `mu` and variance at most `kappa * mu`, by enumerating every basic
/// solution of the three moment rows.
pub fn min_over_supports(grid: &PriceGrid, mu: f64, kappa: f64, f: impl Fn(f64) -> f64) -> f64 {
    let pts: Vec<f64> = grid.points().collect();
    let cap = mu * mu + kappa * mu;
    let scale = grid.upper().max(1.0);
    let ok = |c: &[f64], x: &[f64]| {
        let m: f64 = c.iter().zip(x).map(|(c, x)| c * x).sum();
        let s: f64 = c.iter().zip(x).map(|(c, x)| c * c * x).sum();
        x.iter().all(|&v| v >= -1e-12)
            && (m - mu).abs() <= 1e-9 * scale
            && s - m * m <= kappa * m + 1e-9 * scale * scale
    };
    let val = |c: &[f64], x: &[f64]| c.iter().zip(x).map(|(c, x)| f(*c) * x).sum::<f64>();
    let mut best = f64::INFINITY;
    if pts.iter().any(|&p| (p - mu).abs() < 1e-12) {
        best = f(mu);
    }
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            let c = [pts[i], pts[j]];
            if let Some(x) = gauss_solve(vec![vec![1.0, 1.0], c.to_vec()], vec![1.0, mu]) {
                if ok(&c, &x) {
                    best = best.min(val(&c, &x));
                }
            }
            for k in j + 1..n {
                let c = [pts[i], pts[j], pts[k]];
                let a = vec![vec![1.0; 3], c.to_vec(), c.iter().map(|v| v * v).collect()];
                if let Some(x) = gauss_solve(a, vec![1.0, mu, cap]) {
                    if ok(&c, &x) {
                        best = best.min(val(&c, &x));
                    }
                }
            }
        }
    }
    best
}

/// Full `(ell, lambda)` enumeration of the two-point problem at toll `r`,
/// including the degenerate point mass. Returns total cost over `t` periods.
pub fn two_point_enumeration(grid: &PriceGrid, mu: f64, kappa: f64, t: usize, r: f64) -> f64 {
    let tf = t as f64;
    let mut best = tf * mu.min(r);
    for lambda in 1..t {
        let l = lambda as f64;
        for ell in grid.points().filter(|&p| p < mu) {
            let u = (mu * tf - l * ell) / (tf - l);
            let spread = l * (ell - mu).powi(2) + (tf - l) * (u - mu).powi(2);
            if u <= grid.upper() + 1e-9 && spread <= kappa * mu * (tf - 1.0) + 1e-9 {
                best = best.min(l * ell + (tf - l) * r);
            }
        }
    }
    best
}

/// Worst-case usage count at toll `r` under the two-point problem, found by
/// enumerating every `(ell, lambda)` pair with the true objective
/// `lambda * min(ell, r) + (T - lambda) * min(u, r)`. Nature's ties go to the
/// response with the fewest toll-road periods.
pub fn two_point_usage(grid: &PriceGrid, mu: f64, kappa: f64, t: usize, r: f64) -> usize {
    let tf = t as f64;
    let mut best = (tf * mu.min(r), if r <= mu { t } else { 0 });
    for lambda in 1..t {
        let l = lambda as f64;
        for ell in grid.points().filter(|&p| p < mu) {
            let u = (mu * tf - l * ell) / (tf - l);
            let spread = l * (ell - mu).powi(2) + (tf - l) * (u - mu).powi(2);
            if u > grid.upper() + 1e-9 || spread > kappa * mu * (tf - 1.0) + 1e-9 {
                continue;
            }
            let val = l * ell.min(r) + (tf - l) * u.min(r);
            let mut used = 0;
            if ell >= r {
                used += lambda;
            }
            if u >= r {
                used += t - lambda;
            }
            if val < best.0 - 1e-9 || ((val - best.0).abs() <= 1e-9 && used < best.1) {
                best = (val, used);
            }
        }
    }
    best.1
}

/// First index of the maximum, scanning in order.
pub fn first_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub mod nets {
    use robust_toll::network::{NetworkArc, TollNetwork};

    pub const O: usize = 0;
    pub const N: usize = 1;
    pub const A: usize = 2;
    pub const B: usize = 3;
    pub const P: usize = 4;
    pub const D: usize = 5;

    /// General network with three toll arcs r1 = P->A, r2 = A->B, r3 = B->P
    /// whose parallel equivalent has three toll paths.
    pub fn figure_arcs() -> Vec<NetworkArc> {
        let arc = |tail, head, toll| NetworkArc {
            tail,
            head,
            toll,
            length: 1.0,
        };
        vec![
            arc(O, N, false),
            arc(N, A, false),
            arc(O, P, false),
            arc(P, D, false),
            arc(B, N, false),
            arc(N, D, false),
            arc(A, D, false),
            arc(P, A, true),
            arc(A, B, true),
            arc(B, P, true),
        ]
    }

    pub fn figure_network(states: Vec<Vec<f64>>) -> TollNetwork {
        TollNetwork::new(6, figure_arcs(), O, D, states).unwrap()
    }

    /// Deterministic but varied per-state costs for the figure network.
    pub fn figure_costs(states: usize) -> Vec<Vec<f64>> {
        (0..states)
            .map(|s| {
                (0..10)
                    .map(|a| {
                        let x = ((s * 31 + a * 17) % 23) as f64;
                        if a >= 7 {
                            1.0 + x / 10.0
                        } else {
                            10.0 + x
                        }
                    })
                    .collect()
            })
            .collect()
    }
}
