//! Big-M linearization of nature's problem over `T` sampled periods, emitted
//! in CPLEX LP format for external solvers, plus an exact solve for small `T`.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::PriceGrid;
use crate::history::MomentEnvelope;
use crate::Money;

/// Largest `T` accepted by [`solve_nature_miqp_exact`].
pub const EXACT_MIQP_MAX_PERIODS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TollSetting {
    Fixed(Money),
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiqpVariable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

impl RowSense {
    fn symbol(self) -> &'static str {
        match self {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiqpRow {
    pub name: String,
    pub linear: Vec<(f64, usize)>,
    /// `(coef, i, j)` for `coef * x_i * x_j`.
    pub quadratic: Vec<(f64, usize, usize)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl MiqpRow {
    fn linear(name: String, linear: Vec<(f64, usize)>, sense: RowSense, rhs: f64) -> Self {
        Self {
            name,
            linear,
            quadratic: Vec::new(),
            sense,
            rhs,
        }
    }

    fn activity(&self, x: &[f64]) -> f64 {
        self.linear.iter().map(|&(a, i)| a * x[i]).sum::<f64>()
            + self.quadratic.iter().map(|&(a, i, j)| a * x[i] * x[j]).sum::<f64>()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            RowSense::Le => (lhs - self.rhs).max(0.0),
            RowSense::Ge => (self.rhs - lhs).max(0.0),
            RowSense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiqpModel {
    pub variables: Vec<MiqpVariable>,
    pub objective: Vec<(f64, usize)>,
    pub rows: Vec<MiqpRow>,
    pub big_m: Money,
    pub periods: usize,
}

impl MiqpModel {
    pub fn binary_count(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn continuous_count(&self) -> usize {
        self.variables.len() - self.binary_count()
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(a, i)| a * x[i]).sum()
    }

    /// Rows and bounds violated by more than `tol`, with their violations.
    pub fn violations(&self, x: &[f64], tol: f64) -> Vec<(String, f64)> {
        assert_eq!(x.len(), self.variables.len(), "assignment length");
        let mut out = Vec::new();
        for (v, &val) in self.variables.iter().zip(x) {
            let mut bad = (v.lower - val).max(0.0);
            if let Some(u) = v.upper {
                bad = bad.max(val - u);
            }
            if v.kind == VarKind::Binary {
                bad = bad.max(val.min(1.0 - val).max(0.0));
            }
            if bad > tol {
                out.push((format!("bound {}", v.name), bad));
            }
        }
        for row in &self.rows {
            let bad = row.violation(x);
            if bad > tol {
                out.push((row.name.clone(), bad));
            }
        }
        out
    }

    /// Serialize in CPLEX LP format.
    pub fn to_lp_string(&self) -> String {
        let mut s = String::new();
        let name = |i: usize| self.variables[i].name.as_str();
        let _ = writeln!(s, "\\ nature problem, T = {}, M = {}", self.periods, num(self.big_m));
        s.push_str("Minimize\n obj:");
        write_linear(&mut s, &self.objective, &name);
        s.push_str("\nSubject To\n");
        for row in &self.rows {
            let _ = write!(s, " {}:", row.name);
            write_linear(&mut s, &row.linear, &name);
            if !row.quadratic.is_empty() {
                s.push_str(if row.linear.is_empty() { " [" } else { " + [" });
                for (k, &(a, i, j)) in row.quadratic.iter().enumerate() {
                    let term = if i == j {
                        format!("{} ^2", name(i))
                    } else {
                        format!("{} * {}", name(i), name(j))
                    };
                    write_term(&mut s, a, &term, k == 0);
                }
                s.push_str(" ]");
            }
            let _ = writeln!(s, " {} {}", row.sense.symbol(), num(row.rhs));
        }
        s.push_str("Bounds\n");
        for v in &self.variables {
            if v.kind == VarKind::Binary {
                continue;
            }
            match v.upper {
                Some(u) if u == v.lower => {
                    let _ = writeln!(s, " {} = {}", v.name, num(u));
                }
                Some(u) => {
                    let _ = writeln!(s, " {} <= {} <= {}", num(v.lower), v.name, num(u));
                }
                None => {
                    let _ = writeln!(s, " {} >= {}", v.name, num(v.lower));
                }
            }
        }
        s.push_str("Binaries\n");
        let bins: Vec<&str> = self
            .variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .map(|v| v.name.as_str())
            .collect();
        if !bins.is_empty() {
            let _ = writeln!(s, " {}", bins.join(" "));
        }
        s.push_str("End\n");
        s
    }
}

fn num(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

fn write_term(s: &mut String, coef: f64, var: &str, first: bool) {
    let sign = if coef < 0.0 { "-" } else { "+" };
    let mag = coef.abs();
    if first {
        s.push(' ');
        if coef < 0.0 {
            s.push_str("- ");
        }
    } else {
        let _ = write!(s, " {sign} ");
    }
    if mag != 1.0 {
        let _ = write!(s, "{} ", num(mag));
    }
    s.push_str(var);
}

fn write_linear<'a>(s: &mut String, terms: &[(f64, usize)], name: &impl Fn(usize) -> &'a str) {
    for (k, &(a, i)) in terms.iter().enumerate() {
        write_term(s, a, name(i), k == 0);
    }
}

/// Build the linearized model. Variables are ordered `r`, then `c_i, z_i,
/// y_i, u_i, v_i` for `i = 1..T`; a fixed toll is pinned by its bounds.
pub fn emit_nature_miqp(
    grid: &PriceGrid,
    env: &MomentEnvelope,
    periods: usize,
    toll: TollSetting,
    epsilon: Option<f64>,
    big_m: Option<Money>,
) -> Result<MiqpModel> {
    if periods == 0 {
        return Err(Error::InvalidArgument("T must be positive".into()));
    }
    if let Some(e) = epsilon {
        if !(e > 0.0 && e <= 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon {e} outside (0, 1]")));
        }
    }
    let (q, qq) = (grid.lower(), grid.upper());
    let m = big_m.unwrap_or(qq);
    if !(m >= qq) {
        return Err(Error::InvalidArgument(format!("big M {m} below upper bound {qq}")));
    }
    let t = periods;
    let tf = t as f64;
    let mut variables = Vec::with_capacity(1 + 5 * t);
    let (r_lo, r_hi) = match toll {
        TollSetting::Fixed(r) => (r, r),
        TollSetting::Free => (q, qq),
    };
    variables.push(MiqpVariable {
        name: "r".into(),
        kind: VarKind::Continuous,
        lower: r_lo,
        upper: Some(r_hi),
    });
    for i in 1..=t {
        for (prefix, kind, lower, upper) in [
            ("c", VarKind::Continuous, q, Some(qq)),
            ("z", VarKind::Continuous, 0.0, None),
            ("y", VarKind::Binary, 0.0, Some(1.0)),
            ("u", VarKind::Continuous, 0.0, None),
            ("v", VarKind::Continuous, 0.0, None),
        ] {
            variables.push(MiqpVariable {
                name: format!("{prefix}_{i}"),
                kind,
                lower,
                upper,
            });
        }
    }
    let r = 0;
    let c = |i: usize| 1 + 5 * i;
    let z = |i: usize| 2 + 5 * i;
    let y = |i: usize| 3 + 5 * i;
    let u = |i: usize| 4 + 5 * i;
    let v = |i: usize| 5 + 5 * i;

    let mut objective = vec![(1.0, r)];
    objective.extend((0..t).map(|i| (-1.0 / tf, z(i))));

    let sum_c: Vec<(f64, usize)> = (0..t).map(|i| (1.0, c(i))).collect();
    let mut rows = vec![
        MiqpRow::linear("mean_lower".into(), sum_c.clone(), RowSense::Ge, tf * env.u_lower),
        MiqpRow::linear("mean_upper".into(), sum_c, RowSense::Le, tf * env.u_upper),
    ];
    // T * sum c^2 - (sum c)^2 <= kappa * T * sum c
    let mut quadratic = Vec::new();
    for i in 0..t {
        for j in i..t {
            let coef = if i == j { tf - 1.0 } else { -2.0 };
            if coef != 0.0 {
                quadratic.push((coef, c(i), c(j)));
            }
        }
    }
    let linear: Vec<(f64, usize)> = if env.kappa_bar == 0.0 {
        Vec::new()
    } else {
        (0..t).map(|i| (-env.kappa_bar * tf, c(i))).collect()
    };
    rows.push(MiqpRow {
        name: "variance".into(),
        linear,
        quadratic,
        sense: RowSense::Le,
        rhs: 0.0,
    });
    for i in 0..t {
        let k = i + 1;
        let fam: [(&str, Vec<(f64, usize)>, RowSense, f64); 9] = [
            ("shortfall_lower", vec![(1.0, c(i)), (-1.0, r), (1.0, z(i))], RowSense::Ge, 0.0),
            ("usage_switch", vec![(1.0, r), (-1.0, c(i)), (m, y(i))], RowSense::Ge, 0.0),
            ("shortfall_off", vec![(1.0, z(i)), (m, y(i))], RowSense::Le, m),
            (
                "shortfall_upper",
                vec![(1.0, z(i)), (-1.0, r), (1.0, c(i)), (1.0, u(i)), (-1.0, v(i))],
                RowSense::Le,
                0.0,
            ),
            ("ry_big_m", vec![(1.0, u(i)), (-m, y(i))], RowSense::Le, 0.0),
            ("cy_big_m", vec![(1.0, v(i)), (-m, y(i))], RowSense::Le, 0.0),
            ("cy_cost", vec![(1.0, v(i)), (-1.0, c(i))], RowSense::Le, 0.0),
            ("ry_toll", vec![(1.0, u(i)), (-1.0, r)], RowSense::Le, 0.0),
            ("ry_floor", vec![(1.0, u(i)), (-1.0, r), (-m, y(i))], RowSense::Ge, -m),
        ];
        for (name, linear, sense, rhs) in fam {
            rows.push(MiqpRow::linear(format!("{name}_{k}"), linear, sense, rhs));
        }
    }
    if let Some(e) = epsilon {
        rows.push(MiqpRow::linear(
            "usage_cap".into(),
            (0..t).map(|i| (1.0, y(i))).collect(),
            RowSense::Le,
            e * tf,
        ));
    }
    Ok(MiqpModel {
        variables,
        objective,
        rows,
        big_m: m,
        periods: t,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiqpSolution {
    pub objective: f64,
    pub costs: Vec<Money>,
    /// `true` where the toll road is used (`c_i >= r`).
    pub usage: Vec<bool>,
    pub toll: Money,
}

impl MiqpSolution {
    pub fn usage_count(&self) -> usize {
        self.usage.iter().filter(|&&b| b).count()
    }

    /// Full variable vector in the order used by [`emit_nature_miqp`].
    pub fn assignment(&self) -> Vec<f64> {
        let r = self.toll;
        let mut x = vec![r];
        for (&c, &used) in self.costs.iter().zip(&self.usage) {
            let (z, y, u, v) = if used {
                (0.0, 1.0, r, c)
            } else {
                (r - c, 0.0, 0.0, 0.0)
            };
            x.extend([c, z, y, u, v]);
        }
        x
    }
}

/// Exact optimum of the model at a fixed toll, for `T <= 12`.
///
/// Every usage pattern is tried. Within a pattern the continuous part is
/// symmetric and convex, so the low periods share one value `l` and the
/// used periods one value `u`; the search then minimizes `l`.
pub fn solve_nature_miqp_exact(
    grid: &PriceGrid,
    env: &MomentEnvelope,
    periods: usize,
    r: Money,
    epsilon: Option<f64>,
) -> Result<MiqpSolution> {
    if periods == 0 || periods > EXACT_MIQP_MAX_PERIODS {
        return Err(Error::InvalidArgument(format!(
            "exact solve needs 1 <= T <= {EXACT_MIQP_MAX_PERIODS}, got {periods}"
        )));
    }
    if r < grid.lower() || r > grid.upper() {
        return Err(Error::InvalidArgument(format!("toll {r} outside the grid")));
    }
    env.check_feasible(grid)?;
    let t = periods;
    let mut memo: HashMap<usize, Option<(f64, f64)>> = HashMap::new();
    let mut best: Option<(f64, u32, f64, f64)> = None;
    for mask in 0u32..(1u32 << t) {
        let used = mask.count_ones() as usize;
        if let Some(e) = epsilon {
            if used as f64 > e * t as f64 + 1e-9 {
                continue;
            }
        }
        let low = t - used;
        let Some((l, u)) = *memo.entry(low).or_insert_with(|| pattern_optimum(grid, env, t, low, r))
        else {
            continue;
        };
        let obj = r - low as f64 * (r - l) / t as f64;
        if best.is_none_or(|b| obj < b.0 - 1e-12) {
            best = Some((obj, mask, l, u));
        }
    }
    let (objective, mask, l, u) =
        best.ok_or_else(|| Error::InfeasibleEnvelope("no feasible usage pattern".into()))?;
    let usage: Vec<bool> = (0..t).map(|i| mask >> i & 1 == 1).collect();
    Ok(MiqpSolution {
        objective,
        costs: usage.iter().map(|&b| if b { u } else { l }).collect(),
        usage,
        toll: r,
    })
}

/// Lowest `l` (with its partner `u`) for `low` periods at or below the toll.
fn pattern_optimum(
    grid: &PriceGrid,
    env: &MomentEnvelope,
    t: usize,
    low: usize,
    r: Money,
) -> Option<(f64, f64)> {
    let (q, qq) = (grid.lower(), grid.upper());
    let tf = t as f64;
    if low == 0 {
        let m = r.max(env.u_lower).max(q);
        return (m <= env.u_upper.min(qq) + 1e-9).then_some((m, m));
    }
    if low == t {
        let m = env.u_lower.max(q);
        return (m <= env.u_upper.min(r) + 1e-9).then_some((m, m));
    }
    let (k, h) = (low as f64, (t - low) as f64);
    let kappa = env.kappa_bar;
    // slack of the variance row at (l, u); feasible where <= 0
    let phi = |l: f64, u: f64| k * h * (u - l).powi(2) / (tf * tf) - kappa * (k * l + h * u) / tf;
    let u_range = |l: f64| {
        let a = r.max((tf * env.u_lower - k * l) / h);
        let b = qq.min((tf * env.u_upper - k * l) / h);
        (a, b)
    };
    let best_u = |l: f64| {
        let (a, b) = u_range(l);
        (l + kappa * tf / (2.0 * k)).clamp(a, b.max(a))
    };
    let slack = |l: f64| phi(l, best_u(l));
    let lo = q.max((tf * env.u_lower - h * qq) / k);
    let hi = r.min((tf * env.u_upper - h * r) / k);
    if lo > hi + 1e-12 {
        return None;
    }
    let hi = hi.max(lo);
    let tol = 1e-9 * qq.max(1.0).powi(2);
    let feasible_at = |l: f64| slack(l) <= tol;
    let pick = |l: f64| Some((l, best_u(l)));
    if feasible_at(lo) {
        return pick(lo);
    }
    // the slack is convex in l; find its minimizer, then the leftmost root
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if slack(m1) <= slack(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    let mut right = 0.5 * (a + b);
    if !feasible_at(right) {
        return None;
    }
    let mut left = lo;
    for _ in 0..200 {
        let mid = 0.5 * (left + right);
        if feasible_at(mid) {
            right = mid;
        } else {
            left = mid;
        }
    }
    pick(right)
}
