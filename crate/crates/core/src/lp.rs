//! Small dense two-phase simplex with Bland's rule.
//!
//! Sized for the handful-of-rows problems solved here: nature's moment LP
//! (three rows, one column per grid point) and allocation relaxations.
//! Supports lexicographic objectives: after each stage, columns with a
//! positive reduced cost are barred, which pins the iterate to the optimal
//! face before the next objective is minimized.

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub kind: RowKind,
    pub rhs: f64,
}

/// `x >= 0` subject to the given rows.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    columns: usize,
    rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// Objective value of each lexicographic stage.
    pub objectives: Vec<f64>,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(columns: usize) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, kind: RowKind, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.columns, "row width mismatch");
        self.rows.push(Row { coeffs, kind, rhs });
        self
    }

    pub fn minimize(&self, objective: &[f64]) -> LpOutcome {
        self.minimize_lexicographic(&[objective])
    }

    pub fn minimize_lexicographic(&self, objectives: &[&[f64]]) -> LpOutcome {
        assert!(!objectives.is_empty());
        for c in objectives {
            assert_eq!(c.len(), self.columns, "objective width mismatch");
        }
        let mut tab = match Tableau::phase_one(self) {
            Some(t) => t,
            None => return LpOutcome::Infeasible,
        };
        let mut values = Vec::with_capacity(objectives.len());
        for (stage, c) in objectives.iter().enumerate() {
            let full = tab.extend_cost(c);
            if !tab.optimize(&full) {
                return LpOutcome::Unbounded;
            }
            values.push(tab.objective_value(&full));
            if stage + 1 < objectives.len() {
                tab.bar_positive_reduced_costs(&full);
            }
        }
        LpOutcome::Optimal(LpSolution {
            x: tab.primal(self.columns),
            objectives: values,
        })
    }
}

struct Tableau {
    /// `m` constraint rows, each `width + 1` long (rhs last).
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
    /// Columns that may never enter the basis (artificials, barred columns).
    barred: Vec<bool>,
    structural_and_slack: usize,
}

impl Tableau {
    fn phase_one(lp: &LinearProgram) -> Option<Self> {
        let m = lp.rows.len();
        let n = lp.columns;
        let slacks = lp.rows.iter().filter(|r| r.kind != RowKind::Eq).count();
        let base = n + slacks;
        // One artificial per row; rows whose slack can start basic skip theirs
        // by keeping the artificial barred from the outset.
        let width = base + m;
        let mut a = vec![vec![0.0; width + 1]; m];
        let mut basis = vec![0; m];
        let mut slack_col = n;
        let mut needs_phase_one = false;
        for (i, row) in lp.rows.iter().enumerate() {
            let sign = if row.rhs < 0.0 { -1.0 } else { 1.0 };
            for j in 0..n {
                a[i][j] = sign * row.coeffs[j];
            }
            a[i][width] = sign * row.rhs;
            let mut slack_basic = false;
            match row.kind {
                RowKind::Eq => {}
                RowKind::Le | RowKind::Ge => {
                    let s = if row.kind == RowKind::Le { 1.0 } else { -1.0 } * sign;
                    a[i][slack_col] = s;
                    if s > 0.0 {
                        basis[i] = slack_col;
                        slack_basic = true;
                    }
                    slack_col += 1;
                }
            }
            if !slack_basic {
                a[i][base + i] = 1.0;
                basis[i] = base + i;
                needs_phase_one = true;
            }
        }
        let mut tab = Tableau {
            a,
            basis,
            width,
            barred: vec![false; width],
            structural_and_slack: base,
        };
        for i in 0..m {
            if tab.basis[i] < base {
                tab.barred[base + i] = true;
            }
        }
        if needs_phase_one {
            let mut cost = vec![0.0; width];
            for i in 0..m {
                cost[base + i] = if tab.basis[i] == base + i { 1.0 } else { 0.0 };
            }
            if !tab.optimize(&cost) {
                return None;
            }
            let infeas = tab.objective_value(&cost);
            let scale = 1.0 + tab.a.iter().map(|r| r[width].abs()).fold(0.0, f64::max);
            if infeas > FEAS_TOL * scale {
                return None;
            }
            tab.drive_out_artificials();
        }
        for j in base..width {
            tab.barred[j] = true;
        }
        Some(tab)
    }

    fn extend_cost(&self, c: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.width];
        full[..c.len()].copy_from_slice(c);
        full
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (dj, aij) in d.iter_mut().zip(&self.a[i][..self.width]) {
                    *dj -= cb * aij;
                }
            }
        }
        d
    }

    fn objective_value(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(i, &b)| cost[b] * self.a[i][self.width])
            .sum()
    }

    /// Runs primal simplex from the current basis; false when unbounded.
    fn optimize(&mut self, cost: &[f64]) -> bool {
        let mut in_basis = vec![false; self.width];
        for &b in &self.basis {
            in_basis[b] = true;
        }
        loop {
            let d = self.reduced_costs(cost);
            let entering = (0..self.width)
                .find(|&j| !self.barred[j] && !in_basis[j] && d[j] < -COST_TOL);
            let Some(e) = entering else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.a.len() {
                let aie = self.a[i][e];
                if aie > PIVOT_TOL {
                    let ratio = self.a[i][self.width] / aie;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-14
                                || (ratio <= lr + 1e-14 && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((l, _)) = leave else { return false };
            in_basis[self.basis[l]] = false;
            in_basis[e] = true;
            self.pivot(l, e);
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.a[row][col];
        for v in self.a[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.a[row].clone();
        for (i, r) in self.a.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                r[col] = 0.0;
            }
        }
        // Clean tiny negatives in the rhs introduced by rounding.
        for r in self.a.iter_mut() {
            if r[self.width] < 0.0 && r[self.width] > -FEAS_TOL {
                r[self.width] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    fn drive_out_artificials(&mut self) {
        for i in 0..self.a.len() {
            if self.basis[i] >= self.structural_and_slack {
                let candidate = (0..self.structural_and_slack)
                    .find(|&j| !self.basis.contains(&j) && self.a[i][j].abs() > PIVOT_TOL);
                if let Some(j) = candidate {
                    self.pivot(i, j);
                }
                // Otherwise the row is redundant; the artificial stays basic at 0.
            }
        }
    }

    fn bar_positive_reduced_costs(&mut self, cost: &[f64]) {
        let d = self.reduced_costs(cost);
        for j in 0..self.structural_and_slack {
            if d[j] > COST_TOL && !self.basis.contains(&j) {
                self.barred[j] = true;
            }
        }
    }

    fn primal(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.a[i][self.width].max(0.0);
            }
        }
        x
    }
}
