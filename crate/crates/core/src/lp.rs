//! Dense two-phase simplex with Bland's rule and Farkas certificates.
//!
//! Instance sizes here are tiny (at most a few hundred rows), so a full
//! tableau is the right tool. What matters is that verdicts are trustworthy:
//! feasible points are re-verified by substitution, and infeasibility comes
//! with a Farkas witness that is checked numerically before it is reported.
//! A solver that cannot back its verdict returns `Stalled`, never a silent
//! wrong answer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EPS: f64 = 1e-9;
const VERIFY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarBound {
    NonNegative,
    Free,
}

/// Linear program: optional linear objective (minimized) over equality and
/// inequality constraints, with per-variable sign bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearProgram {
    pub num_vars: usize,
    /// Objective coefficients to minimize; `None` solves feasibility only.
    pub objective: Option<Vec<f64>>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<VarBound>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: None,
            constraints: Vec::new(),
            bounds: vec![VarBound::NonNegative; num_vars],
        }
    }

    pub fn set_free(&mut self, var: usize) {
        self.bounds[var] = VarBound::Free;
    }

    pub fn minimize(&mut self, coeffs: Vec<f64>) {
        assert_eq!(coeffs.len(), self.num_vars);
        self.objective = Some(coeffs);
    }

    pub fn le(&mut self, coeffs: Vec<f64>, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars);
        self.constraints.push(Constraint {
            coeffs,
            relation: Relation::Le,
            rhs,
        });
    }

    pub fn ge(&mut self, coeffs: Vec<f64>, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars);
        self.constraints.push(Constraint {
            coeffs,
            relation: Relation::Ge,
            rhs,
        });
    }

    pub fn eq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars);
        self.constraints.push(Constraint {
            coeffs,
            relation: Relation::Eq,
            rhs,
        });
    }

    /// Residual of a candidate point against every constraint and bound.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, bound) in self.bounds.iter().enumerate() {
            if *bound == VarBound::NonNegative {
                worst = worst.max(-x[j]);
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(&a, &b)| a * b).sum();
            let gap = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        worst
    }
}

/// Multipliers over the original constraint rows witnessing infeasibility.
///
/// Aggregating the rows with these multipliers (which must be <= 0 on `Le`
/// rows and >= 0 on `Ge` rows) yields an inequality `sum_j t_j x_j >= beta`
/// whose left side is nonpositive on the feasible sign cone while
/// `beta > 0`, so no feasible point exists.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FarkasCertificate {
    pub row_multipliers: Vec<f64>,
}

impl FarkasCertificate {
    pub fn verify(&self, lp: &LinearProgram, tol: f64) -> bool {
        if self.row_multipliers.len() != lp.constraints.len() {
            return false;
        }
        let mut aggregated = vec![0.0; lp.num_vars];
        let mut beta = 0.0;
        for (mu, c) in self.row_multipliers.iter().zip(&lp.constraints) {
            match c.relation {
                Relation::Le if *mu > tol => return false,
                Relation::Ge if *mu < -tol => return false,
                _ => {}
            }
            for (t, &a) in aggregated.iter_mut().zip(&c.coeffs) {
                *t += mu * a;
            }
            beta += mu * c.rhs;
        }
        for (t, bound) in aggregated.iter().zip(&lp.bounds) {
            let ok = match bound {
                VarBound::NonNegative => *t <= tol,
                VarBound::Free => t.abs() <= tol,
            };
            if !ok {
                return false;
            }
        }
        beta > tol
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Feasible { x: Vec<f64> },
    Infeasible { certificate: FarkasCertificate },
    Unbounded,
    /// Pivot budget exhausted or a verdict failed its own re-verification.
    Stalled,
}

impl LpOutcome {
    pub fn point(&self) -> Option<&[f64]> {
        match self {
            LpOutcome::Optimal { x, .. } | LpOutcome::Feasible { x } => Some(x),
            _ => None,
        }
    }
}

struct Tableau {
    rows: usize,
    cols: usize, // structural + slack + artificial, excluding rhs
    data: Vec<Vec<f64>>,
    obj: Vec<f64>, // reduced costs, last entry = -(objective value)
    basis: Vec<usize>,
    pivots: usize,
    max_pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.data[row][col];
        for v in self.data[row].iter_mut() {
            *v /= piv;
        }
        for r in 0..self.rows {
            if r != row {
                let factor = self.data[r][col];
                if factor != 0.0 {
                    for c in 0..=self.cols {
                        self.data[r][c] -= factor * self.data[row][c];
                    }
                }
            }
        }
        let factor = self.obj[col];
        if factor != 0.0 {
            for c in 0..=self.cols {
                self.obj[c] -= factor * self.data[row][c];
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Bland's rule: entering = lowest-index column with negative reduced
    /// cost, leaving = lowest basis index among the ratio-test minimizers.
    /// Returns Ok(true) at optimum, Ok(false) on unboundedness.
    fn run(&mut self, allowed_cols: usize) -> Result<bool> {
        loop {
            if self.pivots > self.max_pivots {
                return Err(Error::Precision("simplex pivot budget exhausted".into()));
            }
            let entering = (0..allowed_cols).find(|&j| self.obj[j] < -EPS);
            let Some(col) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.data[r][col];
                if a > EPS {
                    let ratio = self.data[r][self.cols] / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-12
                                || (ratio < lratio + 1e-12 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Ok(false);
            };
            self.pivot(row, col);
        }
    }
}

/// Solve the program. Every verdict is re-verified before being returned.
pub fn lp_solve(lp: &LinearProgram) -> LpOutcome {
    if lp.bounds.len() != lp.num_vars {
        return LpOutcome::Stalled;
    }
    let m = lp.constraints.len();

    // Column layout: structural columns (free variables split into a
    // positive and a negative part), then slack/surplus, then one artificial
    // per row.
    let mut col_of_var: Vec<(usize, Option<usize>)> = Vec::with_capacity(lp.num_vars);
    let mut ncols = 0;
    for bound in &lp.bounds {
        match bound {
            VarBound::NonNegative => {
                col_of_var.push((ncols, None));
                ncols += 1;
            }
            VarBound::Free => {
                col_of_var.push((ncols, Some(ncols + 1)));
                ncols += 2;
            }
        }
    }
    let slack_start = ncols;
    let num_slacks = lp
        .constraints
        .iter()
        .filter(|c| c.relation != Relation::Eq)
        .count();
    ncols += num_slacks;
    let art_start = ncols;
    ncols += m;

    let mut data = vec![vec![0.0; ncols + 1]; m];
    let mut flips = vec![1.0; m];
    let mut slack_idx = slack_start;
    for (r, c) in lp.constraints.iter().enumerate() {
        let flip = if c.rhs < 0.0 { -1.0 } else { 1.0 };
        flips[r] = flip;
        for (v, &a) in c.coeffs.iter().enumerate() {
            let (pos, neg) = col_of_var[v];
            data[r][pos] = flip * a;
            if let Some(neg) = neg {
                data[r][neg] = -flip * a;
            }
        }
        match c.relation {
            Relation::Le => {
                data[r][slack_idx] = flip;
                slack_idx += 1;
            }
            Relation::Ge => {
                data[r][slack_idx] = -flip;
                slack_idx += 1;
            }
            Relation::Eq => {}
        }
        data[r][art_start + r] = 1.0;
        data[r][ncols] = flip * c.rhs;
    }

    // Phase 1: minimize the sum of artificials. Reduced costs start as
    // 1 - column sums (pricing out the artificial basis).
    let mut obj = vec![0.0; ncols + 1];
    for j in 0..ncols {
        let col_sum: f64 = (0..m).map(|r| data[r][j]).sum();
        obj[j] = if j >= art_start { 1.0 } else { 0.0 } - col_sum;
    }
    obj[ncols] = -(0..m).map(|r| data[r][ncols]).sum::<f64>();

    let mut tab = Tableau {
        rows: m,
        cols: ncols,
        data,
        obj,
        basis: (art_start..art_start + m).collect(),
        pivots: 0,
        max_pivots: 2000 + 60 * (m + ncols),
    };

    match tab.run(ncols) {
        Ok(true) => {}
        Ok(false) | Err(_) => return LpOutcome::Stalled,
    }
    let phase1_value = -tab.obj[ncols];

    if phase1_value > 1e-7 {
        // Infeasible. Recover the dual from the artificial columns:
        // y_r = 1 - reduced cost of artificial r, mapped back through the
        // row sign flips.
        let multipliers: Vec<f64> = (0..m)
            .map(|r| (1.0 - tab.obj[art_start + r]) * flips[r])
            .collect();
        let certificate = FarkasCertificate {
            row_multipliers: multipliers,
        };
        if certificate.verify(lp, VERIFY_TOL) {
            return LpOutcome::Infeasible { certificate };
        }
        return LpOutcome::Stalled;
    }

    // Drive any leftover artificials out of the basis.
    for r in 0..m {
        if tab.basis[r] >= art_start {
            if let Some(col) = (0..art_start).find(|&j| tab.data[r][j].abs() > 1e-7) {
                tab.pivot(r, col);
            }
            // Otherwise the row is redundant; its rhs is ~0 and the
            // artificial stays basic at level zero, which is harmless as
            // long as artificial columns can never re-enter.
        }
    }

    let extract = |tab: &Tableau| -> Vec<f64> {
        let mut x = vec![0.0; lp.num_vars];
        for (v, &(pos, neg)) in col_of_var.iter().enumerate() {
            let val_of = |col: usize| {
                tab.basis
                    .iter()
                    .position(|&b| b == col)
                    .map_or(0.0, |r| tab.data[r][tab.cols])
            };
            x[v] = val_of(pos) - neg.map_or(0.0, val_of);
        }
        x
    };

    let Some(costs) = &lp.objective else {
        let x = extract(&tab);
        if lp.max_violation(&x) <= VERIFY_TOL {
            return LpOutcome::Feasible { x };
        }
        return LpOutcome::Stalled;
    };

    // Phase 2: rebuild reduced costs for the real objective.
    let mut obj = vec![0.0; ncols + 1];
    for (v, &(pos, neg)) in col_of_var.iter().enumerate() {
        obj[pos] = costs[v];
        if let Some(neg) = neg {
            obj[neg] = -costs[v];
        }
    }
    for r in 0..m {
        let b = tab.basis[r];
        let cost = obj[b];
        if cost != 0.0 {
            for c in 0..=ncols {
                obj[c] -= cost * tab.data[r][c];
            }
        }
    }
    // Forbid artificials from re-entering.
    for j in art_start..ncols {
        if !tab.basis.contains(&j) {
            obj[j] = f64::INFINITY;
        }
    }
    tab.obj = obj;

    match tab.run(art_start) {
        Ok(true) => {
            let x = extract(&tab);
            if lp.max_violation(&x) <= VERIFY_TOL {
                let objective: f64 = costs.iter().zip(&x).map(|(&c, &v)| c * v).sum();
                LpOutcome::Optimal { x, objective }
            } else {
                LpOutcome::Stalled
            }
        }
        Ok(false) => LpOutcome::Unbounded,
        Err(_) => LpOutcome::Stalled,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximize_via_minimize() {
        // maximize x1 s.t. x1 <= 1  ==  minimize -x1
        let mut lp = LinearProgram::new(1);
        lp.minimize(vec![-1.0]);
        lp.le(vec![1.0], 1.0);
        match lp_solve(&lp) {
            LpOutcome::Optimal { x, objective } => {
                assert!((x[0] - 1.0).abs() < 1e-9);
                assert!((objective + 1.0).abs() < 1e-9);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn infeasible_yields_verified_farkas_witness() {
        let mut lp = LinearProgram::new(1);
        lp.ge(vec![1.0], 1.0);
        lp.le(vec![1.0], 0.0);
        match lp_solve(&lp) {
            LpOutcome::Infeasible { certificate } => {
                assert!(certificate.verify(&lp, 1e-8));
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn free_variables_and_equalities() {
        // minimize |x| style: min s  s.t. x <= s, -x <= s, x = -3 (x free)
        let mut lp = LinearProgram::new(2);
        lp.set_free(0);
        lp.minimize(vec![0.0, 1.0]);
        lp.le(vec![1.0, -1.0], 0.0);
        lp.le(vec![-1.0, -1.0], 0.0);
        lp.eq(vec![1.0, 0.0], -3.0);
        match lp_solve(&lp) {
            LpOutcome::Optimal { x, objective } => {
                assert!((x[0] + 3.0).abs() < 1e-9);
                assert!((objective - 3.0).abs() < 1e-9);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn degenerate_cycling_guard() {
        // A classically degenerate instance; Bland's rule must terminate.
        let mut lp = LinearProgram::new(4);
        lp.minimize(vec![-0.75, 150.0, -0.02, 6.0]);
        lp.le(vec![0.25, -60.0, -0.04, 9.0], 0.0);
        lp.le(vec![0.5, -90.0, -0.02, 3.0], 0.0);
        lp.le(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        match lp_solve(&lp) {
            LpOutcome::Optimal { objective, .. } => {
                assert!((objective + 0.05).abs() < 1e-7);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn unbounded_detection() {
        let mut lp = LinearProgram::new(1);
        lp.minimize(vec![-1.0]);
        lp.ge(vec![1.0], 1.0);
        assert!(matches!(lp_solve(&lp), LpOutcome::Unbounded));
    }
}
