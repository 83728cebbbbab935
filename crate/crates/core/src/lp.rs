//! Dense two-phase primal simplex.
//!
//! Problems are `maximize c·x` subject to linear rows and `x ≥ 0`. Phase one
//! minimizes the sum of artificial variables; when that sum stays positive
//! its dual solution is returned as a Farkas certificate.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `maximize objective·x` subject to `constraints` and `x ≥ 0`.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { objective, constraints: Vec::new() }
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, Serialize)]
pub struct LpResult {
    pub status: LpStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    /// Optimal: dual values with `rhs·y = objective`. Infeasible: Farkas
    /// vector `y` with `y·A_j ≤ 0` on every column and `y·rhs > 0`.
    /// Unbounded: a primal ray.
    pub certificate: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    pub pivot_tol: f64,
    pub feasibility_tol: f64,
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { pivot_tol: 1e-11, feasibility_tol: 1e-8, max_iterations: 200_000 }
    }
}

const DEGENERATE_RUN: usize = 50;

struct Tableau {
    m: usize,
    width: usize,
    /// `m` constraint rows followed by the reduced-cost row; the last column is the rhs.
    cells: Vec<f64>,
    basis: Vec<usize>,
    barred: Vec<bool>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.cells[r * (self.width + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width)
    }

    fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let w = self.width + 1;
        &mut self.cells[r * w..(r + 1) * w]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width + 1;
        let p = self.at(r, c);
        for v in self.row_mut(r) {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.cells[r * w..(r + 1) * w].to_vec();
        for i in 0..=self.m {
            if i == r {
                continue;
            }
            let f = self.at(i, c);
            if f == 0.0 {
                continue;
            }
            for (v, pr) in self.row_mut(i).iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
        }
        self.basis[r] = c;
    }

    fn set_costs(&mut self, costs: &[f64]) {
        let m = self.m;
        let w = self.width;
        let mut row = vec![0.0; w + 1];
        row[..w].copy_from_slice(&costs[..w]);
        for i in 0..m {
            let cb = costs[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            for (j, v) in row.iter_mut().enumerate() {
                *v -= cb * self.at(i, j);
            }
        }
        self.row_mut(m).copy_from_slice(&row);
    }

    /// Pivots on the current cost row until optimal. Returns `Some(col)`
    /// when column `col` proves unboundedness.
    ///
    /// Dantzig pricing; after a run of degenerate pivots the phase finishes
    /// with Bland's rule, which cannot cycle.
    fn optimize(&mut self, opts: &SimplexOptions, iterations: &mut usize) -> Result<Option<usize>> {
        let mut degenerate_run = 0;
        loop {
            let m = self.m;
            let eligible = (0..self.width).filter(|&j| !self.barred[j] && self.at(m, j) < -opts.pivot_tol);
            let entering = if degenerate_run >= DEGENERATE_RUN {
                eligible.min()
            } else {
                eligible.min_by(|&a, &b| self.at(m, a).total_cmp(&self.at(m, b)))
            };
            let Some(c) = entering else { return Ok(None) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.at(i, c);
                if a > opts.pivot_tol {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            let tie = (ratio - lr).abs() <= 1e-12 * (1.0 + lr.abs());
                            if ratio < lr && !tie || tie && self.basis[i] < self.basis[li] {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else { return Ok(Some(c)) };
            if degenerate_run < DEGENERATE_RUN {
                degenerate_run = if ratio > 1e-12 { 0 } else { degenerate_run + 1 };
            }
            self.pivot(r, c);
            *iterations += 1;
            if *iterations > opts.max_iterations {
                return Err(Error::LpStall(*iterations));
            }
        }
    }
}

/// Solves `lp` with the given options.
pub fn solve_lp(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpResult> {
    let n = lp.objective.len();
    let m = lp.constraints.len();
    if lp.objective.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse("non-finite objective coefficient".into()));
    }
    for c in &lp.constraints {
        if c.coeffs.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "constraint with {} coefficients for {n} variables",
                c.coeffs.len()
            )));
        }
        if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("non-finite constraint coefficient".into()));
        }
    }
    let n_slack = lp.constraints.iter().filter(|c| c.relation != Relation::Eq).count();
    let art0 = n + n_slack;
    let width = art0 + m;
    let mut cells = vec![0.0; (m + 1) * (width + 1)];
    let mut signs = vec![1.0; m];
    let mut slack = n;
    for (i, c) in lp.constraints.iter().enumerate() {
        let row = &mut cells[i * (width + 1)..(i + 1) * (width + 1)];
        row[..n].copy_from_slice(&c.coeffs);
        match c.relation {
            Relation::Le => {
                row[slack] = 1.0;
                slack += 1;
            }
            Relation::Ge => {
                row[slack] = -1.0;
                slack += 1;
            }
            Relation::Eq => {}
        }
        row[width] = c.rhs;
        if c.rhs < 0.0 {
            signs[i] = -1.0;
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        row[art0 + i] = 1.0;
    }
    let mut t = Tableau { m, width, cells, basis: (art0..width).collect(), barred: vec![false; width] };

    let mut iterations = 0;
    let mut phase1 = vec![0.0; width];
    for v in &mut phase1[art0..] {
        *v = 1.0;
    }
    t.set_costs(&phase1);
    t.optimize(opts, &mut iterations)?;
    let infeasibility = -t.rhs(m);
    if infeasibility > opts.feasibility_tol {
        let certificate = (0..m).map(|i| signs[i] * (1.0 - t.at(m, art0 + i))).collect();
        return Ok(LpResult {
            status: LpStatus::Infeasible,
            objective: infeasibility,
            primal: vec![],
            certificate,
            iterations,
        });
    }

    // drive zero-valued artificials out of the basis
    for r in 0..m {
        if t.basis[r] < art0 {
            continue;
        }
        let best = (0..art0)
            .map(|j| (j, t.at(r, j).abs()))
            .filter(|&(_, a)| a > opts.pivot_tol)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((j, _)) = best {
            t.pivot(r, j);
        }
    }
    for b in &mut t.barred[art0..] {
        *b = true;
    }

    let mut phase2 = vec![0.0; width];
    for (c, o) in phase2.iter_mut().zip(&lp.objective) {
        *c = -o;
    }
    t.set_costs(&phase2);
    if let Some(col) = t.optimize(opts, &mut iterations)? {
        let mut ray = vec![0.0; n];
        if col < n {
            ray[col] = 1.0;
        }
        for i in 0..m {
            if t.basis[i] < n {
                ray[t.basis[i]] = -t.at(i, col);
            }
        }
        return Ok(LpResult {
            status: LpStatus::Unbounded,
            objective: f64::INFINITY,
            primal: vec![],
            certificate: ray,
            iterations,
        });
    }

    let mut primal = vec![0.0; n];
    for i in 0..m {
        if t.basis[i] < n {
            primal[t.basis[i]] = t.rhs(i).max(0.0);
        }
    }
    let objective = primal.iter().zip(&lp.objective).map(|(x, c)| x * c).sum();
    let certificate = (0..m).map(|i| signs[i] * t.at(m, art0 + i)).collect();
    Ok(LpResult { status: LpStatus::Optimal, objective, primal, certificate, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SimplexOptions {
        SimplexOptions::default()
    }

    #[test]
    fn single_variable_bound() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add(vec![1.0], Relation::Le, 4.0);
        let r = solve_lp(&lp, &opts()).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 4.0).abs() < 1e-12);
        assert!((r.primal[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn textbook_problem_with_duals() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), value 36
        let mut lp = LinearProgram::new(vec![3.0, 5.0]);
        lp.add(vec![1.0, 0.0], Relation::Le, 4.0)
            .add(vec![0.0, 2.0], Relation::Le, 12.0)
            .add(vec![3.0, 2.0], Relation::Le, 18.0);
        let r = solve_lp(&lp, &opts()).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 36.0).abs() < 1e-10);
        assert!((r.primal[0] - 2.0).abs() < 1e-10 && (r.primal[1] - 6.0).abs() < 1e-10);
        let dual_value: f64 = r.certificate.iter().zip([4.0, 12.0, 18.0]).map(|(y, b)| y * b).sum();
        assert!((dual_value - 36.0).abs() < 1e-10);
    }

    #[test]
    fn equality_and_ge_rows() {
        // max -x - y, x + y = 2, x ≥ 0.5 → value -2
        let mut lp = LinearProgram::new(vec![-1.0, -1.0]);
        lp.add(vec![1.0, 1.0], Relation::Eq, 2.0).add(vec![1.0, 0.0], Relation::Ge, 0.5);
        let r = solve_lp(&lp, &opts()).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective + 2.0).abs() < 1e-12);
        assert!(r.primal[0] >= 0.5 - 1e-12);
    }

    #[test]
    fn infeasible_with_farkas_certificate() {
        // x + y = 1 and x + y = 2
        let mut lp = LinearProgram::new(vec![0.0, 0.0]);
        lp.add(vec![1.0, 1.0], Relation::Eq, 1.0).add(vec![1.0, 1.0], Relation::Eq, 2.0);
        let r = solve_lp(&lp, &opts()).unwrap();
        assert_eq!(r.status, LpStatus::Infeasible);
        let y = &r.certificate;
        for j in 0..2 {
            assert!(y[0] * 1.0 + y[1] * 1.0 <= 1e-12, "column {j}");
        }
        assert!(y[0] * 1.0 + y[1] * 2.0 > 0.0);
    }

    #[test]
    fn negative_rhs_rows_are_flipped() {
        // -x ≤ -3 means x ≥ 3; max -x → -3
        let mut lp = LinearProgram::new(vec![-1.0]);
        lp.add(vec![-1.0], Relation::Le, -3.0);
        let r = solve_lp(&lp, &opts()).unwrap();
        assert!((r.objective + 3.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_problem() {
        let mut lp = LinearProgram::new(vec![1.0, 0.0]);
        lp.add(vec![1.0, -1.0], Relation::Le, 1.0);
        let r = solve_lp(&lp, &opts()).unwrap();
        assert_eq!(r.status, LpStatus::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(vec![1.0, 2.0]);
        lp.add(vec![1.0, 1.0], Relation::Eq, 1.0)
            .add(vec![2.0, 2.0], Relation::Eq, 2.0)
            .add(vec![1.0, 1.0], Relation::Eq, 1.0);
        let r = solve_lp(&lp, &opts()).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // a classic cycling example under Dantzig's rule
        let mut lp = LinearProgram::new(vec![0.75, -150.0, 0.02, -6.0]);
        lp.add(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0)
            .add(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0)
            .add(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
        let r = solve_lp(&lp, &opts()).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 0.05).abs() < 1e-10);
    }

    #[test]
    fn deterministic_output() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0, 1.0]);
        lp.add(vec![1.0, 1.0, 0.0], Relation::Le, 1.0).add(vec![0.0, 1.0, 1.0], Relation::Le, 1.0);
        let a = solve_lp(&lp, &opts()).unwrap();
        let b = solve_lp(&lp, &opts()).unwrap();
        assert_eq!(a.primal, b.primal);
        assert_eq!(a.certificate, b.certificate);
    }

    #[test]
    fn rejects_shape_mismatch() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.add(vec![1.0], Relation::Le, 1.0);
        assert!(matches!(solve_lp(&lp, &opts()), Err(Error::DimensionMismatch(_))));
    }
}
