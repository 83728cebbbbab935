//! See-saw maximization of a linear functional over entanglement-assisted
//! classical strategies.
//!
//! Each round alternates exact or monotone improvements of Alice's POVMs,
//! Bob's conditional POVMs and the shared pure state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::games::{evaluate, LinearFunctional};
use crate::linalg::{
    eig_hermitian, reduce_with_effect_b, tensor_product, ComplexMatrix, DensityMatrix, Povm,
};
use crate::polytope::{best_deterministic_response, VertexSet};
use crate::random::{normalize_effects, random_povm, random_pure_vector};
use crate::scenario::{behavior_of_ea_classical, EAClassicalStrategy, Scenario};

const MONOTONE_TOL: f64 = 1e-10;
const FIXED_POINT_ITERS: usize = 500;
const FIXED_POINT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct SeesawConfig {
    pub assist_dim: usize,
    pub restarts: usize,
    pub max_rounds: usize,
    pub convergence_eps: f64,
    pub seed: u64,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        Self { assist_dim: 2, restarts: 50, max_rounds: 500, convergence_eps: 1e-7, seed: 0 }
    }
}

impl SeesawConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.assist_dim == 0 || self.convergence_eps.is_nan() || self.convergence_eps <= 0.0 {
            return Err(Error::InvalidScenario(format!(
                "see-saw needs restarts >= 1, assistance >= 1 and eps > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Result of one see-saw trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct RunOutcome {
    pub value: f64,
    pub strategy: EAClassicalStrategy,
    pub rounds: usize,
    /// Objective after every individual update step.
    pub history: Vec<f64>,
    /// Steps that decreased the objective by more than `1e-10`.
    pub monotonicity_violations: usize,
    /// Largest POVM completeness error seen after any step.
    pub max_completeness_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeesawReport {
    pub best_value: f64,
    pub best_restart: usize,
    pub best_strategy: EAClassicalStrategy,
    pub per_restart_values: Vec<f64>,
    pub rounds_used: Vec<usize>,
    pub histories: Vec<Vec<f64>>,
    pub monotonicity_violations: usize,
    pub max_completeness_error: f64,
}

fn objective(f: &LinearFunctional, d_assist: usize, strat: &EAClassicalStrategy) -> Result<f64> {
    evaluate(f, &behavior_of_ea_classical(&f.scenario, d_assist, strat)?)
}

/// `Σ_a Tr(M_a A_a)`.
pub fn povm_value(ops: &[ComplexMatrix], povm: &Povm) -> f64 {
    ops.iter().zip(povm.effects()).map(|(a, m)| a.trace_product_re(m)).sum()
}

/// `Σ_{b,y} c(b,x,y) N_{b|a,y}` for every message `a`.
fn bob_weighted(f: &LinearFunctional, strat: &EAClassicalStrategy, x: usize) -> Vec<ComplexMatrix> {
    let s = f.scenario;
    let dim = strat.assist_dim();
    (0..s.d)
        .map(|a| {
            let mut acc = ComplexMatrix::zeros(dim, dim);
            for y in 0..s.n_y {
                for b in 0..s.n_b {
                    let c = f.get(b, x, y);
                    if c != 0.0 {
                        acc.add_scaled(strat.bob_povms[a][y].effect(b), c);
                    }
                }
            }
            acc
        })
        .collect()
}

/// Operators `A_a` with `Σ_a Tr(M_{a|x} A_a)` equal to the `x` part of the objective.
pub fn reduced_operators_alice(f: &LinearFunctional, strat: &EAClassicalStrategy, x: usize) -> Vec<ComplexMatrix> {
    let dim = strat.assist_dim();
    bob_weighted(f, strat, x)
        .iter()
        .map(|op| reduce_with_effect_b(strat.shared_state.matrix(), dim, op).hermitian_part())
        .collect()
}

/// Operators `B_b = Σ_x c(b,x,y) ϱ_{a|x}` for Bob's POVM at `(a, y)`.
pub fn reduced_operators_bob(
    f: &LinearFunctional,
    cond: &[Vec<ComplexMatrix>],
    a: usize,
    y: usize,
) -> Vec<ComplexMatrix> {
    let s = f.scenario;
    let dim = cond[0][0].rows();
    (0..s.n_b)
        .map(|b| {
            let mut acc = ComplexMatrix::zeros(dim, dim);
            for (x, row) in cond.iter().enumerate() {
                let c = f.get(b, x, y);
                if c != 0.0 {
                    acc.add_scaled(&row[a], c);
                }
            }
            acc.hermitian_part()
        })
        .collect()
}

fn fixed_point(ops: &[ComplexMatrix], start: &Povm) -> Option<Povm> {
    let n = ops.len();
    let dim = ops[0].rows();
    let mut shift = f64::INFINITY;
    for a in ops {
        shift = shift.min(*eig_hermitian(a).ok()?.values.last()?);
    }
    let shifted: Vec<ComplexMatrix> = ops
        .iter()
        .map(|a| {
            let mut m = a.clone();
            m.add_scaled(&ComplexMatrix::identity(dim), -shift);
            m
        })
        .collect();
    let mut current: Vec<ComplexMatrix> = start
        .effects()
        .iter()
        .map(|m| {
            let mut e = m.scale_real(0.9);
            e.add_scaled(&ComplexMatrix::identity(dim), 0.1 / n as f64);
            e
        })
        .collect();
    let mut best: Option<(f64, Povm)> = None;
    for _ in 0..FIXED_POINT_ITERS {
        let branches: Vec<ComplexMatrix> =
            shifted.iter().zip(&current).map(|(a, m)| a.matmul(m).matmul(a).hermitian_part()).collect();
        let next = normalize_effects(branches).ok()?;
        let value = povm_value(ops, &next);
        let step = next.effects().iter().zip(&current).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max);
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, next.clone()));
        }
        current = next.effects().to_vec();
        if step < FIXED_POINT_TOL {
            break;
        }
    }
    best.map(|(_, p)| p)
}

/// Improves a POVM for the linear objective `Σ_a Tr(M_a A_a)`.
///
/// Two outcomes are solved exactly by the positive eigenprojector of
/// `A_0 − A_1`. More outcomes use a fixed-point iteration started from
/// `start`; the returned POVM is never worse than `start` or any
/// single-outcome POVM.
pub fn optimal_povm_for_operators(ops: &[ComplexMatrix], start: Option<&Povm>) -> Result<Povm> {
    let n = ops.len();
    if n == 0 {
        return Err(Error::DimensionMismatch("no operators".into()));
    }
    let dim = ops[0].rows();
    if ops.iter().any(|a| a.rows() != dim || !a.is_square()) {
        return Err(Error::DimensionMismatch("operators of different shapes".into()));
    }
    if n == 1 {
        return Povm::new(vec![ComplexMatrix::identity(dim)]);
    }
    if n == 2 {
        let diff = &ops[0] - &ops[1];
        let proj = eig_hermitian(&diff)?.map_values(|l| if l > 0.0 { 1.0 } else { 0.0 });
        let rest = &ComplexMatrix::identity(dim) - &proj;
        return Povm::new(vec![proj.hermitian_part(), rest.hermitian_part()]);
    }
    let mut candidates: Vec<Povm> = Vec::new();
    let top = (0..n)
        .map(|a| (a, ops[a].trace().re))
        .max_by(|p, q| p.1.total_cmp(&q.1))
        .map_or(0, |(a, _)| a);
    candidates.push(Povm::deterministic(dim, n, top)?);
    if let Some(st) = start {
        if st.outcomes() != n || st.dim() != dim {
            return Err(Error::DimensionMismatch("starting POVM has the wrong shape".into()));
        }
        candidates.push(st.clone());
    }
    let seed = candidates.last().expect("non-empty").clone();
    let uniform = Povm::trivial(dim, &vec![1.0 / n as f64; n])?;
    for init in [&seed, &uniform] {
        if let Some(p) = fixed_point(ops, init) {
            candidates.push(p);
        }
    }
    let mut best = candidates.swap_remove(0);
    let mut best_value = povm_value(ops, &best);
    for c in candidates {
        let v = povm_value(ops, &c);
        if v > best_value {
            best = c;
            best_value = v;
        }
    }
    Ok(best)
}

/// `W = Σ_{x,a} M_{a|x} ⊗ (Σ_{b,y} c(b,x,y) N_{b|a,y})`, so the objective is `Tr(ρ W)`.
pub fn state_operator(f: &LinearFunctional, strat: &EAClassicalStrategy) -> ComplexMatrix {
    let dim = strat.assist_dim();
    let mut w = ComplexMatrix::zeros(dim * dim, dim * dim);
    for x in 0..f.scenario.n_x {
        for (a, bob) in bob_weighted(f, strat, x).iter().enumerate() {
            w.add_scaled(&tensor_product(strat.alice_povms[x].effect(a), bob), 1.0);
        }
    }
    w.hermitian_part()
}

/// Top eigenvector of [`state_operator`], returned with `λ_max`.
pub fn optimal_state_step(f: &LinearFunctional, strat: &EAClassicalStrategy) -> Result<(DensityMatrix, f64)> {
    let eig = eig_hermitian(&state_operator(f, strat))?;
    Ok((DensityMatrix::from_pure(&eig.vector(0))?, eig.values[0]))
}

fn max_error(strat: &EAClassicalStrategy) -> f64 {
    strat
        .alice_povms
        .iter()
        .chain(strat.bob_povms.iter().flatten())
        .map(Povm::completeness_error)
        .fold(0.0, f64::max)
}

/// Random pure shared state and random POVMs.
pub fn random_strategy(s: &Scenario, assist_dim: usize, rng: &mut ChaCha8Rng) -> Result<EAClassicalStrategy> {
    let psi = random_pure_vector(assist_dim * assist_dim, rng);
    Ok(EAClassicalStrategy {
        shared_state: DensityMatrix::from_pure(&psi)?,
        alice_povms: (0..s.n_x).map(|_| random_povm(assist_dim, s.d, rng)).collect(),
        bob_povms: (0..s.d).map(|_| (0..s.n_y).map(|_| random_povm(assist_dim, s.n_b, rng)).collect()).collect(),
    })
}

/// Runs see-saw rounds from `start` until a round gains less than `eps`.
pub fn run_from_strategy(
    f: &LinearFunctional,
    start: EAClassicalStrategy,
    max_rounds: usize,
    eps: f64,
) -> Result<RunOutcome> {
    let s = f.scenario;
    let dim = start.assist_dim();
    start.validate(&s, dim)?;
    let mut strat = start;
    let mut value = objective(f, dim, &strat)?;
    let mut history = vec![value];
    let mut violations = 0;
    let mut max_completeness_error = max_error(&strat);
    let mut record = |strat: &EAClassicalStrategy, value: &mut f64, history: &mut Vec<f64>| -> Result<()> {
        let v = objective(f, dim, strat)?;
        if v < *value - MONOTONE_TOL {
            violations += 1;
        }
        max_completeness_error = max_completeness_error.max(max_error(strat));
        *value = v;
        history.push(v);
        Ok(())
    };
    let mut rounds = 0;
    while rounds < max_rounds {
        let round_start = value;
        for x in 0..s.n_x {
            let ops = reduced_operators_alice(f, &strat, x);
            strat.alice_povms[x] = optimal_povm_for_operators(&ops, Some(&strat.alice_povms[x]))?;
        }
        record(&strat, &mut value, &mut history)?;
        let cond = strat.conditional_states();
        for a in 0..s.d {
            for y in 0..s.n_y {
                let ops = reduced_operators_bob(f, &cond, a, y);
                strat.bob_povms[a][y] = optimal_povm_for_operators(&ops, Some(&strat.bob_povms[a][y]))?;
            }
        }
        record(&strat, &mut value, &mut history)?;
        let (state, _) = optimal_state_step(f, &strat)?;
        strat.shared_state = state;
        record(&strat, &mut value, &mut history)?;
        rounds += 1;
        if value - round_start < eps {
            break;
        }
    }
    Ok(RunOutcome {
        value,
        strategy: strat,
        rounds,
        history,
        monotonicity_violations: violations,
        max_completeness_error,
    })
}

/// Multi-start see-saw; restart `r` draws its start from stream `r` of a
/// ChaCha8 generator seeded with `cfg.seed`.
pub fn seesaw_maximize(f: &LinearFunctional, cfg: &SeesawConfig) -> Result<SeesawReport> {
    cfg.validate()?;
    let s = f.scenario;
    let runs: Vec<RunOutcome> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r as u64);
            let start = random_strategy(&s, cfg.assist_dim, &mut rng)?;
            run_from_strategy(f, start, cfg.max_rounds, cfg.convergence_eps)
        })
        .collect::<Result<_>>()?;
    let mut best_restart = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.value > runs[best_restart].value {
            best_restart = i;
        }
    }
    Ok(SeesawReport {
        best_value: runs[best_restart].value,
        best_restart,
        best_strategy: runs[best_restart].strategy.clone(),
        per_restart_values: runs.iter().map(|r| r.value).collect(),
        rounds_used: runs.iter().map(|r| r.rounds).collect(),
        histories: runs.iter().map(|r| r.history.clone()).collect(),
        monotonicity_violations: runs.iter().map(|r| r.monotonicity_violations).sum(),
        max_completeness_error: runs.iter().map(|r| r.max_completeness_error).fold(0.0, f64::max),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub value: f64,
    pub classical_max: f64,
    pub classical_gap: f64,
}

/// Recomputes the best value from the strategy after `polish_rounds` extra
/// rounds and compares it with the classical maximum over `vs`.
pub fn polish_and_certify(
    report: &SeesawReport,
    f: &LinearFunctional,
    vs: &VertexSet,
    polish_rounds: usize,
) -> Result<Certificate> {
    let polished = run_from_strategy(f, report.best_strategy.clone(), polish_rounds, 1e-13)?;
    let (classical_max, _) = crate::polytope::max_functional_classical(vs, f)?;
    Ok(Certificate {
        value: polished.value,
        classical_max,
        classical_gap: polished.value - classical_max,
    })
}

/// Classical maximum of `f` without a vertex list.
pub fn classical_maximum(f: &LinearFunctional) -> f64 {
    best_deterministic_response(&f.scenario, &f.coeffs).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{f2_functional, fd_optimal_classical_strategy};
    use crate::random::{random_density, random_hermitian};
    use rand::Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn zero_functional_gives_zero_operators() {
        let f = LinearFunctional::zero(f2_functional().scenario);
        let strat = random_strategy(&f.scenario, 2, &mut rng(1)).unwrap();
        for x in 0..3 {
            for a in reduced_operators_alice(&f, &strat, x) {
                assert!(a.max_abs() == 0.0);
            }
        }
    }

    #[test]
    fn alice_operators_reproduce_objective() {
        let f = f2_functional();
        let mut r = rng(2);
        let mut strat = random_strategy(&f.scenario, 2, &mut r).unwrap();
        strat.shared_state = random_density(4, 3, &mut r);
        let total: f64 = (0..3)
            .map(|x| povm_value(&reduced_operators_alice(&f, &strat, x), &strat.alice_povms[x]))
            .sum();
        assert!((total - objective(&f, 2, &strat).unwrap()).abs() < 1e-10);
        for x in 0..3 {
            for a in reduced_operators_alice(&f, &strat, x) {
                assert!(a.hermiticity_error() < 1e-10);
            }
        }
    }

    #[test]
    fn bob_operators_reproduce_objective() {
        let f = f2_functional();
        let strat = random_strategy(&f.scenario, 2, &mut rng(3)).unwrap();
        let cond = strat.conditional_states();
        let total: f64 = (0..2).map(|a| povm_value(&reduced_operators_bob(&f, &cond, a, 0), &strat.bob_povms[a][0])).sum();
        assert!((total - objective(&f, 2, &strat).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn product_state_factorizes_alice_operators() {
        let f = f2_functional();
        let mut r = rng(4);
        let mut strat = random_strategy(&f.scenario, 2, &mut r).unwrap();
        let ra = random_density(2, 2, &mut r);
        let rb = random_density(2, 2, &mut r);
        strat.shared_state = ra.tensor(&rb);
        for x in 0..3 {
            let bob = bob_weighted(&f, &strat, x);
            for (a, op) in reduced_operators_alice(&f, &strat, x).iter().enumerate() {
                let scalar = rb.matrix().trace_product_re(&bob[a]);
                assert!(op.max_abs_diff(&ra.matrix().scale_real(scalar)) < 1e-12);
            }
        }
    }

    #[test]
    fn two_outcome_helstrom() {
        // A_0 − A_1 = diag(1, −1)
        let ops = [ComplexMatrix::from_real_diag(&[1.0, 0.0]), ComplexMatrix::from_real_diag(&[0.0, 1.0])];
        let m = optimal_povm_for_operators(&ops, None).unwrap();
        assert!(m.effect(0).max_abs_diff(&ComplexMatrix::from_real_diag(&[1.0, 0.0])) < 1e-12);
        assert!((povm_value(&ops, &m) - (ops[1].trace().re + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_operators() {
        let a = random_hermitian(3, &mut rng(5));
        let ops = vec![a.clone(), a.clone(), a.clone()];
        let m = optimal_povm_for_operators(&ops, None).unwrap();
        assert!((povm_value(&ops, &m) - a.trace().re).abs() < 1e-10);
    }

    #[test]
    fn multi_outcome_beats_random_sampling() {
        let mut r = rng(6);
        let ops: Vec<ComplexMatrix> = (0..3).map(|_| random_hermitian(2, &mut r)).collect();
        let m = optimal_povm_for_operators(&ops, None).unwrap();
        assert!(m.completeness_error() < 1e-9);
        let value = povm_value(&ops, &m);
        let sampled = (0..10_000)
            .map(|_| {
                let k = r.random_range(1..=3);
                povm_value(&ops, &random_povm_rank(2, 3, k, &mut r))
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(value >= sampled - 1e-9, "{value} < {sampled}");
        // Y = λ·1 with λ the largest eigenvalue of any A_a is dual feasible
        let upper = 2.0
            * ops.iter().map(|a| eig_hermitian(a).unwrap().values[0]).fold(f64::NEG_INFINITY, f64::max);
        assert!(value <= upper + 1e-9);
    }

    fn random_povm_rank(dim: usize, n: usize, rank: usize, r: &mut ChaCha8Rng) -> Povm {
        let raw = (0..n)
            .map(|_| {
                let g = crate::random::gaussian_matrix(dim, rank, r);
                let mut e = g.matmul(&g.adjoint());
                e.add_scaled(&ComplexMatrix::identity(dim), 1e-9);
                e
            })
            .collect();
        crate::random::normalize_effects(raw).unwrap()
    }

    #[test]
    fn start_is_never_worsened() {
        let mut r = rng(7);
        for _ in 0..20 {
            let ops: Vec<ComplexMatrix> = (0..4).map(|_| random_hermitian(2, &mut r)).collect();
            let start = random_povm(2, 4, &mut r);
            let m = optimal_povm_for_operators(&ops, Some(&start)).unwrap();
            assert!(povm_value(&ops, &m) >= povm_value(&ops, &start) - 1e-12);
        }
    }

    #[test]
    fn state_step_value_is_top_eigenvalue() {
        let f = f2_functional();
        let mut r = rng(8);
        let strat = random_strategy(&f.scenario, 2, &mut r).unwrap();
        let w = state_operator(&f, &strat);
        let (rho, lmax) = optimal_state_step(&f, &strat).unwrap();
        assert!((rho.matrix().trace_product_re(&w) - lmax).abs() < 1e-10);
        let mut next = strat.clone();
        next.shared_state = rho;
        assert!((objective(&f, 2, &next).unwrap() - lmax).abs() < 1e-10);
        for _ in 0..1000 {
            let psi = random_pure_vector(4, &mut r);
            let q = DensityMatrix::from_pure(&psi).unwrap();
            assert!(q.matrix().trace_product_re(&w) <= lmax + 1e-10);
        }
    }

    #[test]
    fn identity_state_operator_gives_unit_value() {
        // single input, constant functional 1 on every outcome: W = 1
        let s = Scenario::new(2, 1, 1, 2).unwrap();
        let f = LinearFunctional::new(s, vec![1.0, 1.0]).unwrap();
        let strat = random_strategy(&s, 2, &mut rng(9)).unwrap();
        assert!(state_operator(&f, &strat).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
        let (_, v) = optimal_state_step(&f, &strat).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn runs_are_monotone_and_complete() {
        let f = f2_functional();
        let cfg = SeesawConfig { restarts: 4, max_rounds: 100, seed: 11, ..Default::default() };
        let rep = seesaw_maximize(&f, &cfg).unwrap();
        assert_eq!(rep.monotonicity_violations, 0);
        assert!(rep.max_completeness_error < 1e-9);
        assert_eq!(rep.best_value, rep.per_restart_values.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        for h in &rep.histories {
            assert!(h.windows(2).all(|w| w[1] >= w[0] - 1e-10));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let f = f2_functional();
        let cfg = SeesawConfig { restarts: 3, max_rounds: 30, seed: 5, ..Default::default() };
        let a = seesaw_maximize(&f, &cfg).unwrap();
        let b = seesaw_maximize(&f, &cfg).unwrap();
        assert_eq!(a.per_restart_values, b.per_restart_values);
    }

    #[test]
    fn no_assistance_stays_classical() {
        let f = f2_functional();
        let cfg = SeesawConfig { assist_dim: 1, restarts: 5, max_rounds: 50, seed: 3, ..Default::default() };
        let rep = seesaw_maximize(&f, &cfg).unwrap();
        assert!(rep.best_value <= 4.0 + 1e-6);
    }

    #[test]
    fn classical_start_with_zero_rounds_has_no_gap() {
        let f = f2_functional();
        let det = fd_optimal_classical_strategy(2).unwrap();
        let start = EAClassicalStrategy::from_deterministic(&f.scenario, 2, &det).unwrap();
        let run = run_from_strategy(&f, start, 0, 1e-7).unwrap();
        assert!((run.value - 4.0).abs() < 1e-12);
        assert!(run.value - classical_maximum(&f) <= 0.0);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let f = f2_functional();
        assert!(seesaw_maximize(&f, &SeesawConfig { restarts: 0, ..Default::default() }).is_err());
        assert!(seesaw_maximize(&f, &SeesawConfig { convergence_eps: 0.0, ..Default::default() }).is_err());
    }
}
