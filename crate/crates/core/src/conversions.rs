//! Constructive conversions between strategy types.
//!
//! * [`dense_coding_lift`] turns a classical `d²`-symbol assisted strategy
//!   into a `d`-dimensional quantum-message strategy using one extra
//!   maximally entangled pair.
//! * [`teleportation_lift`] goes the other way by teleporting the message.
//! * [`mother_povm_classicalize`] and [`lhs_to_classical`] build explicit
//!   shared-randomness models.
//!
//! Subsystem order is fixed: shared states are `(A, A′, B, B′)` with Alice
//! holding `A A′`, and Bob's lifted measurements act on
//! `(transmitted, B, B′)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    bell_state, permute_subsystems, shift_phase_unitary, sqrt_psd, tensor_product, ComplexMatrix, DensityMatrix,
    KrausChannel, Povm, C64, TOL_PSD,
};
use crate::lp::SimplexOptions;
use crate::polytope::membership_generated;
use crate::scenario::{
    behavior_of_classical_model, Behavior, ClassicalModel, EAClassicalStrategy, EAQuantumStrategy, Scenario,
};

/// Largest operator dimension a lift may produce.
pub const LIFT_DIM_CAP: usize = 64;

/// `ρ ⊗ |φ00⟩⟨φ00|` reordered from `(A, B, A′, B′)` to `(A, A′, B, B′)`.
pub fn append_bell_pair(rho: &DensityMatrix, assist_dim: usize, d: usize) -> Result<DensityMatrix> {
    let phi = DensityMatrix::from_pure(&bell_state(d, 0, 0)?)?;
    let joint = tensor_product(rho.matrix(), phi.matrix());
    let reordered = permute_subsystems(&joint, &[assist_dim, assist_dim, d, d], &[0, 2, 1, 3])?;
    DensityMatrix::new(reordered)
}

fn integer_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

fn check_cap(dim: usize) -> Result<()> {
    if dim > LIFT_DIM_CAP {
        return Err(Error::CapExceeded { requested: dim as u128, cap: LIFT_DIM_CAP as u128 });
    }
    Ok(())
}

fn basis_bra(dim: usize, i: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(1, dim, |_, c| if c == i { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

/// Lifts a classical-message strategy with `d²` symbols and assistance `D`
/// to a quantum-message strategy with `d` dimensions and assistance `D·d`.
/// Message `a` is read as the pair `(k, l) = (a / d, a % d)`.
pub fn dense_coding_lift(
    s: &Scenario,
    assist_dim: usize,
    strat: &EAClassicalStrategy,
) -> Result<(Scenario, EAQuantumStrategy)> {
    strat.validate(s, assist_dim)?;
    let d = integer_sqrt(s.d)
        .ok_or_else(|| Error::InvalidScenario(format!("message dimension {} is not a square", s.d)))?;
    check_cap(d * d * assist_dim)?;
    let lifted = s.with_message_dim(d);
    let shared_state = append_bell_pair(&strat.shared_state, assist_dim, d)?;

    let unitaries: Vec<ComplexMatrix> =
        (0..d * d).map(|a| shift_phase_unitary(d, a / d, a % d)).collect::<Result<_>>()?;
    let channels = strat
        .alice_povms
        .iter()
        .map(|povm| {
            let mut ops = Vec::with_capacity(d * d * assist_dim);
            for (a, effect) in povm.effects().iter().enumerate() {
                let root = sqrt_psd(effect)?;
                for i in 0..assist_dim {
                    let branch = basis_bra(assist_dim, i).matmul(&root);
                    ops.push(tensor_product(&branch, &unitaries[a]));
                }
            }
            KrausChannel::new(ops)
        })
        .collect::<Result<Vec<_>>>()?;

    let bell: Vec<ComplexMatrix> = (0..d * d)
        .map(|a| bell_state(d, a / d, a % d).map(|v| ComplexMatrix::ket_bra(&v)))
        .collect::<Result<_>>()?;
    let measurements = (0..s.n_y)
        .map(|y| {
            let effects = (0..s.n_b)
                .map(|b| {
                    // assembled on (T, B′, B), then reordered to (T, B, B′)
                    let mut acc = ComplexMatrix::zeros(d * d * assist_dim, d * d * assist_dim);
                    for (a, proj) in bell.iter().enumerate() {
                        acc.add_scaled(&tensor_product(proj, strat.bob_povms[a][y].effect(b)), 1.0);
                    }
                    permute_subsystems(&acc, &[d, d, assist_dim], &[0, 2, 1])
                })
                .collect::<Result<Vec<_>>>()?;
            Povm::new(effects)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok((lifted, EAQuantumStrategy { shared_state, channels, measurements }))
}

/// Lifts a quantum-message strategy with `d` dimensions and assistance `D`
/// to a classical-message strategy with `d²` symbols and assistance `D·d`.
/// Alice applies her channel, measures the transmitted system together with
/// `A′` in the Bell basis and announces `(n, m)` as symbol `n·d + m`.
pub fn teleportation_lift(
    s: &Scenario,
    assist_dim: usize,
    strat: &EAQuantumStrategy,
) -> Result<(Scenario, EAClassicalStrategy)> {
    strat.validate(s, assist_dim)?;
    let d = s.d;
    check_cap(d * d * assist_dim)?;
    let lifted = s.with_message_dim(d * d);
    let shared_state = append_bell_pair(&strat.shared_state, assist_dim, d)?;
    let id_d = ComplexMatrix::identity(d);

    let bell: Vec<ComplexMatrix> = (0..d * d)
        .map(|a| bell_state(d, a / d, a % d).map(|v| ComplexMatrix::ket_bra(&v)))
        .collect::<Result<_>>()?;
    let alice_povms = strat
        .channels
        .iter()
        .map(|ch| {
            let lifted_ops: Vec<ComplexMatrix> = ch.kraus_ops().iter().map(|k| tensor_product(k, &id_d)).collect();
            let effects = bell
                .iter()
                .map(|proj| {
                    let mut acc = ComplexMatrix::zeros(assist_dim * d, assist_dim * d);
                    for k in &lifted_ops {
                        acc.add_scaled(&k.adjoint().matmul(proj).matmul(k), 1.0);
                    }
                    acc.hermitian_part()
                })
                .collect();
            Povm::new(effects)
        })
        .collect::<Result<Vec<_>>>()?;

    // Bob's `B′` holds `U_nm^† ψ`; undoing the rotation before measuring.
    let id_b = ComplexMatrix::identity(assist_dim);
    let corrections: Vec<ComplexMatrix> = (0..d * d)
        .map(|a| shift_phase_unitary(d, a / d, a % d).map(|u| tensor_product(&id_b, &u)))
        .collect::<Result<_>>()?;
    let swapped: Vec<Vec<ComplexMatrix>> = strat
        .measurements
        .iter()
        .map(|m| {
            m.effects().iter().map(|e| permute_subsystems(e, &[d, assist_dim], &[1, 0])).collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let bob_povms = corrections
        .iter()
        .map(|u| {
            swapped
                .iter()
                .map(|effects| {
                    Povm::new(effects.iter().map(|e| u.adjoint().matmul(e).matmul(u).hermitian_part()).collect())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    Ok((lifted, EAClassicalStrategy { shared_state, alice_povms, bob_povms }))
}

/// A joint measurement whose outcome is a tuple `(z_1, …, z_m)`.
///
/// Effects are indexed in mixed radix with `z_1` most significant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MotherPovm {
    pub outcome_shape: Vec<usize>,
    pub povm: Povm,
}

impl MotherPovm {
    pub fn new(outcome_shape: Vec<usize>, povm: Povm) -> Result<Self> {
        let total: usize = outcome_shape.iter().product();
        if outcome_shape.is_empty() || total != povm.outcomes() {
            return Err(Error::DimensionMismatch(format!(
                "outcome shape {outcome_shape:?} for a POVM with {} outcomes",
                povm.outcomes()
            )));
        }
        Ok(Self { outcome_shape, povm })
    }

    pub fn dim(&self) -> usize {
        self.povm.dim()
    }

    /// Digits `(z_1, …, z_m)` of a joint outcome.
    pub fn digits(&self, mut z: usize) -> Vec<usize> {
        let mut out = vec![0; self.outcome_shape.len()];
        for (slot, &radix) in out.iter_mut().zip(&self.outcome_shape).rev() {
            *slot = z % radix;
            z /= radix;
        }
        out
    }

    /// Coarse-grained POVM for slot `y`.
    pub fn marginal(&self, y: usize) -> Result<Povm> {
        let dim = self.dim();
        let mut effects = vec![ComplexMatrix::zeros(dim, dim); self.outcome_shape[y]];
        for (z, e) in self.povm.effects().iter().enumerate() {
            effects[self.digits(z)[y]].add_scaled(e, 1.0);
        }
        Povm::new(effects)
    }

    /// Product of POVMs, an explicit joint measurement for commuting families.
    pub fn product(povms: &[Povm]) -> Result<Self> {
        let first = povms.first().ok_or_else(|| Error::DimensionMismatch("no POVMs".into()))?;
        let dim = first.dim();
        let shape: Vec<usize> = povms.iter().map(Povm::outcomes).collect();
        let total: usize = shape.iter().product();
        let mut effects = Vec::with_capacity(total);
        let mother = Self { outcome_shape: shape, povm: Povm::trivial(dim, &vec![1.0 / total as f64; total])? };
        for z in 0..total {
            let mut e = ComplexMatrix::identity(dim);
            for (p, digit) in povms.iter().zip(mother.digits(z)) {
                e = e.matmul(p.effect(digit));
            }
            effects.push(e.hermitian_part());
        }
        Self::new(mother.outcome_shape, Povm::new(effects)?)
    }
}

/// Shared-randomness model for the behavior `Tr(ρ_x M_{b|y})` when every
/// `M_y` is a marginal of `mother`.
///
/// The single-measurement behavior of the mother is decomposed into
/// deterministic strategies by linear programming; each decoder is then read
/// slot-wise.
pub fn mother_povm_classicalize(states: &[DensityMatrix], mother: &MotherPovm, s: &Scenario) -> Result<ClassicalModel> {
    if states.len() != s.n_x {
        return Err(Error::DimensionMismatch(format!("{} states for {} inputs", states.len(), s.n_x)));
    }
    if mother.outcome_shape.len() != s.n_y || mother.outcome_shape.iter().any(|&k| k != s.n_b) {
        return Err(Error::DimensionMismatch(format!(
            "mother outcome shape {:?} for scenario {s}",
            mother.outcome_shape
        )));
    }
    if states.iter().any(|r| r.dim() != mother.dim()) {
        return Err(Error::DimensionMismatch("state and measurement dimensions differ".into()));
    }
    let n_joint = mother.povm.outcomes();
    let grand = Scenario::new(s.d, s.n_x, 1, n_joint)?;
    let q = Behavior::from_fn(grand, |z, x, _| states[x].matrix().trace_product_re(mother.povm.effect(z)))?;
    let m = membership_generated(&q, &SimplexOptions::default(), 100_000)?;
    if !m.feasible {
        return Err(Error::Infeasible(format!(
            "joint behavior is outside the classical polytope (gap {:e})",
            m.separation_gap()
        )));
    }
    let mut model = ClassicalModel { weights: vec![], alice_tables: vec![], bob_tables: vec![] };
    for (w, det) in &m.support {
        model.weights.push(*w);
        model.alice_tables.push(
            det.encoder.iter().map(|&a| (0..s.d).map(|k| if k == a { 1.0 } else { 0.0 }).collect()).collect(),
        );
        model.bob_tables.push(
            (0..s.d)
                .map(|a| {
                    let z = mother.digits(det.decoders[0][a]);
                    (0..s.n_y).map(|y| (0..s.n_b).map(|b| if b == z[y] { 1.0 } else { 0.0 }).collect()).collect()
                })
                .collect(),
        );
    }
    let total: f64 = model.weights.iter().sum();
    for w in &mut model.weights {
        *w /= total;
    }
    model.validate(s)?;
    Ok(model)
}

/// `Tr(ρ_x M_{b|y})` for preparations and per-`y` POVMs.
pub fn prepare_measure_behavior(states: &[DensityMatrix], povms: &[Povm], s: &Scenario) -> Result<Behavior> {
    Behavior::from_fn(*s, |b, x, y| states[x].matrix().trace_product_re(povms[y].effect(b)))
}

/// Local hidden state model `ϱ_{a|x} = Σ_λ p(λ) p(a|x,λ) σ_λ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LhsModel {
    pub hidden_weights: Vec<f64>,
    /// `response[λ][x][a]`.
    pub response: Vec<Vec<Vec<f64>>>,
    pub local_states: Vec<DensityMatrix>,
}

impl LhsModel {
    pub fn validate(&self) -> Result<()> {
        let n = self.hidden_weights.len();
        if n == 0 || self.response.len() != n || self.local_states.len() != n {
            return Err(Error::DimensionMismatch("LHS model tables of different lengths".into()));
        }
        let total: f64 = self.hidden_weights.iter().sum();
        if (total - 1.0).abs() > TOL_PSD || self.hidden_weights.iter().any(|&w| w < -TOL_PSD) {
            return Err(Error::InvalidDistribution(format!("hidden weights sum to {total}")));
        }
        let n_x = self.response[0].len();
        for table in &self.response {
            if table.len() != n_x {
                return Err(Error::DimensionMismatch("response tables of different shapes".into()));
            }
            for row in table {
                let t: f64 = row.iter().sum();
                if (t - 1.0).abs() > TOL_PSD || row.iter().any(|&v| v < -TOL_PSD) {
                    return Err(Error::InvalidDistribution(format!("response row sums to {t}")));
                }
            }
        }
        Ok(())
    }

    /// Reconstructed elements `[x][a]`.
    pub fn assemblage_elements(&self) -> Vec<Vec<ComplexMatrix>> {
        let n_x = self.response[0].len();
        let n_a = self.response[0][0].len();
        let dim = self.local_states[0].dim();
        (0..n_x)
            .map(|x| {
                (0..n_a)
                    .map(|a| {
                        let mut acc = ComplexMatrix::zeros(dim, dim);
                        for l in 0..self.hidden_weights.len() {
                            acc.add_scaled(
                                self.local_states[l].matrix(),
                                self.hidden_weights[l] * self.response[l][x][a],
                            );
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }
}

/// Classical model with the LHS weights and responses, answering
/// `p(b|a,y,λ) = Tr(σ_λ N_{b|a,y})`.
pub fn lhs_to_classical(model: &LhsModel, bob_povms: &[Vec<Povm>]) -> Result<ClassicalModel> {
    model.validate()?;
    let n_a = model.response[0][0].len();
    if bob_povms.len() != n_a {
        return Err(Error::DimensionMismatch(format!("{} Bob rows for {n_a} outcomes", bob_povms.len())));
    }
    let bob_tables = model
        .local_states
        .iter()
        .map(|sigma| {
            bob_povms
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|povm| {
                            if povm.dim() != sigma.dim() {
                                return Err(Error::DimensionMismatch("Bob POVM and local state dims differ".into()));
                            }
                            Ok(povm.effects().iter().map(|e| sigma.matrix().trace_product_re(e).max(0.0)).collect())
                        })
                        .collect::<Result<Vec<Vec<f64>>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassicalModel {
        weights: model.hidden_weights.clone(),
        alice_tables: model.response.clone(),
        bob_tables,
    })
}

/// Evaluates a [`ClassicalModel`] and reports its deviation from `target`.
pub fn model_deviation(s: &Scenario, model: &ClassicalModel, target: &Behavior) -> Result<f64> {
    Ok(behavior_of_classical_model(s, model)?.max_abs_diff(target))
}
