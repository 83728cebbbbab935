//! Assemblages, local hidden state models and the link to classical
//! simulability of assisted strategies.

use serde::Serialize;

use crate::conversions::{lhs_to_classical, LhsModel};
use crate::error::{Error, Result};
use crate::games::{evaluate, LinearFunctional};
use crate::linalg::{
    bell_state, eig_hermitian, paulis, project_psd, reduce_with_effect_a, ComplexMatrix, DensityMatrix, Povm, C64,
};
use crate::polytope::classical_membership;
use crate::scenario::{behavior_of_classical_model, behavior_of_ea_classical, EAClassicalStrategy, Scenario};

const PSD_TOL: f64 = 1e-9;
const NO_SIGNALING_TOL: f64 = 1e-8;

/// Subnormalized conditional states `ϱ_{a|x}` on Bob's side.
#[derive(Clone, Debug, Serialize)]
pub struct Assemblage {
    /// `elements[x][a]`.
    elements: Vec<Vec<ComplexMatrix>>,
}

impl Assemblage {
    pub fn new(elements: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        let n_a = elements.first().map_or(0, Vec::len);
        if n_a == 0 || elements.iter().any(|row| row.len() != n_a) {
            return Err(Error::DimensionMismatch("assemblage rows of different lengths".into()));
        }
        let dim = elements[0][0].rows();
        let mut reduced: Option<ComplexMatrix> = None;
        for row in &elements {
            let mut total = ComplexMatrix::zeros(dim, dim);
            for e in row {
                if e.rows() != dim || !e.is_square() {
                    return Err(Error::DimensionMismatch("assemblage elements of different shapes".into()));
                }
                let herm = e.hermiticity_error();
                if herm > PSD_TOL {
                    return Err(Error::NotHermitian(herm));
                }
                let low = *eig_hermitian(e)?.values.last().expect("non-empty");
                if low < -PSD_TOL {
                    return Err(Error::NotPsd(low));
                }
                total.add_scaled(e, 1.0);
            }
            match &reduced {
                None => reduced = Some(total),
                Some(r) => {
                    let dev = r.max_abs_diff(&total);
                    if dev > NO_SIGNALING_TOL {
                        return Err(Error::InvalidDistribution(format!(
                            "reduced state differs across settings by {dev:e}"
                        )));
                    }
                }
            }
        }
        Ok(Self { elements })
    }

    pub fn n_x(&self) -> usize {
        self.elements.len()
    }

    pub fn n_a(&self) -> usize {
        self.elements[0].len()
    }

    pub fn dim(&self) -> usize {
        self.elements[0][0].rows()
    }

    pub fn element(&self, x: usize, a: usize) -> &ComplexMatrix {
        &self.elements[x][a]
    }

    pub fn elements(&self) -> &[Vec<ComplexMatrix>] {
        &self.elements
    }

    pub fn max_abs_diff(&self, other: &[Vec<ComplexMatrix>]) -> f64 {
        self.elements
            .iter()
            .flatten()
            .zip(other.iter().flatten())
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// `ϱ_{a|x} = Tr_A[ρ (M_{a|x} ⊗ 1)]` with Alice holding the first factor.
pub fn assemblage_from_state(rho: &DensityMatrix, alice_povms: &[Povm]) -> Result<Assemblage> {
    let dim_a = alice_povms.first().ok_or_else(|| Error::DimensionMismatch("no Alice POVMs".into()))?.dim();
    if !rho.dim().is_multiple_of(dim_a) {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} with Alice dimension {dim_a}",
            rho.dim()
        )));
    }
    if alice_povms.iter().any(|m| m.dim() != dim_a) {
        return Err(Error::DimensionMismatch("Alice POVMs of different dimensions".into()));
    }
    Assemblage::new(
        alice_povms
            .iter()
            .map(|m| m.effects().iter().map(|e| reduce_with_effect_a(rho.matrix(), dim_a, e)).collect())
            .collect(),
    )
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LhsSearchConfig {
    pub max_iterations: usize,
    /// Residual that counts as success.
    pub tolerance: f64,
    /// Residual at which iteration stops early.
    pub target: f64,
}

impl Default for LhsSearchConfig {
    fn default() -> Self {
        Self { max_iterations: 100_000, tolerance: 1e-7, target: 1e-12 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LhsSearch {
    pub model: Option<LhsModel>,
    /// Max-abs violation of the assemblage constraints at the last iterate.
    pub residual: f64,
    pub iterations: usize,
}

impl LhsSearch {
    pub fn found(&self) -> bool {
        self.model.is_some()
    }
}

/// Response functions `λ: x ↦ a`, first input least significant.
fn responses(n_x: usize, n_a: usize) -> Vec<Vec<usize>> {
    let total = n_a.pow(n_x as u32);
    (0..total)
        .map(|mut l| {
            (0..n_x)
                .map(|_| {
                    let a = l % n_a;
                    l /= n_a;
                    a
                })
                .collect()
        })
        .collect()
}

/// Searches for PSD `ω_λ` with `Σ_{λ(x)=a} ω_λ = ϱ_{a|x}` by alternating
/// projections onto the affine constraint set and the PSD cone.
///
/// Failure to converge is reported as `model: None`; it is not a proof of
/// steerability.
pub fn lhs_search(asm: &Assemblage, cfg: &LhsSearchConfig) -> Result<LhsSearch> {
    let (n_x, n_a, dim) = (asm.n_x(), asm.n_a(), asm.dim());
    let lambdas = responses(n_x, n_a);
    let n_l = lambdas.len();
    let n_c = n_x * n_a;
    // Gram matrix of the constraint map: G[(x,a),(x',a')] = #{λ: λ(x)=a, λ(x')=a'}
    let gram = ComplexMatrix::from_fn(n_c, n_c, |r, c| {
        let (x, a, x2, a2) = (r / n_a, r % n_a, c / n_a, c % n_a);
        let count = lambdas.iter().filter(|l| l[x] == a && l[x2] == a2).count();
        C64::new(count as f64, 0.0)
    });
    let eig = eig_hermitian(&gram)?;
    let floor = 1e-9 * eig.values[0];
    let pinv = eig.map_values(|v| if v > floor { 1.0 / v } else { 0.0 });

    let constraint_residuals = |omega: &[ComplexMatrix]| -> Vec<ComplexMatrix> {
        (0..n_c)
            .map(|k| {
                let (x, a) = (k / n_a, k % n_a);
                let mut acc = asm.element(x, a).scale_real(-1.0);
                for (l, lam) in lambdas.iter().enumerate() {
                    if lam[x] == a {
                        acc.add_scaled(&omega[l], 1.0);
                    }
                }
                acc
            })
            .collect()
    };
    let max_abs = |ms: &[ComplexMatrix]| ms.iter().map(ComplexMatrix::max_abs).fold(0.0, f64::max);

    let mut omega = vec![ComplexMatrix::zeros(dim, dim); n_l];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        // affine step: ω ← ω − L^T G^+ (L ω − ϱ)
        let res = constraint_residuals(&omega);
        let mut dual = vec![ComplexMatrix::zeros(dim, dim); n_c];
        for (i, slot) in dual.iter_mut().enumerate() {
            for (j, r) in res.iter().enumerate() {
                let w = pinv[(i, j)].re;
                if w != 0.0 {
                    slot.add_scaled(r, w);
                }
            }
        }
        for (l, lam) in lambdas.iter().enumerate() {
            for (x, &a) in lam.iter().enumerate() {
                omega[l].add_scaled(&dual[x * n_a + a], -1.0);
            }
        }
        // PSD step
        for w in &mut omega {
            *w = project_psd(&w.hermitian_part())?;
        }
        iterations += 1;
        residual = max_abs(&constraint_residuals(&omega));
        if residual < cfg.target {
            break;
        }
    }
    if residual >= cfg.tolerance {
        return Ok(LhsSearch { model: None, residual, iterations });
    }
    let mut hidden_weights = Vec::new();
    let mut response = Vec::new();
    let mut local_states = Vec::new();
    for (l, w) in omega.iter().enumerate() {
        let t = w.trace().re;
        if t < 1e-14 {
            continue;
        }
        hidden_weights.push(t);
        response.push(
            lambdas[l].iter().map(|&a| (0..n_a).map(|k| if k == a { 1.0 } else { 0.0 }).collect()).collect(),
        );
        local_states.push(DensityMatrix::nearest(&w.scale_real(1.0 / t))?);
    }
    let total: f64 = hidden_weights.iter().sum();
    for w in &mut hidden_weights {
        *w /= total;
    }
    let model = LhsModel { hidden_weights, response, local_states };
    let residual = asm.max_abs_diff(&model.assemblage_elements());
    if residual >= cfg.tolerance {
        return Ok(LhsSearch { model: None, residual, iterations });
    }
    Ok(LhsSearch { model: Some(model), residual, iterations })
}

/// `|Tr[(ϱ_{0|0} − ϱ_{1|0}) σ_z]| + |Tr[(ϱ_{0|1} − ϱ_{1|1}) σ_x]|`.
///
/// Every assemblage with a local hidden state model satisfies `S ≤ √2`.
pub fn steering_inequality_value(asm: &Assemblage) -> Result<f64> {
    if asm.n_x() != 2 || asm.n_a() != 2 || asm.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "steering inequality needs two dichotomic settings on a qubit, got n_x={} n_a={} dim={}",
            asm.n_x(),
            asm.n_a(),
            asm.dim()
        )));
    }
    let [x, _, z] = paulis();
    let corr = |setting: usize, op: &ComplexMatrix| {
        (&asm.elements[setting][0] - &asm.elements[setting][1]).trace_product_re(op)
    };
    Ok(corr(0, &z).abs() + corr(1, &x).abs())
}

/// `v |ψ−⟩⟨ψ−| + (1 − v) 1/4`.
pub fn werner_state(v: f64) -> Result<DensityMatrix> {
    let singlet = bell_state(2, 1, 1)?;
    let mut m = ComplexMatrix::ket_bra(&singlet).scale_real(v);
    m.add_scaled(&ComplexMatrix::identity(4), (1.0 - v) / 4.0);
    DensityMatrix::new(m)
}

/// Projective qubit measurement of the Pauli operator `op` (`+1` first).
pub fn pauli_measurement(op: &ComplexMatrix) -> Result<Povm> {
    let id = ComplexMatrix::identity(2);
    let plus = (&id + op).scale_real(0.5);
    let minus = (&id - op).scale_real(0.5);
    Povm::new(vec![plus, minus])
}

#[derive(Clone, Debug, Serialize)]
pub struct UnsteerableReport {
    pub skipped: bool,
    pub lhs_residual: f64,
    /// Max-abs deviation between the LHS-derived classical model and the
    /// assisted behavior.
    pub model_deviation: f64,
    pub classical_membership: bool,
    pub membership_residual: f64,
    pub functional_value: Option<f64>,
}

/// Checks that an assisted strategy whose shared state admits an LHS model
/// for Alice's measurements yields a classical behavior.
pub fn ea_behavior_is_classical_when_unsteerable(
    rho: &DensityMatrix,
    alice_povms: &[Povm],
    bob_povms: &[Vec<Povm>],
    s: &Scenario,
    functional: Option<&LinearFunctional>,
) -> Result<UnsteerableReport> {
    let strat =
        EAClassicalStrategy { shared_state: rho.clone(), alice_povms: alice_povms.to_vec(), bob_povms: bob_povms.to_vec() };
    let dim = alice_povms.first().ok_or_else(|| Error::DimensionMismatch("no Alice POVMs".into()))?.dim();
    let ea = behavior_of_ea_classical(s, dim, &strat)?;
    let functional_value = functional.map(|f| evaluate(f, &ea)).transpose()?;
    let asm = assemblage_from_state(rho, alice_povms)?;
    let search = lhs_search(&asm, &LhsSearchConfig::default())?;
    let Some(model) = search.model else {
        return Ok(UnsteerableReport {
            skipped: true,
            lhs_residual: search.residual,
            model_deviation: f64::NAN,
            classical_membership: false,
            membership_residual: f64::NAN,
            functional_value,
        });
    };
    let cm = lhs_to_classical(&model, bob_povms)?;
    let model_deviation = behavior_of_classical_model(s, &cm)?.max_abs_diff(&ea);
    let m = classical_membership(&ea)?;
    Ok(UnsteerableReport {
        skipped: false,
        lhs_residual: search.residual,
        model_deviation,
        classical_membership: m.feasible,
        membership_residual: m.residual,
        functional_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_povm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zx() -> Vec<Povm> {
        let [x, _, z] = paulis();
        vec![pauli_measurement(&z).unwrap(), pauli_measurement(&x).unwrap()]
    }

    #[test]
    fn product_state_factorizes() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let ra = random_density(2, 2, &mut r);
        let rb = random_density(3, 3, &mut r);
        let povms = vec![random_povm(2, 3, &mut r)];
        let asm = assemblage_from_state(&ra.tensor(&rb), &povms).unwrap();
        for a in 0..3 {
            let w = ra.matrix().trace_product_re(povms[0].effect(a));
            assert!(asm.element(0, a).max_abs_diff(&rb.matrix().scale_real(w)) < 1e-12);
        }
        let search = lhs_search(&assemblage_from_state(&ra.tensor(&rb), &zx_on(2, &mut r)).unwrap(), &Default::default())
            .unwrap();
        assert!(search.found() && search.residual < 1e-9);
    }

    fn zx_on(dim: usize, r: &mut ChaCha8Rng) -> Vec<Povm> {
        (0..2).map(|_| random_povm(dim, 2, r)).collect()
    }

    #[test]
    fn bell_state_with_z_measurement() {
        let phi = DensityMatrix::from_pure(&bell_state(2, 0, 0).unwrap()).unwrap();
        let asm = assemblage_from_state(&phi, &zx()[..1]).unwrap();
        assert!(asm.element(0, 0).max_abs_diff(&ComplexMatrix::from_real_diag(&[0.5, 0.0])) < 1e-12);
        assert!(asm.element(0, 1).max_abs_diff(&ComplexMatrix::from_real_diag(&[0.0, 0.5])) < 1e-12);
    }

    #[test]
    fn werner_elements_closed_form() {
        let [x, _, z] = paulis();
        let v = 0.37;
        let asm = assemblage_from_state(&werner_state(v).unwrap(), &zx()).unwrap();
        // singlet anticorrelation: ϱ_{a|x} = (1 − (−1)^a v σ) / 4
        for (setting, op) in [(0, &z), (1, &x)] {
            for a in 0..2 {
                let sign = if a == 0 { -1.0 } else { 1.0 };
                let mut want = ComplexMatrix::identity(2).scale_real(0.25);
                want.add_scaled(op, 0.25 * sign * v);
                assert!(asm.element(setting, a).max_abs_diff(&want) < 1e-12);
            }
        }
    }

    #[test]
    fn inequality_is_2v_for_werner() {
        for v in [0.0, 0.3, 0.75, 1.0] {
            let asm = assemblage_from_state(&werner_state(v).unwrap(), &zx()).unwrap();
            assert!((steering_inequality_value(&asm).unwrap() - 2.0 * v).abs() < 1e-12);
        }
    }

    #[test]
    fn lhs_found_below_threshold() {
        let asm = assemblage_from_state(&werner_state(0.6).unwrap(), &zx()).unwrap();
        let s = lhs_search(&asm, &Default::default()).unwrap();
        assert!(s.found(), "residual {}", s.residual);
        assert!(s.residual < 1e-7);
        assert!(steering_inequality_value(&asm).unwrap() <= 2f64.sqrt() + 1e-7);
    }

    #[test]
    fn lhs_not_found_above_threshold() {
        let asm = assemblage_from_state(&werner_state(0.8).unwrap(), &zx()).unwrap();
        let s = lhs_search(&asm, &LhsSearchConfig { max_iterations: 20_000, ..Default::default() }).unwrap();
        assert!(!s.found());
        assert!(s.residual > 1e-4);
        assert!(steering_inequality_value(&asm).unwrap() > 2f64.sqrt() + 1e-9);
    }

    #[test]
    fn rejects_signaling_assemblage() {
        let e = ComplexMatrix::from_real_diag(&[0.5, 0.0]);
        let f = ComplexMatrix::from_real_diag(&[0.0, 0.5]);
        let g = ComplexMatrix::from_real_diag(&[0.3, 0.0]);
        assert!(Assemblage::new(vec![vec![e.clone(), f.clone()], vec![e, g]]).is_err());
    }

    #[test]
    fn inequality_needs_two_dichotomic_settings() {
        let asm = assemblage_from_state(&werner_state(0.5).unwrap(), &zx()[..1]).unwrap();
        assert!(steering_inequality_value(&asm).is_err());
    }
}
