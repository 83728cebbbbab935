//! Prepare-and-measure scenarios, behaviors and strategy evaluators.
//!
//! A behavior is the dense tensor `p(b|x,y)` stored in `[b][x][y]` order.
//! Scenarios with a single measurement keep the singleton `y` axis.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{reduce_with_effect_a, ComplexMatrix, DensityMatrix, KrausChannel, Povm};

/// Tolerance on the normalization of each conditional distribution.
pub const TOL_NORM: f64 = 1e-9;
/// Entries in `[-TOL_NEG, 0)` count as zero.
pub const TOL_NEG: f64 = 1e-10;

/// Message dimension `d` and the input/output counts `(n_x, n_y, n_b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub d: usize,
    pub n_x: usize,
    pub n_y: usize,
    pub n_b: usize,
}

impl Scenario {
    pub fn new(d: usize, n_x: usize, n_y: usize, n_b: usize) -> Result<Self> {
        if d == 0 || n_x == 0 || n_y == 0 || n_b == 0 {
            return Err(Error::InvalidScenario(format!(
                "all of d, nX, nY, nB must be positive, got ({d}; {n_x}, {n_y}, {n_b})"
            )));
        }
        Ok(Self { d, n_x, n_y, n_b })
    }

    /// Number of entries of a behavior tensor.
    pub fn len(&self) -> usize {
        self.n_b * self.n_x * self.n_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat position of `p(b|x,y)`.
    pub fn index(&self, b: usize, x: usize, y: usize) -> usize {
        (b * self.n_x + x) * self.n_y + y
    }

    pub fn with_message_dim(&self, d: usize) -> Self {
        Self { d, ..*self }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}; {}, {}, {})", self.d, self.n_x, self.n_y, self.n_b)
    }
}

/// Parses `d,nX,nY,nB`.
impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<usize> = s
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(format!("scenario `{s}`: {e}"))))
            .collect::<Result<_>>()?;
        match parts[..] {
            [d, n_x, n_y, n_b] => Scenario::new(d, n_x, n_y, n_b),
            _ => Err(Error::Parse(format!("scenario `{s}` must have the form d,nX,nY,nB"))),
        }
    }
}

/// The conditional probabilities `p(b|x,y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Behavior {
    scenario: Scenario,
    p: Vec<f64>,
}

impl Behavior {
    pub fn new(scenario: Scenario, p: Vec<f64>) -> Result<Self> {
        if p.len() != scenario.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for scenario {scenario}",
                p.len()
            )));
        }
        for (i, &v) in p.iter().enumerate() {
            if !v.is_finite() || !(-TOL_NEG..=1.0 + TOL_NEG).contains(&v) {
                return Err(Error::InvalidDistribution(format!("entry {i} = {v}")));
            }
        }
        let out = Self { scenario, p };
        for x in 0..scenario.n_x {
            for y in 0..scenario.n_y {
                let total: f64 = (0..scenario.n_b).map(|b| out.get(b, x, y)).sum();
                if (total - 1.0).abs() > TOL_NORM {
                    return Err(Error::InvalidDistribution(format!(
                        "p(.|{x},{y}) sums to {total}"
                    )));
                }
            }
        }
        Ok(out)
    }

    /// Builds from raw evaluator output, zeroing numerical negatives first.
    pub fn from_evaluated(scenario: Scenario, mut p: Vec<f64>) -> Result<Self> {
        for v in &mut p {
            if *v < 0.0 && *v >= -TOL_NEG {
                *v = 0.0;
            }
        }
        Self::new(scenario, p)
    }

    pub fn from_fn(scenario: Scenario, f: impl Fn(usize, usize, usize) -> f64) -> Result<Self> {
        let mut p = vec![0.0; scenario.len()];
        for b in 0..scenario.n_b {
            for x in 0..scenario.n_x {
                for y in 0..scenario.n_y {
                    p[scenario.index(b, x, y)] = f(b, x, y);
                }
            }
        }
        Self::from_evaluated(scenario, p)
    }

    /// `p(b|x,y) = 1/n_b`.
    pub fn uniform(scenario: Scenario) -> Self {
        Self { scenario, p: vec![1.0 / scenario.n_b as f64; scenario.len()] }
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn get(&self, b: usize, x: usize, y: usize) -> f64 {
        self.p[self.scenario.index(b, x, y)]
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn max_abs_diff(&self, other: &Behavior) -> f64 {
        assert_eq!(self.scenario, other.scenario);
        self.p.iter().zip(&other.p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Convex combination `Σ w_i p_i`.
    pub fn mixture(parts: &[(f64, &Behavior)]) -> Result<Self> {
        let scenario = parts
            .first()
            .ok_or_else(|| Error::InvalidDistribution("empty mixture".into()))?
            .1
            .scenario;
        let mut p = vec![0.0; scenario.len()];
        for (w, beh) in parts {
            if beh.scenario != scenario {
                return Err(Error::DimensionMismatch("mixing behaviors of different scenarios".into()));
            }
            for (acc, v) in p.iter_mut().zip(&beh.p) {
                *acc += w * v;
            }
        }
        Self::from_evaluated(scenario, p)
    }

    /// Text form: a `pm-behavior v1 d nX nY nB` header and one line per `(x, y)`.
    pub fn to_text(&self) -> String {
        let s = self.scenario;
        let mut out = format!("pm-behavior v1 {} {} {} {}\n", s.d, s.n_x, s.n_y, s.n_b);
        for x in 0..s.n_x {
            for y in 0..s.n_y {
                let row: Vec<String> =
                    (0..s.n_b).map(|b| format!("{:.17e}", self.get(b, x, y))).collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty behavior file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 6 || fields[0] != "pm-behavior" || fields[1] != "v1" {
            return Err(Error::Parse(format!("bad behavior header `{header}`")));
        }
        let nums: Vec<usize> = fields[2..]
            .iter()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header field `{t}`"))))
            .collect::<Result<_>>()?;
        let s = Scenario::new(nums[0], nums[1], nums[2], nums[3])?;
        let mut p = vec![0.0; s.len()];
        for x in 0..s.n_x {
            for y in 0..s.n_y {
                let line = lines
                    .next()
                    .ok_or_else(|| Error::Parse(format!("missing row for x={x}, y={y}")))?;
                let vals: Vec<f64> = line
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad value `{t}`"))))
                    .collect::<Result<_>>()?;
                if vals.len() != s.n_b {
                    return Err(Error::Parse(format!("row x={x}, y={y} has {} values", vals.len())));
                }
                for (b, v) in vals.into_iter().enumerate() {
                    p[s.index(b, x, y)] = v;
                }
            }
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing rows in behavior file".into()));
        }
        Self::new(s, p)
    }
}

fn shape_error(what: &str, got: usize, want: usize) -> Error {
    Error::DimensionMismatch(format!("{what}: got {got}, expected {want}"))
}

/// Encoder `x -> message` and per-`y` decoders `message -> b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub encoder: Vec<usize>,
    /// `decoders[y][message]`.
    pub decoders: Vec<Vec<usize>>,
}

impl DeterministicStrategy {
    pub fn validate(&self, s: &Scenario) -> Result<()> {
        if self.encoder.len() != s.n_x {
            return Err(shape_error("encoder length", self.encoder.len(), s.n_x));
        }
        if let Some(&m) = self.encoder.iter().find(|&&m| m >= s.d) {
            return Err(Error::IndexOutOfRange { index: m, bound: s.d });
        }
        if self.decoders.len() != s.n_y {
            return Err(shape_error("decoder count", self.decoders.len(), s.n_y));
        }
        for dec in &self.decoders {
            if dec.len() != s.d {
                return Err(shape_error("decoder length", dec.len(), s.d));
            }
            if let Some(&b) = dec.iter().find(|&&b| b >= s.n_b) {
                return Err(Error::IndexOutOfRange { index: b, bound: s.n_b });
            }
        }
        Ok(())
    }

    pub fn output(&self, x: usize, y: usize) -> usize {
        self.decoders[y][self.encoder[x]]
    }
}

/// One state per `x`, one POVM per `y`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuantumStrategy {
    pub states: Vec<DensityMatrix>,
    pub measurements: Vec<Povm>,
}

/// Shared state over `(A, B)`, channels `A -> message` per `x`, and POVMs on
/// `(message, B)` per `y`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EAQuantumStrategy {
    pub shared_state: DensityMatrix,
    pub channels: Vec<KrausChannel>,
    pub measurements: Vec<Povm>,
}

/// Shared state over `(A, B)`, a `d`-outcome POVM on `A` per `x`, and a POVM
/// on `B` for every `(a, y)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EAClassicalStrategy {
    pub shared_state: DensityMatrix,
    pub alice_povms: Vec<Povm>,
    /// `bob_povms[a][y]`.
    pub bob_povms: Vec<Vec<Povm>>,
}

/// Shared-randomness model `Σ_λ π(λ) p(a|x,λ) p(b|y,a,λ)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassicalModel {
    pub weights: Vec<f64>,
    /// `alice_tables[λ][x][a]`.
    pub alice_tables: Vec<Vec<Vec<f64>>>,
    /// `bob_tables[λ][a][y][b]`.
    pub bob_tables: Vec<Vec<Vec<Vec<f64>>>>,
}

fn assist_dims(state: &DensityMatrix, assist_dim: usize) -> Result<()> {
    if assist_dim == 0 || state.dim() != assist_dim * assist_dim {
        return Err(Error::DimensionMismatch(format!(
            "shared state of dimension {} for assistance dimension {assist_dim}",
            state.dim()
        )));
    }
    Ok(())
}

impl QuantumStrategy {
    pub fn validate(&self, s: &Scenario) -> Result<()> {
        if self.states.len() != s.n_x {
            return Err(shape_error("state count", self.states.len(), s.n_x));
        }
        if self.measurements.len() != s.n_y {
            return Err(shape_error("measurement count", self.measurements.len(), s.n_y));
        }
        if let Some(st) = self.states.iter().find(|st| st.dim() != s.d) {
            return Err(shape_error("state dimension", st.dim(), s.d));
        }
        for m in &self.measurements {
            if m.dim() != s.d {
                return Err(shape_error("measurement dimension", m.dim(), s.d));
            }
            if m.outcomes() != s.n_b {
                return Err(shape_error("measurement outcomes", m.outcomes(), s.n_b));
            }
        }
        Ok(())
    }
}

impl EAQuantumStrategy {
    pub fn validate(&self, s: &Scenario, assist_dim: usize) -> Result<()> {
        assist_dims(&self.shared_state, assist_dim)?;
        if self.channels.len() != s.n_x {
            return Err(shape_error("channel count", self.channels.len(), s.n_x));
        }
        if self.measurements.len() != s.n_y {
            return Err(shape_error("measurement count", self.measurements.len(), s.n_y));
        }
        for ch in &self.channels {
            if ch.in_dim() != assist_dim || ch.out_dim() != s.d {
                return Err(Error::DimensionMismatch(format!(
                    "channel {}->{} for assistance {assist_dim} and message {}",
                    ch.in_dim(),
                    ch.out_dim(),
                    s.d
                )));
            }
        }
        for m in &self.measurements {
            if m.dim() != s.d * assist_dim {
                return Err(shape_error("measurement dimension", m.dim(), s.d * assist_dim));
            }
            if m.outcomes() != s.n_b {
                return Err(shape_error("measurement outcomes", m.outcomes(), s.n_b));
            }
        }
        Ok(())
    }
}

impl EAClassicalStrategy {
    pub fn validate(&self, s: &Scenario, assist_dim: usize) -> Result<()> {
        assist_dims(&self.shared_state, assist_dim)?;
        if self.alice_povms.len() != s.n_x {
            return Err(shape_error("Alice POVM count", self.alice_povms.len(), s.n_x));
        }
        for m in &self.alice_povms {
            if m.dim() != assist_dim {
                return Err(shape_error("Alice POVM dimension", m.dim(), assist_dim));
            }
            if m.outcomes() != s.d {
                return Err(shape_error("Alice POVM outcomes", m.outcomes(), s.d));
            }
        }
        if self.bob_povms.len() != s.d {
            return Err(shape_error("Bob table rows", self.bob_povms.len(), s.d));
        }
        for row in &self.bob_povms {
            if row.len() != s.n_y {
                return Err(shape_error("Bob table columns", row.len(), s.n_y));
            }
            for m in row {
                if m.dim() != assist_dim {
                    return Err(shape_error("Bob POVM dimension", m.dim(), assist_dim));
                }
                if m.outcomes() != s.n_b {
                    return Err(shape_error("Bob POVM outcomes", m.outcomes(), s.n_b));
                }
            }
        }
        Ok(())
    }

    /// Embeds a deterministic strategy with a product shared state `|00><00|`.
    pub fn from_deterministic(s: &Scenario, assist_dim: usize, det: &DeterministicStrategy) -> Result<Self> {
        det.validate(s)?;
        let mut v = vec![crate::linalg::C64::new(0.0, 0.0); assist_dim * assist_dim];
        v[0] = crate::linalg::C64::new(1.0, 0.0);
        let shared_state = DensityMatrix::from_pure(&v)?;
        let alice_povms = det
            .encoder
            .iter()
            .map(|&m| Povm::deterministic(assist_dim, s.d, m))
            .collect::<Result<_>>()?;
        let bob_povms = (0..s.d)
            .map(|a| {
                (0..s.n_y)
                    .map(|y| Povm::deterministic(assist_dim, s.n_b, det.decoders[y][a]))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(Self { shared_state, alice_povms, bob_povms })
    }

    pub fn assist_dim(&self) -> usize {
        self.alice_povms[0].dim()
    }

    /// Bob's conditional states `Tr_A[rho (M_{a|x} ⊗ 1)]`, indexed `[x][a]`.
    pub fn conditional_states(&self) -> Vec<Vec<ComplexMatrix>> {
        let dim_a = self.assist_dim();
        self.alice_povms
            .iter()
            .map(|m| {
                m.effects()
                    .iter()
                    .map(|e| reduce_with_effect_a(self.shared_state.matrix(), dim_a, e))
                    .collect()
            })
            .collect()
    }
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    let total: f64 = p.iter().sum();
    if p.iter().any(|&v| !v.is_finite() || v < -TOL_NORM) || (total - 1.0).abs() > TOL_NORM {
        return Err(Error::InvalidDistribution(format!("{what} sums to {total}")));
    }
    Ok(())
}

impl ClassicalModel {
    pub fn validate(&self, s: &Scenario) -> Result<()> {
        let n_l = self.weights.len();
        check_distribution(&self.weights, "hidden-variable weights")?;
        if self.alice_tables.len() != n_l || self.bob_tables.len() != n_l {
            return Err(Error::DimensionMismatch("table counts differ from weight count".into()));
        }
        for (l, (alice, bob)) in self.alice_tables.iter().zip(&self.bob_tables).enumerate() {
            if alice.len() != s.n_x {
                return Err(shape_error("Alice table inputs", alice.len(), s.n_x));
            }
            for (x, row) in alice.iter().enumerate() {
                if row.len() != s.d {
                    return Err(shape_error("Alice table outcomes", row.len(), s.d));
                }
                check_distribution(row, &format!("p(.|x={x}, λ={l})"))?;
            }
            if bob.len() != s.d {
                return Err(shape_error("Bob table messages", bob.len(), s.d));
            }
            for (a, per_y) in bob.iter().enumerate() {
                if per_y.len() != s.n_y {
                    return Err(shape_error("Bob table inputs", per_y.len(), s.n_y));
                }
                for (y, row) in per_y.iter().enumerate() {
                    if row.len() != s.n_b {
                        return Err(shape_error("Bob table outcomes", row.len(), s.n_b));
                    }
                    check_distribution(row, &format!("p(.|y={y}, a={a}, λ={l})"))?;
                }
            }
        }
        Ok(())
    }

    /// Point mass on one deterministic strategy.
    pub fn from_deterministic(s: &Scenario, det: &DeterministicStrategy) -> Result<Self> {
        Self::mixture_of_deterministic(s, &[(1.0, det.clone())])
    }

    pub fn mixture_of_deterministic(s: &Scenario, parts: &[(f64, DeterministicStrategy)]) -> Result<Self> {
        let mut model = ClassicalModel { weights: vec![], alice_tables: vec![], bob_tables: vec![] };
        for (w, det) in parts {
            det.validate(s)?;
            model.weights.push(*w);
            model.alice_tables.push(
                det.encoder
                    .iter()
                    .map(|&m| (0..s.d).map(|a| if a == m { 1.0 } else { 0.0 }).collect())
                    .collect(),
            );
            model.bob_tables.push(
                (0..s.d)
                    .map(|a| {
                        (0..s.n_y)
                            .map(|y| {
                                let out = det.decoders[y][a];
                                (0..s.n_b).map(|b| if b == out { 1.0 } else { 0.0 }).collect()
                            })
                            .collect()
                    })
                    .collect(),
            );
        }
        Ok(model)
    }
}

/// `p(b|x,y) = δ(b, decoders[y][encoder[x]])`.
pub fn behavior_of_deterministic(s: &Scenario, strat: &DeterministicStrategy) -> Result<Behavior> {
    strat.validate(s)?;
    let mut p = vec![0.0; s.len()];
    for x in 0..s.n_x {
        for y in 0..s.n_y {
            p[s.index(strat.output(x, y), x, y)] = 1.0;
        }
    }
    Behavior::new(*s, p)
}

/// `p(b|x,y) = Tr(rho_x M_{b|y})`.
pub fn behavior_of_quantum(s: &Scenario, strat: &QuantumStrategy) -> Result<Behavior> {
    strat.validate(s)?;
    Behavior::from_fn(*s, |b, x, y| {
        strat.states[x].matrix().trace_product_re(strat.measurements[y].effect(b))
    })
}

/// `p(b|x,y) = Tr[(C_x ⊗ id)(rho_AB) M_{b|y}]`.
pub fn behavior_of_ea_quantum(s: &Scenario, assist_dim: usize, strat: &EAQuantumStrategy) -> Result<Behavior> {
    strat.validate(s, assist_dim)?;
    let sent: Vec<ComplexMatrix> = strat
        .channels
        .iter()
        .map(|ch| ch.apply_to_first(strat.shared_state.matrix(), assist_dim))
        .collect();
    Behavior::from_fn(*s, |b, x, y| sent[x].trace_product_re(strat.measurements[y].effect(b)))
}

/// `p(b|x,y) = Σ_a Tr[rho_AB (M_{a|x} ⊗ N_{b|a,y})]`.
pub fn behavior_of_ea_classical(
    s: &Scenario,
    assist_dim: usize,
    strat: &EAClassicalStrategy,
) -> Result<Behavior> {
    strat.validate(s, assist_dim)?;
    let cond = strat.conditional_states();
    Behavior::from_fn(*s, |b, x, y| {
        (0..s.d).map(|a| cond[x][a].trace_product_re(strat.bob_povms[a][y].effect(b))).sum()
    })
}

/// `p(b|x,y) = Σ_λ Σ_a π(λ) p(a|x,λ) p(b|y,a,λ)`.
pub fn behavior_of_classical_model(s: &Scenario, m: &ClassicalModel) -> Result<Behavior> {
    m.validate(s)?;
    Behavior::from_fn(*s, |b, x, y| {
        m.weights
            .iter()
            .enumerate()
            .map(|(l, w)| {
                (0..s.d).map(|a| m.alice_tables[l][x][a] * m.bob_tables[l][a][y][b]).sum::<f64>() * w
            })
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{bell_state, paulis, shift_phase_unitary, tensor_product, C64};
    use crate::random::{random_channel, random_density, random_povm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sc(d: usize, n_x: usize, n_y: usize, n_b: usize) -> Scenario {
        Scenario::new(d, n_x, n_y, n_b).unwrap()
    }

    #[test]
    fn deterministic_appendix_strategy_d3() {
        let s = sc(3, 4, 1, 5);
        let strat = DeterministicStrategy { encoder: vec![0, 1, 2, 0], decoders: vec![vec![0, 1, 2]] };
        let p = behavior_of_deterministic(&s, &strat).unwrap();
        for x in 0..4 {
            for b in 0..5 {
                let expect = if x <= 2 { (b == x) as u8 } else { (b == 0) as u8 };
                assert_eq!(p.get(b, x, 0), expect as f64);
            }
        }
    }

    #[test]
    fn constant_strategy() {
        let s = sc(2, 3, 2, 3);
        let strat = DeterministicStrategy { encoder: vec![1, 1, 1], decoders: vec![vec![2, 2], vec![2, 2]] };
        let p = behavior_of_deterministic(&s, &strat).unwrap();
        for x in 0..3 {
            for y in 0..2 {
                assert_eq!(p.get(2, x, y), 1.0);
            }
        }
    }

    #[test]
    fn all_deterministic_strategies_are_valid() {
        let s = sc(2, 3, 1, 4);
        let mut count = 0;
        for enc in 0..8usize {
            for dec in 0..16usize {
                let strat = DeterministicStrategy {
                    encoder: (0..3).map(|x| (enc >> x) & 1).collect(),
                    decoders: vec![vec![dec % 4, dec / 4]],
                };
                let p = behavior_of_deterministic(&s, &strat).unwrap();
                assert!(p.probs().iter().all(|&v| v == 0.0 || v == 1.0));
                count += 1;
            }
        }
        assert_eq!(count, 128);
    }

    #[test]
    fn deterministic_shape_errors() {
        let s = sc(2, 2, 1, 2);
        let bad = DeterministicStrategy { encoder: vec![0, 2], decoders: vec![vec![0, 1]] };
        assert!(matches!(behavior_of_deterministic(&s, &bad), Err(Error::IndexOutOfRange { .. })));
        let short = DeterministicStrategy { encoder: vec![0], decoders: vec![vec![0, 1]] };
        assert!(matches!(behavior_of_deterministic(&s, &short), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn maximally_mixed_preparations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = sc(3, 2, 2, 4);
        let meas: Vec<Povm> = (0..2).map(|_| random_povm(3, 4, &mut rng)).collect();
        let strat = QuantumStrategy { states: vec![DensityMatrix::maximally_mixed(3); 2], measurements: meas.clone() };
        let p = behavior_of_quantum(&s, &strat).unwrap();
        for y in 0..2 {
            for b in 0..4 {
                let expect = meas[y].effect(b).trace().re / 3.0;
                for x in 0..2 {
                    assert!((p.get(b, x, y) - expect).abs() < 1e-14);
                }
            }
        }
    }

    fn qubit_from_angle(theta: f64) -> DensityMatrix {
        DensityMatrix::from_pure(&[C64::new((theta / 2.0).cos(), 0.0), C64::new((theta / 2.0).sin(), 0.0)]).unwrap()
    }

    #[test]
    fn projective_measurement_in_eigenbasis_is_deterministic() {
        let s = sc(2, 2, 1, 2);
        let z = Povm::projective(&[
            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        ])
        .unwrap();
        let strat = QuantumStrategy { states: vec![qubit_from_angle(0.0), qubit_from_angle(std::f64::consts::PI)], measurements: vec![z] };
        let p = behavior_of_quantum(&s, &strat).unwrap();
        assert!((p.get(0, 0, 0) - 1.0).abs() < 1e-15);
        assert!((p.get(1, 1, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn qubit_random_access_code() {
        // x = (x0, x1) encoded at Bloch angle π/4 + kπ/2 in the x-z plane
        use std::f64::consts::PI;
        let s = sc(2, 4, 2, 2);
        let [sx, _, sz] = paulis();
        let half = |m: &ComplexMatrix, sign: f64| {
            (&ComplexMatrix::identity(2) + &m.scale_real(sign)).scale_real(0.5)
        };
        let meas = vec![
            Povm::new(vec![half(&sz, 1.0), half(&sz, -1.0)]).unwrap(),
            Povm::new(vec![half(&sx, 1.0), half(&sx, -1.0)]).unwrap(),
        ];
        let states: Vec<DensityMatrix> = (0..4)
            .map(|k| {
                let angle = PI / 4.0 + k as f64 * PI / 2.0;
                let (bz, bx) = (angle.cos(), angle.sin());
                let m = &ComplexMatrix::identity(2) + &(&sz.scale_real(bz) + &sx.scale_real(bx));
                DensityMatrix::new(m.scale_real(0.5)).unwrap()
            })
            .collect();
        let p = behavior_of_quantum(&s, &QuantumStrategy { states, measurements: meas }).unwrap();
        let mut success = 0.0;
        for x in 0..4 {
            // the bits of x are the signs of the z and x Bloch components
            let angle = PI / 4.0 + x as f64 * PI / 2.0;
            let target_z = if angle.cos() > 0.0 { 0 } else { 1 };
            let target_x = if angle.sin() > 0.0 { 0 } else { 1 };
            success += p.get(target_z, x, 0) + p.get(target_x, x, 1);
        }
        success /= 8.0;
        let expect = (PI / 8.0).cos().powi(2);
        assert!((success - expect).abs() < 1e-12, "{success} vs {expect}");
        assert!((expect - 0.85355).abs() < 1e-5);
    }

    #[test]
    fn ea_depolarizing_channels_erase_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = sc(2, 3, 2, 3);
        let strat = EAQuantumStrategy {
            shared_state: random_density(4, 4, &mut rng),
            channels: vec![KrausChannel::fully_depolarizing(2, 2); 3],
            measurements: (0..2).map(|_| random_povm(4, 3, &mut rng)).collect(),
        };
        let p = behavior_of_ea_quantum(&s, 2, &strat).unwrap();
        for b in 0..3 {
            for y in 0..2 {
                assert!((p.get(b, 0, y) - p.get(b, 1, y)).abs() < 1e-14);
                assert!((p.get(b, 0, y) - p.get(b, 2, y)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn ea_identity_channel_on_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = sc(2, 1, 2, 2);
        let ra = random_density(2, 2, &mut rng);
        let rb = random_density(2, 2, &mut rng);
        let joint = DensityMatrix::new(tensor_product(ra.matrix(), rb.matrix())).unwrap();
        let meas: Vec<Povm> = (0..2).map(|_| random_povm(4, 2, &mut rng)).collect();
        let ea = EAQuantumStrategy { shared_state: joint.clone(), channels: vec![KrausChannel::identity(2)], measurements: meas.clone() };
        let p_ea = behavior_of_ea_quantum(&s, 2, &ea).unwrap();
        let plain = QuantumStrategy { states: vec![joint], measurements: meas };
        let p_q = behavior_of_quantum(&s.with_message_dim(4), &plain).unwrap();
        for (a, b) in p_ea.probs().iter().zip(p_q.probs()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn ea_trivial_assistance_matches_plain_quantum() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s = sc(3, 3, 2, 2);
        let channels: Vec<KrausChannel> = (0..3).map(|_| random_channel(1, 3, 3, &mut rng)).collect();
        let meas: Vec<Povm> = (0..2).map(|_| random_povm(3, 2, &mut rng)).collect();
        let one = DensityMatrix::new(ComplexMatrix::identity(1)).unwrap();
        let ea = EAQuantumStrategy { shared_state: one.clone(), channels: channels.clone(), measurements: meas.clone() };
        let p_ea = behavior_of_ea_quantum(&s, 1, &ea).unwrap();
        let states = channels
            .iter()
            .map(|c| DensityMatrix::new(c.apply(one.matrix())).unwrap())
            .collect();
        let p_q = behavior_of_quantum(&s, &QuantumStrategy { states, measurements: meas }).unwrap();
        assert!(p_ea.max_abs_diff(&p_q) < 1e-10);
    }

    #[test]
    fn dense_coding_transmits_two_bits() {
        let s = sc(2, 4, 1, 4);
        let phi = DensityMatrix::from_pure(&bell_state(2, 0, 0).unwrap()).unwrap();
        let channels = (0..4)
            .map(|x| KrausChannel::unitary(shift_phase_unitary(2, x / 2, x % 2).unwrap()).unwrap())
            .collect();
        let bell = Povm::projective(
            &(0..4).map(|b| bell_state(2, b / 2, b % 2).unwrap()).collect::<Vec<_>>(),
        )
        .unwrap();
        let strat = EAQuantumStrategy { shared_state: phi, channels, measurements: vec![bell] };
        let p = behavior_of_ea_quantum(&s, 2, &strat).unwrap();
        for x in 0..4 {
            for b in 0..4 {
                assert!((p.get(b, x, 0) - (b == x) as u8 as f64).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn ea_classical_uninformative_alice() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = sc(3, 2, 2, 2);
        let strat = EAClassicalStrategy {
            shared_state: random_density(4, 4, &mut rng),
            alice_povms: vec![Povm::trivial(2, &[1.0 / 3.0; 3]).unwrap(); 2],
            bob_povms: (0..3).map(|_| (0..2).map(|_| random_povm(2, 2, &mut rng)).collect()).collect(),
        };
        let p = behavior_of_ea_classical(&s, 2, &strat).unwrap();
        for b in 0..2 {
            for y in 0..2 {
                assert!((p.get(b, 0, y) - p.get(b, 1, y)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn ea_classical_relabeling_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = sc(3, 2, 2, 3);
        let strat = EAClassicalStrategy {
            shared_state: random_density(4, 4, &mut rng),
            alice_povms: (0..2).map(|_| random_povm(2, 3, &mut rng)).collect(),
            bob_povms: (0..3).map(|_| (0..2).map(|_| random_povm(2, 3, &mut rng)).collect()).collect(),
        };
        let perm = [2, 0, 1];
        let relabeled = EAClassicalStrategy {
            shared_state: strat.shared_state.clone(),
            alice_povms: strat
                .alice_povms
                .iter()
                .map(|m| Povm::new(perm.iter().map(|&a| m.effect(a).clone()).collect()).unwrap())
                .collect(),
            bob_povms: perm.iter().map(|&a| strat.bob_povms[a].clone()).collect(),
        };
        let p = behavior_of_ea_classical(&s, 2, &strat).unwrap();
        let q = behavior_of_ea_classical(&s, 2, &relabeled).unwrap();
        assert!(p.max_abs_diff(&q) < 1e-15);
    }

    #[test]
    fn classical_model_point_mass_and_mixture() {
        let s = sc(2, 3, 2, 3);
        let d1 = DeterministicStrategy { encoder: vec![0, 1, 1], decoders: vec![vec![0, 2], vec![1, 1]] };
        let d2 = DeterministicStrategy { encoder: vec![1, 1, 0], decoders: vec![vec![2, 0], vec![0, 1]] };
        let p1 = behavior_of_deterministic(&s, &d1).unwrap();
        let p2 = behavior_of_deterministic(&s, &d2).unwrap();
        let single = ClassicalModel::from_deterministic(&s, &d1).unwrap();
        assert_eq!(behavior_of_classical_model(&s, &single).unwrap(), p1);
        let mix = ClassicalModel::mixture_of_deterministic(&s, &[(0.5, d1), (0.5, d2)]).unwrap();
        let pm = behavior_of_classical_model(&s, &mix).unwrap();
        let expect = Behavior::mixture(&[(0.5, &p1), (0.5, &p2)]).unwrap();
        assert!(pm.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn classical_model_rejects_unnormalized_tables() {
        let s = sc(2, 1, 1, 2);
        let model = ClassicalModel {
            weights: vec![1.0],
            alice_tables: vec![vec![vec![0.5, 0.4]]],
            bob_tables: vec![vec![vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]]],
        };
        assert!(matches!(behavior_of_classical_model(&s, &model), Err(Error::InvalidDistribution(_))));
    }

    #[test]
    fn behavior_text_format() {
        let s = sc(2, 2, 1, 3);
        let p = Behavior::from_fn(s, |b, x, _| [[0.2, 0.3, 0.5], [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]][x][b]).unwrap();
        let text = p.to_text();
        assert!(text.starts_with("pm-behavior v1 2 2 1 3\n"));
        let first_value = text.lines().nth(1).unwrap().split_whitespace().next().unwrap();
        let mantissa = first_value.split('e').next().unwrap().replace(['.', '-'], "");
        assert!(mantissa.len() >= 15);
        assert_eq!(Behavior::from_text(&text).unwrap(), p);
        assert!(Behavior::from_text("pm-behavior v2 2 2 1 3").is_err());
        assert!(Behavior::from_text("pm-behavior v1 1 1 1 2\n0.5 0.6\n").is_err());
    }

    #[test]
    fn scenario_parsing() {
        assert_eq!("2,3,1,4".parse::<Scenario>().unwrap(), sc(2, 3, 1, 4));
        assert!("2,3,1".parse::<Scenario>().is_err());
        assert!("0,3,1,4".parse::<Scenario>().is_err());
    }
}
