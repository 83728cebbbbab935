//! Linear functionals on behaviors and the ambiguous guessing games `F_d`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{behavior_of_deterministic, Behavior, DeterministicStrategy, Scenario};

/// A linear functional with the same dense `[b][x][y]` layout as [`Behavior`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFunctional {
    pub scenario: Scenario,
    pub coeffs: Vec<f64>,
}

impl LinearFunctional {
    pub fn new(scenario: Scenario, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != scenario.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for scenario {scenario} with {} entries",
                coeffs.len(),
                scenario.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parse("non-finite functional coefficient".into()));
        }
        Ok(Self { scenario, coeffs })
    }

    pub fn zero(scenario: Scenario) -> Self {
        Self { scenario, coeffs: vec![0.0; scenario.len()] }
    }

    pub fn get(&self, b: usize, x: usize, y: usize) -> f64 {
        self.coeffs[self.scenario.index(b, x, y)]
    }

    pub fn set(&mut self, b: usize, x: usize, y: usize, value: f64) {
        let i = self.scenario.index(b, x, y);
        self.coeffs[i] = value;
    }

    pub fn dot(&self, p: &[f64]) -> f64 {
        self.coeffs.iter().zip(p).map(|(c, q)| c * q).sum()
    }

    /// Writes the inequality format: one `coeff b x y value` line per
    /// nonzero coefficient, then an optional `bound value` line.
    pub fn to_inequality_text(&self, bound: Option<f64>) -> String {
        let s = self.scenario;
        let mut out = format!("scenario {} {} {} {}\n", s.d, s.n_x, s.n_y, s.n_b);
        for b in 0..s.n_b {
            for x in 0..s.n_x {
                for y in 0..s.n_y {
                    let c = self.get(b, x, y);
                    if c != 0.0 {
                        let _ = writeln!(out, "coeff {b} {x} {y} {c:?}");
                    }
                }
            }
        }
        if let Some(v) = bound {
            let _ = writeln!(out, "bound {v:?}");
        }
        out
    }

    /// Parses the inequality format. The scenario comes from a leading
    /// `scenario d nX nY nB` line or, failing that, from `default`.
    pub fn from_inequality_text(text: &str, default: Option<Scenario>) -> Result<(Self, Option<f64>)> {
        let mut scenario = default;
        let mut entries = Vec::new();
        let mut bound = None;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Parse(format!("line {}: malformed `{line}`", ln + 1));
            match parts[0] {
                "scenario" if parts.len() == 5 => {
                    let n: Vec<usize> =
                        parts[1..].iter().map(|t| t.parse().map_err(|_| bad())).collect::<Result<_>>()?;
                    scenario = Some(Scenario::new(n[0], n[1], n[2], n[3])?);
                }
                "coeff" if parts.len() == 5 => {
                    let idx: Vec<usize> =
                        parts[1..4].iter().map(|t| t.parse().map_err(|_| bad())).collect::<Result<_>>()?;
                    let v: f64 = parts[4].parse().map_err(|_| bad())?;
                    entries.push((idx[0], idx[1], idx[2], v));
                }
                "bound" if parts.len() == 2 => bound = Some(parts[1].parse().map_err(|_| bad())?),
                _ => return Err(bad()),
            }
        }
        let s = scenario.ok_or_else(|| Error::Parse("inequality file has no scenario".into()))?;
        let mut f = Self::zero(s);
        for (b, x, y, v) in entries {
            if b >= s.n_b || x >= s.n_x || y >= s.n_y {
                return Err(Error::Parse(format!("coefficient index ({b},{x},{y}) outside {s}")));
            }
            let i = s.index(b, x, y);
            f.coeffs[i] += v;
        }
        if f.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parse("non-finite functional coefficient".into()));
        }
        Ok((f, bound))
    }
}

pub fn evaluate(f: &LinearFunctional, p: &Behavior) -> Result<f64> {
    if f.scenario != p.scenario() {
        return Err(Error::DimensionMismatch(format!(
            "functional on {} applied to behavior on {}",
            f.scenario,
            p.scenario()
        )));
    }
    Ok(f.dot(p.probs()))
}

/// `F_d`: weight 2 on `p(i|i)` for `i ≤ d` and weight 1 on the ambiguous
/// answer `b = d+1`, in scenario `(d; d+1, 1, d+2)`.
pub fn fd_functional(d: usize) -> Result<LinearFunctional> {
    if d < 2 {
        return Err(Error::InvalidScenario(format!("F_d needs d >= 2, got {d}")));
    }
    let s = Scenario::new(d, d + 1, 1, d + 2)?;
    let mut f = LinearFunctional::zero(s);
    for i in 0..=d {
        f.set(i, i, 0, 2.0);
        f.set(d + 1, i, 0, 1.0);
    }
    Ok(f)
}

pub fn f2_functional() -> LinearFunctional {
    fd_functional(2).expect("d = 2 is valid")
}

/// Sends `k ↦ k` for `k < d` and the last input to symbol 0; decodes by identity.
pub fn fd_optimal_classical_strategy(d: usize) -> Result<DeterministicStrategy> {
    if d < 2 {
        return Err(Error::InvalidScenario(format!("F_d needs d >= 2, got {d}")));
    }
    let mut encoder: Vec<usize> = (0..d).collect();
    encoder.push(0);
    Ok(DeterministicStrategy { encoder, decoders: vec![(0..d).collect()] })
}

/// Embeds a `(2; 3,1,4)` behavior into `(d; d+1, 1, d+2)`.
///
/// The first three inputs keep their guesses 0..=2, and the ambiguous answer
/// of `p′` (outcome 3) moves to the ambiguous outcome `d+1` of the larger
/// game. Inputs `3..=d` are answered perfectly. Hence
/// `F_d(p*) = F_2(p′) + 2(d−2)` for every `p′`.
pub fn embed_pstar(d: usize, p_prime: &Behavior) -> Result<Behavior> {
    if d < 3 {
        return Err(Error::InvalidScenario(format!("embedding needs d >= 3, got {d}")));
    }
    let small = Scenario::new(2, 3, 1, 4)?;
    if p_prime.scenario() != small {
        return Err(Error::DimensionMismatch(format!(
            "embedding expects a behavior on {small}, got {}",
            p_prime.scenario()
        )));
    }
    let s = Scenario::new(d, d + 1, 1, d + 2)?;
    Behavior::new(
        s,
        (0..s.len())
            .map(|i| {
                let b = i / (s.n_x * s.n_y);
                let x = (i / s.n_y) % s.n_x;
                if x <= 2 {
                    match b {
                        0..=2 => p_prime.get(b, x, 0),
                        _ if b == d + 1 => p_prime.get(3, x, 0),
                        _ => 0.0,
                    }
                } else if b == x {
                    1.0
                } else {
                    0.0
                }
            })
            .collect(),
    )
}

/// Classical strategy value on `F_d`, used as a convenience in reports.
pub fn fd_optimal_classical_value(d: usize) -> Result<f64> {
    let f = fd_functional(d)?;
    let strat = fd_optimal_classical_strategy(d)?;
    evaluate(&f, &behavior_of_deterministic(&f.scenario, &strat)?)
}
