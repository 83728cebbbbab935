//! The classical polytope: vertex enumeration, hull membership, functional
//! maximization and facet checks.

use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::games::LinearFunctional;
use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation, SimplexOptions};
use crate::scenario::{behavior_of_deterministic, Behavior, DeterministicStrategy, Scenario};

pub const DEFAULT_CAP: u128 = 10_000_000;
const RANK_TOL: f64 = 1e-9;
const VALID_TOL: f64 = 1e-9;

/// Deduplicated deterministic behaviors together with one strategy realizing each.
#[derive(Clone, Debug)]
pub struct VertexSet {
    pub scenario: Scenario,
    pub vertices: Vec<Behavior>,
    pub strategies: Vec<DeterministicStrategy>,
    pub raw_count: u128,
}

/// `d^{n_x} · n_b^{d·n_y}`, saturating.
pub fn raw_strategy_count(s: &Scenario) -> u128 {
    let enc = (s.d as u128).checked_pow(s.n_x as u32);
    let dec = (s.n_b as u128).checked_pow((s.d * s.n_y) as u32);
    match (enc, dec) {
        (Some(a), Some(b)) => a.saturating_mul(b),
        _ => u128::MAX,
    }
}

fn digits(mut idx: u128, radix: usize, len: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push((idx % radix as u128) as usize);
        idx /= radix as u128;
    }
    out
}

pub fn enumerate_vertices(s: &Scenario) -> Result<VertexSet> {
    enumerate_vertices_with_cap(s, DEFAULT_CAP)
}

/// Enumerates every deterministic strategy, encoders in lexicographic order
/// (first input least significant), and keeps the first strategy reaching
/// each distinct behavior.
pub fn enumerate_vertices_with_cap(s: &Scenario, cap: u128) -> Result<VertexSet> {
    let raw = raw_strategy_count(s);
    if raw > cap {
        return Err(Error::CapExceeded { requested: raw, cap });
    }
    let n_enc = (s.d as u128).pow(s.n_x as u32);
    let n_dec = (s.n_b as u128).pow((s.d * s.n_y) as u32);
    let per_encoder: Vec<Vec<(Vec<u8>, DeterministicStrategy)>> = (0..n_enc)
        .into_par_iter()
        .map(|e| {
            let encoder = digits(e, s.d, s.n_x);
            let mut seen = HashSet::new();
            let mut out = Vec::new();
            for k in 0..n_dec {
                let flat = digits(k, s.n_b, s.d * s.n_y);
                let decoders: Vec<Vec<usize>> = flat.chunks(s.d).map(<[usize]>::to_vec).collect();
                let key: Vec<u8> = (0..s.n_x)
                    .flat_map(|x| (0..s.n_y).map(move |y| (x, y)))
                    .map(|(x, y)| decoders[y][encoder[x]] as u8)
                    .collect();
                if seen.insert(key.clone()) {
                    out.push((key, DeterministicStrategy { encoder: encoder.clone(), decoders }));
                }
            }
            out
        })
        .collect();
    let mut seen = HashSet::new();
    let mut vertices = Vec::new();
    let mut strategies = Vec::new();
    for (key, strat) in per_encoder.into_iter().flatten() {
        if seen.insert(key) {
            vertices.push(behavior_of_deterministic(s, &strat)?);
            strategies.push(strat);
        }
    }
    Ok(VertexSet { scenario: *s, vertices, strategies, raw_count: raw })
}

impl VertexSet {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// One row per vertex: `index,p(0|0,0),...` in the dense `[b][x][y]` order.
    pub fn to_csv(&self) -> String {
        let s = self.scenario;
        let mut out = String::from("vertex");
        for b in 0..s.n_b {
            for x in 0..s.n_x {
                for y in 0..s.n_y {
                    let _ = write!(out, ",p({b}|{x}.{y})");
                }
            }
        }
        out.push('\n');
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = write!(out, "{i}");
            for p in v.probs() {
                let _ = write!(out, ",{}", *p as u8);
            }
            out.push('\n');
        }
        out
    }
}

/// Outcome of a hull-membership test.
#[derive(Clone, Debug, Serialize)]
pub struct Membership {
    pub feasible: bool,
    /// Convex weights over the candidate columns (all vertices, or the
    /// generated columns for [`membership_generated`]).
    pub weights: Vec<f64>,
    /// Strategies with positive weight.
    pub support: Vec<(f64, DeterministicStrategy)>,
    /// Separating functional `h` with `h·q > hyperplane_bound` when infeasible.
    pub hyperplane: Option<Vec<f64>>,
    /// Maximum of `h·v` over all classical vertices.
    pub hyperplane_bound: f64,
    /// `h·q` for the tested behavior.
    pub hyperplane_value: f64,
    /// Max-abs deviation of `Σ μ_v v` from `q` when feasible.
    pub residual: f64,
    pub columns: usize,
}

impl Membership {
    pub fn separation_gap(&self) -> f64 {
        self.hyperplane_value - self.hyperplane_bound
    }
}

enum Restricted {
    Feasible(Vec<f64>),
    Separated(Vec<f64>),
}

fn restricted_membership(q: &Behavior, columns: &[&[f64]], opts: &SimplexOptions) -> Result<Restricted> {
    let n = q.probs().len();
    let mut lp = LinearProgram::new(vec![0.0; columns.len()]);
    for k in 0..n {
        lp.add(columns.iter().map(|c| c[k]).collect(), Relation::Eq, q.probs()[k]);
    }
    lp.add(vec![1.0; columns.len()], Relation::Eq, 1.0);
    let r = solve_lp(&lp, opts)?;
    match r.status {
        LpStatus::Optimal => Ok(Restricted::Feasible(r.primal)),
        LpStatus::Infeasible => Ok(Restricted::Separated(r.certificate[..n].to_vec())),
        LpStatus::Unbounded => Err(Error::Infeasible("membership LP reported unbounded".into())),
    }
}

fn reconstruct(n: usize, columns: &[&[f64]], weights: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; n];
    for (c, w) in columns.iter().zip(weights) {
        for (a, v) in acc.iter_mut().zip(c.iter()) {
            *a += w * v;
        }
    }
    acc
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_scenario(expected: Scenario, got: Scenario) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch(format!("behavior on {got}, expected {expected}")));
    }
    Ok(())
}

/// Decides `q ∈ conv(vs)` by a feasibility LP over all vertices.
pub fn membership(vs: &VertexSet, q: &Behavior) -> Result<Membership> {
    membership_with(vs, q, &SimplexOptions::default())
}

pub fn membership_with(vs: &VertexSet, q: &Behavior, opts: &SimplexOptions) -> Result<Membership> {
    check_scenario(vs.scenario, q.scenario())?;
    let columns: Vec<&[f64]> = vs.vertices.iter().map(Behavior::probs).collect();
    match restricted_membership(q, &columns, opts)? {
        Restricted::Feasible(weights) => {
            let rec = reconstruct(q.probs().len(), &columns, &weights);
            let residual = rec.iter().zip(q.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let support = weights
                .iter()
                .zip(&vs.strategies)
                .filter(|(w, _)| **w > 0.0)
                .map(|(w, st)| (*w, st.clone()))
                .collect();
            Ok(Membership {
                feasible: true,
                weights,
                support,
                hyperplane: None,
                hyperplane_bound: 0.0,
                hyperplane_value: 0.0,
                residual,
                columns: columns.len(),
            })
        }
        Restricted::Separated(h) => {
            let bound = columns.iter().map(|c| dot(&h, c)).fold(f64::NEG_INFINITY, f64::max);
            let value = dot(&h, q.probs());
            Ok(Membership {
                feasible: false,
                weights: vec![],
                support: vec![],
                hyperplane: Some(h),
                hyperplane_bound: bound,
                hyperplane_value: value,
                residual: f64::NAN,
                columns: columns.len(),
            })
        }
    }
}

/// Maximizes `h·p` over all deterministic behaviors without enumerating them.
///
/// Encoders are visited as set partitions of the inputs into at most `d`
/// blocks (message labels are interchangeable); for each block and each `y`
/// the best output is chosen independently. Ties keep the first candidate.
pub fn best_deterministic_response(s: &Scenario, h: &[f64]) -> (f64, DeterministicStrategy) {
    ranked_deterministic_responses(s, h, 1).swap_remove(0)
}

/// The `k` best encoder partitions for `h`, each with its optimal decoders,
/// in decreasing order of `h·p`.
pub fn ranked_deterministic_responses(s: &Scenario, h: &[f64], k: usize) -> Vec<(f64, DeterministicStrategy)> {
    let k = k.max(1);
    let mut top: Vec<(f64, DeterministicStrategy)> = Vec::with_capacity(k + 1);
    let mut rgs = vec![0usize; s.n_x];
    loop {
        let blocks = rgs.iter().max().map_or(0, |m| m + 1);
        let mut value = 0.0;
        let mut decoders = vec![vec![0usize; s.d]; s.n_y];
        for (y, dec) in decoders.iter_mut().enumerate() {
            for (m, slot) in dec.iter_mut().enumerate().take(blocks) {
                let mut best = (f64::NEG_INFINITY, 0);
                for b in 0..s.n_b {
                    let v: f64 = (0..s.n_x).filter(|&x| rgs[x] == m).map(|x| h[s.index(b, x, y)]).sum();
                    if v > best.0 {
                        best = (v, b);
                    }
                }
                *slot = best.1;
                value += best.0;
            }
        }
        if top.len() < k || value > top[top.len() - 1].0 {
            let at = top.partition_point(|(v, _)| *v >= value);
            top.insert(at, (value, DeterministicStrategy { encoder: rgs.clone(), decoders }));
            top.truncate(k);
        }
        // next restricted-growth string with at most d blocks
        let mut i = s.n_x;
        loop {
            if i <= 1 {
                return top;
            }
            i -= 1;
            let prefix_max = rgs[..i].iter().copied().max().unwrap_or(0);
            if rgs[i] <= prefix_max && rgs[i] + 1 < s.d {
                rgs[i] += 1;
                for r in &mut rgs[i + 1..] {
                    *r = 0;
                }
                break;
            }
        }
    }
}

/// Columns priced in per round of [`membership_generated`].
const COLUMNS_PER_ROUND: usize = 16;

/// Hull membership by column generation, for scenarios too large to enumerate.
///
/// Solves `min ‖q − Σ μ_v v‖₁` over a growing set of deterministic columns.
/// The duals `h` (bounded by one in each entry) price new columns through
/// [`ranked_deterministic_responses`]; once nothing prices in, the distance
/// is exact over the whole polytope and, when positive, `h` separates `q`
/// with gap at least that distance.
pub fn membership_generated(q: &Behavior, opts: &SimplexOptions, max_columns: usize) -> Result<Membership> {
    let s = q.scenario();
    let n = q.probs().len();
    let mut strategies: Vec<DeterministicStrategy> =
        ranked_deterministic_responses(&s, q.probs(), COLUMNS_PER_ROUND).into_iter().map(|(_, st)| st).collect();
    let mut cols: Vec<Vec<f64>> = strategies
        .iter()
        .map(|st| behavior_of_deterministic(&s, st).map(|b| b.probs().to_vec()))
        .collect::<Result<_>>()?;
    loop {
        let k = cols.len();
        let mut objective = vec![0.0; k];
        objective.extend(std::iter::repeat_n(-1.0, 2 * n));
        let mut lp = LinearProgram::new(objective);
        for r in 0..n {
            let mut row: Vec<f64> = cols.iter().map(|c| c[r]).collect();
            row.resize(k + 2 * n, 0.0);
            row[k + r] = 1.0;
            row[k + n + r] = -1.0;
            lp.add(row, Relation::Eq, q.probs()[r]);
        }
        let mut norm = vec![1.0; k];
        norm.resize(k + 2 * n, 0.0);
        lp.add(norm, Relation::Eq, 1.0);
        let sol = solve_lp(&lp, opts)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Infeasible(format!("distance LP ended as {:?}", sol.status)));
        }
        let distance = -sol.objective;
        let h: Vec<f64> = sol.certificate[..n].iter().map(|y| -y).collect();
        let level = sol.certificate[n];
        let ranked = ranked_deterministic_responses(&s, &h, COLUMNS_PER_ROUND);
        let bound = ranked[0].0;
        let fresh: Vec<DeterministicStrategy> = ranked
            .into_iter()
            .filter(|(v, st)| *v > level + 1e-10 && !strategies.contains(st))
            .map(|(_, st)| st)
            .collect();
        if fresh.is_empty() {
            if distance > opts.feasibility_tol {
                return Ok(Membership {
                    feasible: false,
                    weights: vec![],
                    support: vec![],
                    hyperplane_value: dot(&h, q.probs()),
                    hyperplane: Some(h),
                    hyperplane_bound: bound,
                    residual: f64::NAN,
                    columns: k,
                });
            }
            let weights = sol.primal[..k].to_vec();
            let columns: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            let rec = reconstruct(n, &columns, &weights);
            let residual = rec.iter().zip(q.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let support = weights
                .iter()
                .zip(&strategies)
                .filter(|(w, _)| **w > 0.0)
                .map(|(w, st)| (*w, st.clone()))
                .collect();
            return Ok(Membership {
                feasible: true,
                weights,
                support,
                hyperplane: None,
                hyperplane_bound: 0.0,
                hyperplane_value: 0.0,
                residual,
                columns: k,
            });
        }
        if k >= max_columns {
            return Err(Error::LpStall(k));
        }
        for st in fresh {
            cols.push(behavior_of_deterministic(&s, &st)?.probs().to_vec());
            strategies.push(st);
        }
    }
}

/// Vertex enumeration is used below this many raw strategies.
pub const ENUMERATION_LIMIT: u128 = 200_000;

/// Classical hull membership, enumerating vertices when that is cheap.
pub fn classical_membership(q: &Behavior) -> Result<Membership> {
    match enumerate_vertices_with_cap(&q.scenario(), ENUMERATION_LIMIT) {
        Ok(vs) => membership(&vs, q),
        Err(Error::CapExceeded { .. }) => membership_generated(q, &SimplexOptions::default(), 100_000),
        Err(e) => Err(e),
    }
}

/// Exact maximum of `f` over the vertex set, first maximizer on ties.
pub fn max_functional_classical(vs: &VertexSet, f: &LinearFunctional) -> Result<(f64, usize)> {
    check_scenario(vs.scenario, f.scenario)?;
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, v) in vs.vertices.iter().enumerate() {
        let val = f.dot(v.probs());
        if val > best.0 {
            best = (val, i);
        }
    }
    Ok(best)
}

/// Dimension of the affine hull of `points`.
pub fn affine_rank(points: &[&[f64]]) -> usize {
    let Some((first, rest)) = points.split_first() else { return 0 };
    let mut rows: Vec<Vec<f64>> =
        rest.iter().map(|p| p.iter().zip(first.iter()).map(|(a, b)| a - b).collect()).collect();
    let cols = first.len();
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows.len() {
            break;
        }
        let (piv, mag) = (rank..rows.len())
            .map(|r| (r, rows[r][c].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty range");
        if mag <= RANK_TOL {
            continue;
        }
        rows.swap(rank, piv);
        let pivot_row = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            let f = row[c] / pivot_row[c];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row).skip(c) {
                    *v -= f * p;
                }
            }
        }
        rank += 1;
    }
    rank
}

#[derive(Clone, Debug, Serialize)]
pub struct FacetReport {
    pub is_valid: bool,
    pub is_facet: bool,
    pub saturating_count: usize,
    /// Affine dimension spanned by the saturating vertices.
    pub affine_rank: usize,
    pub polytope_dim: usize,
    pub max_value: f64,
}

/// Checks `f·p ≤ bound` on all vertices and whether the saturated face has
/// dimension one less than the polytope.
pub fn verify_facet(vs: &VertexSet, f: &LinearFunctional, bound: f64) -> Result<FacetReport> {
    let (max_value, _) = max_functional_classical(vs, f)?;
    let all: Vec<&[f64]> = vs.vertices.iter().map(Behavior::probs).collect();
    let polytope_dim = affine_rank(&all);
    let saturating: Vec<&[f64]> =
        all.iter().copied().filter(|v| (f.dot(v) - bound).abs() <= VALID_TOL).collect();
    let is_valid = max_value <= bound + VALID_TOL;
    let rank = affine_rank(&saturating);
    Ok(FacetReport {
        is_valid,
        is_facet: is_valid && !saturating.is_empty() && rank + 1 == polytope_dim,
        saturating_count: saturating.len(),
        affine_rank: rank,
        polytope_dim,
        max_value,
    })
}
