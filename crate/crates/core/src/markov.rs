//! Weights (vertex and edge laws) of Markov measures on the free group,
//! tree pattern probabilities and the exact `F`/`f` formulas.
//!
//! A Markov measure is determined by its weight `W`: a vertex law `W(a)`
//! and, per generator `i`, an edge law `W(a, b; i)` giving the probability
//! that `x(g) = a` and `x(g s_i) = b`. On a connected subtree `D` of the
//! Cayley graph the pattern probability factorizes as
//!
//! ```text
//! μ(p) = Π_{edges (g, g s_i) ⊂ D} W(p(g), p(g s_i); i) · Π_{g ∈ D} W(p(g))^{1 - deg_D(g)}
//! ```

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::entropy::{EntropySum, EntropyValue, Prob};
use crate::error::{Error, Result};
use crate::free_group::{FreeGroup, GroupWord, Letter};
use crate::shift::{Alphabet, Pattern, PatternDistribution};

/// Tolerance for the Balanced and Normalized conditions on float weights.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Default cap on `|A|^{|D|}` for brute-force marginals.
pub const DEFAULT_PATTERN_CAP: u128 = 1 << 28;

/// Vertex and edge laws of a Markov measure.
#[derive(Clone, Debug, PartialEq)]
pub struct Weight<P = f64> {
    alphabet: Alphabet,
    rank: usize,
    vertex: Vec<P>,
    /// `edge[i][a][b] = W(a, b; i)`.
    edge: Vec<Vec<Vec<P>>>,
}

impl<P: Prob> Weight<P> {
    /// Validates the Balanced and Normalized conditions (exactly for
    /// rational scalars, within [`WEIGHT_TOLERANCE`] for floats).
    pub fn new(
        alphabet: Alphabet,
        rank: usize,
        vertex: Vec<P>,
        edge: Vec<Vec<Vec<P>>>,
    ) -> Result<Weight<P>> {
        let k = alphabet.len();
        if rank == 0 {
            return Err(Error::input("weight rank must be at least 1"));
        }
        if vertex.len() != k
            || edge.len() != rank
            || edge
                .iter()
                .any(|m| m.len() != k || m.iter().any(|r| r.len() != k))
        {
            return Err(Error::input(
                "weight tables do not match alphabet size and rank",
            ));
        }
        let in_unit =
            |p: &P| *p >= P::zero() && (*p <= P::one() || p.approx_eq(&P::one(), WEIGHT_TOLERANCE));
        for (a, p) in vertex.iter().enumerate() {
            if !in_unit(p) {
                return Err(Error::input(format!(
                    "vertex weight of {} is outside [0,1]",
                    alphabet.name(a as u32)
                )));
            }
        }
        let total = vertex.iter().fold(P::zero(), |s, p| s + p.clone());
        if !total.approx_eq(&P::one(), WEIGHT_TOLERANCE) {
            return Err(Error::input(format!(
                "vertex weights sum to {} (not Normalized)",
                total.to_f64()
            )));
        }
        for (i, m) in edge.iter().enumerate() {
            for a in 0..k {
                let mut out = P::zero();
                let mut inc = P::zero();
                for b in 0..k {
                    if !in_unit(&m[a][b]) {
                        return Err(Error::input(format!(
                            "edge weight ({a},{b};{}) is outside [0,1]",
                            i + 1
                        )));
                    }
                    out = out + m[a][b].clone();
                    inc = inc + m[b][a].clone();
                    if vertex[a].is_zero() && (!m[a][b].is_zero() || !m[b][a].is_zero()) {
                        return Err(Error::input(format!(
                            "symbol {} has zero vertex weight but a nonzero edge on generator {}",
                            alphabet.name(a as u32),
                            i + 1
                        )));
                    }
                }
                if !out.approx_eq(&vertex[a], WEIGHT_TOLERANCE)
                    || !inc.approx_eq(&vertex[a], WEIGHT_TOLERANCE)
                {
                    return Err(Error::input(format!(
                        "not Balanced at symbol {} on generator {}: out {} / in {} / vertex {}",
                        alphabet.name(a as u32),
                        i + 1,
                        out.to_f64(),
                        inc.to_f64(),
                        vertex[a].to_f64()
                    )));
                }
            }
        }
        Ok(Weight {
            alphabet,
            rank,
            vertex,
            edge,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn vertex(&self, a: u32) -> &P {
        &self.vertex[a as usize]
    }

    pub fn vertex_law(&self) -> &[P] {
        &self.vertex
    }

    /// `W(a, b; i)` with `i` 0-based.
    pub fn edge(&self, i: usize, a: u32, b: u32) -> &P {
        &self.edge[i][a as usize][b as usize]
    }

    pub fn edge_matrix(&self, i: usize) -> &[Vec<P>] {
        &self.edge[i]
    }

    /// Probability of `(x(g), x(g l)) = (a, b)` along the edge labeled `l`.
    pub fn edge_along(&self, l: Letter, a: u32, b: u32) -> &P {
        if l.is_inverse() {
            self.edge(l.generator(), b, a)
        } else {
            self.edge(l.generator(), a, b)
        }
    }

    pub fn to_float(&self) -> Weight<f64> {
        Weight {
            alphabet: self.alphabet.clone(),
            rank: self.rank,
            vertex: self.vertex.iter().map(Prob::to_f64).collect(),
            edge: self
                .edge
                .iter()
                .map(|m| {
                    m.iter()
                        .map(|r| r.iter().map(Prob::to_f64).collect())
                        .collect()
                })
                .collect(),
        }
    }

    /// Whether every entry positive here is allowed by `allowed(i, a, b)`.
    pub fn supported_by(&self, allowed: impl Fn(usize, u32, u32) -> bool) -> bool {
        (0..self.rank).all(|i| {
            (0..self.size()).all(|a| {
                (0..self.size())
                    .all(|b| self.edge[i][a][b].is_zero() || allowed(i, a as u32, b as u32))
            })
        })
    }
}

/// Bernoulli weight: vertex law `base`, edges `base(a) base(b)`.
pub fn bernoulli_weight<P: Prob>(
    alphabet: Alphabet,
    base: Vec<P>,
    rank: usize,
) -> Result<Weight<P>> {
    if base.iter().any(|p| *p < P::zero()) {
        return Err(Error::input("Bernoulli base has a negative probability"));
    }
    let m: Vec<Vec<P>> = base
        .iter()
        .map(|a| base.iter().map(|b| a.clone() * b.clone()).collect())
        .collect();
    Weight::new(alphabet, rank, base, vec![m; rank])
}

/// `d(W1, W2) = Σ_{i,a,b} |W1(a,b;i) - W2(a,b;i)|`.
pub fn weight_distance<P: Prob>(w1: &Weight<P>, w2: &Weight<P>) -> Result<P> {
    if w1.alphabet != w2.alphabet || w1.rank != w2.rank {
        return Err(Error::input(
            "weight distance needs equal alphabets and ranks",
        ));
    }
    let mut d = P::zero();
    for i in 0..w1.rank {
        for a in 0..w1.size() {
            for b in 0..w1.size() {
                d = d + w1.edge[i][a][b].abs_diff(&w2.edge[i][a][b]);
            }
        }
    }
    Ok(d)
}

/// Tree edges `(g, l)` with `g, g l` both in `domain`, each listed once
/// (from the shorter endpoint).
fn tree_edges(domain: &BTreeSet<&GroupWord>) -> Vec<(GroupWord, Letter, GroupWord)> {
    let mut edges = Vec::new();
    for g in domain {
        if let Some(parent) = g.parent() {
            if domain.contains(&parent) {
                let l = g.last().expect("non-identity word");
                edges.push((parent, l, (*g).clone()));
            }
        }
    }
    edges
}

/// Markov probability of a pattern on a connected subtree.
pub fn pattern_probability<P: Prob>(w: &Weight<P>, p: &Pattern<u32>) -> Result<P> {
    let domain: BTreeSet<&GroupWord> = p.domain().collect();
    if domain.is_empty() {
        return Ok(P::one());
    }
    for g in &domain {
        if g.max_generator().is_some_and(|i| i >= w.rank) {
            return Err(Error::input(format!(
                "{g} uses a generator beyond the weight's rank"
            )));
        }
    }
    let edges = tree_edges(&domain);
    if edges.len() + 1 != domain.len() {
        return Err(Error::input(
            "pattern domain is not connected in the Cayley tree",
        ));
    }
    let mut degree: BTreeMap<&GroupWord, i64> = domain.iter().map(|g| (*g, 0)).collect();
    let mut prob = P::one();
    for (g, l, h) in &edges {
        *degree.get_mut(g).unwrap() += 1;
        *degree.get_mut(h).unwrap() += 1;
        let e = w.edge_along(*l, *p.get(g).unwrap(), *p.get(h).unwrap());
        if e.is_zero() {
            return Ok(P::zero());
        }
        prob = prob * e.clone();
    }
    for (g, deg) in degree {
        let v = w.vertex(*p.get(g).unwrap()).clone();
        if v.is_zero() {
            return Ok(P::zero());
        }
        for _ in 0..(deg - 1).max(0) {
            prob = prob / v.clone();
        }
        if deg == 0 {
            prob = prob * v;
        }
    }
    Ok(prob)
}

/// A connected subtree arranged for the chain rule: every non-root cell
/// has an earlier parent and a transition table.
struct ChainPlan<P> {
    window: Vec<GroupWord>,
    /// `(parent position, transition index)` for positions `1..`.
    steps: Vec<(usize, usize)>,
    /// `transitions[t][a][b] = P(x(child) = b | x(parent) = a)`.
    transitions: Vec<Vec<Vec<P>>>,
    /// Per transition and parent symbol: allowed child symbols.
    allowed: Vec<Vec<Vec<u32>>>,
    vertex: Vec<P>,
    size: usize,
}

impl<P: Prob> ChainPlan<P> {
    /// `window` must contain `e` and be closed under dropping last letters.
    fn new(w: &Weight<P>, window: &[GroupWord], cap: u128) -> Result<ChainPlan<P>> {
        let mut window = window.to_vec();
        window.sort();
        window.dedup();
        if window.first().is_none_or(|g| !g.is_identity()) {
            return Err(Error::input("marginal window must contain the identity"));
        }
        let k = w.size();
        let total = (k as f64).powi(window.len() as i32);
        if total > cap as f64 {
            return Err(Error::resource(format!(
                "{k}^{} patterns exceed the pattern cap {cap}",
                window.len()
            )));
        }
        let mut transitions = Vec::new();
        let mut codes = Vec::new();
        let mut steps = Vec::new();
        for g in &window[1..] {
            let parent = g.parent().expect("non-identity");
            let pi = window
                .binary_search(&parent)
                .map_err(|_| Error::input(format!("marginal window is not a subtree at {g}")))?;
            let l = g.last().unwrap();
            if l.generator() >= w.rank {
                return Err(Error::input(format!(
                    "{g} uses a generator beyond the weight's rank"
                )));
            }
            let t = match codes.iter().position(|&c| c == l.code()) {
                Some(t) => t,
                None => {
                    let m: Vec<Vec<P>> = (0..k as u32)
                        .map(|a| {
                            (0..k as u32)
                                .map(|b| {
                                    let v = w.vertex(a);
                                    if v.is_zero() {
                                        P::zero()
                                    } else {
                                        w.edge_along(l, a, b).clone() / v.clone()
                                    }
                                })
                                .collect()
                        })
                        .collect();
                    codes.push(l.code());
                    transitions.push(m);
                    transitions.len() - 1
                }
            };
            steps.push((pi, t));
        }
        let allowed = transitions
            .iter()
            .map(|m| {
                m.iter()
                    .map(|row| {
                        (0..k as u32)
                            .filter(|&b| !row[b as usize].is_zero())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(ChainPlan {
            window,
            steps,
            transitions,
            allowed,
            vertex: w.vertex.clone(),
            size: k,
        })
    }

    fn fold<A: Send>(
        &self,
        pos: usize,
        cells: &mut Vec<u32>,
        prob: P,
        leaf: &(impl Fn(&[u32], &P) -> A + Sync),
        combine: &(impl Fn(A, A) -> A + Sync),
        empty: &(impl Fn() -> A + Sync),
    ) -> A {
        if pos == self.window.len() {
            return leaf(cells, &prob);
        }
        let (parent, t) = self.steps[pos - 1];
        let a = cells[parent] as usize;
        let mut acc = empty();
        for &b in &self.allowed[t][a] {
            cells[pos] = b;
            let p = prob.clone() * self.transitions[t][a][b as usize].clone();
            acc = combine(acc, self.fold(pos + 1, cells, p, leaf, combine, empty));
        }
        acc
    }

    /// Folds `leaf(pattern, probability)` over every positive-probability
    /// pattern. The top two levels run in parallel; results are combined in
    /// pattern order, so the outcome does not depend on the thread count.
    fn fold_all<A: Send>(
        &self,
        leaf: impl Fn(&[u32], &P) -> A + Sync,
        combine: impl Fn(A, A) -> A + Sync,
        empty: impl Fn() -> A + Sync,
    ) -> A {
        let n = self.window.len();
        let mut prefixes: Vec<(Vec<u32>, P)> = Vec::new();
        for a in 0..self.size as u32 {
            let v = self.vertex[a as usize].clone();
            if v.is_zero() {
                continue;
            }
            let mut cells = vec![0u32; n];
            cells[0] = a;
            if n > 1 {
                let (_, t) = self.steps[0];
                for &b in &self.allowed[t][a as usize] {
                    cells[1] = b;
                    prefixes.push((
                        cells.clone(),
                        v.clone() * self.transitions[t][a as usize][b as usize].clone(),
                    ));
                }
            } else {
                prefixes.push((cells, v));
            }
        }
        let start = n.min(2);
        let parts: Vec<A> = prefixes
            .into_par_iter()
            .map(|(mut cells, p)| self.fold(start, &mut cells, p, &leaf, &combine, &empty))
            .collect();
        parts.into_iter().fold(empty(), combine)
    }
}

/// Marginal of the Markov measure on a subtree window containing `e`.
pub fn marginal<P: Prob>(
    w: &Weight<P>,
    window: &[GroupWord],
    cap: u128,
) -> Result<PatternDistribution<u32, P>> {
    let plan = ChainPlan::new(w, window, cap)?;
    let probs: BTreeMap<Vec<u32>, P> = plan.fold_all(
        |cells, p| BTreeMap::from([(cells.to_vec(), p.clone())]),
        |mut a, b| {
            a.extend(b);
            a
        },
        BTreeMap::new,
    );
    PatternDistribution::new(plan.window.clone(), probs)
}

/// Shannon entropy of the marginal on a subtree window, streamed over patterns.
pub fn window_entropy<P: Prob>(w: &Weight<P>, window: &[GroupWord], cap: u128) -> Result<P::Log> {
    let plan = ChainPlan::new(w, window, cap)?;
    Ok(plan.fold_all(|_, p| p.neg_plogp(), |a, b| a + b, P::Log::zero))
}

/// Terms of `F = (1 - 2r) H(B_ρ) + Σ_i H(B_ρ ∪ s_i B_ρ)`.
#[derive(Clone, Debug)]
pub struct FBreakdown<L> {
    pub rho: usize,
    /// Entropy of the marginal on the ball `B(e, ρ)`.
    pub ball_entropy: L,
    /// Entropy of the marginal on `B(e, ρ) ∪ s_i B(e, ρ)`, per generator.
    pub edge_entropies: Vec<L>,
    pub value: L,
}

/// Window `B(e, ρ) ∪ s B(e, ρ)`.
pub fn edge_window(group: &FreeGroup, s: &GroupWord, rho: usize) -> Vec<GroupWord> {
    let ball = group.ball(rho);
    let mut w: BTreeSet<GroupWord> = ball.iter().cloned().collect();
    w.extend(ball.iter().map(|g| s.mul(g)));
    w.into_iter().collect()
}

/// `F_μ(φ^{B_ρ})` for the Markov measure of `w`, from brute-force marginals.
pub fn f_value<P: Prob>(w: &Weight<P>, rho: usize, cap: u128) -> Result<FBreakdown<P::Log>> {
    let group = FreeGroup::new(w.rank)?;
    let r = w.rank as i64;
    let ball_entropy = window_entropy(w, &group.ball(rho), cap)?;
    let mut value = ball_entropy.scale(1 - 2 * r);
    let mut edge_entropies = Vec::with_capacity(w.rank);
    for i in 0..w.rank {
        let h = window_entropy(w, &edge_window(&group, &GroupWord::generator(i), rho), cap)?;
        value = value + h.clone();
        edge_entropies.push(h);
    }
    Ok(FBreakdown {
        rho,
        ball_entropy,
        edge_entropies,
        value,
    })
}

/// `f` of a Markov measure, which equals `F` of the canonical observable.
pub fn f_markov<P: Prob>(w: &Weight<P>) -> Result<P::Log> {
    Ok(f_value(w, 0, DEFAULT_PATTERN_CAP)?.value)
}

/// Tolerance of [`constancy_check`].
pub const CONSTANCY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct ConstancyReport {
    /// `(ρ, F(W, ρ))` for `ρ = 0..=ρ_max`.
    pub values: Vec<(usize, f64)>,
    pub max_deviation: f64,
    pub passed: bool,
}

/// Checks `|F(W, ρ) - F(W, 0)| ≤ 1e-9` for `ρ ≤ rho_max`.
pub fn constancy_check<P: Prob>(
    w: &Weight<P>,
    rho_max: usize,
    cap: u128,
) -> Result<ConstancyReport> {
    let mut values = Vec::new();
    for rho in 0..=rho_max {
        values.push((rho, f_value(w, rho, cap)?.value.to_f64() + 0.0));
    }
    let f0 = values[0].1;
    let max_deviation = values
        .iter()
        .map(|(_, v)| (v - f0).abs())
        .fold(0.0, f64::max);
    Ok(ConstancyReport {
        values,
        max_deviation,
        passed: max_deviation <= CONSTANCY_TOLERANCE,
    })
}

/// Entropy value of `f` for reporting.
pub fn f_markov_value<P: Prob>(w: &Weight<P>) -> Result<EntropyValue> {
    Ok(EntropyValue::new(f_markov(w)?.to_f64()))
}

/// Recodes a shift-invariant distribution on `B(e, m+1)` as a weight over
/// the alphabet of `B(e, m)`-patterns. Super-symbols are the patterns in the
/// support of the `B(e, m)` marginal, named `g:symbol,...` in shortlex order.
pub fn markovize<P: Prob>(
    group: &FreeGroup,
    alphabet: &Alphabet,
    d: &PatternDistribution<u32, P>,
) -> Result<Weight<P>> {
    let m1 = d
        .window_radius(group)
        .ok_or_else(|| Error::input("markovize needs a distribution on a ball"))?;
    if m1 == 0 {
        return Err(Error::input("markovize needs a ball of radius at least 1"));
    }
    let m = m1 - 1;
    let ball = group.ball(m);
    let vertex_dist = d.project(&ball)?;
    let symbols: Vec<Vec<u32>> = vertex_dist.entries().map(|(k, _)| k.clone()).collect();
    let index: BTreeMap<&Vec<u32>, usize> =
        symbols.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let names: Vec<String> = symbols
        .iter()
        .map(|k| Pattern::from_values(&ball, k).key_string(|s| alphabet.name(*s).to_string()))
        .collect();
    let vertex: Vec<P> = symbols.iter().map(|k| vertex_dist.prob(k)).collect();
    let k = symbols.len();
    let mut edge = vec![vec![vec![P::zero(); k]; k]; group.rank()];
    for (i, mat) in edge.iter_mut().enumerate() {
        let s = GroupWord::generator(i);
        let window = edge_window(group, &s, m);
        let shifted: Vec<GroupWord> = ball.iter().map(|g| s.mul(g)).collect();
        let joint = d.project(&window)?;
        // shift invariance: the marginal seen from s_i agrees with the one at e
        let mut seen_from_s: BTreeMap<Vec<u32>, P> = BTreeMap::new();
        for (key, p) in joint.entries() {
            let pat = Pattern::from_values(joint.window(), key);
            let c = pat.values_on(&ball).unwrap();
            let c2 = pat.values_on(&shifted).unwrap();
            let e = seen_from_s.entry(c2.clone()).or_insert_with(P::zero);
            *e = e.clone() + p.clone();
            let (Some(&a), Some(&b)) = (index.get(&c), index.get(&c2)) else {
                return Err(Error::input("marginals are not shift-consistent"));
            };
            mat[a][b] = mat[a][b].clone() + p.clone();
        }
        let keys: BTreeSet<&Vec<u32>> = seen_from_s.keys().chain(symbols.iter()).collect();
        for key in keys {
            let lhs = seen_from_s.get(key).cloned().unwrap_or_else(P::zero);
            if !lhs.approx_eq(&vertex_dist.prob(key), WEIGHT_TOLERANCE) {
                return Err(Error::input(format!(
                    "marginals are not shift-consistent along generator {}",
                    i + 1
                )));
            }
        }
    }
    Weight::new(Alphabet::new(names)?, group.rank(), vertex, edge)
}

/// Random float weight: for each generator a mixture of the diagonal
/// coupling and the product coupling of a random vertex law, plus a
/// divergence-free rotation `δ (Π - Πᵀ)` along a cyclic permutation `Π`.
pub fn random_weight<R: Rng + ?Sized>(k: usize, rank: usize, rng: &mut R) -> Weight<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let pi: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let edge = (0..rank)
        .map(|_| {
            let alpha: f64 = rng.random_range(0.0..0.9);
            let mut m: Vec<Vec<f64>> = (0..k)
                .map(|a| {
                    (0..k)
                        .map(|b| {
                            (1.0 - alpha) * pi[a] * pi[b] + if a == b { alpha * pi[a] } else { 0.0 }
                        })
                        .collect()
                })
                .collect();
            if k >= 3 {
                let floor = (0..k)
                    .flat_map(|a| (0..k).filter(move |&b| b != a).map(move |b| (a, b)))
                    .map(|(a, b)| m[a][b])
                    .fold(f64::INFINITY, f64::min);
                let delta = rng.random_range(0.0..1.0) * floor;
                for a in 0..k {
                    m[a][(a + 1) % k] += delta;
                    m[(a + 1) % k][a] -= delta;
                }
            }
            m
        })
        .collect();
    Weight::new(Alphabet::numbered(k), rank, pi, edge).expect("construction is balanced")
}

fn prob_to_json<P: Prob>(p: &P) -> Value {
    if let Some(q) = p.to_rational() {
        json!({"num": q.numer().to_string(), "den": q.denom().to_string()})
    } else {
        json!(p.to_f64())
    }
}

/// A weight loaded from JSON: exact when every value is a rational object
/// `{"num", "den"}` or an integer, floating point otherwise.
#[derive(Clone, Debug)]
pub enum AnyWeight {
    Float(Weight<f64>),
    Exact(Weight<BigRational>),
}

impl AnyWeight {
    pub fn from_json(v: &Value) -> Result<AnyWeight> {
        if all_values_exact(v) {
            Ok(AnyWeight::Exact(weight_from_json(v, parse_exact)?))
        } else {
            Ok(AnyWeight::Float(weight_from_json(v, parse_float)?))
        }
    }

    pub fn to_float(&self) -> Weight<f64> {
        match self {
            AnyWeight::Float(w) => w.clone(),
            AnyWeight::Exact(w) => w.to_float(),
        }
    }
}

fn value_fields(v: &Value) -> Vec<&Value> {
    let mut out: Vec<&Value> = Vec::new();
    if let Some(m) = v.get("vertex").and_then(Value::as_object) {
        out.extend(m.values());
    }
    if let Some(es) = v.get("edge").and_then(Value::as_array) {
        out.extend(es.iter().filter_map(|e| e.get("p")));
    }
    out
}

fn all_values_exact(v: &Value) -> bool {
    value_fields(v)
        .iter()
        .all(|x| x.is_object() || x.is_i64() || x.is_u64())
}

fn parse_bigint(v: &Value) -> Result<BigInt> {
    match v {
        Value::String(s) => s
            .parse()
            .map_err(|_| Error::input(format!("bad integer {s:?}"))),
        Value::Number(n) if n.is_i64() || n.is_u64() => Ok(n.to_string().parse().unwrap()),
        _ => Err(Error::input(
            "rational parts must be integers or integer strings",
        )),
    }
}

fn parse_exact(v: &Value) -> Result<BigRational> {
    if let Some(o) = v.as_object() {
        let num = parse_bigint(
            o.get("num")
                .ok_or_else(|| Error::input("rational needs num"))?,
        )?;
        let den = parse_bigint(
            o.get("den")
                .ok_or_else(|| Error::input("rational needs den"))?,
        )?;
        if den.is_zero() || den.is_negative() {
            return Err(Error::input("rational denominator must be positive"));
        }
        Ok(BigRational::new(num, den))
    } else {
        Ok(BigRational::from_integer(parse_bigint(v)?))
    }
}

fn parse_float(v: &Value) -> Result<f64> {
    if v.is_object() {
        return Ok(Prob::to_f64(&parse_exact(v)?));
    }
    v.as_f64()
        .ok_or_else(|| Error::input("probabilities must be numbers"))
}

fn weight_from_json<P: Prob>(v: &Value, parse: impl Fn(&Value) -> Result<P>) -> Result<Weight<P>> {
    let rank =
        v.get("rank")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::input("weight needs a positive integer rank"))? as usize;
    let names: Vec<String> = v
        .get("alphabet")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::input("weight needs an alphabet list"))?
        .iter()
        .map(|s| {
            s.as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::input("alphabet names must be strings"))
        })
        .collect::<Result<_>>()?;
    let alphabet = Alphabet::new(names)?;
    let k = alphabet.len();
    let mut vertex = vec![P::zero(); k];
    for (name, p) in v
        .get("vertex")
        .and_then(Value::as_object)
        .ok_or_else(|| Error::input("weight needs a vertex object"))?
    {
        vertex[alphabet.index_of(name)? as usize] = parse(p)?;
    }
    let mut edge = vec![vec![vec![P::zero(); k]; k]; rank];
    for e in v
        .get("edge")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::input("weight needs an edge list"))?
    {
        let field = |f: &str| {
            e.get(f)
                .ok_or_else(|| Error::input(format!("edge entry needs {f}")))
        };
        let from = alphabet.index_of(field("from")?.as_str().unwrap_or(""))? as usize;
        let to = alphabet.index_of(field("to")?.as_str().unwrap_or(""))? as usize;
        let gen = field("gen")?.as_u64().unwrap_or(0) as usize;
        if gen == 0 || gen > rank {
            return Err(Error::input(format!(
                "edge generator index must be in 1..={rank}"
            )));
        }
        edge[gen - 1][from][to] = parse(field("p")?)?;
    }
    Weight::new(alphabet, rank, vertex, edge)
}

impl<P: Prob> Weight<P> {
    /// `{"rank", "alphabet", "vertex": {name: p}, "edge": [{"from", "to", "gen", "p"}]}`;
    /// generators are 1-based, zero edges are omitted.
    pub fn to_json(&self) -> Value {
        let vertex: Map<String, Value> = self
            .alphabet
            .names()
            .iter()
            .zip(&self.vertex)
            .map(|(n, p)| (n.clone(), prob_to_json(p)))
            .collect();
        let mut edges = Vec::new();
        for i in 0..self.rank {
            for a in 0..self.size() {
                for b in 0..self.size() {
                    let p = &self.edge[i][a][b];
                    if !p.is_zero() {
                        edges.push(json!({
                            "from": self.alphabet.name(a as u32),
                            "to": self.alphabet.name(b as u32),
                            "gen": i + 1,
                            "p": prob_to_json(p),
                        }));
                    }
                }
            }
        }
        json!({"rank": self.rank, "alphabet": self.alphabet.names(), "vertex": vertex, "edge": edges})
    }
}

impl Weight<f64> {
    pub fn from_json(v: &Value) -> Result<Weight<f64>> {
        weight_from_json(v, parse_float)
    }
}

impl Weight<BigRational> {
    pub fn from_json_exact(v: &Value) -> Result<Weight<BigRational>> {
        weight_from_json(v, parse_exact)
    }

    /// Least common multiple of all denominators.
    pub fn common_denominator(&self) -> BigInt {
        use num_integer::Integer;
        let mut l = BigInt::one();
        for p in self
            .vertex
            .iter()
            .chain(self.edge.iter().flatten().flatten())
        {
            l = l.lcm(p.denom());
        }
        l
    }
}
