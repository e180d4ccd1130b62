//! Patterns on finite windows of the free group, the left shift, pullback
//! names of microstates, empirical distributions and block codes.
//!
//! The shift acts by `(g x)(f) = x(g^{-1} f)`. For a finite action `σ` and a
//! labeling `x: [n] → A`, the pullback name at `v` is the periodic point
//! `x^σ_v(g) = x(σ(g)^{-1} v)`; it satisfies `x^σ_{σ(g) v} = g · x^σ_v`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Debug;
use std::hash::Hash;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::action::FiniteAction;
use crate::entropy::Prob;
use crate::error::{Error, Result};
use crate::free_group::{BallIndex, FreeGroup, GroupWord};

/// Anything usable as a symbol of a shift space.
pub trait Symbol: Clone + Ord + Hash + Debug + Send + Sync {}

impl<T: Clone + Ord + Hash + Debug + Send + Sync> Symbol for T {}

/// Named finite alphabet; symbols are referred to by index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet {
    names: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>, I: IntoIterator<Item = S>>(names: I) -> Result<Alphabet> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::input("alphabet must be nonempty"));
        }
        let distinct: BTreeSet<&String> = names.iter().collect();
        if distinct.len() != names.len() {
            return Err(Error::input("alphabet names must be distinct"));
        }
        Ok(Alphabet { names })
    }

    /// Symbols `"0", "1", ..., "k-1"`.
    pub fn numbered(k: usize) -> Alphabet {
        Alphabet::new((0..k).map(|i| i.to_string())).expect("numbered names are distinct")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: u32) -> &str {
        &self.names[i as usize]
    }

    pub fn index_of(&self, name: &str) -> Result<u32> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| i as u32)
            .ok_or_else(|| Error::input(format!("unknown symbol {name:?}")))
    }
}

/// A map from a finite set of group elements to symbols.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern<T> {
    cells: BTreeMap<GroupWord, T>,
}

impl<T: Symbol> Pattern<T> {
    pub fn new(cells: BTreeMap<GroupWord, T>) -> Pattern<T> {
        Pattern { cells }
    }

    pub fn from_pairs<I: IntoIterator<Item = (GroupWord, T)>>(pairs: I) -> Pattern<T> {
        Pattern {
            cells: pairs.into_iter().collect(),
        }
    }

    pub fn constant(domain: &[GroupWord], symbol: T) -> Pattern<T> {
        Pattern::from_pairs(domain.iter().map(|g| (g.clone(), symbol.clone())))
    }

    /// Pattern on `window` with the given values (aligned with `window`).
    pub fn from_values(window: &[GroupWord], values: &[T]) -> Pattern<T> {
        debug_assert_eq!(window.len(), values.len());
        Pattern::from_pairs(window.iter().cloned().zip(values.iter().cloned()))
    }

    pub fn get(&self, g: &GroupWord) -> Option<&T> {
        self.cells.get(g)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn domain(&self) -> impl Iterator<Item = &GroupWord> {
        self.cells.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupWord, &T)> {
        self.cells.iter()
    }

    pub fn contains(&self, g: &GroupWord) -> bool {
        self.cells.contains_key(g)
    }

    /// Left shift: the result has domain `g · D` and `(g p)(f) = p(g^{-1} f)`.
    pub fn shift(&self, g: &GroupWord) -> Pattern<T> {
        Pattern::from_pairs(self.cells.iter().map(|(d, s)| (g.mul(d), s.clone())))
    }

    /// Restriction to the part of `window` inside the domain.
    pub fn restrict(&self, window: &[GroupWord]) -> Pattern<T> {
        Pattern::from_pairs(
            window
                .iter()
                .filter_map(|g| self.cells.get(g).map(|s| (g.clone(), s.clone()))),
        )
    }

    /// Values on `window` in window order, if the domain covers it.
    pub fn values_on(&self, window: &[GroupWord]) -> Option<Vec<T>> {
        window.iter().map(|g| self.cells.get(g).cloned()).collect()
    }

    /// Whether the two patterns agree wherever both are defined.
    pub fn agrees_with(&self, other: &Pattern<T>) -> bool {
        self.cells
            .iter()
            .all(|(g, s)| other.cells.get(g).is_none_or(|t| t == s))
    }

    /// Number of cells shared with `other`.
    pub fn overlap(&self, other: &Pattern<T>) -> usize {
        self.cells
            .keys()
            .filter(|g| other.cells.contains_key(g))
            .count()
    }

    pub fn map<U: Symbol>(&self, f: impl Fn(&T) -> U) -> Pattern<U> {
        Pattern::from_pairs(self.cells.iter().map(|(g, s)| (g.clone(), f(s))))
    }

    /// Shortlex-ordered `g:symbol` serialization, e.g. `e:0,a:1,A:0`.
    pub fn key_string(&self, name: impl Fn(&T) -> String) -> String {
        self.cells
            .iter()
            .map(|(g, s)| format!("{g}:{}", name(s)))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Pullback name `x^σ_v` restricted to the ball of radius `radius`.
pub fn pullback_name<T: Symbol>(
    group: &FreeGroup,
    sigma: &FiniteAction,
    x: &[T],
    v: usize,
    radius: usize,
) -> Pattern<T> {
    pullback_on(sigma, x, v, &group.ball(radius))
}

/// Pullback name `x^σ_v` restricted to an arbitrary window.
pub fn pullback_on<T: Symbol>(
    sigma: &FiniteAction,
    x: &[T],
    v: usize,
    window: &[GroupWord],
) -> Pattern<T> {
    Pattern::from_pairs(
        window
            .iter()
            .map(|g| (g.clone(), x[sigma.act_inverse(g, v)].clone())),
    )
}

/// Probability distribution over patterns on a fixed window. Keys list the
/// symbols in window order (window sorted shortlex).
#[derive(Clone, Debug, PartialEq)]
pub struct PatternDistribution<T, P = f64> {
    window: Vec<GroupWord>,
    probs: BTreeMap<Vec<T>, P>,
}

/// Tolerance on the total mass of floating-point distributions.
pub const MASS_TOLERANCE: f64 = 1e-12;

impl<T: Symbol, P: Prob> PatternDistribution<T, P> {
    /// Validates nonnegativity, key shape and total mass (exact for rationals).
    pub fn new(mut window: Vec<GroupWord>, probs: BTreeMap<Vec<T>, P>) -> Result<Self> {
        let sorted = {
            let mut w = window.clone();
            w.sort();
            w.dedup();
            w
        };
        if sorted.len() != window.len() {
            return Err(Error::input("window has repeated elements"));
        }
        if sorted != window {
            // re-key to shortlex order
            let perm: Vec<usize> = sorted
                .iter()
                .map(|g| window.iter().position(|h| h == g).unwrap())
                .collect();
            let mut rekeyed = BTreeMap::new();
            for (k, p) in probs {
                if k.len() != window.len() {
                    return Err(Error::input("pattern key does not match window size"));
                }
                rekeyed.insert(perm.iter().map(|&i| k[i].clone()).collect::<Vec<T>>(), p);
            }
            return PatternDistribution::new(sorted, rekeyed);
        }
        window = sorted;
        let mut total = P::zero();
        for (k, p) in &probs {
            if k.len() != window.len() {
                return Err(Error::input("pattern key does not match window size"));
            }
            if *p < P::zero() {
                return Err(Error::input("negative probability"));
            }
            total = total + p.clone();
        }
        if !total.approx_eq(&P::one(), MASS_TOLERANCE) {
            return Err(Error::input(format!(
                "probabilities sum to {} instead of 1",
                total.to_f64()
            )));
        }
        let probs = probs.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        Ok(PatternDistribution { window, probs })
    }

    pub fn window(&self) -> &[GroupWord] {
        &self.window
    }

    /// Radius of the window if it is exactly a ball of `group`.
    pub fn window_radius(&self, group: &FreeGroup) -> Option<usize> {
        let m = self.window.iter().map(|g| g.len()).max().unwrap_or(0);
        (self.window == group.ball(m)).then_some(m)
    }

    /// Nonzero entries.
    pub fn entries(&self) -> impl Iterator<Item = (&Vec<T>, &P)> {
        self.probs.iter()
    }

    pub fn prob(&self, key: &[T]) -> P {
        self.probs.get(key).cloned().unwrap_or_else(P::zero)
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    /// Marginal on a sub-window.
    pub fn project(&self, sub: &[GroupWord]) -> Result<PatternDistribution<T, P>> {
        let mut sub: Vec<GroupWord> = sub.to_vec();
        sub.sort();
        sub.dedup();
        let idx: Vec<usize> = sub
            .iter()
            .map(|g| {
                self.window
                    .iter()
                    .position(|h| h == g)
                    .ok_or_else(|| Error::input(format!("{g} is not in the window")))
            })
            .collect::<Result<_>>()?;
        let mut probs: BTreeMap<Vec<T>, P> = BTreeMap::new();
        for (k, p) in &self.probs {
            let key: Vec<T> = idx.iter().map(|&i| k[i].clone()).collect();
            let e = probs.entry(key).or_insert_with(P::zero);
            *e = e.clone() + p.clone();
        }
        Ok(PatternDistribution { window: sub, probs })
    }

    pub fn to_float(&self) -> PatternDistribution<T, f64> {
        PatternDistribution {
            window: self.window.clone(),
            probs: self
                .probs
                .iter()
                .map(|(k, p)| (k.clone(), p.to_f64()))
                .collect(),
        }
    }

    /// Entries as patterns.
    pub fn patterns(&self) -> impl Iterator<Item = (Pattern<T>, &P)> {
        self.probs
            .iter()
            .map(|(k, p)| (Pattern::from_values(&self.window, k), p))
    }
}

impl<T: Symbol> PatternDistribution<T, f64> {
    /// Distribution from integer counts over `n` samples.
    pub fn from_counts(
        window: Vec<GroupWord>,
        counts: &BTreeMap<Vec<T>, usize>,
        n: usize,
    ) -> Result<Self> {
        let probs = counts
            .iter()
            .map(|(k, &c)| (k.clone(), c as f64 / n as f64))
            .collect();
        PatternDistribution::new(window, probs)
    }
}

impl<T: Symbol> PatternDistribution<T, BigRational> {
    pub fn from_counts_exact(
        window: Vec<GroupWord>,
        counts: &BTreeMap<Vec<T>, usize>,
        n: usize,
    ) -> Result<Self> {
        let probs = counts
            .iter()
            .map(|(k, &c)| (k.clone(), BigRational::from_ratio(c as u64, n as u64)))
            .collect();
        PatternDistribution::new(window, probs)
    }
}

impl PatternDistribution<u32, f64> {
    /// `{"window_radius": m, "entries": [{"pattern": {"g-word": "symbol"}, "p": float}]}`.
    ///
    /// Windows that are not balls are written as `"window": ["g-word", ...]`.
    pub fn to_json(&self, group: &FreeGroup, alphabet: &Alphabet) -> Value {
        let entries: Vec<Value> = self
            .probs
            .iter()
            .map(|(k, p)| {
                let pattern: serde_json::Map<String, Value> = self
                    .window
                    .iter()
                    .zip(k)
                    .map(|(g, &s)| (g.to_string(), Value::String(alphabet.name(s).to_string())))
                    .collect();
                json!({"pattern": pattern, "p": p})
            })
            .collect();
        match self.window_radius(group) {
            Some(m) => json!({"window_radius": m, "entries": entries}),
            None => {
                json!({"window": self.window.iter().map(|g| g.to_string()).collect::<Vec<_>>(), "entries": entries})
            }
        }
    }

    pub fn from_json(v: &Value, group: &FreeGroup, alphabet: &Alphabet) -> Result<Self> {
        let window: Vec<GroupWord> = if let Some(m) = v.get("window_radius") {
            let m = m
                .as_u64()
                .ok_or_else(|| Error::input("window_radius must be a natural number"))?;
            group.ball(m as usize)
        } else if let Some(w) = v.get("window").and_then(Value::as_array) {
            w.iter()
                .map(|s| {
                    s.as_str()
                        .ok_or_else(|| Error::input("window entries must be word strings"))
                        .and_then(|s| group.parse(s))
                })
                .collect::<Result<_>>()?
        } else {
            return Err(Error::input(
                "pattern distribution needs window_radius or window",
            ));
        };
        let mut sorted = window.clone();
        sorted.sort();
        sorted.dedup();
        let entries = v
            .get("entries")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::input("pattern distribution needs entries"))?;
        let mut probs = BTreeMap::new();
        for e in entries {
            let pat = e
                .get("pattern")
                .and_then(Value::as_object)
                .ok_or_else(|| Error::input("entry needs a pattern object"))?;
            let mut cells = BTreeMap::new();
            for (g, s) in pat {
                let s = s
                    .as_str()
                    .ok_or_else(|| Error::input("symbols must be strings"))?;
                cells.insert(group.parse(g)?, alphabet.index_of(s)?);
            }
            let key = Pattern::new(cells)
                .values_on(&sorted)
                .filter(|k| k.len() == sorted.len())
                .ok_or_else(|| Error::input("entry pattern does not cover the window"))?;
            if key.len() != pat.len() {
                return Err(Error::input("entry pattern has cells outside the window"));
            }
            let p = e
                .get("p")
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::input("entry needs a numeric p"))?;
            *probs.entry(key).or_insert(0.0) += p;
        }
        PatternDistribution::new(sorted, probs)
    }
}

/// ℓ¹ distance between two distributions on the same window.
pub fn l1_distance<T: Symbol, P: Prob>(
    p: &PatternDistribution<T, P>,
    q: &PatternDistribution<T, P>,
) -> Result<P> {
    if p.window != q.window {
        return Err(Error::input(
            "l1 distance needs distributions on the same window",
        ));
    }
    let keys: BTreeSet<&Vec<T>> = p.probs.keys().chain(q.probs.keys()).collect();
    Ok(keys
        .into_iter()
        .fold(P::zero(), |acc, k| acc + p.prob(k).abs_diff(&q.prob(k))))
}

/// Pattern counts of the pullback names over `window`, one per vertex.
pub fn pullback_counts<T: Symbol>(
    sigma: &FiniteAction,
    x: &[T],
    window: &[GroupWord],
) -> BTreeMap<Vec<T>, usize> {
    let mut counts = BTreeMap::new();
    for v in 0..sigma.n() {
        let key: Vec<T> = window
            .iter()
            .map(|g| x[sigma.act_inverse(g, v)].clone())
            .collect();
        *counts.entry(key).or_insert(0) += 1;
    }
    counts
}

/// Empirical distribution `P^σ_x` projected to the ball of radius `radius`.
pub fn empirical_distribution<T: Symbol>(
    group: &FreeGroup,
    sigma: &FiniteAction,
    x: &[T],
    radius: usize,
) -> PatternDistribution<T, f64> {
    let window = group.ball(radius);
    let counts = pullback_counts(sigma, x, &window);
    PatternDistribution::from_counts(window, &counts, sigma.n())
        .expect("counts form a distribution")
}

/// Empirical distribution on an arbitrary window, with exact probabilities.
pub fn empirical_distribution_exact<T: Symbol>(
    sigma: &FiniteAction,
    x: &[T],
    window: &[GroupWord],
) -> PatternDistribution<T, BigRational> {
    let mut window = window.to_vec();
    window.sort();
    let counts = pullback_counts(sigma, x, &window);
    PatternDistribution::from_counts_exact(window, &counts, sigma.n())
        .expect("counts form a distribution")
}

/// `d^*_σ`: sum over generators of the ℓ¹ distance between the target edge
/// marginal on `{e, s_i}` and the empirical one. `targets[i]` lives on `{e, s_i}`.
pub fn d_star<T: Symbol>(
    targets: &[PatternDistribution<T, f64>],
    sigma: &FiniteAction,
    x: &[T],
) -> Result<f64> {
    if targets.len() != sigma.rank() {
        return Err(Error::input("d* needs one edge marginal per generator"));
    }
    let mut total = 0.0;
    for (i, t) in targets.iter().enumerate() {
        let window = vec![GroupWord::identity(), GroupWord::generator(i)];
        let counts = pullback_counts(sigma, x, &window);
        let emp = PatternDistribution::from_counts(window, &counts, sigma.n())?;
        total += l1_distance(t, &emp)?;
    }
    Ok(total)
}

/// A sliding block code `φ: A^G → C` reading the ball of radius `radius`.
#[derive(Clone, Debug)]
pub struct BlockCode<T, C> {
    radius: usize,
    window: Vec<GroupWord>,
    table: HashMap<Vec<T>, C>,
}

impl<T: Symbol, C: Symbol> BlockCode<T, C> {
    /// Dense table built by evaluating `f` on every pattern over the window.
    pub fn from_fn(
        group: &FreeGroup,
        radius: usize,
        alphabet: &[T],
        f: impl Fn(&Pattern<T>) -> C,
    ) -> Result<Self> {
        let window = group.ball(radius);
        let total = (alphabet.len() as f64).powi(window.len() as i32);
        if total > 1e7 {
            return Err(Error::resource(format!(
                "block code table would have {total} entries"
            )));
        }
        let mut table = HashMap::new();
        for values in all_words(alphabet, window.len()) {
            let c = f(&Pattern::from_values(&window, &values));
            table.insert(values, c);
        }
        Ok(BlockCode {
            radius,
            window,
            table,
        })
    }

    /// Table given explicitly; must be total on `alphabet^window`.
    pub fn new(
        group: &FreeGroup,
        radius: usize,
        alphabet: &[T],
        table: HashMap<Vec<T>, C>,
    ) -> Result<Self> {
        let window = group.ball(radius);
        for values in all_words(alphabet, window.len()) {
            if !table.contains_key(&values) {
                return Err(Error::input(format!(
                    "block code table misses pattern {values:?}"
                )));
            }
        }
        Ok(BlockCode {
            radius,
            window,
            table,
        })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// `φ` applied to a pattern whose domain covers the window.
    pub fn apply(&self, p: &Pattern<T>) -> Option<C> {
        let key = p.values_on(&self.window)?;
        self.table.get(&key).cloned()
    }

    /// Equivariant extension `Φ(z)(g) = φ(g^{-1} z)` on the part of the
    /// domain where the window fits (ball of radius `R - radius` for `z` on
    /// a ball of radius `R`).
    pub fn apply_equivariant(&self, z: &Pattern<T>) -> Pattern<C> {
        Pattern::from_pairs(z.domain().filter_map(|g| {
            let shifted: Option<Vec<T>> = self
                .window
                .iter()
                .map(|f| z.get(&g.mul(f)).cloned())
                .collect();
            shifted.map(|k| (g.clone(), self.table[&k].clone()))
        }))
    }
}

/// Recoding `y(v) = φ(x^σ_v)`; satisfies `y^σ_v = Φ(x^σ_v)`.
pub fn apply_block_code<T: Symbol, C: Symbol>(
    code: &BlockCode<T, C>,
    sigma: &FiniteAction,
    x: &[T],
) -> Vec<C> {
    (0..sigma.n())
        .map(|v| {
            let key: Vec<T> = code
                .window
                .iter()
                .map(|g| x[sigma.act_inverse(g, v)].clone())
                .collect();
            code.table[&key].clone()
        })
        .collect()
}

/// Join labels `η(v) = x^σ_v|_window` (values in window order).
pub fn join_labels<T: Symbol>(sigma: &FiniteAction, x: &[T], window: &[GroupWord]) -> Vec<Vec<T>> {
    (0..sigma.n())
        .map(|v| {
            window
                .iter()
                .map(|g| x[sigma.act_inverse(g, v)].clone())
                .collect()
        })
        .collect()
}

/// Whether join labels over a ball glue consistently along every Schreier
/// edge: `η(v)(g) = η(σ(s)^{-1} v)(s^{-1} g)` whenever both sides lie in
/// the window. This is what vanishing `d^*` against an overlap-consistent
/// target forces.
pub fn join_is_consistent<T: Symbol>(
    sigma: &FiniteAction,
    eta: &[Vec<T>],
    window: &BallIndex,
) -> bool {
    for v in 0..sigma.n() {
        for i in 0..sigma.rank() {
            let s = GroupWord::generator(i);
            let u = sigma.act_inverse(&s, v);
            for (k, g) in window.words().iter().enumerate() {
                if let Some(j) = window.position(&s.inv().mul(g)) {
                    if eta[v][k] != eta[u][j] {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Projection `ψ(v) = η(v)(e)`; `window[0]` must be the identity.
pub fn join_project<T: Symbol>(eta: &[Vec<T>]) -> Vec<T> {
    eta.iter().map(|p| p[0].clone()).collect()
}

/// Telescoping recovery `η(v)(f) = ψ(σ(f^{-1}) v)`.
pub fn join_recover<T: Symbol>(
    sigma: &FiniteAction,
    psi: &[T],
    window: &[GroupWord],
) -> Vec<Vec<T>> {
    join_labels(sigma, psi, window)
}

/// All words of length `len` over `alphabet`, lexicographic in alphabet order.
pub fn all_words<T: Clone>(alphabet: &[T], len: usize) -> impl Iterator<Item = Vec<T>> + '_ {
    let k = alphabet.len();
    let total = if k == 0 && len > 0 {
        0
    } else {
        k.pow(len as u32)
    };
    (0..total).map(move |mut idx| {
        let mut out = Vec::with_capacity(len);
        let mut digits = vec![0; len];
        for d in digits.iter_mut().rev() {
            *d = idx % k;
            idx /= k;
        }
        for d in digits {
            out.push(alphabet[d].clone());
        }
        out
    })
}

/// One-hot helper: a float distribution concentrated on one key.
pub fn point_mass<T: Symbol>(window: Vec<GroupWord>, key: Vec<T>) -> PatternDistribution<T, f64> {
    let mut probs = BTreeMap::new();
    probs.insert(key, 1.0);
    PatternDistribution::new(window, probs).expect("point mass is a distribution")
}

/// Exact distribution with `BigRational` weights from `(key, num, den)` triples.
pub fn exact_distribution<T: Symbol>(
    window: Vec<GroupWord>,
    entries: &[(Vec<T>, u64, u64)],
) -> Result<PatternDistribution<T, BigRational>> {
    let mut probs = BTreeMap::new();
    for (k, n, d) in entries {
        let e = probs.entry(k.clone()).or_insert_with(BigRational::zero);
        *e += BigRational::from_ratio(*n, *d);
    }
    let _ = BigRational::one();
    PatternDistribution::new(window, probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> GroupWord {
        s.parse().unwrap()
    }

    #[test]
    fn shift_examples() {
        let p = Pattern::from_pairs([(w("e"), 0u32), (w("a"), 1)]);
        assert_eq!(p.shift(&w("e")), p);
        assert_eq!(
            p.shift(&w("a")),
            Pattern::from_pairs([(w("a"), 0u32), (w("aa"), 1)])
        );
        let q = p.shift(&w("bA"));
        assert_eq!(q.shift(&w("Ab")), p.shift(&w("Ab").mul(&w("bA"))));
    }

    #[test]
    fn pullback_examples() {
        let g1 = FreeGroup::new(1).unwrap();
        let sigma = FiniteAction::new(vec![vec![1, 0]]).unwrap();
        let x = [0u32, 1];
        let p = pullback_name(&g1, &sigma, &x, 0, 1);
        assert_eq!(
            p,
            Pattern::from_pairs([(w("A"), 1u32), (w("e"), 0), (w("a"), 1)])
        );

        let g2 = FreeGroup::new(2).unwrap();
        let trivial = FiniteAction::identity(1, 2);
        let p = pullback_name(&g2, &trivial, &[7u32], 0, 2);
        assert_eq!(p, Pattern::constant(&g2.ball(2), 7));
        let id = FiniteAction::identity(4, 2);
        let p = pullback_name(&g2, &id, &[3u32, 1, 4, 1], 2, 1);
        assert_eq!(p, Pattern::constant(&g2.ball(1), 4));
    }

    #[test]
    fn empirical_examples() {
        let g = FreeGroup::new(2).unwrap();
        let sigma = FiniteAction::sample(6, 2, 1);
        let d = empirical_distribution(&g, &sigma, &[1u32; 6], 1);
        assert_eq!(d.support_size(), 1);
        assert_eq!(d.prob(&[1, 1, 1, 1, 1]), 1.0);
        let x = [0u32, 1, 0, 1, 1, 0];
        let d0 = empirical_distribution(&g, &sigma, &x, 0);
        assert_eq!(d0.prob(&[0]), 0.5);
        assert_eq!(d0.prob(&[1]), 0.5);
    }

    #[test]
    fn l1_examples() {
        let win = vec![w("e"), w("a")];
        let mk = |e: &[(&[u32], f64)]| {
            PatternDistribution::new(
                win.clone(),
                e.iter().map(|(k, p)| (k.to_vec(), *p)).collect(),
            )
            .unwrap()
        };
        let p = mk(&[(&[0, 0], 0.5), (&[1, 1], 0.5)]);
        let q = mk(&[(&[0, 0], 0.25), (&[1, 1], 0.25), (&[0, 1], 0.5)]);
        assert_eq!(l1_distance(&p, &p).unwrap(), 0.0);
        assert!((l1_distance(&p, &q).unwrap() - 1.0).abs() < 1e-15);
        let r = mk(&[(&[1, 0], 1.0)]);
        assert_eq!(l1_distance(&p, &r).unwrap(), 2.0);
        let other = PatternDistribution::new(vec![w("e")], [(vec![0u32], 1.0)].into()).unwrap();
        assert!(l1_distance(&p, &other).is_err());
    }

    #[test]
    fn distribution_validation() {
        let win = vec![w("e")];
        assert!(PatternDistribution::new(win.clone(), [(vec![0u32], 0.7)].into()).is_err());
        assert!(
            PatternDistribution::new(win.clone(), [(vec![0u32], 1.2), (vec![1], -0.2)].into())
                .is_err()
        );
        assert!(PatternDistribution::new(win, [(vec![0u32, 1], 1.0)].into()).is_err());
    }

    #[test]
    fn unsorted_window_is_rekeyed() {
        let d =
            PatternDistribution::new(vec![w("a"), w("e")], [(vec![1u32, 0], 1.0)].into()).unwrap();
        assert_eq!(d.window(), &[w("e"), w("a")]);
        assert_eq!(d.prob(&[0, 1]), 1.0);
    }

    #[test]
    fn block_code_examples() {
        let g = FreeGroup::new(1).unwrap();
        let alphabet = [0u32, 1];
        let identity = BlockCode::from_fn(&g, 0, &alphabet, |p| {
            *p.get(&GroupWord::identity()).unwrap()
        })
        .unwrap();
        let sigma = FiniteAction::new(vec![vec![1, 2, 0]]).unwrap();
        let x = [0u32, 1, 1];
        assert_eq!(apply_block_code(&identity, &sigma, &x), x.to_vec());
        let constant = BlockCode::from_fn(&g, 0, &alphabet, |_| 5u8).unwrap();
        assert_eq!(apply_block_code(&constant, &sigma, &x), vec![5, 5, 5]);

        // majority over {A, e, a}; sigma(a) = (0 1 2): x^σ_v(a) = x(v-1), x^σ_v(A) = x(v+1)
        let majority = BlockCode::from_fn(&g, 1, &alphabet, |p| {
            (p.iter().filter(|(_, &s)| s == 1).count() >= 2) as u32
        })
        .unwrap();
        let x = [1u32, 0, 0];
        // v=0 sees {x0, x2, x1} = {1,0,0} -> 0; v=1 sees {x1,x0,x2} -> 0; v=2 sees {x2,x1,x0} -> 0
        assert_eq!(apply_block_code(&majority, &sigma, &x), vec![0, 0, 0]);
        let x = [1u32, 1, 0];
        assert_eq!(apply_block_code(&majority, &sigma, &x), vec![1, 1, 1]);
        let sigma = FiniteAction::new(vec![vec![1, 0, 2]]).unwrap();
        // v=2 is fixed: sees {0,0,0}; v=0 sees {1,1,1}
        assert_eq!(apply_block_code(&majority, &sigma, &x), vec![1, 1, 0]);
    }

    #[test]
    fn block_code_totality() {
        let g = FreeGroup::new(1).unwrap();
        let mut table = HashMap::new();
        table.insert(vec![0u32], 0u32);
        assert!(BlockCode::new(&g, 0, &[0u32, 1], table.clone()).is_err());
        table.insert(vec![1], 0);
        assert!(BlockCode::new(&g, 0, &[0u32, 1], table).is_ok());
    }

    #[test]
    fn recoded_pullbacks_are_block_code_images() {
        let g = FreeGroup::new(2).unwrap();
        let alphabet = [0u32, 1, 2];
        let code = BlockCode::from_fn(&g, 1, &alphabet, |p| {
            p.iter().map(|(_, s)| *s).sum::<u32>() % 2
        })
        .unwrap();
        for seed in 0..20 {
            let sigma = FiniteAction::sample(7, 2, seed);
            let x: Vec<u32> = (0..7)
                .map(|i| ((i * 7 + seed as usize) % 3) as u32)
                .collect();
            let y = apply_block_code(&code, &sigma, &x);
            for v in 0..7 {
                let lhs = pullback_name(&g, &sigma, &y, v, 2);
                let rhs = code.apply_equivariant(&pullback_name(&g, &sigma, &x, v, 3));
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let g = FreeGroup::new(2).unwrap();
        let a = Alphabet::numbered(2);
        let sigma = FiniteAction::sample(5, 2, 2);
        let d = empirical_distribution(&g, &sigma, &[0u32, 1, 1, 0, 1], 1);
        let v = d.to_json(&g, &a);
        assert_eq!(v["window_radius"], 1);
        let back = PatternDistribution::from_json(&v, &g, &a).unwrap();
        assert_eq!(back, d);
        let edge = d.project(&[w("e"), w("b")]).unwrap();
        let v = edge.to_json(&g, &a);
        assert!(v.get("window").is_some());
        assert_eq!(PatternDistribution::from_json(&v, &g, &a).unwrap(), edge);
    }
}
