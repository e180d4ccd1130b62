//! Microstate counting: `|Ω(σ, 𝒪)|`, its average over random or all
//! actions, and the finite-`n` estimates `(1/n) ln E_σ |Ω(σ, 𝒪)|`.
//!
//! Neighborhoods are closed ℓ¹ balls around one or more window marginals;
//! with several windows the distances are summed (this is `d^*` when the
//! windows are the edges `{e, s_i}`).

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::action::{enumerate_actions, FiniteAction};
use crate::entropy::EntropyValue;
use crate::error::{Error, Result};
use crate::free_group::{FreeGroup, GroupWord};
use crate::markov::{marginal, Weight, DEFAULT_PATTERN_CAP};
use crate::sft::{sft_check_all, sft_check_nearest_neighbor, SftSpec};
use crate::shift::PatternDistribution;

/// Default cap on `|A|^n` for exhaustive labeling enumeration.
pub const DEFAULT_LABEL_CAP: u128 = 10_000_000;

/// Slack added to `ε` so that distances equal to `ε` up to rounding count
/// as inside the closed ball.
pub const DISTANCE_SLACK: f64 = 1e-12;

/// A closed ℓ¹ neighborhood of a measure, seen through finite windows.
#[derive(Clone, Debug)]
pub struct Neighborhood {
    alphabet_size: usize,
    targets: Vec<PatternDistribution<u32, f64>>,
    exact: Option<Vec<PatternDistribution<u32, BigRational>>>,
    epsilon: f64,
    restriction: Option<SftSpec>,
}

impl Neighborhood {
    /// Float targets, `ε > 0`.
    pub fn new(
        alphabet_size: usize,
        targets: Vec<PatternDistribution<u32, f64>>,
        epsilon: f64,
    ) -> Result<Neighborhood> {
        if targets.is_empty() {
            return Err(Error::input("a neighborhood needs at least one window"));
        }
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(Error::input("ε = 0 needs exact rational targets"));
        }
        Ok(Neighborhood {
            alphabet_size,
            targets,
            exact: None,
            epsilon,
            restriction: None,
        })
    }

    /// Exact rational targets; any `ε ≥ 0`.
    pub fn exact(
        alphabet_size: usize,
        targets: Vec<PatternDistribution<u32, BigRational>>,
        epsilon: f64,
    ) -> Result<Neighborhood> {
        if targets.is_empty() {
            return Err(Error::input("a neighborhood needs at least one window"));
        }
        if epsilon < 0.0 {
            return Err(Error::input("ε must be nonnegative"));
        }
        Ok(Neighborhood {
            alphabet_size,
            targets: targets.iter().map(PatternDistribution::to_float).collect(),
            exact: Some(targets),
            epsilon,
            restriction: None,
        })
    }

    /// Ball-marginal neighborhood of a float Markov weight on `B(e, m)`.
    pub fn ball(w: &Weight<f64>, m: usize, epsilon: f64) -> Result<Neighborhood> {
        let group = FreeGroup::new(w.rank())?;
        Neighborhood::new(
            w.size(),
            vec![marginal(w, &group.ball(m), DEFAULT_PATTERN_CAP)?],
            epsilon,
        )
    }

    /// Ball-marginal neighborhood of an exact weight.
    pub fn ball_exact(w: &Weight<BigRational>, m: usize, epsilon: f64) -> Result<Neighborhood> {
        let group = FreeGroup::new(w.rank())?;
        Neighborhood::exact(
            w.size(),
            vec![marginal(w, &group.ball(m), DEFAULT_PATTERN_CAP)?],
            epsilon,
        )
    }

    /// Edge-marginal (`d^*`) neighborhood of an exact weight.
    pub fn edges_exact(w: &Weight<BigRational>, epsilon: f64) -> Result<Neighborhood> {
        let targets = (0..w.rank())
            .map(|i| {
                marginal(
                    w,
                    &[GroupWord::identity(), GroupWord::generator(i)],
                    DEFAULT_PATTERN_CAP,
                )
            })
            .collect::<Result<_>>()?;
        Neighborhood::exact(w.size(), targets, epsilon)
    }

    /// Attaches an SFT restriction, giving `Ω_Z`.
    pub fn with_restriction(mut self, spec: SftSpec) -> Result<Neighborhood> {
        if spec.alphabet().len() != self.alphabet_size {
            return Err(Error::input(
                "restriction alphabet does not match the neighborhood",
            ));
        }
        self.restriction = Some(spec);
        Ok(self)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Neighborhood> {
        if epsilon < 0.0 || (epsilon == 0.0 && self.exact.is_none()) {
            return Err(Error::input("ε = 0 needs exact rational targets"));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn without_restriction(mut self) -> Neighborhood {
        self.restriction = None;
        self
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn targets(&self) -> &[PatternDistribution<u32, f64>] {
        &self.targets
    }

    pub fn restriction(&self) -> Option<&SftSpec> {
        self.restriction.as_ref()
    }

    /// With `ε = 0`, whether every target probability is a multiple of
    /// `1/n` (otherwise no labeling can match and all counts vanish).
    pub fn attainable(&self, n: usize) -> bool {
        if self.epsilon > 0.0 {
            return true;
        }
        let n = BigInt::from(n);
        self.exact.as_ref().is_none_or(|ts| {
            ts.iter().all(|t| {
                t.entries()
                    .all(|(_, p)| (p * BigRational::from_integer(n.clone())).is_integer())
            })
        })
    }
}

/// Window tables and dense targets for one `(σ, 𝒪)`.
struct Counter<'a> {
    nbhd: &'a Neighborhood,
    sigma: &'a FiniteAction,
    /// Per window: `rows[v]` lists `σ(g)^{-1} v` over the window.
    tables: Vec<Vec<Vec<u32>>>,
    /// Per window: target mass times `n`, by dense key.
    targets: Vec<Vec<f64>>,
    exact_targets: Option<Vec<Vec<i64>>>,
}

impl<'a> Counter<'a> {
    fn new(nbhd: &'a Neighborhood, sigma: &'a FiniteAction) -> Result<Counter<'a>> {
        let k = nbhd.alphabet_size as u64;
        let n = sigma.n();
        let mut tables = Vec::new();
        let mut targets = Vec::new();
        for t in &nbhd.targets {
            let len = t.window().len();
            if (k as f64).powi(len as i32) > (1u64 << 24) as f64 {
                return Err(Error::resource(format!(
                    "window of {len} cells is too large for dense counting"
                )));
            }
            if t.window()
                .iter()
                .any(|g| g.max_generator().is_some_and(|i| i >= sigma.rank()))
            {
                return Err(Error::input(
                    "target window uses generators beyond the action's rank",
                ));
            }
            tables.push(
                (0..n)
                    .map(|v| {
                        t.window()
                            .iter()
                            .map(|g| sigma.act_inverse(g, v) as u32)
                            .collect()
                    })
                    .collect(),
            );
            let mut dense = vec![0.0; k.pow(len as u32) as usize];
            for (key, p) in t.entries() {
                dense[dense_key(key, k)] = p * n as f64;
            }
            targets.push(dense);
        }
        let exact_targets = match (&nbhd.exact, nbhd.epsilon == 0.0) {
            (Some(ts), true) => Some(
                ts.iter()
                    .map(|t| {
                        let mut dense = vec![0i64; k.pow(t.window().len() as u32) as usize];
                        for (key, p) in t.entries() {
                            let c = p * BigRational::from_integer(BigInt::from(n));
                            dense[dense_key(key, k)] = if c.is_integer() {
                                c.to_integer().to_i64().unwrap()
                            } else {
                                -1
                            };
                        }
                        dense
                    })
                    .collect(),
            ),
            _ => None,
        };
        Ok(Counter {
            nbhd,
            sigma,
            tables,
            targets,
            exact_targets,
        })
    }

    fn accepts(&self, x: &[u32], scratch: &mut [Vec<i64>]) -> bool {
        let k = self.nbhd.alphabet_size as u64;
        let n = x.len() as f64;
        let mut total = 0.0;
        for (w, rows) in self.tables.iter().enumerate() {
            let counts = &mut scratch[w];
            counts.iter_mut().for_each(|c| *c = 0);
            for row in rows {
                let mut key = 0u64;
                for &u in row {
                    key = key * k + x[u as usize] as u64;
                }
                counts[key as usize] += 1;
            }
            if let Some(ex) = &self.exact_targets {
                if counts.iter().zip(&ex[w]).any(|(c, t)| c != t) {
                    return false;
                }
            } else {
                total += counts
                    .iter()
                    .zip(&self.targets[w])
                    .map(|(&c, &t)| (c as f64 - t).abs())
                    .sum::<f64>()
                    / n;
                if total > self.nbhd.epsilon + DISTANCE_SLACK {
                    return false;
                }
            }
        }
        match &self.nbhd.restriction {
            None => true,
            Some(spec) if spec.is_nearest_neighbor() => {
                sft_check_nearest_neighbor(spec, self.sigma, x).expect("spec is nearest-neighbor")
            }
            Some(spec) => sft_check_all(spec, self.sigma, x),
        }
    }

    fn scratch(&self) -> Vec<Vec<i64>> {
        self.targets.iter().map(|t| vec![0; t.len()]).collect()
    }
}

fn dense_key(key: &[u32], k: u64) -> usize {
    key.iter().fold(0u64, |acc, &s| acc * k + s as u64) as usize
}

fn labeling(mut idx: u64, k: u64, x: &mut [u32]) {
    for s in x.iter_mut().rev() {
        *s = (idx % k) as u32;
        idx /= k;
    }
}

fn label_total(k: usize, n: usize, cap: u128) -> Result<u64> {
    let total = (k as u128)
        .checked_pow(n as u32)
        .filter(|&t| t <= cap)
        .ok_or_else(|| {
            Error::resource(format!("|A|^n = {k}^{n} exceeds the labeling cap {cap}"))
        })?;
    Ok(total as u64)
}

/// `|Ω(σ, 𝒪)|` (or `|Ω_Z(σ, 𝒪)|` with a restriction) by exhaustive
/// enumeration of `A^n`.
pub fn count_omega(sigma: &FiniteAction, nbhd: &Neighborhood, label_cap: u128) -> Result<u64> {
    let k = nbhd.alphabet_size;
    let n = sigma.n();
    let total = label_total(k, n, label_cap)?;
    if !nbhd.attainable(n) {
        return Ok(0);
    }
    let counter = Counter::new(nbhd, sigma)?;
    const BLOCK: u64 = 1 << 12;
    let blocks = total.div_ceil(BLOCK);
    Ok((0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut x = vec![0u32; n];
            let mut scratch = counter.scratch();
            let mut c = 0u64;
            for idx in b * BLOCK..((b + 1) * BLOCK).min(total) {
                labeling(idx, k as u64, &mut x);
                if counter.accepts(&x, &mut scratch) {
                    c += 1;
                }
            }
            c
        })
        .sum())
}

/// The members of `Ω(σ, 𝒪)` in lexicographic order.
pub fn omega_members(
    sigma: &FiniteAction,
    nbhd: &Neighborhood,
    label_cap: u128,
) -> Result<Vec<Vec<u32>>> {
    let k = nbhd.alphabet_size;
    let n = sigma.n();
    let total = label_total(k, n, label_cap)?;
    if !nbhd.attainable(n) {
        return Ok(Vec::new());
    }
    let counter = Counter::new(nbhd, sigma)?;
    let mut scratch = counter.scratch();
    let mut out = Vec::new();
    let mut x = vec![0u32; n];
    for idx in 0..total {
        labeling(idx, k as u64, &mut x);
        if counter.accepts(&x, &mut scratch) {
            out.push(x.clone());
        }
    }
    Ok(out)
}

/// How to average over actions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// All of `Hom(G, Sym(n))`.
    Exact,
    /// Independent uniform samples; sample `i` uses stream `i` of the seed.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Resource caps for counting.
#[derive(Clone, Copy, Debug)]
pub struct Caps {
    pub exact_actions: u128,
    pub labels: u128,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            exact_actions: crate::action::DEFAULT_EXACT_CAP,
            labels: DEFAULT_LABEL_CAP,
        }
    }
}

/// Mean of `|Ω(σ, 𝒪)|` over actions with its standard error (zero in exact mode).
#[derive(Clone, Debug, PartialEq)]
pub struct CountSummary {
    pub n: usize,
    pub samples: usize,
    pub mean: f64,
    pub stderr: f64,
    /// Per-action counts in sampling (or enumeration) order.
    pub counts: Vec<u64>,
}

/// The σ used by sample `index` of a Monte Carlo run.
pub fn sample_action(n: usize, rank: usize, seed: u64, index: usize) -> FiniteAction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    FiniteAction::sample_with(n, rank, &mut rng)
}

/// `E_σ |Ω(σ, 𝒪)|` for actions of the rank-`rank` free group on `n` points.
///
/// Counts are integers reduced in a fixed order, so results do not depend on
/// the number of threads.
pub fn expected_count(
    n: usize,
    rank: usize,
    nbhd: &Neighborhood,
    mode: Mode,
    caps: Caps,
) -> Result<CountSummary> {
    label_total(nbhd.alphabet_size, n, caps.labels)?;
    let counts: Vec<u64> = match mode {
        Mode::Exact => {
            let all = enumerate_actions(n, rank, caps.exact_actions)?;
            (0..all.len())
                .into_par_iter()
                .map(|i| count_omega(&all.get(i), nbhd, caps.labels))
                .collect::<Result<_>>()?
        }
        Mode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::input("Monte Carlo needs at least one sample"));
            }
            (0..samples)
                .into_par_iter()
                .map(|i| count_omega(&sample_action(n, rank, seed, i), nbhd, caps.labels))
                .collect::<Result<_>>()?
        }
    };
    let m = counts.len();
    let sum: u128 = counts.iter().map(|&c| c as u128).sum();
    let mean = sum as f64 / m as f64;
    let stderr = match mode {
        Mode::Exact => 0.0,
        Mode::MonteCarlo { .. } if m > 1 => {
            let sq: u128 = counts.iter().map(|&c| (c as u128) * (c as u128)).sum();
            // unbiased variance from exact integer moments
            let var = (sq as f64 - (sum as f64) * (sum as f64) / m as f64) / (m as f64 - 1.0);
            (var.max(0.0) / m as f64).sqrt()
        }
        Mode::MonteCarlo { .. } => 0.0,
    };
    Ok(CountSummary {
        n,
        samples: m,
        mean,
        stderr,
        counts,
    })
}

/// One row of an estimate table.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateRow {
    pub n: usize,
    pub samples: usize,
    pub mean_count: f64,
    /// `(1/n) ln E|Ω|`, `-inf` for a zero mean.
    pub log_mean_over_n: EntropyValue,
    /// Standard error of `mean_count`.
    pub stderr: f64,
    /// Set when `ε = 0` and the targets are not multiples of `1/n`.
    pub unattainable: bool,
}

/// `(1/n) ln E_σ |Ω(σ, 𝒪)|` for each `n`.
pub fn f_estimate(
    rank: usize,
    nbhd: &Neighborhood,
    n_list: &[usize],
    mode: Mode,
    caps: Caps,
) -> Result<Vec<EstimateRow>> {
    n_list
        .iter()
        .map(|&n| {
            let s = expected_count(n, rank, nbhd, mode, caps)?;
            let log = if s.mean > 0.0 {
                EntropyValue::new(s.mean.ln() / n as f64)
            } else {
                EntropyValue::NEG_INFINITY
            };
            Ok(EstimateRow {
                n,
                samples: s.samples,
                mean_count: s.mean,
                log_mean_over_n: log,
                stderr: s.stderr,
                unattainable: !nbhd.attainable(n),
            })
        })
        .collect()
}

/// CSV with header `n,samples,mean_count,log_mean_over_n,stderr`.
pub fn estimate_csv(rows: &[EstimateRow]) -> String {
    let mut out = String::from("n,samples,mean_count,log_mean_over_n,stderr\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.12},{:.12},{:.12}\n",
            r.n, r.samples, r.mean_count, r.log_mean_over_n, r.stderr
        ));
    }
    out
}

/// Histogram of counts, for diagnostics.
pub fn count_histogram(counts: &[u64]) -> BTreeMap<u64, usize> {
    let mut h = BTreeMap::new();
    for &c in counts {
        *h.entry(c).or_insert(0) += 1;
    }
    h
}

/// True when `ε = 0` targets are unattainable at every `n` listed.
pub fn all_unattainable(nbhd: &Neighborhood, n_list: &[usize]) -> bool {
    n_list.iter().all(|&n| !nbhd.attainable(n))
}

impl Neighborhood {
    /// The single-window float target, for reporting.
    pub fn first_target(&self) -> &PatternDistribution<u32, f64> {
        &self.targets[0]
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }
}
