//! Finite actions `σ: G → Sym(n)` of the free group, stored as one
//! permutation per generator.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free_group::{BallIndex, GroupWord, Letter};

/// Default cap on `n!^r` for exhaustive enumeration.
pub const DEFAULT_EXACT_CAP: u128 = 1_000_000;

/// A homomorphism from the rank-`r` free group into `Sym(n)`. Vertices are `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ActionFile", into = "ActionFile")]
pub struct FiniteAction {
    n: usize,
    perms: Vec<Vec<u32>>,
    inverses: Vec<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct ActionFile {
    n: usize,
    perms: Vec<Vec<u32>>,
}

impl TryFrom<ActionFile> for FiniteAction {
    type Error = Error;

    fn try_from(f: ActionFile) -> Result<FiniteAction> {
        let a = FiniteAction::new(f.perms)?;
        if a.n != f.n {
            return Err(Error::input(format!(
                "declared n = {} but permutations act on {}",
                f.n, a.n
            )));
        }
        Ok(a)
    }
}

impl From<FiniteAction> for ActionFile {
    fn from(a: FiniteAction) -> ActionFile {
        ActionFile {
            n: a.n,
            perms: a.perms,
        }
    }
}

fn invert(p: &[u32]) -> Vec<u32> {
    let mut inv = vec![0; p.len()];
    for (i, &j) in p.iter().enumerate() {
        inv[j as usize] = i as u32;
    }
    inv
}

impl FiniteAction {
    /// Builds an action from generator images; `perms[i][v]` is `σ(s_i) v`.
    pub fn new(perms: Vec<Vec<u32>>) -> Result<FiniteAction> {
        if perms.is_empty() {
            return Err(Error::input("an action needs at least one generator"));
        }
        let n = perms[0].len();
        if n == 0 {
            return Err(Error::input("an action needs at least one vertex"));
        }
        for (i, p) in perms.iter().enumerate() {
            if p.len() != n {
                return Err(Error::input(format!(
                    "generator {i} acts on {} points, expected {n}",
                    p.len()
                )));
            }
            let mut seen = vec![false; n];
            for &j in p {
                if (j as usize) >= n || seen[j as usize] {
                    return Err(Error::input(format!(
                        "generator {i} is not a permutation of 0..{n}"
                    )));
                }
                seen[j as usize] = true;
            }
        }
        let inverses = perms.iter().map(|p| invert(p)).collect();
        Ok(FiniteAction { n, perms, inverses })
    }

    pub fn identity(n: usize, rank: usize) -> FiniteAction {
        let id: Vec<u32> = (0..n as u32).collect();
        FiniteAction::new(vec![id; rank]).expect("identity permutations are valid")
    }

    /// Uniform sample: an independent Fisher–Yates shuffle per generator.
    pub fn sample(n: usize, rank: usize, seed: u64) -> FiniteAction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FiniteAction::sample_with(n, rank, &mut rng)
    }

    pub fn sample_with<R: rand::Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> FiniteAction {
        let perms = (0..rank)
            .map(|_| {
                let mut p: Vec<u32> = (0..n as u32).collect();
                p.shuffle(rng);
                p
            })
            .collect();
        FiniteAction::new(perms).expect("shuffles are permutations")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.perms.len()
    }

    pub fn generator_images(&self) -> &[Vec<u32>] {
        &self.perms
    }

    #[inline]
    pub fn apply_letter(&self, l: Letter, v: usize) -> usize {
        if l.is_inverse() {
            self.inverses[l.generator()][v] as usize
        } else {
            self.perms[l.generator()][v] as usize
        }
    }

    /// `σ(g) v`.
    pub fn act(&self, g: &GroupWord, v: usize) -> usize {
        g.letters()
            .iter()
            .rev()
            .fold(v, |u, &l| self.apply_letter(l, u))
    }

    /// `σ(g)^{-1} v`, the vertex read by the pullback name at `g`.
    pub fn act_inverse(&self, g: &GroupWord, v: usize) -> usize {
        g.letters()
            .iter()
            .fold(v, |u, &l| self.apply_letter(l.inverse(), u))
    }

    /// `table[v][k] = σ(g_k)^{-1} v` for every word `g_k` of `window`.
    pub fn window_table(&self, window: &BallIndex) -> Vec<Vec<u32>> {
        (0..self.n)
            .map(|v| {
                let mut row = vec![0u32; window.len()];
                for k in 0..window.len() {
                    row[k] = match window.parent(k) {
                        None => v as u32,
                        Some((p, l)) => self.apply_letter(l.inverse(), row[p] as usize) as u32,
                    };
                }
                row
            })
            .collect()
    }

    /// Vertices of the Schreier-graph component containing `v`, in BFS order.
    pub fn orbit(&self, v: usize) -> Vec<usize> {
        let mut seen = vec![false; self.n];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([v]);
        seen[v] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for i in 0..self.rank() {
                for w in [self.perms[i][u] as usize, self.inverses[i][u] as usize] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        order
    }

    /// Breadth-first order of all vertices, starting from vertex 0 and then
    /// from the smallest unvisited vertex of each further component.
    pub fn bfs_order(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n];
        let mut order = Vec::with_capacity(self.n);
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            for u in self.orbit(start) {
                seen[u] = true;
                order.push(u);
            }
        }
        order
    }
}

/// Number of actions of the rank-`r` free group on `n` points, `n!^r`, if it fits.
pub fn action_count(n: usize, rank: usize) -> Option<u128> {
    let mut fact: u128 = 1;
    for k in 2..=n as u128 {
        fact = fact.checked_mul(k)?;
    }
    let mut total: u128 = 1;
    for _ in 0..rank {
        total = total.checked_mul(fact)?;
    }
    Some(total)
}

/// Exhaustive, deterministically ordered list of all of `Hom(G, Sym(n))`.
///
/// Order: the tuple of lexicographic permutation ranks, with generator 0 the
/// most significant digit.
#[derive(Clone, Debug)]
pub struct ActionEnumeration {
    perms: Vec<Vec<u32>>,
    rank: usize,
    total: usize,
}

impl ActionEnumeration {
    pub fn new(n: usize, rank: usize, cap: u128) -> Result<ActionEnumeration> {
        let total = action_count(n, rank).filter(|&t| t <= cap).ok_or_else(|| {
            Error::resource(format!(
                "n!^r for n = {n}, r = {rank} exceeds the enumeration cap {cap}"
            ))
        })?;
        let mut perms = Vec::new();
        let mut p: Vec<u32> = (0..n as u32).collect();
        loop {
            perms.push(p.clone());
            if !next_permutation(&mut p) {
                break;
            }
        }
        Ok(ActionEnumeration {
            perms,
            rank,
            total: total as usize,
        })
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn get(&self, mut index: usize) -> FiniteAction {
        let base = self.perms.len();
        let mut digits = vec![0; self.rank];
        for d in digits.iter_mut().rev() {
            *d = index % base;
            index /= base;
        }
        FiniteAction::new(digits.into_iter().map(|d| self.perms[d].clone()).collect())
            .expect("enumerated permutations are valid")
    }

    pub fn iter(&self) -> impl Iterator<Item = FiniteAction> + '_ {
        (0..self.total).map(|i| self.get(i))
    }
}

/// Enumerates `Hom(G, Sym(n))` if `n!^r` is within `cap`.
pub fn enumerate_actions(n: usize, rank: usize, cap: u128) -> Result<ActionEnumeration> {
    ActionEnumeration::new(n, rank, cap)
}

fn next_permutation(p: &mut [u32]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free_group::FreeGroup;
    use std::collections::HashSet;

    #[test]
    fn enumeration_sizes() {
        assert_eq!(enumerate_actions(1, 2, DEFAULT_EXACT_CAP).unwrap().len(), 1);
        let e2 = enumerate_actions(2, 2, DEFAULT_EXACT_CAP).unwrap();
        assert_eq!(e2.len(), 4);
        let e3 = enumerate_actions(3, 2, DEFAULT_EXACT_CAP).unwrap();
        assert_eq!(e3.len(), 36);
        let distinct: HashSet<FiniteAction> = e3.iter().collect();
        assert_eq!(distinct.len(), 36);
        assert_eq!(
            enumerate_actions(6, 2, DEFAULT_EXACT_CAP).unwrap().len(),
            518_400
        );
        assert!(enumerate_actions(7, 2, DEFAULT_EXACT_CAP).is_err());
        assert_eq!(
            enumerate_actions(5, 2, DEFAULT_EXACT_CAP).unwrap().len(),
            14400
        );
    }

    #[test]
    fn action_is_a_homomorphism() {
        let g = FreeGroup::new(2).unwrap();
        let sigma = FiniteAction::sample(7, 2, 11);
        let ball = g.ball(2);
        for x in &ball {
            for y in &ball {
                for v in 0..7 {
                    assert_eq!(sigma.act(&x.mul(y), v), sigma.act(x, sigma.act(y, v)));
                    assert_eq!(sigma.act_inverse(x, v), sigma.act(&x.inv(), v));
                }
            }
        }
    }

    #[test]
    fn sampling_is_seeded() {
        assert_eq!(FiniteAction::sample(9, 2, 5), FiniteAction::sample(9, 2, 5));
        assert_ne!(FiniteAction::sample(9, 2, 5), FiniteAction::sample(9, 2, 6));
    }

    #[test]
    fn window_table_matches_direct_evaluation() {
        let g = FreeGroup::new(2).unwrap();
        let ball = BallIndex::new(&g, 3);
        let sigma = FiniteAction::sample(5, 2, 3);
        let table = sigma.window_table(&ball);
        for v in 0..5 {
            for (k, w) in ball.words().iter().enumerate() {
                assert_eq!(table[v][k] as usize, sigma.act_inverse(w, v));
            }
        }
    }

    #[test]
    fn rejects_non_permutations() {
        assert!(FiniteAction::new(vec![vec![0, 0]]).is_err());
        assert!(FiniteAction::new(vec![vec![0, 1], vec![0]]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let a = FiniteAction::sample(4, 2, 1);
        let s = serde_json::to_string(&a).unwrap();
        let b: FiniteAction = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
        assert!(serde_json::from_str::<FiniteAction>(r#"{"n":3,"perms":[[0,1]]}"#).is_err());
    }
}
