//! Subshifts of finite type over the free group, checked on microstates.
//!
//! A microstate `x` over `σ` lies in `Ω_Z` when every pullback name
//! `x^σ_v` belongs to `Z`; since the pullback names of one orbit are shifts
//! of each other, that amounts to checking the window at the origin of every
//! vertex. Explicit SFTs list forbidden patterns; the orbit-change SFT `Z_ρ`
//! is predicate-backed (its forbidden set is far too large to list).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::action::FiniteAction;
use crate::error::{Error, Result};
use crate::free_group::{BallIndex, FreeGroup, GroupWord, Letter};
use crate::shift::{Alphabet, Pattern, Symbol};

/// A shift-invariant constraint checked through a finite window at the origin.
pub trait Subshift: Sync {
    type Symbol: Symbol;

    /// Radius of the ball read by [`Subshift::allows`].
    fn window_radius(&self) -> usize;

    /// `cells` are aligned with the shortlex ball of radius
    /// [`Subshift::window_radius`]; `None` marks unassigned cells. Returns
    /// `false` only if the assigned cells already force a violation at the
    /// origin; with every cell assigned it is exact.
    fn allows(&self, ball: &BallIndex, cells: &[Option<&Self::Symbol>]) -> bool;

    /// Symbols a sampler may try (possibly pre-filtered by single-cell
    /// constraints), in a fixed order.
    fn candidate_symbols(&self) -> Vec<Self::Symbol>;
}

/// Explicit SFT over a named alphabet, defined by forbidden patterns.
#[derive(Clone, Debug, PartialEq)]
pub struct SftSpec {
    alphabet: Alphabet,
    forbidden: Vec<Pattern<u32>>,
    nearest_neighbor: bool,
}

impl SftSpec {
    pub fn new(
        alphabet: Alphabet,
        forbidden: Vec<Pattern<u32>>,
        nearest_neighbor: bool,
    ) -> Result<SftSpec> {
        for w in &forbidden {
            if w.is_empty() {
                return Err(Error::input("forbidden patterns need a nonempty domain"));
            }
            if w.iter().any(|(_, &s)| s as usize >= alphabet.len()) {
                return Err(Error::input(
                    "forbidden pattern uses a symbol outside the alphabet",
                ));
            }
            if nearest_neighbor {
                let dom: Vec<&GroupWord> = w.domain().collect();
                let ok = dom.len() == 2
                    && dom[0].is_identity()
                    && dom[1].len() == 1
                    && !dom[1].first().unwrap().is_inverse();
                if !ok {
                    return Err(Error::input(
                        "nearest-neighbor patterns must have domain {e, s_i}",
                    ));
                }
            }
        }
        Ok(SftSpec {
            alphabet,
            forbidden,
            nearest_neighbor,
        })
    }

    /// The full shift (nothing forbidden).
    pub fn full(alphabet: Alphabet) -> SftSpec {
        SftSpec {
            alphabet,
            forbidden: Vec::new(),
            nearest_neighbor: true,
        }
    }

    /// Nearest-neighbor SFT forbidding `(a, b)` on generator `i` whenever
    /// `forbid(i, a, b)`.
    pub fn from_forbidden_edges(
        alphabet: Alphabet,
        rank: usize,
        forbid: impl Fn(usize, u32, u32) -> bool,
    ) -> SftSpec {
        let k = alphabet.len() as u32;
        let mut forbidden = Vec::new();
        for i in 0..rank {
            for a in 0..k {
                for b in 0..k {
                    if forbid(i, a, b) {
                        forbidden.push(Pattern::from_pairs([
                            (GroupWord::identity(), a),
                            (GroupWord::generator(i), b),
                        ]));
                    }
                }
            }
        }
        SftSpec {
            alphabet,
            forbidden,
            nearest_neighbor: true,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn forbidden(&self) -> &[Pattern<u32>] {
        &self.forbidden
    }

    pub fn is_nearest_neighbor(&self) -> bool {
        self.nearest_neighbor
    }

    /// Whether the edge `(a, b)` on generator `i` (0-based) is allowed; only
    /// meaningful for nearest-neighbor specs.
    pub fn allows_edge(&self, i: usize, a: u32, b: u32) -> bool {
        let s = GroupWord::generator(i);
        !self.forbidden.iter().any(|w| {
            w.get(&GroupWord::identity()) == Some(&a) && w.get(&s) == Some(&b) && w.len() == 2
        })
    }

    /// Direct check: no forbidden pattern sits at the origin of `p`
    /// (cells outside `p`'s domain count as unknown).
    pub fn pattern_allowed_at_origin(&self, p: &Pattern<u32>) -> bool {
        !self
            .forbidden
            .iter()
            .any(|w| w.iter().all(|(g, s)| p.get(g) == Some(s)))
    }

    /// `{"alphabet": [...], "forbidden": [{"g-word": "symbol"}], "nearest_neighbor": bool}`.
    pub fn to_json(&self) -> Value {
        let forbidden: Vec<Value> = self
            .forbidden
            .iter()
            .map(|w| {
                Value::Object(
                    w.iter()
                        .map(|(g, &s)| {
                            (
                                g.to_string(),
                                Value::String(self.alphabet.name(s).to_string()),
                            )
                        })
                        .collect::<Map<_, _>>(),
                )
            })
            .collect();
        json!({"alphabet": self.alphabet.names(), "forbidden": forbidden, "nearest_neighbor": self.nearest_neighbor})
    }

    pub fn from_json(v: &Value, group: &FreeGroup) -> Result<SftSpec> {
        let names: Vec<String> = v
            .get("alphabet")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::input("SFT spec needs an alphabet"))?
            .iter()
            .map(|s| {
                s.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| Error::input("alphabet names must be strings"))
            })
            .collect::<Result<_>>()?;
        let alphabet = Alphabet::new(names)?;
        let mut forbidden = Vec::new();
        for w in v
            .get("forbidden")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::input("SFT spec needs a forbidden list"))?
        {
            let obj = w
                .as_object()
                .ok_or_else(|| Error::input("forbidden patterns are objects"))?;
            let mut cells = BTreeMap::new();
            for (g, s) in obj {
                let s = s
                    .as_str()
                    .ok_or_else(|| Error::input("symbols must be strings"))?;
                cells.insert(group.parse(g)?, alphabet.index_of(s)?);
            }
            forbidden.push(Pattern::new(cells));
        }
        let nn = v
            .get("nearest_neighbor")
            .and_then(Value::as_bool)
            .unwrap_or(false);
        SftSpec::new(alphabet, forbidden, nn)
    }
}

impl Subshift for SftSpec {
    type Symbol = u32;

    fn window_radius(&self) -> usize {
        self.forbidden
            .iter()
            .flat_map(|w| w.domain().map(GroupWord::len))
            .max()
            .unwrap_or(0)
    }

    fn allows(&self, ball: &BallIndex, cells: &[Option<&u32>]) -> bool {
        !self.forbidden.iter().any(|w| {
            w.iter().all(|(g, s)| {
                let k = ball.position(g).expect("window covers forbidden patterns");
                cells[k] == Some(s)
            })
        })
    }

    fn candidate_symbols(&self) -> Vec<u32> {
        (0..self.alphabet.len() as u32).collect()
    }
}

/// Pullback window values of `x` at `v`.
fn origin_cells<'a, T>(table: &[Vec<u32>], x: &'a [T], v: usize) -> Vec<Option<&'a T>> {
    table[v].iter().map(|&u| Some(&x[u as usize])).collect()
}

/// Whether `x^σ_u` avoids the forbidden set at the origin for every `u` in
/// the orbit of `v`, i.e. whether the single pullback name `x^σ_v` lies in
/// the subshift.
pub fn sft_check_vertex<S: Subshift>(
    spec: &S,
    sigma: &FiniteAction,
    x: &[S::Symbol],
    v: usize,
) -> bool {
    let group = FreeGroup::new(sigma.rank()).expect("action rank is valid");
    let ball = BallIndex::new(&group, spec.window_radius());
    let table = sigma.window_table(&ball);
    sigma
        .orbit(v)
        .into_iter()
        .all(|u| spec.allows(&ball, &origin_cells(&table, x, u)))
}

/// Membership of `x` in `Ω_Z`: every pullback name lies in the subshift.
pub fn sft_check_all<S: Subshift>(spec: &S, sigma: &FiniteAction, x: &[S::Symbol]) -> bool {
    first_violation(spec, sigma, x).is_none()
}

/// First vertex whose pullback name violates the subshift at the origin.
pub fn first_violation<S: Subshift>(
    spec: &S,
    sigma: &FiniteAction,
    x: &[S::Symbol],
) -> Option<usize> {
    let group = FreeGroup::new(sigma.rank()).expect("action rank is valid");
    let ball = BallIndex::new(&group, spec.window_radius());
    let table = sigma.window_table(&ball);
    (0..sigma.n()).find(|&u| !spec.allows(&ball, &origin_cells(&table, x, u)))
}

/// Fast path for nearest-neighbor specs: every Schreier edge
/// `u → σ(s_i)^{-1} u` is inspected once.
pub fn sft_check_nearest_neighbor(spec: &SftSpec, sigma: &FiniteAction, x: &[u32]) -> Result<bool> {
    if !spec.nearest_neighbor {
        return Err(Error::input("spec is not nearest-neighbor"));
    }
    let k = spec.alphabet.len();
    let mut forbidden = vec![vec![false; k * k]; sigma.rank()];
    for w in &spec.forbidden {
        let mut it = w.iter();
        let (_, &a) = it.next().unwrap();
        let (g, &b) = it.next().unwrap();
        let i = g.first().unwrap().generator();
        if i < sigma.rank() {
            forbidden[i][a as usize * k + b as usize] = true;
        }
    }
    for (i, row) in forbidden.iter().enumerate() {
        let inv = Letter::new(i, true);
        for u in 0..sigma.n() {
            let w = sigma.apply_letter(inv, u);
            if row[x[u] as usize * k + x[w] as usize] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// orbit alphabet and Z_ρ

/// A symbol of the orbit alphabet: one group element per letter `s`,
/// indexed by the letter code. Read as `x_g(s)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrbitSymbol(Vec<GroupWord>);

impl OrbitSymbol {
    pub fn new(entries: Vec<GroupWord>) -> OrbitSymbol {
        OrbitSymbol(entries)
    }

    /// `s ↦ s` for every letter.
    pub fn identity(rank: usize) -> OrbitSymbol {
        OrbitSymbol(
            (0..2 * rank)
                .map(|c| GroupWord::letter(Letter::from_code(c)))
                .collect(),
        )
    }

    /// Built from a function of the letter.
    pub fn from_fn(rank: usize, f: impl Fn(Letter) -> GroupWord) -> OrbitSymbol {
        OrbitSymbol((0..2 * rank).map(|c| f(Letter::from_code(c))).collect())
    }

    pub fn get(&self, s: Letter) -> &GroupWord {
        &self.0[s.code()]
    }

    pub fn set(&mut self, s: Letter, g: GroupWord) {
        self.0[s.code()] = g;
    }

    pub fn entries(&self) -> &[GroupWord] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len() / 2
    }

    /// Largest entry length.
    pub fn displacement(&self) -> usize {
        self.0.iter().map(GroupWord::len).max().unwrap_or(0)
    }

    /// `{"a": "b", "A": "B", ...}`.
    pub fn to_json(&self) -> Value {
        Value::Object(
            self.0
                .iter()
                .enumerate()
                .map(|(c, g)| {
                    (
                        Letter::from_code(c).to_string(),
                        Value::String(g.to_string()),
                    )
                })
                .collect(),
        )
    }

    pub fn from_json(v: &Value, group: &FreeGroup) -> Result<OrbitSymbol> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::input("orbit symbols are objects letter -> word"))?;
        let mut entries = vec![None; 2 * group.rank()];
        for (k, w) in obj {
            let mut chars = k.chars();
            let l = match (chars.next().and_then(Letter::from_char), chars.next()) {
                (Some(l), None) if l.generator() < group.rank() => l,
                _ => return Err(Error::input(format!("bad letter key {k:?}"))),
            };
            let w = w
                .as_str()
                .ok_or_else(|| Error::input("orbit symbol entries are words"))?;
            entries[l.code()] = Some(group.parse(w)?);
        }
        entries
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .map(OrbitSymbol)
            .ok_or_else(|| Error::input("orbit symbol must assign every letter"))
    }
}

impl fmt::Debug for OrbitSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for OrbitSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .map(|(c, g)| format!("{}>{}", Letter::from_code(c), g))
            .collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// The orbit alphabet `B(e, ρ)^{S ∪ S^{-1}}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitAlphabet {
    rank: usize,
    rho: usize,
}

impl OrbitAlphabet {
    pub fn new(rank: usize, rho: usize) -> OrbitAlphabet {
        OrbitAlphabet { rank, rho }
    }

    /// `|B(e, ρ)|^{2r}`.
    pub fn size(&self) -> u128 {
        let group = FreeGroup::new(self.rank).expect("rank is valid");
        (group.ball_size(self.rho) as u128).pow(2 * self.rank as u32)
    }

    pub fn contains(&self, s: &OrbitSymbol) -> bool {
        s.0.len() == 2 * self.rank
            && s.0
                .iter()
                .all(|g| g.len() <= self.rho && g.max_generator().is_none_or(|i| i < self.rank))
    }

    /// Symbols that can occur in `Z_ρ`: injective in `s` and never `e`.
    /// Lexicographic in the shortlex order of entries.
    pub fn admissible_symbols(&self) -> Vec<OrbitSymbol> {
        let group = FreeGroup::new(self.rank).expect("rank is valid");
        let values: Vec<GroupWord> = group
            .ball(self.rho)
            .into_iter()
            .filter(|g| !g.is_identity())
            .collect();
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(2 * self.rank);
        let mut used = vec![false; values.len()];
        fn rec(
            depth: usize,
            len: usize,
            values: &[GroupWord],
            used: &mut [bool],
            current: &mut Vec<GroupWord>,
            out: &mut Vec<OrbitSymbol>,
        ) {
            if depth == len {
                out.push(OrbitSymbol(current.clone()));
                return;
            }
            for (i, g) in values.iter().enumerate() {
                if !used[i] {
                    used[i] = true;
                    current.push(g.clone());
                    rec(depth + 1, len, values, used, current, out);
                    current.pop();
                    used[i] = false;
                }
            }
        }
        rec(0, 2 * self.rank, &values, &mut used, &mut current, &mut out);
        out
    }
}

/// Outcome of [`axioms_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomReport {
    pub accepted: bool,
    pub reason: Option<String>,
    /// Set when some `h` has a unique witness, but only one longer than `ρ|h|`.
    pub loose_witness: bool,
}

impl AxiomReport {
    fn ok() -> AxiomReport {
        AxiomReport {
            accepted: true,
            reason: None,
            loose_witness: false,
        }
    }

    fn fail(reason: String) -> AxiomReport {
        AxiomReport {
            accepted: false,
            reason: Some(reason),
            loose_witness: false,
        }
    }
}

/// Telescoping products `z_e(s_1) z_{s_1}(s_2) ⋯ z_{s_1⋯s_{n-1}}(s_n)` for
/// every reduced `s_1⋯s_n` in `outer` (a ball), reading `z` on the ball of
/// radius one less. Returns `None` where a needed cell is missing.
pub fn telescoping_products(
    outer: &BallIndex,
    z: impl Fn(&GroupWord) -> Option<OrbitSymbol>,
) -> Vec<Option<GroupWord>> {
    let mut out: Vec<Option<GroupWord>> = Vec::with_capacity(outer.len());
    let mut cache: HashMap<usize, Option<OrbitSymbol>> = HashMap::new();
    for k in 0..outer.len() {
        let v = match outer.parent(k) {
            None => Some(GroupWord::identity()),
            Some((p, l)) => {
                let cell = cache
                    .entry(p)
                    .or_insert_with(|| z(&outer.words()[p]))
                    .clone();
                match (&out[p], cell) {
                    (Some(prefix), Some(sym)) => Some(prefix.mul(sym.get(l))),
                    _ => None,
                }
            }
        };
        out.push(v);
    }
    out
}

/// Axioms 1 and 2 for a configuration read through `z` (cells `g` with
/// `|g| ≤ ρ²` are consulted).
///
/// Axiom 2 is enforced with the tighter length bound `n ≤ ρ|h|`: a witness
/// must exist among reduced words of length `≤ ρ|h|`, and it must be the only
/// one among all reduced words of length `≤ ρ² + 1`.
pub fn axioms_check_with(
    rank: usize,
    rho: usize,
    z: impl Fn(&GroupWord) -> Option<OrbitSymbol>,
) -> AxiomReport {
    let group = FreeGroup::new(rank).expect("rank is valid");
    let alphabet = OrbitAlphabet::new(rank, rho);
    // entries and Axiom 1
    let Some(ze) = z(&GroupWord::identity()) else {
        return AxiomReport::fail("missing cell e".into());
    };
    for l in group.letters() {
        let s = GroupWord::letter(l);
        let Some(zs) = z(&s) else {
            return AxiomReport::fail(format!("missing cell {s}"));
        };
        if !alphabet.contains(&zs) || !alphabet.contains(&ze) {
            return AxiomReport::fail(format!("entry longer than {rho} near {s}"));
        }
        if !ze.get(l).mul(zs.get(l.inverse())).is_identity() {
            return AxiomReport::fail(format!(
                "Axiom 1 fails at s = {s}: z_e({s}) z_{s}({}) = {}",
                l.inverse(),
                ze.get(l).mul(zs.get(l.inverse()))
            ));
        }
    }
    // Axiom 2
    let outer = BallIndex::new(&group, rho * rho + 1);
    let products = telescoping_products(&outer, &z);
    let mut preimages: HashMap<&GroupWord, Vec<usize>> = HashMap::new();
    for (k, p) in products.iter().enumerate() {
        match p {
            None => {
                return AxiomReport::fail(format!(
                    "missing cell on the path to {}",
                    outer.words()[k]
                ))
            }
            Some(img) if img.len() <= rho => preimages.entry(img).or_default().push(k),
            _ => {}
        }
    }
    for h in group.ball(rho) {
        match preimages.get(&h).map(Vec::as_slice) {
            None | Some([]) => {
                return AxiomReport::fail(format!(
                    "Axiom 2: no witness for h = {h} of length ≤ {}",
                    rho * rho + 1
                ))
            }
            Some([k]) => {
                let w = &outer.words()[*k];
                if w.len() > rho * h.len() {
                    return AxiomReport {
                        accepted: false,
                        reason: Some(format!(
                            "Axiom 2: the only witness for h = {h} is {w}, longer than ρ|h| = {}",
                            rho * h.len()
                        )),
                        loose_witness: true,
                    };
                }
            }
            Some(ks) => {
                let ws: Vec<String> = ks.iter().map(|&k| outer.words()[k].to_string()).collect();
                return AxiomReport::fail(format!(
                    "Axiom 2: witnesses for h = {h} are not unique: {}",
                    ws.join(", ")
                ));
            }
        }
    }
    AxiomReport::ok()
}

/// Axioms 1–2 for a pattern (domain must cover `B(e, ρ²)`).
pub fn axioms_check(rho: usize, z: &Pattern<OrbitSymbol>) -> AxiomReport {
    let rank = z.iter().next().map(|(_, s)| s.rank()).unwrap_or(1);
    axioms_check_with(rank, rho, |g| z.get(g).cloned())
}

/// The orbit-change SFT `Z_ρ`, membership by [`axioms_check_with`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZRho {
    rank: usize,
    rho: usize,
}

/// Largest `ρ` accepted for `Z_ρ` by default.
pub const DEFAULT_MAX_RHO: usize = 2;

impl ZRho {
    pub fn new(rank: usize, rho: usize) -> Result<ZRho> {
        ZRho::with_cap(rank, rho, DEFAULT_MAX_RHO)
    }

    pub fn with_cap(rank: usize, rho: usize, max_rho: usize) -> Result<ZRho> {
        if rho == 0 {
            return Err(Error::input("Z_rho needs rho ≥ 1"));
        }
        if rho > max_rho {
            return Err(Error::resource(format!(
                "rho = {rho} exceeds the cap {max_rho}"
            )));
        }
        FreeGroup::new(rank)?;
        Ok(ZRho { rank, rho })
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn to_json(&self) -> Value {
        json!({"builtin": "z_rho", "rho": self.rho})
    }

    fn entries_ok(&self, s: &OrbitSymbol) -> bool {
        let mut seen = HashSet::new();
        s.0.len() == 2 * self.rank
            && s.0
                .iter()
                .all(|g| !g.is_identity() && g.len() <= self.rho && seen.insert(g))
    }
}

impl Subshift for ZRho {
    type Symbol = OrbitSymbol;

    /// Axiom 2 reads cells up to length `ρ²`; the outer shell of the
    /// radius-`ρ²+1` window never enters the check.
    fn window_radius(&self) -> usize {
        self.rho * self.rho
    }

    fn allows(&self, ball: &BallIndex, cells: &[Option<&OrbitSymbol>]) -> bool {
        if cells.iter().flatten().any(|s| !self.entries_ok(s)) {
            return false;
        }
        if cells.iter().all(Option::is_some) {
            let report = axioms_check_with(self.rank, self.rho, |g| {
                ball.position(g).and_then(|k| cells[k].cloned())
            });
            return report.accepted;
        }
        // partial: Axiom 1 on assigned neighbors of the origin
        let Some(ze) = cells[0] else { return true };
        for k in 1..ball.len().min(1 + 2 * self.rank) {
            if let (Some(zs), Some((0, l))) = (cells[k], ball.parent(k)) {
                if !ze.get(l).mul(zs.get(l.inverse())).is_identity() {
                    return false;
                }
            }
        }
        true
    }

    fn candidate_symbols(&self) -> Vec<OrbitSymbol> {
        OrbitAlphabet::new(self.rank, self.rho).admissible_symbols()
    }
}

/// SFT spec file: explicit, or the builtin `{"builtin": "z_rho", "rho": ρ}`.
#[derive(Clone, Debug)]
pub enum SpecFile {
    Explicit(SftSpec),
    ZRho(ZRho),
}

impl SpecFile {
    pub fn from_json(v: &Value, group: &FreeGroup, max_rho: usize) -> Result<SpecFile> {
        match v.get("builtin").and_then(Value::as_str) {
            Some("z_rho") => {
                let rho = v
                    .get("rho")
                    .and_then(Value::as_u64)
                    .ok_or_else(|| Error::input("z_rho spec needs rho"))?;
                Ok(SpecFile::ZRho(ZRho::with_cap(
                    group.rank(),
                    rho as usize,
                    max_rho,
                )?))
            }
            Some(other) => Err(Error::input(format!("unknown builtin SFT {other:?}"))),
            None => Ok(SpecFile::Explicit(SftSpec::from_json(v, group)?)),
        }
    }
}

// ---------------------------------------------------------------------------
// sampler

/// Budget and restart policy of [`sample_sft_config`].
#[derive(Clone, Copy, Debug)]
pub struct SamplerBudget {
    /// Symbol trials per attempt.
    pub trials: usize,
    pub restarts: usize,
}

impl Default for SamplerBudget {
    fn default() -> Self {
        SamplerBudget {
            trials: 200_000,
            restarts: 8,
        }
    }
}

enum Search {
    Found,
    Exhausted,
    OutOfBudget,
}

/// Seeded backtracking search for `x` with every pullback name in the
/// subshift. Vertices are assigned in BFS order from vertex 0; each vertex
/// tries `hint` first (if given), then the candidate symbols in a seeded
/// random order. After a budget exhaustion the search restarts with a fresh
/// stream; if a search space is exhausted there is no solution and `None` is
/// returned at once. The result depends only on `(seed, σ)`.
pub fn sample_sft_config<S: Subshift>(
    spec: &S,
    sigma: &FiniteAction,
    seed: u64,
    budget: SamplerBudget,
    hint: Option<&S::Symbol>,
) -> Option<Vec<S::Symbol>> {
    let group = FreeGroup::new(sigma.rank()).expect("action rank is valid");
    let ball = BallIndex::new(&group, spec.window_radius());
    let table = sigma.window_table(&ball);
    let symbols = spec.candidate_symbols();
    let order = sigma.bfs_order();
    let n = sigma.n();
    for attempt in 0..=budget.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let mut x: Vec<Option<S::Symbol>> = vec![None; n];
        let mut trials = 0usize;
        match search(
            spec,
            &ball,
            &table,
            &symbols,
            &order,
            0,
            &mut x,
            &mut rng,
            &mut trials,
            budget.trials,
            hint,
        ) {
            Search::Found => {
                return Some(x.into_iter().map(|s| s.expect("all assigned")).collect())
            }
            Search::Exhausted => return None,
            Search::OutOfBudget => continue,
        }
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn search<S: Subshift>(
    spec: &S,
    ball: &BallIndex,
    table: &[Vec<u32>],
    symbols: &[S::Symbol],
    order: &[usize],
    depth: usize,
    x: &mut Vec<Option<S::Symbol>>,
    rng: &mut ChaCha8Rng,
    trials: &mut usize,
    max_trials: usize,
    hint: Option<&S::Symbol>,
) -> Search {
    if depth == order.len() {
        return Search::Found;
    }
    let v = order[depth];
    let mut idx: Vec<usize> = (0..symbols.len()).collect();
    idx.shuffle(rng);
    let hinted = hint.and_then(|h| symbols.iter().position(|s| s == h));
    if let Some(h) = hinted {
        idx.retain(|&i| i != h);
        idx.insert(0, h);
    }
    let mut candidates: Vec<S::Symbol> = idx.into_iter().map(|i| symbols[i].clone()).collect();
    if let Some(h) = hint {
        if hinted.is_none() {
            candidates.insert(0, h.clone());
        }
    }
    // vertices whose origin window contains v (windows are symmetric balls)
    let mut affected: Vec<usize> = table[v].iter().map(|&u| u as usize).collect();
    affected.sort_unstable();
    affected.dedup();
    for sym in candidates {
        *trials += 1;
        if *trials > max_trials {
            return Search::OutOfBudget;
        }
        x[v] = Some(sym);
        let ok = affected.iter().all(|&u| {
            let cells: Vec<Option<&S::Symbol>> =
                table[u].iter().map(|&w| x[w as usize].as_ref()).collect();
            spec.allows(ball, &cells)
        });
        if ok {
            match search(
                spec,
                ball,
                table,
                symbols,
                order,
                depth + 1,
                x,
                rng,
                trials,
                max_trials,
                hint,
            ) {
                Search::Exhausted => {}
                other => return other,
            }
        }
    }
    x[v] = None;
    Search::Exhausted
}
