//! Orbit-change maps on finite windows and the periodic-orbit rearrangement.
//!
//! A [`LocalBijection`] is the restriction of an identity-fixing bijection
//! `φ: G → G` with bounded displacement to a ball `B(e, R)`. Every operation
//! states how far the window shrinks; asking for values outside the window is
//! a [`Error::Window`] rather than a silent truncation.
//!
//! Conventions: `(Θ^h φ)(g) = φ(h⁻¹)⁻¹ φ(h⁻¹g)`, `(℧^h φ)(g) = h φ(φ⁻¹(h⁻¹) g)`,
//! `𝓔(φ)_h(s) = φ(h)⁻¹ φ(hs)` and `𝓕(φ)_h(s) = h⁻¹ φ(φ⁻¹(h) s)`.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::action::FiniteAction;
use crate::error::{Error, Result};
use crate::free_group::{FreeGroup, GroupWord, Letter};
use crate::sft::{axioms_check_with, first_violation, OrbitSymbol, ZRho};
use crate::shift::{pullback_name, Pattern, Symbol};

/// `φ` restricted to `B(e, R)`, with displacement bound `ρ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalBijection {
    rank: usize,
    window: usize,
    rho: usize,
    map: BTreeMap<GroupWord, GroupWord>,
    inverse: HashMap<GroupWord, GroupWord>,
}

impl LocalBijection {
    /// Validates `φ(e) = e`, injectivity, and the displacement bound in both
    /// directions wherever it can be evaluated inside the window.
    pub fn new(
        rank: usize,
        window: usize,
        rho: usize,
        map: BTreeMap<GroupWord, GroupWord>,
    ) -> Result<LocalBijection> {
        let group = FreeGroup::new(rank)?;
        if map.len() != group.ball_size(window)
            || map.keys().any(|g| g.len() > window || !group.contains(g))
        {
            return Err(Error::input(format!(
                "map must be defined exactly on B(e, {window})"
            )));
        }
        if map.values().any(|g| !group.contains(g)) {
            return Err(Error::input("map values use generators beyond the rank"));
        }
        if !map[&GroupWord::identity()].is_identity() {
            return Err(Error::input("φ(e) must be e"));
        }
        let mut inverse = HashMap::with_capacity(map.len());
        for (g, img) in &map {
            if let Some(other) = inverse.insert(img.clone(), g.clone()) {
                return Err(Error::input(format!(
                    "not injective: φ({other}) = φ({g}) = {img}"
                )));
            }
        }
        let phi = LocalBijection {
            rank,
            window,
            rho,
            map,
            inverse,
        };
        for (g, img) in &phi.map {
            for s in group.letters() {
                let gs = g.mul_letter(s);
                if let Some(next) = phi.map.get(&gs) {
                    let step = img.inv().mul(next);
                    if step.len() > rho {
                        return Err(Error::input(format!(
                            "displacement φ({g})⁻¹φ({gs}) = {step} exceeds {rho}"
                        )));
                    }
                }
                let ht = img.mul_letter(s);
                if let Some(pre) = phi.inverse.get(&ht) {
                    let step = g.inv().mul(pre);
                    if step.len() > rho {
                        return Err(Error::input(format!(
                            "inverse displacement φ⁻¹({img})⁻¹φ⁻¹({ht}) = {step} exceeds {rho}"
                        )));
                    }
                }
            }
        }
        Ok(phi)
    }

    pub fn from_fn(
        rank: usize,
        window: usize,
        rho: usize,
        f: impl Fn(&GroupWord) -> GroupWord,
    ) -> Result<LocalBijection> {
        let group = FreeGroup::new(rank)?;
        LocalBijection::new(
            rank,
            window,
            rho,
            group
                .ball(window)
                .into_iter()
                .map(|g| {
                    let v = f(&g);
                    (g, v)
                })
                .collect(),
        )
    }

    pub fn identity(rank: usize, window: usize) -> LocalBijection {
        LocalBijection::from_fn(rank, window, 1, GroupWord::clone).expect("identity is a bijection")
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    pub fn table(&self) -> &BTreeMap<GroupWord, GroupWord> {
        &self.map
    }

    pub fn get(&self, g: &GroupWord) -> Option<&GroupWord> {
        self.map.get(g)
    }

    /// `φ(g)`, or a window error.
    pub fn eval(&self, g: &GroupWord) -> Result<GroupWord> {
        self.map
            .get(g)
            .cloned()
            .ok_or_else(|| Error::window(format!("{g} is outside B(e, {})", self.window)))
    }

    /// `φ⁻¹(h)` when the preimage lies in the window.
    pub fn preimage(&self, h: &GroupWord) -> Option<&GroupWord> {
        self.inverse.get(h)
    }

    /// The orbit symbol `s ↦ φ(g)⁻¹ φ(gs)`; needs `|g| < R`.
    pub fn cell(&self, g: &GroupWord) -> Option<OrbitSymbol> {
        if g.len() >= self.window {
            return None;
        }
        let base = self.map.get(g)?.inv();
        Some(OrbitSymbol::from_fn(self.rank, |s| {
            base.mul(&self.map[&g.mul_letter(s)])
        }))
    }

    /// Restriction to a smaller ball.
    pub fn restrict(&self, window: usize) -> Result<LocalBijection> {
        if window > self.window {
            return Err(Error::window(format!(
                "cannot extend B(e, {}) to B(e, {window})",
                self.window
            )));
        }
        let map = self
            .map
            .iter()
            .filter(|(g, _)| g.len() <= window)
            .map(|(g, v)| (g.clone(), v.clone()))
            .collect();
        LocalBijection::new(self.rank, window, self.rho, map)
    }

    /// Whether the two tables agree on the smaller window.
    pub fn agrees_with(&self, other: &LocalBijection) -> bool {
        let (small, big) = if self.window <= other.window {
            (self, other)
        } else {
            (other, self)
        };
        small.map.iter().all(|(g, v)| big.map.get(g) == Some(v))
    }

    /// `{"window": R, "rho": ρ, "map": {"g": "φ(g)", ...}}`.
    pub fn to_json(&self) -> Value {
        let map: serde_json::Map<String, Value> = self
            .map
            .iter()
            .map(|(g, v)| (g.to_string(), Value::String(v.to_string())))
            .collect();
        json!({ "window": self.window, "rho": self.rho, "map": map })
    }

    pub fn from_json(v: &Value, rank: usize) -> Result<LocalBijection> {
        let window = v
            .get("window")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::input("missing window"))? as usize;
        let rho = v
            .get("rho")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::input("missing rho"))? as usize;
        let obj = v
            .get("map")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::input("missing map"))?;
        let mut map = BTreeMap::new();
        for (g, img) in obj {
            let img = img
                .as_str()
                .ok_or_else(|| Error::input("map values are words"))?;
            map.insert(GroupWord::parse(g, rank)?, GroupWord::parse(img, rank)?);
        }
        LocalBijection::new(rank, window, rho, map)
    }
}

/// `Θ^h φ`; the window shrinks by `|h|`.
pub fn theta_action(h: &GroupWord, phi: &LocalBijection) -> Result<LocalBijection> {
    if h.len() > phi.window {
        return Err(Error::window(format!(
            "|{h}| exceeds the window {}",
            phi.window
        )));
    }
    let hi = h.inv();
    let base = phi.eval(&hi)?.inv();
    let group = FreeGroup::new(phi.rank)?;
    let map = group
        .ball(phi.window - h.len())
        .into_iter()
        .map(|g| {
            let v = base.mul(&phi.map[&hi.mul(&g)]);
            (g, v)
        })
        .collect();
    LocalBijection::new(phi.rank, phi.window - h.len(), phi.rho, map)
}

/// The element `φ⁻¹(h⁻¹)⁻¹` with `℧^h φ = Θ^{h'} φ`.
pub fn upsilon_witness(h: &GroupWord, phi: &LocalBijection) -> Result<GroupWord> {
    let pre = phi.preimage(&h.inv()).ok_or_else(|| {
        Error::window(format!(
            "φ⁻¹({}) is not in the image of B(e, {})",
            h.inv(),
            phi.window
        ))
    })?;
    if pre.len() > phi.rho * h.len() {
        return Err(Error::verification(format!(
            "|φ⁻¹({})| = {} exceeds ρ|h| = {}",
            h.inv(),
            pre.len(),
            phi.rho * h.len()
        )));
    }
    Ok(pre.inv())
}

/// The element `φ(h'⁻¹)⁻¹` with `Θ^{h'} φ = ℧^h φ` (converse witness).
pub fn theta_witness(h_prime: &GroupWord, phi: &LocalBijection) -> Result<GroupWord> {
    Ok(phi.eval(&h_prime.inv())?.inv())
}

/// `℧^h φ`, computed from `h φ(φ⁻¹(h⁻¹) g)`; the window shrinks by `ρ|h|`.
pub fn upsilon_action(h: &GroupWord, phi: &LocalBijection) -> Result<LocalBijection> {
    let shrink = phi.rho * h.len();
    if shrink > phi.window {
        return Err(Error::window(format!(
            "ρ|{h}| exceeds the window {}",
            phi.window
        )));
    }
    let k = upsilon_witness(h, phi)?.inv();
    let group = FreeGroup::new(phi.rank)?;
    let map = group
        .ball(phi.window - shrink)
        .into_iter()
        .map(|g| {
            let v = h.mul(&phi.map[&k.mul(&g)]);
            (g, v)
        })
        .collect();
    LocalBijection::new(phi.rank, phi.window - shrink, phi.rho, map)
}

/// `𝓔(φ)` on `B(e, R − 1)`.
pub fn encode_e(phi: &LocalBijection) -> Result<Pattern<OrbitSymbol>> {
    if phi.window == 0 {
        return Err(Error::window("𝓔 needs a window of radius at least 1"));
    }
    let group = FreeGroup::new(phi.rank)?;
    Ok(Pattern::from_pairs(
        group.ball(phi.window - 1).into_iter().map(|h| {
            let sym = phi.cell(&h).expect("inside the window");
            (h, sym)
        }),
    ))
}

/// Radius `m` when the domain of `x` is exactly `B(e, m)`.
fn ball_radius<T: Symbol>(x: &Pattern<T>, rank: usize) -> Result<usize> {
    let group = FreeGroup::new(rank)?;
    let m = x
        .domain()
        .map(GroupWord::len)
        .max()
        .ok_or_else(|| Error::input("empty pattern"))?;
    if x.len() != group.ball_size(m) || x.domain().any(|g| !group.contains(g)) {
        return Err(Error::input("pattern domain is not a ball around e"));
    }
    Ok(m)
}

/// `𝓔⁻¹` by telescoping: `φ(gs) = φ(g) x_g(s)` along shortlex parents.
///
/// A pattern on `B(e, m)` gives `φ` on `B(e, m + 1)`; `ρ` is the largest
/// entry length. A collision, or a displacement violation, is returned as a
/// verification error naming the offending words.
pub fn decode_e(x: &Pattern<OrbitSymbol>) -> Result<LocalBijection> {
    let rank = x
        .iter()
        .next()
        .map(|(_, s)| s.rank())
        .ok_or_else(|| Error::input("empty pattern"))?;
    let m = ball_radius(x, rank)?;
    let group = FreeGroup::new(rank)?;
    let outer = group.ball(m + 1);
    let mut map: BTreeMap<GroupWord, GroupWord> = BTreeMap::new();
    let mut seen: HashMap<GroupWord, GroupWord> = HashMap::new();
    for g in outer {
        let v = match g.parent() {
            None => GroupWord::identity(),
            Some(p) => map[&p].mul(
                x.get(&p)
                    .expect("ball domain")
                    .get(g.last().expect("nonempty")),
            ),
        };
        if let Some(other) = seen.insert(v.clone(), g.clone()) {
            return Err(Error::verification(format!(
                "decoded map is not injective: φ({other}) = φ({g}) = {v}"
            )));
        }
        map.insert(g, v);
    }
    let rho = x
        .iter()
        .map(|(_, s)| s.displacement())
        .max()
        .unwrap_or(1)
        .max(1);
    LocalBijection::new(rank, m + 1, rho, map).map_err(|e| Error::verification(e.to_string()))
}

/// `φ⁻¹(target)` by the witness search: starting from `ψ = e`, each letter
/// `t` of the target is matched by the unique reduced `w`, `|w| ≤ ρ`, with
/// `x_ψ(w_1) x_{ψw_1}(w_2) ⋯ = t`, and `ψ ← ψw`.
///
/// `cell(k)` returns the orbit symbol at `k` (`None` outside the window).
pub fn inverse_search(
    rank: usize,
    rho: usize,
    target: &GroupWord,
    cell: impl Fn(&GroupWord) -> Option<OrbitSymbol>,
) -> Result<GroupWord> {
    let group = FreeGroup::new(rank)?;
    let candidates = group.ball(rho);
    let mut psi = GroupWord::identity();
    for &t in target.letters() {
        let goal = GroupWord::letter(t);
        let mut found: Vec<&GroupWord> = Vec::new();
        for w in candidates.iter().skip(1) {
            let mut prod = GroupWord::identity();
            let mut cur = psi.clone();
            for &s in w.letters() {
                let sym = cell(&cur)
                    .ok_or_else(|| Error::window(format!("cell {cur} is outside the window")))?;
                prod = prod.mul(sym.get(s));
                cur = cur.mul_letter(s);
            }
            if prod == goal {
                found.push(w);
            }
        }
        match found.as_slice() {
            [w] => psi = psi.mul(w),
            [] => {
                return Err(Error::verification(format!(
                    "no witness of length ≤ {rho} for {t} at {psi}"
                )))
            }
            many => {
                let ws: Vec<String> = many.iter().map(|w| w.to_string()).collect();
                return Err(Error::verification(format!(
                    "witnesses for {t} at {psi} are not unique: {}",
                    ws.join(", ")
                )));
            }
        }
    }
    Ok(psi)
}

/// `φ⁻¹(target)` through the witness search on `φ`'s own cells.
pub fn inverse_eval(phi: &LocalBijection, target: &GroupWord) -> Result<GroupWord> {
    inverse_search(phi.rank, phi.rho, target, |k| phi.cell(k))
}

/// `𝓕(φ)` on `B(e, ⌊(R − 1)/ρ⌋)`.
pub fn encode_f(phi: &LocalBijection) -> Result<Pattern<OrbitSymbol>> {
    if phi.window == 0 {
        return Err(Error::window("𝓕 needs a window of radius at least 1"));
    }
    let group = FreeGroup::new(phi.rank)?;
    let m = (phi.window - 1) / phi.rho;
    group
        .ball(m)
        .into_iter()
        .map(|h| {
            let k = phi
                .preimage(&h)
                .filter(|k| k.len() < phi.window)
                .ok_or_else(|| {
                    Error::window(format!(
                        "φ⁻¹({h}) is not evaluable in B(e, {})",
                        phi.window - 1
                    ))
                })?;
            let hi = h.inv();
            let sym = OrbitSymbol::from_fn(phi.rank, |s| hi.mul(&phi.map[&k.mul_letter(s)]));
            Ok((h, sym))
        })
        .collect::<Result<Vec<_>>>()
        .map(Pattern::from_pairs)
}

/// `y ∘ φ⁻¹`, defined on `φ(dom y ∩ B(e, R))`.
pub fn pull_labels<T: Symbol>(y: &Pattern<T>, phi: &LocalBijection) -> Pattern<T> {
    Pattern::from_pairs(
        y.iter()
            .filter_map(|(k, s)| phi.get(k).map(|g| (g.clone(), s.clone()))),
    )
}

/// `𝓔̃(φ, y) = (𝓔(φ), y)`.
pub fn product_encode_e<T: Symbol>(
    phi: &LocalBijection,
    y: &Pattern<T>,
) -> Result<(Pattern<OrbitSymbol>, Pattern<T>)> {
    Ok((encode_e(phi)?, y.clone()))
}

/// `𝓔̃⁻¹(x, y) = (𝓔⁻¹(x), y)`.
pub fn product_decode_e<T: Symbol>(
    x: &Pattern<OrbitSymbol>,
    y: &Pattern<T>,
) -> Result<(LocalBijection, Pattern<T>)> {
    Ok((decode_e(x)?, y.clone()))
}

/// `𝓕̃(φ, y) = (𝓕(φ), y ∘ φ⁻¹)`.
pub fn product_encode_f<T: Symbol>(
    phi: &LocalBijection,
    y: &Pattern<T>,
) -> Result<(Pattern<OrbitSymbol>, Pattern<T>)> {
    Ok((encode_f(phi)?, pull_labels(y, phi)))
}

/// `Θ̃^h(φ, y) = (Θ^h φ, h y)`.
pub fn theta_tilde<T: Symbol>(
    h: &GroupWord,
    phi: &LocalBijection,
    y: &Pattern<T>,
) -> Result<(LocalBijection, Pattern<T>)> {
    Ok((theta_action(h, phi)?, y.shift(h)))
}

/// `℧̃^h(φ, y) = (℧^h φ, φ⁻¹(h⁻¹)⁻¹ y)`.
pub fn upsilon_tilde<T: Symbol>(
    h: &GroupWord,
    phi: &LocalBijection,
    y: &Pattern<T>,
) -> Result<(LocalBijection, Pattern<T>)> {
    let k = upsilon_witness(h, phi)?;
    Ok((upsilon_action(h, phi)?, y.shift(&k)))
}

/// Outcome of comparing two patterns wherever both are defined.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Comparison {
    pub agrees: bool,
    /// Number of cells compared.
    pub compared: usize,
}

impl Comparison {
    fn of<T: Symbol>(a: &Pattern<T>, b: &Pattern<T>) -> Comparison {
        Comparison {
            agrees: a.agrees_with(b),
            compared: a.overlap(b),
        }
    }

    fn and(self, other: Comparison) -> Comparison {
        Comparison {
            agrees: self.agrees && other.agrees,
            compared: self.compared + other.compared,
        }
    }
}

/// `𝓔(Θ^h φ)` against `h 𝓔(φ)`.
pub fn check_equi_e(h: &GroupWord, phi: &LocalBijection) -> Result<Comparison> {
    Ok(Comparison::of(
        &encode_e(&theta_action(h, phi)?)?,
        &encode_e(phi)?.shift(h),
    ))
}

/// `𝓕(℧^h φ)` against `h 𝓕(φ)`.
pub fn check_equi_f(h: &GroupWord, phi: &LocalBijection) -> Result<Comparison> {
    Ok(Comparison::of(
        &encode_f(&upsilon_action(h, phi)?)?,
        &encode_f(phi)?.shift(h),
    ))
}

/// `𝓔̃ ∘ Θ̃^h` against `h 𝓔̃`.
pub fn check_equi_product_e<T: Symbol>(
    h: &GroupWord,
    phi: &LocalBijection,
    y: &Pattern<T>,
) -> Result<Comparison> {
    let (p, z) = theta_tilde(h, phi, y)?;
    let (lx, ly) = product_encode_e(&p, &z)?;
    let (rx, ry) = product_encode_e(phi, y)?;
    Ok(Comparison::of(&lx, &rx.shift(h)).and(Comparison::of(&ly, &ry.shift(h))))
}

/// `𝓕̃ ∘ ℧̃^h` against `h 𝓕̃`.
pub fn check_equi_product_f<T: Symbol>(
    h: &GroupWord,
    phi: &LocalBijection,
    y: &Pattern<T>,
) -> Result<Comparison> {
    let (p, z) = upsilon_tilde(h, phi, y)?;
    let (lx, ly) = product_encode_f(&p, &z)?;
    let (rx, ry) = product_encode_f(phi, y)?;
    Ok(Comparison::of(&lx, &rx.shift(h)).and(Comparison::of(&ly, &ry.shift(h))))
}

/// `℧^h φ = Θ^{h'} φ` with `h' = φ⁻¹(h⁻¹)⁻¹`, and conversely
/// `Θ^{h'} φ = ℧^{φ(h'⁻¹)⁻¹} φ`; both on the common window.
pub fn check_same_orbit(h: &GroupWord, phi: &LocalBijection) -> Result<bool> {
    let forward =
        upsilon_action(h, phi)?.agrees_with(&theta_action(&upsilon_witness(h, phi)?, phi)?);
    let back_h = theta_witness(h, phi)?;
    let backward = theta_action(h, phi)?.agrees_with(&upsilon_action(&back_h, phi)?);
    Ok(forward && backward)
}

/// Truncated metric on identity-fixing bijections: shortlex enumeration
/// `g_1, g_2, ...` of the smaller window, weight `2^{-i}` for each
/// disagreement of `φ(g_i)` or of `φ⁻¹(g_i)`.
pub fn bijection_distance(phi: &LocalBijection, psi: &LocalBijection) -> f64 {
    let window = phi.window.min(psi.window);
    let mut scale = 0.5;
    let mut d = 0.0;
    for g in phi.map.keys().filter(|g| g.len() <= window) {
        let forward = phi.get(g) != psi.get(g);
        let backward = phi.preimage(g) != psi.preimage(g);
        d += scale * (forward as u8 + backward as u8) as f64;
        scale *= 0.5;
    }
    d
}

// ---------------------------------------------------------------------------
// automorphisms

/// Radius of the ball searched for inverse images.
const INVERSE_SEARCH_RADIUS: usize = 6;

/// An automorphism of the free group, by generator images.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automorphism {
    images: Vec<GroupWord>,
    inverse_images: Vec<GroupWord>,
}

impl Automorphism {
    pub fn identity(rank: usize) -> Automorphism {
        let images: Vec<GroupWord> = (0..rank).map(GroupWord::generator).collect();
        Automorphism {
            inverse_images: images.clone(),
            images,
        }
    }

    /// `s_i ↔ s_j`.
    pub fn swap(rank: usize, i: usize, j: usize) -> Automorphism {
        let mut a = Automorphism::identity(rank);
        a.images.swap(i, j);
        a.inverse_images.swap(i, j);
        a
    }

    /// `s_i ↦ s_i⁻¹`.
    pub fn invert(rank: usize, i: usize) -> Automorphism {
        let mut a = Automorphism::identity(rank);
        a.images[i] = a.images[i].inv();
        a.inverse_images[i] = a.inverse_images[i].inv();
        a
    }

    /// Nielsen move `s_i ↦ s_i s_j` (`i ≠ j`).
    pub fn nielsen(rank: usize, i: usize, j: usize) -> Automorphism {
        assert_ne!(i, j, "a Nielsen move needs two distinct generators");
        let mut a = Automorphism::identity(rank);
        a.images[i] = GroupWord::generator(i).mul(&GroupWord::generator(j));
        a.inverse_images[i] = GroupWord::generator(i).mul(&GroupWord::generator(j).inv());
        a
    }

    /// From generator images; the inverse is found by search, and the map is
    /// checked to be a bijection on `B(e, 2ρ)` with its inverse.
    pub fn from_images(images: Vec<GroupWord>) -> Result<Automorphism> {
        let rank = images.len();
        let group = FreeGroup::new(rank)?;
        if images.iter().any(|g| !group.contains(g) || g.is_identity()) {
            return Err(Error::input(
                "generator images must be nonidentity words in the group",
            ));
        }
        let forward = Automorphism {
            images,
            inverse_images: Vec::new(),
        };
        let mut inverse_images = Vec::with_capacity(rank);
        let ball = group.ball(INVERSE_SEARCH_RADIUS);
        for i in 0..rank {
            let target = GroupWord::generator(i);
            let pre = ball.iter().find(|w| forward.apply(w) == target).ok_or_else(|| {
                Error::input(format!(
                    "images do not define a bijection: no preimage of {target} within B(e, {INVERSE_SEARCH_RADIUS})"
                ))
            })?;
            inverse_images.push(pre.clone());
        }
        let theta = Automorphism {
            images: forward.images,
            inverse_images,
        };
        let test = group.ball(2 * theta.displacement());
        let mut seen = HashMap::new();
        for g in &test {
            let img = theta.apply(g);
            if theta.apply_inverse(&img) != *g {
                return Err(Error::input(format!(
                    "images do not define a bijection: θ⁻¹(θ({g})) ≠ {g}"
                )));
            }
            if seen.insert(img, g).is_some() {
                return Err(Error::input(
                    "images do not define a bijection on the test ball",
                ));
            }
        }
        Ok(theta)
    }

    /// `{"images": {"a": "ab", "b": "b"}}`; missing generators are fixed.
    pub fn from_json(v: &Value, rank: usize) -> Result<Automorphism> {
        let group = FreeGroup::new(rank)?;
        let obj = v
            .get("images")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::input("missing images"))?;
        let mut images: Vec<GroupWord> = (0..rank).map(GroupWord::generator).collect();
        for (k, w) in obj {
            let l = GroupWord::parse(k, rank)?;
            let i = match l.letters() {
                [l] if !l.is_inverse() => l.generator(),
                _ => {
                    return Err(Error::input(format!(
                        "image keys are generators, got {k:?}"
                    )))
                }
            };
            images[i] = group.parse(w.as_str().ok_or_else(|| Error::input("images are words"))?)?;
        }
        Automorphism::from_images(images)
    }

    pub fn to_json(&self) -> Value {
        let images: serde_json::Map<String, Value> = self
            .images
            .iter()
            .enumerate()
            .map(|(i, g)| {
                (
                    GroupWord::generator(i).to_string(),
                    Value::String(g.to_string()),
                )
            })
            .collect();
        json!({ "images": images })
    }

    pub fn rank(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[GroupWord] {
        &self.images
    }

    fn eval(table: &[GroupWord], g: &GroupWord) -> GroupWord {
        g.letters().iter().fold(GroupWord::identity(), |acc, l| {
            let img = &table[l.generator()];
            if l.is_inverse() {
                acc.mul(&img.inv())
            } else {
                acc.mul(img)
            }
        })
    }

    pub fn apply(&self, g: &GroupWord) -> GroupWord {
        Automorphism::eval(&self.images, g)
    }

    pub fn apply_inverse(&self, g: &GroupWord) -> GroupWord {
        Automorphism::eval(&self.inverse_images, g)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Automorphism) -> Automorphism {
        Automorphism {
            images: other.images.iter().map(|g| self.apply(g)).collect(),
            inverse_images: self
                .inverse_images
                .iter()
                .map(|g| other.apply_inverse(g))
                .collect(),
        }
    }

    pub fn inverse(&self) -> Automorphism {
        Automorphism {
            images: self.inverse_images.clone(),
            inverse_images: self.images.clone(),
        }
    }

    /// Largest `|θ(s)|` or `|θ⁻¹(s)|`: the least `ρ` with `θ ∈ sym_ρ(G)`.
    pub fn displacement(&self) -> usize {
        self.images
            .iter()
            .chain(&self.inverse_images)
            .map(GroupWord::len)
            .max()
            .unwrap_or(1)
    }

    /// The table of `θ` on `B(e, window)`.
    pub fn table(&self, window: usize) -> LocalBijection {
        LocalBijection::from_fn(self.rank(), window, self.displacement(), |g| self.apply(g))
            .expect("automorphisms are bijections with bounded displacement")
    }

    /// The orbit symbol `s ↦ θ(s)`, i.e. `𝓔(θ)_h` for every `h`.
    pub fn symbol(&self) -> OrbitSymbol {
        OrbitSymbol::from_fn(self.rank(), |s| self.apply(&GroupWord::letter(s)))
    }

    /// The constant microstate `x(v) = θ`-symbol: every pullback decodes to `θ`.
    pub fn constant_config(&self, n: usize) -> Vec<OrbitSymbol> {
        vec![self.symbol(); n]
    }

    /// Product of `steps` random elementary moves (swaps, inversions,
    /// Nielsen moves).
    pub fn random<R: Rng + ?Sized>(rank: usize, steps: usize, rng: &mut R) -> Automorphism {
        let mut theta = Automorphism::identity(rank);
        for _ in 0..steps {
            let i = rng.random_range(0..rank);
            let j = rng.random_range(0..rank);
            let mv = match rng.random_range(0..3) {
                0 => Automorphism::swap(rank, i, j),
                1 => Automorphism::invert(rank, i),
                _ if i != j => Automorphism::nielsen(rank, i, j),
                _ => Automorphism::invert(rank, i),
            };
            theta = mv.compose(&theta);
        }
        theta
    }
}

// ---------------------------------------------------------------------------
// periodic-orbit rearrangement

/// `φ_v = 𝓔⁻¹(x^σ_v)` on `B(e, window)`.
pub fn vertex_bijection(
    sigma: &FiniteAction,
    x: &[OrbitSymbol],
    v: usize,
    window: usize,
) -> Result<LocalBijection> {
    if window == 0 {
        return Ok(LocalBijection::identity(sigma.rank(), 0));
    }
    let group = FreeGroup::new(sigma.rank())?;
    decode_e(&pullback_name(&group, sigma, x, v, window - 1))
}

/// `φ_v⁻¹(target)` by the witness search on the periodic point `x^σ_v`.
pub fn vertex_inverse(
    sigma: &FiniteAction,
    x: &[OrbitSymbol],
    rho: usize,
    v: usize,
    target: &GroupWord,
) -> Result<GroupWord> {
    inverse_search(sigma.rank(), rho, target, |k| {
        Some(x[sigma.act_inverse(k, v)].clone())
    })
}

/// First vertex whose pullback name is not in `Z_ρ`, as an error.
pub fn check_zrho(sigma: &FiniteAction, x: &[OrbitSymbol], rho: usize) -> Result<()> {
    if x.len() != sigma.n() {
        return Err(Error::input(format!(
            "labeling has {} entries for {} vertices",
            x.len(),
            sigma.n()
        )));
    }
    let spec = ZRho::with_cap(sigma.rank(), rho, usize::MAX)?;
    match first_violation(&spec, sigma, x) {
        None => Ok(()),
        Some(v) => {
            let report = axioms_check_with(sigma.rank(), rho, |g| {
                Some(x[sigma.act_inverse(g, v)].clone())
            });
            let reason = report
                .reason
                .unwrap_or_else(|| "symbol outside the orbit alphabet".into());
            Err(Error::verification(format!(
                "x^σ_{v} is not in Z_{rho}: {reason}"
            )))
        }
    }
}

/// `τ(g) v = σ(φ_v⁻¹(g⁻¹)⁻¹) v`, evaluated directly for one `g` and `v`.
pub fn tau_formula(
    sigma: &FiniteAction,
    x: &[OrbitSymbol],
    rho: usize,
    g: &GroupWord,
    v: usize,
) -> Result<usize> {
    let w = vertex_inverse(sigma, x, rho, v, &g.inv())?;
    Ok(sigma.act_inverse(&w, v))
}

/// The rearranged action `τ`, built from the formula on generators.
pub fn tau_construct(sigma: &FiniteAction, x: &[OrbitSymbol], rho: usize) -> Result<FiniteAction> {
    check_zrho(sigma, x, rho)?;
    let perms = (0..sigma.rank())
        .map(|i| {
            let s = GroupWord::generator(i);
            (0..sigma.n())
                .into_par_iter()
                .map(|v| tau_formula(sigma, x, rho, &s, v).map(|u| u as u32))
                .collect::<Result<Vec<u32>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    FiniteAction::new(perms).map_err(|e| Error::verification(format!("τ is not an action: {e}")))
}

/// `Υ_n(σ, x, y) = (τ, x, y)`.
pub fn upsilon<T: Clone>(
    sigma: &FiniteAction,
    x: &[OrbitSymbol],
    y: &[T],
    rho: usize,
) -> Result<(FiniteAction, Vec<OrbitSymbol>, Vec<T>)> {
    if y.len() != sigma.n() {
        return Err(Error::input("label microstate has the wrong length"));
    }
    Ok((tau_construct(sigma, x, rho)?, x.to_vec(), y.to_vec()))
}

/// Recovers `σ` from `τ` and `x`: `σ(s) v = τ(x(v)(s⁻¹)⁻¹) v`.
pub fn reconstruct_sigma(tau: &FiniteAction, x: &[OrbitSymbol]) -> Result<FiniteAction> {
    if x.len() != tau.n() {
        return Err(Error::input("labeling length does not match the action"));
    }
    let perms = (0..tau.rank())
        .map(|i| {
            let s = Letter::new(i, false);
            (0..tau.n())
                .map(|v| tau.act_inverse(x[v].get(s.inverse()), v) as u32)
                .collect()
        })
        .collect();
    FiniteAction::new(perms)
        .map_err(|e| Error::verification(format!("reconstruction is not an action: {e}")))
}

/// Summary of the rearrangement identities for one `(σ, x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RearrangeReport {
    pub tau: FiniteAction,
    /// Word pairs × vertices checked for `τ(g)τ(h)v = τ(gh)v`.
    pub multiplicative_checks: usize,
    pub multiplicative_failures: usize,
    /// Vertices where `x^τ_v ≠ 𝓕(𝓔⁻¹(x^σ_v))` on the window.
    pub pullback_failures: Vec<usize>,
    /// Vertices where `y^τ_v ≠ y^σ_v ∘ φ_v⁻¹` on the window.
    pub label_failures: Vec<usize>,
    pub reconstructs_sigma: bool,
    /// ℓ¹ distance between `P^τ_{(x,y)}` and `(𝓕̃∘𝓔̃⁻¹)_* P^σ_{(x,y)}` on the window.
    pub pushforward_distance: f64,
}

impl RearrangeReport {
    pub fn passed(&self) -> bool {
        self.multiplicative_failures == 0
            && self.pullback_failures.is_empty()
            && self.label_failures.is_empty()
            && self.reconstructs_sigma
            && self.pushforward_distance == 0.0
    }
}

/// Random reduced word of length at most `max_len`.
pub fn random_word<R: Rng + ?Sized>(rank: usize, max_len: usize, rng: &mut R) -> GroupWord {
    let len = rng.random_range(0..=max_len);
    let mut w = GroupWord::identity();
    while w.len() < len {
        let l = Letter::from_code(rng.random_range(0..2 * rank));
        if w.last() != Some(l.inverse()) {
            w = w.mul_letter(l);
        }
    }
    w
}

/// Builds `τ` and checks multiplicativity (`pairs` random word pairs of
/// length ≤ 2, all vertices), the pullback identities on `B(e, m)`,
/// `σ`-reconstruction and the pushforward of empirical distributions.
pub fn verify_rearrangement<R: Rng + ?Sized>(
    sigma: &FiniteAction,
    x: &[OrbitSymbol],
    y: &[u32],
    rho: usize,
    m: usize,
    pairs: usize,
    rng: &mut R,
) -> Result<RearrangeReport> {
    let (tau, _, _) = upsilon(sigma, x, y, rho)?;
    let rank = sigma.rank();
    let n = sigma.n();
    let words: Vec<(GroupWord, GroupWord)> = (0..pairs)
        .map(|_| (random_word(rank, 2, rng), random_word(rank, 2, rng)))
        .collect();
    let multiplicative_failures: usize = words
        .par_iter()
        .map(|(g, h)| -> Result<usize> {
            let gh = g.mul(h);
            let mut bad = 0;
            for v in 0..n {
                let lhs = tau_formula(sigma, x, rho, g, tau_formula(sigma, x, rho, h, v)?)?;
                let rhs = tau_formula(sigma, x, rho, &gh, v)?;
                if lhs != rhs || rhs != tau.act(&gh, v) {
                    bad += 1;
                }
            }
            Ok(bad)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();

    let group = FreeGroup::new(rank)?;
    let window = group.ball(m);
    type Key = (Vec<OrbitSymbol>, Vec<u32>);
    let per_vertex: Vec<(bool, bool, Key, Key)> = (0..n)
        .into_par_iter()
        .map(|v| -> Result<_> {
            let phi = vertex_bijection(sigma, x, v, rho * m + 1)?;
            let fx = encode_f(&phi)?;
            let fy = pull_labels(&pullback_name(&group, sigma, y, v, rho * m), &phi);
            let tx = pullback_name(&group, &tau, x, v, m);
            let ty = pullback_name(&group, &tau, y, v, m);
            let fx = fx
                .values_on(&window)
                .ok_or_else(|| Error::window("𝓕 window too small"))?;
            let fy = fy
                .values_on(&window)
                .ok_or_else(|| Error::window("label window too small"))?;
            let tx = tx.values_on(&window).expect("ball window");
            let ty = ty.values_on(&window).expect("ball window");
            Ok((fx == tx, fy == ty, (fx, fy), (tx, ty)))
        })
        .collect::<Result<_>>()?;
    let pullback_failures = per_vertex
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.0)
        .map(|(v, _)| v)
        .collect();
    let label_failures = per_vertex
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.1)
        .map(|(v, _)| v)
        .collect();
    let mut pushed: BTreeMap<&Key, i64> = BTreeMap::new();
    for (_, _, k, t) in &per_vertex {
        *pushed.entry(k).or_insert(0) += 1;
        *pushed.entry(t).or_insert(0) -= 1;
    }
    let pushforward_distance =
        pushed.values().map(|c| c.unsigned_abs()).sum::<u64>() as f64 / n as f64;
    let reconstructs_sigma = reconstruct_sigma(&tau, x)? == *sigma;
    Ok(RearrangeReport {
        tau,
        multiplicative_checks: pairs * n,
        multiplicative_failures,
        pullback_failures,
        label_failures,
        reconstructs_sigma,
        pushforward_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::{axioms_check, sample_sft_config, SamplerBudget};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(s: &str) -> GroupWord {
        GroupWord::parse(s, 2).unwrap()
    }

    fn swap() -> Automorphism {
        Automorphism::swap(2, 0, 1)
    }

    #[test]
    fn theta_and_upsilon_fix_automorphisms() {
        let id = LocalBijection::identity(2, 4);
        assert!(theta_action(&w("aB"), &id).unwrap().agrees_with(&id));
        for theta in [
            swap(),
            Automorphism::nielsen(2, 0, 1),
            Automorphism::invert(2, 1),
        ] {
            let t = theta.table(6);
            for h in ["a", "Ba", "bb"] {
                assert!(theta_action(&w(h), &t).unwrap().agrees_with(&t));
                assert!(upsilon_action(&w(h), &t).unwrap().agrees_with(&t));
            }
        }
    }

    #[test]
    fn encodings_of_automorphisms_are_constant() {
        let theta = swap();
        let t = theta.table(3);
        let e = encode_e(&t).unwrap();
        assert_eq!(e.len(), FreeGroup::new(2).unwrap().ball_size(2));
        assert!(e.iter().all(|(_, s)| *s == theta.symbol()));
        assert_eq!(theta.symbol().get(Letter::new(0, false)), &w("b"));
        assert_eq!(encode_f(&t).unwrap(), encode_e(&t).unwrap());
        let id = encode_e(&LocalBijection::identity(2, 2)).unwrap();
        assert!(id.iter().all(|(_, s)| *s == OrbitSymbol::identity(2)));
    }

    #[test]
    fn decode_telescopes() {
        let theta = swap();
        let x = encode_e(&theta.table(3)).unwrap();
        let phi = decode_e(&x).unwrap();
        assert_eq!(phi.eval(&w("ab")).unwrap(), w("ba"));
        assert_eq!(phi, theta.table(3));
        assert_eq!(inverse_eval(&phi, &w("a")).unwrap(), w("b"));
        let id = LocalBijection::identity(2, 3);
        for g in FreeGroup::new(2).unwrap().ball(2) {
            assert_eq!(inverse_eval(&id, &g).unwrap(), g);
        }
    }

    #[test]
    fn decode_reports_collisions() {
        // x_g(s) = a for s = a and s = b collides φ(a) = φ(b)
        let group = FreeGroup::new(2).unwrap();
        let sym = OrbitSymbol::from_fn(2, |s| if s.is_inverse() { w("A") } else { w("a") });
        let x = Pattern::constant(&group.ball(1), sym);
        assert!(matches!(decode_e(&x), Err(Error::Verification(_))));
    }

    #[test]
    fn nielsen_automorphism_and_json() {
        let theta = Automorphism::from_json(&json!({"images": {"a": "ab", "b": "b"}}), 2).unwrap();
        assert_eq!(theta, Automorphism::nielsen(2, 0, 1));
        assert_eq!(theta.displacement(), 2);
        assert!(Automorphism::from_json(&json!({"images": {"a": "aa"}}), 2).is_err());
        let report = axioms_check(
            2,
            &Pattern::constant(&FreeGroup::new(2).unwrap().ball(4), theta.symbol()),
        );
        assert!(report.accepted, "{report:?}");
        let t = theta.table(3);
        assert_eq!(LocalBijection::from_json(&t.to_json(), 2).unwrap(), t);
    }

    #[test]
    fn tau_for_constant_configurations() {
        let sigma = FiniteAction::sample(8, 2, 4);
        let id = Automorphism::identity(2).constant_config(8);
        assert_eq!(tau_construct(&sigma, &id, 1).unwrap(), sigma);
        let theta = swap();
        let tau = tau_construct(&sigma, &theta.constant_config(8), 1).unwrap();
        for g in FreeGroup::new(2).unwrap().ball(2) {
            for v in 0..8 {
                assert_eq!(tau.act(&g, v), sigma.act(&theta.apply_inverse(&g), v));
            }
        }
        assert_eq!(
            reconstruct_sigma(&tau, &theta.constant_config(8)).unwrap(),
            sigma
        );
    }

    #[test]
    fn tau_rejects_bad_configurations() {
        let sigma = FiniteAction::sample(5, 2, 1);
        let mut x = Automorphism::identity(2).constant_config(5);
        x[3].set(Letter::new(0, false), w("b"));
        let err = tau_construct(&sigma, &x, 1).unwrap_err();
        assert!(matches!(err, Error::Verification(_)));
    }

    #[test]
    fn sampled_configurations_rearrange() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec = ZRho::new(2, 1).unwrap();
        for seed in 0..4 {
            let sigma = FiniteAction::sample(7, 2, seed);
            let x = sample_sft_config(&spec, &sigma, seed, SamplerBudget::default(), None).unwrap();
            let y: Vec<u32> = (0..7).map(|v| (v % 2) as u32).collect();
            let report = verify_rearrangement(&sigma, &x, &y, 1, 2, 10, &mut rng).unwrap();
            assert!(report.passed(), "{report:?}");
            let phi = vertex_bijection(&sigma, &x, 0, 4).unwrap();
            assert_eq!(decode_e(&encode_e(&phi).unwrap()).unwrap(), phi);
        }
    }

    #[test]
    fn equivariance_on_random_automorphisms() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let theta = Automorphism::random(2, 3, &mut rng);
            if theta.displacement() > 2 {
                continue;
            }
            let phi = theta.table(7);
            let h = random_word(2, 2, &mut rng);
            assert!(check_equi_e(&h, &phi).unwrap().agrees);
            assert!(check_equi_f(&h, &phi).unwrap().agrees);
            assert!(check_same_orbit(&h, &phi).unwrap());
        }
    }

    #[test]
    fn metric_vanishes_on_equal_maps() {
        let a = swap().table(2);
        assert_eq!(bijection_distance(&a, &a), 0.0);
        let id = LocalBijection::identity(2, 2);
        // g_1 = e agrees; the other 16 words of B(e, 2) differ both ways
        assert_eq!(bijection_distance(&a, &id), 1.0 - 2f64.powi(-16));
    }
}
