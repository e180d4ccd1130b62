//! Rational approximation of weights with bounded denominators.
//!
//! Vertex masses are rounded to multiples of `1/D` by largest remainder;
//! each generator's edge law is then the integer transportation plan with
//! those row and column sums closest in ℓ¹ to `D · W(·,·;i)`, found by
//! successive shortest paths with convex per-arc costs. Arcs exist only on
//! the support of the input, so zero entries stay zero.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::markov::{AnyWeight, Weight};
use crate::sft::SftSpec;

/// Constant `C` of the guarantee `d(W, W') ≤ C |A|² r / q`.
pub const DISTANCE_CONSTANT: f64 = 3.0;

/// Largest denominator bound accepted.
pub const MAX_DENOMINATOR: u64 = 100_000;

/// A rationalized weight with its distance to the input.
#[derive(Clone, Debug)]
pub struct Rationalized {
    pub weight: Weight<BigRational>,
    /// Common denominator of all entries.
    pub denominator: u64,
    pub distance: f64,
    /// `C |A|² r / q`.
    pub bound: f64,
}

fn check_support(w: &Weight<f64>, support: Option<&SftSpec>) -> Result<()> {
    let Some(spec) = support else { return Ok(()) };
    if !spec.is_nearest_neighbor() {
        return Err(Error::input("support must be a nearest-neighbor SFT"));
    }
    if spec.alphabet() != w.alphabet() {
        return Err(Error::input(
            "support SFT and weight use different alphabets",
        ));
    }
    if !w.supported_by(|i, a, b| spec.allows_edge(i, a, b)) {
        return Err(Error::input(
            "weight is positive on an edge forbidden by the support SFT",
        ));
    }
    Ok(())
}

fn bound(w: &Weight<f64>, q: u64) -> f64 {
    DISTANCE_CONSTANT * (w.size() * w.size() * w.rank()) as f64 / q as f64
}

/// Rationalizes a float weight: every entry becomes `k / D` with `D ≤ q`,
/// Balanced and Normalized hold exactly, and zero entries are preserved.
/// If `support` is given the input must be a weight for it (no positive
/// forbidden edges).
pub fn rationalize_weight(
    w: &Weight<f64>,
    q: u64,
    support: Option<&SftSpec>,
) -> Result<Rationalized> {
    if q == 0 || q > MAX_DENOMINATOR {
        return Err(Error::input(format!(
            "denominator bound must be in 1..={MAX_DENOMINATOR}"
        )));
    }
    check_support(w, support)?;
    if let Some(r) = exact_fit(w, q) {
        return Ok(r);
    }
    let mut last_err = None;
    for d in (q.div_ceil(2)..=q).rev() {
        match transport(w, d) {
            Ok(tables) => {
                let weight = to_weight(w, d, tables)?;
                let distance = crate::markov::weight_distance(&weight.to_float(), w)?;
                return Ok(Rationalized {
                    weight,
                    denominator: d,
                    distance,
                    bound: bound(w, q),
                });
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one denominator was tried"))
}

/// Exact weights with all denominators `≤ q` are returned unchanged.
pub fn rationalize_any(w: &AnyWeight, q: u64, support: Option<&SftSpec>) -> Result<Rationalized> {
    match w {
        AnyWeight::Exact(e) => {
            let fits = e
                .vertex_law()
                .iter()
                .chain((0..e.rank()).flat_map(|i| e.edge_matrix(i).iter().flatten()))
                .all(|p| *p.denom() <= BigInt::from(q));
            if fits {
                check_support(&e.to_float(), support)?;
                let den = e.common_denominator();
                return Ok(Rationalized {
                    weight: e.clone(),
                    denominator: den.try_into().unwrap_or(u64::MAX),
                    distance: 0.0,
                    bound: bound(&e.to_float(), q),
                });
            }
            rationalize_weight(&e.to_float(), q, support)
        }
        AnyWeight::Float(f) => rationalize_weight(f, q, support),
    }
}

/// Smallest common denominator `D ≤ q` at which every entry is within
/// `1e-9 / D` of a multiple of `1/D` and the rounded weight is valid.
fn exact_fit(w: &Weight<f64>, q: u64) -> Option<Rationalized> {
    let entries: Vec<f64> = w
        .vertex_law()
        .iter()
        .copied()
        .chain((0..w.rank()).flat_map(|i| w.edge_matrix(i).iter().flatten().copied()))
        .collect();
    for d in 1..=q {
        let df = d as f64;
        if entries
            .iter()
            .all(|x| (x * df - (x * df).round()).abs() <= 1e-9)
        {
            let k = w.size();
            let n: Vec<i64> = w
                .vertex_law()
                .iter()
                .map(|x| (x * df).round() as i64)
                .collect();
            let tables = (0..w.rank())
                .map(|i| {
                    (0..k)
                        .map(|a| {
                            (0..k)
                                .map(|b| (w.edge_matrix(i)[a][b] * df).round() as i64)
                                .collect()
                        })
                        .collect()
                })
                .collect();
            if let Ok(weight) = to_weight_with(w, d, &n, tables) {
                return Some(Rationalized {
                    weight,
                    denominator: d,
                    distance: 0.0,
                    bound: bound(w, q),
                });
            }
        }
    }
    None
}

fn to_weight(
    w: &Weight<f64>,
    d: u64,
    (n, tables): (Vec<i64>, Vec<Vec<Vec<i64>>>),
) -> Result<Weight<BigRational>> {
    to_weight_with(w, d, &n, tables)
}

fn to_weight_with(
    w: &Weight<f64>,
    d: u64,
    n: &[i64],
    tables: Vec<Vec<Vec<i64>>>,
) -> Result<Weight<BigRational>> {
    let frac = |k: i64| BigRational::new(BigInt::from(k), BigInt::from(d));
    let vertex = n.iter().map(|&k| frac(k)).collect();
    let edge = tables
        .into_iter()
        .map(|m| {
            m.into_iter()
                .map(|row| row.into_iter().map(frac).collect())
                .collect()
        })
        .collect();
    Weight::new(w.alphabet().clone(), w.rank(), vertex, edge)
}

/// Largest-remainder rounding of `d · π` to integers summing to `d`; zero
/// masses stay zero.
fn round_vertex(pi: &[f64], d: u64) -> Vec<i64> {
    let scaled: Vec<f64> = pi.iter().map(|p| p * d as f64).collect();
    let mut n: Vec<i64> = scaled.iter().map(|x| x.floor() as i64).collect();
    let short = d as i64 - n.iter().sum::<i64>();
    let mut order: Vec<usize> = (0..pi.len()).filter(|&a| pi[a] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &a in order.iter().cycle().take(short.max(0) as usize) {
        n[a] += 1;
    }
    n
}

/// Vertex counts and per-generator integer edge tables at denominator `d`.
fn transport(w: &Weight<f64>, d: u64) -> Result<(Vec<i64>, Vec<Vec<Vec<i64>>>)> {
    let n = round_vertex(w.vertex_law(), d);
    let mut tables = Vec::with_capacity(w.rank());
    for i in 0..w.rank() {
        let target: Vec<Vec<f64>> = w
            .edge_matrix(i)
            .iter()
            .map(|r| r.iter().map(|x| x * d as f64).collect())
            .collect();
        tables.push(min_cost_transport(&n, &target).map_err(|cert| {
            Error::input(format!(
                "no balanced rational weight at denominator {d} on generator {}: {cert}",
                i + 1
            ))
        })?);
    }
    Ok((n, tables))
}

/// Integer matrix with row and column sums `n`, supported where
/// `target > 0`, minimizing `Σ |f - target|`. On failure returns a Hall
/// certificate: rows whose mass exceeds that of every column they reach.
fn min_cost_transport(
    n: &[i64],
    target: &[Vec<f64>],
) -> std::result::Result<Vec<Vec<i64>>, String> {
    let k = n.len();
    // nodes: 0 = source, 1..=k rows, k+1..=2k columns, 2k+1 = sink
    let source = 0;
    let sink = 2 * k + 1;
    let nodes = 2 * k + 2;
    let mut flow = vec![vec![0i64; k]; k];
    let mut out = vec![0i64; k];
    let mut inc = vec![0i64; k];
    let total: i64 = n.iter().sum();
    let cost = |f: i64, t: f64| (f as f64 - t).abs();
    let arcs = |a: usize, b: usize| target[a][b] > 0.0 && n[a] > 0 && n[b] > 0;
    for _ in 0..total {
        // Bellman–Ford over the residual graph
        let mut dist = vec![f64::INFINITY; nodes];
        let mut pred: Vec<Option<usize>> = vec![None; nodes];
        dist[source] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            let relax =
                |u: usize, v: usize, c: f64, dist: &mut Vec<f64>, pred: &mut Vec<Option<usize>>| {
                    if dist[u].is_finite() && dist[u] + c < dist[v] - 1e-12 {
                        dist[v] = dist[u] + c;
                        pred[v] = Some(u);
                        true
                    } else {
                        false
                    }
                };
            for a in 0..k {
                if out[a] < n[a] {
                    changed |= relax(source, 1 + a, 0.0, &mut dist, &mut pred);
                }
                if out[a] > 0 {
                    changed |= relax(1 + a, source, 0.0, &mut dist, &mut pred);
                }
                if inc[a] < n[a] {
                    changed |= relax(k + 1 + a, sink, 0.0, &mut dist, &mut pred);
                }
                if inc[a] > 0 {
                    changed |= relax(sink, k + 1 + a, 0.0, &mut dist, &mut pred);
                }
            }
            for a in 0..k {
                for b in 0..k {
                    if !arcs(a, b) {
                        continue;
                    }
                    let f = flow[a][b];
                    let t = target[a][b];
                    changed |= relax(
                        1 + a,
                        k + 1 + b,
                        cost(f + 1, t) - cost(f, t),
                        &mut dist,
                        &mut pred,
                    );
                    if f > 0 {
                        changed |= relax(
                            k + 1 + b,
                            1 + a,
                            cost(f - 1, t) - cost(f, t),
                            &mut dist,
                            &mut pred,
                        );
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if !dist[sink].is_finite() {
            let rows: Vec<usize> = (0..k).filter(|&a| dist[1 + a].is_finite()).collect();
            let cols: Vec<usize> = (0..k).filter(|&b| dist[k + 1 + b].is_finite()).collect();
            let need: i64 = rows.iter().map(|&a| n[a]).sum();
            let have: i64 = cols.iter().map(|&b| n[b]).sum();
            return Err(format!(
                "symbols {rows:?} carry mass {need}/{total} but can only move to symbols {cols:?} with mass {have}/{total}"
            ));
        }
        // augment one unit along the path
        let mut v = sink;
        while let Some(u) = pred[v] {
            match (u, v) {
                (s, r) if s == source => out[r - 1] += 1,
                (r, s) if s == source => out[r - 1] -= 1,
                (c, t) if t == sink => inc[c - k - 1] += 1,
                (t, c) if t == sink => inc[c - k - 1] -= 1,
                (r, c) if r <= k => flow[r - 1][c - k - 1] += 1,
                (c, r) => flow[r - 1][c - k - 1] -= 1,
            }
            v = u;
        }
    }
    Ok(flow)
}

/// Whether a rational weight uses only denominators dividing `d`.
pub fn has_denominator(w: &Weight<BigRational>, d: u64) -> bool {
    let d = BigInt::from(d);
    w.vertex_law()
        .iter()
        .chain((0..w.rank()).flat_map(|i| w.edge_matrix(i).iter().flatten()))
        .all(|p| (d.clone() % p.denom()).is_zero())
}

/// Float weights are rationalized; exact weights pass through.
pub fn exact_or_rationalize(w: &AnyWeight, q: u64) -> Result<Weight<BigRational>> {
    Ok(rationalize_any(w, q, None)?.weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{bernoulli_weight, random_weight};
    use crate::shift::Alphabet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rational_input_is_unchanged() {
        let w = bernoulli_weight(Alphabet::numbered(2), vec![0.25, 0.75], 2).unwrap();
        let r = rationalize_weight(&w, 100, None).unwrap();
        assert_eq!(r.denominator, 16);
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.weight.to_float(), w);
    }

    #[test]
    fn irrational_bernoulli() {
        let p = std::f64::consts::FRAC_1_SQRT_2;
        let w = bernoulli_weight(Alphabet::numbered(2), vec![p, 1.0 - p], 2).unwrap();
        let r = rationalize_weight(&w, 100, None).unwrap();
        assert!(r.distance <= 0.08, "distance {}", r.distance);
        assert!(r.distance <= r.bound);
        assert!(has_denominator(&r.weight, r.denominator));
        assert!(r.denominator <= 100);
    }

    #[test]
    fn zeros_are_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let base = random_weight(3, 2, &mut rng);
        // kill the (0, 2) / (2, 0) couplings on generator 1 by moving their mass to the diagonal
        let mut edge: Vec<Vec<Vec<f64>>> = (0..2).map(|i| base.edge_matrix(i).to_vec()).collect();
        let m = &mut edge[0];
        let x = m[0][2].min(m[2][0]);
        let y = m[0][2] - x;
        let z = m[2][0] - x;
        m[0][0] += x;
        m[2][2] += x;
        m[0][2] = 0.0;
        m[2][0] = 0.0;
        // leftover one-directional flow goes round the cycle 0 -> 1 -> 2 -> 0
        m[0][1] += y;
        m[1][2] += y;
        m[1][0] += z;
        m[2][1] += z;
        m[1][1] -= y + z;
        let w = Weight::new(Alphabet::numbered(3), 2, base.vertex_law().to_vec(), edge).unwrap();
        let spec = SftSpec::from_forbidden_edges(Alphabet::numbered(3), 2, |i, a, b| {
            i == 0 && a + b == 2 && a != b
        });
        for q in [7, 50, 1000] {
            let r = rationalize_weight(&w, q, Some(&spec)).unwrap();
            assert!(r.weight.edge(0, 0, 2).is_zero() && r.weight.edge(0, 2, 0).is_zero());
            assert!(
                r.distance <= r.bound,
                "q = {q}: {} > {}",
                r.distance,
                r.bound
            );
        }
        // a weight positive on a forbidden edge is rejected
        assert!(rationalize_weight(&base, 50, Some(&spec)).is_err());
    }

    #[test]
    fn cyclic_support_needs_a_fitting_denominator() {
        let t = 1.0 / 3.0;
        let cyc = vec![vec![0.0, t, 0.0], vec![0.0, 0.0, t], vec![t, 0.0, 0.0]];
        let w = Weight::new(Alphabet::numbered(3), 1, vec![t; 3], vec![cyc]).unwrap();
        let r = rationalize_weight(&w, 100, None).unwrap();
        assert_eq!(r.denominator, 3);
        // no denominator ≤ 2 balances a uniform 3-cycle
        let err = rationalize_weight(&w, 2, None).unwrap_err().to_string();
        assert!(err.contains("can only move to"), "{err}");
    }

    #[test]
    fn random_weights_meet_the_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let w = random_weight(3, 2, &mut rng);
            for q in [10, 100, 1000] {
                let r = rationalize_weight(&w, q, None).unwrap();
                assert!(
                    r.distance <= r.bound,
                    "q = {q}: {} > {}",
                    r.distance,
                    r.bound
                );
            }
        }
    }
}
