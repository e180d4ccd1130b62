//! Commands behind the `finv` binary. Each returns a typed report; the binary
//! only handles argument parsing, output files, thread pools and exit codes.

pub mod config;

use finvariant::action::FiniteAction;
use finvariant::entropy::{EntropySum, LogForm};
use finvariant::free_group::{FreeGroup, GroupWord};
use finvariant::markov::{
    self, constancy_check, f_markov, f_value, marginal, markovize, AnyWeight, ConstancyReport,
    Weight, DEFAULT_PATTERN_CAP,
};
use finvariant::microstates::{estimate_csv, f_estimate, EstimateRow, Mode, Neighborhood};
use finvariant::orbit::{check_zrho, verify_rearrangement, Automorphism, RearrangeReport};
use finvariant::rational::rationalize_any;
use finvariant::sft::{
    first_violation, sample_sft_config, OrbitSymbol, SamplerBudget, SftSpec, SpecFile, ZRho, DEFAULT_MAX_RHO,
};
use finvariant::shift::{Alphabet, PatternDistribution};
use finvariant::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub use config::{Config, Overrides};

/// Process exit code for an error: 1 verification, 2 input, 3 resource cap.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Verification(_) => 1,
        Error::Resource(_) => 3,
        Error::Input(_) | Error::Window(_) | Error::Json(_) => 2,
    }
}

/// Independent random streams derived from one seed.
fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

const SIGMA_STREAM: u64 = 0;
const SAMPLER_STREAM: u64 = 1;
const LABEL_STREAM: u64 = 2;
const WORD_STREAM: u64 = 3;

// ---------------------------------------------------------------------------
// f-exact

#[derive(Clone, Debug)]
pub struct FExactReport {
    pub config_sha256: String,
    pub alphabet: Vec<String>,
    pub rank: usize,
    /// `f` in nats.
    pub f: f64,
    /// Closed form `Σ c ln p` when the weight is rational.
    pub f_exact: Option<LogForm>,
    pub ball_entropy: f64,
    pub edge_entropies: Vec<f64>,
    pub constancy: ConstancyReport,
}

impl FExactReport {
    pub fn to_json(&self) -> Value {
        json!({
            "config_sha256": self.config_sha256,
            "alphabet": self.alphabet,
            "rank": self.rank,
            "f": self.f,
            "f_exact": self.f_exact.as_ref().map(ToString::to_string),
            "breakdown": {"ball_entropy": self.ball_entropy, "edge_entropies": self.edge_entropies},
            "constancy": {
                "values": self.constancy.values.iter().map(|(r, v)| json!({"rho": r, "F": v})).collect::<Vec<_>>(),
                "max_deviation": self.constancy.max_deviation,
                "passed": self.constancy.passed,
            },
        })
    }
}

fn f_report<P: finvariant::entropy::Prob>(
    w: &Weight<P>,
    rho_max: usize,
    cap: u128,
) -> Result<(P::Log, Vec<f64>, f64, ConstancyReport)> {
    let b = f_value(w, 0, cap)?;
    let constancy = constancy_check(w, rho_max, cap)?;
    // `+ 0.0` turns the `-0.0` of a point mass into `0`
    Ok((
        b.value,
        b.edge_entropies.iter().map(|h| h.to_f64() + 0.0).collect(),
        b.ball_entropy.to_f64() + 0.0,
        constancy,
    ))
}

/// `f` of the Markov measure of a weight file, with the constancy table
/// `F(W, ρ)` for `ρ ≤ rho_max` and the entropy breakdown at `ρ = 0`.
pub fn cmd_f_exact(cfg: &Config) -> Result<FExactReport> {
    let w = AnyWeight::from_json(cfg.require("weight")?)?;
    let rho_max = cfg.usize_or("rho_max", 1)?;
    let (alphabet, rank) = match &w {
        AnyWeight::Float(w) => (w.alphabet().names().to_vec(), w.rank()),
        AnyWeight::Exact(w) => (w.alphabet().names().to_vec(), w.rank()),
    };
    let (f, f_exact, edge_entropies, ball_entropy, constancy) = match &w {
        AnyWeight::Float(w) => {
            let (f, e, b, c) = f_report(w, rho_max, DEFAULT_PATTERN_CAP)?;
            (f + 0.0, None, e, b, c)
        }
        AnyWeight::Exact(w) => {
            let (f, e, b, c) = f_report(w, rho_max, DEFAULT_PATTERN_CAP)?;
            (f.to_f64() + 0.0, Some(f), e, b, c)
        }
    };
    Ok(FExactReport {
        config_sha256: cfg.hash(),
        alphabet,
        rank,
        f,
        f_exact,
        ball_entropy,
        edge_entropies,
        constancy,
    })
}

// ---------------------------------------------------------------------------
// f-estimate

#[derive(Clone, Debug)]
pub struct EstimateOutput {
    pub config_sha256: String,
    pub rows: Vec<EstimateRow>,
    pub warnings: Vec<String>,
}

impl EstimateOutput {
    /// CSV preceded by a `# config-sha256:` comment line.
    pub fn csv(&self) -> String {
        format!("# config-sha256: {}\n{}", self.config_sha256, estimate_csv(&self.rows))
    }
}

fn parse_alphabet(v: &Value) -> Result<Alphabet> {
    let names: Vec<String> = v
        .as_array()
        .ok_or_else(|| Error::Input("alphabet must be a list of names".into()))?
        .iter()
        .map(|s| s.as_str().map(str::to_string))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Input("alphabet names must be strings".into()))?;
    Alphabet::new(names)
}

fn neighborhood(cfg: &Config) -> Result<(usize, Alphabet, Neighborhood)> {
    let eps = cfg.f64("epsilon")?;
    if eps < 0.0 {
        return Err(Error::Input("epsilon must be nonnegative".into()));
    }
    let m = cfg.usize_or("m", 1)?;
    if let Some(w) = cfg.get("weight") {
        return match AnyWeight::from_json(w)? {
            AnyWeight::Exact(w) => Ok((w.rank(), w.alphabet().clone(), Neighborhood::ball_exact(&w, m, eps)?)),
            AnyWeight::Float(_) if eps == 0.0 => Err(Error::Input(
                "ε = 0 needs a rational weight (write entries as {\"num\", \"den\"})".into(),
            )),
            AnyWeight::Float(w) => Ok((w.rank(), w.alphabet().clone(), Neighborhood::ball(&w, m, eps)?)),
        };
    }
    let d = cfg.require("marginal")?;
    let rank = cfg.usize("rank")?;
    let alphabet = parse_alphabet(cfg.require("alphabet")?)?;
    let group = FreeGroup::new(rank)?;
    let target = PatternDistribution::from_json(d, &group, &alphabet)?;
    Ok((rank, alphabet.clone(), Neighborhood::new(alphabet.len(), vec![target], eps)?))
}

/// Estimates `(1/n) ln E_σ |Ω(σ, 𝒪)|` over `n_list`.
pub fn cmd_f_estimate(cfg: &Config) -> Result<EstimateOutput> {
    let (rank, alphabet, mut nbhd) = neighborhood(cfg)?;
    if let Some(spec) = cfg.get("sft") {
        let group = FreeGroup::new(rank)?;
        match SpecFile::from_json(spec, &group, DEFAULT_MAX_RHO)? {
            SpecFile::Explicit(s) => {
                if s.alphabet() != &alphabet {
                    return Err(Error::Input("SFT alphabet differs from the weight alphabet".into()));
                }
                nbhd = nbhd.with_restriction(s)?;
            }
            SpecFile::ZRho(_) => {
                return Err(Error::Input("restrictions must be explicit SFTs over the label alphabet".into()))
            }
        }
    }
    let n_list: Vec<usize> = cfg
        .require("n_list")?
        .as_array()
        .and_then(|a| a.iter().map(|v| v.as_u64().map(|x| x as usize)).collect())
        .filter(|l: &Vec<usize>| !l.is_empty() && l.iter().all(|&n| n > 0))
        .ok_or_else(|| Error::Input("n_list must be a nonempty list of positive integers".into()))?;
    let mode = match cfg.get("mode").and_then(Value::as_str).unwrap_or("monte_carlo") {
        "exact" => Mode::Exact,
        "monte_carlo" => Mode::MonteCarlo {
            samples: cfg.usize("samples")?,
            seed: cfg.seed()?,
        },
        other => return Err(Error::Input(format!("unknown mode {other:?}"))),
    };
    let rows = f_estimate(rank, &nbhd, &n_list, mode, cfg.caps()?)?;
    let mut warnings = Vec::new();
    let bad: Vec<String> = rows.iter().filter(|r| r.unattainable).map(|r| r.n.to_string()).collect();
    if !bad.is_empty() {
        warnings.push(format!(
            "ε = 0 targets are not multiples of 1/n for n = {}; those counts are identically 0",
            bad.join(", ")
        ));
    }
    Ok(EstimateOutput {
        config_sha256: cfg.hash(),
        rows,
        warnings,
    })
}

// ---------------------------------------------------------------------------
// inputs shared by rearrange and sft-verify

fn load_sigma(cfg: &Config, rank: usize, seed: Option<u64>) -> Result<FiniteAction> {
    if let Some(v) = cfg.get("sigma") {
        let sigma: FiniteAction = serde_json::from_value(v.clone())?;
        if sigma.rank() != rank {
            return Err(Error::Input(format!("σ has rank {}, expected {rank}", sigma.rank())));
        }
        return Ok(sigma);
    }
    let n = cfg.usize("n")?;
    if n == 0 {
        return Err(Error::Input("n must be positive".into()));
    }
    let seed = seed.ok_or_else(|| Error::Input("a random σ needs a seed".into()))?;
    Ok(FiniteAction::sample_with(n, rank, &mut stream(seed, SIGMA_STREAM)))
}

fn sampler_budget(cfg: &Config) -> Result<SamplerBudget> {
    let d = SamplerBudget::default();
    Ok(SamplerBudget {
        trials: cfg.usize_or("sampler_trials", d.trials)?,
        restarts: cfg.usize_or("sampler_restarts", d.restarts)?,
    })
}

fn orbit_config(
    cfg: &Config,
    sigma: &FiniteAction,
    rho: usize,
    max_rho: usize,
    seed: Option<u64>,
) -> Result<Vec<OrbitSymbol>> {
    let group = FreeGroup::new(sigma.rank())?;
    match cfg.get("x") {
        Some(Value::String(s)) if s == "sampler" => {
            let seed = seed.ok_or_else(|| Error::Input("the sampler needs a seed".into()))?;
            let z = ZRho::with_cap(sigma.rank(), rho, max_rho)?;
            let s: u64 = stream(seed, SAMPLER_STREAM).random();
            sample_sft_config(&z, sigma, s, sampler_budget(cfg)?, None)
                .ok_or_else(|| Error::Verification(format!("sampler found no Z_{rho} configuration within its budget")))
        }
        Some(Value::Array(a)) => {
            let x = a
                .iter()
                .map(|v| OrbitSymbol::from_json(v, &group))
                .collect::<Result<Vec<_>>>()?;
            if x.len() != sigma.n() {
                return Err(Error::Input(format!("x has {} entries for {} vertices", x.len(), sigma.n())));
            }
            Ok(x)
        }
        Some(_) => Err(Error::Input("x must be \"sampler\" or a list of orbit symbols".into())),
        None => {
            let theta = Automorphism::from_json(cfg.require("automorphism")?, sigma.rank())?;
            Ok(theta.constant_config(sigma.n()))
        }
    }
}

// ---------------------------------------------------------------------------
// rearrange

#[derive(Clone, Debug)]
pub struct RearrangeOutput {
    pub config_sha256: String,
    pub sigma: FiniteAction,
    pub rho: usize,
    pub report: RearrangeReport,
    /// For automorphism inputs: whether `τ(s) = σ(θ⁻¹(s))` on every generator.
    pub matches_inverse_automorphism: Option<bool>,
}

impl RearrangeOutput {
    pub fn passed(&self) -> bool {
        self.report.passed() && self.matches_inverse_automorphism != Some(false)
    }

    pub fn to_json(&self) -> Value {
        let r = &self.report;
        json!({
            "config_sha256": self.config_sha256,
            "n": self.sigma.n(),
            "rank": self.sigma.rank(),
            "rho": self.rho,
            "sigma": self.sigma,
            "tau": r.tau,
            "checks": {
                "multiplicative_checks": r.multiplicative_checks,
                "multiplicative_failures": r.multiplicative_failures,
                "pullback_failures": r.pullback_failures,
                "label_failures": r.label_failures,
                "reconstructs_sigma": r.reconstructs_sigma,
                "pushforward_distance": r.pushforward_distance,
                "matches_inverse_automorphism": self.matches_inverse_automorphism,
            },
            "passed": self.passed(),
        })
    }
}

/// Builds `τ` from `(σ, x)`, then checks multiplicativity, the pullback and
/// labeled identities, the pushforward of the empirical distribution, and
/// the reconstruction of `σ`.
pub fn cmd_rearrange(cfg: &Config) -> Result<RearrangeOutput> {
    let rank = cfg.usize_or("rank", 2)?;
    // the word pairs are always random, so the seed is mandatory
    let seed = Some(cfg.seed()?);
    let sigma = load_sigma(cfg, rank, seed)?;
    let max_rho = cfg.usize_or("max_rho", DEFAULT_MAX_RHO)?;
    let theta = match cfg.get("x") {
        None => Some(Automorphism::from_json(cfg.require("automorphism")?, rank)?),
        Some(_) => None,
    };
    let rho = match (&theta, cfg.get("rho")) {
        (_, Some(_)) => cfg.usize("rho")?,
        (Some(t), None) => t.displacement(),
        (None, None) => 1,
    };
    if rho > max_rho {
        return Err(Error::Resource(format!("rho = {rho} exceeds the cap {max_rho}")));
    }
    let x = orbit_config(cfg, &sigma, rho, max_rho, seed)?;
    check_zrho(&sigma, &x, rho)?;
    let k = cfg.usize_or("labels", 2)?.max(1) as u32;
    let y: Vec<u32> = {
        let mut rng = stream(cfg.seed()?, LABEL_STREAM);
        (0..sigma.n()).map(|_| rng.random_range(0..k)).collect()
    };
    let window = cfg.usize_or("window", 2)?;
    let pairs = cfg.usize_or("pairs", 100)?;
    let report = verify_rearrangement(&sigma, &x, &y, rho, window, pairs, &mut stream(cfg.seed()?, WORD_STREAM))?;
    let matches_inverse_automorphism = theta.map(|t| {
        (0..rank).all(|i| {
            let s = GroupWord::generator(i);
            let ti = t.apply_inverse(&s);
            (0..sigma.n()).all(|v| report.tau.act(&s, v) == sigma.act(&ti, v))
        })
    });
    Ok(RearrangeOutput {
        config_sha256: cfg.hash(),
        sigma,
        rho,
        report,
        matches_inverse_automorphism,
    })
}

// ---------------------------------------------------------------------------
// sft-verify

#[derive(Clone, Debug)]
pub struct SftVerifyReport {
    pub config_sha256: String,
    pub accepted: bool,
    pub first_violation: Option<usize>,
    pub reason: Option<String>,
    /// The checked configuration, as written to the report.
    pub x: Value,
}

impl SftVerifyReport {
    pub fn to_json(&self) -> Value {
        json!({
            "config_sha256": self.config_sha256,
            "accepted": self.accepted,
            "first_violation": self.first_violation,
            "reason": self.reason,
            "x": self.x,
        })
    }
}

/// Checks every pullback name of `x` against an explicit SFT or `Z_ρ`.
pub fn cmd_sft_verify(cfg: &Config) -> Result<SftVerifyReport> {
    let rank = cfg.usize_or("rank", 2)?;
    let group = FreeGroup::new(rank)?;
    let seed = cfg.get("seed").map(|_| cfg.seed()).transpose()?;
    let max_rho = cfg.usize_or("max_rho", DEFAULT_MAX_RHO)?;
    let sigma = load_sigma(cfg, rank, seed)?;
    let (first, reason, x) = match SpecFile::from_json(cfg.require("sft")?, &group, max_rho)? {
        SpecFile::Explicit(spec) => {
            let x = label_config(cfg, &spec, &sigma, seed)?;
            let first = first_violation(&spec, &sigma, &x);
            let names: Vec<&str> = x.iter().map(|&s| spec.alphabet().name(s)).collect();
            (first, first.map(|v| format!("a forbidden pattern occurs at x^σ_{v}")), json!(names))
        }
        SpecFile::ZRho(z) => {
            let x = orbit_config(cfg, &sigma, z.rho(), max_rho, seed)?;
            let reason = check_zrho(&sigma, &x, z.rho()).err().map(|e| e.to_string());
            let first = first_violation(&z, &sigma, &x);
            (first, reason, Value::Array(x.iter().map(OrbitSymbol::to_json).collect()))
        }
    };
    Ok(SftVerifyReport {
        config_sha256: cfg.hash(),
        accepted: first.is_none(),
        first_violation: first,
        reason,
        x,
    })
}

fn label_config(cfg: &Config, spec: &SftSpec, sigma: &FiniteAction, seed: Option<u64>) -> Result<Vec<u32>> {
    match cfg.require("x")? {
        Value::String(s) if s == "sampler" => {
            let seed = seed.ok_or_else(|| Error::Input("the sampler needs a seed".into()))?;
            let s: u64 = stream(seed, SAMPLER_STREAM).random();
            sample_sft_config(spec, sigma, s, sampler_budget(cfg)?, None)
                .ok_or_else(|| Error::Verification("sampler found no configuration within its budget".into()))
        }
        Value::Array(a) => {
            let x = a
                .iter()
                .map(|v| {
                    v.as_str()
                        .ok_or_else(|| Error::Input("labels are symbol names".into()))
                        .and_then(|s| spec.alphabet().index_of(s))
                })
                .collect::<Result<Vec<_>>>()?;
            if x.len() != sigma.n() {
                return Err(Error::Input(format!("x has {} entries for {} vertices", x.len(), sigma.n())));
            }
            Ok(x)
        }
        _ => Err(Error::Input("x must be \"sampler\" or a list of symbol names".into())),
    }
}

// ---------------------------------------------------------------------------
// weight tools

/// Parses and validates a weight; reports its shape and `f`.
pub fn weight_validate(v: &Value) -> Result<Value> {
    let w = AnyWeight::from_json(v)?;
    let (exact, f) = match &w {
        AnyWeight::Float(w) => (false, f_markov(w)?),
        AnyWeight::Exact(w) => (true, f_markov(w)?.to_f64()),
    };
    let fw = w.to_float();
    Ok(json!({
        "valid": true,
        "exact": exact,
        "rank": fw.rank(),
        "alphabet": fw.alphabet().names(),
        "f": f,
    }))
}

/// Rational weight with denominators `≤ q` near the input.
pub fn weight_rationalize(v: &Value, q: u64, support: Option<&Value>) -> Result<Value> {
    let w = AnyWeight::from_json(v)?;
    let spec = match support {
        None => None,
        Some(s) => {
            let group = FreeGroup::new(w.to_float().rank())?;
            Some(SftSpec::from_json(s, &group)?)
        }
    };
    let r = rationalize_any(&w, q, spec.as_ref())?;
    Ok(json!({
        "weight": r.weight.to_json(),
        "denominator": r.denominator,
        "distance": r.distance,
        "bound": r.bound,
        "within_bound": r.distance <= r.bound,
    }))
}

/// Markovizes either a pattern distribution on a ball
/// (`{"rank", "alphabet", "distribution"}`) or the `B(e, m+1)` marginal of a
/// weight; in the second case `f` of the source is reported alongside.
pub fn weight_markovize(v: &Value, m: usize) -> Result<Value> {
    if v.get("vertex").is_some() {
        let w = AnyWeight::from_json(v)?;
        return match w {
            AnyWeight::Exact(w) => {
                let group = FreeGroup::new(w.rank())?;
                let d = marginal(&w, &group.ball(m + 1), DEFAULT_PATTERN_CAP)?;
                let mk = markovize(&group, w.alphabet(), &d)?;
                let (fs, fm) = (f_markov(&w)?, f_markov(&mk)?);
                Ok(json!({"weight": mk.to_json(), "f": fm.to_f64(), "source_f": fs.to_f64(), "f_match": fs == fm}))
            }
            AnyWeight::Float(w) => {
                let group = FreeGroup::new(w.rank())?;
                let d = marginal(&w, &group.ball(m + 1), DEFAULT_PATTERN_CAP)?;
                let mk = markovize(&group, w.alphabet(), &d)?;
                let (fs, fm) = (f_markov(&w)?, f_markov(&mk)?);
                Ok(json!({"weight": mk.to_json(), "f": fm, "source_f": fs, "f_match": (fs - fm).abs() <= 1e-9}))
            }
        };
    }
    let rank = v
        .get("rank")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Input("distribution file needs a rank".into()))? as usize;
    let alphabet = parse_alphabet(v.get("alphabet").unwrap_or(&Value::Null))?;
    let group = FreeGroup::new(rank)?;
    let d = PatternDistribution::from_json(
        v.get("distribution")
            .ok_or_else(|| Error::Input("distribution file needs a distribution".into()))?,
        &group,
        &alphabet,
    )?;
    let mk = markovize(&group, &alphabet, &d)?;
    Ok(json!({"weight": mk.to_json(), "f": f_markov(&mk)?}))
}

/// `d(W1, W2)`.
pub fn weight_distance(a: &Value, b: &Value) -> Result<f64> {
    markov::weight_distance(&AnyWeight::from_json(a)?.to_float(), &AnyWeight::from_json(b)?.to_float())
}
