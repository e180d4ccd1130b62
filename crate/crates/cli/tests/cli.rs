//! End-to-end runs of the `finv` binary on the example configs.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn finv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finv"))
        .current_dir(configs())
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.code().is_some(), "killed: {:?}", out);
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

/// Config in a scratch dir, with references resolved against `configs/`.
fn scratch_config(name: &str, v: Value) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("finv-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut v = v;
    for (_, val) in v.as_object_mut().unwrap().iter_mut() {
        if let Value::String(s) = val {
            if s.ends_with(".json") {
                *s = configs().join(&*s).to_string_lossy().into_owned();
            }
        }
    }
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    path
}

#[test]
fn f_exact_bernoulli_is_ln_2() {
    let out = finv(&["f-exact", "weights/bernoulli-half.json"]);
    assert_eq!(code(&out), 0);
    let r = json_of(&out);
    assert!((r["f"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);
    assert_eq!(r["f_exact"], json!("(1)*ln(2)"));
    assert_eq!(r["constancy"]["passed"], json!(true));
    assert_eq!(r["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn f_exact_point_mass_is_zero() {
    let r = json_of(&finv(&["f-exact", "weights/point-mass.json"]));
    assert_eq!(r["f"], json!(0.0));
    assert_eq!(r["f_exact"], json!("0"));
}

#[test]
fn f_exact_rank_one_chain_is_the_entropy_rate() {
    let w: Value = serde_json::from_str(&std::fs::read_to_string(configs().join("weights/r1-chain.json")).unwrap()).unwrap();
    // −Σ W(a,b) ln(W(a,b)/π(a)), read straight from the file
    let mut rate = 0.0;
    for e in w["edge"].as_array().unwrap() {
        let p = e["p"].as_f64().unwrap();
        let pi = w["vertex"][e["from"].as_str().unwrap()].as_f64().unwrap();
        rate -= p * (p / pi).ln();
    }
    let r = json_of(&finv(&["f-exact", "weights/r1-chain.json", "--rho-max", "2"]));
    assert!((r["f"].as_f64().unwrap() - rate).abs() < 1e-10);
    assert_eq!(r["constancy"]["values"].as_array().unwrap().len(), 3);
}

#[test]
fn invalid_weight_is_an_input_error() {
    let bad = scratch_config(
        "bad-weight.json",
        json!({"rank": 1, "alphabet": ["0", "1"], "vertex": {"0": 0.5, "1": 0.5},
               "edge": [{"from": "0", "to": "1", "gen": 1, "p": 0.5}]}),
    );
    let out = finv(&["weight", "validate", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn estimates_exit_zero_on_minus_infinity_rows() {
    let out = finv(&["--config", "estimate-bernoulli.json", "f-estimate"]);
    assert_eq!(code(&out), 0);
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config-sha256: "));
    assert_eq!(lines.next().unwrap(), "n,samples,mean_count,log_mean_over_n,stderr");
    assert!(lines.all(|l| l.contains("-inf")));
}

#[test]
fn full_shift_restriction_leaves_the_table_unchanged() {
    let strip = |o: Output| String::from_utf8(o.stdout).unwrap().lines().skip(1).collect::<Vec<_>>().join("\n");
    let free = strip(finv(&["--config", "estimate-small.json", "f-estimate"]));
    let full = strip(finv(&["--config", "estimate-small-full-shift.json", "f-estimate"]));
    assert_eq!(free, full);
    assert!(free.lines().nth(2).unwrap().starts_with("3,300,"));
}

#[test]
fn unattainable_exact_targets_warn() {
    let out = finv(&["--config", "estimate-exact-eps0.json", "f-estimate"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.contains("\n2,4,0.000000000000,-inf,"));
    // golden-mean statistics at n = 3: every one of the 36 actions has 3 exact labelings
    assert!(csv.contains("\n3,36,3.000000000000,"));
}

#[test]
fn estimates_are_reproducible_across_runs_and_pools() {
    let a = finv(&["--config", "estimate-small.json", "--threads", "1", "f-estimate"]);
    let b = finv(&["--config", "estimate-small.json", "--threads", "4", "f-estimate"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = finv(&["--config", "estimate-small.json", "--seed", "12", "f-estimate"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn randomized_commands_need_a_seed() {
    let cfg = scratch_config(
        "no-seed.json",
        json!({"weight": "weights/bernoulli-half.json", "epsilon": 1.0, "n_list": [3], "samples": 10}),
    );
    assert_eq!(code(&finv(&["--config", cfg.to_str().unwrap(), "f-estimate"])), 2);
    assert_eq!(code(&finv(&["--config", cfg.to_str().unwrap(), "--seed", "1", "f-estimate"])), 0);
    let sigma = json!({"n": 3, "perms": [[1, 2, 0], [1, 0, 2]]});
    let cfg = scratch_config("rearrange-no-seed.json", json!({"sigma": sigma, "automorphism": {"images": {}}}));
    assert_eq!(code(&finv(&["--config", cfg.to_str().unwrap(), "rearrange"])), 2);
    assert_eq!(code(&finv(&["--config", cfg.to_str().unwrap(), "--seed", "1", "rearrange"])), 0);
}

#[test]
fn caps_give_resource_errors() {
    let out = finv(&["--config", "estimate-exact-eps0.json", "--cap-exact", "10", "f-estimate"]);
    assert_eq!(code(&out), 3);
    let out = finv(&["--config", "estimate-small.json", "--cap-labels", "8", "f-estimate"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn identity_rearrangement_returns_sigma() {
    let r = json_of(&finv(&["--config", "rearrange-identity.json", "rearrange"]));
    assert_eq!(r["passed"], json!(true));
    assert_eq!(r["tau"], r["sigma"]);
}

#[test]
fn swap_rearrangement_swaps_the_generators() {
    let out = finv(&["--config", "rearrange-swap.json", "rearrange"]);
    assert_eq!(code(&out), 0);
    let r = json_of(&out);
    assert_eq!(r["checks"]["matches_inverse_automorphism"], json!(true));
    assert_eq!(r["tau"]["perms"][0], r["sigma"]["perms"][1]);
    assert_eq!(r["tau"]["perms"][1], r["sigma"]["perms"][0]);
}

#[test]
fn nielsen_and_sampler_rearrangements_pass() {
    for cfg in ["rearrange-nielsen.json", "rearrange-sampler.json"] {
        let out = finv(&["--config", cfg, "rearrange"]);
        assert_eq!(code(&out), 0, "{cfg}");
        let r = json_of(&out);
        assert_eq!(r["checks"]["multiplicative_failures"], json!(0));
        assert_eq!(r["checks"]["reconstructs_sigma"], json!(true));
        assert_eq!(r["checks"]["pushforward_distance"], json!(0.0));
    }
}

#[test]
fn sft_verify_accepts_and_rejects() {
    let out = finv(&["--config", "verify-identity.json", "sft-verify"]);
    assert_eq!(code(&out), 0);
    let r = json_of(&out);
    assert_eq!(r["accepted"], json!(true));
    // break Axiom 1 at vertex 0: x(a) = b while the inverse slot still says A
    let mut x = r["x"].clone();
    x[0]["a"] = json!("b");
    let cfg = scratch_config(
        "verify-broken.json",
        json!({"n": 8, "seed": 4, "sft": "sft/z-rho-1.json", "x": x}),
    );
    let out = finv(&["--config", cfg.to_str().unwrap(), "sft-verify"]);
    assert_eq!(code(&out), 1);
    let r = json_of(&out);
    assert_eq!(r["accepted"], json!(false));
    assert!(r["reason"].is_string());

    let out = finv(&["--config", "verify-golden-mean.json", "sft-verify"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn rearrange_rejects_configurations_outside_z_rho() {
    let x: Vec<Value> = (0..8).map(|_| json!({"a": "b", "A": "A", "b": "a", "B": "B"})).collect();
    let cfg = scratch_config("rearrange-broken.json", json!({"n": 8, "seed": 4, "x": x, "rho": 1}));
    assert_eq!(code(&finv(&["--config", cfg.to_str().unwrap(), "rearrange"])), 1);
}

#[test]
fn weight_tools() {
    let r = json_of(&finv(&["weight", "rationalize", "weights/r1-chain.json", "--q", "1000"]));
    assert_eq!(r["within_bound"], json!(true));
    assert!(r["denominator"].as_u64().unwrap() <= 1000);
    assert!(r["bound"].as_f64().unwrap() > 0.0);

    let r = json_of(&finv(&["weight", "rationalize", "weights/bernoulli-float.json", "--q", "7", "--support", "sft/full-shift.json"]));
    assert_eq!(r["within_bound"], json!(true));

    let r = json_of(&finv(&["weight", "markovize", "weights/golden-mean.json", "--m", "1"]));
    assert_eq!(r["f_match"], json!(true));

    let r = json_of(&finv(&["weight", "distance", "weights/bernoulli-half.json", "weights/bernoulli-half.json"]));
    assert_eq!(r["distance"], json!(0.0));

    let r = json_of(&finv(&["weight", "validate", "weights/bernoulli-third.json"]));
    assert_eq!(r["exact"], json!(true));
    let h = (1.0 / 3.0) * 3f64.ln() + (1.0 / 6.0) * 6f64.ln() + 0.5 * 2f64.ln();
    assert!((r["f"].as_f64().unwrap() - h).abs() < 1e-12);
}

#[test]
fn out_flag_writes_the_report() {
    let path = std::env::temp_dir().join(format!("finv-out-{}.json", std::process::id()));
    let out = finv(&["f-exact", "weights/bernoulli-half.json", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!((r["f"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn config_hash_tracks_the_inputs() {
    let a = json_of(&finv(&["--config", "rearrange-swap.json", "rearrange"]));
    let b = json_of(&finv(&["--config", "rearrange-swap.json", "--seed", "6", "rearrange"]));
    assert_ne!(a["config_sha256"], b["config_sha256"]);
    let c = json_of(&finv(&["--config", "rearrange-swap.json", "rearrange"]));
    assert_eq!(a, c);
}
