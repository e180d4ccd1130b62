//! Shared test inputs: Z_ρ-accepted microstates.

#![allow(dead_code)]

use finvariant::action::FiniteAction;
use finvariant::orbit::Automorphism;
use finvariant::sft::{sample_sft_config, sft_check_all, OrbitSymbol, SamplerBudget, ZRho};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub sigma: FiniteAction,
    pub x: Vec<OrbitSymbol>,
    pub rho: usize,
}

/// `count` accepted `(σ, x)` pairs on `n ∈ 6..=12` points, rank 2.
/// Even slots sample `Z_1` without a hint; odd slots sample `Z_2` seeded
/// with the symbol of a random automorphism of displacement 2.
pub fn instances(count: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n = rng.random_range(6..=12);
        let sigma = FiniteAction::sample_with(n, 2, &mut rng);
        let s: u64 = rng.random();
        let found = if out.len() % 2 == 0 {
            let z = ZRho::new(2, 1).unwrap();
            sample_sft_config(&z, &sigma, s, SamplerBudget::default(), None).map(|x| (x, 1))
        } else {
            let theta = loop {
                let t = Automorphism::random(2, rng.random_range(1..=4), &mut rng);
                if t.displacement() == 2 {
                    break t;
                }
            };
            let rho = theta.displacement();
            let z = ZRho::new(2, rho).unwrap();
            sample_sft_config(&z, &sigma, s, SamplerBudget::default(), Some(&theta.symbol()))
                .map(|x| (x, rho))
        };
        if let Some((x, rho)) = found {
            debug_assert!(sft_check_all(&ZRho::new(2, rho).unwrap(), &sigma, &x));
            out.push(Instance { sigma, x, rho });
        }
    }
    out
}
