//! Shared fixtures for the benchmarks.

use pgs_core::benchgen::{ClassSizeMode, Instance};
use pgs_core::{
    gen_drone, gen_random, strat_synth, DroneModelSpec, RandomModelSpec, SynthesisOutput,
};

/// First seed from `start` whose random model is realizable, with its synthesis output.
pub fn realizable_random(n: usize, mode: ClassSizeMode, start: u64) -> (Instance, SynthesisOutput) {
    (start..start + 1000)
        .find_map(|seed| {
            let inst = gen_random(&RandomModelSpec::new(n, mode, seed)).ok()?;
            let out = strat_synth(&inst.model, &inst.goal, seed).ok()??;
            Some((inst, out))
        })
        .expect("a realizable seed within 1000 tries")
}

pub fn realizable_drone(drones: usize, map: usize, start: u64) -> (Instance, SynthesisOutput) {
    (start..start + 1000)
        .find_map(|seed| {
            let inst = gen_drone(&DroneModelSpec::new(drones, map, seed)).ok()?;
            let out = strat_synth(&inst.model, &inst.goal, seed).ok()??;
            Some((inst, out))
        })
        .expect("a realizable seed within 1000 tries")
}
