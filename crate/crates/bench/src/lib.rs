//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wrsn_core::env::{Controller, Env, EnvConfig, EnvEvent, RandomController};
use wrsn_core::scenario::generate_instance;
use wrsn_core::{EnergyParams, ScenarioInstance};

/// The 20-sensor, 5-target synthetic field used for timing.
pub fn field(side: f64, b_packet: f64) -> Arc<ScenarioInstance> {
    let params = EnergyParams {
        b_packet,
        ..EnergyParams::default()
    };
    Arc::new(generate_instance(1, (side, side), 5, 20, params).expect("feasible fixture"))
}

pub fn env_config(agents: usize, grid: usize) -> EnvConfig {
    EnvConfig {
        n_agents: agents,
        grid_size: grid,
        ..EnvConfig::default()
    }
}

/// Environment after `decisions` random macro actions, paused at the next
/// decision.
pub fn warmed_env(instance: &Arc<ScenarioInstance>, cfg: EnvConfig, decisions: usize) -> Env {
    let mut env = Env::new(Arc::clone(instance), cfg);
    let mut ctl = RandomController::new(11);
    for _ in 0..decisions {
        match env.next_event().expect("event") {
            EnvEvent::Decision(ev) => {
                let d = ctl.decide(&ev, &env).expect("decision");
                env.act(ev.agent_id, d).expect("act");
            }
            EnvEvent::Finished(_) => break,
        }
    }
    env
}

pub fn random_tensor(len: usize, seed: u64) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(0.0..1.0)).collect()
}
