use std::collections::VecDeque;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sim::{dispatch, network};
use wrsn_core::energy::{write_event_log, Leg, NetworkState, SimConfig};
use wrsn_core::scenario::{build_routing, EnergyParams, Point, ScenarioInstance};

#[path = "support/sim.rs"]
mod sim;

#[test]
fn charging_moves_energy_without_loss() {
    for seed in 0..3 {
        let (worst, delivered) = sim::conservation_run(seed, 1000).unwrap();
        assert!(worst <= 1e-9, "seed {seed}: imbalance {worst:e} J");
        assert!(delivered > 1000.0, "seed {seed}: the run should actually charge, got {delivered} J");
    }
}

#[test]
fn energies_stay_bounded_and_deaths_are_final() {
    let deaths: usize = (0..3).map(|seed| sim::bounded_run(seed, 1000).unwrap()).sum();
    assert!(deaths > 0, "the heavy workload should kill some sensors");
}

#[test]
fn dead_sensor_accepts_no_charge() {
    let mut state = network(1, EnergyParams::default(), 1);
    let j = 3;
    state.kill_sensor(j);
    let e = state.sensors[j].energy;
    let at = state.sensors[j].position;
    let mut legs = VecDeque::new();
    legs.push_back(Leg::MoveTo(at));
    legs.push_back(Leg::Charge(500.0));
    state.chargers[0].assign(legs, at);
    for _ in 0..400 {
        if state.dead {
            break;
        }
        state.step().unwrap();
    }
    assert_eq!(state.sensors[j].energy, e);
    assert!(!state.sensors[j].alive);
}

#[test]
fn total_energy_never_rises_without_chargers() {
    let params = EnergyParams {
        b_packet: 1e7,
        ..EnergyParams::default()
    };
    for seed in 0..3 {
        let mut state = network(seed, params.clone(), 0);
        let mut total = state.total_sensor_energy();
        while !state.dead && state.clock < 3000.0 {
            state.step().unwrap();
            let now = state.total_sensor_energy();
            assert!(now <= total, "t={}: {now} > {total}", state.clock);
            total = now;
        }
    }
}

fn traced_log(seed: u64) -> Vec<u8> {
    let params = EnergyParams {
        b_packet: 2e7,
        ..EnergyParams::default()
    };
    let mut state = network(4, params, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    for _ in 0..1500 {
        if state.dead {
            break;
        }
        dispatch(&mut state, &mut rng);
        events.extend(state.step().unwrap());
    }
    let mut out = Vec::new();
    write_event_log(&mut out, &events).unwrap();
    out
}

#[test]
fn replay_gives_identical_event_logs() {
    let a = traced_log(12);
    assert!(!a.is_empty());
    assert_eq!(a, traced_log(12));
    assert_ne!(a, traced_log(13));
}

/// Lone monitor beside the base station draining exactly 1 J per second.
fn constant_drain_instance() -> ScenarioInstance {
    let params = EnergyParams {
        b_packet: 2e7,
        ..EnergyParams::default()
    };
    let bs = Point::new(0.0, 0.0);
    ScenarioInstance::new(bs, vec![bs], vec![Point::new(5.0, 0.0)], params).unwrap()
}

#[test]
fn constant_drain_dies_on_schedule() {
    let inst = Arc::new(constant_drain_instance());
    let span = inst.params.e_max - inst.params.e_th;
    assert_eq!(span, 10260.0);
    let routing = Arc::new(build_routing(&inst));
    let mut state = NetworkState::new(inst, routing, 0, SimConfig::default());
    assert!((state.nominal_rates()[0] - 1.0).abs() < 1e-12);
    let (t, censored) = state.run_until_death(1e6).unwrap();
    assert!(!censored);
    assert!((t - span).abs() <= 1.0, "died at {t}");
}

#[test]
fn horizon_caps_a_long_lived_network() {
    let inst = Arc::new(constant_drain_instance());
    let routing = Arc::new(build_routing(&inst));
    let mut state = NetworkState::new(inst, routing, 0, SimConfig::default());
    assert_eq!(state.run_until_death(100.0).unwrap(), (100.0, true));
}
