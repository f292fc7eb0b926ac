//! Randomly driven simulations shared by the conservation tests and the
//! acceptance runner.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wrsn_core::energy::{ChargerMode, NetworkState, SimConfig};
use wrsn_core::env::{plan_macro, MacroAction};
use wrsn_core::scenario::{build_routing, generate_instance, EnergyParams, Point};

pub fn network(seed: u64, params: EnergyParams, chargers: usize) -> NetworkState {
    let inst = Arc::new(generate_instance(seed, (250.0, 250.0), 4, 16, params).unwrap());
    let routing = Arc::new(build_routing(&inst));
    NetworkState::new(inst, routing, chargers, SimConfig::default())
}

/// Gives every idle charger a random macro action inside the sensor bounds.
pub fn dispatch(state: &mut NetworkState, rng: &mut ChaCha8Rng) {
    let b = state.instance.bounds;
    for k in 0..state.chargers.len() {
        if !state.chargers[k].is_idle() {
            continue;
        }
        let u = if rng.random_bool(0.5) {
            // park on a sensor so charging actually delivers energy
            let j = rng.random_range(0..state.sensors.len());
            let s = state.sensors[j].position;
            MacroAction::new(s.x, s.y, rng.random_range(0.0..60.0))
        } else {
            MacroAction::new(rng.random_range(b.h0..=b.h1), rng.random_range(b.w0..=b.w1), rng.random_range(0.0..60.0))
        };
        let legs = plan_macro(&state.chargers[k], &u, state);
        state.chargers[k].assign(legs, u.location());
    }
}

/// First violated state invariant, if any.
pub fn bounds_violation(state: &NetworkState) -> Option<String> {
    let p = state.params();
    for s in &state.sensors {
        if !(s.energy >= 0.0 && s.energy <= p.e_max) {
            return Some(format!("sensor {} energy {}", s.id, s.energy));
        }
        if s.alive && s.energy < p.e_th {
            return Some(format!("alive sensor {} below threshold", s.id));
        }
        if s.rate < 0.0 {
            return Some(format!("sensor {} negative rate", s.id));
        }
    }
    for c in &state.chargers {
        if !(c.energy >= 0.0 && c.energy <= p.charger_capacity) {
            return Some(format!("charger {} energy {}", c.id, c.energy));
        }
        if c.mode == ChargerMode::Charging && c.remaining_charge <= 0.0 {
            return Some(format!("charger {} charging with no time left", c.id));
        }
        if c.mode == ChargerMode::Moving && c.destination.is_none() {
            return Some(format!("charger {} moving without destination", c.id));
        }
    }
    if state.dead != state.mnt.iter().any(|&m| m == 0) {
        return Some("dead flag disagrees with target coverage".into());
    }
    None
}

/// Random charging without traffic, so sensor energy changes only through
/// charging: every step, the sensors' gain must equal the debit of the
/// chargers that stood still. Returns the worst per-step imbalance (J) and
/// the energy delivered.
pub fn conservation_run(seed: u64, steps: usize) -> Result<(f64, f64), String> {
    let params = EnergyParams {
        packet_period: 1e12,
        ..EnergyParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(31 + seed);
    let mut state = network(seed, params, 3);
    let p = state.params().clone();
    for s in state.sensors.iter_mut() {
        s.energy = rng.random_range(p.e_th + 100.0..p.e_max);
    }
    let (mut worst, mut delivered) = (0.0f64, 0.0);
    for _ in 0..steps {
        dispatch(&mut state, &mut rng);
        let sensors_before = state.total_sensor_energy();
        let before: Vec<(Point, f64)> = state.chargers.iter().map(|c| (c.position, c.energy)).collect();
        state.step().map_err(|e| e.to_string())?;
        let gain = state.total_sensor_energy() - sensors_before;
        let mut debit = 0.0;
        for (c, &(pos, e)) in state.chargers.iter().zip(&before) {
            // movers and battery swaps are not charging this step
            if c.position == pos && c.energy <= e {
                debit += e - c.energy;
            }
        }
        worst = worst
            .max((gain - debit).abs())
            .max((state.last_balance.sensor_gain - gain).abs())
            .max((state.last_balance.charger_debit - debit).abs());
        delivered += gain;
        if let Some(v) = bounds_violation(&state) {
            return Err(format!("t={}: {v}", state.clock));
        }
    }
    Ok((worst, delivered))
}

/// Random charging under heavy traffic, checking bounds, a strictly
/// advancing clock and that no sensor revives. Returns the number of deaths.
pub fn bounded_run(seed: u64, steps: usize) -> Result<usize, String> {
    let params = EnergyParams {
        b_packet: 4e7,
        ..EnergyParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5 + seed);
    let mut state = network(seed, params, 2);
    let mut was_dead = vec![false; state.sensors.len()];
    let mut clock = state.clock;
    for _ in 0..steps {
        if state.dead {
            break;
        }
        dispatch(&mut state, &mut rng);
        state.step().map_err(|e| e.to_string())?;
        if state.clock <= clock {
            return Err(format!("clock went from {clock} to {}", state.clock));
        }
        clock = state.clock;
        if let Some(v) = bounds_violation(&state) {
            return Err(format!("t={}: {v}", state.clock));
        }
        for s in &state.sensors {
            if was_dead[s.id] && s.alive {
                return Err(format!("sensor {} revived at t={}", s.id, state.clock));
            }
            was_dead[s.id] = !s.alive;
        }
    }
    Ok(was_dead.iter().filter(|&&d| d).count())
}
