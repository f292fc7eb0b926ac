use std::collections::VecDeque;
use std::sync::Arc;

use proptest::prelude::*;
use wrsn_core::energy::{Leg, NetworkState, SimConfig};
use wrsn_core::observation::{field_f1, render, ObsMask, ObservationConfig, ObservationGrid};
use wrsn_core::scenario::{build_routing, EnergyParams, Point, ScenarioInstance};

/// Sensors on integer coordinates spanning exactly 256 m per axis, so every
/// offset the renderer forms is exact under integer translation.
fn layout(shift: (f64, f64)) -> (Point, Vec<Point>, Vec<Point>) {
    let raw = [
        (0.0, 0.0),
        (60.0, 10.0),
        (120.0, 40.0),
        (180.0, 90.0),
        (256.0, 140.0),
        (200.0, 256.0),
        (130.0, 190.0),
        (70.0, 120.0),
        (20.0, 60.0),
    ];
    let at = |x: f64, y: f64| Point::new(x + shift.0, y + shift.1);
    let sensors = raw.iter().map(|&(x, y)| at(x, y)).collect();
    let targets = vec![at(65.0, 15.0), at(190.0, 95.0)];
    (at(128.0, 128.0), sensors, targets)
}

fn busy_state(shift: (f64, f64)) -> NetworkState {
    let (bs, sensors, targets) = layout(shift);
    let params = EnergyParams {
        b_packet: 1e6,
        ..EnergyParams::default()
    };
    let inst = Arc::new(ScenarioInstance::new(bs, sensors, targets, params).unwrap());
    let routing = Arc::new(build_routing(&inst));
    let mut state = NetworkState::new(Arc::clone(&inst), routing, 3, SimConfig::default());
    let at = |x: f64, y: f64| Point::new(x + shift.0, y + shift.1);
    // charger 1 charges in place, charger 2 is on its way somewhere
    state.chargers[1].position = at(60.0, 10.0);
    state.chargers[1].assign(VecDeque::from([Leg::Charge(300.0)]), at(60.0, 10.0));
    state.chargers[2].position = at(100.0, 100.0);
    state.chargers[2].assign(VecDeque::from([Leg::MoveTo(at(200.0, 250.0)), Leg::Charge(50.0)]), at(200.0, 250.0));
    for _ in 0..20 {
        state.step().unwrap();
    }
    state
}

fn config(state: &NetworkState, t: usize) -> ObservationConfig {
    let inst = &state.instance;
    ObservationConfig::new(ObservationGrid::new(t, inst.bounds, inst.params.r_c))
}

#[test]
fn integer_translation_is_bitwise_invisible() {
    let base = busy_state((0.0, 0.0));
    for shift in [(1024.0, -512.0), (-3.0, 7.0), (40000.0, 123.0)] {
        let moved = busy_state(shift);
        for agent in 0..3 {
            let a = render(&base, agent, &config(&base, 32));
            let b = render(&moved, agent, &config(&moved, 32));
            let same = a.tensor.iter().zip(&b.tensor).all(|(x, y)| x.to_bits() == y.to_bits());
            assert!(same, "shift {shift:?}, agent {agent}");
        }
    }
}

#[test]
fn sensor_field_is_additive_over_disjoint_sets() {
    let full = busy_state((0.0, 0.0));
    let h = full.params().r_c;
    let split = |keep: &dyn Fn(usize) -> bool| {
        let mut s = full.clone();
        for x in s.sensors.iter_mut() {
            x.alive = x.alive && keep(x.id);
        }
        s
    };
    let left = split(&|j| j % 3 == 0);
    let right = split(&|j| j % 3 != 0);
    let cfg = config(&full, 32);
    for i in 0..32 {
        for k in 0..32 {
            let x = cfg.grid.cell_center(i, k);
            let union = field_f1(&full, &x, h, cfg.e_floor);
            let sum = field_f1(&left, &x, h, cfg.e_floor) + field_f1(&right, &x, h, cfg.e_floor);
            assert!((union - sum).abs() <= 1e-12 * union.abs().max(1e-300), "cell ({i},{k})");
        }
    }
    let (a, l, r) = (render(&full, 0, &cfg), render(&left, 0, &cfg), render(&right, 0, &cfg));
    let peak = a.channel(0).iter().copied().fold(0.0f32, f32::max);
    for ((u, x), y) in a.channel(0).iter().zip(l.channel(0)).zip(r.channel(0)) {
        assert!((u - (x + y)).abs() <= 1e-6 * peak);
    }
}

#[test]
fn paper_scale_grid_has_the_full_shape() {
    let state = busy_state((0.0, 0.0));
    let o = render(&state, 0, &config(&state, 100));
    assert_eq!(o.shape(), [4, 100, 100]);
    assert_eq!(o.tensor.len(), 40_000);
    assert_eq!(o.timestamp, state.clock);
}

#[test]
fn masks_zero_exactly_their_channels() {
    let state = busy_state((0.0, 0.0));
    let mut cfg = config(&state, 16);
    let full = render(&state, 0, &cfg);
    cfg.mask = ObsMask::NoFirst;
    let no1 = render(&state, 0, &cfg);
    cfg.mask = ObsMask::OnlyFirst;
    let only1 = render(&state, 0, &cfg);
    for c in 0..4 {
        assert!(full.channel(c).iter().any(|&v| v > 0.0), "channel {c} is populated");
        let (a, b) = if c == 0 { (&only1, &no1) } else { (&no1, &only1) };
        assert_eq!(a.channel(c), full.channel(c));
        assert!(b.channel(c).iter().all(|&v| v == 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fields_are_finite_and_non_negative(
        energies in prop::collection::vec(0.0f64..1.0, 9),
        rates in prop::collection::vec(0.0f64..2.0, 9),
        battery in 0.0f64..=1.0,
        agent in 0usize..3,
    ) {
        let mut state = busy_state((0.0, 0.0));
        let p = state.params().clone();
        for (s, (&e, &r)) in state.sensors.iter_mut().zip(energies.iter().zip(&rates)) {
            // squeeze some sensors right up against the threshold
            s.energy = p.e_th + e * e * e * (p.e_max - p.e_th);
            s.rate = r * r * r * r;
        }
        state.chargers[0].energy = battery * p.charger_capacity;
        let o = render(&state, agent, &config(&state, 16));
        prop_assert!(o.tensor.iter().all(|v| v.is_finite() && *v >= 0.0));
        prop_assert!(o.channel(1).iter().all(|&v| v <= 1.0));
    }
}
