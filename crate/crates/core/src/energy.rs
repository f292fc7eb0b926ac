//! Fixed-step simulation of sensor drain, charger kinematics and wireless charging.
//!
//! Within one step the phases run in a fixed order: packet traffic, charger
//! movement, charging, death marking, then bookkeeping (consumption windows,
//! target connectivity, clock).

use std::collections::VecDeque;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenario::{EnergyParams, NextHop, Point, RoutingTable, ScenarioInstance};

/// Length of the consumption-rate averaging window (s).
pub const RATE_WINDOW: f64 = 100.0;

/// Energy to receive `bits` bits.
pub fn receive_cost(bits: f64, params: &EnergyParams) -> f64 {
    bits * params.eps_elec
}

/// Energy to transmit `bits` bits over `d` meters (free-space below `d0`, multi-path above).
pub fn transmit_cost(bits: f64, d: f64, params: &EnergyParams) -> f64 {
    let amp = if d < params.d0 {
        params.eps_fs * d * d
    } else {
        params.eps_mp * d * d * d * d
    };
    bits * params.eps_elec + bits * amp
}

/// Power received by a sensor at distance `d` from a charging charger (J/s).
pub fn charge_rate(d: f64, params: &EnergyParams) -> f64 {
    if d > params.r_charge {
        0.0
    } else {
        let s = d + params.beta;
        params.alpha / (s * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Step length (s).
    pub dt: f64,
    /// Floor for estimated consumption rates (J/s).
    pub p_min: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { dt: 1.0, p_min: 1e-6 }
    }
}

/// Sliding record of consumed energy over the last [`RATE_WINDOW`] seconds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConsumptionWindow {
    records: VecDeque<(f64, f64)>,
    sum: f64,
    ever: bool,
}

impl ConsumptionWindow {
    pub fn record(&mut self, t: f64, energy: f64) {
        if energy > 0.0 {
            self.records.push_back((t, energy));
            self.sum += energy;
            self.ever = true;
        }
    }

    fn evict(&mut self, t: f64) {
        let horizon = t - RATE_WINDOW;
        let mut evicted = false;
        while let Some(&(rt, e)) = self.records.front() {
            if rt > horizon {
                break;
            }
            self.sum -= e;
            self.records.pop_front();
            evicted = true;
        }
        if evicted {
            // keep the running sum from drifting
            self.sum = self.records.iter().map(|r| r.1).sum();
        }
    }

    /// Energy consumed in `(t - 100, t]` divided by `min(t, 100)`, floored at `p_min`.
    pub fn rate(&mut self, t: f64, p_min: f64) -> f64 {
        self.evict(t);
        if !self.ever || t <= 0.0 {
            return p_min;
        }
        (self.sum / t.min(RATE_WINDOW)).max(p_min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorState {
    pub id: usize,
    pub position: Point,
    /// Residual energy (J).
    pub energy: f64,
    pub alive: bool,
    pub window: ConsumptionWindow,
    /// Windowed consumption rate (J/s).
    pub rate: f64,
    pub monitored_targets: Vec<usize>,
}

/// One leg of a charger's low-level schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Leg {
    /// Drive to the base station and swap batteries on arrival.
    ReturnToBase,
    MoveTo(Point),
    /// Stay put and charge for the given number of seconds.
    Charge(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChargerMode {
    Idle,
    Moving,
    Charging,
    Returning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargerState {
    pub id: usize,
    pub position: Point,
    pub energy: f64,
    pub mode: ChargerMode,
    /// Destination of the current macro action.
    pub destination: Option<Point>,
    /// Remaining charging time (s); zero unless charging.
    pub remaining_charge: f64,
    pub legs: VecDeque<Leg>,
}

impl ChargerState {
    fn refresh_mode(&mut self) {
        match self.legs.front() {
            None => {
                self.mode = ChargerMode::Idle;
                self.remaining_charge = 0.0;
            }
            Some(Leg::ReturnToBase) => self.mode = ChargerMode::Returning,
            Some(Leg::MoveTo(_)) => self.mode = ChargerMode::Moving,
            Some(Leg::Charge(c)) => {
                self.mode = ChargerMode::Charging;
                self.remaining_charge = *c;
            }
        }
    }

    /// Replaces the schedule with a new one.
    pub fn assign(&mut self, legs: VecDeque<Leg>, destination: Point) {
        self.legs = legs;
        self.destination = Some(destination);
        self.remaining_charge = 0.0;
        self.refresh_mode();
    }

    pub fn is_idle(&self) -> bool {
        self.mode == ChargerMode::Idle
    }

    pub fn is_moving(&self) -> bool {
        matches!(self.mode, ChargerMode::Moving | ChargerMode::Returning)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SensorDied,
    ChargerArrived,
    ChargerRecharged,
    ChargingFinished,
    TargetDisconnected,
    NetworkDied,
}

/// One simulation event; exported as a JSON line `{t, kind, entity_id, payload}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub entity_id: usize,
    pub payload: serde_json::Value,
}

pub fn write_event_log<W: Write>(mut out: W, events: &[Event]) -> std::io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Charging energy balance of the last step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChargeBalance {
    /// Sum of energy gained by sensors.
    pub sensor_gain: f64,
    /// Sum of energy debited from chargers for charging.
    pub charger_debit: f64,
}

/// Mutable simulation state of one network.
#[derive(Debug, Clone)]
pub struct NetworkState {
    pub instance: Arc<ScenarioInstance>,
    pub routing: Arc<RoutingTable>,
    pub config: SimConfig,
    pub clock: f64,
    pub steps: u64,
    pub sensors: Vec<SensorState>,
    pub chargers: Vec<ChargerState>,
    /// Per-target connectivity status (1 = connected to the base station).
    pub mnt: Vec<u8>,
    pub dead: bool,
    pub last_balance: ChargeBalance,
    neighbors: Vec<Vec<usize>>,
    near_bs: Vec<bool>,
    tx_cost: Vec<f64>,
    rx_cost: f64,
    consumed: Vec<f64>,
}

impl NetworkState {
    /// Fresh network at `t = 0` with `n_chargers` full chargers parked at the base station.
    pub fn new(
        instance: Arc<ScenarioInstance>,
        routing: Arc<RoutingTable>,
        n_chargers: usize,
        config: SimConfig,
    ) -> Self {
        let p = &instance.params;
        let n = instance.num_sensors();
        let sensors = instance
            .sensors
            .iter()
            .enumerate()
            .map(|(j, &position)| SensorState {
                id: j,
                position,
                energy: p.e_max,
                alive: true,
                window: ConsumptionWindow::default(),
                rate: config.p_min,
                monitored_targets: instance.monitored[j].clone(),
            })
            .collect();
        let chargers = (0..n_chargers)
            .map(|k| ChargerState {
                id: k,
                position: instance.base_station,
                energy: p.charger_capacity,
                mode: ChargerMode::Idle,
                destination: None,
                remaining_charge: 0.0,
                legs: VecDeque::new(),
            })
            .collect();
        let mut neighbors = vec![Vec::new(); n];
        for a in 0..n {
            for b in 0..n {
                if a != b && instance.sensors[a].dist(&instance.sensors[b]) <= p.r_c {
                    neighbors[a].push(b);
                }
            }
        }
        let near_bs = instance
            .sensors
            .iter()
            .map(|s| s.dist(&instance.base_station) <= p.r_c)
            .collect();
        let tx_cost = routing
            .link_len
            .iter()
            .map(|&d| transmit_cost(p.b_packet, d, p))
            .collect();
        let rx_cost = receive_cost(p.b_packet, p);
        let mut state = NetworkState {
            mnt: vec![1; instance.num_targets()],
            instance,
            routing,
            config,
            clock: 0.0,
            steps: 0,
            sensors,
            chargers,
            dead: false,
            last_balance: ChargeBalance::default(),
            neighbors,
            near_bs,
            tx_cost,
            rx_cost,
            consumed: vec![0.0; n],
        };
        state.refresh_connectivity();
        let nominal = state.nominal_rates();
        for (s, r) in state.sensors.iter_mut().zip(nominal) {
            s.rate = r.max(config.p_min);
        }
        state
    }

    /// Steady-state drain (J/s) of every sensor under the full routing tree,
    /// used as the rate before any consumption has been observed.
    pub fn nominal_rates(&self) -> Vec<f64> {
        let period = self.params().packet_period;
        let mut rate = vec![0.0; self.sensors.len()];
        for j in 0..self.sensors.len() {
            let mut cur = j;
            loop {
                let hop = self.routing.next_hop[cur];
                if hop == NextHop::DeadEnd {
                    break;
                }
                rate[cur] += self.tx_cost[cur] / period;
                match hop {
                    NextHop::Sensor(k) => {
                        rate[k] += self.rx_cost / period;
                        cur = k;
                    }
                    _ => break,
                }
            }
        }
        rate
    }

    pub fn params(&self) -> &EnergyParams {
        &self.instance.params
    }

    pub fn alive_count(&self) -> usize {
        self.sensors.iter().filter(|s| s.alive).count()
    }

    /// Marks a sensor dead immediately (used by tests and scripted scenarios)
    /// and refreshes connectivity.
    pub fn kill_sensor(&mut self, j: usize) {
        self.sensors[j].alive = false;
        self.refresh_connectivity();
    }

    /// Recomputes `mnt` by breadth-first search over alive sensors and sets `dead`.
    pub fn refresh_connectivity(&mut self) -> &[u8] {
        let n = self.sensors.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        for j in 0..n {
            if self.sensors[j].alive && self.near_bs[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] && self.sensors[v].alive {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        for (i, monitors) in self.instance.monitors.iter().enumerate() {
            self.mnt[i] = u8::from(monitors.iter().any(|&j| seen[j]));
        }
        self.dead = self.mnt.contains(&0);
        &self.mnt
    }

    /// Windowed consumption rate of sensor `j` at the current clock.
    pub fn consumption_rate(&mut self, j: usize) -> f64 {
        let (t, p_min) = (self.clock, self.config.p_min);
        self.sensors[j].window.rate(t, p_min)
    }

    fn packets_this_step(&self) -> f64 {
        let period = self.params().packet_period;
        let t0 = self.steps as f64 * self.config.dt;
        let t1 = t0 + self.config.dt;
        ((t1 / period + 1e-9).floor() - (t0 / period + 1e-9).floor()).max(0.0)
    }

    fn debit_sensor(&mut self, j: usize, cost: f64) {
        let s = &mut self.sensors[j];
        let paid = cost.min(s.energy);
        s.energy -= paid;
        self.consumed[j] += paid;
    }

    /// Advances the simulation by one step of `config.dt` seconds.
    pub fn step(&mut self) -> Result<Vec<Event>> {
        if self.dead {
            return Err(Error::Invariant(format!("step called on a dead network at t={}", self.clock)));
        }
        let dt = self.config.dt;
        let t_end = (self.steps + 1) as f64 * dt;
        let mut events = Vec::new();
        self.consumed.iter_mut().for_each(|c| *c = 0.0);

        // traffic
        let packets = self.packets_this_step();
        if packets > 0.0 {
            let routing = Arc::clone(&self.routing);
            let rx = self.rx_cost * packets;
            for j in 0..self.sensors.len() {
                if !self.sensors[j].alive {
                    continue;
                }
                let mut cur = j;
                loop {
                    let hop = routing.next_hop[cur];
                    if hop == NextHop::DeadEnd {
                        break;
                    }
                    self.debit_sensor(cur, self.tx_cost[cur] * packets);
                    match hop {
                        NextHop::Sensor(k) if self.sensors[k].alive => {
                            self.debit_sensor(k, rx);
                            cur = k;
                        }
                        _ => break,
                    }
                }
            }
        }

        // movement
        let p = self.instance.params.clone();
        let bs = self.instance.base_station;
        let mut moved = vec![false; self.chargers.len()];
        for (k, c) in self.chargers.iter_mut().enumerate() {
            let target = match c.legs.front() {
                Some(Leg::ReturnToBase) => bs,
                Some(Leg::MoveTo(q)) => *q,
                _ => continue,
            };
            moved[k] = true;
            let next = c.position.towards(&target, p.speed * dt);
            let dist = c.position.dist(&next);
            c.energy -= p.move_cost * dist;
            c.position = next;
            if c.energy < -1e-9 {
                return Err(Error::Invariant(format!(
                    "charger {k} energy underflow while moving: {} J at t={t_end}",
                    c.energy
                )));
            }
            c.energy = c.energy.max(0.0);
            if next == target {
                let leg = c.legs.pop_front();
                if leg == Some(Leg::ReturnToBase) {
                    c.energy = p.charger_capacity;
                    events.push(Event {
                        t: t_end,
                        kind: EventKind::ChargerRecharged,
                        entity_id: k,
                        payload: serde_json::Value::Null,
                    });
                }
                events.push(Event {
                    t: t_end,
                    kind: EventKind::ChargerArrived,
                    entity_id: k,
                    payload: serde_json::json!({ "x": next.x, "y": next.y }),
                });
                c.refresh_mode();
            }
        }

        // charging
        let mut balance = ChargeBalance::default();
        for k in 0..self.chargers.len() {
            if moved[k] || self.chargers[k].mode != ChargerMode::Charging {
                continue;
            }
            let pos = self.chargers[k].position;
            let tau = dt.min(self.chargers[k].remaining_charge);
            let mut delivered = 0.0;
            for s in self.sensors.iter_mut().filter(|s| s.alive) {
                let rate = charge_rate(s.position.dist(&pos), &p);
                if rate == 0.0 {
                    continue;
                }
                let gain = (rate * tau).min((p.e_max - s.energy).max(0.0));
                s.energy += gain;
                delivered += gain;
                balance.sensor_gain += gain;
            }
            let c = &mut self.chargers[k];
            c.energy -= delivered;
            balance.charger_debit += delivered;
            if c.energy < -1e-9 {
                return Err(Error::Invariant(format!(
                    "charger {k} energy underflow while charging: {} J at t={t_end}",
                    c.energy
                )));
            }
            c.energy = c.energy.max(0.0);
            c.remaining_charge -= tau;
            if c.remaining_charge <= 1e-9 {
                c.legs.pop_front();
                c.refresh_mode();
                events.push(Event {
                    t: t_end,
                    kind: EventKind::ChargingFinished,
                    entity_id: k,
                    payload: serde_json::Value::Null,
                });
            } else if let Some(Leg::Charge(rem)) = c.legs.front_mut() {
                *rem = c.remaining_charge;
            }
        }
        self.last_balance = balance;

        // deaths
        let e_th = p.e_th;
        let mut died = false;
        for s in self.sensors.iter_mut() {
            if s.alive && s.energy < e_th {
                s.alive = false;
                died = true;
                events.push(Event {
                    t: t_end,
                    kind: EventKind::SensorDied,
                    entity_id: s.id,
                    payload: serde_json::json!({ "energy": s.energy }),
                });
            }
        }

        // bookkeeping
        self.steps += 1;
        self.clock = t_end;
        let p_min = self.config.p_min;
        for (s, &used) in self.sensors.iter_mut().zip(&self.consumed) {
            s.window.record(t_end, used);
            s.rate = s.window.rate(t_end, p_min);
        }
        if died {
            let before = self.mnt.clone();
            self.refresh_connectivity();
            for (i, (&b, &a)) in before.iter().zip(&self.mnt).enumerate() {
                if b == 1 && a == 0 {
                    events.push(Event {
                        t: t_end,
                        kind: EventKind::TargetDisconnected,
                        entity_id: i,
                        payload: serde_json::Value::Null,
                    });
                }
            }
            if self.dead {
                events.push(Event {
                    t: t_end,
                    kind: EventKind::NetworkDied,
                    entity_id: 0,
                    payload: serde_json::Value::Null,
                });
            }
        }
        Ok(events)
    }

    /// Steps without chargers until death or `t_max`; returns `(time, censored)`.
    pub fn run_until_death(&mut self, t_max: f64) -> Result<(f64, bool)> {
        while !self.dead {
            if self.clock + 0.5 * self.config.dt > t_max {
                return Ok((t_max, true));
            }
            self.step()?;
        }
        Ok((self.clock, false))
    }

    /// Total residual energy of all sensors.
    pub fn total_sensor_energy(&self) -> f64 {
        self.sensors.iter().map(|s| s.energy).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::build_routing;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn radio_costs() {
        let p = EnergyParams::default();
        assert_eq!(receive_cost(0.0, &p), 0.0);
        assert!(rel(receive_cost(1.0, &p), 5.0e-8) < 1e-12);
        assert!(rel(receive_cost(4000.0, &p), 2.0e-4) < 1e-12);
        assert!(rel(transmit_cost(1.0, 0.0, &p), 5.0e-8) < 1e-12);
        assert!(rel(transmit_cost(1.0, 10.0, &p), 5.1e-8) < 1e-12);
        assert!(rel(transmit_cost(1.0, 100.0, &p), 1.8e-7) < 1e-12);
    }

    #[test]
    fn charging_model() {
        let p = EnergyParams::default();
        assert!(rel(charge_rate(0.0, &p), 5.0) < 1e-12);
        assert!(rel(charge_rate(27.0, &p), 4500.0 / 57.0 / 57.0) < 1e-12);
        assert!((charge_rate(27.0, &p) - 1.3851).abs() < 1e-4);
        assert_eq!(charge_rate(27.001, &p), 0.0);
    }

    #[test]
    fn window_rates() {
        let mut w = ConsumptionWindow::default();
        assert_eq!(w.rate(50.0, 1e-6), 1e-6);
        for t in 1..=300 {
            w.record(t as f64, 2.0);
        }
        assert!((w.rate(300.0, 1e-6) - 2.0).abs() < 1e-12);

        let mut w = ConsumptionWindow::default();
        w.record(150.0, 10.0);
        assert!((w.rate(200.0, 1e-6) - 0.1).abs() < 1e-12);
        // burst leaves the window
        assert_eq!(w.rate(250.0, 1e-6), 1e-6);
    }

    #[test]
    fn early_window_divides_by_elapsed_time() {
        let mut w = ConsumptionWindow::default();
        for t in 1..=10 {
            w.record(t as f64, 3.0);
        }
        assert!((w.rate(10.0, 1e-6) - 3.0).abs() < 1e-12);
    }

    fn single_sensor_state(b_packet: f64) -> NetworkState {
        let params = EnergyParams {
            b_packet,
            ..EnergyParams::default()
        };
        let inst = ScenarioInstance::new(
            Point::new(0.0, 0.0),
            vec![Point::new(10.0, 0.0)],
            vec![Point::new(20.0, 0.0)],
            params,
        )
        .unwrap();
        let rt = build_routing(&inst);
        NetworkState::new(Arc::new(inst), Arc::new(rt), 1, SimConfig::default())
    }

    #[test]
    fn silent_sensor_keeps_energy() {
        let mut st = single_sensor_state(4000.0);
        // no packets: make the only sensor a routing dead end
        let mut rt = (*st.routing).clone();
        rt.next_hop[0] = NextHop::DeadEnd;
        st.routing = Arc::new(rt);
        let e0 = st.sensors[0].energy;
        for _ in 0..20 {
            st.step().unwrap();
        }
        assert_eq!(st.sensors[0].energy, e0);
    }

    #[test]
    fn charging_at_zero_distance_transfers_five_joules() {
        let mut st = single_sensor_state(4000.0);
        st.sensors[0].energy = 5000.0;
        let c = &mut st.chargers[0];
        c.position = st.sensors[0].position;
        c.assign(VecDeque::from([Leg::Charge(1.0)]), st.sensors[0].position);
        let (e_s, e_c) = (st.sensors[0].energy, st.chargers[0].energy);
        let drain = transmit_cost(4000.0, 10.0, st.params());
        st.step().unwrap();
        let gained = st.sensors[0].energy - (e_s - drain);
        let lost = e_c - st.chargers[0].energy;
        assert!((gained - 5.0).abs() < 1e-9);
        assert!((lost - 5.0).abs() < 1e-9);
        assert!(st.chargers[0].is_idle());
    }

    #[test]
    fn sensor_below_threshold_dies_at_step_end() {
        // 1 J/s drain at 10 m: b * (eps_elec + eps_fs * 100) = 1
        let b = 1.0 / 5.1e-8;
        let mut st = single_sensor_state(b);
        st.sensors[0].energy = st.params().e_th + 0.01;
        let events = st.step().unwrap();
        assert!(!st.sensors[0].alive);
        assert!(st.dead);
        let kinds: Vec<_> = events.iter().map(|e| e.kind).collect();
        assert_eq!(
            kinds,
            vec![EventKind::SensorDied, EventKind::TargetDisconnected, EventKind::NetworkDied]
        );
        assert!(st.step().is_err());
    }

    #[test]
    fn movement_costs_energy_per_meter() {
        let mut st = single_sensor_state(4000.0);
        let dest = Point::new(100.0, 0.0);
        st.chargers[0].assign(VecDeque::from([Leg::MoveTo(dest)]), dest);
        st.step().unwrap();
        let c = &st.chargers[0];
        assert_eq!(c.position, Point::new(5.0, 0.0));
        assert!((st.params().charger_capacity - c.energy - 5.0).abs() < 1e-9);
        for _ in 0..19 {
            st.step().unwrap();
        }
        assert_eq!(st.chargers[0].position, dest);
        assert!(st.chargers[0].is_idle());
    }

    #[test]
    fn return_leg_refills_battery() {
        let mut st = single_sensor_state(4000.0);
        let c = &mut st.chargers[0];
        c.position = Point::new(10.0, 0.0);
        c.energy = 100.0;
        c.assign(VecDeque::from([Leg::ReturnToBase]), Point::new(0.0, 0.0));
        assert!(st.step().unwrap().iter().all(|e| e.kind != EventKind::ChargerRecharged));
        assert_eq!(st.chargers[0].energy, 95.0);
        let events = st.step().unwrap();
        assert_eq!(st.chargers[0].energy, st.params().charger_capacity);
        assert!(events.iter().any(|e| e.kind == EventKind::ChargerRecharged));
    }

    #[test]
    fn killing_relay_disconnects_target() {
        let inst = ScenarioInstance::new(
            Point::new(0.0, 0.0),
            vec![Point::new(60.0, 0.0), Point::new(120.0, 0.0)],
            vec![Point::new(130.0, 0.0)],
            EnergyParams::default(),
        )
        .unwrap();
        let rt = build_routing(&inst);
        let mut st = NetworkState::new(Arc::new(inst), Arc::new(rt), 0, SimConfig::default());
        assert_eq!(st.mnt, vec![1]);
        st.kill_sensor(0);
        assert_eq!(st.mnt, vec![0]);
        assert!(st.dead);
    }

    #[test]
    fn event_log_lines() {
        let ev = Event {
            t: 3.0,
            kind: EventKind::SensorDied,
            entity_id: 4,
            payload: serde_json::Value::Null,
        };
        let mut buf = Vec::new();
        write_event_log(&mut buf, &[ev.clone(), ev]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with(r#"{"t":3.0,"kind":"sensor_died","entity_id":4,"payload":null}"#));
    }
}
