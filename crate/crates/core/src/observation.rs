//! Gridded four-channel observations built from Gaussian-kernel fields.
//!
//! Channel order is fixed: sensor criticality, own charger, other chargers
//! that are charging, other chargers that are moving.

use serde::{Deserialize, Serialize};

use crate::energy::{ChargerMode, NetworkState};
use crate::scenario::{Bounds, Point};

pub const CHANNELS: usize = 4;

/// `exp(-|x - x'|² / (2 h²))`.
pub fn kernel(x: &Point, x_prime: &Point, h: f64) -> f64 {
    (-x.dist2(x_prime) / (2.0 * h * h)).exp()
}

/// Where the moving-charger field is centered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum F4Anchor {
    #[default]
    Destination,
    Current,
}

/// Observation channels zeroed for ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ObsMask {
    #[default]
    #[serde(rename = "FULL")]
    Full,
    /// Drop the sensor-criticality channel.
    #[serde(rename = "NO_1")]
    NoFirst,
    /// Keep only the sensor-criticality channel.
    #[serde(rename = "NO_2_3_4")]
    OnlyFirst,
}

impl ObsMask {
    fn keeps(self, channel: usize) -> bool {
        match self {
            ObsMask::Full => true,
            ObsMask::NoFirst => channel != 0,
            ObsMask::OnlyFirst => channel == 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationGrid {
    /// Cells per axis.
    pub t: usize,
    pub bounds: Bounds,
    /// Kernel width (m).
    pub kernel_width: f64,
}

impl ObservationGrid {
    pub fn new(t: usize, bounds: Bounds, kernel_width: f64) -> Self {
        assert!(t >= 2, "grid needs at least 2 cells per axis");
        assert!(kernel_width > 0.0);
        ObservationGrid { t, bounds, kernel_width }
    }

    pub fn cell_h(&self) -> f64 {
        (self.bounds.h1 - self.bounds.h0) / self.t as f64
    }

    pub fn cell_w(&self) -> f64 {
        (self.bounds.w1 - self.bounds.w0) / self.t as f64
    }

    /// Center of cell `(i, k)` (zero-based; `i` runs along x, `k` along y).
    pub fn cell_center(&self, i: usize, k: usize) -> Point {
        Point::new(
            self.bounds.h0 + (i as f64 + 0.5) * self.cell_h(),
            self.bounds.w0 + (k as f64 + 0.5) * self.cell_w(),
        )
    }

    /// Cell containing `p`, clamped to the grid.
    pub fn cell_of(&self, p: &Point) -> (usize, usize) {
        let fi = ((p.x - self.bounds.h0) / self.cell_h()).floor();
        let fk = ((p.y - self.bounds.w0) / self.cell_w()).floor();
        let last = (self.t - 1) as f64;
        (fi.clamp(0.0, last) as usize, fk.clamp(0.0, last) as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationConfig {
    pub grid: ObservationGrid,
    pub f4_anchor: F4Anchor,
    /// Floor on `e - e_th` in energy-ratio denominators (J).
    pub e_floor: f64,
    pub mask: ObsMask,
}

impl ObservationConfig {
    pub fn new(grid: ObservationGrid) -> Self {
        ObservationConfig {
            grid,
            f4_anchor: F4Anchor::Destination,
            e_floor: 1.0,
            mask: ObsMask::Full,
        }
    }
}

/// `4 x T x T` tensor, row-major, channel first.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub tensor: Vec<f32>,
    pub t: usize,
    pub agent_id: usize,
    pub timestamp: f64,
}

impl Observation {
    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.t * self.t;
        &self.tensor[c * n..(c + 1) * n]
    }

    pub fn at(&self, c: usize, i: usize, k: usize) -> f32 {
        self.tensor[(c * self.t + i) * self.t + k]
    }

    pub fn shape(&self) -> [usize; 3] {
        [CHANNELS, self.t, self.t]
    }
}

/// A weighted kernel source: field contribution `coef * K(x, at)`.
#[derive(Debug, Clone, Copy)]
struct Source {
    at: Point,
    coef: f64,
}

fn f1_sources(state: &NetworkState, e_floor: f64) -> Vec<Source> {
    let p = state.params();
    let beta2 = p.beta * p.beta;
    let span = p.sensor_span();
    state
        .sensors
        .iter()
        .filter(|s| s.alive)
        .map(|s| Source {
            at: s.position,
            coef: s.rate / beta2 * span / (s.energy - p.e_th).max(e_floor),
        })
        .collect()
}

fn f2_sources(state: &NetworkState, agent: usize) -> Vec<Source> {
    let c = &state.chargers[agent];
    vec![Source {
        at: c.position,
        coef: c.energy / state.params().charger_capacity,
    }]
}

fn f3_sources(state: &NetworkState, agent: usize) -> Vec<Source> {
    let span = state.params().sensor_span();
    state
        .chargers
        .iter()
        .filter(|c| c.id != agent && c.mode == ChargerMode::Charging)
        .map(|c| Source {
            at: c.position,
            coef: c.remaining_charge / span,
        })
        .collect()
}

fn f4_sources(state: &NetworkState, agent: usize, anchor: F4Anchor) -> Vec<Source> {
    let d_avg = state.instance.d_avg;
    state
        .chargers
        .iter()
        .filter(|c| c.id != agent && c.is_moving())
        .filter_map(|c| {
            let dest = c.destination?;
            Some(Source {
                at: match anchor {
                    F4Anchor::Destination => dest,
                    F4Anchor::Current => c.position,
                },
                coef: c.position.dist(&dest) / d_avg,
            })
        })
        .collect()
}

fn eval(sources: &[Source], x: &Point, h: f64) -> f64 {
    sources.iter().map(|s| s.coef * kernel(x, &s.at, h)).sum()
}

/// Sensor criticality field: consumption rate over remaining energy, per alive sensor.
pub fn field_f1(state: &NetworkState, x: &Point, h: f64, e_floor: f64) -> f64 {
    eval(&f1_sources(state, e_floor), x, h)
}

/// Position and battery level of the deciding charger.
pub fn field_f2(state: &NetworkState, agent: usize, x: &Point, h: f64) -> f64 {
    eval(&f2_sources(state, agent), x, h)
}

/// Remaining charging time of the other chargers that are charging.
pub fn field_f3(state: &NetworkState, agent: usize, x: &Point, h: f64) -> f64 {
    eval(&f3_sources(state, agent), x, h)
}

/// Remaining travel distance of the other chargers that are moving.
pub fn field_f4(state: &NetworkState, agent: usize, x: &Point, h: f64, anchor: F4Anchor) -> f64 {
    eval(&f4_sources(state, agent, anchor), x, h)
}

/// Renders the observation of charger `agent`.
pub fn render(state: &NetworkState, agent: usize, cfg: &ObservationConfig) -> Observation {
    let grid = &cfg.grid;
    let t = grid.t;
    let mut tensor = vec![0.0f32; CHANNELS * t * t];
    let channels = [
        f1_sources(state, cfg.e_floor),
        f2_sources(state, agent),
        f3_sources(state, agent),
        f4_sources(state, agent, cfg.f4_anchor),
    ];
    let (dh, dw) = (grid.cell_h(), grid.cell_w());
    let inv = 1.0 / (2.0 * grid.kernel_width * grid.kernel_width);
    let mut plane = vec![0.0f64; t * t];
    let mut row = vec![0.0f64; t];
    let mut col = vec![0.0f64; t];
    for (c, sources) in channels.iter().enumerate() {
        if !cfg.mask.keeps(c) || sources.is_empty() {
            continue;
        }
        plane.iter_mut().for_each(|v| *v = 0.0);
        for s in sources {
            // offsets relative to the grid origin keep rendering translation-invariant
            let oh = s.at.x - grid.bounds.h0;
            let ow = s.at.y - grid.bounds.w0;
            for i in 0..t {
                let d = (i as f64 + 0.5) * dh - oh;
                row[i] = (-d * d * inv).exp();
            }
            for k in 0..t {
                let d = (k as f64 + 0.5) * dw - ow;
                col[k] = (-d * d * inv).exp();
            }
            for i in 0..t {
                let ri = s.coef * row[i];
                if ri == 0.0 {
                    continue;
                }
                let out = &mut plane[i * t..(i + 1) * t];
                for (o, &ck) in out.iter_mut().zip(&col) {
                    *o += ri * ck;
                }
            }
        }
        let dst = &mut tensor[c * t * t..(c + 1) * t * t];
        for (d, &v) in dst.iter_mut().zip(&plane) {
            *d = v as f32;
        }
    }
    Observation {
        tensor,
        t,
        agent_id: agent,
        timestamp: state.clock,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{Leg, SimConfig};
    use crate::scenario::{build_routing, EnergyParams, ScenarioInstance};
    use std::collections::VecDeque;
    use std::sync::Arc;

    fn state(sensors: Vec<Point>, chargers: usize) -> NetworkState {
        let targets = vec![Point::new(sensors[0].x + 5.0, sensors[0].y)];
        let inst = ScenarioInstance::new(Point::new(0.0, 0.0), sensors, targets, EnergyParams::default()).unwrap();
        let rt = build_routing(&inst);
        NetworkState::new(Arc::new(inst), Arc::new(rt), chargers, SimConfig::default())
    }

    #[test]
    fn kernel_values() {
        let a = Point::new(3.0, 4.0);
        assert_eq!(kernel(&a, &a, 7.0), 1.0);
        let b = Point::new(3.0 + 7.0, 4.0);
        assert!((kernel(&a, &b, 7.0) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((kernel(&a, &b, 0.7)) < 1e-21);
    }

    #[test]
    fn f1_at_full_sensor() {
        let mut st = state(vec![Point::new(10.0, 0.0)], 1);
        st.sensors[0].rate = 0.3;
        let v = field_f1(&st, &Point::new(10.0, 0.0), 80.0, 1.0);
        assert!((v - 0.3 / 900.0).abs() < 1e-15);
        st.sensors[0].energy = st.params().e_th + 0.5 * st.params().sensor_span();
        let v2 = field_f1(&st, &Point::new(10.0, 0.0), 80.0, 1.0);
        assert!((v2 - 2.0 * v).abs() < 1e-15);
        st.sensors[0].alive = false;
        assert_eq!(field_f1(&st, &Point::new(10.0, 0.0), 80.0, 1.0), 0.0);
    }

    #[test]
    fn f2_scales_with_battery() {
        let mut st = state(vec![Point::new(10.0, 0.0)], 1);
        let at = st.chargers[0].position;
        assert_eq!(field_f2(&st, 0, &at, 80.0), 1.0);
        st.chargers[0].energy *= 0.5;
        assert_eq!(field_f2(&st, 0, &at, 80.0), 0.5);
        assert!(field_f2(&st, 0, &Point::new(5000.0, 0.0), 80.0) < 1e-100);
    }

    #[test]
    fn f3_counts_only_other_charging_chargers() {
        let mut st = state(vec![Point::new(10.0, 0.0)], 2);
        let at = st.chargers[1].position;
        assert_eq!(field_f3(&st, 0, &at, 80.0), 0.0);
        let span = st.params().sensor_span();
        st.chargers[1].assign(VecDeque::from([Leg::Charge(span)]), at);
        assert!((field_f3(&st, 0, &at, 80.0) - 1.0).abs() < 1e-15);
        assert_eq!(field_f3(&st, 1, &at, 80.0), 0.0);
    }

    #[test]
    fn f4_normalizes_by_mean_sensor_distance() {
        let mut st = state(vec![Point::new(10.0, 0.0), Point::new(50.0, 30.0)], 2);
        let d_avg = st.instance.d_avg;
        let dest = Point::new(d_avg, 0.0);
        st.chargers[1].assign(VecDeque::from([Leg::MoveTo(dest)]), dest);
        assert!((field_f4(&st, 0, &dest, 80.0, F4Anchor::Destination) - 1.0).abs() < 1e-12);
        let here = st.chargers[1].position;
        assert!((field_f4(&st, 0, &here, 80.0, F4Anchor::Current) - 1.0).abs() < 1e-12);
        assert_eq!(field_f4(&st, 1, &dest, 80.0, F4Anchor::Destination), 0.0);
    }

    #[test]
    fn cell_centers_tile_the_bounds() {
        let b = Bounds { h0: 100.0, h1: 200.0, w0: -50.0, w1: 50.0 };
        let g = ObservationGrid::new(10, b, 80.0);
        assert_eq!(g.cell_center(0, 0), Point::new(105.0, -45.0));
        assert_eq!(g.cell_center(9, 9), Point::new(195.0, 45.0));
        assert_eq!(g.cell_of(&Point::new(199.0, -50.0)), (9, 0));
    }
}
