//! Turning a policy output into a macro action.

use serde::{Deserialize, Serialize};

use crate::boxmin::{minimize, BoxMinConfig};
use crate::energy::{charge_rate, NetworkState};
use crate::env::MacroAction;
use crate::observation::ObservationGrid;
use crate::scenario::{Bounds, EnergyParams, Point};

/// Index of the largest entry in row-major order (first occurrence wins),
/// returned as `(row, column, value)`.
pub fn argmax_cell(pr: &[f64], t: usize) -> (usize, usize, f64) {
    assert_eq!(pr.len(), t * t, "probability map shape");
    let mut best = 0;
    for (i, &v) in pr.iter().enumerate() {
        if v > pr[best] {
            best = i;
        }
    }
    (best / t, best % t, pr[best])
}

/// Charging time proportional to the peak probability; a certain choice buys
/// the time to refill a sensor from threshold at peak rate.
pub fn charging_time(p_max: f64, params: &EnergyParams) -> f64 {
    p_max * (params.sensor_span() / params.peak_charge_rate())
}

/// Box searched for the charging location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub a_lo: f64,
    pub a_hi: f64,
    pub b_lo: f64,
    pub b_hi: f64,
}

impl Region {
    pub fn contains(&self, p: &Point) -> bool {
        (self.a_lo..=self.a_hi).contains(&p.x) && (self.b_lo..=self.b_hi).contains(&p.y)
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.a_lo + self.a_hi), 0.5 * (self.b_lo + self.b_hi))
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(self.a_lo, self.a_hi), p.y.clamp(self.b_lo, self.b_hi))
    }
}

fn axis_span(idx: usize, t: usize, lo: f64, hi: f64) -> (f64, f64) {
    let cell = (hi - lo) / t as f64;
    let mut a = lo + (idx as f64 + 0.5) * cell;
    let b = (lo + (idx as f64 + 1.5) * cell).min(hi);
    if idx == 0 {
        a = lo;
    }
    (a.clamp(lo, hi), b.max(a))
}

/// Region for the (zero-based) cell `(u, v)`: one cell wide, centred on the
/// cell's far corner, with the first row/column extended to the grid edge
/// and everything clamped into the grid bounds.
pub fn region_bounds(u: usize, v: usize, grid: &ObservationGrid) -> Region {
    let b = &grid.bounds;
    let (a_lo, a_hi) = axis_span(u, grid.t, b.h0, b.h1);
    let (b_lo, b_hi) = axis_span(v, grid.t, b.w0, b.w1);
    Region { a_lo, a_hi, b_lo, b_hi }
}

/// Weighted sensor for the location objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedSensor {
    pub position: Point,
    pub weight: f64,
}

/// Alive sensors weighted by consumption rate over remaining energy.
pub fn sensor_weights(state: &NetworkState, e_floor: f64) -> Vec<WeightedSensor> {
    let e_th = state.params().e_th;
    state
        .sensors
        .iter()
        .filter(|s| s.alive)
        .map(|s| WeightedSensor {
            position: s.position,
            weight: s.rate / (s.energy - e_th).max(e_floor),
        })
        .collect()
}

/// Total weighted charging rate at `at`.
pub fn location_objective(sensors: &[WeightedSensor], at: &Point, params: &EnergyParams) -> f64 {
    sensors
        .iter()
        .map(|s| s.weight * charge_rate(s.position.dist(at), params))
        .sum()
}

/// Objective with the range cutoff replaced by a logistic ramp of width
/// `soft` metres, and its gradient.
fn soft_objective(sensors: &[WeightedSensor], x: &[f64], params: &EnergyParams, soft: f64, grad: &mut [f64]) -> f64 {
    let (alpha, beta, r) = (params.alpha, params.beta, params.r_charge);
    let mut f = 0.0;
    grad[0] = 0.0;
    grad[1] = 0.0;
    for s in sensors {
        let dx = x[0] - s.position.x;
        let dy = x[1] - s.position.y;
        let d = (dx * dx + dy * dy).sqrt();
        let z = (r - d) / soft;
        if z < -40.0 {
            continue;
        }
        let sig = 1.0 / (1.0 + (-z).exp());
        let base = alpha / ((d + beta) * (d + beta));
        f += s.weight * base * sig;
        if d > 1e-12 {
            let dbase = -2.0 * alpha / ((d + beta) * (d + beta) * (d + beta));
            let dsig = -sig * (1.0 - sig) / soft;
            let dd = s.weight * (dbase * sig + base * dsig);
            grad[0] += dd * dx / d;
            grad[1] += dd * dy / d;
        }
    }
    f
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationResult {
    pub point: Point,
    pub objective: f64,
    /// No sensor can be charged from anywhere in the region.
    pub zero_gain: bool,
}

/// Softness schedule (m) for the range cutoff during local search.
const SOFTNESS: [f64; 3] = [1.0, 0.1, 0.01];

/// Initial points of the multi-start search.
pub fn search_starts(sensors: &[WeightedSensor], region: &Region, params: &EnergyParams) -> Vec<Point> {
    let mut starts = vec![region.center()];
    for i in 0..3 {
        for j in 0..3 {
            let fa = (i as f64 + 0.5) / 3.0;
            let fb = (j as f64 + 0.5) / 3.0;
            starts.push(Point::new(
                region.a_lo + fa * (region.a_hi - region.a_lo),
                region.b_lo + fb * (region.b_hi - region.b_lo),
            ));
        }
    }
    let near: Vec<&WeightedSensor> = sensors
        .iter()
        .filter(|s| region.clamp(s.position).dist(&s.position) <= params.r_charge)
        .collect();
    for s in &near {
        starts.push(region.clamp(s.position));
    }
    for (k, a) in near.iter().enumerate() {
        for b in &near[k + 1..] {
            let mid = Point::new(0.5 * (a.position.x + b.position.x), 0.5 * (a.position.y + b.position.y));
            starts.push(region.clamp(mid));
        }
    }
    starts
}

/// Compass search on the true objective, never leaving the region.
fn polish(sensors: &[WeightedSensor], region: &Region, params: &EnergyParams, mut p: Point, mut fp: f64) -> (Point, f64) {
    let mut step = 0.05 * (region.a_hi - region.a_lo).max(region.b_hi - region.b_lo).max(1e-9);
    while step > 1e-10 {
        let mut improved = false;
        for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let q = region.clamp(Point::new(p.x + dx * step, p.y + dy * step));
            let fq = location_objective(sensors, &q, params);
            if fq > fp {
                p = q;
                fp = fq;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (p, fp)
}

/// Largest number of sensors whose in-range subsets are enumerated.
const MAX_SUBSET_SENSORS: usize = 12;

/// For every set of sensors that can all be in range at once somewhere in the
/// region, the maximizer of their summed charging term over the (convex)
/// intersection of their discs and the region, found by a log-barrier
/// continuation. Catches optima in thin overlaps that the softened search
/// walks out of.
fn in_range_optima(sensors: &[WeightedSensor], region: &Region, params: &EnergyParams) -> Vec<Point> {
    let r = params.r_charge;
    let mut near: Vec<WeightedSensor> = sensors
        .iter()
        .filter(|s| s.weight > 0.0 && region.clamp(s.position).dist(&s.position) <= r)
        .copied()
        .collect();
    near.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    near.truncate(MAX_SUBSET_SENSORS);
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    subsets(&near, 0, &mut chosen, region, params, &mut out);
    out
}

const CURVE_SAMPLES: usize = 256;

/// Local maxima of the objective along the region's edges and along every
/// charging circle that crosses the region. Maximizers pinned against a disc
/// rim or an edge are often invisible to searches started in the interior.
fn boundary_optima(sensors: &[WeightedSensor], region: &Region, params: &EnergyParams) -> Vec<Point> {
    let r = params.r_charge * (1.0 - 1e-12);
    let mut curves: Vec<Box<dyn Fn(f64) -> Point>> = Vec::new();
    let (a0, a1, b0, b1) = (region.a_lo, region.a_hi, region.b_lo, region.b_hi);
    curves.push(Box::new(move |t| Point::new(a0 + t * (a1 - a0), b0)));
    curves.push(Box::new(move |t| Point::new(a0 + t * (a1 - a0), b1)));
    curves.push(Box::new(move |t| Point::new(a0, b0 + t * (b1 - b0))));
    curves.push(Box::new(move |t| Point::new(a1, b0 + t * (b1 - b0))));
    for s in sensors {
        if s.weight > 0.0 && region.clamp(s.position).dist(&s.position) <= r {
            let c = s.position;
            curves.push(Box::new(move |t| {
                let th = std::f64::consts::TAU * t;
                Point::new(c.x + r * th.cos(), c.y + r * th.sin())
            }));
        }
    }
    let value = |p: Point| {
        if region.contains(&p) {
            location_objective(sensors, &p, params)
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut out = Vec::new();
    for curve in &curves {
        let step = 1.0 / CURVE_SAMPLES as f64;
        let vals: Vec<f64> = (0..=CURVE_SAMPLES).map(|i| value(curve(i as f64 * step))).collect();
        for i in 0..=CURVE_SAMPLES {
            let left = if i > 0 { vals[i - 1] } else { f64::NEG_INFINITY };
            let right = if i < CURVE_SAMPLES { vals[i + 1] } else { f64::NEG_INFINITY };
            if !(vals[i] > 0.0 && vals[i] >= left && vals[i] >= right) {
                continue;
            }
            let (mut lo, mut hi) = ((i as f64 - 1.0).max(0.0) * step, ((i + 1) as f64).min(CURVE_SAMPLES as f64) * step);
            let (mut best_t, mut best_v) = (i as f64 * step, vals[i]);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..60 {
                let m1 = hi - g * (hi - lo);
                let m2 = lo + g * (hi - lo);
                let (v1, v2) = (value(curve(m1)), value(curve(m2)));
                for (t, v) in [(m1, v1), (m2, v2)] {
                    if v > best_v {
                        (best_t, best_v) = (t, v);
                    }
                }
                if v1 >= v2 {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            out.push(curve(best_t));
        }
    }
    out
}

fn subsets(
    near: &[WeightedSensor],
    from: usize,
    chosen: &mut Vec<WeightedSensor>,
    region: &Region,
    params: &EnergyParams,
    out: &mut Vec<Point>,
) {
    for k in from..near.len() {
        if chosen.iter().any(|c| c.position.dist(&near[k].position) > 2.0 * params.r_charge) {
            continue;
        }
        chosen.push(near[k]);
        if let Some(x0) = common_point(chosen, region, params, None) {
            out.push(barrier_max(chosen, region, params, x0, 2));
            if chosen.len() > 1 {
                // one start pulled towards each member, followed locally
                for s in chosen.iter() {
                    if let Some(xs) = common_point(chosen, region, params, Some(s.position)) {
                        out.push(barrier_max(chosen, region, params, xs, 6));
                    }
                }
            }
            subsets(near, k + 1, chosen, region, params, out);
        }
        chosen.pop();
    }
}

/// A point of the region strictly inside every chosen disc, searched from
/// `towards` (default: the members' centroid), if one exists.
fn common_point(chosen: &[WeightedSensor], region: &Region, params: &EnergyParams, towards: Option<Point>) -> Option<Point> {
    let r = params.r_charge * (1.0 - 1e-9);
    let inside = |p: &Point| chosen.iter().all(|s| s.position.dist(p) < r);
    let n = chosen.len() as f64;
    let centroid = Point::new(
        chosen.iter().map(|s| s.position.x).sum::<f64>() / n,
        chosen.iter().map(|s| s.position.y).sum::<f64>() / n,
    );
    let start = region.clamp(towards.unwrap_or(centroid));
    if inside(&start) {
        return Some(start);
    }
    // squared violation with a small inward margin
    let margin = 1e-6 * params.r_charge;
    let m = minimize(
        |x, g| {
            g[0] = 0.0;
            g[1] = 0.0;
            let mut f = 0.0;
            for s in chosen {
                let dx = x[0] - s.position.x;
                let dy = x[1] - s.position.y;
                let d = (dx * dx + dy * dy).sqrt();
                let v = d - r + margin;
                if v > 0.0 && d > 0.0 {
                    f += v * v;
                    g[0] += 2.0 * v * dx / d;
                    g[1] += 2.0 * v * dy / d;
                }
            }
            f
        },
        &[start.x, start.y],
        &[region.a_lo, region.b_lo],
        &[region.a_hi, region.b_hi],
        &BoxMinConfig::default(),
    );
    let p = region.clamp(Point::new(m.x[0], m.x[1]));
    inside(&p).then_some(p)
}

/// Follows the barrier path from weight `10^-first` down to `10^-12`.
fn barrier_max(chosen: &[WeightedSensor], region: &Region, params: &EnergyParams, x0: Point, first: i32) -> Point {
    let (alpha, beta) = (params.alpha, params.beta);
    let r = params.r_charge * (1.0 - 1e-9);
    let scale = chosen.iter().map(|s| s.weight).fold(0.0, f64::max) * params.peak_charge_rate();
    let lo = [region.a_lo, region.b_lo];
    let hi = [region.a_hi, region.b_hi];
    let mut x = [x0.x, x0.y];
    for k in first..=12 {
        let mu = scale * 10f64.powi(-k);
        let m = minimize(
            |x, g| {
                g[0] = 0.0;
                g[1] = 0.0;
                let mut f = 0.0;
                for s in chosen {
                    let dx = x[0] - s.position.x;
                    let dy = x[1] - s.position.y;
                    let d = (dx * dx + dy * dy).sqrt();
                    if d >= r {
                        return f64::NAN;
                    }
                    let base = alpha / ((d + beta) * (d + beta));
                    f -= s.weight * base + mu * (r - d).ln();
                    if d > 1e-12 {
                        let dd = -s.weight * (-2.0 * base / (d + beta)) + mu / (r - d);
                        g[0] += dd * dx / d;
                        g[1] += dd * dy / d;
                    }
                }
                f
            },
            &x,
            &lo,
            &hi,
            &BoxMinConfig::default(),
        );
        x = [m.x[0], m.x[1]];
    }
    region.clamp(Point::new(x[0], x[1]))
}

/// Best charging point inside `region` for the given weighted sensors.
pub fn optimize_location_for(sensors: &[WeightedSensor], region: &Region, params: &EnergyParams) -> LocationResult {
    let lo = [region.a_lo, region.b_lo];
    let hi = [region.a_hi, region.b_hi];
    let cfg = BoxMinConfig::default();
    let mut best = (region.center(), location_objective(sensors, &region.center(), params));
    let consider = |p: Point, best: &mut (Point, f64)| {
        let f = location_objective(sensors, &p, params);
        if f > best.1 {
            *best = (p, f);
        }
    };
    for s in search_starts(sensors, region, params) {
        consider(s, &mut best);
        let mut x = [s.x, s.y];
        for soft in SOFTNESS {
            let m = minimize(
                |x, g| {
                    let f = soft_objective(sensors, x, params, soft, g);
                    g[0] = -g[0];
                    g[1] = -g[1];
                    -f
                },
                &x,
                &lo,
                &hi,
                &cfg,
            );
            x = [m.x[0], m.x[1]];
            consider(region.clamp(Point::new(x[0], x[1])), &mut best);
        }
    }
    for x in in_range_optima(sensors, region, params) {
        consider(x, &mut best);
    }
    for x in boundary_optima(sensors, region, params) {
        consider(x, &mut best);
    }
    if best.1 <= 0.0 {
        return LocationResult {
            point: region.center(),
            objective: 0.0,
            zero_gain: true,
        };
    }
    let (point, objective) = polish(sensors, region, params, best.0, best.1);
    LocationResult {
        point,
        objective,
        zero_gain: false,
    }
}

pub fn optimize_location(state: &NetworkState, region: &Region, e_floor: f64) -> LocationResult {
    optimize_location_for(&sensor_weights(state, e_floor), region, state.params())
}

/// Diagnostic record of one map-based selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub action: MacroAction,
    pub cell: (usize, usize),
    pub p_max: f64,
    pub region: Region,
    pub zero_gain: bool,
}

/// Map-based selection: most probable cell, charging time from its
/// probability, location from the search inside the cell's region.
pub fn select_action(pr: &[f64], state: &NetworkState, grid: &ObservationGrid, e_floor: f64) -> Selection {
    let (u, v, p_max) = argmax_cell(pr, grid.t);
    let c = charging_time(p_max, state.params());
    let region = region_bounds(u, v, grid);
    let loc = optimize_location(state, &region, e_floor);
    Selection {
        action: MacroAction::new(loc.point.x, loc.point.y, c),
        cell: (u, v),
        p_max,
        region,
        zero_gain: loc.zero_gain,
    }
}

/// Direct selection from a 3-vector read in physical units (m, m, s) and
/// clamped into the bounds and `[0, c_max]`.
pub fn vector_action(z: &[f64], bounds: &Bounds, params: &EnergyParams) -> MacroAction {
    let c_max = charging_time(1.0, params);
    MacroAction::new(
        z[0].clamp(bounds.h0, bounds.h1),
        z[1].clamp(bounds.w0, bounds.w1),
        z[2].clamp(0.0, c_max),
    )
}
