//! Network instances: geometry, physical parameters, validation, synthetic
//! generation and the static greedy routing table.

use std::collections::VecDeque;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 2-D location in meters. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Point at `step` meters from `self` towards `target`, or `target` itself
    /// if it is closer than `step`.
    pub fn towards(&self, target: &Point, step: f64) -> Point {
        let d = self.dist(target);
        if d <= step || d == 0.0 {
            *target
        } else {
            let f = step / d;
            Point::new(self.x + (target.x - self.x) * f, self.y + (target.y - self.y) * f)
        }
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Physical constants of the radio, battery, charging and charger models.
///
/// Field names in the scenario file follow the usual symbols (`E_max`, `P_M`,
/// `V`); anything omitted falls back to the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyParams {
    /// Electronics energy per bit (J/bit).
    pub eps_elec: f64,
    /// Free-space amplifier energy (J/bit/m²).
    pub eps_fs: f64,
    /// Multi-path amplifier energy (J/bit/m⁴).
    pub eps_mp: f64,
    /// Amplifier crossover distance (m); derived from `eps_fs / eps_mp` when absent.
    pub d0: f64,
    /// Bits per generated packet.
    pub b_packet: f64,
    /// Seconds between two packets of one sensor.
    pub packet_period: f64,
    pub r_c: f64,
    pub r_s: f64,
    pub e_th: f64,
    pub e_max: f64,
    /// Charger battery capacity (J).
    #[serde(rename = "E_max")]
    pub charger_capacity: f64,
    pub r_charge: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Charger movement cost (J/m).
    #[serde(rename = "P_M")]
    pub move_cost: f64,
    /// Charger speed (m/s).
    #[serde(rename = "V")]
    pub speed: f64,
    /// Episode time cap (s).
    pub t_sm: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        let eps_fs = 10e-12;
        let eps_mp = 1.3e-15;
        EnergyParams {
            eps_elec: 50e-9,
            eps_fs,
            eps_mp,
            d0: (eps_fs / eps_mp).sqrt(),
            b_packet: 4000.0,
            packet_period: 1.0,
            r_c: 80.0,
            r_s: 40.0,
            e_th: 540.0,
            e_max: 10800.0,
            charger_capacity: 108000.0,
            r_charge: 27.0,
            alpha: 4500.0,
            beta: 30.0,
            move_cost: 1.0,
            speed: 5.0,
            t_sm: 604800.0,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("eps_elec", self.eps_elec),
            ("eps_fs", self.eps_fs),
            ("eps_mp", self.eps_mp),
            ("d0", self.d0),
            ("b_packet", self.b_packet),
            ("packet_period", self.packet_period),
            ("r_c", self.r_c),
            ("r_s", self.r_s),
            ("e_th", self.e_th),
            ("e_max", self.e_max),
            ("E_max", self.charger_capacity),
            ("r_charge", self.r_charge),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("P_M", self.move_cost),
            ("V", self.speed),
            ("t_sm", self.t_sm),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("parameter {name} must be finite and > 0, got {v}")));
            }
        }
        if self.e_th >= self.e_max {
            return Err(Error::Validation(format!(
                "e_th ({}) must be below e_max ({})",
                self.e_th, self.e_max
            )));
        }
        let d0 = (self.eps_fs / self.eps_mp).sqrt();
        if ((self.d0 - d0) / d0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "d0 ({}) must equal sqrt(eps_fs/eps_mp) = {d0}",
                self.d0
            )));
        }
        Ok(())
    }

    /// Usable energy span of a sensor battery, `e_max - e_th`.
    pub fn sensor_span(&self) -> f64 {
        self.e_max - self.e_th
    }

    /// Peak charge rate `alpha / beta²`, reached at distance zero.
    pub fn peak_charge_rate(&self) -> f64 {
        self.alpha / (self.beta * self.beta)
    }
}

/// Axis-aligned bounding box `(H0, H1, W0, W1)`: `h` is the x axis, `w` the y axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub h0: f64,
    pub h1: f64,
    pub w0: f64,
    pub w1: f64,
}

impl Bounds {
    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.h0 && p.x <= self.h1 && p.y >= self.w0 && p.y <= self.w1
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(self.h0, self.h1), p.y.clamp(self.w0, self.w1))
    }

    pub fn expanded(&self, margin: f64) -> Bounds {
        Bounds {
            h0: self.h0 - margin,
            h1: self.h1 + margin,
            w0: self.w0 - margin,
            w1: self.w1 + margin,
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Bounds {
        Bounds {
            h0: self.h0 + dx,
            h1: self.h1 + dx,
            w0: self.w0 + dy,
            w1: self.w1 + dy,
        }
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.h0 + self.h1), 0.5 * (self.w0 + self.w1))
    }
}

/// On-disk scenario layout. `params` entries are optional individually.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub base_station: Point,
    pub sensors: Vec<Point>,
    pub targets: Vec<Point>,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

/// Immutable network geometry with derived statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioInstance {
    pub base_station: Point,
    pub sensors: Vec<Point>,
    pub targets: Vec<Point>,
    pub params: EnergyParams,
    pub bounds: Bounds,
    /// Mean pairwise sensor distance (m).
    pub d_avg: f64,
    /// `monitors[i]`: sensors within `r_s` of target `i`.
    pub monitors: Vec<Vec<usize>>,
    /// `monitored[j]`: targets within `r_s` of sensor `j`.
    pub monitored: Vec<Vec<usize>>,
}

impl ScenarioInstance {
    /// Builds and validates an instance; bounds, `d_avg` and coverage sets are computed here.
    pub fn new(
        base_station: Point,
        sensors: Vec<Point>,
        targets: Vec<Point>,
        params: EnergyParams,
    ) -> Result<Self> {
        params.validate()?;
        if !base_station.is_finite() {
            return Err(Error::Validation("base station position is not finite".into()));
        }
        if sensors.is_empty() {
            return Err(Error::Validation("instance has no sensors".into()));
        }
        if targets.is_empty() {
            return Err(Error::Validation("instance has no targets".into()));
        }
        if let Some(j) = sensors.iter().position(|p| !p.is_finite()) {
            return Err(Error::Validation(format!("sensor {j} position is not finite")));
        }
        if let Some(i) = targets.iter().position(|p| !p.is_finite()) {
            return Err(Error::Validation(format!("target {i} position is not finite")));
        }

        let (monitors, monitored) = coverage_sets(&sensors, &targets, params.r_s);
        if let Some(i) = monitors.iter().position(|m| m.is_empty()) {
            return Err(Error::Validation(format!("target {i} uncovered")));
        }
        let reach = reachable_from_bs(&base_station, &sensors, params.r_c);
        for (j, targets_of) in monitored.iter().enumerate() {
            if !targets_of.is_empty() && !reach[j] {
                return Err(Error::Validation(format!("sensor {j} disconnected from base station")));
            }
        }

        let bounds = sensor_bounds(&sensors, params.r_charge);
        let d_avg = mean_pairwise_distance(&sensors).unwrap_or(params.r_c);
        Ok(ScenarioInstance {
            base_station,
            sensors,
            targets,
            params,
            bounds,
            d_avg,
            monitors,
            monitored,
        })
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let params = params_from_map(file.params)?;
        ScenarioInstance::new(file.base_station, file.sensors, file.targets, params)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(s)?;
        ScenarioInstance::from_file(file)
    }

    pub fn to_file(&self) -> ScenarioFile {
        let params = match serde_json::to_value(&self.params) {
            Ok(serde_json::Value::Object(m)) => m,
            _ => unreachable!("EnergyParams serializes to an object"),
        };
        ScenarioFile {
            base_station: self.base_station,
            sensors: self.sensors.clone(),
            targets: self.targets.clone(),
            params,
        }
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn num_sensors(&self) -> usize {
        self.sensors.len()
    }

    pub fn num_targets(&self) -> usize {
        self.targets.len()
    }
}

/// Merges user-provided parameter entries over the defaults. `d0` is derived
/// from the amplifier constants unless given explicitly.
fn params_from_map(map: serde_json::Map<String, serde_json::Value>) -> Result<EnergyParams> {
    let mut full = match serde_json::to_value(EnergyParams::default())? {
        serde_json::Value::Object(m) => m,
        _ => unreachable!(),
    };
    let explicit_d0 = map.contains_key("d0");
    for (k, v) in map {
        if !full.contains_key(&k) {
            return Err(Error::Parse(format!("unknown parameter `{k}`")));
        }
        full.insert(k, v);
    }
    let mut params: EnergyParams = serde_json::from_value(serde_json::Value::Object(full))?;
    if !explicit_d0 {
        params.d0 = (params.eps_fs / params.eps_mp).sqrt();
    }
    Ok(params)
}

/// Reads and validates a scenario file.
pub fn load_instance(path: impl AsRef<Path>) -> Result<ScenarioInstance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScenarioInstance::from_json_str(&text)
}

pub fn save_instance(instance: &ScenarioInstance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, instance.to_json_string()).map_err(|e| Error::io(path, e))
}

fn coverage_sets(sensors: &[Point], targets: &[Point], r_s: f64) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let mut monitors = vec![Vec::new(); targets.len()];
    let mut monitored = vec![Vec::new(); sensors.len()];
    for (i, t) in targets.iter().enumerate() {
        for (j, s) in sensors.iter().enumerate() {
            if s.dist(t) <= r_s {
                monitors[i].push(j);
                monitored[j].push(i);
            }
        }
    }
    (monitors, monitored)
}

/// Breadth-first reachability from the base station over sensors linked at distance <= `r_c`.
fn reachable_from_bs(bs: &Point, sensors: &[Point], r_c: f64) -> Vec<bool> {
    let mut seen = vec![false; sensors.len()];
    let mut queue = VecDeque::new();
    for (j, s) in sensors.iter().enumerate() {
        if s.dist(bs) <= r_c {
            seen[j] = true;
            queue.push_back(j);
        }
    }
    while let Some(u) = queue.pop_front() {
        for v in 0..sensors.len() {
            if !seen[v] && sensors[u].dist(&sensors[v]) <= r_c {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

/// Bounding box of the sensors. An axis narrower than `2 * min_half` is widened
/// symmetrically so the observation grid never degenerates.
fn sensor_bounds(sensors: &[Point], min_half: f64) -> Bounds {
    let mut b = Bounds {
        h0: f64::INFINITY,
        h1: f64::NEG_INFINITY,
        w0: f64::INFINITY,
        w1: f64::NEG_INFINITY,
    };
    for s in sensors {
        b.h0 = b.h0.min(s.x);
        b.h1 = b.h1.max(s.x);
        b.w0 = b.w0.min(s.y);
        b.w1 = b.w1.max(s.y);
    }
    if b.h1 - b.h0 < 2.0 * min_half {
        let c = 0.5 * (b.h0 + b.h1);
        b.h0 = c - min_half;
        b.h1 = c + min_half;
    }
    if b.w1 - b.w0 < 2.0 * min_half {
        let c = 0.5 * (b.w0 + b.w1);
        b.w0 = c - min_half;
        b.w1 = c + min_half;
    }
    b
}

/// Mean over unordered pairs; `None` for fewer than two points.
pub fn mean_pairwise_distance(points: &[Point]) -> Option<f64> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let mut sum = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            sum += points[a].dist(&points[b]);
        }
    }
    Some(2.0 * sum / (n as f64 * (n as f64 - 1.0)))
}

/// Synthetic instance: base station at the area center, uniform targets and
/// sensors, then greedy repair. Uncovered targets get a sensor on the line
/// towards the base station; disconnected monitors are joined by relays grown
/// from the nearest connected node. At most `3 * n_sensors` sensors are inserted.
pub fn generate_instance(
    seed: u64,
    area: (f64, f64),
    n_targets: usize,
    n_sensors: usize,
    params: EnergyParams,
) -> Result<ScenarioInstance> {
    let (width, height) = area;
    if n_targets == 0 || n_sensors == 0 {
        return Err(Error::Validation("target and sensor counts must be >= 1".into()));
    }
    if !(width.is_finite() && width > 0.0 && height.is_finite() && height > 0.0) {
        return Err(Error::Validation(format!("area must be positive, got {width}x{height}")));
    }
    params.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bs = Point::new(width / 2.0, height / 2.0);
    let targets: Vec<Point> = (0..n_targets)
        .map(|_| Point::new(rng.random_range(0.0..width), rng.random_range(0.0..height)))
        .collect();
    let mut sensors: Vec<Point> = (0..n_sensors)
        .map(|_| Point::new(rng.random_range(0.0..width), rng.random_range(0.0..height)))
        .collect();

    let budget = 3 * n_sensors;
    let mut inserted = 0usize;
    let infeasible = |inserted| Error::Infeasible {
        targets: n_targets,
        sensors: n_sensors,
        inserted,
    };

    for t in &targets {
        if sensors.iter().any(|s| s.dist(t) <= params.r_s) {
            continue;
        }
        if inserted == budget {
            return Err(infeasible(inserted));
        }
        sensors.push(t.towards(&bs, 0.9 * params.r_s));
        inserted += 1;
    }

    loop {
        let (_, monitored) = coverage_sets(&sensors, &targets, params.r_s);
        let reach = reachable_from_bs(&bs, &sensors, params.r_c);
        let Some(lost) = (0..sensors.len()).find(|&j| !monitored[j].is_empty() && !reach[j]) else {
            break;
        };
        if inserted == budget {
            return Err(infeasible(inserted));
        }
        let s = sensors[lost];
        let mut anchor = bs;
        let mut best = s.dist(&bs);
        for (j, p) in sensors.iter().enumerate() {
            if reach[j] && p.dist(&s) < best {
                best = p.dist(&s);
                anchor = *p;
            }
        }
        sensors.push(anchor.towards(&s, 0.9 * params.r_c));
        inserted += 1;
    }

    ScenarioInstance::new(bs, sensors, targets, params)
}

/// Where a sensor forwards its packets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NextHop {
    BaseStation,
    Sensor(usize),
    /// No neighbor is closer to the base station; the sensor transmits nothing.
    DeadEnd,
}

/// Static greedy geographic routing.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingTable {
    pub next_hop: Vec<NextHop>,
    /// Number of other sensors whose forwarding chain passes through each sensor.
    pub hop_load: Vec<usize>,
    /// Length of the link from each sensor to its next hop (0 for dead ends).
    pub link_len: Vec<f64>,
}

impl RoutingTable {
    pub fn dead_ends(&self) -> impl Iterator<Item = usize> + '_ {
        self.next_hop
            .iter()
            .enumerate()
            .filter(|(_, h)| matches!(h, NextHop::DeadEnd))
            .map(|(j, _)| j)
    }
}

/// Each sensor forwards to the neighbor within `r_c` (base station included)
/// nearest to the base station, if that neighbor is strictly nearer than the
/// sensor itself. Ties go to the lowest sensor index.
pub fn build_routing(instance: &ScenarioInstance) -> RoutingTable {
    let bs = instance.base_station;
    let r_c = instance.params.r_c;
    let sensors = &instance.sensors;
    let n = sensors.len();
    let to_bs: Vec<f64> = sensors.iter().map(|s| s.dist(&bs)).collect();

    let mut next_hop = vec![NextHop::DeadEnd; n];
    let mut link_len = vec![0.0; n];
    for j in 0..n {
        if to_bs[j] <= r_c {
            next_hop[j] = NextHop::BaseStation;
            link_len[j] = to_bs[j];
            continue;
        }
        let mut best: Option<usize> = None;
        for k in 0..n {
            if k == j || sensors[j].dist(&sensors[k]) > r_c || to_bs[k] >= to_bs[j] {
                continue;
            }
            if best.is_none_or(|b| to_bs[k] < to_bs[b]) {
                best = Some(k);
            }
        }
        if let Some(k) = best {
            next_hop[j] = NextHop::Sensor(k);
            link_len[j] = sensors[j].dist(&sensors[k]);
        }
    }

    let mut hop_load = vec![0usize; n];
    for j in 0..n {
        let mut cur = j;
        while let NextHop::Sensor(k) = next_hop[cur] {
            hop_load[k] += 1;
            cur = k;
        }
    }
    RoutingTable {
        next_hop,
        hop_load,
        link_len,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json(target_x: f64) -> String {
        format!(
            r#"{{"base_station":[0,0],"sensors":[[10,0]],"targets":[[{target_x},0]],"params":{{"r_s":40}}}}"#
        )
    }

    #[test]
    fn minimal_instance_is_valid() {
        let inst = ScenarioInstance::from_json_str(&minimal_json(30.0)).unwrap();
        assert_eq!(inst.monitors, vec![vec![0]]);
        assert_eq!(inst.params, EnergyParams::default());
    }

    #[test]
    fn uncovered_target_is_named() {
        let err = ScenarioInstance::from_json_str(&minimal_json(100.0)).unwrap_err();
        assert!(err.to_string().contains("target 0 uncovered"), "{err}");
    }

    #[test]
    fn disconnected_monitor_is_named() {
        let json = r#"{"base_station":[0,0],"sensors":[[10,0],[500,0]],"targets":[[510,0]]}"#;
        let err = ScenarioInstance::from_json_str(json).unwrap_err();
        assert!(err.to_string().contains("sensor 1 disconnected"), "{err}");
    }

    #[test]
    fn unknown_param_rejected() {
        let json = r#"{"base_station":[0,0],"sensors":[[10,0]],"targets":[[30,0]],"params":{"speed":3}}"#;
        assert!(matches!(ScenarioInstance::from_json_str(json), Err(Error::Parse(_))));
    }

    #[test]
    fn d0_follows_amplifier_constants() {
        let p = EnergyParams::default();
        assert!((p.d0 - 87.706).abs() < 1e-3);
        let json = r#"{"base_station":[0,0],"sensors":[[10,0]],"targets":[[30,0]],"params":{"eps_mp":4e-15}}"#;
        let inst = ScenarioInstance::from_json_str(json).unwrap();
        assert!((inst.params.d0 - 50.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_params_rejected() {
        let p = EnergyParams {
            e_th: 20000.0,
            ..EnergyParams::default()
        };
        assert!(p.validate().is_err());
        let p = EnergyParams {
            speed: 0.0,
            ..EnergyParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn degenerate_bounds_are_widened() {
        let inst = ScenarioInstance::from_json_str(&minimal_json(30.0)).unwrap();
        let b = inst.bounds;
        assert!(b.h0 < b.h1 && b.w0 < b.w1);
        assert_eq!(b.h1 - b.h0, 2.0 * inst.params.r_charge);
    }

    #[test]
    fn chain_routing() {
        let inst = ScenarioInstance::new(
            Point::new(0.0, 0.0),
            vec![Point::new(50.0, 0.0), Point::new(100.0, 0.0)],
            vec![Point::new(110.0, 0.0)],
            EnergyParams::default(),
        )
        .unwrap();
        let rt = build_routing(&inst);
        assert_eq!(rt.next_hop, vec![NextHop::BaseStation, NextHop::Sensor(0)]);
        assert_eq!(rt.hop_load, vec![1, 0]);
    }

    #[test]
    fn routing_tie_prefers_lower_index() {
        let inst = ScenarioInstance::new(
            Point::new(0.0, 0.0),
            vec![Point::new(60.0, 10.0), Point::new(60.0, -10.0), Point::new(120.0, 0.0)],
            vec![Point::new(130.0, 0.0)],
            EnergyParams::default(),
        )
        .unwrap();
        let rt = build_routing(&inst);
        assert_eq!(rt.next_hop[2], NextHop::Sensor(0));
    }

    #[test]
    fn routing_flags_dead_ends() {
        let inst = ScenarioInstance::new(
            Point::new(0.0, 0.0),
            vec![Point::new(10.0, 0.0), Point::new(400.0, 400.0)],
            vec![Point::new(20.0, 0.0)],
            EnergyParams::default(),
        )
        .unwrap();
        let rt = build_routing(&inst);
        assert_eq!(rt.dead_ends().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn generation_is_deterministic_and_seeded() {
        let p = EnergyParams::default();
        let a = generate_instance(1, (1000.0, 1000.0), 5, 20, p.clone()).unwrap();
        let b = generate_instance(1, (1000.0, 1000.0), 5, 20, p.clone()).unwrap();
        assert_eq!(a.to_json_string(), b.to_json_string());
        let c = generate_instance(2, (1000.0, 1000.0), 5, 20, p).unwrap();
        assert_ne!(a.targets, c.targets);
    }

    #[test]
    fn generation_reports_infeasible() {
        let err = generate_instance(3, (1000.0, 1000.0), 50, 1, EnergyParams::default()).unwrap_err();
        assert!(matches!(err, Error::Infeasible { targets: 50, sensors: 1, .. }), "{err}");
    }

    #[test]
    fn saved_instance_reloads_identically() {
        let inst = generate_instance(9, (600.0, 400.0), 4, 12, EnergyParams::default()).unwrap();
        let back = ScenarioInstance::from_json_str(&inst.to_json_string()).unwrap();
        assert_eq!(inst, back);
    }
}
