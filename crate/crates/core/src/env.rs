//! Asynchronous multi-charger environment: macro actions, decision events,
//! transition frames and rewards.

use std::collections::VecDeque;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{charge_rate, ChargerMode, ChargerState, Event, Leg, NetworkState, SimConfig};
use crate::error::{Error, Result};
use crate::lifetime::estimate_remaining_lifetime;
use crate::observation::{render, F4Anchor, ObsMask, Observation, ObservationConfig, ObservationGrid};
use crate::scenario::{build_routing, Point, ScenarioInstance};

/// Go to `(a, b)` and charge there for `c` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroAction {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl MacroAction {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        MacroAction { a, b, c }
    }

    pub fn location(&self) -> Point {
        Point::new(self.a, self.b)
    }
}

/// Which reward terms make up the training reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum RewardMode {
    #[default]
    #[serde(rename = "FULL")]
    Full,
    #[serde(rename = "NO_EX")]
    GeneralOnly,
    #[serde(rename = "NO_GE")]
    ExclusiveOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    pub mode: RewardMode,
    /// Divisor of the lifetime-improvement reward (s).
    pub r_scale: f64,
    /// Divisor of the charging reward.
    pub r_scale_ex: f64,
    /// Use `(F1 - F2) - (t2 - t1)` instead of `(F2 - F1) + (t2 - t1)`.
    pub sign_as_printed: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            mode: RewardMode::Full,
            r_scale: 1000.0,
            r_scale_ex: 1.0,
            sign_as_printed: false,
        }
    }
}

/// Change in estimated absolute death time between two decisions, scaled.
pub fn reward_general(t1: f64, t2: f64, fhat_t1: f64, fhat_t2: f64, cfg: &RewardConfig) -> f64 {
    let r = if cfg.sign_as_printed {
        (fhat_t1 - fhat_t2) - (t2 - t1)
    } else {
        (fhat_t2 - fhat_t1) + (t2 - t1)
    };
    r / cfg.r_scale
}

/// Criticality-weighted energy a charger at `at` delivers over `tau` seconds.
pub fn exclusive_increment(state: &NetworkState, at: &Point, tau: f64, e_floor: f64) -> f64 {
    let p = state.params();
    state
        .sensors
        .iter()
        .filter(|s| s.alive)
        .map(|s| {
            let rate = charge_rate(s.position.dist(at), p);
            if rate == 0.0 {
                0.0
            } else {
                rate * s.rate / (s.energy - p.e_th).max(e_floor)
            }
        })
        .sum::<f64>()
        * tau
}

pub fn total_reward(general: f64, exclusive: f64, mode: RewardMode) -> f64 {
    match mode {
        RewardMode::Full => general + exclusive,
        RewardMode::GeneralOnly => general,
        RewardMode::ExclusiveOnly => exclusive,
    }
}

/// Low-level schedule for a macro action. A battery swap at the base station
/// is prepended when the charger cannot pay for the trip, the charge and the
/// way back. The charge is shortened when even a full battery cannot pay for it.
pub fn plan_macro(charger: &ChargerState, u: &MacroAction, state: &NetworkState) -> VecDeque<Leg> {
    let p = state.params();
    let bs = state.instance.base_station;
    let dest = u.location();
    let in_range: f64 = state
        .sensors
        .iter()
        .filter(|s| s.alive)
        .map(|s| charge_rate(s.position.dist(&dest), p))
        .sum();
    let back = p.move_cost * dest.dist(&bs);
    let need = |from: &Point, c: f64| p.move_cost * from.dist(&dest) + c * in_range + back;

    let mut legs = VecDeque::new();
    let mut c = u.c.max(0.0);
    let mut from = charger.position;
    if charger.energy < need(&from, c) {
        if from != bs {
            legs.push_back(Leg::ReturnToBase);
        }
        from = bs;
        let travel = need(&from, 0.0);
        if p.charger_capacity < need(&from, c) && in_range > 0.0 {
            c = ((p.charger_capacity - travel) / in_range).max(0.0);
        }
        if p.charger_capacity < travel {
            // unreachable even on a full battery: stay home
            return legs;
        }
    }
    if from != dest {
        legs.push_back(Leg::MoveTo(dest));
    }
    if c > 0.0 {
        legs.push_back(Leg::Charge(c));
    }
    legs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub n_agents: usize,
    /// Observation cells per axis.
    pub grid_size: usize,
    /// Kernel width (m); defaults to the communication range.
    pub kernel_width: Option<f64>,
    pub f4_anchor: F4Anchor,
    pub mask: ObsMask,
    pub e_floor: f64,
    pub reward: RewardConfig,
    pub sim: SimConfig,
    /// Episode time limit (s).
    pub t_max: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            n_agents: 3,
            grid_size: 100,
            kernel_width: None,
            f4_anchor: F4Anchor::Destination,
            mask: ObsMask::Full,
            e_floor: 1.0,
            reward: RewardConfig::default(),
            sim: SimConfig::default(),
            t_max: 604_800.0,
        }
    }
}

impl EnvConfig {
    pub fn observation_config(&self, instance: &ScenarioInstance) -> ObservationConfig {
        let h = self.kernel_width.unwrap_or(instance.params.r_c);
        ObservationConfig {
            grid: ObservationGrid::new(self.grid_size, instance.bounds, h),
            f4_anchor: self.f4_anchor,
            e_floor: self.e_floor,
            mask: self.mask,
        }
    }
}

/// One completed macro action of one agent.
#[derive(Debug, Clone)]
pub struct TransitionFrame {
    pub agent_id: usize,
    pub o_start: Arc<Observation>,
    pub o_end: Arc<Observation>,
    pub action: MacroAction,
    /// Sampled policy output the action was derived from.
    pub latent: Arc<Vec<f32>>,
    pub log_prob: f64,
    pub reward_general: f64,
    pub reward_exclusive: f64,
    pub reward: f64,
    /// Filled in by the trainer.
    pub advantage: f64,
    pub t_start: f64,
    pub t_end: f64,
    /// The network died during this macro action.
    pub terminal: bool,
}

#[derive(Serialize)]
struct FrameRecord<'a> {
    agent_id: usize,
    t_start: f64,
    t_end: f64,
    action: &'a MacroAction,
    log_prob: f64,
    reward_general: f64,
    reward_exclusive: f64,
    reward: f64,
    advantage: f64,
    terminal: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    latent: Option<String>,
}

/// Writes frames as newline-delimited JSON; the latent map, if requested, is a
/// comma-separated string.
pub fn write_frames<W: Write>(mut out: W, frames: &[TransitionFrame], with_latent: bool) -> std::io::Result<()> {
    for f in frames {
        let rec = FrameRecord {
            agent_id: f.agent_id,
            t_start: f.t_start,
            t_end: f.t_end,
            action: &f.action,
            log_prob: f.log_prob,
            reward_general: f.reward_general,
            reward_exclusive: f.reward_exclusive,
            reward: f.reward,
            advantage: f.advantage,
            terminal: f.terminal,
            latent: with_latent.then(|| f.latent.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// An agent has to choose its next macro action.
#[derive(Debug, Clone)]
pub struct DecisionEvent {
    pub agent_id: usize,
    pub time: f64,
    pub observation: Arc<Observation>,
    /// The macro action that just ended, if any.
    pub previous: Option<TransitionFrame>,
}

#[derive(Debug, Clone)]
pub struct EpisodeEnd {
    pub time: f64,
    /// Stopped by the time limit rather than network death.
    pub censored: bool,
    /// Frames that were still open when the episode ended.
    pub closed: Vec<TransitionFrame>,
}

#[derive(Debug, Clone)]
pub enum EnvEvent {
    Decision(DecisionEvent),
    Finished(EpisodeEnd),
}

/// What a controller hands back for a decision.
#[derive(Debug, Clone)]
pub struct Decision {
    pub action: MacroAction,
    pub latent: Arc<Vec<f32>>,
    pub log_prob: f64,
}

impl Decision {
    pub fn plain(action: MacroAction) -> Self {
        Decision {
            action,
            latent: Arc::new(Vec::new()),
            log_prob: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
struct OpenMacro {
    o_start: Arc<Observation>,
    decision: Decision,
    t_start: f64,
    fhat_start: f64,
    started_step: u64,
    exclusive: f64,
}

/// One episode of the charging problem.
#[derive(Debug, Clone)]
pub struct Env {
    state: NetworkState,
    cfg: EnvConfig,
    obs_cfg: ObservationConfig,
    open: Vec<Option<OpenMacro>>,
    /// Agents waiting for `act`, with their decision observation.
    awaiting: Vec<Option<Arc<Observation>>>,
    queue: VecDeque<DecisionEvent>,
    fhat_now: f64,
    finished: bool,
    events: Vec<Event>,
}

impl Env {
    /// Starts an episode; every agent is due for a decision at `t = 0`.
    pub fn new(instance: Arc<ScenarioInstance>, cfg: EnvConfig) -> Self {
        let routing = Arc::new(build_routing(&instance));
        let obs_cfg = cfg.observation_config(&instance);
        let state = NetworkState::new(instance, routing, cfg.n_agents, cfg.sim);
        let mut env = Env {
            open: vec![None; cfg.n_agents],
            awaiting: vec![None; cfg.n_agents],
            queue: VecDeque::new(),
            fhat_now: 0.0,
            finished: false,
            events: Vec::new(),
            state,
            cfg,
            obs_cfg,
        };
        env.fhat_now = estimate_remaining_lifetime(&env.state);
        let obs: Vec<_> = (0..cfg.n_agents).map(|k| Arc::new(env.render(k))).collect();
        for (k, o) in obs.into_iter().enumerate() {
            env.awaiting[k] = Some(Arc::clone(&o));
            env.queue.push_back(DecisionEvent {
                agent_id: k,
                time: 0.0,
                observation: o,
                previous: None,
            });
        }
        env
    }

    /// Simulation events so far, in time order.
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn observation_config(&self) -> &ObservationConfig {
        &self.obs_cfg
    }

    pub fn render(&self, agent: usize) -> Observation {
        render(&self.state, agent, &self.obs_cfg)
    }

    /// Current remaining-lifetime estimate.
    pub fn lifetime_estimate(&self) -> f64 {
        self.fhat_now
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Starts a macro action for an agent that received a decision event.
    pub fn act(&mut self, agent: usize, decision: Decision) -> Result<()> {
        let o_start = self.awaiting[agent]
            .take()
            .ok_or_else(|| Error::Invariant(format!("agent {agent} acted without a pending decision")))?;
        let u = decision.action;
        if !(u.a.is_finite() && u.b.is_finite() && u.c.is_finite()) {
            return Err(Error::Validation(format!("non-finite macro action {u:?}")));
        }
        let legs = plan_macro(&self.state.chargers[agent], &u, &self.state);
        self.state.chargers[agent].assign(legs, u.location());
        self.open[agent] = Some(OpenMacro {
            o_start,
            decision,
            t_start: self.state.clock,
            fhat_start: self.fhat_now,
            started_step: self.state.steps,
            exclusive: 0.0,
        });
        Ok(())
    }

    /// Next decision, or the end of the episode. Steps the simulation only when
    /// every agent is busy.
    pub fn next_event(&mut self) -> Result<EnvEvent> {
        if let Some(ev) = self.queue.pop_front() {
            return Ok(EnvEvent::Decision(ev));
        }
        if self.finished {
            return Err(Error::Invariant("episode already finished".into()));
        }
        if let Some(k) = self.awaiting.iter().position(Option::is_some) {
            return Err(Error::Invariant(format!("agent {k} has not acted on its decision")));
        }
        loop {
            if self.state.dead || self.state.clock + 0.5 * self.cfg.sim.dt > self.cfg.t_max {
                return Ok(EnvEvent::Finished(self.finish()));
            }
            self.accumulate_exclusive();
            let ev = self.state.step()?;
            self.events.extend(ev);
            let ended: Vec<usize> = (0..self.cfg.n_agents)
                .filter(|&k| {
                    let c = &self.state.chargers[k];
                    self.open[k].as_ref().is_some_and(|m| c.is_idle() && self.state.steps > m.started_step)
                })
                .collect();
            // a macro ending on the horizon closes with the episode, not as a decision
            if self.state.dead || self.state.clock + 0.5 * self.cfg.sim.dt > self.cfg.t_max {
                return Ok(EnvEvent::Finished(self.finish()));
            }
            if ended.is_empty() {
                continue;
            }
            self.fhat_now = estimate_remaining_lifetime(&self.state);
            // all observations of this instant are taken before anyone acts
            let obs: Vec<_> = ended.iter().map(|&k| Arc::new(self.render(k))).collect();
            for (&k, o) in ended.iter().zip(obs) {
                let frame = self.close(k, Arc::clone(&o), false);
                self.awaiting[k] = Some(Arc::clone(&o));
                self.queue.push_back(DecisionEvent {
                    agent_id: k,
                    time: self.state.clock,
                    observation: o,
                    previous: Some(frame),
                });
            }
            return Ok(EnvEvent::Decision(self.queue.pop_front().expect("queued")));
        }
    }

    fn accumulate_exclusive(&mut self) {
        let dt = self.cfg.sim.dt;
        for k in 0..self.cfg.n_agents {
            let c = &self.state.chargers[k];
            if c.mode != ChargerMode::Charging {
                continue;
            }
            let tau = dt.min(c.remaining_charge);
            let inc = exclusive_increment(&self.state, &c.position, tau, self.cfg.e_floor);
            if let Some(m) = self.open[k].as_mut() {
                m.exclusive += inc;
            }
        }
    }

    fn close(&mut self, agent: usize, o_end: Arc<Observation>, terminal: bool) -> TransitionFrame {
        let m = self.open[agent].take().expect("open macro");
        let t_end = self.state.clock;
        let rc = &self.cfg.reward;
        let general = reward_general(m.t_start, t_end, m.fhat_start, self.fhat_now, rc);
        let exclusive = m.exclusive / rc.r_scale_ex;
        TransitionFrame {
            agent_id: agent,
            o_start: m.o_start,
            o_end,
            action: m.decision.action,
            latent: m.decision.latent,
            log_prob: m.decision.log_prob,
            reward_general: general,
            reward_exclusive: exclusive,
            reward: total_reward(general, exclusive, rc.mode),
            advantage: 0.0,
            t_start: m.t_start,
            t_end,
            terminal,
        }
    }

    fn finish(&mut self) -> EpisodeEnd {
        self.finished = true;
        let died = self.state.dead;
        self.fhat_now = if died { 0.0 } else { estimate_remaining_lifetime(&self.state) };
        let mut closed = Vec::new();
        for k in 0..self.cfg.n_agents {
            if self.open[k].is_some() {
                let o = Arc::new(self.render(k));
                closed.push(self.close(k, o, died));
            }
        }
        EpisodeEnd {
            time: self.state.clock,
            censored: !died,
            closed,
        }
    }
}

/// Chooses macro actions at decision events.
pub trait Controller {
    fn decide(&mut self, event: &DecisionEvent, env: &Env) -> Result<Decision>;
}

/// Leaves every charger parked where it is.
#[derive(Debug, Default, Clone)]
pub struct IdleController;

impl Controller for IdleController {
    fn decide(&mut self, event: &DecisionEvent, env: &Env) -> Result<Decision> {
        let at = env.state().chargers[event.agent_id].position;
        Ok(Decision::plain(MacroAction::new(at.x, at.y, 0.0)))
    }
}

/// Uniform location inside the instance bounds and uniform charging time up to
/// the time that refills a sensor at peak rate.
#[derive(Debug, Clone)]
pub struct RandomController {
    rng: ChaCha8Rng,
}

impl RandomController {
    pub fn new(seed: u64) -> Self {
        RandomController {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Controller for RandomController {
    fn decide(&mut self, _event: &DecisionEvent, env: &Env) -> Result<Decision> {
        let b = env.state().instance.bounds;
        let p = env.state().params();
        let c_max = p.sensor_span() / p.peak_charge_rate();
        let a = self.rng.random_range(b.h0..=b.h1);
        let bb = self.rng.random_range(b.w0..=b.w1);
        let c = self.rng.random_range(0.0..=c_max);
        Ok(Decision::plain(MacroAction::new(a, bb, c)))
    }
}

/// Replays per-agent action lists; an agent that runs out repeats an
/// in-place charge of one step.
#[derive(Debug, Clone)]
pub struct ScriptedController {
    pub scripts: Vec<VecDeque<MacroAction>>,
}

impl ScriptedController {
    /// Each agent charges in place for the given durations in turn.
    pub fn durations(durations: &[Vec<f64>]) -> Self {
        ScriptedController {
            scripts: durations
                .iter()
                .map(|d| d.iter().map(|&c| MacroAction::new(f64::NAN, f64::NAN, c)).collect())
                .collect(),
        }
    }
}

impl Controller for ScriptedController {
    fn decide(&mut self, event: &DecisionEvent, env: &Env) -> Result<Decision> {
        let at = env.state().chargers[event.agent_id].position;
        let mut u = self.scripts[event.agent_id]
            .pop_front()
            .unwrap_or(MacroAction::new(at.x, at.y, env.config().sim.dt));
        if u.a.is_nan() || u.b.is_nan() {
            u.a = at.x;
            u.b = at.y;
        }
        Ok(Decision::plain(u))
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub lifetime: f64,
    pub censored: bool,
    pub frames: Vec<TransitionFrame>,
    /// `(agent, time)` of every decision in emission order.
    pub decisions: Vec<(usize, f64)>,
    pub events: Vec<Event>,
}

/// Runs a full episode under `controller`.
pub fn run_episode(env: &mut Env, controller: &mut dyn Controller) -> Result<EpisodeOutcome> {
    let mut frames = Vec::new();
    let mut decisions = Vec::new();
    loop {
        match env.next_event()? {
            EnvEvent::Decision(ev) => {
                decisions.push((ev.agent_id, ev.time));
                let d = controller.decide(&ev, env)?;
                if let Some(f) = ev.previous {
                    frames.push(f);
                }
                env.act(ev.agent_id, d)?;
            }
            EnvEvent::Finished(end) => {
                frames.extend(end.closed);
                return Ok(EpisodeOutcome {
                    lifetime: end.time,
                    censored: end.censored,
                    frames,
                    decisions,
                    events: env.events().to_vec(),
                });
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LifetimeReport {
    pub lifetime: f64,
    pub censored: bool,
    pub dt: f64,
}

/// Lifetime of the network without any charger activity.
pub fn baseline_lifetime(instance: Arc<ScenarioInstance>, cfg: &EnvConfig) -> Result<LifetimeReport> {
    let routing = Arc::new(build_routing(&instance));
    let mut st = NetworkState::new(instance, routing, 0, cfg.sim);
    let (lifetime, censored) = st.run_until_death(cfg.t_max)?;
    Ok(LifetimeReport {
        lifetime,
        censored,
        dt: cfg.sim.dt,
    })
}

/// Lifetime of the network under `controller`.
pub fn simulate_lifetime(
    instance: Arc<ScenarioInstance>,
    cfg: &EnvConfig,
    controller: &mut dyn Controller,
) -> Result<LifetimeReport> {
    let mut env = Env::new(instance, *cfg);
    let out = run_episode(&mut env, controller)?;
    Ok(LifetimeReport {
        lifetime: out.lifetime,
        censored: out.censored,
        dt: cfg.sim.dt,
    })
}
