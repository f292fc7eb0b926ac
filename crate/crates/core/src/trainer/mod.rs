//! Asynchronous multi-agent PPO and its single-learner and independent-learner
//! baselines.
//!
//! Rollouts run whole episodes; every finished macro action becomes a frame
//! whose one-step advantage `R + gamma V(o_end) - V(o_start)` is fixed at
//! collection time with the critic of that moment. Frames go to the buffer
//! of the agent that produced them; once every buffer holds `buffer_capacity`
//! frames the learners are updated and the buffers emptied.

mod loss;

pub use loss::{
    actor_loss, clipped_term, critic_loss, normalize, ActorLossConfig, ActorLossStats, ActorSample, CriticSample,
};

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::{select_action, vector_action, Selection};
use crate::checkpoint::{blocks_of, load_into, TensorBlock};
use crate::env::{
    baseline_lifetime, Controller, Decision, DecisionEvent, Env, EnvConfig, EnvEvent, LifetimeReport, RewardMode,
    TransitionFrame,
};
use crate::error::{Error, Result};
use crate::nn::{log_prob, sample, softmax, Actor, ActorKind, Adam, AdamConfig, Critic};
use crate::observation::{ObsMask, Observation};
use crate::scenario::ScenarioInstance;

/// Who learns from which frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Algorithm {
    /// One actor per agent on its own frames; one critic on all frames.
    #[default]
    #[serde(rename = "AMAPPO")]
    Amappo,
    /// One shared actor and critic on all frames.
    #[serde(rename = "PPO")]
    Ppo,
    /// One actor and one critic per agent, each on its own frames.
    #[serde(rename = "IPPO")]
    Ippo,
}

/// Model variants with one component removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Ablation {
    #[default]
    #[serde(rename = "FULL")]
    Full,
    #[serde(rename = "NO_1")]
    NoCriticality,
    #[serde(rename = "NO_2_3_4")]
    OnlyCriticality,
    #[serde(rename = "NO_EX")]
    NoExclusive,
    #[serde(rename = "NO_GE")]
    NoGeneral,
    /// Actor emits the macro action directly, without the probability map.
    #[serde(rename = "NO_PM")]
    NoMap,
}

macro_rules! name_table {
    ($ty:ty, $($variant:path => $name:literal),+ $(,)?) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self {
                    $($variant => $name),+
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                $(if s.eq_ignore_ascii_case($name) {
                    return Ok($variant);
                })+
                Err(Error::Parse(format!(
                    "unknown {} `{s}` (expected one of {})",
                    stringify!($ty),
                    [$($name),+].join(", ")
                )))
            }
        }
    };
}

name_table!(Algorithm, Algorithm::Amappo => "AMAPPO", Algorithm::Ppo => "PPO", Algorithm::Ippo => "IPPO");
name_table!(
    Ablation,
    Ablation::Full => "FULL",
    Ablation::NoCriticality => "NO_1",
    Ablation::OnlyCriticality => "NO_2_3_4",
    Ablation::NoExclusive => "NO_EX",
    Ablation::NoGeneral => "NO_GE",
    Ablation::NoMap => "NO_PM",
);

impl Ablation {
    /// Environment settings of the variant on top of `base`.
    pub fn apply(self, base: &EnvConfig) -> EnvConfig {
        let mut cfg = *base;
        match self {
            Ablation::Full | Ablation::NoMap => {}
            Ablation::NoCriticality => cfg.mask = ObsMask::NoFirst,
            Ablation::OnlyCriticality => cfg.mask = ObsMask::OnlyFirst,
            Ablation::NoExclusive => cfg.reward.mode = RewardMode::GeneralOnly,
            Ablation::NoGeneral => cfg.reward.mode = RewardMode::ExclusiveOnly,
        }
        cfg
    }

    pub fn actor_kind(self) -> ActorKind {
        if self == Ablation::NoMap {
            ActorKind::Vector
        } else {
            ActorKind::Map
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerConfig {
    pub algorithm: Algorithm,
    pub ablation: Ablation,
    pub clip_eps: f64,
    pub gamma: f64,
    /// Optimization passes over each full set of buffers.
    pub epochs: usize,
    pub minibatch: usize,
    /// Frames per agent buffer that trigger an update.
    pub buffer_capacity: usize,
    pub adam: AdamConfig,
    pub normalize_advantages: bool,
    pub entropy_coef: f64,
    /// Stop once this many frames (all agents) have been collected.
    pub max_frames: usize,
    pub seed: u64,
    /// Channel width of the first U-Net block.
    pub unet_width: usize,
    /// Parallel rollout threads.
    pub workers: usize,
    /// Environment before the ablation is applied.
    pub env: EnvConfig,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            algorithm: Algorithm::Amappo,
            ablation: Ablation::Full,
            clip_eps: 0.2,
            gamma: 0.99,
            epochs: 5,
            minibatch: 64,
            buffer_capacity: 512,
            adam: AdamConfig::default(),
            normalize_advantages: true,
            entropy_coef: 0.0,
            max_frames: 3_000_000,
            seed: 0,
            unet_width: 64,
            workers: 1,
            env: EnvConfig::default(),
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return bad(format!("clip_eps must lie in (0, 1), got {}", self.clip_eps));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        if self.epochs == 0 || self.minibatch == 0 || self.buffer_capacity == 0 || self.workers == 0 {
            return bad("epochs, minibatch, buffer_capacity and workers must be positive".into());
        }
        if self.env.n_agents == 0 {
            return bad("at least one agent is required".into());
        }
        if self.ablation.actor_kind() == ActorKind::Map && (self.env.grid_size % 4 != 0 || self.unet_width == 0) {
            return bad(format!(
                "the map actor needs a grid size divisible by 4 and a positive width, got {} and {}",
                self.env.grid_size, self.unet_width
            ));
        }
        if self.env.grid_size < 8 {
            return bad(format!("grid size must be at least 8, got {}", self.env.grid_size));
        }
        if !(self.adam.lr > 0.0) || !(self.entropy_coef >= 0.0) {
            return bad("learning rate must be positive and the entropy coefficient non-negative".into());
        }
        Ok(())
    }

    /// Environment with the ablation applied.
    pub fn env_config(&self) -> EnvConfig {
        self.ablation.apply(&self.env)
    }

    pub fn actor_loss_config(&self) -> ActorLossConfig {
        ActorLossConfig {
            clip_eps: self.clip_eps,
            normalize_advantages: self.normalize_advantages,
            entropy_coef: self.entropy_coef,
        }
    }
}

/// Trainable networks with their optimizer states.
#[derive(Debug, Clone)]
pub struct Learners {
    pub algorithm: Algorithm,
    pub n_agents: usize,
    pub actors: Vec<Actor<f32>>,
    pub critics: Vec<Critic<f32>>,
    actor_opts: Vec<Adam<f32>>,
    critic_opts: Vec<Adam<f32>>,
}

impl Learners {
    pub fn new(cfg: &TrainerConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let m = cfg.env.n_agents;
        let (n_actors, n_critics) = match cfg.algorithm {
            Algorithm::Amappo => (m, 1),
            Algorithm::Ppo => (1, 1),
            Algorithm::Ippo => (m, m),
        };
        let actors: Vec<Actor<f32>> = (0..n_actors)
            .map(|_| Actor::new(cfg.ablation.actor_kind(), cfg.unet_width, &mut rng))
            .collect();
        let critics: Vec<Critic<f32>> = (0..n_critics).map(|_| Critic::new(&mut rng)).collect();
        Learners {
            algorithm: cfg.algorithm,
            n_agents: m,
            actor_opts: actors.iter().map(|a| Adam::new(cfg.adam, a.params().len())).collect(),
            critic_opts: critics.iter().map(|c| Adam::new(cfg.adam, c.params.len())).collect(),
            actors,
            critics,
        }
    }

    pub fn actor_of(&self, agent: usize) -> usize {
        if self.actors.len() == 1 {
            0
        } else {
            agent
        }
    }

    pub fn critic_of(&self, agent: usize) -> usize {
        if self.critics.len() == 1 {
            0
        } else {
            agent
        }
    }

    /// Value of an observation under the critic responsible for `agent`.
    pub fn value(&self, agent: usize, obs: &Observation) -> Result<f64> {
        Ok(self.critics[self.critic_of(agent)].forward(&obs.tensor, obs.t)? as f64)
    }

    /// Parameters as named blocks `actor{i}/...` and `critic{i}/...`.
    pub fn to_blocks(&self) -> Vec<TensorBlock> {
        let mut out = Vec::new();
        for (i, a) in self.actors.iter().enumerate() {
            out.extend(blocks_of(&format!("actor{i}"), a.params()));
        }
        for (i, c) in self.critics.iter().enumerate() {
            out.extend(blocks_of(&format!("critic{i}"), &c.params));
        }
        out
    }

    /// Overwrites the parameters from checkpoint blocks (optimizer state is
    /// reset).
    pub fn load_blocks(&mut self, blocks: &[TensorBlock]) -> Result<()> {
        let expected = self.to_blocks().len();
        if blocks.len() != expected {
            return Err(Error::Checkpoint(format!(
                "{} blocks, expected {expected} for this configuration",
                blocks.len()
            )));
        }
        for (i, a) in self.actors.iter_mut().enumerate() {
            load_into(&format!("actor{i}"), blocks, a.params_mut())?;
        }
        for (i, c) in self.critics.iter_mut().enumerate() {
            load_into(&format!("critic{i}"), blocks, &mut c.params)?;
        }
        for (o, a) in self.actor_opts.iter_mut().zip(&self.actors) {
            *o = Adam::new(o.cfg, a.params().len());
        }
        for (o, c) in self.critic_opts.iter_mut().zip(&self.critics) {
            *o = Adam::new(o.cfg, c.params.len());
        }
        Ok(())
    }
}

/// How the policy turns its Gaussian head into a latent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActMode {
    /// Draw from the Gaussian.
    Sample,
    /// Use the mean.
    Mean,
}

/// A policy decision together with the map-based selection details.
#[derive(Debug, Clone)]
pub struct PolicyOutput {
    pub decision: Decision,
    /// Present for the map actor.
    pub selection: Option<Selection>,
    /// Softmax of the latent (map actor only).
    pub probabilities: Option<Vec<f64>>,
}

/// Runs one actor on an observation and converts its output into a macro
/// action for the current environment state.
pub fn policy_decision(
    actor: &Actor<f32>,
    obs: &Observation,
    env: &Env,
    mode: ActMode,
    rng: &mut ChaCha8Rng,
) -> Result<PolicyOutput> {
    let head = actor.forward(&obs.tensor, obs.t)?;
    let x = match mode {
        ActMode::Sample => sample(&head, rng),
        ActMode::Mean => head.mean.clone(),
    };
    let lp = log_prob(&head, &x);
    let state = env.state();
    let (action, selection, probabilities) = match actor.kind() {
        ActorKind::Map => {
            let pr = softmax(&x);
            let grid = &env.observation_config().grid;
            let sel = select_action(&pr, state, grid, env.config().e_floor);
            (sel.action, Some(sel), Some(pr))
        }
        ActorKind::Vector => {
            let z: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            (vector_action(&z, &state.instance.bounds, state.params()), None, None)
        }
    };
    Ok(PolicyOutput {
        decision: Decision {
            action,
            latent: Arc::new(x),
            log_prob: lp,
        },
        selection,
        probabilities,
    })
}

/// Trained policy as an environment controller.
pub struct PolicyController<'a> {
    learners: &'a Learners,
    mode: ActMode,
    rng: ChaCha8Rng,
}

impl<'a> PolicyController<'a> {
    pub fn new(learners: &'a Learners, mode: ActMode, seed: u64) -> Self {
        PolicyController {
            learners,
            mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Controller for PolicyController<'_> {
    fn decide(&mut self, event: &DecisionEvent, env: &Env) -> Result<Decision> {
        let actor = &self.learners.actors[self.learners.actor_of(event.agent_id)];
        Ok(policy_decision(actor, &event.observation, env, self.mode, &mut self.rng)?.decision)
    }
}

/// Frames of one collected episode, per agent, with advantages filled in.
#[derive(Debug, Clone)]
pub struct EpisodeFrames {
    pub per_agent: Vec<Vec<TransitionFrame>>,
    pub lifetime: f64,
    pub censored: bool,
}

/// Runs one episode under `controller`, caching each agent's finished macro
/// actions with advantages `R + gamma V(o_end) - V(o_start)` from `value`
/// (the bootstrap is dropped for frames ended by network death).
pub fn rollout_episode(
    mut env: Env,
    controller: &mut dyn Controller,
    value: &dyn Fn(usize, &Observation) -> Result<f64>,
    gamma: f64,
) -> Result<EpisodeFrames> {
    let m = env.config().n_agents;
    let mut caches: Vec<Vec<TransitionFrame>> = vec![Vec::new(); m];
    // value of each agent's open macro start observation
    let mut v_start = vec![0.0; m];
    loop {
        match env.next_event()? {
            EnvEvent::Decision(ev) => {
                let k = ev.agent_id;
                let v = value(k, &ev.observation)?;
                let d = controller.decide(&ev, &env)?;
                if let Some(mut f) = ev.previous {
                    f.advantage = f.reward + gamma * v - v_start[k];
                    caches[k].push(f);
                }
                v_start[k] = v;
                env.act(k, d)?;
            }
            EnvEvent::Finished(end) => {
                for mut f in end.closed {
                    let k = f.agent_id;
                    let v_end = if f.terminal { 0.0 } else { value(k, &f.o_end)? };
                    f.advantage = f.reward + gamma * v_end - v_start[k];
                    caches[k].push(f);
                }
                if caches.iter().all(Vec::is_empty) {
                    return Err(Error::Degenerate(format!(
                        "episode ended at t = {} s without a single frame",
                        end.time
                    )));
                }
                return Ok(EpisodeFrames {
                    per_agent: caches,
                    lifetime: end.time,
                    censored: end.censored,
                });
            }
        }
    }
}

/// One training episode: sampled actions, values from the current critics.
pub fn collect_episode(
    instance: Arc<ScenarioInstance>,
    env_cfg: &EnvConfig,
    learners: &Learners,
    gamma: f64,
    rng: ChaCha8Rng,
) -> Result<EpisodeFrames> {
    let mut policy = PolicyController {
        learners,
        mode: ActMode::Sample,
        rng,
    };
    rollout_episode(Env::new(instance, *env_cfg), &mut policy, &|k, o| learners.value(k, o), gamma)
}

/// Per-agent frame buffers.
#[derive(Debug, Clone)]
pub struct AgentBuffer {
    pub agent_id: usize,
    pub frames: Vec<TransitionFrame>,
    pub capacity: usize,
}

impl AgentBuffer {
    pub fn is_full(&self) -> bool {
        self.frames.len() >= self.capacity
    }
}

/// Result of one collection phase.
#[derive(Debug, Clone)]
pub struct Collected {
    pub buffers: Vec<AgentBuffer>,
    /// `(lifetime, censored)` of every episode used.
    pub episodes: Vec<(f64, bool)>,
}

impl Collected {
    pub fn frame_count(&self) -> usize {
        self.buffers.iter().map(|b| b.frames.len()).sum()
    }
}

fn episode_rng(seed: u64, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode + 2);
    rng
}

/// Runs episodes until every agent buffer holds at least `capacity` frames.
/// Episode `i` draws from its own random stream, so results do not depend on
/// the number of worker threads.
pub fn collect(
    instance: &Arc<ScenarioInstance>,
    cfg: &TrainerConfig,
    learners: &Learners,
    next_episode: &mut u64,
) -> Result<Collected> {
    let env_cfg = cfg.env_config();
    let m = env_cfg.n_agents;
    let mut buffers: Vec<AgentBuffer> = (0..m)
        .map(|k| AgentBuffer {
            agent_id: k,
            frames: Vec::new(),
            capacity: cfg.buffer_capacity,
        })
        .collect();
    let mut episodes = Vec::new();
    while !buffers.iter().all(AgentBuffer::is_full) {
        let first = *next_episode;
        let batch: Vec<Result<EpisodeFrames>> = if cfg.workers <= 1 {
            let rng = episode_rng(cfg.seed, first);
            vec![collect_episode(Arc::clone(instance), &env_cfg, learners, cfg.gamma, rng)]
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = (0..cfg.workers as u64)
                    .map(|w| {
                        let inst = Arc::clone(instance);
                        let env_cfg = &env_cfg;
                        s.spawn(move || {
                            let rng = episode_rng(cfg.seed, first + w);
                            collect_episode(inst, env_cfg, learners, cfg.gamma, rng)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("rollout thread panicked"))
                    .collect()
            })
        };
        for ep in batch {
            if buffers.iter().all(AgentBuffer::is_full) {
                break;
            }
            let ep = ep?;
            *next_episode += 1;
            episodes.push((ep.lifetime, ep.censored));
            for (b, frames) in buffers.iter_mut().zip(ep.per_agent) {
                b.frames.extend(frames);
            }
        }
    }
    Ok(Collected { buffers, episodes })
}

/// Averages over every minibatch step of one update.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct UpdateStats {
    /// Mean clipped-surrogate objective (maximized).
    pub actor_objective: f64,
    pub critic_loss: f64,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
}

fn minibatches(n: usize, size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx.chunks(size).map(<[usize]>::to_vec).collect()
}

/// Trains every learner on the frames routed to it, `epochs` passes each.
pub fn update(learners: &mut Learners, buffers: &[AgentBuffer], cfg: &TrainerConfig, rng: &mut ChaCha8Rng) -> Result<UpdateStats> {
    let t = cfg.env.grid_size;
    let acfg = cfg.actor_loss_config();
    let mut stats = UpdateStats::default();
    let (mut n_actor, mut n_critic) = (0usize, 0usize);

    for i in 0..learners.actors.len() {
        let frames: Vec<&TransitionFrame> = buffers
            .iter()
            .filter(|b| learners.actor_of(b.agent_id) == i)
            .flat_map(|b| &b.frames)
            .collect();
        if frames.is_empty() {
            continue;
        }
        for _ in 0..cfg.epochs {
            for mb in minibatches(frames.len(), cfg.minibatch, rng) {
                let batch: Vec<ActorSample<'_, f32>> = mb
                    .iter()
                    .map(|&j| ActorSample {
                        obs: &frames[j].o_start.tensor,
                        latent: &frames[j].latent,
                        old_log_prob: frames[j].log_prob,
                        advantage: frames[j].advantage,
                    })
                    .collect();
                let actor = &learners.actors[i];
                let mut g = actor.params().zeros();
                let s = actor_loss(actor, t, &batch, &acfg, Some(&mut g))?;
                // ascend the objective
                g.iter_mut().for_each(|v| *v = -*v);
                learners.actor_opts[i].step(learners.actors[i].params_mut(), &mut g)?;
                stats.actor_objective += s.objective;
                stats.mean_ratio += s.mean_ratio;
                stats.clip_fraction += s.clip_fraction;
                n_actor += 1;
            }
        }
    }

    for i in 0..learners.critics.len() {
        let frames: Vec<&TransitionFrame> = buffers
            .iter()
            .filter(|b| learners.critic_of(b.agent_id) == i)
            .flat_map(|b| &b.frames)
            .collect();
        if frames.is_empty() {
            continue;
        }
        for _ in 0..cfg.epochs {
            for mb in minibatches(frames.len(), cfg.minibatch, rng) {
                let batch: Vec<CriticSample<'_, f32>> = mb
                    .iter()
                    .map(|&j| CriticSample {
                        o_start: &frames[j].o_start.tensor,
                        o_end: &frames[j].o_end.tensor,
                        reward: frames[j].reward,
                        terminal: frames[j].terminal,
                    })
                    .collect();
                let critic = &learners.critics[i];
                let mut g = critic.params.zeros();
                let l = critic_loss(critic, t, &batch, cfg.gamma, Some(&mut g))?;
                learners.critic_opts[i].step(&mut learners.critics[i].params, &mut g)?;
                stats.critic_loss += l;
                n_critic += 1;
            }
        }
    }

    let na = n_actor.max(1) as f64;
    stats.actor_objective /= na;
    stats.mean_ratio /= na;
    stats.clip_fraction /= na;
    stats.critic_loss /= n_critic.max(1) as f64;
    Ok(stats)
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpdateLog {
    pub update: usize,
    pub frames: usize,
    pub mean_lifetime_s: f64,
    /// Mean episode lifetime over the no-charger lifetime.
    pub lifetime_improvement: f64,
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
}

pub const LOG_HEADER: &str =
    "update,frames,mean_lifetime_s,lifetime_improvement,actor_loss,critic_loss,mean_ratio,clip_fraction";

impl UpdateLog {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.update,
            self.frames,
            self.mean_lifetime_s,
            self.lifetime_improvement,
            self.actor_loss,
            self.critic_loss,
            self.mean_ratio,
            self.clip_fraction
        )
    }
}

pub fn write_log_csv<W: Write>(mut out: W, rows: &[UpdateLog]) -> std::io::Result<()> {
    writeln!(out, "{LOG_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub learners: Learners,
    pub log: Vec<UpdateLog>,
    pub baseline: LifetimeReport,
    pub frames: usize,
}

/// Alternates collection and updates until `max_frames` frames have been
/// gathered. `on_update` sees every log row with the freshly updated
/// learners (for checkpointing and streaming logs).
pub fn train(
    instance: Arc<ScenarioInstance>,
    cfg: &TrainerConfig,
    mut on_update: impl FnMut(&UpdateLog, &Learners) -> Result<()>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let env_cfg = cfg.env_config();
    let baseline = baseline_lifetime(Arc::clone(&instance), &env_cfg)?;
    let mut learners = Learners::new(cfg);
    let mut update_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    update_rng.set_stream(1);
    let mut next_episode = 0u64;
    let mut frames = 0usize;
    let mut log = Vec::new();
    while frames < cfg.max_frames {
        let collected = collect(&instance, cfg, &learners, &mut next_episode)?;
        frames += collected.frame_count();
        let stats = update(&mut learners, &collected.buffers, cfg, &mut update_rng)?;
        let n = collected.episodes.len() as f64;
        let mean_lifetime = collected.episodes.iter().map(|e| e.0).sum::<f64>() / n;
        let row = UpdateLog {
            update: log.len() + 1,
            frames,
            mean_lifetime_s: mean_lifetime,
            lifetime_improvement: mean_lifetime / baseline.lifetime,
            actor_loss: stats.actor_objective,
            critic_loss: stats.critic_loss,
            mean_ratio: stats.mean_ratio,
            clip_fraction: stats.clip_fraction,
        };
        on_update(&row, &learners)?;
        log.push(row);
    }
    Ok(TrainOutcome {
        learners,
        log,
        baseline,
        frames,
    })
}

/// Run metadata stored next to a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub grid_size: usize,
    pub n_agents: usize,
    pub bounds: crate::scenario::Bounds,
    pub algorithm: Algorithm,
    pub ablation: Ablation,
    pub mask: ObsMask,
    pub reward_mode: RewardMode,
    pub actor_kind: ActorKind,
    pub unet_width: usize,
    pub gamma: f64,
    pub clip_eps: f64,
    pub seed: u64,
    pub frames: usize,
    pub updates: usize,
}

impl Manifest {
    pub fn new(cfg: &TrainerConfig, instance: &ScenarioInstance, frames: usize, updates: usize) -> Self {
        let env = cfg.env_config();
        Manifest {
            format_version: crate::checkpoint::VERSION,
            grid_size: env.grid_size,
            n_agents: env.n_agents,
            bounds: instance.bounds,
            algorithm: cfg.algorithm,
            ablation: cfg.ablation,
            mask: env.mask,
            reward_mode: env.reward.mode,
            actor_kind: cfg.ablation.actor_kind(),
            unet_width: cfg.unet_width,
            gamma: cfg.gamma,
            clip_eps: cfg.clip_eps,
            seed: cfg.seed,
            frames,
            updates,
        }
    }

    /// Trainer configuration able to hold the checkpointed networks.
    pub fn trainer_config(&self, base: &TrainerConfig) -> TrainerConfig {
        TrainerConfig {
            algorithm: self.algorithm,
            ablation: self.ablation,
            unet_width: self.unet_width,
            gamma: self.gamma,
            clip_eps: self.clip_eps,
            seed: self.seed,
            env: EnvConfig {
                grid_size: self.grid_size,
                n_agents: self.n_agents,
                ..base.env
            },
            ..*base
        }
    }

    /// Errors unless the checkpoint fits `instance` and the grid size.
    pub fn check_compatible(&self, instance: &ScenarioInstance, grid_size: usize) -> Result<()> {
        if self.grid_size != grid_size {
            return Err(Error::Validation(format!(
                "checkpoint grid size {} does not match {grid_size}",
                self.grid_size
            )));
        }
        let (a, b) = (self.bounds, instance.bounds);
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs()));
        if !(close(a.h0, b.h0) && close(a.h1, b.h1) && close(a.w0, b.w0) && close(a.w1, b.w1)) {
            return Err(Error::Validation(format!(
                "checkpoint bounds {a:?} do not match scenario bounds {b:?}"
            )));
        }
        Ok(())
    }
}

/// Lifetimes of the policy over several evaluation episodes.
pub fn evaluate(
    instance: &Arc<ScenarioInstance>,
    env_cfg: &EnvConfig,
    learners: &Learners,
    mode: ActMode,
    seeds: &[u64],
) -> Result<Vec<LifetimeReport>> {
    seeds
        .iter()
        .map(|&s| {
            let mut c = PolicyController::new(learners, mode, s);
            crate::env::simulate_lifetime(Arc::clone(instance), env_cfg, &mut c)
        })
        .collect()
}
