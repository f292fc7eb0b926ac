//! Command-line arguments and the resolved, serializable run configurations
//! echoed into every run directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use wrsn_core::env::EnvConfig;
use wrsn_core::observation::ObsMask;
use wrsn_core::trainer::{ActMode, Manifest, TrainerConfig};
use wrsn_core::EnergyParams;

/// Bad flags, files or values supplied by the user.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub seed: u64,
    pub targets: usize,
    pub sensors: usize,
    /// Width and height (m).
    pub area: [f64; 2],
    pub params: EnergyParams,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSource {
    Path(PathBuf),
    Generate(GenerateConfig),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ControllerSpec {
    None,
    Random,
    Checkpoint(PathBuf),
}

impl FromStr for ControllerSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(ControllerSpec::None),
            "random" => Ok(ControllerSpec::Random),
            _ => match s.strip_prefix("checkpoint:") {
                Some(p) if !p.is_empty() => Ok(ControllerSpec::Checkpoint(p.into())),
                _ => Err(format!("expected none, random or checkpoint:<path>, got `{s}`")),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Sample latents from the policy.
    Sample,
    /// Act on the policy mean.
    Mean,
}

impl From<EvalMode> for ActMode {
    fn from(m: EvalMode) -> Self {
        match m {
            EvalMode::Sample => ActMode::Sample,
            EvalMode::Mean => ActMode::Mean,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub scenario: ScenarioSource,
    pub controller: ControllerSpec,
    pub seed: u64,
    pub mode: EvalMode,
    pub env: EnvConfig,
    /// Also write the controller run's event log.
    pub events: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub scenario: ScenarioSource,
    pub trainer: TrainerConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InspectConfig {
    pub scenario: ScenarioSource,
    pub checkpoint: Option<PathBuf>,
    pub env: EnvConfig,
    pub agent: usize,
    /// Decisions taken by a seeded random controller before rendering.
    pub after: usize,
    pub seed: u64,
    pub mode: EvalMode,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Generate(GenerateConfig),
    Simulate(SimulateConfig),
    Train(TrainConfig),
    Inspect(InspectConfig),
}

impl RunConfig {
    pub fn name(&self) -> &'static str {
        match self {
            RunConfig::Generate(_) => "generate",
            RunConfig::Simulate(_) => "simulate",
            RunConfig::Train(_) => "train",
            RunConfig::Inspect(_) => "inspect",
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("reading {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
    }
}

fn parse_area(s: &str) -> std::result::Result<[f64; 2], String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok([p(w)?, p(h)?])
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    targets: usize,
    #[arg(long, default_value_t = 20)]
    sensors: usize,
    /// Field size in meters, `WIDTHxHEIGHT`.
    #[arg(long, default_value = "1000x1000", value_parser = parse_area)]
    area: [f64; 2],
    /// Energy-model overrides as a JSON object file.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Bits per packet.
    #[arg(long)]
    b_packet: Option<f64>,
}

impl GenerateArgs {
    pub fn resolve(self) -> Result<RunConfig> {
        let mut params: EnergyParams = match &self.params {
            Some(p) => read_json(p)?,
            None => EnergyParams::default(),
        };
        if let Some(b) = self.b_packet {
            params.b_packet = b;
        }
        Ok(RunConfig::Generate(GenerateConfig {
            seed: self.seed,
            targets: self.targets,
            sensors: self.sensors,
            area: self.area,
            params,
        }))
    }
}

/// `--scenario FILE` or `--generate seed=1,targets=5,sensors=20,area=400x400[,b_packet=..]`.
#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct ScenarioArgs {
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Generate the scenario in place from comma-separated `key=value` pairs.
    #[arg(long)]
    generate: Option<String>,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioSource> {
        if let Some(p) = &self.scenario {
            let abs = std::fs::canonicalize(p).map_err(|e| config_err(format!("scenario {}: {e}", p.display())))?;
            return Ok(ScenarioSource::Path(abs));
        }
        let spec = self.generate.as_deref().unwrap_or_default();
        let mut g = GenerateConfig {
            seed: 1,
            targets: 5,
            sensors: 20,
            area: [1000.0, 1000.0],
            params: EnergyParams::default(),
        };
        for pair in spec.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| config_err(format!("generator spec: expected key=value, got `{pair}`")))?;
            let bad = |e: &dyn fmt::Display| config_err(format!("generator spec `{k}`: {e}"));
            match k.trim() {
                "seed" => g.seed = v.trim().parse().map_err(|e| bad(&e))?,
                "targets" => g.targets = v.trim().parse().map_err(|e| bad(&e))?,
                "sensors" => g.sensors = v.trim().parse().map_err(|e| bad(&e))?,
                "area" => g.area = parse_area(v).map_err(|e| bad(&e))?,
                "b_packet" => g.params.b_packet = v.trim().parse().map_err(|e| bad(&e))?,
                other => return Err(config_err(format!("generator spec: unknown key `{other}`"))),
            }
        }
        Ok(ScenarioSource::Generate(g))
    }
}

/// Environment overrides shared by simulate and inspect.
#[derive(Args, Debug)]
pub struct EnvArgs {
    /// Number of mobile chargers (default 3).
    #[arg(long)]
    agents: Option<usize>,
    /// Observation cells per axis (default 100).
    #[arg(long)]
    grid_size: Option<usize>,
    /// Episode time limit in seconds.
    #[arg(long)]
    t_max: Option<f64>,
    /// Simulation step in seconds.
    #[arg(long)]
    dt: Option<f64>,
}

impl EnvArgs {
    fn apply(&self, env: &mut EnvConfig) {
        if let Some(v) = self.agents {
            env.n_agents = v;
        }
        if let Some(v) = self.grid_size {
            env.grid_size = v;
        }
        if let Some(v) = self.t_max {
            env.t_max = v;
        }
        if let Some(v) = self.dt {
            env.sim.dt = v;
        }
    }
}

/// Environment of a checkpointed policy, with explicit overrides on top.
fn checkpoint_env(ckpt: &Path, base: EnvConfig, over: &EnvArgs) -> Result<EnvConfig> {
    let manifest = read_manifest(ckpt)?;
    let mut env = manifest
        .trainer_config(&TrainerConfig {
            env: base,
            ..TrainerConfig::default()
        })
        .env_config();
    over.apply(&mut env);
    Ok(env)
}

/// The checkpoint file itself, given the file or its run directory.
pub fn checkpoint_file(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("model.ckpt")
    } else {
        p.to_path_buf()
    }
}

pub fn read_manifest(ckpt: &Path) -> Result<Manifest> {
    let m = checkpoint_file(ckpt).with_file_name("model.json");
    read_json(&m).with_context(|| format!("checkpoint manifest {}", m.display()))
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// `none`, `random` or `checkpoint:<path>`.
    #[arg(long, default_value = "none")]
    controller: ControllerSpec,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// How a checkpointed policy acts.
    #[arg(long, value_enum, default_value_t = EvalMode::Sample)]
    mode: EvalMode,
    #[command(flatten)]
    env: EnvArgs,
    /// Write the controller run's event log as NDJSON.
    #[arg(long)]
    events: bool,
}

impl SimulateArgs {
    pub fn resolve(self) -> Result<RunConfig> {
        let mut env = EnvConfig::default();
        let controller = match self.controller {
            ControllerSpec::Checkpoint(p) => {
                let abs = std::fs::canonicalize(&p).map_err(|e| config_err(format!("checkpoint {}: {e}", p.display())))?;
                env = checkpoint_env(&abs, env, &self.env)?;
                ControllerSpec::Checkpoint(abs)
            }
            other => {
                self.env.apply(&mut env);
                other
            }
        };
        Ok(RunConfig::Simulate(SimulateConfig {
            scenario: self.scenario.resolve()?,
            controller,
            seed: self.seed,
            mode: self.mode,
            env,
            events: self.events,
        }))
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Trainer configuration JSON; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// amappo, ppo or ippo.
    #[arg(long)]
    algo: Option<wrsn_core::trainer::Algorithm>,
    /// FULL, NO_1, NO_2_3_4, NO_EX, NO_GE or NO_PM.
    #[arg(long)]
    ablation: Option<wrsn_core::trainer::Ablation>,
    #[arg(long)]
    max_frames: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Parallel rollout threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Channel width of the first U-Net block.
    #[arg(long)]
    unet_width: Option<usize>,
    /// Frames per agent buffer that trigger an update.
    #[arg(long)]
    buffer_capacity: Option<usize>,
    #[command(flatten)]
    env: EnvArgs,
}

impl TrainArgs {
    pub fn resolve(self) -> Result<RunConfig> {
        let mut t: TrainerConfig = match &self.config {
            Some(p) => read_json(p)?,
            None => TrainerConfig::default(),
        };
        if let Some(v) = self.algo {
            t.algorithm = v;
        }
        if let Some(v) = self.ablation {
            t.ablation = v;
        }
        if let Some(v) = self.max_frames {
            t.max_frames = v;
        }
        if let Some(v) = self.seed {
            t.seed = v;
        }
        if let Some(v) = self.workers {
            t.workers = v;
        }
        if let Some(v) = self.unet_width {
            t.unet_width = v;
        }
        if let Some(v) = self.buffer_capacity {
            t.buffer_capacity = v;
        }
        self.env.apply(&mut t.env);
        t.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(RunConfig::Train(TrainConfig {
            scenario: self.scenario.resolve()?,
            trainer: t,
        }))
    }
}

#[derive(Args, Debug)]
pub struct InspectArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Trained model (file or run directory) for the selection overlay.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Observation mask: FULL, NO_1 or NO_2_3_4.
    #[arg(long)]
    mask: Option<String>,
    /// Observing charger.
    #[arg(long, default_value_t = 0)]
    agent: usize,
    /// Random-controller decisions to play before rendering.
    #[arg(long, default_value_t = 0)]
    after: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = EvalMode::Mean)]
    mode: EvalMode,
    #[command(flatten)]
    env: EnvArgs,
}

impl InspectArgs {
    pub fn resolve(self) -> Result<RunConfig> {
        let (checkpoint, mut env) = match &self.checkpoint {
            Some(p) => {
                let abs = std::fs::canonicalize(p).map_err(|e| config_err(format!("checkpoint {}: {e}", p.display())))?;
                let env = checkpoint_env(&abs, EnvConfig::default(), &self.env)?;
                (Some(abs), env)
            }
            None => {
                let mut env = EnvConfig::default();
                self.env.apply(&mut env);
                (None, env)
            }
        };
        if let Some(m) = &self.mask {
            env.mask = serde_json::from_value::<ObsMask>(serde_json::Value::String(m.to_uppercase()))
                .map_err(|_| config_err(format!("unknown mask `{m}` (FULL, NO_1, NO_2_3_4)")))?;
        }
        if self.agent >= env.n_agents {
            return Err(config_err(format!("agent {} out of range for {} chargers", self.agent, env.n_agents)));
        }
        Ok(RunConfig::Inspect(InspectConfig {
            scenario: self.scenario.resolve()?,
            checkpoint,
            env,
            agent: self.agent,
            after: self.after,
            seed: self.seed,
            mode: self.mode,
        }))
    }
}
