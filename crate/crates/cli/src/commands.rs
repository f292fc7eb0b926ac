use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use serde::Serialize;
use wrsn_core::action::{Region, Selection};
use wrsn_core::checkpoint;
use wrsn_core::energy::write_event_log;
use wrsn_core::env::{
    baseline_lifetime, run_episode, Controller, Env, EnvConfig, EnvEvent, IdleController, RandomController,
};
use wrsn_core::observation::Observation;
use wrsn_core::scenario::{generate_instance, load_instance, save_instance};
use wrsn_core::trainer::{policy_decision, train as run_training, write_log_csv, Learners, Manifest, PolicyController, TrainerConfig};
use wrsn_core::{Error, ScenarioInstance};

use crate::config::*;
use crate::rundir::RunDir;

fn instance_of(src: &ScenarioSource) -> Result<Arc<ScenarioInstance>> {
    let inst = match src {
        ScenarioSource::Path(p) => load_instance(p)?,
        ScenarioSource::Generate(g) => generate_instance(g.seed, (g.area[0], g.area[1]), g.targets, g.sensors, g.params.clone())?,
    };
    Ok(Arc::new(inst))
}

/// Learners restored from a checkpoint, checked against the scenario and
/// environment they are about to act in.
fn load_model(ckpt: &Path, instance: &ScenarioInstance, env: &EnvConfig) -> Result<Learners> {
    let manifest = read_manifest(ckpt)?;
    manifest.check_compatible(instance, env.grid_size)?;
    if manifest.n_agents != env.n_agents {
        return Err(Error::Validation(format!(
            "checkpoint was trained with {} chargers, environment has {}",
            manifest.n_agents, env.n_agents
        ))
        .into());
    }
    let cfg = manifest.trainer_config(&TrainerConfig {
        env: *env,
        ..TrainerConfig::default()
    });
    let mut learners = Learners::new(&cfg);
    let file = checkpoint_file(ckpt);
    learners
        .load_blocks(&checkpoint::read(&file)?)
        .with_context(|| format!("loading {}", file.display()))?;
    Ok(learners)
}

pub fn generate(c: &GenerateConfig, dir: &RunDir) -> Result<()> {
    let inst = generate_instance(c.seed, (c.area[0], c.area[1]), c.targets, c.sensors, c.params.clone())?;
    let path = dir.file("scenario.json");
    save_instance(&inst, &path)?;
    println!("{}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    #[serde(rename = "F_B")]
    f_b: f64,
    #[serde(rename = "F0")]
    f0: f64,
    improvement: f64,
    censored: bool,
    baseline_censored: bool,
    seed: u64,
    dt: f64,
    controller: &'a ControllerSpec,
}

pub fn simulate(c: &SimulateConfig, dir: &RunDir) -> Result<()> {
    let inst = instance_of(&c.scenario)?;
    let base = baseline_lifetime(Arc::clone(&inst), &c.env)?;
    let learners;
    let mut idle = IdleController;
    let mut random = RandomController::new(c.seed);
    let mut policy;
    let ctl: &mut dyn Controller = match &c.controller {
        ControllerSpec::None => &mut idle,
        ControllerSpec::Random => &mut random,
        ControllerSpec::Checkpoint(p) => {
            learners = load_model(p, &inst, &c.env)?;
            policy = PolicyController::new(&learners, c.mode.into(), c.seed);
            &mut policy
        }
    };
    let (f0, censored, events) = if c.controller == ControllerSpec::None {
        (base.lifetime, base.censored, Vec::new())
    } else {
        let mut env = Env::new(Arc::clone(&inst), c.env);
        let out = run_episode(&mut env, ctl)?;
        (out.lifetime, out.censored, out.events)
    };
    let report = SimulateReport {
        f_b: base.lifetime,
        f0,
        improvement: f0 / base.lifetime,
        censored,
        baseline_censored: base.censored,
        seed: c.seed,
        dt: c.env.sim.dt,
        controller: &c.controller,
    };
    dir.write_json("result.json", &report)?;
    if c.events {
        let p = dir.file("events.ndjson");
        let f = std::fs::File::create(&p).with_context(|| format!("creating {}", p.display()))?;
        let mut w = BufWriter::new(f);
        write_event_log(&mut w, &events)?;
        w.flush()?;
    }
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

pub fn train(c: &TrainConfig, dir: &RunDir) -> Result<()> {
    let inst = instance_of(&c.scenario)?;
    let log_path = dir.file("train_log.csv");
    let mut log = BufWriter::new(std::fs::File::create(&log_path).with_context(|| format!("creating {}", log_path.display()))?);
    writeln!(log, "{}", wrsn_core::trainer::LOG_HEADER)?;
    let start = std::time::Instant::now();
    let out = run_training(Arc::clone(&inst), &c.trainer, |row, _| {
        writeln!(log, "{}", row.csv_row()).and_then(|_| log.flush()).map_err(|e| Error::Validation(e.to_string()))?;
        eprintln!(
            "update {:>4}  frames {:>8}  improvement {:.4}  ({:.0} s)",
            row.update,
            row.frames,
            row.lifetime_improvement,
            start.elapsed().as_secs_f64()
        );
        Ok(())
    })?;
    drop(log);
    // the streamed log must equal the canonical one
    let mut canonical = Vec::new();
    write_log_csv(&mut canonical, &out.log)?;
    std::fs::write(&log_path, &canonical)?;
    checkpoint::write(&dir.file("model.ckpt"), &out.learners.to_blocks())?;
    let manifest = Manifest::new(&c.trainer, &inst, out.frames, out.log.len());
    dir.write_json("model.json", &manifest)?;
    println!(
        "{}",
        serde_json::json!({
            "frames": out.frames,
            "updates": out.log.len(),
            "baseline": out.baseline.lifetime,
            "final_improvement": out.log.last().map(|r| r.lifetime_improvement),
            "checkpoint": dir.path.join("model.ckpt"),
        })
    );
    Ok(())
}

/// 8-bit binary PGM, scaled so the channel maximum is white; a channel that
/// is zero everywhere stays black.
fn pgm(values: &[f32], t: usize) -> Vec<u8> {
    let max = values.iter().copied().fold(0.0f32, f32::max);
    let mut out = format!("P5\n{t} {t}\n255\n").into_bytes();
    out.extend(values.iter().map(|&v| if max > 0.0 { (v.max(0.0) / max * 255.0).round() as u8 } else { 0 }));
    out
}

fn observation_csv(o: &Observation) -> String {
    let mut s = String::from("channel,row,col,value\n");
    for c in 0..4 {
        for i in 0..o.t {
            for k in 0..o.t {
                s.push_str(&format!("{},{i},{k},{}\n", c + 1, o.at(c, i, k)));
            }
        }
    }
    s
}

#[derive(Serialize)]
struct Overlay {
    agent: usize,
    time: f64,
    /// Row-major `T x T` charging probabilities (map actor only).
    probabilities: Option<Vec<Vec<f64>>>,
    cell: Option<(usize, usize)>,
    p_max: Option<f64>,
    region: Option<Region>,
    point: [f64; 2],
    charging_time: f64,
}

pub fn inspect(c: &InspectConfig, dir: &RunDir) -> Result<()> {
    let inst = instance_of(&c.scenario)?;
    let learners = match &c.checkpoint {
        Some(p) => Some(load_model(p, &inst, &c.env)?),
        None => None,
    };
    let mut env = Env::new(Arc::clone(&inst), c.env);
    let mut warmup = RandomController::new(c.seed);
    let mut taken = 0;
    let ev = loop {
        match env.next_event()? {
            EnvEvent::Decision(ev) if taken >= c.after && ev.agent_id == c.agent => break ev,
            EnvEvent::Decision(ev) => {
                let d = warmup.decide(&ev, &env)?;
                env.act(ev.agent_id, d)?;
                taken += 1;
            }
            EnvEvent::Finished(end) => {
                return Err(Error::Validation(format!("episode ended at t = {} s before the requested decision", end.time)).into())
            }
        }
    };
    let o = &ev.observation;
    for ch in 0..4 {
        dir.write_bytes(&format!("channel_{}.pgm", ch + 1), &pgm(o.channel(ch), o.t))?;
    }
    dir.write_bytes("observation.csv", observation_csv(o).as_bytes())?;
    if let Some(learners) = &learners {
        let actor = &learners.actors[learners.actor_of(c.agent)];
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(c.seed);
        let out = policy_decision(actor, o, &env, c.mode.into(), &mut rng)?;
        let sel: Option<Selection> = out.selection;
        let u = out.decision.action;
        let overlay = Overlay {
            agent: c.agent,
            time: ev.time,
            probabilities: out.probabilities.map(|p| p.chunks(o.t).map(<[f64]>::to_vec).collect()),
            cell: sel.map(|s| s.cell),
            p_max: sel.map(|s| s.p_max),
            region: sel.map(|s| s.region),
            point: [u.a, u.b],
            charging_time: u.c,
        };
        dir.write_json("overlay.json", &overlay)?;
    }
    println!("{}", dir.path.display());
    Ok(())
}
