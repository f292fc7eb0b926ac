//! Central finite-difference checks of every hand-written backward pass in
//! double precision. Each case returns its worst relative error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wrsn_core::nn::*;
use wrsn_core::trainer::{actor_loss, critic_loss, ActorLossConfig, ActorSample, CriticSample};

pub const STEP: f64 = 1e-5;
pub const TOL: f64 = 1e-4;

/// Worst relative error of a check, or what went wrong.
pub type Outcome = Result<f64, String>;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn worst_of(outcomes: impl IntoIterator<Item = Outcome>) -> Outcome {
    outcomes.into_iter().try_fold(0.0f64, |w, o| Ok(w.max(o?)))
}

/// Compares `analytic[i]` with the central difference of `f` along
/// coordinate `i` for each index in `idx`. A coordinate whose perturbation
/// crosses a rectifier or pooling kink (the two one-sided differences
/// disagree) is not differentiable there and is skipped; at most a few may be.
fn check(label: &str, mut f: impl FnMut(&[f64]) -> f64, x: &[f64], analytic: &[f64], idx: &[usize]) -> Outcome {
    let mut xp = x.to_vec();
    let f0 = f(&xp);
    let mut worst = 0.0f64;
    let mut kinks = 0;
    for &i in idx {
        let orig = xp[i];
        xp[i] = orig + STEP;
        let fp = f(&xp);
        xp[i] = orig - STEP;
        let fm = f(&xp);
        xp[i] = orig;
        let num = (fp - fm) / (2.0 * STEP);
        let e = rel_err(analytic[i], num);
        if e >= TOL && rel_err((fp - f0) / STEP, (f0 - fm) / STEP) > 10.0 * TOL {
            kinks += 1;
            continue;
        }
        if e >= TOL {
            return Err(format!("{label}[{i}]: analytic {} vs numeric {num} (rel {e:e})", analytic[i]));
        }
        worst = worst.max(e);
    }
    if kinks * 50 > idx.len() {
        return Err(format!("{label}: {kinks} of {} coordinates sit on kinks", idx.len()));
    }
    Ok(worst)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn all_indices(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// First entry of every block plus `per_block` random entries of it.
fn block_indices(p: &ParamStore<f64>, rng: &mut ChaCha8Rng, per_block: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for b in &p.blocks {
        out.push(b.offset);
        for _ in 0..per_block {
            out.push(b.offset + rng.random_range(0..b.len()));
        }
    }
    out
}

/// Replaces every parameter by a random value so zero-initialized heads
/// also carry gradient downstream.
fn randomize(p: &mut ParamStore<f64>, rng: &mut ChaCha8Rng, scale: f64) {
    for v in &mut p.values {
        *v = rng.random_range(-scale..scale);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn conv() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut out = Vec::new();
    for (stride, pad, k) in [(1, 1, 3), (2, 2, 5), (2, 0, 3)] {
        let conv = Conv2d { weight: 0, bias: 3 * 2 * k * k, cin: 2, cout: 3, k, stride, pad };
        let (h, w) = (7, 6);
        let p = random_vec(&mut rng, conv.param_count(), 0.5);
        let x = random_vec(&mut rng, 2 * h * w, 1.0);
        let (y, ..) = conv.forward(&p, &x, h, w);
        let gy = random_vec(&mut rng, y.len(), 1.0);
        let loss = |p: &[f64], x: &[f64]| dot(&conv.forward(p, x, h, w).0, &gy);
        let mut g = vec![0.0; p.len()];
        let gx = conv.backward(&p, &x, h, w, &gy, &mut g, true).unwrap();
        let label = format!("conv s{stride} p{pad} k{k}");
        out.push(check(&format!("{label} params"), |q| loss(q, &x), &p, &g, &all_indices(p.len())));
        out.push(check(&format!("{label} input"), |q| loss(&p, q), &x, &gx, &all_indices(x.len())));
    }
    worst_of(out)
}

pub fn dense() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let d = Dense { weight: 0, bias: 5 * 7, nin: 7, nout: 5 };
    let p = random_vec(&mut rng, d.param_count(), 0.5);
    let x = random_vec(&mut rng, 7, 1.0);
    let gy = random_vec(&mut rng, 5, 1.0);
    let loss = |p: &[f64], x: &[f64]| dot(&d.forward(p, x), &gy);
    let mut g = vec![0.0; p.len()];
    let gx = d.backward(&p, &x, &gy, &mut g, true).unwrap();
    worst_of([
        check("dense params", |q| loss(q, &x), &p, &g, &all_indices(p.len())),
        check("dense input", |q| loss(&p, q), &x, &gx, &all_indices(x.len())),
    ])
}

pub fn relu() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // keep entries away from the kink
    let x: Vec<f64> = random_vec(&mut rng, 40, 1.0).into_iter().map(|v| v + 0.1 * v.signum()).collect();
    let gy = random_vec(&mut rng, 40, 1.0);
    let loss = |x: &[f64]| {
        let mut y = x.to_vec();
        relu_inplace(&mut y);
        dot(&y, &gy)
    };
    let mut y = x.clone();
    relu_inplace(&mut y);
    let mut gx = gy.clone();
    relu_backward(&y, &mut gx);
    check("relu", loss, &x, &gx, &all_indices(40))
}

pub fn max_pool() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (c, h, w) = (2, 6, 7);
    let x = random_vec(&mut rng, c * h * w, 1.0);
    let (y, idx) = max_pool2(&x, c, h, w);
    let gy = random_vec(&mut rng, y.len(), 1.0);
    let loss = |x: &[f64]| dot(&max_pool2(x, c, h, w).0, &gy);
    let gx = max_pool2_backward(&gy, &idx, x.len());
    check("max_pool2", loss, &x, &gx, &all_indices(x.len()))
}

pub fn upsample() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (c, h, w) = (3, 4, 5);
    let x = random_vec(&mut rng, c * h * w, 1.0);
    let gy = random_vec(&mut rng, c * 4 * h * w, 1.0);
    let loss = |x: &[f64]| dot(&upsample2(x, c, h, w), &gy);
    let gx = upsample2_backward(&gy, c, h, w);
    check("upsample2", loss, &x, &gx, &all_indices(x.len()))
}

pub fn adaptive_pool() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut out = Vec::new();
    for (h, w) in [(13, 11), (4, 4), (16, 16)] {
        let c = 2;
        let x = random_vec(&mut rng, c * h * w, 1.0);
        let gy = random_vec(&mut rng, c * 64, 1.0);
        let loss = |x: &[f64]| dot(&adaptive_avg_pool(x, c, h, w, 8), &gy);
        let gx = adaptive_avg_pool_backward(&gy, c, h, w, 8);
        out.push(check(&format!("adaptive_pool {h}x{w}"), loss, &x, &gx, &all_indices(x.len())));
    }
    worst_of(out)
}

/// Concatenation has no arithmetic; its backward is slicing.
pub fn concat() -> Outcome {
    let (a, b) = ([1.0, 2.0], [3.0, 4.0, 5.0]);
    if concat_channels(&a, &b) == vec![1.0, 2.0, 3.0, 4.0, 5.0] {
        Ok(0.0)
    } else {
        Err("concat_channels does not stack its inputs".into())
    }
}

pub fn critic() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let t = 32;
    let mut critic = Critic::<f64>::new(&mut rng);
    randomize(&mut critic.params, &mut rng, 0.1);
    let obs = random_vec(&mut rng, 4 * t * t, 1.0);
    let (_, cache) = critic.forward_cached(&obs, t).unwrap();
    let mut g = critic.params.zeros();
    critic.backward(&obs, t, &cache, 1.0, &mut g);
    let idx = block_indices(&critic.params, &mut rng, 12);
    let base = critic.clone();
    check(
        "critic",
        |q| {
            let mut c = base.clone();
            c.params.values.copy_from_slice(q);
            c.forward(&obs, t).unwrap()
        },
        &critic.params.values,
        &g,
        &idx,
    )
}

/// Scalar probe of an actor head: a fixed linear functional of the mean
/// entries and the clamped log-std entries.
fn actor_probe(head: &GaussianHead<f64>, wm: &[f64], ws: &[f64]) -> f64 {
    dot(&head.mean, wm) + dot(&head.log_std, ws)
}

fn actor_case(kind: ActorKind, seed: u64, t: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut actor = Actor::<f64>::new(kind, 4, &mut rng);
    randomize(actor.params_mut(), &mut rng, 0.2);
    let obs = random_vec(&mut rng, 4 * t * t, 1.0);
    let (head, cache) = actor.forward_cached(&obs, t).unwrap();
    let wm = random_vec(&mut rng, head.mean.len(), 1.0);
    let ws = random_vec(&mut rng, head.log_std.len(), 1.0);
    let mut g = actor.params().zeros();
    actor.backward(&obs, t, &cache, &wm, &ws, &mut g);
    let idx = block_indices(actor.params(), &mut rng, 12);
    let base = actor.clone();
    check(
        &format!("{kind:?} actor"),
        |q| {
            let mut a = base.clone();
            a.params_mut().values.copy_from_slice(q);
            actor_probe(&a.forward(&obs, t).unwrap(), &wm, &ws)
        },
        &actor.params().values,
        &g,
        &idx,
    )
}

pub fn unet_actor() -> Outcome {
    actor_case(ActorKind::Map, 8, 16)
}

pub fn vector_actor() -> Outcome {
    worst_of([actor_case(ActorKind::Vector, 9, 16), actor_case(ActorKind::Vector, 19, 32)])
}

pub fn gaussian_log_prob() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut out = Vec::new();
    for shared in [true, false] {
        let n = 5;
        let mean = random_vec(&mut rng, n, 1.0);
        let log_std = random_vec(&mut rng, if shared { 1 } else { n }, 1.0);
        let x = random_vec(&mut rng, n, 2.0);
        let head = GaussianHead { mean: mean.clone(), log_std: log_std.clone() };
        let (gm, gs) = log_prob_grad(&head, &x);
        let m = mean.len();
        let mut joint = mean;
        joint.extend(&log_std);
        let mut analytic = gm;
        analytic.extend(&gs);
        out.push(check(
            "log_prob",
            |q| log_prob(&GaussianHead { mean: q[..m].to_vec(), log_std: q[m..].to_vec() }, &x),
            &joint,
            &analytic,
            &all_indices(joint.len()),
        ));
    }
    worst_of(out)
}

pub fn actor_objective() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let t = 8;
    let mut actor = Actor::<f64>::new(ActorKind::Map, 4, &mut rng);
    randomize(actor.params_mut(), &mut rng, 0.2);
    let obs: Vec<Vec<f64>> = (0..3).map(|_| random_vec(&mut rng, 4 * t * t, 1.0)).collect();
    let mut latents = Vec::new();
    let mut olds = Vec::new();
    // ratios inside, above and below the clip band, none near its edges
    for (o, ratio) in obs.iter().zip([0.95, 1.5, 0.6]) {
        let head = actor.forward(o, t).unwrap();
        let x: Vec<f64> = head.mean.iter().map(|m| m + rng.random_range(-0.3..0.3)).collect();
        olds.push(log_prob(&head, &x) - f64::ln(ratio));
        latents.push(x);
    }
    let advs = [0.7, 1.3, -0.4];
    let cfg = ActorLossConfig { clip_eps: 0.2, normalize_advantages: true, entropy_coef: 0.01 };
    let batch: Vec<ActorSample<'_, f64>> = (0..3)
        .map(|i| ActorSample { obs: &obs[i], latent: &latents[i], old_log_prob: olds[i], advantage: advs[i] })
        .collect();
    let mut g = actor.params().zeros();
    actor_loss(&actor, t, &batch, &cfg, Some(&mut g)).unwrap();
    let idx = block_indices(actor.params(), &mut rng, 12);
    let base = actor.clone();
    check(
        "actor loss",
        |q| {
            let mut a = base.clone();
            a.params_mut().values.copy_from_slice(q);
            actor_loss(&a, t, &batch, &cfg, None).unwrap().objective
        },
        &actor.params().values,
        &g,
        &idx,
    )
}

pub fn critic_objective() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let t = 8;
    let mut critic = Critic::<f64>::new(&mut rng);
    randomize(&mut critic.params, &mut rng, 0.1);
    let obs: Vec<Vec<f64>> = (0..4).map(|_| random_vec(&mut rng, 4 * t * t, 1.0)).collect();
    let batch = [
        CriticSample { o_start: &obs[0][..], o_end: &obs[1][..], reward: 0.8, terminal: false },
        CriticSample { o_start: &obs[1][..], o_end: &obs[2][..], reward: -0.3, terminal: false },
        CriticSample { o_start: &obs[2][..], o_end: &obs[3][..], reward: 1.1, terminal: true },
    ];
    let mut g = critic.params.zeros();
    critic_loss(&critic, t, &batch, 0.99, Some(&mut g)).unwrap();
    let idx = block_indices(&critic.params, &mut rng, 12);
    let base = critic.clone();
    check(
        "critic loss",
        |q| {
            let mut c = base.clone();
            c.params.values.copy_from_slice(q);
            critic_loss(&c, t, &batch, 0.99, None).unwrap()
        },
        &critic.params.values,
        &g,
        &idx,
    )
}

/// Every case, by name.
pub const CASES: [(&str, fn() -> Outcome); 14] = [
    ("conv", conv),
    ("dense", dense),
    ("relu", relu),
    ("max_pool", max_pool),
    ("upsample", upsample),
    ("adaptive_pool", adaptive_pool),
    ("concat", concat),
    ("critic", critic),
    ("unet_actor", unet_actor),
    ("vector_actor", vector_actor),
    ("gaussian_log_prob", gaussian_log_prob),
    ("actor_objective", actor_objective),
    ("critic_objective", critic_objective),
    ("clamped_log_std", clamped_log_std),
];

/// A log-std parked beyond its clamp passes no gradient.
pub fn clamped_log_std() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t = 8;
    let mut actor = Actor::<f64>::new(ActorKind::Map, 4, &mut rng);
    actor.params_mut().get_mut("log_std").unwrap()[0] = 3.5;
    let obs = random_vec(&mut rng, 4 * t * t, 1.0);
    let (head, cache) = actor.forward_cached(&obs, t).unwrap();
    if head.log_std[0] != LOG_STD_MAX {
        return Err(format!("log_std not clamped: {}", head.log_std[0]));
    }
    let mut g = actor.params().zeros();
    actor.backward(&obs, t, &cache, &vec![0.0; t * t], &[1.0], &mut g);
    let b = actor.params().block("log_std").unwrap().offset;
    if g[b] == 0.0 {
        Ok(0.0)
    } else {
        Err(format!("clamped log_std received gradient {}", g[b]))
    }
}
