//! Critic CNN, U-Net map actor and vector actor.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gaussian::GaussianHead;
use super::layers::*;
use super::{Init, ParamStore, Scalar};
use crate::error::{Error, Result};
use crate::observation::CHANNELS;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

const POOL: usize = 8;

fn conv<S: Scalar>(
    p: &mut ParamStore<S>,
    name: &str,
    cin: usize,
    cout: usize,
    k: usize,
    stride: usize,
    pad: usize,
    zero: bool,
    rng: &mut impl Rng,
) -> Conv2d {
    let fan_in = cin * k * k;
    let init = if zero { Init::Zeros } else { Init::He { fan_in } };
    let weight = p.add(format!("{name}.weight"), &[cout, cin, k, k], init, rng);
    let bias = p.add(format!("{name}.bias"), &[cout], Init::Zeros, rng);
    Conv2d { weight, bias, cin, cout, k, stride, pad }
}

fn dense<S: Scalar>(p: &mut ParamStore<S>, name: &str, nin: usize, nout: usize, zero: bool, rng: &mut impl Rng) -> Dense {
    let init = if zero { Init::Zeros } else { Init::He { fan_in: nin } };
    let weight = p.add(format!("{name}.weight"), &[nout, nin], init, rng);
    let bias = p.add(format!("{name}.bias"), &[nout], Init::Zeros, rng);
    Dense { weight, bias, nin, nout }
}

fn check_obs(len: usize, t: usize) -> Result<()> {
    if len != CHANNELS * t * t {
        return Err(Error::Shape {
            expected: format!("{CHANNELS}x{t}x{t}"),
            got: format!("{len} values"),
        });
    }
    Ok(())
}

fn clamp_log_std<S: Scalar>(raw: S) -> S {
    S::from_f64(raw.as_f64().clamp(LOG_STD_MIN, LOG_STD_MAX))
}

fn log_std_grad_passes(raw: f64) -> bool {
    (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw)
}

/// Shared strided trunk: three 5x5 stride-2 convolutions, adaptive pooling to
/// 8x8 and a 4096-to-100 dense layer.
#[derive(Debug, Clone, PartialEq)]
struct Trunk {
    convs: [Conv2d; 3],
    fc: Dense,
}

#[derive(Debug, Clone)]
struct TrunkCache<S> {
    /// Rectified conv outputs with their spatial sizes.
    acts: Vec<(Vec<S>, usize, usize)>,
    pooled: Vec<S>,
    hidden: Vec<S>,
}

impl Trunk {
    fn new<S: Scalar>(p: &mut ParamStore<S>, rng: &mut impl Rng) -> Self {
        let convs = [
            conv(p, "conv1", CHANNELS, 16, 5, 2, 2, false, rng),
            conv(p, "conv2", 16, 32, 5, 2, 2, false, rng),
            conv(p, "conv3", 32, 64, 5, 2, 2, false, rng),
        ];
        let fc = dense(p, "fc1", 64 * POOL * POOL, 100, false, rng);
        Trunk { convs, fc }
    }

    fn forward<S: Scalar>(&self, p: &[S], obs: &[S], t: usize) -> TrunkCache<S> {
        let mut acts: Vec<(Vec<S>, usize, usize)> = Vec::with_capacity(3);
        let (mut h, mut w) = (t, t);
        for (i, c) in self.convs.iter().enumerate() {
            let input: &[S] = if i == 0 { obs } else { &acts[i - 1].0 };
            let (mut y, ho, wo) = c.forward(p, input, h, w);
            relu_inplace(&mut y);
            acts.push((y, ho, wo));
            (h, w) = (ho, wo);
        }
        let pooled = adaptive_avg_pool(&acts[2].0, 64, h, w, POOL);
        let mut hidden = self.fc.forward(p, &pooled);
        relu_inplace(&mut hidden);
        TrunkCache { acts, pooled, hidden }
    }

    fn backward<S: Scalar>(&self, p: &[S], obs: &[S], t: usize, cache: &TrunkCache<S>, mut gh: Vec<S>, g: &mut [S]) {
        relu_backward(&cache.hidden, &mut gh);
        let gpool = self.fc.backward(p, &cache.pooled, &gh, g, true).expect("input grad");
        let (_, h3, w3) = cache.acts[2];
        let mut gy = adaptive_avg_pool_backward(&gpool, 64, h3, w3, POOL);
        for i in (0..3).rev() {
            relu_backward(&cache.acts[i].0, &mut gy);
            let (input, h, w): (&[S], usize, usize) = if i == 0 {
                (obs, t, t)
            } else {
                let (a, h, w) = &cache.acts[i - 1];
                (a, *h, *w)
            };
            match self.convs[i].backward(p, input, h, w, &gy, g, i > 0) {
                Some(gx) => gy = gx,
                None => break,
            }
        }
    }
}

/// State-value network.
#[derive(Debug, Clone, PartialEq)]
pub struct Critic<S> {
    pub params: ParamStore<S>,
    trunk: Trunk,
    head: Dense,
}

#[derive(Debug, Clone)]
pub struct CriticCache<S> {
    trunk: TrunkCache<S>,
}

impl<S: Scalar> Critic<S> {
    pub fn new(rng: &mut impl Rng) -> Self {
        let mut params = ParamStore::default();
        let trunk = Trunk::new(&mut params, rng);
        let head = dense(&mut params, "fc2", 100, 1, true, rng);
        Critic { params, trunk, head }
    }

    /// Same architecture with different parameter values (and precision).
    pub fn with_params<T: Scalar>(&self, params: ParamStore<T>) -> Critic<T> {
        assert_eq!(params.blocks, self.params.blocks, "parameter layout");
        Critic {
            params,
            trunk: self.trunk.clone(),
            head: self.head,
        }
    }

    pub fn forward(&self, obs: &[S], t: usize) -> Result<S> {
        Ok(self.forward_cached(obs, t)?.0)
    }

    pub fn forward_cached(&self, obs: &[S], t: usize) -> Result<(S, CriticCache<S>)> {
        check_obs(obs.len(), t)?;
        let p = &self.params.values;
        let trunk = self.trunk.forward(p, obs, t);
        let v = self.head.forward(p, &trunk.hidden)[0];
        Ok((v, CriticCache { trunk }))
    }

    /// Adds `gv * dV/dparams` into `g`.
    pub fn backward(&self, obs: &[S], t: usize, cache: &CriticCache<S>, gv: S, g: &mut [S]) {
        let p = &self.params.values;
        let gh = self.head.backward(p, &cache.trunk.hidden, &[gv], g, true).expect("input grad");
        self.trunk.backward(p, obs, t, &cache.trunk, gh, g);
    }
}

/// U-Net producing a mean map over the grid plus one shared log-std.
#[derive(Debug, Clone, PartialEq)]
pub struct UNetActor<S> {
    pub params: ParamStore<S>,
    pub width: usize,
    inc: Conv2d,
    down1: Conv2d,
    down2: Conv2d,
    up1: Conv2d,
    up2: Conv2d,
    out: Conv2d,
    log_std: usize,
}

#[derive(Debug, Clone)]
pub struct UNetCache<S> {
    x1: Vec<S>,
    p1: Vec<S>,
    i1: Vec<usize>,
    x2: Vec<S>,
    p2: Vec<S>,
    i2: Vec<usize>,
    x3: Vec<S>,
    cat1: Vec<S>,
    x4: Vec<S>,
    cat2: Vec<S>,
    x5: Vec<S>,
}

impl<S: Scalar> UNetActor<S> {
    /// `width` is the channel count of the first block (64 in the reference
    /// layout); deeper blocks use 2x and 4x.
    pub fn new(width: usize, rng: &mut impl Rng) -> Self {
        let w = width;
        let mut p = ParamStore::default();
        let inc = conv(&mut p, "inc", CHANNELS, w, 3, 1, 1, false, rng);
        let down1 = conv(&mut p, "down1", w, 2 * w, 3, 1, 1, false, rng);
        let down2 = conv(&mut p, "down2", 2 * w, 4 * w, 3, 1, 1, false, rng);
        let up1 = conv(&mut p, "up1", 6 * w, 2 * w, 3, 1, 1, false, rng);
        let up2 = conv(&mut p, "up2", 3 * w, w, 3, 1, 1, false, rng);
        let out = conv(&mut p, "out_mean", w, 1, 3, 1, 1, true, rng);
        let log_std = p.add("log_std", &[1], Init::Zeros, rng);
        UNetActor {
            params: p,
            width,
            inc,
            down1,
            down2,
            up1,
            up2,
            out,
            log_std,
        }
    }

    pub fn with_params<T: Scalar>(&self, params: ParamStore<T>) -> UNetActor<T> {
        assert_eq!(params.blocks, self.params.blocks, "parameter layout");
        UNetActor {
            params,
            width: self.width,
            inc: self.inc,
            down1: self.down1,
            down2: self.down2,
            up1: self.up1,
            up2: self.up2,
            out: self.out,
            log_std: self.log_std,
        }
    }

    pub fn forward_cached(&self, obs: &[S], t: usize) -> Result<(GaussianHead<S>, UNetCache<S>)> {
        check_obs(obs.len(), t)?;
        if t % 4 != 0 {
            return Err(Error::Shape {
                expected: "grid size divisible by 4".into(),
                got: t.to_string(),
            });
        }
        let p = &self.params.values;
        let w = self.width;
        let (h2, h4) = (t / 2, t / 4);
        let (mut x1, ..) = self.inc.forward(p, obs, t, t);
        relu_inplace(&mut x1);
        let (p1, i1) = max_pool2(&x1, w, t, t);
        let (mut x2, ..) = self.down1.forward(p, &p1, h2, h2);
        relu_inplace(&mut x2);
        let (p2, i2) = max_pool2(&x2, 2 * w, h2, h2);
        let (mut x3, ..) = self.down2.forward(p, &p2, h4, h4);
        relu_inplace(&mut x3);
        let cat1 = concat_channels(&upsample2(&x3, 4 * w, h4, h4), &x2);
        let (mut x4, ..) = self.up1.forward(p, &cat1, h2, h2);
        relu_inplace(&mut x4);
        let cat2 = concat_channels(&upsample2(&x4, 2 * w, h2, h2), &x1);
        let (mut x5, ..) = self.up2.forward(p, &cat2, t, t);
        relu_inplace(&mut x5);
        let (mean, ..) = self.out.forward(p, &x5, t, t);
        let head = GaussianHead {
            mean,
            log_std: vec![clamp_log_std(p[self.log_std])],
        };
        Ok((
            head,
            UNetCache {
                x1,
                p1,
                i1,
                x2,
                p2,
                i2,
                x3,
                cat1,
                x4,
                cat2,
                x5,
            },
        ))
    }

    pub fn backward(&self, obs: &[S], t: usize, c: &UNetCache<S>, gmean: &[S], glog_std: &[S], g: &mut [S]) {
        let p = &self.params.values;
        let w = self.width;
        let (h2, h4) = (t / 2, t / 4);
        if log_std_grad_passes(p[self.log_std].as_f64()) {
            g[self.log_std] += glog_std[0];
        }
        let mut gx5 = self.out.backward(p, &c.x5, t, t, gmean, g, true).expect("grad");
        relu_backward(&c.x5, &mut gx5);
        let gcat2 = self.up2.backward(p, &c.cat2, t, t, &gx5, g, true).expect("grad");
        let (gu2, gx1_skip) = gcat2.split_at(2 * w * t * t);
        let mut gx4 = upsample2_backward(gu2, 2 * w, h2, h2);
        relu_backward(&c.x4, &mut gx4);
        let gcat1 = self.up1.backward(p, &c.cat1, h2, h2, &gx4, g, true).expect("grad");
        let (gu1, gx2_skip) = gcat1.split_at(4 * w * h2 * h2);
        let mut gx3 = upsample2_backward(gu1, 4 * w, h4, h4);
        relu_backward(&c.x3, &mut gx3);
        let gp2 = self.down2.backward(p, &c.p2, h4, h4, &gx3, g, true).expect("grad");
        let mut gx2 = max_pool2_backward(&gp2, &c.i2, c.x2.len());
        for (a, &b) in gx2.iter_mut().zip(gx2_skip) {
            *a += b;
        }
        relu_backward(&c.x2, &mut gx2);
        let gp1 = self.down1.backward(p, &c.p1, h2, h2, &gx2, g, true).expect("grad");
        let mut gx1 = max_pool2_backward(&gp1, &c.i1, c.x1.len());
        for (a, &b) in gx1.iter_mut().zip(gx1_skip) {
            *a += b;
        }
        relu_backward(&c.x1, &mut gx1);
        self.inc.backward(p, obs, t, t, &gx1, g, false);
    }
}

/// Critic-style trunk with a 3-output Gaussian head, emitting a macro action
/// directly.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorActor<S> {
    pub params: ParamStore<S>,
    trunk: Trunk,
    head: Dense,
    log_std: usize,
}

#[derive(Debug, Clone)]
pub struct VectorCache<S> {
    trunk: TrunkCache<S>,
}

pub const VECTOR_OUTPUTS: usize = 3;

impl<S: Scalar> VectorActor<S> {
    pub fn new(rng: &mut impl Rng) -> Self {
        let mut params = ParamStore::default();
        let trunk = Trunk::new(&mut params, rng);
        let head = dense(&mut params, "out_mean", 100, VECTOR_OUTPUTS, true, rng);
        let log_std = params.add("log_std", &[VECTOR_OUTPUTS], Init::Zeros, rng);
        VectorActor {
            params,
            trunk,
            head,
            log_std,
        }
    }

    pub fn with_params<T: Scalar>(&self, params: ParamStore<T>) -> VectorActor<T> {
        assert_eq!(params.blocks, self.params.blocks, "parameter layout");
        VectorActor {
            params,
            trunk: self.trunk.clone(),
            head: self.head,
            log_std: self.log_std,
        }
    }

    pub fn forward_cached(&self, obs: &[S], t: usize) -> Result<(GaussianHead<S>, VectorCache<S>)> {
        check_obs(obs.len(), t)?;
        let p = &self.params.values;
        let trunk = self.trunk.forward(p, obs, t);
        let mean = self.head.forward(p, &trunk.hidden);
        let log_std = (0..VECTOR_OUTPUTS).map(|i| clamp_log_std(p[self.log_std + i])).collect();
        Ok((GaussianHead { mean, log_std }, VectorCache { trunk }))
    }

    pub fn backward(&self, obs: &[S], t: usize, c: &VectorCache<S>, gmean: &[S], glog_std: &[S], g: &mut [S]) {
        let p = &self.params.values;
        for i in 0..VECTOR_OUTPUTS {
            if log_std_grad_passes(p[self.log_std + i].as_f64()) {
                g[self.log_std + i] += glog_std[i];
            }
        }
        let gh = self.head.backward(p, &c.trunk.hidden, gmean, g, true).expect("grad");
        self.trunk.backward(p, obs, t, &c.trunk, gh, g);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorKind {
    /// Probability map over the grid followed by location search.
    Map,
    /// Direct `(a, b, c)` output.
    Vector,
}

/// Either actor variant behind one interface.
#[derive(Debug, Clone, PartialEq)]
pub enum Actor<S> {
    Map(UNetActor<S>),
    Vector(VectorActor<S>),
}

#[derive(Debug, Clone)]
pub enum ActorCache<S> {
    Map(UNetCache<S>),
    Vector(VectorCache<S>),
}

impl<S: Scalar> Actor<S> {
    pub fn new(kind: ActorKind, unet_width: usize, rng: &mut impl Rng) -> Self {
        match kind {
            ActorKind::Map => Actor::Map(UNetActor::new(unet_width, rng)),
            ActorKind::Vector => Actor::Vector(VectorActor::new(rng)),
        }
    }

    pub fn kind(&self) -> ActorKind {
        match self {
            Actor::Map(_) => ActorKind::Map,
            Actor::Vector(_) => ActorKind::Vector,
        }
    }

    pub fn params(&self) -> &ParamStore<S> {
        match self {
            Actor::Map(a) => &a.params,
            Actor::Vector(a) => &a.params,
        }
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<S> {
        match self {
            Actor::Map(a) => &mut a.params,
            Actor::Vector(a) => &mut a.params,
        }
    }

    pub fn with_params<T: Scalar>(&self, params: ParamStore<T>) -> Actor<T> {
        match self {
            Actor::Map(a) => Actor::Map(a.with_params(params)),
            Actor::Vector(a) => Actor::Vector(a.with_params(params)),
        }
    }

    pub fn forward(&self, obs: &[S], t: usize) -> Result<GaussianHead<S>> {
        Ok(self.forward_cached(obs, t)?.0)
    }

    pub fn forward_cached(&self, obs: &[S], t: usize) -> Result<(GaussianHead<S>, ActorCache<S>)> {
        match self {
            Actor::Map(a) => a.forward_cached(obs, t).map(|(h, c)| (h, ActorCache::Map(c))),
            Actor::Vector(a) => a.forward_cached(obs, t).map(|(h, c)| (h, ActorCache::Vector(c))),
        }
    }

    /// Adds the parameter gradient given gradients with respect to the head's
    /// mean entries and (clamped) log-std entries.
    pub fn backward(&self, obs: &[S], t: usize, cache: &ActorCache<S>, gmean: &[S], glog_std: &[S], g: &mut [S]) {
        match (self, cache) {
            (Actor::Map(a), ActorCache::Map(c)) => a.backward(obs, t, c, gmean, glog_std, g),
            (Actor::Vector(a), ActorCache::Vector(c)) => a.backward(obs, t, c, gmean, glog_std, g),
            _ => panic!("actor cache of the wrong kind"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn critic_layer_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = Critic::<f32>::new(&mut rng);
        let counts: Vec<usize> = c.params.layer_counts().into_iter().map(|(_, n)| n).collect();
        assert_eq!(counts, vec![1616, 12832, 51264, 409700, 101]);
    }

    #[test]
    fn unet_counts_at_reference_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = UNetActor::<f32>::new(64, &mut rng);
        let counts = a.params.layer_counts();
        assert_eq!(counts[0], ("inc".into(), 2368));
        assert_eq!(counts[5], ("out_mean".into(), 577));
        assert_eq!(counts[6], ("log_std".into(), 1));
        assert_eq!(counts[1].1, 64 * 128 * 9 + 128);
        assert_eq!(counts[3].1, 384 * 128 * 9 + 128);
    }

    #[test]
    fn zero_heads_at_init() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = Critic::<f32>::new(&mut rng);
        assert_eq!(c.forward(&vec![0.0; 4 * 16 * 16], 16).unwrap(), 0.0);
        let a = UNetActor::<f32>::new(4, &mut rng);
        let (h, _) = a.forward_cached(&vec![0.5; 4 * 16 * 16], 16).unwrap();
        assert!(h.mean.iter().all(|&m| m == 0.0));
        assert_eq!(h.log_std, vec![0.0]);
    }

    #[test]
    fn critic_accepts_any_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = Critic::<f32>::new(&mut rng);
        for t in [8, 32, 100] {
            assert!(c.forward(&vec![0.1; 4 * t * t], t).unwrap().is_finite());
        }
        assert!(matches!(c.forward(&[0.0; 10], 8), Err(Error::Shape { .. })));
    }
}
