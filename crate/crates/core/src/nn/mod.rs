//! Small CNN toolkit with hand-written backward passes.
//!
//! Parameters of a network live in one flat [`ParamStore`]; layers address
//! their weights by offset. Forward passes run one sample at a time so that
//! results never depend on batch composition.

mod gaussian;
mod layers;
mod nets;
mod optim;

pub use gaussian::{log_prob, log_prob_grad, sample, softmax, GaussianHead};
pub use layers::{
    adaptive_avg_pool, adaptive_avg_pool_backward, concat_channels, max_pool2, max_pool2_backward, relu_backward,
    relu_inplace, upsample2, upsample2_backward, Conv2d, Dense,
};
pub use nets::{Actor, ActorCache, ActorKind, Critic, CriticCache, UNetActor, VectorActor, LOG_STD_MAX, LOG_STD_MIN};
pub use optim::{clip_global_norm, global_norm, Adam, AdamConfig};

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Floating-point element type of a network (`f32` for training, `f64` for
/// gradient checks).
pub trait Scalar:
    Float + Default + Debug + Send + Sync + Sum + AddAssign + SubAssign + MulAssign + 'static
{
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;

    /// `C = alpha * A B + beta * C` with arbitrary strides.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        rsa: usize,
        csa: usize,
        b: &[Self],
        rsb: usize,
        csb: usize,
        beta: Self,
        c: &mut [Self],
        rsc: usize,
        csc: usize,
    );
}

fn check_span(len: usize, rows: usize, cols: usize, rs: usize, cs: usize) {
    if rows > 0 && cols > 0 {
        assert!((rows - 1) * rs + (cols - 1) * cs < len, "gemm operand out of bounds");
    }
}

macro_rules! impl_scalar {
    ($t:ty, $gemm:path) => {
        impl Scalar for $t {
            fn from_f64(v: f64) -> Self {
                v as $t
            }

            fn as_f64(self) -> f64 {
                self as f64
            }

            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                alpha: Self,
                a: &[Self],
                rsa: usize,
                csa: usize,
                b: &[Self],
                rsb: usize,
                csb: usize,
                beta: Self,
                c: &mut [Self],
                rsc: usize,
                csc: usize,
            ) {
                if m == 0 || n == 0 {
                    return;
                }
                check_span(a.len(), m, k, rsa, csa);
                check_span(b.len(), k, n, rsb, csb);
                check_span(c.len(), m, n, rsc, csc);
                // SAFETY: every operand's index range was checked against its slice above.
                unsafe {
                    $gemm(
                        m,
                        k,
                        n,
                        alpha,
                        a.as_ptr(),
                        rsa as isize,
                        csa as isize,
                        b.as_ptr(),
                        rsb as isize,
                        csb as isize,
                        beta,
                        c.as_mut_ptr(),
                        rsc as isize,
                        csc as isize,
                    )
                }
            }
        }
    };
}

impl_scalar!(f32, matrixmultiply::sgemm);
impl_scalar!(f64, matrixmultiply::dgemm);

/// Named slice of a [`ParamStore`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Flat parameter vector with a named block layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore<S> {
    pub blocks: Vec<Block>,
    pub values: Vec<S>,
}

impl<S: Scalar> Default for ParamStore<S> {
    fn default() -> Self {
        ParamStore {
            blocks: Vec::new(),
            values: Vec::new(),
        }
    }
}

/// How a new block is filled.
#[derive(Debug, Clone, Copy)]
pub enum Init {
    Zeros,
    Const(f64),
    /// Normal with std `sqrt(2 / fan_in)`.
    He { fan_in: usize },
}

impl<S: Scalar> ParamStore<S> {
    pub fn add(&mut self, name: impl Into<String>, shape: &[usize], init: Init, rng: &mut impl Rng) -> usize {
        let offset = self.values.len();
        let n: usize = shape.iter().product();
        match init {
            Init::Zeros => self.values.extend(std::iter::repeat_n(S::zero(), n)),
            Init::Const(c) => self.values.extend(std::iter::repeat_n(S::from_f64(c), n)),
            Init::He { fan_in } => {
                let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("valid std");
                self.values.extend((0..n).map(|_| S::from_f64(normal.sample(rng))));
            }
        }
        self.blocks.push(Block {
            name: name.into(),
            shape: shape.to_vec(),
            offset,
        });
        offset
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zeros(&self) -> Vec<S> {
        vec![S::zero(); self.values.len()]
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&[S]> {
        self.block(name).map(|b| &self.values[b.range()])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut [S]> {
        let r = self.block(name)?.range();
        Some(&mut self.values[r])
    }

    /// Same layout, values converted to another precision.
    pub fn cast<T: Scalar>(&self) -> ParamStore<T> {
        ParamStore {
            blocks: self.blocks.clone(),
            values: self.values.iter().map(|v| T::from_f64(v.as_f64())).collect(),
        }
    }

    /// Parameter totals grouped by layer (block name up to the last `.`), in
    /// declaration order.
    pub fn layer_counts(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for b in &self.blocks {
            let layer = b.name.rsplit_once('.').map_or(b.name.as_str(), |(l, _)| l).to_string();
            match out.last_mut() {
                Some((l, n)) if *l == layer => *n += b.len(),
                _ => out.push((layer, b.len())),
            }
        }
        out
    }

    /// Name of the first block holding a non-finite entry of `v`.
    pub fn first_non_finite(&self, v: &[S]) -> Option<&str> {
        self.blocks
            .iter()
            .find(|b| v[b.range()].iter().any(|x| !x.is_finite()))
            .map(|b| b.name.as_str())
    }
}
