//! Layer kernels over channel-major `C x H x W` buffers.

use super::Scalar;

/// 2-D convolution with square kernel, zero padding and equal strides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv2d {
    /// Offset of the `[cout, cin, k, k]` weights.
    pub weight: usize,
    /// Offset of the `[cout]` biases.
    pub bias: usize,
    pub cin: usize,
    pub cout: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
}

impl Conv2d {
    pub fn out_hw(&self, h: usize, w: usize) -> (usize, usize) {
        (
            (h + 2 * self.pad - self.k) / self.stride + 1,
            (w + 2 * self.pad - self.k) / self.stride + 1,
        )
    }

    pub fn param_count(&self) -> usize {
        self.cout * self.cin * self.k * self.k + self.cout
    }

    /// Output positions `o` along one axis whose input index
    /// `o * stride + kk - pad` falls inside `[0, len)`, as a half-open range.
    fn valid(&self, kk: usize, len: usize, out: usize) -> (usize, usize) {
        let lo = self.pad.saturating_sub(kk).div_ceil(self.stride);
        let hi = if len + self.pad > kk {
            ((len + self.pad - kk - 1) / self.stride + 1).min(out)
        } else {
            0
        };
        (lo, hi.max(lo))
    }

    /// `[cin*k*k, ho*wo]` patch matrix, written once in storage order.
    fn im2col<S: Scalar>(&self, x: &[S], h: usize, w: usize) -> Vec<S> {
        let (ho, wo) = self.out_hw(h, w);
        let (k, st) = (self.k, self.stride);
        let mut cols = Vec::with_capacity(self.cin * k * k * ho * wo);
        for c in 0..self.cin {
            let plane = &x[c * h * w..(c + 1) * h * w];
            for ki in 0..k {
                let (oi0, oi1) = self.valid(ki, h, ho);
                for kj in 0..k {
                    let (oj0, oj1) = self.valid(kj, w, wo);
                    cols.resize(cols.len() + oi0 * wo, S::zero());
                    for oi in oi0..oi1 {
                        let ii = oi * st + ki - self.pad;
                        let j0 = oj0 * st + kj - self.pad;
                        cols.resize(cols.len() + oj0, S::zero());
                        if st == 1 {
                            cols.extend_from_slice(&plane[ii * w + j0..ii * w + j0 + (oj1 - oj0)]);
                        } else {
                            cols.extend(plane[ii * w + j0..].iter().step_by(st).take(oj1 - oj0));
                        }
                        cols.resize(cols.len() + wo - oj1, S::zero());
                    }
                    cols.resize(cols.len() + (ho - oi1) * wo, S::zero());
                }
            }
        }
        cols
    }

    fn col2im<S: Scalar>(&self, cols: &[S], h: usize, w: usize) -> Vec<S> {
        let (ho, wo) = self.out_hw(h, w);
        let (k, st) = (self.k, self.stride);
        let mut x = vec![S::zero(); self.cin * h * w];
        for c in 0..self.cin {
            let plane = &mut x[c * h * w..(c + 1) * h * w];
            for ki in 0..k {
                let (oi0, oi1) = self.valid(ki, h, ho);
                for kj in 0..k {
                    let (oj0, oj1) = self.valid(kj, w, wo);
                    let row = (c * k + ki) * k + kj;
                    let src = &cols[row * ho * wo..(row + 1) * ho * wo];
                    for oi in oi0..oi1 {
                        let ii = oi * st + ki - self.pad;
                        let j0 = oj0 * st + kj - self.pad;
                        let s = &src[oi * wo + oj0..oi * wo + oj1];
                        let d = &mut plane[ii * w + j0..];
                        if st == 1 {
                            d[..s.len()].iter_mut().zip(s).for_each(|(d, v)| *d += *v);
                        } else {
                            d.iter_mut().step_by(st).zip(s).for_each(|(d, v)| *d += *v);
                        }
                    }
                }
            }
        }
        x
    }

    pub fn forward<S: Scalar>(&self, p: &[S], x: &[S], h: usize, w: usize) -> (Vec<S>, usize, usize) {
        assert_eq!(x.len(), self.cin * h * w, "conv input shape");
        let (ho, wo) = self.out_hw(h, w);
        let n = ho * wo;
        let ckk = self.cin * self.k * self.k;
        let cols = self.im2col(x, h, w);
        let mut y: Vec<S> = (0..self.cout)
            .flat_map(|o| std::iter::repeat_n(p[self.bias + o], n))
            .collect();
        let wt = &p[self.weight..self.weight + self.cout * ckk];
        S::gemm(self.cout, ckk, n, S::one(), wt, ckk, 1, &cols, n, 1, S::one(), &mut y, n, 1);
        (y, ho, wo)
    }

    /// Accumulates parameter gradients into `g`; returns the input gradient
    /// when `need_input_grad`.
    #[allow(clippy::too_many_arguments)]
    pub fn backward<S: Scalar>(
        &self,
        p: &[S],
        x: &[S],
        h: usize,
        w: usize,
        gy: &[S],
        g: &mut [S],
        need_input_grad: bool,
    ) -> Option<Vec<S>> {
        let (ho, wo) = self.out_hw(h, w);
        let n = ho * wo;
        let ckk = self.cin * self.k * self.k;
        assert_eq!(gy.len(), self.cout * n, "conv output grad shape");
        for o in 0..self.cout {
            let s: S = gy[o * n..(o + 1) * n].iter().copied().sum();
            g[self.bias + o] += s;
        }
        let mut cols = self.im2col(x, h, w);
        {
            let gw = &mut g[self.weight..self.weight + self.cout * ckk];
            S::gemm(self.cout, n, ckk, S::one(), gy, n, 1, &cols, 1, n, S::one(), gw, ckk, 1);
        }
        if !need_input_grad {
            return None;
        }
        let wt = &p[self.weight..self.weight + self.cout * ckk];
        // the patch matrix is spent; its storage receives the patch gradients
        S::gemm(ckk, self.cout, n, S::one(), wt, 1, ckk, gy, n, 1, S::zero(), &mut cols, n, 1);
        Some(self.col2im(&cols, h, w))
    }
}

/// Fully connected layer `y = W x + b` with `W` stored `[nout, nin]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub weight: usize,
    pub bias: usize,
    pub nin: usize,
    pub nout: usize,
}

impl Dense {
    pub fn param_count(&self) -> usize {
        self.nin * self.nout + self.nout
    }

    pub fn forward<S: Scalar>(&self, p: &[S], x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.nin, "dense input shape");
        let mut y = p[self.bias..self.bias + self.nout].to_vec();
        let wt = &p[self.weight..self.weight + self.nin * self.nout];
        S::gemm(self.nout, self.nin, 1, S::one(), wt, self.nin, 1, x, 1, 1, S::one(), &mut y, 1, 1);
        y
    }

    pub fn backward<S: Scalar>(&self, p: &[S], x: &[S], gy: &[S], g: &mut [S], need_input_grad: bool) -> Option<Vec<S>> {
        for (gb, &v) in g[self.bias..self.bias + self.nout].iter_mut().zip(gy) {
            *gb += v;
        }
        {
            let gw = &mut g[self.weight..self.weight + self.nin * self.nout];
            S::gemm(self.nout, 1, self.nin, S::one(), gy, 1, 1, x, 1, 1, S::one(), gw, self.nin, 1);
        }
        if !need_input_grad {
            return None;
        }
        let wt = &p[self.weight..self.weight + self.nin * self.nout];
        let mut gx = vec![S::zero(); self.nin];
        S::gemm(self.nin, self.nout, 1, S::one(), wt, 1, self.nin, gy, 1, 1, S::zero(), &mut gx, 1, 1);
        Some(gx)
    }
}

pub fn relu_inplace<S: Scalar>(x: &mut [S]) {
    for v in x {
        if *v < S::zero() {
            *v = S::zero();
        }
    }
}

/// Masks `g` where the rectifier output `y` is zero.
pub fn relu_backward<S: Scalar>(y: &[S], g: &mut [S]) {
    for (gv, &yv) in g.iter_mut().zip(y) {
        if yv <= S::zero() {
            *gv = S::zero();
        }
    }
}

/// 2x2 max pooling with stride 2 (odd trailing rows/columns dropped). Returns
/// the output and the flat input index of each maximum; ties go to the first.
pub fn max_pool2<S: Scalar>(x: &[S], c: usize, h: usize, w: usize) -> (Vec<S>, Vec<usize>) {
    let (ho, wo) = (h / 2, w / 2);
    let mut y = Vec::with_capacity(c * ho * wo);
    let mut idx = Vec::with_capacity(c * ho * wo);
    for ch in 0..c {
        let base = ch * h * w;
        for i in 0..ho {
            for j in 0..wo {
                let mut best = base + 2 * i * w + 2 * j;
                for (di, dj) in [(0, 1), (1, 0), (1, 1)] {
                    let cand = base + (2 * i + di) * w + 2 * j + dj;
                    if x[cand] > x[best] {
                        best = cand;
                    }
                }
                y.push(x[best]);
                idx.push(best);
            }
        }
    }
    (y, idx)
}

pub fn max_pool2_backward<S: Scalar>(gy: &[S], idx: &[usize], input_len: usize) -> Vec<S> {
    let mut gx = vec![S::zero(); input_len];
    for (&g, &i) in gy.iter().zip(idx) {
        gx[i] += g;
    }
    gx
}

/// Nearest-neighbour 2x upsampling.
pub fn upsample2<S: Scalar>(x: &[S], c: usize, h: usize, w: usize) -> Vec<S> {
    let (h2, w2) = (2 * h, 2 * w);
    let mut y = vec![S::zero(); c * h2 * w2];
    for ch in 0..c {
        for i in 0..h2 {
            for j in 0..w2 {
                y[(ch * h2 + i) * w2 + j] = x[(ch * h + i / 2) * w + j / 2];
            }
        }
    }
    y
}

pub fn upsample2_backward<S: Scalar>(gy: &[S], c: usize, h: usize, w: usize) -> Vec<S> {
    let (h2, w2) = (2 * h, 2 * w);
    let mut gx = vec![S::zero(); c * h * w];
    for ch in 0..c {
        for i in 0..h2 {
            for j in 0..w2 {
                gx[(ch * h + i / 2) * w + j / 2] += gy[(ch * h2 + i) * w2 + j];
            }
        }
    }
    gx
}

fn pool_span(i: usize, inp: usize, out: usize) -> (usize, usize) {
    let start = i * inp / out;
    let end = ((i + 1) * inp).div_ceil(out);
    (start, end)
}

/// Adaptive average pooling to `out x out` (window `[floor(i*H/o), ceil((i+1)*H/o))`).
pub fn adaptive_avg_pool<S: Scalar>(x: &[S], c: usize, h: usize, w: usize, out: usize) -> Vec<S> {
    let mut y = vec![S::zero(); c * out * out];
    for ch in 0..c {
        for i in 0..out {
            let (r0, r1) = pool_span(i, h, out);
            for j in 0..out {
                let (c0, c1) = pool_span(j, w, out);
                let mut s = S::zero();
                for r in r0..r1 {
                    for q in c0..c1 {
                        s += x[(ch * h + r) * w + q];
                    }
                }
                y[(ch * out + i) * out + j] = s / S::from_f64(((r1 - r0) * (c1 - c0)) as f64);
            }
        }
    }
    y
}

pub fn adaptive_avg_pool_backward<S: Scalar>(gy: &[S], c: usize, h: usize, w: usize, out: usize) -> Vec<S> {
    let mut gx = vec![S::zero(); c * h * w];
    for ch in 0..c {
        for i in 0..out {
            let (r0, r1) = pool_span(i, h, out);
            for j in 0..out {
                let (c0, c1) = pool_span(j, w, out);
                let g = gy[(ch * out + i) * out + j] / S::from_f64(((r1 - r0) * (c1 - c0)) as f64);
                for r in r0..r1 {
                    for q in c0..c1 {
                        gx[(ch * h + r) * w + q] += g;
                    }
                }
            }
        }
    }
    gx
}

/// Stacks two channel-major maps of equal spatial size.
pub fn concat_channels<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    let mut y = Vec::with_capacity(a.len() + b.len());
    y.extend_from_slice(a);
    y.extend_from_slice(b);
    y
}
