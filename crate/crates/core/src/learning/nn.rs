//! Fully connected ReLU networks over a flat parameter slice with exact
//! reverse-mode gradients.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Layer widths `[input, hidden.., output]`. Hidden layers use ReLU, the
/// output layer is linear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpShape {
    pub sizes: Vec<usize>,
}

impl MlpShape {
    pub fn new(input: usize, hidden: &[usize], output: usize) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        MlpShape { sizes }
    }

    pub fn input(&self) -> usize {
        self.sizes[0]
    }

    pub fn output(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Weights (row-major `in x out`) followed by biases, layer by layer.
    pub fn num_params(&self) -> usize {
        self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn layer_offsets(&self, l: usize) -> (usize, usize) {
        let base: usize = self.sizes[..l + 1]
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum();
        (base, base + self.sizes[l] * self.sizes[l + 1])
    }

    /// Orthogonal initialization: gain sqrt(2) on hidden layers, `out_gain`
    /// on the output layer, zero biases.
    pub fn init<R: Rng>(&self, params: &mut [f64], out_gain: f64, rng: &mut R) {
        assert_eq!(params.len(), self.num_params());
        for l in 0..self.layers() {
            let (w, b) = self.layer_offsets(l);
            let (rows, cols) = (self.sizes[l], self.sizes[l + 1]);
            let gain = if l + 1 == self.layers() { out_gain } else { 2f64.sqrt() };
            orthogonal(&mut params[w..b], rows, cols, gain, rng);
            params[b..b + cols].iter_mut().for_each(|x| *x = 0.0);
        }
    }
}

/// Fills a `rows x cols` matrix with a (semi-)orthogonal matrix times `gain`.
fn orthogonal<R: Rng>(out: &mut [f64], rows: usize, cols: usize, gain: f64, rng: &mut R) {
    // Gram-Schmidt on the longer side, then transpose if needed.
    let (n, m) = if rows >= cols { (rows, cols) } else { (cols, rows) };
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(m);
    while q.len() < m {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for u in &q {
            let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            q.push(v);
        }
    }
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = gain * if rows >= cols { q[c][r] } else { q[r][c] };
        }
    }
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Default, Clone)]
pub struct MlpCache {
    rows: usize,
    /// `acts[l]` is the input to layer `l`; the last entry is the output.
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_next: Vec<f64>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
}

/// `c = a * b + beta * c` with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
    rsc: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    // Bounds are established by the callers' shape bookkeeping.
    assert!(a.len() >= (m - 1) * rsa + k.saturating_sub(1) * csa + usize::from(k > 0));
    assert!(c.len() >= (m - 1) * rsc + n);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            1,
        );
    }
}

/// Batched forward pass; `x` holds `rows` inputs row-major.
pub fn forward(shape: &MlpShape, params: &[f64], x: &[f64], rows: usize, cache: &mut MlpCache) {
    assert_eq!(params.len(), shape.num_params(), "parameter count");
    assert_eq!(x.len(), rows * shape.input(), "input shape");
    let layers = shape.layers();
    cache.rows = rows;
    cache.acts.resize_with(layers + 1, Vec::new);
    cache.acts[0].clear();
    cache.acts[0].extend_from_slice(x);
    for l in 0..layers {
        let (i, o) = (shape.sizes[l], shape.sizes[l + 1]);
        let (w, b) = shape.layer_offsets(l);
        let (head, tail) = cache.acts.split_at_mut(l + 1);
        let input = &head[l];
        let out = &mut tail[0];
        out.clear();
        for _ in 0..rows {
            out.extend_from_slice(&params[b..b + o]);
        }
        gemm(rows, i, o, input, (i, 1), &params[w..b], (o, 1), 1.0, out, o);
        if l + 1 < layers {
            out.iter_mut().for_each(|v| *v = v.max(0.0));
        }
    }
}

/// Accumulates `d loss / d params` into `grad` given `d loss / d output`.
pub fn backward(shape: &MlpShape, params: &[f64], cache: &mut MlpCache, d_out: &[f64], grad: &mut [f64]) {
    let rows = cache.rows;
    let layers = shape.layers();
    assert_eq!(d_out.len(), rows * shape.output(), "output gradient shape");
    assert_eq!(grad.len(), params.len());
    let mut delta = std::mem::take(&mut cache.delta);
    let mut next = std::mem::take(&mut cache.delta_next);
    delta.clear();
    delta.extend_from_slice(d_out);
    for l in (0..layers).rev() {
        let (i, o) = (shape.sizes[l], shape.sizes[l + 1]);
        let (w, b) = shape.layer_offsets(l);
        let input = &cache.acts[l];
        // dW += input^T delta
        gemm(i, rows, o, input, (1, i), &delta, (o, 1), 1.0, &mut grad[w..b], o);
        for r in 0..rows {
            for (g, d) in grad[b..b + o].iter_mut().zip(&delta[r * o..(r + 1) * o]) {
                *g += d;
            }
        }
        if l == 0 {
            break;
        }
        // d input = delta W^T, masked by the ReLU that produced the input
        next.clear();
        next.resize(rows * i, 0.0);
        gemm(rows, o, i, &delta, (o, 1), &params[w..b], (1, o), 0.0, &mut next, i);
        for (d, a) in next.iter_mut().zip(input) {
            if *a <= 0.0 {
                *d = 0.0;
            }
        }
        std::mem::swap(&mut delta, &mut next);
    }
    cache.delta = delta;
    cache.delta_next = next;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_give_zero_output() {
        let s = MlpShape::new(3, &[5, 5], 2);
        let p = vec![0.0; s.num_params()];
        let mut c = MlpCache::default();
        forward(&s, &p, &[0.3, -0.2, 0.9, 1.0, 1.0, -1.0], 2, &mut c);
        assert!(c.output().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn orthogonal_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (r, c) = (6, 4);
        let mut m = vec![0.0; r * c];
        orthogonal(&mut m, r, c, 1.0, &mut rng);
        for a in 0..c {
            for b in 0..c {
                let d: f64 = (0..r).map(|i| m[i * c + a] * m[i * c + b]).sum();
                assert!((d - f64::from(u8::from(a == b))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = MlpShape::new(3, &[4, 4], 2);
        let mut p = vec![0.0; s.num_params()];
        s.init(&mut p, 1.0, &mut rng);
        p.iter_mut().for_each(|v| *v += rng.gen_range(-0.1..0.1));
        let x: Vec<f64> = (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w = [0.7, -1.3];
        let loss = |p: &[f64]| {
            let mut c = MlpCache::default();
            forward(&s, p, &x, 5, &mut c);
            c.output().chunks(2).map(|r| w[0] * r[0] + w[1] * r[1] * r[1]).sum::<f64>()
        };
        let mut c = MlpCache::default();
        forward(&s, &p, &x, 5, &mut c);
        let d: Vec<f64> = c.output().chunks(2).flat_map(|r| [w[0], 2.0 * w[1] * r[1]]).collect();
        let mut g = vec![0.0; p.len()];
        backward(&s, &p, &mut c, &d, &mut g);
        for k in 0..p.len() {
            let mut q = p.clone();
            q[k] += 1e-6;
            let up = loss(&q);
            q[k] -= 2e-6;
            let fd = (up - loss(&q)) / 2e-6;
            assert!((fd - g[k]).abs() <= 1e-6 * (1.0 + fd.abs()), "param {k}: {fd} vs {}", g[k]);
        }
    }
}
