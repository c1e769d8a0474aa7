//! Layer kernels on channels-last buffers.

use super::scalar::{gemm, View};
use super::{BnnError, LatentTensor, Scalar};

/// `+1` when `x >= 0`, else `-1`.
#[inline]
pub fn sign<S: Scalar>(x: S) -> S {
    if x >= S::ZERO {
        S::ONE
    } else {
        -S::ONE
    }
}

pub fn sign_forward<S: Scalar>(x: &[S]) -> Vec<S> {
    x.iter().map(|&v| sign(v)).collect()
}

/// Straight-through gradient of `sign`: passes `upstream` where
/// `|x| < clip` and zeroes it elsewhere.
pub fn ste_backward<S: Scalar>(x: &[S], upstream: &[S], clip: S) -> Vec<S> {
    x.iter()
        .zip(upstream)
        .map(|(&v, &g)| if v.abs() < clip { g } else { S::ZERO })
        .collect()
}

/// Valid cross-correlation of one `len x in_ch` sample with effective
/// weights laid out `[k][in_ch][out_ch]`, written to `out` (`len-k+1 x out_ch`).
pub(crate) fn conv1d_raw<S: Scalar>(
    input: &[S],
    len: usize,
    in_ch: usize,
    weights: &[S],
    k: usize,
    out_ch: usize,
    out: &mut [S],
) {
    let out_len = len + 1 - k;
    gemm(
        out_len,
        k * in_ch,
        out_ch,
        View { data: input, rs: in_ch, cs: 1 },
        View { data: weights, rs: out_ch, cs: 1 },
        S::ZERO,
        out,
        out_ch,
        1,
    );
}

/// Accumulates the weight gradient into `dw` and, when requested, writes
/// the input gradient into `dx` (which is overwritten).
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv1d_backward<S: Scalar>(
    input: &[S],
    len: usize,
    in_ch: usize,
    weights: &[S],
    k: usize,
    out_ch: usize,
    dy: &[S],
    dw: &mut [S],
    dx: Option<&mut [S]>,
) {
    let out_len = len + 1 - k;
    gemm(
        k * in_ch,
        out_len,
        out_ch,
        View { data: input, rs: 1, cs: in_ch },
        View { data: dy, rs: out_ch, cs: 1 },
        S::ONE,
        dw,
        out_ch,
        1,
    );
    if let Some(dx) = dx {
        dx.iter_mut().for_each(|v| *v = S::ZERO);
        for kk in 0..k {
            let w_kk = &weights[kk * in_ch * out_ch..(kk + 1) * in_ch * out_ch];
            gemm(
                out_len,
                out_ch,
                in_ch,
                View { data: dy, rs: out_ch, cs: 1 },
                View { data: w_kk, rs: 1, cs: out_ch },
                S::ONE,
                &mut dx[kk * in_ch..],
                in_ch,
                1,
            );
        }
    }
}

/// Effective weights: `sign` when binarizing, the latent values otherwise.
pub fn effective_weights<S: Scalar>(w: &LatentTensor<S>, binarize: bool) -> Vec<S> {
    if binarize {
        w.binarized()
    } else {
        w.values.clone()
    }
}

/// Single-sample convolution with weights shaped `[k, in_ch, out_ch]`.
pub fn conv1d_forward<S: Scalar>(
    input: &[S],
    len: usize,
    in_ch: usize,
    weights: &LatentTensor<S>,
    binarize: bool,
) -> Result<Vec<S>, BnnError> {
    let [k, w_in, out_ch] = weights.shape[..] else {
        return Err(BnnError::ShapeMismatch("conv weights must be rank 3".into()));
    };
    if w_in != in_ch || input.len() != len * in_ch {
        return Err(BnnError::ShapeMismatch(format!(
            "input {len}x{in_ch} ({} values) vs weights {k}x{w_in}x{out_ch}",
            input.len()
        )));
    }
    if len < k || k == 0 {
        return Err(BnnError::ShapeMismatch(format!("length {len} shorter than kernel {k}")));
    }
    let w = effective_weights(weights, binarize);
    let mut out = vec![S::ZERO; (len + 1 - k) * out_ch];
    conv1d_raw(input, len, in_ch, &w, k, out_ch, &mut out);
    Ok(out)
}

/// Non-overlapping max pooling with stride `width`; a trailing partial
/// window is dropped. Returns the pooled values and the flat index of the
/// chosen element for every output (first maximum wins).
pub fn maxpool1d<S: Scalar>(input: &[S], len: usize, ch: usize, width: usize) -> (Vec<S>, Vec<usize>) {
    assert!(width >= 1, "pool width must be positive");
    let out_len = len / width;
    let mut out = Vec::with_capacity(out_len * ch);
    let mut arg = Vec::with_capacity(out_len * ch);
    for t in 0..out_len {
        for c in 0..ch {
            let mut best = (t * width) * ch + c;
            for j in 1..width {
                let idx = (t * width + j) * ch + c;
                if input[idx] > input[best] {
                    best = idx;
                }
            }
            out.push(input[best]);
            arg.push(best);
        }
    }
    (out, arg)
}

/// Per-channel batch-norm parameters and running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormState<S> {
    pub gamma: Vec<S>,
    pub beta: Vec<S>,
    pub running_mean: Vec<S>,
    pub running_var: Vec<S>,
    /// Weight of the newest batch in the running-stat update:
    /// `running = (1 - momentum) * running + momentum * batch`.
    pub momentum: S,
    pub epsilon: S,
    /// Whether running statistics have seen at least one training batch.
    pub initialized: bool,
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct BnCache<S> {
    pub xhat: Vec<S>,
    pub inv_std: Vec<S>,
}

impl<S: Scalar> BatchNormState<S> {
    pub fn new(channels: usize, momentum: S, epsilon: S) -> Self {
        BatchNormState {
            gamma: vec![S::ONE; channels],
            beta: vec![S::ZERO; channels],
            running_mean: vec![S::ZERO; channels],
            running_var: vec![S::ONE; channels],
            momentum,
            epsilon,
            initialized: false,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    /// Inference-time affine map `y = a * x + b` per channel.
    pub fn eval_affine(&self) -> (Vec<S>, Vec<S>) {
        let a: Vec<S> = self
            .gamma
            .iter()
            .zip(&self.running_var)
            .map(|(&g, &v)| g / (v + self.epsilon).sqrt())
            .collect();
        let b = self
            .beta
            .iter()
            .zip(&self.running_mean)
            .zip(&a)
            .map(|((&beta, &m), &a)| beta - m * a)
            .collect();
        (a, b)
    }

    /// Normalizes `data` (rows x channels) in place with running stats.
    pub fn forward_eval(&self, data: &mut [S]) {
        let (a, b) = self.eval_affine();
        let ch = self.channels();
        for row in data.chunks_exact_mut(ch) {
            for c in 0..ch {
                row[c] = row[c] * a[c] + b[c];
            }
        }
    }

    /// Normalizes with batch statistics, updates the running stats and
    /// returns what the backward pass needs. `samples` is the batch size.
    pub(crate) fn forward_train(&mut self, data: &mut [S], samples: usize) -> Result<BnCache<S>, BnnError> {
        if samples < 2 {
            return Err(BnnError::DegenerateBatch(samples));
        }
        let ch = self.channels();
        let rows = data.len() / ch;
        let mut mean = vec![0f64; ch];
        for row in data.chunks_exact(ch) {
            for c in 0..ch {
                mean[c] += row[c].to_f64();
            }
        }
        mean.iter_mut().for_each(|m| *m /= rows as f64);
        let mut var = vec![0f64; ch];
        for row in data.chunks_exact(ch) {
            for c in 0..ch {
                let d = row[c].to_f64() - mean[c];
                var[c] += d * d;
            }
        }
        var.iter_mut().for_each(|v| *v /= rows as f64);

        let mean_s: Vec<S> = mean.iter().map(|&m| S::from_f64(m)).collect();
        let inv_std: Vec<S> = var
            .iter()
            .map(|&v| S::ONE / (S::from_f64(v) + self.epsilon).sqrt())
            .collect();
        let mut xhat = vec![S::ZERO; data.len()];
        for (row, xrow) in data.chunks_exact_mut(ch).zip(xhat.chunks_exact_mut(ch)) {
            for c in 0..ch {
                let xh = (row[c] - mean_s[c]) * inv_std[c];
                xrow[c] = xh;
                row[c] = self.gamma[c] * xh + self.beta[c];
            }
        }
        let m = self.momentum;
        for c in 0..ch {
            self.running_mean[c] = (S::ONE - m) * self.running_mean[c] + m * mean_s[c];
            self.running_var[c] = (S::ONE - m) * self.running_var[c] + m * S::from_f64(var[c]);
        }
        self.initialized = true;
        Ok(BnCache { xhat, inv_std })
    }

    /// Turns `dy` into the input gradient in place; returns (dgamma, dbeta).
    pub(crate) fn backward(&self, cache: &BnCache<S>, dy: &mut [S]) -> (Vec<S>, Vec<S>) {
        let ch = self.channels();
        let rows = dy.len() / ch;
        let mut dgamma = vec![S::ZERO; ch];
        let mut dbeta = vec![S::ZERO; ch];
        for (g, xh) in dy.chunks_exact(ch).zip(cache.xhat.chunks_exact(ch)) {
            for c in 0..ch {
                dgamma[c] += g[c] * xh[c];
                dbeta[c] += g[c];
            }
        }
        let n = S::from_f64(rows as f64);
        for (g, xh) in dy.chunks_exact_mut(ch).zip(cache.xhat.chunks_exact(ch)) {
            for c in 0..ch {
                let scale = self.gamma[c] * cache.inv_std[c] / n;
                g[c] = scale * (n * g[c] - dbeta[c] - xh[c] * dgamma[c]);
            }
        }
        (dgamma, dbeta)
    }
}

/// Applies batch norm over `data` (rows x channels). Training mode needs at
/// least two samples in the batch.
pub fn batchnorm_forward<S: Scalar>(
    data: &mut [S],
    samples: usize,
    state: &mut BatchNormState<S>,
    training: bool,
) -> Result<(), BnnError> {
    if !data.len().is_multiple_of(state.channels()) {
        return Err(BnnError::ShapeMismatch(format!(
            "{} values are not a multiple of {} channels",
            data.len(),
            state.channels()
        )));
    }
    if training {
        state.forward_train(data, samples).map(|_| ())
    } else {
        state.forward_eval(data);
        Ok(())
    }
}

/// Softmax probabilities computed in f64.
pub fn softmax<S: Scalar>(logits: &[S]) -> Vec<f64> {
    let max = logits.iter().map(|x| x.to_f64()).fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|x| (x.to_f64() - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Categorical cross-entropy `-ln softmax(logits)[label]` and its gradient
/// `softmax(logits) - onehot(label)`.
pub fn loss_and_grad<S: Scalar>(logits: &[S], label: usize) -> (f64, Vec<S>) {
    assert!(label < logits.len(), "label {label} out of range");
    let max = logits.iter().map(|x| x.to_f64()).fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|x| (x.to_f64() - max).exp()).sum::<f64>().ln();
    let loss = lse - logits[label].to_f64();
    let grad = logits
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let p = (x.to_f64() - lse).exp();
            S::from_f64(if i == label { p - 1.0 } else { p })
        })
        .collect();
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_convention() {
        assert_eq!(sign(0.0f32), 1.0);
        assert_eq!(sign(-0.3f32), -1.0);
        assert_eq!(sign(-0.0f32), 1.0);
        let x = [0.5f32, -2.0, 0.0];
        assert_eq!(sign_forward(&sign_forward(&x)), sign_forward(&x));
    }

    #[test]
    fn ste_clip_is_strict() {
        assert_eq!(ste_backward(&[0.5f32], &[2.0], 1.0), [2.0]);
        assert_eq!(ste_backward(&[1.0f32], &[2.0], 1.0), [0.0]);
        assert_eq!(ste_backward(&[-2.0f32], &[7.0], 1.0), [0.0]);
        assert_eq!(ste_backward(&[-0.99f32], &[7.0], 1.0), [7.0]);
    }

    #[test]
    fn conv_binarized_examples() {
        let w = LatentTensor::new(vec![3, 1, 1], vec![0.2f32; 3]);
        assert_eq!(conv1d_forward(&[1.0, 1.0, 1.0], 3, 1, &w, true).unwrap(), [3.0]);
        assert_eq!(conv1d_forward(&[1.0f32, 1.0, 1.0], 3, 1, &w, false).unwrap().len(), 1);
        assert!(conv1d_forward(&[1.0f32, 1.0], 2, 1, &w, true).is_err());
        let w2 = LatentTensor::new(vec![3, 2, 1], vec![0.2f32; 6]);
        assert!(conv1d_forward(&[1.0f32; 6], 3, 1, &w2, true).is_err());
    }

    #[test]
    fn conv_matches_naive_loop() {
        let (len, cin, cout, k) = (7, 3, 4, 3);
        let input: Vec<f64> = (0..len * cin).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let wv: Vec<f64> = (0..k * cin * cout).map(|i| ((i * 13 % 7) as f64) - 3.0).collect();
        let w = LatentTensor::new(vec![k, cin, cout], wv.clone());
        let out = conv1d_forward(&input, len, cin, &w, false).unwrap();
        for t in 0..len - k + 1 {
            for o in 0..cout {
                let mut s = 0.0;
                for kk in 0..k {
                    for c in 0..cin {
                        s += input[(t + kk) * cin + c] * wv[(kk * cin + c) * cout + o];
                    }
                }
                assert_eq!(out[t * cout + o], s);
            }
        }
    }

    #[test]
    fn conv_backward_matches_naive() {
        let (len, cin, cout, k) = (6, 2, 3, 3);
        let input: Vec<f64> = (0..len * cin).map(|i| (i as f64 * 0.7).sin()).collect();
        let w: Vec<f64> = (0..k * cin * cout).map(|i| (i as f64 * 1.3).cos()).collect();
        let dy: Vec<f64> = (0..(len - k + 1) * cout).map(|i| (i as f64 * 0.4).sin()).collect();
        let mut dw = vec![0.0; w.len()];
        let mut dx = vec![9.0; input.len()];
        conv1d_backward(&input, len, cin, &w, k, cout, &dy, &mut dw, Some(&mut dx));
        let mut dw_ref = vec![0.0; w.len()];
        let mut dx_ref = vec![0.0; input.len()];
        for t in 0..len - k + 1 {
            for o in 0..cout {
                for kk in 0..k {
                    for c in 0..cin {
                        dw_ref[(kk * cin + c) * cout + o] += input[(t + kk) * cin + c] * dy[t * cout + o];
                        dx_ref[(t + kk) * cin + c] += w[(kk * cin + c) * cout + o] * dy[t * cout + o];
                    }
                }
            }
        }
        for (a, b) in dw.iter().zip(&dw_ref).chain(dx.iter().zip(&dx_ref)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn binarized_conv_parity() {
        let (len, cin, cout, k) = (10, 5, 4, 3);
        let input: Vec<f32> = (0..len * cin).map(|i| if (i * 7) % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let wv: Vec<f32> = (0..k * cin * cout).map(|i| ((i * 31 % 17) as f32) / 17.0 - 0.5).collect();
        let out = conv1d_forward(&input, len, cin, &LatentTensor::new(vec![k, cin, cout], wv), true).unwrap();
        for v in out {
            assert_eq!(v.fract(), 0.0);
            assert_eq!((v as i64 - (k * cin) as i64).rem_euclid(2), 0);
            assert!(v.abs() <= (k * cin) as f32);
        }
    }

    #[test]
    fn maxpool_examples() {
        let (v, _) = maxpool1d(&[1.0f32, 5.0, 2.0, 4.0], 4, 1, 2);
        assert_eq!(v, [5.0, 4.0]);
        let x: Vec<f32> = (0..82).map(|i| i as f32).collect();
        assert_eq!(maxpool1d(&x, 82, 1, 3).0.len(), 27);
        assert_eq!(maxpool1d(&x, 82, 1, 1).0, x);
        let (v, arg) = maxpool1d(&[1.0f32, 9.0, 3.0, 2.0], 2, 2, 2);
        assert_eq!(v, [3.0, 9.0]);
        assert_eq!(arg, [2, 1]);
    }

    #[test]
    fn batchnorm_eval_identity() {
        let mut st = BatchNormState::<f32>::new(2, 0.1, 1e-5);
        let mut x = vec![0.03f32, -0.1, 0.1, 0.0];
        let orig = x.clone();
        batchnorm_forward(&mut x, 2, &mut st, false).unwrap();
        for (a, b) in x.iter().zip(&orig) {
            // only the epsilon term separates eval mode from identity
            assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn batchnorm_train_normalizes_and_tracks() {
        let mut st = BatchNormState::<f64>::new(2, 1.0, 1e-5);
        let mut x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.91).sin() * 3.0 + i as f64).collect();
        let orig = x.clone();
        batchnorm_forward(&mut x, 4, &mut st, true).unwrap();
        for c in 0..2 {
            let col: Vec<f64> = x.iter().skip(c).step_by(2).copied().collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
            assert!(mean.abs() < 1e-5);
            assert!((var - 1.0).abs() < 1e-4);
            // momentum 1: running stats equal the batch stats
            let ocol: Vec<f64> = orig.iter().skip(c).step_by(2).copied().collect();
            let omean = ocol.iter().sum::<f64>() / ocol.len() as f64;
            let ovar = ocol.iter().map(|v| (v - omean).powi(2)).sum::<f64>() / ocol.len() as f64;
            assert!((st.running_mean[c] - omean).abs() < 1e-12);
            assert!((st.running_var[c] - ovar).abs() < 1e-9);
        }
        assert!(st.initialized);
        let mut one = vec![1.0, 2.0];
        assert!(matches!(
            batchnorm_forward(&mut one, 1, &mut st, true),
            Err(BnnError::DegenerateBatch(1))
        ));
    }

    #[test]
    fn cross_entropy_examples() {
        let (loss, grad) = loss_and_grad(&[0.5f64, 0.5, 0.5], 1);
        assert!((loss - 3f64.ln()).abs() < 1e-12);
        assert!(grad.iter().sum::<f64>().abs() < 1e-9);

        let logits = [0.3f64, -1.2, 2.0, 0.1];
        let (_, grad) = loss_and_grad(&logits, 2);
        let h = 1e-5;
        for i in 0..4 {
            let mut p = logits;
            let mut m = logits;
            p[i] += h;
            m[i] -= h;
            let fd = (loss_and_grad(&p, 2).0 - loss_and_grad(&m, 2).0) / (2.0 * h);
            assert!((fd - grad[i]).abs() / fd.abs().max(1e-3) < 1e-6, "{i}: {fd} vs {}", grad[i]);
        }
    }
}
