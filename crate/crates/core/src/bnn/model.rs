use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ops::{conv1d_backward, conv1d_raw, maxpool1d, sign, BatchNormState, BnCache};
use super::tensor::{Batch, LatentTensor};
use super::{BnnError, Scalar};
use crate::hdcore::HdVector;

/// Nonlinearity after each batch norm, which also fixes how weights are
/// quantized in the forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    /// Binarized network: `sign` on weights and activations.
    Sign,
    /// `clip(x, -1, 1)` on weights and activations. Its exact gradient is
    /// the straight-through estimate of `Sign`, which makes it a
    /// differentiable stand-in for gradient checks.
    HardTanh,
    /// Real-valued reference network.
    Relu,
}

impl Activation {
    pub fn binarizes(self) -> bool {
        matches!(self, Activation::Sign | Activation::HardTanh)
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Sign => 0,
            Activation::HardTanh => 1,
            Activation::Relu => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Sign),
            1 => Some(Activation::HardTanh),
            2 => Some(Activation::Relu),
            _ => None,
        }
    }

    fn apply<S: Scalar>(self, x: S) -> S {
        match self {
            Activation::Sign => sign(x),
            Activation::HardTanh => clamp_unit(x),
            Activation::Relu => {
                if x > S::ZERO {
                    x
                } else {
                    S::ZERO
                }
            }
        }
    }

    fn grad<S: Scalar>(self, x: S, g: S, clip: S) -> S {
        let pass = match self {
            Activation::Sign => x.abs() < clip,
            Activation::HardTanh => x.abs() < S::ONE,
            Activation::Relu => x > S::ZERO,
        };
        if pass {
            g
        } else {
            S::ZERO
        }
    }

    fn quantize<S: Scalar>(self, w: S) -> S {
        match self {
            Activation::Sign => sign(w),
            Activation::HardTanh => clamp_unit(w),
            Activation::Relu => w,
        }
    }

    // Gradient of the weight quantizer as seen by the latent weight. Sign
    // passes it straight through; the latent clip keeps weights in range.
    fn weight_grad<S: Scalar>(self, w: S, g: S) -> S {
        match self {
            Activation::HardTanh if w.abs() >= S::ONE => S::ZERO,
            _ => g,
        }
    }
}

fn clamp_unit<S: Scalar>(x: S) -> S {
    if x > S::ONE {
        S::ONE
    } else if x < -S::ONE {
        -S::ONE
    } else {
        x
    }
}

/// Convolution block: `conv(kernel) -> maxpool(pool) -> [bn] -> activation`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub filters: usize,
    pub kernel: usize,
    pub pool: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    pub d_in: usize,
    pub num_classes: usize,
    pub convs: Vec<ConvSpec>,
    /// Hidden dense widths, each followed by `[bn] -> activation -> dropout`.
    pub hidden: Vec<usize>,
    pub batchnorm: bool,
    pub dropout: f32,
    pub activation: Activation,
    pub bn_momentum: f32,
    pub bn_epsilon: f32,
}

impl Architecture {
    /// Conv blocks of 128, 256 and 512 filters (kernel 3, valid padding,
    /// pool widths 3, 2, 3), one 128-unit dense layer with dropout 0.5,
    /// then the class layer.
    pub fn text_lenet(d_in: usize, num_classes: usize, activation: Activation) -> Self {
        Architecture {
            d_in,
            num_classes,
            convs: vec![
                ConvSpec { filters: 128, kernel: 3, pool: 3 },
                ConvSpec { filters: 256, kernel: 3, pool: 2 },
                ConvSpec { filters: 512, kernel: 3, pool: 3 },
            ],
            hidden: vec![128],
            batchnorm: true,
            dropout: 0.5,
            activation,
            bn_momentum: 0.1,
            bn_epsilon: 1e-5,
        }
    }

    /// Sequence lengths: input, then after each convolution and each pool.
    pub fn spatial_chain(&self) -> Result<Vec<usize>, BnnError> {
        let mut len = self.d_in;
        let mut chain = vec![len];
        for (i, c) in self.convs.iter().enumerate() {
            if c.kernel == 0 || c.pool == 0 || c.filters == 0 {
                return Err(BnnError::InvalidConfig(format!("conv block {i} has a zero size")));
            }
            if len < c.kernel {
                return Err(BnnError::ShapeMismatch(format!(
                    "conv block {i}: length {len} shorter than kernel {}",
                    c.kernel
                )));
            }
            len = len + 1 - c.kernel;
            chain.push(len);
            len /= c.pool;
            if len == 0 {
                return Err(BnnError::ShapeMismatch(format!("conv block {i}: pooled length is zero")));
            }
            chain.push(len);
        }
        Ok(chain)
    }

    /// Width of the flattened feature vector feeding the dense layers.
    pub fn flatten_size(&self) -> Result<usize, BnnError> {
        let len = *self.spatial_chain()?.last().unwrap();
        let ch = self.convs.last().map_or(1, |c| c.filters);
        Ok(len * ch)
    }

    pub fn validate(&self) -> Result<(), BnnError> {
        if self.d_in == 0 || self.num_classes < 2 {
            return Err(BnnError::InvalidConfig("need d_in > 0 and at least two classes".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(BnnError::InvalidConfig(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.hidden.contains(&0) {
            return Err(BnnError::InvalidConfig("zero-width dense layer".into()));
        }
        if self.bn_epsilon.is_nan() || self.bn_epsilon <= 0.0 {
            return Err(BnnError::InvalidConfig("batch-norm epsilon must be positive".into()));
        }
        self.flatten_size().map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer<S> {
    Conv { kernel: usize, in_ch: usize, out_ch: usize, weights: LatentTensor<S> },
    MaxPool { width: usize },
    BatchNorm(BatchNormState<S>),
    Activation,
    Flatten,
    Dense { in_dim: usize, out_dim: usize, weights: LatentTensor<S> },
    Dropout { rate: f32 },
}

enum Cache<S> {
    Conv { input: Batch<S>, w: Vec<S> },
    Pool { arg: Vec<usize>, in_len: usize },
    Norm(BnCache<S>),
    Act { pre: Vec<S> },
    Flatten { len: usize, ch: usize },
    Dense { input: Vec<S>, w: Vec<S> },
    Dropout { mask: Vec<S> },
}

/// Output of one training-mode forward/backward pass.
#[derive(Debug, Clone)]
pub struct StepOutput<S> {
    /// Mean cross-entropy over the batch.
    pub loss: f64,
    /// Gradients in [`Model::params`] order.
    pub grads: Vec<Vec<S>>,
    pub logits: Vec<Vec<S>>,
}

/// Text-LeNet style 1D CNN with latent weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<S> {
    arch: Architecture,
    layers: Vec<Layer<S>>,
    rng_seed: u64,
    pub(crate) epochs_done: u32,
    pub(crate) optimizer: Vec<Vec<S>>,
}

pub type BnnModel = Model<f32>;

fn xavier<S: Scalar>(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize, n: usize) -> Vec<S> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| S::from_f64(rng.gen_range(-limit..limit))).collect()
}

impl<S: Scalar> Model<S> {
    /// Builds the layer stack with Xavier-uniform latent weights.
    pub fn new(arch: Architecture, rng_seed: u64) -> Result<Self, BnnError> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let momentum = S::from_f64(arch.bn_momentum as f64);
        let eps = S::from_f64(arch.bn_epsilon as f64);
        let mut layers = Vec::new();
        let mut in_ch = 1;
        for c in &arch.convs {
            let n = c.kernel * in_ch * c.filters;
            let w = xavier(&mut rng, c.kernel * in_ch, c.kernel * c.filters, n);
            layers.push(Layer::Conv {
                kernel: c.kernel,
                in_ch,
                out_ch: c.filters,
                weights: LatentTensor::new(vec![c.kernel, in_ch, c.filters], w),
            });
            layers.push(Layer::MaxPool { width: c.pool });
            if arch.batchnorm {
                layers.push(Layer::BatchNorm(BatchNormState::new(c.filters, momentum, eps)));
            }
            layers.push(Layer::Activation);
            in_ch = c.filters;
        }
        layers.push(Layer::Flatten);
        let mut width = arch.flatten_size()?;
        let dims: Vec<usize> = arch.hidden.iter().copied().chain([arch.num_classes]).collect();
        for (i, &out) in dims.iter().enumerate() {
            let w = xavier(&mut rng, width, out, width * out);
            layers.push(Layer::Dense {
                in_dim: width,
                out_dim: out,
                weights: LatentTensor::new(vec![width, out], w),
            });
            if arch.batchnorm {
                layers.push(Layer::BatchNorm(BatchNormState::new(out, momentum, eps)));
            }
            if i + 1 < dims.len() {
                layers.push(Layer::Activation);
                if arch.dropout > 0.0 {
                    layers.push(Layer::Dropout { rate: arch.dropout });
                }
            }
            width = out;
        }
        let mut model = Model { arch, layers, rng_seed, epochs_done: 0, optimizer: Vec::new() };
        model.optimizer = model.params().iter().map(|p| vec![S::ZERO; p.len()]).collect();
        Ok(model)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn layers(&self) -> &[Layer<S>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<S>] {
        &mut self.layers
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn epochs_done(&self) -> u32 {
        self.epochs_done
    }

    pub fn d_in(&self) -> usize {
        self.arch.d_in
    }

    pub fn num_classes(&self) -> usize {
        self.arch.num_classes
    }

    pub fn is_binarized(&self) -> bool {
        self.arch.activation == Activation::Sign
    }

    /// Trainable tensors: conv/dense weights and batch-norm gamma, beta, in
    /// layer order.
    pub fn params(&self) -> Vec<&[S]> {
        let mut out: Vec<&[S]> = Vec::new();
        for l in &self.layers {
            match l {
                Layer::Conv { weights, .. } | Layer::Dense { weights, .. } => out.push(&weights.values),
                Layer::BatchNorm(bn) => {
                    out.push(&bn.gamma);
                    out.push(&bn.beta);
                }
                _ => {}
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Vec<S>> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            match l {
                Layer::Conv { weights, .. } | Layer::Dense { weights, .. } => out.push(&mut weights.values),
                Layer::BatchNorm(bn) => {
                    out.push(&mut bn.gamma);
                    out.push(&mut bn.beta);
                }
                _ => {}
            }
        }
        out
    }

    /// For each parameter, whether it is a latent weight kept in [-1, 1].
    pub fn clipped_params(&self) -> Vec<bool> {
        let bin = self.arch.activation.binarizes();
        let mut out = Vec::new();
        for l in &self.layers {
            match l {
                Layer::Conv { .. } | Layer::Dense { .. } => out.push(bin),
                Layer::BatchNorm(_) => out.extend([false, false]),
                _ => {}
            }
        }
        out
    }

    /// Converts an embedding into the network's input; binarized models
    /// only accept binary embeddings.
    pub fn input_vector(&self, input: &HdVector) -> Result<Vec<S>, BnnError> {
        if input.dim() != self.arch.d_in {
            return Err(BnnError::DimMismatch { expected: self.arch.d_in, found: input.dim() });
        }
        if self.is_binarized() && input.as_binary().is_none() {
            return Err(BnnError::InputKind("binarized model requires a binary embedding".into()));
        }
        Ok(input.to_f32().into_iter().map(|x| S::from_f64(x as f64)).collect())
    }

    fn check_batch(&self, x: &Batch<S>) -> Result<(), BnnError> {
        if x.ch != 1 || x.len != self.arch.d_in {
            return Err(BnnError::DimMismatch { expected: self.arch.d_in, found: x.len * x.ch });
        }
        Ok(())
    }

    /// Eval-mode forward: running batch-norm statistics, no dropout.
    /// Returns one logit vector per sample.
    pub fn forward_eval(&self, x: &Batch<S>) -> Result<Vec<Vec<S>>, BnnError> {
        self.check_batch(x)?;
        let act = self.arch.activation;
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = match layer {
                Layer::Conv { kernel, in_ch, out_ch, weights } => {
                    let w: Vec<S> = weights.values.iter().map(|&v| act.quantize(v)).collect();
                    conv_forward(&cur, *kernel, *in_ch, *out_ch, &w)
                }
                Layer::MaxPool { width } => pool_forward(&cur, *width).0,
                Layer::BatchNorm(bn) => {
                    bn.forward_eval(&mut cur.data);
                    cur
                }
                Layer::Activation => {
                    cur.data.iter_mut().for_each(|v| *v = act.apply(*v));
                    cur
                }
                Layer::Flatten => Batch { n: cur.n, len: 1, ch: cur.len * cur.ch, data: cur.data },
                Layer::Dense { in_dim, out_dim, weights } => {
                    let w: Vec<S> = weights.values.iter().map(|&v| act.quantize(v)).collect();
                    dense_forward(&cur, *in_dim, *out_dim, &w)
                }
                Layer::Dropout { .. } => cur,
            };
        }
        Ok(cur.data.chunks_exact(self.arch.num_classes).map(<[S]>::to_vec).collect())
    }

    /// Logits for a single embedding in eval mode.
    pub fn logits(&self, input: &HdVector) -> Result<Vec<S>, BnnError> {
        let v = self.input_vector(input)?;
        Ok(self.forward_eval(&Batch::from_vectors(&[v]))?.remove(0))
    }

    /// Training-mode forward and backward pass over one batch. Batch-norm
    /// running statistics are updated; `clip` bounds the straight-through
    /// gradient of `sign`.
    pub fn loss_and_gradients<R: Rng>(
        &mut self,
        x: &Batch<S>,
        labels: &[usize],
        clip: S,
        rng: &mut R,
    ) -> Result<StepOutput<S>, BnnError> {
        self.check_batch(x)?;
        if labels.len() != x.n {
            return Err(BnnError::ShapeMismatch(format!("{} labels for {} samples", labels.len(), x.n)));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= self.arch.num_classes) {
            return Err(BnnError::LabelOutOfRange { label: bad, classes: self.arch.num_classes });
        }
        let act = self.arch.activation;
        let n = x.n;
        let mut caches: Vec<Cache<S>> = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for layer in &mut self.layers {
            cur = match layer {
                Layer::Conv { kernel, in_ch, out_ch, weights } => {
                    let w: Vec<S> = weights.values.iter().map(|&v| act.quantize(v)).collect();
                    let out = conv_forward(&cur, *kernel, *in_ch, *out_ch, &w);
                    caches.push(Cache::Conv { input: cur, w });
                    out
                }
                Layer::MaxPool { width } => {
                    let (out, arg) = pool_forward(&cur, *width);
                    caches.push(Cache::Pool { arg, in_len: cur.len });
                    out
                }
                Layer::BatchNorm(bn) => {
                    let cache = bn.forward_train(&mut cur.data, n)?;
                    caches.push(Cache::Norm(cache));
                    cur
                }
                Layer::Activation => {
                    let pre = cur.data.clone();
                    cur.data.iter_mut().for_each(|v| *v = act.apply(*v));
                    caches.push(Cache::Act { pre });
                    cur
                }
                Layer::Flatten => {
                    caches.push(Cache::Flatten { len: cur.len, ch: cur.ch });
                    Batch { n, len: 1, ch: cur.len * cur.ch, data: cur.data }
                }
                Layer::Dense { in_dim, out_dim, weights } => {
                    let w: Vec<S> = weights.values.iter().map(|&v| act.quantize(v)).collect();
                    let out = dense_forward(&cur, *in_dim, *out_dim, &w);
                    caches.push(Cache::Dense { input: cur.data, w });
                    out
                }
                Layer::Dropout { rate } => {
                    let keep = 1.0 - *rate as f64;
                    let scale = S::from_f64(1.0 / keep);
                    let mask: Vec<S> = (0..cur.data.len())
                        .map(|_| if rng.gen::<f64>() < keep { scale } else { S::ZERO })
                        .collect();
                    cur.data.iter_mut().zip(&mask).for_each(|(v, &m)| *v *= m);
                    caches.push(Cache::Dropout { mask });
                    cur
                }
            };
        }

        let classes = self.arch.num_classes;
        let logits: Vec<Vec<S>> = cur.data.chunks_exact(classes).map(<[S]>::to_vec).collect();
        let mut loss = 0.0;
        let inv_n = S::from_f64(1.0 / n as f64);
        let mut dy = Batch { n, len: 1, ch: classes, data: Vec::with_capacity(n * classes) };
        for (l, &label) in logits.iter().zip(labels) {
            let (li, g) = super::ops::loss_and_grad(l, label);
            loss += li;
            dy.data.extend(g.into_iter().map(|v| v * inv_n));
        }
        loss /= n as f64;

        let mut grads_rev: Vec<Vec<S>> = Vec::new();
        for (idx, (layer, cache)) in self.layers.iter().zip(caches).enumerate().rev() {
            dy = match (layer, cache) {
                (Layer::Conv { kernel, in_ch, out_ch, weights }, Cache::Conv { input, w }) => {
                    let mut dw = vec![S::ZERO; w.len()];
                    let need_dx = idx > 0;
                    let mut dx = Batch::zeros(if need_dx { n } else { 0 }, input.len, input.ch);
                    for i in 0..n {
                        let dxs = if need_dx { Some(dx.sample_mut(i)) } else { None };
                        conv1d_backward(input.sample(i), input.len, *in_ch, &w, *kernel, *out_ch, dy.sample(i), &mut dw, dxs);
                    }
                    for (g, &wv) in dw.iter_mut().zip(&weights.values) {
                        *g = act.weight_grad(wv, *g);
                    }
                    grads_rev.push(dw);
                    dx
                }
                (Layer::MaxPool { .. }, Cache::Pool { arg, in_len }) => {
                    let mut dx = Batch::zeros(n, in_len, dy.ch);
                    let per_out = dy.sample_size();
                    for i in 0..n {
                        let src = &dy.data[i * per_out..(i + 1) * per_out];
                        let dst = dx.sample_mut(i);
                        for (j, &g) in src.iter().enumerate() {
                            dst[arg[j + i * per_out]] += g;
                        }
                    }
                    dx
                }
                (Layer::BatchNorm(bn), Cache::Norm(cache)) => {
                    let (dgamma, dbeta) = bn.backward(&cache, &mut dy.data);
                    grads_rev.push(dbeta);
                    grads_rev.push(dgamma);
                    dy
                }
                (Layer::Activation, Cache::Act { pre }) => {
                    for (g, &x) in dy.data.iter_mut().zip(&pre) {
                        *g = act.grad(x, *g, clip);
                    }
                    dy
                }
                (Layer::Flatten, Cache::Flatten { len, ch }) => Batch { n, len, ch, data: dy.data },
                (Layer::Dense { in_dim, out_dim, weights }, Cache::Dense { input, w }) => {
                    let (i_d, o_d) = (*in_dim, *out_dim);
                    let mut dw = vec![S::ZERO; i_d * o_d];
                    super::scalar::gemm(
                        i_d,
                        n,
                        o_d,
                        super::scalar::View { data: &input, rs: 1, cs: i_d },
                        super::scalar::View { data: &dy.data, rs: o_d, cs: 1 },
                        S::ZERO,
                        &mut dw,
                        o_d,
                        1,
                    );
                    let mut dx = vec![S::ZERO; n * i_d];
                    super::scalar::gemm(
                        n,
                        o_d,
                        i_d,
                        super::scalar::View { data: &dy.data, rs: o_d, cs: 1 },
                        super::scalar::View { data: &w, rs: 1, cs: o_d },
                        S::ZERO,
                        &mut dx,
                        i_d,
                        1,
                    );
                    for (g, &wv) in dw.iter_mut().zip(&weights.values) {
                        *g = act.weight_grad(wv, *g);
                    }
                    grads_rev.push(dw);
                    Batch { n, len: 1, ch: i_d, data: dx }
                }
                (Layer::Dropout { .. }, Cache::Dropout { mask }) => {
                    dy.data.iter_mut().zip(&mask).for_each(|(g, &m)| *g *= m);
                    dy
                }
                _ => unreachable!("cache kind follows layer kind"),
            };
        }
        grads_rev.reverse();
        Ok(StepOutput { loss, grads: grads_rev, logits })
    }
}

fn conv_forward<S: Scalar>(x: &Batch<S>, k: usize, in_ch: usize, out_ch: usize, w: &[S]) -> Batch<S> {
    debug_assert_eq!(x.ch, in_ch);
    let out_len = x.len + 1 - k;
    let mut out = Batch::zeros(x.n, out_len, out_ch);
    for i in 0..x.n {
        conv1d_raw(x.sample(i), x.len, in_ch, w, k, out_ch, out.sample_mut(i));
    }
    out
}

// Argmax indices are flat per-sample offsets, stored sample after sample.
fn pool_forward<S: Scalar>(x: &Batch<S>, width: usize) -> (Batch<S>, Vec<usize>) {
    let out_len = x.len / width;
    let mut out = Batch::zeros(x.n, out_len, x.ch);
    let mut args = Vec::with_capacity(x.n * out_len * x.ch);
    for i in 0..x.n {
        let (v, a) = maxpool1d(x.sample(i), x.len, x.ch, width);
        out.sample_mut(i).copy_from_slice(&v);
        args.extend(a);
    }
    (out, args)
}

fn dense_forward<S: Scalar>(x: &Batch<S>, in_dim: usize, out_dim: usize, w: &[S]) -> Batch<S> {
    debug_assert_eq!(x.len * x.ch, in_dim);
    let mut out = Batch::zeros(x.n, 1, out_dim);
    super::scalar::gemm(
        x.n,
        in_dim,
        out_dim,
        super::scalar::View { data: &x.data, rs: in_dim, cs: 1 },
        super::scalar::View { data: w, rs: out_dim, cs: 1 },
        S::ZERO,
        &mut out.data,
        out_dim,
        1,
    );
    out
}
