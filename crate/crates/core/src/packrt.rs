//! Bit-packed inference runtime.
//!
//! A trained binarized model is exported to a compact little-endian file:
//! sign weights as 64-bit words, and every batch-norm + sign pair folded
//! into an integer threshold. Inference uses only XOR/popcount, integer
//! max-pooling and threshold comparisons; the output layer keeps a real
//! affine map so its logits match the float model exactly.

use thiserror::Error;

use crate::bnn::{label_of, Activation, BatchNormState, BnnModel, Layer, PayloadSpan};
use crate::bytes::{Reader, Truncated, Writer};
use crate::hdcore::BitVector;

pub const PACKED_MAGIC: &[u8; 4] = b"HBNN";
pub const PACKED_VERSION: u16 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PackError {
    #[error("not a packed model (bad magic)")]
    BadMagic,
    #[error("packed model length is inconsistent: {0}")]
    CorruptLength(String),
    #[error("unsupported packed format version {found} (expected {expected})")]
    FormatVersionMismatch { expected: u16, found: u16 },
    #[error("malformed packed model: {0}")]
    Malformed(String),
    #[error("model has no batch-norm running statistics yet")]
    UntrainedModel,
    #[error("only sign-activated models can be packed")]
    NotBinarized,
    #[error("input dimension {found} does not match model input {expected}")]
    DimMismatch { expected: usize, found: usize },
}

impl From<Truncated> for PackError {
    fn from(_: Truncated) -> Self {
        PackError::CorruptLength("unexpected end of data".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PackedKind {
    /// `kernel x in_ch -> out_ch` convolution followed by max-pooling.
    Conv { kernel: usize, in_ch: usize, out_ch: usize, pool: usize },
    /// Hidden dense layer ending in a threshold.
    Dense { in_dim: usize, out_dim: usize },
    /// Final dense layer with real-valued logits.
    Output { in_dim: usize, out_dim: usize },
}

impl PackedKind {
    fn code(self) -> u8 {
        match self {
            PackedKind::Conv { .. } => 0,
            PackedKind::Dense { .. } => 1,
            PackedKind::Output { .. } => 2,
        }
    }

    fn dims(self) -> [usize; 4] {
        match self {
            PackedKind::Conv { kernel, in_ch, out_ch, pool } => [kernel, in_ch, out_ch, pool],
            PackedKind::Dense { in_dim, out_dim } | PackedKind::Output { in_dim, out_dim } => [in_dim, out_dim, 0, 0],
        }
    }

    /// Weights feeding one output channel.
    pub fn fan_in(self) -> usize {
        match self {
            PackedKind::Conv { kernel, in_ch, .. } => kernel * in_ch,
            PackedKind::Dense { in_dim, .. } | PackedKind::Output { in_dim, .. } => in_dim,
        }
    }

    pub fn outputs(self) -> usize {
        match self {
            PackedKind::Conv { out_ch, .. } => out_ch,
            PackedKind::Dense { out_dim, .. } | PackedKind::Output { out_dim, .. } => out_dim,
        }
    }
}

/// Per-channel decision of a folded batch-norm + sign: the output bit is
/// `+1` iff `x >= threshold` (or `x <= threshold` when `flip` is set).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub threshold: f32,
    pub flip: bool,
}

impl Threshold {
    #[inline]
    pub fn fire(self, x: i32) -> bool {
        let x = x as f32;
        if self.flip {
            x <= self.threshold
        } else {
            x >= self.threshold
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackedLayer {
    pub kind: PackedKind,
    /// Sign bits (1 = +1), filter-major: `[out][k][in]` or `[out][in]`,
    /// as one dense stream.
    pub weights: Vec<u64>,
    /// One per output channel; empty for the output layer.
    pub thresholds: Vec<Threshold>,
    /// Output layer only: `logit = score * scale + shift`.
    pub scale: Vec<f32>,
    pub shift: Vec<f32>,
    // Each filter re-aligned to start on a word boundary.
    rows: Vec<u64>,
}

fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

fn get_bit(words: &[u64], i: usize) -> bool {
    words[i / 64] >> (i % 64) & 1 == 1
}

fn set_bit(words: &mut [u64], i: usize) {
    words[i / 64] |= 1 << (i % 64);
}

/// Copies `len` bits starting at bit `start` into `out` (word aligned,
/// zero padded).
fn extract_bits(src: &[u64], start: usize, len: usize, out: &mut [u64]) {
    let word = start / 64;
    let shift = start % 64;
    let n = words_for(len);
    for (j, o) in out[..n].iter_mut().enumerate() {
        let lo = src.get(word + j).copied().unwrap_or(0);
        *o = if shift == 0 {
            lo
        } else {
            let hi = src.get(word + j + 1).copied().unwrap_or(0);
            (lo >> shift) | (hi << (64 - shift))
        };
    }
    if !len.is_multiple_of(64) {
        out[n - 1] &= (1u64 << (len % 64)) - 1;
    }
}

fn xor_popcount(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

impl PackedLayer {
    fn new(kind: PackedKind, weights: Vec<u64>, thresholds: Vec<Threshold>, scale: Vec<f32>, shift: Vec<f32>) -> Self {
        let fan_in = kind.fan_in();
        let row_words = words_for(fan_in);
        let mut rows = vec![0u64; row_words * kind.outputs()];
        for o in 0..kind.outputs() {
            extract_bits(&weights, o * fan_in, fan_in, &mut rows[o * row_words..(o + 1) * row_words]);
        }
        PackedLayer { kind, weights, thresholds, scale, shift, rows }
    }

    /// Sign of weight `i` in packed order.
    pub fn weight_positive(&self, i: usize) -> bool {
        get_bit(&self.weights, i)
    }

    fn row(&self, o: usize) -> &[u64] {
        let w = words_for(self.kind.fan_in());
        &self.rows[o * w..(o + 1) * w]
    }

    /// Integer dot products of a `fan_in`-bit window with every filter.
    fn dots(&self, window: &[u64], out: &mut [i32]) {
        let fan_in = self.kind.fan_in() as i32;
        for (o, d) in out.iter_mut().enumerate() {
            *d = fan_in - 2 * xor_popcount(window, self.row(o)) as i32;
        }
    }
}

/// Exported model ready for XNOR/popcount inference.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedModel {
    pub d_in: usize,
    pub num_classes: usize,
    pub layers: Vec<PackedLayer>,
}

/// Result of one packed inference.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedOutput {
    pub label: usize,
    /// Integer pre-activations of the output layer.
    pub scores: Vec<i32>,
    pub logits: Vec<f32>,
}

/// Folds `sign(a * x + b)` over integers `x` in `[-n, n]` into a threshold.
/// The comparison is evaluated in `f32` exactly as the float model does, so
/// the result agrees bit for bit. `a = 0` yields a constant outside the range.
pub fn fold_threshold(a: f32, b: f32, n: usize) -> Threshold {
    let n = n as i64;
    let fires = |x: i64| (x as f32) * a + b >= 0.0;
    if a > 0.0 {
        // Smallest firing x; n + 1 when none fires.
        let (mut lo, mut hi) = (-n, n + 1);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if fires(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Threshold { threshold: lo as f32, flip: false }
    } else if a < 0.0 {
        // Largest firing x; -n - 1 when none fires.
        let (mut lo, mut hi) = (-n - 1, n);
        while lo < hi {
            let mid = lo + (hi - lo + 1) / 2;
            if fires(mid) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        Threshold { threshold: lo as f32, flip: true }
    } else {
        let t = if fires(0) { -n - 1 } else { n + 1 };
        Threshold { threshold: t as f32, flip: false }
    }
}

fn bn_affine(bn: Option<&BatchNormState<f32>>, channels: usize) -> (Vec<f32>, Vec<f32>) {
    match bn {
        Some(bn) => bn.eval_affine(),
        None => (vec![1.0; channels], vec![0.0; channels]),
    }
}

/// Packs a trained sign-activated model.
pub fn export_model(model: &BnnModel) -> Result<PackedModel, PackError> {
    let arch = model.architecture();
    if arch.activation != Activation::Sign {
        return Err(PackError::NotBinarized);
    }
    let layers = model.layers();
    if layers.iter().any(|l| matches!(l, Layer::BatchNorm(bn) if !bn.initialized)) {
        return Err(PackError::UntrainedModel);
    }
    let bn_after = |i: usize| -> Option<&BatchNormState<f32>> {
        layers[i + 1..]
            .iter()
            .take_while(|l| !matches!(l, Layer::Conv { .. } | Layer::Dense { .. } | Layer::Activation))
            .find_map(|l| match l {
                Layer::BatchNorm(bn) => Some(bn),
                _ => None,
            })
    };
    let mut out = Vec::new();
    let dense_total = layers.iter().filter(|l| matches!(l, Layer::Dense { .. })).count();
    let mut dense_seen = 0;
    for (i, l) in layers.iter().enumerate() {
        match l {
            Layer::Conv { kernel, in_ch, out_ch, weights } => {
                let pool = match layers.get(i + 1) {
                    Some(Layer::MaxPool { width }) => *width,
                    _ => 1,
                };
                let kind = PackedKind::Conv { kernel: *kernel, in_ch: *in_ch, out_ch: *out_ch, pool };
                let fan_in = kind.fan_in();
                let mut bits = vec![0u64; words_for(fan_in * out_ch)];
                for o in 0..*out_ch {
                    for k in 0..*kernel {
                        for c in 0..*in_ch {
                            // Latent layout is [k][in][out].
                            if weights.values[(k * in_ch + c) * out_ch + o] >= 0.0 {
                                set_bit(&mut bits, o * fan_in + k * in_ch + c);
                            }
                        }
                    }
                }
                let (a, b) = bn_affine(bn_after(i), *out_ch);
                let th = a.iter().zip(&b).map(|(&a, &b)| fold_threshold(a, b, fan_in)).collect();
                out.push(PackedLayer::new(kind, bits, th, Vec::new(), Vec::new()));
            }
            Layer::Dense { in_dim, out_dim, weights } => {
                dense_seen += 1;
                let mut bits = vec![0u64; words_for(in_dim * out_dim)];
                for o in 0..*out_dim {
                    for j in 0..*in_dim {
                        // Latent layout is [in][out].
                        if weights.values[j * out_dim + o] >= 0.0 {
                            set_bit(&mut bits, o * in_dim + j);
                        }
                    }
                }
                let (a, b) = bn_affine(bn_after(i), *out_dim);
                if dense_seen == dense_total {
                    let kind = PackedKind::Output { in_dim: *in_dim, out_dim: *out_dim };
                    out.push(PackedLayer::new(kind, bits, Vec::new(), a, b));
                } else {
                    let kind = PackedKind::Dense { in_dim: *in_dim, out_dim: *out_dim };
                    let th = a.iter().zip(&b).map(|(&a, &b)| fold_threshold(a, b, *in_dim)).collect();
                    out.push(PackedLayer::new(kind, bits, th, Vec::new(), Vec::new()));
                }
            }
            _ => {}
        }
    }
    let pm = PackedModel { d_in: arch.d_in, num_classes: arch.num_classes, layers: out };
    pm.validate()?;
    Ok(pm)
}

impl PackedModel {
    /// Checks that layer shapes chain from `d_in` to `num_classes`.
    pub fn validate(&self) -> Result<(), PackError> {
        let bad = |m: String| Err(PackError::Malformed(m));
        let (mut len, mut ch) = (self.d_in, 1usize);
        let mut flat = false;
        if self.layers.is_empty() {
            return bad("no layers".into());
        }
        for (i, l) in self.layers.iter().enumerate() {
            let last = i + 1 == self.layers.len();
            let fan_in = l.kind.fan_in();
            if fan_in == 0 || l.kind.outputs() == 0 || fan_in > (1 << 24) {
                return bad(format!("layer {i} has a degenerate shape"));
            }
            if l.weights.len() != words_for(fan_in * l.kind.outputs()) {
                return Err(PackError::CorruptLength(format!("layer {i} weight words")));
            }
            match l.kind {
                PackedKind::Conv { kernel, in_ch, out_ch, pool } => {
                    if flat || in_ch != ch || kernel > len || pool == 0 || (len + 1 - kernel) / pool == 0 {
                        return bad(format!("conv layer {i} does not fit its input {len}x{ch}"));
                    }
                    len = (len + 1 - kernel) / pool;
                    ch = out_ch;
                }
                PackedKind::Dense { in_dim, out_dim } | PackedKind::Output { in_dim, out_dim } => {
                    if in_dim != len * ch {
                        return bad(format!("dense layer {i} expects {in_dim} inputs, got {}", len * ch));
                    }
                    flat = true;
                    len = 1;
                    ch = out_dim;
                }
            }
            let is_output = matches!(l.kind, PackedKind::Output { .. });
            if is_output != last {
                return bad("the output layer must come last, exactly once".into());
            }
            if is_output {
                if l.scale.len() != ch || l.shift.len() != ch || !l.thresholds.is_empty() {
                    return bad("output affine size mismatch".into());
                }
            } else if l.thresholds.len() != ch || !l.scale.is_empty() || !l.shift.is_empty() {
                return bad(format!("layer {i} threshold count mismatch"));
            }
            if l.thresholds.iter().any(|t| !t.threshold.is_finite()) {
                return bad(format!("layer {i} has a non-finite threshold"));
            }
        }
        if ch != self.num_classes {
            return bad(format!("output width {ch} != {} classes", self.num_classes));
        }
        Ok(())
    }

    /// Serializes the model; also reports where each weight payload lies.
    pub fn encode(&self) -> (Vec<u8>, Vec<PayloadSpan>) {
        let mut w = Writer::new();
        w.bytes(PACKED_MAGIC);
        w.u16(PACKED_VERSION);
        w.u32(self.d_in as u32);
        w.u32(self.num_classes as u32);
        w.u16(self.layers.len() as u16);
        let mut spans = Vec::new();
        for l in &self.layers {
            w.u8(l.kind.code());
            for d in l.kind.dims() {
                w.u32(d as u32);
            }
            let offset = w.pos();
            for &word in &l.weights {
                w.u64(word);
            }
            spans.push(PayloadSpan {
                offset,
                len: w.pos() - offset,
                weights: l.kind.fan_in() * l.kind.outputs(),
            });
            if matches!(l.kind, PackedKind::Output { .. }) {
                w.f32s(&l.scale);
                w.f32s(&l.shift);
            } else {
                for t in &l.thresholds {
                    w.f32(t.threshold);
                }
                for t in &l.thresholds {
                    w.u8(t.flip as u8);
                }
            }
        }
        (w.buf, spans)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.encode().0
    }

    /// Byte ranges of the weight payloads in the serialized form.
    pub fn weight_payload_spans(&self) -> Vec<PayloadSpan> {
        self.encode().1
    }

    /// Packed inference on a `d_in`-bit input.
    pub fn infer(&self, input: &BitVector) -> Result<PackedOutput, PackError> {
        infer_packed(self, input)
    }
}

pub fn load_model(bytes: &[u8]) -> Result<PackedModel, PackError> {
    let mut r = Reader::new(bytes);
    if r.take(4).map_err(|_| PackError::BadMagic)? != PACKED_MAGIC {
        return Err(PackError::BadMagic);
    }
    let version = r.u16()?;
    if version != PACKED_VERSION {
        return Err(PackError::FormatVersionMismatch { expected: PACKED_VERSION, found: version });
    }
    let d_in = r.u32()? as usize;
    let num_classes = r.u32()? as usize;
    let n_layers = r.u16()? as usize;
    let mut layers = Vec::with_capacity(n_layers);
    for i in 0..n_layers {
        let code = r.u8()?;
        let mut dims = [0usize; 4];
        for d in &mut dims {
            *d = r.u32()? as usize;
        }
        let kind = match code {
            0 => PackedKind::Conv { kernel: dims[0], in_ch: dims[1], out_ch: dims[2], pool: dims[3] },
            1 => PackedKind::Dense { in_dim: dims[0], out_dim: dims[1] },
            2 => PackedKind::Output { in_dim: dims[0], out_dim: dims[1] },
            _ => return Err(PackError::Malformed(format!("layer {i}: unknown kind {code}"))),
        };
        if kind.dims() != dims {
            return Err(PackError::Malformed(format!("layer {i}: nonzero unused dims")));
        }
        let bits = kind.fan_in().checked_mul(kind.outputs()).ok_or_else(|| PackError::Malformed("overflow".into()))?;
        let weights = r.u64s(words_for(bits))?;
        if bits % 64 != 0 && weights.last().is_some_and(|w| w >> (bits % 64) != 0) {
            return Err(PackError::Malformed(format!("layer {i}: nonzero weight padding")));
        }
        let outs = kind.outputs();
        let layer = if code == 2 {
            let scale = r.f32s(outs)?;
            let shift = r.f32s(outs)?;
            PackedLayer::new(kind, weights, Vec::new(), scale, shift)
        } else {
            let th = r.f32s(outs)?;
            let mut thresholds = Vec::with_capacity(outs);
            for t in th {
                let flip = match r.u8()? {
                    0 => false,
                    1 => true,
                    f => return Err(PackError::Malformed(format!("layer {i}: flip byte {f}"))),
                };
                thresholds.push(Threshold { threshold: t, flip });
            }
            PackedLayer::new(kind, weights, thresholds, Vec::new(), Vec::new())
        };
        layers.push(layer);
    }
    if r.remaining() != 0 {
        return Err(PackError::CorruptLength(format!("{} trailing bytes", r.remaining())));
    }
    let pm = PackedModel { d_in, num_classes, layers };
    pm.validate()?;
    Ok(pm)
}

/// XNOR/popcount forward pass. The label is the argmax of the logits,
/// lowest index on ties.
pub fn infer_packed(pm: &PackedModel, input: &BitVector) -> Result<PackedOutput, PackError> {
    if input.dim() != pm.d_in {
        return Err(PackError::DimMismatch { expected: pm.d_in, found: input.dim() });
    }
    // Activations travel as a channels-last bit stream.
    let mut bits: Vec<u64> = input.words().to_vec();
    let mut len = pm.d_in;
    let mut scores = Vec::new();
    for layer in &pm.layers {
        match layer.kind {
            PackedKind::Conv { kernel, in_ch, out_ch, pool } => {
                let fan_in = kernel * in_ch;
                let conv_len = len + 1 - kernel;
                let mut window = vec![0u64; words_for(fan_in)];
                let mut pre = vec![0i32; conv_len * out_ch];
                for t in 0..conv_len {
                    extract_bits(&bits, t * in_ch, fan_in, &mut window);
                    layer.dots(&window, &mut pre[t * out_ch..(t + 1) * out_ch]);
                }
                let out_len = conv_len / pool;
                let mut next = vec![0u64; words_for(out_len * out_ch)];
                for t in 0..out_len {
                    for c in 0..out_ch {
                        let best = (0..pool).map(|j| pre[(t * pool + j) * out_ch + c]).max().unwrap();
                        if layer.thresholds[c].fire(best) {
                            set_bit(&mut next, t * out_ch + c);
                        }
                    }
                }
                bits = next;
                len = out_len;
            }
            PackedKind::Dense { in_dim, out_dim } => {
                let mut pre = vec![0i32; out_dim];
                layer.dots(&bits[..words_for(in_dim)], &mut pre);
                let mut next = vec![0u64; words_for(out_dim)];
                for (o, &x) in pre.iter().enumerate() {
                    if layer.thresholds[o].fire(x) {
                        set_bit(&mut next, o);
                    }
                }
                bits = next;
                len = 1;
            }
            PackedKind::Output { in_dim, out_dim } => {
                scores = vec![0i32; out_dim];
                layer.dots(&bits[..words_for(in_dim)], &mut scores);
            }
        }
    }
    let last = pm.layers.last().expect("validated model has layers");
    let logits: Vec<f32> = scores
        .iter()
        .zip(last.scale.iter().zip(&last.shift))
        .map(|(&x, (&a, &b))| (x as f32) * a + b)
        .collect();
    Ok(PackedOutput { label: label_of(&logits), scores, logits })
}
