//! Versioned binary checkpoint of an `f32` model.
//!
//! Layout (little-endian): magic `HBCK`, u16 version, architecture
//! descriptor, u64 rng seed, u32 epochs done, then every trainable tensor
//! (u64 length + f32 values), the batch-norm running statistics, and the
//! RMSProp accumulators.

use super::model::{Activation, Architecture, ConvSpec, Layer};
use super::{BnnError, BnnModel, Model};
use crate::bytes::{Reader, Truncated, Writer};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"HBCK";
pub const CHECKPOINT_VERSION: u16 = 1;

/// Byte range of one latent weight tensor inside a checkpoint file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PayloadSpan {
    pub offset: usize,
    pub len: usize,
    /// Number of weights stored in the span.
    pub weights: usize,
}

fn corrupt(msg: impl Into<String>) -> BnnError {
    BnnError::Checkpoint(msg.into())
}

impl From<Truncated> for BnnError {
    fn from(_: Truncated) -> Self {
        corrupt("unexpected end of checkpoint")
    }
}

fn write_arch(w: &mut Writer, a: &Architecture) {
    w.u8(a.activation.code());
    w.u8(a.batchnorm as u8);
    w.u32(a.d_in as u32);
    w.u32(a.num_classes as u32);
    w.u32(a.convs.len() as u32);
    for c in &a.convs {
        w.u32(c.filters as u32);
        w.u32(c.kernel as u32);
        w.u32(c.pool as u32);
    }
    w.u32(a.hidden.len() as u32);
    for &h in &a.hidden {
        w.u32(h as u32);
    }
    w.f32(a.dropout);
    w.f32(a.bn_momentum);
    w.f32(a.bn_epsilon);
}

fn read_arch(r: &mut Reader<'_>) -> Result<Architecture, BnnError> {
    let activation = Activation::from_code(r.u8()?).ok_or_else(|| corrupt("unknown activation"))?;
    let batchnorm = r.u8()? != 0;
    let d_in = r.u32()? as usize;
    let num_classes = r.u32()? as usize;
    let n_convs = r.u32()? as usize;
    if n_convs > 64 {
        return Err(corrupt("implausible conv count"));
    }
    let mut convs = Vec::with_capacity(n_convs);
    for _ in 0..n_convs {
        convs.push(ConvSpec {
            filters: r.u32()? as usize,
            kernel: r.u32()? as usize,
            pool: r.u32()? as usize,
        });
    }
    let n_hidden = r.u32()? as usize;
    if n_hidden > 64 {
        return Err(corrupt("implausible dense count"));
    }
    let hidden = (0..n_hidden).map(|_| r.u32().map(|v| v as usize)).collect::<Result<_, _>>()?;
    Ok(Architecture {
        d_in,
        num_classes,
        convs,
        hidden,
        batchnorm,
        dropout: r.f32()?,
        activation,
        bn_momentum: r.f32()?,
        bn_epsilon: r.f32()?,
    })
}

/// Serializes the model and reports where each weight tensor landed.
pub fn encode_checkpoint(model: &BnnModel) -> (Vec<u8>, Vec<PayloadSpan>) {
    let mut w = Writer::new();
    w.bytes(CHECKPOINT_MAGIC);
    w.u16(CHECKPOINT_VERSION);
    write_arch(&mut w, model.architecture());
    w.u64(model.rng_seed());
    w.u32(model.epochs_done());

    let mut spans = Vec::new();
    let params = model.params();
    let is_weight: Vec<bool> = model
        .layers()
        .iter()
        .flat_map(|l| match l {
            Layer::Conv { .. } | Layer::Dense { .. } => vec![true],
            Layer::BatchNorm(_) => vec![false, false],
            _ => vec![],
        })
        .collect();
    w.u32(params.len() as u32);
    for (p, &weight) in params.iter().zip(&is_weight) {
        w.u64(p.len() as u64);
        let offset = w.pos();
        w.f32s(p);
        if weight {
            spans.push(PayloadSpan { offset, len: w.pos() - offset, weights: p.len() });
        }
    }
    for l in model.layers() {
        if let Layer::BatchNorm(bn) = l {
            w.u8(bn.initialized as u8);
            w.f32s(&bn.running_mean);
            w.f32s(&bn.running_var);
        }
    }
    for s in &model.optimizer {
        w.u64(s.len() as u64);
        w.f32s(s);
    }
    (w.buf, spans)
}

pub fn save_checkpoint(model: &BnnModel) -> Vec<u8> {
    encode_checkpoint(model).0
}

pub fn load_checkpoint(bytes: &[u8]) -> Result<BnnModel, BnnError> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = r.u16()?;
    if version != CHECKPOINT_VERSION {
        return Err(corrupt(format!("unsupported version {version}")));
    }
    let arch = read_arch(&mut r)?;
    let rng_seed = r.u64()?;
    let epochs_done = r.u32()?;
    // Rebuild the layer skeleton, then overwrite every tensor.
    let mut model: BnnModel = Model::new(arch, rng_seed)?;
    let n_params = r.u32()? as usize;
    {
        let mut params = model.params_mut();
        if n_params != params.len() {
            return Err(corrupt("parameter count does not match architecture"));
        }
        for p in params.iter_mut() {
            let len = r.u64()? as usize;
            if len != p.len() {
                return Err(corrupt("parameter length does not match architecture"));
            }
            **p = r.f32s(len)?;
        }
    }
    for l in model.layers_mut() {
        if let Layer::BatchNorm(bn) = l {
            let ch = bn.channels();
            bn.initialized = r.u8()? != 0;
            bn.running_mean = r.f32s(ch)?;
            bn.running_var = r.f32s(ch)?;
        }
    }
    let mut optimizer = Vec::with_capacity(n_params);
    for p in model.params() {
        let len = r.u64()? as usize;
        if len != p.len() {
            return Err(corrupt("optimizer state length mismatch"));
        }
        optimizer.push(r.f32s(len)?);
    }
    if r.remaining() != 0 {
        return Err(corrupt("trailing bytes after checkpoint"));
    }
    model.epochs_done = epochs_done;
    model.optimizer = optimizer;
    Ok(model)
}

