//! Single-layer wave network classifier.
//!
//! Per sequence of `n` token ids:
//!
//! ```text
//! E  = embed[ids]                      n×d
//! E₁ = E·W_src + b_src, E₂ = E·W_tgt + b_tgt
//! Z₁ = wave(E₁), Z₂ = wave(E₂)         complex n×d
//! Z  = Z₁ + Z₂  (interference)  or  Z₁ · Z₂  (modulation)
//! R  = (LN_re(FF(Re Z)), LN_im(FF(Im Z)))      FF shared, norms separate
//! O  = restore(R)                      n×d real
//! logits = O[0]·W_clf + b_clf          row 0 is [CLS]
//! ```

pub mod checkpoint;
pub mod layers;
pub mod params;

pub use layers::Restore;
pub use params::{ClassifierParams, ModelParams, SparseRows, WaveLayerParams};

use crate::error::{Error, Result};
use crate::tensor::Matrix;
use crate::wave_ops::{self, CartesianWave};
use crate::wave_repr;
use layers::{FeedForwardCache, LayerNormCache, RestoreCache};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const PAD_ID: usize = 0;
pub const CLS_ID: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CombineMode {
    Interference,
    #[default]
    Modulation,
}

impl std::str::FromStr for CombineMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interference" => Ok(Self::Interference),
            "modulation" => Ok(Self::Modulation),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for CombineMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Interference => "interference",
            Self::Modulation => "modulation",
        })
    }
}

/// Structural choices that are not trainable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Architecture {
    pub mode: CombineMode,
    pub restore: Restore,
}

impl Architecture {
    pub fn new(mode: CombineMode) -> Self {
        Self { mode, restore: Restore::default() }
    }
}

/// Token ids, possibly right-padded; only the first `len` are real.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSeq {
    pub ids: Vec<usize>,
    pub len: usize,
}

impl TokenSeq {
    pub fn new(ids: Vec<usize>) -> Self {
        let len = ids.len();
        Self { ids, len }
    }

    pub fn tokens(&self) -> &[usize] {
        &self.ids[..self.len]
    }
}

/// Cached intermediates for one sequence.
#[derive(Clone, Debug)]
pub struct SequenceTrace {
    pub ids: Vec<usize>,
    pub embedded: Matrix,
    pub source: Matrix,
    pub target: Matrix,
    pub source_wave: CartesianWave,
    pub target_wave: CartesianWave,
    pub combined: CartesianWave,
    pub ff_real: FeedForwardCache,
    pub ff_imag: FeedForwardCache,
    pub ff_real_out: Matrix,
    pub ff_imag_out: Matrix,
    pub norm_real: LayerNormCache,
    pub norm_imag: LayerNormCache,
    pub normed: CartesianWave,
    pub restore_cache: Option<RestoreCache>,
    pub restored: Matrix,
}

#[derive(Clone, Debug)]
pub struct ForwardTrace {
    pub arch: Architecture,
    pub sequences: Vec<SequenceTrace>,
    /// Restored `[CLS]` vectors, one row per sequence.
    pub cls: Matrix,
    pub logits: Matrix,
    pub probs: Matrix,
}

/// Gradients for every parameter, plus the per-position gradients of the
/// looked-up embedding rows.
#[derive(Clone, Debug)]
pub struct GradBundle {
    pub embed: SparseRows,
    pub layer: WaveLayerParams,
    pub clf: ClassifierParams,
    /// `∂L/∂E` for each sequence, `len×d`.
    pub input_rows: Vec<Matrix>,
}

impl GradBundle {
    pub fn zeros(d: usize, classes: usize) -> Self {
        Self {
            embed: SparseRows::new(d),
            layer: WaveLayerParams::zeros(d),
            clf: ClassifierParams::zeros(d, classes),
            input_rows: Vec::new(),
        }
    }

    /// Gradient of the shared `[CLS]` embedding row.
    pub fn cls_row(&self) -> Vec<f64> {
        self.embed.row(CLS_ID).map_or_else(|| vec![0.0; self.embed.dim], <[f64]>::to_vec)
    }

    /// Dense gradient in [`ModelParams::to_flat`] order.
    pub fn to_flat(&self, vocab: usize) -> Vec<f64> {
        let mut out = self.embed.to_dense(vocab).into_vec();
        for (_, m) in self.layer.tensors() {
            out.extend_from_slice(m.as_slice());
        }
        out.extend_from_slice(self.clf.w.as_slice());
        out.extend_from_slice(self.clf.b.as_slice());
        out
    }

    pub fn is_finite(&self) -> bool {
        self.embed.rows.values().flatten().all(|x| x.is_finite())
            && self.layer.tensors().iter().all(|(_, m)| m.is_finite())
            && self.clf.w.is_finite()
            && self.clf.b.is_finite()
    }
}

/// L2 norms of the three gradient groups tracked during training.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GradRecord {
    pub cls: f64,
    pub input: f64,
    pub clf: f64,
}

pub fn grad_norms(g: &GradBundle) -> GradRecord {
    GradRecord {
        cls: g.cls_row().iter().map(|x| x * x).sum::<f64>().sqrt(),
        input: g.embed.norm(),
        clf: g.clf.norm(),
    }
}

fn check_sequence(seq: &TokenSeq, vocab: usize) -> Result<&[usize]> {
    if seq.len > seq.ids.len() {
        return Err(Error::Dimension(format!("length {} exceeds {} ids", seq.len, seq.ids.len())));
    }
    let ids = seq.tokens();
    if ids.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "sequence has {} token(s); phases need at least [CLS] plus one token",
            ids.len()
        )));
    }
    if ids[0] != CLS_ID {
        return Err(Error::DegenerateInput(format!("sequence starts with id {}, not [CLS]", ids[0])));
    }
    if let Some(&bad) = ids.iter().find(|&&id| id >= vocab) {
        return Err(Error::Lookup { id: bad, vocab });
    }
    Ok(ids)
}

fn gather_rows(table: &Matrix, ids: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(ids.len(), table.cols());
    for (r, &id) in ids.iter().enumerate() {
        out.row_mut(r).copy_from_slice(table.row(id));
    }
    out
}

fn combine(mode: CombineMode, a: &CartesianWave, b: &CartesianWave) -> Result<CartesianWave> {
    match mode {
        CombineMode::Interference => wave_ops::interference(a, b),
        CombineMode::Modulation => wave_ops::modulation(a, b),
    }
}

fn forward_sequence(p: &ModelParams, arch: Architecture, ids: &[usize]) -> Result<SequenceTrace> {
    let l = &p.layer;
    let embedded = gather_rows(&p.embed, ids);
    let source = layers::linear(&embedded, &l.w_src, &l.b_src)?;
    let target = layers::linear(&embedded, &l.w_tgt, &l.b_tgt)?;
    let source_wave = wave_repr::token2wave(&source)?;
    let target_wave = wave_repr::token2wave(&target)?;
    let combined = combine(arch.mode, &source_wave, &target_wave)?;
    let (ff_real_out, ff_real) = layers::feed_forward(&combined.real, &l.ff1_w, &l.ff1_b, &l.ff2_w, &l.ff2_b)?;
    let (ff_imag_out, ff_imag) = layers::feed_forward(&combined.imag, &l.ff1_w, &l.ff1_b, &l.ff2_w, &l.ff2_b)?;
    let (nr, norm_real) = layers::layer_norm(&ff_real_out, &l.norm_real_scale, &l.norm_real_shift)?;
    let (ni, norm_imag) = layers::layer_norm(&ff_imag_out, &l.norm_imag_scale, &l.norm_imag_shift)?;
    let normed = CartesianWave { real: nr, imag: ni };
    let (restored, restore_cache) = layers::restore(arch.restore, &normed.real, &normed.imag)?;
    Ok(SequenceTrace {
        ids: ids.to_vec(),
        embedded,
        source,
        target,
        source_wave,
        target_wave,
        combined,
        ff_real,
        ff_imag,
        ff_real_out,
        ff_imag_out,
        norm_real,
        norm_imag,
        normed,
        restore_cache,
        restored,
    })
}

/// Runs the network on a batch. Sequences are processed independently (in
/// parallel); padding beyond each sequence's `len` is never read.
pub fn forward(params: &ModelParams, batch: &[TokenSeq], arch: Architecture) -> Result<ForwardTrace> {
    if batch.is_empty() {
        return Err(Error::Dimension("empty batch".into()));
    }
    let vocab = params.vocab();
    let checked: Vec<&[usize]> = batch.iter().map(|s| check_sequence(s, vocab)).collect::<Result<_>>()?;
    let sequences: Vec<SequenceTrace> =
        checked.par_iter().map(|ids| forward_sequence(params, arch, ids)).collect::<Result<_>>()?;

    let d = params.dim();
    let mut cls = Matrix::zeros(sequences.len(), d);
    for (b, s) in sequences.iter().enumerate() {
        cls.row_mut(b).copy_from_slice(s.restored.row(0));
    }
    let logits = layers::linear(&cls, &params.clf.w, &params.clf.b)?;
    let probs = layers::softmax_rows(&logits);
    Ok(ForwardTrace { arch, sequences, cls, logits, probs })
}

/// Mean cross-entropy of the batch.
pub fn loss(trace: &ForwardTrace, labels: &[usize]) -> Result<f64> {
    layers::cross_entropy(&trace.logits, labels)
}

struct SequenceGrads {
    layer: WaveLayerParams,
    d_embedded: Matrix,
}

fn backward_sequence(p: &ModelParams, arch: Architecture, s: &SequenceTrace, d_cls: &[f64]) -> Result<SequenceGrads> {
    let l = &p.layer;
    let (n, d) = s.restored.shape();
    let mut g = WaveLayerParams::zeros(d);

    let mut d_restored = Matrix::zeros(n, d);
    d_restored.row_mut(0).copy_from_slice(d_cls);
    let (d_nr, d_ni) =
        layers::restore_backward(arch.restore, &s.normed.real, &s.normed.imag, s.restore_cache.as_ref(), &d_restored)?;

    let (d_ffr, g_scale_r, g_shift_r) = layers::layer_norm_backward(&s.norm_real, &l.norm_real_scale, &d_nr)?;
    let (d_ffi, g_scale_i, g_shift_i) = layers::layer_norm_backward(&s.norm_imag, &l.norm_imag_scale, &d_ni)?;
    g.norm_real_scale = g_scale_r;
    g.norm_real_shift = g_shift_r;
    g.norm_imag_scale = g_scale_i;
    g.norm_imag_shift = g_shift_i;

    let ffr = layers::feed_forward_backward(&s.ff_real, &l.ff1_w, &l.ff2_w, &d_ffr)?;
    let ffi = layers::feed_forward_backward(&s.ff_imag, &l.ff1_w, &l.ff2_w, &d_ffi)?;
    g.ff1_w = ffr.dw1.add(&ffi.dw1)?;
    g.ff1_b = ffr.db1.add(&ffi.db1)?;
    g.ff2_w = ffr.dw2.add(&ffi.dw2)?;
    g.ff2_b = ffr.db2.add(&ffi.db2)?;

    let d_combined = CartesianWave { real: ffr.dx, imag: ffi.dx };
    let (d_src_wave, d_tgt_wave) = match arch.mode {
        CombineMode::Interference => wave_ops::vjp_interference(&s.source_wave, &s.target_wave, &d_combined)?,
        CombineMode::Modulation => wave_ops::vjp_modulation(&s.source_wave, &s.target_wave, &d_combined)?,
    };
    let d_source =
        wave_repr::vjp_token2wave(&s.source, &s.source_wave.imag, &d_src_wave.real, &d_src_wave.imag)?;
    let d_target =
        wave_repr::vjp_token2wave(&s.target, &s.target_wave.imag, &d_tgt_wave.real, &d_tgt_wave.imag)?;

    let (d_emb_src, g_w_src, g_b_src) = layers::linear_backward(&s.embedded, &l.w_src, &d_source)?;
    let (d_emb_tgt, g_w_tgt, g_b_tgt) = layers::linear_backward(&s.embedded, &l.w_tgt, &d_target)?;
    g.w_src = g_w_src;
    g.b_src = g_b_src;
    g.w_tgt = g_w_tgt;
    g.b_tgt = g_b_tgt;

    Ok(SequenceGrads { layer: g, d_embedded: d_emb_src.add(&d_emb_tgt)? })
}

/// Exact gradient of the mean cross-entropy with respect to every parameter.
pub fn backward(params: &ModelParams, trace: &ForwardTrace, labels: &[usize]) -> Result<GradBundle> {
    let batch = trace.sequences.len();
    let classes = params.classes();
    if labels.len() != batch {
        return Err(Error::Dimension(format!("{} labels for a batch of {batch}", labels.len())));
    }
    // dL/dlogits = (p − onehot) / B
    let mut d_logits = trace.probs.clone();
    for (b, &y) in labels.iter().enumerate() {
        if y >= classes {
            return Err(Error::Label { label: y, classes });
        }
        d_logits[(b, y)] -= 1.0;
    }
    let d_logits = d_logits.scale(1.0 / batch as f64);
    let (d_cls, g_clf_w, g_clf_b) = layers::linear_backward(&trace.cls, &params.clf.w, &d_logits)?;

    let per_seq: Vec<SequenceGrads> = trace
        .sequences
        .par_iter()
        .enumerate()
        .map(|(b, s)| backward_sequence(params, trace.arch, s, d_cls.row(b)))
        .collect::<Result<_>>()?;

    let d = params.dim();
    let mut out = GradBundle::zeros(d, classes);
    out.clf = ClassifierParams { w: g_clf_w, b: g_clf_b };
    // Fixed reduction order keeps results bit-identical across thread counts.
    for (s, g) in trace.sequences.iter().zip(per_seq) {
        out.layer.add_assign(&g.layer)?;
        for (r, &id) in s.ids.iter().enumerate() {
            out.embed.add_row(id, g.d_embedded.row(r));
        }
        out.input_rows.push(g.d_embedded);
    }
    Ok(out)
}

/// `forward` then `loss`.
pub fn batch_loss(params: &ModelParams, batch: &[TokenSeq], labels: &[usize], arch: Architecture) -> Result<f64> {
    loss(&forward(params, batch, arch)?, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Rng;

    fn tiny_batch() -> (Vec<TokenSeq>, Vec<usize>) {
        (
            vec![TokenSeq::new(vec![1, 3, 4]), TokenSeq::new(vec![1, 5, 2, 7]), TokenSeq::new(vec![1, 6])],
            vec![0, 1, 1],
        )
    }

    #[test]
    fn input_validation() {
        let p = ModelParams::init(8, 4, 2, &mut Rng::new(1)).unwrap();
        let arch = Architecture::default();
        assert!(matches!(
            forward(&p, &[TokenSeq::new(vec![1, 9])], arch),
            Err(Error::Lookup { id: 9, vocab: 8 })
        ));
        assert!(matches!(forward(&p, &[TokenSeq::new(vec![1])], arch), Err(Error::DegenerateInput(_))));
        assert!(matches!(forward(&p, &[TokenSeq::new(vec![2, 3])], arch), Err(Error::DegenerateInput(_))));
        assert!(forward(&p, &[], arch).is_err());
    }

    #[test]
    fn classifier_bias_only() {
        let mut p = ModelParams::zeros(8, 4, 3);
        let (batch, _) = tiny_batch();
        for mode in [CombineMode::Interference, CombineMode::Modulation] {
            let t = forward(&p, &batch, Architecture::new(mode)).unwrap();
            for b in 0..3 {
                assert_eq!(t.logits.row(b), &[0.0, 0.0, 0.0]);
                for &pr in t.probs.row(b) {
                    assert!((pr - 1.0 / 3.0).abs() < 1e-15);
                }
            }
        }
        p.clf.b = Matrix::row_vector(&[0.5, -1.0, 2.0]);
        let t = forward(&p, &batch, Architecture::default()).unwrap();
        assert_eq!(t.logits.row(1), &[0.5, -1.0, 2.0]);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let p = ModelParams::init(8, 4, 3, &mut Rng::new(2)).unwrap();
        let (batch, _) = tiny_batch();
        let t = forward(&p, &batch, Architecture::default()).unwrap();
        for b in 0..3 {
            assert!((t.probs.row(b).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn padding_is_ignored() {
        let p = ModelParams::init(8, 4, 2, &mut Rng::new(3)).unwrap();
        let plain = TokenSeq::new(vec![1, 3, 4]);
        let padded = TokenSeq { ids: vec![1, 3, 4, PAD_ID, PAD_ID], len: 3 };
        let a = forward(&p, &[plain], Architecture::default()).unwrap();
        let b = forward(&p, &[padded], Architecture::default()).unwrap();
        assert_eq!(a.logits, b.logits);
    }

    #[test]
    fn label_out_of_range() {
        let p = ModelParams::init(8, 4, 2, &mut Rng::new(3)).unwrap();
        let (batch, _) = tiny_batch();
        let t = forward(&p, &batch, Architecture::default()).unwrap();
        assert!(matches!(loss(&t, &[0, 1, 2]), Err(Error::Label { .. })));
        assert!(matches!(backward(&p, &t, &[0, 1, 2]), Err(Error::Label { .. })));
    }

    #[test]
    fn classifier_gradient_closed_form() {
        let p = ModelParams::init(8, 4, 2, &mut Rng::new(4)).unwrap();
        let (batch, labels) = tiny_batch();
        let t = forward(&p, &batch, Architecture::default()).unwrap();
        let g = backward(&p, &t, &labels).unwrap();
        let mut residual = t.probs.clone();
        for (b, &y) in labels.iter().enumerate() {
            residual[(b, y)] -= 1.0;
        }
        let expected = t.cls.transpose().matmul(&residual).unwrap().scale(1.0 / 3.0);
        assert!(g.clf.w.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn grad_norm_examples() {
        let zero = GradBundle::zeros(2, 2);
        assert_eq!(grad_norms(&zero), GradRecord::default());

        let mut g = GradBundle::zeros(2, 2);
        g.embed.add_row(CLS_ID, &[3.0, 0.0]);
        g.clf.b[(0, 1)] = 4.0;
        let r = grad_norms(&g);
        assert_eq!((r.cls, r.input, r.clf), (3.0, 3.0, 4.0));
    }
}
