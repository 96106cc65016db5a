use crate::error::{Error, Result};
use crate::tensor::{Matrix, Rng};
use std::collections::BTreeMap;

/// Trainable weights of the single wave layer: the two variant projections,
/// the shared feed-forward block, and one normalisation per complex part.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveLayerParams {
    pub w_src: Matrix,
    pub b_src: Matrix,
    pub w_tgt: Matrix,
    pub b_tgt: Matrix,
    pub ff1_w: Matrix,
    pub ff1_b: Matrix,
    pub ff2_w: Matrix,
    pub ff2_b: Matrix,
    pub norm_real_scale: Matrix,
    pub norm_real_shift: Matrix,
    pub norm_imag_scale: Matrix,
    pub norm_imag_shift: Matrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierParams {
    pub w: Matrix,
    pub b: Matrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub embed: Matrix,
    pub layer: WaveLayerParams,
    pub clf: ClassifierParams,
}

/// `U(-1/√fan_in, 1/√fan_in)` for weight and bias, like a default torch `Linear`.
fn linear_init(fan_in: usize, fan_out: usize, rng: &mut Rng) -> (Matrix, Matrix) {
    let bound = 1.0 / (fan_in as f64).sqrt();
    (Matrix::rand_uniform(fan_in, fan_out, bound, rng), Matrix::rand_uniform(1, fan_out, bound, rng))
}

impl WaveLayerParams {
    pub fn init(d: usize, rng: &mut Rng) -> Self {
        let (w_src, b_src) = linear_init(d, d, rng);
        let (w_tgt, b_tgt) = linear_init(d, d, rng);
        let (ff1_w, ff1_b) = linear_init(d, 4 * d, rng);
        let (ff2_w, ff2_b) = linear_init(4 * d, d, rng);
        Self {
            w_src,
            b_src,
            w_tgt,
            b_tgt,
            ff1_w,
            ff1_b,
            ff2_w,
            ff2_b,
            norm_real_scale: Matrix::filled(1, d, 1.0),
            norm_real_shift: Matrix::zeros(1, d),
            norm_imag_scale: Matrix::filled(1, d, 1.0),
            norm_imag_shift: Matrix::zeros(1, d),
        }
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            w_src: Matrix::zeros(d, d),
            b_src: Matrix::zeros(1, d),
            w_tgt: Matrix::zeros(d, d),
            b_tgt: Matrix::zeros(1, d),
            ff1_w: Matrix::zeros(d, 4 * d),
            ff1_b: Matrix::zeros(1, 4 * d),
            ff2_w: Matrix::zeros(4 * d, d),
            ff2_b: Matrix::zeros(1, d),
            norm_real_scale: Matrix::zeros(1, d),
            norm_real_shift: Matrix::zeros(1, d),
            norm_imag_scale: Matrix::zeros(1, d),
            norm_imag_shift: Matrix::zeros(1, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.w_src.rows()
    }

    pub fn tensors(&self) -> [(&'static str, &Matrix); 12] {
        [
            ("w_src", &self.w_src),
            ("b_src", &self.b_src),
            ("w_tgt", &self.w_tgt),
            ("b_tgt", &self.b_tgt),
            ("ff1_w", &self.ff1_w),
            ("ff1_b", &self.ff1_b),
            ("ff2_w", &self.ff2_w),
            ("ff2_b", &self.ff2_b),
            ("norm_real_scale", &self.norm_real_scale),
            ("norm_real_shift", &self.norm_real_shift),
            ("norm_imag_scale", &self.norm_imag_scale),
            ("norm_imag_shift", &self.norm_imag_shift),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut Matrix); 12] {
        [
            ("w_src", &mut self.w_src),
            ("b_src", &mut self.b_src),
            ("w_tgt", &mut self.w_tgt),
            ("b_tgt", &mut self.b_tgt),
            ("ff1_w", &mut self.ff1_w),
            ("ff1_b", &mut self.ff1_b),
            ("ff2_w", &mut self.ff2_w),
            ("ff2_b", &mut self.ff2_b),
            ("norm_real_scale", &mut self.norm_real_scale),
            ("norm_real_shift", &mut self.norm_real_shift),
            ("norm_imag_scale", &mut self.norm_imag_scale),
            ("norm_imag_shift", &mut self.norm_imag_shift),
        ]
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.len()).sum()
    }

    pub fn add_assign(&mut self, other: &WaveLayerParams) -> Result<()> {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_assign(b)?;
        }
        Ok(())
    }
}

impl ClassifierParams {
    pub fn init(d: usize, classes: usize, rng: &mut Rng) -> Self {
        let (w, b) = linear_init(d, classes, rng);
        Self { w, b }
    }

    pub fn zeros(d: usize, classes: usize) -> Self {
        Self { w: Matrix::zeros(d, classes), b: Matrix::zeros(1, classes) }
    }

    pub fn norm(&self) -> f64 {
        (self.w.frobenius_norm().powi(2) + self.b.frobenius_norm().powi(2)).sqrt()
    }
}

impl ModelParams {
    /// Embeddings `N(0, 1)`; linear layers uniform in `±1/√fan_in`;
    /// normalisation scale 1, shift 0.
    pub fn init(vocab: usize, d: usize, classes: usize, rng: &mut Rng) -> Result<Self> {
        if vocab == 0 || d == 0 || classes < 2 {
            return Err(Error::Config(format!(
                "model needs vocab ≥ 1, d ≥ 1, classes ≥ 2 (got {vocab}, {d}, {classes})"
            )));
        }
        let embed = Matrix::randn(vocab, d, rng)?;
        let layer = WaveLayerParams::init(d, rng);
        let clf = ClassifierParams::init(d, classes, rng);
        Ok(Self { embed, layer, clf })
    }

    pub fn zeros(vocab: usize, d: usize, classes: usize) -> Self {
        Self {
            embed: Matrix::zeros(vocab, d),
            layer: WaveLayerParams::zeros(d),
            clf: ClassifierParams::zeros(d, classes),
        }
    }

    pub fn vocab(&self) -> usize {
        self.embed.rows()
    }

    pub fn dim(&self) -> usize {
        self.embed.cols()
    }

    pub fn classes(&self) -> usize {
        self.clf.w.cols()
    }

    /// All tensors in a fixed order with stable names.
    pub fn tensors(&self) -> Vec<(&'static str, &Matrix)> {
        let mut out = vec![("embed", &self.embed)];
        out.extend(self.layer.tensors());
        out.push(("clf_w", &self.clf.w));
        out.push(("clf_b", &self.clf.b));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Matrix)> {
        let mut out = vec![("embed", &mut self.embed)];
        out.extend(self.layer.tensors_mut());
        out.push(("clf_w", &mut self.clf.w));
        out.push(("clf_b", &mut self.clf.b));
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, m)| m.is_finite())
    }

    /// All values concatenated in [`ModelParams::tensors`] order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|(_, m)| m.as_slice().iter().copied()).collect()
    }

    /// Inverse of [`ModelParams::to_flat`] for a model of the same shape.
    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Dimension(format!("{} values for {} parameters", flat.len(), self.param_count())));
        }
        let mut pos = 0;
        for (_, m) in self.tensors_mut() {
            let n = m.len();
            m.as_mut_slice().copy_from_slice(&flat[pos..pos + n]);
            pos += n;
        }
        Ok(())
    }

    /// Checks every tensor has the shape implied by `(vocab, d, classes)`.
    pub fn validate(&self) -> Result<()> {
        let expected = ModelParams::zeros(self.vocab(), self.dim(), self.classes());
        for ((name, got), (_, want)) in self.tensors().into_iter().zip(expected.tensors()) {
            if got.shape() != want.shape() {
                return Err(Error::Shape(format!(
                    "{name} is {:?}, expected {:?}",
                    got.shape(),
                    want.shape()
                )));
            }
        }
        Ok(())
    }
}

/// Row-sparse gradient of the embedding table: only rows looked up in the
/// batch are present.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseRows {
    pub dim: usize,
    pub rows: BTreeMap<usize, Vec<f64>>,
}

impl SparseRows {
    pub fn new(dim: usize) -> Self {
        Self { dim, rows: BTreeMap::new() }
    }

    pub fn add_row(&mut self, id: usize, grad: &[f64]) {
        let row = self.rows.entry(id).or_insert_with(|| vec![0.0; self.dim]);
        for (r, g) in row.iter_mut().zip(grad) {
            *r += g;
        }
    }

    pub fn row(&self, id: usize) -> Option<&[f64]> {
        self.rows.get(&id).map(Vec::as_slice)
    }

    pub fn norm(&self) -> f64 {
        self.rows.values().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self, vocab: usize) -> Matrix {
        let mut m = Matrix::zeros(vocab, self.dim);
        for (&id, row) in &self.rows {
            m.row_mut(id).copy_from_slice(row);
        }
        m
    }
}
