//! Token embeddings as complex vectors `G · e^{iα}`.
//!
//! For an `n×d` embedding matrix `w`, the magnitude of every token in
//! dimension `k` is the column norm `G_k = ‖w[:, k]‖₂` (shared by the whole
//! text), and the phase of token `j` is the angle whose cosine is
//! `w[j, k] / G_k`. In Cartesian form the real part is the token's own
//! component `w[j, k]` and the imaginary part is the norm of the *other*
//! tokens in that dimension, `√(G_k² − w[j, k]²)`.

use crate::error::{Error, Result};
use crate::tensor::Matrix;
use crate::wave_ops::CartesianWave;

/// Tolerance on `|w| ≤ G` when checking that a magnitude vector belongs to an embedding.
pub const CONSISTENCY_TOL: f64 = 1e-9;

/// The backward pass clips `1 / imag` at this value.
pub const MAX_INV_IMAG: f64 = 1e6;

/// Per-dimension magnitude shared by every token of one text.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalSemantics(pub Vec<f64>);

impl GlobalSemantics {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Phase angles in radians, one per (token, dimension), each in `[0, π]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseMatrix(pub Matrix);

#[derive(Clone, Debug, PartialEq)]
pub struct WaveRepr {
    pub magnitude: GlobalSemantics,
    pub phase: PhaseMatrix,
}

fn check_nonempty(e: &Matrix) -> Result<()> {
    if e.rows() == 0 || e.cols() == 0 {
        return Err(Error::Dimension(format!("embedding matrix is {}x{}", e.rows(), e.cols())));
    }
    Ok(())
}

/// `G_k = √(Σ_j w[j, k]²)`.
pub fn compute_global_semantics(e: &Matrix) -> Result<GlobalSemantics> {
    compute_global_semantics_masked(e, e.rows())
}

/// Like [`compute_global_semantics`] but only the first `len` rows count;
/// the rest are padding.
pub fn compute_global_semantics_masked(e: &Matrix, len: usize) -> Result<GlobalSemantics> {
    check_nonempty(e)?;
    if len == 0 || len > e.rows() {
        return Err(Error::Dimension(format!("mask length {len} for {} rows", e.rows())));
    }
    let mut sq = vec![0.0; e.cols()];
    for j in 0..len {
        for (s, w) in sq.iter_mut().zip(e.row(j)) {
            *s += w * w;
        }
    }
    Ok(GlobalSemantics(sq.into_iter().map(f64::sqrt).collect()))
}

/// `α = atan2(√(1 − x²), x)` with `x = w / G` clamped to `[-1, 1]`.
/// Columns with `G_k = 0` get phase 0.
pub fn compute_phase(e: &Matrix, g: &GlobalSemantics) -> Result<PhaseMatrix> {
    check_nonempty(e)?;
    if g.dim() != e.cols() {
        return Err(Error::Dimension(format!(
            "global semantics has {} dims, embedding has {}",
            g.dim(),
            e.cols()
        )));
    }
    let mut alpha = Matrix::zeros(e.rows(), e.cols());
    for j in 0..e.rows() {
        for (k, (&w, &gk)) in e.row(j).iter().zip(g.as_slice()).enumerate() {
            if w.abs() > gk + CONSISTENCY_TOL * gk.max(1.0) {
                return Err(Error::Consistency(format!(
                    "|w[{j},{k}]| = {} exceeds G[{k}] = {gk}",
                    w.abs()
                )));
            }
            alpha[(j, k)] = if gk == 0.0 {
                0.0
            } else {
                let x = (w / gk).clamp(-1.0, 1.0);
                (1.0 - x * x).sqrt().atan2(x)
            };
        }
    }
    Ok(PhaseMatrix(alpha))
}

impl WaveRepr {
    pub fn from_embedding(e: &Matrix) -> Result<Self> {
        let magnitude = compute_global_semantics(e)?;
        let phase = compute_phase(e, &magnitude)?;
        Ok(Self { magnitude, phase })
    }

    pub fn tokens(&self) -> usize {
        self.phase.0.rows()
    }

    pub fn dim(&self) -> usize {
        self.magnitude.dim()
    }

    fn polar_map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let alpha = &self.phase.0;
        let mut out = Matrix::zeros(alpha.rows(), alpha.cols());
        for j in 0..alpha.rows() {
            for (k, (o, &a)) in out.row_mut(j).iter_mut().zip(alpha.row(j)).enumerate() {
                *o = self.magnitude.0[k] * f(a);
            }
        }
        out
    }

    /// Euler form: `(G cos α, G sin α)`.
    pub fn to_cartesian(&self) -> CartesianWave {
        CartesianWave { real: self.polar_map(f64::cos), imag: self.polar_map(f64::sin) }
    }

    /// `G · cos α`, the embedding the representation was built from.
    pub fn restore_embedding(&self) -> Matrix {
        self.polar_map(f64::cos)
    }
}

/// Cartesian wave of an embedding computed directly, without the trip
/// through angles: `real = w`, `imag[j, k] = √(G_k² − w[j, k]²)`.
///
/// Agrees with `WaveRepr::from_embedding(e)?.to_cartesian()` to rounding.
pub fn token2wave(e: &Matrix) -> Result<CartesianWave> {
    let g = compute_global_semantics(e)?;
    let mut imag = Matrix::zeros(e.rows(), e.cols());
    for j in 0..e.rows() {
        for (k, (o, &w)) in imag.row_mut(j).iter_mut().zip(e.row(j)).enumerate() {
            let gk = g.0[k];
            *o = (gk * gk - w * w).max(0.0).sqrt();
        }
    }
    Ok(CartesianWave { real: e.clone(), imag })
}

/// Vector-Jacobian product of `e ↦ (real(e), imag(e))`.
///
/// `∂imag[j,k]/∂w[i,k] = w[i,k] / imag[j,k]` for `i ≠ j` and 0 for `i = j`, so
/// `grad[i,k] = up_real[i,k] + w[i,k] · Σ_{j≠i} up_imag[j,k] / imag[j,k]`.
/// `1 / imag` is clipped at [`MAX_INV_IMAG`]; entries with `imag = 0`
/// (single-token columns, all-zero columns) contribute nothing.
pub fn vjp_wave_repr(e: &Matrix, up_real: &Matrix, up_imag: &Matrix) -> Result<Matrix> {
    e.ensure_same_shape(up_real, "vjp_wave_repr upstream real")?;
    e.ensure_same_shape(up_imag, "vjp_wave_repr upstream imag")?;
    let wave = token2wave(e)?;
    vjp_token2wave(e, &wave.imag, up_real, up_imag)
}

/// Same as [`vjp_wave_repr`] with the forward `imag` already available.
pub(crate) fn vjp_token2wave(e: &Matrix, imag: &Matrix, up_real: &Matrix, up_imag: &Matrix) -> Result<Matrix> {
    let (n, d) = e.shape();
    // ratio[j,k] = up_imag[j,k] / imag[j,k]; total[k] = Σ_j ratio[j,k]
    let mut ratio = Matrix::zeros(n, d);
    let mut total = vec![0.0; d];
    for j in 0..n {
        for k in 0..d {
            let im = imag[(j, k)];
            let r = if im > 0.0 { up_imag[(j, k)] * (1.0 / im).min(MAX_INV_IMAG) } else { 0.0 };
            ratio[(j, k)] = r;
            total[k] += r;
        }
    }
    let mut grad = up_real.clone();
    for i in 0..n {
        for k in 0..d {
            grad[(i, k)] += e[(i, k)] * (total[k] - ratio[(i, k)]);
        }
    }
    Ok(grad)
}
