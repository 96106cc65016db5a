//! Building blocks with explicit forward caches and hand-written backward passes.

use crate::error::{Error, Result};
use crate::tensor::Matrix;

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// `y = x·W + b`.
pub fn linear(x: &Matrix, w: &Matrix, b: &Matrix) -> Result<Matrix> {
    x.matmul(w)?.add_row_broadcast(b)
}

/// Returns `(dx, dW, db)`.
pub fn linear_backward(x: &Matrix, w: &Matrix, dy: &Matrix) -> Result<(Matrix, Matrix, Matrix)> {
    let dx = dy.matmul_t(w)?;
    let dw = x.t_matmul(dy)?;
    Ok((dx, dw, dy.sum_rows()))
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // √(2/π)
const GELU_A: f64 = 0.044_715;

/// GELU, tanh approximation.
#[inline]
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

#[inline]
pub fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

#[derive(Clone, Debug)]
pub struct FeedForwardCache {
    pub input: Matrix,
    pub hidden: Matrix,
    pub activated: Matrix,
}

/// Two-layer MLP `d → 4d → d` with GELU in between.
pub fn feed_forward(
    x: &Matrix,
    w1: &Matrix,
    b1: &Matrix,
    w2: &Matrix,
    b2: &Matrix,
) -> Result<(Matrix, FeedForwardCache)> {
    let hidden = linear(x, w1, b1)?;
    let activated = hidden.map(gelu);
    let out = linear(&activated, w2, b2)?;
    Ok((out, FeedForwardCache { input: x.clone(), hidden, activated }))
}

pub struct FeedForwardGrads {
    pub dx: Matrix,
    pub dw1: Matrix,
    pub db1: Matrix,
    pub dw2: Matrix,
    pub db2: Matrix,
}

pub fn feed_forward_backward(
    cache: &FeedForwardCache,
    w1: &Matrix,
    w2: &Matrix,
    dy: &Matrix,
) -> Result<FeedForwardGrads> {
    let (da, dw2, db2) = linear_backward(&cache.activated, w2, dy)?;
    let dh = da.zip_map(&cache.hidden, |g, h| g * gelu_grad(h))?;
    let (dx, dw1, db1) = linear_backward(&cache.input, w1, &dh)?;
    Ok(FeedForwardGrads { dx, dw1, db1, dw2, db2 })
}

#[derive(Clone, Debug)]
pub struct LayerNormCache {
    pub normalized: Matrix,
    pub inv_std: Vec<f64>,
}

/// Per-row normalisation over the feature dimension, then `γ ⊙ x̂ + β`.
pub fn layer_norm(x: &Matrix, scale: &Matrix, shift: &Matrix) -> Result<(Matrix, LayerNormCache)> {
    let (n, d) = x.shape();
    if scale.shape() != (1, d) || shift.shape() != (1, d) {
        return Err(Error::Dimension(format!("layer norm parameters must be 1x{d}")));
    }
    let mut normalized = Matrix::zeros(n, d);
    let mut out = Matrix::zeros(n, d);
    let mut inv_std = Vec::with_capacity(n);
    for r in 0..n {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d as f64;
        let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        inv_std.push(inv);
        for k in 0..d {
            let xh = (row[k] - mean) * inv;
            normalized[(r, k)] = xh;
            out[(r, k)] = xh * scale[(0, k)] + shift[(0, k)];
        }
    }
    Ok((out, LayerNormCache { normalized, inv_std }))
}

/// Returns `(dx, dscale, dshift)`.
pub fn layer_norm_backward(cache: &LayerNormCache, scale: &Matrix, dy: &Matrix) -> Result<(Matrix, Matrix, Matrix)> {
    let (n, d) = dy.shape();
    cache.normalized.ensure_same_shape(dy, "layer norm upstream")?;
    let mut dx = Matrix::zeros(n, d);
    let mut dscale = Matrix::zeros(1, d);
    let dshift = dy.sum_rows();
    let df = d as f64;
    for r in 0..n {
        let xh = cache.normalized.row(r);
        let g = dy.row(r);
        let mut sum_dxh = 0.0;
        let mut sum_dxh_xh = 0.0;
        for k in 0..d {
            dscale[(0, k)] += g[k] * xh[k];
            let dxh = g[k] * scale[(0, k)];
            sum_dxh += dxh;
            sum_dxh_xh += dxh * xh[k];
        }
        let inv = cache.inv_std[r];
        for k in 0..d {
            let dxh = g[k] * scale[(0, k)];
            dx[(r, k)] = inv / df * (df * dxh - sum_dxh - xh[k] * sum_dxh_xh);
        }
    }
    Ok((dx, dscale, dshift))
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}

/// Mean cross-entropy over rows, via log-sum-exp.
pub fn cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<f64> {
    if labels.len() != logits.rows() {
        return Err(Error::Dimension(format!("{} labels for {} rows", labels.len(), logits.rows())));
    }
    let classes = logits.cols();
    let mut total = 0.0;
    for (r, &y) in labels.iter().enumerate() {
        if y >= classes {
            return Err(Error::Label { label: y, classes });
        }
        let row = logits.row(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += lse - row[y];
    }
    Ok(total / labels.len() as f64)
}

/// How the processed complex representation becomes a real token vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Restore {
    /// `G_k · cos α_{j,k}` where `G_k = √(mean_j |z_{j,k}|²)` is recomputed
    /// from the processed complex matrix and `α` is each entry's argument.
    /// On a freshly built wave every modulus in a column equals `G_k`, so
    /// this is exactly the inverse of the embedding-to-wave conversion.
    /// Every token's output depends on the whole text through `G`.
    #[default]
    GlobalSemantics,
    /// `|z| cos(arg z)`, i.e. the real part alone.
    RealPart,
}

impl std::str::FromStr for Restore {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global-semantics" => Ok(Self::GlobalSemantics),
            "real-part" => Ok(Self::RealPart),
            other => Err(Error::Config(format!("unknown restore {other:?}"))),
        }
    }
}

impl std::fmt::Display for Restore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::GlobalSemantics => "global-semantics",
            Self::RealPart => "real-part",
        })
    }
}

#[derive(Clone, Debug)]
pub struct RestoreCache {
    /// Root-mean-square modulus of each column.
    pub global: Vec<f64>,
    /// `|z|` per entry.
    pub modulus: Matrix,
    /// `cos(arg z)` per entry.
    pub cosine: Matrix,
}

pub fn restore(kind: Restore, real: &Matrix, imag: &Matrix) -> Result<(Matrix, Option<RestoreCache>)> {
    real.ensure_same_shape(imag, "restore inputs")?;
    match kind {
        Restore::RealPart => Ok((real.clone(), None)),
        Restore::GlobalSemantics => {
            let (n, d) = real.shape();
            let modulus = real.zip_map(imag, f64::hypot)?;
            let mut global = vec![0.0; d];
            for j in 0..n {
                for (g, m) in global.iter_mut().zip(modulus.row(j)) {
                    *g += m * m;
                }
            }
            global.iter_mut().for_each(|g| *g = (*g / n as f64).sqrt());
            // atan2(0, 0) = 0, so a zero entry has cosine 1.
            let cosine = real.zip_map(&modulus, |re, m| if m > 0.0 { re / m } else { 1.0 })?;
            let mut out = Matrix::zeros(n, d);
            for j in 0..n {
                for k in 0..d {
                    out[(j, k)] = global[k] * cosine[(j, k)];
                }
            }
            Ok((out, Some(RestoreCache { global, modulus, cosine })))
        }
    }
}

/// Returns `(d_real, d_imag)`.
pub fn restore_backward(
    kind: Restore,
    real: &Matrix,
    imag: &Matrix,
    cache: Option<&RestoreCache>,
    dy: &Matrix,
) -> Result<(Matrix, Matrix)> {
    match (kind, cache) {
        (Restore::RealPart, _) => Ok((dy.clone(), Matrix::zeros(imag.rows(), imag.cols()))),
        (Restore::GlobalSemantics, Some(cache)) => {
            let (n, d) = real.shape();
            let nf = n as f64;
            // dL/dG_k = Σ_j dy[j,k] · cos[j,k]
            let mut d_global = vec![0.0; d];
            for j in 0..n {
                for k in 0..d {
                    d_global[k] += dy[(j, k)] * cache.cosine[(j, k)];
                }
            }
            let mut d_real = Matrix::zeros(n, d);
            let mut d_imag = Matrix::zeros(n, d);
            for j in 0..n {
                for k in 0..d {
                    let g = cache.global[k];
                    if g == 0.0 {
                        continue;
                    }
                    let (re, im, m) = (real[(j, k)], imag[(j, k)], cache.modulus[(j, k)]);
                    // G = √(Σ|z|²/n): ∂G/∂re = re/(n·G)
                    let mut dr = d_global[k] * re / (nf * g);
                    let mut di = d_global[k] * im / (nf * g);
                    if m > 0.0 {
                        // cos = re/|z|: ∂/∂re = im²/|z|³, ∂/∂im = −re·im/|z|³
                        let m3 = m * m * m;
                        let up = dy[(j, k)] * g;
                        dr += up * im * im / m3;
                        di -= up * re * im / m3;
                    }
                    d_real[(j, k)] = dr;
                    d_imag[(j, k)] = di;
                }
            }
            Ok((d_real, d_imag))
        }
        (Restore::GlobalSemantics, None) => Err(Error::Shape("restore backward is missing its forward cache".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Rng;

    #[test]
    fn gelu_values() {
        assert_eq!(gelu(0.0), 0.0);
        assert!((gelu(1.0) - 0.841_191_990_607_477_2).abs() < 1e-12);
        assert!(gelu(-10.0).abs() < 1e-12);
    }

    #[test]
    fn gelu_grad_matches_central_difference() {
        for &x in &[-3.0, -0.7, 0.0, 0.4, 2.5] {
            let h = 1e-6;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn layer_norm_rows_are_standardised() {
        let mut rng = Rng::new(1);
        let x = Matrix::randn(5, 16, &mut rng).unwrap().scale(3.0);
        let (y, _) = layer_norm(&x, &Matrix::filled(1, 16, 1.0), &Matrix::zeros(1, 16)).unwrap();
        for r in 0..5 {
            let row = y.row(r);
            let mean = row.iter().sum::<f64>() / 16.0;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 16.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn cross_entropy_examples() {
        let uniform = Matrix::zeros(3, 4);
        assert!((cross_entropy(&uniform, &[0, 1, 3]).unwrap() - 4f64.ln()).abs() < 1e-12);

        let confident = Matrix::from_rows(&[[50.0, 0.0]]);
        assert!(cross_entropy(&confident, &[0]).unwrap() < 1e-20);

        assert!(matches!(cross_entropy(&uniform, &[0, 1, 4]), Err(Error::Label { label: 4, classes: 4 })));
    }

    #[test]
    fn cross_entropy_matches_log_softmax_oracle() {
        let mut rng = Rng::new(9);
        let logits = Matrix::randn(6, 5, &mut rng).unwrap().scale(4.0);
        let labels = [0, 4, 2, 2, 1, 3];
        let oracle: f64 = labels
            .iter()
            .enumerate()
            .map(|(r, &y)| {
                let denom: f64 = logits.row(r).iter().map(|v| v.exp()).sum();
                -(logits[(r, y)].exp() / denom).ln()
            })
            .sum::<f64>()
            / 6.0;
        assert!((cross_entropy(&logits, &labels).unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn cross_entropy_shift_invariance() {
        let mut rng = Rng::new(10);
        let logits = Matrix::randn(4, 3, &mut rng).unwrap();
        let labels = [2, 0, 1, 1];
        let shifted = logits.map(|v| v + 123.456);
        let a = cross_entropy(&logits, &labels).unwrap();
        let b = cross_entropy(&shifted, &labels).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut rng = Rng::new(2);
        let p = softmax_rows(&Matrix::randn(7, 4, &mut rng).unwrap().scale(20.0));
        for r in 0..7 {
            assert!((p.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn restore_of_a_fresh_wave_is_the_embedding() {
        let mut rng = Rng::new(4);
        let e = Matrix::randn(5, 6, &mut rng).unwrap();
        let z = crate::wave_repr::token2wave(&e).unwrap();
        let (out, _) = restore(Restore::GlobalSemantics, &z.real, &z.imag).unwrap();
        assert!(out.max_abs_diff(&e) < 1e-12);
        let (real, _) = restore(Restore::RealPart, &z.real, &z.imag).unwrap();
        assert_eq!(real, e);
    }

    #[test]
    fn restore_names_round_trip() {
        for r in [Restore::GlobalSemantics, Restore::RealPart] {
            assert_eq!(r.to_string().parse::<Restore>().unwrap(), r);
        }
        assert!("imag".parse::<Restore>().is_err());
    }
}
