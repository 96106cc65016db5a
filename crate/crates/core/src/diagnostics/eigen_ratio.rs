use crate::error::{Error, Result};
use crate::tensor::{singular_values, Matrix};

/// Singular values at or below this fraction of the largest are treated as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Dimensional-independence proxy for a batch of `[CLS]` vectors (`B×d`).
///
/// Centres each column, takes singular values σ, and returns
/// `σ_min⁺ / σ_max ∈ (0, 1]`, where `σ_min⁺` is the smallest σ above
/// `RANK_TOL · σ_max`. 1 means variance is spread evenly over every
/// direction the batch spans; values near 0 mean some direction is almost
/// a linear combination of the others.
pub fn eigen_ratio(cls_batch: &Matrix) -> Result<f64> {
    let (b, d) = cls_batch.shape();
    if b < 2 || d == 0 {
        return Err(Error::DegenerateInput(format!("eigen ratio needs at least 2 rows, got {b}x{d}")));
    }
    let mean = cls_batch.sum_rows().scale(1.0 / b as f64);
    let mut centered = cls_batch.clone();
    for r in 0..b {
        for (x, m) in centered.row_mut(r).iter_mut().zip(mean.as_slice()) {
            *x -= m;
        }
    }
    let sv = singular_values(&centered)?;
    let max = sv[0];
    if max.is_nan() || max <= 0.0 {
        return Err(Error::DegenerateInput("batch has no variance".into()));
    }
    let min = sv.iter().rev().find(|&&s| s > RANK_TOL * max).copied().unwrap_or(max);
    Ok(min / max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Rng;

    #[test]
    fn degenerate() {
        assert!(eigen_ratio(&Matrix::zeros(1, 3)).is_err());
        assert!(matches!(eigen_ratio(&Matrix::zeros(4, 3)), Err(Error::DegenerateInput(_))));
        assert!(eigen_ratio(&Matrix::filled(5, 3, 2.0)).is_err());
    }

    #[test]
    fn two_directions_scaled_one_and_ten() {
        // Centred rows ±e₁ and ±10·e₂ in 3-d: singular values 10√2, √2, 0.
        let m = Matrix::from_rows(&[
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 10.0, 0.0],
            [0.0, -10.0, 0.0],
        ]);
        assert!((eigen_ratio(&m).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_design_gives_one() {
        // ±e_i rows: centred, every singular value is √2.
        let mut rows = Vec::new();
        for i in 0..4 {
            let mut plus = [0.0; 4];
            plus[i] = 1.0;
            let minus = plus.map(|x: f64| -x);
            rows.push(plus);
            rows.push(minus);
        }
        assert!((eigen_ratio(&Matrix::from_rows(&rows)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scale_invariance_is_exact_for_powers_of_two() {
        let m = Matrix::randn(20, 5, &mut Rng::new(3)).unwrap();
        assert_eq!(eigen_ratio(&m).unwrap(), eigen_ratio(&m.scale(8.0)).unwrap());
    }
}
