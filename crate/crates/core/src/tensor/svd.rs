use super::Matrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;

/// Singular values, descending, by one-sided (Hestenes) Jacobi.
///
/// Columns are rotated pairwise until mutually orthogonal; the singular values
/// are then the column norms. Unlike going through the eigenvalues of `AᵀA`,
/// small singular values keep full relative accuracy, so exact rank
/// deficiency shows up as values near `ε·σ_max` rather than `√ε·σ_max`.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Err(Error::Shape("singular values of an empty matrix".into()));
    }
    // Work on whichever orientation has fewer columns; rows of `cols` are the
    // columns being orthogonalised.
    let mut cols = if m.cols() <= m.rows() { m.transpose() } else { m.clone() };
    let k = cols.rows();
    let len = cols.cols();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..len {
                    let (x, y) = (cols[(p, i)], cols[(q, i)]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..len {
                    let (x, y) = (cols[(p, i)], cols[(q, i)]);
                    cols[(p, i)] = c * x - s * y;
                    cols[(q, i)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<f64> = (0..k).map(|p| cols.row(p).iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}
