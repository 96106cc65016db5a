//! Combining two waves: interference (complex addition) and modulation
//! (complex multiplication), elementwise over `n×d` complex matrices.

use crate::error::Result;
use crate::tensor::Matrix;

/// A complex `n×d` matrix stored as separate real and imaginary parts.
#[derive(Clone, Debug, PartialEq)]
pub struct CartesianWave {
    pub real: Matrix,
    pub imag: Matrix,
}

impl CartesianWave {
    pub fn new(real: Matrix, imag: Matrix) -> Result<Self> {
        real.ensure_same_shape(&imag, "real/imag parts")?;
        Ok(Self { real, imag })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { real: Matrix::zeros(rows, cols), imag: Matrix::zeros(rows, cols) }
    }

    /// Every entry `1 + 0i`.
    pub fn ones(rows: usize, cols: usize) -> Self {
        Self { real: Matrix::filled(rows, cols, 1.0), imag: Matrix::zeros(rows, cols) }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.real.shape()
    }

    /// `|z|` elementwise.
    pub fn modulus(&self) -> Matrix {
        self.real.zip_map(&self.imag, f64::hypot).expect("parts share a shape")
    }

    /// `|z|²` elementwise.
    pub fn norm_sqr(&self) -> Matrix {
        self.real.zip_map(&self.imag, |a, b| a * a + b * b).expect("parts share a shape")
    }

    /// `arg z` in `(-π, π]` elementwise.
    pub fn argument(&self) -> Matrix {
        self.imag.zip_map(&self.real, f64::atan2).expect("parts share a shape")
    }

    fn check_pair(&self, other: &CartesianWave) -> Result<()> {
        self.real.ensure_same_shape(&other.real, "wave operands")?;
        self.imag.ensure_same_shape(&other.imag, "wave operands")
    }
}

/// `z + z′`.
pub fn interference(z: &CartesianWave, z2: &CartesianWave) -> Result<CartesianWave> {
    z.check_pair(z2)?;
    Ok(CartesianWave { real: z.real.add(&z2.real)?, imag: z.imag.add(&z2.imag)? })
}

/// `2 · Re(z · conj(z′))`, equal to `2 G G′ cos(α − α′)` for polar inputs.
pub fn interference_term(z: &CartesianWave, z2: &CartesianWave) -> Result<Matrix> {
    z.check_pair(z2)?;
    let rr = z.real.hadamard(&z2.real)?;
    let ii = z.imag.hadamard(&z2.imag)?;
    Ok(rr.add(&ii)?.scale(2.0))
}

/// `z · z′`: magnitudes multiply, phases add.
pub fn modulation(z: &CartesianWave, z2: &CartesianWave) -> Result<CartesianWave> {
    z.check_pair(z2)?;
    let (n, d) = z.shape();
    let mut out = CartesianWave::zeros(n, d);
    let (a, b, c, e) = (z.real.as_slice(), z.imag.as_slice(), z2.real.as_slice(), z2.imag.as_slice());
    for (i, (re, im)) in out.real.as_mut_slice().iter_mut().zip(out.imag.as_mut_slice()).enumerate() {
        *re = a[i] * c[i] - b[i] * e[i];
        *im = a[i] * e[i] + b[i] * c[i];
    }
    Ok(out)
}

/// Upstream gradient passes unchanged to both operands.
pub fn vjp_interference(
    z: &CartesianWave,
    z2: &CartesianWave,
    upstream: &CartesianWave,
) -> Result<(CartesianWave, CartesianWave)> {
    z.check_pair(z2)?;
    z.check_pair(upstream)?;
    Ok((upstream.clone(), upstream.clone()))
}

/// For `out = z · z′` and upstream `u`, the gradient with respect to `z` is
/// `u · conj(z′)` read as a real pair, and symmetrically for `z′`.
pub fn vjp_modulation(
    z: &CartesianWave,
    z2: &CartesianWave,
    upstream: &CartesianWave,
) -> Result<(CartesianWave, CartesianWave)> {
    z.check_pair(z2)?;
    z.check_pair(upstream)?;
    let (n, d) = z.shape();
    let mut gz = CartesianWave::zeros(n, d);
    let mut gz2 = CartesianWave::zeros(n, d);
    let (a, b, c, e) = (z.real.as_slice(), z.imag.as_slice(), z2.real.as_slice(), z2.imag.as_slice());
    let (ur, ui) = (upstream.real.as_slice(), upstream.imag.as_slice());
    for i in 0..n * d {
        // out.re = a c − b e ; out.im = a e + b c
        gz.real.as_mut_slice()[i] = ur[i] * c[i] + ui[i] * e[i];
        gz.imag.as_mut_slice()[i] = -ur[i] * e[i] + ui[i] * c[i];
        gz2.real.as_mut_slice()[i] = ur[i] * a[i] + ui[i] * b[i];
        gz2.imag.as_mut_slice()[i] = -ur[i] * b[i] + ui[i] * a[i];
    }
    Ok((gz, gz2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::tensor::Rng;
    use crate::wave_repr::WaveRepr;
    use proptest::prelude::{any, prop_assert, proptest};

    fn random_wave(n: usize, d: usize, rng: &mut Rng) -> CartesianWave {
        CartesianWave::new(Matrix::randn(n, d, rng).unwrap(), Matrix::randn(n, d, rng).unwrap()).unwrap()
    }

    fn max_diff(a: &CartesianWave, b: &CartesianWave) -> f64 {
        a.real.max_abs_diff(&b.real).max(a.imag.max_abs_diff(&b.imag))
    }

    #[test]
    fn interference_examples() {
        let mut rng = Rng::new(1);
        let z = random_wave(3, 4, &mut rng);
        assert_eq!(interference(&z, &CartesianWave::zeros(3, 4)).unwrap(), z);
        let doubled = interference(&z, &z).unwrap();
        assert_eq!(doubled.real, z.real.scale(2.0));
        assert_eq!(doubled.imag, z.imag.scale(2.0));

        let w = WaveRepr::from_embedding(&Matrix::from_rows(&[[3.0, 0.0], [4.0, 0.0]])).unwrap().to_cartesian();
        let s = interference(&w, &w).unwrap();
        assert!((s.real[(0, 0)] - 6.0).abs() < 1e-12);
        assert!((s.imag[(0, 0)] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = CartesianWave::zeros(2, 3);
        let b = CartesianWave::zeros(3, 2);
        assert!(matches!(interference(&a, &b), Err(Error::Dimension(_))));
        assert!(matches!(interference_term(&a, &b), Err(Error::Dimension(_))));
        assert!(matches!(modulation(&a, &b), Err(Error::Dimension(_))));
        assert!(matches!(vjp_modulation(&a, &a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn interference_term_examples() {
        let mut rng = Rng::new(2);
        let z = random_wave(2, 3, &mut rng);
        let self_term = interference_term(&z, &z).unwrap();
        assert!(self_term.max_abs_diff(&z.norm_sqr().scale(2.0)) < 1e-12);

        let x = CartesianWave::new(Matrix::from_rows(&[[1.0]]), Matrix::from_rows(&[[0.0]])).unwrap();
        let y = CartesianWave::new(Matrix::from_rows(&[[0.0]]), Matrix::from_rows(&[[1.0]])).unwrap();
        assert_eq!(interference_term(&x, &y).unwrap()[(0, 0)], 0.0);
    }

    #[test]
    fn interference_term_is_polar_cosine() {
        let mut rng = Rng::new(6);
        let a = WaveRepr::from_embedding(&Matrix::randn(4, 3, &mut rng).unwrap()).unwrap();
        let b = WaveRepr::from_embedding(&Matrix::randn(4, 3, &mut rng).unwrap()).unwrap();
        let term = interference_term(&a.to_cartesian(), &b.to_cartesian()).unwrap();
        for j in 0..4 {
            for k in 0..3 {
                let want = 2.0
                    * a.magnitude.0[k]
                    * b.magnitude.0[k]
                    * (a.phase.0[(j, k)] - b.phase.0[(j, k)]).cos();
                assert!((term[(j, k)] - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn modulation_examples() {
        let mut rng = Rng::new(3);
        let z = random_wave(3, 2, &mut rng);
        assert_eq!(modulation(&z, &CartesianWave::ones(3, 2)).unwrap(), z);

        let unit = |t: f64| CartesianWave::new(Matrix::from_rows(&[[t.cos()]]), Matrix::from_rows(&[[t.sin()]])).unwrap();
        let out = modulation(&unit(0.3), &unit(0.4)).unwrap();
        assert!((out.argument()[(0, 0)] - 0.7).abs() < 1e-12);
        assert!((out.modulus()[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn modulation_vjp_identity_operand() {
        let mut rng = Rng::new(4);
        let z = random_wave(2, 3, &mut rng);
        let up = random_wave(2, 3, &mut rng);
        let (gz, _) = vjp_modulation(&z, &CartesianWave::ones(2, 3), &up).unwrap();
        assert_eq!(gz, up);
        let (g1, g2) = vjp_interference(&z, &z, &up).unwrap();
        assert_eq!(g1, up);
        assert_eq!(g2, up);
    }

    proptest! {
        #[test]
        fn interference_commutes_and_associates(seed in any::<u64>()) {
            let mut rng = Rng::new(seed);
            let (a, b, c) = (random_wave(3, 4, &mut rng), random_wave(3, 4, &mut rng), random_wave(3, 4, &mut rng));
            prop_assert!(max_diff(&interference(&a, &b).unwrap(), &interference(&b, &a).unwrap()) <= 1e-12);
            let left = interference(&interference(&a, &b).unwrap(), &c).unwrap();
            let right = interference(&a, &interference(&b, &c).unwrap()).unwrap();
            prop_assert!(max_diff(&left, &right) <= 1e-12);
        }

        #[test]
        fn modulation_commutes_and_distributes(seed in any::<u64>()) {
            let mut rng = Rng::new(seed);
            let (a, b, c) = (random_wave(3, 4, &mut rng), random_wave(3, 4, &mut rng), random_wave(3, 4, &mut rng));
            prop_assert!(max_diff(&modulation(&a, &b).unwrap(), &modulation(&b, &a).unwrap()) < 1e-12);
            let left = modulation(&a, &interference(&b, &c).unwrap()).unwrap();
            let right = interference(&modulation(&a, &b).unwrap(), &modulation(&a, &c).unwrap()).unwrap();
            prop_assert!(max_diff(&left, &right) < 1e-9);
        }

        #[test]
        fn magnitude_expansion(seed in any::<u64>()) {
            let mut rng = Rng::new(seed);
            let (a, b) = (random_wave(3, 4, &mut rng), random_wave(3, 4, &mut rng));
            let expanded = interference(&a, &b).unwrap().norm_sqr().sub(&a.norm_sqr()).unwrap().sub(&b.norm_sqr()).unwrap();
            prop_assert!(interference_term(&a, &b).unwrap().max_abs_diff(&expanded) < 1e-9);
        }

        #[test]
        fn modulus_multiplies(seed in any::<u64>()) {
            let mut rng = Rng::new(seed);
            let (a, b) = (random_wave(3, 4, &mut rng), random_wave(3, 4, &mut rng));
            let lhs = modulation(&a, &b).unwrap().modulus();
            let rhs = a.modulus().hadamard(&b.modulus()).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-9);
        }
    }
}
