//! Central finite-difference checks of every hand-written backward pass.
//!
//! Each [`GradOp`] is reduced to a scalar `f(x) = ⟨upstream, op(x)⟩` over a
//! flat point `x` holding all of the op's differentiable inputs. The analytic
//! gradient of `f` comes from the op's VJP; the numeric one from
//! `(f(x + h·eᵢ) − f(x − h·eᵢ)) / 2h`.

use crate::error::{Error, Result};
use crate::model::{self, layers, Architecture, CombineMode, ModelParams, Restore, TokenSeq};
use crate::tensor::{Matrix, Rng};
use crate::wave_ops::{self, CartesianWave};
use crate::wave_repr::{self, WaveRepr};
use std::fmt;
use std::str::FromStr;

pub const FD_STEP: f64 = 1e-5;
/// Points where any square-root or modulus in the op falls below this are
/// too close to a kink to difference reliably.
pub const MIN_IMAG: f64 = 1e-3;
pub const OP_TOL: f64 = 1e-4;
pub const MODEL_TOL: f64 = 1e-3;

// Shapes of the small instances.
const N: usize = 3;
const D: usize = 4;
const PAIR_ROWS: usize = 2;
const PAIR_COLS: usize = 3;
const CLASSES: usize = 2;
const MODEL_VOCAB: usize = 8;
const MODEL_CLS_LABELS: [usize; 2] = [0, 1];

fn model_batch() -> Vec<TokenSeq> {
    vec![TokenSeq::new(vec![model::CLS_ID, 3, 5]), TokenSeq::new(vec![model::CLS_ID, 4, 7])]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradOp {
    Linear,
    WaveRepr,
    Interference,
    Modulation,
    FeedForward,
    LayerNorm,
    Classifier,
    Restore,
    FullModel(CombineMode),
}

impl GradOp {
    pub const ALL: [GradOp; 10] = [
        GradOp::Linear,
        GradOp::WaveRepr,
        GradOp::Interference,
        GradOp::Modulation,
        GradOp::FeedForward,
        GradOp::LayerNorm,
        GradOp::Classifier,
        GradOp::Restore,
        GradOp::FullModel(CombineMode::Interference),
        GradOp::FullModel(CombineMode::Modulation),
    ];

    pub fn tolerance(self) -> f64 {
        match self {
            GradOp::FullModel(_) => MODEL_TOL,
            _ => OP_TOL,
        }
    }

    pub fn point_len(self) -> usize {
        match self {
            GradOp::Linear => N * D + D * D + D,
            GradOp::WaveRepr => N * D,
            GradOp::Interference | GradOp::Modulation => 4 * PAIR_ROWS * PAIR_COLS,
            GradOp::FeedForward => N * D + D * 4 * D + 4 * D + 4 * D * D + D,
            GradOp::LayerNorm => N * D + 2 * D,
            GradOp::Classifier => N * D + D * CLASSES + CLASSES,
            GradOp::Restore => 2 * N * D,
            GradOp::FullModel(_) => ModelParams::zeros(MODEL_VOCAB, D, CLASSES).param_count(),
        }
    }

    pub fn upstream_len(self) -> usize {
        match self {
            GradOp::Linear | GradOp::FeedForward | GradOp::LayerNorm | GradOp::Restore => N * D,
            GradOp::WaveRepr => 2 * N * D,
            GradOp::Interference | GradOp::Modulation => 2 * PAIR_ROWS * PAIR_COLS,
            GradOp::Classifier | GradOp::FullModel(_) => 1,
        }
    }
}

impl fmt::Display for GradOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GradOp::Linear => "linear",
            GradOp::WaveRepr => "wave-repr",
            GradOp::Interference => "interference",
            GradOp::Modulation => "modulation",
            GradOp::FeedForward => "feed-forward",
            GradOp::LayerNorm => "layer-norm",
            GradOp::Classifier => "classifier",
            GradOp::Restore => "restore",
            GradOp::FullModel(CombineMode::Interference) => "model-interference",
            GradOp::FullModel(CombineMode::Modulation) => "model-modulation",
        })
    }
}

impl FromStr for GradOp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        GradOp::ALL
            .into_iter()
            .find(|op| op.to_string() == s)
            .ok_or_else(|| Error::UnknownOp(s.to_string()))
    }
}

/// `|a − b| / max(1e-8, |a| + |b|)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic.iter().zip(numeric).map(|(&a, &b)| relative_error(a, b)).fold(0.0, f64::max)
}

/// Central differences of `f` at `x`, one coordinate at a time.
pub fn numeric_gradient(x: &[f64], mut f: impl FnMut(&[f64]) -> Result<f64>) -> Result<Vec<f64>> {
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + FD_STEP;
        let plus = f(&probe)?;
        probe[i] = x[i] - FD_STEP;
        let minus = f(&probe)?;
        probe[i] = x[i];
        grad.push((plus - minus) / (2.0 * FD_STEP));
    }
    Ok(grad)
}

struct Cursor<'a> {
    data: &'a [f64],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(data: &'a [f64]) -> Self {
        Self { data, pos: 0 }
    }

    fn take(&mut self, rows: usize, cols: usize) -> Matrix {
        let n = rows * cols;
        let m = Matrix::from_vec(rows, cols, self.data[self.pos..self.pos + n].to_vec())
            .expect("cursor slices exactly rows·cols values");
        self.pos += n;
        m
    }

    fn wave(&mut self, rows: usize, cols: usize) -> CartesianWave {
        let real = self.take(rows, cols);
        let imag = self.take(rows, cols);
        CartesianWave { real, imag }
    }
}

fn flatten<'a>(parts: impl IntoIterator<Item = &'a Matrix>) -> Vec<f64> {
    parts.into_iter().flat_map(|m| m.as_slice().iter().copied()).collect()
}

fn inner(a: &Matrix, b: &Matrix) -> f64 {
    crate::tensor::dot(a.as_slice(), b.as_slice())
}

fn wave_inner(a: &CartesianWave, b: &CartesianWave) -> f64 {
    inner(&a.real, &b.real) + inner(&a.imag, &b.imag)
}

/// `⟨upstream, op(x)⟩`.
fn objective(op: GradOp, x: &[f64], up: &[f64]) -> Result<f64> {
    let mut c = Cursor::new(x);
    let mut u = Cursor::new(up);
    match op {
        GradOp::Linear => {
            let (xm, w, b) = (c.take(N, D), c.take(D, D), c.take(1, D));
            Ok(inner(&layers::linear(&xm, &w, &b)?, &u.take(N, D)))
        }
        GradOp::WaveRepr => {
            // The polar route, independent of the direct Cartesian formula
            // the backward pass differentiates.
            let wave = WaveRepr::from_embedding(&c.take(N, D))?.to_cartesian();
            Ok(wave_inner(&wave, &u.wave(N, D)))
        }
        GradOp::Interference | GradOp::Modulation => {
            let (z, z2) = (c.wave(PAIR_ROWS, PAIR_COLS), c.wave(PAIR_ROWS, PAIR_COLS));
            let out = if op == GradOp::Interference {
                wave_ops::interference(&z, &z2)?
            } else {
                wave_ops::modulation(&z, &z2)?
            };
            Ok(wave_inner(&out, &u.wave(PAIR_ROWS, PAIR_COLS)))
        }
        GradOp::FeedForward => {
            let (xm, w1, b1, w2, b2) = (c.take(N, D), c.take(D, 4 * D), c.take(1, 4 * D), c.take(4 * D, D), c.take(1, D));
            Ok(inner(&layers::feed_forward(&xm, &w1, &b1, &w2, &b2)?.0, &u.take(N, D)))
        }
        GradOp::LayerNorm => {
            let (xm, scale, shift) = (c.take(N, D), c.take(1, D), c.take(1, D));
            Ok(inner(&layers::layer_norm(&xm, &scale, &shift)?.0, &u.take(N, D)))
        }
        GradOp::Classifier => {
            let (xm, w, b) = (c.take(N, D), c.take(D, CLASSES), c.take(1, CLASSES));
            let logits = layers::linear(&xm, &w, &b)?;
            Ok(up[0] * layers::cross_entropy(&logits, &classifier_labels())?)
        }
        GradOp::Restore => {
            let z = c.wave(N, D);
            Ok(inner(&layers::restore(Restore::GlobalSemantics, &z.real, &z.imag)?.0, &u.take(N, D)))
        }
        GradOp::FullModel(mode) => {
            let mut params = ModelParams::zeros(MODEL_VOCAB, D, CLASSES);
            params.assign_flat(x)?;
            Ok(up[0] * model::batch_loss(&params, &model_batch(), &MODEL_CLS_LABELS, Architecture::new(mode))?)
        }
    }
}

fn classifier_labels() -> Vec<usize> {
    (0..N).map(|i| i % CLASSES).collect()
}

/// Analytic gradient of [`objective`] from the hand-written backward passes.
fn analytic(op: GradOp, x: &[f64], up: &[f64]) -> Result<Vec<f64>> {
    let mut c = Cursor::new(x);
    let mut u = Cursor::new(up);
    match op {
        GradOp::Linear => {
            let (xm, w) = (c.take(N, D), c.take(D, D));
            let (dx, dw, db) = layers::linear_backward(&xm, &w, &u.take(N, D))?;
            Ok(flatten([&dx, &dw, &db]))
        }
        GradOp::WaveRepr => {
            let up = u.wave(N, D);
            Ok(wave_repr::vjp_wave_repr(&c.take(N, D), &up.real, &up.imag)?.into_vec())
        }
        GradOp::Interference | GradOp::Modulation => {
            let (z, z2) = (c.wave(PAIR_ROWS, PAIR_COLS), c.wave(PAIR_ROWS, PAIR_COLS));
            let upw = u.wave(PAIR_ROWS, PAIR_COLS);
            let (g1, g2) = if op == GradOp::Interference {
                wave_ops::vjp_interference(&z, &z2, &upw)?
            } else {
                wave_ops::vjp_modulation(&z, &z2, &upw)?
            };
            Ok(flatten([&g1.real, &g1.imag, &g2.real, &g2.imag]))
        }
        GradOp::FeedForward => {
            let (xm, w1, b1, w2, b2) = (c.take(N, D), c.take(D, 4 * D), c.take(1, 4 * D), c.take(4 * D, D), c.take(1, D));
            let (_, cache) = layers::feed_forward(&xm, &w1, &b1, &w2, &b2)?;
            let g = layers::feed_forward_backward(&cache, &w1, &w2, &u.take(N, D))?;
            Ok(flatten([&g.dx, &g.dw1, &g.db1, &g.dw2, &g.db2]))
        }
        GradOp::LayerNorm => {
            let (xm, scale, shift) = (c.take(N, D), c.take(1, D), c.take(1, D));
            let (_, cache) = layers::layer_norm(&xm, &scale, &shift)?;
            let (dx, dscale, dshift) = layers::layer_norm_backward(&cache, &scale, &u.take(N, D))?;
            Ok(flatten([&dx, &dscale, &dshift]))
        }
        GradOp::Classifier => {
            let (xm, w, b) = (c.take(N, D), c.take(D, CLASSES), c.take(1, CLASSES));
            let logits = layers::linear(&xm, &w, &b)?;
            let mut d_logits = layers::softmax_rows(&logits);
            for (r, y) in classifier_labels().into_iter().enumerate() {
                d_logits[(r, y)] -= 1.0;
            }
            let d_logits = d_logits.scale(up[0] / N as f64);
            let (dx, dw, db) = layers::linear_backward(&xm, &w, &d_logits)?;
            Ok(flatten([&dx, &dw, &db]))
        }
        GradOp::Restore => {
            let z = c.wave(N, D);
            let (_, cache) = layers::restore(Restore::GlobalSemantics, &z.real, &z.imag)?;
            let (dr, di) =
                layers::restore_backward(Restore::GlobalSemantics, &z.real, &z.imag, cache.as_ref(), &u.take(N, D))?;
            Ok(flatten([&dr, &di]))
        }
        GradOp::FullModel(mode) => {
            let mut params = ModelParams::zeros(MODEL_VOCAB, D, CLASSES);
            params.assign_flat(x)?;
            let trace = model::forward(&params, &model_batch(), Architecture::new(mode))?;
            let grads = model::backward(&params, &trace, &MODEL_CLS_LABELS)?;
            Ok(grads.to_flat(MODEL_VOCAB).into_iter().map(|g| g * up[0]).collect())
        }
    }
}

fn min_imag(e: &Matrix) -> Result<f64> {
    Ok(wave_repr::token2wave(e)?.imag.as_slice().iter().copied().fold(f64::INFINITY, f64::min))
}

/// Rejects points next to the square-root and modulus kinks.
fn check_point(op: GradOp, x: &[f64]) -> Result<()> {
    let mut c = Cursor::new(x);
    let smallest = match op {
        GradOp::WaveRepr => min_imag(&c.take(N, D))?,
        GradOp::Restore => c.wave(N, D).modulus().as_slice().iter().copied().fold(f64::INFINITY, f64::min),
        GradOp::FullModel(mode) => {
            let mut params = ModelParams::zeros(MODEL_VOCAB, D, CLASSES);
            params.assign_flat(x)?;
            let trace = model::forward(&params, &model_batch(), Architecture::new(mode))?;
            let mut smallest = f64::INFINITY;
            for s in &trace.sequences {
                for m in [&s.source_wave.imag, &s.target_wave.imag, &s.normed.modulus()] {
                    smallest = m.as_slice().iter().copied().fold(smallest, f64::min);
                }
            }
            smallest
        }
        _ => return Ok(()),
    };
    if smallest < MIN_IMAG {
        return Err(Error::PointRejected(format!("{op}: smallest modulus {smallest:.3e} < {MIN_IMAG}")));
    }
    Ok(())
}

/// Largest relative error between analytic and central-difference gradients
/// of `⟨upstream, op(point)⟩` over every coordinate of `point`.
pub fn grad_check(op: GradOp, point: &[f64], upstream: &[f64]) -> Result<f64> {
    if point.len() != op.point_len() || upstream.len() != op.upstream_len() {
        return Err(Error::Dimension(format!(
            "{op} expects a point of {} and upstream of {} values, got {} and {}",
            op.point_len(),
            op.upstream_len(),
            point.len(),
            upstream.len()
        )));
    }
    check_point(op, point)?;
    let exact = analytic(op, point, upstream)?;
    let numeric = numeric_gradient(point, |x| objective(op, x, upstream))?;
    Ok(max_relative_error(&exact, &numeric))
}

/// `(length, fan_in)` blocks of the point for ops with layer weights;
/// inputs come first with fan-in 1.
fn weight_blocks(op: GradOp) -> Option<Vec<(usize, usize)>> {
    match op {
        GradOp::Linear => Some(vec![(N * D, 1), (D * D, D), (D, D)]),
        GradOp::FeedForward => Some(vec![(N * D, 1), (D * 4 * D, D), (4 * D, D), (4 * D * D, 4 * D), (D, 4 * D)]),
        GradOp::Classifier => Some(vec![(N * D, 1), (D * CLASSES, D), (CLASSES, D)]),
        _ => None,
    }
}

/// A random `(point, upstream)` pair with standard normal entries, except:
/// the full model uses its usual initialisation, and layer weights and
/// biases are `N(0, 1/fan_in)`.
///
/// Unit-variance weights drive GELU and softmax deep into saturation, where
/// gradient entries of 1e-8 fall below the central-difference roundoff
/// floor `ε·|f|/h`; the relative error then measures roundoff, and about
/// one seed in fifteen fails the feed-forward check at 1e-4.
pub fn random_trial(op: GradOp, rng: &mut Rng) -> (Vec<f64>, Vec<f64>) {
    let point = match (op, weight_blocks(op)) {
        (GradOp::FullModel(_), _) => {
            ModelParams::init(MODEL_VOCAB, D, CLASSES, rng).expect("valid sizes").to_flat()
        }
        (_, Some(blocks)) => blocks
            .into_iter()
            .flat_map(|(len, fan_in)| {
                let sd = 1.0 / (fan_in as f64).sqrt();
                (0..len).map(|_| sd * rng.normal()).collect::<Vec<_>>()
            })
            .collect(),
        (_, None) => (0..op.point_len()).map(|_| rng.normal()).collect(),
    };
    let upstream = (0..op.upstream_len()).map(|_| rng.normal()).collect();
    (point, upstream)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckSummary {
    pub op: GradOp,
    pub trials: usize,
    pub rejected: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl GradCheckSummary {
    pub fn passed(&self) -> bool {
        self.max_error < self.tolerance
    }
}

/// Runs `trials` accepted random checks, redrawing rejected points (at most
/// `10 · trials` redraws).
pub fn run_trials(op: GradOp, trials: usize, rng: &mut Rng) -> Result<GradCheckSummary> {
    let mut rejected = 0;
    let mut done = 0;
    let mut max_error: f64 = 0.0;
    while done < trials {
        let (point, upstream) = random_trial(op, rng);
        match grad_check(op, &point, &upstream) {
            Ok(err) => {
                max_error = max_error.max(err);
                done += 1;
            }
            Err(Error::PointRejected(msg)) => {
                rejected += 1;
                if rejected > 10 * trials.max(1) {
                    return Err(Error::PointRejected(format!("too many rejected points; last: {msg}")));
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(GradCheckSummary { op, trials, rejected, max_error, tolerance: op.tolerance() })
}
