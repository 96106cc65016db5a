//! Gaussian kernel density estimation for gradient-norm (and eigen-ratio)
//! distributions.

use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::io::Write;

/// Grid extends this many bandwidths past the data on each side.
pub const GRID_PAD_BANDWIDTHS: f64 = 4.0;

#[derive(Clone, Debug, PartialEq)]
pub struct KdeCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl KdeCurve {
    /// Trapezoid rule over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }

    /// Grid point with the highest density.
    pub fn mode(&self) -> f64 {
        let (i, _) = self
            .density
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("curve has at least two points");
        self.grid[i]
    }

    /// `x,density` rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,density")?;
        for (x, y) in self.grid.iter().zip(&self.density) {
            writeln!(out, "{x},{y}")?;
        }
        Ok(())
    }
}

fn mean_std(samples: &[f64]) -> (f64, f64) {
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.len() < 2 {
        return Err(Error::DegenerateInput(format!("KDE needs at least 2 samples, got {}", samples.len())));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateInput("KDE samples must be finite".into()));
    }
    Ok(())
}

/// Silverman's rule of thumb, `1.06 · σ̂ · m^(-1/5)`.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    check_samples(samples)?;
    let (_, sd) = mean_std(samples);
    if sd == 0.0 {
        return Err(Error::DegenerateInput("KDE samples have zero variance".into()));
    }
    Ok(1.06 * sd * (samples.len() as f64).powf(-0.2))
}

pub fn kde(samples: &[f64], grid_points: usize) -> Result<KdeCurve> {
    let h = silverman_bandwidth(samples)?;
    kde_with_bandwidth(samples, grid_points, h)
}

/// Evaluates the Gaussian-kernel estimate on `grid_points` evenly spaced
/// points spanning `[min − 4h, max + 4h]`.
pub fn kde_with_bandwidth(samples: &[f64], grid_points: usize, bandwidth: f64) -> Result<KdeCurve> {
    check_samples(samples)?;
    if grid_points < 2 {
        return Err(Error::Config("KDE grid needs at least 2 points".into()));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::Config(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min) - GRID_PAD_BANDWIDTHS * bandwidth;
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + GRID_PAD_BANDWIDTHS * bandwidth;
    let step = (hi - lo) / (grid_points - 1) as f64;
    let grid: Vec<f64> = (0..grid_points).map(|i| lo + step * i as f64).collect();
    let norm = 1.0 / (samples.len() as f64 * bandwidth * (2.0 * PI).sqrt());
    let density = grid
        .iter()
        .map(|&x| {
            samples
                .iter()
                .map(|&s| {
                    let u = (x - s) / bandwidth;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();
    Ok(KdeCurve { grid, density, bandwidth })
}
