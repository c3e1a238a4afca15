//! Weighted nonlinear least squares for magnetometry sweeps and coherence
//! decays.

mod fits;
mod lm;

pub use fits::{
    chi_square, coherence_guess, fit_coherence, fit_magnetometry, magnetometry_guess,
    CoherenceModel, MagnetometryModel, SweepVariable,
};
pub use lm::{levenberg_marquardt, LmConfig};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sweep values with their measured signals and per-point standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub y_err: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Vec<f64>, y: Vec<f64>, y_err: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() != y_err.len() {
            return Err(Error::InvalidDataset(format!(
                "length mismatch: x={}, y={}, y_err={}",
                x.len(),
                y.len(),
                y_err.len()
            )));
        }
        if x.is_empty() {
            return Err(Error::InvalidDataset("no points".into()));
        }
        if let Some(i) = x.iter().chain(&y).position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at flat index {i}"
            )));
        }
        if let Some(i) = y_err.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidDataset(format!(
                "y_err[{i}] = {} must be > 0",
                y_err[i]
            )));
        }
        Ok(Self { x, y, y_err })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// How residuals are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// `1/y_err` per point; covariance is `(JᵀWJ)⁻¹`.
    #[default]
    ShotNoise,
    /// Unit weights; covariance is rescaled by `χ²/dof`.
    Uniform,
}

/// A scalar model `y = f(x; params)`.
pub trait CurveModel {
    fn names(&self) -> &[&'static str];
    fn eval(&self, x: f64, params: &[f64]) -> Result<f64>;
}

/// Central-difference Jacobian `∂f(x_i)/∂p_j`, step `max(10⁻⁶|p_j|, 10⁻¹²)`.
pub fn numerical_jacobian<M: CurveModel + ?Sized>(
    model: &M,
    params: &[f64],
    xs: &[f64],
) -> Result<DMatrix<f64>> {
    let mut jac = DMatrix::zeros(xs.len(), params.len());
    let mut p = params.to_vec();
    for j in 0..params.len() {
        let h = (1e-6 * params[j].abs()).max(1e-12);
        for (i, &x) in xs.iter().enumerate() {
            p[j] = params[j] + h;
            let up = model.eval(x, &p)?;
            p[j] = params[j] - h;
            let down = model.eval(x, &p)?;
            if !(up.is_finite() && down.is_finite()) {
                p[j] = params[j];
                return Err(Error::NonFiniteModel(p));
            }
            jac[(i, j)] = (up - down) / (2.0 * h);
        }
        p[j] = params[j];
    }
    Ok(jac)
}
