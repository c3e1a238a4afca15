//! Damped least squares (Levenberg–Marquardt).
//!
//! Parameters are rescaled by the magnitude of their initial values so that
//! the isotropic damping term `λI` treats a tesla-scale amplitude and a
//! radian-scale phase alike. Damping starts at `10⁻³·max diag(JᵀJ)`, is
//! divided by 10 after an accepted step and multiplied by 10 after a rejected
//! one.

use nalgebra::{DMatrix, DVector};

use super::{numerical_jacobian, CurveModel, Dataset, Weighting};
use crate::error::{Error, Result};
use crate::model::FitResult;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmConfig {
    pub max_iterations: usize,
    /// Convergence on `‖Jᵀr‖∞` in scaled units.
    pub gradient_tol: f64,
    /// Convergence on `‖δ‖/‖u‖` in scaled units.
    pub step_tol: f64,
    pub initial_damping: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tol: 1e-10,
            step_tol: 1e-12,
            initial_damping: 1e-3,
        }
    }
}

struct Problem<'a, M> {
    model: &'a M,
    data: &'a Dataset,
    weights: DVector<f64>,
    scale: DVector<f64>,
}

impl<M: CurveModel> Problem<'_, M> {
    fn natural(&self, u: &DVector<f64>) -> Vec<f64> {
        u.component_mul(&self.scale).iter().copied().collect()
    }

    fn residuals(&self, u: &DVector<f64>) -> Option<DVector<f64>> {
        let p = self.natural(u);
        let mut r = DVector::zeros(self.data.len());
        for (i, (&x, &y)) in self.data.x.iter().zip(&self.data.y).enumerate() {
            let m = self.model.eval(x, &p).ok()?;
            if !m.is_finite() {
                return None;
            }
            r[i] = (y - m) * self.weights[i];
        }
        Some(r)
    }

    /// Jacobian of the weighted residuals with respect to scaled parameters.
    fn jacobian(&self, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        let p = self.natural(u);
        let mut j = numerical_jacobian(self.model, &p, &self.data.x)?;
        for (mut row, w) in j.row_iter_mut().zip(self.weights.iter()) {
            row *= -w;
        }
        for (mut col, s) in j.column_iter_mut().zip(self.scale.iter()) {
            col *= *s;
        }
        Ok(j)
    }
}

/// Minimises `Σ w_i² (y_i − model(x_i))²` from `init`.
pub fn levenberg_marquardt<M: CurveModel>(
    model: &M,
    data: &Dataset,
    init: &[f64],
    weighting: Weighting,
    config: &LmConfig,
) -> Result<FitResult> {
    let n_params = model.names().len();
    if init.len() != n_params {
        return Err(Error::invalid(
            "init",
            format!("expected {n_params} values, got {}", init.len()),
        ));
    }
    if data.len() < n_params + 1 {
        return Err(Error::InvalidDataset(format!(
            "{} points cannot constrain {n_params} parameters",
            data.len()
        )));
    }
    let weights = match weighting {
        Weighting::ShotNoise => {
            DVector::from_iterator(data.len(), data.y_err.iter().map(|s| 1.0 / s))
        }
        Weighting::Uniform => DVector::from_element(data.len(), 1.0),
    };
    let scale = DVector::from_iterator(
        n_params,
        init.iter().map(|v| if *v != 0.0 { v.abs() } else { 1.0 }),
    );
    let problem = Problem {
        model,
        data,
        weights,
        scale,
    };

    let mut u = DVector::from_iterator(
        n_params,
        init.iter().zip(problem.scale.iter()).map(|(v, s)| v / s),
    );
    let mut r = problem
        .residuals(&u)
        .ok_or_else(|| Error::NonFiniteModel(init.to_vec()))?;
    let mut cost = r.norm_squared();
    let mut j = problem.jacobian(&u)?;
    let mut jtj = j.transpose() * &j;
    let mut grad = j.transpose() * &r;
    let mut lambda = config.initial_damping * jtj.diagonal().max();
    if lambda <= 0.0 {
        lambda = config.initial_damping;
    }

    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        if grad.amax() < config.gradient_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut damped = jtj.clone();
        for i in 0..n_params {
            damped[(i, i)] += lambda;
        }
        let step = match damped.cholesky() {
            Some(ch) => ch.solve(&(-&grad)),
            None => {
                lambda *= 10.0;
                continue;
            }
        };
        if step.norm() <= config.step_tol * (u.norm() + config.step_tol) {
            converged = true;
            break;
        }
        let candidate = &u + &step;
        match problem.residuals(&candidate) {
            Some(rc) if rc.norm_squared() < cost => {
                u = candidate;
                r = rc;
                cost = r.norm_squared();
                j = problem.jacobian(&u)?;
                jtj = j.transpose() * &j;
                grad = j.transpose() * &r;
                lambda = (lambda / 10.0).max(f64::MIN_POSITIVE);
            }
            _ => {
                lambda *= 10.0;
                if !lambda.is_finite() {
                    converged = true;
                    break;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NotConverged { iterations });
    }

    let dof = data.len() - n_params;
    let inv = jtj.cholesky().ok_or(Error::SingularJacobian)?.inverse();
    let s = DMatrix::from_diagonal(&problem.scale);
    let mut covariance = &s * inv * &s;
    if weighting == Weighting::Uniform {
        covariance *= cost / dof as f64;
    }
    covariance = 0.5 * (&covariance + covariance.transpose());

    Ok(FitResult {
        names: model.names().to_vec(),
        parameters: u.component_mul(&problem.scale),
        covariance,
        residual_norm: cost.sqrt(),
        dof,
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Line;

    impl CurveModel for Line {
        fn names(&self) -> &[&'static str] {
            &["slope", "offset"]
        }
        fn eval(&self, x: f64, p: &[f64]) -> Result<f64> {
            Ok(p[0] * x + p[1])
        }
    }

    struct Exp;

    impl CurveModel for Exp {
        fn names(&self) -> &[&'static str] {
            &["a", "k"]
        }
        fn eval(&self, x: f64, p: &[f64]) -> Result<f64> {
            Ok(p[0] * (-p[1] * x).exp())
        }
    }

    #[test]
    fn linear_fit_matches_normal_equations() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|x| 2.0 * x - 1.0 + if (*x as i32) % 2 == 0 { 0.1 } else { -0.1 })
            .collect();
        let data = Dataset::new(x.clone(), y, vec![0.1; 10]).unwrap();
        let fit = levenberg_marquardt(
            &Line,
            &data,
            &[1.0, 0.0],
            Weighting::ShotNoise,
            &LmConfig::default(),
        )
        .unwrap();
        assert!(fit.converged);
        // closed-form ordinary least squares
        let n = 10.0;
        let sx: f64 = x.iter().sum();
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let sy: f64 = data.y.iter().sum();
        let sxy: f64 = x.iter().zip(&data.y).map(|(a, b)| a * b).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let offset = (sy - slope * sx) / n;
        assert!((fit.parameters[0] - slope).abs() < 1e-10);
        assert!((fit.parameters[1] - offset).abs() < 1e-10);
        // var(slope) = σ² n / (n Σx² − (Σx)²)
        let var_slope = 0.01 * n / (n * sxx - sx * sx);
        assert!((fit.covariance[(0, 0)] - var_slope).abs() < 1e-12);
        assert!((fit.covariance[(0, 1)] - fit.covariance[(1, 0)]).abs() < 1e-18);
    }

    #[test]
    fn exponential_recovers_noiseless_truth() {
        let x: Vec<f64> = (0..30).map(|i| 0.1 * f64::from(i)).collect();
        let y: Vec<f64> = x.iter().map(|x| 3.0 * (-1.7 * x).exp()).collect();
        let data = Dataset::new(x, y, vec![0.01; 30]).unwrap();
        let fit = levenberg_marquardt(
            &Exp,
            &data,
            &[1.0, 0.5],
            Weighting::Uniform,
            &LmConfig::default(),
        )
        .unwrap();
        assert!((fit.parameters[0] - 3.0).abs() < 1e-9);
        assert!((fit.parameters[1] - 1.7).abs() < 1e-9);
    }

    #[test]
    fn rejects_underdetermined_data() {
        let data = Dataset::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            levenberg_marquardt(
                &Line,
                &data,
                &[1.0, 0.0],
                Weighting::Uniform,
                &LmConfig::default()
            ),
            Err(Error::InvalidDataset(_))
        ));
    }

    #[test]
    fn unidentifiable_parameter_is_singular() {
        struct Flat;
        impl CurveModel for Flat {
            fn names(&self) -> &[&'static str] {
                &["a", "b"]
            }
            fn eval(&self, _x: f64, p: &[f64]) -> Result<f64> {
                Ok(p[0])
            }
        }
        let data = Dataset::new(vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 1.0], vec![1.0; 3]).unwrap();
        let res = levenberg_marquardt(
            &Flat,
            &data,
            &[0.5, 1.0],
            Weighting::ShotNoise,
            &LmConfig::default(),
        );
        assert!(matches!(res, Err(Error::SingularJacobian)), "{res:?}");
    }

    #[test]
    fn iteration_budget_is_enforced() {
        let x: Vec<f64> = (0..30).map(|i| 0.1 * f64::from(i)).collect();
        let y: Vec<f64> = x.iter().map(|x| 3.0 * (-1.7 * x).exp()).collect();
        let data = Dataset::new(x, y, vec![0.01; 30]).unwrap();
        let cfg = LmConfig {
            max_iterations: 2,
            ..LmConfig::default()
        };
        assert!(matches!(
            levenberg_marquardt(&Exp, &data, &[1.0, 0.5], Weighting::Uniform, &cfg),
            Err(Error::NotConverged { iterations: 2 })
        ));
    }
}
