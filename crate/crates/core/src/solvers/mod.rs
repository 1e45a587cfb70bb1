//! Iterative schemes that estimate source condition elements.
//!
//! * [`solve_sc_gd`]: (accelerated) gradient descent on `G_J(v) = B_J(u†, u† + K*v)`
//!   for regularisers with a closed-form proximal map.
//! * [`solve_rc_cd`]: explicit coordinate descent on
//!   `E_H(v, q) = 1/2 ||K*v - A*q||^2 + G_H(q)` for composite regularisers `H(Au + b)`.
//! * [`solve_palm`]: proximal alternating linearised minimisation for a sparse
//!   Fourier-domain element, from which a sampling mask is read off.
//!
//! All solvers start from zero, never claim that a source condition holds, and
//! leave the a-posteriori check to [`crate::functionals`].

mod palm;
mod rc_cd;
mod sc_gd;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::array::l2_norm;
use crate::error::{Error, Result};
use crate::operators::LinearMap;

pub use palm::{extract_mask, solve_palm, solve_palm_with};
pub use rc_cd::{rc_objective, rc_partial_derivatives, solve_rc_cd};
pub use sc_gd::{grad_g, sc_objective, solve_sc_gd, solve_sc_gd_with_hook};

/// Relative slack allowed when checking step sizes computed as `1 / ||K||^2`.
pub(crate) const STEP_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Momentum {
    /// Plain gradient descent.
    None,
    /// FISTA-style extrapolation without restarts.
    Nesterov,
    /// FISTA-style extrapolation, restarted whenever `<grad(y^k), v^{k+1} - v^k> > 0`.
    #[default]
    AdaptiveRestart,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub max_iters: usize,
    /// Stop once the solver's stationarity measure is at or below this value.
    pub grad_tol: f64,
    pub tau: f64,
    pub sigma: f64,
    pub seed: u64,
    /// Keep every `record_every`-th residual in the history (the last one is always kept).
    pub record_every: usize,
    #[serde(default)]
    pub momentum: Momentum,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_iters: 1000,
            grad_tol: 0.0,
            tau: 1.0,
            sigma: 1.0 / 9.0,
            seed: 0,
            record_every: 1,
            momentum: Momentum::default(),
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) || !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!(
                "step sizes must be positive and finite (tau = {}, sigma = {})",
                self.tau, self.sigma
            )));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(Error::Config("grad_tol must be non-negative".into()));
        }
        if self.record_every < 1 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Tolerance,
    MaxIters,
}

/// Everything a run leaves behind.
///
/// `v` holds the estimated element (for [`crate::varreg::solve_pdhg`], the primal
/// iterate) and `q` the auxiliary dual field when the scheme has one. Both are flat
/// buffers in the layout of [`crate::array`].
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub v: Array1<f64>,
    pub q: Option<Array1<f64>>,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub v_norm: f64,
    pub history: Vec<(usize, f64)>,
    pub termination: Termination,
    /// Number of non-zero entries (complex entries count once), for sparse estimates.
    pub support_size: Option<usize>,
}

/// Serializable scalar part of a [`SolveReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub v_norm: f64,
    pub termination: Termination,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support_size: Option<usize>,
}

impl SolveReport {
    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            iterations: self.iterations,
            final_grad_norm: self.final_grad_norm,
            v_norm: self.v_norm,
            termination: self.termination,
            support_size: self.support_size,
        }
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Tolerance
    }
}

pub(crate) struct History {
    every: usize,
    entries: Vec<(usize, f64)>,
}

impl History {
    pub(crate) fn new(every: usize) -> Self {
        History {
            every: every.max(1),
            entries: Vec::new(),
        }
    }

    pub(crate) fn observe(&mut self, iteration: usize, value: f64) {
        if iteration % self.every == 0 {
            self.entries.push((iteration, value));
        }
    }

    pub(crate) fn finish(mut self, iteration: usize, value: f64) -> Vec<(usize, f64)> {
        if self.entries.last().map(|e| e.0) != Some(iteration) {
            self.entries.push((iteration, value));
        }
        self.entries
    }
}

/// `g_alpha = K u† + alpha v`: data for which `u†` solves the regularised problem
/// whenever `v` is a source condition element.
pub fn range_data(
    u_dag: ArrayView1<f64>,
    k: &dyn LinearMap,
    v: ArrayView1<f64>,
    alpha: f64,
) -> Result<Array1<f64>> {
    k.domain().check(u_dag, "range_data u†")?;
    k.codomain().check(v, "range_data v")?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("alpha must be non-negative, got {alpha}")));
    }
    Ok(k.apply(u_dag) + &(&v * alpha))
}

pub(crate) fn check_step(name: &str, step: f64, bound: f64) -> Result<()> {
    if step > bound * (1.0 + STEP_SLACK) {
        return Err(Error::Config(format!(
            "{name} = {step} exceeds the stability bound {bound}"
        )));
    }
    Ok(())
}

pub(crate) fn norm(x: &Array1<f64>) -> f64 {
    l2_norm(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{DenseMap, Identity};
    use crate::array::Shape;
    use ndarray::array;

    #[test]
    fn range_data_at_zero_alpha_is_forward_data() {
        let k = DenseMap::new(array![[1.0, 2.0], [0.0, 1.0]]).unwrap();
        let u = array![1.0, 1.0];
        let g = range_data(u.view(), &k, array![5.0, 5.0].view(), 0.0).unwrap();
        assert_eq!(g, array![3.0, 1.0]);
        let g = range_data(u.view(), &k, array![2.0, -2.0].view(), 0.5).unwrap();
        assert_eq!(g, array![4.0, 0.0]);
    }

    #[test]
    fn range_data_rejects_negative_alpha() {
        let k = Identity::new(Shape::real(&[2]));
        let z = array![0.0, 0.0];
        assert!(range_data(z.view(), &k, z.view(), -1.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SolveConfig::default().validate().is_ok());
        let bad = SolveConfig {
            tau: 0.0,
            ..SolveConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn history_always_ends_with_final_entry() {
        let mut h = History::new(10);
        for k in 0..=13 {
            h.observe(k, k as f64);
        }
        let entries = h.finish(13, 13.0);
        assert_eq!(entries, vec![(0, 0.0), (10, 10.0), (13, 13.0)]);
    }
}
