use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::array::l2_norm;
use crate::error::{Error, Result};
use crate::functionals::{verify_l1_subgradient, ProxFunctional, SubgradientCheck};
use crate::io::{write_json, write_series_csv};
use crate::operators::{vandermonde, DenseMap, LinearMap};
use crate::solvers::{range_data, solve_sc_gd, Momentum, ReportSummary, SolveConfig, SolveReport, Termination};
use crate::varreg::{error_estimate, ErrorEstimate};

/// One non-zero coefficient of the true polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub power: usize,
    pub coeff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Lasso1DConfig {
    pub coeffs_true: Vec<Term>,
    /// Degree of the fitted polynomial model (`degree + 1` unknowns).
    pub degree: usize,
    pub n_samples: usize,
    pub noise_std: f64,
    pub sample_interval: [f64; 2],
    pub seed: u64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub record_every: usize,
    pub momentum: Momentum,
    /// Tolerance for the a-posteriori subgradient check.
    pub verify_tol: f64,
}

impl Default for Lasso1DConfig {
    fn default() -> Self {
        Self::degree5()
    }
}

impl Lasso1DConfig {
    /// `5u^2 - 3u^5 - 1`.
    pub fn degree5() -> Self {
        Lasso1DConfig {
            coeffs_true: vec![
                Term { power: 0, coeff: -1.0 },
                Term { power: 2, coeff: 5.0 },
                Term { power: 5, coeff: -3.0 },
            ],
            degree: 75,
            n_samples: 50,
            noise_std: 0.1,
            sample_interval: [0.0, 1.0],
            seed: 0,
            max_iters: 100_000,
            grad_tol: 1e-12,
            record_every: 100,
            momentum: Momentum::AdaptiveRestart,
            verify_tol: 1e-6,
        }
    }

    /// `5u^2 - 3u^5 - 1.5u^13 + 0.5u^20 - 1`.
    pub fn degree20() -> Self {
        let mut cfg = Self::degree5();
        cfg.coeffs_true.push(Term { power: 13, coeff: -1.5 });
        cfg.coeffs_true.push(Term { power: 20, coeff: 0.5 });
        cfg.grad_tol = 1e-6;
        cfg.max_iters = 10_000_000;
        cfg.record_every = 10_000;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.coeffs_true.iter().find(|t| t.power > self.degree) {
            return Err(Error::Config(format!(
                "coefficient of u^{} exceeds model degree {}",
                t.power, self.degree
            )));
        }
        if self.n_samples < 1 {
            return Err(Error::Config("n_samples must be at least 1".into()));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config("noise_std must be non-negative".into()));
        }
        let [lo, hi] = self.sample_interval;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("bad sample interval [{lo}, {hi}]")));
        }
        if self.coeffs_true.iter().any(|t| !t.coeff.is_finite()) {
            return Err(Error::Config("coefficients must be finite".into()));
        }
        Ok(())
    }

    /// Dense `w†` with `degree + 1` entries.
    pub fn weights(&self) -> Array1<f64> {
        let mut w = Array1::zeros(self.degree + 1);
        for t in &self.coeffs_true {
            w[t.power] += t.coeff;
        }
        w
    }

    /// `N` equispaced points including both ends of the interval.
    pub fn samples(&self) -> Vec<f64> {
        let [lo, hi] = self.sample_interval;
        let n = self.n_samples;
        if n == 1 {
            return vec![lo];
        }
        (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct LassoData {
    pub samples: Vec<f64>,
    pub phi: DenseMap,
    pub f_clean: Array1<f64>,
    pub f_noisy: Array1<f64>,
    /// `||f - f^delta||` of this noise realisation.
    pub delta: f64,
}

pub fn make_lasso_data(cfg: &Lasso1DConfig) -> Result<LassoData> {
    cfg.validate()?;
    let samples = cfg.samples();
    let phi = vandermonde(&samples, cfg.degree)?;
    let f_clean = phi.apply(cfg.weights().view());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let f_noisy = if cfg.noise_std > 0.0 {
        let normal = Normal::new(0.0, cfg.noise_std).map_err(|e| Error::Config(e.to_string()))?;
        f_clean.mapv(|f| f + normal.sample(&mut rng))
    } else {
        f_clean.clone()
    };
    let delta = l2_norm(&(&f_clean - &f_noisy));
    Ok(LassoData {
        samples,
        phi,
        f_clean,
        f_noisy,
        delta,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LassoSummary {
    pub solver: ReportSummary,
    /// True when the iteration cap was hit before the tolerance: `v` is then
    /// only an approximate source condition element.
    pub approximate: bool,
    pub phi_norm: f64,
    pub tau: f64,
    pub noise_std: f64,
    pub delta: f64,
    pub error_estimate: Option<ErrorEstimate>,
    pub alpha: f64,
    pub verification: SubgradientCheck,
    pub sample_interval: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct LassoReport {
    pub config: Lasso1DConfig,
    pub data: LassoData,
    pub solve: SolveReport,
    pub phi_t_v: Array1<f64>,
    pub g_alpha: Array1<f64>,
    pub summary: LassoSummary,
    pub timings: Vec<(String, f64)>,
}

/// Data synthesis, source element by accelerated descent with `tau = 1/||Phi||^2`,
/// verification, error estimate and range data at `alpha = delta/||v||`.
pub fn run_lasso_experiment(cfg: &Lasso1DConfig) -> Result<LassoReport> {
    let t0 = Instant::now();
    let data = make_lasso_data(cfg)?;
    let phi_norm = data.phi.norm_bound();
    if phi_norm == 0.0 {
        return Err(Error::Degenerate("design matrix is zero".into()));
    }
    let tau = 1.0 / (phi_norm * phi_norm);
    let solver_cfg = SolveConfig {
        max_iters: cfg.max_iters,
        grad_tol: cfg.grad_tol,
        tau,
        seed: cfg.seed,
        record_every: cfg.record_every,
        momentum: cfg.momentum,
        ..SolveConfig::default()
    };
    let w = cfg.weights();
    let t_data = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let prox = ProxFunctional::l1(1.0);
    let solve = solve_sc_gd(w.view(), &data.phi, &prox, &solver_cfg)?;
    let t_solve = t1.elapsed().as_secs_f64();

    let phi_t_v = data.phi.adjoint(solve.v.view());
    let verification = verify_l1_subgradient(phi_t_v.view(), w.view(), cfg.verify_tol);
    let estimate = match error_estimate(solve.v.view(), data.delta) {
        Ok(e) => Some(e),
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e),
    };
    let alpha = estimate.map_or(0.0, |e| e.alpha_star);
    let g_alpha = range_data(w.view(), &data.phi, solve.v.view(), alpha)?;

    let summary = LassoSummary {
        solver: solve.summary(),
        approximate: solve.termination == Termination::MaxIters,
        phi_norm,
        tau,
        noise_std: cfg.noise_std,
        delta: data.delta,
        error_estimate: estimate,
        alpha,
        verification,
        sample_interval: cfg.sample_interval,
    };
    Ok(LassoReport {
        config: cfg.clone(),
        data,
        solve,
        phi_t_v,
        g_alpha,
        summary,
        timings: vec![("data".into(), t_data), ("solve".into(), t_solve)],
    })
}

impl LassoReport {
    /// `series.csv` (per sample), `coefficients.csv` (per power), `history.csv`
    /// and `summary.json`. Returns the file names.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let w = self.config.weights();
        let powers: Vec<f64> = (0..w.len()).map(|p| p as f64).collect();
        let sign: Vec<f64> = w.iter().map(|&x| if x == 0.0 { 0.0 } else { x.signum() }).collect();
        write_series_csv(
            &dir.join("series.csv"),
            &[
                ("sample", &self.data.samples),
                ("f", self.data.f_clean.as_slice().expect("owned")),
                ("f_delta", self.data.f_noisy.as_slice().expect("owned")),
                ("g_alpha", self.g_alpha.as_slice().expect("owned")),
                ("v", self.solve.v.as_slice().expect("owned")),
            ],
        )?;
        write_series_csv(
            &dir.join("coefficients.csv"),
            &[
                ("power", &powers),
                ("w_true", w.as_slice().expect("owned")),
                ("phi_t_v", self.phi_t_v.as_slice().expect("owned")),
                ("sign_w_true", &sign),
            ],
        )?;
        let (it, res): (Vec<f64>, Vec<f64>) =
            self.solve.history.iter().map(|&(k, r)| (k as f64, r)).unzip();
        write_series_csv(&dir.join("history.csv"), &[("iteration", &it), ("grad_norm", &res)])?;
        write_json(&dir.join("summary.json"), &self.summary)?;
        Ok(["series.csv", "coefficients.csv", "history.csv", "summary.json"]
            .iter()
            .map(PathBuf::from)
            .collect())
    }
}
