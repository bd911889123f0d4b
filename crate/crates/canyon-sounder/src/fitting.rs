//! Distance-dependence regression (ordinary and log-distance-binned weighted
//! least squares) and normal/lognormal distribution fits, all with 95%
//! confidence intervals.
//!
//! Regressions operate on `(log10 d, y)` pairs. With the `X10` slope scale
//! the fitted line is `y = alpha + 10 beta log10(d)` (the path-loss
//! convention where `beta` is the path-loss exponent); with `X1` it is
//! `y = alpha + beta log10(d)`. Confidence intervals use Student-t quantiles
//! for coefficients and means, and chi-square quantiles for standard
//! deviations.
//!
//! ```
//! use canyon_sounder::fitting::{ols_fit, Sample2D, SlopeScale};
//!
//! // Points exactly on y = 70 + 20 log10(d): path-loss exponent beta = 2.
//! let samples: Vec<Sample2D> = [10.0, 50.0, 100.0f64]
//!     .iter()
//!     .map(|&d| Sample2D::new(d, 70.0 + 20.0 * d.log10()))
//!     .collect();
//! let fit = ols_fit(&samples, SlopeScale::X10).unwrap();
//! assert!((fit.alpha - 70.0).abs() < 1e-9);
//! assert!((fit.beta - 2.0).abs() < 1e-12);
//! assert!(fit.sigma_resid < 1e-9);
//! ```

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// One regression observation: direct distance and a model-unit value
/// (dB for path loss / delay spread / kappa1, log10 for angular spread).
#[derive(Debug, Clone)]
pub struct Sample2D {
    pub d_m: f64,
    pub y: f64,
    pub location_id: String,
}

impl Sample2D {
    pub fn new(d_m: f64, y: f64) -> Self {
        Sample2D {
            d_m,
            y,
            location_id: String::new(),
        }
    }
}

/// Slope convention of the fitted line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlopeScale {
    /// `y = alpha + 10 beta log10(d)` (path-loss exponent convention).
    X10,
    /// `y = alpha + beta log10(d)`.
    X1,
}

impl SlopeScale {
    fn factor(&self) -> f64 {
        match self {
            SlopeScale::X10 => 10.0,
            SlopeScale::X1 => 1.0,
        }
    }
}

/// Regression method tag carried on fit results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMethod {
    Ols,
    Weighted(usize),
}

/// Fitted line with 95% confidence intervals on both coefficients.
#[derive(Debug, Clone)]
pub struct LinearFit {
    pub alpha: f64,
    pub beta: f64,
    pub slope_scale: SlopeScale,
    /// Standard deviation of the (weighted) residuals, n-2 denominator.
    pub sigma_resid: f64,
    pub alpha_ci95: (f64, f64),
    pub beta_ci95: (f64, f64),
    pub method: FitMethod,
}

impl LinearFit {
    /// Model mean at distance `d_m`.
    pub fn predict(&self, d_m: f64) -> f64 {
        self.alpha + self.slope_scale.factor() * self.beta * d_m.log10()
    }
}

/// Normal-fit summary with 95% confidence intervals.
#[derive(Debug, Clone)]
pub struct StatFit {
    pub mu: f64,
    pub sigma: f64,
    pub mu_ci95: (f64, f64),
    pub sigma_ci95: (f64, f64),
    pub n: usize,
}

fn t_quantile_975(dof: usize) -> f64 {
    if dof == 0 {
        return f64::INFINITY;
    }
    StudentsT::new(0.0, 1.0, dof as f64)
        .expect("valid t distribution")
        .inverse_cdf(0.975)
}

fn check_design(samples: &[Sample2D]) -> Result<Vec<f64>> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            what: "linear fit",
            got: samples.len(),
            need: 2,
        });
    }
    for s in samples {
        if !(s.d_m > 0.0) {
            return Err(Error::NonPositiveDistance(s.d_m));
        }
        if !s.y.is_finite() {
            return Err(Error::NonFinite("sample y".into()));
        }
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.d_m.log10()).collect();
    let distinct = xs
        .iter()
        .any(|&x| (x - xs[0]).abs() > 0.0);
    if !distinct {
        return Err(Error::DegenerateDesign(
            "all distances equal; slope is unidentifiable".into(),
        ));
    }
    Ok(xs)
}

/// Weighted least squares core on centered moments. Returns the raw slope
/// (before slope-scale division).
fn wls_core(
    xs: &[f64],
    ys: &[f64],
    ws: &[f64],
    scale: SlopeScale,
    method: FitMethod,
) -> LinearFit {
    let n = xs.len();
    let sw: f64 = ws.iter().sum();
    let xbar = xs.iter().zip(ws).map(|(x, w)| w * x).sum::<f64>() / sw;
    let ybar = ys.iter().zip(ws).map(|(y, w)| w * y).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        sxx += ws[i] * (xs[i] - xbar) * (xs[i] - xbar);
        sxy += ws[i] * (xs[i] - xbar) * (ys[i] - ybar);
    }
    let b = sxy / sxx;
    let a = ybar - b * xbar;

    let dof = n.saturating_sub(2);
    let sse: f64 = (0..n)
        .map(|i| {
            let e = ys[i] - (a + b * xs[i]);
            ws[i] * e * e
        })
        .sum();
    let sigma = if dof > 0 { (sse / dof as f64).sqrt() } else { 0.0 };
    let f = scale.factor();
    let (alpha_ci95, beta_ci95) = if dof == 0 {
        // an interpolating fit has no residual degrees of freedom
        let unbounded = (f64::NEG_INFINITY, f64::INFINITY);
        (unbounded, unbounded)
    } else {
        let t = t_quantile_975(dof);
        let se_b = sigma / sxx.sqrt();
        let se_a = sigma * (1.0 / sw + xbar * xbar / sxx).sqrt();
        (
            (a - t * se_a, a + t * se_a),
            ((b - t * se_b) / f, (b + t * se_b) / f),
        )
    };
    LinearFit {
        alpha: a,
        beta: b / f,
        slope_scale: scale,
        sigma_resid: sigma,
        alpha_ci95,
        beta_ci95,
        method,
    }
}

/// Ordinary least squares on `(log10 d, y)`.
pub fn ols_fit(samples: &[Sample2D], scale: SlopeScale) -> Result<LinearFit> {
    let xs = check_design(samples)?;
    let ys: Vec<f64> = samples.iter().map(|s| s.y).collect();
    let ws = vec![1.0; xs.len()];
    Ok(wls_core(&xs, &ys, &ws, scale, FitMethod::Ols))
}

/// Per-point weights equalizing the influence of `n_bins` equal intervals of
/// `log10 d` (right-closed last bin): weight proportional to the inverse of
/// the point's bin occupancy, normalized to sum to n.
pub fn log_distance_bin_weights(ds_m: &[f64], n_bins: usize) -> Result<Vec<f64>> {
    if n_bins == 0 {
        return Err(Error::InvalidOptions("n_bins must be >= 1".into()));
    }
    let xs: Vec<f64> = ds_m.iter().map(|d| d.log10()).collect();
    let xmin = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let xmax = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = xmax - xmin;
    let bin_of = |x: f64| -> usize {
        if span == 0.0 {
            return 0;
        }
        (((x - xmin) / span * n_bins as f64) as usize).min(n_bins - 1)
    };
    let mut counts = vec![0usize; n_bins];
    for &x in &xs {
        counts[bin_of(x)] += 1;
    }
    let nonempty = counts.iter().filter(|&&c| c > 0).count() as f64;
    let n = xs.len() as f64;
    Ok(xs
        .iter()
        .map(|&x| n / (nonempty * counts[bin_of(x)] as f64))
        .collect())
}

/// Weighted least squares with equal weight per occupied `log10 d` bin.
pub fn weighted_fit(samples: &[Sample2D], n_bins: usize, scale: SlopeScale) -> Result<LinearFit> {
    let xs = check_design(samples)?;
    let ys: Vec<f64> = samples.iter().map(|s| s.y).collect();
    let ds: Vec<f64> = samples.iter().map(|s| s.d_m).collect();
    let ws = log_distance_bin_weights(&ds, n_bins)?;
    Ok(wls_core(&xs, &ys, &ws, scale, FitMethod::Weighted(n_bins)))
}

/// Residuals `y_i - (alpha + scale * beta * log10 d_i)` of a fitted line.
pub fn shadowing_residuals(samples: &[Sample2D], fit: &LinearFit) -> Vec<f64> {
    samples.iter().map(|s| s.y - fit.predict(s.d_m)).collect()
}

/// Sample mean and standard deviation (n-1 denominator) with t / chi-square
/// 95% confidence intervals.
pub fn fit_normal(samples: &[f64]) -> Result<StatFit> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples {
            what: "normal fit",
            got: n,
            need: 2,
        });
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("normal-fit sample".into()));
    }
    let nf = n as f64;
    let mu = samples.iter().sum::<f64>() / nf;
    let var = samples.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (nf - 1.0);
    let sigma = var.sqrt();

    let t = t_quantile_975(n - 1);
    let half = t * sigma / nf.sqrt();

    let chi = ChiSquared::new(nf - 1.0).expect("valid chi-square");
    let hi_q = chi.inverse_cdf(0.975);
    let lo_q = chi.inverse_cdf(0.025);
    let sigma_ci = (
        sigma * ((nf - 1.0) / hi_q).sqrt(),
        sigma * ((nf - 1.0) / lo_q).sqrt(),
    );

    Ok(StatFit {
        mu,
        sigma,
        mu_ci95: (mu - half, mu + half),
        sigma_ci95: sigma_ci,
        n,
    })
}

/// Transform rule from linear units into the fitted log domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DbRule {
    /// `10 log10(x)` for power-like quantities (delay spread, kappa1).
    Power10,
    /// `20 log10(x)` for amplitude-like quantities.
    Amplitude20,
    /// Plain `log10(x)` for dimensionless spreads.
    Log10,
}

impl DbRule {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            DbRule::Power10 => 10.0 * x.log10(),
            DbRule::Amplitude20 => 20.0 * x.log10(),
            DbRule::Log10 => x.log10(),
        }
    }
}

/// Lognormal fit: transform positive linear samples per `rule`, then
/// [`fit_normal`]. Infinite samples (the kappa1 single-peak sentinel) are
/// excluded; the exclusion count is returned alongside the fit.
pub fn fit_lognormal_db(samples_linear: &[f64], rule: DbRule) -> Result<(StatFit, usize)> {
    let mut kept = Vec::with_capacity(samples_linear.len());
    let mut excluded = 0usize;
    for &v in samples_linear {
        if v == f64::INFINITY {
            excluded += 1;
            continue;
        }
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveSample {
                field: "lognormal sample",
                value: v,
            });
        }
        kept.push(rule.apply(v));
    }
    Ok((fit_normal(&kept)?, excluded))
}
