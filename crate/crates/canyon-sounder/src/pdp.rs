//! Calibration and delay-domain processing: OTA division, windowed and
//! oversampled IDFT to power delay profiles, noise-floor estimation,
//! thresholding and delay gating.
//!
//! A directional PDP is `P(tau_k) = |IDFT{ w(f) * H(f) }|^2` on a grid of
//! `n_freq * osf` delay bins. The window is coherently normalized (divided by
//! its mean) and the IDFT carries a `1/n_freq` factor, so a flat unit
//! spectrum through the rectangular window produces a single bin of power 1.0
//! at zero delay; powers are additionally scaled by `1/osf` so that total
//! power is oversampling-invariant for band-limited content.
//!
//! ```
//! use canyon_sounder::pdp::{Pdp, PdpOptions, estimate_noise_floor, threshold_gate};
//!
//! // A delta at 100 ns plus a flat noise shelf beyond the delay gate
//! // (the first bin past 933.33 ns is bin 934 on this 1 ns grid).
//! let step = 1.0e-9;
//! let mut power = vec![0.0; 1000];
//! power[100] = 1.0;
//! for i in 934..1000 {
//!     power[i] = 1.0e-12;
//! }
//! let pdp = Pdp::new(step, power);
//!
//! let opts = PdpOptions::path_loss_profile();
//! let floor = estimate_noise_floor(&pdp, &opts).unwrap();
//! assert!((floor - (-120.0)).abs() < 1e-9); // mean of the post-gate bins
//!
//! let gated = threshold_gate(&pdp, &opts);
//! assert!(gated.gated);
//! assert_eq!(gated.power_lin[100], 1.0); // signal kept
//! assert_eq!(gated.power_lin[950], 0.0); // shelf removed (beyond gate)
//! ```

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::bundle::{AngleGrid, FrequencyAxis, MeasurementBundle};
use crate::directional::Pointing;
use crate::error::{Error, Result};

/// Spectral window applied before the IDFT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Window {
    Rectangular,
    Hann,
}

impl Window {
    /// Window coefficients of length `n` (symmetric form for Hann).
    pub fn coefficients(&self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => {
                if n == 1 {
                    return vec![1.0];
                }
                (0..n)
                    .map(|i| {
                        0.5 * (1.0
                            - (2.0 * std::f64::consts::PI * i as f64 / (n as f64 - 1.0)).cos())
                    })
                    .collect()
            }
        }
    }
}

/// Delay-gate default: 933.33 ns (280 m excess runlength).
pub const DEFAULT_TAU_GATE_S: f64 = 933.33e-9;
/// Threshold default: 6 dB above the estimated noise floor.
pub const DEFAULT_NOISE_MARGIN_DB: f64 = 6.0;

/// Processing options for one PDP profile.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PdpOptions {
    pub window: Window,
    pub oversample_factor: usize,
    pub tau_gate_s: f64,
    pub noise_margin_db: f64,
}

impl PdpOptions {
    /// Path-loss profile: rectangular window, no oversampling.
    pub fn path_loss_profile() -> Self {
        PdpOptions {
            window: Window::Rectangular,
            oversample_factor: 1,
            tau_gate_s: DEFAULT_TAU_GATE_S,
            noise_margin_db: DEFAULT_NOISE_MARGIN_DB,
        }
    }

    /// Delay-spread / kappa1 profile: Hann window, 8x oversampling.
    pub fn delay_spread_profile() -> Self {
        PdpOptions {
            window: Window::Hann,
            oversample_factor: 8,
            tau_gate_s: DEFAULT_TAU_GATE_S,
            noise_margin_db: DEFAULT_NOISE_MARGIN_DB,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if ![1, 2, 4, 8, 16].contains(&self.oversample_factor) {
            return Err(Error::InvalidOptions(format!(
                "oversample_factor must be one of 1,2,4,8,16, got {}",
                self.oversample_factor
            )));
        }
        if !(self.tau_gate_s > 0.0) {
            return Err(Error::InvalidOptions(format!(
                "tau_gate_s must be > 0, got {}",
                self.tau_gate_s
            )));
        }
        Ok(())
    }
}

/// Power delay profile on a uniform delay grid.
///
/// `power_lin` is dimensionless channel-gain power per bin. After gating,
/// every bin beyond the delay gate is exactly zero and every retained
/// nonzero bin is at or above the recorded threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Pdp {
    /// Uniform bin spacing, `tau_max / (n_freq * osf)` for IDFT-derived PDPs.
    pub delay_step_s: f64,
    pub power_lin: Vec<f64>,
    pub noise_floor_db: Option<f64>,
    pub threshold_db: Option<f64>,
    pub gated: bool,
}

impl Pdp {
    /// Ungated PDP from raw bin powers.
    pub fn new(delay_step_s: f64, power_lin: Vec<f64>) -> Self {
        Pdp {
            delay_step_s,
            power_lin,
            noise_floor_db: None,
            threshold_db: None,
            gated: false,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.power_lin.len()
    }

    #[inline]
    pub fn delay_at(&self, bin: usize) -> f64 {
        bin as f64 * self.delay_step_s
    }

    /// Materialized delay axis (bin spacing times index).
    pub fn delay_axis_s(&self) -> Vec<f64> {
        (0..self.n_bins()).map(|i| self.delay_at(i)).collect()
    }

    pub fn total_power(&self) -> f64 {
        self.power_lin.iter().sum()
    }

    pub fn is_all_zero(&self) -> bool {
        self.power_lin.iter().all(|&p| p == 0.0)
    }
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

/// OTA-calibrated transfer-function tensor, promoted to f64.
#[derive(Debug, Clone)]
pub struct CalibratedTensor {
    pub grid: AngleGrid,
    pub freq: FrequencyAxis,
    /// Same `[el_tx][az_tx][el_rx][az_rx][freq]` layout as the bundle tensor.
    pub data: Vec<Complex64>,
    dims: [usize; 5],
}

impl CalibratedTensor {
    pub fn dims(&self) -> [usize; 5] {
        self.dims
    }

    pub fn n_pointings(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2] * self.dims[3]
    }

    fn check_pointing(&self, p: Pointing) -> Result<()> {
        let [e_t, a_t, e_r, a_r, _] = self.dims;
        if p.el_tx >= e_t || p.az_tx >= a_t || p.el_rx >= e_r || p.az_rx >= a_r {
            return Err(Error::PointingOutOfRange(format!(
                "({}, {}, {}, {}) for dims ({e_t}, {a_t}, {e_r}, {a_r})",
                p.el_tx, p.az_tx, p.el_rx, p.az_rx
            )));
        }
        Ok(())
    }

    /// Calibrated frequency sweep for one pointing.
    pub fn sweep(&self, p: Pointing) -> Result<&[Complex64]> {
        self.check_pointing(p)?;
        let [_, a_t, e_r, a_r, f] = self.dims;
        let start = (((p.el_tx * a_t + p.az_tx) * e_r + p.el_rx) * a_r + p.az_rx) * f;
        Ok(&self.data[start..start + f])
    }
}

/// Divide the measured tensor by the OTA reference, removing the system and
/// antenna response: `H(f, .) = H_meas(f, .) / H_OTA(f)`.
pub fn apply_ota(bundle: &MeasurementBundle) -> Result<CalibratedTensor> {
    let n_freq = bundle.freq.n_points;
    if bundle.ota.len() != n_freq {
        return Err(Error::InvalidOta(format!(
            "length {} does not match n_freq {}",
            bundle.ota.len(),
            n_freq
        )));
    }
    let mut inv = Vec::with_capacity(n_freq);
    for (k, v) in bundle.ota.iter().enumerate() {
        if v.re == 0.0 && v.im == 0.0 {
            return Err(Error::InvalidOta(format!("zero entry at index {k}")));
        }
        inv.push(Complex64::new(1.0, 0.0) / Complex64::new(v.re as f64, v.im as f64));
    }
    let mut data = Vec::with_capacity(bundle.h_meas.len());
    for (i, v) in bundle.h_meas.data.iter().enumerate() {
        data.push(Complex64::new(v.re as f64, v.im as f64) * inv[i % n_freq]);
    }
    Ok(CalibratedTensor {
        grid: bundle.grid.clone(),
        freq: bundle.freq,
        data,
        dims: bundle.h_meas.dims,
    })
}

// ---------------------------------------------------------------------------
// PDP construction
// ---------------------------------------------------------------------------

/// Compute a PDP from a raw frequency sweep. The shared `fft` plan must be an
/// inverse plan of length `sweep.len() * opts.oversample_factor`.
pub(crate) fn pdp_from_sweep(
    sweep: &[Complex64],
    freq: &FrequencyAxis,
    opts: &PdpOptions,
    fft: &Arc<dyn Fft<f64>>,
) -> Pdp {
    let n = sweep.len();
    let osf = opts.oversample_factor;
    let m = n * osf;
    debug_assert_eq!(fft.len(), m);

    let w = opts.window.coefficients(n);
    let w_mean = w.iter().sum::<f64>() / n as f64;

    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for ((dst, src), wk) in buf.iter_mut().zip(sweep).zip(&w) {
        *dst = src * (wk / w_mean);
    }
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(&mut buf, &mut scratch);

    // amplitude 1/n IDFT convention, power scaled by 1/osf
    let scale = 1.0 / (n as f64 * n as f64 * osf as f64);
    let power: Vec<f64> = buf.iter().map(|v| v.norm_sqr() * scale).collect();
    Pdp::new(freq.tau_max_s() / m as f64, power)
}

pub(crate) fn plan_inverse(len: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_inverse(len)
}

/// Directional PDP for a single pointing (ungated).
pub fn directional_pdp(
    calibrated: &CalibratedTensor,
    pointing: Pointing,
    opts: &PdpOptions,
) -> Result<Pdp> {
    opts.validate()?;
    let sweep = calibrated.sweep(pointing)?;
    let fft = plan_inverse(sweep.len() * opts.oversample_factor);
    Ok(pdp_from_sweep(sweep, &calibrated.freq, opts, &fft))
}

// ---------------------------------------------------------------------------
// Noise floor and gating
// ---------------------------------------------------------------------------

fn noise_window_bins(pdp: &Pdp, tau_gate_s: f64) -> Vec<usize> {
    let n = pdp.n_bins();
    let mut idx: Vec<usize> = (0..n).filter(|&i| pdp.delay_at(i) > tau_gate_s).collect();
    if idx.is_empty() {
        // gate covers the whole axis: fall back to the top delay decile
        let k = n.div_ceil(10);
        idx = (n - k..n).collect();
    }
    idx
}

fn noise_floor_db_of(pdp: &Pdp, opts: &PdpOptions) -> f64 {
    let idx = noise_window_bins(pdp, opts.tau_gate_s);
    let mean = idx.iter().map(|&i| pdp.power_lin[i]).sum::<f64>() / idx.len() as f64;
    10.0 * mean.log10()
}

/// Average noise power (in dB) over the post-gate delay region
/// `(tau_gate, tau_max]`, or the top delay decile when the gate covers the
/// whole axis.
pub fn estimate_noise_floor(pdp: &Pdp, opts: &PdpOptions) -> Result<f64> {
    if pdp.is_all_zero() {
        return Err(Error::AllZeroPdp);
    }
    Ok(noise_floor_db_of(pdp, opts))
}

/// Zero every bin beyond the delay gate or below the noise threshold
/// `P_lambda = noise_floor + margin`; the comparison is inclusive (a bin
/// exactly at the threshold is retained). Idempotent: the estimated floor is
/// recorded on the output and reused on re-application.
pub fn threshold_gate(pdp: &Pdp, opts: &PdpOptions) -> Pdp {
    let mut out = pdp.clone();
    out.gated = true;
    if pdp.is_all_zero() {
        out.noise_floor_db = pdp.noise_floor_db.or(Some(f64::NEG_INFINITY));
        out.threshold_db = pdp.threshold_db.or(Some(f64::NEG_INFINITY));
        return out;
    }
    let floor_db = pdp
        .noise_floor_db
        .unwrap_or_else(|| noise_floor_db_of(pdp, opts));
    let threshold_db = floor_db + opts.noise_margin_db;
    let threshold_lin = 10f64.powf(threshold_db / 10.0);
    for i in 0..out.power_lin.len() {
        if out.delay_at(i) > opts.tau_gate_s || out.power_lin[i] < threshold_lin {
            out.power_lin[i] = 0.0;
        }
    }
    out.noise_floor_db = Some(floor_db);
    out.threshold_db = Some(threshold_db);
    out
}
