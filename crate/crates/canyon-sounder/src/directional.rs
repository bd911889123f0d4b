//! Reductions over the per-pointing PDP ensemble: strongest-beam selection,
//! omni-directional PDP reconstruction, double-directional angular power
//! spectra and circular (Fleury) angular spreads.
//!
//! The omni reconstruction follows the two-stage rule: per delay bin, sum the
//! elevation cuts of every azimuth pair, then keep the strongest azimuth pair
//! for that bin. The angular spread of an azimuth power spectrum `APS(phi)`
//! is `sqrt( sum |e^{j phi} - mu|^2 APS / sum APS )` with
//! `mu = sum e^{j phi} APS / sum APS`; it is dimensionless, scale- and
//! rotation-invariant, and bounded by sqrt(2).
//!
//! ```
//! use canyon_sounder::directional::{angular_spread, circular_mean, Aps, End};
//!
//! // Equal power toward 0 and 90 degrees.
//! let aps = Aps {
//!     end: End::Rx,
//!     az_deg: vec![0.0, 90.0],
//!     power_lin: vec![1.0, 1.0],
//! };
//! let mu = circular_mean(&aps).unwrap();
//! assert!((mu.re - 0.5).abs() < 1e-12 && (mu.im - 0.5).abs() < 1e-12);
//! let spread = angular_spread(&aps).unwrap();
//! assert!((spread - 0.5f64.sqrt()).abs() < 1e-12);
//! ```

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bundle::AngleGrid;
use crate::error::{Error, Result};
use crate::pdp::{pdp_from_sweep, plan_inverse, threshold_gate, CalibratedTensor, Pdp, PdpOptions};

/// One Tx/Rx beam-pair orientation, by grid indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pointing {
    pub el_tx: usize,
    pub az_tx: usize,
    pub el_rx: usize,
    pub az_rx: usize,
}

/// Gated PDPs for every pointing of a grid, all produced with identical
/// options. Index order is `[el_tx][az_tx][el_rx][az_rx]`.
#[derive(Debug, Clone)]
pub struct PdpSet {
    pub grid: AngleGrid,
    pub opts: PdpOptions,
    pdps: Vec<Pdp>,
}

impl PdpSet {
    /// Compute the gated per-pointing PDP ensemble from a calibrated tensor.
    /// Pointings are processed in parallel; the result is index-ordered and
    /// independent of scheduling.
    pub fn build(calibrated: &CalibratedTensor, opts: &PdpOptions) -> Result<PdpSet> {
        opts.validate()?;
        let grid = calibrated.grid.clone();
        let n = grid.n_el_tx() * grid.n_az_tx() * grid.n_el_rx() * grid.n_az_rx();
        let fft = plan_inverse(calibrated.freq.n_points * opts.oversample_factor);
        let dims = [grid.n_el_tx(), grid.n_az_tx(), grid.n_el_rx(), grid.n_az_rx()];
        let pdps: Vec<Pdp> = (0..n)
            .into_par_iter()
            .map(|lin| {
                let p = pointing_from_linear(lin, dims);
                let sweep = calibrated.sweep(p).expect("in-range pointing");
                let pdp = pdp_from_sweep(sweep, &calibrated.freq, opts, &fft);
                threshold_gate(&pdp, opts)
            })
            .collect();
        Ok(PdpSet { grid, opts: *opts, pdps })
    }

    /// Assemble a set from pre-computed PDPs (index order
    /// `[el_tx][az_tx][el_rx][az_rx]`); lengths must cover the grid.
    pub fn from_pdps(grid: AngleGrid, opts: PdpOptions, pdps: Vec<Pdp>) -> Result<PdpSet> {
        let n = grid.n_el_tx() * grid.n_az_tx() * grid.n_el_rx() * grid.n_az_rx();
        if pdps.len() != n {
            return Err(Error::InvalidOptions(format!(
                "pdp set covers {} pointings, grid needs {n}",
                pdps.len()
            )));
        }
        if let Some(first) = pdps.first() {
            if pdps
                .iter()
                .any(|p| p.n_bins() != first.n_bins() || p.delay_step_s != first.delay_step_s)
            {
                return Err(Error::InvalidOptions(
                    "pdp set has a non-uniform delay axis".into(),
                ));
            }
        }
        Ok(PdpSet { grid, opts, pdps })
    }

    fn dims(&self) -> [usize; 4] {
        [
            self.grid.n_el_tx(),
            self.grid.n_az_tx(),
            self.grid.n_el_rx(),
            self.grid.n_az_rx(),
        ]
    }

    #[inline]
    fn index(&self, p: Pointing) -> usize {
        let [_, a_t, e_r, a_r] = self.dims();
        ((p.el_tx * a_t + p.az_tx) * e_r + p.el_rx) * a_r + p.az_rx
    }

    pub fn get(&self, p: Pointing) -> &Pdp {
        &self.pdps[self.index(p)]
    }

    pub fn n_pointings(&self) -> usize {
        self.pdps.len()
    }

    pub fn n_bins(&self) -> usize {
        self.pdps.first().map(|p| p.n_bins()).unwrap_or(0)
    }

    pub fn delay_step_s(&self) -> f64 {
        self.pdps.first().map(|p| p.delay_step_s).unwrap_or(0.0)
    }

    /// Pointings in linear index order (lexicographic el_tx, az_tx, el_rx, az_rx).
    pub fn pointings(&self) -> impl Iterator<Item = Pointing> + '_ {
        let dims = self.dims();
        (0..self.pdps.len()).map(move |lin| pointing_from_linear(lin, dims))
    }
}

fn pointing_from_linear(lin: usize, dims: [usize; 4]) -> Pointing {
    let [_, a_t, e_r, a_r] = dims;
    let az_rx = lin % a_r;
    let rest = lin / a_r;
    let el_rx = rest % e_r;
    let rest = rest / e_r;
    let az_tx = rest % a_t;
    let el_tx = rest / a_t;
    Pointing {
        el_tx,
        az_tx,
        el_rx,
        az_rx,
    }
}

// ---------------------------------------------------------------------------
// Max-dir and omni
// ---------------------------------------------------------------------------

/// Beam pair with the highest total gated power. Ties break toward the
/// lowest linear index (lexicographic el_tx, az_tx, el_rx, az_rx).
pub fn select_max_dir(set: &PdpSet) -> Result<(Pointing, &Pdp)> {
    let mut best: Option<(usize, f64)> = None;
    for (lin, pdp) in set.pdps.iter().enumerate() {
        let total = pdp.total_power();
        match best {
            Some((_, t)) if total <= t => {}
            _ => best = Some((lin, total)),
        }
    }
    let (lin, total) = best.ok_or(Error::NoSignal)?;
    if total == 0.0 {
        return Err(Error::NoSignal);
    }
    Ok((pointing_from_linear(lin, set.dims()), &set.pdps[lin]))
}

/// Which azimuth pair the omni reconstruction keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum AzimuthSelection {
    /// Strongest azimuth pair per delay bin (default).
    PerDelayBin,
    /// Single azimuth pair with the largest elevation-summed total power,
    /// kept for the whole PDP. Exposed for comparison.
    WholePdp,
}

/// Omni-directional PDP: per delay bin, sum the elevation cuts of each
/// azimuth pair, then keep the strongest azimuth pair for that bin.
pub fn synth_omni(set: &PdpSet) -> Pdp {
    synth_omni_with(set, AzimuthSelection::PerDelayBin)
}

/// Omni reconstruction with an explicit azimuth-selection rule.
pub fn synth_omni_with(set: &PdpSet, selection: AzimuthSelection) -> Pdp {
    let [e_t, a_t, e_r, a_r] = set.dims();
    let n_bins = set.n_bins();
    // elevation-summed power per azimuth pair
    let mut sums = vec![vec![0.0f64; n_bins]; a_t * a_r];
    for i_at in 0..a_t {
        for i_ar in 0..a_r {
            let acc = &mut sums[i_at * a_r + i_ar];
            for i_et in 0..e_t {
                for i_er in 0..e_r {
                    let pdp = set.get(Pointing {
                        el_tx: i_et,
                        az_tx: i_at,
                        el_rx: i_er,
                        az_rx: i_ar,
                    });
                    for (a, p) in acc.iter_mut().zip(pdp.power_lin.iter()) {
                        *a += p;
                    }
                }
            }
        }
    }
    let power = match selection {
        AzimuthSelection::PerDelayBin => (0..n_bins)
            .map(|bin| {
                sums.iter()
                    .map(|s| s[bin])
                    .fold(0.0f64, f64::max)
            })
            .collect(),
        AzimuthSelection::WholePdp => {
            let best = sums
                .iter()
                .enumerate()
                .max_by(|a, b| {
                    let ta: f64 = a.1.iter().sum();
                    let tb: f64 = b.1.iter().sum();
                    ta.partial_cmp(&tb).unwrap()
                })
                .map(|(i, _)| i)
                .unwrap_or(0);
            sums.swap_remove(best)
        }
    };
    Pdp {
        delay_step_s: set.delay_step_s(),
        power_lin: power,
        noise_floor_db: None,
        threshold_db: None,
        gated: true,
    }
}

// ---------------------------------------------------------------------------
// Angular power spectra
// ---------------------------------------------------------------------------

/// Double-directional angular power spectrum over azimuth pairs, elevations
/// already collapsed by summation.
#[derive(Debug, Clone)]
pub struct Ddaps {
    pub tx_az_deg: Vec<f64>,
    pub rx_az_deg: Vec<f64>,
    /// Row-major `[tx_az][rx_az]`.
    pub power_lin: Vec<f64>,
}

impl Ddaps {
    #[inline]
    pub fn at(&self, i_tx: usize, i_rx: usize) -> f64 {
        self.power_lin[i_tx * self.rx_az_deg.len() + i_rx]
    }

    pub fn total_power(&self) -> f64 {
        self.power_lin.iter().sum()
    }
}

/// Link end selector for marginal spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Tx,
    Rx,
}

/// Azimuth power spectrum at one link end.
#[derive(Debug, Clone)]
pub struct Aps {
    pub end: End,
    pub az_deg: Vec<f64>,
    pub power_lin: Vec<f64>,
}

impl Aps {
    pub fn total_power(&self) -> f64 {
        self.power_lin.iter().sum()
    }
}

/// Delay-integrate every gated PDP and collapse elevations:
/// `DDAPS(az_tx, az_rx) = sum_el_pairs sum_tau P`.
pub fn compute_ddaps(set: &PdpSet) -> Ddaps {
    let [e_t, a_t, e_r, a_r] = set.dims();
    let mut power = vec![0.0f64; a_t * a_r];
    for i_at in 0..a_t {
        for i_ar in 0..a_r {
            let mut acc = 0.0;
            for i_et in 0..e_t {
                for i_er in 0..e_r {
                    acc += set
                        .get(Pointing {
                            el_tx: i_et,
                            az_tx: i_at,
                            el_rx: i_er,
                            az_rx: i_ar,
                        })
                        .total_power();
                }
            }
            power[i_at * a_r + i_ar] = acc;
        }
    }
    Ddaps {
        tx_az_deg: set.grid.tx_az_deg.clone(),
        rx_az_deg: set.grid.rx_az_deg.clone(),
        power_lin: power,
    }
}

/// Marginalize the DDAPS onto one end: Tx APS integrates over Rx azimuth
/// (row sums), Rx APS over Tx azimuth (column sums).
pub fn marginal_aps(ddaps: &Ddaps, end: End) -> Aps {
    let n_tx = ddaps.tx_az_deg.len();
    let n_rx = ddaps.rx_az_deg.len();
    match end {
        End::Tx => {
            let power = (0..n_tx)
                .map(|i| (0..n_rx).map(|j| ddaps.at(i, j)).sum())
                .collect();
            Aps {
                end,
                az_deg: ddaps.tx_az_deg.clone(),
                power_lin: power,
            }
        }
        End::Rx => {
            let power = (0..n_rx)
                .map(|j| (0..n_tx).map(|i| ddaps.at(i, j)).sum())
                .collect();
            Aps {
                end,
                az_deg: ddaps.rx_az_deg.clone(),
                power_lin: power,
            }
        }
    }
}

/// Power-weighted mean direction `mu = sum e^{j phi} APS(phi) / sum APS(phi)`
/// with angles in radians.
pub fn circular_mean(aps: &Aps) -> Result<Complex64> {
    let total = aps.total_power();
    if !(total > 0.0) {
        return Err(Error::ZeroPowerAps);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (az, p) in aps.az_deg.iter().zip(aps.power_lin.iter()) {
        acc += Complex64::from_polar(*p, az.to_radians());
    }
    Ok(acc / total)
}

/// Fleury angular spread `sqrt( sum |e^{j phi} - mu|^2 APS / sum APS )`,
/// dimensionless in `[0, sqrt(2)]`.
pub fn angular_spread(aps: &Aps) -> Result<f64> {
    let mu = circular_mean(aps)?;
    let total = aps.total_power();
    let mut acc = 0.0;
    for (az, p) in aps.az_deg.iter().zip(aps.power_lin.iter()) {
        let e = Complex64::from_polar(1.0, az.to_radians());
        acc += (e - mu).norm_sqr() * p;
    }
    Ok((acc / total).sqrt())
}
