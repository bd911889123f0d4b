//! Per-location condensed channel parameters: path loss, RMS delay spread
//! and the strongest-peak power ratio kappa1, for the omni and max-dir views.
//!
//! Path loss integrates the gated PDP (`PL_dB = -10 log10 sum P`), the RMS
//! delay spread is the square root of the PDP's second central moment, and
//! kappa1 is the power of the strongest local maximum over the summed power
//! of all other local maxima (in dB; a single-peak PDP maps to the +inf
//! sentinel).
//!
//! ```
//! use canyon_sounder::pdp::Pdp;
//! use canyon_sounder::condensed::{kappa1, rmsds};
//!
//! // Two equal taps 20 ns apart spread by exactly half their separation.
//! let mut power = vec![0.0; 64];
//! power[10] = 0.5;
//! power[30] = 0.5;
//! let pdp = Pdp::new(1.0e-9, power);
//! assert!((rmsds(&pdp).unwrap() - 10.0e-9).abs() < 1e-21);
//!
//! // Peaks of 10 and 1 (linear) give a 10 dB ratio.
//! let mut power = vec![0.0; 16];
//! power[3] = 10.0;
//! power[9] = 1.0;
//! let pdp = Pdp::new(1.0e-9, power);
//! assert!((kappa1(&pdp).unwrap() - 10.0).abs() < 1e-12);
//! ```

use serde::{Deserialize, Serialize};

use crate::bundle::{validate_bundle, LosCondition, MeasurementBundle};
use crate::directional::{
    angular_spread, compute_ddaps, marginal_aps, select_max_dir, synth_omni_with,
    AzimuthSelection, Ddaps, End, PdpSet, Pointing,
};
use crate::error::{Error, Result};
use crate::pdp::{apply_ota, Pdp, PdpOptions};

/// Which PDP reduction a condensed parameter row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    Omni,
    MaxDir,
}

impl View {
    pub fn as_str(&self) -> &'static str {
        match self {
            View::Omni => "omni",
            View::MaxDir => "max_dir",
        }
    }
}

impl std::str::FromStr for View {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "omni" => Ok(View::Omni),
            "max_dir" | "maxdir" => Ok(View::MaxDir),
            other => Err(format!("unknown view {other:?} (expected omni|max_dir)")),
        }
    }
}

/// Condensed parameters of one location and view.
///
/// `kappa1_db` is `f64::INFINITY` when the PDP has a single local maximum;
/// serialized outputs carry an empty/null field for it.
#[derive(Debug, Clone)]
pub struct CondensedParams {
    pub location_id: String,
    pub distance_m: f64,
    pub los: LosCondition,
    pub view: View,
    pub pl_db: f64,
    pub rmsds_s: f64,
    pub as_tx: f64,
    pub as_rx: f64,
    pub kappa1_db: f64,
}

// ---------------------------------------------------------------------------
// Scalar reductions
// ---------------------------------------------------------------------------

/// Path loss of a gated PDP: `-10 log10( sum_tau P(tau) )`.
pub fn path_loss(pdp: &Pdp) -> Result<f64> {
    let total = pdp.total_power();
    if !(total > 0.0) {
        return Err(Error::ZeroPower);
    }
    Ok(-10.0 * total.log10())
}

/// RMS delay spread: square root of the PDP's second central moment.
pub fn rmsds(pdp: &Pdp) -> Result<f64> {
    let total = pdp.total_power();
    if !(total > 0.0) {
        return Err(Error::ZeroPower);
    }
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (i, &p) in pdp.power_lin.iter().enumerate() {
        if p > 0.0 {
            let tau = pdp.delay_at(i);
            m1 += p * tau;
            m2 += p * tau * tau;
        }
    }
    m1 /= total;
    m2 /= total;
    Ok((m2 - m1 * m1).max(0.0).sqrt())
}

/// Local maxima of the PDP: bins strictly greater than both neighbors, with
/// plateaus collapsed to their leftmost bin. Returned sorted by power
/// descending, ties by earlier delay. Endpoint bins are never maxima.
pub fn find_local_maxima(pdp: &Pdp) -> Vec<(usize, f64)> {
    let p = &pdp.power_lin;
    let n = p.len();
    let mut maxima = Vec::new();
    let mut start = 0usize;
    while start < n {
        let mut end = start;
        while end + 1 < n && p[end + 1] == p[start] {
            end += 1;
        }
        if start > 0 && end + 1 < n && p[start] > p[start - 1] && p[start] > p[end + 1] {
            maxima.push((start, p[start]));
        }
        start = end + 1;
    }
    maxima.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    maxima
}

/// Power ratio of the strongest local maximum to the summed power of all
/// other local maxima, in dB. A single local maximum yields the
/// `f64::INFINITY` sentinel; no maxima at all is an error.
pub fn kappa1(pdp: &Pdp) -> Result<f64> {
    let maxima = find_local_maxima(pdp);
    match maxima.split_first() {
        None => Err(Error::NoLocalMaxima),
        Some((_, [])) => Ok(f64::INFINITY),
        Some(((_, strongest), rest)) => {
            let others: f64 = rest.iter().map(|(_, p)| p).sum();
            Ok(10.0 * (strongest / others).log10())
        }
    }
}

// ---------------------------------------------------------------------------
// Per-location pipeline
// ---------------------------------------------------------------------------

/// Option profiles for the condensed-parameter pipeline: a rectangular
/// non-oversampled profile feeding path loss, and a windowed oversampled
/// profile feeding the delay-domain statistics.
#[derive(Debug, Clone)]
pub struct CondenseOptions {
    pub pl: PdpOptions,
    pub ds: PdpOptions,
    pub azimuth_selection: AzimuthSelection,
}

impl Default for CondenseOptions {
    fn default() -> Self {
        CondenseOptions {
            pl: PdpOptions::path_loss_profile(),
            ds: PdpOptions::delay_spread_profile(),
            azimuth_selection: AzimuthSelection::PerDelayBin,
        }
    }
}

/// Condensed parameters plus the intermediate products (PDPs, DDAPS,
/// max-dir pointing) the pipeline computed on the way.
#[derive(Debug, Clone)]
pub struct LocationProducts {
    pub omni: CondensedParams,
    pub max_dir: CondensedParams,
    pub max_pointing: Pointing,
    pub omni_pl_pdp: Pdp,
    pub maxdir_pl_pdp: Pdp,
    pub omni_ds_pdp: Pdp,
    pub maxdir_ds_pdp: Pdp,
    pub ddaps: Ddaps,
}

/// Full per-location pipeline: calibration, both PDP profiles, gating,
/// max-dir selection and omni reconstruction, angular spreads, then all four
/// condensed parameters for each view.
///
/// The max-dir pointing is selected once, on the path-loss profile, and
/// reused for the delay-spread profile; angular spreads are view-independent
/// and appear identically in both returned rows.
pub fn condense_location_products(
    bundle: &MeasurementBundle,
    opts: &CondenseOptions,
) -> Result<LocationProducts> {
    let report = validate_bundle(bundle);
    if !report.is_empty() {
        return Err(Error::InvalidBundle(report.to_string()));
    }
    let calibrated = apply_ota(bundle)?;

    let set_pl = PdpSet::build(&calibrated, &opts.pl)?;
    let (max_pointing, maxdir_pl_pdp) = select_max_dir(&set_pl)?;
    let maxdir_pl_pdp = maxdir_pl_pdp.clone();
    let omni_pl_pdp = synth_omni_with(&set_pl, opts.azimuth_selection);

    let ddaps = compute_ddaps(&set_pl);
    let as_tx = angular_spread(&marginal_aps(&ddaps, End::Tx))?;
    let as_rx = angular_spread(&marginal_aps(&ddaps, End::Rx))?;
    drop(set_pl);

    let set_ds = PdpSet::build(&calibrated, &opts.ds)?;
    let omni_ds_pdp = synth_omni_with(&set_ds, opts.azimuth_selection);
    let maxdir_ds_pdp = set_ds.get(max_pointing).clone();
    drop(set_ds);

    let base = |view: View, pl_db: f64, rmsds_s: f64, kappa1_db: f64| CondensedParams {
        location_id: bundle.label.clone(),
        distance_m: bundle.geometry.distance_m,
        los: bundle.geometry.los,
        view,
        pl_db,
        rmsds_s,
        as_tx,
        as_rx,
        kappa1_db,
    };

    let omni = base(
        View::Omni,
        path_loss(&omni_pl_pdp)?,
        rmsds(&omni_ds_pdp)?,
        kappa1(&omni_ds_pdp)?,
    );
    let max_dir = base(
        View::MaxDir,
        path_loss(&maxdir_pl_pdp)?,
        rmsds(&maxdir_ds_pdp)?,
        kappa1(&maxdir_ds_pdp)?,
    );
    Ok(LocationProducts {
        omni,
        max_dir,
        max_pointing,
        omni_pl_pdp,
        maxdir_pl_pdp,
        omni_ds_pdp,
        maxdir_ds_pdp,
        ddaps,
    })
}

/// [`condense_location_products`] reduced to the two condensed-parameter rows.
pub fn condense_location(
    bundle: &MeasurementBundle,
    opts: &CondenseOptions,
) -> Result<(CondensedParams, CondensedParams)> {
    let p = condense_location_products(bundle, opts)?;
    Ok((p.omni, p.max_dir))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn pdp_from(powers: &[f64]) -> Pdp {
        Pdp::new(1.0e-9, powers.to_vec())
    }

    #[test]
    fn path_loss_examples() {
        let mut p = vec![0.0; 8];
        p[2] = 1.0e-10;
        assert!(close(path_loss(&pdp_from(&p)).unwrap(), 100.0, 1e-12));

        let mut p = vec![0.0; 8];
        p[1] = 1.0e-9;
        p[5] = 1.0e-10;
        let expected = -10.0 * (1.1e-9f64).log10();
        assert!(close(path_loss(&pdp_from(&p)).unwrap(), expected, 1e-12));
        assert!(close(expected, 89.59, 0.005));

        assert!(matches!(path_loss(&pdp_from(&[0.0; 4])), Err(Error::ZeroPower)));
    }

    #[test]
    fn rmsds_single_delta_is_zero() {
        let mut p = vec![0.0; 32];
        p[17] = 3.0;
        assert_eq!(rmsds(&pdp_from(&p)).unwrap(), 0.0);
    }

    #[test]
    fn rmsds_two_equal_taps_is_half_separation() {
        // delta/2 for any base delay: tested at several offsets
        for &tau0_bins in &[0usize, 5, 300] {
            let mut p = vec![0.0; 400];
            p[tau0_bins] = 0.7;
            p[tau0_bins + 20] = 0.7;
            let got = rmsds(&pdp_from(&p)).unwrap();
            let rel = (got - 10.0e-9).abs() / 10.0e-9;
            assert!(rel < 1e-12, "tau0 {tau0_bins}: rel err {rel}");
        }
    }

    #[test]
    fn rmsds_two_unequal_masses() {
        // 1.0 at 0 ns and 0.5 at 30 ns: sqrt(300 - 100) ns = 30*sqrt(2)/3 ns
        let mut p = vec![0.0; 64];
        p[0] = 1.0;
        p[30] = 0.5;
        let got = rmsds(&pdp_from(&p)).unwrap();
        let expected = 30.0e-9 * 2.0f64.sqrt() / 3.0;
        assert!(close(got, expected, 1e-20));
        assert!(close(got * 1e9, 14.142, 0.001));
    }

    #[test]
    fn rmsds_is_scale_and_shift_invariant() {
        let mut p = vec![0.0; 128];
        p[10] = 1.0;
        p[40] = 0.3;
        p[90] = 0.1;
        let s0 = rmsds(&pdp_from(&p)).unwrap();

        let scaled: Vec<f64> = p.iter().map(|x| x * 7.7e-4).collect();
        assert!(close(rmsds(&pdp_from(&scaled)).unwrap(), s0, s0 * 1e-12));

        let mut shifted = vec![0.0; 158];
        shifted[40] = 1.0;
        shifted[70] = 0.3;
        shifted[120] = 0.1;
        assert!(close(rmsds(&pdp_from(&shifted)).unwrap(), s0, s0 * 1e-12));
    }

    #[test]
    fn local_maxima_examples() {
        // interior peaks, sorted by power then delay
        let m = find_local_maxima(&pdp_from(&[0.0, 1.0, 0.0, 2.0, 0.0]));
        assert_eq!(m, vec![(3, 2.0), (1, 1.0)]);

        // plateau collapses to its leftmost bin
        let m = find_local_maxima(&pdp_from(&[0.0, 5.0, 5.0, 0.0]));
        assert_eq!(m, vec![(1, 5.0)]);

        // monotone ramp has no interior peak
        let m = find_local_maxima(&pdp_from(&[0.0, 1.0, 2.0, 3.0]));
        assert!(m.is_empty());

        // equal-power ties order by earlier delay
        let m = find_local_maxima(&pdp_from(&[0.0, 4.0, 0.0, 4.0, 0.0]));
        assert_eq!(m, vec![(1, 4.0), (3, 4.0)]);
    }

    #[test]
    fn kappa1_examples() {
        let mut p = vec![0.0; 32];
        p[5] = 10.0;
        p[15] = 1.0;
        assert!(close(kappa1(&pdp_from(&p)).unwrap(), 10.0, 1e-12));

        p[25] = 0.1;
        let expected = 10.0 * (10.0f64 / 1.1).log10();
        assert!(close(kappa1(&pdp_from(&p)).unwrap(), expected, 1e-12));
        assert!(close(expected, 9.586, 0.001));

        let mut single = vec![0.0; 16];
        single[8] = 2.0;
        assert_eq!(kappa1(&pdp_from(&single)).unwrap(), f64::INFINITY);

        assert!(matches!(
            kappa1(&pdp_from(&[0.0; 8])),
            Err(Error::NoLocalMaxima)
        ));
    }

    #[test]
    fn kappa1_is_scale_invariant() {
        let mut p = vec![0.0; 64];
        p[10] = 3.0;
        p[20] = 0.5;
        p[33] = 0.25;
        let k0 = kappa1(&pdp_from(&p)).unwrap();
        let scaled: Vec<f64> = p.iter().map(|x| x * 1e-9).collect();
        assert!(close(kappa1(&pdp_from(&scaled)).unwrap(), k0, 1e-12));
    }
}
