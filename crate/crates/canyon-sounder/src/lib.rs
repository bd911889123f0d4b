//! Double-directional THz channel-sounding analysis toolkit.
//!
//! The crate turns five-dimensional frequency-sweep tensors (one sweep per
//! Tx/Rx pointing pair) into calibrated power delay profiles, directional and
//! omni-directional views, angular power spectra and condensed channel
//! parameters; fits distance-dependence and distribution models with 95%
//! confidence intervals; and samples synthetic links from the fitted model.
//! A scene-to-tensor synthesizer provides ground truth for end-to-end
//! validation.
//!
//! The processing chain mirrors a street-canyon microcell measurement
//! campaign at 145-146 GHz: OTA calibration, windowed/oversampled IDFT to the
//! delay domain, noise thresholding and delay gating, max-dir selection and
//! per-delay-bin omni reconstruction, then path loss, RMS delay spread,
//! Fleury angular spreads and the strongest-peak power ratio kappa1.
//!
//! See the `book/` guide in the repository for a narrative walk-through; its
//! code snippets are kept in sync with the doc-tests in these modules.

// negated comparisons like `!(x > 0.0)` are deliberate: they reject NaN
// along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod cli;
pub mod condensed;
pub mod directional;
pub mod error;
pub mod fitting;
pub mod pdp;
pub mod statmodel;
pub mod synth;

pub use bundle::{
    load_bundle, validate_bundle, write_bundle, AngleGrid, FrequencyAxis, LinkGeometry,
    LosCondition, MeasurementBundle, ValidationReport, SPEED_OF_LIGHT_M_S,
};
pub use condensed::{
    condense_location, find_local_maxima, kappa1, path_loss, rmsds, CondensedParams, View,
};
pub use directional::{
    angular_spread, circular_mean, compute_ddaps, marginal_aps, select_max_dir, synth_omni, Aps,
    Ddaps, End, PdpSet, Pointing,
};
pub use error::{Error, Result};
pub use fitting::{
    fit_lognormal_db, fit_normal, ols_fit, shadowing_residuals, weighted_fit, DbRule, FitMethod,
    LinearFit, Sample2D, SlopeScale, StatFit,
};
pub use pdp::{
    apply_ota, directional_pdp, estimate_noise_floor, threshold_gate, CalibratedTensor, Pdp,
    PdpOptions, Window,
};
pub use statmodel::{ecdf, ChannelModel, LinkRealization, SampleMode};
pub use synth::{antenna_gain, build_canonical_scenes, synthesize_bundle, PathGain, PathSpec, SceneSpec};
