//! Machine-readable statistical channel model and per-link Monte-Carlo
//! sampler.
//!
//! The model stores, per condition (LoS/NLoS) and view (omni/max-dir): the
//! path-loss line `PL = alpha + 10 beta log10(d)` with a zero-mean normal
//! shadowing sigma (weighted-regression row, OLS alternate alongside),
//! lognormal delay-spread and kappa1 parameters in dB (10 log10) together
//! with their distance trends `alpha + beta log10(d)`, and per-end angular
//! spreads as normals in plain log10 of the dimensionless circular spread.
//! The crate ships a default model file with the campaign's fitted values.
//!
//! ```
//! use canyon_sounder::bundle::LosCondition;
//! use canyon_sounder::condensed::View;
//! use canyon_sounder::statmodel::{default_model, mean_pl};
//!
//! let model = default_model();
//! let pl = mean_pl(&model, 50.0, LosCondition::Los, View::Omni).unwrap();
//! assert!((pl - 105.67).abs() < 0.01); // 72.88 + 19.3 * log10(50)
//! ```

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bundle::{write_atomic, LosCondition};
use crate::condensed::View;
use crate::error::{Error, Result};

/// Mean/standard-deviation pair of a normal (possibly of a log-transformed
/// quantity; units depend on context).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalParams {
    pub mu: f64,
    pub sigma: f64,
}

/// Intercept/slope pair of a `alpha + beta log10(d)` trend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub alpha: f64,
    pub beta: f64,
}

/// OLS alternate of a path-loss row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlOls {
    pub alpha_db: f64,
    pub beta: f64,
    pub sigma_shadow_db: f64,
}

/// Path-loss model row: `PL = alpha + 10 beta log10(d) + eps`,
/// `eps ~ N(0, sigma_shadow)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlModel {
    pub alpha_db: f64,
    pub beta: f64,
    pub sigma_shadow_db: f64,
    pub ols: PlOls,
}

/// Static distribution plus distance trend of a dB-domain quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendModel {
    #[serde(rename = "static")]
    pub static_: NormalParams,
    pub linear: LinearParams,
}

/// All per-view parameters of one condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewModel {
    pub pl: PlModel,
    pub ds: TrendModel,
    pub k1: TrendModel,
}

/// One condition (LoS or NLoS): both views plus the view-independent
/// angular-spread distributions (log10 domain).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionModel {
    pub omni: ViewModel,
    pub max_dir: ViewModel,
    pub as_tx: NormalParams,
    pub as_rx: NormalParams,
}

/// Complete statistical channel model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub schema_version: String,
    pub provenance: String,
    #[serde(default)]
    pub notes: Vec<String>,
    pub valid_range_m: [f64; 2],
    pub los: ConditionModel,
    pub nlos: ConditionModel,
}

impl ChannelModel {
    pub fn condition(&self, c: LosCondition) -> &ConditionModel {
        match c {
            LosCondition::Los => &self.los,
            LosCondition::Nlos => &self.nlos,
        }
    }

    pub fn view(&self, c: LosCondition, v: View) -> &ViewModel {
        let cond = self.condition(c);
        match v {
            View::Omni => &cond.omni,
            View::MaxDir => &cond.max_dir,
        }
    }

    pub fn from_json_str(s: &str) -> Result<ChannelModel> {
        serde_json::from_str(s).map_err(|e| Error::BadInput {
            path: "model json".into(),
            message: e.to_string(),
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization")
    }

    pub fn load(path: &Path) -> Result<ChannelModel> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::from_str(&raw).map_err(|e| Error::BadInput {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json_string().as_bytes())
    }
}

/// The fitted parameter set shipped with the crate (`data/default_model.json`).
pub fn default_model() -> ChannelModel {
    ChannelModel::from_json_str(include_str!("../data/default_model.json"))
        .expect("bundled default model parses")
}

// ---------------------------------------------------------------------------
// Model evaluation
// ---------------------------------------------------------------------------

fn check_distance(d_m: f64) -> Result<()> {
    if !(d_m > 0.0) {
        return Err(Error::NonPositiveDistance(d_m));
    }
    Ok(())
}

/// Mean path loss `alpha + 10 beta log10(d)` in dB.
pub fn mean_pl(model: &ChannelModel, d_m: f64, c: LosCondition, v: View) -> Result<f64> {
    check_distance(d_m)?;
    let pl = &model.view(c, v).pl;
    Ok(pl.alpha_db + 10.0 * pl.beta * d_m.log10())
}

/// Mean delay spread on the dB scale (re 1 s): `alpha + beta log10(d)`.
pub fn mean_ds_db(model: &ChannelModel, d_m: f64, c: LosCondition, v: View) -> Result<f64> {
    check_distance(d_m)?;
    let ds = &model.view(c, v).ds.linear;
    Ok(ds.alpha + ds.beta * d_m.log10())
}

/// Mean kappa1 trend in dB: `alpha + beta log10(d)`.
pub fn mean_k1_db(model: &ChannelModel, d_m: f64, c: LosCondition, v: View) -> Result<f64> {
    check_distance(d_m)?;
    let k1 = &model.view(c, v).k1.linear;
    Ok(k1.alpha + k1.beta * d_m.log10())
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// How the dB-domain quantities (delay spread, kappa1) are centered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// Draw around the static mu.
    Static,
    /// Draw around the fitted `alpha + beta log10(d)` trend.
    DistanceTrend,
}

impl std::str::FromStr for SampleMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "static" => Ok(SampleMode::Static),
            "trend" | "distance_trend" => Ok(SampleMode::DistanceTrend),
            other => Err(format!("unknown sample mode {other:?} (expected static|trend)")),
        }
    }
}

/// One sampled link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkRealization {
    pub d_m: f64,
    pub condition: LosCondition,
    pub view: View,
    pub pl_db: f64,
    pub shadow_db: f64,
    pub ds_s: f64,
    pub as_tx: f64,
    pub as_rx: f64,
    pub k1_db: f64,
    pub seed_record: String,
}

/// Sampled batch plus the count of angular-spread draws clamped into
/// `(0, sqrt(2))`.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub links: Vec<LinkRealization>,
    pub clamped_as: usize,
}

const AS_UPPER: f64 = std::f64::consts::SQRT_2;

fn draw_as(rng: &mut ChaCha12Rng, p: &NormalParams, clamped: &mut usize) -> f64 {
    let n = Normal::new(p.mu, p.sigma).expect("valid normal");
    let mut v = 10f64.powf(n.sample(rng));
    if v >= AS_UPPER {
        v = AS_UPPER - 1e-12;
        *clamped += 1;
    }
    if v <= 0.0 {
        v = f64::MIN_POSITIVE;
        *clamped += 1;
    }
    v
}

/// Draw one link realization per entry of `distances`. All draws are
/// independent; each link uses its own counter-derived substream of the
/// master seed, so output is reproducible and schedule-independent.
///
/// Per link the draw order is: shadowing, delay spread, AS-Tx, AS-Rx,
/// kappa1.
pub fn sample_links(
    model: &ChannelModel,
    distances: &[f64],
    condition: LosCondition,
    view: View,
    mode: SampleMode,
    seed: u64,
) -> Result<SampleBatch> {
    for &d in distances {
        check_distance(d)?;
    }
    let cond = model.condition(condition);
    let vm = model.view(condition, view);
    let shadow_dist = Normal::new(0.0, vm.pl.sigma_shadow_db)
        .map_err(|_| Error::InvalidOptions("negative sigma_shadow".into()))?;

    let mut links = Vec::with_capacity(distances.len());
    let mut clamped = 0usize;
    for (i, &d) in distances.iter().enumerate() {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);

        let shadow_db = shadow_dist.sample(&mut rng);
        let pl_db = mean_pl(model, d, condition, view)? + shadow_db;

        let ds_mu = match mode {
            SampleMode::Static => vm.ds.static_.mu,
            SampleMode::DistanceTrend => mean_ds_db(model, d, condition, view)?,
        };
        let ds_db = Normal::new(ds_mu, vm.ds.static_.sigma)
            .expect("valid normal")
            .sample(&mut rng);
        let ds_s = 10f64.powf(ds_db / 10.0);

        let as_tx = draw_as(&mut rng, &cond.as_tx, &mut clamped);
        let as_rx = draw_as(&mut rng, &cond.as_rx, &mut clamped);

        let k1_mu = match mode {
            SampleMode::Static => vm.k1.static_.mu,
            SampleMode::DistanceTrend => mean_k1_db(model, d, condition, view)?,
        };
        let k1_db = Normal::new(k1_mu, vm.k1.static_.sigma)
            .expect("valid normal")
            .sample(&mut rng);

        links.push(LinkRealization {
            d_m: d,
            condition,
            view,
            pl_db,
            shadow_db,
            ds_s,
            as_tx,
            as_rx,
            k1_db,
            seed_record: format!("{seed}:{i}"),
        });
    }
    Ok(SampleBatch {
        links,
        clamped_as: clamped,
    })
}

/// Empirical CDF: sorted distinct values with step heights `k/n`.
pub fn ecdf(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples {
            what: "ecdf",
            got: 0,
            need: 1,
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = p,
            _ => out.push((*v, p)),
        }
    }
    Ok(out)
}
