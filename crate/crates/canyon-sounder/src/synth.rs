//! Scene-to-tensor synthesizer: renders ground-truth multipath scenes into
//! measurement bundles with the same format and grid as real captures, for
//! end-to-end validation of the processing pipeline.
//!
//! Antennas follow a Gaussian main-lobe model with a 13 degree full-width
//! half-maximum: `G(offset) = exp(-ln2 * (2 offset / 13)^2)`, so the gain is
//! exactly 0.5 at 6.5 degrees off boresight. Each path contributes
//! `a_p(f) sqrt(G_tx) sqrt(G_rx) e^{-j 2 pi f tau_p}` per pointing and
//! frequency; Friis-gain paths use `a_p(f) = lambda(f) / (4 pi d_p)`.
//!
//! ```
//! use canyon_sounder::synth::antenna_gain;
//!
//! assert!((antenna_gain(0.0) - 1.0).abs() < 1e-15);
//! assert!((antenna_gain(6.5) - 0.5).abs() < 1e-12);   // half power at half FWHM
//! assert!((antenna_gain(13.0) - 0.0625).abs() < 1e-12); // 2^-4 one FWHM out
//! ```

use num_complex::{Complex32, Complex64};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bundle::{
    write_atomic, AngleGrid, FrequencyAxis, LinkGeometry, LosCondition, MeasurementBundle,
    Tensor5, SPEED_OF_LIGHT_M_S,
};
use crate::error::{Error, Result};

/// Antenna FWHM (3 dB beamwidth) in degrees.
pub const BEAMWIDTH_DEG: f64 = 13.0;

/// Gaussian main-lobe power gain at `offset_deg` off boresight.
pub fn antenna_gain(offset_deg: f64) -> f64 {
    let x = 2.0 * offset_deg / BEAMWIDTH_DEG;
    (-std::f64::consts::LN_2 * x * x).exp()
}

/// Great-circle angle in degrees between two (azimuth, elevation) directions.
pub fn great_circle_deg(az1_deg: f64, el1_deg: f64, az2_deg: f64, el2_deg: f64) -> f64 {
    let (az1, el1) = (az1_deg.to_radians(), el1_deg.to_radians());
    let (az2, el2) = (az2_deg.to_radians(), el2_deg.to_radians());
    let c = el1.sin() * el2.sin() + el1.cos() * el2.cos() * (az1 - az2).cos();
    c.clamp(-1.0, 1.0).acos().to_degrees()
}

/// Complex amplitude model of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PathGain {
    /// Free-space amplitude `lambda(f) / (4 pi distance)`, zero phase.
    Friis { distance_m: f64 },
    /// Frequency-flat amplitude and phase.
    Explicit { amplitude: f64, phase_rad: f64 },
}

/// One multipath component. Exactly one of `delay_s` / `runlength_m` must be
/// set; runlengths convert via the speed of light.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runlength_m: Option<f64>,
    pub aod_az_deg: f64,
    pub aod_el_deg: f64,
    pub aoa_az_deg: f64,
    pub aoa_el_deg: f64,
    pub gain: PathGain,
}

impl PathSpec {
    pub fn delay(&self) -> Result<f64> {
        match (self.delay_s, self.runlength_m) {
            (Some(d), None) => Ok(d),
            (None, Some(r)) => Ok(r / SPEED_OF_LIGHT_M_S),
            _ => Err(Error::InvalidScene(
                "path needs exactly one of delay_s / runlength_m".into(),
            )),
        }
    }
}

/// A complete synthetic scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub label: String,
    pub paths: Vec<PathSpec>,
    pub geometry: LinkGeometry,
    /// Per-frequency-bin SNR at the strongest pointing, dB; `None` disables
    /// noise. With no signal present the level is taken relative to unit
    /// channel gain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    pub seed: u64,
    pub grid: AngleGrid,
    pub freq: FrequencyAxis,
}

impl SceneSpec {
    pub fn from_json_str(s: &str) -> Result<SceneSpec> {
        serde_json::from_str(s).map_err(|e| Error::BadInput {
            path: "scene json".into(),
            message: e.to_string(),
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serialization")
    }

    pub fn load(path: &std::path::Path) -> Result<SceneSpec> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::from_str(&raw).map_err(|e| Error::BadInput {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        write_atomic(path, self.to_json_string().as_bytes())
    }
}

struct ResolvedPath {
    delay_s: f64,
    gain: PathGain,
    aod_az: f64,
    aod_el: f64,
    aoa_az: f64,
    aoa_el: f64,
}

/// Render a scene into a measurement bundle. Noise-off synthesis is linear in
/// path amplitudes; with `snr_db` set, seeded circular complex Gaussian noise
/// is added per pointing from counter-derived substreams of the scene seed,
/// so the output is bit-reproducible and schedule-independent.
pub fn synthesize_bundle(scene: &SceneSpec) -> Result<MeasurementBundle> {
    let freq = scene.freq;
    let grid = scene.grid.clone();
    let tau_max = freq.tau_max_s();
    let mut resolved = Vec::with_capacity(scene.paths.len());
    for p in &scene.paths {
        let delay_s = p.delay()?;
        if !(delay_s >= 0.0) {
            return Err(Error::InvalidScene(format!("negative path delay {delay_s}")));
        }
        if delay_s >= tau_max {
            return Err(Error::DelayBeyondAlias {
                delay_s,
                tau_max_s: tau_max,
            });
        }
        if let PathGain::Friis { distance_m } = p.gain {
            if !(distance_m > 0.0) {
                return Err(Error::InvalidScene(format!(
                    "friis gain needs a positive distance, got {distance_m}"
                )));
            }
        }
        resolved.push(ResolvedPath {
            delay_s,
            gain: p.gain,
            aod_az: p.aod_az_deg,
            aod_el: p.aod_el_deg,
            aoa_az: p.aoa_az_deg,
            aoa_el: p.aoa_el_deg,
        });
    }

    let n_freq = freq.n_points;
    let (e_t, a_t, e_r, a_r) = (
        grid.n_el_tx(),
        grid.n_az_tx(),
        grid.n_el_rx(),
        grid.n_az_rx(),
    );
    let n_pointings = e_t * a_t * e_r * a_r;

    // per-path amplitude sqrt-gains for every pointing axis value
    let amp_at = |p: &ResolvedPath, k: usize| -> f64 {
        match p.gain {
            PathGain::Friis { distance_m } => {
                SPEED_OF_LIGHT_M_S / freq.frequency_hz(k) / (4.0 * std::f64::consts::PI * distance_m)
            }
            PathGain::Explicit { amplitude, .. } => amplitude,
        }
    };
    let phase_at = |p: &ResolvedPath, k: usize| -> f64 {
        let base = match p.gain {
            PathGain::Friis { .. } => 0.0,
            PathGain::Explicit { phase_rad, .. } => phase_rad,
        };
        base - 2.0 * std::f64::consts::PI * freq.frequency_hz(k) * p.delay_s
    };

    // noiseless synthesis, one pointing at a time
    let signal: Vec<Vec<Complex64>> = (0..n_pointings)
        .into_par_iter()
        .map(|lin| {
            let az_rx = lin % a_r;
            let rest = lin / a_r;
            let el_rx = rest % e_r;
            let rest = rest / e_r;
            let az_tx = rest % a_t;
            let el_tx = rest / a_t;
            let (p_az_tx, p_el_tx) = (grid.tx_az_deg[az_tx], grid.tx_el_deg[el_tx]);
            let (p_az_rx, p_el_rx) = (grid.rx_az_deg[az_rx], grid.rx_el_deg[el_rx]);
            let mut sweep = vec![Complex64::new(0.0, 0.0); n_freq];
            for p in &resolved {
                let g_tx = antenna_gain(great_circle_deg(p_az_tx, p_el_tx, p.aod_az, p.aod_el));
                let g_rx = antenna_gain(great_circle_deg(p_az_rx, p_el_rx, p.aoa_az, p.aoa_el));
                let g = (g_tx * g_rx).sqrt();
                if g == 0.0 {
                    continue;
                }
                for (k, s) in sweep.iter_mut().enumerate() {
                    *s += Complex64::from_polar(g * amp_at(p, k), phase_at(p, k));
                }
            }
            sweep
        })
        .collect();

    // noise level from the strongest pointing's mean per-bin power
    let noise_sigma2 = scene.snr_db.map(|snr| {
        let boresight_power = signal
            .iter()
            .map(|sweep| sweep.iter().map(|v| v.norm_sqr()).sum::<f64>() / n_freq as f64)
            .fold(0.0f64, f64::max);
        let reference = if boresight_power > 0.0 {
            boresight_power
        } else {
            1.0
        };
        reference * 10f64.powf(-snr / 10.0)
    });

    let mut tensor = Tensor5::zeros([e_t, a_t, e_r, a_r, n_freq]);
    tensor
        .data
        .par_chunks_mut(n_freq)
        .enumerate()
        .for_each(|(lin, chunk)| {
            let sweep = &signal[lin];
            match noise_sigma2 {
                None => {
                    for (dst, s) in chunk.iter_mut().zip(sweep) {
                        *dst = Complex32::new(s.re as f32, s.im as f32);
                    }
                }
                Some(sigma2) => {
                    let mut rng = ChaCha12Rng::seed_from_u64(scene.seed);
                    rng.set_stream(lin as u64);
                    let comp = Normal::new(0.0, (sigma2 / 2.0).sqrt()).expect("valid normal");
                    for (dst, s) in chunk.iter_mut().zip(sweep) {
                        let re = s.re + comp.sample(&mut rng);
                        let im = s.im + comp.sample(&mut rng);
                        *dst = Complex32::new(re as f32, im as f32);
                    }
                }
            }
        });

    let bundle = MeasurementBundle {
        grid,
        freq,
        geometry: scene.geometry.clone(),
        h_meas: tensor,
        ota: vec![Complex32::new(1.0, 0.0); n_freq],
        label: scene.label.clone(),
    };
    Ok(bundle)
}

// ---------------------------------------------------------------------------
// Canonical scenes
// ---------------------------------------------------------------------------

fn geometry_at(d_m: f64, los: LosCondition) -> LinkGeometry {
    let dh = (d_m * d_m - (11.5f64 - 1.7).powi(2)).sqrt();
    LinkGeometry {
        tx_pos_m: Some([0.0, 0.0, 11.5]),
        rx_pos_m: Some([dh, 0.0, 1.7]),
        distance_m: d_m,
        los,
        tx_height_m: 11.5,
        rx_height_m: 1.7,
    }
}

fn friis_amp_center(freq: &FrequencyAxis, runlength_m: f64) -> f64 {
    SPEED_OF_LIGHT_M_S / freq.f_center_hz() / (4.0 * std::f64::consts::PI * runlength_m)
}

fn path(
    runlength_m: f64,
    aod_az: f64,
    aod_el: f64,
    aoa_az: f64,
    aoa_el: f64,
    gain: PathGain,
) -> PathSpec {
    PathSpec {
        delay_s: None,
        runlength_m: Some(runlength_m),
        aod_az_deg: aod_az,
        aod_el_deg: aod_el,
        aoa_az_deg: aoa_az,
        aoa_el_deg: aoa_el,
        gain,
    }
}

/// Scene (a): single boresight LoS path with free-space gain.
pub fn scene_los_single(d_m: f64) -> SceneSpec {
    SceneSpec {
        label: format!("los_single_{d_m:.1}m"),
        paths: vec![path(d_m, 0.0, 0.0, 0.0, 0.0, PathGain::Friis { distance_m: d_m })],
        geometry: geometry_at(d_m, LosCondition::Los),
        snr_db: None,
        seed: 1001,
        grid: AngleGrid::table_default(),
        freq: FrequencyAxis::table_default(),
    }
}

/// Scene (b): LoS plus a 30 dB weaker three-ray reflection cluster.
pub fn scene_los_cluster(d_m: f64) -> SceneSpec {
    let freq = FrequencyAxis::table_default();
    let a_cluster = friis_amp_center(&freq, d_m) * 10f64.powf(-30.0 / 20.0);
    let mut paths = vec![path(d_m, 0.0, 0.0, 0.0, 0.0, PathGain::Friis { distance_m: d_m })];
    for (i, (extra_m, rel, phase)) in [(18.0, 1.0, 0.4), (27.0, 0.8, 1.7), (36.0, 0.6, 2.9)]
        .iter()
        .enumerate()
    {
        paths.push(path(
            d_m + extra_m,
            20.0,
            0.0,
            60.0 + 10.0 * i as f64,
            0.0,
            PathGain::Explicit {
                amplitude: a_cluster * rel,
                phase_rad: *phase,
            },
        ));
    }
    SceneSpec {
        label: format!("los_cluster_{d_m:.1}m"),
        paths,
        geometry: geometry_at(d_m, LosCondition::Los),
        snr_db: None,
        seed: 1002,
        grid: AngleGrid::table_default(),
        freq,
    }
}

/// Scene (c): NLoS street canyon; no LoS path, the strongest component
/// arrives later than the theoretical LoS delay. Ships with a finite SNR so
/// the noise threshold removes the leading window-sidelobe skirt, as on a
/// real capture.
pub fn scene_nlos_canyon(d_m: f64) -> SceneSpec {
    let paths = vec![
        path(1.25 * d_m, -10.0, 0.0, 30.0, 0.0, PathGain::Friis { distance_m: 1.25 * d_m }),
        path(1.40 * d_m, 10.0, 0.0, 50.0, 0.0, PathGain::Friis { distance_m: 1.40 * d_m }),
        path(1.55 * d_m, -10.0, 0.0, 210.0, 0.0, PathGain::Friis { distance_m: 1.55 * d_m }),
    ];
    SceneSpec {
        label: format!("nlos_canyon_{d_m:.1}m"),
        paths,
        geometry: geometry_at(d_m, LosCondition::Nlos),
        snr_db: Some(35.0),
        seed: 1003,
        grid: AngleGrid::table_default(),
        freq: FrequencyAxis::table_default(),
    }
}

/// Scene (d): two NLoS clusters at distinct azimuth pairs with a 60/40
/// power split and distinct delays.
pub fn scene_nlos_two_cluster(d_m: f64) -> SceneSpec {
    let freq = FrequencyAxis::table_default();
    let base = friis_amp_center(&freq, 1.2 * d_m);
    let paths = vec![
        path(
            1.2 * d_m,
            -20.0,
            0.0,
            30.0,
            0.0,
            PathGain::Explicit {
                amplitude: base * 0.6f64.sqrt(),
                phase_rad: 0.0,
            },
        ),
        path(
            1.35 * d_m,
            30.0,
            0.0,
            120.0,
            0.0,
            PathGain::Explicit {
                amplitude: base * 0.4f64.sqrt(),
                phase_rad: 1.1,
            },
        ),
    ];
    SceneSpec {
        label: format!("nlos_two_cluster_{d_m:.1}m"),
        paths,
        geometry: geometry_at(d_m, LosCondition::Nlos),
        snr_db: None,
        seed: 1004,
        grid: AngleGrid::table_default(),
        freq,
    }
}

/// The named canonical scene set at a 100 m reference distance.
pub fn build_canonical_scenes() -> Vec<(String, SceneSpec)> {
    vec![
        ("los_single".into(), scene_los_single(100.0)),
        ("los_cluster".into(), scene_los_cluster(100.0)),
        ("nlos_canyon".into(), scene_nlos_canyon(100.0)),
        ("nlos_two_cluster".into(), scene_nlos_two_cluster(100.0)),
    ]
}
