//! Measurement-bundle container: a five-dimensional complex transfer-function
//! tensor plus campaign metadata, stored on disk as a directory with
//! `meta.json`, `h.bin` and `ota.bin`.
//!
//! The tensor holds one frequency sweep per antenna pointing, indexed as
//! `[el_tx][az_tx][el_rx][az_rx][freq]`. The binary files are little-endian
//! interleaved re/im 32-bit floats in exactly that row-major order, so the
//! byte offset of element `(e_t, a_t, e_r, a_r, k)` is
//! `8 * ((((e_t*A_t + a_t)*E_r + e_r)*A_r + a_r)*F + k)`.
//!
//! ```
//! use canyon_sounder::bundle::{AngleGrid, FrequencyAxis};
//!
//! let grid = AngleGrid::table_default();
//! assert_eq!(grid.tx_az_deg.len(), 13); // -60..=60 in 10 deg steps
//! assert_eq!(grid.rx_az_deg.len(), 36); // 0..=350 in 10 deg steps
//!
//! let freq = FrequencyAxis::table_default();
//! assert_eq!(freq.n_points, 1001);
//! // 1 GHz swept in 1 MHz steps resolves excess delays up to 1 microsecond.
//! assert!((freq.tau_max_s() - 1.0e-6).abs() < 1e-18);
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex32;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

/// Schema version written into `meta.json`. Readers reject other majors.
pub const SCHEMA_VERSION: &str = "1.0";
const SUPPORTED_MAJOR: u32 = 1;

// ---------------------------------------------------------------------------
// Metadata types
// ---------------------------------------------------------------------------

/// Line-of-sight condition class of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LosCondition {
    Los,
    Nlos,
}

impl LosCondition {
    pub fn as_str(&self) -> &'static str {
        match self {
            LosCondition::Los => "los",
            LosCondition::Nlos => "nlos",
        }
    }
}

impl std::str::FromStr for LosCondition {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "los" => Ok(LosCondition::Los),
            "nlos" => Ok(LosCondition::Nlos),
            other => Err(format!("unknown los condition {other:?} (expected los|nlos)")),
        }
    }
}

/// Rotation grids of the two positioners, in degrees.
///
/// Each list must be strictly increasing. The defaults reproduce the
/// campaign setup: Tx azimuth scans a 120 deg sector, Rx azimuth a full
/// circle, both in 10 deg steps; both ends scan three elevation cuts spaced
/// by one beamwidth (13 deg).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    pub tx_az_deg: Vec<f64>,
    pub tx_el_deg: Vec<f64>,
    pub rx_az_deg: Vec<f64>,
    pub rx_el_deg: Vec<f64>,
}

fn step_range(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start + step * i as f64).collect()
}

impl AngleGrid {
    /// Campaign default: Tx az -60..=60 (13), Rx az 0..=350 (36),
    /// elevations {-13, 0, 13} at both ends.
    pub fn table_default() -> Self {
        AngleGrid {
            tx_az_deg: step_range(-60.0, 10.0, 13),
            tx_el_deg: vec![-13.0, 0.0, 13.0],
            rx_az_deg: step_range(0.0, 10.0, 36),
            rx_el_deg: vec![-13.0, 0.0, 13.0],
        }
    }

    pub fn n_az_tx(&self) -> usize {
        self.tx_az_deg.len()
    }
    pub fn n_el_tx(&self) -> usize {
        self.tx_el_deg.len()
    }
    pub fn n_az_rx(&self) -> usize {
        self.rx_az_deg.len()
    }
    pub fn n_el_rx(&self) -> usize {
        self.rx_el_deg.len()
    }

    fn check_increasing(name: &str, vals: &[f64], out: &mut Vec<String>) {
        if vals.is_empty() {
            out.push(format!("grid.{name}: empty angle list"));
            return;
        }
        for w in vals.windows(2) {
            if !(w[1] > w[0]) {
                out.push(format!(
                    "grid.{name}: not strictly increasing ({} then {})",
                    w[0], w[1]
                ));
                return;
            }
        }
    }

    fn violations(&self, out: &mut Vec<String>) {
        Self::check_increasing("tx_az_deg", &self.tx_az_deg, out);
        Self::check_increasing("tx_el_deg", &self.tx_el_deg, out);
        Self::check_increasing("rx_az_deg", &self.rx_az_deg, out);
        Self::check_increasing("rx_el_deg", &self.rx_el_deg, out);
    }
}

/// Uniform frequency sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyAxis {
    pub f_start_hz: f64,
    pub f_stop_hz: f64,
    pub n_points: usize,
}

impl FrequencyAxis {
    /// Campaign default: 145-146 GHz, 1001 points.
    pub fn table_default() -> Self {
        FrequencyAxis {
            f_start_hz: 145.0e9,
            f_stop_hz: 146.0e9,
            n_points: 1001,
        }
    }

    /// Frequency spacing between sweep points.
    pub fn delta_f_hz(&self) -> f64 {
        (self.f_stop_hz - self.f_start_hz) / (self.n_points as f64 - 1.0)
    }

    /// Alias-free maximum excess delay, `1 / delta_f`.
    pub fn tau_max_s(&self) -> f64 {
        1.0 / self.delta_f_hz()
    }

    /// Band center.
    pub fn f_center_hz(&self) -> f64 {
        0.5 * (self.f_start_hz + self.f_stop_hz)
    }

    /// Frequency of sweep point `k`.
    pub fn frequency_hz(&self, k: usize) -> f64 {
        self.f_start_hz + self.delta_f_hz() * k as f64
    }

    fn violations(&self, out: &mut Vec<String>) {
        if self.n_points < 2 {
            out.push(format!("freq.n_points: must be >= 2, got {}", self.n_points));
        }
        if !(self.f_stop_hz > self.f_start_hz) {
            out.push(format!(
                "freq.f_stop_hz: must exceed f_start_hz ({} <= {})",
                self.f_stop_hz, self.f_start_hz
            ));
        }
    }
}

fn default_tx_height() -> f64 {
    11.5
}
fn default_rx_height() -> f64 {
    1.7
}

/// Tx/Rx placement of one measured link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    #[serde(default)]
    pub tx_pos_m: Option<[f64; 3]>,
    #[serde(default)]
    pub rx_pos_m: Option<[f64; 3]>,
    pub distance_m: f64,
    pub los: LosCondition,
    #[serde(default = "default_tx_height")]
    pub tx_height_m: f64,
    #[serde(default = "default_rx_height")]
    pub rx_height_m: f64,
}

impl LinkGeometry {
    /// Geometry with only a direct distance and condition class; positions
    /// unset, campaign default heights.
    pub fn from_distance(distance_m: f64, los: LosCondition) -> Self {
        LinkGeometry {
            tx_pos_m: None,
            rx_pos_m: None,
            distance_m,
            los,
            tx_height_m: default_tx_height(),
            rx_height_m: default_rx_height(),
        }
    }

    fn violations(&self, out: &mut Vec<String>) {
        if !(self.distance_m > 0.0) {
            out.push(format!(
                "geometry.distance_m: must be > 0, got {}",
                self.distance_m
            ));
        }
        if let (Some(t), Some(r)) = (self.tx_pos_m, self.rx_pos_m) {
            let d = ((t[0] - r[0]).powi(2) + (t[1] - r[1]).powi(2) + (t[2] - r[2]).powi(2)).sqrt();
            if (d - self.distance_m).abs() > 0.1 {
                out.push(format!(
                    "geometry.distance_m: |tx_pos - rx_pos| = {d:.3} m disagrees with distance_m = {} m by more than 0.1 m",
                    self.distance_m
                ));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

/// Dense five-dimensional complex tensor in `[el_tx][az_tx][el_rx][az_rx][freq]`
/// order. Storage is `f32` pairs; all downstream computation is `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor5 {
    /// `[n_el_tx, n_az_tx, n_el_rx, n_az_rx, n_freq]`
    pub dims: [usize; 5],
    pub data: Vec<Complex32>,
}

impl Tensor5 {
    pub fn zeros(dims: [usize; 5]) -> Self {
        let len = dims.iter().product();
        Tensor5 {
            dims,
            data: vec![Complex32::new(0.0, 0.0); len],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Linear index of element `(e_t, a_t, e_r, a_r, k)`.
    #[inline]
    pub fn index(&self, e_t: usize, a_t: usize, e_r: usize, a_r: usize, k: usize) -> usize {
        let [_, a_tn, e_rn, a_rn, f] = self.dims;
        (((e_t * a_tn + a_t) * e_rn + e_r) * a_rn + a_r) * f + k
    }

    #[inline]
    pub fn at(&self, e_t: usize, a_t: usize, e_r: usize, a_r: usize, k: usize) -> Complex32 {
        self.data[self.index(e_t, a_t, e_r, a_r, k)]
    }

    /// Frequency sweep stored for one pointing.
    pub fn sweep(&self, e_t: usize, a_t: usize, e_r: usize, a_r: usize) -> &[Complex32] {
        let f = self.dims[4];
        let start = self.index(e_t, a_t, e_r, a_r, 0);
        &self.data[start..start + f]
    }

    pub fn sweep_mut(&mut self, e_t: usize, a_t: usize, e_r: usize, a_r: usize) -> &mut [Complex32] {
        let f = self.dims[4];
        let start = self.index(e_t, a_t, e_r, a_r, 0);
        &mut self.data[start..start + f]
    }
}

// ---------------------------------------------------------------------------
// Bundle
// ---------------------------------------------------------------------------

/// One complete double-directional measurement: calibration trace, metadata
/// and the full pointing-by-pointing transfer-function tensor.
///
/// Bundles are immutable after load and safe to share read-only across
/// threads.
#[derive(Debug, Clone)]
pub struct MeasurementBundle {
    pub grid: AngleGrid,
    pub freq: FrequencyAxis,
    pub geometry: LinkGeometry,
    pub h_meas: Tensor5,
    pub ota: Vec<Complex32>,
    pub label: String,
}

impl MeasurementBundle {
    /// Expected tensor dims for the metadata.
    pub fn expected_dims(grid: &AngleGrid, freq: &FrequencyAxis) -> [usize; 5] {
        [
            grid.n_el_tx(),
            grid.n_az_tx(),
            grid.n_el_rx(),
            grid.n_az_rx(),
            freq.n_points,
        ]
    }
}

/// Outcome of [`validate_bundle`]: every violated invariant, one line each,
/// naming the offending field. Empty iff the bundle is valid.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for v in &self.violations {
            writeln!(f, "- {v}")?;
        }
        Ok(())
    }
}

/// Check every bundle invariant; reporting only, never fails.
pub fn validate_bundle(bundle: &MeasurementBundle) -> ValidationReport {
    let mut out = Vec::new();
    bundle.grid.violations(&mut out);
    bundle.freq.violations(&mut out);
    bundle.geometry.violations(&mut out);

    let expected = MeasurementBundle::expected_dims(&bundle.grid, &bundle.freq);
    if bundle.h_meas.dims != expected {
        out.push(format!(
            "h_meas: tensor dims {:?} do not match grid/freq dims {:?}",
            bundle.h_meas.dims, expected
        ));
    }
    let expected_len: usize = bundle.h_meas.dims.iter().product();
    if bundle.h_meas.data.len() != expected_len {
        out.push(format!(
            "h_meas: data length {} does not match dims product {}",
            bundle.h_meas.data.len(),
            expected_len
        ));
    }
    if bundle.ota.len() != bundle.freq.n_points {
        out.push(format!(
            "ota: length {} does not match freq.n_points {}",
            bundle.ota.len(),
            bundle.freq.n_points
        ));
    }
    for (k, v) in bundle.ota.iter().enumerate() {
        if v.re == 0.0 && v.im == 0.0 {
            out.push(format!("ota: invalid OTA (zero entry at index {k})"));
            break;
        }
    }
    if bundle.ota.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        out.push("ota: non-finite entry".to_string());
    }
    if bundle
        .h_meas
        .data
        .iter()
        .any(|v| !v.re.is_finite() || !v.im.is_finite())
    {
        out.push("h_meas: non-finite entry".to_string());
    }
    ValidationReport { violations: out }
}

// ---------------------------------------------------------------------------
// On-disk format
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    schema_version: String,
    label: String,
    grid: AngleGrid,
    freq: FrequencyAxis,
    geometry: LinkGeometry,
}

fn complex_slice_to_bytes(data: &[Complex32]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(data.len() * 8);
    for v in data {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    bytes
}

fn bytes_to_complex_vec(bytes: &[u8]) -> Vec<Complex32> {
    bytes
        .chunks_exact(8)
        .map(|c| {
            Complex32::new(
                f32::from_le_bytes([c[0], c[1], c[2], c[3]]),
                f32::from_le_bytes([c[4], c[5], c[6], c[7]]),
            )
        })
        .collect()
}

/// Write `bytes` to `path` atomically (sibling temp file + rename).
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = tmp_sibling(path);
    fs::write(&tmp, bytes).map_err(|e| Error::io(tmp.display().to_string(), e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

fn tmp_sibling(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

/// Write a validated bundle as a directory containing `meta.json`, `h.bin`
/// and `ota.bin`. Round-trips bit-exactly through [`load_bundle`].
pub fn write_bundle(bundle: &MeasurementBundle, path: &Path) -> Result<()> {
    let report = validate_bundle(bundle);
    if !report.is_empty() {
        return Err(Error::InvalidBundle(report.to_string()));
    }
    fs::create_dir_all(path).map_err(|e| Error::io(path.display().to_string(), e))?;

    let meta = Meta {
        schema_version: SCHEMA_VERSION.to_string(),
        label: bundle.label.clone(),
        grid: bundle.grid.clone(),
        freq: bundle.freq,
        geometry: bundle.geometry.clone(),
    };
    let meta_json = serde_json::to_string_pretty(&meta).expect("meta serialization");
    write_atomic(&path.join("meta.json"), meta_json.as_bytes())?;
    write_atomic(&path.join("h.bin"), &complex_slice_to_bytes(&bundle.h_meas.data))?;
    write_atomic(&path.join("ota.bin"), &complex_slice_to_bytes(&bundle.ota))?;
    Ok(())
}

fn parse_major(version: &str) -> Option<u32> {
    version.split('.').next()?.parse().ok()
}

fn read_payload(path: &Path, expected_elems: usize) -> Result<Vec<Complex32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let expected = expected_elems as u64 * 8;
    if bytes.len() as u64 != expected {
        return Err(Error::PayloadSizeMismatch {
            file: path.display().to_string(),
            expected,
            actual: bytes.len() as u64,
        });
    }
    Ok(bytes_to_complex_vec(&bytes))
}

/// Load and validate a bundle directory written by [`write_bundle`].
pub fn load_bundle(path: &Path) -> Result<MeasurementBundle> {
    let meta_path = path.join("meta.json");
    let meta_raw =
        fs::read_to_string(&meta_path).map_err(|e| Error::io(meta_path.display().to_string(), e))?;
    let meta: Meta = serde_json::from_str(&meta_raw).map_err(|e| Error::BadMetadata {
        path: meta_path.display().to_string(),
        message: e.to_string(),
    })?;
    match parse_major(&meta.schema_version) {
        Some(SUPPORTED_MAJOR) => {}
        _ => {
            return Err(Error::SchemaVersion {
                found: meta.schema_version,
                supported: SUPPORTED_MAJOR,
            })
        }
    }

    let dims = MeasurementBundle::expected_dims(&meta.grid, &meta.freq);
    let n_elems: usize = dims.iter().product();
    let h_data = read_payload(&path.join("h.bin"), n_elems)?;
    let ota = read_payload(&path.join("ota.bin"), meta.freq.n_points)?;

    let bundle = MeasurementBundle {
        grid: meta.grid,
        freq: meta.freq,
        geometry: meta.geometry,
        h_meas: Tensor5 { dims, data: h_data },
        ota,
        label: meta.label,
    };
    let report = validate_bundle(&bundle);
    if !report.is_empty() {
        return Err(Error::InvalidBundle(report.to_string()));
    }
    Ok(bundle)
}
