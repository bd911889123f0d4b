//! Batch command-line front-end: `synth`, `process`, `fit`, `sample` and
//! `report` subcommands wiring the full pipeline.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors. Every
//! output file is written atomically (temp + rename) and identical inputs
//! plus seeds produce byte-identical outputs. `CANYON_SOUNDER_THREADS` caps
//! the worker-thread count.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::bundle::{load_bundle, write_atomic, LosCondition};
use crate::condensed::{condense_location_products, CondenseOptions, CondensedParams, View};
use crate::directional::{marginal_aps, AzimuthSelection, End};
use crate::error::{Error, Result};
use crate::fitting::{
    fit_lognormal_db, fit_normal, ols_fit, shadowing_residuals, weighted_fit, DbRule, LinearFit,
    Sample2D, SlopeScale,
};
use crate::pdp::Window;
use crate::statmodel::{
    sample_links, ChannelModel, ConditionModel, LinearParams, NormalParams, PlModel, PlOls,
    SampleMode, TrendModel, ViewModel,
};
use crate::synth::{synthesize_bundle, SceneSpec};

#[derive(Parser)]
#[command(
    name = "canyon-sounder",
    version,
    about = "Double-directional THz channel-sounding analysis toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scene JSON into a measurement-bundle directory
    Synth {
        /// Scene description file
        #[arg(long)]
        scene: PathBuf,
        /// Output bundle directory
        #[arg(long)]
        out: PathBuf,
        /// Override the scene's seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Process bundle directories into condensed-parameter CSV rows
    Process {
        /// Bundle directory, or a directory of bundle directories (repeatable)
        #[arg(long = "bundle", required = true)]
        bundles: Vec<PathBuf>,
        /// Output CSV of condensed parameters
        #[arg(long)]
        out: PathBuf,
        /// Also write the omni / max-dir delay-spread-profile PDPs
        /// (single bundle only)
        #[arg(long)]
        pdp_csv: Option<PathBuf>,
        /// Also write the Tx / Rx azimuth power spectra (single bundle only)
        #[arg(long)]
        aps_csv: Option<PathBuf>,
        /// Delay gate override in nanoseconds
        #[arg(long)]
        tau_gate_ns: Option<f64>,
        /// Noise threshold margin override in dB
        #[arg(long)]
        noise_margin_db: Option<f64>,
        /// Oversampling factor override for the delay-spread profile
        #[arg(long)]
        osf: Option<usize>,
        /// Window override for the delay-spread profile (rectangular|hann)
        #[arg(long)]
        ds_window: Option<String>,
        /// Reconstruct the omni PDP from the single strongest azimuth pair
        /// instead of the per-delay-bin maximum
        #[arg(long)]
        whole_pdp_omni: bool,
    },
    /// Fit the statistical channel model from a condensed-parameter CSV
    Fit {
        /// Input condensed-parameter CSV (from `process`)
        #[arg(long)]
        params: PathBuf,
        /// Output model JSON
        #[arg(long)]
        out: PathBuf,
        /// Number of log10-distance bins for the weighted regression
        #[arg(long, default_value_t = 5)]
        n_bins: usize,
        /// Regression feeding the primary rows (ols|weighted)
        #[arg(long, default_value = "weighted")]
        method: String,
    },
    /// Sample link realizations from a model
    Sample {
        /// Model JSON (from `fit`, or the shipped default)
        #[arg(long)]
        model: PathBuf,
        /// Distances as start:step:stop or a comma list, meters
        #[arg(long)]
        distances: String,
        /// Realizations per distance
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Master seed
        #[arg(long)]
        seed: u64,
        /// Output CSV
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "los")]
        condition: String,
        #[arg(long, default_value = "omni")]
        view: String,
        /// Centering of delay spread and kappa1 draws (static|trend)
        #[arg(long, default_value = "static")]
        mode: String,
    },
    /// Emit plot-ready ECDF, scatter and regression-line CSVs
    Report {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug)]
enum CmdError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        CmdError::Data(e)
    }
}

type CmdResult<T> = std::result::Result<T, CmdError>;

fn usage(msg: impl Into<String>) -> CmdError {
    CmdError::Usage(msg.into())
}

/// Run the CLI against an argv token list; returns the process exit code
/// (0 success, 1 usage error, 2 data error).
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_thread_pool();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // clap renders its own help/usage text; --help/--version exit 0
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(CmdError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            1
        }
        Err(CmdError::Data(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn init_thread_pool() {
    use std::sync::Once;
    static INIT: Once = Once::new();
    INIT.call_once(|| {
        if let Ok(v) = std::env::var("CANYON_SOUNDER_THREADS") {
            if let Ok(n) = v.trim().parse::<usize>() {
                if n >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                }
            }
        }
    });
}

fn execute(cmd: Command) -> CmdResult<()> {
    match cmd {
        Command::Synth { scene, out, seed } => cmd_synth(&scene, &out, seed),
        Command::Process {
            bundles,
            out,
            pdp_csv,
            aps_csv,
            tau_gate_ns,
            noise_margin_db,
            osf,
            ds_window,
            whole_pdp_omni,
        } => cmd_process(
            &bundles,
            &out,
            pdp_csv.as_deref(),
            aps_csv.as_deref(),
            tau_gate_ns,
            noise_margin_db,
            osf,
            ds_window.as_deref(),
            whole_pdp_omni,
        ),
        Command::Fit {
            params,
            out,
            n_bins,
            method,
        } => cmd_fit(&params, &out, n_bins, &method),
        Command::Sample {
            model,
            distances,
            n,
            seed,
            out,
            condition,
            view,
            mode,
        } => cmd_sample(&model, &distances, n, seed, &out, &condition, &view, &mode),
        Command::Report { params, model, out } => cmd_report(&params, &model, &out),
    }
}

fn ensure_distinct(a: &Path, b: &Path, what: &str) -> CmdResult<()> {
    if a == b {
        return Err(usage(format!("{what}: input and output paths must differ ({})", a.display())));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

fn cmd_synth(scene_path: &Path, out: &Path, seed: Option<u64>) -> CmdResult<()> {
    ensure_distinct(scene_path, out, "synth")?;
    let mut scene = SceneSpec::load(scene_path)?;
    if let Some(s) = seed {
        scene.seed = s;
    }
    let bundle = synthesize_bundle(&scene)?;
    crate::bundle::write_bundle(&bundle, out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// process
// ---------------------------------------------------------------------------

fn resolve_bundle_dirs(inputs: &[PathBuf]) -> CmdResult<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    for input in inputs {
        if input.join("meta.json").is_file() {
            dirs.push(input.clone());
            continue;
        }
        let entries = std::fs::read_dir(input)
            .map_err(|e| CmdError::Data(Error::io(input.display().to_string(), e)))?;
        let mut children: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("meta.json").is_file())
            .collect();
        children.sort();
        if children.is_empty() {
            return Err(CmdError::Data(Error::BadInput {
                path: input.display().to_string(),
                message: "no bundle found (missing meta.json)".into(),
            }));
        }
        dirs.extend(children);
    }
    Ok(dirs)
}

fn format_f64(v: f64) -> String {
    if v == f64::INFINITY {
        String::new() // sentinel serializes as an empty field
    } else {
        format!("{v}")
    }
}

pub(crate) const PARAMS_HEADER: [&str; 9] = [
    "location_id",
    "d_m",
    "los",
    "view",
    "pl_db",
    "rmsds_ns",
    "as_tx",
    "as_rx",
    "k1_db",
];

fn params_csv(rows: &[CondensedParams]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(PARAMS_HEADER).expect("csv header");
    for r in rows {
        w.write_record([
            r.location_id.clone(),
            format!("{}", r.distance_m),
            r.los.as_str().to_string(),
            r.view.as_str().to_string(),
            format!("{}", r.pl_db),
            format!("{}", r.rmsds_s * 1e9),
            format!("{}", r.as_tx),
            format!("{}", r.as_rx),
            format_f64(r.kappa1_db),
        ])
        .expect("csv row");
    }
    w.into_inner().expect("csv flush")
}

fn read_params_csv(path: &Path) -> Result<Vec<CondensedParams>> {
    let bad = |message: String| Error::BadInput {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let expected: Vec<&str> = PARAMS_HEADER.to_vec();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(bad(format!(
            "unexpected header {:?}, expected {:?}",
            headers, expected
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |k: usize| rec.get(k).unwrap_or("").to_string();
        let num = |k: usize, name: &str| -> Result<f64> {
            field(k)
                .parse::<f64>()
                .map_err(|_| bad(format!("row {}: bad {name} value {:?}", i + 2, field(k))))
        };
        let k1 = match field(8).as_str() {
            "" => f64::INFINITY,
            s => s
                .parse::<f64>()
                .map_err(|_| bad(format!("row {}: bad k1_db value {s:?}", i + 2)))?,
        };
        rows.push(CondensedParams {
            location_id: field(0),
            distance_m: num(1, "d_m")?,
            los: field(2)
                .parse()
                .map_err(|e| bad(format!("row {}: {e}", i + 2)))?,
            view: field(3)
                .parse()
                .map_err(|e| bad(format!("row {}: {e}", i + 2)))?,
            pl_db: num(4, "pl_db")?,
            rmsds_s: num(5, "rmsds_ns")? * 1e-9,
            as_tx: num(6, "as_tx")?,
            as_rx: num(7, "as_rx")?,
            kappa1_db: k1,
        });
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn cmd_process(
    bundles: &[PathBuf],
    out: &Path,
    pdp_csv: Option<&Path>,
    aps_csv: Option<&Path>,
    tau_gate_ns: Option<f64>,
    noise_margin_db: Option<f64>,
    osf: Option<usize>,
    ds_window: Option<&str>,
    whole_pdp_omni: bool,
) -> CmdResult<()> {
    let mut opts = CondenseOptions::default();
    if let Some(ns) = tau_gate_ns {
        if !(ns > 0.0) {
            return Err(usage(format!("tau_gate_ns must be > 0, got {ns}")));
        }
        opts.pl.tau_gate_s = ns * 1e-9;
        opts.ds.tau_gate_s = ns * 1e-9;
    }
    if let Some(m) = noise_margin_db {
        opts.pl.noise_margin_db = m;
        opts.ds.noise_margin_db = m;
    }
    if let Some(f) = osf {
        opts.ds.oversample_factor = f;
        opts.ds.validate().map_err(|e| usage(e.to_string()))?;
    }
    if let Some(w) = ds_window {
        opts.ds.window = match w.to_ascii_lowercase().as_str() {
            "rectangular" | "rect" => Window::Rectangular,
            "hann" => Window::Hann,
            other => return Err(usage(format!("ds_window: unknown window {other:?}"))),
        };
    }
    if whole_pdp_omni {
        opts.azimuth_selection = AzimuthSelection::WholePdp;
    }

    let dirs = resolve_bundle_dirs(bundles)?;
    if (pdp_csv.is_some() || aps_csv.is_some()) && dirs.len() != 1 {
        return Err(usage(format!(
            "pdp_csv/aps_csv exports need exactly one bundle, got {}",
            dirs.len()
        )));
    }

    let mut rows = Vec::with_capacity(dirs.len() * 2);
    for dir in &dirs {
        let bundle = load_bundle(dir)?;
        let products = condense_location_products(&bundle, &opts)?;

        if let Some(path) = pdp_csv {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["delay_ns", "omni_power", "max_dir_power"]).expect("csv");
            for i in 0..products.omni_ds_pdp.n_bins() {
                w.write_record([
                    format!("{}", products.omni_ds_pdp.delay_at(i) * 1e9),
                    format!("{}", products.omni_ds_pdp.power_lin[i]),
                    format!("{}", products.maxdir_ds_pdp.power_lin[i]),
                ])
                .expect("csv");
            }
            write_atomic(path, &w.into_inner().expect("csv flush"))?;
        }
        if let Some(path) = aps_csv {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["end", "az_deg", "power_lin"]).expect("csv");
            for end in [End::Tx, End::Rx] {
                let aps = marginal_aps(&products.ddaps, end);
                let name = match end {
                    End::Tx => "tx",
                    End::Rx => "rx",
                };
                for (az, p) in aps.az_deg.iter().zip(aps.power_lin.iter()) {
                    w.write_record([name.to_string(), format!("{az}"), format!("{p}")])
                        .expect("csv");
                }
            }
            write_atomic(path, &w.into_inner().expect("csv flush"))?;
        }

        rows.push(products.omni);
        rows.push(products.max_dir);
    }
    write_atomic(out, &params_csv(&rows))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

fn group_rows(
    rows: &[CondensedParams],
    los: LosCondition,
    view: View,
) -> Vec<&CondensedParams> {
    rows.iter()
        .filter(|r| r.los == los && r.view == view)
        .collect()
}

fn pl_samples(rows: &[&CondensedParams]) -> Vec<Sample2D> {
    rows.iter()
        .map(|r| Sample2D {
            d_m: r.distance_m,
            y: r.pl_db,
            location_id: r.location_id.clone(),
        })
        .collect()
}

fn fit_view(
    rows: &[&CondensedParams],
    n_bins: usize,
    weighted_primary: bool,
    what: &str,
) -> Result<ViewModel> {
    if rows.len() < 3 {
        return Err(Error::TooFewSamples {
            what: "model fit group",
            got: rows.len(),
            need: 3,
        });
    }
    let pl = pl_samples(rows);
    let w_fit = weighted_fit(&pl, n_bins, SlopeScale::X10)?;
    let o_fit = ols_fit(&pl, SlopeScale::X10)?;
    let sigma_of = |fit: &LinearFit| -> Result<f64> {
        Ok(fit_normal(&shadowing_residuals(&pl, fit))?.sigma)
    };
    let (primary, primary_sigma) = if weighted_primary {
        (&w_fit, sigma_of(&w_fit)?)
    } else {
        (&o_fit, sigma_of(&o_fit)?)
    };
    let ols_sigma = sigma_of(&o_fit)?;

    // delay spread: dB domain (10 log10 of seconds)
    let ds_db_samples: Vec<Sample2D> = rows
        .iter()
        .map(|r| Sample2D {
            d_m: r.distance_m,
            y: 10.0 * r.rmsds_s.log10(),
            location_id: r.location_id.clone(),
        })
        .collect();
    let ds_linear = regression(&ds_db_samples, n_bins, weighted_primary)?;
    let (ds_static, _) =
        fit_lognormal_db(&rows.iter().map(|r| r.rmsds_s).collect::<Vec<_>>(), DbRule::Power10)?;

    // kappa1: finite dB values; +inf sentinels are excluded with a count
    let k1_linear_db: Vec<f64> = rows.iter().map(|r| r.kappa1_db).collect();
    let k1_lin: Vec<f64> = k1_linear_db.iter().map(|db| 10f64.powf(db / 10.0)).collect();
    let (k1_static, excluded) = fit_lognormal_db(&k1_lin, DbRule::Power10)?;
    if excluded > 0 {
        eprintln!("note: {what}: excluded {excluded} single-peak (+inf) kappa1 value(s) from the fit");
    }
    let k1_samples: Vec<Sample2D> = rows
        .iter()
        .filter(|r| r.kappa1_db.is_finite())
        .map(|r| Sample2D {
            d_m: r.distance_m,
            y: r.kappa1_db,
            location_id: r.location_id.clone(),
        })
        .collect();
    let k1_linear = regression(&k1_samples, n_bins, weighted_primary)?;

    Ok(ViewModel {
        pl: PlModel {
            alpha_db: primary.alpha,
            beta: primary.beta,
            sigma_shadow_db: primary_sigma,
            ols: PlOls {
                alpha_db: o_fit.alpha,
                beta: o_fit.beta,
                sigma_shadow_db: ols_sigma,
            },
        },
        ds: TrendModel {
            static_: NormalParams {
                mu: ds_static.mu,
                sigma: ds_static.sigma,
            },
            linear: ds_linear,
        },
        k1: TrendModel {
            static_: NormalParams {
                mu: k1_static.mu,
                sigma: k1_static.sigma,
            },
            linear: k1_linear,
        },
    })
}

fn regression(samples: &[Sample2D], n_bins: usize, weighted: bool) -> Result<LinearParams> {
    let fit = if weighted {
        weighted_fit(samples, n_bins, SlopeScale::X1)?
    } else {
        ols_fit(samples, SlopeScale::X1)?
    };
    Ok(LinearParams {
        alpha: fit.alpha,
        beta: fit.beta,
    })
}

fn fit_condition(
    rows: &[CondensedParams],
    los: LosCondition,
    n_bins: usize,
    weighted_primary: bool,
) -> Result<ConditionModel> {
    let omni_rows = group_rows(rows, los, View::Omni);
    let max_rows = group_rows(rows, los, View::MaxDir);
    let omni = fit_view(&omni_rows, n_bins, weighted_primary, &format!("{} omni", los.as_str()))?;
    let max_dir = fit_view(
        &max_rows,
        n_bins,
        weighted_primary,
        &format!("{} max_dir", los.as_str()),
    )?;

    // angular spreads are view-independent; fit them from the omni rows
    let as_fit = |pick: fn(&CondensedParams) -> f64| -> Result<NormalParams> {
        let vals: Vec<f64> = omni_rows.iter().map(|r| pick(r)).collect();
        let (fit, _) = fit_lognormal_db(&vals, DbRule::Log10)?;
        Ok(NormalParams {
            mu: fit.mu,
            sigma: fit.sigma,
        })
    };
    Ok(ConditionModel {
        omni,
        max_dir,
        as_tx: as_fit(|r| r.as_tx)?,
        as_rx: as_fit(|r| r.as_rx)?,
    })
}

fn cmd_fit(params: &Path, out: &Path, n_bins: usize, method: &str) -> CmdResult<()> {
    ensure_distinct(params, out, "fit")?;
    let weighted_primary = match method.to_ascii_lowercase().as_str() {
        "weighted" => true,
        "ols" => false,
        other => return Err(usage(format!("method: expected ols|weighted, got {other:?}"))),
    };
    if n_bins == 0 {
        return Err(usage("n_bins must be >= 1"));
    }
    let rows = read_params_csv(params)?;
    if rows.is_empty() {
        return Err(CmdError::Data(Error::BadInput {
            path: params.display().to_string(),
            message: "no rows".into(),
        }));
    }
    let dmin = rows.iter().map(|r| r.distance_m).fold(f64::INFINITY, f64::min);
    let dmax = rows.iter().map(|r| r.distance_m).fold(f64::NEG_INFINITY, f64::max);

    let model = ChannelModel {
        schema_version: "1.0".into(),
        provenance: format!(
            "fitted by canyon-sounder fit (method {}, n_bins {n_bins}) from {} rows in {}",
            if weighted_primary { "weighted" } else { "ols" },
            rows.len(),
            params.display()
        ),
        notes: Vec::new(),
        valid_range_m: [dmin, dmax],
        los: fit_condition(&rows, LosCondition::Los, n_bins, weighted_primary)?,
        nlos: fit_condition(&rows, LosCondition::Nlos, n_bins, weighted_primary)?,
    };
    model.save(out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

fn parse_distances(spec: &str) -> CmdResult<Vec<f64>> {
    let bad = |msg: String| usage(format!("distances {spec:?}: {msg}"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let start: f64 = parts[0].parse().map_err(|_| bad("bad start".into()))?;
        let step: f64 = parts[1].parse().map_err(|_| bad("bad step".into()))?;
        let stop: f64 = parts[2].parse().map_err(|_| bad("bad stop".into()))?;
        if !(step > 0.0) {
            return Err(bad("step must be > 0".into()));
        }
        if stop < start {
            return Err(bad("stop must be >= start".into()));
        }
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let d = start + step * k as f64;
            if d > stop + 1e-9 {
                break;
            }
            out.push(d);
            k += 1;
        }
        return Ok(out);
    }
    if parts.len() == 1 {
        let out: std::result::Result<Vec<f64>, _> =
            spec.split(',').map(|s| s.trim().parse::<f64>()).collect();
        return out.map_err(|_| bad("expected start:step:stop or a comma list".into()));
    }
    Err(bad("expected start:step:stop or a comma list".into()))
}

#[allow(clippy::too_many_arguments)]
fn cmd_sample(
    model_path: &Path,
    distances: &str,
    n: usize,
    seed: u64,
    out: &Path,
    condition: &str,
    view: &str,
    mode: &str,
) -> CmdResult<()> {
    ensure_distinct(model_path, out, "sample")?;
    if n == 0 {
        return Err(usage("n must be >= 1"));
    }
    let condition: LosCondition = condition.parse().map_err(usage)?;
    let view: View = view.parse().map_err(usage)?;
    let mode: SampleMode = mode.parse().map_err(usage)?;
    let base = parse_distances(distances)?;
    if base.is_empty() {
        return Err(usage("distances: empty list"));
    }
    let model = ChannelModel::load(model_path)?;
    let [lo, hi] = model.valid_range_m;
    for &d in &base {
        if d < lo || d > hi {
            eprintln!(
                "warning: distance {d} m outside the model's fitted range [{lo}, {hi}] m"
            );
        }
    }
    // n realizations per distance
    let expanded: Vec<f64> = base
        .iter()
        .flat_map(|&d| std::iter::repeat_n(d, n))
        .collect();
    let batch = sample_links(&model, &expanded, condition, view, mode, seed)?;
    if batch.clamped_as > 0 {
        eprintln!(
            "note: {} angular-spread draw(s) clamped into (0, sqrt(2))",
            batch.clamped_as
        );
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "d_m", "condition", "view", "pl_db", "shadow_db", "ds_ns", "as_tx", "as_rx", "k1_db",
        "seed",
    ])
    .expect("csv");
    for l in &batch.links {
        w.write_record([
            format!("{}", l.d_m),
            l.condition.as_str().to_string(),
            l.view.as_str().to_string(),
            format!("{}", l.pl_db),
            format!("{}", l.shadow_db),
            format!("{}", l.ds_s * 1e9),
            format!("{}", l.as_tx),
            format!("{}", l.as_rx),
            format!("{}", l.k1_db),
            l.seed_record.clone(),
        ])
        .expect("csv");
    }
    write_atomic(out, &w.into_inner().expect("csv flush"))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

fn write_ecdf(dir: &Path, name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Ok(());
    }
    let steps = crate::statmodel::ecdf(values)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["value", "probability"]).expect("csv");
    for (v, p) in steps {
        w.write_record([format!("{v}"), format!("{p}")]).expect("csv");
    }
    write_atomic(&dir.join(format!("ecdf_{name}.csv")), &w.into_inner().expect("csv flush"))
}

fn write_line(dir: &Path, name: &str, alpha: f64, slope10: f64, d_range: (f64, f64)) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["d_m", "y"]).expect("csv");
    let n = 25;
    for i in 0..n {
        let d = d_range.0 + (d_range.1 - d_range.0) * i as f64 / (n - 1) as f64;
        let y = alpha + slope10 * d.log10();
        w.write_record([format!("{d}"), format!("{y}")]).expect("csv");
    }
    write_atomic(&dir.join(format!("regline_{name}.csv")), &w.into_inner().expect("csv flush"))
}

fn write_scatter(dir: &Path, name: &str, pts: &[(f64, f64)]) -> Result<()> {
    if pts.is_empty() {
        return Ok(());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["d_m", "y"]).expect("csv");
    for (d, y) in pts {
        w.write_record([format!("{d}"), format!("{y}")]).expect("csv");
    }
    write_atomic(&dir.join(format!("scatter_{name}.csv")), &w.into_inner().expect("csv flush"))
}

fn cmd_report(params: &Path, model_path: &Path, out: &Path) -> CmdResult<()> {
    let rows = read_params_csv(params)?;
    let model = ChannelModel::load(model_path)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out.display().to_string(), e))?;
    let d_range = (model.valid_range_m[0], model.valid_range_m[1]);

    for los in [LosCondition::Los, LosCondition::Nlos] {
        for view in [View::Omni, View::MaxDir] {
            let group = group_rows(&rows, los, view);
            if group.is_empty() {
                continue;
            }
            let tag = format!("{}_{}", los.as_str(), view.as_str());
            let vm = model.view(los, view);

            let pl: Vec<f64> = group.iter().map(|r| r.pl_db).collect();
            write_ecdf(out, &format!("pl_{tag}"), &pl)?;
            write_scatter(
                out,
                &format!("pl_{tag}"),
                &group.iter().map(|r| (r.distance_m, r.pl_db)).collect::<Vec<_>>(),
            )?;
            write_line(out, &format!("pl_{tag}"), vm.pl.alpha_db, 10.0 * vm.pl.beta, d_range)?;

            let ds_db: Vec<f64> = group.iter().map(|r| 10.0 * r.rmsds_s.log10()).collect();
            write_ecdf(out, &format!("ds_db_{tag}"), &ds_db)?;
            write_scatter(
                out,
                &format!("ds_db_{tag}"),
                &group
                    .iter()
                    .map(|r| (r.distance_m, 10.0 * r.rmsds_s.log10()))
                    .collect::<Vec<_>>(),
            )?;
            write_line(out, &format!("ds_db_{tag}"), vm.ds.linear.alpha, vm.ds.linear.beta, d_range)?;

            let k1: Vec<f64> = group
                .iter()
                .filter(|r| r.kappa1_db.is_finite())
                .map(|r| r.kappa1_db)
                .collect();
            write_ecdf(out, &format!("k1_db_{tag}"), &k1)?;
            write_scatter(
                out,
                &format!("k1_db_{tag}"),
                &group
                    .iter()
                    .filter(|r| r.kappa1_db.is_finite())
                    .map(|r| (r.distance_m, r.kappa1_db))
                    .collect::<Vec<_>>(),
            )?;
            write_line(out, &format!("k1_db_{tag}"), vm.k1.linear.alpha, vm.k1.linear.beta, d_range)?;
        }

        // view-independent angular spreads, from omni rows, in log10 units
        let omni = group_rows(&rows, los, View::Omni);
        if !omni.is_empty() {
            let tx: Vec<f64> = omni.iter().map(|r| r.as_tx.log10()).collect();
            let rx: Vec<f64> = omni.iter().map(|r| r.as_rx.log10()).collect();
            write_ecdf(out, &format!("as_tx_{}", los.as_str()), &tx)?;
            write_ecdf(out, &format!("as_rx_{}", los.as_str()), &rx)?;
        }
    }
    Ok(())
}
