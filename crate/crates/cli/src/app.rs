//! Command-line surface: argument parsing and dispatch to the pipelines.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, Parser, Subcommand, ValueEnum};
use minosc_core::analysis::{detect_extrema, instantaneous_frequency, write_interval_csv};
use minosc_core::integrator::{read_binary, InitialCondition, IntegrationConfig};
use minosc_core::model::{fmt_f64, ModelParams, RateConstant, Species};
use minosc_core::noise::{build_spatial_covariance, temporal_realization, OUConfig, SpatialSampler};
use minosc_core::spectral::{stability_scan_with_progress, write_contour_csv, ScanAxis, ScanField, ScanPlane};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::experiment::OutputDir;
use crate::report::{run_report, Figure, ReportOptions};
use crate::spec::{read_config, ExperimentSpec, ModelSpec, NoiseSpec, SpatialField};
use crate::verify::{run_suite, QUICK_CRITERIA};

#[derive(Parser, Debug)]
#[command(name = "minosc", version, about = "Min-protein oscillations under extrinsic noise")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate the model, optionally perturbed, and report the oscillation.
    Simulate(SimulateArgs),
    /// Max Re λ and period of the linearization over a plane of two rate constants.
    Scan(ScanArgs),
    /// Write OU traces or spatial fields to CSV for later replay.
    NoiseGen(NoiseGenArgs),
    /// Extrema and frequency shifts of a stored probe CSV or binary dump.
    Analyze(AnalyzeArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
    /// Emit the data behind one figure.
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Named parameter preset.
    #[arg(long, default_value = minosc_core::model::PRESET_HUANG_1D)]
    pub preset: String,
    /// `key = value` parameter file; replaces --preset.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Parameter override KEY=VALUE, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl ModelArgs {
    pub fn to_spec(&self) -> CliResult<ModelSpec> {
        let mut overrides = BTreeMap::new();
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("expected KEY=VALUE, got '{kv}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("'{v}' is not a number")))?;
            overrides.insert(k.trim().to_string(), v);
        }
        match &self.params {
            Some(path) => {
                let mut params = ModelParams::from_config_file(path).map_err(|e| match e {
                    minosc_core::Error::Parse { location, message } => minosc_core::Error::Parse {
                        location: format!("{} {location}", path.display()),
                        message,
                    },
                    other => other,
                })?;
                for (k, v) in &overrides {
                    params.set_key(k, *v)?;
                }
                Ok(ModelSpec::Inline { params })
            }
            None => Ok(ModelSpec::Preset {
                name: self.preset.clone(),
                overrides,
            }),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct IntegrationArgs {
    #[arg(long, default_value_t = 2000.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = minosc_core::integrator::DEFAULT_DT)]
    pub dt: f64,
    /// Grid intervals N (N + 1 points).
    #[arg(long, default_value_t = minosc_core::integrator::DEFAULT_INTERVALS)]
    pub intervals: usize,
    #[arg(long, default_value_t = 100)]
    pub record_stride: usize,
    #[arg(long, default_value_t = minosc_core::integrator::DEFAULT_TRANSIENT)]
    pub transient: f64,
    /// Initial mode-one amplitude relative to the membrane MinD steady state.
    #[arg(long, default_value_t = minosc_core::integrator::DEFAULT_RELATIVE_AMPLITUDE)]
    pub amplitude: f64,
}

impl IntegrationArgs {
    pub fn to_config(&self) -> IntegrationConfig {
        IntegrationConfig {
            intervals: self.intervals,
            dt: self.dt,
            t_end: self.t_end,
            record_stride: self.record_stride,
            initial_condition: InitialCondition::ModeOne {
                relative_amplitude: self.amplitude,
            },
            transient: self.transient,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NoiseChoice {
    None,
    Temporal,
    Spatial,
    Replay,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// JSON spec or manifest; its entries override the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "run")]
    pub name: String,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub integration: IntegrationArgs,
    #[arg(long, value_enum, default_value_t = NoiseChoice::None)]
    pub noise: NoiseChoice,
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    /// OU relaxation time (s).
    #[arg(long, default_value_t = 10.0)]
    pub tau: f64,
    /// OU diffusion constant; defaults to 2 ln2/τ.
    #[arg(long)]
    pub c: Option<f64>,
    /// OU sampling step; defaults to --dt.
    #[arg(long)]
    pub dt_sample: Option<f64>,
    /// Correlation half-width of random spatial fields.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Deterministic spatial field cos(ωπx/L); used when --alpha is absent.
    #[arg(long, default_value_t = 2)]
    pub mode: usize,
    #[arg(long, default_value_t = 1.0)]
    pub mode_amplitude: f64,
    /// Noise CSV written by noise-gen.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub ensemble: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Takes precedence over the config file.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Predict spatial shifts with Ĝ₁₁I ≈ θ₁.
    #[arg(long)]
    pub g11_shortcut: bool,
    #[arg(long)]
    pub gnuplot: bool,
}

impl SimulateArgs {
    pub fn to_spec(&self) -> CliResult<ExperimentSpec> {
        let noise = match self.noise {
            NoiseChoice::None => NoiseSpec::None,
            NoiseChoice::Temporal => NoiseSpec::Temporal {
                epsilon: self.eps,
                tau: self.tau,
                c: self.c,
                dt_sample: self.dt_sample,
            },
            NoiseChoice::Spatial => NoiseSpec::Spatial {
                epsilon: self.eps,
                field: match self.alpha {
                    Some(alpha) => SpatialField::Random { alpha },
                    None => SpatialField::Mode {
                        omega: self.mode,
                        amplitude: self.mode_amplitude,
                    },
                },
            },
            NoiseChoice::Replay => NoiseSpec::Replay {
                epsilon: self.eps,
                path: self
                    .replay
                    .clone()
                    .ok_or_else(|| CliError::usage("--noise replay needs --replay FILE"))?,
            },
        };
        let mut spec = ExperimentSpec {
            name: self.name.clone(),
            model: self.model.to_spec()?,
            integration: self.integration.to_config(),
            noise,
            ensemble: self.ensemble,
            seed: self.seed,
            output_dir: self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out")),
            g11_shortcut: self.g11_shortcut,
            gnuplot: self.gnuplot,
        };
        if let Some(path) = &self.config {
            spec = spec.overridden_by(read_config(path)?)?;
            if let Some(dir) = &self.output_dir {
                spec.output_dir = dir.clone();
            }
        }
        Ok(spec)
    }
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "sigma_dD")]
    pub a: RateConstant,
    #[arg(long)]
    pub a_min: f64,
    #[arg(long)]
    pub a_max: f64,
    #[arg(long, default_value_t = 41)]
    pub a_points: usize,
    #[arg(long, default_value = "sigma_E")]
    pub b: RateConstant,
    #[arg(long)]
    pub b_min: f64,
    #[arg(long)]
    pub b_max: f64,
    #[arg(long, default_value_t = 41)]
    pub b_points: usize,
    /// Period isolines to extract (s).
    #[arg(long, value_delimiter = ',')]
    pub period_levels: Vec<f64>,
    #[arg(long, default_value = "scan")]
    pub output_dir: PathBuf,
    #[arg(long)]
    pub gnuplot: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanSpec {
    pub model: ModelSpec,
    pub plane: ScanPlane,
    pub period_levels: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NoiseGenKind {
    Temporal,
    Spatial,
}

#[derive(Args, Debug)]
pub struct NoiseGenArgs {
    #[arg(long, value_enum)]
    pub kind: NoiseGenKind,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub realizations: usize,
    #[arg(long, default_value_t = 10.0)]
    pub tau: f64,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, default_value_t = minosc_core::integrator::DEFAULT_DT)]
    pub dt_sample: f64,
    #[arg(long, default_value_t = 2000.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    /// Recorded in the field header; fields themselves are unscaled.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = minosc_core::integrator::DEFAULT_INTERVALS)]
    pub intervals: usize,
    #[arg(long, default_value = "noise")]
    pub output_dir: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoiseGenSpec {
    pub kind: String,
    pub seed: u64,
    pub realizations: usize,
    pub ou: Option<OUConfig>,
    pub t_end: f64,
    pub alpha: Option<f64>,
    pub epsilon: f64,
    pub intervals: usize,
    pub length: f64,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// probe.csv or trajectory.bin from a simulate run.
    #[arg(long)]
    pub input: PathBuf,
    /// Domain length for binary input; defaults to the preset's.
    #[arg(long)]
    pub length: Option<f64>,
    /// Reference period (s); defaults to the input's own mean period.
    #[arg(long)]
    pub period_ref: Option<f64>,
    #[arg(long, default_value_t = minosc_core::integrator::DEFAULT_TRANSIENT)]
    pub transient: f64,
    /// Use the x = L probe instead of x = 0.
    #[arg(long)]
    pub right: bool,
    /// Minimum extrema separation (s); defaults to a quarter period.
    #[arg(long)]
    pub min_sep: Option<f64>,
    #[arg(long, default_value = "analysis")]
    pub output_dir: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalyzeSpec {
    pub input: PathBuf,
    pub period_ref: Option<f64>,
    pub transient: f64,
    pub right: bool,
    pub min_sep: Option<f64>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Eigen, table, Jacobian and noise-formula checks only.
    #[arg(long)]
    pub quick: bool,
    /// Run the random spatial ensemble at 200 realizations against the reference values.
    #[arg(long)]
    pub full_scale: bool,
    /// `key = value` parameter file to verify instead of the preset.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Explicit criterion numbers.
    #[arg(long, value_delimiter = ',')]
    pub criteria: Vec<u8>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(value_enum)]
    pub figure: FigureArg,
    /// JSON overrides for the report options.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub integration: IntegrationArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub realizations: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub taus: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    pub kappat_dt: f64,
    #[arg(long, default_value_t = 100)]
    pub trace_stride: usize,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub gnuplot: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FigureArg {
    #[value(name = "fig-temp-perturb")]
    TempPerturb,
    #[value(name = "fig-temp-auto")]
    TempAuto,
    #[value(name = "fig-kappat")]
    Kappat,
    #[value(name = "fig-spatial-rand")]
    SpatialRand,
    #[value(name = "fig-kymograph")]
    Kymograph,
}

impl From<FigureArg> for Figure {
    fn from(f: FigureArg) -> Self {
        match f {
            FigureArg::TempPerturb => Figure::TempPerturb,
            FigureArg::TempAuto => Figure::TempAuto,
            FigureArg::Kappat => Figure::Kappat,
            FigureArg::SpatialRand => Figure::SpatialRand,
            FigureArg::Kymograph => Figure::Kymograph,
        }
    }
}

impl ReportArgs {
    pub fn to_options(&self) -> CliResult<ReportOptions> {
        let figure = Figure::from(self.figure);
        if figure != Figure::Kymograph && self.seed.is_none() && self.config.is_none() {
            return Err(CliError::usage(format!(
                "{} is an ensemble report; --seed is required",
                figure.name()
            )));
        }
        let opts = ReportOptions {
            figure,
            model: self.model.to_spec()?,
            integration: self.integration.to_config(),
            seed: self.seed.unwrap_or(0),
            realizations: self.realizations.unwrap_or(figure.default_realizations()),
            taus: if self.taus.is_empty() {
                figure.default_taus()
            } else {
                self.taus.clone()
            },
            epsilons: if self.eps.is_empty() {
                figure.default_epsilons()
            } else {
                self.eps.clone()
            },
            alpha: self.alpha,
            kappat_dt: self.kappat_dt,
            trace_stride: self.trace_stride,
            output_dir: self.output_dir.clone().unwrap_or_else(|| PathBuf::from(figure.name())),
            gnuplot: self.gnuplot,
        };
        let Some(path) = &self.config else {
            return Ok(opts);
        };
        let mut base = serde_json::to_value(&opts).map_err(|e| CliError::Core(e.into()))?;
        let over = match read_config(path)? {
            serde_json::Value::Object(mut m) if m.contains_key("artifact_version") => {
                m.remove("spec").unwrap_or_default()
            }
            v => v,
        };
        if let (Some(b), serde_json::Value::Object(o)) = (base.as_object_mut(), over) {
            for (k, v) in o {
                b.insert(k, v);
            }
        }
        let mut merged: ReportOptions =
            serde_json::from_value(base).map_err(|e| CliError::usage(format!("invalid report options: {e}")))?;
        if let Some(dir) = &self.output_dir {
            merged.output_dir = dir.clone();
        }
        Ok(merged)
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let spec = args.to_spec()?;
    let s = crate::experiment::simulate(&spec)?;
    println!(
        "period {:.4} s (eigen {:.4} s)",
        s.period_s,
        2.0 * std::f64::consts::PI / s.theta1_eigen
    );
    println!("max relative drift {:.3e}", s.max_relative_drift);
    if let Some(t) = &s.tracking {
        println!(
            "tracking: rms discrepancy/signal {:.4}, slope {:.4} over {} intervals",
            t.relative_discrepancy, t.slope, t.intervals
        );
    }
    if let Some(m) = s.mean_shift {
        println!("mean frequency shift {m:.6}");
    }
    if let Some(sp) = &s.spatial {
        if sp.realizations > 1 {
            println!("s_x/theta1 {:.5} vs theory {:.5}", sp.s_x, sp.theory);
        }
    }
    println!("outputs in {}", spec.output_dir.display());
    Ok(())
}

pub fn cmd_scan(args: &ScanArgs) -> CliResult<()> {
    let model = args.model.to_spec()?;
    let params = model.resolve()?;
    let plane = ScanPlane {
        a: ScanAxis {
            rate: args.a,
            min: args.a_min,
            max: args.a_max,
            points: args.a_points,
        },
        b: ScanAxis {
            rate: args.b,
            min: args.b_min,
            max: args.b_max,
            points: args.b_points,
        },
    };
    let rows = plane.a.values()?.len();
    let done = AtomicUsize::new(0);
    let grid = stability_scan_with_progress(&params, &plane, |_| {
        let k = done.fetch_add(1, Ordering::Relaxed) + 1;
        log::info!("scan row {k}/{rows}");
    })?;
    let invalid = grid.cells.iter().filter(|c| !c.valid).count();
    let mut out = OutputDir::create(&args.output_dir)?;
    let (an, bn) = (args.a.name(), args.b.name());
    out.write_with("scan.csv", |w| grid.write_csv(w))?;
    let zero = grid.contour(ScanField::MaxReLambda, 0.0);
    out.write_with("contour_zero.csv", |w| write_contour_csv(&zero, an, bn, w))?;
    for level in &args.period_levels {
        let segs = grid.contour(ScanField::Period, *level);
        out.write_with(&format!("contour_period_{level}.csv"), |w| {
            write_contour_csv(&segs, an, bn, w)
        })?;
    }
    if args.gnuplot {
        out.write_text(
            "scan.gp",
            &format!(
                "set datafile separator ','\nset xlabel '{an}'\nset ylabel '{bn}'\nplot 'contour_zero.csv' using 2:3 with lines title 'Re lambda = 0'\n"
            ),
        )?;
    }
    let spec = ScanSpec {
        model,
        plane,
        period_levels: args.period_levels.clone(),
    };
    out.finish("scan", &spec, &params)?;
    println!(
        "{} cells, {} invalid, {} zero-contour segments",
        grid.cells.len(),
        invalid,
        zero.len()
    );
    if invalid > 0 {
        log::warn!("{invalid} cells had no physical fixed point or no eigendecomposition");
    }
    Ok(())
}

pub fn cmd_noise_gen(args: &NoiseGenArgs) -> CliResult<()> {
    let model = args.model.to_spec()?;
    let params = model.resolve()?;
    let mut out = OutputDir::create(&args.output_dir)?;
    let mut spec = NoiseGenSpec {
        kind: format!("{:?}", args.kind).to_lowercase(),
        seed: args.seed,
        realizations: args.realizations,
        ou: None,
        t_end: args.t_end,
        alpha: None,
        epsilon: args.eps,
        intervals: args.intervals,
        length: params.length,
    };
    match args.kind {
        NoiseGenKind::Temporal => {
            let mut ou = OUConfig::with_ln2_variance(args.tau, args.seed, args.dt_sample);
            if let Some(c) = args.c {
                ou.c = c;
            }
            spec.ou = Some(ou);
            for r in 0..args.realizations as u64 {
                let real = temporal_realization(&ou, args.t_end, r)?;
                out.write_with(&format!("temporal_{r}.csv"), |w| real.write_csv(w))?;
            }
        }
        NoiseGenKind::Spatial => {
            spec.alpha = Some(args.alpha);
            let sampler = SpatialSampler::new(build_spatial_covariance(args.alpha, params.length, args.intervals)?)?;
            for r in 0..args.realizations as u64 {
                let real = sampler.sample(args.eps, args.seed, r);
                out.write_with(&format!("spatial_{r}.csv"), |w| real.write_csv(w))?;
            }
        }
    }
    out.finish("noise-gen", &spec, &params)?;
    println!(
        "wrote {} realizations to {}",
        args.realizations,
        args.output_dir.display()
    );
    Ok(())
}

fn read_probe_csv(path: &Path, right: bool) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut t = Vec::new();
    let mut v = Vec::new();
    for (k, line) in text.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| -> CliResult<f64> {
            fields.get(i).and_then(|s| s.trim().parse().ok()).ok_or_else(|| {
                CliError::Core(minosc_core::Error::Parse {
                    location: format!("{}:{}", path.display(), k + 1),
                    message: format!("column {} is missing or not a number", i + 1),
                })
            })
        };
        t.push(parse(0)?);
        v.push(parse(if right { 2 } else { 1 })?);
    }
    Ok((t, v))
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> CliResult<()> {
    let bytes = fs::read(&args.input).map_err(|e| CliError::io(&args.input, e))?;
    let (times, values) = if bytes.starts_with(b"MOSC") {
        let length = args.length.unwrap_or(ModelParams::huang2003_1d().length);
        let frames = read_binary(&bytes, length)?;
        let idx = Species::MemD.index();
        let pick = |f: &minosc_core::model::FieldState| {
            let i = if args.right { f.values.len() - 1 } else { 0 };
            f.values[i][idx]
        };
        (
            frames.iter().map(|f| f.time).collect::<Vec<_>>(),
            frames.iter().map(pick).collect::<Vec<_>>(),
        )
    } else {
        read_probe_csv(&args.input, args.right)?
    };
    let first = times.partition_point(|&t| t < args.transient - 1e-9);
    let record = detect_extrema(&times[first..], &values[first..], args.min_sep)?;
    let period = args.period_ref.unwrap_or_else(|| record.mean_period());
    let shifts = instantaneous_frequency(&record, 2.0 * std::f64::consts::PI / period)?;
    let mut out = OutputDir::create(&args.output_dir)?;
    out.write_with("extrema.csv", |w| {
        writeln!(w, "t,value,kind")?;
        for e in &record.extrema {
            writeln!(w, "{},{},{:?}", fmt_f64(e.time), fmt_f64(e.value), e.kind)?;
        }
        Ok(())
    })?;
    out.write_with("intervals.csv", |w| write_interval_csv(&shifts, None, w))?;
    let mean_shift = shifts.iter().map(|s| s.shift).sum::<f64>() / shifts.len().max(1) as f64;
    let summary = serde_json::json!({
        "mean_period_s": record.mean_period(),
        "period_ref_s": period,
        "extrema": record.extrema.len(),
        "mean_shift": mean_shift,
    });
    out.write_json("summary.json", &summary)?;
    let spec = AnalyzeSpec {
        input: args.input.clone(),
        period_ref: args.period_ref,
        transient: args.transient,
        right: args.right,
        min_sep: args.min_sep,
    };
    out.finish("analyze", &spec, &ModelParams::huang2003_1d())?;
    println!(
        "{} extrema, mean period {:.4} s, mean shift {:.6}",
        record.extrema.len(),
        record.mean_period(),
        mean_shift
    );
    Ok(())
}

pub fn cmd_verify(args: &VerifyArgs) -> CliResult<()> {
    let params = match &args.params {
        Some(p) => ModelParams::from_config_file(p).map_err(|e| match e {
            minosc_core::Error::Parse { location, message } => minosc_core::Error::Parse {
                location: format!("{} {location}", p.display()),
                message,
            },
            other => other,
        })?,
        None => ModelParams::huang2003_1d(),
    };
    let ids: Vec<u8> = if !args.criteria.is_empty() {
        args.criteria.clone()
    } else if args.quick {
        QUICK_CRITERIA.to_vec()
    } else {
        (1..=11).collect()
    };
    let scratch = std::env::temp_dir().join(format!("minosc-verify-{}", std::process::id()));
    let results = run_suite(&params, &ids, args.full_scale, &scratch);
    let _ = fs::remove_dir_all(&scratch);
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        return Err(CliError::Verify(failed));
    }
    Ok(())
}

pub fn cmd_report(args: &ReportArgs) -> CliResult<()> {
    let opts = args.to_options()?;
    let summary = run_report(&opts)?;
    println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
    println!("outputs in {}", opts.output_dir.display());
    Ok(())
}

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Scan(a) => cmd_scan(a),
        Command::NoiseGen(a) => cmd_noise_gen(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn run_from_args() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
