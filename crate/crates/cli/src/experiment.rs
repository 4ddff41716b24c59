//! Experiment pipelines shared by the subcommands, the report emitters and
//! the acceptance suite.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use minosc_core::analysis::{
    instantaneous_frequency, oscillation_record, ou_frequency_prediction, spatial_ensemble_summary,
    spatial_shift_report, write_interval_csv, IntervalShift, OscillationRecord, SpatialEnsembleSummary,
    SpatialShiftReport,
};
use minosc_core::integrator::{integrate, IntegrationConfig, Perturbation, TemporalTrace, Trajectory};
use minosc_core::model::{fmt_f64, grid_positions, ModelParams, RateSubset};
use minosc_core::noise::{
    build_spatial_covariance, temporal_realization, NoiseKind, NoiseRealization, OUConfig, SpatialSampler,
};
use minosc_core::spectral::{analyze_preset, g_hat_11, C64};
use minosc_core::Error as CoreError;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::spec::{ExperimentSpec, Manifest, NoiseSpec, SpatialField, ARTIFACT_VERSION};

/// The unperturbed run every perturbed measurement is compared against.
#[derive(Clone, Debug)]
pub struct Reference {
    pub trajectory: Trajectory,
    pub record: OscillationRecord,
    /// Mean same-kind extrema spacing after the transient (s).
    pub period: f64,
    /// 2π/period, the reference for per-interval shifts.
    pub theta1_ref: f64,
    /// Im λ of the oscillatory eigenvalue of H₁.
    pub theta1_eig: f64,
    /// Ĝ₁₁ with every rate constant perturbed.
    pub g11: C64,
}

impl Reference {
    pub fn g11_ratio(&self) -> f64 {
        self.g11.im / self.theta1_eig
    }
}

pub fn reference_run(params: &ModelParams, config: &IntegrationConfig) -> CliResult<Reference> {
    let trajectory = integrate(params, config, &Perturbation::none())?;
    let record = oscillation_record(&trajectory, false, None)?;
    let period = record.mean_period();
    let (_, report) = analyze_preset(params)?;
    let g11 = g_hat_11(params, RateSubset::all())?;
    Ok(Reference {
        trajectory,
        record,
        period,
        theta1_ref: 2.0 * PI / period,
        theta1_eig: report.theta1,
        g11,
    })
}

fn tag_realization(r: u64, e: CoreError) -> CoreError {
    match e {
        CoreError::NoOscillation(m) => CoreError::NoOscillation(format!("realization {r}: {m}")),
        CoreError::BlowUp(t) => {
            log::error!("realization {r} blew up");
            CoreError::BlowUp(t)
        }
        other => other,
    }
}

#[derive(Clone, Debug)]
pub struct TemporalRun {
    pub realization: u64,
    pub intervals: Vec<IntervalShift>,
    pub predicted: Vec<f64>,
    pub trace: TemporalTrace,
    pub max_drift: f64,
}

pub fn temporal_run(
    params: &ModelParams,
    config: &IntegrationConfig,
    trace: TemporalTrace,
    epsilon: f64,
    reference: &Reference,
    realization: u64,
) -> CliResult<TemporalRun> {
    let run = || -> minosc_core::Result<TemporalRun> {
        let traj = integrate(params, config, &Perturbation::temporal(epsilon, trace.clone()))?;
        let record = oscillation_record(&traj, false, Some(0.25 * reference.period))?;
        let intervals = instantaneous_frequency(&record, reference.theta1_ref)?;
        let predicted = ou_frequency_prediction(&trace, &intervals, epsilon)?;
        Ok(TemporalRun {
            realization,
            intervals,
            predicted,
            max_drift: traj.max_drift(),
            trace,
        })
    };
    run().map_err(|e| tag_realization(realization, e).into())
}

/// Realizations run in parallel and come back in realization order.
pub fn temporal_ensemble(
    params: &ModelParams,
    config: &IntegrationConfig,
    ou: &OUConfig,
    epsilon: f64,
    reference: &Reference,
    realizations: usize,
) -> CliResult<Vec<TemporalRun>> {
    (0..realizations as u64)
        .into_par_iter()
        .map(|r| {
            let noise = temporal_realization(ou, config.t_end, r)?;
            let trace = TemporalTrace::from_realization(&noise)?;
            temporal_run(params, config, trace, epsilon, reference, r)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct TrackingStats {
    pub intervals: usize,
    pub rms_signal: f64,
    pub rms_discrepancy: f64,
    /// rms_discrepancy / rms_signal.
    pub relative_discrepancy: f64,
    /// Least-squares slope of measured on predicted through the origin.
    pub slope: f64,
}

pub fn tracking_stats(runs: &[TemporalRun]) -> TrackingStats {
    let (mut d2, mut s2, mut cross, mut n) = (0.0, 0.0, 0.0, 0usize);
    for run in runs {
        for (iv, p) in run.intervals.iter().zip(&run.predicted) {
            d2 += (iv.shift - p).powi(2);
            s2 += p * p;
            cross += iv.shift * p;
            n += 1;
        }
    }
    let nf = n.max(1) as f64;
    TrackingStats {
        intervals: n,
        rms_signal: (s2 / nf).sqrt(),
        rms_discrepancy: (d2 / nf).sqrt(),
        relative_discrepancy: (d2 / s2).sqrt(),
        slope: cross / s2,
    }
}

#[derive(Clone, Debug)]
pub struct SpatialRun {
    pub realization: u64,
    pub kappa_x: Vec<f64>,
    pub report: SpatialShiftReport,
}

pub fn spatial_run(
    params: &ModelParams,
    config: &IntegrationConfig,
    kappa_x: Vec<f64>,
    epsilon: f64,
    reference: &Reference,
    g11_ratio: f64,
    realization: u64,
) -> CliResult<SpatialRun> {
    let run = || -> minosc_core::Result<SpatialRun> {
        let traj = integrate(params, config, &Perturbation::spatial(epsilon, kappa_x.clone()))?;
        let report = spatial_shift_report(&traj, &kappa_x, epsilon, reference.theta1_ref, g11_ratio)?;
        Ok(SpatialRun {
            realization,
            kappa_x,
            report,
        })
    };
    run().map_err(|e| tag_realization(realization, e).into())
}

pub fn mode_field(params: &ModelParams, intervals: usize, omega: usize, amplitude: f64) -> Vec<f64> {
    grid_positions(params.length, intervals)
        .iter()
        .map(|x| amplitude * (omega as f64 * PI * x / params.length).cos())
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub fn spatial_ensemble(
    params: &ModelParams,
    config: &IntegrationConfig,
    alpha: f64,
    epsilon: f64,
    seed: u64,
    realizations: usize,
    reference: &Reference,
    g11_ratio: f64,
) -> CliResult<(Vec<SpatialRun>, SpatialEnsembleSummary)> {
    let cov = build_spatial_covariance(alpha, params.length, config.intervals)?;
    let sampler = SpatialSampler::new(cov)?;
    let runs: Vec<SpatialRun> = (0..realizations as u64)
        .into_par_iter()
        .map(|r| {
            let field = sampler.sample(epsilon, seed, r).samples;
            spatial_run(params, config, field, epsilon, reference, g11_ratio, r)
        })
        .collect::<CliResult<_>>()?;
    let reports: Vec<SpatialShiftReport> = runs.iter().map(|r| r.report.clone()).collect();
    let summary = spatial_ensemble_summary(&reports)?;
    Ok((runs, summary))
}

/// Output directory plus the list of files written, for the manifest.
pub struct OutputDir {
    pub path: PathBuf,
    pub files: Vec<String>,
}

impl OutputDir {
    pub fn create(path: &Path) -> CliResult<Self> {
        fs::create_dir_all(path).map_err(|e| CliError::io(path, e))?;
        Ok(OutputDir {
            path: path.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write_with<F>(&mut self, name: &str, f: F) -> CliResult<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> minosc_core::Result<()>,
    {
        let path = self.path.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<()> {
        self.write_with(name, |w| Ok(w.write_all(text.as_bytes())?))
    }

    pub fn finish<S: Serialize + Clone>(self, command: &str, spec: &S, params: &ModelParams) -> CliResult<()> {
        Manifest {
            artifact_version: ARTIFACT_VERSION.into(),
            command: command.into(),
            spec: spec.clone(),
            resolved_params: params.clone(),
            files: self.files,
        }
        .write(&self.path)
    }
}

fn write_extrema_csv<W: Write>(record: &OscillationRecord, mut out: W) -> minosc_core::Result<()> {
    writeln!(out, "t,value,kind")?;
    for e in &record.extrema {
        writeln!(out, "{},{},{:?}", fmt_f64(e.time), fmt_f64(e.value), e.kind)?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub period_s: f64,
    pub theta1_ref: f64,
    pub theta1_eigen: f64,
    pub g11: [f64; 2],
    pub max_relative_drift: f64,
    pub extrema: usize,
    pub mean_shift: Option<f64>,
    pub tracking: Option<TrackingStats>,
    pub spatial: Option<SpatialEnsembleSummary>,
}

/// Probe, totals, kymograph, extrema and the binary dump of one trajectory.
fn write_trajectory_files(out: &mut OutputDir, traj: &Trajectory, record: &OscillationRecord) -> CliResult<()> {
    out.write_with("probe.csv", |w| traj.write_probe_csv(w))?;
    out.write_with("totals.csv", |w| traj.write_totals_csv(w))?;
    out.write_with("kymograph.csv", |w| traj.write_kymograph_csv(w))?;
    out.write_with("extrema.csv", |w| write_extrema_csv(record, w))?;
    out.write_with("trajectory.bin", |w| traj.write_binary(w))?;
    Ok(())
}

fn load_replay(path: &Path) -> CliResult<NoiseRealization> {
    NoiseRealization::load_csv(path).map_err(CliError::from)
}

fn spatial_ratio(spec: &ExperimentSpec, reference: &Reference) -> f64 {
    if spec.g11_shortcut {
        1.0
    } else {
        reference.g11_ratio()
    }
}

/// Runs the experiment described by `spec` and writes its outputs.
pub fn simulate(spec: &ExperimentSpec) -> CliResult<RunSummary> {
    let params = spec.validate()?;
    let config = &spec.integration;
    let reference = reference_run(&params, config)?;
    let mut out = OutputDir::create(&spec.output_dir)?;
    let mut summary = RunSummary {
        period_s: reference.period,
        theta1_ref: reference.theta1_ref,
        theta1_eigen: reference.theta1_eig,
        g11: [reference.g11.re, reference.g11.im],
        max_relative_drift: reference.trajectory.max_drift(),
        extrema: reference.record.extrema.len(),
        mean_shift: None,
        tracking: None,
        spatial: None,
    };
    let seed = spec.seed.unwrap_or(0);
    match &spec.noise {
        NoiseSpec::None => {
            let shifts = instantaneous_frequency(&reference.record, reference.theta1_ref)?;
            write_trajectory_files(&mut out, &reference.trajectory, &reference.record)?;
            out.write_with("intervals.csv", |w| write_interval_csv(&shifts, None, w))?;
        }
        NoiseSpec::Temporal { epsilon, .. } => {
            let ou = spec.ou_config().expect("temporal spec has an OU config");
            let runs = temporal_ensemble(&params, config, &ou, *epsilon, &reference, spec.ensemble)?;
            summary.max_relative_drift = runs.iter().map(|r| r.max_drift).fold(0.0, f64::max);
            summary.tracking = Some(tracking_stats(&runs));
            out.write_with("intervals.csv", |w| write_ensemble_intervals(&runs, w))?;
            if spec.ensemble == 1 {
                let noise = temporal_realization(&ou, config.t_end, 0)?;
                let trace = TemporalTrace::from_realization(&noise)?;
                let traj = integrate(&params, config, &Perturbation::temporal(*epsilon, trace))?;
                let record = oscillation_record(&traj, false, Some(0.25 * reference.period))?;
                write_trajectory_files(&mut out, &traj, &record)?;
            }
        }
        NoiseSpec::Spatial { epsilon, field } => {
            let ratio = spatial_ratio(spec, &reference);
            let runs = match field {
                SpatialField::Mode { omega, amplitude } => {
                    let kx = mode_field(&params, config.intervals, *omega, *amplitude);
                    let run = spatial_run(&params, config, kx, *epsilon, &reference, ratio, 0)?;
                    summary.spatial = Some(spatial_ensemble_summary(std::slice::from_ref(&run.report))?);
                    vec![run]
                }
                SpatialField::Random { alpha } => {
                    let (runs, s) = spatial_ensemble(
                        &params,
                        config,
                        *alpha,
                        *epsilon,
                        seed,
                        spec.ensemble,
                        &reference,
                        ratio,
                    )?;
                    summary.spatial = Some(s);
                    runs
                }
            };
            if runs.len() == 1 {
                summary.mean_shift = Some(runs[0].report.measured);
                let traj = integrate(
                    &params,
                    config,
                    &Perturbation::spatial(*epsilon, runs[0].kappa_x.clone()),
                )?;
                let record = oscillation_record(&traj, false, Some(0.25 * reference.period))?;
                write_trajectory_files(&mut out, &traj, &record)?;
            }
            out.write_with("spatial.csv", |w| write_spatial_runs(&runs, w))?;
            out.write_with("intervals.csv", |w| {
                writeln!(w, "realization,t_j,span,measured_shift")?;
                for run in &runs {
                    for iv in &run.report.intervals {
                        writeln!(
                            w,
                            "{},{},{},{}",
                            run.realization,
                            fmt_f64(iv.t),
                            fmt_f64(iv.span),
                            fmt_f64(iv.shift)
                        )?;
                    }
                }
                Ok(())
            })?;
        }
        NoiseSpec::Replay { epsilon, path } => {
            let noise = load_replay(path)?;
            match noise.kind {
                NoiseKind::Temporal => {
                    let trace = TemporalTrace::from_realization(&noise)?;
                    let run = temporal_run(&params, config, trace.clone(), *epsilon, &reference, noise.realization)?;
                    summary.tracking = Some(tracking_stats(std::slice::from_ref(&run)));
                    let traj = integrate(&params, config, &Perturbation::temporal(*epsilon, trace))?;
                    summary.max_relative_drift = traj.max_drift();
                    let record = oscillation_record(&traj, false, Some(0.25 * reference.period))?;
                    write_trajectory_files(&mut out, &traj, &record)?;
                    out.write_with("intervals.csv", |w| {
                        write_ensemble_intervals(std::slice::from_ref(&run), w)
                    })?;
                }
                NoiseKind::Spatial => {
                    if noise.samples.len() != config.intervals + 1 {
                        return Err(CliError::usage(format!(
                            "replayed field has {} points but the grid has {}",
                            noise.samples.len(),
                            config.intervals + 1
                        )));
                    }
                    let ratio = spatial_ratio(spec, &reference);
                    let run = spatial_run(
                        &params,
                        config,
                        noise.samples.clone(),
                        *epsilon,
                        &reference,
                        ratio,
                        noise.realization,
                    )?;
                    summary.mean_shift = Some(run.report.measured);
                    summary.spatial = Some(spatial_ensemble_summary(std::slice::from_ref(&run.report))?);
                    let traj = integrate(&params, config, &Perturbation::spatial(*epsilon, run.kappa_x.clone()))?;
                    let record = oscillation_record(&traj, false, Some(0.25 * reference.period))?;
                    write_trajectory_files(&mut out, &traj, &record)?;
                    out.write_with("spatial.csv", |w| write_spatial_runs(std::slice::from_ref(&run), w))?;
                }
            }
        }
    }
    out.write_json("summary.json", &summary)?;
    if spec.gnuplot {
        out.write_text("plot.gp", SIMULATE_GNUPLOT)?;
    }
    out.finish("simulate", spec, &params)?;
    Ok(summary)
}

const SIMULATE_GNUPLOT: &str = "set datafile separator ','
set key autotitle columnhead
set multiplot layout 2,1
set xlabel 't (s)'
set ylabel 'rho_d'
plot 'probe.csv' using 1:2 with lines, '' using 1:3 with lines
set ylabel 'relative frequency shift'
plot 'intervals.csv' using 2:4 with linespoints
unset multiplot
";

pub fn write_ensemble_intervals<W: Write>(runs: &[TemporalRun], mut out: W) -> minosc_core::Result<()> {
    writeln!(out, "realization,t_j,span,measured_shift,predicted_shift")?;
    for run in runs {
        for (iv, p) in run.intervals.iter().zip(&run.predicted) {
            writeln!(
                out,
                "{},{},{},{},{}",
                run.realization,
                fmt_f64(iv.t),
                fmt_f64(iv.span),
                fmt_f64(iv.shift),
                fmt_f64(*p)
            )?;
        }
    }
    Ok(())
}

pub fn write_spatial_runs<W: Write>(runs: &[SpatialRun], mut out: W) -> minosc_core::Result<()> {
    writeln!(out, "realization,kappa_hat_x2,measured,predicted,predicted_shortcut")?;
    for run in runs {
        let r = &run.report;
        writeln!(
            out,
            "{},{},{},{},{}",
            run.realization,
            fmt_f64(r.kappa_hat_x2),
            fmt_f64(r.measured),
            fmt_f64(r.predicted),
            fmt_f64(r.predicted_shortcut)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use minosc_core::analysis::dct_mode2;

    #[test]
    fn mode_field_has_unit_coefficient() {
        let p = ModelParams::huang2003_1d();
        let kx = mode_field(&p, 21, 2, 1.0);
        assert!((dct_mode2(&kx).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tracking_stats_of_perfect_prediction() {
        let iv = IntervalShift {
            t: 1.0,
            t_start: 0.0,
            t_end: 2.0,
            span: 2.0,
            shift: 0.01,
            eta: 0.0,
        };
        let run = TemporalRun {
            realization: 0,
            intervals: vec![iv; 3],
            predicted: vec![0.01; 3],
            trace: TemporalTrace {
                dt_sample: 1.0,
                y: vec![1.0; 3],
            },
            max_drift: 0.0,
        };
        let s = tracking_stats(&[run]);
        assert_eq!(s.relative_discrepancy, 0.0);
        assert!((s.slope - 1.0).abs() < 1e-15);
    }
}
