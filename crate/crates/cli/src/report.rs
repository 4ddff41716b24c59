//! Figure-data emitters. Each writes the columns needed to replot one figure
//! plus a summary JSON and a manifest.

use std::io::Write;
use std::path::PathBuf;

use minosc_core::analysis::{frequency_autocorrelation, kappa_diagnostics, AutocorrOrigin, FrequencyAutocorr};
use minosc_core::integrator::{IntegrationConfig, TemporalTrace};
use minosc_core::model::{fmt_f64, grid_positions};
use minosc_core::noise::{temporal_realization, OUConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::experiment::{reference_run, spatial_ensemble, temporal_ensemble, tracking_stats, OutputDir};
use crate::spec::ModelSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Figure {
    TempPerturb,
    TempAuto,
    Kappat,
    SpatialRand,
    Kymograph,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::TempPerturb => "fig-temp-perturb",
            Figure::TempAuto => "fig-temp-auto",
            Figure::Kappat => "fig-kappat",
            Figure::SpatialRand => "fig-spatial-rand",
            Figure::Kymograph => "fig-kymograph",
        }
    }

    pub fn default_taus(self) -> Vec<f64> {
        match self {
            Figure::Kappat => vec![1.0, 10.0, 100.0, 1000.0],
            _ => vec![10.0, 100.0, 1000.0],
        }
    }

    pub fn default_epsilons(self) -> Vec<f64> {
        match self {
            Figure::SpatialRand => vec![0.1, 0.01],
            _ => vec![0.01],
        }
    }

    pub fn default_realizations(self) -> usize {
        match self {
            Figure::TempPerturb | Figure::Kymograph => 1,
            Figure::Kappat => 400,
            Figure::TempAuto | Figure::SpatialRand => 50,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportOptions {
    pub figure: Figure,
    pub model: ModelSpec,
    pub integration: IntegrationConfig,
    pub seed: u64,
    pub realizations: usize,
    pub taus: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub alpha: f64,
    /// Sampling step of the Y traces in fig-kappat (s).
    pub kappat_dt: f64,
    /// Emit every this many samples of long time series.
    pub trace_stride: usize,
    pub output_dir: PathBuf,
    pub gnuplot: bool,
}

pub fn run_report(opts: &ReportOptions) -> CliResult<serde_json::Value> {
    let params = opts.model.resolve()?;
    opts.integration.validate(&params)?;
    if opts.realizations == 0 || opts.trace_stride == 0 {
        return Err(CliError::usage("realizations and trace stride must be positive"));
    }
    let mut out = OutputDir::create(&opts.output_dir)?;
    let cfg = &opts.integration;
    let summary = match opts.figure {
        Figure::TempPerturb => {
            let reference = reference_run(&params, cfg)?;
            let mut rows = Vec::new();
            let mut stats = Vec::new();
            for &tau in &opts.taus {
                for &eps in &opts.epsilons {
                    let ou = OUConfig::with_ln2_variance(tau, opts.seed, cfg.dt);
                    let runs = temporal_ensemble(&params, cfg, &ou, eps, &reference, opts.realizations)?;
                    stats.push(serde_json::json!({"tau": tau, "epsilon": eps, "tracking": tracking_stats(&runs)}));
                    rows.push((tau, eps, runs));
                }
            }
            out.write_with("fig_temp_perturb_trace.csv", |w| {
                writeln!(w, "tau,epsilon,realization,t,factor")?;
                for (tau, eps, runs) in &rows {
                    for run in runs {
                        for (k, y) in run.trace.y.iter().enumerate().step_by(opts.trace_stride) {
                            let t = k as f64 * run.trace.dt_sample;
                            writeln!(
                                w,
                                "{},{},{},{},{}",
                                fmt_f64(*tau),
                                fmt_f64(*eps),
                                run.realization,
                                fmt_f64(t),
                                fmt_f64(1.0 + eps * (y - 1.0))
                            )?;
                        }
                    }
                }
                Ok(())
            })?;
            out.write_with("fig_temp_perturb_shift.csv", |w| {
                writeln!(w, "tau,epsilon,realization,t_j,measured_shift,predicted_shift")?;
                for (tau, eps, runs) in &rows {
                    for run in runs {
                        for (iv, p) in run.intervals.iter().zip(&run.predicted) {
                            writeln!(
                                w,
                                "{},{},{},{},{},{}",
                                fmt_f64(*tau),
                                fmt_f64(*eps),
                                run.realization,
                                fmt_f64(iv.t),
                                fmt_f64(iv.shift),
                                fmt_f64(*p)
                            )?;
                        }
                    }
                }
                Ok(())
            })?;
            if opts.gnuplot {
                out.write_text("fig_temp_perturb.gp", TEMP_PERTURB_GP)?;
            }
            serde_json::json!({"period_ref": reference.period, "runs": stats})
        }
        Figure::TempAuto => {
            let reference = reference_run(&params, cfg)?;
            let mut curves: Vec<(f64, f64, FrequencyAutocorr)> = Vec::new();
            for &tau in &opts.taus {
                for &eps in &opts.epsilons {
                    let ou = OUConfig::with_ln2_variance(tau, opts.seed, cfg.dt);
                    let runs = temporal_ensemble(&params, cfg, &ou, eps, &reference, opts.realizations)?;
                    let series: Vec<_> = runs.into_iter().map(|r| r.intervals).collect();
                    for origin in [AutocorrOrigin::First, AutocorrOrigin::Pooled] {
                        curves.push((tau, eps, frequency_autocorrelation(&series, &ou, origin, cfg.t_end)?));
                    }
                }
            }
            out.write_with("fig_temp_auto.csv", |w| {
                writeln!(w, "tau,epsilon,origin,lag,measured,analytic")?;
                for (tau, eps, c) in &curves {
                    for k in 0..c.lags.len() {
                        writeln!(
                            w,
                            "{},{},{:?},{},{},{}",
                            fmt_f64(*tau),
                            fmt_f64(*eps),
                            c.origin,
                            fmt_f64(c.lags[k]),
                            fmt_f64(c.measured[k]),
                            fmt_f64(c.analytic[k])
                        )?;
                    }
                }
                Ok(())
            })?;
            if opts.gnuplot {
                out.write_text("fig_temp_auto.gp", TEMP_AUTO_GP)?;
            }
            let devs: Vec<_> = curves
                .iter()
                .map(|(tau, eps, c)| {
                    let dev = c
                        .measured
                        .iter()
                        .zip(&c.analytic)
                        .map(|(m, a)| (m - a).abs())
                        .fold(0.0, f64::max);
                    serde_json::json!({"tau": tau, "epsilon": eps, "origin": c.origin, "max_deviation": dev})
                })
                .collect();
            serde_json::json!({"realizations": opts.realizations, "curves": devs})
        }
        Figure::Kappat => {
            let (_, spectral) = minosc_core::spectral::analyze_preset(&params)?;
            let window = 2.0 * std::f64::consts::PI / spectral.theta1;
            let mut blocks = Vec::new();
            for &tau in &opts.taus {
                let ou = OUConfig::with_ln2_variance(tau, opts.seed, opts.kappat_dt);
                let traces: Vec<TemporalTrace> = (0..opts.realizations as u64)
                    .into_par_iter()
                    .map(|r| TemporalTrace::from_realization(&temporal_realization(&ou, cfg.t_end, r)?))
                    .collect::<minosc_core::Result<_>>()?;
                blocks.push((tau, kappa_diagnostics(&traces, spectral.theta1, window)?));
            }
            out.write_with("fig_kappat.csv", |w| {
                writeln!(w, "tau,t,running_mean,resonant_integral")?;
                for (tau, d) in &blocks {
                    for k in (0..d.times.len()).step_by(opts.trace_stride) {
                        writeln!(
                            w,
                            "{},{},{},{}",
                            fmt_f64(*tau),
                            fmt_f64(d.times[k]),
                            fmt_f64(d.running_mean[k]),
                            fmt_f64(d.resonant_integral[k])
                        )?;
                    }
                }
                Ok(())
            })?;
            out.write_with("fig_kappat_windows.csv", |w| {
                writeln!(w, "tau,t_centre,mean_sq")?;
                for (tau, d) in &blocks {
                    for (c, v) in d.window_centres.iter().zip(&d.window_mean_sq) {
                        writeln!(w, "{},{},{}", fmt_f64(*tau), fmt_f64(*c), fmt_f64(*v))?;
                    }
                }
                Ok(())
            })?;
            if opts.gnuplot {
                out.write_text("fig_kappat.gp", KAPPAT_GP)?;
            }
            let per_tau: Vec<_> = blocks
                .iter()
                .map(|(tau, d)| {
                    let n = d.window_mean_sq.len().max(1) as f64;
                    serde_json::json!({
                        "tau": tau,
                        "final_running_mean": d.running_mean.last(),
                        "mean_window_mean_sq": d.window_mean_sq.iter().sum::<f64>() / n,
                    })
                })
                .collect();
            serde_json::json!({"window_s": window, "realizations": opts.realizations, "taus": per_tau})
        }
        Figure::SpatialRand => {
            let reference = reference_run(&params, cfg)?;
            let ratio = reference.g11_ratio();
            let mut blocks = Vec::new();
            for &eps in &opts.epsilons {
                let (runs, s) = spatial_ensemble(
                    &params,
                    cfg,
                    opts.alpha,
                    eps,
                    opts.seed,
                    opts.realizations,
                    &reference,
                    ratio,
                )?;
                blocks.push((eps, runs, s));
            }
            let xs = grid_positions(params.length, cfg.intervals);
            out.write_with("fig_spatial_rand_fields.csv", |w| {
                writeln!(w, "epsilon,realization,x,eps_kappa_x")?;
                for (eps, runs, _) in &blocks {
                    for run in runs {
                        for (x, k) in xs.iter().zip(&run.kappa_x) {
                            writeln!(
                                w,
                                "{},{},{},{}",
                                fmt_f64(*eps),
                                run.realization,
                                fmt_f64(*x),
                                fmt_f64(eps * k)
                            )?;
                        }
                    }
                }
                Ok(())
            })?;
            out.write_with("fig_spatial_rand_shifts.csv", |w| {
                writeln!(
                    w,
                    "epsilon,realization,kappa_hat_x2,measured,predicted,predicted_shortcut"
                )?;
                for (eps, runs, _) in &blocks {
                    for run in runs {
                        let r = &run.report;
                        writeln!(
                            w,
                            "{},{},{},{},{},{}",
                            fmt_f64(*eps),
                            run.realization,
                            fmt_f64(r.kappa_hat_x2),
                            fmt_f64(r.measured),
                            fmt_f64(r.predicted),
                            fmt_f64(r.predicted_shortcut)
                        )?;
                    }
                }
                Ok(())
            })?;
            if opts.gnuplot {
                out.write_text("fig_spatial_rand.gp", SPATIAL_RAND_GP)?;
            }
            let s: Vec<_> = blocks
                .iter()
                .map(|(eps, _, s)| serde_json::json!({"epsilon": eps, "summary": s}))
                .collect();
            serde_json::json!({"alpha": opts.alpha, "g11_ratio": ratio, "ensembles": s})
        }
        Figure::Kymograph => {
            let reference = reference_run(&params, cfg)?;
            out.write_with("fig_kymograph.csv", |w| reference.trajectory.write_kymograph_csv(w))?;
            if opts.gnuplot {
                out.write_text("fig_kymograph.gp", KYMOGRAPH_GP)?;
            }
            serde_json::json!({"period_s": reference.period, "frames": reference.trajectory.frames.len()})
        }
    };
    out.write_json("summary.json", &summary)?;
    out.finish(opts.figure.name(), opts, &params)?;
    Ok(summary)
}

const TEMP_PERTURB_GP: &str = "set datafile separator ','
set key autotitle columnhead
set multiplot layout 1,2
plot 'fig_temp_perturb_trace.csv' using 4:5 with lines title '1+eps(Y-1)'
plot 'fig_temp_perturb_shift.csv' using 4:5 with lines title 'measured', '' using 4:6 with lines dt 2 title 'predicted'
unset multiplot
";

const TEMP_AUTO_GP: &str = "set datafile separator ','
set key autotitle columnhead
plot 'fig_temp_auto.csv' using 4:5 with lines title 'measured', '' using 4:6 with lines dt 2 title 'analytic'
";

const KAPPAT_GP: &str = "set datafile separator ','
set key autotitle columnhead
set multiplot layout 3,1
plot 'fig_kappat.csv' using 2:3 with lines
plot 'fig_kappat_windows.csv' using 2:3 with linespoints
plot 'fig_kappat.csv' using 2:4 with lines
unset multiplot
";

const SPATIAL_RAND_GP: &str = "set datafile separator ','
set key autotitle columnhead
set multiplot layout 2,1
plot 'fig_spatial_rand_fields.csv' using 3:4 with lines
plot 'fig_spatial_rand_shifts.csv' using 2:4 with points title 'measured', '' using 2:5 with points title 'predicted'
unset multiplot
";

const KYMOGRAPH_GP: &str = "set datafile separator ','
set view map
set xlabel 't (s)'
set ylabel 'x (um)'
splot 'fig_kymograph.csv' using 1:2:3 with image
";
