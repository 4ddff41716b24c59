//! Oscillation observables from probe series and the linear-theory
//! predictions they are compared with.
//!
//! Interval convention: Δt_j = t_{j+1} − t_{j−1} spans one full period
//! between the neighbouring extrema of t_j, and every average over that
//! interval divides by the same Δt_j. Under this convention a constant
//! offset Y ≡ 1 + a gives δ̄_OU/θ₁ = εa.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{TemporalTrace, Trajectory};
use crate::model::fmt_f64;
use crate::noise::{ou_autocorr_analytic, OUConfig};

/// Zero-mean tolerance for DCT input, relative to max(1, max |κ|).
pub const ZERO_MEAN_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub time: f64,
    pub value: f64,
    pub kind: ExtremumKind,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OscillationRecord {
    /// Strictly alternating extrema with sub-step times.
    pub extrema: Vec<Extremum>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalShift {
    /// Centre extremum time t_j.
    pub t: f64,
    pub t_start: f64,
    pub t_end: f64,
    /// Δt_j = t_{j+1} − t_{j−1}.
    pub span: f64,
    /// δ̄_t(t_j)/θ₁ = (T − Δt_j)/Δt_j.
    pub shift: f64,
    /// η_j = θ₁(1 + δ̄_t/θ₁).
    pub eta: f64,
}

fn parabolic_vertex(t: [f64; 3], v: [f64; 3]) -> (f64, f64) {
    // Uniform spacing assumed; falls back to the middle sample when flat.
    let h = t[1] - t[0];
    let denom = v[0] - 2.0 * v[1] + v[2];
    if denom == 0.0 || h <= 0.0 {
        return (t[1], v[1]);
    }
    let offset = 0.5 * (v[0] - v[2]) / denom;
    let offset = offset.clamp(-1.0, 1.0);
    let value = v[1] - 0.25 * (v[0] - v[2]) * offset;
    (t[1] + offset * h, value)
}

/// Mean spacing of upward mean crossings, with hysteresis of a quarter
/// standard deviation so that small wiggles do not count.
pub fn estimate_period(times: &[f64], values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 4 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    if sd == 0.0 {
        return None;
    }
    let band = 0.25 * sd;
    let mut armed = values[0] < mean - band;
    let mut ups = Vec::new();
    for i in 1..n {
        if values[i] < mean - band {
            armed = true;
        } else if armed && values[i] > mean + band {
            armed = false;
            ups.push(times[i]);
        }
    }
    if ups.len() < 2 {
        return None;
    }
    Some((ups[ups.len() - 1] - ups[0]) / (ups.len() - 1) as f64)
}

/// Local extrema refined by a parabola through the three surrounding samples.
/// Adjacent extrema closer than `min_separation` are removed in pairs,
/// weakest pair first, which keeps strict alternation. Without a separation,
/// a quarter of the estimated period is used.
pub fn detect_extrema(times: &[f64], values: &[f64], min_separation: Option<f64>) -> Result<OscillationRecord> {
    if times.len() != values.len() {
        return Err(Error::config("probe times and values differ in length"));
    }
    if values.len() <= 3 {
        return Err(Error::NoOscillation(format!(
            "series has only {} samples",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("probe series".into()));
    }
    let mut ext: Vec<Extremum> = Vec::new();
    let n = values.len();
    let mut i = 1;
    while i < n - 1 {
        // Walk over plateaus so that flat tops register once.
        let mut j = i;
        while j + 1 < n - 1 && values[j + 1] == values[i] {
            j += 1;
        }
        let prev = values[i - 1];
        let next = values[j + 1];
        let v = values[i];
        let kind = if v > prev && v > next {
            Some(ExtremumKind::Max)
        } else if v < prev && v < next {
            Some(ExtremumKind::Min)
        } else {
            None
        };
        if let Some(kind) = kind {
            let (t, value) = if j == i {
                parabolic_vertex([times[i - 1], times[i], times[i + 1]], [prev, v, next])
            } else {
                (0.5 * (times[i] + times[j]), v)
            };
            let e = Extremum { time: t, value, kind };
            match ext.last_mut() {
                Some(last) if last.kind == kind => {
                    let stronger = match kind {
                        ExtremumKind::Max => e.value > last.value,
                        ExtremumKind::Min => e.value < last.value,
                    };
                    if stronger {
                        *last = e;
                    }
                }
                _ => ext.push(e),
            }
        }
        i = j + 1;
    }

    let sep = match min_separation {
        Some(s) => s,
        None => estimate_period(times, values).map(|p| 0.25 * p).unwrap_or(0.0),
    };
    if sep > 0.0 {
        loop {
            let weakest = ext
                .windows(2)
                .enumerate()
                .filter(|(_, w)| w[1].time - w[0].time < sep)
                .min_by(|(_, a), (_, b)| {
                    (a[1].value - a[0].value)
                        .abs()
                        .total_cmp(&(b[1].value - b[0].value).abs())
                })
                .map(|(k, _)| k);
            let Some(k) = weakest else { break };
            ext.drain(k..k + 2);
        }
    }
    if ext.len() < 3 {
        return Err(Error::NoOscillation(format!("only {} extrema found", ext.len())));
    }
    Ok(OscillationRecord { extrema: ext })
}

impl OscillationRecord {
    pub fn times(&self) -> Vec<f64> {
        self.extrema.iter().map(|e| e.time).collect()
    }

    /// Mean spacing of consecutive same-kind extrema.
    pub fn mean_period(&self) -> f64 {
        let e = &self.extrema;
        (e[e.len() - 1].time - e[0].time) / ((e.len() - 1) as f64 / 2.0)
    }

    /// Spacings t_{j+2} − t_j of same-kind extrema.
    pub fn same_kind_spacings(&self) -> Vec<f64> {
        self.extrema.windows(3).map(|w| w[2].time - w[0].time).collect()
    }

    /// Peak-to-trough amplitudes |v_{j+1} − v_j| at the midpoint time.
    pub fn amplitudes(&self) -> Vec<(f64, f64)> {
        self.extrema
            .windows(2)
            .map(|w| (0.5 * (w[0].time + w[1].time), (w[1].value - w[0].value).abs()))
            .collect()
    }

    /// Drops extrema before `t_start`, keeping the record's alternation.
    pub fn after(&self, t_start: f64) -> OscillationRecord {
        OscillationRecord {
            extrema: self.extrema.iter().copied().filter(|e| e.time >= t_start).collect(),
        }
    }
}

/// Extrema of a probe series after discarding the transient.
pub fn oscillation_record(
    trajectory: &Trajectory,
    right: bool,
    min_separation: Option<f64>,
) -> Result<OscillationRecord> {
    let (t, v) = trajectory.probe_after(trajectory.config.transient, right);
    detect_extrema(&t, &v, min_separation)
}

/// Per-interval relative frequency shift against the reference period 2π/θ₁.
pub fn instantaneous_frequency(record: &OscillationRecord, theta1_ref: f64) -> Result<Vec<IntervalShift>> {
    if !(theta1_ref > 0.0) {
        return Err(Error::config("reference frequency must be positive"));
    }
    let period = 2.0 * PI / theta1_ref;
    record
        .extrema
        .windows(3)
        .map(|w| {
            let span = w[2].time - w[0].time;
            if !(span > 0.0) {
                return Err(Error::Precondition(format!(
                    "extrema out of order around t = {}",
                    w[1].time
                )));
            }
            let shift = (period - span) / span;
            Ok(IntervalShift {
                t: w[1].time,
                t_start: w[0].time,
                t_end: w[2].time,
                span,
                shift,
                eta: theta1_ref * (1.0 + shift),
            })
        })
        .collect()
}

/// ∫_a^b f for the piecewise-linear interpolant of samples on a uniform grid.
fn trapezoid_between(dt: f64, f: &[f64], a: f64, b: f64) -> Result<f64> {
    let span = (f.len().saturating_sub(1)) as f64 * dt;
    if a < -1e-9 || b > span + 1e-9 * span.max(1.0) {
        return Err(Error::TraceTooShort { have: span, need: b });
    }
    let value_at = |t: f64| -> f64 {
        let x = (t / dt).clamp(0.0, (f.len() - 1) as f64);
        let k = (x.floor() as usize).min(f.len() - 2);
        let frac = x - k as f64;
        f[k] * (1.0 - frac) + f[k + 1] * frac
    };
    let ka = (a / dt).ceil() as usize;
    let kb = (b / dt).floor() as usize;
    if ka > kb {
        return Ok(0.5 * (value_at(a) + value_at(b)) * (b - a));
    }
    let ta = ka as f64 * dt;
    let tb = kb as f64 * dt;
    let mut s = 0.5 * (value_at(a) + f[ka]) * (ta - a) + 0.5 * (f[kb] + value_at(b)) * (b - tb);
    for k in ka..kb {
        s += 0.5 * (f[k] + f[k + 1]) * dt;
    }
    Ok(s)
}

/// δ̄_OU(t_j)/θ₁ = (ε/Δt_j)∫_{t_{j−1}}^{t_{j+1}}(Y − 1) dv for each interval.
pub fn ou_frequency_prediction(trace: &TemporalTrace, intervals: &[IntervalShift], epsilon: f64) -> Result<Vec<f64>> {
    if trace.y.len() < 2 {
        return Err(Error::config("temporal trace needs at least two samples"));
    }
    let kappa: Vec<f64> = trace.y.iter().map(|y| y - 1.0).collect();
    intervals
        .iter()
        .map(|iv| Ok(epsilon / iv.span * trapezoid_between(trace.dt_sample, &kappa, iv.t_start, iv.t_end)?))
        .collect()
}

/// Amplitude-modulation diagnostic ε·Ĝ₁₁R·∫₀ᵗ κ_t ds at each trace sample.
pub fn amplitude_modulation_prediction(trace: &TemporalTrace, epsilon: f64, g11_real: f64) -> Vec<(f64, f64)> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(trace.y.len());
    out.push((0.0, 0.0));
    for k in 1..trace.y.len() {
        acc += 0.5 * ((trace.y[k - 1] - 1.0) + (trace.y[k] - 1.0)) * trace.dt_sample;
        out.push((k as f64 * trace.dt_sample, epsilon * g11_real * acc));
    }
    out
}

/// Which pairs enter the ensemble average at each lag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AutocorrOrigin {
    /// ⟨δ_1 δ_k⟩: the first interval against the k-th.
    First,
    /// ⟨δ_j δ_{j+k}⟩ pooled over every origin j (stationary estimator).
    Pooled,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrequencyAutocorr {
    pub origin: AutocorrOrigin,
    /// Mean time lag for each index offset (s).
    pub lags: Vec<f64>,
    /// Scaled by the lag-0 value.
    pub measured: Vec<f64>,
    /// (exp((cτ/2)e^{−Δ/τ}) − 1)/(e^{cτ/2} − 1).
    pub analytic: Vec<f64>,
    pub realizations: usize,
}

/// Ensemble autocorrelation of per-interval shifts. Series are aligned on
/// interval index and truncated to the shortest one.
pub fn frequency_autocorrelation(
    series: &[Vec<IntervalShift>],
    config: &OUConfig,
    origin: AutocorrOrigin,
    max_lag: f64,
) -> Result<FrequencyAutocorr> {
    if series.len() < 2 {
        return Err(Error::config("autocorrelation needs at least two realizations"));
    }
    let len = series.iter().map(|s| s.len()).min().unwrap_or(0);
    if series.iter().any(|s| s.len() != len) {
        log::warn!("extrema counts differ across realizations; truncating to {len} intervals");
    }
    if len < 2 {
        return Err(Error::NoOscillation("fewer than two intervals per realization".into()));
    }
    let mut lags = Vec::new();
    let mut raw = Vec::new();
    for k in 0..len {
        let origins = match origin {
            AutocorrOrigin::First => 1,
            AutocorrOrigin::Pooled => len - k,
        };
        let mut sum = 0.0;
        let mut lag_sum = 0.0;
        let mut count = 0usize;
        for s in series {
            for j in 0..origins {
                sum += s[j].shift * s[j + k].shift;
                lag_sum += s[j + k].t - s[j].t;
                count += 1;
            }
        }
        let lag = lag_sum / count as f64;
        if lag > max_lag && k > 0 {
            break;
        }
        lags.push(lag);
        raw.push(sum / count as f64);
    }
    let zero = raw[0];
    if !(zero > 0.0) {
        return Err(Error::Precondition("lag-0 autocorrelation is not positive".into()));
    }
    Ok(FrequencyAutocorr {
        origin,
        measured: raw.iter().map(|v| v / zero).collect(),
        analytic: lags.iter().map(|&d| ou_autocorr_analytic(0.0, d, config)).collect(),
        lags,
        realizations: series.len(),
    })
}

/// Cosine coefficient κ̂_ω = (2/N)·Σ'' κ_i cos(ωπi/N) with half weights at both
/// ends, so that cos(ωπx/L) on the grid returns exactly 1 for 0 < ω < N.
pub fn dct_coefficient(field: &[f64], omega: usize) -> Result<f64> {
    let n = field
        .len()
        .checked_sub(1)
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::config("field needs at least two grid points"))?;
    let scale = field.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let arithmetic = field.iter().sum::<f64>() / field.len() as f64;
    let trapezoidal = (field.iter().sum::<f64>() - 0.5 * (field[0] + field[n])) / n as f64;
    if arithmetic.abs() > ZERO_MEAN_TOL * scale && trapezoidal.abs() > ZERO_MEAN_TOL * scale {
        return Err(Error::Precondition(format!(
            "field mean {arithmetic:.3e} (trapezoidal {trapezoidal:.3e}) is not zero"
        )));
    }
    let w = omega as f64 * PI / n as f64;
    let mut s = 0.0;
    for (i, v) in field.iter().enumerate() {
        let weight = if i == 0 || i == n { 0.5 } else { 1.0 };
        s += weight * v * (w * i as f64).cos();
    }
    Ok(2.0 / n as f64 * s)
}

/// Coefficient of cos(2πx/L), the only mode shifting the frequency at first order.
pub fn dct_mode2(field: &[f64]) -> Result<f64> {
    dct_coefficient(field, 2)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpatialShiftReport {
    pub epsilon: f64,
    pub kappa_hat_x2: f64,
    /// ½ε·κ̂_{x2}·(Ĝ₁₁I/θ₁).
    pub predicted: f64,
    /// ½ε·κ̂_{x2} (Ĝ₁₁I ≈ θ₁).
    pub predicted_shortcut: f64,
    pub g11_imag_over_theta1: f64,
    /// Time average of the per-interval shifts after the transient.
    pub measured: f64,
    pub intervals: Vec<IntervalShift>,
}

/// Measured and predicted frequency shift of one spatially perturbed run.
/// `theta1_ref` comes from the unperturbed run.
pub fn spatial_shift_report(
    trajectory: &Trajectory,
    kappa_x: &[f64],
    epsilon: f64,
    theta1_ref: f64,
    g11_imag_over_theta1: f64,
) -> Result<SpatialShiftReport> {
    if trajectory.hookup == crate::integrator::NoiseHookup::Temporal
        || trajectory.hookup == crate::integrator::NoiseHookup::Both
    {
        return Err(Error::Precondition(
            "spatial shift report needs temporal noise off".into(),
        ));
    }
    let kappa_hat_x2 = dct_mode2(kappa_x)?;
    let period = 2.0 * PI / theta1_ref;
    let record = oscillation_record(trajectory, false, Some(0.25 * period))?;
    check_not_collapsed(&record, trajectory)?;
    let intervals = instantaneous_frequency(&record, theta1_ref)?;
    let measured = intervals.iter().map(|i| i.shift).sum::<f64>() / intervals.len() as f64;
    Ok(SpatialShiftReport {
        epsilon,
        kappa_hat_x2,
        predicted: 0.5 * epsilon * kappa_hat_x2 * g11_imag_over_theta1,
        predicted_shortcut: 0.5 * epsilon * kappa_hat_x2,
        g11_imag_over_theta1,
        measured,
        intervals,
    })
}

/// Fails when the last amplitude has fallen below 1% of the largest one.
fn check_not_collapsed(record: &OscillationRecord, trajectory: &Trajectory) -> Result<()> {
    let amps = record.amplitudes();
    let max = amps.iter().map(|a| a.1).fold(0.0, f64::max);
    let last = amps.last().map(|a| a.1).unwrap_or(0.0);
    let scale = trajectory.rho_inf[crate::model::Species::MemD.index()];
    if last < 0.01 * max || max < 1e-6 * scale {
        return Err(Error::NoOscillation(format!(
            "oscillation amplitude collapsed (last {last:.3e}, peak {max:.3e})"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpatialEnsembleSummary {
    pub realizations: usize,
    /// sqrt(⟨(δ_x/θ₁)²⟩) over the ensemble.
    pub s_x: f64,
    /// ½ε·sqrt(⟨κ̂²_{x2}⟩).
    pub theory: f64,
    pub mean_kappa_hat_sq: f64,
}

pub fn spatial_ensemble_summary(reports: &[SpatialShiftReport]) -> Result<SpatialEnsembleSummary> {
    if reports.is_empty() {
        return Err(Error::config("empty spatial ensemble"));
    }
    let n = reports.len() as f64;
    let eps = reports[0].epsilon;
    let ms = reports.iter().map(|r| r.measured * r.measured).sum::<f64>() / n;
    let mk = reports.iter().map(|r| r.kappa_hat_x2 * r.kappa_hat_x2).sum::<f64>() / n;
    Ok(SpatialEnsembleSummary {
        realizations: reports.len(),
        s_x: ms.sqrt(),
        theory: 0.5 * eps * mk.sqrt(),
        mean_kappa_hat_sq: mk,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KappaDiagnostics {
    pub times: Vec<f64>,
    /// (1/t)∫₀ᵗ⟨κ_t⟩ ds (0 at t = 0).
    pub running_mean: Vec<f64>,
    /// |e^{iθ₁t}∫₀ᵗ e^{−2iθ₁s}⟨κ_t⟩ ds|.
    pub resonant_integral: Vec<f64>,
    /// Window centres and ⟨κ̄²⟩ over windows of length `window`.
    pub window_centres: Vec<f64>,
    pub window_mean_sq: Vec<f64>,
}

/// The three ensemble diagnostics of κ_t = Y − 1 on a common time base.
pub fn kappa_diagnostics(traces: &[TemporalTrace], theta1: f64, window: f64) -> Result<KappaDiagnostics> {
    let first = traces.first().ok_or_else(|| Error::config("empty trace ensemble"))?;
    let dt = first.dt_sample;
    let len = traces.iter().map(|t| t.y.len()).min().unwrap_or(0);
    if traces.iter().any(|t| t.dt_sample != dt) {
        return Err(Error::config("traces do not share a time base"));
    }
    if len < 2 {
        return Err(Error::config("traces need at least two samples"));
    }
    let n = traces.len() as f64;
    let mean: Vec<f64> = (0..len)
        .map(|k| traces.iter().map(|t| t.y[k] - 1.0).sum::<f64>() / n)
        .collect();
    let times: Vec<f64> = (0..len).map(|k| k as f64 * dt).collect();
    let mut running_mean = vec![0.0; len];
    let mut resonant_integral = vec![0.0; len];
    let mut acc = 0.0;
    let mut cacc = Complex::new(0.0, 0.0);
    let phase = |s: f64| Complex::from_polar(1.0, -2.0 * theta1 * s);
    for k in 1..len {
        acc += 0.5 * (mean[k - 1] + mean[k]) * dt;
        cacc += (phase(times[k - 1]) * mean[k - 1] + phase(times[k]) * mean[k]) * (0.5 * dt);
        running_mean[k] = acc / times[k];
        resonant_integral[k] = cacc.norm();
    }
    let mut window_centres = Vec::new();
    let mut window_mean_sq = Vec::new();
    let span = (len - 1) as f64 * dt;
    if window > 0.0 {
        let mut a = 0.0;
        while a + window <= span + 1e-9 {
            let mut sq = 0.0;
            for t in traces {
                let kappa: Vec<f64> = t.y[..len].iter().map(|y| y - 1.0).collect();
                let avg = trapezoid_between(dt, &kappa, a, a + window)? / window;
                sq += avg * avg;
            }
            window_centres.push(a + 0.5 * window);
            window_mean_sq.push(sq / n);
            a += window;
        }
    }
    Ok(KappaDiagnostics {
        times,
        running_mean,
        resonant_integral,
        window_centres,
        window_mean_sq,
    })
}

pub fn write_interval_csv<W: Write>(intervals: &[IntervalShift], predicted: Option<&[f64]>, mut out: W) -> Result<()> {
    match predicted {
        Some(_) => writeln!(out, "t_j,span,measured_shift,predicted_shift")?,
        None => writeln!(out, "t_j,span,measured_shift")?,
    }
    for (k, iv) in intervals.iter().enumerate() {
        match predicted {
            Some(p) => writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(iv.t),
                fmt_f64(iv.span),
                fmt_f64(iv.shift),
                fmt_f64(p[k])
            )?,
            None => writeln!(out, "{},{},{}", fmt_f64(iv.t), fmt_f64(iv.span), fmt_f64(iv.shift))?,
        }
    }
    Ok(())
}
