//! Method-of-lines RK4 for the full nonlinear system
//! dρ/dt = κ(x,t)·g(ρ) + γ∂²ρ/∂x² with κ = 1 + εκ_t(t) + εκ_x(x).
//!
//! The step size is checked twice: up front against the diffusion eigenvalue
//! 4γ/Δx², and at every step against a Gershgorin bound that adds the local
//! reaction Jacobian. The second check matters near the poles, where large
//! membrane MinD makes MinE recruitment stiff.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    add_diffusion, conserved_totals, diffusion_coefficients, flux_gradients, fmt_f64, grid_positions, reaction_terms,
    ConservedTotals, FieldState, ModelParams, RateConstant, RateSubset, Species, NUM_SPECIES,
};
use crate::noise::{NoiseKind, NoiseRealization};
use crate::spectral::spectral_report;
use crate::steady_state::{jacobian_for, solve_fixed_point};

/// Real-axis extent of the classical RK4 stability region.
pub const RK4_REAL_STABILITY: f64 = 2.785;
pub const DEFAULT_INTERVALS: usize = 21;
pub const DEFAULT_DT: f64 = 0.005;
pub const DEFAULT_TRANSIENT: f64 = 200.0;
pub const DEFAULT_RELATIVE_AMPLITUDE: f64 = 0.05;
const BINARY_MAGIC: &[u8; 4] = b"MOSC";
const BINARY_VERSION: u32 = 1;
const BINARY_HEADER_LEN: usize = 48;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitialCondition {
    /// ρ∞ + a·Re(s₁)·cos(πx/L), with a set so that the d-perturbation is
    /// `relative_amplitude`·ρ_d∞ at the boundary. A negative amplitude flips the sign.
    ModeOne { relative_amplitude: f64 },
    /// Explicit profile, one entry per grid point.
    Custom(Vec<[f64; NUM_SPECIES]>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    pub intervals: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Record a full frame every this many steps.
    pub record_stride: usize,
    pub initial_condition: InitialCondition,
    /// Time the analysis discards before measuring (s).
    pub transient: f64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            intervals: DEFAULT_INTERVALS,
            dt: DEFAULT_DT,
            t_end: 2000.0,
            record_stride: 100,
            initial_condition: InitialCondition::ModeOne {
                relative_amplitude: DEFAULT_RELATIVE_AMPLITUDE,
            },
            transient: DEFAULT_TRANSIENT,
        }
    }
}

/// Largest stable RK4 step for the discrete diffusion operator.
pub fn diffusion_stability_bound(params: &ModelParams, intervals: usize) -> f64 {
    let dx = params.length / intervals as f64;
    let gmax = params.diffusivities().iter().copied().fold(0.0, f64::max);
    if gmax == 0.0 {
        f64::INFINITY
    } else {
        RK4_REAL_STABILITY * dx * dx / (4.0 * gmax)
    }
}

impl IntegrationConfig {
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        if self.intervals < 2 {
            return Err(Error::config(format!(
                "need at least 2 grid intervals, got {}",
                self.intervals
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::config(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.record_stride == 0 {
            return Err(Error::config("record_stride must be at least 1"));
        }
        if !(self.transient >= 0.0) {
            return Err(Error::config("transient must be non-negative"));
        }
        let bound = diffusion_stability_bound(params, self.intervals);
        if self.dt >= bound {
            return Err(Error::config(format!(
                "dt = {} exceeds the RK4 diffusion stability bound {bound:.4e} for N = {}",
                self.dt, self.intervals
            )));
        }
        if let InitialCondition::Custom(v) = &self.initial_condition {
            if v.len() != self.intervals + 1 {
                return Err(Error::config(format!(
                    "initial profile has {} points, grid has {}",
                    v.len(),
                    self.intervals + 1
                )));
            }
        }
        Ok(())
    }
}

/// Y(t) samples on a uniform grid, applied as κ_t = Y − 1 with zero-order hold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemporalTrace {
    pub dt_sample: f64,
    pub y: Vec<f64>,
}

impl TemporalTrace {
    pub fn from_realization(r: &NoiseRealization) -> Result<Self> {
        if r.kind != NoiseKind::Temporal {
            return Err(Error::config("expected a temporal noise realization"));
        }
        if r.coordinates.len() < 2 {
            return Err(Error::config("temporal trace needs at least two samples"));
        }
        let dt_sample = r.coordinates[1] - r.coordinates[0];
        if !(dt_sample > 0.0) {
            return Err(Error::config("temporal trace times must increase"));
        }
        Ok(TemporalTrace {
            dt_sample,
            y: r.samples.clone(),
        })
    }

    pub fn span(&self) -> f64 {
        (self.y.len().saturating_sub(1)) as f64 * self.dt_sample
    }

    /// κ_t(t) = Y(t_n) − 1 with t_n the last sample not after t.
    #[inline]
    pub fn kappa_t(&self, t: f64) -> f64 {
        let idx = ((t / self.dt_sample) + 1e-9).floor().max(0.0) as usize;
        self.y[idx.min(self.y.len() - 1)] - 1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseHookup {
    None,
    Temporal,
    Spatial,
    Both,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub epsilon: f64,
    pub temporal: Option<TemporalTrace>,
    /// κ_x on the integration grid.
    pub spatial: Option<Vec<f64>>,
}

impl Perturbation {
    pub fn none() -> Self {
        Perturbation::default()
    }

    pub fn temporal(epsilon: f64, trace: TemporalTrace) -> Self {
        Perturbation {
            epsilon,
            temporal: Some(trace),
            spatial: None,
        }
    }

    pub fn spatial(epsilon: f64, kappa_x: Vec<f64>) -> Self {
        Perturbation {
            epsilon,
            temporal: None,
            spatial: Some(kappa_x),
        }
    }

    pub fn hookup(&self) -> NoiseHookup {
        match (self.temporal.is_some(), self.spatial.is_some()) {
            (false, false) => NoiseHookup::None,
            (true, false) => NoiseHookup::Temporal,
            (false, true) => NoiseHookup::Spatial,
            (true, true) => NoiseHookup::Both,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: ModelParams,
    pub config: IntegrationConfig,
    pub hookup: NoiseHookup,
    pub rho_inf: [f64; NUM_SPECIES],
    /// Recorded frames (every `record_stride` steps, plus the initial state).
    pub frames: Vec<FieldState>,
    /// Every step: time and membrane MinD at x = 0 and x = L.
    pub probe_times: Vec<f64>,
    pub probe_left: Vec<f64>,
    pub probe_right: Vec<f64>,
    /// Every step: relative drift of the conserved totals from t = 0.
    pub drift: Vec<f64>,
    pub initial_totals: ConservedTotals,
    pub final_state: FieldState,
    /// Largest dt·ρ over the run, ρ a Gershgorin bound on the local stiffness.
    pub stiffness_ratio: f64,
}

impl Trajectory {
    pub fn max_drift(&self) -> f64 {
        self.drift.iter().copied().fold(0.0, f64::max)
    }

    /// Probe samples at or after `t_start`.
    pub fn probe_after(&self, t_start: f64, right: bool) -> (Vec<f64>, Vec<f64>) {
        let first = self.probe_times.partition_point(|&t| t < t_start - 1e-9);
        let v = if right { &self.probe_right } else { &self.probe_left };
        (self.probe_times[first..].to_vec(), v[first..].to_vec())
    }

    pub fn write_probe_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,rho_d_left,rho_d_right,total_drift")?;
        for k in 0..self.probe_times.len() {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(self.probe_times[k]),
                fmt_f64(self.probe_left[k]),
                fmt_f64(self.probe_right[k]),
                fmt_f64(self.drift[k])
            )?;
        }
        Ok(())
    }

    /// Per-frame totals, for checking conservation in exported data.
    pub fn write_totals_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,total_d,total_e")?;
        for f in &self.frames {
            let c = conserved_totals(f);
            writeln!(out, "{},{},{}", fmt_f64(f.time), fmt_f64(c.total_d), fmt_f64(c.total_e))?;
        }
        Ok(())
    }

    /// Rows (t, x, ρ_d) for every recorded frame.
    pub fn write_kymograph_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,x,rho_d")?;
        for f in &self.frames {
            for (x, v) in f.positions().iter().zip(&f.values) {
                writeln!(
                    out,
                    "{},{},{}",
                    fmt_f64(f.time),
                    fmt_f64(*x),
                    fmt_f64(v[Species::MemD.index()])
                )?;
            }
        }
        Ok(())
    }

    /// Little-endian dump: magic "MOSC", u32 version, u64 points, u64 species,
    /// u64 stride, u64 frames, f64 dt; then per frame an f64 time followed by
    /// points × species f64 values, point-major.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let points = self.config.intervals as u64 + 1;
        out.write_all(BINARY_MAGIC)?;
        out.write_all(&BINARY_VERSION.to_le_bytes())?;
        out.write_all(&points.to_le_bytes())?;
        out.write_all(&(NUM_SPECIES as u64).to_le_bytes())?;
        out.write_all(&(self.config.record_stride as u64).to_le_bytes())?;
        out.write_all(&(self.frames.len() as u64).to_le_bytes())?;
        out.write_all(&self.config.dt.to_le_bytes())?;
        for f in &self.frames {
            out.write_all(&f.time.to_le_bytes())?;
            for v in f.values.iter().flatten() {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// Frames read back from [`Trajectory::write_binary`].
pub fn read_binary(bytes: &[u8], length: f64) -> Result<Vec<FieldState>> {
    let bad = |m: &str| Error::parse("binary trajectory", m);
    if bytes.len() < BINARY_HEADER_LEN || &bytes[0..4] != BINARY_MAGIC {
        return Err(bad("missing header"));
    }
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != BINARY_VERSION {
        return Err(bad("unsupported version"));
    }
    let points = u64_at(8) as usize;
    let species = u64_at(16) as usize;
    let frames = u64_at(32) as usize;
    if species != NUM_SPECIES {
        return Err(bad("unexpected species count"));
    }
    let frame_len = 8 * (1 + points * species);
    if bytes.len() != BINARY_HEADER_LEN + frames * frame_len {
        return Err(bad("length does not match header"));
    }
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    Ok((0..frames)
        .map(|k| {
            let base = BINARY_HEADER_LEN + k * frame_len;
            let values = (0..points)
                .map(|i| std::array::from_fn(|s| f64_at(base + 8 * (1 + i * species + s))))
                .collect();
            FieldState {
                time: f64_at(base),
                length,
                values,
            }
        })
        .collect())
}

/// Mode-one initial profile ρ∞ + a·Re(s₁)·cos(πx/L).
pub fn mode_one_profile(
    params: &ModelParams,
    rho_inf: &[f64; NUM_SPECIES],
    intervals: usize,
    relative_amplitude: f64,
) -> Result<Vec<[f64; NUM_SPECIES]>> {
    let positions = grid_positions(params.length, intervals);
    if relative_amplitude == 0.0 {
        return Ok(vec![*rho_inf; positions.len()]);
    }
    let j = jacobian_for(rho_inf, &params.rates(), RateSubset::all());
    let report = spectral_report(1, &j, params)?;
    let k = report.oscillatory.unwrap_or(0);
    let dir: [f64; NUM_SPECIES] = std::array::from_fn(|s| report.eigenvectors[(s, k)].re);
    let d = Species::MemD.index();
    let reference = if dir[d].abs() > 1e-12 {
        dir[d].abs()
    } else {
        dir.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    };
    let a = relative_amplitude * rho_inf[d] / reference;
    Ok(positions
        .iter()
        .map(|x| {
            let c = (PI * x / params.length).cos();
            std::array::from_fn(|s| rho_inf[s] + a * dir[s] * c)
        })
        .collect())
}

struct Rhs<'a> {
    rates: [f64; NUM_SPECIES],
    coeff: [f64; NUM_SPECIES],
    epsilon: f64,
    temporal: Option<&'a TemporalTrace>,
    spatial: Option<&'a [f64]>,
}

impl Rhs<'_> {
    fn eval(&self, t: f64, y: &[[f64; NUM_SPECIES]], out: &mut [[f64; NUM_SPECIES]]) {
        let kt = self.temporal.map(|tr| self.epsilon * tr.kappa_t(t)).unwrap_or(0.0);
        for (i, (o, rho)) in out.iter_mut().zip(y).enumerate() {
            let kx = self.spatial.map(|s| self.epsilon * s[i]).unwrap_or(0.0);
            let k = 1.0 + kt + kx;
            let g = reaction_terms(rho, &self.rates);
            for s in 0..NUM_SPECIES {
                o[s] = k * g[s];
            }
        }
        add_diffusion(y, &self.coeff, out);
    }

    /// Gershgorin bound on the spectral radius of the local linearization,
    /// reaction Jacobian plus the largest diffusion eigenvalue, over all points.
    fn stiffness(&self, t: f64, y: &[[f64; NUM_SPECIES]]) -> f64 {
        let kt = self.temporal.map(|tr| self.epsilon * tr.kappa_t(t)).unwrap_or(0.0);
        let mut worst: f64 = 0.0;
        for (i, rho) in y.iter().enumerate() {
            let kx = self.spatial.map(|s| self.epsilon * s[i]).unwrap_or(0.0);
            let k = (1.0 + kt + kx).abs();
            let grads = flux_gradients(rho, &self.rates);
            let mut jac = [[0.0; NUM_SPECIES]; NUM_SPECIES];
            for rate in RateConstant::ALL {
                let stoich = rate.stoichiometry();
                for (row, si) in jac.iter_mut().zip(stoich) {
                    if si != 0.0 {
                        for (c, g) in row.iter_mut().zip(grads[rate.index()]) {
                            *c += si * g;
                        }
                    }
                }
            }
            for (s, row) in jac.iter().enumerate() {
                let diag = k * row[s] - 4.0 * self.coeff[s];
                let radius: f64 = row
                    .iter()
                    .enumerate()
                    .filter(|(c, _)| *c != s)
                    .map(|(_, v)| k * v.abs())
                    .sum();
                worst = worst.max(diag.abs() + radius);
            }
        }
        worst
    }
}

/// Integrates from the configured initial condition to `t_end`.
pub fn integrate(params: &ModelParams, config: &IntegrationConfig, noise: &Perturbation) -> Result<Trajectory> {
    params.validate()?;
    config.validate(params)?;
    let n = config.intervals;
    let fp = solve_fixed_point(params, None)?;
    if let Some(tr) = &noise.temporal {
        if tr.y.is_empty() || !(tr.dt_sample > 0.0) {
            return Err(Error::config("empty temporal noise trace"));
        }
        if tr.span() + 1e-9 < config.t_end {
            return Err(Error::TraceTooShort {
                have: tr.span(),
                need: config.t_end,
            });
        }
    }
    if let Some(s) = &noise.spatial {
        if s.len() != n + 1 {
            return Err(Error::config(format!(
                "spatial noise has {} points, grid has {}",
                s.len(),
                n + 1
            )));
        }
    }
    if noise.hookup() != NoiseHookup::None && !noise.epsilon.is_finite() {
        return Err(Error::config("epsilon must be finite"));
    }
    let mut y = match &config.initial_condition {
        InitialCondition::ModeOne { relative_amplitude } => {
            mode_one_profile(params, &fp.rho_inf, n, *relative_amplitude)?
        }
        InitialCondition::Custom(v) => v.clone(),
    };
    let rhs = Rhs {
        rates: params.rates(),
        coeff: diffusion_coefficients(params, params.length / n as f64),
        epsilon: noise.epsilon,
        temporal: noise.temporal.as_ref(),
        spatial: noise.spatial.as_deref(),
    };
    let state_at = |t: f64, v: &[[f64; NUM_SPECIES]]| FieldState {
        time: t,
        length: params.length,
        values: v.to_vec(),
    };
    let initial = state_at(0.0, &y);
    initial.check_finite()?;
    let initial_totals = conserved_totals(&initial);

    let steps = config.steps();
    let dt = config.dt;
    let d = Species::MemD.index();
    let mut probe_times = Vec::with_capacity(steps + 1);
    let mut probe_left = Vec::with_capacity(steps + 1);
    let mut probe_right = Vec::with_capacity(steps + 1);
    let mut drift = Vec::with_capacity(steps + 1);
    let mut frames = vec![initial];
    probe_times.push(0.0);
    probe_left.push(y[0][d]);
    probe_right.push(y[n][d]);
    drift.push(0.0);

    let zero = vec![[0.0; NUM_SPECIES]; n + 1];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero);
    let mut stiffness_ratio: f64 = 0.0;
    for step in 1..=steps {
        let t = (step - 1) as f64 * dt;
        let ratio = dt * rhs.stiffness(t, &y);
        stiffness_ratio = stiffness_ratio.max(ratio);
        if ratio > RK4_REAL_STABILITY {
            return Err(Error::StiffnessLimit { time: t, ratio });
        }
        rhs.eval(t, &y, &mut k1);
        axpy(&y, 0.5 * dt, &k1, &mut tmp);
        rhs.eval(t + 0.5 * dt, &tmp, &mut k2);
        axpy(&y, 0.5 * dt, &k2, &mut tmp);
        rhs.eval(t + 0.5 * dt, &tmp, &mut k3);
        axpy(&y, dt, &k3, &mut tmp);
        rhs.eval(t + dt, &tmp, &mut k4);
        for i in 0..=n {
            for s in 0..NUM_SPECIES {
                y[i][s] += dt / 6.0 * (k1[i][s] + 2.0 * k2[i][s] + 2.0 * k3[i][s] + k4[i][s]);
            }
        }
        let t_new = step as f64 * dt;
        if y.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp(t_new));
        }
        let state = state_at(t_new, &y);
        probe_times.push(t_new);
        probe_left.push(y[0][d]);
        probe_right.push(y[n][d]);
        drift.push(conserved_totals(&state).relative_drift(&initial_totals));
        if step % config.record_stride == 0 {
            frames.push(state);
        }
    }
    let final_state = state_at(steps as f64 * dt, &y);
    let negative = final_state.negative_entries();
    if !negative.is_empty() {
        log::warn!("{} negative concentrations in the final state", negative.len());
    }
    Ok(Trajectory {
        params: params.clone(),
        config: config.clone(),
        hookup: noise.hookup(),
        rho_inf: fp.rho_inf,
        frames,
        probe_times,
        probe_left,
        probe_right,
        drift,
        initial_totals,
        final_state,
        stiffness_ratio,
    })
}

#[inline]
fn axpy(y: &[[f64; NUM_SPECIES]], h: f64, k: &[[f64; NUM_SPECIES]], out: &mut [[f64; NUM_SPECIES]]) {
    for ((o, a), b) in out.iter_mut().zip(y).zip(k) {
        for s in 0..NUM_SPECIES {
            o[s] = a[s] + h * b[s];
        }
    }
}

/// Smooth problems with closed-form solutions for checking RK4 order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TestProblem {
    /// y' = [[0, −θ], [θ, 0]] y from (1, 0).
    Harmonic { theta: f64 },
    /// y' = −r y from 1.
    Decay { rate: f64 },
    /// y' = 0.
    Constant { value: f64 },
}

impl TestProblem {
    fn rhs(&self, y: [f64; 2]) -> [f64; 2] {
        match *self {
            TestProblem::Harmonic { theta } => [-theta * y[1], theta * y[0]],
            TestProblem::Decay { rate } => [-rate * y[0], 0.0],
            TestProblem::Constant { .. } => [0.0, 0.0],
        }
    }

    fn initial(&self) -> [f64; 2] {
        match *self {
            TestProblem::Harmonic { .. } | TestProblem::Decay { .. } => [1.0, 0.0],
            TestProblem::Constant { value } => [value, value],
        }
    }

    fn exact(&self, t: f64) -> [f64; 2] {
        match *self {
            TestProblem::Harmonic { theta } => [(theta * t).cos(), (theta * t).sin()],
            TestProblem::Decay { rate } => [(-rate * t).exp(), 0.0],
            TestProblem::Constant { value } => [value, value],
        }
    }

    /// Largest stable step on this problem (infinite when every step is stable).
    pub fn stability_bound(&self) -> f64 {
        match *self {
            TestProblem::Decay { rate } if rate > 0.0 => RK4_REAL_STABILITY / rate,
            // The imaginary-axis interval is 2√2, but |R| < 1 there, so steps below it are stable.
            TestProblem::Harmonic { theta } if theta != 0.0 => 2.0 * 2f64.sqrt() / theta.abs(),
            _ => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub problem: TestProblem,
    pub t_end: f64,
    pub dts: Vec<f64>,
    pub errors: Vec<f64>,
    /// errors[k] / errors[k+1].
    pub ratios: Vec<f64>,
    /// log2 of the last ratio (for halving ladders).
    pub order: f64,
    /// Any rung whose solution grew without bound.
    pub diverged: bool,
    pub unstable_dts: Vec<f64>,
}

/// RK4 on the harmonic oscillator over the ladder 0.04, 0.02, 0.01 s.
pub fn rk4_convergence_check() -> ConvergenceReport {
    rk4_convergence_check_with(TestProblem::Harmonic { theta: 1.0 }, &[0.04, 0.02, 0.01], 10.0)
}

pub fn rk4_convergence_check_with(problem: TestProblem, dts: &[f64], t_end: f64) -> ConvergenceReport {
    let exact = problem.exact(t_end);
    let scale = problem.initial().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut errors = Vec::with_capacity(dts.len());
    let mut diverged = false;
    for &dt in dts {
        let steps = (t_end / dt).round() as usize;
        let mut y = problem.initial();
        let mut blew_up = false;
        for _ in 0..steps {
            let k1 = problem.rhs(y);
            let k2 = problem.rhs([y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1]]);
            let k3 = problem.rhs([y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1]]);
            let k4 = problem.rhs([y[0] + dt * k3[0], y[1] + dt * k3[1]]);
            for s in 0..2 {
                y[s] += dt / 6.0 * (k1[s] + 2.0 * k2[s] + 2.0 * k3[s] + k4[s]);
            }
            if !(y[0].abs() <= 1e6 * scale && y[1].abs() <= 1e6 * scale) {
                blew_up = true;
                break;
            }
        }
        diverged |= blew_up;
        let err = if blew_up {
            f64::INFINITY
        } else {
            (y[0] - exact[0]).abs().max((y[1] - exact[1]).abs())
        };
        errors.push(err);
    }
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let order = ratios.last().map(|r| r.log2()).unwrap_or(f64::NAN);
    let bound = problem.stability_bound();
    ConvergenceReport {
        problem,
        t_end,
        dts: dts.to_vec(),
        errors,
        ratios,
        order,
        diverged,
        unstable_dts: dts.iter().copied().filter(|&dt| dt >= bound).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn short(t_end: f64) -> IntegrationConfig {
        IntegrationConfig {
            t_end,
            record_stride: 10,
            ..IntegrationConfig::default()
        }
    }

    #[test]
    fn default_config_respects_stability_bound() {
        let p = ModelParams::huang2003_1d();
        let bound = diffusion_stability_bound(&p, 21);
        assert!(bound > 0.0125 && bound < 0.0135, "{bound}");
        IntegrationConfig::default().validate(&p).unwrap();
        let bad = IntegrationConfig {
            dt: 0.02,
            ..IntegrationConfig::default()
        };
        assert!(matches!(bad.validate(&p), Err(Error::Config(_))));
        let coarse = IntegrationConfig {
            intervals: 1,
            ..IntegrationConfig::default()
        };
        assert!(matches!(coarse.validate(&p), Err(Error::Config(_))));
    }

    #[test]
    fn fixed_point_stays_put() {
        let p = ModelParams::huang2003_1d();
        let cfg = IntegrationConfig {
            initial_condition: InitialCondition::ModeOne {
                relative_amplitude: 0.0,
            },
            ..short(50.0)
        };
        let tr = integrate(&p, &cfg, &Perturbation::none()).unwrap();
        for (a, b) in tr.final_state.values.iter().flatten().zip(tr.rho_inf.iter().cycle()) {
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn mode_one_profile_has_requested_amplitude() {
        let p = ModelParams::huang2003_1d();
        let fp = solve_fixed_point(&p, None).unwrap();
        let prof = mode_one_profile(&p, &fp.rho_inf, 21, 0.05).unwrap();
        let d = Species::MemD.index();
        assert_relative_eq!(
            (prof[0][d] - fp.rho_inf[d]).abs(),
            0.05 * fp.rho_inf[d],
            max_relative = 1e-12
        );
        assert_relative_eq!(
            prof[21][d] - fp.rho_inf[d],
            -(prof[0][d] - fp.rho_inf[d]),
            max_relative = 1e-12
        );
    }

    #[test]
    fn conservation_holds_with_both_noise_sources() {
        let p = ModelParams::huang2003_1d();
        let cfg = short(100.0);
        let y: Vec<f64> = (0..=10_000).map(|k| 1.0 + 0.3 * (k as f64 * 0.013).sin()).collect();
        let kx: Vec<f64> = grid_positions(p.length, 21)
            .iter()
            .map(|x| (2.0 * PI * x / p.length).cos())
            .collect();
        let noise = Perturbation {
            epsilon: 0.1,
            temporal: Some(TemporalTrace { dt_sample: 0.01, y }),
            spatial: Some(kx),
        };
        let tr = integrate(&p, &cfg, &noise).unwrap();
        assert_eq!(tr.hookup, NoiseHookup::Both);
        assert!(tr.max_drift() < 1e-8, "{}", tr.max_drift());
    }

    #[test]
    fn short_trace_is_rejected() {
        let p = ModelParams::huang2003_1d();
        let noise = Perturbation::temporal(
            0.01,
            TemporalTrace {
                dt_sample: 0.01,
                y: vec![1.0; 100],
            },
        );
        match integrate(&p, &short(5.0), &noise) {
            Err(Error::TraceTooShort { have, need }) => {
                assert_relative_eq!(have, 0.99, epsilon = 1e-12);
                assert_eq!(need, 5.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mismatched_spatial_grid_is_rejected() {
        let p = ModelParams::huang2003_1d();
        let noise = Perturbation::spatial(0.1, vec![0.0; 10]);
        assert!(matches!(integrate(&p, &short(1.0), &noise), Err(Error::Config(_))));
    }

    #[test]
    fn huge_start_is_caught_as_stiff() {
        let p = ModelParams::huang2003_1d();
        let fp = solve_fixed_point(&p, None).unwrap();
        let mut prof = vec![fp.rho_inf; 22];
        prof[3][1] = 1e150;
        let cfg = IntegrationConfig {
            initial_condition: InitialCondition::Custom(prof),
            ..short(10.0)
        };
        assert!(matches!(
            integrate(&p, &cfg, &Perturbation::none()),
            Err(Error::StiffnessLimit { .. })
        ));
    }

    #[test]
    fn coarse_step_is_rejected_once_poles_fill() {
        let p = ModelParams::huang2003_1d();
        let cfg = IntegrationConfig {
            dt: 0.01,
            ..Default::default()
        };
        match integrate(&p, &cfg, &Perturbation::none()) {
            Err(Error::StiffnessLimit { time, ratio }) => {
                assert!(time > 10.0);
                assert!(ratio > RK4_REAL_STABILITY);
            }
            other => panic!("expected a stiffness error, got {:?}", other.map(|t| t.stiffness_ratio)),
        }
        let ok = integrate(&p, &IntegrationConfig::default(), &Perturbation::none()).unwrap();
        assert!(ok.stiffness_ratio < 0.8 * RK4_REAL_STABILITY);
    }

    #[test]
    fn zero_order_hold_uses_last_sample() {
        let tr = TemporalTrace {
            dt_sample: 0.5,
            y: vec![1.0, 2.0, 3.0],
        };
        assert_eq!(tr.kappa_t(0.0), 0.0);
        assert_eq!(tr.kappa_t(0.49), 0.0);
        assert_eq!(tr.kappa_t(0.5), 1.0);
        assert_eq!(tr.kappa_t(0.75), 1.0);
        assert_eq!(tr.kappa_t(7.0), 2.0);
    }

    #[test]
    fn mirrored_start_gives_mirrored_run() {
        let p = ModelParams::huang2003_1d();
        let fp = solve_fixed_point(&p, None).unwrap();
        let prof = mode_one_profile(&p, &fp.rho_inf, 21, 0.05).unwrap();
        let mirrored: Vec<_> = prof.iter().rev().copied().collect();
        let run = |v: Vec<[f64; NUM_SPECIES]>| {
            let cfg = IntegrationConfig {
                initial_condition: InitialCondition::Custom(v),
                ..short(60.0)
            };
            integrate(&p, &cfg, &Perturbation::none()).unwrap()
        };
        let a = run(prof);
        let b = run(mirrored);
        for (ra, rb) in a.final_state.values.iter().zip(b.final_state.values.iter().rev()) {
            for s in 0..NUM_SPECIES {
                assert!((ra[s] - rb[s]).abs() < 1e-9 * ra[s].abs().max(1.0));
            }
        }
        for (l, r) in a.probe_left.iter().zip(&b.probe_right) {
            assert!((l - r).abs() < 1e-9 * l.abs().max(1.0));
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let p = ModelParams::huang2003_1d();
        let a = integrate(&p, &short(20.0), &Perturbation::none()).unwrap();
        let b = integrate(&p, &short(20.0), &Perturbation::none()).unwrap();
        assert_eq!(a.probe_left, b.probe_left);
        assert_eq!(a.final_state, b.final_state);
    }

    #[test]
    fn binary_dump_round_trips() {
        let p = ModelParams::huang2003_1d();
        let tr = integrate(&p, &short(1.0), &Perturbation::none()).unwrap();
        let mut buf = Vec::new();
        tr.write_binary(&mut buf).unwrap();
        let frames = read_binary(&buf, p.length).unwrap();
        assert_eq!(frames, tr.frames);
        assert!(read_binary(&buf[..buf.len() - 1], p.length).is_err());
    }

    #[test]
    fn csv_exports_have_expected_shape() {
        let p = ModelParams::huang2003_1d();
        let tr = integrate(&p, &short(0.5), &Perturbation::none()).unwrap();
        let mut probe = Vec::new();
        tr.write_probe_csv(&mut probe).unwrap();
        assert_eq!(String::from_utf8(probe).unwrap().lines().count(), 102);
        let mut kymo = Vec::new();
        tr.write_kymograph_csv(&mut kymo).unwrap();
        assert_eq!(
            String::from_utf8(kymo).unwrap().lines().count(),
            1 + tr.frames.len() * 22
        );
    }

    #[test]
    fn rk4_is_fourth_order_on_harmonic_problem() {
        let r = rk4_convergence_check();
        assert!(!r.diverged);
        for ratio in &r.ratios {
            assert!((ratio - 16.0).abs() < 0.5, "{ratio}");
        }
        assert!(r.order >= 3.9);
    }

    #[test]
    fn rk4_divergence_is_detected() {
        let problem = TestProblem::Decay { rate: 100.0 };
        let r = rk4_convergence_check_with(problem, &[0.04, 0.02, 0.01], 20.0);
        assert!(r.diverged);
        assert_eq!(r.unstable_dts, vec![0.04]);
        assert!(r.errors[0].is_infinite());
        assert!(r.errors[2] < 1e-6);
    }

    #[test]
    fn rk4_keeps_constants_exact() {
        let r = rk4_convergence_check_with(TestProblem::Constant { value: 3.25 }, &[0.04, 0.02, 0.01], 5.0);
        assert!(r.errors.iter().all(|e| *e == 0.0));
    }
}
