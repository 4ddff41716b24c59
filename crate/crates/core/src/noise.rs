//! Extrinsic noise sources: Ornstein–Uhlenbeck paths, the normalised
//! lognormal factor Y(t), and zero-mean spatially correlated fields.

use std::f64::consts::{LN_2, PI};
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{fmt_f64, grid_positions};

/// Largest exponent accepted before Y is declared to overflow.
const MAX_EXPONENT: f64 = 700.0;
const JITTER_FACTOR: f64 = 1e-10;
const MAX_JITTER_DOUBLINGS: usize = 6;

/// What a random substream is used for. Each realization owns one stream per purpose.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    Temporal = 0,
    Spatial = 1,
    Auxiliary = 2,
}

/// ChaCha8 seeded from the master seed with stream `4·realization + purpose`.
/// Streams are independent of thread scheduling.
pub fn stream_rng(master_seed: u64, realization: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(realization.wrapping_mul(4).wrapping_add(purpose as u64));
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OUConfig {
    /// Relaxation time (s).
    pub tau: f64,
    /// Diffusion constant (1/s).
    pub c: f64,
    pub seed: u64,
    /// Sampling step (s).
    pub dt_sample: f64,
}

impl OUConfig {
    /// c chosen so that the stationary variance cτ/2 equals ln 2.
    pub fn with_ln2_variance(tau: f64, seed: u64, dt_sample: f64) -> Self {
        OUConfig {
            tau,
            c: 2.0 * LN_2 / tau,
            seed,
            dt_sample,
        }
    }

    pub fn stationary_variance(&self) -> f64 {
        self.c * self.tau / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::config(format!("OU tau must be positive, got {}", self.tau)));
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::config(format!("OU c must be non-negative, got {}", self.c)));
        }
        if !(self.dt_sample > 0.0 && self.dt_sample.is_finite()) {
            return Err(Error::config(format!(
                "OU sampling step must be positive, got {}",
                self.dt_sample
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum OuStart {
    Fixed(f64),
    /// X₀ drawn from the stationary law Normal(0, cτ/2).
    Stationary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Exact discretisation X_{n+1} = X_n e^{−Δt/τ} + ξ_n on t_n = nΔt, n up to
/// the first sample at or beyond `t_end`.
pub fn ou_path(config: &OUConfig, start: OuStart, t_end: f64, realization: u64) -> Result<OuPath> {
    let mut rng = stream_rng(config.seed, realization, Purpose::Temporal);
    ou_path_with_rng(config, start, t_end, &mut rng)
}

pub fn ou_path_with_rng<R: Rng + ?Sized>(config: &OUConfig, start: OuStart, t_end: f64, rng: &mut R) -> Result<OuPath> {
    config.validate()?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::config(format!("t_end must be non-negative, got {t_end}")));
    }
    let steps = (t_end / config.dt_sample - 1e-9).ceil().max(0.0) as usize;
    let decay = (-config.dt_sample / config.tau).exp();
    let step_sd = (config.stationary_variance() * -(-2.0 * config.dt_sample / config.tau).exp_m1()).sqrt();
    let mut x = match start {
        OuStart::Fixed(x0) => x0,
        OuStart::Stationary => config.stationary_variance().sqrt() * rng.sample::<f64, _>(StandardNormal),
    };
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    times.push(0.0);
    values.push(x);
    for n in 1..=steps {
        let z: f64 = rng.sample(StandardNormal);
        x = x * decay + step_sd * z;
        times.push(n as f64 * config.dt_sample);
        values.push(x);
    }
    Ok(OuPath { times, values })
}

/// Y = e^X / e^{cτ/4}, which has stationary mean 1.
pub fn y_process(x: &[f64], config: &OUConfig) -> Result<Vec<f64>> {
    let shift = config.c * config.tau / 4.0;
    x.iter()
        .map(|&v| {
            let e = v - shift;
            if !e.is_finite() || e > MAX_EXPONENT {
                return Err(Error::Overflow(format!(
                    "exp({e:.3e}) in Y(t); cτ = {:.3e}",
                    config.c * config.tau
                )));
            }
            Ok(e.exp())
        })
        .collect()
}

/// Normalised autocorrelation of e^X between times s and t in the stationary regime.
pub fn ou_autocorr_analytic(s: f64, t: f64, config: &OUConfig) -> f64 {
    let v = config.stationary_variance();
    let r = (-(s - t).abs() / config.tau).exp();
    if v == 0.0 {
        return r;
    }
    if v > 1.0 {
        // Same ratio rearranged so large cτ does not overflow.
        return (v * (r - 1.0)).exp() * (-(-v * r).exp_m1()) / (-(-v).exp_m1());
    }
    (v * r).exp_m1() / v.exp_m1()
}

/// Triangular autocorrelation with support [−α, α], peak 1/α and unit integral.
pub fn triangular_a(xi: f64, alpha: f64) -> f64 {
    let u = 1.0 - xi.abs() / alpha;
    if u > 0.0 {
        u / alpha
    } else {
        0.0
    }
}

/// Cosine coefficient of the periodic autocorrelation:
/// Â_{xμ} = (4L/(μπα)²)·sin²(μπα/L), written via sinc so that α → 0 is finite.
pub fn fourier_a_hat(mu: u32, alpha: f64, length: f64) -> f64 {
    let z = mu as f64 * PI * alpha / length;
    let sinc = if z == 0.0 { 1.0 } else { z.sin() / z };
    4.0 / length * sinc * sinc
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpatialCovariance {
    pub alpha: f64,
    pub length: f64,
    pub positions: Vec<f64>,
    /// C_ij = A(Δ) + A(Δ − L) + A(Δ + L) with Δ = x_j − x_i.
    pub matrix: DMatrix<f64>,
}

pub fn build_spatial_covariance(alpha: f64, length: f64, intervals: usize) -> Result<SpatialCovariance> {
    if !(alpha > 0.0 && alpha < length) {
        return Err(Error::config(format!(
            "correlation length must lie in (0, L = {length}), got {alpha}"
        )));
    }
    if intervals < 1 {
        return Err(Error::config("spatial grid needs at least one interval"));
    }
    let positions = grid_positions(length, intervals);
    let n = positions.len();
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        let d = positions[j] - positions[i];
        triangular_a(d, alpha) + triangular_a(d - length, alpha) + triangular_a(d + length, alpha)
    });
    Ok(SpatialCovariance {
        alpha,
        length,
        positions,
        matrix,
    })
}

/// Cholesky factor of a spatial covariance, reusable across draws.
#[derive(Clone, Debug)]
pub struct SpatialSampler {
    pub covariance: SpatialCovariance,
    factor: DMatrix<f64>,
    pub jitter: f64,
}

impl SpatialSampler {
    /// Factorises C + δI, starting at δ = 1e−10·trace/(N+1) and doubling up
    /// to six times.
    pub fn new(covariance: SpatialCovariance) -> Result<Self> {
        let n = covariance.matrix.nrows();
        let base = JITTER_FACTOR * covariance.matrix.trace() / n as f64;
        let mut jitter = base;
        for _ in 0..=MAX_JITTER_DOUBLINGS {
            let shifted = &covariance.matrix + DMatrix::identity(n, n) * jitter;
            if let Some(ch) = shifted.cholesky() {
                let factor = ch.l();
                return Ok(SpatialSampler {
                    covariance,
                    factor,
                    jitter,
                });
            }
            jitter *= 2.0;
        }
        let min_eig = covariance
            .matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        Err(Error::Factorization(min_eig))
    }

    /// One field L·z with the grid mean removed.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.factor.nrows();
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let field = &self.factor * z;
        let mean = field.sum() / n as f64;
        field.iter().map(|v| v - mean).collect()
    }

    pub fn sample(&self, epsilon: f64, seed: u64, realization: u64) -> NoiseRealization {
        let mut rng = stream_rng(seed, realization, Purpose::Spatial);
        NoiseRealization {
            kind: NoiseKind::Spatial,
            coordinates: self.covariance.positions.clone(),
            samples: self.draw(&mut rng),
            source: NoiseSource::Spatial {
                alpha: self.covariance.alpha,
                length: self.covariance.length,
                epsilon,
            },
            seed,
            realization,
        }
    }
}

/// Single zero-mean field κ_x on the covariance grid.
pub fn sample_spatial_field(
    cov: &SpatialCovariance,
    epsilon: f64,
    seed: u64,
    realization: u64,
) -> Result<NoiseRealization> {
    Ok(SpatialSampler::new(cov.clone())?.sample(epsilon, seed, realization))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseKind {
    Temporal,
    Spatial,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum NoiseSource {
    Ou(OUConfig),
    Spatial { alpha: f64, length: f64, epsilon: f64 },
}

/// A stored noise trace: Y(t_n) for temporal noise, κ_x(x_i) (unscaled) for spatial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRealization {
    pub kind: NoiseKind,
    pub coordinates: Vec<f64>,
    pub samples: Vec<f64>,
    pub source: NoiseSource,
    pub seed: u64,
    pub realization: u64,
}

/// Stationary OU path turned into the multiplicative factor Y.
pub fn temporal_realization(config: &OUConfig, t_end: f64, realization: u64) -> Result<NoiseRealization> {
    let path = ou_path(config, OuStart::Stationary, t_end, realization)?;
    Ok(NoiseRealization {
        kind: NoiseKind::Temporal,
        samples: y_process(&path.values, config)?,
        coordinates: path.times,
        source: NoiseSource::Ou(*config),
        seed: config.seed,
        realization,
    })
}

impl NoiseRealization {
    /// Last covered coordinate.
    pub fn span(&self) -> f64 {
        self.coordinates.last().copied().unwrap_or(0.0)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# kind = {}",
            match self.kind {
                NoiseKind::Temporal => "temporal",
                NoiseKind::Spatial => "spatial",
            }
        )?;
        writeln!(out, "# seed = {}", self.seed)?;
        writeln!(out, "# realization = {}", self.realization)?;
        match self.source {
            NoiseSource::Ou(c) => {
                writeln!(out, "# tau = {}", fmt_f64(c.tau))?;
                writeln!(out, "# c = {}", fmt_f64(c.c))?;
                writeln!(out, "# dt_sample = {}", fmt_f64(c.dt_sample))?;
            }
            NoiseSource::Spatial { alpha, length, epsilon } => {
                writeln!(out, "# alpha = {}", fmt_f64(alpha))?;
                writeln!(out, "# L = {}", fmt_f64(length))?;
                writeln!(out, "# epsilon = {}", fmt_f64(epsilon))?;
            }
        }
        let axis = if self.kind == NoiseKind::Temporal { "t" } else { "x" };
        writeln!(out, "{axis},value,seed")?;
        for (c, v) in self.coordinates.iter().zip(&self.samples) {
            writeln!(out, "{},{},{}", fmt_f64(*c), fmt_f64(*v), self.seed)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(file)
    }

    /// Reads back what `write_csv` produced; values round-trip bit-exactly.
    pub fn read_csv<R: BufRead>(input: R, location: &str) -> Result<Self> {
        let mut header = std::collections::HashMap::new();
        let mut coordinates = Vec::new();
        let mut samples = Vec::new();
        let mut seen_columns = false;
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let at = || format!("{location}:{}", lineno + 1);
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                let (k, v) = rest
                    .split_once('=')
                    .ok_or_else(|| Error::parse(at(), "header line without '='"))?;
                header.insert(k.trim().to_string(), v.trim().to_string());
                continue;
            }
            if !seen_columns {
                seen_columns = true;
                continue;
            }
            let mut fields = trimmed.split(',');
            let mut next = |name: &str| -> Result<f64> {
                fields
                    .next()
                    .ok_or_else(|| Error::parse(at(), format!("missing {name} column")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::parse(at(), format!("{name}: {e}")))
            };
            coordinates.push(next("coordinate")?);
            samples.push(next("value")?);
        }
        let get = |k: &str| -> Result<&String> {
            header
                .get(k)
                .ok_or_else(|| Error::parse(location, format!("missing header '{k}'")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse::<f64>()
                .map_err(|e| Error::parse(location, format!("{k}: {e}")))
        };
        let int = |k: &str| -> Result<u64> {
            get(k)?
                .parse::<u64>()
                .map_err(|e| Error::parse(location, format!("{k}: {e}")))
        };
        let seed = int("seed")?;
        let realization = int("realization")?;
        let (kind, source) = match get("kind")?.as_str() {
            "temporal" => (
                NoiseKind::Temporal,
                NoiseSource::Ou(OUConfig {
                    tau: num("tau")?,
                    c: num("c")?,
                    seed,
                    dt_sample: num("dt_sample")?,
                }),
            ),
            "spatial" => (
                NoiseKind::Spatial,
                NoiseSource::Spatial {
                    alpha: num("alpha")?,
                    length: num("L")?,
                    epsilon: num("epsilon")?,
                },
            ),
            other => return Err(Error::parse(location, format!("unknown noise kind '{other}'"))),
        };
        if samples.is_empty() {
            return Err(Error::parse(location, "no samples"));
        }
        Ok(NoiseRealization {
            kind,
            coordinates,
            samples,
            source,
            seed,
            realization,
        })
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_csv(file, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn mean_var(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, var)
    }

    #[test]
    fn zero_diffusion_is_deterministic_relaxation() {
        let cfg = OUConfig {
            tau: 3.0,
            c: 0.0,
            seed: 1,
            dt_sample: 0.1,
        };
        let path = ou_path(&cfg, OuStart::Fixed(2.0), 5.0, 0).unwrap();
        assert_eq!(path.times.len(), 51);
        for (t, x) in path.times.iter().zip(&path.values) {
            assert_relative_eq!(*x, 2.0 * (-t / 3.0).exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let bad = OUConfig {
            tau: 0.0,
            c: 1.0,
            seed: 0,
            dt_sample: 0.1,
        };
        assert!(matches!(
            ou_path(&bad, OuStart::Stationary, 1.0, 0),
            Err(Error::Config(_))
        ));
        let bad = OUConfig {
            tau: 1.0,
            c: 1.0,
            seed: 0,
            dt_sample: 0.0,
        };
        assert!(matches!(
            ou_path(&bad, OuStart::Stationary, 1.0, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn fixed_start_ensemble_moments() {
        let cfg = OUConfig::with_ln2_variance(10.0, 7, 0.5);
        let t = 4.0;
        let ends: Vec<f64> = (0..10_000)
            .map(|r| *ou_path(&cfg, OuStart::Fixed(1.5), t, r).unwrap().values.last().unwrap())
            .collect();
        let (m, v) = mean_var(&ends);
        let expected_var = cfg.stationary_variance() * (1.0 - (-2.0 * t / cfg.tau).exp());
        let expected_mean = 1.5 * (-t / cfg.tau).exp();
        let se = (expected_var / ends.len() as f64).sqrt();
        assert!((m - expected_mean).abs() < 3.0 * se, "{m} vs {expected_mean}");
        assert!((v / expected_var - 1.0).abs() < 0.05, "{v} vs {expected_var}");
    }

    #[test]
    fn two_half_steps_match_one_full_step() {
        let fine = OUConfig::with_ln2_variance(2.0, 11, 0.25);
        let coarse = OUConfig { dt_sample: 0.5, ..fine };
        let pick = |cfg: &OUConfig| -> Vec<f64> {
            (0..10_000)
                .map(|r| {
                    *ou_path(cfg, OuStart::Fixed(0.8), 0.5, r)
                        .unwrap()
                        .values
                        .last()
                        .unwrap()
                })
                .collect()
        };
        let (m1, v1) = mean_var(&pick(&fine));
        let (m2, v2) = mean_var(&pick(&coarse));
        let se = (v1 / 10_000.0).sqrt();
        assert!((m1 - m2).abs() < 4.0 * se);
        assert!((v1 / v2 - 1.0).abs() < 0.06);
    }

    #[test]
    fn stationary_autocorrelation_decays_exponentially() {
        let cfg = OUConfig::with_ln2_variance(5.0, 3, 0.5);
        let path = ou_path(&cfg, OuStart::Stationary, 50_000.0, 0).unwrap();
        let (m, v) = mean_var(&path.values);
        for lag_steps in [2usize, 10, 20] {
            let x = &path.values;
            let n = x.len() - lag_steps;
            let c = (0..n).map(|i| (x[i] - m) * (x[i + lag_steps] - m)).sum::<f64>() / n as f64;
            let expected = (-(lag_steps as f64 * 0.5) / 5.0).exp();
            assert!(
                (c / v - expected).abs() < 0.05,
                "lag {lag_steps}: {} vs {expected}",
                c / v
            );
        }
        assert!((v / cfg.stationary_variance() - 1.0).abs() < 0.1);
    }

    #[test]
    fn y_has_unit_mean_and_lognormal_variance() {
        let cfg = OUConfig::with_ln2_variance(1.0, 5, 0.01);
        let path = ou_path(&cfg, OuStart::Stationary, 2000.0, 0).unwrap();
        let y = y_process(&path.values, &cfg).unwrap();
        assert!(y.iter().all(|v| *v > 0.0));
        let (m, _) = mean_var(&y);
        assert!((m - 1.0).abs() < 0.05, "{m}");

        // Var(e^X)/E(e^X)² = e^{cτ/2} − 1 = 1 when cτ/2 = ln 2.
        let ys: Vec<f64> = (0..20_000)
            .map(|r| y_process(&ou_path(&cfg, OuStart::Stationary, 0.0, r).unwrap().values, &cfg).unwrap()[0])
            .collect();
        let (m, v) = mean_var(&ys);
        assert!((v / (m * m) - 1.0).abs() < 0.1, "{}", v / (m * m));
        let logs: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
        let (_, lv) = mean_var(&logs);
        assert!((lv / LN_2 - 1.0).abs() < 0.1);
    }

    #[test]
    fn y_of_zero_path_is_constant() {
        let cfg = OUConfig::with_ln2_variance(4.0, 0, 0.1);
        let y = y_process(&[0.0; 4], &cfg).unwrap();
        for v in y {
            assert_relative_eq!(v, (-cfg.c * cfg.tau / 4.0).exp(), max_relative = 1e-15);
        }
    }

    #[test]
    fn y_overflow_is_an_error() {
        let cfg = OUConfig {
            tau: 1.0,
            c: 1.0,
            seed: 0,
            dt_sample: 0.1,
        };
        assert!(matches!(y_process(&[1e4], &cfg), Err(Error::Overflow(_))));
        assert!(matches!(y_process(&[f64::INFINITY], &cfg), Err(Error::Overflow(_))));
    }

    #[test]
    fn analytic_autocorrelation_values() {
        let cfg = OUConfig::with_ln2_variance(10.0, 0, 1.0);
        assert_relative_eq!(ou_autocorr_analytic(3.0, 3.0, &cfg), 1.0, epsilon = 1e-15);
        assert!(ou_autocorr_analytic(0.0, 1e4, &cfg) < 1e-12);
        // 2^{1/e} − 1
        let oracle = (LN_2 / std::f64::consts::E).exp() - 1.0;
        assert_relative_eq!(ou_autocorr_analytic(0.0, 10.0, &cfg), oracle, max_relative = 1e-14);
        assert_relative_eq!(oracle, 0.2905, epsilon = 1e-4);
    }

    #[test]
    fn triangular_kernel_shape_and_integral() {
        let alpha = 2.0;
        assert_relative_eq!(triangular_a(0.0, alpha), 0.5);
        assert_eq!(triangular_a(alpha, alpha), 0.0);
        assert_eq!(triangular_a(-alpha, alpha), 0.0);
        let n = 2000;
        let l = 4.5;
        let h = l / n as f64;
        let f = |x: f64| triangular_a(x, alpha) + triangular_a(x - l, alpha);
        let mut s = 0.5 * (f(0.0) + f(l));
        for i in 1..n {
            s += f(i as f64 * h);
        }
        assert_relative_eq!(s * h, 1.0, epsilon = 1e-5);
    }

    #[test]
    fn covariance_structure() {
        let cov = build_spatial_covariance(2.0, 4.5, 20).unwrap();
        let c = &cov.matrix;
        let n = c.nrows();
        assert_eq!(n, 21);
        assert_eq!(c, &c.transpose());
        for i in 1..n {
            for j in 1..n {
                assert_relative_eq!(c[(i, j)], c[(i - 1, j - 1)], epsilon = 1e-14);
            }
        }
        // The first N points are the distinct periodic sites; that block is circulant.
        let sums: Vec<f64> = (0..n - 1).map(|i| (0..n - 1).map(|j| c[(i, j)]).sum()).collect();
        for s in &sums {
            assert_relative_eq!(*s, sums[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn periodic_images_enter_beyond_l_minus_alpha() {
        let (alpha, l) = (2.0, 4.5);
        let wrap = |d: f64| triangular_a(d - l, alpha) + triangular_a(d + l, alpha);
        assert_eq!(wrap(2.4), 0.0);
        assert_relative_eq!(wrap(2.6), (1.0 - 1.9 / 2.0) / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn alpha_outside_domain_is_rejected() {
        assert!(matches!(build_spatial_covariance(4.5, 4.5, 20), Err(Error::Config(_))));
        assert!(matches!(build_spatial_covariance(0.0, 4.5, 20), Err(Error::Config(_))));
    }

    #[test]
    fn sampled_fields_have_zero_mean_and_expected_covariance() {
        let cov = build_spatial_covariance(2.0, 4.5, 20).unwrap();
        let sampler = SpatialSampler::new(cov.clone()).unwrap();
        let n = cov.positions.len();
        let draws = 4000;
        let mut acc = DMatrix::<f64>::zeros(n, n);
        for r in 0..draws {
            let f = sampler.sample(0.1, 99, r).samples;
            assert!(f.iter().sum::<f64>().abs() < 1e-12);
            let v = DVector::from_vec(f);
            acc += &v * v.transpose();
        }
        acc /= draws as f64;
        let p = DMatrix::from_element(n, n, 1.0 / n as f64);
        let q = DMatrix::identity(n, n) - p;
        let oracle = &q * &cov.matrix * &q;
        for i in [0usize, 5, 10, 19] {
            let rel = acc[(i, i + 1)] / oracle[(i, i + 1)] - 1.0;
            assert!(rel.abs() < 0.15, "entry ({i},{}) off by {rel}", i + 1);
        }
    }

    #[test]
    fn tiny_correlation_length_gives_nearly_white_fields() {
        let l = 4.5;
        let n = 200;
        let cov = build_spatial_covariance(l / n as f64, l, n).unwrap();
        let sampler = SpatialSampler::new(cov).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for r in 0..200 {
            let f = sampler.sample(0.1, 1, r).samples;
            for i in 0..f.len() - 5 {
                num += f[i] * f[i + 5];
            }
            den += f.iter().map(|v| v * v).sum::<f64>();
        }
        assert!((num / den).abs() < 0.1);
    }

    #[test]
    fn spatial_sampler_is_deterministic() {
        let cov = build_spatial_covariance(2.0, 4.5, 20).unwrap();
        let a = sample_spatial_field(&cov, 0.1, 42, 3).unwrap();
        let b = sample_spatial_field(&cov, 0.1, 42, 3).unwrap();
        assert_eq!(a, b);
        let c = sample_spatial_field(&cov, 0.1, 42, 4).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn fourier_coefficient_limits_and_value() {
        let l = 4.5;
        assert_relative_eq!(fourier_a_hat(1, 0.0, l), 4.0 / l, epsilon = 1e-10);
        assert_relative_eq!(fourier_a_hat(1, 1e-6, l), 4.0 / l, epsilon = 1e-10);
        for mu in 1..5 {
            assert!(fourier_a_hat(mu, l / mu as f64, l).abs() < 1e-10);
        }
        let value = fourier_a_hat(1, 2.0, l);
        assert_relative_eq!(value, 0.4422, epsilon = 1e-4);
        // (4/L)∫ A(ξ) cos(2πξ/L) dξ over one period
        let n = 20_000;
        let h = l / n as f64;
        let f = |x: f64| (triangular_a(x, 2.0) + triangular_a(x - l, 2.0)) * (2.0 * PI * x / l).cos();
        let mut s = 0.5 * (f(0.0) + f(l));
        for i in 1..n {
            s += f(i as f64 * h);
        }
        assert_relative_eq!(4.0 / l * s * h, value, epsilon = 1e-6);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let cfg = OUConfig::with_ln2_variance(10.0, 123, 0.01);
        let r = temporal_realization(&cfg, 3.0, 2).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let back = NoiseRealization::read_csv(buf.as_slice(), "mem").unwrap();
        assert_eq!(r, back);

        let cov = build_spatial_covariance(2.0, 4.5, 20).unwrap();
        let s = sample_spatial_field(&cov, 0.1, 5, 0).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(s, NoiseRealization::read_csv(buf.as_slice(), "mem").unwrap());
    }

    #[test]
    fn malformed_csv_reports_location() {
        let text = "# kind = temporal\n# seed = 1\n# realization = 0\n# tau = 1\n# c = 1\n# dt_sample = 1\nt,value,seed\n0,abc,1\n";
        match NoiseRealization::read_csv(text.as_bytes(), "trace.csv") {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "trace.csv:8"),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn y_is_positive(xs in prop::collection::vec(-50.0..50.0f64, 1..50), tau in 0.1..100.0f64) {
            let cfg = OUConfig::with_ln2_variance(tau, 0, 0.1);
            prop_assert!(y_process(&xs, &cfg).unwrap().iter().all(|v| *v > 0.0));
        }

        #[test]
        fn autocorrelation_is_in_unit_interval(d in 0.0..1e3f64, tau in 0.1..1e3f64, c in 0.0..5.0f64) {
            let cfg = OUConfig { tau, c, seed: 0, dt_sample: 1.0 };
            let a = ou_autocorr_analytic(0.0, d, &cfg);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
        }
    }
}
