//! Linear stability of the spatially constant state: the mode matrices
//! Hω = J − (γω²π²/L²)D, their eigenstructure, the transformed perturbation
//! matrix Ĝ = S⁻¹GS and parameter-plane scans.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{Complex, Matrix5, Vector5};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{fmt_f64, ModelParams, RateConstant, RateSubset, NUM_SPECIES};
use crate::steady_state::{jacobian_for, solve_fixed_point, FixedPoint};

pub type C64 = Complex<f64>;
pub type CMatrix5 = Matrix5<C64>;

const SCHUR_MAX_ITER: usize = 10_000;
/// Relative eigenpair residual bound (times ‖H‖).
pub const RESIDUAL_BOUND: f64 = 1e-10;
/// Eigenvector bases with a larger 2-norm condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;
/// |Re|/|Im| below which a conjugate pair counts as purely oscillatory.
pub const OSCILLATORY_RATIO: f64 = 0.05;
/// Highest mode checked for decay.
pub const HIGHEST_CHECKED_MODE: usize = 6;

#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Sorted by descending real part, ties by descending imaginary part.
    pub values: [C64; NUM_SPECIES],
    /// Unit-norm columns; the largest-magnitude component of each is real positive.
    pub vectors: CMatrix5,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralReport {
    pub omega: usize,
    pub h_omega: Matrix5<f64>,
    pub eigenvalues: Vec<C64>,
    pub eigenvectors: CMatrix5,
    /// Index of the +iθ member of the oscillatory pair.
    pub oscillatory: Option<usize>,
    /// Im λ of the oscillatory mode, 0 when there is none.
    pub theta1: f64,
    pub assumption_ok: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SensitivityEntry {
    pub sigma_name: String,
    pub g_hat_11_real: f64,
    pub g_hat_11_imag: f64,
}

#[derive(Clone, Debug)]
pub struct GHat {
    pub matrix: CMatrix5,
    /// 2-norm condition number of S.
    pub condition: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub lambda1: C64,
    /// |Re λ₁| / |Im λ₁| of the oscillatory pair (infinite without one).
    pub pair_ratio: f64,
    /// Largest real part among the three remaining eigenvalues of H₁.
    pub others_max_re: f64,
    /// (ω, max Re λ(Hω)) for ω = 2..=6.
    pub higher_modes: Vec<(usize, f64)>,
    pub ok: bool,
}

pub fn diffusion_coefficient(omega: usize, gamma: f64, length: f64) -> f64 {
    let w = omega as f64;
    gamma * w * w * PI * PI / (length * length)
}

/// Hω for the model's own diffusion pattern.
pub fn build_h(omega: usize, j: &Matrix5<f64>, params: &ModelParams) -> Result<Matrix5<f64>> {
    build_h_with(omega, j, &params.diffusivities(), params.length)
}

/// Hω = J − (ω²π²/L²)·diag(diffusivities).
pub fn build_h_with(
    omega: usize,
    j: &Matrix5<f64>,
    diffusivities: &[f64; NUM_SPECIES],
    length: f64,
) -> Result<Matrix5<f64>> {
    if omega < 1 {
        return Err(Error::config("spatial mode index must be at least 1"));
    }
    if !(length > 0.0) {
        return Err(Error::config("domain length must be positive"));
    }
    let mut h = *j;
    for (i, &g) in diffusivities.iter().enumerate() {
        h[(i, i)] -= diffusion_coefficient(omega, g, length);
    }
    Ok(h)
}

fn to_complex(m: &Matrix5<f64>) -> CMatrix5 {
    m.map(|v| C64::new(v, 0.0))
}

fn normalize_phase(v: &mut Vector5<C64>) {
    let norm = v.norm();
    if norm > 0.0 {
        *v /= C64::new(norm, 0.0);
    }
    let max = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let pivot = v.iter().position(|c| c.norm() >= max * (1.0 - 1e-12)).unwrap_or(0);
    let p = v[pivot];
    if p.norm() > 0.0 {
        let phase = p.conj() / p.norm();
        *v *= phase;
        v[pivot] = C64::new(v[pivot].re, 0.0);
    }
}

fn compare_eigenvalues(a: &C64, b: &C64) -> std::cmp::Ordering {
    b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im))
}

/// Complex eigendecomposition of a real 5×5 matrix. Eigenvalues come from
/// a real Schur form; each eigenvector (or basis of a repeated eigenvalue)
/// is the right singular subspace of H − λI for its smallest singular values.
pub fn eigendecompose(h: &Matrix5<f64>) -> Result<EigenDecomposition> {
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix passed to the eigensolver".into()));
    }
    let schur = nalgebra::Schur::try_new(*h, f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::Eigen("real Schur iteration did not converge".into()))?;
    let mut values: Vec<C64> = schur.complex_eigenvalues().iter().copied().collect();
    values.sort_by(compare_eigenvalues);

    let hnorm = h.norm();
    let scale = hnorm.max(f64::MIN_POSITIVE);
    let cluster_tol = 1e-9 * scale;
    let hc = to_complex(h);
    let mut vectors = CMatrix5::zeros();
    let mut k = 0;
    while k < NUM_SPECIES {
        let lambda = values[k];
        let mut m = 1;
        while k + m < NUM_SPECIES && (values[k + m] - lambda).norm() <= cluster_tol {
            m += 1;
        }
        let shifted = hc - CMatrix5::identity() * lambda;
        let svd = shifted.svd(false, true);
        let v_t = svd
            .v_t
            .ok_or_else(|| Error::Eigen("singular value decomposition failed".into()))?;
        let mut order: Vec<usize> = (0..NUM_SPECIES).collect();
        order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        for (slot, &row) in order.iter().take(m).enumerate() {
            let mut v: Vector5<C64> = v_t.row(row).transpose().map(|c| c.conj());
            normalize_phase(&mut v);
            vectors.set_column(k + slot, &v);
        }
        k += m;
    }

    let bound = RESIDUAL_BOUND * scale;
    for (c, lambda) in values.iter().enumerate() {
        let s = vectors.column(c);
        let r = (hc * s - s * *lambda).norm() / s.norm();
        if !(r < bound) {
            return Err(Error::Eigen(format!(
                "eigenpair {c} residual {r:.3e} exceeds {bound:.3e}"
            )));
        }
    }
    Ok(EigenDecomposition {
        values: [values[0], values[1], values[2], values[3], values[4]],
        vectors,
    })
}

/// Index of the +Im member of the conjugate pair maximising |Im|/(1 + |Re|).
pub fn oscillatory_index(values: &[C64]) -> Option<usize> {
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.im > 1e-12 * scale.max(1.0))
        .max_by(|(_, a), (_, b)| {
            let fa = a.im.abs() / (1.0 + a.re.abs());
            let fb = b.im.abs() / (1.0 + b.re.abs());
            fa.total_cmp(&fb)
        })
        .map(|(i, _)| i)
}

fn mode_assumption_holds(omega: usize, values: &[C64], osc: Option<usize>) -> bool {
    if omega >= 2 {
        return values.iter().all(|v| v.re < 0.0);
    }
    let Some(i) = osc else { return false };
    let lambda = values[i];
    if lambda.re.abs() >= OSCILLATORY_RATIO * lambda.im.abs() {
        return false;
    }
    // The partner is the conjugate; everything else must decay.
    let mut partner_seen = false;
    for (k, v) in values.iter().enumerate() {
        if k == i {
            continue;
        }
        if !partner_seen && (*v - lambda.conj()).norm() <= 1e-9 * lambda.norm() {
            partner_seen = true;
            continue;
        }
        if v.re >= 0.0 {
            return false;
        }
    }
    partner_seen
}

/// Eigenstructure of Hω for a given reaction Jacobian.
pub fn spectral_report(omega: usize, j: &Matrix5<f64>, params: &ModelParams) -> Result<SpectralReport> {
    let h = build_h(omega, j, params)?;
    let eig = eigendecompose(&h)?;
    let osc = oscillatory_index(&eig.values);
    Ok(SpectralReport {
        omega,
        h_omega: h,
        eigenvalues: eig.values.to_vec(),
        eigenvectors: eig.vectors,
        oscillatory: osc,
        theta1: osc.map(|i| eig.values[i].im).unwrap_or(0.0),
        assumption_ok: mode_assumption_holds(omega, &eig.values, osc),
    })
}

/// Fixed point, full Jacobian and the H₁ report in one call.
pub fn analyze_preset(params: &ModelParams) -> Result<(FixedPoint, SpectralReport)> {
    let fp = solve_fixed_point(params, None)?;
    let j = jacobian_for(&fp.rho_inf, &params.rates(), RateSubset::all());
    let report = spectral_report(1, &j, params)?;
    Ok((fp, report))
}

impl SpectralReport {
    pub fn leading_oscillatory(&self) -> Result<C64> {
        self.oscillatory
            .map(|i| self.eigenvalues[i])
            .ok_or_else(|| Error::NoOscillation(format!("H_{} has no complex eigenvalue pair", self.omega)))
    }

    pub fn period(&self) -> f64 {
        if self.theta1 > 0.0 {
            2.0 * PI / self.theta1
        } else {
            f64::INFINITY
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn condition_number(s: &CMatrix5) -> f64 {
    let sv = s.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Ĝ = S⁻¹GS.
pub fn g_hat(s: &CMatrix5, g: &Matrix5<f64>) -> Result<GHat> {
    let condition = condition_number(s);
    if !(condition < MAX_CONDITION) {
        return Err(Error::SingularBasis(condition));
    }
    let s_inv = s.try_inverse().ok_or(Error::SingularBasis(condition))?;
    Ok(GHat {
        matrix: s_inv * to_complex(g) * s,
        condition,
    })
}

/// Ĝ₁₁ in the H₁ eigenbasis for G built from the rate constants in `subset`.
pub fn g_hat_11(params: &ModelParams, subset: RateSubset) -> Result<C64> {
    let fp = solve_fixed_point(params, None)?;
    g_hat_11_at(&fp.rho_inf, params, subset)
}

pub fn g_hat_11_at(rho_inf: &[f64; NUM_SPECIES], params: &ModelParams, subset: RateSubset) -> Result<C64> {
    let rates = params.rates();
    let j = jacobian_for(rho_inf, &rates, RateSubset::all());
    let report = spectral_report(1, &j, params)?;
    let i = report
        .oscillatory
        .ok_or_else(|| Error::NoOscillation("H_1 has no complex eigenvalue pair".into()))?;
    let g = jacobian_for(rho_inf, &rates, subset);
    let gh = g_hat(&report.eigenvectors, &g)?;
    Ok(gh.matrix[(i, i)])
}

/// One row per rate constant: Ĝ₁₁ with G carrying that constant alone.
pub fn sensitivity_table(params: &ModelParams) -> Result<Vec<SensitivityEntry>> {
    let fp = solve_fixed_point(params, None)?;
    RateConstant::ALL
        .iter()
        .map(|&rate| {
            let g11 = g_hat_11_at(&fp.rho_inf, params, RateSubset::single(rate))?;
            Ok(SensitivityEntry {
                sigma_name: rate.name().to_string(),
                g_hat_11_real: g11.re,
                g_hat_11_imag: g11.im,
            })
        })
        .collect()
}

pub fn write_sensitivity_csv<W: Write>(entries: &[SensitivityEntry], mut out: W) -> Result<()> {
    writeln!(out, "sigma,g_hat_11_real,g_hat_11_imag")?;
    for e in entries {
        writeln!(
            out,
            "{},{},{}",
            e.sigma_name,
            fmt_f64(e.g_hat_11_real),
            fmt_f64(e.g_hat_11_imag)
        )?;
    }
    Ok(())
}

/// Checks that H₁ has one near-imaginary pair with the rest decaying and that
/// every higher mode up to ω = 6 decays.
pub fn assumption_check(params: &ModelParams) -> Result<AssumptionCheck> {
    let fp = solve_fixed_point(params, None)?;
    let j = jacobian_for(&fp.rho_inf, &params.rates(), RateSubset::all());
    let h1 = spectral_report(1, &j, params)?;
    let (lambda1, pair_ratio) = match h1.oscillatory {
        Some(i) => {
            let l = h1.eigenvalues[i];
            (l, l.re.abs() / l.im.abs())
        }
        None => (h1.eigenvalues[0], f64::INFINITY),
    };
    let others_max_re = h1
        .eigenvalues
        .iter()
        .filter(|v| {
            h1.oscillatory.is_none() || ((**v - lambda1).norm() > 1e-12 && (**v - lambda1.conj()).norm() > 1e-12)
        })
        .map(|v| v.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut higher_modes = Vec::new();
    for omega in 2..=HIGHEST_CHECKED_MODE {
        let eig = eigendecompose(&build_h(omega, &j, params)?)?;
        higher_modes.push((omega, eig.values[0].re));
    }
    let ok = h1.oscillatory.is_some()
        && pair_ratio < OSCILLATORY_RATIO
        && others_max_re < 0.0
        && higher_modes.iter().all(|&(_, re)| re < 0.0);
    Ok(AssumptionCheck {
        lambda1,
        pair_ratio,
        others_max_re,
        higher_modes,
        ok,
    })
}

/// One scan axis: a rate constant swept over `points` values in [min, max].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanAxis {
    pub rate: RateConstant,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl ScanAxis {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.min > self.max {
            return Err(Error::config(format!(
                "invalid range [{}, {}] for {}",
                self.min, self.max, self.rate
            )));
        }
        if !(self.min > 0.0) {
            return Err(Error::config(format!("{} must stay positive", self.rate)));
        }
        if self.min == self.max {
            return Ok(vec![self.min]);
        }
        if self.points < 2 {
            return Err(Error::config("a non-degenerate scan axis needs at least two points"));
        }
        let n = self.points - 1;
        Ok((0..=n)
            .map(|k| self.min + (self.max - self.min) * k as f64 / n as f64)
            .collect())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanPlane {
    pub a: ScanAxis,
    pub b: ScanAxis,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ScanCell {
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub max_re_lambda: f64,
    /// 2π/Im λ of the oscillatory pair; NaN without one.
    pub period_s: f64,
    pub valid: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanGrid {
    pub plane: ScanPlane,
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    /// Row-major: `cells[ia * b_values.len() + ib]`.
    pub cells: Vec<ScanCell>,
}

fn reduced(rho: &[f64; NUM_SPECIES]) -> [f64; 3] {
    [rho[0], rho[1], rho[2]]
}

fn scan_cell(params: &ModelParams, guess: Option<[f64; 3]>) -> (ScanCell, Option<[f64; 3]>) {
    let invalid = ScanCell {
        sigma_a: f64::NAN,
        sigma_b: f64::NAN,
        max_re_lambda: f64::NAN,
        period_s: f64::NAN,
        valid: false,
    };
    let fp = match solve_fixed_point(params, guess) {
        Ok(fp) => fp,
        Err(_) => match solve_fixed_point(params, None) {
            Ok(fp) => fp,
            Err(_) => return (invalid, None),
        },
    };
    let j = jacobian_for(&fp.rho_inf, &params.rates(), RateSubset::all());
    let eig = match build_h(1, &j, params).and_then(|h| eigendecompose(&h)) {
        Ok(e) => e,
        Err(_) => return (invalid, Some(reduced(&fp.rho_inf))),
    };
    let period = oscillatory_index(&eig.values)
        .map(|i| 2.0 * PI / eig.values[i].im)
        .unwrap_or(f64::NAN);
    (
        ScanCell {
            max_re_lambda: eig.values[0].re,
            period_s: period,
            valid: true,
            ..invalid
        },
        Some(reduced(&fp.rho_inf)),
    )
}

/// Max Re λ(H₁) and period over a grid in the (σ_a, σ_b) plane. Rows run in
/// parallel; within a row each fixed point starts from its neighbour's.
pub fn stability_scan(params: &ModelParams, plane: &ScanPlane) -> Result<ScanGrid> {
    stability_scan_with_progress(params, plane, |_| {})
}

pub fn stability_scan_with_progress<P>(params: &ModelParams, plane: &ScanPlane, progress: P) -> Result<ScanGrid>
where
    P: Fn(usize) + Sync,
{
    params.validate()?;
    if plane.a.rate == plane.b.rate {
        return Err(Error::config("scan axes must use different rate constants"));
    }
    let a_values = plane.a.values()?;
    let b_values = plane.b.values()?;
    let base_guess = solve_fixed_point(params, None).ok().map(|fp| reduced(&fp.rho_inf));
    let rows: Vec<Vec<ScanCell>> = a_values
        .par_iter()
        .enumerate()
        .map(|(ia, &sa)| {
            let mut guess = base_guess;
            let mut row = Vec::with_capacity(b_values.len());
            for &sb in &b_values {
                let mut p = params.clone();
                p.set_rate(plane.a.rate, sa);
                p.set_rate(plane.b.rate, sb);
                let (mut cell, next) = scan_cell(&p, guess);
                cell.sigma_a = sa;
                cell.sigma_b = sb;
                if next.is_some() {
                    guess = next;
                }
                row.push(cell);
            }
            progress(ia);
            row
        })
        .collect();
    Ok(ScanGrid {
        plane: plane.clone(),
        a_values,
        b_values,
        cells: rows.into_iter().flatten().collect(),
    })
}

/// Which per-cell quantity a contour is drawn for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanField {
    MaxReLambda,
    Period,
}

impl ScanGrid {
    pub fn cell(&self, ia: usize, ib: usize) -> &ScanCell {
        &self.cells[ia * self.b_values.len() + ib]
    }

    fn field(&self, ia: usize, ib: usize, field: ScanField) -> Option<f64> {
        let c = self.cell(ia, ib);
        let v = match field {
            ScanField::MaxReLambda => c.max_re_lambda,
            ScanField::Period => c.period_s,
        };
        (c.valid && v.is_finite()).then_some(v)
    }

    /// Level-set segments by marching squares with linear interpolation on
    /// cell edges. Each segment is a pair of (σ_a, σ_b) points.
    pub fn contour(&self, field: ScanField, level: f64) -> Vec<[(f64, f64); 2]> {
        let (na, nb) = (self.a_values.len(), self.b_values.len());
        let mut segments = Vec::new();
        if na < 2 || nb < 2 {
            return segments;
        }
        for ia in 0..na - 1 {
            for ib in 0..nb - 1 {
                let corners = [(ia, ib), (ia + 1, ib), (ia + 1, ib + 1), (ia, ib + 1)];
                let vals: Option<Vec<f64>> = corners.iter().map(|&(i, k)| self.field(i, k, field)).collect();
                let Some(vals) = vals else { continue };
                let mut crossings = Vec::new();
                for e in 0..4 {
                    let (p, q) = (e, (e + 1) % 4);
                    let (fp, fq) = (vals[p] - level, vals[q] - level);
                    if (fp < 0.0) != (fq < 0.0) {
                        let t = fp / (fp - fq);
                        let (pa, pb) = (self.a_values[corners[p].0], self.b_values[corners[p].1]);
                        let (qa, qb) = (self.a_values[corners[q].0], self.b_values[corners[q].1]);
                        crossings.push((pa + t * (qa - pa), pb + t * (qb - pb)));
                    }
                }
                match crossings.len() {
                    2 => segments.push([crossings[0], crossings[1]]),
                    4 => {
                        // Saddle: resolve with the cell-centre average.
                        let centre = vals.iter().sum::<f64>() / 4.0 - level;
                        if (centre < 0.0) == (vals[0] - level < 0.0) {
                            segments.push([crossings[0], crossings[3]]);
                            segments.push([crossings[1], crossings[2]]);
                        } else {
                            segments.push([crossings[0], crossings[1]]);
                            segments.push([crossings[2], crossings[3]]);
                        }
                    }
                    _ => {}
                }
            }
        }
        segments
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "{},{},max_re_lambda,period_s,valid",
            self.plane.a.rate.name(),
            self.plane.b.rate.name()
        )?;
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(c.sigma_a),
                fmt_f64(c.sigma_b),
                fmt_f64(c.max_re_lambda),
                fmt_f64(c.period_s),
                u8::from(c.valid)
            )?;
        }
        Ok(())
    }
}

pub fn write_contour_csv<W: Write>(segments: &[[(f64, f64); 2]], a_name: &str, b_name: &str, mut out: W) -> Result<()> {
    writeln!(out, "segment,{a_name},{b_name}")?;
    for (k, seg) in segments.iter().enumerate() {
        for &(a, b) in seg {
            writeln!(out, "{k},{},{}", fmt_f64(a), fmt_f64(b))?;
        }
    }
    Ok(())
}
