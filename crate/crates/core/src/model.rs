//! Five-species Min reaction-diffusion model in one space dimension.
//!
//! Species are ordered `(DD, DT, E, d, de)`: cytosolic MinD:ADP, cytosolic
//! MinD:ATP, cytosolic MinE, membrane MinD:ATP and the membrane MinE:MinD:ATP
//! complex. The reaction part is written as five elementary fluxes, one per
//! rate constant, each with a fixed stoichiometry vector. Every stoichiometry
//! vector is orthogonal to the two conservation vectors `(1,1,0,1,1)` and
//! `(0,0,1,0,1)`, which makes conservation of total MinD and MinE structural.
//!
//! Concentrations are in molecules/μm³, lengths in μm and times in s.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_SPECIES: usize = 5;

pub const AVOGADRO: f64 = 6.022_140_76e23;
/// Litres per cubic micrometre.
pub const LITRES_PER_UM3: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Species {
    /// Cytosolic MinD:ADP.
    CytoDAdp,
    /// Cytosolic MinD:ATP.
    CytoDAtp,
    /// Cytosolic MinE.
    CytoE,
    /// Membrane-bound MinD:ATP.
    MemD,
    /// Membrane-bound MinE:MinD:ATP.
    MemDE,
}

impl Species {
    pub const ALL: [Species; NUM_SPECIES] = [
        Species::CytoDAdp,
        Species::CytoDAtp,
        Species::CytoE,
        Species::MemD,
        Species::MemDE,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Species::CytoDAdp => "DD",
            Species::CytoDAtp => "DT",
            Species::CytoE => "E",
            Species::MemD => "d",
            Species::MemDE => "de",
        }
    }

    /// Cytosolic species diffuse, membrane species do not.
    pub fn diffuses(self) -> bool {
        DIFFUSION_MASK[self.index()]
    }
}

/// Per-species diffusion flag in species order.
pub const DIFFUSION_MASK: [bool; NUM_SPECIES] = [true, true, true, false, false];

/// Weights of the MinD conservation group: DD + DT + d + de.
pub const MIND_GROUP: [f64; NUM_SPECIES] = [1.0, 1.0, 0.0, 1.0, 1.0];
/// Weights of the MinE conservation group: E + de.
pub const MINE_GROUP: [f64; NUM_SPECIES] = [0.0, 0.0, 1.0, 0.0, 1.0];

/// The five rate constants of the model, one per elementary flux.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RateConstant {
    /// σ_de: MinE-stimulated hydrolysis, de → DD + E.
    Hydrolysis,
    /// σ_DT: nucleotide exchange in the cytosol, DD → DT.
    Exchange,
    /// σ_D: spontaneous membrane binding, DT → d.
    Binding,
    /// σ_dD: cooperative membrane binding, DT → d at rate ∝ (d + de).
    CooperativeBinding,
    /// σ_E: MinE recruitment, d + E → de.
    ERecruitment,
}

impl RateConstant {
    pub const ALL: [RateConstant; NUM_SPECIES] = [
        RateConstant::Hydrolysis,
        RateConstant::Exchange,
        RateConstant::Binding,
        RateConstant::CooperativeBinding,
        RateConstant::ERecruitment,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Short name used in config files, tables and CLI flags.
    pub fn name(self) -> &'static str {
        match self {
            RateConstant::Hydrolysis => "sigma_de",
            RateConstant::Exchange => "sigma_DT",
            RateConstant::Binding => "sigma_D",
            RateConstant::CooperativeBinding => "sigma_dD",
            RateConstant::ERecruitment => "sigma_E",
        }
    }

    /// Stoichiometry of this rate constant's flux in species order.
    pub fn stoichiometry(self) -> [f64; NUM_SPECIES] {
        STOICHIOMETRY[self.index()]
    }
}

impl fmt::Display for RateConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RateConstant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim();
        let key = key.strip_prefix("sigma_").unwrap_or(key);
        match key {
            "de" => Ok(RateConstant::Hydrolysis),
            "DT" => Ok(RateConstant::Exchange),
            "D" => Ok(RateConstant::Binding),
            "dD" => Ok(RateConstant::CooperativeBinding),
            "E" => Ok(RateConstant::ERecruitment),
            _ => Err(Error::config(format!("unknown rate constant '{s}'"))),
        }
    }
}

const STOICHIOMETRY: [[f64; NUM_SPECIES]; NUM_SPECIES] = [
    // de -> DD + E
    [1.0, 0.0, 1.0, 0.0, -1.0],
    // DD -> DT
    [-1.0, 1.0, 0.0, 0.0, 0.0],
    // DT -> d
    [0.0, -1.0, 0.0, 1.0, 0.0],
    // DT -> d, cooperative
    [0.0, -1.0, 0.0, 1.0, 0.0],
    // d + E -> de
    [0.0, 0.0, -1.0, -1.0, 1.0],
];

/// A subset of rate constants, used to split the reaction terms into an
/// unperturbed part and a perturbed part.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RateSubset(u8);

impl RateSubset {
    pub fn empty() -> Self {
        RateSubset(0)
    }

    pub fn all() -> Self {
        RateSubset(0b1_1111)
    }

    pub fn single(rate: RateConstant) -> Self {
        RateSubset(1 << rate.index())
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut set = RateSubset::empty();
        for name in names {
            set = set.with(name.as_ref().parse()?);
        }
        Ok(set)
    }

    pub fn with(self, rate: RateConstant) -> Self {
        RateSubset(self.0 | (1 << rate.index()))
    }

    pub fn contains(self, rate: RateConstant) -> bool {
        self.0 & (1 << rate.index()) != 0
    }

    pub fn complement(self) -> Self {
        RateSubset(!self.0 & 0b1_1111)
    }

    pub fn iter(self) -> impl Iterator<Item = RateConstant> {
        RateConstant::ALL.into_iter().filter(move |r| self.contains(*r))
    }
}

/// Reaction rates, diffusion constants, geometry and conserved totals.
///
/// Rates are stored in the model's working units: first-order rates in 1/s and
/// bimolecular rates in μm³/(molecule·s). `rate_scale` multiplies every rate
/// constant and is 1 for the shipped preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub sigma: [f64; NUM_SPECIES],
    pub gamma_d: f64,
    pub gamma_e: f64,
    pub length: f64,
    pub rho_d_tot: f64,
    pub rho_e_tot: f64,
    pub rate_scale: f64,
}

/// Name of the shipped base instance.
pub const PRESET_HUANG_1D: &str = "huang2003_1d";

impl ModelParams {
    /// The base parameter set on a 4.5 μm domain.
    ///
    /// Bimolecular rates given in M⁻¹s⁻¹ are converted with
    /// [`molar_to_volume_rate`]; the spontaneous binding rate 0.025 μm/s is
    /// taken per unit length (1 μm). Totals are 4500 MinD and 1575 MinE
    /// molecules in 3.2725 μm³.
    pub fn huang2003_1d() -> Self {
        let volume = 3.2725;
        ModelParams {
            sigma: [
                0.7,
                1.0,
                0.025,
                molar_to_volume_rate(6.8e5),
                molar_to_volume_rate(5.60e7),
            ],
            gamma_d: 2.5,
            gamma_e: 2.5,
            length: 4.5,
            rho_d_tot: 4500.0 / volume,
            rho_e_tot: 1575.0 / volume,
            rate_scale: 1.0,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name.trim() {
            PRESET_HUANG_1D => Ok(Self::huang2003_1d()),
            other => Err(Error::config(format!("unknown preset '{other}'"))),
        }
    }

    /// Effective rate constant (including `rate_scale`).
    pub fn rate(&self, rate: RateConstant) -> f64 {
        self.sigma[rate.index()] * self.rate_scale
    }

    pub fn rates(&self) -> [f64; NUM_SPECIES] {
        let mut out = self.sigma;
        for r in &mut out {
            *r *= self.rate_scale;
        }
        out
    }

    pub fn set_rate(&mut self, rate: RateConstant, value: f64) {
        self.sigma[rate.index()] = value;
    }

    /// Diffusion constant per species, zero for membrane species.
    pub fn diffusivities(&self) -> [f64; NUM_SPECIES] {
        [self.gamma_d, self.gamma_d, self.gamma_e, 0.0, 0.0]
    }

    pub fn validate(&self) -> Result<()> {
        for rate in RateConstant::ALL {
            let v = self.sigma[rate.index()];
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{} must be positive, got {v}", rate.name())));
            }
        }
        let named = [
            ("gamma_D", self.gamma_d),
            ("gamma_E", self.gamma_e),
            ("L", self.length),
            ("rho_Dtot", self.rho_d_tot),
            ("rho_Etot", self.rho_e_tot),
            ("rate_scale", self.rate_scale),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Parse a `key = value` config. A `preset = <name>` line selects the
    /// base instance (default `huang2003_1d`); other keys override it.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let entries = parse_key_values(text)?;
        let base = entries
            .iter()
            .find(|(k, _, _)| k == "preset")
            .map(|(_, v, _)| v.as_str())
            .unwrap_or(PRESET_HUANG_1D);
        let mut params = Self::preset(base)?;
        for (key, value, line) in &entries {
            if key == "preset" {
                continue;
            }
            let v: f64 = value
                .parse()
                .map_err(|_| Error::parse(format!("line {line}"), format!("'{value}' is not a number")))?;
            params.set_key(key, v).map_err(|e| match e {
                Error::Config(m) => Error::parse(format!("line {line}"), m),
                other => other,
            })?;
        }
        params.validate()?;
        Ok(params)
    }

    pub fn from_config_file(path: &std::path::Path) -> Result<Self> {
        Self::from_config_str(&std::fs::read_to_string(path)?)
    }

    /// Set one documented key. Accepted keys: `sigma_de`, `sigma_DT`,
    /// `sigma_D`, `sigma_dD`, `sigma_E`, `gamma_D`, `gamma_E`, `L`,
    /// `rho_Dtot`, `rho_Etot`, `rate_scale`.
    pub fn set_key(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "gamma_D" => self.gamma_d = value,
            "gamma_E" => self.gamma_e = value,
            "L" => self.length = value,
            "rho_Dtot" => self.rho_d_tot = value,
            "rho_Etot" => self.rho_e_tot = value,
            "rate_scale" => self.rate_scale = value,
            k if k.starts_with("sigma_") => {
                let rate: RateConstant = k.parse()?;
                self.set_rate(rate, value);
            }
            other => return Err(Error::config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        for rate in RateConstant::ALL {
            s.push_str(&format!("{} = {}\n", rate.name(), fmt_f64(self.sigma[rate.index()])));
        }
        for (k, v) in [
            ("gamma_D", self.gamma_d),
            ("gamma_E", self.gamma_e),
            ("L", self.length),
            ("rho_Dtot", self.rho_d_tot),
            ("rho_Etot", self.rho_e_tot),
            ("rate_scale", self.rate_scale),
        ] {
            s.push_str(&format!("{k} = {}\n", fmt_f64(v)));
        }
        s
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::huang2003_1d()
    }
}

/// M⁻¹s⁻¹ → μm³/(molecule·s).
pub fn molar_to_volume_rate(per_molar_per_s: f64) -> f64 {
    per_molar_per_s / (AVOGADRO * LITRES_PER_UM3)
}

/// Round-trip float formatting with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parse `key = value` lines; `#` starts a comment. Returns (key, value, line number).
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String, usize)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(format!("line {}", i + 1), "expected 'key = value'"))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(Error::parse(format!("line {}", i + 1), "empty key or value"));
        }
        out.push((k.to_string(), v.to_string(), i + 1));
    }
    Ok(out)
}

/// Elementary fluxes at one point, in [`RateConstant`] order.
#[inline]
pub fn fluxes(rho: &[f64; NUM_SPECIES], rates: &[f64; NUM_SPECIES]) -> [f64; NUM_SPECIES] {
    let [dd, dt, e, d, de] = *rho;
    [
        rates[0] * de,
        rates[1] * dd,
        rates[2] * dt,
        rates[3] * (d + de) * dt,
        rates[4] * d * e,
    ]
}

/// Gradient of each flux with respect to the five concentrations.
pub fn flux_gradients(rho: &[f64; NUM_SPECIES], rates: &[f64; NUM_SPECIES]) -> [[f64; NUM_SPECIES]; NUM_SPECIES] {
    let [_, dt, e, d, de] = *rho;
    [
        [0.0, 0.0, 0.0, 0.0, rates[0]],
        [rates[1], 0.0, 0.0, 0.0, 0.0],
        [0.0, rates[2], 0.0, 0.0, 0.0],
        [0.0, rates[3] * (d + de), 0.0, rates[3] * dt, rates[3] * dt],
        [0.0, 0.0, rates[4] * d, rates[4] * e, 0.0],
    ]
}

/// Full reaction terms g(ρ) at one point.
#[inline]
pub fn reaction_terms(rho: &[f64; NUM_SPECIES], rates: &[f64; NUM_SPECIES]) -> [f64; NUM_SPECIES] {
    let [v_hyd, v_ex, v_bind, v_coop, v_rec] = fluxes(rho, rates);
    let v_mem = v_bind + v_coop;
    [v_hyd - v_ex, v_ex - v_mem, v_hyd - v_rec, v_mem - v_rec, v_rec - v_hyd]
}

/// Reaction terms restricted to the fluxes of `subset`.
pub fn reaction_terms_subset(
    rho: &[f64; NUM_SPECIES],
    rates: &[f64; NUM_SPECIES],
    subset: RateSubset,
) -> [f64; NUM_SPECIES] {
    let v = fluxes(rho, rates);
    let mut out = [0.0; NUM_SPECIES];
    for rate in subset.iter() {
        let s = rate.stoichiometry();
        for (o, si) in out.iter_mut().zip(s) {
            *o += si * v[rate.index()];
        }
    }
    out
}

/// Concentration profiles of all species on the uniform grid `x_i = i·L/N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub time: f64,
    pub length: f64,
    /// One entry per grid point, species in model order.
    pub values: Vec<[f64; NUM_SPECIES]>,
}

impl FieldState {
    pub fn uniform(length: f64, intervals: usize, rho: [f64; NUM_SPECIES], time: f64) -> Self {
        FieldState {
            time,
            length,
            values: vec![rho; intervals + 1],
        }
    }

    /// Number of grid intervals N.
    pub fn intervals(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn dx(&self) -> f64 {
        self.length / self.intervals() as f64
    }

    pub fn positions(&self) -> Vec<f64> {
        grid_positions(self.length, self.intervals())
    }

    pub fn species(&self, s: Species) -> Vec<f64> {
        self.values.iter().map(|v| v[s.index()]).collect()
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.values.iter().flatten().all(|v| v.is_finite()) && self.time.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(format!("field state at t = {}", self.time)))
        }
    }

    /// Grid points and species where the concentration is negative.
    pub fn negative_entries(&self) -> Vec<NegativeConcentration> {
        let mut out = Vec::new();
        for (point, v) in self.values.iter().enumerate() {
            for s in Species::ALL {
                if v[s.index()] < 0.0 {
                    out.push(NegativeConcentration {
                        point,
                        species: s,
                        value: v[s.index()],
                    });
                }
            }
        }
        out
    }
}

pub fn grid_positions(length: f64, intervals: usize) -> Vec<f64> {
    let dx = length / intervals as f64;
    (0..=intervals).map(|i| i as f64 * dx).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NegativeConcentration {
    pub point: usize,
    pub species: Species,
    pub value: f64,
}

/// Multiplicative rate perturbation κ.
#[derive(Clone, Copy, Debug)]
pub enum Kappa<'a> {
    Uniform(f64),
    PerPoint(&'a [f64]),
}

impl Kappa<'_> {
    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        match self {
            Kappa::Uniform(k) => *k,
            Kappa::PerPoint(ks) => ks[i],
        }
    }
}

/// Pointwise reaction rates plus any negative concentrations seen on input.
#[derive(Clone, Debug)]
pub struct ReactionRates {
    pub values: Vec<[f64; NUM_SPECIES]>,
    pub negative: Vec<NegativeConcentration>,
}

/// κ·g(ρ) at every grid point (no diffusion).
///
/// Negative concentrations do not stop the evaluation; they are returned in
/// [`ReactionRates::negative`] and logged.
pub fn reaction_rhs(state: &FieldState, params: &ModelParams, kappa: Kappa<'_>) -> Result<ReactionRates> {
    state.check_finite()?;
    if let Kappa::PerPoint(ks) = kappa {
        if ks.len() != state.values.len() {
            return Err(Error::config(format!(
                "kappa has {} points, state has {}",
                ks.len(),
                state.values.len()
            )));
        }
    }
    let rates = params.rates();
    let mut values = Vec::with_capacity(state.values.len());
    for (i, rho) in state.values.iter().enumerate() {
        let k = kappa.at(i);
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::NonFinite(format!("kappa at point {i} is {k}")));
        }
        let g = reaction_terms(rho, &rates);
        values.push(g.map(|v| k * v));
    }
    let negative = state.negative_entries();
    if !negative.is_empty() {
        log::warn!("{} negative concentrations at t = {}", negative.len(), state.time);
    }
    Ok(ReactionRates { values, negative })
}

/// γ·∂²ρ/∂x² by second-order central differences with reflecting ends.
pub fn diffusion_rhs(state: &FieldState, params: &ModelParams) -> Result<Vec<[f64; NUM_SPECIES]>> {
    let n = state.intervals();
    if n < 2 {
        return Err(Error::config(format!("need at least 2 grid intervals, got {n}")));
    }
    state.check_finite()?;
    let coeff = diffusion_coefficients(params, state.dx());
    let mut out = vec![[0.0; NUM_SPECIES]; n + 1];
    add_diffusion(&state.values, &coeff, &mut out);
    Ok(out)
}

/// γ_s/Δx² per species (zero for membrane species).
pub(crate) fn diffusion_coefficients(params: &ModelParams, dx: f64) -> [f64; NUM_SPECIES] {
    params.diffusivities().map(|g| g / (dx * dx))
}

/// Adds the discrete Laplacian term; ghost values ρ₋₁ = ρ₁ and ρ_{N+1} = ρ_{N−1}.
#[inline]
pub(crate) fn add_diffusion(y: &[[f64; NUM_SPECIES]], coeff: &[f64; NUM_SPECIES], out: &mut [[f64; NUM_SPECIES]]) {
    let n = y.len() - 1;
    for s in 0..3 {
        let c = coeff[s];
        if c == 0.0 {
            continue;
        }
        out[0][s] += c * 2.0 * (y[1][s] - y[0][s]);
        for i in 1..n {
            out[i][s] += c * (y[i + 1][s] - 2.0 * y[i][s] + y[i - 1][s]);
        }
        out[n][s] += c * 2.0 * (y[n - 1][s] - y[n][s]);
    }
}

/// Total MinD and MinE over the domain (trapezoidal rule).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservedTotals {
    pub total_d: f64,
    pub total_e: f64,
}

impl ConservedTotals {
    /// Largest relative deviation of either total from `reference`.
    pub fn relative_drift(&self, reference: &ConservedTotals) -> f64 {
        let rel = |a: f64, b: f64| if b == 0.0 { a.abs() } else { ((a - b) / b).abs() };
        rel(self.total_d, reference.total_d).max(rel(self.total_e, reference.total_e))
    }
}

pub fn conserved_totals(state: &FieldState) -> ConservedTotals {
    let n = state.intervals();
    if n == 0 {
        return ConservedTotals {
            total_d: 0.0,
            total_e: 0.0,
        };
    }
    let dx = state.dx();
    let group = |w: &[f64; NUM_SPECIES], v: &[f64; NUM_SPECIES]| -> f64 { w.iter().zip(v).map(|(a, b)| a * b).sum() };
    let mut td = 0.0;
    let mut te = 0.0;
    for (i, v) in state.values.iter().enumerate() {
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        td += w * group(&MIND_GROUP, v);
        te += w * group(&MINE_GROUP, v);
    }
    ConservedTotals {
        total_d: td * dx,
        total_e: te * dx,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cos_state(n: usize, amp: f64) -> FieldState {
        let p = ModelParams::huang2003_1d();
        let xs = grid_positions(p.length, n);
        FieldState {
            time: 0.0,
            length: p.length,
            values: xs
                .iter()
                .map(|x| {
                    let c = (std::f64::consts::PI * x / p.length).cos();
                    [300.0 + amp * c, 400.0 - amp * c, 30.0 + 0.1 * amp * c, 150.0, 450.0]
                })
                .collect(),
        }
    }

    #[test]
    fn preset_totals_match_molecule_counts() {
        let p = ModelParams::huang2003_1d();
        assert_relative_eq!(p.rho_d_tot, 1375.0, max_relative = 1e-3);
        assert_relative_eq!(p.rho_e_tot, 481.0, max_relative = 1e-3);
        p.validate().unwrap();
    }

    #[test]
    fn stoichiometry_respects_conservation_groups() {
        for r in RateConstant::ALL {
            let s = r.stoichiometry();
            let d: f64 = s.iter().zip(MIND_GROUP).map(|(a, b)| a * b).sum();
            let e: f64 = s.iter().zip(MINE_GROUP).map(|(a, b)| a * b).sum();
            assert_eq!(d, 0.0, "{r}");
            assert_eq!(e, 0.0, "{r}");
        }
    }

    #[test]
    fn subset_split_adds_up() {
        let rho = [320.0, 456.0, 24.0, 142.0, 457.0];
        let rates = ModelParams::huang2003_1d().rates();
        let full = reaction_terms(&rho, &rates);
        for r in RateConstant::ALL {
            let s = RateSubset::single(r);
            let a = reaction_terms_subset(&rho, &rates, s);
            let b = reaction_terms_subset(&rho, &rates, s.complement());
            for k in 0..NUM_SPECIES {
                assert_relative_eq!(a[k] + b[k], full[k], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn kappa_scales_linearly() {
        let p = ModelParams::huang2003_1d();
        let s = cos_state(8, 40.0);
        let one = reaction_rhs(&s, &p, Kappa::Uniform(1.0)).unwrap();
        let two = reaction_rhs(&s, &p, Kappa::Uniform(2.0)).unwrap();
        for (a, b) in one.values.iter().zip(&two.values) {
            for k in 0..NUM_SPECIES {
                assert_eq!(2.0 * a[k], b[k]);
            }
        }
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let p = ModelParams::huang2003_1d();
        let mut s = cos_state(4, 1.0);
        s.values[2][1] = f64::NAN;
        assert!(matches!(
            reaction_rhs(&s, &p, Kappa::Uniform(1.0)),
            Err(Error::NonFinite(_))
        ));
        let s = cos_state(4, 1.0);
        assert!(reaction_rhs(&s, &p, Kappa::Uniform(f64::INFINITY)).is_err());
    }

    #[test]
    fn negative_concentration_is_flagged_not_fatal() {
        let p = ModelParams::huang2003_1d();
        let mut s = cos_state(4, 1.0);
        s.values[3][4] = -1.0;
        let out = reaction_rhs(&s, &p, Kappa::Uniform(1.0)).unwrap();
        assert_eq!(out.negative.len(), 1);
        assert_eq!(out.negative[0].point, 3);
        assert_eq!(out.negative[0].species, Species::MemDE);
    }

    #[test]
    fn constant_profile_does_not_diffuse() {
        let p = ModelParams::huang2003_1d();
        let s = FieldState::uniform(p.length, 10, [1.0, 2.0, 3.0, 4.0, 5.0], 0.0);
        let d = diffusion_rhs(&s, &p).unwrap();
        assert!(d.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn membrane_species_never_diffuse() {
        let p = ModelParams::huang2003_1d();
        let mut s = cos_state(12, 50.0);
        for (i, v) in s.values.iter_mut().enumerate() {
            v[3] = (i * i) as f64;
            v[4] = (i as f64).sin();
        }
        let d = diffusion_rhs(&s, &p).unwrap();
        assert!(d.iter().all(|v| v[3] == 0.0 && v[4] == 0.0));
    }

    #[test]
    fn too_coarse_grid_is_a_config_error() {
        let p = ModelParams::huang2003_1d();
        let s = FieldState::uniform(p.length, 1, [1.0; 5], 0.0);
        assert!(matches!(diffusion_rhs(&s, &p), Err(Error::Config(_))));
    }

    /// Max error of the discrete Laplacian of cos(πx/L) against the exact
    /// second derivative.
    fn cosine_laplacian_error(n: usize) -> f64 {
        let p = ModelParams::huang2003_1d();
        let l = p.length;
        let k = std::f64::consts::PI / l;
        let xs = grid_positions(l, n);
        let s = FieldState {
            time: 0.0,
            length: l,
            values: xs.iter().map(|x| [(k * x).cos(), 0.0, 0.0, 0.0, 0.0]).collect(),
        };
        let d = diffusion_rhs(&s, &p).unwrap();
        xs.iter()
            .zip(&d)
            .map(|(x, v)| (v[0] - (-p.gamma_d * k * k * (k * x).cos())).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn laplacian_is_second_order() {
        let e1 = cosine_laplacian_error(21);
        let e2 = cosine_laplacian_error(42);
        let ratio = e1 / e2;
        assert!((3.8..4.2).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn zero_state_has_zero_totals() {
        let s = FieldState::uniform(4.5, 21, [0.0; 5], 0.0);
        let t = conserved_totals(&s);
        assert_eq!((t.total_d, t.total_e), (0.0, 0.0));
    }

    #[test]
    fn config_round_trip_and_errors() {
        let p = ModelParams::huang2003_1d();
        let text = p.to_config_string();
        assert_eq!(ModelParams::from_config_str(&text).unwrap(), p);
        let q = ModelParams::from_config_str("preset = huang2003_1d\nsigma_dD = 2e-3 # tweak\n").unwrap();
        assert_eq!(q.rate(RateConstant::CooperativeBinding), 2e-3);
        assert!(ModelParams::from_config_str("sigma_xx = 1").is_err());
        assert!(ModelParams::from_config_str("sigma_de = abc").is_err());
        assert!(ModelParams::from_config_str("sigma_de 1").is_err());
        assert!(ModelParams::from_config_str("L = -1").is_err());
        assert!(ModelParams::from_config_str("preset = nope").is_err());
    }

    #[test]
    fn rate_names_parse() {
        for r in RateConstant::ALL {
            assert_eq!(r.name().parse::<RateConstant>().unwrap(), r);
        }
        assert_eq!("dD".parse::<RateConstant>().unwrap(), RateConstant::CooperativeBinding);
        assert!("sigma_q".parse::<RateConstant>().is_err());
    }

    proptest! {
        #[test]
        fn reaction_groups_vanish(
            rho in proptest::array::uniform5(0.0f64..2000.0),
            k in 0.1f64..3.0,
        ) {
            let p = ModelParams::huang2003_1d();
            let s = FieldState::uniform(p.length, 3, rho, 0.0);
            let out = reaction_rhs(&s, &p, Kappa::Uniform(k)).unwrap();
            for v in &out.values {
                let scale = v.iter().map(|x| x.abs()).fold(1.0, f64::max);
                let d = v[0] + v[1] + v[3] + v[4];
                let e = v[2] + v[4];
                prop_assert!(d.abs() <= 1e-13 * scale);
                prop_assert!(e.abs() <= 1e-13 * scale);
            }
        }

        #[test]
        fn discrete_laplacian_has_zero_trapezoidal_integral(
            vals in proptest::collection::vec(0.0f64..1000.0, 3..40),
        ) {
            let p = ModelParams::huang2003_1d();
            let s = FieldState {
                time: 0.0,
                length: p.length,
                values: vals.iter().map(|v| [*v, 2.0 * v, v * v / 1000.0, *v, 1.0]).collect(),
            };
            let d = diffusion_rhs(&s, &p).unwrap();
            let n = d.len() - 1;
            for sp in 0..3 {
                let total: f64 = d.iter().enumerate()
                    .map(|(i, v)| if i == 0 || i == n { 0.5 * v[sp] } else { v[sp] })
                    .sum();
                let scale: f64 = d.iter().map(|v| v[sp].abs()).sum::<f64>() + 1.0;
                prop_assert!(total.abs() <= 1e-12 * scale);
            }
        }
    }
}
