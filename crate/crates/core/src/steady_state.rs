//! Spatially constant fixed point and the reaction Jacobians around it.

use nalgebra::{Matrix3, Matrix5, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{flux_gradients, fluxes, reaction_terms, ModelParams, RateSubset, Species, NUM_SPECIES};

const MAX_NEWTON_ITERATIONS: usize = 100;
const MAX_HALVINGS: usize = 40;
/// Scaled residual at which Newton stops.
const NEWTON_TOL: f64 = 1e-13;
/// Scaled residual a converged fixed point must satisfy.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FixedPoint {
    /// Concentrations in species order.
    pub rho_inf: [f64; NUM_SPECIES],
    /// max |g(ρ∞)| divided by max(1, largest elementary flux).
    pub residual_norm: f64,
    pub iterations: usize,
    pub params_used: ModelParams,
}

/// Jacobians at the fixed point: `g` holds the perturbed rate constants,
/// `f` the rest, `j = f + g`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JacobianSet {
    pub perturbed: Vec<String>,
    pub f: Matrix5<f64>,
    pub g: Matrix5<f64>,
    pub j: Matrix5<f64>,
}

/// Rebuild all five concentrations from the reduced unknowns (DD, DT, E).
fn expand(u: &Vector3<f64>, params: &ModelParams) -> [f64; NUM_SPECIES] {
    let de = params.rho_e_tot - u[2];
    let d = params.rho_d_tot - u[0] - u[1] - de;
    [u[0], u[1], u[2], d, de]
}

fn reduced_residual(u: &Vector3<f64>, params: &ModelParams, rates: &[f64; NUM_SPECIES]) -> Vector3<f64> {
    let g = reaction_terms(&expand(u, params), rates);
    Vector3::new(g[0], g[1], g[2])
}

/// ∂(g_DD, g_DT, g_E)/∂(DD, DT, E) with d and de eliminated.
fn reduced_jacobian(u: &Vector3<f64>, params: &ModelParams, rates: &[f64; NUM_SPECIES]) -> Matrix3<f64> {
    let full = jacobian_for(&expand(u, params), rates, RateSubset::all());
    // dρ/du: d = Dtot − DD − DT − (Etot − E), de = Etot − E
    let chain = nalgebra::Matrix5x3::new(
        1.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, //
        0.0, 0.0, 1.0, //
        -1.0, -1.0, 1.0, //
        0.0, 0.0, -1.0,
    );
    let rows = full.fixed_rows::<3>(0).into_owned();
    rows * chain
}

fn residual_scale(rho: &[f64; NUM_SPECIES], rates: &[f64; NUM_SPECIES]) -> f64 {
    fluxes(rho, rates).iter().fold(1.0_f64, |m, v| m.max(v.abs()))
}

fn scaled_residual(u: &Vector3<f64>, params: &ModelParams, rates: &[f64; NUM_SPECIES]) -> f64 {
    let rho = expand(u, params);
    let g = reaction_terms(&rho, rates);
    g.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / residual_scale(&rho, rates)
}

/// Default starting point: totals split evenly over the species that carry them.
pub fn default_guess(params: &ModelParams) -> [f64; 3] {
    [params.rho_d_tot / 4.0, params.rho_d_tot / 4.0, params.rho_e_tot / 2.0]
}

/// Newton iteration on (DD, DT, E) with the conservation constraints
/// eliminating d and de. Steps are halved while the residual grows.
pub fn solve_fixed_point(params: &ModelParams, initial_guess: Option<[f64; 3]>) -> Result<FixedPoint> {
    solve_fixed_point_with(params, initial_guess, MAX_NEWTON_ITERATIONS)
}

pub fn solve_fixed_point_with(
    params: &ModelParams,
    initial_guess: Option<[f64; 3]>,
    max_iterations: usize,
) -> Result<FixedPoint> {
    params.validate()?;
    let rates = params.rates();
    let mut u = Vector3::from(initial_guess.unwrap_or_else(|| default_guess(params)));
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial guess".into()));
    }
    let mut res = scaled_residual(&u, params, &rates);
    let mut iterations = 0;
    while res > NEWTON_TOL && iterations < max_iterations {
        iterations += 1;
        let jac = reduced_jacobian(&u, params, &rates);
        let r = reduced_residual(&u, params, &rates);
        let Some(step) = jac.lu().solve(&(-r)) else {
            return Err(Error::NoConvergence {
                iterations,
                residual: res,
                last_iterate: u.into(),
            });
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial = u + step * lambda;
            let trial_res = scaled_residual(&trial, params, &rates);
            if trial_res.is_finite() && trial_res < res {
                u = trial;
                res = trial_res;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            // No descent possible: either converged to rounding or stuck.
            break;
        }
    }
    if !(res < RESIDUAL_TOL) {
        return Err(Error::NoConvergence {
            iterations,
            residual: res,
            last_iterate: u.into(),
        });
    }
    let rho_inf = expand(&u, params);
    for s in Species::ALL {
        if rho_inf[s.index()] < 0.0 {
            return Err(Error::NonphysicalRoot {
                species: s.symbol(),
                value: rho_inf[s.index()],
            });
        }
    }
    Ok(FixedPoint {
        rho_inf,
        residual_norm: res,
        iterations,
        params_used: params.clone(),
    })
}

/// Jacobian of the reaction terms carried by `subset`.
pub fn jacobian_for(rho: &[f64; NUM_SPECIES], rates: &[f64; NUM_SPECIES], subset: RateSubset) -> Matrix5<f64> {
    let grads = flux_gradients(rho, rates);
    let mut m = Matrix5::zeros();
    for rate in subset.iter() {
        let s = rate.stoichiometry();
        let grad = grads[rate.index()];
        for i in 0..NUM_SPECIES {
            if s[i] == 0.0 {
                continue;
            }
            for k in 0..NUM_SPECIES {
                m[(i, k)] += s[i] * grad[k];
            }
        }
    }
    m
}

/// F, G and J at `rho_inf`; G carries the rate constants in `perturbed`.
pub fn analytic_jacobians<S: AsRef<str>>(
    rho_inf: &[f64; NUM_SPECIES],
    params: &ModelParams,
    perturbed: &[S],
) -> Result<JacobianSet> {
    let subset = RateSubset::from_names(perturbed)?;
    Ok(jacobians_for_subset(rho_inf, params, subset))
}

pub fn jacobians_for_subset(rho_inf: &[f64; NUM_SPECIES], params: &ModelParams, subset: RateSubset) -> JacobianSet {
    let rates = params.rates();
    let g = jacobian_for(rho_inf, &rates, subset);
    let f = jacobian_for(rho_inf, &rates, subset.complement());
    JacobianSet {
        perturbed: subset.iter().map(|r| r.name().to_string()).collect(),
        f,
        g,
        j: f + g,
    }
}

impl FixedPoint {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl JacobianSet {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
