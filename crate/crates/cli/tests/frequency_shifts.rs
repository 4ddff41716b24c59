use minosc::experiment::{mode_field, reference_run, spatial_run, temporal_ensemble, Reference};
use minosc_core::analysis::{frequency_autocorrelation, instantaneous_frequency, AutocorrOrigin, IntervalShift};
use minosc_core::integrator::IntegrationConfig;
use minosc_core::model::ModelParams;
use minosc_core::noise::OUConfig;

fn setup() -> (ModelParams, IntegrationConfig, Reference) {
    let p = ModelParams::huang2003_1d();
    let cfg = IntegrationConfig::default();
    let r = reference_run(&p, &cfg).unwrap();
    (p, cfg, r)
}

fn cos2_run(p: &ModelParams, cfg: &IntegrationConfig, r: &Reference, eps: f64) -> minosc::experiment::SpatialRun {
    let field = mode_field(p, cfg.intervals, 2, 1.0);
    spatial_run(p, cfg, field, eps, r, r.g11_ratio(), 0).unwrap()
}

#[test]
fn unperturbed_run_has_no_shift() {
    let (_, _, r) = setup();
    let shifts = instantaneous_frequency(&r.record, r.theta1_ref).unwrap();
    assert!(shifts.len() > 40);
    for s in &shifts {
        assert!(s.shift.abs() < 0.002, "t = {}: {}", s.t, s.shift);
    }
}

#[test]
fn doubling_epsilon_doubles_spatial_shift() {
    let (p, cfg, r) = setup();
    let a = cos2_run(&p, &cfg, &r, 0.02).report.measured;
    let b = cos2_run(&p, &cfg, &r, 0.04).report.measured;
    let ratio = b / a;
    assert!((ratio - 2.0).abs() <= 0.2, "ratio {ratio}");
}

fn halves(series: &[Vec<IntervalShift>]) -> (Vec<Vec<IntervalShift>>, Vec<Vec<IntervalShift>>) {
    series
        .iter()
        .map(|s| {
            let mid = s.len() / 2;
            (s[..mid].to_vec(), s[mid..].to_vec())
        })
        .unzip()
}

#[test]
fn autocorrelation_depends_only_on_lag() {
    let (p, cfg, r) = setup();
    let ou = OUConfig::with_ln2_variance(10.0, 5, cfg.dt);
    let runs = temporal_ensemble(&p, &cfg, &ou, 0.01, &r, 20).unwrap();
    let series: Vec<_> = runs.into_iter().map(|r| r.intervals).collect();
    let (early, late) = halves(&series);
    let a = frequency_autocorrelation(&early, &ou, AutocorrOrigin::Pooled, 120.0).unwrap();
    let b = frequency_autocorrelation(&late, &ou, AutocorrOrigin::Pooled, 120.0).unwrap();
    for k in 0..a.measured.len().min(b.measured.len()) {
        assert!((a.lags[k] - b.lags[k]).abs() < 2.0);
        assert!(
            (a.measured[k] - b.measured[k]).abs() < 0.15,
            "lag {}: {} vs {}",
            a.lags[k],
            a.measured[k],
            b.measured[k]
        );
    }
}
