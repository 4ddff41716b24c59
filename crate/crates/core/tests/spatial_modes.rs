use minosc_core::analysis::dct_mode2;
use minosc_core::noise::{build_spatial_covariance, fourier_a_hat, SpatialSampler};

const L: f64 = 4.5;

fn mean_square_mode2(alpha: f64, fields: u64) -> f64 {
    let sampler = SpatialSampler::new(build_spatial_covariance(alpha, L, 21).unwrap()).unwrap();
    let sq: f64 = (0..fields)
        .map(|r| dct_mode2(&sampler.sample(1.0, 11, r).samples).unwrap().powi(2))
        .sum();
    sq / fields as f64
}

// The cosine coefficient of a periodic field only sees the cosine half of the
// mode-1 variance.
#[test]
fn cosine_coefficient_carries_half_the_mode_variance() {
    for alpha in [1.0, 2.0] {
        let measured = mean_square_mode2(alpha, 8000);
        let half = 0.5 * fourier_a_hat(1, alpha, L);
        assert!(
            (measured - half).abs() < 0.08 * half,
            "alpha {alpha}: {measured} vs {half}"
        );
    }
}

#[test]
fn epsilon_is_recorded_not_applied() {
    let sampler = SpatialSampler::new(build_spatial_covariance(2.0, L, 21).unwrap()).unwrap();
    let a = sampler.sample(0.1, 3, 0).samples;
    let b = sampler.sample(0.2, 3, 0).samples;
    assert_eq!(a, b);
}
