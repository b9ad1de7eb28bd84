use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Coordinates probed per check.
pub const SUBSAMPLE: usize = 64;

/// A scalar function returning its value and analytic gradient.
pub type Objective<'a> = dyn Fn(&[f64]) -> (f64, Vec<f64>) + 'a;

/// Compares the analytic gradient returned by `f` against central
/// differences on up to [`SUBSAMPLE`] randomly chosen coordinates.
///
/// Returns `max |analytic - numeric| / max(1, |numeric|)`.
pub fn finite_diff_check(f: &Objective<'_>, params: &[f64], eps: f64, seed: u64) -> f64 {
    assert!((1e-6..=1e-3).contains(&eps), "eps outside [1e-6, 1e-3]");
    let (_, grad) = f(params);
    assert_eq!(grad.len(), params.len(), "gradient length");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = sample(&mut rng, params.len(), SUBSAMPLE.min(params.len())).into_vec();
    let mut p = params.to_vec();
    let mut worst = 0f64;
    for i in coords {
        let orig = p[i];
        p[i] = orig + eps;
        let up = f(&p).0;
        p[i] = orig - eps;
        let down = f(&p).0;
        p[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        worst = worst.max((grad[i] - numeric).abs() / numeric.abs().max(1.0));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_is_exact() {
        let w: Vec<f64> = (0..100).map(|i| (i as f64 - 50.0) * 0.37).collect();
        let f = |p: &[f64]| (p.iter().zip(&w).map(|(a, b)| a * b).sum(), w.clone());
        let x: Vec<f64> = (0..100).map(|i| i as f64 * 0.01).collect();
        assert!(finite_diff_check(&f, &x, 1e-4, 0) < 1e-8);
    }

    #[test]
    fn detects_wrong_gradient() {
        let f = |p: &[f64]| (p[0] * p[0], vec![p[0]]);
        assert!((finite_diff_check(&f, &[3.0], 1e-4, 0) - 0.5).abs() < 1e-6);
    }
}
