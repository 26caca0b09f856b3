use rand::Rng;

/// Largest rate sampled in one inversion pass; `exp(-λ)` stays well inside
/// the normal `f64` range below it.
const MAX_DIRECT_LAMBDA: f64 = 500.0;

/// Draws from Poisson(`lambda`) by inversion: walk the cumulative mass
/// function until it passes a uniform variate. Larger rates are split into a
/// sum of independent draws.
///
/// Panics unless `lambda` is positive and finite.
pub fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    assert!(
        lambda > 0.0 && lambda.is_finite(),
        "Poisson rate must be positive, got {lambda}"
    );
    if lambda > MAX_DIRECT_LAMBDA {
        let parts = (lambda / MAX_DIRECT_LAMBDA).ceil();
        let each = lambda / parts;
        return (0..parts as u64).map(|_| invert(each, rng)).sum();
    }
    invert(lambda, rng)
}

fn invert<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut p = (-lambda).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= lambda / k as f64;
        if p == 0.0 {
            break;
        }
        cdf += p;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::derive_rng;

    #[test]
    fn small_sample_moments() {
        let mut rng = derive_rng(3442, "poisson", 0);
        let n = 50_000;
        let draws: Vec<u64> = (0..n).map(|_| sample_poisson(3.0, &mut rng)).collect();
        let mean = draws.iter().sum::<u64>() as f64 / n as f64;
        assert!((mean - 3.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn large_rate_is_split() {
        let mut rng = derive_rng(1, "poisson", 0);
        let n = 2000;
        let mean = (0..n)
            .map(|_| sample_poisson(1200.0, &mut rng))
            .sum::<u64>() as f64
            / n as f64;
        assert!((mean - 1200.0).abs() < 5.0, "{mean}");
    }

    #[test]
    #[should_panic]
    fn zero_rate_panics() {
        let mut rng = derive_rng(1, "poisson", 0);
        sample_poisson(0.0, &mut rng);
    }
}
