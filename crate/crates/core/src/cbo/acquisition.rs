use crate::scalar::{normal_cdf, normal_pdf, Scalar};

/// Expected improvement of a Gaussian cost over `best` (minimization).
pub fn expected_improvement<T: Scalar>(mu: T, sigma: T, best: T) -> T {
    let gain = best - mu;
    if !(sigma > T::zero()) {
        return gain.max(T::zero());
    }
    let z = gain / sigma;
    (gain * normal_cdf(z) + sigma * normal_pdf(z)).max(T::zero())
}

/// Probability that a Gaussian constraint value stays at or below `c_max`.
pub fn prob_feasible<T: Scalar>(mu_c: T, sigma_c: T, c_max: T) -> T {
    if !(sigma_c > T::zero()) {
        return if mu_c <= c_max { T::one() } else { T::zero() };
    }
    normal_cdf((c_max - mu_c) / sigma_c)
}

/// EI weighted by the feasibility probability, or the feasibility
/// probability alone while no feasible incumbent exists.
pub fn constrained_ei<T: Scalar>(mu: T, sigma: T, best: Option<T>, mu_c: T, sigma_c: T, c_max: T) -> T {
    let pf = prob_feasible(mu_c, sigma_c, c_max);
    match best {
        Some(b) => expected_improvement(mu, sigma, b) * pf,
        None => pf,
    }
}
