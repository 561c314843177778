//! Gaussian-process regression with an ARD squared-exponential kernel.
//!
//! Inputs are mapped to the unit cube of an [`InputBox`]; targets are
//! standardized before fitting and destandardized on prediction. Predictions
//! report the latent (noise-free) standard deviation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::GpError;
use crate::linalg::{cho_inverse, cho_solve, cholesky_in_place, forward_sub};
use crate::scalar::Scalar;
use crate::seed::rng_for;

/// Lengthscale search range, normalized input units.
pub const LENGTHSCALE_RANGE: (f64, f64) = (0.05, 3.0);
/// Signal standard deviation search range, standardized target units.
pub const SIGNAL_STD_RANGE: (f64, f64) = (0.05, 5.0);
/// Noise standard deviation search range, standardized target units.
pub const NOISE_STD_RANGE: (f64, f64) = (1e-3, 2.0);

pub const N_STARTS: usize = 8;
const MAX_ASCENT_ITERS: usize = 1000;
const BASE_JITTER: f64 = 1e-8;
const MAX_JITTER: f64 = 1e-6;

/// Axis-aligned box that defines the normalized input coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputBox<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> InputBox<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self, GpError> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(GpError::InvalidData("bounds must be non-empty and of equal length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l < u)) {
            return Err(GpError::InvalidData("every lower bound must be below its upper bound".into()));
        }
        Ok(Self { lower, upper })
    }

    /// Unit hypercube of dimension `dim`.
    pub fn unit(dim: usize) -> Self {
        Self { lower: vec![T::zero(); dim], upper: vec![T::one(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn normalize(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&l, &u))| (v - l) / (u - l))
            .collect()
    }

    pub fn denormalize(&self, u: &[T]) -> Vec<T> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&l, &h))| l + v * (h - l))
            .collect()
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&l, &u))| v >= l && v <= u)
    }
}

/// Kernel hyperparameters in normalized input / standardized target units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams<T> {
    pub signal_std: T,
    pub lengthscales: Vec<T>,
    pub noise_std: T,
}

impl<T: Scalar> Hyperparams<T> {
    pub fn isotropic(signal_std: T, lengthscale: T, noise_std: T, dim: usize) -> Self {
        Self { signal_std, lengthscales: vec![lengthscale; dim], noise_std }
    }

    pub fn validate(&self, dim: usize) -> Result<(), GpError> {
        let ok = |v: T| v.is_finite() && v > T::zero();
        if self.lengthscales.len() != dim {
            return Err(GpError::InvalidData(format!(
                "{} lengthscales for {dim} input dimensions",
                self.lengthscales.len()
            )));
        }
        if !(ok(self.signal_std) && ok(self.noise_std) && self.lengthscales.iter().all(|&l| ok(l))) {
            return Err(GpError::InvalidData("hyperparameters must be positive and finite".into()));
        }
        Ok(())
    }

    fn to_log(&self) -> Vec<T> {
        let mut eta = Vec::with_capacity(self.lengthscales.len() + 2);
        eta.push(self.signal_std.ln());
        eta.extend(self.lengthscales.iter().map(|l| l.ln()));
        eta.push(self.noise_std.ln());
        eta
    }

    fn from_log(eta: &[T]) -> Self {
        let d = eta.len() - 2;
        Self {
            signal_std: eta[0].exp(),
            lengthscales: eta[1..=d].iter().map(|e| e.exp()).collect(),
            noise_std: eta[d + 1].exp(),
        }
    }

    /// Clips every hyperparameter into its search range.
    fn clipped(mut self) -> Self {
        let clip = |v: T, (lo, hi): (f64, f64)| v.max(T::lit(lo)).min(T::lit(hi));
        self.signal_std = clip(self.signal_std, SIGNAL_STD_RANGE);
        self.noise_std = clip(self.noise_std, NOISE_STD_RANGE);
        for l in &mut self.lengthscales {
            *l = clip(*l, LENGTHSCALE_RANGE);
        }
        self
    }
}

/// How targets are transformed before the kernel sees them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetScaling {
    /// Subtract the sample mean, divide by the sample standard deviation
    /// (kept at 1 when the targets have no spread).
    Standardize,
    Identity,
}

/// Posterior mean and latent standard deviation, in target units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction<T> {
    pub mu: T,
    pub sigma: T,
}

/// Fitted GP. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct GpModel<T> {
    bounds: InputBox<T>,
    x: Vec<Vec<T>>,
    y: Vec<T>,
    y_mean: T,
    y_scale: T,
    hyper: Hyperparams<T>,
    jitter: T,
    chol: Vec<T>,
    alpha: Vec<T>,
    lml: T,
}

#[inline]
fn sq_exp<T: Scalar>(a: &[T], b: &[T], h: &Hyperparams<T>) -> T {
    let mut r2 = T::zero();
    for ((&p, &q), &l) in a.iter().zip(b).zip(&h.lengthscales) {
        let z = (p - q) / l;
        r2 += z * z;
    }
    h.signal_std * h.signal_std * (-r2 / T::lit(2.0)).exp()
}

/// Noise-free kernel matrix.
fn kernel_matrix<T: Scalar>(x: &[Vec<T>], h: &Hyperparams<T>) -> Vec<T> {
    let n = x.len();
    let mut k = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = sq_exp(&x[i], &x[j], h);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

struct Factor<T> {
    chol: Vec<T>,
    alpha: Vec<T>,
    jitter: T,
    lml: T,
}

/// Factorizes `K + (σ_n² + jitter) I` with `jitter` starting at `BASE_JITTER`
/// and growing tenfold up to `max_jitter`.
fn factorize<T: Scalar>(x: &[Vec<T>], y: &[T], h: &Hyperparams<T>, max_jitter: f64) -> Result<Factor<T>, GpError> {
    let n = x.len();
    let k = kernel_matrix(x, h);
    let nugget = h.noise_std * h.noise_std;
    let mut jitter = BASE_JITTER;
    loop {
        let mut l = k.clone();
        for i in 0..n {
            l[i * n + i] += nugget + T::lit(jitter);
        }
        if cholesky_in_place(&mut l, n) {
            let mut alpha = y.to_vec();
            cho_solve(&l, n, &mut alpha);
            let fit: T = y.iter().zip(&alpha).map(|(&a, &b)| a * b).sum();
            let logdet: T = (0..n).map(|i| l[i * n + i].ln()).sum();
            let lml = -fit / T::lit(2.0) - logdet - T::from_usize_lossy(n) * T::lit((2.0 * std::f64::consts::PI).ln()) / T::lit(2.0);
            return Ok(Factor { chol: l, alpha, jitter: T::lit(jitter), lml });
        }
        jitter *= 10.0;
        if jitter > max_jitter * (1.0 + 1e-9) {
            return Err(GpError::SingularKernel { jitter: jitter / 10.0 });
        }
    }
}

/// Log marginal likelihood and its gradient with respect to
/// `[ln σ_f, ln ℓ_1.., ln σ_n]`, at the base jitter only.
fn lml_and_grad<T: Scalar>(x: &[Vec<T>], y: &[T], eta: &[T]) -> Option<(T, Vec<T>)> {
    let h = Hyperparams::from_log(eta);
    let n = x.len();
    let d = h.lengthscales.len();
    let f = factorize(x, y, &h, BASE_JITTER).ok()?;
    if !f.lml.is_finite() {
        return None;
    }
    let kinv = cho_inverse(&f.chol, n);
    let two = T::lit(2.0);
    let mut grad = vec![T::zero(); d + 2];
    for i in 0..n {
        for j in 0..n {
            // W = ααᵀ − K⁻¹; ∂L/∂η = ½ Σ W ∘ ∂K/∂η
            let w = f.alpha[i] * f.alpha[j] - kinv[i * n + j];
            let kf = sq_exp(&x[i], &x[j], &h);
            grad[0] += w * two * kf;
            for (m, &l) in h.lengthscales.iter().enumerate() {
                let z = (x[i][m] - x[j][m]) / l;
                grad[m + 1] += w * kf * z * z;
            }
            if i == j {
                grad[d + 1] += w * two * h.noise_std * h.noise_std;
            }
        }
    }
    grad.iter_mut().for_each(|g| *g /= two);
    Some((f.lml, grad))
}

fn log_box<T: Scalar>(d: usize) -> (Vec<T>, Vec<T>) {
    let mut lo = vec![T::lit(SIGNAL_STD_RANGE.0.ln())];
    let mut hi = vec![T::lit(SIGNAL_STD_RANGE.1.ln())];
    lo.extend(std::iter::repeat_n(T::lit(LENGTHSCALE_RANGE.0.ln()), d));
    hi.extend(std::iter::repeat_n(T::lit(LENGTHSCALE_RANGE.1.ln()), d));
    lo.push(T::lit(NOISE_STD_RANGE.0.ln()));
    hi.push(T::lit(NOISE_STD_RANGE.1.ln()));
    (lo, hi)
}

/// Projected ascent with a normalized gradient direction and an adaptive
/// step in log space. Only improving steps are accepted.
fn ascend<T: Scalar>(x: &[Vec<T>], y: &[T], start: Vec<T>, lo: &[T], hi: &[T]) -> Option<(Vec<T>, T)> {
    let clamp = |e: &mut Vec<T>| {
        for ((v, &l), &h) in e.iter_mut().zip(lo).zip(hi) {
            *v = v.max(l).min(h);
        }
    };
    let mut eta = start;
    clamp(&mut eta);
    let (mut f, mut g) = lml_and_grad(x, y, &eta)?;
    let mut step = T::lit(0.25);
    for _ in 0..MAX_ASCENT_ITERS {
        // Components pushing against an active bound do not move.
        let dir: Vec<T> = (0..eta.len())
            .map(|i| {
                let blocked = (eta[i] <= lo[i] && g[i] < T::zero()) || (eta[i] >= hi[i] && g[i] > T::zero());
                if blocked { T::zero() } else { g[i] }
            })
            .collect();
        let gmax = dir.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if !(gmax > T::lit(1e-8)) {
            break;
        }
        let mut cand: Vec<T> = eta.iter().zip(&dir).map(|(&e, &v)| e + step * v / gmax).collect();
        clamp(&mut cand);
        match lml_and_grad(x, y, &cand) {
            Some((fc, gc)) if fc > f => {
                let gain = fc - f;
                eta = cand;
                f = fc;
                g = gc;
                step = (step * T::lit(2.0)).min(T::one());
                if gain < T::lit(1e-10) * (T::one() + f.abs()) {
                    break;
                }
            }
            _ => {
                step /= T::lit(2.0);
                if step < T::lit(1e-5) {
                    break;
                }
            }
        }
    }
    Some((eta, f))
}

fn standardization<T: Scalar>(y: &[T], scaling: TargetScaling) -> (T, T) {
    match scaling {
        TargetScaling::Identity => (T::zero(), T::one()),
        TargetScaling::Standardize => {
            let n = T::from_usize_lossy(y.len());
            let mean = y.iter().copied().sum::<T>() / n;
            if y.len() < 2 || y.iter().all(|&v| v == y[0]) {
                return (mean, T::one());
            }
            let ss: T = y.iter().map(|&v| (v - mean) * (v - mean)).sum();
            let sd = (ss / (n - T::one())).sqrt();
            (mean, if sd > T::zero() && sd.is_finite() { sd } else { T::one() })
        }
    }
}

fn check_data<T: Scalar>(inputs: &[Vec<T>], targets: &[T], bounds: &InputBox<T>) -> Result<(), GpError> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(GpError::InvalidData(format!(
            "{} inputs and {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    if let Some(i) = inputs.iter().position(|x| !bounds.contains(x)) {
        return Err(GpError::InvalidData(format!("input {i} lies outside the bounds")));
    }
    if let Some(i) = targets.iter().position(|y| !y.is_finite()) {
        return Err(GpError::InvalidData(format!("target {i} is not finite")));
    }
    Ok(())
}

impl<T: Scalar> GpModel<T> {
    /// Fits hyperparameters by maximizing the log marginal likelihood from
    /// [`N_STARTS`] starts: a fixed central start plus seeded uniform draws in
    /// the log-space box. Ties keep the lowest start index.
    pub fn fit(inputs: &[Vec<T>], targets: &[T], bounds: &InputBox<T>, seed: u64) -> Result<Self, GpError> {
        check_data(inputs, targets, bounds)?;
        if inputs.len() < 2 {
            return Err(GpError::InvalidData("at least two observations are required".into()));
        }
        let (mean, scale) = standardization(targets, TargetScaling::Standardize);
        let x: Vec<Vec<T>> = inputs.iter().map(|v| bounds.normalize(v)).collect();
        let y: Vec<T> = targets.iter().map(|&v| (v - mean) / scale).collect();

        let d = bounds.dim();
        let (lo, hi) = log_box::<T>(d);
        let mut best: Option<(Vec<T>, T)> = None;
        for start in fit_starts(d, seed) {
            if let Some((eta, f)) = ascend(&x, &y, start, &lo, &hi) {
                if best.as_ref().is_none_or(|(_, bf)| f > *bf) {
                    best = Some((eta, f));
                }
            }
        }
        let (eta, _) = best.ok_or(GpError::SingularKernel { jitter: MAX_JITTER })?;
        Self::build(bounds.clone(), x, targets.to_vec(), mean, scale, Hyperparams::from_log(&eta).clipped())
    }

    /// Conditions a GP on the data with fixed hyperparameters.
    pub fn with_hyperparams(
        inputs: &[Vec<T>],
        targets: &[T],
        bounds: &InputBox<T>,
        hyper: Hyperparams<T>,
        scaling: TargetScaling,
    ) -> Result<Self, GpError> {
        check_data(inputs, targets, bounds)?;
        hyper.validate(bounds.dim())?;
        let (mean, scale) = standardization(targets, scaling);
        let x = inputs.iter().map(|v| bounds.normalize(v)).collect();
        Self::build(bounds.clone(), x, targets.to_vec(), mean, scale, hyper)
    }

    fn build(
        bounds: InputBox<T>,
        x: Vec<Vec<T>>,
        y: Vec<T>,
        y_mean: T,
        y_scale: T,
        hyper: Hyperparams<T>,
    ) -> Result<Self, GpError> {
        let ys: Vec<T> = y.iter().map(|&v| (v - y_mean) / y_scale).collect();
        let f = factorize(&x, &ys, &hyper, MAX_JITTER)?;
        Ok(Self { bounds, x, y, y_mean, y_scale, hyper, jitter: f.jitter, chol: f.chol, alpha: f.alpha, lml: f.lml })
    }

    /// Posterior at a point of the unit cube.
    pub fn predict(&self, u: &[T]) -> Prediction<T> {
        let n = self.x.len();
        let mut k: Vec<T> = self.x.iter().map(|xi| sq_exp(xi, u, &self.hyper)).collect();
        let mu: T = k.iter().zip(&self.alpha).map(|(&a, &b)| a * b).sum();
        forward_sub(&self.chol, n, &mut k);
        let explained: T = k.iter().map(|&v| v * v).sum();
        let var = (self.hyper.signal_std * self.hyper.signal_std - explained).max(T::zero());
        Prediction { mu: self.y_mean + self.y_scale * mu, sigma: self.y_scale * var.sqrt() }
    }

    /// Posterior at a point given in the original input units.
    pub fn predict_raw(&self, x: &[T]) -> Prediction<T> {
        self.predict(&self.bounds.normalize(x))
    }

    /// Log marginal likelihood of the scaled targets.
    pub fn log_marginal_likelihood(&self) -> T {
        self.lml
    }

    pub fn hyperparams(&self) -> &Hyperparams<T> {
        &self.hyper
    }

    pub fn bounds(&self) -> &InputBox<T> {
        &self.bounds
    }

    /// Diagonal jitter that made the kernel factorizable.
    pub fn jitter(&self) -> T {
        self.jitter
    }

    /// Target mean and scale used for standardization.
    pub fn target_scaling(&self) -> (T, T) {
        (self.y_mean, self.y_scale)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn targets(&self) -> &[T] {
        &self.y
    }

    /// Normalized training inputs.
    pub fn inputs(&self) -> &[Vec<T>] {
        &self.x
    }
}

/// Multi-start initial points in log-hyperparameter space.
pub fn fit_starts<T: Scalar>(dim: usize, seed: u64) -> Vec<Vec<T>> {
    let (lo, hi) = log_box::<T>(dim);
    let mut rng = rng_for(seed, 0x6770);
    let mut starts = Vec::with_capacity(N_STARTS);
    starts.push(Hyperparams::isotropic(T::one(), T::lit(0.5), T::lit(0.1), dim).to_log());
    while starts.len() < N_STARTS {
        starts.push(
            lo.iter()
                .zip(&hi)
                .map(|(&l, &h)| l + (h - l) * T::lit(rng.gen::<f64>()))
                .collect(),
        );
    }
    starts
}

/// Hyperparameters of a log-space start vector.
pub fn hyperparams_from_log<T: Scalar>(eta: &[T]) -> Hyperparams<T> {
    Hyperparams::from_log(eta)
}
