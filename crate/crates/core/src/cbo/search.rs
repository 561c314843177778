//! Gradient-free maximization over the unit hypercube: a shifted Halton
//! scan followed by coordinate pattern search from the best scan points.

use std::cmp::Ordering;

use rand::Rng;

use crate::scalar::Scalar;
use crate::seed::rng_for;

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSettings {
    pub scan_points: usize,
    pub refine_starts: usize,
    /// Objective evaluations per refinement start.
    pub refine_evals: usize,
    pub initial_step: f64,
    pub min_step: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self { scan_points: 4096, refine_starts: 4, refine_evals: 60, initial_step: 0.0625, min_step: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult<T> {
    /// Maximizer in unit-cube coordinates.
    pub point: Vec<T>,
    pub value: T,
    pub evaluations: usize,
}

/// Van der Corput radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u32) -> f64 {
    let b = u64::from(b);
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    r
}

/// Halton points `1..=n` with a Cranley-Patterson rotation drawn from `seed`.
pub fn shifted_halton(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
    let mut rng = rng_for(seed, 0x4841);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen()).collect();
    (1..=n as u64)
        .map(|i| {
            (0..dim)
                .map(|d| {
                    let v = radical_inverse(i, PRIMES[d]) + shift[d];
                    v - v.floor()
                })
                .collect()
        })
        .collect()
}

/// NaN ranks below every number.
fn better<T: Scalar>(a: T, b: T) -> bool {
    !a.is_nan() && (b.is_nan() || a > b)
}

fn rank<T: Scalar>(a: T, b: T) -> Ordering {
    if better(a, b) {
        Ordering::Less
    } else if better(b, a) {
        Ordering::Greater
    } else {
        Ordering::Equal
    }
}

/// Coordinate pattern search: try `±step` along each axis (first improvement
/// wins), halve the step after a sweep without improvement.
fn pattern_search<T: Scalar, F: FnMut(&[T]) -> T>(
    f: &mut F,
    start: Vec<T>,
    value: T,
    settings: &SearchSettings,
) -> (Vec<T>, T, usize) {
    let mut x = start;
    let mut fx = value;
    let mut step = T::lit(settings.initial_step);
    let mut evals = 0;
    'outer: while evals < settings.refine_evals && step >= T::lit(settings.min_step) {
        let mut improved = false;
        for d in 0..x.len() {
            for sign in [T::one(), -T::one()] {
                if evals >= settings.refine_evals {
                    break 'outer;
                }
                let moved = (x[d] + sign * step).max(T::zero()).min(T::one());
                if moved == x[d] {
                    continue;
                }
                let mut cand = x.clone();
                cand[d] = moved;
                let fc = f(&cand);
                evals += 1;
                if better(fc, fx) {
                    x = cand;
                    fx = fc;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step /= T::lit(2.0);
        }
    }
    (x, fx, evals)
}

/// Maximizes `f` over `[0, 1]^dim`. Deterministic given `seed`; equal
/// values resolve to the earliest scan point.
pub fn maximize<T: Scalar, F: FnMut(&[T]) -> T>(dim: usize, mut f: F, settings: &SearchSettings, seed: u64) -> SearchResult<T> {
    let scan: Vec<Vec<T>> = shifted_halton(settings.scan_points.max(1), dim, seed)
        .into_iter()
        .map(|p| p.into_iter().map(T::lit).collect())
        .collect();
    let values: Vec<T> = scan.iter().map(|p| f(p)).collect();
    let mut order: Vec<usize> = (0..scan.len()).collect();
    order.sort_by(|&a, &b| rank(values[a], values[b]).then(a.cmp(&b)));

    let mut evaluations = scan.len();
    let mut best = (scan[order[0]].clone(), values[order[0]]);
    for &i in order.iter().take(settings.refine_starts) {
        let (x, fx, used) = pattern_search(&mut f, scan[i].clone(), values[i], settings);
        evaluations += used;
        if better(fx, best.1) {
            best = (x, fx);
        }
    }
    SearchResult { point: best.0, value: best.1, evaluations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_base_two_sequence() {
        let v: Vec<f64> = (1..=4).map(|i| radical_inverse(i, 2)).collect();
        assert_eq!(v, [0.5, 0.25, 0.75, 0.125]);
        assert!((radical_inverse(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn scan_covers_the_cube() {
        let pts = shifted_halton(4096, 3, 7);
        assert!(pts.iter().flatten().all(|&v| (0.0..1.0).contains(&v)));
        // Every octant receives close to an eighth of the points.
        let mut counts = [0usize; 8];
        for p in &pts {
            let k = p.iter().enumerate().map(|(d, &v)| usize::from(v >= 0.5) << d).sum::<usize>();
            counts[k] += 1;
        }
        assert!(counts.iter().all(|&c| (492..=532).contains(&c)), "{counts:?}");
    }

    #[test]
    fn finds_smooth_interior_maximum() {
        let f = |x: &[f64]| -((x[0] - 0.3).powi(2) + (x[1] - 0.71).powi(2) + 2.0 * (x[2] - 0.5).powi(2));
        let r = maximize(3, f, &SearchSettings::default(), 0);
        assert!((r.point[0] - 0.3).abs() < 2e-3 && (r.point[1] - 0.71).abs() < 2e-3 && (r.point[2] - 0.5).abs() < 2e-3);
        assert!(r.evaluations <= 4096 + 4 * 60);
    }

    #[test]
    fn near_delta_returns_its_scan_point() {
        let scan = shifted_halton(4096, 3, 3);
        let target: Vec<f64> = scan[1234].clone();
        let f = |x: &[f64]| if x == target.as_slice() { 1.0 } else { 0.0 };
        let r = maximize(3, f, &SearchSettings::default(), 3);
        assert_eq!(r.point, target);
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn stays_in_bounds_for_boundary_optimum() {
        let f = |x: &[f64]| x[0] + x[1] - x[2];
        let r = maximize(3, f, &SearchSettings::default(), 1);
        assert!(r.point.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(r.value > 1.99);
    }

    #[test]
    fn nan_never_wins() {
        let f = |x: &[f64]| if x[0] < 0.5 { f64::NAN } else { x[0] };
        let r = maximize(2, f, &SearchSettings::default(), 0);
        assert!(r.value >= 0.99);
    }

    #[test]
    fn deterministic_for_seed() {
        let f = |x: &[f64]| (7.0 * x[0]).sin() * (5.0 * x[1]).cos();
        let s = SearchSettings::default();
        assert_eq!(maximize(2, f, &s, 9), maximize(2, f, &s, 9));
    }
}
