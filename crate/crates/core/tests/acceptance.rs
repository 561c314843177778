//! Acceptance suite. Prints one PASS/FAIL line per criterion and a summary.
//! With `ACCEPTANCE_STRICT=1` any failing criterion makes the process exit
//! non-zero; otherwise failures are reported but do not fail `cargo test`.

use std::f64::consts::{PI, SQRT_2};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use gearshift::analysis::{
    compare_strategies, convergence_curve, crossing_iteration, kl_divergence, mean_curve, validate_optimum, GaussianPdf,
};
use gearshift::cbo::{expected_improvement, prob_feasible, run_campaign, write_log, CampaignState, ManeuverEvaluator, Mode};
use gearshift::controller::{ParamSet, ShiftSetup};
use gearshift::gp::{GpModel, Hyperparams, InputBox, TargetScaling};
use gearshift::metrics::{
    completion_time, normalized_cost, normalized_ratio, qs_baseline_stats, shift_indices, smoothness_index,
    BaselineStats, MetricSettings, ShiftMetrics,
};
use gearshift::seed::derive_seed;
use gearshift::sim::{run_shift, NoiseConfig, SimConfig};
use gearshift::CampaignConfig;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, format!("runtime {:.1} s exceeds {limit_s} s", elapsed.as_secs_f64()))
}

const TABLE_I: (f64, f64) = (0.028, 0.038);

fn table_ii() -> ParamSet<f64> {
    ParamSet::new(23.1, 0.019, 0.044)
}

// ---------------------------------------------------------------- 1

fn brute_force_completion(g: &[f64], t: &[f64], t_a: f64, band: f64) -> Option<f64> {
    (0..g.len())
        .filter(|&i| t[i] >= t_a)
        .find(|&i| (i..g.len()).all(|j| (1.0 - g[j]).abs() <= band))
        .map(|i| t[i])
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in 0..500 {
        let n = rng.gen_range(1..600);
        let t: Vec<f64> = (0..n).map(|i| i as f64 * 1e-3).collect();
        let settle = rng.gen_range(0..n);
        let g: Vec<f64> = (0..n)
            .map(|i| if i < settle { 1.0 + rng.gen_range(-0.2..0.2) } else { 1.0 + rng.gen_range(-0.03..0.03) })
            .collect();
        let t_a = rng.gen_range(0.0..(n as f64 * 1e-3));
        let got = completion_time(&g, &t, t_a, 0.03).time();
        let want = brute_force_completion(&g, &t, t_a, 0.03);
        ensure(got == want, format!("series {k}: completion {got:?} vs brute force {want:?}"))?;
    }

    let base = BaselineStats { mu_js: 4.0, sigma_js: 0.5, mu_jd: 0.25, sigma_jd: 0.125, n_runs: 50, seed: 0 };
    let cases = [
        ((4.0, 0.25, 0.75), 0.0),
        ((4.5, 0.25, 0.75), 0.75),
        ((4.0, 0.375, 0.75), 0.25),
        ((3.0, 0.5, 0.5), -1.0 + 1.0),
        ((5.0, 0.0, 0.25), 0.5 - 1.5),
    ];
    for ((js, jd, lambda), want) in cases {
        let got = normalized_cost(js, jd, &base, lambda);
        ensure(got == want, format!("J({js}, {jd}; λ={lambda}) = {got}, expected exactly {want}"))?;
    }

    let dt = 1e-3;
    for (amp, f) in [(1.0, 8.0), (2.5, 20.0), (0.3, 45.0)] {
        let a: Vec<f64> = (0..2001).map(|i| amp * (2.0 * PI * f * i as f64 * dt).sin()).collect();
        let js = smoothness_index(&a, 0.5, dt).unwrap();
        let rel = (js - amp / SQRT_2).abs() / (amp / SQRT_2);
        ensure(rel < 0.03, format!("sine A={amp} f={f} Hz: J_s = {js}, relative error {rel:.4}"))?;
    }
    within(start.elapsed(), 10.0)?;
    Ok("500 random series match brute force; cost identities exact; sine RMS within 3%".into())
}

// ---------------------------------------------------------------- 2

fn dense_posterior(m: &GpModel<f64>, xs: &[Vec<f64>], y: &[f64], u: &[f64]) -> (f64, f64) {
    let h = m.hyperparams();
    let (mean, scale) = m.target_scaling();
    let k = |a: &[f64], b: &[f64]| {
        let r2: f64 = a.iter().zip(b).zip(&h.lengthscales).map(|((p, q), l)| ((p - q) / l).powi(2)).sum();
        h.signal_std.powi(2) * (-0.5 * r2).exp()
    };
    let n = xs.len();
    let kmat = DMatrix::from_fn(n, n, |i, j| {
        k(&xs[i], &xs[j]) + if i == j { h.noise_std.powi(2) + m.jitter() } else { 0.0 }
    });
    let ks = DVector::from_fn(n, |i, _| k(&xs[i], u));
    let ys = DVector::from_fn(n, |i, _| (y[i] - mean) / scale);
    let lu = kmat.lu();
    let alpha = lu.solve(&ys).unwrap();
    let v = lu.solve(&ks).unwrap();
    (mean + scale * ks.dot(&alpha), scale * (h.signal_std.powi(2) - ks.dot(&v)).max(0.0).sqrt())
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let unit = InputBox::unit(3);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0_f64;
    for trial in 0..40 {
        let n = 1 + trial % 4;
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.gen()).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let m = if n >= 2 {
            GpModel::fit(&xs, &y, &unit, trial as u64).map_err(|e| e.to_string())?
        } else {
            let h = Hyperparams { signal_std: 1.3, lengthscales: vec![0.2, 0.5, 0.9], noise_std: 0.05 };
            GpModel::with_hyperparams(&xs, &y, &unit, h, TargetScaling::Standardize).map_err(|e| e.to_string())?
        };
        for _ in 0..25 {
            let u: Vec<f64> = (0..3).map(|_| rng.gen()).collect();
            let p = m.predict(&u);
            let (mu, sd) = dense_posterior(&m, &xs, &y, &u);
            worst = worst.max((p.mu - mu).abs()).max((p.sigma - sd).abs());
        }
    }
    ensure(worst <= 1e-9, format!("posterior deviates from dense oracle by {worst:e}"))?;

    let h1 = Hyperparams::isotropic(1.0, 0.5, 1.0, 3);
    let m1 = GpModel::with_hyperparams(&[vec![0.3; 3]], &[0.0], &unit, h1, TargetScaling::Identity).unwrap();
    let lml1 = -0.5 * (2.0 * PI * (2.0 + m1.jitter())).ln();
    let e1 = ((m1.log_marginal_likelihood() - lml1) / lml1).abs();
    ensure(e1 < 1e-8, format!("n=1 log marginal likelihood relative error {e1:e}"))?;

    let h2 = Hyperparams { signal_std: 0.9, lengthscales: vec![0.3, 0.6, 1.2], noise_std: 0.3 };
    let xs2 = vec![vec![0.2, 0.1, 0.7], vec![0.4, 0.5, 0.3]];
    let y2 = [1.1, -0.4];
    let m2 = GpModel::with_hyperparams(&xs2, &y2, &unit, h2.clone(), TargetScaling::Identity).unwrap();
    let r2: f64 = (0..3).map(|d| ((xs2[0][d] - xs2[1][d]) / h2.lengthscales[d]).powi(2)).sum();
    let c = 0.81 * (-0.5 * r2).exp();
    let v = 0.81 + 0.09 + m2.jitter();
    let det = v * v - c * c;
    let quad = (v * y2[0] * y2[0] - 2.0 * c * y2[0] * y2[1] + v * y2[1] * y2[1]) / det;
    let lml2 = -0.5 * quad - 0.5 * det.ln() - (2.0 * PI).ln();
    let e2 = ((m2.log_marginal_likelihood() - lml2) / lml2).abs();
    ensure(e2 < 1e-8, format!("n=2 log marginal likelihood relative error {e2:e}"))?;

    let mut min_sigma = f64::INFINITY;
    let mut points = 0;
    for model_seed in 0..10u64 {
        let n = 5 + 4 * model_seed as usize;
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.gen()).collect()).collect();
        let y: Vec<f64> = xs.iter().map(|x| (5.0 * x[0]).sin() + x[1] - x[2] * x[2] + 0.05 * rng.gen::<f64>()).collect();
        let m = GpModel::fit(&xs, &y, &unit, model_seed).map_err(|e| e.to_string())?;
        for _ in 0..1000 {
            let u: Vec<f64> = (0..3).map(|_| rng.gen()).collect();
            min_sigma = min_sigma.min(m.predict(&u).sigma);
            points += 1;
        }
    }
    ensure(min_sigma >= 0.0, format!("negative posterior sigma {min_sigma}"))?;
    within(start.elapsed(), 30.0)?;
    Ok(format!(
        "dense-oracle deviation {worst:.1e}; LML errors {e1:.1e}, {e2:.1e}; min sigma {min_sigma:.2e} over {points} points"
    ))
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0_f64;
    for k in 0..20 {
        let sigma: f64 = rng.gen_range(0.05..0.3);
        let mu: f64 = rng.gen_range(-1.0..1.0);
        let best = mu + sigma * rng.gen_range(-2.0..2.0);
        let dist = Normal::new(mu, sigma).unwrap();
        let mut draws = ChaCha8Rng::seed_from_u64(100 + k);
        let n = 1_000_000;
        let mc = (0..n).map(|_| (best - dist.sample(&mut draws)).max(0.0)).sum::<f64>() / n as f64;
        let err = (expected_improvement(mu, sigma, best) - mc).abs();
        worst = worst.max(err);
        ensure(err < 1e-3, format!("EI(mu={mu}, sigma={sigma}, best={best}) off Monte Carlo by {err:e}"))?;
    }
    let p0 = prob_feasible(0.5_f64, 0.1, 0.5);
    let p2 = prob_feasible(0.3_f64, 0.1, 0.5);
    ensure((p0 - 0.5).abs() < 1e-5, format!("Φ(0) = {p0}"))?;
    ensure((p2 - 0.97725).abs() < 1e-5, format!("Φ(2) = {p2}"))?;
    Ok(format!("EI vs 10^6-draw Monte Carlo worst error {worst:.1e}; Φ(0) = {p0}, Φ(2) = {p2:.6}"))
}

// ---------------------------------------------------------------- 4

/// Adaptive Simpson quadrature.
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 60)
}

fn kl_quadrature(p: &GaussianPdf<f64>, q: &GaussianPdf<f64>) -> f64 {
    let f = |x: f64| {
        let zp = (x - p.mu) / p.sigma;
        let zq = (x - q.mu) / q.sigma;
        p.density(x) * ((q.sigma / p.sigma).ln() - 0.5 * zp * zp + 0.5 * zq * zq)
    };
    simpson(&f, p.mu - 14.0 * p.sigma, p.mu + 14.0 * p.sigma, 1e-11)
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0_f64;
    for _ in 0..10_000 {
        let p = GaussianPdf::new(rng.gen_range(-10.0..10.0), rng.gen_range(0.1..10.0)).unwrap();
        let q = GaussianPdf::new(rng.gen_range(-10.0..10.0), rng.gen_range(0.1..10.0)).unwrap();
        let err = (kl_divergence(&p, &q) - kl_quadrature(&p, &q)).abs();
        worst = worst.max(err);
        ensure(err < 1e-6, format!("KL({p:?} ‖ {q:?}) off quadrature by {err:e}"))?;
    }
    let n01 = GaussianPdf::new(0.0, 1.0).unwrap();
    ensure(kl_divergence(&n01, &n01) == 0.0, "KL(p, p) is not exactly zero")?;
    let shifted = kl_divergence(&n01, &GaussianPdf::new(1.0, 1.0).unwrap());
    ensure(shifted == 0.5, format!("KL(N(0,1), N(1,1)) = {shifted}"))?;
    Ok(format!("10^4 random pairs, worst |closed form − quadrature| {worst:.1e}; exact identities hold"))
}

// ---------------------------------------------------------------- 5

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn criterion_5() -> Check {
    let start = Instant::now();
    let sim = SimConfig::default();
    let setup = ShiftSetup::default();
    let settings = MetricSettings::default();
    let run = |sched: &gearshift::ControlSchedule| -> Result<(Vec<f64>, Vec<f64>), String> {
        let mut js = Vec::new();
        let mut jd = Vec::new();
        for i in 0..30 {
            let tel = run_shift(&sim, sched, derive_seed(5, i)).map_err(|e| e.to_string())?;
            let idx = shift_indices(&tel, &sim, &settings).map_err(|e| e.to_string())?;
            js.push(idx.j_s);
            jd.push(idx.j_d);
        }
        Ok((js, jd))
    };
    let (qs_s, qs_d) = run(&setup.qs(TABLE_I.0, TABLE_I.1).unwrap())?;
    let (cbw_s, cbw_d) = run(&setup.qscbw(&table_ii()).unwrap())?;
    let (a, b, c, d) = (mean(&cbw_s), mean(&qs_s), mean(&cbw_d), mean(&qs_d));
    let detail = format!("J_s QS-CBW {a:.3} vs QS {b:.3}; J_d QS-CBW {c:.4} s vs QS {d:.4} s");
    ensure(a < b, format!("smoothness not improved: {detail}"))?;
    ensure(c > d, format!("duration not increased: {detail}"))?;
    within(start.elapsed(), 20.0)?;
    Ok(detail)
}

// ---------------------------------------------------------------- 6, 7

struct Benchmark {
    baseline: BaselineStats<f64>,
    cbo: Vec<CampaignState<f64>>,
    rs: Vec<CampaignState<f64>>,
    elapsed: Duration,
}

const PAIRS: u64 = 10;

fn benchmark_baseline() -> BaselineStats<f64> {
    qs_baseline_stats(&SimConfig::default(), &ShiftSetup::default(), TABLE_I.0, TABLE_I.1, 50, 0, &MetricSettings::default())
        .expect("QS baseline")
}

fn campaign(baseline: &BaselineStats<f64>, mode: Mode, seed: u64) -> Result<CampaignState<f64>, String> {
    let mut ev = ManeuverEvaluator::new(SimConfig::default(), *baseline);
    let cfg = CampaignConfig { mode, seed, ..CampaignConfig::default() };
    run_campaign(&mut ev, &cfg).map_err(|e| e.to_string())
}

fn run_benchmark() -> Result<Benchmark, String> {
    let start = Instant::now();
    let baseline = benchmark_baseline();
    let mut cbo = Vec::new();
    let mut rs = Vec::new();
    for seed in 0..PAIRS {
        cbo.push(campaign(&baseline, Mode::Cbo, seed)?);
        rs.push(campaign(&baseline, Mode::Rs, seed)?);
    }
    Ok(Benchmark { baseline, cbo, rs, elapsed: start.elapsed() })
}

fn criterion_6(b: &Benchmark) -> Check {
    let mut wins = 0;
    let mut pairs = Vec::new();
    for (c, r) in b.cbo.iter().zip(&b.rs) {
        let ci = c.incumbent().ok_or("CBO campaign without a feasible incumbent")?;
        ensure(ci.j_d <= 0.5, format!("CBO incumbent J_d = {} s", ci.j_d))?;
        ensure(
            ci.theta.p_high > 10.0 && ci.theta.p_high < 30.0,
            format!("CBO optimum p_high = {} bar on the bound", ci.theta.p_high),
        )?;
        let rj = r.incumbent().map_or(f64::INFINITY, |o| o.j);
        if ci.j <= rj {
            wins += 1;
        }
        pairs.push(format!("{:.1}/{:.1}", ci.j, rj));
    }
    let curves = |states: &[CampaignState<f64>]| -> Result<Vec<f64>, String> {
        let cs = states.iter().map(|s| convergence_curve(s).map_err(|e| e.to_string())).collect::<Result<Vec<_>, _>>()?;
        mean_curve(&cs).map_err(|e| e.to_string())
    };
    let n_r = b.cbo[0].config.n_random;
    let cross_cbo = crossing_iteration(&curves(&b.cbo)?, 0.5, n_r);
    let cross_rs = crossing_iteration(&curves(&b.rs)?, 0.5, n_r);
    let detail = format!(
        "CBO ≤ RS in {wins}/{PAIRS} pairs [{}]; mean KL below 0.5 from n = {cross_cbo:?} (CBO) vs {cross_rs:?} (RS); {:.0} s",
        pairs.join(", "),
        b.elapsed.as_secs_f64()
    );
    ensure(wins >= 8, format!("too few CBO wins: {detail}"))?;
    match (cross_cbo, cross_rs) {
        (Some(c), Some(r)) if c < r => {}
        _ => return Err(format!("CBO curve does not cross first: {detail}")),
    }
    within(b.elapsed, 600.0)?;
    Ok(detail)
}

fn log_bytes(state: &CampaignState<f64>) -> Vec<u8> {
    let mut buf = Vec::new();
    write_log(&mut buf, state).expect("in-memory log");
    buf
}

fn criterion_7(b: &Benchmark) -> Check {
    let again = campaign(&b.baseline, Mode::Cbo, 0)?;
    let (first, second) = (log_bytes(&b.cbo[0]), log_bytes(&again));
    ensure(first == second, "repeated campaign log differs")?;
    Ok(format!("{} byte log reproduced exactly", first.len()))
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Check {
    let sim = SimConfig::default();
    let setup = ShiftSetup::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut steps = 0usize;
    for k in 0..100 {
        let sched = if k % 2 == 0 {
            let th = ParamSet::new(rng.gen_range(10.0..30.0), rng.gen_range(0.0..0.1), rng.gen_range(0.0..0.1));
            setup.qscbw(&th).unwrap()
        } else {
            setup.qs(rng.gen_range(0.0..0.1), rng.gen_range(0.0..0.1)).unwrap()
        };
        let tel = run_shift(&sim, &sched, rng.gen()).map_err(|e| e.to_string())?;
        for (i, (&tq, &slip)) in tel.clutch_torque.iter().zip(&tel.clutch_slip).enumerate() {
            ensure(tq * slip >= 0.0, format!("maneuver {k}, sample {i}: clutch power {}", tq * slip))?;
            steps += 1;
        }
    }

    let quiet = SimConfig::default().with_noise(NoiseConfig::disabled());
    let mut worst_dt = 0.0_f64;
    for sched in [setup.qs(TABLE_I.0, TABLE_I.1).unwrap(), setup.qscbw(&table_ii()).unwrap()] {
        let t_e = |dt: f64| -> Result<f64, String> {
            let cfg = SimConfig { dt, ..quiet.clone() };
            let tel = run_shift(&cfg, &sched, 0).map_err(|e| e.to_string())?;
            shift_indices(&tel, &cfg, &MetricSettings::default()).map_err(|e| e.to_string())?.t_e.ok_or("no sync".into())
        };
        worst_dt = worst_dt.max((t_e(1e-3)? - t_e(5e-4)?).abs());
    }
    ensure(worst_dt < 2e-3, format!("halving dt moves t_e by {worst_dt} s"))?;

    // Before the request the clutch is locked in the steady cruise gear.
    let tel = run_shift(&quiet, &setup.qscbw(&table_ii()).unwrap(), 0).map_err(|e| e.to_string())?;
    let i_a = tel.index_at(tel.t_a);
    let gamma = normalized_ratio(&tel, quiet.gear_ratio(2).unwrap(), 1.0).map_err(|e| e.to_string())?;
    ensure(tel.clutch_locked[..i_a].iter().all(|&l| l), "clutch slips before the request")?;
    let worst_gamma = gamma[..i_a].iter().map(|g| (g - 1.0).abs()).fold(0.0, f64::max);
    ensure(worst_gamma <= 1e-9, format!("locked γ deviates from 1 by {worst_gamma:e}"))?;
    Ok(format!(
        "{steps} steps dissipative; dt halving moves t_e by {:.1} ms; locked γ error {worst_gamma:.1e}",
        worst_dt * 1e3
    ))
}

// ---------------------------------------------------------------- supplementary

fn validations(b: &Benchmark, states: &[CampaignState<f64>], seed: u64) -> Result<Vec<Vec<ShiftMetrics<f64>>>, String> {
    states
        .iter()
        .map(|s| {
            let theta = s.incumbent().ok_or("no incumbent")?.theta;
            validate_optimum(
                &theta,
                &SimConfig::default(),
                &ShiftSetup::default(),
                &MetricSettings::default(),
                &b.baseline,
                s.config.lambda,
                30,
                seed,
            )
            .map(|v| v.runs)
            .map_err(|e| e.to_string())
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Validation of the tuned optima against QS and against each other.
fn supplementary_comparison(b: &Benchmark) -> Check {
    let sim = SimConfig::default();
    let settings = MetricSettings::default();
    let qs_sched = ShiftSetup::default().qs(TABLE_I.0, TABLE_I.1).unwrap();
    let qs: Vec<ShiftMetrics<f64>> = (0..30)
        .map(|i| {
            let tel = run_shift(&sim, &qs_sched, derive_seed(99, i)).unwrap();
            shift_indices(&tel, &sim, &settings).unwrap().score(&b.baseline, 0.8)
        })
        .collect();
    let cbo = validations(b, &b.cbo, 99)?;
    let rs = validations(b, &b.rs, 99)?;
    let flat = |v: &[Vec<ShiftMetrics<f64>>]| v.iter().flatten().copied().collect::<Vec<_>>();
    let (cbo_all, rs_all) = (flat(&cbo), flat(&rs));
    let rows = compare_strategies(&[("qs", &qs[..]), ("cbo", &cbo_all[..]), ("rs", &rs_all[..])]).map_err(|e| e.to_string())?;
    let get = |s: &str, m: &str| rows.iter().find(|r| r.strategy == s && r.metric == m).unwrap().mean;
    let med = |v: &[Vec<ShiftMetrics<f64>>]| v.iter().map(|r| mean(&r.iter().map(|m| m.j_s).collect::<Vec<_>>())).collect();
    let (med_cbo, med_rs) = (median(med(&cbo)), median(med(&rs)));
    let detail = format!(
        "J_s CBO {:.3} < QS {:.3}; J_d CBO {:.4} > QS {:.4}; median J_s CBO {med_cbo:.3} ≤ RS {med_rs:.3}",
        get("cbo", "J_s"),
        get("qs", "J_s"),
        get("cbo", "J_d"),
        get("qs", "J_d")
    );
    ensure(get("cbo", "J_s") < get("qs", "J_s") && get("cbo", "J_d") > get("qs", "J_d"), detail.clone())?;
    ensure(med_cbo <= med_rs, detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------- driver

fn report(label: &str, name: &str, start: Instant, check: Check) -> bool {
    let secs = start.elapsed().as_secs_f64();
    match check {
        Ok(detail) => {
            println!("{label} PASS  {name}: {detail} ({secs:.1} s)");
            true
        }
        Err(why) => {
            println!("{label} FAIL  {name}: {why} ({secs:.1} s)");
            false
        }
    }
}

fn main() {
    let mut results = Vec::new();
    let simple: [(&str, &str, fn() -> Check); 5] = [
        ("criterion 1", "metric oracles", criterion_1),
        ("criterion 2", "GP exactness", criterion_2),
        ("criterion 3", "acquisition correctness", criterion_3),
        ("criterion 4", "KL correctness", criterion_4),
        ("criterion 5", "strategy separation", criterion_5),
    ];
    for (label, name, f) in simple {
        let t = Instant::now();
        results.push(report(label, name, t, f()));
    }

    let t = Instant::now();
    let bench = run_benchmark();
    match &bench {
        Ok(b) => {
            results.push(report("criterion 6", "end-to-end optimization", t, criterion_6(b)));
            let t = Instant::now();
            results.push(report("criterion 7", "determinism", t, criterion_7(b)));
        }
        Err(e) => {
            results.push(report("criterion 6", "end-to-end optimization", t, Err(e.clone())));
            results.push(report("criterion 7", "determinism", t, Err(e.clone())));
        }
    }
    let t = Instant::now();
    results.push(report("criterion 8", "simulator physics", t, criterion_8()));
    if let Ok(b) = &bench {
        let t = Instant::now();
        results.push(report("supplementary", "validated strategy comparison", t, supplementary_comparison(b)));
    }

    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} of {} checks passed", results.len() - failed, results.len());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if failed > 0 && strict {
        std::process::exit(1);
    }
}
