//! Acceptance criteria, one PASS/FAIL line each. Full-scale runs are
//! skipped unless `LHM_FULL_SCALE=1`.

#[path = "common/mod.rs"]
mod common;

use std::time::Instant;

use learned_harmonic::benchmarks::{
    generate_normal_gamma_data, normal_gamma_analytic_log_evidence, normal_gamma_log_posterior, BenchmarkProblem,
    NormalGammaPrior, Rosenbrock,
};
use learned_harmonic::evidence::{flow_estimator_terms, log_estimator_terms, PriorTarget};
use learned_harmonic::experiment::{fit_flow, prior_estimate, run_experiment, sample_problem, ExperimentConfig, ProblemName};
use learned_harmonic::training::{grad_nll, nll_loss};
use learned_harmonic::{estimate_evidence, estimate_evidence_by_chain, run_sampler, Model, SamplerConfig, TrainingConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Published reference values.
const PUBLISHED_LOG_BF12: f64 = 2.6362;
const PUBLISHED_LOG_Z_M1: f64 = -257.2300;
const PUBLISHED_LOG_Z_M2: f64 = -259.8602;

struct Outcome {
    failed: usize,
}

impl Outcome {
    fn report(&mut self, id: &str, pass: bool, detail: String) {
        println!("{} [{id}] {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed += 1;
        }
    }

    fn skip(&self, id: &str, detail: &str) {
        println!("SKIP [{id}] {detail} (set LHM_FULL_SCALE=1)");
    }
}

fn full_scale() -> bool {
    std::env::var("LHM_FULL_SCALE").is_ok_and(|v| v == "1")
}

fn scratch() -> tempfile::TempDir {
    tempfile::tempdir().expect("temporary directory")
}

/// Criteria 1 and 2: Rosenbrock accuracy and error-bar calibration.
fn rosenbrock(out: &mut Outcome, chains: usize, steps: usize, burn_in: usize, trials: usize, id: &str) {
    let dir = scratch();
    let mut cfg = ExperimentConfig::for_problem(ProblemName::Rosenbrock);
    cfg.sampler.n_walkers = chains;
    cfg.sampler.n_steps = steps;
    cfg.sampler.burn_in = burn_in;
    cfg.n_trials = trials;
    cfg.temperature = 0.9;
    cfg.jobs = 0;
    cfg.output_dir = dir.path().to_path_buf();
    let start = Instant::now();
    let summary = run_experiment(&cfg).expect("rosenbrock experiment");
    let minutes = start.elapsed().as_secs_f64() / 60.0;
    let g = &summary.groups[0];
    let truth = g.ground_truth.expect("quadrature truth");
    let (mean, std, sigma) = (g.mean_log_z.unwrap_or(f64::NAN), g.std_log_z.unwrap_or(f64::NAN), g.mean_sigma_log_z.unwrap_or(f64::NAN));
    let err = (mean - truth).abs();
    if id == "1" {
        let pass = summary.n_failed == 0 && err < 0.05 && err <= 3.0 * std && minutes < 10.0;
        out.report(
            "1",
            pass,
            format!(
                "Rosenbrock desk accuracy: mean log z {mean:.4} vs quadrature {truth:.4}, |err| {err:.4} (< 0.05), 3*std {:.4}, {} trials, {minutes:.1} min (< 10)",
                3.0 * std,
                g.n_ok
            ),
        );
        let ratio = sigma / std;
        out.report(
            "2",
            (1.0 / 1.5..=1.5).contains(&ratio),
            format!("sigma calibration: mean reported sigma {sigma:.4} / empirical std {std:.4} = {ratio:.3} (within 1.5x)"),
        );
    } else {
        out.report(
            id,
            summary.n_failed == 0 && err <= std,
            format!("Rosenbrock full scale: |mean - truth| {err:.4} within 1 std {std:.4} over {} trials", g.n_ok),
        );
    }
}

/// Criterion 3: Normal-Gamma prior sensitivity against the analytic evidence.
fn normal_gamma(out: &mut Outcome) {
    let taus = [1e-4, 1e-2, 1.0];
    let temps = [0.9, 0.95];
    let data = generate_normal_gamma_data(100, 0.0, 1.0, 0).unwrap();
    let sampler = SamplerConfig { n_walkers: 40, n_steps: 1500, burn_in: 500, ..SamplerConfig::default() };
    let training = TrainingConfig::default();
    let seed = 0;
    let mut analytic = Vec::new();
    let mut learned = vec![Vec::new(); temps.len()];
    let mut original = Vec::new();
    let mut ratio_ok = true;
    let mut ratios = Vec::new();
    for &tau0 in &taus {
        let problem = BenchmarkProblem::normal_gamma(&data, NormalGammaPrior::vague(tau0)).unwrap();
        let truth = problem.ground_truth().unwrap().log_z.unwrap();
        analytic.push(truth);
        let (chains, _) = sample_problem(&problem, &sampler, seed).unwrap();
        let (train, inference) = chains.split_half(seed).unwrap();
        let cfg = TrainingConfig { seed, ..training.clone() };
        let (flow, _) = fit_flow(&train, &problem.flow_preset, &cfg, seed).unwrap();
        let lengths: Vec<usize> = inference.chains().iter().map(|c| c.len()).collect();
        for (k, &t) in temps.iter().enumerate() {
            let terms = flow_estimator_terms(&flow, t, &inference, &problem).unwrap();
            let r = estimate_evidence_by_chain(&terms, &lengths).unwrap();
            let ratio = (r.log_z - truth).exp();
            ratios.push(format!("{tau0:e}@{t}: {ratio:.4}"));
            ratio_ok &= (0.97..=1.03).contains(&ratio);
            learned[k].push(r.log_z);
        }
        original.push(prior_estimate(&problem, &inference).unwrap().log_z);
    }
    let spread = |est: &[f64]| -> f64 {
        (1..est.len())
            .map(|i| ((est[i] - est[0]) - (analytic[i] - analytic[0])).abs())
            .fold(0.0, f64::max)
    };
    let analytic_spread = analytic[2] - analytic[0];
    let learned_dev: Vec<f64> = learned.iter().map(|e| spread(e)).collect();
    let learned_rel: Vec<f64> = learned.iter().map(|e| ((e[2] - e[0]) / analytic_spread - 1.0).abs()).collect();
    let hme_dev = spread(&original);
    let hme_frac = (original[2] - original[0]) / analytic_spread;
    let pass = ratio_ok
        && learned_dev.iter().all(|&d| d < 0.05)
        && learned_rel.iter().all(|&r| r < 0.05)
        && hme_dev >= 0.05
        && hme_frac < 0.5;
    out.report(
        "3",
        pass,
        format!(
            "Normal-Gamma prior sensitivity: z/z_analytic [{}] in [0.97, 1.03]; learned spread deviation {:.4?} (< 0.05), relative {:.4?} (< 5%); original HME deviation {hme_dev:.3} (must be >= 0.05) and spread fraction {hme_frac:.3} (< 0.5)",
            ratios.join(", "),
            learned_dev,
            learned_rel
        ),
    );
}

/// Criterion 4: Pima Bayes factor.
fn pima(out: &mut Outcome, chains: usize, steps: usize, burn_in: usize, id: &str) {
    let mut log_z = Vec::new();
    let start = Instant::now();
    for problem in [ProblemName::PimaM1, ProblemName::PimaM2] {
        let dir = scratch();
        let mut cfg = ExperimentConfig::for_problem(problem);
        cfg.sampler.n_walkers = chains;
        cfg.sampler.n_steps = steps;
        cfg.sampler.burn_in = burn_in;
        cfg.jobs = 0;
        cfg.output_dir = dir.path().to_path_buf();
        let summary = run_experiment(&cfg).expect("pima experiment");
        log_z.push(summary.groups[0].mean_log_z.unwrap_or(f64::NAN));
    }
    let minutes = start.elapsed().as_secs_f64() / 60.0;
    let bf = log_z[0] - log_z[1];
    let (lo, hi, minutes_cap) = if id == "4" { (2.4, 2.9, 20.0) } else { (2.54, 2.74, f64::INFINITY) };
    let per_model = (log_z[0] - PUBLISHED_LOG_Z_M1).abs() < 0.5 && (log_z[1] - PUBLISHED_LOG_Z_M2).abs() < 0.5;
    out.report(
        id,
        (lo..=hi).contains(&bf) && per_model && minutes < minutes_cap,
        format!(
            "Pima {chains}x{steps}: log BF12 {bf:.4} in [{lo}, {hi}] (published {PUBLISHED_LOG_BF12}); log z M1 {:.4} vs {PUBLISHED_LOG_Z_M1}, M2 {:.4} vs {PUBLISHED_LOG_Z_M2} (within 0.5); {minutes:.1} min",
            log_z[0], log_z[1]
        ),
    );
}

/// Criterion 5: the always-on property suite, one line for all properties.
fn properties(out: &mut Outcome) {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    let flow = common::random_flow(3, 6, 1);
    let inv = (0..1000).all(|_| {
        let z: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (x, _) = flow.forward(&z).unwrap();
        let (back, _) = flow.inverse(&x).unwrap();
        z.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-10)
    });
    check("invertibility 1e-10", inv);

    let trained = common::trained_banana_flow(2);
    let samples = trained.sample(100_000, 1.0, 5).unwrap();
    let range = |k: usize| {
        let lo = samples.iter().map(|s| s[k]).fold(f64::INFINITY, f64::min);
        let hi = samples.iter().map(|s| s[k]).fold(f64::NEG_INFINITY, f64::max);
        (lo - 0.5 * (hi - lo), hi + 0.5 * (hi - lo))
    };
    let (bx, by) = (range(0), range(1));
    for t in [1.0, 0.9] {
        let lz = common::simpson_log_2d(|a, b| trained.log_density(&[a, b], t).unwrap(), bx, by, 2000);
        check(&format!("normalization at T = {t}"), (lz.exp() - 1.0).abs() < 1e-3);
    }

    let small = common::random_flow(2, 2, 3);
    let batch: Vec<Vec<f64>> = (0..16).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
    let grad = grad_nll(&small, &batch).unwrap();
    let base = small.parameters();
    let mut probe = small.clone();
    let worst = (0..base.len())
        .map(|i| {
            let mut p = base.clone();
            p[i] += 1e-5;
            probe.set_parameters(&p).unwrap();
            let up = nll_loss(&probe, &batch).unwrap();
            p[i] -= 2e-5;
            probe.set_parameters(&p).unwrap();
            let down = nll_loss(&probe, &batch).unwrap();
            let fd = (up - down) / 2e-5;
            (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1e-3)
        })
        .fold(0.0, f64::max);
    check("gradient vs finite differences 1e-5", worst < 1e-5);

    let mut prev = [f64::INFINITY; 2];
    let mut monotone = true;
    for t in [1.0, 0.9, 0.7, 0.5] {
        let s = trained.sample(50_000, t, 9).unwrap();
        for (k, p) in prev.iter_mut().enumerate() {
            let (_, v) = common::mean_var(s.iter().map(|x| x[k]));
            monotone &= v <= *p;
            *p = v;
        }
    }
    check("temperature monotonicity", monotone);

    let terms: Vec<f64> = (0..500).map(|_| rng.random_range(-5.0..5.0)).collect();
    let a = estimate_evidence(&terms).unwrap();
    let b = estimate_evidence(&terms.iter().map(|x| x + 300.0).collect::<Vec<_>>()).unwrap();
    check(
        "log-space shift invariance",
        (b.log_rho_hat - a.log_rho_hat - 300.0).abs() < 1e-9 && (b.var_rho_hat_log - a.var_rho_hat_log - 600.0).abs() < 1e-8,
    );

    let banana = common::banana_chains(4, 200, 3);
    let hme = log_estimator_terms(&PriorTarget(&Rosenbrock), &banana, &Rosenbrock).unwrap();
    check(
        "prior target recovers the original estimator",
        banana.iter().zip(&hme).all(|((t, _), x)| (*x + Rosenbrock.log_likelihood(t)).abs() < 1e-12),
    );

    let p = NormalGammaPrior { mu0: 0.0, tau0: 1.0, a0: 1.0, b0: 1.0 };
    for data in [vec![0.0], vec![0.4, -1.3, 2.2]] {
        let analytic = normal_gamma_analytic_log_evidence(&data, p).unwrap();
        let m = data.iter().sum::<f64>() / (1.0 + data.len() as f64);
        let quad = common::simpson_log_2d(
            |u, l| normal_gamma_log_posterior(&[m + u * (-0.5 * l).exp(), l], &data, p).unwrap() - 0.5 * l,
            (-12.0, 12.0),
            (-30.0, 8.0),
            2400,
        );
        check(&format!("Normal-Gamma analytic vs quadrature n = {}", data.len()), ((quad - analytic).exp() - 1.0).abs() < 1e-6);
    }

    let cfg = SamplerConfig { n_walkers: 200, n_steps: 5000, burn_in: 500, seed: 1, init_center: vec![0.5], ..SamplerConfig::default() };
    let chains = run_sampler(|x: &[f64]| -0.5 * x[0] * x[0], &cfg).unwrap().chains;
    let mut xs: Vec<f64> = chains.chains().iter().flat_map(|c| c.flat_samples().iter().step_by(10).copied().collect::<Vec<_>>()).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let normal = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = statrs::distribution::ContinuousCDF::cdf(&normal, x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    check("sampler KS < 0.01", ks < 0.01);

    let pass = failures.is_empty();
    out.report(
        "5",
        pass,
        if pass {
            "property suite: invertibility, normalization, gradients, temperature monotonicity, shift invariance, prior recovery, Normal-Gamma quadrature, sampler KS".into()
        } else {
            format!("property suite failures: {failures:?}")
        },
    );
}

fn main() {
    let mut out = Outcome { failed: 0 };
    let start = Instant::now();
    properties(&mut out);
    rosenbrock(&mut out, 40, 2500, 1000, 10, "1");
    if full_scale() {
        rosenbrock(&mut out, 200, 5000, 2000, 100, "1-full");
    } else {
        out.skip("1-full", "Rosenbrock full scale: 200 chains x 5000, 100 trials");
    }
    normal_gamma(&mut out);
    pima(&mut out, 40, 2000, 1000, "4");
    if full_scale() {
        pima(&mut out, 200, 5000, 1000, "4-full");
    } else {
        out.skip("4-full", "Pima full scale: 200 chains x 5000, log BF12 in [2.54, 2.74]");
    }
    println!("acceptance finished in {:.1} min, {} failing", start.elapsed().as_secs_f64() / 60.0, out.failed);
    if out.failed > 0 {
        std::process::exit(1);
    }
}
