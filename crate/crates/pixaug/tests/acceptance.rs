//! Acceptance suite: one line per criterion, non-zero exit if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use pixaug::config::PipelineConfig;
use pixaug::pipeline::{generate_sets, run_experiment, train_gan_stage, REPORT_FILE};
use pixaug::pixels::save_pixels;
use pixaug::report::{validate_sets, Report};
use pixaug::scenario::ScenarioSpec;
use pixaug_core::data::Label;
use pixaug_core::gan::gan_value;
use pixaug_core::rng::{derive_indexed, rng_from_seed};
use pixaug_core::stats::{
    ball_divergence_statistic, ball_divergence_test, cohen_kappa, ks_statistic, ks_two_sample, metrics,
    ConfusionMatrix, KsMethod,
};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn published_rows() -> Outcome {
    let mut worst = 0.0f64;
    for row in &common::PUBLISHED_ROWS {
        let (tp, fn_, tn, fp) = common::reconstruct(row[0], row[1], 5000, 2000);
        let cm = ConfusionMatrix::new(tp, fn_, fp, tn, Label::NonBuiltUp);
        let m = metrics(&cm).unwrap();
        let got = [m.ppv.unwrap(), m.npv.unwrap(), m.accuracy, cohen_kappa(&cm).unwrap()];
        for (g, w) in got.iter().zip(&row[2..]) {
            worst = worst.max((g - w).abs());
        }
    }
    outcome(worst <= 1e-3, format!("4 rows, worst deviation {worst:.1e} (tolerance 1e-3)"))
}

fn ks_oracle() -> Outcome {
    let mut rng = rng_from_seed(101);
    let mut mismatches = 0;
    for trial in 0..500 {
        let (n, m) = (rng.gen_range(1..=10), rng.gen_range(1..=10));
        let x = common::values(&mut rng, n, trial % 3 == 0);
        let mut y = common::values(&mut rng, m, trial % 3 == 0);
        if trial % 4 == 1 {
            y.iter_mut().for_each(|v| *v += 1.0);
        }
        let stat_ok = ks_statistic(&x, &y).unwrap() == common::ks_statistic_oracle(&x, &y);
        let p_ok = ks_two_sample(&x, &y, KsMethod::Exact).unwrap().p_value == common::ks_exact_p_oracle(&x, &y);
        mismatches += usize::from(!(stat_ok && p_ok));
    }
    outcome(mismatches == 0, format!("500 pairs, {mismatches} mismatches (exact equality)"))
}

fn ball_oracle() -> Outcome {
    let mut rng = rng_from_seed(102);
    let mut worst = 0.0f64;
    let mut identical_nonzero = 0;
    for trial in 0..200 {
        let (n, m, d) = (rng.gen_range(2..=12), rng.gen_range(2..=12), rng.gen_range(1..=4));
        let x = common::rows(&mut rng, n, d, trial % 4 == 0);
        let y = common::rows(&mut rng, m, d, trial % 4 == 0);
        let got = ball_divergence_statistic(&x, &y).unwrap();
        let want = common::ball_oracle(&x, &y);
        worst = worst.max((got - want).abs() / want.abs().max(f64::MIN_POSITIVE));
        identical_nonzero += usize::from(ball_divergence_statistic(&x, &x).unwrap() != 0.0);
    }
    outcome(
        worst <= 1e-12 && identical_nonzero == 0,
        format!("200 pairs, worst relative error {worst:.1e}, {identical_nonzero} identical pairs non-zero"),
    )
}

fn ball_level() -> Outcome {
    let mut rng = rng_from_seed(103);
    let mut draw = || -> Vec<Vec<f64>> {
        (0..100)
            .map(|_| (0..6).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect()
    };
    let mut rejected = 0;
    for trial in 0..200u64 {
        let (x, y) = (draw(), draw());
        let r = ball_divergence_test(&x, &y, 199, derive_indexed(104, trial)).unwrap();
        rejected += usize::from(!r.accepts(0.05));
    }
    let rate = rejected as f64 / 200.0;
    outcome(
        (0.01..=0.09).contains(&rate),
        format!("rejection rate {rate:.3} over 200 trials (allowed [0.01, 0.09])"),
    )
}

fn gradients() -> Outcome {
    let worst = common::fifty_network_gradient_check(105);
    outcome(worst < 1e-4, format!("50 networks, worst relative error {worst:.1e} (limit 1e-4)"))
}

fn equilibrium() -> Outcome {
    let v = gan_value(&[0.5; 16], &[0.5; 16]).unwrap();
    let err = (v + 2.0 * std::f64::consts::LN_2).abs();
    outcome(err <= 1e-12, format!("V = {v:.15}, error {err:.1e}"))
}

fn write_inputs(dir: &Path, master: u64) -> PipelineConfig {
    let scenario = ScenarioSpec::default().generate(master).unwrap();
    std::fs::create_dir_all(dir).unwrap();
    save_pixels(&dir.join("train.csv"), &scenario.train.samples).unwrap();
    save_pixels(&dir.join("test.csv"), &scenario.test.samples).unwrap();
    PipelineConfig {
        train: Some(dir.join("train.csv")),
        test: Some(dir.join("test.csv")),
        out_dir: dir.join("out"),
        master_seed: master,
        ..PipelineConfig::default()
    }
}

/// Validation verdict for one master seed: (KS accepted, Ball accepted).
fn validation_only(master: u64) -> (usize, usize) {
    let config = PipelineConfig {
        master_seed: master,
        ..PipelineConfig::default()
    };
    let seeds = config.seeds();
    let scenario = ScenarioSpec::default().generate(master).unwrap();
    let training = train_gan_stage(&scenario.train, &config.gan, seeds.gan).unwrap();
    let sets = generate_sets(&training, config.generated_sets, config.set_size, seeds.generate).unwrap();
    let original = scenario.train.rows_with(Label::BuiltUp);
    let (ks, ball) = validate_sets(
        &original,
        &sets,
        config.alpha,
        config.permutations,
        seeds.validate,
        config.ks_method,
    )
    .unwrap();
    (ks.iter().filter(|e| e.pass).count(), ball.iter().filter(|e| e.pass).count())
}

fn seed_passes((ks, ball): (usize, usize)) -> bool {
    ks * 10 >= 18 * 9 && ball == 3
}

fn trend_ok(acc: &[f64]) -> bool {
    let drops: Vec<f64> = acc.windows(2).map(|w| w[0] - w[1]).filter(|d| *d > 0.0).collect();
    drops.len() <= 1 && drops.iter().all(|d| *d <= 0.005) && acc[acc.len() - 1] > acc[0]
}

fn scenario(work: &Path) -> (Outcome, Option<Report>) {
    let start = Instant::now();
    let config = write_inputs(&work.join("run_a"), 0);
    let report = run_experiment(&config, &mut |_| {}).unwrap();
    let first = (
        report.ks_table.iter().filter(|e| e.pass).count(),
        report.ball_table.iter().filter(|e| e.pass).count(),
    );
    let mut verdicts = vec![first];
    verdicts.extend((1..10).map(validation_only));
    let passing = verdicts.iter().filter(|v| seed_passes(**v)).count();
    let acc: Vec<f64> = report.accuracy_table.iter().map(|r| r.accuracy).collect();
    let elapsed = start.elapsed().as_secs_f64();
    let per_seed: Vec<String> = verdicts.iter().map(|(k, b)| format!("{k}/18+{b}/3")).collect();
    let pass = passing >= 8 && trend_ok(&acc) && elapsed < 600.0;
    let detail = format!(
        "(i) {passing}/10 seeds accept [{}]; (ii) accuracy k=0..3 {:.4?}; {elapsed:.0}s",
        per_seed.join(" "),
        acc
    );
    (outcome(pass, detail), Some(report))
}

fn reproducible(work: &Path) -> Outcome {
    let config = write_inputs(&work.join("run_b"), 0);
    run_experiment(&config, &mut |_| {}).unwrap();
    let a = std::fs::read(work.join("run_a/out").join(REPORT_FILE)).unwrap();
    let b = std::fs::read(work.join("run_b/out").join(REPORT_FILE)).unwrap();
    outcome(a == b, format!("report.json {} bytes, identical: {}", a.len(), a == b))
}

fn main() -> ExitCode {
    let work = tempfile::tempdir().unwrap();
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let mut run = |n: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let secs = t.elapsed().as_secs_f64();
        println!(
            "criterion {n} {}: {name}: {} ({secs:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((n, name, o, secs));
    };
    run(1, "published metric reconstruction", &mut published_rows);
    run(2, "KS oracle equivalence", &mut ks_oracle);
    run(3, "Ball Divergence oracle equivalence", &mut ball_oracle);
    run(4, "Ball permutation test level", &mut ball_level);
    run(5, "gradient check", &mut gradients);
    run(6, "GAN equilibrium value", &mut equilibrium);
    run(7, "end-to-end trend reproduction", &mut || scenario(work.path()).0);
    run(8, "reproducibility", &mut || reproducible(work.path()));
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
