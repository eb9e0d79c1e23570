//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::path::Path;
use std::time::Instant;

use common::{law_of, mean_and_stderr, random_clock, random_symmetric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resetclock::atgame::{check_summary, estimate_score, play_summary};
use resetclock::cli::run_from;
use resetclock::quantum_verify::{
    apply_channel_two_ways, build_certificate, build_kraus, verify_continuity_certificate,
};
use resetclock::walk_analysis::{
    closed_form_d, continuity_bounds_for_clock, ladder_bounds, solve_absorption_profile, Boundary,
};
use resetclock::{DenseMatrix, GameConfig, StochasticClock};

const SWEEP_DELTA: f64 = 0.05;
const SWEEP_RUNS: usize = 500;
const SWEEP_SEED: u64 = 7;
const ORACLE_REL_TOL: f64 = 1e-9;
const RECURRENCE_TOL: f64 = 1e-9;
const RENEWAL_SIGMAS: f64 = 4.0;
const EXACT_TOL: f64 = 1e-12;
const ENVELOPE_SIGMAS: f64 = 3.0;
const RESIDUAL_TOL: f64 = 1e-12;
const POSITIVITY_TOL: f64 = -1e-10;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ladder(d: usize, delta: f64) -> StochasticClock {
    StochasticClock::ladder(d, delta).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

fn cli(args: &[&str]) -> i32 {
    let mut full = vec!["resetclock"];
    full.extend_from_slice(args);
    run_from(full, &mut std::io::sink(), &mut std::io::sink())
}

fn ladder_sweep_envelope() -> Outcome {
    let mut misses = Vec::new();
    let mut worst = String::new();
    for d in (20..=200).step_by(20) {
        let clock = ladder(d, SWEEP_DELTA);
        let config = GameConfig::new(clock.clone(), clock, (d / 2) as i64)
            .unwrap()
            .with_seed(SWEEP_SEED)
            .with_runs(SWEEP_RUNS);
        let est = estimate_score(&config).unwrap();
        let (headline, exact) = ladder_bounds(d as i64, SWEEP_DELTA).unwrap();
        let lo = exact.n_lower.unwrap().to_f64();
        let hi = exact.n_upper.unwrap().to_f64();
        let h_lo = headline.n_lower.unwrap().to_f64();
        if !(est.mean >= lo && est.mean <= hi && est.mean >= h_lo) {
            misses.push(d);
        }
        if d == 200 {
            worst = format!(
                "d=200 mean {:.3} ± {:.3} in [{lo:.3}, {hi:.3}], capped {}",
                est.mean, est.std_error, est.capped_runs
            );
        }
    }
    outcome(
        misses.is_empty(),
        format!("misses at d = {misses:?}; {worst}"),
    )
}

/// The 100 random symmetric problems shared by criteria 2 and 3.
fn oracle_cases() -> Vec<(usize, i64, resetclock::DeltaDistribution)> {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    (0..100)
        .map(|_| {
            let m = rng.gen_range(1..=5);
            let d = rng.gen_range(1..=200);
            (m, d, random_symmetric(&mut rng, m))
        })
        .collect()
}

fn oracle_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_unit: f64 = 0.0;
    let mut failing = 0;
    let mut unit_cases = 0;
    for (m, d, delta) in oracle_cases() {
        let mut case_worst: f64 = 0.0;
        for boundary in [Boundary::Necessary, Boundary::Sufficient] {
            let (lo, hi) = boundary.limits(d);
            let x = solve_absorption_profile(&delta, lo, hi).finite().unwrap();
            for z in lo + 1..hi {
                let cf = closed_form_d(d, z as f64, &delta, boundary)
                    .unwrap()
                    .finite()
                    .unwrap();
                let solved = x[(z - lo - 1) as usize];
                case_worst = case_worst.max((cf - solved).abs() / solved.abs());
            }
        }
        worst = worst.max(case_worst);
        if case_worst > ORACLE_REL_TOL {
            failing += 1;
        }
        if m == 1 {
            unit_cases += 1;
            worst_unit = worst_unit.max(case_worst);
        }
    }
    outcome(
        failing == 0,
        format!(
            "{failing}/100 cases above {ORACLE_REL_TOL:e}, max rel err {worst:.3e}; \
             unit-step subset ({unit_cases} cases) max rel err {worst_unit:.3e}"
        ),
    )
}

fn recurrence_residual() -> Outcome {
    let mut worst: f64 = 0.0;
    for (_, d, delta) in oracle_cases() {
        let law = law_of(&delta);
        for boundary in [Boundary::Necessary, Boundary::Sufficient] {
            let (lo, hi) = boundary.limits(d);
            let x = solve_absorption_profile(&delta, lo, hi).finite().unwrap();
            let at = |z: i64| {
                if z > lo && z < hi {
                    x[(z - lo - 1) as usize]
                } else {
                    0.0
                }
            };
            for z in lo + 1..hi {
                let rhs = 1.0 + law.iter().map(|&(k, p)| p * at(z + k)).sum::<f64>();
                worst = worst.max((at(z) - rhs).abs());
            }
        }
    }
    outcome(
        worst <= RECURRENCE_TOL,
        format!("max |D_z - 1 - Σ p_k D_(z+k)| = {worst:.3e}"),
    )
}

fn renewal() -> Outcome {
    let clock = ladder(10, 0.5);
    let exact = clock.expected_jumps_per_tick_exact().to_f64();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let events = clock.sample_ticks(&mut rng, 100_000, u64::MAX);
    let mut gaps = Vec::with_capacity(events.len());
    let mut last = 0;
    for e in &events {
        gaps.push((e.application_index - last) as f64);
        last = e.application_index;
    }
    let (mean, se) = mean_and_stderr(&gaps);
    let pass = (exact - 20.0).abs() <= EXACT_TOL && (mean - 20.0).abs() <= RENEWAL_SIGMAS * se;
    outcome(
        pass,
        format!(
            "exact E(Y) = {exact}, simulated {mean:.4} ± {se:.4} over {} ticks",
            gaps.len()
        ),
    )
}

fn halting_sandwich() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut games = 0;
    let mut breaches = Vec::new();
    for d in [4usize, 10, 20] {
        for config_index in 0..34u64 {
            let (a, b) = if config_index % 2 == 0 {
                let delta = rng.gen_range(0.1..0.9);
                (ladder(d, delta), ladder(d, delta))
            } else {
                let m = rng.gen_range(1..=3usize.min(d));
                let (m_b, eps_a, eps_b) = (
                    rng.gen_range(1..=m),
                    rng.gen_range(0.1..0.6),
                    rng.gen_range(0.1..0.6),
                );
                (
                    random_clock(&mut rng, d, m, eps_a),
                    random_clock(&mut rng, d, m_b, eps_b),
                )
            };
            let z0 = rng.gen_range(-(d as i64) + 1..d as i64);
            let config = GameConfig::new(a, b, z0)
                .unwrap()
                .with_seed(config_index)
                .with_cap(1_000_000);
            for run in 0..100 {
                let s = play_summary(&config, run).unwrap();
                games += 1;
                if let Err(e) = check_summary(&s, d as i64) {
                    breaches.push(format!("d={d}: {e}"));
                }
            }
        }
    }
    outcome(
        games >= 10_000 && breaches.is_empty(),
        match breaches.first() {
            None => format!("{games} games, 0 boundary breaches"),
            Some(b) => format!(
                "{games} games, {} boundary breaches, first {b:?}",
                breaches.len()
            ),
        },
    )
}

fn continuity_envelope() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut misses = Vec::new();
    let mut lines = Vec::new();
    for i in 0..10u64 {
        let m = rng.gen_range(1..=3);
        let d = rng.gen_range(6..=30);
        let eps = rng.gen_range(0.05..=0.2);
        let clock = random_clock(&mut rng, d, m, eps);
        let bounds = continuity_bounds_for_clock(&clock).unwrap();
        let lo = bounds.n_lower.unwrap().to_f64();
        let hi = bounds.n_upper.unwrap().to_f64();
        let config = GameConfig::new(clock.clone(), clock, (d / 2) as i64)
            .unwrap()
            .with_seed(i)
            .with_runs(10_000);
        let est = estimate_score(&config).unwrap();
        let slack = ENVELOPE_SIGMAS * est.std_error;
        if est.mean < lo - slack || est.mean > hi + slack {
            misses.push(i);
        }
        lines.push(format!("{:.2}<{:.2}<{:.1}", lo, est.mean, hi));
    }
    outcome(
        misses.is_empty(),
        format!("misses {misses:?}; {}", lines.join(" ")),
    )
}

fn random_density<R: Rng>(rng: &mut R, n: usize) -> DenseMatrix {
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a.set(i, j, rng.gen_range(-1.0..1.0));
        }
    }
    let g = a.mul(&a.transpose());
    let tr = g.trace();
    let mut rho = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            rho.set(i, j, 0.5 * (g.get(i, j) + g.get(j, i)) / tr);
        }
    }
    rho
}

fn quantum_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut residual: f64 = 0.0;
    let mut norm_err: f64 = 0.0;
    let (mut min_x, mut min_z) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..50 {
        let d = rng.gen_range(1..=20);
        let m = rng.gen_range(1..=d.min(4));
        let eps = rng.gen_range(0.01..0.99);
        let clock = random_clock(&mut rng, d, m, eps);
        let kraus = build_kraus(&clock).unwrap();
        let rho = random_density(&mut rng, d + 1);
        let pair = build_certificate(&clock).unwrap();
        let report = verify_continuity_certificate(&pair, &clock, 1000, &mut rng);
        residual = residual
            .max(kraus.completeness_residual)
            .max(apply_channel_two_ways(&clock, &rho).unwrap().max_difference)
            .max(report.identity_residual)
            .max(report.partial_trace_off_diagonal)
            .max(report.partial_trace_diagonal_error);
        norm_err = norm_err.max((report.trace_norm - (1.0 - clock.jumps().prob(0))).abs());
        min_x = min_x.min(report.min_form_x);
        min_z = min_z.min(report.min_form_z);
    }
    let identities = residual <= RESIDUAL_TOL && norm_err <= RESIDUAL_TOL;
    let positivity = min_x >= POSITIVITY_TOL && min_z >= POSITIVITY_TOL;
    outcome(
        identities && positivity,
        format!(
            "identities max residual {residual:.2e}, norm error {norm_err:.2e}; \
             min <v|X|v> {min_x:.4}, min <v|Z|v> {min_z:.4e}"
        ),
    )
}

fn degenerate_clocks() -> Outcome {
    let frozen = GameConfig::new(ladder(10, 0.0), ladder(10, 0.0), 5)
        .unwrap()
        .with_cap(100_000)
        .with_runs(4);
    let f = estimate_score(&frozen).unwrap();
    let frozen_ok = f.mean == 0.0 && f.capped_runs == 4;

    let perfect = GameConfig::new(ladder(10, 1.0), ladder(10, 1.0), 5)
        .unwrap()
        .with_cap(1_000_000)
        .with_runs(2);
    let p = estimate_score(&perfect).unwrap();
    let perfect_ok = p.capped_runs == 2;

    let race = GameConfig::new(ladder(10, 1.0), ladder(10, 0.5), 0)
        .unwrap()
        .with_seed(8)
        .with_runs(10_000);
    let r = estimate_score(&race).unwrap();
    let slack = ENVELOPE_SIGMAS * r.renewal_std_error;
    let race_ok = r.renewal_mean >= 2.2 - slack && r.renewal_mean <= 4.2 + slack;
    outcome(
        frozen_ok && perfect_ok && race_ok,
        format!(
            "frozen mean {} ({} capped); perfect pair capped {}/2 with score {}; \
             perfect vs ladder N = {:.3} ± {:.3} in [2.2, 4.2] (alternating score {:.3})",
            f.mean,
            f.capped_runs,
            p.capped_runs,
            p.mean,
            r.renewal_mean,
            r.renewal_std_error,
            r.mean
        ),
    )
}

fn discrepancy_report() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let bounds = dir.path().join("bounds.csv");
    let sweep_csv = dir.path().join("sweep.csv");
    let seed = SWEEP_SEED.to_string();
    let c1 = cli(&[
        "bounds",
        "--d",
        "100",
        "--delta",
        "0.05",
        "--out",
        bounds.to_str().unwrap(),
    ]);
    let c2 = cli(&[
        "reproduce-fig1",
        "--d",
        "100",
        "--seed",
        &seed,
        "--out",
        sweep_csv.to_str().unwrap(),
    ]);
    let rows = csv_rows(&bounds);
    let upper = |variant: &str| -> f64 {
        rows.iter().find(|r| r[2] == variant).unwrap()[6]
            .parse()
            .unwrap()
    };
    let (headline, exact) = (upper("ladder_headline"), upper("ladder_exact"));
    let row = &csv_rows(&sweep_csv)[0];
    let n: f64 = row[2].parse().unwrap();
    let lo: f64 = row[8].parse().unwrap();
    let hi: f64 = row[9].parse().unwrap();
    let pass = c1 == 0
        && c2 == 0
        && (headline - 67.37).abs() < 0.01
        && (exact - 120.01).abs() < 0.01
        && n >= lo
        && n <= hi;
    outcome(
        pass,
        format!(
            "headline N_upper {headline}, exact N_upper {exact}; Monte Carlo {n} in [{lo}, {hi}]"
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let commands: [&[&str]; 5] = [
        &[
            "simulate",
            "--d",
            "5:15:5",
            "--runs",
            "64",
            "--delta",
            "0.2",
            "--clock",
            "custom:0.7,0.2,0.1",
        ],
        &["reproduce-fig1", "--d", "20:40:20", "--runs", "50"],
        &["bounds", "--d", "10:100:30"],
        &["absorb", "--d", "4:12:4"],
        &["verify", "--d", "3:6:3"],
    ];
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap();
    let mut differing = Vec::new();
    for args in commands {
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let with_out = |p: &Path| {
            let mut v = args.to_vec();
            v.extend(["--seed", "99", "--out", p.to_str().unwrap()]);
            v.iter().map(|s| s.to_string()).collect::<Vec<_>>()
        };
        let (va, vb) = (with_out(&a), with_out(&b));
        let ra: Vec<&str> = va.iter().map(String::as_str).collect();
        let rb: Vec<&str> = vb.iter().map(String::as_str).collect();
        cli(&ra);
        pool.install(|| cli(&rb));
        if std::fs::read(&a).unwrap() != std::fs::read(&b).unwrap() {
            differing.push(args[0]);
        }
    }
    outcome(
        differing.is_empty(),
        format!("5 subcommands, differing outputs: {differing:?}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("ladder sweep envelope", ladder_sweep_envelope),
        ("oracle equivalence", oracle_equivalence),
        ("recurrence residual", recurrence_residual),
        ("renewal E(Y)", renewal),
        ("halting sandwich", halting_sandwich),
        ("continuity envelope", continuity_envelope),
        ("quantum verification", quantum_checks),
        ("degenerate clocks", degenerate_clocks),
        ("discrepancy report", discrepancy_report),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {verdict} {name} ({:.1}s): {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
