//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). Failing criteria are reported
//! but do not fail the run unless `MPGUARD_ACCEPTANCE_STRICT=1` is set.
//! Set `MPGUARD_ACCEPTANCE_TRIALS` to shrink the benchmark for quick checks;
//! thresholds only apply at the default of 50.

use std::process::ExitCode;
use std::time::Instant;

use mpguard::io::{read_mp, write_mp};
use mpguard::series::{rolling_stats, znorm_distance};
use mpguard::synth::{experiment::ExperimentReport, run_experiment, ExperimentConfig, Method, ScenarioKind};
use mpguard::{
    compute_masked_mp, compute_mp, mp_oracle, pattern_hide, run_attack, AttackConfig, DefenseConfig, MaskSet,
    ScoreVariant, SubsequenceRef, TimeSeries,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MASTER_SEED: u64 = 2024;
const VARIANTS: [ScoreVariant; 2] = [ScoreVariant::Location, ScoreVariant::Entropy];
const SCENARIOS: [ScenarioKind; 2] = [ScenarioKind::Independent, ScenarioKind::Correlation];

struct Outcome {
    pass: bool,
    detail: String,
}

fn walk(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = 0.0;
    (0..n)
        .map(|_| {
            x += rng.gen_range(-1.0..1.0);
            x
        })
        .collect()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED);
    let (mut compared, mut infeasible, mut worst, mut mismatches) = (0, 0, 0.0f64, 0);
    for _ in 0..200 {
        let n = rng.gen_range(64..=256);
        let l = rng.gen_range(4..=16);
        let s = TimeSeries::new(walk(n, &mut rng)).unwrap();
        let count = n - l + 1;
        let mut mask = MaskSet::new();
        for _ in 0..rng.gen_range(0..=3) {
            let lo = rng.gen_range(0..count);
            mask.insert(lo, (lo + rng.gen_range(0..2 * l)).min(count - 1));
        }
        match (compute_masked_mp(&s, l, &mask), mp_oracle(&s, l, &mask)) {
            (Ok(fast), Ok(slow)) => {
                compared += 1;
                if fast.mpi() != slow.mpi() {
                    mismatches += 1;
                }
                for (a, b) in fast.mpd().iter().zip(slow.mpd()) {
                    worst = worst.max((a - b).abs());
                }
            }
            (Err(a), Err(b)) if a.to_string() == b.to_string() => infeasible += 1,
            _ => mismatches += 1,
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: mismatches == 0 && worst <= 1e-6 && secs < 30.0,
        detail: format!(
            "{compared} compared, {infeasible} jointly infeasible, {mismatches} index mismatches, max |Δd| = {worst:.2e}, {secs:.1} s"
        ),
    }
}

fn znorm_invariances() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED ^ 2);
    let mut failures = 0;
    let mut pairs = 0;
    while pairs < 10_000 {
        let l = rng.gen_range(3..=32);
        let t = walk(4 * l, &mut rng);
        let (scale, offset) = (rng.gen_range(0.01..100.0), rng.gen_range(-1e3..1e3));
        let t2: Vec<f64> = t.iter().map(|v| scale * v + offset).collect();
        let (s, s2) = (TimeSeries::new(t).unwrap(), TimeSeries::new(t2).unwrap());
        let (st, st2) = (rolling_stats(&s, l).unwrap(), rolling_stats(&s2, l).unwrap());
        for _ in 0..100 {
            let a = SubsequenceRef::new(rng.gen_range(0..=3 * l), l);
            let b = SubsequenceRef::new(rng.gen_range(0..=3 * l), l);
            let d = znorm_distance(a, b, &s, &st).unwrap();
            let ok = rel_close(d, znorm_distance(b, a, &s, &st).unwrap(), 1e-9)
                && rel_close(d, znorm_distance(a, b, &s2, &st2).unwrap(), 1e-9)
                && (0.0..=2.0 * (l as f64).sqrt() + 1e-9).contains(&d);
            failures += usize::from(!ok);
            pairs += 1;
        }
    }
    Outcome {
        pass: failures == 0,
        detail: format!("{pairs} pairs, {failures} violations"),
    }
}

fn rate(report: &ExperimentReport, kind: ScenarioKind, l_attack: usize, method: Method, variant: ScoreVariant) -> (f64, f64) {
    let row = report.aggregate(kind, l_attack, method, variant).expect("aggregate row");
    (row.attack_rate, row.utility_rate)
}

fn table_utility(report: &ExperimentReport) -> Outcome {
    let u: Vec<f64> = SCENARIOS
        .iter()
        .map(|&k| rate(report, k, 300, Method::SharePmp, ScoreVariant::Location).1)
        .collect();
    Outcome {
        pass: u.iter().all(|&x| x >= 0.75),
        detail: format!("PMP utility at L_attack=300: independent {:.2}, correlation {:.2} (need ≥ 0.75)", u[0], u[1]),
    }
}

fn attack_separation(report: &ExperimentReport) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in SCENARIOS {
        for l_attack in [200, 300] {
            for variant in VARIANTS {
                let mp = rate(report, kind, l_attack, Method::ShareMp, variant).0;
                let pmp = rate(report, kind, l_attack, Method::SharePmp, variant).0;
                pass &= mp >= 0.6 && pmp <= 0.25 && mp - pmp >= 0.3;
                parts.push(format!("{}/{l_attack}/{} {mp:.2}→{pmp:.2}", kind.name(), variant.name()));
            }
        }
    }
    Outcome {
        pass,
        detail: format!("MP→PMP attack rates: {}", parts.join(", ")),
    }
}

fn noise_ordering(report: &ExperimentReport) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in SCENARIOS {
        let u = |m| rate(report, kind, 300, m, ScoreVariant::Location).1;
        let noise = [u(Method::Noise(0.1)), u(Method::Noise(0.3)), u(Method::Noise(0.5))];
        let pmp = u(Method::SharePmp);
        pass &= noise[0] >= noise[1] && noise[1] >= noise[2];
        pass &= noise[0] >= 0.6 && noise[2] <= 0.25 && pmp > noise[1];
        parts.push(format!(
            "{} u(0.1)={:.2} u(0.3)={:.2} u(0.5)={:.2} pmp={pmp:.2}",
            kind.name(),
            noise[0],
            noise[1],
            noise[2]
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn defense_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED ^ 6);
    let (mut checked, mut infeasible, mut violations) = (0, 0, 0);
    while checked < 100 {
        let l = rng.gen_range(4..=12);
        let t = walk(rng.gen_range(300..=600), &mut rng);
        let s = TimeSeries::new(t).unwrap();
        let mp = compute_mp(&s, l).unwrap();
        let cfg = DefenseConfig::new(l, l + rng.gen_range(1..=3 * l), rng.gen());
        let Ok(out) = pattern_hide(&s, &mp, &cfg) else {
            infeasible += 1;
            continue;
        };
        checked += 1;
        let stats = rolling_stats(&s, l).unwrap();
        let (mpd, mpi) = (out.pmp.mpd(), out.pmp.mpi());
        let mut ok = pattern_hide(&s, &mp, &cfg).unwrap().pmp == out.pmp;
        for i in 0..mpi.len() {
            let j = mpi[i];
            let cycle = mpi[j] == i;
            let truth = znorm_distance(SubsequenceRef::new(i, l), SubsequenceRef::new(j, l), &s, &stats).unwrap();
            ok &= i.abs_diff(j) > l / 2 && mpd[i] <= truth + 1e-6;
            ok &= !cycle || mpd[i] == mpd[j];
            if !out.segments.iter().any(|g| g.contains(i)) {
                ok &= j == mp.mpi()[i];
                ok &= mpd[i] == mp.mpd()[i] || (cycle && mpd[i] <= mp.mpd()[i]);
            }
        }
        violations += usize::from(!ok);
    }
    Outcome {
        pass: violations == 0,
        detail: format!("{checked} defended profiles ({infeasible} infeasible draws skipped), {violations} with violations"),
    }
}

fn attack_purity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED ^ 7);
    let (mut runs, mut diffs) = (0, 0);
    for _ in 0..20 {
        let l = rng.gen_range(8..=32);
        let s = TimeSeries::new(walk(rng.gen_range(800..=1500), &mut rng)).unwrap();
        let mp = compute_mp(&s, l).unwrap();
        let mut buf = Vec::new();
        write_mp(&mut buf, &mp, None).unwrap();
        let reloaded = read_mp(buf.as_slice(), None).unwrap().mp;
        let reloaded_again = read_mp(buf.as_slice(), None).unwrap().mp;
        for variant in [ScoreVariant::Location, ScoreVariant::Entropy, ScoreVariant::DistSum] {
            let cfg = AttackConfig::new(4 * l, variant);
            let a = run_attack(&mp, &cfg).unwrap();
            let b = run_attack(&reloaded, &cfg).unwrap();
            let c = run_attack(&reloaded_again, &cfg).unwrap();
            runs += 1;
            diffs += usize::from((a.idx1, a.idx2) != (b.idx1, b.idx2) || b != c);
        }
    }
    Outcome {
        pass: diffs == 0,
        detail: format!("{runs} attacks on in-memory vs reloaded profiles, {diffs} differing"),
    }
}

fn benchmark(trials: usize) -> ExperimentReport {
    let base = ExperimentConfig {
        scenarios: SCENARIOS.to_vec(),
        l_util: 100,
        l_attack_list: vec![300],
        methods: vec![
            Method::ShareMp,
            Method::SharePmp,
            Method::Noise(0.1),
            Method::Noise(0.3),
            Method::Noise(0.5),
        ],
        trials,
        master_seed: MASTER_SEED,
        n: 10_000,
        bin_width: None,
        tolerance: None,
        perm_length: None,
        defender_l_attack: None,
    };
    // The noise baseline is only scored at L_attack = 300.
    let short = ExperimentConfig {
        l_attack_list: vec![200],
        methods: vec![Method::ShareMp, Method::SharePmp],
        ..base.clone()
    };
    let mut report = run_experiment(&base).expect("benchmark");
    let extra = run_experiment(&short).expect("benchmark");
    report.trials.extend(extra.trials);
    report.aggregates.extend(extra.aggregates);
    report
}

fn main() -> ExitCode {
    let strict = std::env::var("MPGUARD_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let trials = std::env::var("MPGUARD_ACCEPTANCE_TRIALS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(50);

    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 oracle equivalence", oracle_equivalence()),
        ("2 z-norm invariances", znorm_invariances()),
    ];
    let start = Instant::now();
    let report = benchmark(trials);
    let bench_secs = start.elapsed().as_secs_f64();
    results.push(("3 PMP utility", table_utility(&report)));
    results.push(("4 attack separation", attack_separation(&report)));
    results.push(("5 noise baseline ordering", noise_ordering(&report)));
    results.push(("6 defense invariants", defense_invariants()));
    results.push(("7 attack purity", attack_purity()));

    let invalid: usize = report.trials.iter().filter(|t| !t.valid).count();
    println!("benchmark: {trials} trials per cell, {invalid} invalid, {bench_secs:.0} s");
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if strict && failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
