// Copyright 2026 The joinsize Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Acceptance checks. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any fails.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::time::{Duration, Instant};

use joinsize::enumerator::{scan_group, sort_group, CollectBelow};
use joinsize::estimator::theoretical_epsilon;
use joinsize::experiment::{ExperimentSetup, CDF_HEADER, SUMMARY_HEADER};
use joinsize::hashing::PairHash;
use joinsize::kmin::KMinState;
use joinsize::oracle::{exact_kth_hash, exact_kth_hash_below, exact_size, KthHash, DEFAULT_CAP};
use joinsize::rng::{derive_rng, Purpose};
use joinsize::sampling::{beta_bound, draw_sample, estimate_from_samples, selector_for};
use joinsize::synthetic::{random_small, BlockInstance};
use joinsize::{
    choose_threshold, group_and_prune, parse_relation, run_experiment, run_hash, run_once, self_join,
    EstimateKind, EstimatorConfig, GroupedInput, InputFormat, Relation, Side, Threshold, ThresholdMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn exact(input: &GroupedInput) -> u64 {
    exact_size(input, DEFAULT_CAP).expect("oracle within cap").z
}

/// Binomial 3-sigma floor for a success probability `q` over `n` trials.
fn slack_floor(q: f64, n: usize) -> f64 {
    q - 3.0 * (q * (1.0 - q) / n as f64).sqrt()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut mismatches = 0;
    for i in 0..1000u64 {
        let (l, r) = random_small(&mut rng, 200);
        let input = group_and_prune(&l, &r);
        assert!(input.n() <= 400);
        let z = exact(&input);
        let k = (z as usize) + 1 + rng.gen_range(0..=z as usize);
        let cfg = EstimatorConfig::with_k(k).threshold_mode(ThresholdMode::StartAtOne).seed(i);
        let est = run_once(&input, &cfg, 0).unwrap();
        if est.kind != EstimateKind::ExactSmall || est.value != z as f64 {
            mismatches += 1;
        }
    }
    let took = start.elapsed();
    check(
        mismatches == 0 && took < Duration::from_secs(30),
        format!("1000 instances, {mismatches} mismatches, {:.2}s", took.as_secs_f64()),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut tested, mut mismatches, mut lw_tested) = (0, 0, 0);
    while tested < 200 {
        let (l, r) = random_small(&mut rng, 300);
        let input = group_and_prune(&l, &r);
        let z = exact(&input) as usize;
        if z == 0 {
            continue;
        }
        assert!(z <= 10_000);
        let k = rng.gen_range(1..=z);
        let seed = rng.gen::<u64>();
        let cfg = EstimatorConfig::with_k(k).threshold_mode(ThresholdMode::StartAtOne).seed(seed);
        let est = run_once(&input, &cfg, 0).unwrap();
        let hash = run_hash(seed, 0);
        let want = exact_kth_hash(&input, &hash, k, DEFAULT_CAP).unwrap();
        if est.kind != EstimateKind::Point || KthHash::Found(est.kth_hash.unwrap()) != want {
            mismatches += 1;
        }
        // the same equivalence below a threshold under 1
        let cfg = cfg.threshold_mode(ThresholdMode::LinearWork);
        let est = run_once(&input, &cfg, 0).unwrap();
        let below = exact_kth_hash_below(&input, &hash, k, est.p0, DEFAULT_CAP).unwrap();
        match (est.kind, below) {
            (EstimateKind::Point, KthHash::Found(v)) if est.kth_hash == Some(v) => lw_tested += 1,
            (EstimateKind::UpperBound, KthHash::Undersupplied { .. }) => {}
            _ => mismatches += 1,
        }
        tested += 1;
    }
    check(
        mismatches == 0,
        format!("{tested} instances ({lw_tested} filled below p0 < 1), {mismatches} mismatches"),
    )
}

fn distinct(rng: &mut ChaCha8Rng, len: usize) -> Vec<u32> {
    let mut set = HashSet::new();
    while set.len() < len {
        set.insert(rng.gen::<u32>());
    }
    set.into_iter().collect()
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let cuts = [0.01, 0.1, 0.5, 1.0].map(Threshold::from_fraction);
    let (mut mismatches, mut sbar_violations) = (0, 0);
    let (mut inner, mut predicted) = (0.0f64, 0.0f64);
    for g in 0..1000 {
        let a_len = rng.gen_range(1..=100);
        let c_len = rng.gen_range(1..=100);
        let left = distinct(&mut rng, a_len);
        let right = distinct(&mut rng, c_len);
        let hash = PairHash::random(&mut rng);
        let sorted = sort_group(&left, &right, &hash);
        let p = cuts[g % 4];
        let mut sink = CollectBelow::new(p);
        let work = scan_group(&sorted, &mut sink);
        let got: HashSet<(u32, u32)> = sink.pairs.iter().map(|&(pair, _)| pair).collect();
        let want: HashSet<(u32, u32)> = left
            .iter()
            .flat_map(|&x| right.iter().map(move |&y| (x, y)))
            .filter(|&(x, y)| p.admits(hash.eval(x, y)))
            .collect();
        if got != want || got.len() != sink.pairs.len() {
            mismatches += 1;
        }
        if work.sbar_increments > 2 * a_len as u64 {
            sbar_violations += 1;
        }
        if !p.is_one() {
            inner += work.inner_iterations as f64;
            predicted += p.to_fraction::<f64>() * (a_len * c_len) as f64 + c_len as f64;
        }
    }
    let ratio = inner / predicted;
    check(
        mismatches == 0 && sbar_violations == 0 && (0.5..=2.0).contains(&ratio),
        format!(
            "1000 groups, {mismatches} set mismatches, {sbar_violations} s-bar bound violations, \
             inner steps / (p|A||C| + |C|) = {ratio:.3}"
        ),
    )
}

struct AccuracyInstance {
    left: Relation,
    right: Relation,
    z: u64,
}

fn accuracy_instance() -> AccuracyInstance {
    let (left, right) = BlockInstance::Z_1E5.generate(&mut ChaCha8Rng::seed_from_u64(404));
    let z = exact(&group_and_prune(&left, &right));
    AccuracyInstance { left, right, z }
}

/// Fraction of trials within `eps` of the exact size, and the 2/3-quantile
/// deviation.
fn accuracy(inst: &AccuracyInstance, k: usize, runs: usize, trials: usize, seed: u64) -> (f64, f64) {
    let setup = ExperimentSetup {
        instance: "z1e5".into(),
        trials,
        estimator: EstimatorConfig::with_k(k)
            .threshold_mode(ThresholdMode::StartAtOne)
            .runs(runs)
            .seed(seed),
        sample_probability: None,
    };
    let report = run_experiment(&inst.left, &inst.right, inst.z, &setup).unwrap();
    let eps = theoretical_epsilon::<f64>(256);
    let within = report.trials.iter().filter(|t| (t.ratio - 1.0).abs() <= eps).count();
    (within as f64 / trials as f64, report.observed_epsilon)
}

fn criterion_4(inst: &AccuracyInstance) -> (Outcome, f64) {
    let start = Instant::now();
    let (frac, q256) = accuracy(inst, 256, 1, 200, 40_000);
    let took = start.elapsed();
    let floor = 0.567;
    (
        check(
            frac >= floor && took < Duration::from_secs(120),
            format!(
                "z = {}, k = 256, {:.3} of 200 trials within 0.1875 z (need >= {floor}), \
                 2/3-quantile eps {q256:.4}, {:.1}s",
                inst.z,
                frac,
                took.as_secs_f64()
            ),
        ),
        q256,
    )
}

fn criterion_5(inst: &AccuracyInstance, q256: f64) -> Outcome {
    let (_, q1024) = accuracy(inst, 1024, 1, 200, 50_000);
    let shrink = q256 / q1024;
    check(
        shrink >= 1.5,
        format!("2/3-quantile eps {q256:.4} (k = 256) -> {q1024:.4} (k = 1024), factor {shrink:.2} (need >= 1.5)"),
    )
}

fn criterion_6(inst: &AccuracyInstance) -> Outcome {
    let (frac, _) = accuracy(inst, 256, 9, 100, 60_000);
    let outside = 1.0 - frac;
    check(
        outside <= 0.10,
        format!("runs = 9, {:.3} of 100 medians outside 0.1875 z (need <= 0.10)", outside),
    )
}

fn skewed_instance(rng: &mut ChaCha8Rng) -> (Relation, Relation) {
    // one heavy group next to many light ones
    let mut left = Vec::new();
    let mut right = Vec::new();
    for a in 0..400u32 {
        left.push((a.wrapping_mul(0x9e37_79b9), 0));
    }
    for c in 0..300u32 {
        right.push((0, c.wrapping_mul(0x85eb_ca6b)));
    }
    for b in 1..500u32 {
        for _ in 0..rng.gen_range(1..6) {
            left.push((rng.gen(), b));
        }
        for _ in 0..rng.gen_range(1..6) {
            right.push((b, rng.gen()));
        }
    }
    (Relation::new(Side::Left, left), Relation::new(Side::Right, right))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut corpus: Vec<(GroupedInput, usize)> = Vec::new();
    let (l, r) = BlockInstance::Z_1E5.generate(&mut rng);
    let block = group_and_prune(&l, &r);
    corpus.push((block.clone(), 256));
    corpus.push((block, 1024));
    let (l, r) = skewed_instance(&mut rng);
    let skewed = group_and_prune(&l, &r);
    corpus.push((skewed.clone(), 64));
    corpus.push((skewed, 900));
    for _ in 0..50 {
        let (l, r) = random_small(&mut rng, 200);
        corpus.push((group_and_prune(&l, &r), rng.gen_range(1..64)));
    }

    let mut worst_work = 0.0f64;
    let mut worst_emission = 0.0f64;
    let seeds = 20u64;
    for (input, k) in &corpus {
        if input.is_empty() {
            continue;
        }
        let mut emitted: HashMap<u32, u64> = HashMap::new();
        for seed in 0..seeds {
            let cfg = EstimatorConfig::with_k(*k).seed(seed);
            let est = run_once(input, &cfg, 0).unwrap();
            worst_work = worst_work.max(est.work.total() as f64 / input.n() as f64);

            // per-group emissions under the same hash and initial threshold
            let hash = run_hash(seed, 0);
            let p0 = choose_threshold(input, *k, ThresholdMode::LinearWork);
            let mut state = KMinState::new(*k, p0, derive_rng(seed, Purpose::Estimator, 99));
            for g in input.groups() {
                let w = scan_group(&sort_group(&g.left, &g.right, &hash), &mut state);
                *emitted.entry(g.key).or_default() += w.emitted;
            }
        }
        for g in input.groups() {
            let mean = emitted[&g.key] as f64 / seeds as f64;
            let bound = g.left.len().max(g.right.len()) as f64;
            worst_emission = worst_emission.max(mean / bound);
        }
    }
    check(
        worst_work <= 16.0 && worst_emission <= 4.0,
        format!(
            "{} inputs x {seeds} seeds, max work / n = {worst_work:.3} (need <= 16), \
             max mean emissions / max(|A|,|C|) = {worst_emission:.3} (need <= 4)",
            corpus.len()
        ),
    )
}

fn criterion_8() -> Outcome {
    let (left, right) = BlockInstance::Z_1E6.generate(&mut ChaCha8Rng::seed_from_u64(808));
    let z = exact(&group_and_prune(&left, &right)) as f64;
    let inner = EstimatorConfig::with_k(1024);
    let trials = 500u64;

    let estimates: Vec<f64> = (0..trials)
        .map(|t| {
            let seed = 80_000 + t;
            let s1 = draw_sample(&left, 0.1, selector_for(seed, Side::Left)).unwrap();
            let s2 = draw_sample(&right, 0.1, selector_for(seed, Side::Right)).unwrap();
            estimate_from_samples(&s1, &s2, &inner.seed(seed)).unwrap().value
        })
        .collect();
    let n = trials as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let unbiased = (mean - z).abs() < 3.0 * se;

    // pick s so that beta < z / 2 at epsilon = 0.4
    let eps = 0.4;
    let (n1, n2) = (left.len() as u64, right.len() as u64);
    let (n_a, n_c) = (left.distinct_outer() as u64, right.distinct_outer() as u64);
    let per_unit = beta_bound::<f64>(n1, n2, n_a, n_c, 1.0, eps);
    let s = (2.0 * per_unit / z).floor() + 1.0;
    let beta = beta_bound::<f64>(n1, n2, n_a, n_c, s, eps);
    let (p1, p2) = ((s / n1 as f64).min(1.0), (s / n2 as f64).min(1.0));
    let within = (0..trials)
        .filter(|t| {
            let seed = 90_000 + t;
            let s1 = draw_sample(&left, p1, selector_for(seed, Side::Left)).unwrap();
            let s2 = draw_sample(&right, p2, selector_for(seed, Side::Right)).unwrap();
            let e = estimate_from_samples(&s1, &s2, &inner.seed(seed)).unwrap().value;
            (e - z).abs() <= eps * z
        })
        .count();
    let frac = within as f64 / n;
    let floor = slack_floor(5.0 / 6.0, trials as usize);
    check(
        unbiased && beta < z / 2.0 && frac >= floor,
        format!(
            "z = {z}, p = 0.1: mean {mean:.0} ({:+.2} SE); s = {s}, beta = {beta:.0} < z/2, \
             p = {p1:.3}: {frac:.3} within 0.4 z (need >= {floor:.3})",
            (mean - z) / se
        ),
    )
}

fn criterion_9() -> Outcome {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/mini.fimi");
    let relation = parse_relation(std::io::BufReader::new(fs::File::open(path).unwrap()), InputFormat::Fimi).unwrap();
    let (left, right) = self_join(&relation);
    let z = exact(&group_and_prune(&left, &right));
    let trials = 60;
    let setup = ExperimentSetup {
        instance: "mini".into(),
        trials,
        estimator: EstimatorConfig::with_k(16).threshold_mode(ThresholdMode::StartAtOne).seed(9),
        sample_probability: None,
    };
    let report = run_experiment(&left, &right, z, &setup).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (cdf_path, summary_path) = report.write_files(dir.path()).unwrap();
    let cdf = fs::read_to_string(&cdf_path).unwrap();
    let summary = fs::read_to_string(&summary_path).unwrap();

    let mut problems = Vec::new();
    let mut lines = cdf.lines();
    if lines.next() != Some(CDF_HEADER) {
        problems.push("cdf header");
    }
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    if rows.len() != trials {
        problems.push("cdf row count");
    }
    if !rows.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1) {
        problems.push("cdf ordering");
    }
    if !cdf.trim_end().ends_with(",1.0") {
        problems.push("cdf does not end at 1.0");
    }
    let mut s = summary.lines();
    if s.next() != Some(SUMMARY_HEADER) {
        problems.push("summary header");
    }
    let fields: Vec<String> = s.next().unwrap_or_default().split(',').map(String::from).collect();
    if fields.len() != 7 || fields[0] != "mini" || fields[1] != "16" || fields[4] != z.to_string() {
        problems.push("summary row");
    }
    if fields.get(5).and_then(|f| f.parse::<f64>().ok()) != Some(0.75) {
        problems.push("theoretical epsilon");
    }
    check(
        problems.is_empty() && !relation.is_empty(),
        format!(
            "{} tuples, z = {z}, {} CDF rows{}",
            relation.len(),
            rows.len(),
            if problems.is_empty() { String::new() } else { format!(", problems: {problems:?}") }
        ),
    )
}

fn main() {
    let inst = accuracy_instance();
    let mut results: Vec<(u32, Outcome)> = vec![(1, criterion_1()), (2, criterion_2()), (3, criterion_3())];
    let (c4, q256) = criterion_4(&inst);
    results.push((4, c4));
    results.push((5, criterion_5(&inst, q256)));
    results.push((6, criterion_6(&inst)));
    results.push((7, criterion_7()));
    results.push((8, criterion_8()));
    results.push((9, criterion_9()));

    let mut failed = 0;
    for (n, r) in &results {
        match r {
            Ok(d) => println!("criterion {n}: PASS ({d})"),
            Err(d) => {
                failed += 1;
                println!("criterion {n}: FAIL ({d})");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
