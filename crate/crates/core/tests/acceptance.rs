//! Acceptance criteria, one line each. Runs without the libtest harness so
//! every line prints; exits non-zero if any criterion fails.

mod common;

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use reign::corpus::{annotate_all, AnnotatedQuestion};
use reign::eval::{hit_at_5, mrr, precision_at_1, reciprocal_rank, reward_extrinsic};
use reign::pipeline::{run_e2e_with, PipelineConfig, RunOptions, SelectionMode};
use reign::qa::RankedAnswerList;
use reign::rcs::{boltzmann_probabilities, sample_action, train_dqn, BanditEnvironment, DqnConfig, QNetwork};
use reign::reformulator::apply_category;
use reign::synth::SynthWorld;
use reign::taxonomy::{all_categories, valid_actions, ActionMask, Category, NUM_CATEGORIES};
use reign::SeededRng;

// Tolerances and budgets.
const BANDIT_MIN_ACCURACY: f64 = 0.95;
const BANDIT_BUDGET: Duration = Duration::from_secs(30);
const BOLTZMANN_TOLERANCE: f64 = 0.02;
const BOLTZMANN_SAMPLES: usize = 100_000;
const BOLTZMANN_BUDGET: Duration = Duration::from_secs(10);
const FD_EPSILON: f64 = 1e-5;
const FD_MAX_RELATIVE_ERROR: f64 = 1e-4;
/// Denominator floor of the relative error, for near-zero gradients.
const FD_FLOOR: f64 = 1e-6;
const MIN_PER_CATEGORY: usize = 10;
const E2E_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const E2E_BUDGET: Duration = Duration::from_secs(300);
const ALL_CATS_RATIO: f64 = 3.0;
const ALL_CATS_SLACK: f64 = 0.5;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn bundled_questions() -> (SynthWorld, Vec<AnnotatedQuestion>) {
    let world = SynthWorld::bundled().unwrap();
    let mut qs = Vec::new();
    for split in [&world.train, &world.dev, &world.test] {
        qs.extend(annotate_all(&world.kg, split).unwrap());
    }
    (world, qs)
}

fn bandit_convergence() -> Verdict {
    let start = Instant::now();
    let mut env = BanditEnvironment::random(50, 256, 4, 0).unwrap();
    let cfg = DqnConfig {
        alpha: 1e-3,
        gamma: 0.0,
        tau: 0.3,
        batch_size: 10,
        epochs: 40,
        ..Default::default()
    };
    let mut rng = SeededRng::seed_from_u64(cfg.seed);
    let mut net = QNetwork::random(cfg.d, cfg.h, &mut rng).unwrap();
    let stats = train_dqn(&mut env, &mut net, &cfg, &mut rng).unwrap();
    let acc = env.greedy_accuracy(&net).unwrap();
    let took = start.elapsed();
    verdict(
        acc >= BANDIT_MIN_ACCURACY && took < BANDIT_BUDGET,
        format!(
            "{} steps, {} updates: greedy picks the best valid category in {:.0}% of states (need >= {:.0}%), {:.1}s",
            stats.steps,
            stats.updates,
            acc * 100.0,
            BANDIT_MIN_ACCURACY * 100.0,
            took.as_secs_f64()
        ),
    )
}

fn random_mask(rng: &mut SeededRng) -> ActionMask {
    loop {
        let bits: [bool; NUM_CATEGORIES] = std::array::from_fn(|_| rng.gen_bool(0.6));
        if let Some(m) = ActionMask::from_bits(bits) {
            return m;
        }
    }
}

fn boltzmann_fidelity() -> Verdict {
    let start = Instant::now();
    let mut rng = SeededRng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut invalid = 0usize;
    for _ in 0..20 {
        let q: [f64; NUM_CATEGORIES] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let mask = random_mask(&mut rng);
        let tau = rng.gen_range(0.1..2.0);
        let p = boltzmann_probabilities(&q, &mask, tau).unwrap();
        let mut counts = [0usize; NUM_CATEGORIES];
        for _ in 0..BOLTZMANN_SAMPLES {
            counts[sample_action(&q, &mask, tau, &mut rng).unwrap().index()] += 1;
        }
        for a in 0..NUM_CATEGORIES {
            if !mask.get(a) {
                invalid += counts[a];
            }
            worst = worst.max((counts[a] as f64 / BOLTZMANN_SAMPLES as f64 - p[a]).abs());
        }
    }
    let took = start.elapsed();
    verdict(
        worst <= BOLTZMANN_TOLERANCE && invalid == 0 && took < BOLTZMANN_BUDGET,
        format!(
            "max |freq - p| = {worst:.4} (need <= {BOLTZMANN_TOLERANCE}), {invalid} invalid samples, {:.1}s",
            took.as_secs_f64()
        ),
    )
}

fn gradient_check() -> Verdict {
    let mut rng = SeededRng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = rng.gen_range(1..=8);
        let h = rng.gen_range(1..=8);
        let net = QNetwork::random(d, h, &mut rng).unwrap();
        let n = rng.gen_range(1..=6);
        let states: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let batch: Vec<(&[f64], usize)> = states
            .iter()
            .map(|s| (s.as_slice(), rng.gen_range(0..NUM_CATEGORIES)))
            .collect();
        let targets: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, grad) = net.loss_and_gradient(&batch, &targets).unwrap();
        let loss = |net: &QNetwork| net.loss_and_gradient(&batch, &targets).unwrap().0;
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(FD_FLOOR);
        for idx in grad.w1.indexed_iter().map(|(i, _)| i).collect::<Vec<_>>() {
            let (mut plus, mut minus) = (net.clone(), net.clone());
            plus.w1_mut()[idx] += FD_EPSILON;
            minus.w1_mut()[idx] -= FD_EPSILON;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * FD_EPSILON);
            worst = worst.max(rel(grad.w1[idx], numeric));
        }
        for idx in grad.w2.indexed_iter().map(|(i, _)| i).collect::<Vec<_>>() {
            let (mut plus, mut minus) = (net.clone(), net.clone());
            plus.w2_mut()[idx] += FD_EPSILON;
            minus.w2_mut()[idx] -= FD_EPSILON;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * FD_EPSILON);
            worst = worst.max(rel(grad.w2[idx], numeric));
        }
    }
    verdict(
        worst < FD_MAX_RELATIVE_ERROR,
        format!("max relative error {worst:.2e} over 100 networks (need < {FD_MAX_RELATIVE_ERROR:.0e})"),
    )
}

fn random_list(rng: &mut SeededRng) -> RankedAnswerList {
    let mut pool: Vec<usize> = (0..20).collect();
    pool.shuffle(rng);
    let len = rng.gen_range(0..=15);
    RankedAnswerList::from_scores(
        pool[..len]
            .iter()
            .enumerate()
            .map(|(i, id)| (format!("e{id}"), (len - i) as f64)),
    )
}

fn metric_oracles() -> Verdict {
    let mut rng = SeededRng::seed_from_u64(4);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let list = random_list(&mut rng);
        let gold: Vec<String> = (0..rng.gen_range(1..=4))
            .map(|_| format!("e{}", rng.gen_range(0..20)))
            .collect();
        let ids: Vec<&str> = list.ids().collect();
        let first = ids.iter().position(|id| gold.iter().any(|g| g == id));
        let p = if first == Some(0) { 1.0 } else { 0.0 };
        let rr = first.map_or(0.0, |i| 1.0 / (i + 1) as f64);
        let hit = if first.is_some_and(|i| i < 5) { 1.0 } else { 0.0 };
        mismatches += usize::from(precision_at_1(&list, &gold).unwrap() != p);
        mismatches += usize::from(reciprocal_rank(&list, &gold).unwrap() != rr);
        mismatches += usize::from(hit_at_5(&list, &gold).unwrap() != hit);
    }
    let example = mrr(&[1.0, 0.5, 0.0]);
    let mut bad_rewards = 0;
    for _ in 0..1000 {
        let (a, b) = (random_list(&mut rng), random_list(&mut rng));
        let gold = vec![format!("e{}", rng.gen_range(0..20))];
        let ab = reward_extrinsic(&a, &b, &gold).unwrap();
        let ba = reward_extrinsic(&b, &a, &gold).unwrap();
        bad_rewards += usize::from(!(-1.0..=1.0).contains(&ab) || ab != -ba);
    }
    verdict(
        mismatches == 0 && example == 0.5 && bad_rewards == 0,
        format!("{mismatches} oracle mismatches in 1000 instances, MRR{{1, .5, 0}} = {example}, {bad_rewards} reward violations"),
    )
}

fn mask_soundness() -> Verdict {
    let (world, qs) = bundled_questions();
    let mut rng = SeededRng::seed_from_u64(5);
    let mut violations = 0;
    let mut pairs = 0;
    for aq in &qs {
        let mask = valid_actions(aq, &world.kg);
        for &c in all_categories() {
            pairs += 1;
            violations += usize::from(apply_category(&world.kg, aq, c, &mut rng).is_some() != mask.is_valid(c));
        }
    }
    verdict(
        violations == 0,
        format!("{violations} violations over {pairs} (question, category) pairs"),
    )
}

fn category_fidelity() -> Verdict {
    let (world, qs) = bundled_questions();
    let kg = &world.kg;
    let mut rng = SeededRng::seed_from_u64(6);
    let mut passed = [0usize; NUM_CATEGORIES];
    let mut failures = Vec::new();
    for aq in &qs {
        for c in valid_actions(aq, kg).valid_categories() {
            let out = apply_category(kg, aq, c, &mut rng).expect("valid category applies");
            match common::structural_check(kg, aq, c, &out.tokens) {
                Ok(()) => passed[c.index()] += 1,
                Err(e) => failures.push(e),
            }
        }
    }
    let thin: Vec<String> = all_categories()
        .iter()
        .filter(|c| passed[c.index()] < MIN_PER_CATEGORY)
        .map(|c| c.to_string())
        .collect();
    let u2 = common::annotated(kg, "Formation year of the band U2?", &["y1976"]);
    let frodo = common::annotated(kg, "Who played Frodo Baggins?", &["elijah_wood"]);
    let worked = [
        (&u2, Category::DelEntityType, "Formation year of U2?"),
        (&frodo, Category::SubsRelation, "Who portrayed Frodo Baggins?"),
    ];
    let worked_ok = worked
        .iter()
        .filter(|(aq, c, want)| apply_category(kg, aq, *c, &mut rng).map(|r| r.text()).as_deref() == Some(*want))
        .count();
    let min = passed.iter().min().copied().unwrap_or(0);
    verdict(
        failures.is_empty() && thin.is_empty() && worked_ok == worked.len(),
        format!(
            "fewest checked outputs per category {min} (need >= {MIN_PER_CATEGORY}), {} structural failures{}, {worked_ok}/{} worked examples exact",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default(),
            worked.len()
        ),
    )
}

fn config_in(dir: &Path, seed: u64) -> PipelineConfig {
    let mut cfg = PipelineConfig {
        seed,
        ..Default::default()
    };
    cfg.paths.out_dir = dir.to_owned();
    cfg
}

struct E2eRuns {
    top5_reformulations: usize,
}

fn e2e_direction(root: &Path) -> (Verdict, E2eRuns) {
    let start = Instant::now();
    let (mut p_orig, mut p_rob, mut r_orig, mut r_rob) = (0.0, 0.0, 0.0, 0.0);
    let mut top5 = 0;
    for seed in E2E_SEEDS {
        let out = run_e2e_with(
            &config_in(&root.join(format!("seed{seed}")), seed),
            &RunOptions::default(),
        )
        .unwrap();
        p_orig += out.orig.p_at_1;
        p_rob += out.robust.p_at_1;
        r_orig += out.orig.robust.expect("test set has paraphrases");
        r_rob += out.robust.robust.expect("test set has paraphrases");
        if seed == E2E_SEEDS[0] {
            top5 = out.n_reformulations;
        }
    }
    let n = E2E_SEEDS.len() as f64;
    let (p_orig, p_rob, r_orig, r_rob) = (p_orig / n, p_rob / n, r_orig / n, r_rob / n);
    let took = start.elapsed();
    (
        verdict(
            p_rob >= p_orig && r_rob >= r_orig && took < E2E_BUDGET,
            format!(
                "mean P@1 {p_orig:.3} -> {p_rob:.3}, mean Robust {r_orig:.3} -> {r_rob:.3} over {} seeds, {:.1}s",
                E2E_SEEDS.len(),
                took.as_secs_f64()
            ),
        ),
        E2eRuns {
            top5_reformulations: top5,
        },
    )
}

fn ablation_sizes(root: &Path, runs: &E2eRuns) -> Verdict {
    let seed = E2E_SEEDS[0];
    let all = run_e2e_with(
        &config_in(&root.join("all_cats"), seed),
        &RunOptions {
            mode: SelectionMode::AllCats,
            rcs_checkpoint: None,
        },
    )
    .unwrap();
    let random = run_e2e_with(
        &config_in(&root.join("random_cats"), seed),
        &RunOptions {
            mode: SelectionMode::RandomCats,
            rcs_checkpoint: None,
        },
    );
    let ratio = all.n_reformulations as f64 / runs.top5_reformulations as f64;
    let lo = ALL_CATS_RATIO * (1.0 - ALL_CATS_SLACK);
    let hi = ALL_CATS_RATIO * (1.0 + ALL_CATS_SLACK);
    verdict(
        (lo..=hi).contains(&ratio) && random.is_ok(),
        format!(
            "all_cats {} vs top-5 {} reformulations, ratio {ratio:.2} (need {lo:.1}..={hi:.1}); random_cats {}",
            all.n_reformulations,
            runs.top5_reformulations,
            match &random {
                Ok(r) => format!("ran cleanly with {} reformulations", r.n_reformulations),
                Err(e) => format!("failed: {e}"),
            }
        ),
    )
}

fn determinism(root: &Path) -> Verdict {
    let dirs = [root.join("det_a"), root.join("det_b")];
    for d in &dirs {
        run_e2e_with(&config_in(d, 11), &RunOptions::default()).unwrap();
    }
    let files = [
        "orig/report.json",
        "robust/report.json",
        "rcs.ckpt.json",
        "qa_orig.json",
        "qa_robust.json",
        "reformulations.jsonl",
    ];
    let differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| fs::read(dirs[0].join(f)).unwrap() != fs::read(dirs[1].join(f)).unwrap())
        .collect();
    verdict(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} artifacts byte-identical across two runs", files.len())
        } else {
            format!("differing: {}", differing.join(", "))
        },
    )
}

fn main() {
    let root = tempfile::tempdir().unwrap();
    let mut results: Vec<(&str, Verdict)> = vec![
        ("dqn bandit convergence", bandit_convergence()),
        ("boltzmann sampling fidelity", boltzmann_fidelity()),
        ("gradient correctness", gradient_check()),
        ("metric oracles", metric_oracles()),
        ("mask soundness and completeness", mask_soundness()),
        ("category fidelity", category_fidelity()),
    ];
    let (e2e, runs) = e2e_direction(root.path());
    results.push(("end-to-end directional improvement", e2e));
    results.push(("ablation augmentation sizes", ablation_sizes(root.path(), &runs)));
    results.push(("determinism", determinism(root.path())));

    let mut failed = 0;
    for (i, (name, v)) in results.iter().enumerate() {
        failed += usize::from(!v.pass);
        println!(
            "{} {}. {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail
        );
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
