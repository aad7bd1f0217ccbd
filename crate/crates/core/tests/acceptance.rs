//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::panic;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use controversy_motifs::boost::{train, train_traced, AdaBoost, BoostParams};
use controversy_motifs::dataset::{
    build_feature_matrix, filter_threads, load_dataset, retention, save_follows, save_threads,
};
use controversy_motifs::experiment::{
    analyze_subthreads, run_ablation, Protocol, SubthreadScope, DEFAULT_FILTERS,
};
use controversy_motifs::motif::{classify_dyad, dyadic_census, triadic_census, triangle_ratio};
use controversy_motifs::synth::{generate_synthetic, SynthParams};
use controversy_motifs::validation::{cross_validate, CvConfig};
use controversy_motifs::{
    BaselineFeatures, DyadClass, Exec, FeatureMask, FeatureVector, FollowGraph, Label, MaskName,
    PairClass, Post, ReplyGraph, ReplyTree, Strictness, TriadGroup, N_SLOTS,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("AC1 dyad taxonomy truth table", ac1_dyad_truth_table),
        ("AC2 census oracle equivalence", ac2_census_oracles),
        ("AC3 baseline feature arithmetic", ac3_feature_fixtures),
        ("AC4 boosting correctness", ac4_boosting),
        ("AC5 synthetic ablation trend", ac5_ablation),
        ("AC6 feature importance direction", ac6_importance),
        ("AC7 filter retention", ac7_filter_retention),
        ("AC8 sub-thread contract", ac8_subthreads),
        ("AC9 determinism and formats", ac9_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, run) in criteria {
        let t0 = Instant::now();
        let outcome = panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {name} ({secs:.2}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name} ({secs:.2}s): {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn within(limit: Duration, t0: Instant) -> Result<(), String> {
    let elapsed = t0.elapsed();
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.2?}, limit {limit:?}"))
    }
}

// AC1

/// Hand-built table: (u replies v, v replies u, u follows v, v follows u).
const TRUTH_TABLE: [((bool, bool, bool, bool), DyadClass); 12] = [
    ((true, false, false, false), DyadClass::A),
    ((true, false, true, false), DyadClass::C),
    ((true, false, false, true), DyadClass::D),
    ((true, false, true, true), DyadClass::G),
    ((false, true, false, false), DyadClass::A),
    ((false, true, false, true), DyadClass::C),
    ((false, true, true, false), DyadClass::D),
    ((false, true, true, true), DyadClass::G),
    ((true, true, false, false), DyadClass::B),
    ((true, true, true, false), DyadClass::F),
    ((true, true, false, true), DyadClass::F),
    ((true, true, true, true), DyadClass::E),
];

fn ac1_dyad_truth_table() -> Outcome {
    let t0 = Instant::now();
    let mut seen = HashSet::new();
    for ((r_uv, r_vu, f_uv, f_vu), expected) in TRUTH_TABLE {
        seen.insert((r_uv, r_vu, f_uv, f_vu));
        let mut replies = vec![];
        if r_uv {
            replies.push(("u", "v", 1));
        }
        if r_vu {
            replies.push(("v", "u", 1));
        }
        let rg = ReplyGraph::from_edges(&["u", "v"], &replies);
        let mut follows = vec![];
        if f_uv {
            follows.push(("u", "v"));
        }
        if f_vu {
            follows.push(("v", "u"));
        }
        let fg = FollowGraph::from_edges(follows);
        let got = classify_dyad("u", "v", &rg, &fg).map_err(|e| e.to_string())?;
        ensure!(
            got == expected,
            "config {:?}: got {got:?}, expected {expected:?}",
            (r_uv, r_vu, f_uv, f_vu)
        );
        let swapped = classify_dyad("v", "u", &rg, &fg).map_err(|e| e.to_string())?;
        ensure!(
            swapped == expected,
            "config {:?} is not symmetric",
            (r_uv, r_vu, f_uv, f_vu)
        );
    }
    ensure!(
        seen.len() == 12,
        "truth table covers {} configurations",
        seen.len()
    );
    let rg = ReplyGraph::from_edges(&["u", "v"], &[]);
    ensure!(
        classify_dyad("u", "v", &rg, &FollowGraph::new()).is_err(),
        "pair without reply was classified"
    );
    within(Duration::from_secs(1), t0)?;
    Ok("12/12 configurations match, each maps to one class".into())
}

// AC2

fn oracle_pair_class(r_uv: bool, r_vu: bool, f: bool) -> Option<PairClass> {
    match (r_uv, r_vu, f) {
        (false, false, false) => None,
        (false, false, true) => Some(PairClass::FollowOnly),
        (_, _, true) => Some(PairClass::ReplyFollow),
        (true, true, false) => Some(PairClass::ReplyReciprocal),
        _ => Some(PairClass::ReplyOneWay),
    }
}

fn oracle_dyad(r_uv: bool, r_vu: bool, f_uv: bool, f_vu: bool) -> Option<DyadClass> {
    TRUTH_TABLE
        .iter()
        .find(|(k, _)| *k == (r_uv, r_vu, f_uv, f_vu))
        .map(|&(_, c)| c)
}

fn random_overlay(rng: &mut ChaCha8Rng) -> (Vec<String>, ReplyGraph, FollowGraph) {
    let n = rng.random_range(1..=8);
    let users: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
    let p_reply = rng.random_range(0.05..0.7);
    let p_follow = rng.random_range(0.0..0.6);
    let mut replies = vec![];
    let mut follows = vec![];
    for a in &users {
        for b in &users {
            if rng.random::<f64>() < p_reply {
                replies.push((a.clone(), b.clone(), rng.random_range(1..4)));
            }
            if a != b && rng.random::<f64>() < p_follow {
                follows.push((a.clone(), b.clone()));
            }
        }
        if rng.random::<f64>() < 0.3 {
            follows.push((a.clone(), format!("outsider{}", rng.random_range(0..3))));
        }
    }
    let rg = ReplyGraph::from_edges(&users, &replies);
    (users, rg, FollowGraph::from_edges(follows))
}

fn ac2_census_oracles() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut dyads, mut triads) = (0u64, 0u64);
    for graph in 0..1000 {
        let (users, rg, fg) = random_overlay(&mut rng);
        let n = users.len();
        let reply = |i: usize, j: usize| rg.replied(&users[i], &users[j]);
        let follow = |i: usize, j: usize| fg.follows(&users[i], &users[j]);

        let mut dyad_counts = [0u64; 7];
        for i in 0..n {
            for j in i + 1..n {
                if let Some(c) = oracle_dyad(reply(i, j), reply(j, i), follow(i, j), follow(j, i)) {
                    dyad_counts[c.index()] += 1;
                }
            }
        }
        let census = dyadic_census(&rg, &fg);
        ensure!(
            census.counts == dyad_counts,
            "graph {graph}: dyads {:?} != oracle {dyad_counts:?}",
            census.counts
        );

        let side = |i: usize, j: usize| {
            oracle_pair_class(reply(i, j), reply(j, i), follow(i, j) || follow(j, i))
        };
        let mut triad_counts: BTreeMap<usize, u64> = BTreeMap::new();
        let mut closed = 0u64;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let pairs = [(i, j), (j, k), (i, k)];
                    let has_reply = |&(a, b): &(usize, usize)| reply(a, b) || reply(b, a);
                    if pairs.iter().all(has_reply) {
                        closed += 1;
                    }
                    let classes: Vec<PairClass> =
                        pairs.iter().filter_map(|&(a, b)| side(a, b)).collect();
                    if classes.len() == 3 && pairs.iter().any(has_reply) {
                        let g = TriadGroup::new(classes[0], classes[1], classes[2]);
                        *triad_counts.entry(g.index()).or_default() += 1;
                    }
                }
            }
        }
        let census = triadic_census(&rg, &fg);
        for g in TriadGroup::all() {
            let want = triad_counts.get(&g.index()).copied().unwrap_or(0);
            ensure!(
                census.count(g) == want,
                "graph {graph}: triad {} = {} != oracle {want}",
                g.code(),
                census.count(g)
            );
        }
        ensure!(
            census.total() == triad_counts.values().sum::<u64>(),
            "graph {graph}: triad totals differ"
        );

        let want_ratio = if n < 3 {
            0.0
        } else {
            closed as f64 / (n * (n - 1) * (n - 2) / 6) as f64
        };
        ensure!(
            triangle_ratio(&rg) == want_ratio,
            "graph {graph}: triangle ratio {} != {want_ratio}",
            triangle_ratio(&rg)
        );
        dyads += dyad_counts.iter().sum::<u64>();
        triads += census.total();
    }
    within(Duration::from_secs(30), t0)?;
    Ok(format!(
        "1000 graphs, {dyads} dyads and {triads} triads matched exactly"
    ))
}

// AC3

struct Fixture {
    name: &'static str,
    posts: &'static [(&'static str, &'static str, Option<&'static str>, u64)],
    /// n_nodes_tree, n_edges_tree, n_nodes_reply, n_edges_reply
    sizes: [usize; 4],
    /// avg_degree_tree, avg_degree_reply, avg_cascade_depth,
    /// max_relative_degree, avg_inter_reply_time, frac_first_hour
    reals: [f64; 6],
}

const FIXTURES: [Fixture; 10] = [
    Fixture {
        name: "lone root",
        posts: &[("r", "a", None, 0)],
        sizes: [1, 0, 1, 0],
        reals: [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    },
    Fixture {
        name: "3-post path",
        posts: &[
            ("r", "a", None, 0),
            ("p1", "b", Some("r"), 100),
            ("p2", "c", Some("p1"), 7300),
        ],
        sizes: [3, 2, 3, 2],
        reals: [4.0 / 3.0, 4.0 / 3.0, 2.0, 2.0, 3650.0, 0.5],
    },
    Fixture {
        name: "5-reply star",
        posts: &[
            ("r", "a", None, 0),
            ("p1", "b", Some("r"), 600),
            ("p2", "c", Some("r"), 1200),
            ("p3", "d", Some("r"), 1800),
            ("p4", "e", Some("r"), 2400),
            ("p5", "f", Some("r"), 3000),
        ],
        sizes: [6, 5, 6, 5],
        reals: [10.0 / 6.0, 10.0 / 6.0, 1.0, 0.2, 1800.0, 1.0],
    },
    Fixture {
        name: "4-node tree",
        posts: &[
            ("r", "a", None, 0),
            ("x", "b", Some("r"), 1800),
            ("y", "c", Some("r"), 5400),
            ("z", "d", Some("x"), 5400),
        ],
        sizes: [4, 3, 4, 3],
        reals: [1.5, 1.5, 1.5, 1.0, 3600.0, 1.0 / 3.0],
    },
    Fixture {
        name: "simultaneous replies",
        posts: &[
            ("r", "a", None, 1000),
            ("p1", "b", Some("r"), 1000),
            ("p2", "c", Some("p1"), 1000),
        ],
        sizes: [3, 2, 3, 2],
        reals: [4.0 / 3.0, 4.0 / 3.0, 2.0, 2.0, 0.0, 1.0],
    },
    Fixture {
        name: "self replies",
        posts: &[
            ("r", "a", None, 0),
            ("p1", "a", Some("r"), 10),
            ("p2", "b", Some("p1"), 20),
            ("p3", "a", Some("p2"), 30),
        ],
        sizes: [4, 3, 2, 3],
        reals: [1.5, 3.0, 3.0, 2.0, 10.0, 1.0],
    },
    Fixture {
        name: "repeated replies",
        posts: &[
            ("r", "a", None, 0),
            ("p1", "b", Some("r"), 100),
            ("p2", "b", Some("r"), 200),
            ("p3", "c", Some("p1"), 4000),
        ],
        sizes: [4, 3, 3, 2],
        reals: [1.5, 4.0 / 3.0, 1.5, 1.0, 1400.0, 2.0 / 3.0],
    },
    Fixture {
        name: "5-post path",
        posts: &[
            ("r", "a", None, 0),
            ("p1", "b", Some("r"), 1000),
            ("p2", "c", Some("p1"), 2000),
            ("p3", "d", Some("p2"), 3000),
            ("p4", "e", Some("p3"), 4000),
        ],
        sizes: [5, 4, 5, 4],
        reals: [1.6, 1.6, 4.0, 2.0, 1000.0, 0.75],
    },
    Fixture {
        name: "back-and-forth",
        posts: &[
            ("r", "a", None, 0),
            ("p1", "b", Some("r"), 60),
            ("p2", "a", Some("p1"), 120),
            ("p3", "b", Some("p2"), 180),
            ("p4", "c", Some("r"), 7200),
        ],
        sizes: [5, 4, 3, 3],
        reals: [1.6, 2.0, 2.0, 1.0, 1845.0, 0.75],
    },
    Fixture {
        name: "clock skew",
        posts: &[
            ("r", "a", None, 1000),
            ("p1", "b", Some("r"), 500),
            ("p2", "c", Some("r"), 2000),
            ("p3", "d", Some("p2"), 3000),
            ("p4", "b", Some("p2"), 9000),
            ("p5", "e", Some("p2"), 4600),
        ],
        sizes: [6, 5, 5, 5],
        reals: [10.0 / 6.0, 2.0, 1.75, 2.0, 2320.0, 0.8],
    },
];

fn ac3_feature_fixtures() -> Outcome {
    for fx in &FIXTURES {
        let posts = fx
            .posts
            .iter()
            .map(|&(id, a, p, ts)| Post::new(id, a, p, ts))
            .collect();
        let tree =
            ReplyTree::build(fx.name, posts, None).map_err(|e| format!("{}: {e}", fx.name))?;
        let f = BaselineFeatures::compute(&tree, &tree.project());
        let s = f.structural;
        let sizes = [
            s.n_nodes_tree,
            s.n_edges_tree,
            s.n_nodes_reply,
            s.n_edges_reply,
        ];
        ensure!(
            sizes == fx.sizes,
            "{}: sizes {sizes:?} != {:?}",
            fx.name,
            fx.sizes
        );
        let reals = [
            s.avg_degree_tree,
            s.avg_degree_reply,
            f.propagation.avg_cascade_depth,
            f.propagation.max_relative_degree,
            f.temporal.avg_inter_reply_time,
            f.temporal.frac_first_hour,
        ];
        for (j, (&got, &want)) in reals.iter().zip(&fx.reals).enumerate() {
            ensure!(
                (got - want).abs() <= 1e-12,
                "{}: real feature {j} = {got}, expected {want}",
                fx.name
            );
        }
    }
    Ok(format!("{} fixtures match", FIXTURES.len()))
}

// AC4

fn vector(values: &[(usize, f64)]) -> FeatureVector {
    let mut v = [0.0; N_SLOTS];
    for &(slot, x) in values {
        v[slot] = x;
    }
    FeatureVector(v)
}

fn random_dataset(rng: &mut ChaCha8Rng) -> (Vec<FeatureVector>, Vec<Label>) {
    let n = rng.random_range(20..80);
    let noise = rng.random_range(0.0..0.3);
    loop {
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let vals: Vec<(usize, f64)> =
                (0..5).map(|s| (s, rng.random_range(-1.0..1.0))).collect();
            let score = vals[0].1 * vals[1].1 + 0.5 * vals[2].1;
            let flip = rng.random::<f64>() < noise;
            ys.push(Label::from_sign(if (score > 0.0) != flip {
                1.0
            } else {
                -1.0
            }));
            xs.push(vector(&vals));
        }
        if ys.contains(&Label::Controversial) && ys.contains(&Label::NonControversial) {
            return (xs, ys);
        }
    }
}

fn ac4_boosting() -> Outcome {
    let plane = FeatureMask::from_slots(&[0, 1]);
    let params = BoostParams {
        rounds: 50,
        ..BoostParams::default()
    };

    // XOR of the two diagonal half-planes: same-sign points on the x axis,
    // opposite-sign points on the y axis.
    let xs = vec![
        vector(&[(0, 1.0), (1, 0.0)]),
        vector(&[(0, -1.0), (1, 0.0)]),
        vector(&[(0, 0.0), (1, 1.0)]),
        vector(&[(0, 0.0), (1, -1.0)]),
    ];
    let ys = vec![
        Label::NonControversial,
        Label::NonControversial,
        Label::Controversial,
        Label::Controversial,
    ];
    let (_, trace) = train_traced(&xs, &ys, plane, &params).map_err(|e| e.to_string())?;
    let zero_at = trace.iter().position(|t| t.train_error == 0.0);
    ensure!(
        zero_at.is_some(),
        "XOR training error never reached 0: {:?}",
        trace.last().map(|t| t.train_error)
    );
    let zero_at = zero_at.unwrap();
    let path: Vec<String> = trace[..=zero_at]
        .iter()
        .map(|t| format!("{}", t.train_error))
        .collect();

    // Reported only: on the axis-aligned corners every stump has error 1/2.
    let corners = vec![
        vector(&[(0, 1.0), (1, 1.0)]),
        vector(&[(0, -1.0), (1, -1.0)]),
        vector(&[(0, 1.0), (1, -1.0)]),
        vector(&[(0, -1.0), (1, 1.0)]),
    ];
    let corner_note = match train_traced(&corners, &ys, plane, &params) {
        Ok((_, trace)) => format!("axis-aligned corners keep {} stumps", trace.len()),
        Err(e) => format!("corner layout: {e}"),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut rounds = 0;
    for d in 0..20 {
        let (xs, ys) = random_dataset(&mut rng);
        let (_, trace) = train_traced(&xs, &ys, FeatureMask::from_range(0..5), &params)
            .map_err(|e| e.to_string())?;
        for t in &trace {
            ensure!(
                t.train_error <= t.error_bound + 1e-12,
                "dataset {d} round {}: error {} above bound {}",
                t.round,
                t.train_error,
                t.error_bound
            );
        }
        rounds += trace.len();
    }

    let corpus = |seed| {
        let (xs, ys) = random_dataset(&mut ChaCha8Rng::seed_from_u64(seed));
        (xs, ys)
    };
    let (xs, ys) = corpus(99);
    let a = train(
        &xs,
        &ys,
        FeatureMask::all(),
        &BoostParams {
            rounds: 60,
            exec: Exec::Parallel,
        },
    )
    .map_err(|e| e.to_string())?;
    let (xs2, ys2) = corpus(99);
    let b = train(
        &xs2,
        &ys2,
        FeatureMask::all(),
        &BoostParams {
            rounds: 60,
            exec: Exec::Sequential,
        },
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        a == b && a.to_json() == b.to_json(),
        "retraining on the seed-99 dataset changed the model"
    );

    Ok(format!(
        "XOR error 0 after {} rounds ({}); {corner_note}; bound held over {rounds} rounds on 20 datasets; retrain bit-identical",
        zero_at + 1,
        path.join(" -> ")
    ))
}

// AC5 and AC6 share one corpus.

struct Corpus {
    trees: Vec<ReplyTree>,
    fg: FollowGraph,
}

fn paper_corpus() -> Corpus {
    let (trees, fg) =
        generate_synthetic(&SynthParams::preset(42), Exec::Parallel).expect("valid preset");
    Corpus { trees, fg }
}

fn ac5_ablation() -> Outcome {
    let t0 = Instant::now();
    let Corpus { trees, fg } = paper_corpus();
    ensure!(trees.len() == 1200, "corpus has {} threads", trees.len());
    let matrix = build_feature_matrix(&trees, &fg, Exec::Parallel);
    let protocol = Protocol::CrossValidation(CvConfig {
        folds: 5,
        seed: 42,
        exec: Exec::Parallel,
    });
    let table = run_ablation(
        &AdaBoost::default(),
        &matrix,
        &MaskName::ABLATION,
        &DEFAULT_FILTERS,
        &protocol,
    );
    println!("{}", table.render());
    let acc = |m: MaskName, k: usize| {
        table
            .accuracy(m, k)
            .ok_or(format!("missing cell {} k={k}", m.as_str()))
    };

    let mut monotone = 0;
    let mut rows = vec![];
    for &k in &DEFAULT_FILTERS {
        let (b, d, t, o) = (
            acc(MaskName::Baseline, k)?,
            acc(MaskName::BaselineDyadic, k)?,
            acc(MaskName::BaselineDyadicTriadic, k)?,
            acc(MaskName::DyadicOnly, k)?,
        );
        ensure!(
            d >= b + 0.02,
            "k={k}: baseline+dyadic {d:.4} < baseline {b:.4} + 0.02"
        );
        ensure!(o >= 0.70, "k={k}: dyadic-only {o:.4} < 0.70");
        if b <= d && d <= t {
            monotone += 1;
        }
        rows.push(format!("k={k} {b:.3}/{d:.3}/{t:.3}/{o:.3}"));
    }
    ensure!(monotone >= 2, "monotone trend holds in {monotone}/3 rows");
    within(Duration::from_secs(300), t0)?;
    Ok(format!("trend in {monotone}/3 rows; {}", rows.join(", ")))
}

fn ac6_importance() -> Outcome {
    let Corpus { trees, fg } = paper_corpus();
    let matrix = build_feature_matrix(&trees, &fg, Exec::Parallel);
    let (xs, ys) = matrix.labeled(None);
    let model =
        train(&xs, &ys, FeatureMask::all(), &BoostParams::default()).map_err(|e| e.to_string())?;
    let ranking = model.feature_importance().map_err(|e| e.to_string())?;
    let rank = |slot: &str| {
        ranking
            .iter()
            .position(|(n, _)| n == slot)
            .map_or(usize::MAX, |r| r + 1)
    };
    let (t, a, c) = (rank("avg_inter_reply_time"), rank("dyad_A"), rank("dyad_C"));
    let top: Vec<&str> = ranking.iter().take(3).map(|(n, _)| n.as_str()).collect();
    ensure!(t <= 3, "avg_inter_reply_time ranks {t}; top 3 are {top:?}");
    ensure!(a < c, "dyad_A ranks {a}, dyad_C ranks {c}");
    Ok(format!(
        "avg_inter_reply_time #{t}, dyad_A #{a}, dyad_C #{c}; top 3 {top:?}"
    ))
}

// AC7

fn thread_with_users(id: &str, users: usize) -> ReplyTree {
    let mut posts = vec![Post::new("r", "owner", None, 0)];
    let root_id = "r".to_string();
    for u in 1..users {
        for rep in 0..2 {
            let pid = format!("p{u}_{rep}");
            posts.push(Post::new(
                pid,
                format!("user{u}"),
                Some(root_id.as_str()),
                (u * 10 + rep) as u64,
            ));
        }
    }
    ReplyTree::build(id, posts, None).expect("fixture tree")
}

fn ac7_filter_retention() -> Outcome {
    // 1 thread of 2 users, 2 of 3, 10 with 4..=10, 87 with 11..
    let mut sizes = vec![2, 3, 3];
    sizes.extend((0..10).map(|i| 4 + i % 7));
    sizes.extend((0..87).map(|i| 11 + i % 30));
    let trees: Vec<ReplyTree> = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| thread_with_users(&format!("t{i}"), n))
        .collect();
    ensure!(trees.len() == 100, "fixture has {} threads", trees.len());
    for (t, &n) in trees.iter().zip(&sizes) {
        ensure!(
            t.count_users() == n,
            "{} has {} users, built with {n}",
            t.thread_id(),
            t.count_users()
        );
    }
    let counts = [(2, 99), (3, 97), (10, 87)];
    for (k, want) in counts {
        let got = filter_threads(&trees, k).len();
        ensure!(got == want, "k={k}: kept {got}, expected {want}");
    }
    ensure!(
        retention(&trees, &[2, 3, 10]) == counts.to_vec(),
        "retention summary disagrees with filter"
    );
    Ok("kept 99/97/87 of 100 at k=2/3/10".into())
}

// AC8

fn random_tree(id: &str, rng: &mut ChaCha8Rng) -> ReplyTree {
    let n = rng.random_range(1..60);
    let pool = rng.random_range(2..30);
    let mut posts = vec![Post::new("p0", "v0", None, 0)];
    for i in 1..n {
        let parent = if rng.random::<f64>() < 0.4 {
            0
        } else {
            rng.random_range(0..i)
        };
        let ts = posts[parent].ts + rng.random_range(0..5000);
        posts.push(Post::new(
            format!("p{i}"),
            format!("v{}", rng.random_range(0..pool)),
            Some(&format!("p{parent}")),
            ts,
        ));
    }
    ReplyTree::build(id, posts, None).expect("random tree")
}

/// Distinct authors below each direct reply, by walking parent links.
fn expected_subthreads(tree: &ReplyTree, k: usize) -> usize {
    let root = tree.root();
    let mut authors: BTreeMap<usize, HashSet<&str>> = BTreeMap::new();
    for i in 0..tree.len() {
        if i == root {
            continue;
        }
        let mut top = i;
        while let Some(p) = tree.parent_of(top) {
            if p == root {
                break;
            }
            top = p;
        }
        authors
            .entry(top)
            .or_default()
            .insert(tree.posts()[i].author.as_str());
    }
    authors.values().filter(|a| a.len() > k).count()
}

fn ac8_subthreads() -> Outcome {
    let (train_trees, train_fg) =
        generate_synthetic(&SynthParams::separable(8, 40), Exec::Parallel).expect("valid preset");
    let (xs, ys) = build_feature_matrix(&train_trees, &train_fg, Exec::Parallel).labeled(None);
    let model =
        train(&xs, &ys, FeatureMask::all(), &BoostParams::default()).map_err(|e| e.to_string())?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let trees: Vec<ReplyTree> = (0..100)
        .map(|i| random_tree(&format!("r{i:03}"), &mut rng))
        .collect();
    let fg = FollowGraph::from_edges(
        (0..40)
            .map(|i| (format!("v{i}"), format!("v{}", (i * 7 + 3) % 40)))
            .filter(|(a, b)| a != b),
    );
    let k = 3;
    let report = analyze_subthreads(&model, &trees, &fg, k, SubthreadScope::All, Exec::Parallel)
        .map_err(|e| e.to_string())?;

    let mut total = 0;
    for (tree, summary) in trees.iter().zip(&report.per_tree) {
        let want = expected_subthreads(tree, k);
        ensure!(
            summary.thread_id == tree.thread_id(),
            "summary order differs at {}",
            tree.thread_id()
        );
        let emitted = report
            .predictions
            .iter()
            .filter(|p| p.thread_id == tree.thread_id())
            .count();
        ensure!(
            summary.qualifying == want && emitted == want,
            "{}: {emitted} predictions, summary {}, expected {want}",
            tree.thread_id(),
            summary.qualifying
        );
        let children: HashSet<String> = tree
            .children_of(tree.root())
            .iter()
            .map(|&c| format!("{}/{}", tree.thread_id(), tree.posts()[c].id))
            .collect();
        let ids: Vec<&str> = report
            .predictions
            .iter()
            .filter(|p| p.thread_id == tree.thread_id())
            .map(|p| p.subtree_id.as_str())
            .collect();
        ensure!(
            ids.iter().collect::<HashSet<_>>().len() == ids.len(),
            "{}: duplicate sub-thread ids",
            tree.thread_id()
        );
        ensure!(
            ids.iter().all(|id| children.contains(*id)),
            "{}: prediction for a non-direct reply",
            tree.thread_id()
        );
        total += want;
    }
    ensure!(
        report.per_tree.len() == trees.len(),
        "{} summaries for {} trees",
        report.per_tree.len(),
        trees.len()
    );
    ensure!(
        report.predictions.len() == total,
        "{} predictions, expected {total}",
        report.predictions.len()
    );
    let share = report
        .fraction()
        .map_or("n/a".into(), |f| format!("{:.1}%", 100.0 * f));
    Ok(format!("{total} qualifying sub-threads, one prediction each; predicted controversial share {share} (reported only)"))
}

// AC9

fn small_corpus_params(seed: u64) -> SynthParams {
    let mut p = SynthParams::preset(seed);
    p.controversial.n_threads = 70;
    p.non_controversial.n_threads = 50;
    p
}

/// extract, train and evaluate into `dir`; returns the written file names.
fn pipeline(
    threads: &Path,
    follows: &Path,
    dir: &Path,
    exec: Exec,
) -> Result<Vec<&'static str>, String> {
    let s = |e: &dyn std::fmt::Display| e.to_string();
    let (trees, fg) =
        load_dataset(threads, follows, Strictness::Strict, exec).map_err(|e| s(&e))?;
    let matrix = build_feature_matrix(&trees, &fg, exec);
    matrix
        .write_features_csv(fs::File::create(dir.join("features.csv")).map_err(|e| s(&e))?)
        .map_err(|e| s(&e))?;
    matrix
        .write_diagnostics_csv(fs::File::create(dir.join("diagnostics.csv")).map_err(|e| s(&e))?)
        .map_err(|e| s(&e))?;

    let (xs, ys) = matrix.labeled(None);
    let model = train(
        &xs,
        &ys,
        FeatureMask::all(),
        &BoostParams { rounds: 40, exec },
    )
    .map_err(|e| s(&e))?;
    fs::write(dir.join("model.json"), model.to_json()).map_err(|e| s(&e))?;

    let learner = AdaBoost::new(40, exec);
    let cfg = CvConfig {
        folds: 5,
        seed: 42,
        exec,
    };
    let report =
        cross_validate(&learner, &xs, &ys, FeatureMask::all(), &cfg, None).map_err(|e| s(&e))?;
    let table = run_ablation(
        &learner,
        &matrix,
        &MaskName::ABLATION,
        &DEFAULT_FILTERS,
        &Protocol::CrossValidation(cfg),
    );
    table
        .write_csv(fs::File::create(dir.join("metrics.csv")).map_err(|e| s(&e))?)
        .map_err(|e| s(&e))?;
    fs::write(
        dir.join("cv.json"),
        serde_json::to_string_pretty(&(report.mean, report.std, report.pooled))
            .map_err(|e| s(&e))?,
    )
    .map_err(|e| s(&e))?;
    Ok(vec![
        "features.csv",
        "diagnostics.csv",
        "model.json",
        "metrics.csv",
        "cv.json",
    ])
}

fn ac9_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path();
    let mut written = vec![];
    for (run, exec) in [("a", Exec::Parallel), ("b", Exec::Sequential)] {
        let dir = root.join(run);
        fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        let (trees, fg) =
            generate_synthetic(&small_corpus_params(42), exec).map_err(|e| e.to_string())?;
        let threads = dir.join("threads.jsonl");
        let follows = dir.join("follows.tsv");
        save_threads(&threads, &trees).map_err(|e| e.to_string())?;
        save_follows(&follows, &fg).map_err(|e| e.to_string())?;

        let (loaded, loaded_fg) = load_dataset(&threads, &follows, Strictness::Strict, exec)
            .map_err(|e| e.to_string())?;
        ensure!(loaded == trees, "threads.jsonl did not round-trip");
        ensure!(loaded_fg == fg, "follows.tsv did not round-trip");
        let again = dir.join("again");
        fs::create_dir_all(&again).map_err(|e| e.to_string())?;
        save_threads(&again.join("threads.jsonl"), &loaded).map_err(|e| e.to_string())?;
        save_follows(&again.join("follows.tsv"), &loaded_fg).map_err(|e| e.to_string())?;
        for f in ["threads.jsonl", "follows.tsv"] {
            ensure!(
                fs::read(dir.join(f)).ok() == fs::read(again.join(f)).ok(),
                "{f} changed on re-save"
            );
        }
        written = pipeline(&threads, &follows, &dir, exec)?;
        written.extend(["threads.jsonl", "follows.tsv"]);
    }
    for f in &written {
        let a = fs::read(root.join("a").join(f)).map_err(|e| e.to_string())?;
        let b = fs::read(root.join("b").join(f)).map_err(|e| e.to_string())?;
        ensure!(!a.is_empty() && a == b, "{f} differs between reruns");
    }
    Ok(format!(
        "{} outputs byte-identical across reruns; inputs round-trip losslessly",
        written.len()
    ))
}
