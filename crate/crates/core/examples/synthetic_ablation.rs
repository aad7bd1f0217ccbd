//! Generates the default synthetic corpus, runs the feature-block ablation
//! and prints the importance ranking of a full-feature model.
//!
//!     cargo run --release -p controversy-motifs --example synthetic_ablation [seed]

use controversy_motifs::boost::{evaluate, train, AdaBoost, BoostParams};
use controversy_motifs::dataset::{build_feature_matrix, retention};
use controversy_motifs::experiment::{run_ablation, Protocol, DEFAULT_FILTERS};
use controversy_motifs::features::{slot_names, FeatureMask, MaskName, N_SLOTS, TRIAD_START};
use controversy_motifs::synth::{generate_synthetic, SynthParams};
use controversy_motifs::validation::{cross_validate, CvConfig};
use controversy_motifs::Exec;

fn main() {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(42);
    let t0 = std::time::Instant::now();
    let (trees, fg) = generate_synthetic(&SynthParams::preset(seed), Exec::Parallel)
        .expect("valid preset");
    println!(
        "seed {seed}: {} threads, {} follow edges",
        trees.len(),
        fg.edge_count()
    );
    println!("retention {:?}", retention(&trees, &DEFAULT_FILTERS));
    let matrix = build_feature_matrix(&trees, &fg, Exec::Parallel);

    let learner = AdaBoost::default();
    let protocol = Protocol::CrossValidation(CvConfig {
        seed,
        ..CvConfig::default()
    });
    let table = run_ablation(
        &learner,
        &matrix,
        &MaskName::ABLATION,
        &DEFAULT_FILTERS,
        &protocol,
    );
    print!("{}", table.render());
    let acc = |m, k| table.accuracy(m, k).unwrap_or(f64::NAN);
    let monotone = DEFAULT_FILTERS
        .iter()
        .filter(|&&k| {
            acc(MaskName::Baseline, k) <= acc(MaskName::BaselineDyadic, k)
                && acc(MaskName::BaselineDyadic, k) <= acc(MaskName::BaselineDyadicTriadic, k)
        })
        .count();
    let gain = DEFAULT_FILTERS
        .iter()
        .map(|&k| acc(MaskName::BaselineDyadic, k) - acc(MaskName::Baseline, k))
        .fold(f64::INFINITY, f64::min);
    let dyadic_only = DEFAULT_FILTERS
        .iter()
        .map(|&k| acc(MaskName::DyadicOnly, k))
        .fold(f64::INFINITY, f64::min);
    println!(
        "monotone rows {monotone}/3, min dyadic gain {gain:.3}, min dyadic-only {dyadic_only:.3}"
    );

    let (xs, ys) = matrix.labeled(None);
    let triadic = FeatureMask::from_range(TRIAD_START..N_SLOTS);
    if let Ok(r) = cross_validate(
        &learner,
        &xs,
        &ys,
        triadic,
        &CvConfig {
            seed,
            ..CvConfig::default()
        },
        None,
    ) {
        println!("triadic-only accuracy {:.3}", r.mean.accuracy);
    }
    let mut single: Vec<(f64, &str)> = (0..N_SLOTS)
        .filter_map(|slot| {
            let params = BoostParams {
                rounds: 1,
                ..BoostParams::default()
            };
            let m = train(&xs, &ys, FeatureMask::from_slots(&[slot]), &params).ok()?;
            Some((
                evaluate(&m, &xs, &ys).ok()?.accuracy,
                slot_names()[slot].as_str(),
            ))
        })
        .collect();
    single.sort_by(|a, b| b.0.total_cmp(&a.0));
    let top: Vec<String> = single
        .iter()
        .take(6)
        .map(|(a, n)| format!("{n} {a:.3}"))
        .collect();
    println!("single-slot stumps: {}", top.join(", "));
    let model = train(
        &xs,
        &ys,
        MaskName::BaselineDyadicTriadic.mask(),
        &BoostParams::default(),
    )
    .expect("trainable");
    let ranking = model.feature_importance().expect("trained");
    for (name, score) in ranking.iter().take(10) {
        println!("{name:<28}{score:.4}");
    }
    let rank_of = |slot: &str| {
        ranking
            .iter()
            .position(|(n, _)| n == slot)
            .unwrap_or(usize::MAX)
    };
    println!(
        "rank avg_inter_reply_time {}, dyad_A {}, dyad_C {}",
        rank_of("avg_inter_reply_time") + 1,
        rank_of("dyad_A") + 1,
        rank_of("dyad_C") + 1
    );
    println!("elapsed {:.2?}", t0.elapsed());
}
