use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use controversy_motifs::boost::{
    evaluate, train_traced, AdaBoost, BoostModel, BoostParams, Metrics,
};
use controversy_motifs::dataset::{
    build_feature_matrix, filter_threads, load_dataset, retention, save_follows, save_threads,
    FeatureMatrix,
};
use controversy_motifs::experiment::{
    analyze_subthreads, run_ablation, Protocol, SubthreadScope, DEFAULT_FILTERS,
};
use controversy_motifs::features::slot_names;
use controversy_motifs::synth::{class_counts, generate_synthetic, SynthParams};
use controversy_motifs::validation::{cross_validate, CvConfig};
use controversy_motifs::{Exec, FollowGraph, Label, MaskName, ReplyTree, Strictness};

pub struct Dataset {
    pub threads: PathBuf,
    pub follows: PathBuf,
    pub strictness: Strictness,
    pub exec: Exec,
}

impl Dataset {
    fn load(&self) -> Result<(Vec<ReplyTree>, FollowGraph)> {
        let (trees, fg) = load_dataset(&self.threads, &self.follows, self.strictness, self.exec)?;
        if trees.is_empty() {
            bail!("no threads in {}", self.threads.display());
        }
        println!(
            "loaded {} threads, {} follow arcs",
            trees.len(),
            fg.edge_count()
        );
        Ok((trees, fg))
    }

    /// Labelled feature rows of the threads with more than `k` users.
    fn labelled_matrix(&self, k: usize) -> Result<FeatureMatrix> {
        let (trees, fg) = self.load()?;
        let kept: Vec<&ReplyTree> = filter_threads(&trees, k)
            .into_iter()
            .filter(|t| t.label().is_some())
            .collect();
        if kept.is_empty() {
            bail!("no labelled threads with more than {k} users");
        }
        println!("{} labelled threads with more than {k} users", kept.len());
        Ok(build_feature_matrix(&kept, &fg, self.exec))
    }
}

fn create_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn retention_line(trees: &[ReplyTree]) -> String {
    let parts: Vec<String> = retention(trees, &DEFAULT_FILTERS)
        .into_iter()
        .map(|(k, n)| format!(">{k} users: {n}"))
        .collect();
    format!("retention of {} threads: {}", trees.len(), parts.join(", "))
}

pub fn extract(data: &Dataset, out: &Path) -> Result<()> {
    let (trees, fg) = data.load()?;
    println!("{}", retention_line(&trees));
    let matrix = build_feature_matrix(&trees, &fg, data.exec);
    create_out_dir(out)?;
    let features = out.join("features.csv");
    matrix.write_features_csv(create(&features)?)?;
    let diagnostics = out.join("diagnostics.csv");
    matrix.write_diagnostics_csv(create(&diagnostics)?)?;
    println!(
        "wrote {} rows to {} and {}",
        matrix.len(),
        features.display(),
        diagnostics.display()
    );
    Ok(())
}

pub struct TrainArgs {
    pub model: PathBuf,
    pub report: PathBuf,
    pub mask: MaskName,
    pub rounds: usize,
    pub k: usize,
}

pub fn train(data: &Dataset, args: &TrainArgs) -> Result<()> {
    let matrix = data.labelled_matrix(args.k)?;
    let (xs, ys) = matrix.labeled(None);
    let params = BoostParams {
        rounds: args.rounds,
        exec: data.exec,
    };
    let (model, trace) = train_traced(&xs, &ys, args.mask.mask(), &params)?;
    let metrics = evaluate(&model, &xs, &ys)?;

    let names = slot_names();
    let mut report = String::new();
    let _ = writeln!(
        report,
        "threads: {}, mask: {}, rounds: {}, k: {}",
        xs.len(),
        args.mask,
        args.rounds,
        args.k
    );
    let _ = writeln!(
        report,
        "\nround  slot                        weighted_error       alpha  train_error       bound"
    );
    for t in &trace {
        let _ = writeln!(
            report,
            "{:>5}  {:<26}{:>16.6}{:>12.6}{:>13.4}{:>12.6}",
            t.round + 1,
            names[t.slot],
            t.weighted_error,
            t.alpha,
            t.train_error,
            t.error_bound
        );
    }
    if trace.len() < args.rounds {
        let _ = writeln!(report, "stopped early after {} rounds", trace.len());
    }
    let _ = writeln!(report, "\ntraining accuracy: {:.4}", metrics.accuracy);
    let _ = writeln!(report, "\nfeature importance:");
    for (name, score) in model.feature_importance()? {
        let _ = writeln!(report, "  {name:<26}{score:.6}");
    }

    write(&args.model, &model.to_json())?;
    write(&args.report, &report)?;
    println!(
        "training accuracy {:.4} after {} stumps",
        metrics.accuracy,
        model.stumps().len()
    );
    println!(
        "wrote {} and {}",
        args.model.display(),
        args.report.display()
    );
    Ok(())
}

pub struct EvaluateArgs {
    pub out: PathBuf,
    pub model: Option<PathBuf>,
    pub mask: MaskName,
    pub rounds: usize,
    pub k: Option<usize>,
    pub folds: usize,
    pub seed: u64,
    pub ablation: bool,
}

const METRICS_HEADER: &str = "scope,accuracy,precision,recall,f_measure,tp,fp,tn,fn";

fn metrics_row(scope: &str, m: &Metrics) -> String {
    format!(
        "{scope},{},{},{},{},{},{},{},{}",
        m.accuracy, m.precision, m.recall, m.f_measure, m.tp, m.fp, m.tn, m.fn_
    )
}

fn metrics_text(m: &Metrics) -> String {
    format!(
        "accuracy {:.3}  precision {:.3}  recall {:.3}  F-measure {:.3}  (tp {} fp {} tn {} fn {})",
        m.accuracy, m.precision, m.recall, m.f_measure, m.tp, m.fp, m.tn, m.fn_
    )
}

pub fn evaluate_cmd(data: &Dataset, args: &EvaluateArgs) -> Result<()> {
    create_out_dir(&args.out)?;
    let cv = CvConfig {
        folds: args.folds,
        seed: args.seed,
        exec: data.exec,
    };
    let learner = AdaBoost::new(args.rounds, data.exec);
    let (csv, table) = if args.ablation {
        let (trees, fg) = data.load()?;
        let matrix = build_feature_matrix(&trees, &fg, data.exec);
        let filters = args.k.map_or(DEFAULT_FILTERS.to_vec(), |k| vec![k]);
        let table = run_ablation(
            &learner,
            &matrix,
            &MaskName::ABLATION,
            &filters,
            &Protocol::CrossValidation(cv),
        );
        let mut csv = Vec::new();
        table.write_csv(&mut csv)?;
        println!(
            "{} of {} cells populated",
            table.populated(),
            table.cells.len()
        );
        (
            String::from_utf8(csv).context("metrics are UTF-8")?,
            table.render(),
        )
    } else if let Some(path) = &args.model {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let model = BoostModel::from_json(&text)
            .with_context(|| format!("loading model {}", path.display()))?;
        let matrix = data.labelled_matrix(args.k.unwrap_or(crate::config::DEFAULT_K))?;
        let (xs, ys) = matrix.labeled(None);
        let m = evaluate(&model, &xs, &ys)?;
        (
            format!("{METRICS_HEADER}\n{}\n", metrics_row("model", &m)),
            format!(
                "model {} on {} threads\n{}\n",
                path.display(),
                xs.len(),
                metrics_text(&m)
            ),
        )
    } else {
        let matrix = data.labelled_matrix(args.k.unwrap_or(crate::config::DEFAULT_K))?;
        let (xs, ys) = matrix.labeled(None);
        let report = cross_validate(&learner, &xs, &ys, args.mask.mask(), &cv, None)?;
        let mut csv = format!("{METRICS_HEADER}\n");
        let mut table = format!(
            "{}-fold cross-validation, mask {}, {} threads\n",
            args.folds,
            args.mask,
            xs.len()
        );
        for (i, m) in report.folds.iter().enumerate() {
            csv += &metrics_row(&format!("fold{}", i + 1), m);
            csv.push('\n');
            let _ = writeln!(table, "fold {:>2}: {}", i + 1, metrics_text(m));
        }
        csv += &metrics_row("pooled", &report.pooled);
        csv.push('\n');
        let (mean, std) = (report.mean, report.std);
        let _ = writeln!(
            table,
            "mean:    accuracy {:.3} ± {:.3}  precision {:.3}  recall {:.3}  F-measure {:.3}",
            mean.accuracy, std.accuracy, mean.precision, mean.recall, mean.f_measure
        );
        let _ = writeln!(table, "pooled:  {}", metrics_text(&report.pooled));
        (csv, table)
    };
    let metrics_path = args.out.join("metrics.csv");
    let table_path = args.out.join("table.txt");
    write(&metrics_path, &csv)?;
    write(&table_path, &table)?;
    print!("{table}");
    println!(
        "wrote {} and {}",
        metrics_path.display(),
        table_path.display()
    );
    Ok(())
}

pub struct SubthreadArgs {
    pub model: PathBuf,
    pub k: usize,
    pub scope: SubthreadScope,
    pub out: PathBuf,
}

pub fn subthreads(data: &Dataset, args: &SubthreadArgs) -> Result<()> {
    let text = fs::read_to_string(&args.model)
        .with_context(|| format!("reading {}", args.model.display()))?;
    let model = BoostModel::from_json(&text)
        .with_context(|| format!("loading model {}", args.model.display()))?;
    let (trees, fg) = data.load()?;
    let report = analyze_subthreads(&model, &trees, &fg, args.k, args.scope, data.exec)?;

    create_out_dir(&args.out)?;
    let csv_path = args.out.join("subthreads.csv");
    report.write_csv(create(&csv_path)?)?;

    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "parent threads analysed: {}",
        report.per_tree.len()
    );
    let _ = writeln!(
        summary,
        "qualifying sub-threads (more than {} users): {}",
        args.k,
        report.predictions.len()
    );
    match report.fraction() {
        Some(f) => {
            let _ = writeln!(summary, "predicted controversial: {:.1}%", 100.0 * f);
        }
        None => {
            let _ = writeln!(summary, "note: no qualifying sub-threads");
        }
    }
    for t in report.per_tree.iter().filter(|t| t.qualifying > 0) {
        let _ = writeln!(
            summary,
            "  {}: {}/{} controversial",
            t.thread_id, t.controversial, t.qualifying
        );
    }
    let summary_path = args.out.join("summary.txt");
    write(&summary_path, &summary)?;
    print!(
        "{}",
        summary
            .lines()
            .take(3)
            .map(|l| format!("{l}\n"))
            .collect::<String>()
    );
    println!(
        "wrote {} and {}",
        csv_path.display(),
        summary_path.display()
    );
    Ok(())
}

pub fn synth(params: Option<&Path>, seed: u64, out: &Path, exec: Exec) -> Result<()> {
    let mut p = match params {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<SynthParams>(&text)
                .with_context(|| format!("parsing {}", path.display()))?
        }
        None => SynthParams::preset(seed),
    };
    p.seed = seed;
    let (trees, fg) = generate_synthetic(&p, exec)?;
    create_out_dir(out)?;
    let threads = out.join("threads.jsonl");
    let follows = out.join("follows.tsv");
    save_threads(&threads, &trees)?;
    save_follows(&follows, &fg)?;
    let counts = class_counts(&trees);
    let count = |l| counts.get(&Some(l)).copied().unwrap_or(0);
    println!(
        "generated {} threads ({} controversial, {} non-controversial), {} follow arcs",
        trees.len(),
        count(Label::Controversial),
        count(Label::NonControversial),
        fg.edge_count()
    );
    println!("{}", retention_line(&trees));
    println!("wrote {} and {}", threads.display(), follows.display());
    Ok(())
}
