//! The `smh` subcommands. Each writes its artifacts under the run directory
//! and returns what it wrote; printing summaries is left to the caller.

use crate::config::RunConfig;
use crate::dataset::{load_csv, Dataset, SkippedRow};
use crate::density::{kde_fit, sampling_weight};
use crate::experiment::{run_experiment, ExperimentReport, RelevanceShift};
use crate::graph::Graph;
use crate::metrics::{structural_stats, MeanStd, StructuralStats};
use crate::pipeline::FittedAugmenter;
use crate::reconstruct::{SeedPool, SkippedSample};
use crate::relevance::RelevanceFunction;
use crate::svg::{bar_chart, line_chart, Series};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

pub const DEFAULT_PLOT_POINTS: usize = 201;

/// One line of `synthetic.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRecord {
    pub target: f64,
    /// Row of the seed graph in the loaded dataset.
    pub seed_index: usize,
    pub nodes: usize,
    #[serde(default)]
    pub labels: Vec<String>,
    pub edges: Vec<(usize, usize)>,
}

impl SyntheticRecord {
    pub fn to_graph(&self) -> Result<Graph> {
        let labels = if self.labels.is_empty() {
            vec!["C".to_string(); self.nodes]
        } else {
            self.labels.clone()
        };
        if labels.len() != self.nodes {
            bail!("{} labels for {} nodes", labels.len(), self.nodes);
        }
        Ok(Graph::new(labels, self.edges.iter().copied())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub statistic: String,
    pub original: MeanStd,
    pub synthetic: MeanStd,
    /// `100 · (synthetic - original) / original`; 0 when both means are 0.
    pub delta_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsComparison {
    pub original_graphs: usize,
    pub synthetic_graphs: usize,
    pub rows: Vec<StatRow>,
}

fn delta_pct(original: f64, synthetic: f64) -> f64 {
    if original == synthetic {
        0.0
    } else {
        100.0 * (synthetic - original) / original
    }
}

pub fn compare_stats(original: &StructuralStats, synthetic: &StructuralStats) -> StatsComparison {
    let row = |name: &str, a: MeanStd, b: MeanStd| StatRow {
        statistic: name.to_string(),
        original: a,
        synthetic: b,
        delta_pct: delta_pct(a.mean, b.mean),
    };
    StatsComparison {
        original_graphs: original.graphs,
        synthetic_graphs: synthetic.graphs,
        rows: vec![
            row("nodes", original.nodes, synthetic.nodes),
            row("edges", original.edges, synthetic.edges),
            row("density", original.density, synthetic.density),
        ],
    }
}

impl StatsComparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("statistic,original_mean,original_std,synthetic_mean,synthetic_std,delta_pct\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.statistic, r.original.mean, r.original.std, r.synthetic.mean, r.synthetic.std, r.delta_pct
            );
        }
        out
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<10} {:>22} {:>22} {:>9}\n",
            "statistic",
            format!("original (n={})", self.original_graphs),
            format!("synthetic (n={})", self.synthetic_graphs),
            "delta"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<10} {:>22} {:>22} {:>+8.2}%",
                r.statistic,
                format!("{:.3} ± {:.3}", r.original.mean, r.original.std),
                format!("{:.3} ± {:.3}", r.synthetic.mean, r.synthetic.std),
                r.delta_pct
            );
        }
        out
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn prepare_run_dir(config: &RunConfig) -> Result<PathBuf> {
    let dir = config.run_dir();
    std::fs::create_dir_all(dir.join("plots")).with_context(|| format!("cannot create {}", dir.display()))?;
    write_file(&dir.join("config.toml"), config.to_toml())?;
    Ok(dir)
}

fn load_dataset(config: &RunConfig) -> Result<Dataset> {
    let path = config.dataset_path()?;
    Ok(load_csv(path, &config.smiles_col, &config.target_col)?)
}

fn to_json(value: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct AugmentReport {
    pub config: RunConfig,
    pub dataset: String,
    pub rows: usize,
    pub skipped_rows: Vec<SkippedRow>,
    pub embedding_k: usize,
    pub requested: usize,
    pub generated: usize,
    pub skipped_samples: Vec<SkippedSample>,
    pub relevance_shift: RelevanceShift,
    /// Whole dataset against the synthetic set.
    pub dataset_vs_synthetic: Option<StatsComparison>,
    /// The seed graph of every synthetic sample against the sample.
    pub seeds_vs_synthetic: Option<StatsComparison>,
}

/// Fits the augmenter on the whole dataset and writes `config.toml`,
/// `synthetic.jsonl`, `stats.csv`, `report.json` and
/// `plots/relevance.svg`.
pub fn cmd_augment(config: &RunConfig) -> Result<(PathBuf, AugmentReport)> {
    let dataset = load_dataset(config)?;
    let pool = SeedPool::from_dataset(&dataset)?;
    let augmenter = FittedAugmenter::fit(&pool, &config.smh_settings())?;
    let outcome = augmenter.augment(&pool, &config.augmentation)?;
    for s in &outcome.skipped {
        log::warn!(
            "sample {} (target {:.4}) skipped: {}",
            s.sample_index,
            s.target,
            s.reason
        );
    }

    let dir = prepare_run_dir(config)?;
    let mut jsonl = String::new();
    for s in &outcome.samples {
        let rec = SyntheticRecord {
            target: s.target,
            seed_index: s.seed_graph_index,
            nodes: s.graph.node_count(),
            labels: s.graph.labels().to_vec(),
            edges: s.graph.edges().to_vec(),
        };
        jsonl.push_str(&serde_json::to_string(&rec)?);
        jsonl.push('\n');
    }
    write_file(&dir.join("synthetic.jsonl"), jsonl)?;

    let synthetic_stats = structural_stats(outcome.samples.iter().map(|s| &s.graph)).ok();
    let dataset_stats = structural_stats(dataset.graphs())?;
    let seed_stats = structural_stats(outcome.samples.iter().map(|s| &pool.entries[s.seed_graph_index].graph)).ok();
    let dataset_vs_synthetic = synthetic_stats.as_ref().map(|s| compare_stats(&dataset_stats, s));
    let seeds_vs_synthetic = seed_stats
        .as_ref()
        .zip(synthetic_stats.as_ref())
        .map(|(a, b)| compare_stats(a, b));
    write_file(
        &dir.join("stats.csv"),
        dataset_vs_synthetic.as_ref().map_or_else(
            || "statistic,original_mean,original_std,synthetic_mean,synthetic_std,delta_pct\n".to_string(),
            StatsComparison::to_csv,
        ),
    )?;

    let rel = &augmenter.relevance;
    let share = |ys: &[f64]| {
        if ys.is_empty() {
            0.0
        } else {
            ys.iter().filter(|&&y| rel.eval(y) >= 0.5).count() as f64 / ys.len() as f64
        }
    };
    let synthetic_targets: Vec<f64> = outcome.samples.iter().map(|s| s.target).collect();
    let report = AugmentReport {
        config: config.clone(),
        dataset: dataset.name.clone(),
        rows: dataset.len(),
        skipped_rows: dataset.skipped.clone(),
        embedding_k: augmenter.k,
        requested: outcome.requested,
        generated: outcome.samples.len(),
        skipped_samples: outcome.skipped.clone(),
        relevance_shift: RelevanceShift {
            train: share(&dataset.targets()),
            synthetic: share(&synthetic_targets),
        },
        dataset_vs_synthetic,
        seeds_vs_synthetic,
    };
    write_file(&dir.join("report.json"), to_json(&report)?)?;
    let grid = relevance_grid(rel, &augmenter.density, config.augmentation.eps, DEFAULT_PLOT_POINTS);
    write_file(&dir.join("plots").join("relevance.svg"), relevance_svg(&grid))?;
    Ok((dir, report))
}

/// Runs the cross-validated comparison and writes `config.toml`,
/// `report.json` and `plots/bin_improvement.svg`.
pub fn cmd_evaluate(config: &RunConfig) -> Result<(PathBuf, ExperimentReport)> {
    let dataset = load_dataset(config)?;
    let pool = SeedPool::from_dataset(&dataset)?;
    let report = run_experiment(&dataset, &pool, &config.experiment_config())?;
    let dir = prepare_run_dir(config)?;
    #[derive(Serialize)]
    struct Echoed<'a> {
        config: &'a RunConfig,
        #[serde(flatten)]
        report: &'a ExperimentReport,
    }
    write_file(
        &dir.join("report.json"),
        to_json(&Echoed {
            config,
            report: &report,
        })?,
    )?;
    write_file(
        &dir.join("plots").join("bin_improvement.svg"),
        bin_improvement_svg(&report),
    )?;
    Ok((dir, report))
}

/// Mean over folds of `baseline MSE - SMH MSE` per bin; positive means the
/// augmented model did better.
pub fn bin_improvements(report: &ExperimentReport) -> Vec<(f64, f64, Option<f64>)> {
    let Some(first) = report.folds.first() else {
        return Vec::new();
    };
    (0..first.baseline.bins.len())
        .map(|b| {
            let diffs: Vec<f64> = report
                .folds
                .iter()
                .filter_map(|f| Some(f.baseline.bins[b].mse? - f.smh.bins[b].mse?))
                .collect();
            let bin = &first.baseline.bins[b];
            let mean = (!diffs.is_empty()).then(|| diffs.iter().sum::<f64>() / diffs.len() as f64);
            (bin.lo, bin.hi, mean)
        })
        .collect()
}

fn bin_improvement_svg(report: &ExperimentReport) -> String {
    let bars: Vec<(String, Option<f64>)> = bin_improvements(report)
        .into_iter()
        .map(|(lo, hi, d)| (format!("{lo:.2}..{hi:.2}"), d))
        .collect();
    bar_chart("Per-bin MSE reduction (baseline - SMH)", "MSE reduction", &bars)
}

pub fn experiment_table(report: &ExperimentReport) -> String {
    let mut out = format!(
        "{} ({} rows, {} folds, seed {})\n",
        report.dataset,
        report.rows,
        report.folds.len(),
        report.master_seed
    );
    let _ = writeln!(out, "{:<16} {:>22} {:>22}", "metric", "baseline", "smh");
    let (b, s) = (&report.baseline, &report.smh);
    for (name, x, y) in [
        ("SERA", b.sera, s.sera),
        ("MAE", b.mae, s.mae),
        ("RMSE", b.rmse, s.rmse),
        ("R2", b.r2, s.r2),
        ("lowest-bin MSE", b.lowest_bin_mse, s.lowest_bin_mse),
    ] {
        let _ = writeln!(
            out,
            "{name:<16} {:>22} {:>22}",
            format!("{:.4} ± {:.4}", x.mean, x.std),
            format!("{:.4} ± {:.4}", y.mean, y.std)
        );
    }
    let _ = writeln!(
        out,
        "\n{:<6} {:>12} {:>12} {:>10} {:>10}",
        "fold", "SERA base", "SERA smh", "synthetic", "k"
    );
    for f in &report.folds {
        let _ = writeln!(
            out,
            "{:<6} {:>12.4} {:>12.4} {:>10} {:>10}",
            f.fold, f.baseline.sera, f.smh.sera, f.synthetic_generated, f.embedding_k
        );
    }
    out
}

/// Reads graphs from a `.jsonl`/`.json` file of [`SyntheticRecord`]s or
/// from a SMILES CSV with the configured columns.
pub fn load_graphs(path: &Path, config: &RunConfig) -> Result<Vec<Graph>> {
    if !path.is_file() {
        bail!("file not found: {}", path.display());
    }
    let is_jsonl = matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("jsonl" | "json" | "ndjson")
    );
    if !is_jsonl {
        let ds = load_csv(path, &config.smiles_col, &config.target_col)?;
        return Ok(ds.records.into_iter().map(|r| r.graph).collect());
    }
    let file = std::fs::File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut graphs = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("cannot read {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SyntheticRecord =
            serde_json::from_str(&line).with_context(|| format!("{}:{}: malformed record", path.display(), n + 1))?;
        graphs.push(
            rec.to_graph()
                .with_context(|| format!("{}:{}: invalid graph", path.display(), n + 1))?,
        );
    }
    Ok(graphs)
}

pub fn cmd_stats(original: &Path, synthetic: &Path, config: &RunConfig) -> Result<StatsComparison> {
    let a = load_graphs(original, config)?;
    let b = load_graphs(synthetic, config)?;
    if a.is_empty() {
        bail!("{} contains no graphs", original.display());
    }
    if b.is_empty() {
        bail!("{} contains no graphs", synthetic.display());
    }
    Ok(compare_stats(&structural_stats(&a)?, &structural_stats(&b)?))
}

/// `(y, φ(y), p(y), w(y))` on `points` evenly spaced values from the
/// smallest to the largest training target.
pub fn relevance_grid(
    relevance: &RelevanceFunction,
    density: &crate::density::DensityEstimate,
    eps: f64,
    points: usize,
) -> Vec<[f64; 4]> {
    let (lo, hi) = relevance.domain();
    let points = points.max(2);
    (0..points)
        .map(|i| {
            let y = if i + 1 == points {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (points - 1) as f64
            };
            [
                y,
                relevance.eval(y),
                density.eval(y),
                sampling_weight(relevance, density, y, eps),
            ]
        })
        .collect()
}

fn relevance_svg(grid: &[[f64; 4]]) -> String {
    let col = |c: usize| grid.iter().map(|r| (r[0], r[c])).collect::<Vec<_>>();
    let (phi, p, w) = (col(1), col(2), col(3));
    line_chart(
        "Relevance, density and sampling weight",
        "target",
        "scaled value",
        &[
            Series {
                label: "phi",
                points: &phi,
            },
            Series {
                label: "density",
                points: &p,
            },
            Series {
                label: "weight",
                points: &w,
            },
        ],
        true,
    )
}

/// Writes `relevance.csv` and `plots/relevance.svg` for the whole dataset.
pub fn cmd_relevance_plot(config: &RunConfig, points: usize) -> Result<PathBuf> {
    let dataset = load_dataset(config)?;
    let targets = dataset.targets();
    let relevance = RelevanceFunction::extremes(&targets)?;
    let density = kde_fit(&targets)?;
    let grid = relevance_grid(&relevance, &density, config.augmentation.eps, points);
    let dir = prepare_run_dir(config)?;
    let mut csv = String::from("y,phi,density,weight\n");
    for [y, phi, p, w] in &grid {
        let _ = writeln!(csv, "{y},{phi},{p},{w}");
    }
    let path = dir.join("relevance.csv");
    write_file(&path, csv)?;
    write_file(&dir.join("plots").join("relevance.svg"), relevance_svg(&grid))?;
    Ok(path)
}
