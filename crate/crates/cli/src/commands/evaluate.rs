//! `stc evaluate`: score the test split and emit MRR / R@K rows.

use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use stc_core::metrics::{mrr, r_at_k, MetricReportRow, Objective};
use stc_core::patterns::PatternId;
use stc_core::triples::TaskType;

use super::{compute, format_pattern_set, pattern_set_strings, resolve_filter, tasks_from_flag, usage, CmdResult};
use crate::config::{PatternChoice, RunConfig};
use crate::output::{csv_field, RunDir};

#[derive(Args, Debug, Serialize)]
pub struct EvaluateArgs {
    /// Run configuration (JSON or TOML)
    #[arg(long)]
    pub config: PathBuf,
    /// si, sg, or both
    #[arg(long, default_value = "both")]
    pub task: String,
}

#[derive(Serialize)]
struct EvaluationReport {
    task: TaskType,
    split: String,
    model: String,
    pattern_set: Vec<String>,
    pattern_source: String,
    filter_threshold: Option<f64>,
    synonym_expansion: bool,
    records: usize,
    rows: Vec<MetricReportRow>,
}

/// The pattern set to evaluate with: the configured one, or the winner of a
/// train-split search.
fn resolve_pattern_set(
    config: &RunConfig,
    task: TaskType,
) -> anyhow::Result<(BTreeSet<PatternId>, String)> {
    let registry = config.registry()?;
    match config.fixed_pattern_ids(task, &registry)? {
        Some(ids) => {
            let source = match &config.patterns {
                PatternChoice::All => "all applicable".to_string(),
                _ => "configured".to_string(),
            };
            Ok((ids, source))
        }
        None => {
            let objective_text = match &config.patterns {
                PatternChoice::Search { objective } => objective.clone(),
                _ => unreachable!("fixed_pattern_ids is None only in search mode"),
            };
            let objective: Objective = objective_text
                .parse()
                .map_err(|e| anyhow::anyhow!("bad search objective: {e}"))?;
            let report = super::pattern_search::search_for_task(config, task, objective)?;
            let ids: BTreeSet<PatternId> = report.best.iter().cloned().collect();
            eprintln!(
                "{task}: pattern search selected {} ({} {:.4} on train)",
                format_pattern_set(&ids),
                report.objective,
                report.ranked_subsets[0].objective_value
            );
            Ok((ids, format!("search ({objective_text} on train)")))
        }
    }
}

pub fn run(args: &EvaluateArgs) -> CmdResult {
    let config = RunConfig::load(&args.config).map_err(usage)?;
    let tasks = tasks_from_flag(&args.task).map_err(usage)?;
    let run_dir = RunDir::create(&config.output_dir, "evaluate", &config).map_err(compute)?;

    let mut csv_rows: Vec<String> = Vec::new();
    let max_k = *config.ks.last().expect("validated non-empty");

    for task in tasks {
        let registry = config.registry().map_err(usage)?;
        let vocab = config.vocabulary(task).map_err(usage)?;
        if vocab.len() < max_k {
            return Err(usage(anyhow::anyhow!(
                "{task} vocabulary has {} words but the largest K is {max_k}",
                vocab.len()
            )));
        }
        let model = config.model.resolve().map_err(usage)?;
        let synonyms = config.synonym_provider().map_err(usage)?;
        let test = config.test_pairs().map_err(usage)?;
        let (pattern_ids, pattern_source) =
            resolve_pattern_set(&config, task).map_err(compute)?;
        let filter = if task == TaskType::Sg {
            resolve_filter(&config).map_err(usage)?
        } else {
            None
        };
        if let Some(f) = &filter {
            if f.derived {
                eprintln!("{task}: derived filter threshold {:.4} from train", f.threshold);
            }
        }

        let records = super::run_completions(
            &model,
            &registry,
            &test,
            task,
            &vocab,
            &pattern_ids,
            max_k,
            filter.as_ref(),
        )
        .map_err(compute)?;

        let model_label = format!("{}:{}", model.kind(), model.identifier());
        let mut rows = Vec::new();
        let mrr_value: f64 = mrr(&records, &synonyms).map_err(compute)?;
        rows.push(MetricReportRow {
            metric: "mrr".to_string(),
            k: None,
            value: mrr_value,
            split: "test".to_string(),
            model: model_label.clone(),
            pattern_set: pattern_set_strings(&pattern_ids),
            synonym_expansion: synonyms.expands(),
        });
        for &k in &config.ks {
            let value: f64 = r_at_k(&records, k, &synonyms).map_err(compute)?;
            rows.push(MetricReportRow {
                metric: format!("r@{k}"),
                k: Some(k),
                value,
                split: "test".to_string(),
                model: model_label.clone(),
                pattern_set: pattern_set_strings(&pattern_ids),
                synonym_expansion: synonyms.expands(),
            });
        }

        println!(
            "{task}  {}  patterns {}",
            model_label,
            format_pattern_set(&pattern_ids)
        );
        let mut line = format!("  mrr {mrr_value:.4}");
        for row in rows.iter().skip(1) {
            line.push_str(&format!("  {} {:.4}", row.metric, row.value));
        }
        println!("{line}");

        let method = format!("{model_label}+{}", format_pattern_set(&pattern_ids));
        let mut csv = format!("{},{}", task, csv_field(&method));
        for row in &rows {
            csv.push_str(&format!(",{:.4}", row.value));
        }
        csv_rows.push(csv);

        let report = EvaluationReport {
            task,
            split: "test".to_string(),
            model: model_label,
            pattern_set: pattern_set_strings(&pattern_ids),
            pattern_source,
            filter_threshold: filter.as_ref().map(|f| f.threshold),
            synonym_expansion: synonyms.expands(),
            records: records.len(),
            rows,
        };
        run_dir
            .write_json(&format!("metrics_{task}.json"), &report)
            .map_err(compute)?;
    }

    let mut header = String::from("task,method,mrr");
    for k in &config.ks {
        header.push_str(&format!(",r@{k}"));
    }
    run_dir
        .write_csv("results.csv", &header, &csv_rows)
        .map_err(compute)?;
    println!("reports under {}", run_dir.path().display());
    Ok(())
}
