//! `stc pattern-search`: evaluate every pattern subset on the train split.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use stc_core::completion::{pattern_search, SearchOptions, SearchReport};
use stc_core::metrics::Objective;
use stc_core::triples::TaskType;

use super::{compute, tasks_from_flag, usage, CmdResult};
use crate::config::{PatternChoice, RunConfig};
use crate::output::RunDir;

#[derive(Args, Debug, Serialize)]
pub struct PatternSearchArgs {
    /// Run configuration (JSON or TOML)
    #[arg(long)]
    pub config: PathBuf,
    /// si, sg, or both
    #[arg(long, default_value = "both")]
    pub task: String,
    /// Ranking objective (`mrr` or `r@K`); defaults to the config's search
    /// objective or mrr
    #[arg(long)]
    pub objective: Option<String>,
}

/// One search run over the train split.
pub fn search_for_task(
    config: &RunConfig,
    task: TaskType,
    objective: Objective,
) -> anyhow::Result<SearchReport<f64>> {
    let registry = config.registry()?;
    let vocab = config.vocabulary(task)?;
    let model = config.model.resolve()?;
    let synonyms = config.synonym_provider()?;
    let train = config.train_pairs()?;
    let options = SearchOptions {
        objective,
        aux_ks: &config.ks,
        synonyms: &synonyms,
        split_label: "train",
    };
    Ok(pattern_search::<f64>(
        &model, &registry, &train, task, &vocab, &options,
    )?)
}

/// Appendix-style text table of the ranked subsets.
pub fn format_report_table(report: &SearchReport<f64>) -> String {
    let mut ks: Vec<usize> = report
        .ranked_subsets
        .first()
        .map(|s| {
            s.aux
                .keys()
                .filter_map(|k| k.strip_prefix("r@").and_then(|n| n.parse().ok()))
                .collect()
        })
        .unwrap_or_default();
    ks.sort_unstable();

    let mut out = String::new();
    out.push_str(&format!(
        "task: {}  objective: {}  split: {}  subsets: {}\n",
        report.task, report.objective, report.split, report.subset_count
    ));
    let mut header = format!("{:<42} {:>8}", "subset", "mrr");
    for k in &ks {
        header.push_str(&format!(" {:>8}", format!("r@{k}")));
    }
    out.push_str(&header);
    out.push('\n');
    for subset in &report.ranked_subsets {
        let ids: Vec<&str> = subset.patterns.iter().map(|p| p.as_str()).collect();
        let mut row = format!(
            "{:<42} {:>8.3}",
            format!("{{{}}}", ids.join(", ")),
            subset.aux.get("mrr").copied().unwrap_or(f64::NAN)
        );
        for k in &ks {
            match subset.aux.get(&format!("r@{k}")) {
                Some(v) => row.push_str(&format!(" {v:>8.3}")),
                None => row.push_str(&format!(" {:>8}", "-")),
            }
        }
        out.push_str(&row);
        out.push('\n');
    }
    out
}

pub fn run(args: &PatternSearchArgs) -> CmdResult {
    let config = RunConfig::load(&args.config).map_err(usage)?;
    let tasks = tasks_from_flag(&args.task).map_err(usage)?;
    let objective_text = args
        .objective
        .clone()
        .or(match &config.patterns {
            PatternChoice::Search { objective } => Some(objective.clone()),
            _ => None,
        })
        .unwrap_or_else(|| "mrr".to_string());
    let objective: Objective = objective_text.parse().map_err(usage)?;

    let run_dir = RunDir::create(&config.output_dir, "pattern-search", &config).map_err(compute)?;
    for task in tasks {
        let report = search_for_task(&config, task, objective).map_err(compute)?;
        let best: Vec<&str> = report.best.iter().map(|p| p.as_str()).collect();
        println!(
            "{task}: best subset {{{}}} with {} {:.4} over {} subsets",
            best.join(", "),
            report.objective,
            report.ranked_subsets[0].objective_value,
            report.subset_count
        );
        run_dir
            .write_json(&format!("search_report_{task}.json"), &report)
            .map_err(compute)?;
        run_dir
            .write_text(&format!("search_table_{task}.txt"), &format_report_table(&report))
            .map_err(compute)?;
    }
    println!("reports under {}", run_dir.path().display());
    Ok(())
}
