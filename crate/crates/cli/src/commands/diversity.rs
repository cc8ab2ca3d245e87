//! `stc diversity-report`: p@K table and common-word percentages.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use stc_core::metrics::{common_word_report, p_at_k};
use stc_core::triples::TaskType;

use super::{compute, format_pattern_set, pattern_set_strings, resolve_filter, tasks_from_flag, usage, CmdResult};
use crate::config::RunConfig;
use crate::output::{csv_field, RunDir};

const DEFAULT_PROBE_WORDS: &str = include_str!("../../assets/probe_words.txt");

#[derive(Args, Debug, Serialize)]
pub struct DiversityArgs {
    /// Run configuration (JSON or TOML)
    #[arg(long)]
    pub config: PathBuf,
    /// si, sg, or both
    #[arg(long, default_value = "both")]
    pub task: String,
    /// Probe word list, one word per line (defaults to a built-in list of
    /// common adjectives)
    #[arg(long)]
    pub probe_words: Option<PathBuf>,
}

#[derive(Serialize)]
struct DiversityReport {
    task: TaskType,
    split: String,
    model: String,
    pattern_set: Vec<String>,
    records: usize,
    p_at_k: BTreeMap<String, f64>,
    /// probe word -> k -> percentage of records with the word in the top k
    common_words: BTreeMap<String, BTreeMap<String, f64>>,
}

pub fn run(args: &DiversityArgs) -> CmdResult {
    let config = RunConfig::load(&args.config).map_err(usage)?;
    let tasks = tasks_from_flag(&args.task).map_err(usage)?;
    let probe_words: Vec<String> = match &args.probe_words {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| usage(anyhow::anyhow!("cannot read {}: {e}", path.display())))?
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect(),
        None => DEFAULT_PROBE_WORDS
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect(),
    };

    let run_dir = RunDir::create(&config.output_dir, "diversity-report", &config).map_err(compute)?;
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
        let test = config.test_pairs().map_err(usage)?;
        let registry2 = config.registry().map_err(usage)?;
        let pattern_ids = config
            .fixed_pattern_ids(task, &registry2)
            .map_err(usage)?
            .ok_or_else(|| {
                usage(anyhow::anyhow!(
                    "diversity-report needs a fixed pattern set; run pattern-search first"
                ))
            })?;
        let filter = if task == TaskType::Sg {
            resolve_filter(&config).map_err(usage)?
        } else {
            None
        };

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

        let mut p_table: BTreeMap<String, f64> = BTreeMap::new();
        let mut p_csv: Vec<String> = Vec::new();
        for &k in &config.ks {
            let value: f64 = p_at_k(&records, k).map_err(compute)?;
            p_table.insert(format!("p@{k}"), value);
            p_csv.push(format!("{task},{k},{value:.4}"));
        }

        let mut common: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        let mut common_csv: Vec<String> = Vec::new();
        for &k in &config.ks {
            let report: BTreeMap<String, f64> =
                common_word_report(&records, &probe_words, k).map_err(compute)?;
            for (word, pct) in report {
                common_csv.push(format!("{task},{k},{},{pct:.2}", csv_field(&word)));
                common.entry(word).or_default().insert(format!("k{k}"), pct);
            }
        }

        println!(
            "{task}  {}:{}  patterns {}",
            model.kind(),
            model.identifier(),
            format_pattern_set(&pattern_ids)
        );
        let mut line = String::from(" ");
        for (name, value) in &p_table {
            line.push_str(&format!(" {name} {value:.4}"));
        }
        println!("{line}");

        let report = DiversityReport {
            task,
            split: "test".to_string(),
            model: format!("{}:{}", model.kind(), model.identifier()),
            pattern_set: pattern_set_strings(&pattern_ids),
            records: records.len(),
            p_at_k: p_table,
            common_words: common,
        };
        run_dir
            .write_json(&format!("diversity_{task}.json"), &report)
            .map_err(compute)?;
        run_dir
            .write_csv(&format!("p_at_k_{task}.csv"), "task,k,p_at_k", &p_csv)
            .map_err(compute)?;
        run_dir
            .write_csv(
                &format!("common_words_{task}.csv"),
                "task,k,word,percentage",
                &common_csv,
            )
            .map_err(compute)?;
    }
    println!("reports under {}", run_dir.path().display());
    Ok(())
}
