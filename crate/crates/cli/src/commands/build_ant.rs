//! `stc build-ant-dataset`: masked-sentence training data from a parsed
//! corpus.

use std::io::BufRead;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

use stc_core::ant::{build_ant_dataset, ConlluReader, ParsedSentence};

use super::{compute, usage, CmdResult};
use crate::output::RunDir;

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    /// CoNLL-U dependency parses
    Conllu,
    /// One JSON object per line: {"tokens": [...], "amods": [{"adjective": i, "noun": j}]}
    Jsonl,
}

#[derive(Args, Debug, Serialize)]
pub struct BuildAntArgs {
    /// Dependency-parsed corpus file
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = CorpusFormat::Conllu)]
    pub format: CorpusFormat,
    /// Per-word mask cap
    #[arg(long, default_value_t = 5)]
    pub cap: usize,
    /// Directory for the run output
    #[arg(long)]
    pub output_dir: PathBuf,
}

fn jsonl_sentences(
    path: &PathBuf,
) -> std::io::Result<impl Iterator<Item = Result<ParsedSentence, String>>> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    Ok(reader.lines().filter_map(|line| match line {
        Ok(line) if line.trim().is_empty() => None,
        Ok(line) => Some(serde_json::from_str::<ParsedSentence>(&line).map_err(|e| e.to_string())),
        Err(e) => Some(Err(format!("read error: {e}"))),
    }))
}

pub fn run(args: &BuildAntArgs) -> CmdResult {
    if !args.corpus.exists() {
        return Err(usage(anyhow::anyhow!(
            "corpus {} does not exist",
            args.corpus.display()
        )));
    }
    eprintln!("building masked dataset from {}", args.corpus.display());
    let (dataset, report) = match args.format {
        CorpusFormat::Conllu => {
            let reader = ConlluReader::open(&args.corpus).map_err(usage)?;
            build_ant_dataset(reader, args.cap).map_err(compute)?
        }
        CorpusFormat::Jsonl => {
            let sentences = jsonl_sentences(&args.corpus).map_err(compute)?;
            build_ant_dataset(sentences, args.cap).map_err(compute)?
        }
    };

    let run_dir = RunDir::create(&args.output_dir, "build-ant-dataset", args).map_err(compute)?;
    let dataset_path = run_dir.path().join("dataset.jsonl");
    let mut file = std::fs::File::create(&dataset_path).map_err(compute)?;
    dataset.write_jsonl(&mut file).map_err(compute)?;
    run_dir.write_json("stats.json", dataset.stats()).map_err(compute)?;
    run_dir
        .write_text("skip_report.txt", &report.to_string())
        .map_err(compute)?;

    println!(
        "kept {} examples ({} noun-masked, {} adjective-masked) out of {} sentences",
        dataset.len(),
        dataset.stats().noun_masked,
        dataset.stats().adjective_masked,
        report.seen
    );
    println!("{report}");
    println!("dataset: {}", dataset_path.display());
    Ok(())
}
