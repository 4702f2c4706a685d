//! Size and label statistics for one or more corpora.

use std::path::PathBuf;

use clap::Args;

use exide_core::corpus::{corpus_stats, load_corpus, CorpusStats};
use exide_core::graph::DependencyKind;
use exide_core::rule::LogicalJudgement;

use crate::error::CliError;

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// Corpus file; repeat to sum several corpora into one count
    #[arg(long = "corpus", value_name = "FILE", required = true)]
    pub corpora: Vec<PathBuf>,
    /// Emit the counts as JSON instead of the readable listing
    #[arg(long)]
    pub json: bool,
}

pub fn exec(args: &StatsArgs) -> Result<(), CliError> {
    let mut total = CorpusStats::default();
    for path in &args.corpora {
        let documents = load_corpus(path)?;
        total = total + corpus_stats(&documents);
    }

    if args.json {
        let mut out =
            serde_json::to_string_pretty(&total).expect("corpus stats serialize");
        out.push('\n');
        print!("{out}");
        return Ok(());
    }

    println!("texts:     {}", total.texts);
    println!("sentences: {}", total.sentences);
    println!("rules:     {}", total.rules);
    println!("tokens:    {}", total.tokens);
    println!("judgements:");
    for judgement in LogicalJudgement::ALL {
        println!("  {:<26} {}", judgement.to_string(), total.judgement_count(judgement));
    }
    println!("dependencies:");
    for kind in [
        DependencyKind::Sequential,
        DependencyKind::Conditional,
        DependencyKind::Parallel,
    ] {
        println!("  {:<26} {}", kind.as_str(), total.dependency_count(kind));
    }
    Ok(())
}
