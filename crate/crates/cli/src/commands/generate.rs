//! `generate`: train the n-gram language model on a plain-text corpus,
//! generate from two-sentence corpus contexts with and without anchoring,
//! and report perplexity plus anchor-hit counts per condition.

use super::prepare_out;
use crate::config::{write_echo, RunConfig};
use braindecode::data::load_dataset;
use braindecode::eval::{render_table, write_lines};
use braindecode::gen::{
    anchor_hit_metrics, perplexity, run_generations, select_contexts, train_ngram, AnchorSet,
    GenConfig, GenerationRecord,
};
use braindecode::{Error, Result};

const NEIGHBORS: usize = 10;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let corpus_path = cfg.paths.corpus.as_ref().ok_or_else(|| {
        Error::Config("generate needs a corpus (--corpus or paths.corpus)".to_string())
    })?;
    if cfg.gen.anchors.is_empty() {
        return Err(Error::Config(
            "generate needs anchor words (gen.anchors = word1,word2,...)".to_string(),
        ));
    }
    if cfg.gen.context_count == 0 {
        return Err(Error::Config("gen.context_count must be at least 1".to_string()));
    }

    let corpus = std::fs::read_to_string(corpus_path)?;
    // Only the embedding table is used here; scans stay untouched.
    let dataset = load_dataset(&cfg.paths.data)?;
    let embeddings = &dataset.embeddings;
    for word in &cfg.gen.anchors {
        if !embeddings.contains(word) && !embeddings.contains(&word.to_lowercase()) {
            return Err(Error::Lookup(format!(
                "anchor word '{word}' has no embedding in {}",
                cfg.paths.data.display()
            )));
        }
    }

    let lm = train_ngram(&corpus, cfg.gen.order, cfg.gen.vocab_cap)?;
    let contexts = select_contexts(&corpus);
    if contexts.is_empty() {
        return Err(Error::Data(
            "the corpus yields no usable contexts (two consecutive sentences without \
             mid-sentence capitalized tokens)"
                .to_string(),
        ));
    }
    let anchor_set = AnchorSet {
        words: cfg.gen.anchors.clone(),
        strength: cfg.gen.anchor_strength,
        use_distance: cfg.gen.use_distance,
    };

    let mut anchored: Vec<GenerationRecord> = Vec::new();
    let mut unanchored: Vec<GenerationRecord> = Vec::new();
    let mut report: Vec<String> = Vec::new();
    for (index, context) in contexts.iter().take(cfg.gen.context_count).enumerate() {
        // Each context gets its own seed so runs stay independent.
        let ctx_cfg = GenConfig {
            seed: cfg.gen.cfg.seed ^ index as u64,
            ..cfg.gen.cfg.clone()
        };
        let with = run_generations(&lm, context, Some((&anchor_set, embeddings)), &ctx_cfg)?;
        let without = run_generations(&lm, context, None, &ctx_cfg)?;
        describe_records(&mut report, index, "anchored", &with);
        describe_records(&mut report, index, "unanchored", &without);
        anchored.extend(with);
        unanchored.extend(without);
    }

    let columns = ["perplexity", "word_count", "related_count"];
    let mut rows = Vec::new();
    for (name, records) in [("anchored", &anchored), ("unanchored", &unanchored)] {
        let ppl = perplexity(records)?;
        for word in &cfg.gen.anchors {
            let (word_count, related_count) =
                anchor_hit_metrics(records, word, embeddings, NEIGHBORS)?;
            rows.push((format!("{name}:{word}"), vec![ppl, word_count, related_count]));
        }
    }
    let table = render_table(&columns, &rows);

    let out = prepare_out(cfg)?;
    write_lines(&out.join("generations.txt"), &report)?;
    std::fs::write(out.join("summary.tsv"), &table)?;
    write_echo(&out, cfg)?;
    println!(
        "{} runs per condition over {} context(s), {} tokens each:",
        anchored.len(),
        cfg.gen.context_count.min(contexts.len()),
        cfg.gen.cfg.tokens_to_generate
    );
    print!("{table}");
    Ok(())
}

fn describe_anchors(record: &GenerationRecord) -> String {
    match &record.anchors {
        None => "none".to_string(),
        Some(set) => format!(
            "{} strength={} mode={}",
            set.words.join(","),
            set.strength,
            if set.use_distance { "distance" } else { "similarity" }
        ),
    }
}

fn describe_records(
    report: &mut Vec<String>,
    context_index: usize,
    condition: &str,
    records: &[GenerationRecord],
) {
    for (run, record) in records.iter().enumerate() {
        report.push(format!("# context {context_index} {condition} run {run}"));
        report.push(format!("context: {}", record.context.join(" ")));
        report.push(format!("anchors: {}", describe_anchors(record)));
        report.push(format!("tokens: {}", record.generated.join(" ")));
        report.push(format!(
            "probabilities: {}",
            record
                .probabilities
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        ));
        report.push(String::new());
    }
}
