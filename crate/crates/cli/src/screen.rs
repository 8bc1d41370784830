//! `screen`: one pass over a labeled dataset, scores and ranks out.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::time::Instant;

use anyhow::{Context, Result};
use streamscreen_core::engine::{rank, select_top_k, Engine, Ranking, Sample};
use streamscreen_core::ScoreVector;

use crate::args::ScreenArgs;
use crate::io::{self, Format, SampleReader};
use crate::manifest::Manifest;

pub struct ScreenOutcome {
    pub scores: ScoreVector,
    pub ranking: Ranking,
    pub samples: u64,
    pub classes: usize,
}

/// Streams samples once through a fresh engine and scores them.
pub fn screen_stream<R: BufRead>(
    reader: R,
    format: Format,
    args: &ScreenArgs,
) -> Result<ScreenOutcome> {
    let sparse = args.screener.sparse || format.implies_sparse();
    let mut reader = SampleReader::new(reader, format);
    let first = match reader.next() {
        Some(sample) => sample?,
        None => anyhow::bail!("empty dataset"),
    };
    let mut config = args.screener.to_config().sparse(sparse);
    // Converting dense rows to sparse entries drops trailing zero features,
    // so the first row's arity pins the feature count.
    if sparse {
        if let streamscreen_core::Entries::Dense(values) = &first.entries {
            config = config.feature_count(values.len());
        }
    }
    let minibatch = config.minibatch;
    let mut engine = Engine::new(config)?;
    let mut batch: Vec<Sample> = Vec::with_capacity(minibatch);
    batch.push(io::adapt_entries(first, sparse));
    for sample in reader {
        batch.push(io::adapt_entries(sample?, sparse));
        if batch.len() == minibatch {
            engine.observe_batch(&batch)?;
            batch.clear();
        }
    }
    engine.observe_batch(&batch)?;
    let scores = engine.scores()?;
    let ranking = rank(&scores);
    Ok(ScreenOutcome {
        scores,
        ranking,
        samples: engine.samples_seen(),
        classes: engine.class_labels().len(),
    })
}

/// Writes one row per feature: 1-based index, score, 1-based rank.
pub fn write_scores_csv<W: Write>(out: &mut W, outcome: &ScreenOutcome) -> Result<()> {
    writeln!(out, "feature_index,score,rank")?;
    for (feature, score) in outcome.scores.scores.iter().enumerate() {
        writeln!(
            out,
            "{},{},{}",
            feature + 1,
            score,
            outcome.ranking.rank_of[feature]
        )?;
    }
    Ok(())
}

pub fn run(args: &ScreenArgs) -> Result<()> {
    let started = Instant::now();
    let file = File::open(&args.input)
        .with_context(|| format!("cannot open input {}", args.input.display()))?;
    let outcome = screen_stream(BufReader::new(file), args.format, args)?;

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let scores_path = args.out_dir.join("scores.csv");
    let mut scores_file = File::create(&scores_path)?;
    write_scores_csv(&mut scores_file, &outcome)?;

    let mut selected_path = None;
    if let Some(k) = args.top_k {
        let selected = select_top_k(&outcome.ranking, k)?;
        let path = args.out_dir.join("selected.csv");
        let mut f = File::create(&path)?;
        writeln!(f, "feature_index")?;
        for feature in selected {
            writeln!(f, "{}", feature + 1)?;
        }
        selected_path = Some(path);
    }

    if !outcome.ranking.nan_features.is_empty() {
        eprintln!(
            "warning: {} feature(s) scored NaN and were ranked last",
            outcome.ranking.nan_features.len()
        );
    }

    let mut manifest = Manifest::new("screen");
    manifest.push("input", args.input.display());
    manifest.push("format", format!("{:?}", args.format).to_lowercase());
    manifest.push("method", outcome.scores.method);
    if let Some(e) = args.screener.epsilon {
        manifest.push("epsilon", e);
    }
    if let Some(b) = args.screener.bins {
        manifest.push("bins", b);
    }
    manifest.push("minibatch", args.screener.minibatch);
    if let Some(a) = args.screener.alpha {
        manifest.push("alpha", a);
    }
    manifest.push("sparse", args.screener.sparse);
    manifest.push("samples", outcome.samples);
    manifest.push("features", outcome.scores.len());
    manifest.push("classes", outcome.classes);
    manifest.push("wall_ms", started.elapsed().as_millis());
    manifest.push("scores_csv", scores_path.display());
    if let Some(p) = selected_path {
        manifest.push("selected_csv", p.display());
    }
    manifest.write(&args.out_dir.join("manifest.txt"))?;

    println!(
        "screened {} features over {} samples with {}",
        outcome.scores.len(),
        outcome.samples,
        outcome.scores.method
    );
    Ok(())
}
