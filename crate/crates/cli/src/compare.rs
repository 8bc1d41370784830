//! `compare`: the five online-vs-offline table families over epsilon and
//! minibatch grids. The dataset is held in memory so the exact offline
//! reference can bin and score it in batch.

use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use streamscreen_core::bincount::Method;
use streamscreen_core::engine::{rank, Engine, Sample, ScreenerConfig};
use streamscreen_core::oracle::{
    misrank_ratio, offline_score, offline_table, score_diff_ratio, DenseDataset,
};
use streamscreen_core::{Entries, ScoreVector};

use crate::args::CompareArgs;
use crate::io::SampleReader;
use crate::manifest::Manifest;

const BIN_METHODS: [Method; 3] = [Method::ChiSquare, Method::Gini, Method::MutualInfo];

fn load(args: &CompareArgs) -> Result<(Vec<Sample>, DenseDataset, bool)> {
    let sparse = args.sparse || args.format.implies_sparse();
    let file = File::open(&args.input)
        .with_context(|| format!("cannot open input {}", args.input.display()))?;
    let samples: Result<Vec<Sample>, _> = SampleReader::new(BufReader::new(file), args.format)
        .map(|s| s.map(|sample| crate::io::adapt_entries(sample, sparse)))
        .collect();
    let samples = samples?;
    if samples.is_empty() {
        bail!("empty dataset: {}", args.input.display());
    }

    // Densify for the offline reference; labels map to class ids in
    // first-seen order.
    let p = samples
        .iter()
        .map(|s| match &s.entries {
            Entries::Dense(v) => v.len(),
            Entries::Sparse(pairs) => pairs.last().map_or(0, |&(i, _)| i + 1),
        })
        .max()
        .unwrap_or(0);
    let mut labels_seen: Vec<String> = Vec::new();
    let mut rows = Vec::with_capacity(samples.len());
    let mut labels = Vec::with_capacity(samples.len());
    for s in &samples {
        let class = match labels_seen.iter().position(|l| l == &s.label) {
            Some(c) => c,
            None => {
                labels_seen.push(s.label.clone());
                labels_seen.len() - 1
            }
        };
        labels.push(class);
        let mut row = vec![0.0; p];
        match &s.entries {
            Entries::Dense(v) => row[..v.len()].copy_from_slice(v),
            Entries::Sparse(pairs) => {
                for &(i, v) in pairs {
                    row[i] = v;
                }
            }
        }
        rows.push(row);
    }
    Ok((samples, DenseDataset::from_rows(&rows, labels)?, sparse))
}

fn run_engine(
    samples: &[Sample],
    method: Method,
    epsilon: f64,
    bins: usize,
    minibatch: usize,
    sparse: bool,
) -> Result<Engine> {
    let config = ScreenerConfig::new(method)
        .epsilon(epsilon)
        .k_bins(bins)
        .minibatch(minibatch)
        .sparse(sparse);
    let mut engine = Engine::new(config)?;
    for chunk in samples.chunks(minibatch) {
        engine.observe_batch(chunk)?;
    }
    Ok(engine)
}

fn timed_online(
    samples: &[Sample],
    method: Method,
    epsilon: f64,
    bins: usize,
    minibatch: usize,
    sparse: bool,
) -> Result<(u128, ScoreVector)> {
    let started = Instant::now();
    let engine = run_engine(samples, method, epsilon, bins, minibatch, sparse)?;
    let scores = engine.scores()?;
    Ok((started.elapsed().as_millis(), scores))
}

fn write_lines(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut f = File::create(path)?;
    writeln!(f, "{header}")?;
    for row in rows {
        writeln!(f, "{row}")?;
    }
    Ok(())
}

pub fn run(args: &CompareArgs) -> Result<()> {
    let (samples, dataset, sparse) = load(args)?;
    fs::create_dir_all(&args.out_dir)?;

    let offline_start = Instant::now();
    let mut offline_scores = Vec::new();
    for method in BIN_METHODS {
        offline_scores.push(offline_score(&dataset, method, args.bins)?);
    }
    let offline_ms = offline_start.elapsed().as_millis();
    let offline_tables: Vec<_> = (0..dataset.p())
        .map(|j| {
            offline_table(
                &dataset.columns[j],
                &dataset.labels,
                dataset.n_classes,
                args.bins,
            )
        })
        .collect::<streamscreen_core::Result<_>>()?;

    // Table 1: runtime vs minibatch at fixed epsilon.
    let mut rows = Vec::new();
    for &mb in &args.minibatch_grid {
        let (online_ms, _) = timed_online(
            &samples,
            Method::MutualInfo,
            args.epsilon,
            args.bins,
            mb.max(1),
            sparse,
        )?;
        rows.push(format!("{mb},{online_ms},{offline_ms}"));
    }
    write_lines(
        &args.out_dir.join("runtime_vs_minibatch.csv"),
        "minibatch,online_ms,offline_ms",
        &rows,
    )?;

    // Tables 2-5 share one engine sweep over the epsilon grid.
    let mut runtime_rows = Vec::new();
    let mut count_rows = Vec::new();
    let mut score_rows = Vec::new();
    let mut misrank_rows = Vec::new();
    for &eps in &args.epsilon_grid {
        let mut per_method_dr = Vec::new();
        let mut per_method_misrank = Vec::new();
        let mut online_ms_total = 0u128;
        let mut count_diff = 0.0;
        let mut cells = 0usize;
        for (i, &method) in BIN_METHODS.iter().enumerate() {
            let (ms, online) =
                timed_online(&samples, method, eps, args.bins, args.minibatch, sparse)?;
            online_ms_total += ms;
            per_method_dr.push(score_diff_ratio(&online, &offline_scores[i])?);
            per_method_misrank.push(misrank_ratio(
                &rank(&online),
                &rank(&offline_scores[i]),
                0.1,
            )?);
            if i == 0 {
                let engine = run_engine(&samples, method, eps, args.bins, args.minibatch, sparse)?;
                for (online_t, offline_t) in engine.bin_tables()?.iter().zip(&offline_tables) {
                    for (row_on, row_off) in online_t.joint.iter().zip(&offline_t.joint) {
                        for (a, b) in row_on.iter().zip(row_off) {
                            count_diff += (a - b).abs();
                            cells += 1;
                        }
                    }
                }
            }
        }
        runtime_rows.push(format!(
            "{eps},{},{offline_ms}",
            online_ms_total / BIN_METHODS.len() as u128
        ));
        count_rows.push(format!("{eps},{}", count_diff / cells.max(1) as f64));
        score_rows.push(format!(
            "{eps},{},{},{}",
            per_method_dr[0], per_method_dr[1], per_method_dr[2]
        ));
        misrank_rows.push(format!(
            "{eps},{},{},{}",
            per_method_misrank[0], per_method_misrank[1], per_method_misrank[2]
        ));
    }
    write_lines(
        &args.out_dir.join("runtime_vs_epsilon.csv"),
        "epsilon,online_ms,offline_ms",
        &runtime_rows,
    )?;
    write_lines(
        &args.out_dir.join("count_diff_vs_epsilon.csv"),
        "epsilon,avg_count_diff_per_feature_per_bin",
        &count_rows,
    )?;
    write_lines(
        &args.out_dir.join("score_diff_vs_epsilon.csv"),
        "epsilon,chi_square,gini,mutual_info",
        &score_rows,
    )?;
    write_lines(
        &args.out_dir.join("misrank_vs_epsilon.csv"),
        "epsilon,chi_square,gini,mutual_info",
        &misrank_rows,
    )?;

    let mut manifest = Manifest::new("compare");
    manifest.push("input", args.input.display());
    manifest.push("samples", dataset.n());
    manifest.push("features", dataset.p());
    manifest.push("classes", dataset.n_classes);
    manifest.push("bins", args.bins);
    manifest.push(
        "epsilon_grid",
        args.epsilon_grid
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    manifest.push(
        "minibatch_grid",
        args.minibatch_grid
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    manifest.push("offline_ms", offline_ms);
    manifest.write(&args.out_dir.join("manifest.txt"))?;

    println!(
        "compared {} features x {} samples over {} epsilon values",
        dataset.p(),
        dataset.n(),
        args.epsilon_grid.len()
    );
    Ok(())
}
