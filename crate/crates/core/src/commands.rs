//! The `evolve`, `spectrum` and `overlap` commands.
//!
//! Each command computes everything in memory first and only then creates
//! the output directory and writes its files, so a failed run leaves nothing
//! behind.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{ExperimentConfig, RunMeta};
use crate::diagnostics::{ground_state_census, half_filling_r};
use crate::ensemble::{run_ensemble, EnsembleResult, Observable};
use crate::error::{Error, Result};

/// Version string captured at build time.
pub const GIT_DESCRIBE: &str = env!("QPME_GIT_DESCRIBE");

/// Name of the JSON sidecar written next to the results.
pub const SIDECAR: &str = "run.json";

/// A file to be written: name relative to the output directory and contents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// Lossless decimal form of a double (17 significant digits).
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn sidecar(config: &ExperimentConfig, command: &str, started: Instant) -> OutputFile {
    let mut resolved = config.clone();
    resolved.meta = Some(RunMeta {
        command: command.to_string(),
        git_describe: GIT_DESCRIBE.to_string(),
        wall_time_s: started.elapsed().as_secs_f64(),
        master_seed: config.ensemble.master_seed,
    });
    let mut contents = resolved.to_json();
    contents.push('\n');
    OutputFile {
        name: SIDECAR.to_string(),
        contents,
    }
}

fn scalar_csv(result: &EnsembleResult, protocol: &str, obs: Observable) -> Result<String> {
    let s = result.series(protocol, obs)?;
    Ok(csv(
        "time,mean,stderr,n",
        (0..s.len()).map(|t| {
            vec![
                format_number(s.times[t]),
                format_number(s.mean[t]),
                format_number(s.stderr[t]),
                s.n_realizations.to_string(),
            ]
        }),
    ))
}

fn pq_csv(result: &EnsembleResult, protocol: &str) -> Result<String> {
    let labels = result.spec.component_labels(Observable::Pq);
    let series = (0..labels.len())
        .map(|c| result.component_series(protocol, Observable::Pq, c))
        .collect::<Result<Vec<_>>>()?;
    let times = &result.spec.grid;
    let mut rows = Vec::with_capacity(times.len() * labels.len());
    for t in 0..times.len() {
        for (label, s) in labels.iter().zip(&series) {
            rows.push(vec![
                format_number(times[t]),
                label.clone(),
                format_number(s.mean[t]),
                format_number(s.stderr[t]),
                s.n_realizations.to_string(),
            ]);
        }
    }
    Ok(csv("time,Q,mean,stderr,n", rows))
}

/// Weight and bin-center series of an overlap histogram, bin by bin.
fn pe_series(
    result: &EnsembleResult,
    protocol: &str,
) -> Result<Vec<(crate::ensemble::EnsembleSeries, crate::ensemble::EnsembleSeries)>> {
    let bins = result.spec.pe_bins;
    (0..bins)
        .map(|b| {
            Ok((
                result.component_series(protocol, Observable::Pe, b)?,
                result.component_series(protocol, Observable::Pe, bins + b)?,
            ))
        })
        .collect()
}

fn pe_csv(result: &EnsembleResult, protocol: &str) -> Result<String> {
    let series = pe_series(result, protocol)?;
    let times = &result.spec.grid;
    let mut rows = Vec::new();
    for t in 0..times.len() {
        for (b, (w, c)) in series.iter().enumerate() {
            rows.push(vec![
                format_number(times[t]),
                b.to_string(),
                format_number(c.mean[t]),
                format_number(w.mean[t]),
                format_number(w.stderr[t]),
                w.n_realizations.to_string(),
            ]);
        }
    }
    Ok(csv("time,bin,bin_center,mean,stderr,n", rows))
}

/// Results of `evolve`: `{observable}_{protocol}.csv` per pair plus the
/// sidecar.
pub fn evolve_outputs(config: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let started = Instant::now();
    let spec = config.ensemble_spec()?;
    let result = run_ensemble(&spec)?;
    let mut files = Vec::new();
    for protocol in &spec.protocols {
        for &obs in &spec.observables {
            let contents = match obs {
                Observable::Pq => pq_csv(&result, &protocol.name)?,
                Observable::Pe => pe_csv(&result, &protocol.name)?,
                _ => scalar_csv(&result, &protocol.name, obs)?,
            };
            files.push(OutputFile {
                name: format!("{}_{}.csv", obs.name(), protocol.name),
                contents,
            });
        }
    }
    files.push(sidecar(config, "evolve", started));
    Ok(files)
}

/// Results of `spectrum`: half-filling level statistics and the
/// ground-state charge census.
pub fn spectrum_outputs(config: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let started = Instant::now();
    let params = config.spectrum_params()?;
    let n = config.ensemble.n_realizations;
    let seed = config.ensemble.master_seed;
    let stats = half_filling_r(&params, n, seed)?;
    let census = ground_state_census(n, seed, &params)?;
    let mut r_stats = serde_json::to_string_pretty(&stats)
        .map_err(|e| Error::numerical(format!("cannot serialize level statistics: {e}")))?;
    r_stats.push('\n');
    let census_csv = csv(
        "Q,N_Q",
        census
            .counts
            .iter()
            .map(|&(q, count)| vec![q.to_string(), count.to_string()]),
    );
    Ok(vec![
        OutputFile {
            name: "r_stats.json".into(),
            contents: r_stats,
        },
        OutputFile {
            name: "census.csv".into(),
            contents: census_csv,
        },
        sidecar(config, "spectrum", started),
    ])
}

/// Results of `overlap`: eigenstate-overlap histograms of the initial state
/// against the symmetric and asymmetric Hamiltonians.
pub fn overlap_outputs(config: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let started = Instant::now();
    let spec = config.overlap_spec()?;
    let result = run_ensemble(&spec)?;
    let mut files = Vec::new();
    for (protocol, name) in [("sym", "pe_sym.csv"), ("asym", "pe_asym.csv")] {
        let rows = pe_series(&result, protocol)?
            .into_iter()
            .map(|(w, c)| {
                vec![
                    format_number(c.mean[0]),
                    format_number(w.mean[0]),
                    format_number(w.stderr[0]),
                ]
            });
        files.push(OutputFile {
            name: name.into(),
            contents: csv("bin_center,weight_mean,weight_stderr", rows),
        });
    }
    files.push(sidecar(config, "overlap", started));
    Ok(files)
}

/// Creates `dir` and writes every file into it.
pub fn write_outputs(dir: &Path, files: &[OutputFile]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    files
        .iter()
        .map(|f| {
            let path = dir.join(&f.name);
            std::fs::write(&path, &f.contents)?;
            Ok(path)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Evolve,
    Spectrum,
    Overlap,
}

/// Loads the config, runs `command` and writes the results to `out` (or
/// the config's output directory). Returns the written paths.
pub fn run_command(command: Command, config_path: &Path, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let mut config = ExperimentConfig::load(config_path)?;
    if let Some(dir) = out {
        config.output.directory = dir.to_path_buf();
    }
    let files = match command {
        Command::Evolve => evolve_outputs(&config)?,
        Command::Spectrum => spectrum_outputs(&config)?,
        Command::Overlap => overlap_outputs(&config)?,
    };
    write_outputs(&config.output.directory, &files)
}

/// One-line summary of the written files.
pub fn describe_outputs(paths: &[PathBuf]) -> String {
    let mut s = format!("wrote {} files", paths.len());
    if let Some(dir) = paths.first().and_then(|p| p.parent()) {
        let _ = write!(s, " to {}", dir.display());
    }
    s
}
