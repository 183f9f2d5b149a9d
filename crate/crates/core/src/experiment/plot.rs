//! Columnar plot data assembled from the trajectories of a batch run.

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use super::batch::{read_summary_index, SUMMARY_FILE};
use super::csvio;
use crate::simkernel::Sample;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("no trajectories to plot")]
    Empty,
    #[error("time grid of `{name}` differs from `{reference}`")]
    GridMismatch { name: String, reference: String },
    #[error("unknown figure `{0}` (expected sliding, gain, control or escape)")]
    UnknownFigure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// `s` of every run.
    Sliding,
    /// Recorded gain of every run.
    Gain,
    /// Applied input of every run.
    Control,
    /// `s` and applied `u` of every run plus the disturbance.
    Escape,
}

impl FromStr for Figure {
    type Err = PlotError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sliding" => Ok(Self::Sliding),
            "gain" => Ok(Self::Gain),
            "control" => Ok(Self::Control),
            "escape" => Ok(Self::Escape),
            other => Err(PlotError::UnknownFigure(other.to_string())),
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sliding => "sliding",
            Self::Gain => "gain",
            Self::Control => "control",
            Self::Escape => "escape",
        })
    }
}

type Column = (String, fn(&Sample) -> f64);

fn columns(figure: Figure, names: &[String]) -> Vec<Column> {
    let per_run = |prefix: &str, f: fn(&Sample) -> f64| -> Vec<Column> {
        names.iter().map(|n| (format!("{prefix}_{n}"), f)).collect()
    };
    match figure {
        Figure::Sliding => per_run("s", |x| x.s),
        Figure::Gain => per_run("gain", |x| x.gain),
        Figure::Control => per_run("u", |x| x.u_applied),
        Figure::Escape => {
            let mut cols = per_run("s", |x| x.s);
            cols.extend(per_run("u", |x| x.u_applied));
            cols
        }
    }
}

/// Aligned table `t, <figure columns>...`. Runs must share one time grid;
/// nothing is resampled. The disturbance column of the escape figure comes
/// from the first run.
pub fn plot_table(runs: &[(String, Vec<Sample>)], figure: Figure) -> Result<(Vec<String>, Vec<Vec<f64>>), PlotError> {
    let (ref_name, reference) = runs.first().ok_or(PlotError::Empty)?;
    for (name, samples) in &runs[1..] {
        let same = samples.len() == reference.len()
            && samples.iter().zip(reference).all(|(a, b)| a.t == b.t);
        if !same {
            return Err(PlotError::GridMismatch {
                name: name.clone(),
                reference: ref_name.clone(),
            });
        }
    }
    let names: Vec<String> = runs.iter().map(|(n, _)| n.clone()).collect();
    let cols = columns(figure, &names);
    let mut header = vec!["t".to_string()];
    header.extend(cols.iter().map(|(h, _)| h.clone()));
    if figure == Figure::Escape {
        header.push("d".into());
    }
    let rows = (0..reference.len())
        .map(|k| {
            let mut row = vec![reference[k].t];
            let n_runs = runs.len();
            for (i, (_, f)) in cols.iter().enumerate() {
                row.push(f(&runs[i % n_runs].1[k]));
            }
            if figure == Figure::Escape {
                row.push(reference[k].d);
            }
            row
        })
        .collect();
    Ok((header, rows))
}

/// Read the batch in `dir` (via its summary) and write `figure_<id>.csv`.
pub fn emit_plot_data(dir: &Path, figure: Figure) -> Result<PathBuf, PlotError> {
    let index = read_summary_index(&dir.join(SUMMARY_FILE))?;
    let runs = index
        .into_iter()
        .map(|(name, file)| Ok((name, csvio::read_trajectory(&dir.join(file))?)))
        .collect::<Result<Vec<_>, io::Error>>()?;
    let (header, rows) = plot_table(&runs, figure)?;
    let path = dir.join(format!("figure_{figure}.csv"));
    csvio::write_table(&path, &header, &rows)?;
    Ok(path)
}
