//! Long-format plot data derived from result tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use pmix_core::math::linear_fit;

use crate::output::{num, read_table, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    TvVsN,
    W1VsN,
    H1VsN,
    CovVsN,
    MeanVsN,
    GapVsN,
}

impl PlotKind {
    pub const ALL: [PlotKind; 6] =
        [PlotKind::TvVsN, PlotKind::W1VsN, PlotKind::H1VsN, PlotKind::CovVsN, PlotKind::MeanVsN, PlotKind::GapVsN];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::TvVsN => "tv-vs-n",
            PlotKind::W1VsN => "w1-vs-n",
            PlotKind::H1VsN => "h1-vs-n",
            PlotKind::CovVsN => "cov-vs-n",
            PlotKind::MeanVsN => "mean-vs-n",
            PlotKind::GapVsN => "gap-vs-n",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    fn source(self) -> &'static str {
        match self {
            PlotKind::GapVsN => "depoisson_gap.csv",
            _ => "graph_mixed.csv",
        }
    }

    fn log_log(self) -> bool {
        self != PlotKind::MeanVsN
    }
}

pub const PLOT_COLUMNS: [&str; 8] = ["seed", "version", "x", "y", "series", "se", "slope", "intercept"];

/// Accepts a results directory or the CSV itself.
fn locate(results: &Path, kind: PlotKind) -> PathBuf {
    if results.is_dir() {
        results.join(kind.source())
    } else {
        results.to_path_buf()
    }
}

#[derive(Default)]
struct Series {
    points: Vec<(f64, f64, String)>,
}

fn col(t: &Table, name: &str) -> anyhow::Result<usize> {
    t.column(name).with_context(|| format!("results table {} has no column {name:?}", t.name))
}

fn parse(s: &str) -> anyhow::Result<f64> {
    s.parse().with_context(|| format!("not a number: {s:?}"))
}

/// Rows `(x, y, series, se)`, plus fitted rows `series_fit` carrying the
/// log-log slope and intercept for rate plots.
pub fn plot_data(results: &Path, kind: PlotKind) -> anyhow::Result<Table> {
    let input = read_table(&locate(results, kind))?;
    let mut out = Table::new("plot", &PLOT_COLUMNS);
    let (seed_c, ver_c) = (col(&input, "seed")?, col(&input, "version")?);
    let mut series: BTreeMap<String, Series> = BTreeMap::new();
    let mut meta = None;
    if kind == PlotKind::GapVsN {
        let (n, y, se) = (col(&input, "n")?, col(&input, "gap")?, col(&input, "se_gap")?);
        for r in &input.rows {
            meta.get_or_insert((r[seed_c].clone(), r[ver_c].clone()));
            series.entry("gap".into()).or_default().points.push((parse(&r[n])?, parse(&r[y])?, r[se].clone()));
        }
    } else {
        let (samp, n, pat) = (col(&input, "sampling")?, col(&input, "n")?, col(&input, "pattern")?);
        let (y, se, per_pattern) = match kind {
            PlotKind::TvVsN => (col(&input, "tv")?, col(&input, "se_tv")?, false),
            PlotKind::W1VsN => (col(&input, "w1")?, col(&input, "se_w1")?, false),
            PlotKind::H1VsN => (col(&input, "h1")?, col(&input, "se_h1")?, false),
            PlotKind::CovVsN => (col(&input, "cov_0j")?, col(&input, "se_cov_0j")?, true),
            _ => (col(&input, "mean")?, col(&input, "se_mean")?, true),
        };
        let base = kind.name().trim_end_matches("-vs-n");
        for r in &input.rows {
            meta.get_or_insert((r[seed_c].clone(), r[ver_c].clone()));
            let mut name = base.to_string();
            if per_pattern {
                name = format!("{name}:{}", r[pat]);
            }
            if r[samp] != "poisson" {
                name = format!("{name}:{}", r[samp]);
            }
            let x = parse(&r[n])?;
            let mut v = parse(&r[y])?;
            if kind == PlotKind::CovVsN {
                v = v.abs();
            }
            let s = series.entry(name).or_default();
            // Distances repeat on every pattern row of the same n.
            if !per_pattern && s.points.last().is_some_and(|p| p.0 == x) {
                continue;
            }
            s.points.push((x, v, r[se].clone()));
        }
    }
    let Some((seed, version)) = meta else { return Ok(out) };
    for (name, s) in &series {
        for (x, y, se) in &s.points {
            out.push(vec![
                seed.clone(),
                version.clone(),
                num(*x),
                num(*y),
                name.clone(),
                se.clone(),
                String::new(),
                String::new(),
            ]);
        }
        if kind.log_log() && s.points.len() >= 2 && s.points.iter().all(|p| p.0 > 0.0 && p.1 > 0.0) {
            let lx: Vec<f64> = s.points.iter().map(|p| p.0.ln()).collect();
            let ly: Vec<f64> = s.points.iter().map(|p| p.1.ln()).collect();
            let (slope, intercept, _) = linear_fit(&lx, &ly);
            for x in &lx {
                out.push(vec![
                    seed.clone(),
                    version.clone(),
                    num(x.exp()),
                    num((intercept + slope * x).exp()),
                    format!("{name}_fit"),
                    String::new(),
                    num(slope),
                    num(intercept),
                ]);
            }
        }
    }
    Ok(out)
}

/// Writes `t` as CSV (header included) to `w`.
pub fn write_plot<W: std::io::Write>(t: &Table, w: W) -> anyhow::Result<()> {
    let mut c = csv::Writer::from_writer(w);
    c.write_record(&t.header)?;
    for r in &t.rows {
        c.write_record(r)?;
    }
    c.flush()?;
    Ok(())
}
