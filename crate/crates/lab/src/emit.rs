//! CSV, metadata and SVG artifacts.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which parses back
//! to the identical `f64`. Lines end in `\n`. Metadata is kept out of the CSV
//! files so that they stay plain tables; it goes to a `run.meta` sidecar and
//! into each SVG's `<metadata>` element.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{LabError, Result};
use crate::experiment::{ExperimentResult, Metadata, SweepResult, TheoryCurves};
use crate::svg::{Chart, Series};

pub const REGRET_HEADER: &str = "policy,rho,t,regret_mean,regret_stderr";
pub const PULLS_HEADER: &str = "policy,rho,arm,pulls_mean,pulls_var";
pub const BOUNDS_HEADER: &str = "rho,n,upper,lower";
pub const SWEEP_HEADER: &str = "rho,policy,final_regret_mean,final_regret_stderr";

/// Most points kept per curve when decimating.
pub const MAX_POINTS: usize = 2000;

/// Rounds (1-based) that are emitted: every `ceil(n / 2000)`-th round plus the
/// final one, or all rounds when `full`.
pub fn decimated_rounds(n: usize, full: bool) -> Vec<usize> {
    let step = if full {
        1
    } else {
        n.div_ceil(MAX_POINTS).max(1)
    };
    let mut rounds: Vec<usize> = (step..=n).step_by(step).collect();
    if rounds.last() != Some(&n) && n > 0 {
        rounds.push(n);
    }
    rounds
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn regret_csv(result: &ExperimentResult, full: bool) -> String {
    let mut s = String::from(REGRET_HEADER);
    s.push('\n');
    for curve in &result.curves {
        let rho = fmt_f64(curve.rho);
        for t in decimated_rounds(curve.horizon(), full) {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                curve.label,
                rho,
                t,
                fmt_f64(curve.regret_mean[t - 1]),
                fmt_f64(curve.regret_stderr[t - 1])
            );
        }
    }
    s
}

pub fn pulls_csv(result: &ExperimentResult) -> String {
    let mut s = String::from(PULLS_HEADER);
    s.push('\n');
    for curve in &result.curves {
        let rho = fmt_f64(curve.rho);
        for (arm, (m, v)) in curve.pulls_mean.iter().zip(&curve.pulls_var).enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                curve.label,
                rho,
                arm,
                fmt_f64(*m),
                fmt_f64(*v)
            );
        }
    }
    s
}

pub fn bounds_csv(curves: &[TheoryCurves]) -> String {
    let mut s = String::from(BOUNDS_HEADER);
    s.push('\n');
    for c in curves {
        for ((n, u), l) in c.n.iter().zip(&c.upper).zip(&c.lower) {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                fmt_f64(c.rho),
                n,
                fmt_f64(*u),
                fmt_f64(*l)
            );
        }
    }
    s
}

pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in &sweep.rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_f64(r.rho),
            r.policy,
            fmt_f64(r.final_regret_mean),
            fmt_f64(r.final_regret_stderr)
        );
    }
    s
}

pub fn meta_text(meta: &Metadata) -> String {
    format!(
        "seed = {}\nconfig_hash = {}\nbuild_id = {}\n",
        meta.seed, meta.config_hash, meta.build_id
    )
}

/// One parsed row of a regret CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretRow {
    pub policy: String,
    pub rho: f64,
    pub t: usize,
    pub regret_mean: f64,
    pub regret_stderr: f64,
}

/// One parsed row of a pulls CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct PullsRow {
    pub policy: String,
    pub rho: f64,
    pub arm: usize,
    pub pulls_mean: f64,
    pub pulls_var: f64,
}

fn csv_fields<'a>(text: &'a str, header: &str, width: usize) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.split_terminator('\n').enumerate();
    match lines.next() {
        Some((_, h)) if h == header => {}
        _ => {
            return Err(LabError::Csv {
                line: 1,
                message: format!("expected header `{header}`"),
            })
        }
    }
    lines
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != width {
                return Err(LabError::Csv {
                    line: i + 1,
                    message: format!("expected {width} fields, got {}", f.len()),
                });
            }
            Ok((i + 1, f))
        })
        .collect()
}

fn field<T: std::str::FromStr>(line: usize, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| LabError::Csv {
        line,
        message: format!("cannot parse `{raw}`"),
    })
}

pub fn parse_regret_csv(text: &str) -> Result<Vec<RegretRow>> {
    csv_fields(text, REGRET_HEADER, 5)?
        .into_iter()
        .map(|(line, f)| {
            Ok(RegretRow {
                policy: f[0].to_string(),
                rho: field(line, f[1])?,
                t: field(line, f[2])?,
                regret_mean: field(line, f[3])?,
                regret_stderr: field(line, f[4])?,
            })
        })
        .collect()
}

pub fn parse_pulls_csv(text: &str) -> Result<Vec<PullsRow>> {
    csv_fields(text, PULLS_HEADER, 5)?
        .into_iter()
        .map(|(line, f)| {
            Ok(PullsRow {
                policy: f[0].to_string(),
                rho: field(line, f[1])?,
                arm: field(line, f[2])?,
                pulls_mean: field(line, f[3])?,
                pulls_var: field(line, f[4])?,
            })
        })
        .collect()
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| LabError::io(&path, e))?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))
}

/// Writes `regret.csv`, `pulls.csv` and `run.meta` into `dir`.
pub fn emit_csv(result: &ExperimentResult, dir: &Path, full: bool) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    Ok(vec![
        write(dir, "regret.csv", &regret_csv(result, full))?,
        write(dir, "pulls.csv", &pulls_csv(result))?,
        write(dir, "run.meta", &meta_text(&result.metadata))?,
    ])
}

fn theory_series(theory: &[TheoryCurves], many: bool) -> Vec<Series> {
    let mut out = Vec::new();
    for th in theory {
        let suffix = if many {
            format!(" (rho={})", th.rho)
        } else {
            String::new()
        };
        let pts = |ys: &[f64]| th.n.iter().zip(ys).map(|(&n, &y)| (n as f64, y)).collect();
        out.push(Series::dashed(
            format!("upper bound{suffix}"),
            pts(&th.upper),
        ));
        out.push(Series::dashed(
            format!("lower bound{suffix}"),
            pts(&th.lower),
        ));
    }
    out
}

/// Regret against rounds for every curve, with the theory curves dashed.
pub fn regret_svg(result: &ExperimentResult, full: bool) -> String {
    let many_rho = result.theory.len() > 1;
    let mut series: Vec<Series> = result
        .curves
        .iter()
        .map(|c| {
            let label = if many_rho {
                format!("{} (rho={})", c.label, c.rho)
            } else {
                c.label.clone()
            };
            let pts = decimated_rounds(c.horizon(), full)
                .into_iter()
                .map(|t| (t as f64, c.regret_mean[t - 1]))
                .collect();
            Series::solid(label, pts)
        })
        .collect();
    series.extend(theory_series(&result.theory, many_rho));
    Chart {
        title: "Expected regret".into(),
        x_label: "round t".into(),
        y_label: "regret".into(),
        log_x: false,
        series,
    }
    .render(&result.metadata)
}

pub fn sweep_svg(sweep: &SweepResult, meta: &Metadata) -> String {
    let mut labels: Vec<&str> = Vec::new();
    for r in &sweep.rows {
        if !labels.contains(&r.policy.as_str()) {
            labels.push(&r.policy);
        }
    }
    let series = labels
        .iter()
        .map(|&l| {
            let pts = sweep
                .rows
                .iter()
                .filter(|r| r.policy == l)
                .map(|r| (r.rho, r.final_regret_mean))
                .collect();
            Series::solid(l.to_string(), pts)
        })
        .collect();
    Chart {
        title: "Final regret against risk tolerance".into(),
        x_label: "rho".into(),
        y_label: "regret at n".into(),
        log_x: true,
        series,
    }
    .render(meta)
}

pub fn bounds_svg(curves: &[TheoryCurves], meta: &Metadata) -> String {
    Chart {
        title: "Regret bounds".into(),
        x_label: "n".into(),
        y_label: "regret".into(),
        log_x: false,
        series: theory_series(curves, curves.len() > 1),
    }
    .render(meta)
}

/// Writes `regret.svg` into `dir`.
pub fn emit_svg(result: &ExperimentResult, dir: &Path, full: bool) -> Result<PathBuf> {
    ensure_dir(dir)?;
    write(dir, "regret.svg", &regret_svg(result, full))
}

/// Writes `sweep.csv` / `sweep.svg` plus the merged per-ρ regret and pull tables.
pub fn emit_sweep(
    sweep: &SweepResult,
    dir: &Path,
    full: bool,
    csv: bool,
    svg: bool,
) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let meta = match sweep.experiments.first() {
        Some(e) => e.metadata.clone(),
        None => return Ok(Vec::new()),
    };
    let merged = ExperimentResult {
        curves: sweep
            .experiments
            .iter()
            .flat_map(|e| e.curves.clone())
            .collect(),
        theory: sweep
            .experiments
            .iter()
            .flat_map(|e| e.theory.clone())
            .collect(),
        metadata: meta.clone(),
    };
    let mut paths = Vec::new();
    if csv {
        paths.push(write(dir, "sweep.csv", &sweep_csv(sweep))?);
        paths.extend(emit_csv(&merged, dir, full)?);
    }
    if svg {
        paths.push(write(dir, "sweep.svg", &sweep_svg(sweep, &meta))?);
    }
    Ok(paths)
}

/// Writes `bounds.csv` / `bounds.svg` and `run.meta`.
pub fn emit_bounds(
    curves: &[TheoryCurves],
    meta: &Metadata,
    dir: &Path,
    csv: bool,
    svg: bool,
) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut paths = Vec::new();
    if csv {
        paths.push(write(dir, "bounds.csv", &bounds_csv(curves))?);
        paths.push(write(dir, "run.meta", &meta_text(meta))?);
    }
    if svg {
        paths.push(write(dir, "bounds.svg", &bounds_svg(curves, meta))?);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::PolicyCurve;

    fn meta() -> Metadata {
        Metadata {
            seed: 1,
            config_hash: "abc".into(),
            build_id: "test".into(),
        }
    }

    fn curve(label: &str, n: usize) -> PolicyCurve {
        PolicyCurve {
            label: label.into(),
            rho: 1.0,
            regret_mean: (0..n).map(|t| t as f64 * 0.5).collect(),
            regret_stderr: vec![0.1; n],
            pulls_mean: vec![n as f64 / 2.0; 2],
            pulls_var: vec![1.0; 2],
        }
    }

    #[test]
    fn decimation_grid() {
        assert_eq!(decimated_rounds(5, false), vec![1, 2, 3, 4, 5]);
        let g = decimated_rounds(20_000, false);
        assert_eq!(g.len(), 2000);
        assert_eq!((g[0], *g.last().unwrap()), (10, 20_000));
        let g = decimated_rounds(4001, false);
        assert_eq!(g[0], 3);
        assert_eq!(*g.last().unwrap(), 4001);
        assert!(g.len() <= 2001);
        assert_eq!(decimated_rounds(4001, true).len(), 4001);
    }

    #[test]
    fn empty_result_is_header_only() {
        let r = ExperimentResult {
            curves: vec![],
            theory: vec![],
            metadata: meta(),
        };
        assert_eq!(regret_csv(&r, false), format!("{REGRET_HEADER}\n"));
        assert_eq!(pulls_csv(&r), format!("{PULLS_HEADER}\n"));
    }

    #[test]
    fn row_count_for_two_policies() {
        let n = 10_000;
        let r = ExperimentResult {
            curves: vec![curve("a", n), curve("b", n)],
            theory: vec![],
            metadata: meta(),
        };
        let csv = regret_csv(&r, false);
        assert_eq!(csv.lines().count(), 2 * (n / 5) + 1);
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0, f64::INFINITY] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(parse_regret_csv("nope\n").is_err());
        assert!(parse_regret_csv(&format!("{REGRET_HEADER}\na,1,2\n")).is_err());
        assert!(parse_pulls_csv(&format!("{PULLS_HEADER}\na,x,0,1,1\n")).is_err());
    }

    #[test]
    fn svg_has_fixed_viewbox_and_metadata() {
        let r = ExperimentResult {
            curves: vec![curve("srts", 100)],
            theory: vec![],
            metadata: meta(),
        };
        let svg = regret_svg(&r, false);
        assert!(svg.contains("viewBox=\"0 0 960 540\""));
        assert!(svg.contains("<metadata>"));
        assert!(svg.contains("abc"));
        assert!(svg.contains("<polyline"));
        assert_eq!(svg, regret_svg(&r, false));
    }
}
