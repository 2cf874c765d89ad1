//! Per-iteration convergence records, their CSV form, and cross-run comparison.

use std::fmt::Write as _;

use faer::c64;

use crate::error::{Error, Result};

pub const TRACE_VERSION_LINE: &str = "# tadi-trace v1";
pub const TRACE_COLUMNS: &str = "iteration,columns,shift_re,shift_im,direction,residual,solves,wall_time_s";

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// 1-based step number.
    pub iteration: usize,
    /// Cumulative number of columns of `L`.
    pub columns: usize,
    pub shift: c64,
    /// 0-based eigenvector index, `None` for block steps and general directions.
    pub direction: Option<usize>,
    /// Normalized residual after the step.
    pub residual: f64,
    /// Cumulative shifted-solve calls.
    pub solves: usize,
    /// Seconds since the start of the run.
    pub wall_time: f64,
}

/// Shift pool that became active before a given iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolRecord {
    pub before_iteration: usize,
    pub shifts: Vec<c64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
    pub pools: Vec<PoolRecord>,
    /// `||B R B^H||` used for normalization.
    pub initial_norm: f64,
}

impl ConvergenceTrace {
    pub fn new(initial_norm: f64) -> Self {
        Self {
            initial_norm,
            ..Self::default()
        }
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Final normalized residual (1 before any step).
    pub fn final_residual(&self) -> f64 {
        self.last().map_or(1.0, |r| r.residual)
    }

    pub fn final_columns(&self) -> usize {
        self.last().map_or(0, |r| r.columns)
    }

    pub fn total_solves(&self) -> usize {
        self.last().map_or(0, |r| r.solves)
    }

    /// Columns at the first iteration whose residual is at or below `level`.
    pub fn columns_to_reach(&self, level: f64) -> Option<usize> {
        self.records.iter().find(|r| r.residual <= level).map(|r| r.columns)
    }

    /// Iterations needed to reach `level`.
    pub fn iterations_to_reach(&self, level: f64) -> Option<usize> {
        self.records.iter().find(|r| r.residual <= level).map(|r| r.iteration)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(TRACE_VERSION_LINE);
        out.push('\n');
        out.push_str(TRACE_COLUMNS);
        out.push('\n');
        for r in &self.records {
            let dir = r.direction.map_or(-1, |k| k as i64 + 1);
            writeln!(
                out,
                "{},{},{:e},{:e},{},{:e},{},{:.6}",
                r.iteration, r.columns, r.shift.re, r.shift.im, dir, r.residual, r.solves, r.wall_time
            )
            .unwrap();
        }
        out
    }

    /// Parses CSV written by [`Self::to_csv`]; `label` names the source in errors.
    pub fn from_csv(text: &str, label: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: label.to_string(),
            message: format!("line {line}: {msg}"),
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == TRACE_VERSION_LINE => {}
            _ => return Err(err(1, format!("missing {TRACE_VERSION_LINE:?} header"))),
        }
        match lines.next() {
            Some((_, l)) if l.trim() == TRACE_COLUMNS => {}
            _ => return Err(err(2, "unexpected column header".into())),
        }
        let mut trace = ConvergenceTrace::default();
        for (no, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 8 {
                return Err(err(no + 1, format!("expected 8 fields, got {}", f.len())));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|e| err(no + 1, format!("{s:?}: {e}")));
            let float = |s: &str| s.parse::<f64>().map_err(|e| err(no + 1, format!("{s:?}: {e}")));
            let dir: i64 = f[4].parse().map_err(|e| err(no + 1, format!("{:?}: {e}", f[4])))?;
            let direction = match dir {
                -1 => None,
                k if k >= 1 => Some(k as usize - 1),
                k => return Err(err(no + 1, format!("invalid direction index {k}"))),
            };
            trace.records.push(TraceRecord {
                iteration: int(f[0])?,
                columns: int(f[1])?,
                shift: c64::new(float(f[2])?, float(f[3])?),
                direction,
                residual: float(f[5])?,
                solves: int(f[6])?,
                wall_time: float(f[7])?,
            });
        }
        Ok(trace)
    }
}

/// Columns each trace needs to reach a set of residual levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub labels: Vec<String>,
    pub levels: Vec<f64>,
    /// `columns[t][k]`: columns of trace `t` at level `k`, `None` if unreached.
    pub columns: Vec<Vec<Option<usize>>>,
    series: Vec<Vec<(usize, f64)>>,
}

impl Comparison {
    /// Ratio of trace `t`'s columns to the first trace's at level `k`.
    pub fn ratio(&self, t: usize, k: usize) -> Option<f64> {
        match (self.columns[t][k], self.columns[0][k]) {
            (Some(a), Some(b)) if b > 0 => Some(a as f64 / b as f64),
            _ => None,
        }
    }

    /// Aligned text table: columns per level with ratios to the first trace, then the
    /// columns-versus-residual series of each trace side by side.
    pub fn render(&self) -> String {
        let mut out = String::new();
        write!(out, "{:>10}", "level").unwrap();
        for (t, l) in self.labels.iter().enumerate() {
            write!(out, " {:>14}", l).unwrap();
            if t > 0 {
                write!(out, " {:>8}", "ratio").unwrap();
            }
        }
        out.push('\n');
        for (k, level) in self.levels.iter().enumerate() {
            write!(out, "{:>10.1e}", level).unwrap();
            for t in 0..self.labels.len() {
                match self.columns[t][k] {
                    Some(c) => write!(out, " {:>14}", c).unwrap(),
                    None => write!(out, " {:>14}", "unreached").unwrap(),
                }
                if t > 0 {
                    match self.ratio(t, k) {
                        Some(r) => write!(out, " {:>8.3}", r).unwrap(),
                        None => write!(out, " {:>8}", "-").unwrap(),
                    }
                }
            }
            out.push('\n');
        }
        out.push('\n');
        let rows = self.series.iter().map(Vec::len).max().unwrap_or(0);
        write!(out, "{:>6}", "step").unwrap();
        for l in &self.labels {
            write!(out, " {:>8} {:>12}", "cols", l.chars().take(12).collect::<String>()).unwrap();
        }
        out.push('\n');
        for i in 0..rows {
            write!(out, "{:>6}", i + 1).unwrap();
            for s in &self.series {
                match s.get(i) {
                    Some((c, r)) => write!(out, " {:>8} {:>12.4e}", c, r).unwrap(),
                    None => write!(out, " {:>8} {:>12}", "", "").unwrap(),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Default residual levels for comparisons.
pub fn default_levels() -> Vec<f64> {
    (1..=12).map(|k| 10f64.powi(-k)).collect()
}

pub fn compare_runs(traces: &[(String, ConvergenceTrace)], levels: &[f64]) -> Result<Comparison> {
    if traces.len() < 2 {
        return Err(Error::Input("comparison needs at least two traces".into()));
    }
    Ok(Comparison {
        labels: traces.iter().map(|(l, _)| l.clone()).collect(),
        levels: levels.to_vec(),
        columns: traces
            .iter()
            .map(|(_, t)| levels.iter().map(|&lv| t.columns_to_reach(lv)).collect())
            .collect(),
        series: traces
            .iter()
            .map(|(_, t)| t.records.iter().map(|r| (r.columns, r.residual)).collect())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ConvergenceTrace {
        let mut t = ConvergenceTrace::new(2.0);
        for (k, res) in [0.5, 1e-3, 1e-7].iter().enumerate() {
            t.records.push(TraceRecord {
                iteration: k + 1,
                columns: 2 * (k + 1),
                shift: c64::new(-1.5, 0.25 * k as f64),
                direction: if k == 1 { None } else { Some(k) },
                residual: *res,
                solves: k + 1,
                wall_time: 0.001 * k as f64,
            });
        }
        t
    }

    #[test]
    fn csv_round_trip() {
        let t = sample();
        let csv = t.to_csv();
        assert!(csv.starts_with("# tadi-trace v1\n"));
        assert!(csv.lines().nth(3).unwrap().contains(",-1,"));
        let back = ConvergenceTrace::from_csv(&csv, "t").unwrap();
        assert_eq!(back.records, t.records);
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        assert!(ConvergenceTrace::from_csv("iteration,columns\n1,2\n", "t").is_err());
        let bad = format!("{TRACE_VERSION_LINE}\n{TRACE_COLUMNS}\n1,2,3\n");
        assert!(ConvergenceTrace::from_csv(&bad, "t").is_err());
    }

    #[test]
    fn comparison_ratios_and_unreached_levels() {
        let t = sample();
        let cmp = compare_runs(&[("a".into(), t.clone()), ("b".into(), t.clone())], &[1e-2, 1e-10]).unwrap();
        assert_eq!(cmp.ratio(1, 0), Some(1.0));
        assert_eq!(cmp.columns[0][1], None);
        assert!(cmp.render().contains("unreached"));
        assert!(compare_runs(&[("a".into(), t)], &[1e-2]).is_err());
    }
}
