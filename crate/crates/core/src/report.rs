//! Line-oriented experiment reports.
//!
//! ```text
//! # greedy-tn report v1
//! [config]
//! key = value
//! [trace]
//! iteration	edge	loss	relative_error	params	elapsed_s	test_error	splits
//! 0	-	1.5e2	3.1e-1	35	1.2e-2	-	0
//! [curve]
//! rank	params	loss	relative_error	test_error
//! [structure]
//! dims = 7 7 7 7 7
//! edge 0 1 2
//! params = 427
//! [status]
//! termination = loss-threshold
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so parsing a
//! report gives back bit-identical values.

use std::fmt::{self, Write as _};

use crate::baselines::SweepPoint;
use crate::error::{Result, TnError};
use crate::network::TensorNetwork;
use crate::search::SearchTrace;

pub const REPORT_HEADER: &str = "# greedy-tn report v1";
const TRACE_COLUMNS: &str = "iteration\tedge\tloss\trelative_error\tparams\telapsed_s\ttest_error\tsplits";
const CURVE_COLUMNS: &str = "rank\tparams\tloss\trelative_error\ttest_error";

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub edge: Option<(usize, usize)>,
    pub loss: f64,
    pub relative_error: f64,
    pub params: usize,
    pub elapsed: f64,
    pub test_error: Option<f64>,
    pub splits: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub config: Vec<(String, String)>,
    pub trace: Vec<TraceRow>,
    pub curve: Vec<SweepPoint>,
    pub dims: Vec<usize>,
    /// Super-unit edges `(i, j, R_ij)`.
    pub edges: Vec<(usize, usize, usize)>,
    pub params: Option<usize>,
    pub status: Vec<(String, String)>,
}

impl Report {
    pub fn new(config: Vec<(String, String)>) -> Self {
        Self {
            config,
            ..Self::default()
        }
    }

    pub fn with_trace(mut self, trace: &SearchTrace) -> Self {
        self.trace = trace
            .records
            .iter()
            .map(|r| TraceRow {
                iteration: r.iteration,
                edge: r.edge,
                loss: r.loss,
                relative_error: r.relative_error,
                params: r.param_count,
                elapsed: r.elapsed,
                test_error: r.test_error,
                splits: r.splits.len(),
            })
            .collect();
        self.status
            .push(("termination".into(), trace.termination.as_str().into()));
        self
    }

    pub fn with_curve(mut self, curve: &[SweepPoint]) -> Self {
        self.curve = curve.to_vec();
        self
    }

    pub fn with_structure(mut self, net: &TensorNetwork) -> Self {
        self.dims = net.dims().to_vec();
        self.edges = net.edge_list(false);
        self.params = Some(net.param_count());
        self
    }

    pub fn with_status(mut self, key: &str, value: impl ToString) -> Self {
        self.status.push((key.into(), value.to_string()));
        self
    }

    pub fn config_value(&self, key: &str) -> Option<&str> {
        lookup(&self.config, key)
    }

    pub fn status_value(&self, key: &str) -> Option<&str> {
        lookup(&self.status, key)
    }

    /// `params,relative_error,test_error` rows from the trace, or from the
    /// curve when there is no trace.
    pub fn plot_csv(&self) -> String {
        let mut out = String::from("params,relative_error,test_error\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        if !self.trace.is_empty() {
            for r in &self.trace {
                let _ = writeln!(out, "{},{},{}", r.params, r.relative_error, opt(r.test_error));
            }
        } else {
            for p in &self.curve {
                let _ = writeln!(out, "{},{},{}", p.params, p.relative_error, opt(p.test_error));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let bad = |n: usize, msg: String| TnError::Format {
            offset: n + 1,
            message: format!("report line {}: {msg}", n + 1),
        };
        match lines.next() {
            Some((_, l)) if l.trim() == REPORT_HEADER => {}
            _ => return Err(bad(0, format!("expected '{REPORT_HEADER}'"))),
        }
        let mut report = Report::default();
        let mut section = String::new();
        for (n, raw) in lines {
            let line = raw.trim_end();
            if line.trim().is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].to_string();
                continue;
            }
            match section.as_str() {
                "config" | "status" => {
                    let (k, v) = line
                        .split_once(" = ")
                        .ok_or_else(|| bad(n, format!("expected 'key = value', got '{line}'")))?;
                    let target = if section == "config" { &mut report.config } else { &mut report.status };
                    target.push((k.trim().to_string(), v.to_string()));
                }
                "trace" => {
                    if line == TRACE_COLUMNS {
                        continue;
                    }
                    report.trace.push(parse_trace_row(line).map_err(|m| bad(n, m))?);
                }
                "curve" => {
                    if line == CURVE_COLUMNS {
                        continue;
                    }
                    report.curve.push(parse_curve_row(line).map_err(|m| bad(n, m))?);
                }
                "structure" => {
                    if let Some(v) = line.strip_prefix("dims = ") {
                        report.dims = parse_list(v).map_err(|m| bad(n, m))?;
                    } else if let Some(v) = line.strip_prefix("params = ") {
                        report.params = Some(v.parse().map_err(|_| bad(n, format!("bad params '{v}'")))?);
                    } else if let Some(v) = line.strip_prefix("edge ") {
                        let e = parse_list(v).map_err(|m| bad(n, m))?;
                        if e.len() != 3 {
                            return Err(bad(n, format!("edge needs 'i j rank', got '{v}'")));
                        }
                        report.edges.push((e[0], e[1], e[2]));
                    } else {
                        return Err(bad(n, format!("unexpected structure line '{line}'")));
                    }
                }
                other => return Err(bad(n, format!("content outside a known section ('{other}')"))),
            }
        }
        Ok(report)
    }
}

fn lookup<'a>(pairs: &'a [(String, String)], key: &str) -> Option<&'a str> {
    pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn opt_f64(s: &str) -> std::result::Result<Option<f64>, String> {
    if s == "-" {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|_| format!("bad number '{s}'"))
    }
}

fn num<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("bad number '{s}'"))
}

fn parse_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split_whitespace().map(num).collect()
}

fn parse_trace_row(line: &str) -> std::result::Result<TraceRow, String> {
    let f: Vec<&str> = line.split('\t').collect();
    if f.len() != 8 {
        return Err(format!("expected 8 tab-separated fields, got {}", f.len()));
    }
    let edge = if f[1] == "-" {
        None
    } else {
        let (a, b) = f[1].split_once('-').ok_or_else(|| format!("bad edge '{}'", f[1]))?;
        Some((num(a)?, num(b)?))
    };
    Ok(TraceRow {
        iteration: num(f[0])?,
        edge,
        loss: num(f[2])?,
        relative_error: num(f[3])?,
        params: num(f[4])?,
        elapsed: num(f[5])?,
        test_error: opt_f64(f[6])?,
        splits: num(f[7])?,
    })
}

fn parse_curve_row(line: &str) -> std::result::Result<SweepPoint, String> {
    let f: Vec<&str> = line.split('\t').collect();
    if f.len() != 5 {
        return Err(format!("expected 5 tab-separated fields, got {}", f.len()));
    }
    Ok(SweepPoint {
        rank: num(f[0])?,
        params: num(f[1])?,
        loss: num(f[2])?,
        relative_error: num(f[3])?,
        test_error: opt_f64(f[4])?,
    })
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_else(|| "-".into());
        writeln!(f, "{REPORT_HEADER}")?;
        writeln!(f, "[config]")?;
        for (k, v) in &self.config {
            writeln!(f, "{k} = {v}")?;
        }
        if !self.trace.is_empty() {
            writeln!(f, "[trace]")?;
            writeln!(f, "{TRACE_COLUMNS}")?;
            for r in &self.trace {
                let edge = r.edge.map(|(a, b)| format!("{a}-{b}")).unwrap_or_else(|| "-".into());
                writeln!(
                    f,
                    "{}\t{edge}\t{:e}\t{:e}\t{}\t{:e}\t{}\t{}",
                    r.iteration,
                    r.loss,
                    r.relative_error,
                    r.params,
                    r.elapsed,
                    opt(r.test_error),
                    r.splits
                )?;
            }
        }
        if !self.curve.is_empty() {
            writeln!(f, "[curve]")?;
            writeln!(f, "{CURVE_COLUMNS}")?;
            for p in &self.curve {
                writeln!(
                    f,
                    "{}\t{}\t{:e}\t{:e}\t{}",
                    p.rank,
                    p.params,
                    p.loss,
                    p.relative_error,
                    opt(p.test_error)
                )?;
            }
        }
        if !self.dims.is_empty() {
            writeln!(f, "[structure]")?;
            let dims: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
            writeln!(f, "dims = {}", dims.join(" "))?;
            for (i, j, r) in &self.edges {
                writeln!(f, "edge {i} {j} {r}")?;
            }
            if let Some(p) = self.params {
                writeln!(f, "params = {p}")?;
            }
        }
        writeln!(f, "[status]")?;
        for (k, v) in &self.status {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new(vec![("command".into(), "decompose".into()), ("seed".into(), "3".into())]);
        r.trace = vec![
            TraceRow {
                iteration: 0,
                edge: None,
                loss: 1.0 / 3.0,
                relative_error: 0.1,
                params: 35,
                elapsed: 0.25,
                test_error: None,
                splits: 0,
            },
            TraceRow {
                iteration: 1,
                edge: Some((0, 4)),
                loss: 1e-300,
                relative_error: 2.0f64.sqrt(),
                params: 77,
                elapsed: 1.5,
                test_error: Some(0.07),
                splits: 1,
            },
        ];
        r.dims = vec![7, 7, 1];
        r.edges = vec![(0, 2, 3)];
        r.params = Some(42);
        r.with_status("termination", "budget-exhausted")
    }

    #[test]
    fn round_trip_is_exact() {
        let r = sample();
        let text = r.to_string();
        assert!(text.starts_with(REPORT_HEADER));
        assert_eq!(Report::parse(&text).unwrap(), r);
        assert_eq!(r.status_value("termination"), Some("budget-exhausted"));
        assert_eq!(r.config_value("seed"), Some("3"));
    }

    #[test]
    fn plot_rows() {
        let csv = sample().plot_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "params,relative_error,test_error");
        assert_eq!(lines[1], "35,0.1,");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn malformed_reports() {
        assert!(Report::parse("nope").is_err());
        let text = sample().to_string().replace("0-4", "0:4");
        assert!(Report::parse(&text).is_err());
    }
}
