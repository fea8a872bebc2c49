//! File formats: test suites, trace files and JSON verdict reports.
//!
//! A suite file has one input vector per line, integers separated by
//! whitespace or commas; `#` starts a comment.
//!
//! A trace file is JSON Lines, one record per terminating run:
//!
//! ```text
//! {"inputs":{"n":1,"r":0},"return":1}
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use invcheck_core::interpreter::Trace;
use invcheck_core::refute::{CheckReport, Verdict};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Suite { line: usize, msg: String },
    #[error("trace line {line}: {source}")]
    Trace {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn parse_suite(text: &str) -> Result<Vec<Vec<i64>>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<i64>().map_err(|_| FormatError::Suite {
                    line: i + 1,
                    msg: format!("`{s}` is not an integer"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(row);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub inputs: BTreeMap<String, i64>,
    #[serde(rename = "return")]
    pub ret: i64,
}

impl From<&Trace> for TraceRecord {
    fn from(t: &Trace) -> Self {
        TraceRecord {
            inputs: t.entry.iter().cloned().collect(),
            ret: t.exit_return,
        }
    }
}

impl TraceRecord {
    /// Back to a trace, with inputs in `params` order.
    pub fn to_trace(&self, params: &[String]) -> Option<Trace> {
        let entry = params
            .iter()
            .map(|p| self.inputs.get(p).map(|&v| (p.clone(), v)))
            .collect::<Option<Vec<_>>>()?;
        Some(Trace {
            entry,
            exit_return: self.ret,
            steps: 0,
        })
    }
}

pub fn write_traces(out: &mut dyn Write, traces: &[Trace]) -> Result<(), FormatError> {
    for t in traces {
        serde_json::to_writer(&mut *out, &TraceRecord::from(t)).map_err(std::io::Error::from)?;
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_traces(input: &mut dyn BufRead) -> Result<Vec<TraceRecord>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| FormatError::Trace { line: i + 1, source })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub inputs: BTreeMap<String, i64>,
    #[serde(rename = "return")]
    pub ret: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsRecord {
    pub unfoldings: u64,
    pub label_nodes: u64,
    pub propagations: u64,
    pub millis: u64,
}

/// One line of the `--json-out` report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub invariant: String,
    /// `proved`, `disproved`, `unknown` or `error`.
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub counterexample: Option<Counterexample>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stats: Option<StatsRecord>,
}

impl VerdictRecord {
    pub fn from_report(invariant: &str, report: &CheckReport, millis: u64) -> Self {
        let stats = Some(StatsRecord {
            unfoldings: report.stats.unfoldings,
            label_nodes: report.stats.label_nodes,
            propagations: report.stats.propagations,
            millis,
        });
        let (verdict, counterexample, reason) = match &report.verdict {
            Verdict::Proved => ("proved", None, None),
            Verdict::Disproved { inputs, output, .. } => (
                "disproved",
                Some(Counterexample {
                    inputs: inputs.iter().cloned().collect(),
                    ret: *output,
                }),
                None,
            ),
            Verdict::Unknown(r) => ("unknown", None, Some(r.as_str().to_string())),
            Verdict::InternalError(msg) => ("error", None, Some(format!("internal: {msg}"))),
        };
        VerdictRecord {
            invariant: invariant.into(),
            verdict: verdict.into(),
            counterexample,
            reason,
            stats,
        }
    }

    pub fn error(invariant: &str, msg: String) -> Self {
        VerdictRecord {
            invariant: invariant.into(),
            verdict: "error".into(),
            counterexample: None,
            reason: Some(msg),
            stats: None,
        }
    }
}
