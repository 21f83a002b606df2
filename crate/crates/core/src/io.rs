//! Text formats. Item ids are 1-based on disk and 0-based in memory.
//!
//! Ranking CSV: a mandatory `# n=<N>` header, then one ranking per line as
//! comma-separated item ids in preference order. Lines may list fewer than
//! `n` items. Blank lines and further `#` lines are ignored.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{ConsensusEstimate, ThetaClamp};
use crate::mixture::{Component, FittedParameters, SeparationResult, SplitMethod};
use crate::rankings::TopKRanking;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_header(line: &str) -> Option<usize> {
    let rest = line.trim().strip_prefix('#')?.trim_start();
    let value = rest.strip_prefix("n")?.trim_start().strip_prefix('=')?;
    value.trim().parse().ok()
}

pub fn parse_rankings(text: &str) -> Result<(usize, Vec<TopKRanking>)> {
    let mut n: Option<usize> = None;
    let mut rankings = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let Some(n) = n else {
            n = Some(
                parse_header(line)
                    .filter(|&v| v > 0)
                    .ok_or_else(|| parse_err(line_no, "expected header `# n=<N>` with N > 0"))?,
            );
            continue;
        };
        if line.starts_with('#') {
            continue;
        }
        let items =
            line.split(',')
                .map(|field| {
                    let id: usize = field.trim().parse().map_err(|_| {
                        parse_err(line_no, format!("bad item id {:?}", field.trim()))
                    })?;
                    if id == 0 || id > n {
                        return Err(parse_err(line_no, format!("item id {id} not in 1..={n}")));
                    }
                    Ok(id - 1)
                })
                .collect::<Result<Vec<usize>>>()?;
        let ranking = TopKRanking::new(n, items).map_err(|e| parse_err(line_no, e.to_string()))?;
        rankings.push(ranking);
    }
    let n = n.ok_or_else(|| parse_err(1, "missing header `# n=<N>`"))?;
    Ok((n, rankings))
}

pub fn format_rankings(n: usize, rankings: &[TopKRanking]) -> String {
    let mut out = format!("# n={n}\n");
    for r in rankings {
        let line: Vec<String> = r.items().iter().map(|i| (i + 1).to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// One row of the separation CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationRow {
    pub index: usize,
    pub delta: f64,
    pub label: Component,
}

pub fn format_separation_csv(result: &SeparationResult) -> String {
    let mut out = String::from("index,delta,label\n");
    for (i, (d, l)) in result.deltas.iter().zip(&result.labels).enumerate() {
        out.push_str(&format!("{i},{d},{}\n", l.as_str()));
    }
    out
}

pub fn parse_separation_csv(text: &str) -> Result<Vec<SeparationRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "index,delta,label" => {}
        _ => return Err(parse_err(1, "expected header `index,delta,label`")),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let fields: Vec<&str> = l.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(parse_err(i + 1, "expected 3 fields"));
            }
            Ok(SeparationRow {
                index: fields[0]
                    .parse()
                    .map_err(|_| parse_err(i + 1, "bad index"))?,
                delta: fields[1]
                    .parse()
                    .map_err(|_| parse_err(i + 1, "bad delta"))?,
                label: fields[2]
                    .parse()
                    .map_err(|e: Error| parse_err(i + 1, e.to_string()))?,
            })
        })
        .collect()
}

/// JSON sidecar of a separation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationSummary {
    pub method: SplitMethod,
    pub m: usize,
    pub threshold: f64,
    pub degenerate: bool,
    pub fitted: FittedParameters,
    /// Borda consensus, 1-based items in preference order.
    pub consensus: Vec<usize>,
    pub experts: usize,
    /// Set when mean distances were estimated from sampled counterparts.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
}

impl SeparationSummary {
    pub fn from_result(result: &SeparationResult, epsilon: Option<f64>) -> Self {
        SeparationSummary {
            method: result.method,
            m: result.deltas.len(),
            threshold: result.threshold,
            degenerate: result.degenerate,
            fitted: result.fitted,
            consensus: result.consensus.order().iter().map(|i| i + 1).collect(),
            experts: result.experts().len(),
            epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationMethod {
    Borda,
    #[serde(rename = "eborda")]
    EBorda,
}

impl std::str::FromStr for AggregationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "borda" => Ok(AggregationMethod::Borda),
            "eborda" => Ok(AggregationMethod::EBorda),
            other => Err(Error::invalid(format!(
                "unknown aggregation method {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateDiagnostics {
    pub method: AggregationMethod,
    pub n: usize,
    pub m: usize,
    /// Voters per item (indexed by 0-based item id).
    pub source_counts: Vec<usize>,
    /// 0-based sample indices treated as experts.
    pub experts: Vec<usize>,
    pub expert_prefix: usize,
    pub fallback: bool,
    pub theta_clamp: Option<String>,
}

/// JSON form of a consensus estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    /// Known prefix of the estimate, 1-based items.
    pub ranking: Vec<usize>,
    pub k_prime: usize,
    /// Dispersion fitted against the estimate; absent when the estimate is
    /// not a full ranking.
    pub theta_hat: Option<f64>,
    pub diagnostics: EstimateDiagnostics,
}

impl EstimateRecord {
    pub fn new(
        estimate: &ConsensusEstimate,
        method: AggregationMethod,
        m: usize,
        theta: Option<(f64, Option<ThetaClamp>)>,
    ) -> Self {
        EstimateRecord {
            ranking: estimate.order.iter().map(|i| i + 1).collect(),
            k_prime: estimate.k_prime(),
            theta_hat: theta.map(|t| t.0),
            diagnostics: EstimateDiagnostics {
                method,
                n: estimate.n,
                m,
                source_counts: estimate.source_counts.clone(),
                experts: estimate.experts.clone(),
                expert_prefix: estimate.expert_prefix,
                fallback: estimate.fallback,
                theta_clamp: theta
                    .and_then(|t| t.1)
                    .map(|c| format!("{c:?}").to_lowercase()),
            },
        }
    }

    pub fn to_estimate(&self) -> Result<ConsensusEstimate> {
        let n = self.diagnostics.n;
        if self.ranking.len() != self.k_prime || self.ranking.iter().any(|&i| i == 0 || i > n) {
            return Err(Error::invalid(
                "estimate ranking inconsistent with n or k_prime",
            ));
        }
        Ok(ConsensusEstimate {
            n,
            order: self.ranking.iter().map(|i| i - 1).collect(),
            source_counts: self.diagnostics.source_counts.clone(),
            expert_prefix: self.diagnostics.expert_prefix,
            experts: self.diagnostics.experts.clone(),
            fallback: self.diagnostics.fallback,
        })
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serialises");
    s.push('\n');
    s
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| parse_err(e.line(), e.to_string()))
}
