use std::fmt;

use serde::{Deserialize, Serialize};

use super::{tail_mean, RunTrace};
use crate::error::{Error, Result};
use crate::market::Market;
use crate::oracle::{percentage_error, BestResponseResult, NashResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkEntry {
    pub supplier: u32,
    pub quantity: f64,
    pub profit: f64,
    pub lmp: f64,
}

/// Reference values a learning run is scored against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    /// Where the numbers come from, e.g. "iterated best response (grid 1 MW)".
    pub source: String,
    pub converged: bool,
    pub entries: Vec<BenchmarkEntry>,
}

impl Benchmark {
    pub fn from_nash(market: &Market<f64>, nash: &NashResult<f64>) -> Self {
        let entries = market
            .suppliers()
            .iter()
            .enumerate()
            .map(|(k, s)| BenchmarkEntry {
                supplier: s.id,
                quantity: nash.quantities[k],
                profit: nash.profits[k],
                lmp: nash.lmps[s.node.0],
            })
            .collect();
        Self {
            source: format!(
                "iterated grid best response ({} MW grid, {} sweeps)",
                nash.grid_step, nash.iterations
            ),
            converged: nash.converged,
            entries,
        }
    }

    pub fn from_best_response(market: &Market<f64>, br: &BestResponseResult<f64>) -> Self {
        Self {
            source: format!("grid best response ({} MW grid)", br.grid_step),
            converged: true,
            entries: vec![BenchmarkEntry {
                supplier: market.supplier(br.supplier).id,
                quantity: br.quantity,
                profit: br.profit,
                lmp: br.lmp_at_node,
            }],
        }
    }

    /// Tail-window means of a trace used as their own benchmark.
    pub fn from_trace(trace: &RunTrace, tail_window: u64) -> Result<Self> {
        let entries = trace
            .suppliers()
            .into_iter()
            .map(|s| {
                let missing = || Error::TraceFormat(format!("no mean plays for supplier {s} in the tail window"));
                Ok(BenchmarkEntry {
                    supplier: s,
                    quantity: tail_mean(trace, s, tail_window, |r| Some(r.action_mw)).ok_or_else(missing)?,
                    profit: tail_mean(trace, s, tail_window, |r| Some(r.profit_per_h)).ok_or_else(missing)?,
                    lmp: tail_mean(trace, s, tail_window, |r| r.lmp).ok_or_else(missing)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            source: "trace tail means".into(),
            converged: true,
            entries,
        })
    }

    pub fn entry(&self, supplier: u32) -> Option<&BenchmarkEntry> {
        self.entries.iter().find(|e| e.supplier == supplier)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplierSummary {
    pub supplier: u32,
    pub action: f64,
    pub profit: f64,
    pub lmp: Option<f64>,
    pub benchmark_action: f64,
    pub benchmark_profit: f64,
    pub benchmark_lmp: f64,
    pub action_error_pct: f64,
    pub profit_error_pct: f64,
    pub lmp_error_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub seed: u64,
    pub tail_window: u64,
    pub benchmark_source: String,
    pub rows: Vec<SupplierSummary>,
}

impl SummaryReport {
    pub fn max_action_error(&self) -> f64 {
        self.rows.iter().map(|r| r.action_error_pct).fold(0.0, f64::max)
    }

    pub fn max_profit_error(&self) -> f64 {
        self.rows.iter().map(|r| r.profit_error_pct).fold(0.0, f64::max)
    }
}

impl fmt::Display for SummaryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "seed {} | tail {} rounds (mean plays) | benchmark: {}",
            self.seed, self.tail_window, self.benchmark_source
        )?;
        writeln!(
            f,
            "{:>8} {:>12} {:>11} {:>10} | {:>12} {:>11} {:>10} | {:>8} {:>8} {:>8}",
            "supplier",
            "profit $/h",
            "action MW",
            "LMP",
            "bench $/h",
            "bench MW",
            "bench LMP",
            "err P %",
            "err A %",
            "err L %"
        )?;
        for r in &self.rows {
            let lmp = r.lmp.map_or("-".to_string(), |v| format!("{v:.2}"));
            let lerr = r.lmp_error_pct.map_or("-".to_string(), |v| format!("{v:.2}"));
            writeln!(
                f,
                "{:>8} {:>12.0} {:>11.1} {:>10} | {:>12.0} {:>11.1} {:>10.2} | {:>8.2} {:>8.2} {:>8}",
                r.supplier,
                r.profit,
                r.action,
                lmp,
                r.benchmark_profit,
                r.benchmark_action,
                r.benchmark_lmp,
                r.profit_error_pct,
                r.action_error_pct,
                lerr
            )?;
        }
        Ok(())
    }
}

/// Tail-window means of each learner's mean plays against the benchmark,
/// with percentage errors.
pub fn summarize(trace: &RunTrace, benchmark: &Benchmark, tail_window: u64) -> Result<SummaryReport> {
    if tail_window == 0 {
        return Err(Error::InvalidParameter("tail window must be positive".into()));
    }
    let rows = trace
        .suppliers()
        .into_iter()
        .map(|s| {
            let b = benchmark.entry(s).ok_or(Error::UnknownSupplier(s))?;
            let missing = || Error::TraceFormat(format!("no mean plays for supplier {s} in the tail window"));
            let action = tail_mean(trace, s, tail_window, |r| Some(r.action_mw)).ok_or_else(missing)?;
            let profit = tail_mean(trace, s, tail_window, |r| Some(r.profit_per_h)).ok_or_else(missing)?;
            let lmp = tail_mean(trace, s, tail_window, |r| r.lmp);
            Ok(SupplierSummary {
                supplier: s,
                action,
                profit,
                lmp,
                benchmark_action: b.quantity,
                benchmark_profit: b.profit,
                benchmark_lmp: b.lmp,
                action_error_pct: percentage_error(action, b.quantity)?,
                profit_error_pct: percentage_error(profit, b.profit)?,
                lmp_error_pct: lmp.map(|l| percentage_error(l, b.lmp)).transpose()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SummaryReport {
        seed: trace.seed,
        tail_window,
        benchmark_source: benchmark.source.clone(),
        rows,
    })
}
