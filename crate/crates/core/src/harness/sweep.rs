use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_scenario, summarize, Benchmark, RunTrace, ScenarioSpec, SummaryReport};
use crate::error::{Error, Result};

/// Caps the number of worker threads used by [`sweep`].
pub const THREADS_ENV: &str = "COURNOT_LA_THREADS";

pub fn thread_limit() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
}

/// Lower quartile, median and upper quartile (linear interpolation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let at = |q: f64| {
            let pos = q * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Some(Self {
            q1: at(0.25),
            median: at(0.5),
            q3: at(0.75),
        })
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub supplier: u32,
    pub action: Quartiles,
    pub profit: Quartiles,
    pub action_error_pct: Quartiles,
    pub profit_error_pct: Quartiles,
    pub lmp_error_pct: Option<Quartiles>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub summary: Option<SummaryReport>,
    pub error: Option<String>,
    pub infeasible_rounds: u64,
    #[serde(skip)]
    pub trace: Option<RunTrace>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub tail_window: u64,
    pub benchmark_source: String,
    /// Sorted by seed.
    pub outcomes: Vec<SeedOutcome>,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn failures(&self) -> impl Iterator<Item = &SeedOutcome> {
        self.outcomes.iter().filter(|o| o.error.is_some())
    }

    pub fn summaries(&self) -> impl Iterator<Item = &SummaryReport> {
        self.outcomes.iter().filter_map(|o| o.summary.as_ref())
    }
}

impl fmt::Display for SweepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ok = self.summaries().count();
        writeln!(
            f,
            "{} seeds ({} ok) | tail {} rounds | benchmark: {}",
            self.outcomes.len(),
            ok,
            self.tail_window,
            self.benchmark_source
        )?;
        writeln!(
            f,
            "{:>8} {:>18} {:>20} {:>16} {:>16} {:>16}",
            "supplier", "action MW [IQR]", "profit $/h [IQR]", "err A % [IQR]", "err P % [IQR]", "err L % [IQR]"
        )?;
        for r in &self.rows {
            let q = |x: &Quartiles, p: usize| format!("{:.p$} [{:.p$}]", x.median, x.iqr());
            writeln!(
                f,
                "{:>8} {:>18} {:>20} {:>16} {:>16} {:>16}",
                r.supplier,
                q(&r.action, 1),
                q(&r.profit, 0),
                q(&r.action_error_pct, 2),
                q(&r.profit_error_pct, 2),
                r.lmp_error_pct.as_ref().map_or("-".into(), |x| q(x, 2)),
            )?;
        }
        for o in self.failures() {
            writeln!(f, "seed {} failed: {}", o.seed, o.error.as_deref().unwrap_or(""))?;
        }
        Ok(())
    }
}

/// Runs `spec` once per seed in parallel and aggregates the tail-window
/// summaries. A failing seed is recorded in its outcome and does not stop
/// the others.
pub fn sweep(spec: &ScenarioSpec, seeds: &[u64], benchmark: &Benchmark, tail_window: u64) -> Result<SweepReport> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one seed".into()));
    }
    let run_one = |seed: u64| -> SeedOutcome {
        let result = run_scenario(&spec.with_seed(seed))
            .and_then(|trace| summarize(&trace, benchmark, tail_window).map(|s| (s, trace)));
        match result {
            Ok((summary, trace)) => SeedOutcome {
                seed,
                infeasible_rounds: trace.infeasible_rounds,
                summary: Some(summary),
                error: None,
                trace: Some(trace),
            },
            Err(e) => {
                log::error!("seed {seed}: {e}");
                SeedOutcome {
                    seed,
                    summary: None,
                    error: Some(e.to_string()),
                    infeasible_rounds: 0,
                    trace: None,
                }
            }
        }
    };

    let mut outcomes: Vec<SeedOutcome> = match thread_limit() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(|| seeds.par_iter().map(|s| run_one(*s)).collect()),
        None => seeds.par_iter().map(|s| run_one(*s)).collect(),
    };
    outcomes.sort_by_key(|o| o.seed);

    let summaries: Vec<&SummaryReport> = outcomes.iter().filter_map(|o| o.summary.as_ref()).collect();
    let mut suppliers: Vec<u32> = summaries
        .iter()
        .flat_map(|s| s.rows.iter().map(|r| r.supplier))
        .collect();
    suppliers.sort_unstable();
    suppliers.dedup();
    let rows = suppliers
        .into_iter()
        .filter_map(|sup| {
            let rows: Vec<_> = summaries
                .iter()
                .filter_map(|s| s.rows.iter().find(|r| r.supplier == sup))
                .collect();
            let col = |f: &dyn Fn(&&super::SupplierSummary) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
            let lmp_err: Vec<f64> = rows.iter().filter_map(|r| r.lmp_error_pct).collect();
            Some(SweepRow {
                supplier: sup,
                action: Quartiles::of(&col(&|r| r.action))?,
                profit: Quartiles::of(&col(&|r| r.profit))?,
                action_error_pct: Quartiles::of(&col(&|r| r.action_error_pct))?,
                profit_error_pct: Quartiles::of(&col(&|r| r.profit_error_pct))?,
                lmp_error_pct: Quartiles::of(&lmp_err),
            })
        })
        .collect();

    Ok(SweepReport {
        tail_window,
        benchmark_source: benchmark.source.clone(),
        outcomes,
        rows,
    })
}
