//! Experiment orchestration: repeated market rounds with learning and fixed
//! suppliers, trace output, tail-window summaries and seed sweeps.
//!
//! The harness runs in `f64`.

mod summary;
mod sweep;
mod trace;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dispatch::clear_market;
use crate::error::{Error, Result};
use crate::learner::{LearnerParams, LearnerState, PlayKind};
use crate::market::{BidProfile, Market, SupplierId};

pub use summary::{summarize, Benchmark, BenchmarkEntry, SummaryReport, SupplierSummary};
pub use sweep::{sweep, thread_limit, Quartiles, SeedOutcome, SweepReport, SweepRow, THREADS_ENV};
pub use trace::{read_trace_csv, write_trace_csv, TraceRecord};

/// Default number of trailing iterations averaged for "final" values.
pub const DEFAULT_TAIL_WINDOW: u64 = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One supplier learns against fixed opponents.
    Rationality,
    /// Every supplier learns.
    Convergence,
}

/// How learners' mean/sample clocks line up.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stagger {
    /// All learners play their mean on the same rounds.
    #[default]
    None,
    /// Consecutive learners alternate phase.
    RoundRobin,
}

#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub market: Market<f64>,
    pub mode: Mode,
    pub fixed_strategies: BTreeMap<SupplierId, f64>,
    pub learners: BTreeMap<SupplierId, LearnerParams<f64>>,
    pub seed: u64,
    /// Number of market rounds.
    pub iterations: u64,
    pub stagger: Stagger,
}

impl ScenarioSpec {
    /// `learner` learns, everyone else bids the quantity in `fixed`.
    pub fn rationality(
        market: Market<f64>,
        learner: SupplierId,
        fixed: BTreeMap<SupplierId, f64>,
        params: LearnerParams<f64>,
        seed: u64,
    ) -> Result<Self> {
        let iterations = params.iteration_limit;
        let learners = BTreeMap::from([(learner, params.for_supplier(market.supplier(learner)))]);
        let spec = Self {
            market,
            mode: Mode::Rationality,
            fixed_strategies: fixed,
            learners,
            seed,
            iterations,
            stagger: Stagger::None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Every supplier learns with the same parameters.
    pub fn convergence(market: Market<f64>, params: LearnerParams<f64>, seed: u64) -> Result<Self> {
        let iterations = params.iteration_limit;
        let learners = market
            .supplier_ids()
            .map(|id| (id, params.clone().for_supplier(market.supplier(id))))
            .collect();
        let spec = Self {
            market,
            mode: Mode::Convergence,
            fixed_strategies: BTreeMap::new(),
            learners,
            seed,
            iterations,
            stagger: Stagger::None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.market.suppliers().len();
        match self.mode {
            Mode::Rationality if self.learners.len() != 1 => {
                return Err(Error::InvalidParameter(
                    "rationality mode needs exactly one learner".into(),
                ))
            }
            Mode::Convergence if !self.fixed_strategies.is_empty() => {
                return Err(Error::InvalidParameter(
                    "convergence mode takes no fixed strategies".into(),
                ))
            }
            _ => {}
        }
        for id in self.market.supplier_ids() {
            let learns = self.learners.contains_key(&id);
            let fixed = self.fixed_strategies.get(&id);
            if learns == fixed.is_some() {
                return Err(Error::InvalidParameter(format!(
                    "supplier {} must be either learning or fixed",
                    self.market.supplier(id).id
                )));
            }
            if let Some(q) = fixed {
                let s = self.market.supplier(id);
                if !(*q >= s.g_min && *q <= s.g_max) {
                    return Err(Error::InvalidParameter(format!(
                        "fixed bid {q} of supplier {} out of range",
                        s.id
                    )));
                }
            }
        }
        if self
            .learners
            .keys()
            .chain(self.fixed_strategies.keys())
            .any(|id| id.0 >= n)
        {
            return Err(Error::InvalidParameter("strategy for unknown supplier".into()));
        }
        for p in self.learners.values() {
            p.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub seed: u64,
    /// One record per learner per round, in round order then supplier order.
    pub records: Vec<TraceRecord>,
    /// Final automaton state per learner, keyed by supplier id.
    pub final_states: BTreeMap<u32, LearnerState<f64>>,
    /// Rounds the market could not clear.
    pub infeasible_rounds: u64,
}

impl RunTrace {
    pub fn from_records(seed: u64, records: Vec<TraceRecord>) -> Self {
        Self {
            seed,
            records,
            final_states: BTreeMap::new(),
            infeasible_rounds: 0,
        }
    }

    pub fn suppliers(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.records.iter().map(|r| r.supplier).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn for_supplier(&self, supplier: u32) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.supplier == supplier)
    }
}

/// Plays `spec.iterations` market rounds. Each round collects every bid,
/// clears the market once and feeds each learner its own profit.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<RunTrace> {
    spec.validate()?;
    let market = &spec.market;
    let mut learners: Vec<(SupplierId, &LearnerParams<f64>, LearnerState<f64>, ChaCha8Rng)> = spec
        .learners
        .iter()
        .enumerate()
        .map(|(k, (id, params))| {
            let clock = match spec.stagger {
                Stagger::None => 1,
                Stagger::RoundRobin => 1 + (k as u64 % 2),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(id.0 as u64);
            (*id, params, LearnerState::with_clock(params, clock), rng)
        })
        .collect();

    let mut bids = BidProfile::new(vec![0.0; market.suppliers().len()]);
    for (id, q) in &spec.fixed_strategies {
        bids.quantities[id.0] = *q;
    }
    let mut records = Vec::with_capacity(spec.iterations as usize * learners.len());
    let mut infeasible_rounds = 0;

    for t in 1..=spec.iterations {
        let mut kinds = Vec::with_capacity(learners.len());
        for (id, params, state, rng) in learners.iter_mut() {
            kinds.push(state.next_kind());
            bids.quantities[id.0] = state.select_action(params, rng);
        }
        let cleared = match clear_market(market, &bids) {
            Ok(r) => Some(r),
            Err(e) => {
                infeasible_rounds += 1;
                log::warn!("round {t}: {e}; learners scored as infeasible");
                None
            }
        };
        for ((id, params, state, _), kind) in learners.iter_mut().zip(kinds) {
            let (profit, lmp) = match &cleared {
                Some(r) => (
                    r.supplier_profit(market, &bids, *id)?,
                    Some(r.supplier_lmp(market, *id)),
                ),
                None => (params.infeasible_profit, None),
            };
            state.observe(profit, params);
            records.push(TraceRecord {
                t,
                supplier: market.supplier(*id).id,
                kind,
                action_mw: bids.get(*id),
                profit_per_h: profit,
                lmp,
            });
        }
    }

    let final_states = learners
        .into_iter()
        .map(|(id, _, state, _)| (market.supplier(id).id, state))
        .collect();
    Ok(RunTrace {
        seed: spec.seed,
        records,
        final_states,
        infeasible_rounds,
    })
}

/// Mean of `f` over the mean-play records of `supplier` in the last
/// `tail_window` rounds.
pub(crate) fn tail_mean<F>(trace: &RunTrace, supplier: u32, tail_window: u64, f: F) -> Option<f64>
where
    F: Fn(&TraceRecord) -> Option<f64>,
{
    let last = trace.for_supplier(supplier).map(|r| r.t).max()?;
    let first = last.saturating_sub(tail_window);
    let vals: Vec<f64> = trace
        .for_supplier(supplier)
        .filter(|r| r.t > first && r.kind == PlayKind::Mean)
        .filter_map(&f)
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}
