//! Continuous-action learning automaton for a single supplier's bid.
//!
//! The automaton keeps a Gaussian `N(μ, σ)` over bid quantities. Odd
//! iterations bid `μ`, even iterations bid a sample `x`; after each
//! (mean, sample) pair the two profits are compared and `μ` and `σ` move by
//! fixed steps:
//!
//! ```text
//! μ ← μ + k_μ·δ_μ          k_μ = sign(x − μ) if x paid more, sign(μ − x) if it paid less
//! σ ← σ + k_σ·δ_σ − c      k_σ = +1 for (better, far) or (worse, near), −1 otherwise
//! ```
//!
//! where "near" means the sample landed within one σ of the mean.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::SupplierParams;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlayKind {
    Mean,
    Sampled,
}

impl PlayKind {
    /// Mean play on odd iterations, sampled play on even ones.
    pub fn for_iteration(t: u64) -> Self {
        if t % 2 == 1 {
            PlayKind::Mean
        } else {
            PlayKind::Sampled
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PlayKind::Mean => "mean",
            PlayKind::Sampled => "sampled",
        }
    }
}

/// How the sample's deviation from the mean is measured against σ.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpreadReading {
    /// `|x − μ|`, symmetric in the direction of the sample.
    #[default]
    Absolute,
    /// `x − μ`, so samples below the mean always count as near.
    Signed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerParams<T> {
    pub delta_mu: T,
    pub delta_sigma: T,
    /// Decay subtracted from σ on every update.
    pub c: T,
    pub sigma_floor: T,
    pub mu0: T,
    pub sigma0: T,
    pub action_min: T,
    pub action_max: T,
    pub iteration_limit: u64,
    pub spread: SpreadReading,
    /// Profit credited when the market cannot clear the bid.
    pub infeasible_profit: T,
}

impl<T: Scalar> Default for LearnerParams<T> {
    fn default() -> Self {
        Self {
            delta_mu: T::one(),
            delta_sigma: T::lit(0.2),
            c: T::lit(1e-3),
            sigma_floor: T::lit(0.1),
            mu0: T::lit(600.0),
            sigma0: T::lit(20.0),
            action_min: T::zero(),
            action_max: T::lit(2000.0),
            iteration_limit: 6000,
            spread: SpreadReading::Absolute,
            infeasible_profit: T::zero(),
        }
    }
}

impl<T: Scalar> LearnerParams<T> {
    /// Binds the action range and the infeasibility penalty to a supplier.
    pub fn for_supplier(mut self, supplier: &SupplierParams<T>) -> Self {
        self.action_min = supplier.g_min;
        self.action_max = supplier.g_max;
        self.infeasible_profit = -supplier.o;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: T, name: &str| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "learner {name} must be positive, got {v}"
                )))
            }
        };
        pos(self.delta_mu, "delta_mu")?;
        pos(self.delta_sigma, "delta_sigma")?;
        pos(self.c, "c")?;
        if !(self.sigma_floor >= T::zero()) {
            return Err(Error::InvalidParameter("learner sigma_floor must be >= 0".into()));
        }
        if !(self.action_min < self.action_max) {
            return Err(Error::InvalidParameter(format!(
                "learner action range [{}, {}] is empty",
                self.action_min, self.action_max
            )));
        }
        if !(self.sigma0 >= T::zero() && self.mu0.is_finite()) {
            return Err(Error::InvalidParameter("learner initial distribution invalid".into()));
        }
        Ok(())
    }

    pub fn clamp_action(&self, a: T) -> T {
        a.max(self.action_min).min(self.action_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceRecord<T> {
    pub t: u64,
    pub action: T,
    pub profit: T,
    pub kind: PlayKind,
}

/// Outcome of one distribution update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateSigns {
    pub k_mu: i8,
    pub k_sigma: i8,
}

/// Step directions for a (sample, mean) profit comparison. Ties move
/// neither μ nor σ; σ then only decays.
pub fn update_signs<T: Scalar>(mu: T, sigma: T, x: T, b_x: T, b_mu: T, spread: SpreadReading) -> UpdateSigns {
    let dx = x - mu;
    let dir = if dx > T::zero() {
        1
    } else if dx < T::zero() {
        -1
    } else {
        0
    };
    let deviation = match spread {
        SpreadReading::Absolute => dx.abs(),
        SpreadReading::Signed => dx,
    };
    let near = deviation <= sigma;
    if b_x > b_mu {
        UpdateSigns {
            k_mu: dir,
            k_sigma: if near { -1 } else { 1 },
        }
    } else if b_x < b_mu {
        UpdateSigns {
            k_mu: -dir,
            k_sigma: if near { 1 } else { -1 },
        }
    } else {
        UpdateSigns { k_mu: 0, k_sigma: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerState<T> {
    pub mu: T,
    pub sigma: T,
    /// Iteration about to be played; starts at 1.
    pub t: u64,
    pub buffer: Vec<ExperienceRecord<T>>,
    #[serde(skip)]
    pending: Option<(T, PlayKind)>,
}

impl<T: Scalar> LearnerState<T> {
    pub fn new(params: &LearnerParams<T>) -> Self {
        Self::with_clock(params, 1)
    }

    /// Starts the parity clock at `t0` instead of 1.
    pub fn with_clock(params: &LearnerParams<T>, t0: u64) -> Self {
        Self {
            mu: params.clamp_action(params.mu0),
            sigma: params.sigma0.max(params.sigma_floor),
            t: t0.max(1),
            buffer: Vec::new(),
            pending: None,
        }
    }

    pub fn next_kind(&self) -> PlayKind {
        PlayKind::for_iteration(self.t)
    }

    /// Bid for the current iteration: μ on mean plays, a clamped Gaussian
    /// sample on sampled plays.
    pub fn select_action<R: Rng + ?Sized>(&mut self, params: &LearnerParams<T>, rng: &mut R) -> T {
        let kind = self.next_kind();
        let action = match kind {
            PlayKind::Mean => self.mu,
            PlayKind::Sampled => {
                let z: f64 = rng.sample(StandardNormal);
                params.clamp_action(self.mu + self.sigma * T::lit(z))
            }
        };
        self.pending = Some((action, kind));
        action
    }

    /// Records the profit of the pending action, updates the distribution
    /// once two plays of the current pair are available, and advances `t`.
    ///
    /// Panics if no action is pending.
    pub fn observe(&mut self, profit: T, params: &LearnerParams<T>) -> Option<UpdateSigns> {
        let (action, kind) = self.pending.take().expect("observe called without select_action");
        self.buffer.push(ExperienceRecord {
            t: self.t,
            action,
            profit,
            kind,
        });
        let mut signs = None;
        if self.t > 2 && self.buffer.len() >= 2 {
            let cur = &self.buffer[self.buffer.len() - 1];
            let prev = &self.buffer[self.buffer.len() - 2];
            let (x, b_x, b_mu) = match cur.kind {
                PlayKind::Mean => (prev.action, prev.profit, cur.profit),
                PlayKind::Sampled => (cur.action, cur.profit, prev.profit),
            };
            signs = Some(self.update_distribution(x, b_x, b_mu, params));
        }
        self.t += 1;
        signs
    }

    /// Applies one fixed-step update of μ and σ from a profit comparison.
    pub fn update_distribution(&mut self, x: T, b_x: T, b_mu: T, params: &LearnerParams<T>) -> UpdateSigns {
        let signs = update_signs(self.mu, self.sigma, x, b_x, b_mu, params.spread);
        let k_mu = T::lit(signs.k_mu as f64);
        let k_sigma = T::lit(signs.k_sigma as f64);
        self.mu = params.clamp_action(self.mu + k_mu * params.delta_mu);
        self.sigma = (self.sigma + k_sigma * params.delta_sigma - params.c).max(params.sigma_floor);
        signs
    }

    /// Plays one iteration against `market`, which maps a bid to its profit.
    /// A market error is scored as `params.infeasible_profit`.
    pub fn learning_step<R, F>(&mut self, mut market: F, params: &LearnerParams<T>, rng: &mut R) -> Option<UpdateSigns>
    where
        R: Rng + ?Sized,
        F: FnMut(T) -> Result<T>,
    {
        let action = self.select_action(params, rng);
        let profit = match market(action) {
            Ok(p) => p,
            Err(e) => {
                log::debug!("bid {action} not clearable ({e}); scoring as infeasible");
                params.infeasible_profit
            }
        };
        self.observe(profit, params)
    }

    /// Records in the buffer that were mean plays.
    pub fn mean_plays(&self) -> impl Iterator<Item = &ExperienceRecord<T>> {
        self.buffer.iter().filter(|r| r.kind == PlayKind::Mean)
    }
}
