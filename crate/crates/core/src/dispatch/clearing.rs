use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::market::{profit_of, utility_of, BidProfile, BusId, ConsumerParams, LineId, Market, SupplierId};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlowDirection {
    /// Flow at `+capacity`, from → to.
    Forward,
    /// Flow at `-capacity`, to → from.
    Reverse,
}

impl FlowDirection {
    pub fn sign<T: Scalar>(self) -> T {
        match self {
            FlowDirection::Forward => T::one(),
            FlowDirection::Reverse => -T::one(),
        }
    }
}

/// A line held at its limit in the accepted active set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindingLine<T> {
    pub line: LineId,
    pub direction: FlowDirection,
    /// Shadow price of the limit, $/MWh per MW.
    pub multiplier: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchResult<T> {
    /// Cleared demand per consumer.
    pub demands: Vec<T>,
    /// Cleared demand aggregated per bus.
    pub bus_demands: Vec<T>,
    /// Nodal price per bus.
    pub lmps: Vec<T>,
    /// Signed flow per line, positive from → to.
    pub flows: Vec<T>,
    pub binding_lines: Vec<BindingLine<T>>,
    /// Multiplier of each consumer's `D ≥ 0` bound (zero when not at the bound).
    pub demand_multipliers: Vec<T>,
    /// Price at the reference bus (dual of the balance constraint).
    pub system_price: T,
    /// Total consumer utility, $/h.
    pub objective: T,
}

impl<T: Scalar> DispatchResult<T> {
    /// Single market price when no line binds.
    pub fn uniform_price(&self) -> Option<T> {
        self.binding_lines.is_empty().then_some(self.system_price)
    }

    pub fn lmp_at(&self, bus: BusId) -> T {
        self.lmps[bus.0]
    }

    pub fn supplier_lmp(&self, market: &Market<T>, id: SupplierId) -> T {
        self.lmps[market.supplier(id).node.0]
    }

    pub fn supplier_profit(&self, market: &Market<T>, bids: &BidProfile<T>, id: SupplierId) -> Result<T> {
        let g = bids.get(id).max(T::zero());
        profit_of(market.supplier(id), g, self.supplier_lmp(market, id))
    }

    pub fn is_congested(&self) -> bool {
        !self.binding_lines.is_empty()
    }
}

/// Uniform-price clearing that ignores the network: every consumer sits on
/// its marginal-utility curve at a common price.
pub fn closed_form_uncongested<T: Scalar>(
    bids: &BidProfile<T>,
    consumers: &[ConsumerParams<T>],
) -> Result<(T, Vec<T>)> {
    if consumers.is_empty() {
        return Err(Error::InvalidParameter("no consumers".into()));
    }
    let total = bids.total();
    let sum_wv: T = consumers.iter().map(|c| c.w / c.v).sum();
    let sum_inv: T = consumers.iter().map(|c| T::one() / c.v).sum();
    let price = (sum_wv - total) / sum_inv;
    let demands: Vec<T> = consumers.iter().map(|c| (c.w - price) / c.v).collect();
    if let Some((i, d)) = demands.iter().enumerate().find(|(_, d)| **d < T::zero()) {
        return Err(Error::ClosedFormInvalid {
            consumer: i,
            demand: d.as_f64(),
        });
    }
    Ok((price, demands))
}

#[derive(Debug, Clone, Copy)]
enum Active {
    Line(usize, FlowDirection),
    ZeroDemand(usize),
}

/// Shared per-call data for candidate active sets.
struct Problem<'a, T> {
    market: &'a Market<T>,
    bids: &'a BidProfile<T>,
    gen_injection: Vec<T>,
    total: T,
    bounded: Vec<usize>,
    price_tol: T,
    qty_tol: T,
}

impl<'a, T: Scalar> Problem<'a, T> {
    fn new(market: &'a Market<T>, bids: &'a BidProfile<T>) -> Self {
        let nb = market.network().bus_count;
        let mut gen_injection = vec![T::zero(); nb];
        for (s, q) in market.suppliers().iter().zip(&bids.quantities) {
            gen_injection[s.node.0] = gen_injection[s.node.0] + *q;
        }
        let total = bids.total();
        let bounded = market
            .network()
            .lines
            .iter()
            .enumerate()
            .filter(|(_, l)| l.capacity.is_some())
            .map(|(i, _)| i)
            .collect();
        let wmax = market.consumers().iter().fold(T::one(), |m, c| m.max(c.w.abs()));
        let caps = market
            .network()
            .lines
            .iter()
            .filter_map(|l| l.capacity)
            .fold(T::one(), |m, c| m.max(c));
        Self {
            market,
            bids,
            gen_injection,
            total,
            bounded,
            price_tol: T::solver_tol() * wmax,
            qty_tol: T::solver_tol() * caps.max(total).max(T::one()),
        }
    }

    fn ptdf_at(&self, line: usize, consumer: usize) -> T {
        let bus = self.market.consumers()[consumer].node;
        self.market.ptdf().get(LineId(line), bus)
    }

    fn gen_flow(&self, line: usize) -> T {
        self.market
            .ptdf()
            .row(LineId(line))
            .iter()
            .zip(&self.gen_injection)
            .map(|(p, g)| *p * *g)
            .sum()
    }

    /// Solves the equality-constrained KKT system of one active set and
    /// returns the result if it is primal and dual feasible.
    fn try_active_set(&self, active: &[Active]) -> Option<DispatchResult<T>> {
        let consumers = self.market.consumers();
        let nc = consumers.len();
        let lines: Vec<(usize, FlowDirection)> = active
            .iter()
            .filter_map(|a| match a {
                Active::Line(l, d) => Some((*l, *d)),
                _ => None,
            })
            .collect();
        let zeros: Vec<usize> = active
            .iter()
            .filter_map(|a| match a {
                Active::ZeroDemand(c) => Some(*c),
                _ => None,
            })
            .collect();
        let (nl, nz) = (lines.len(), zeros.len());
        let dim = nc + 1 + nl + nz;
        let lam = nc;
        let mu0 = nc + 1;
        let nu0 = nc + 1 + nl;

        let mut a = DenseMatrix::<T>::zeros(dim);
        let mut rhs = vec![T::zero(); dim];
        // stationarity: w - v D - λ + Σ μ s PTDF + ν = 0
        for (c, con) in consumers.iter().enumerate() {
            a.set(c, c, -con.v);
            a.set(c, lam, -T::one());
            for (j, (l, d)) in lines.iter().enumerate() {
                a.set(c, mu0 + j, d.sign::<T>() * self.ptdf_at(*l, c));
            }
            rhs[c] = -con.w;
        }
        for (k, c) in zeros.iter().enumerate() {
            a.set(*c, nu0 + k, T::one());
            a.set(nu0 + k, *c, T::one());
        }
        // balance
        for c in 0..nc {
            a.set(lam, c, T::one());
        }
        rhs[lam] = self.total;
        // s · flow = cap, flow = PTDF·gen − Σ PTDF_c D_c
        for (j, (l, d)) in lines.iter().enumerate() {
            let s = d.sign::<T>();
            for c in 0..nc {
                a.set(mu0 + j, c, -s * self.ptdf_at(*l, c));
            }
            let cap = self.market.network().lines[*l].capacity.expect("bounded line");
            rhs[mu0 + j] = cap - s * self.gen_flow(*l);
        }

        let x = a.solve(&rhs, T::epsilon() * T::lit(1e4))?;
        let demands = &x[..nc];
        let system_price = x[lam];
        let mus = &x[mu0..nu0];
        let nus = &x[nu0..];

        if mus.iter().chain(nus).any(|m| *m < -self.price_tol) {
            return None;
        }
        if demands.iter().any(|d| *d < -self.qty_tol) {
            return None;
        }
        let demands: Vec<T> = demands.iter().map(|d| d.max(T::zero())).collect();

        let nb = self.market.network().bus_count;
        let mut bus_demands = vec![T::zero(); nb];
        for (c, con) in consumers.iter().enumerate() {
            bus_demands[con.node.0] = bus_demands[con.node.0] + demands[c];
        }
        let injections: Vec<T> = self
            .gen_injection
            .iter()
            .zip(&bus_demands)
            .map(|(g, d)| *g - *d)
            .collect();
        let flows = self.market.ptdf().flows(&injections);
        for &l in &self.bounded {
            let cap = self.market.network().lines[l].capacity.expect("bounded line");
            if flows[l].abs() > cap + self.qty_tol {
                return None;
            }
        }

        let mut lmps = vec![system_price; nb];
        for (j, (l, d)) in lines.iter().enumerate() {
            let s = d.sign::<T>();
            let row = self.market.ptdf().row(LineId(*l));
            for b in 0..nb {
                lmps[b] = lmps[b] - mus[j].max(T::zero()) * s * row[b];
            }
        }
        let mut demand_multipliers = vec![T::zero(); nc];
        for (k, c) in zeros.iter().enumerate() {
            demand_multipliers[*c] = nus[k].max(T::zero());
        }
        let objective = consumers
            .iter()
            .zip(&demands)
            .map(|(c, d)| utility_of(c, *d).expect("non-negative demand"))
            .sum();
        let binding_lines = lines
            .iter()
            .zip(mus)
            .map(|((l, d), m)| BindingLine {
                line: LineId(*l),
                direction: *d,
                multiplier: m.max(T::zero()),
            })
            .collect();

        Some(DispatchResult {
            demands,
            bus_demands,
            lmps,
            flows,
            binding_lines,
            demand_multipliers,
            system_price,
            objective,
        })
    }

    /// Enumerates active sets by increasing size; the first KKT point found
    /// is the optimum since the objective is strictly concave in demand.
    fn solve(&self) -> Option<DispatchResult<T>> {
        let nc = self.market.consumers().len();
        let items = self.bounded.len() + nc;
        let mut chosen = Vec::with_capacity(items);
        for size in 0..=items {
            if let Some(r) = self.search(0, size, &mut chosen) {
                return Some(r);
            }
        }
        None
    }

    fn search(&self, start: usize, remaining: usize, chosen: &mut Vec<Active>) -> Option<DispatchResult<T>> {
        if remaining == 0 {
            return self.try_active_set(chosen);
        }
        let nlines = self.bounded.len();
        let items = nlines + self.market.consumers().len();
        for item in start..=items - remaining {
            if item < nlines {
                for dir in [FlowDirection::Forward, FlowDirection::Reverse] {
                    chosen.push(Active::Line(self.bounded[item], dir));
                    let r = self.search(item + 1, remaining - 1, chosen);
                    chosen.pop();
                    if r.is_some() {
                        return r;
                    }
                }
            } else {
                chosen.push(Active::ZeroDemand(item - nlines));
                let r = self.search(item + 1, remaining - 1, chosen);
                chosen.pop();
                if r.is_some() {
                    return r;
                }
            }
        }
        None
    }

    fn diagnose(&self) -> String {
        let relaxed = self.market.unconstrained();
        match Problem::new(&relaxed, self.bids).solve() {
            Some(r) => {
                let over: Vec<String> = self
                    .bounded
                    .iter()
                    .filter_map(|&l| {
                        let cap = self.market.network().lines[l].capacity?;
                        (r.flows[l].abs() > cap).then(|| {
                            format!(
                                "line {} carries {:.3} MW against a {:.3} MW limit",
                                self.market.network().line_label(LineId(l)),
                                r.flows[l],
                                cap
                            )
                        })
                    })
                    .collect();
                if over.is_empty() {
                    "no active set satisfied the KKT conditions".to_string()
                } else {
                    format!(
                        "line limits cannot be met with non-negative demand ({})",
                        over.join("; ")
                    )
                }
            }
            None => "power balance cannot be met with non-negative demand".to_string(),
        }
    }
}

/// Allocates the fixed bid quantities to consumers so that total utility is
/// maximal under power balance and line limits, and prices every bus.
pub fn clear_market<T: Scalar>(market: &Market<T>, bids: &BidProfile<T>) -> Result<DispatchResult<T>> {
    bids.validate(market.suppliers())?;
    let problem = Problem::new(market, bids);
    problem.solve().ok_or_else(|| Error::Infeasible(problem.diagnose()))
}
