//! Brute-force benchmark: grid best responses and Gauss–Seidel iterated best
//! response to locate a pure-strategy Nash equilibrium in bid quantities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispatch::clear_market;
use crate::error::{Error, Result};
use crate::market::{BidProfile, Market, SupplierId};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponseResult<T> {
    pub supplier: SupplierId,
    pub quantity: T,
    pub profit: T,
    pub lmp_at_node: T,
    pub grid_step: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashResult<T> {
    pub quantities: Vec<T>,
    pub profits: Vec<T>,
    /// Nodal prices per bus at the final profile.
    pub lmps: Vec<T>,
    /// Gauss–Seidel sweeps performed, including the final quiet one.
    pub iterations: usize,
    pub converged: bool,
    pub grid_step: T,
    /// End-of-sweep profiles of a detected best-response cycle, in visit
    /// order. Empty unless the iteration revisited an earlier profile.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cycle: Vec<Vec<T>>,
}

impl<T: Scalar> NashResult<T> {
    pub fn bids(&self) -> BidProfile<T> {
        BidProfile::new(self.quantities.clone())
    }
}

/// Grid points `g_min, g_min + step, …` up to and including `g_max`.
pub fn grid<T: Scalar>(lo: T, hi: T, step: T) -> Vec<T> {
    let n = ((hi - lo) / step).floor().to_usize().unwrap_or(0);
    let mut pts: Vec<T> = (0..=n).map(|k| lo + step * T::lit(k as f64)).collect();
    if let Some(last) = pts.last().copied() {
        if hi - last > step * T::lit(1e-9) {
            pts.push(hi);
        }
    }
    pts
}

/// Profit of `id` and its nodal price for a full bid profile.
pub fn evaluate<T: Scalar>(market: &Market<T>, bids: &BidProfile<T>, id: SupplierId) -> Result<(T, T)> {
    let r = clear_market(market, bids)?;
    Ok((r.supplier_profit(market, bids, id)?, r.supplier_lmp(market, id)))
}

/// Profit-maximizing quantity for `id` on a grid over its output range, with
/// every other supplier held at its entry in `others`. Ties go to the
/// smaller quantity; grid points the market cannot clear are skipped.
pub fn best_response<T: Scalar>(
    market: &Market<T>,
    id: SupplierId,
    others: &BidProfile<T>,
    grid_step: T,
) -> Result<BestResponseResult<T>> {
    if !(grid_step > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "grid step must be positive, got {grid_step}"
        )));
    }
    if id.0 >= market.suppliers().len() {
        return Err(Error::UnknownSupplier(id.0 as u32));
    }
    let s = market.supplier(id);
    let points = grid(s.g_min, s.g_max, grid_step);
    let evaluated: Vec<Option<(T, T)>> = points
        .par_iter()
        .map(|q| evaluate(market, &others.with(id, *q), id).ok())
        .collect();

    let mut best: Option<(T, T, T)> = None;
    for (q, r) in points.iter().zip(evaluated) {
        if let Some((profit, lmp)) = r {
            if best.is_none_or(|(_, bp, _)| profit > bp) {
                best = Some((*q, profit, lmp));
            }
        }
    }
    let (quantity, profit, lmp_at_node) =
        best.ok_or_else(|| Error::Infeasible(format!("no clearable quantity for supplier {}", s.id)))?;
    Ok(BestResponseResult {
        supplier: id,
        quantity,
        profit,
        lmp_at_node,
        grid_step,
    })
}

/// Gauss–Seidel iterated best response from `initial` until a full sweep
/// moves nobody by more than one grid step. Stops early, unconverged, when
/// a sweep ends on a profile already visited.
pub fn iterate_nash<T: Scalar>(
    market: &Market<T>,
    grid_step: T,
    max_rounds: usize,
    initial: &BidProfile<T>,
) -> Result<NashResult<T>> {
    if max_rounds == 0 {
        return Err(Error::InvalidParameter("max_rounds must be at least 1".into()));
    }
    if initial.quantities.len() != market.suppliers().len() {
        return Err(Error::InvalidParameter("initial profile size mismatch".into()));
    }
    let mut bids = BidProfile::new(
        initial
            .quantities
            .iter()
            .zip(market.suppliers())
            .map(|(q, s)| s.clamp_output(*q))
            .collect(),
    );
    let tol = grid_step * T::lit(1.0 + 1e-9);
    let mut converged = false;
    let mut iterations = 0;
    let mut visited: Vec<Vec<T>> = Vec::new();
    let mut cycle = Vec::new();
    for _ in 0..max_rounds {
        iterations += 1;
        let mut moved = false;
        for id in market.supplier_ids() {
            let br = best_response(market, id, &bids, grid_step)?;
            if (br.quantity - bids.get(id)).abs() > tol {
                moved = true;
            }
            bids = bids.with(id, br.quantity);
        }
        log::debug!("sweep {iterations}: {:?}", bids.quantities);
        if !moved {
            converged = true;
            break;
        }
        if let Some(start) = visited.iter().position(|v| *v == bids.quantities) {
            cycle = visited.split_off(start);
            break;
        }
        visited.push(bids.quantities.clone());
    }
    if !cycle.is_empty() {
        log::warn!("iterated best response cycles with period {}", cycle.len());
    } else if !converged {
        log::warn!("iterated best response did not settle in {max_rounds} sweeps");
    }
    let r = clear_market(market, &bids)?;
    let profits = market
        .supplier_ids()
        .map(|id| r.supplier_profit(market, &bids, id))
        .collect::<Result<Vec<_>>>()?;
    Ok(NashResult {
        quantities: bids.quantities,
        profits,
        lmps: r.lmps,
        iterations,
        converged,
        grid_step,
        cycle,
    })
}

/// `|learned − benchmark| / |benchmark| × 100`.
pub fn percentage_error<T: Scalar>(learned: T, benchmark: T) -> Result<T> {
    if benchmark == T::zero() {
        return Err(Error::ZeroBenchmark);
    }
    Ok((learned - benchmark).abs() / benchmark.abs() * T::lit(100.0))
}

/// Largest profit gain any supplier can get by moving `k` grid steps away
/// from `profile` for `k` in `1..=max_steps`, either direction. Non-positive
/// at a grid Nash point.
pub fn max_unilateral_gain<T: Scalar>(
    market: &Market<T>,
    profile: &BidProfile<T>,
    grid_step: T,
    max_steps: usize,
) -> Result<T> {
    let mut gain = T::neg_infinity();
    for id in market.supplier_ids() {
        let s = market.supplier(id);
        let (base, _) = evaluate(market, profile, id)?;
        for k in 1..=max_steps {
            for sign in [T::one(), -T::one()] {
                let q = profile.get(id) + sign * grid_step * T::lit(k as f64);
                if q < s.g_min || q > s.g_max {
                    continue;
                }
                if let Ok((p, _)) = evaluate(market, &profile.with(id, q), id) {
                    gain = gain.max(p - base);
                }
            }
        }
    }
    Ok(gain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{threebus, BusId, ConsumerParams, Network, SupplierParams};
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_includes_both_ends() {
        let g = grid(0.0, 10.0, 3.0);
        assert_eq!(g, vec![0.0, 3.0, 6.0, 9.0, 10.0]);
        assert_eq!(grid(0.0, 2.0, 1.0), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn percentage_error_examples() {
        assert_abs_diff_eq!(percentage_error(25436.0, 25221.0).unwrap(), 0.85, epsilon = 0.005);
        assert_eq!(percentage_error(5.0, 5.0).unwrap(), 0.0);
        let e: f64 = percentage_error(815.0, 781.0).unwrap();
        assert_abs_diff_eq!(e, 4.35, epsilon = 0.005);
        assert_eq!(format!("{e:.1}"), "4.4");
        assert!(matches!(percentage_error(1.0, 0.0), Err(Error::ZeroBenchmark)));
    }

    #[test]
    fn best_response_uncongested() {
        let m = threebus::market::<f64>();
        let others = BidProfile::new(vec![0.0, 1046.0, 995.0]);
        let br = best_response(&m, SupplierId(0), &others, 1.0).unwrap();
        assert_abs_diff_eq!(br.quantity, 1105.0, epsilon = 1.0);
        assert_abs_diff_eq!(br.profit, 25221.0, epsilon = 30.0);
        assert_eq!(br.grid_step, 1.0);
    }

    #[test]
    fn best_response_matches_first_order_condition() {
        // uniform price p(S) = (A - S)/B; dπ/dG = p - G/B - mG - n = 0
        let cons = threebus::consumers::<f64>();
        let a: f64 = cons.iter().map(|c| c.w / c.v).sum();
        let b: f64 = cons.iter().map(|c| 1.0 / c.v).sum();
        let s = &threebus::suppliers::<f64>()[0];
        let rest = 1046.0 + 995.0;
        let g = ((a - rest) / b - s.n) / (2.0 / b + s.m);
        assert_abs_diff_eq!(g, 1105.5, epsilon = 0.1);
        let m = threebus::market::<f64>();
        let br = best_response(&m, SupplierId(0), &BidProfile::new(vec![0.0, 1046.0, 995.0]), 1.0).unwrap();
        assert!((br.quantity - g).abs() <= 1.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let m = threebus::market::<f64>();
        let b = m.midpoint_bids();
        assert!(best_response(&m, SupplierId(0), &b, 0.0).is_err());
        assert!(best_response(&m, SupplierId(5), &b, 1.0).is_err());
        assert!(iterate_nash(&m, 1.0, 0, &b).is_err());
    }

    #[test]
    fn monopoly_in_one_sweep() {
        let net = Network::new(1, vec![], BusId(0)).unwrap();
        let sup = vec![SupplierParams {
            id: 1,
            node: BusId(0),
            m: 0.02,
            n: 5.0,
            o: 100.0,
            g_min: 0.0,
            g_max: 2000.0,
        }];
        let cons = vec![ConsumerParams {
            id: 1,
            node: BusId(0),
            w: 100.0,
            v: 0.05,
        }];
        let m = Market::new(net, sup, cons).unwrap();
        // p = w - vG; dπ/dG = w - 2vG - mG - n = 0
        let monopoly: f64 = (100.0 - 5.0) / (2.0 * 0.05 + 0.02);
        let one = iterate_nash(&m, 1.0, 1, &m.midpoint_bids()).unwrap();
        assert!((one.quantities[0] - monopoly).abs() <= 1.0);
        let full = iterate_nash(&m, 1.0, 10, &m.midpoint_bids()).unwrap();
        assert!(full.converged);
        assert_eq!(full.quantities, one.quantities);
        assert_eq!(full.iterations, 2);
    }

    #[test]
    fn reports_congested_cycle() {
        let m = threebus::congested_market::<f64>();
        let n = iterate_nash(&m, 1.0, 50, &m.midpoint_bids()).unwrap();
        assert!(!n.converged);
        assert!(n.cycle.len() >= 2, "{:?}", n.cycle);
        assert!(n.iterations < 50);
        assert!(n.cycle.contains(&n.quantities));
    }
}
