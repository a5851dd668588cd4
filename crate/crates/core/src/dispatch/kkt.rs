use serde::{Deserialize, Serialize};

use super::DispatchResult;
use crate::market::{BidProfile, LineId, Market};
use crate::scalar::Scalar;

/// Largest violation of each optimality condition of a clearing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport<T> {
    /// |Σ demand − Σ bids|, demand sign and line-limit excess.
    pub primal: T,
    /// Marginal utility vs. nodal price, and nodal price vs. the
    /// reference price shifted by line shadow prices.
    pub stationarity: T,
    /// Slack on lines carrying a nonzero multiplier, and demand on
    /// consumers carrying a nonzero floor multiplier.
    pub complementarity: T,
    /// Negative multipliers.
    pub dual_sign: T,
    pub max_violation: T,
}

impl<T: Scalar> KktReport<T> {
    pub fn passes(&self, tol: T) -> bool {
        self.max_violation <= tol
    }
}

/// Recomputes the optimality conditions of `result` from scratch.
pub fn kkt_check<T: Scalar>(market: &Market<T>, bids: &BidProfile<T>, result: &DispatchResult<T>) -> KktReport<T> {
    let net = market.network();
    let ptdf = market.ptdf();
    let nb = net.bus_count;
    let upd = |acc: &mut T, v: T| *acc = acc.max(v.abs());
    let (mut primal, mut stationarity, mut complementarity, mut dual_sign) =
        (T::zero(), T::zero(), T::zero(), T::zero());

    // primal
    let total_d: T = result.demands.iter().copied().sum();
    upd(&mut primal, total_d - bids.total());
    for d in &result.demands {
        if *d < T::zero() {
            upd(&mut primal, *d);
        }
    }
    let mut inj = vec![T::zero(); nb];
    for (s, q) in market.suppliers().iter().zip(&bids.quantities) {
        inj[s.node.0] = inj[s.node.0] + *q;
    }
    for (c, d) in market.consumers().iter().zip(&result.demands) {
        inj[c.node.0] = inj[c.node.0] - *d;
    }
    let flows = ptdf.flows(&inj);
    for (l, line) in net.lines.iter().enumerate() {
        upd(&mut primal, flows[l] - result.flows[l]);
        if let Some(cap) = line.capacity {
            if flows[l].abs() > cap {
                upd(&mut primal, flows[l].abs() - cap);
            }
        }
    }

    // dual sign and complementary slackness on lines
    let mut shift = vec![T::zero(); nb];
    for b in &result.binding_lines {
        if b.multiplier < T::zero() {
            upd(&mut dual_sign, b.multiplier);
        }
        let line = &net.lines[b.line.0];
        let s = b.direction.sign::<T>();
        match line.capacity {
            Some(cap) if b.multiplier != T::zero() => {
                upd(&mut complementarity, cap - s * flows[b.line.0]);
            }
            None => upd(&mut complementarity, b.multiplier),
            _ => {}
        }
        let row = ptdf.row(LineId(b.line.0));
        for k in 0..nb {
            shift[k] = shift[k] + b.multiplier * s * row[k];
        }
    }
    for (k, lmp) in result.lmps.iter().enumerate() {
        upd(&mut stationarity, *lmp - (result.system_price - shift[k]));
    }

    // stationarity per consumer; the floor multiplier absorbs the gap at D = 0
    for (i, (c, d)) in market.consumers().iter().zip(&result.demands).enumerate() {
        let gap = c.marginal_utility(*d) - result.lmps[c.node.0];
        let nu = result.demand_multipliers.get(i).copied().unwrap_or(T::zero());
        if nu < T::zero() {
            upd(&mut dual_sign, nu);
        }
        if *d > T::zero() {
            upd(&mut stationarity, gap);
            if nu != T::zero() {
                upd(&mut complementarity, nu * *d);
            }
        } else if gap > T::zero() {
            upd(&mut stationarity, gap);
        }
    }

    let max_violation = primal.max(stationarity).max(complementarity).max(dual_sign);
    KktReport {
        primal,
        stationarity,
        complementarity,
        dual_sign,
        max_violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::clear_market;
    use crate::market::threebus;

    #[test]
    fn uncongested_has_no_line_duals() {
        let m = threebus::market::<f64>();
        let bids = BidProfile::new(vec![1105.0, 1046.0, 995.0]);
        let r = clear_market(&m, &bids).unwrap();
        assert!(r.binding_lines.is_empty());
        assert!(r.lmps.windows(2).all(|w| w[0] == w[1]));
        assert!(kkt_check(&m, &bids, &r).passes(1e-6));
    }

    #[test]
    fn congested_single_binding_line() {
        let m = threebus::congested_market::<f64>();
        let bids = BidProfile::new(vec![781.0, 1268.0, 645.0]);
        let r = clear_market(&m, &bids).unwrap();
        let rep = kkt_check(&m, &bids, &r);
        assert!(rep.passes(1e-6), "{rep:?}");
        assert_eq!(r.binding_lines.len(), 1);
        assert_eq!(r.binding_lines[0].line, threebus::LINE_13);
        assert!(r.binding_lines[0].multiplier > 0.0);
    }

    #[test]
    fn detects_tampered_price() {
        let m = threebus::market::<f64>();
        let bids = BidProfile::new(vec![1105.0, 1046.0, 995.0]);
        let mut r = clear_market(&m, &bids).unwrap();
        r.lmps[1] += 0.5;
        assert!(kkt_check(&m, &bids, &r).stationarity >= 0.5 - 1e-9);
    }

    #[test]
    fn local_transfer_probe_does_not_improve() {
        let m = threebus::market::<f64>();
        let bids = BidProfile::new(vec![1105.0, 1046.0, 995.0]);
        let r = clear_market(&m, &bids).unwrap();
        for (from, to) in [(0, 1), (1, 2), (2, 0)] {
            let mut d = r.demands.clone();
            d[from] += 1.0;
            d[to] -= 1.0;
            let obj: f64 = m
                .consumers()
                .iter()
                .zip(&d)
                .map(|(c, x)| crate::market::utility_of(c, *x).unwrap())
                .sum();
            assert!(obj <= r.objective);
        }
    }
}
