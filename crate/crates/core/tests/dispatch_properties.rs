use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cournot_la::dispatch::{clear_market, closed_form_uncongested, kkt_check};
use cournot_la::market::{threebus, utility_of, BidProfile, LineId, Market};

fn bids() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..2000.0f64, 3)
}

fn caps() -> impl Strategy<Value = Vec<Option<f64>>> {
    prop::collection::vec(prop::option::of(5.0..300.0f64), 3)
}

fn capped(caps: &[Option<f64>]) -> Market<f64> {
    let mut m = threebus::market::<f64>();
    for (k, c) in caps.iter().enumerate() {
        m = m.with_line_capacity(LineId(k), *c).unwrap();
    }
    m
}

fn welfare(m: &Market<f64>, demands: &[f64]) -> f64 {
    m.consumers()
        .iter()
        .zip(demands)
        .map(|(c, d)| utility_of(c, *d).unwrap())
        .sum()
}

/// Demand vector feasible for `m` given total supply: a random split of the
/// total, checked against every line limit.
fn random_feasible(m: &Market<f64>, bids: &BidProfile<f64>, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0f64)).collect();
    let s: f64 = w.iter().sum();
    let total = bids.total();
    let demands: Vec<f64> = w.iter().map(|x| x / s * total).collect();
    let mut inj = vec![0.0; m.network().bus_count];
    for (sup, q) in m.suppliers().iter().zip(&bids.quantities) {
        inj[sup.node.0] += q;
    }
    for (c, d) in m.consumers().iter().zip(&demands) {
        inj[c.node.0] -= d;
    }
    let flows = m.ptdf().flows(&inj);
    let ok = m
        .network()
        .lines
        .iter()
        .zip(&flows)
        .all(|(l, f)| l.capacity.is_none_or(|c| f.abs() <= c));
    ok.then_some(demands)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn uncongested_clearing_matches_closed_form(q in bids()) {
        let m = threebus::market::<f64>();
        let b = BidProfile::new(q);
        let r = clear_market(&m, &b).unwrap();
        if let Ok((price, demands)) = closed_form_uncongested(&b, m.consumers()) {
            let rel = |a: f64, e: f64| (a - e).abs() / e.abs().max(1.0);
            prop_assert!(rel(r.uniform_price().unwrap(), price) <= 1e-6);
            for (a, e) in r.demands.iter().zip(demands) {
                prop_assert!(rel(*a, e) <= 1e-6);
            }
        }
    }

    #[test]
    fn price_falls_as_supply_rises(q in bids(), extra in 1.0..200.0f64, who in 0usize..3) {
        let m = threebus::market::<f64>();
        let b = BidProfile::new(q.clone());
        let mut more = q;
        more[who] = (more[who] + extra).min(2000.0);
        let p0 = clear_market(&m, &b).unwrap().uniform_price().unwrap();
        let p1 = clear_market(&m, &BidProfile::new(more)).unwrap().uniform_price().unwrap();
        prop_assert!(p1 <= p0 + 1e-9);
    }

    #[test]
    fn kkt_holds_with_random_limits(q in bids(), c in caps()) {
        let m = capped(&c);
        let b = BidProfile::new(q);
        let r = clear_market(&m, &b).unwrap();
        let report = kkt_check(&m, &b, &r);
        prop_assert!(report.passes(1e-6), "{report:?}");
        for (l, f) in m.network().lines.iter().zip(&r.flows) {
            if let Some(cap) = l.capacity {
                prop_assert!(f.abs() <= cap + 1e-6);
            }
        }
    }

    #[test]
    fn no_sampled_feasible_dispatch_beats_the_optimum(q in bids(), c in caps(), seed in any::<u64>()) {
        let m = capped(&c);
        let b = BidProfile::new(q);
        let r = clear_market(&m, &b).unwrap();
        prop_assert!((welfare(&m, &r.demands) - r.objective).abs() <= 1e-6 * r.objective.abs().max(1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            if let Some(d) = random_feasible(&m, &b, &mut rng) {
                prop_assert!(welfare(&m, &d) <= r.objective + 1e-6 * r.objective.abs().max(1.0));
            }
        }
    }

    #[test]
    fn lifting_a_limit_never_lowers_welfare(q in bids(), c in caps(), line in 0usize..3) {
        let m = capped(&c);
        let b = BidProfile::new(q);
        let tight = clear_market(&m, &b).unwrap().objective;
        let loose = clear_market(&m.with_line_capacity(LineId(line), None).unwrap(), &b).unwrap().objective;
        prop_assert!(loose >= tight - 1e-6 * tight.abs().max(1.0));
    }

    #[test]
    fn clearing_is_deterministic(q in bids(), c in caps()) {
        let m = capped(&c);
        let b = BidProfile::new(q);
        prop_assert_eq!(clear_market(&m, &b).unwrap(), clear_market(&m, &b).unwrap());
    }
}

#[test]
fn f32_and_f64_agree_on_the_congested_case() {
    let b = BidProfile::new(vec![781.0, 1268.0, 645.0]);
    let r64 = clear_market(&threebus::congested_market::<f64>(), &b).unwrap();
    let m32 = threebus::congested_market::<f32>();
    let r32 = clear_market(&m32, &BidProfile::new(vec![781.0f32, 1268.0, 645.0])).unwrap();
    for (a, e) in r32.lmps.iter().zip(&r64.lmps) {
        assert!((*a as f64 - e).abs() < 1e-2, "{a} vs {e}");
    }
    assert_eq!(r32.binding_lines.len(), r64.binding_lines.len());
}
