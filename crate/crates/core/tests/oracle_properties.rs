use proptest::prelude::*;

use cournot_la::market::{threebus, BidProfile, SupplierId};
use cournot_la::oracle::{best_response, evaluate, iterate_nash};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Every point of a 10 MW grid is also on the 5 MW grid.
    #[test]
    fn halving_the_grid_never_lowers_profit(
        others in prop::collection::vec(200.0..1800.0f64, 3),
        who in 0usize..3,
        congested in any::<bool>(),
    ) {
        let m = if congested { threebus::congested_market::<f64>() } else { threebus::market::<f64>() };
        let b = BidProfile::new(others);
        let coarse = best_response(&m, SupplierId(who), &b, 10.0).unwrap();
        let fine = best_response(&m, SupplierId(who), &b, 5.0).unwrap();
        prop_assert!(fine.profit >= coarse.profit - 1e-9);
    }

    #[test]
    fn reported_profit_matches_a_fresh_clearing(
        others in prop::collection::vec(200.0..1800.0f64, 3),
        who in 0usize..3,
    ) {
        let m = threebus::congested_market::<f64>();
        let b = BidProfile::new(others);
        let br = best_response(&m, SupplierId(who), &b, 10.0).unwrap();
        let (p, lmp) = evaluate(&m, &b.with(SupplierId(who), br.quantity), SupplierId(who)).unwrap();
        prop_assert_eq!(p, br.profit);
        prop_assert_eq!(lmp, br.lmp_at_node);
    }
}

#[test]
fn best_response_is_deterministic() {
    let m = threebus::congested_market::<f64>();
    let b = BidProfile::new(vec![0.0, 1268.0, 645.0]);
    let a = best_response(&m, SupplierId(0), &b, 1.0).unwrap();
    assert_eq!(a, best_response(&m, SupplierId(0), &b, 1.0).unwrap());
}

#[test]
fn congested_best_response_sits_past_the_line_kink() {
    let m = threebus::congested_market::<f64>();
    let b = BidProfile::new(vec![0.0, 1268.0, 645.0]);
    let br = best_response(&m, SupplierId(0), &b, 1.0).unwrap();
    assert!((br.quantity - 867.0).abs() <= 5.0, "{}", br.quantity);
    let (at_kink, _) = evaluate(&m, &b.with(SupplierId(0), 781.0), SupplierId(0)).unwrap();
    assert!(br.profit > at_kink);
}

#[test]
fn uncongested_nash_is_independent_of_the_start() {
    let m = threebus::market::<f64>();
    let a = iterate_nash(&m, 1.0, 100, &BidProfile::new(vec![0.0, 0.0, 0.0])).unwrap();
    let b = iterate_nash(&m, 1.0, 100, &BidProfile::new(vec![2000.0, 2000.0, 2000.0])).unwrap();
    assert!(a.converged && b.converged);
    for (x, y) in a.quantities.iter().zip(&b.quantities) {
        assert!((x - y).abs() <= 1.0);
    }
}

#[test]
fn nash_on_f32_matches_f64() {
    let m64 = threebus::market::<f64>();
    let m32 = threebus::market::<f32>();
    let a = iterate_nash(&m64, 1.0, 100, &m64.midpoint_bids()).unwrap();
    let b = iterate_nash(&m32, 1.0f32, 100, &m32.midpoint_bids()).unwrap();
    assert!(b.converged);
    for (x, y) in a.quantities.iter().zip(&b.quantities) {
        assert!((x - *y as f64).abs() <= 1.0);
    }
}
