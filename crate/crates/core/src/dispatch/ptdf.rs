use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::market::{BusId, LineId, Network};
use crate::scalar::Scalar;

/// Line-flow sensitivities to a unit injection at each bus, withdrawn at the
/// reference bus. Row per line, column per bus; positive means from → to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtdfMatrix<T> {
    lines: usize,
    buses: usize,
    entries: Vec<T>,
}

impl<T: Scalar> PtdfMatrix<T> {
    pub fn get(&self, line: LineId, bus: BusId) -> T {
        self.entries[line.0 * self.buses + bus.0]
    }

    pub fn row(&self, line: LineId) -> &[T] {
        &self.entries[line.0 * self.buses..(line.0 + 1) * self.buses]
    }

    pub fn line_count(&self) -> usize {
        self.lines
    }

    pub fn bus_count(&self) -> usize {
        self.buses
    }

    /// Flows produced by a vector of net bus injections.
    pub fn flows(&self, injections: &[T]) -> Vec<T> {
        assert_eq!(injections.len(), self.buses);
        (0..self.lines)
            .map(|l| self.row(LineId(l)).iter().zip(injections).map(|(p, q)| *p * *q).sum())
            .collect()
    }
}

/// Builds the transfer factors from the reduced bus susceptance matrix.
pub fn compute_ptdf<T: Scalar>(network: &Network<T>) -> Result<PtdfMatrix<T>> {
    if let Some(bus) = network.unreachable_bus() {
        return Err(Error::Disconnected(bus));
    }
    let nb = network.bus_count;
    let reference = network.reference_bus.0;
    let reduced: Vec<usize> = (0..nb).filter(|&b| b != reference).collect();
    let pos = |bus: usize| reduced.iter().position(|&b| b == bus);

    let mut b = DenseMatrix::<T>::zeros(reduced.len());
    for line in &network.lines {
        let y = T::one() / line.reactance;
        let (i, j) = (pos(line.from_bus.0), pos(line.to_bus.0));
        if let Some(i) = i {
            b.add(i, i, y);
        }
        if let Some(j) = j {
            b.add(j, j, y);
        }
        if let (Some(i), Some(j)) = (i, j) {
            b.add(i, j, -y);
            b.add(j, i, -y);
        }
    }
    let x = b
        .inverse(T::epsilon() * T::lit(1e3))
        .ok_or(Error::SingularSusceptance)?;
    // reactance-matrix entry with the reference row/column padded by zeros
    let xfull = |r: usize, c: usize| match (pos(r), pos(c)) {
        (Some(r), Some(c)) => x.get(r, c),
        _ => T::zero(),
    };

    let nl = network.lines.len();
    let mut entries = vec![T::zero(); nl * nb];
    for (l, line) in network.lines.iter().enumerate() {
        for k in 0..nb {
            entries[l * nb + k] = (xfull(line.from_bus.0, k) - xfull(line.to_bus.0, k)) / line.reactance;
        }
    }
    Ok(PtdfMatrix {
        lines: nl,
        buses: nb,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::Line;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn line(a: usize, b: usize, x: f64) -> Line<f64> {
        Line {
            from_bus: BusId(a),
            to_bus: BusId(b),
            reactance: x,
            capacity: None,
        }
    }

    #[test]
    fn two_bus_series() {
        let net = Network::new(2, vec![line(0, 1, 0.3)], BusId(1)).unwrap();
        let p = compute_ptdf(&net).unwrap();
        assert_abs_diff_eq!(p.get(LineId(0), BusId(0)), 1.0, epsilon = 1e-12);
        assert_eq!(p.get(LineId(0), BusId(1)), 0.0);
    }

    #[test]
    fn equal_triangle_by_hand() {
        // ref bus 3; injection at bus 1 splits 2:1 between the direct line and the 1-2-3 path
        let net = Network::new(3, vec![line(0, 1, 1.0), line(1, 2, 1.0), line(0, 2, 1.0)], BusId(2)).unwrap();
        let p = compute_ptdf(&net).unwrap();
        assert_abs_diff_eq!(p.get(LineId(2), BusId(0)), 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.get(LineId(2), BusId(1)), 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.get(LineId(0), BusId(0)), 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.get(LineId(1), BusId(1)), 2.0 / 3.0, epsilon = 1e-12);
        for l in 0..3 {
            assert_eq!(p.get(LineId(l), BusId(2)), 0.0);
        }
    }

    #[test]
    fn default_threebus_split() {
        // x12 = x23 = 1, x13 = 0.5: direct share from bus 1 is 2 / 2.5
        let p = compute_ptdf(&crate::market::threebus::network::<f64>(None)).unwrap();
        assert_abs_diff_eq!(p.get(LineId(2), BusId(0)), 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(p.get(LineId(2), BusId(1)), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn pair_transfer_on_radial_branch() {
        // radial 1-2-3: moving 1 MW from bus 1 to bus 2 puts exactly 1 MW on line 1-2 and nothing on 2-3
        let net = Network::new(3, vec![line(0, 1, 0.2), line(1, 2, 0.7)], BusId(0)).unwrap();
        let p = compute_ptdf(&net).unwrap();
        let shift = |l| p.get(LineId(l), BusId(0)) - p.get(LineId(l), BusId(1));
        assert_abs_diff_eq!(shift(0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(shift(1), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn disconnected_rejected() {
        let net = Network {
            bus_count: 3,
            lines: vec![line(0, 1, 1.0)],
            reference_bus: BusId(0),
            bus_labels: vec![1, 2, 3],
        };
        assert!(matches!(compute_ptdf(&net), Err(Error::Disconnected(2))));
    }

    proptest! {
        #[test]
        fn reference_column_zero_and_flows_conserve(
            x in proptest::collection::vec(0.05f64..2.0, 4),
            inj in proptest::collection::vec(-100.0f64..100.0, 3),
            reference in 0usize..4,
        ) {
            // 4-bus ring with a chord
            let lines = vec![line(0, 1, x[0]), line(1, 2, x[1]), line(2, 3, x[2]), line(3, 0, x[3]), line(0, 2, 1.0)];
            let net = Network::new(4, lines, BusId(reference)).unwrap();
            let p = compute_ptdf(&net).unwrap();
            for l in 0..5 {
                prop_assert_eq!(p.get(LineId(l), BusId(reference)), 0.0);
            }
            // balanced injections: the reference bus absorbs the rest
            let mut q = vec![0.0; 4];
            let others: Vec<usize> = (0..4).filter(|&b| b != reference).collect();
            for (b, v) in others.iter().zip(&inj) { q[*b] = *v; }
            q[reference] = -inj.iter().sum::<f64>();
            let f = p.flows(&q);
            // KCL at every bus
            for b in 0..4 {
                let mut net_out = 0.0;
                for (l, ln) in net.lines.iter().enumerate() {
                    if ln.from_bus.0 == b { net_out += f[l]; }
                    if ln.to_bus.0 == b { net_out -= f[l]; }
                }
                prop_assert!((net_out - q[b]).abs() < 1e-8);
            }
        }
    }
}
