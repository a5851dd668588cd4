//! Market participants, the transmission network and the scalar economics
//! of cost, utility and profit.

use serde::{Deserialize, Serialize};

use crate::dispatch::{compute_ptdf, PtdfMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Position of a supplier in its market.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SupplierId(pub usize);

/// Zero-based bus index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BusId(pub usize);

/// Position of a line in its network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LineId(pub usize);

/// Generator with quadratic cost `½·m·g² + n·g + o`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplierParams<T> {
    /// Label used in reports and files.
    pub id: u32,
    pub node: BusId,
    /// Quadratic cost coefficient, $/MW²h.
    pub m: T,
    /// Linear cost coefficient, $/MWh.
    pub n: T,
    /// Fixed cost, $/h.
    pub o: T,
    pub g_min: T,
    pub g_max: T,
}

impl<T: Scalar> SupplierParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.m > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "supplier {}: m must be positive, got {}",
                self.id, self.m
            )));
        }
        if !(self.g_min >= T::zero() && self.g_min < self.g_max) {
            return Err(Error::InvalidParameter(format!(
                "supplier {}: need 0 <= g_min < g_max, got [{}, {}]",
                self.id, self.g_min, self.g_max
            )));
        }
        if !(self.n.is_finite() && self.o.is_finite() && self.g_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "supplier {}: non-finite coefficient",
                self.id
            )));
        }
        Ok(())
    }

    pub fn clamp_output(&self, g: T) -> T {
        g.max(self.g_min).min(self.g_max)
    }

    /// Output maximizing `price·g − cost(g)` for a fixed price, ignoring limits.
    pub fn price_taking_output(&self, price: T) -> T {
        (price - self.n) / self.m
    }
}

/// Load with quadratic utility `w·d − ½·v·d²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsumerParams<T> {
    pub id: u32,
    pub node: BusId,
    /// Linear utility coefficient, $/MWh.
    pub w: T,
    /// Quadratic utility coefficient, $/MW²h.
    pub v: T,
}

impl<T: Scalar> ConsumerParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.w > T::zero() && self.v > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "consumer {}: need w > 0 and v > 0, got w={}, v={}",
                self.id, self.w, self.v
            )));
        }
        Ok(())
    }

    /// Marginal utility at demand `d`.
    pub fn marginal_utility(&self, d: T) -> T {
        self.w - self.v * d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line<T> {
    pub from_bus: BusId,
    pub to_bus: BusId,
    /// Series reactance; only ratios between lines matter.
    pub reactance: T,
    /// Symmetric flow limit in MW, `None` when unbounded.
    pub capacity: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network<T> {
    pub bus_count: usize,
    pub lines: Vec<Line<T>>,
    pub reference_bus: BusId,
    /// External bus numbers, one per bus index.
    pub bus_labels: Vec<u32>,
}

impl<T: Scalar> Network<T> {
    pub fn new(bus_count: usize, lines: Vec<Line<T>>, reference_bus: BusId) -> Result<Self> {
        let bus_labels = (1..=bus_count as u32).collect();
        let net = Self {
            bus_count,
            lines,
            reference_bus,
            bus_labels,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bus_count == 0 {
            return Err(Error::InvalidParameter("network has no buses".into()));
        }
        if self.reference_bus.0 >= self.bus_count {
            return Err(Error::InvalidParameter(format!(
                "reference bus {} out of range",
                self.reference_bus.0
            )));
        }
        if self.bus_labels.len() != self.bus_count {
            return Err(Error::InvalidParameter("bus label count mismatch".into()));
        }
        for (i, line) in self.lines.iter().enumerate() {
            if line.from_bus.0 >= self.bus_count || line.to_bus.0 >= self.bus_count {
                return Err(Error::InvalidParameter(format!("line {i} endpoint out of range")));
            }
            if line.from_bus == line.to_bus {
                return Err(Error::InvalidParameter(format!("line {i} is a self-loop")));
            }
            if !(line.reactance > T::zero()) {
                return Err(Error::InvalidParameter(format!("line {i}: reactance must be positive")));
            }
            if let Some(cap) = line.capacity {
                if !(cap > T::zero()) {
                    return Err(Error::InvalidParameter(format!("line {i}: capacity must be positive")));
                }
            }
        }
        if let Some(bus) = self.unreachable_bus() {
            return Err(Error::Disconnected(bus));
        }
        Ok(())
    }

    /// First bus not reachable from the reference bus, if any.
    pub fn unreachable_bus(&self) -> Option<usize> {
        let mut seen = vec![false; self.bus_count];
        let mut stack = vec![self.reference_bus.0];
        seen[self.reference_bus.0] = true;
        while let Some(b) = stack.pop() {
            for line in &self.lines {
                let next = if line.from_bus.0 == b {
                    line.to_bus.0
                } else if line.to_bus.0 == b {
                    line.from_bus.0
                } else {
                    continue;
                };
                if !seen[next] {
                    seen[next] = true;
                    stack.push(next);
                }
            }
        }
        seen.iter().position(|s| !s)
    }

    pub fn bus_label(&self, bus: BusId) -> u32 {
        self.bus_labels[bus.0]
    }

    pub fn bus_by_label(&self, label: u32) -> Result<BusId> {
        self.bus_labels
            .iter()
            .position(|&l| l == label)
            .map(BusId)
            .ok_or(Error::UnknownBus(label))
    }

    /// Resolves `"1-3"` (bus labels, either orientation) or `"3"` (one-based line number).
    pub fn find_line(&self, key: &str) -> Result<LineId> {
        let key = key.trim();
        if let Some((a, b)) = key.split_once('-') {
            let parse = |s: &str| s.trim().parse::<u32>().map_err(|_| Error::UnknownLine(key.to_string()));
            let a = self.bus_by_label(parse(a)?)?;
            let b = self.bus_by_label(parse(b)?)?;
            return self
                .lines
                .iter()
                .position(|l| (l.from_bus == a && l.to_bus == b) || (l.from_bus == b && l.to_bus == a))
                .map(LineId)
                .ok_or_else(|| Error::UnknownLine(key.to_string()));
        }
        match key.parse::<usize>() {
            Ok(k) if k >= 1 && k <= self.lines.len() => Ok(LineId(k - 1)),
            _ => Err(Error::UnknownLine(key.to_string())),
        }
    }

    pub fn line_label(&self, line: LineId) -> String {
        let l = &self.lines[line.0];
        format!("{}-{}", self.bus_label(l.from_bus), self.bus_label(l.to_bus))
    }
}

/// Quantities bid by every supplier, indexed by supplier position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidProfile<T> {
    pub quantities: Vec<T>,
}

impl<T: Scalar> BidProfile<T> {
    pub fn new(quantities: Vec<T>) -> Self {
        Self { quantities }
    }

    pub fn total(&self) -> T {
        self.quantities.iter().copied().sum()
    }

    pub fn get(&self, id: SupplierId) -> T {
        self.quantities[id.0]
    }

    pub fn with(&self, id: SupplierId, q: T) -> Self {
        let mut out = self.clone();
        out.quantities[id.0] = q;
        out
    }

    pub fn validate(&self, suppliers: &[SupplierParams<T>]) -> Result<()> {
        if self.quantities.len() != suppliers.len() {
            return Err(Error::InvalidParameter(format!(
                "bid profile has {} entries for {} suppliers",
                self.quantities.len(),
                suppliers.len()
            )));
        }
        let slack = T::solver_tol() * T::lit(1e3);
        for (q, s) in self.quantities.iter().zip(suppliers) {
            if !(q.is_finite() && *q >= s.g_min - slack && *q <= s.g_max + slack) {
                return Err(Error::InvalidParameter(format!(
                    "bid {} of supplier {} outside [{}, {}]",
                    q, s.id, s.g_min, s.g_max
                )));
            }
        }
        Ok(())
    }
}

pub fn cost_of<T: Scalar>(supplier: &SupplierParams<T>, g: T) -> Result<T> {
    if g < T::zero() {
        return Err(Error::NegativeQuantity(g.as_f64()));
    }
    Ok(T::lit(0.5) * supplier.m * g * g + supplier.n * g + supplier.o)
}

pub fn utility_of<T: Scalar>(consumer: &ConsumerParams<T>, d: T) -> Result<T> {
    if d < T::zero() {
        return Err(Error::NegativeQuantity(d.as_f64()));
    }
    Ok(consumer.w * d - T::lit(0.5) * consumer.v * d * d)
}

/// Revenue at the supplier's nodal price minus its production cost.
pub fn profit_of<T: Scalar>(supplier: &SupplierParams<T>, g: T, lmp: T) -> Result<T> {
    Ok(lmp * g - cost_of(supplier, g)?)
}

/// A validated market: network, generators and loads, with the network's
/// transfer factors computed once.
#[derive(Debug, Clone)]
pub struct Market<T> {
    network: Network<T>,
    suppliers: Vec<SupplierParams<T>>,
    consumers: Vec<ConsumerParams<T>>,
    ptdf: PtdfMatrix<T>,
}

impl<T: Scalar> Market<T> {
    pub fn new(
        network: Network<T>,
        suppliers: Vec<SupplierParams<T>>,
        consumers: Vec<ConsumerParams<T>>,
    ) -> Result<Self> {
        network.validate()?;
        for s in &suppliers {
            s.validate()?;
            if s.node.0 >= network.bus_count {
                return Err(Error::InvalidParameter(format!("supplier {} on unknown bus", s.id)));
            }
        }
        if consumers.is_empty() {
            return Err(Error::InvalidParameter("market has no consumers".into()));
        }
        for c in &consumers {
            c.validate()?;
            if c.node.0 >= network.bus_count {
                return Err(Error::InvalidParameter(format!("consumer {} on unknown bus", c.id)));
            }
        }
        let ptdf = compute_ptdf(&network)?;
        Ok(Self {
            network,
            suppliers,
            consumers,
            ptdf,
        })
    }

    pub fn network(&self) -> &Network<T> {
        &self.network
    }

    pub fn suppliers(&self) -> &[SupplierParams<T>] {
        &self.suppliers
    }

    pub fn supplier(&self, id: SupplierId) -> &SupplierParams<T> {
        &self.suppliers[id.0]
    }

    pub fn consumers(&self) -> &[ConsumerParams<T>] {
        &self.consumers
    }

    pub fn ptdf(&self) -> &PtdfMatrix<T> {
        &self.ptdf
    }

    pub fn supplier_by_label(&self, label: u32) -> Result<SupplierId> {
        self.suppliers
            .iter()
            .position(|s| s.id == label)
            .map(SupplierId)
            .ok_or(Error::UnknownSupplier(label))
    }

    pub fn supplier_ids(&self) -> impl Iterator<Item = SupplierId> {
        (0..self.suppliers.len()).map(SupplierId)
    }

    /// Same market with one line's limit replaced. Reactances are untouched,
    /// so the transfer factors carry over.
    pub fn with_line_capacity(&self, line: LineId, capacity: Option<T>) -> Result<Self> {
        if line.0 >= self.network.lines.len() {
            return Err(Error::UnknownLine(format!("#{}", line.0 + 1)));
        }
        if let Some(c) = capacity {
            if !(c > T::zero()) {
                return Err(Error::InvalidParameter("line capacity must be positive".into()));
            }
        }
        let mut out = self.clone();
        out.network.lines[line.0].capacity = capacity;
        Ok(out)
    }

    /// Same market with every line limit removed.
    pub fn unconstrained(&self) -> Self {
        let mut out = self.clone();
        for l in &mut out.network.lines {
            l.capacity = None;
        }
        out
    }

    /// Bid profile with every supplier at the middle of its output range.
    pub fn midpoint_bids(&self) -> BidProfile<T> {
        BidProfile::new(
            self.suppliers
                .iter()
                .map(|s| T::lit(0.5) * (s.g_min + s.g_max))
                .collect(),
        )
    }

    /// Converts the market to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Result<Market<U>> {
        let c = |x: T| U::lit(x.as_f64());
        let network = Network {
            bus_count: self.network.bus_count,
            lines: self
                .network
                .lines
                .iter()
                .map(|l| Line {
                    from_bus: l.from_bus,
                    to_bus: l.to_bus,
                    reactance: c(l.reactance),
                    capacity: l.capacity.map(c),
                })
                .collect(),
            reference_bus: self.network.reference_bus,
            bus_labels: self.network.bus_labels.clone(),
        };
        let suppliers = self
            .suppliers
            .iter()
            .map(|s| SupplierParams {
                id: s.id,
                node: s.node,
                m: c(s.m),
                n: c(s.n),
                o: c(s.o),
                g_min: c(s.g_min),
                g_max: c(s.g_max),
            })
            .collect();
        let consumers = self
            .consumers
            .iter()
            .map(|k| ConsumerParams {
                id: k.id,
                node: k.node,
                w: c(k.w),
                v: c(k.v),
            })
            .collect();
        Market::new(network, suppliers, consumers)
    }
}

/// Supplier and consumer data of the bundled 3-bus test system.
pub mod threebus {
    use super::*;

    /// (w, v, m, n, o) per bus.
    pub const TABLE: [(f64, f64, f64, f64, f64); 3] = [
        (108.4096, 0.0555, 0.015718, 1.360575, 9490.0),
        (103.8283, 0.066909, 0.021052, -2.07807, 11128.0),
        (105.6709, 0.063703, 0.012956, 8.105354, 6821.0),
    ];

    pub const G_MAX: f64 = 2000.0;

    /// Line 1-3 limit used in the congested experiments, MW.
    pub const CONGESTED_CAPACITY: f64 = 16.0;

    /// Line 1-3 reactance relative to lines 1-2 and 2-3.
    pub const LINE_13_REACTANCE: f64 = 0.5;

    /// Index of line 1-3 in [`network`].
    pub const LINE_13: LineId = LineId(2);

    pub const RATIONALITY_OPPONENTS: [f64; 2] = [1046.0, 995.0];
    pub const RATIONALITY_OPPONENTS_CONGESTED: [f64; 2] = [1268.0, 645.0];

    pub fn network<T: Scalar>(line_13_capacity: Option<T>) -> Network<T> {
        let line = |a: usize, b: usize, x: f64, cap: Option<T>| Line {
            from_bus: BusId(a),
            to_bus: BusId(b),
            reactance: T::lit(x),
            capacity: cap,
        };
        Network::new(
            3,
            vec![
                line(0, 1, 1.0, None),
                line(1, 2, 1.0, None),
                line(0, 2, LINE_13_REACTANCE, line_13_capacity),
            ],
            BusId(2),
        )
        .expect("built-in network is valid")
    }

    pub fn suppliers<T: Scalar>() -> Vec<SupplierParams<T>> {
        TABLE
            .iter()
            .enumerate()
            .map(|(i, &(_, _, m, n, o))| SupplierParams {
                id: i as u32 + 1,
                node: BusId(i),
                m: T::lit(m),
                n: T::lit(n),
                o: T::lit(o),
                g_min: T::zero(),
                g_max: T::lit(G_MAX),
            })
            .collect()
    }

    pub fn consumers<T: Scalar>() -> Vec<ConsumerParams<T>> {
        TABLE
            .iter()
            .enumerate()
            .map(|(i, &(w, v, _, _, _))| ConsumerParams {
                id: i as u32 + 1,
                node: BusId(i),
                w: T::lit(w),
                v: T::lit(v),
            })
            .collect()
    }

    /// The 3-bus market with all lines unbounded.
    pub fn market<T: Scalar>() -> Market<T> {
        Market::new(network(None), suppliers(), consumers()).expect("built-in market is valid")
    }

    /// The 3-bus market with line 1-3 limited to 16 MW.
    pub fn congested_market<T: Scalar>() -> Market<T> {
        Market::new(network(Some(T::lit(CONGESTED_CAPACITY))), suppliers(), consumers())
            .expect("built-in market is valid")
    }
}
