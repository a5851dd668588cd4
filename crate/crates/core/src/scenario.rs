//! JSON scenario files.
//!
//! ```json
//! {
//!   "name": "threebus",
//!   "buses": [1, 2, 3],
//!   "reference_bus": 3,
//!   "lines": [{ "from": 1, "to": 3, "reactance": 0.5, "capacity": null }],
//!   "suppliers": [{ "id": 1, "node": 1, "m": 0.015718, "n": 1.360575, "o": 9490, "g_min": 0, "g_max": 2000 }],
//!   "consumers": [{ "id": 1, "node": 1, "w": 108.4096, "v": 0.0555 }],
//!   "learner": { "delta_mu": 1, "delta_sigma": 0.2, "c": 0.001, "sigma_floor": 0.1,
//!                "mu0": 600, "sigma0": 20, "iteration_limit": 6000, "spread": "absolute" },
//!   "congestion": [{ "line": "1-3", "capacity": 16 }],
//!   "rationality": { "learner": 1, "opponents": { "2": 1046 }, "opponents_congested": { "2": 1268 } }
//! }
//! ```
//!
//! Buses are referred to by the numbers listed under `buses`; `capacity: null`
//! means unbounded. `congestion` lists the limits applied when a congested
//! run is requested, on top of those in `lines`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::{LearnerParams, SpreadReading};
use crate::market::{threebus, BusId, ConsumerParams, Line, Market, Network, SupplierId, SupplierParams};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSpec {
    pub from: u32,
    pub to: u32,
    pub reactance: f64,
    pub capacity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupplierSpec {
    pub id: u32,
    pub node: u32,
    pub m: f64,
    pub n: f64,
    pub o: f64,
    #[serde(default)]
    pub g_min: f64,
    pub g_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsumerSpec {
    pub id: u32,
    pub node: u32,
    pub w: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerSpec {
    pub delta_mu: f64,
    pub delta_sigma: f64,
    pub c: f64,
    pub sigma_floor: f64,
    pub mu0: f64,
    pub sigma0: f64,
    pub iteration_limit: u64,
    pub spread: SpreadReading,
}

impl Default for LearnerSpec {
    fn default() -> Self {
        let p = LearnerParams::<f64>::default();
        Self {
            delta_mu: p.delta_mu,
            delta_sigma: p.delta_sigma,
            c: p.c,
            sigma_floor: p.sigma_floor,
            mu0: p.mu0,
            sigma0: p.sigma0,
            iteration_limit: p.iteration_limit,
            spread: p.spread,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineCapSpec {
    /// `"1-3"` by bus numbers or a one-based line index.
    pub line: String,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RationalitySpec {
    /// Supplier id that learns.
    pub learner: u32,
    /// Fixed bids of the other suppliers, keyed by supplier id.
    pub opponents: BTreeMap<u32, f64>,
    #[serde(default)]
    pub opponents_congested: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: Option<String>,
    pub buses: Vec<u32>,
    pub reference_bus: u32,
    pub lines: Vec<LineSpec>,
    pub suppliers: Vec<SupplierSpec>,
    pub consumers: Vec<ConsumerSpec>,
    #[serde(default)]
    pub learner: LearnerSpec,
    #[serde(default)]
    pub congestion: Vec<LineCapSpec>,
    #[serde(default)]
    pub rationality: Option<RationalitySpec>,
}

impl ScenarioFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Builds the market; with `congested` the `congestion` limits are applied.
    pub fn market<T: Scalar>(&self, congested: bool) -> Result<Market<T>> {
        let mut labels = self.buses.clone();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.buses.len() {
            return Err(Error::InvalidParameter("duplicate bus number".into()));
        }
        let bus = |label: u32| {
            self.buses
                .iter()
                .position(|&b| b == label)
                .map(BusId)
                .ok_or(Error::UnknownBus(label))
        };
        let lines = self
            .lines
            .iter()
            .map(|l| {
                Ok(Line {
                    from_bus: bus(l.from)?,
                    to_bus: bus(l.to)?,
                    reactance: T::lit(l.reactance),
                    capacity: l.capacity.map(T::lit),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let network = Network {
            bus_count: self.buses.len(),
            lines,
            reference_bus: bus(self.reference_bus)?,
            bus_labels: self.buses.clone(),
        };
        let suppliers = self
            .suppliers
            .iter()
            .map(|s| {
                Ok(SupplierParams {
                    id: s.id,
                    node: bus(s.node)?,
                    m: T::lit(s.m),
                    n: T::lit(s.n),
                    o: T::lit(s.o),
                    g_min: T::lit(s.g_min),
                    g_max: T::lit(s.g_max),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let consumers = self
            .consumers
            .iter()
            .map(|c| {
                Ok(ConsumerParams {
                    id: c.id,
                    node: bus(c.node)?,
                    w: T::lit(c.w),
                    v: T::lit(c.v),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut ids: Vec<u32> = self.suppliers.iter().map(|s| s.id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.suppliers.len() {
            return Err(Error::InvalidParameter("duplicate supplier id".into()));
        }
        let mut market = Market::new(network, suppliers, consumers)?;
        if congested {
            for cap in &self.congestion {
                let line = market.network().find_line(&cap.line)?;
                market = market.with_line_capacity(line, Some(T::lit(cap.capacity)))?;
            }
        }
        Ok(market)
    }

    /// Learner parameters, not yet bound to a supplier.
    pub fn learner_params(&self) -> Result<LearnerParams<f64>> {
        let l = &self.learner;
        let p = LearnerParams {
            delta_mu: l.delta_mu,
            delta_sigma: l.delta_sigma,
            c: l.c,
            sigma_floor: l.sigma_floor,
            mu0: l.mu0,
            sigma0: l.sigma0,
            iteration_limit: l.iteration_limit,
            spread: l.spread,
            ..LearnerParams::default()
        };
        p.validate()?;
        Ok(p)
    }

    /// Learning supplier and fixed opponents for a rationality run.
    pub fn rationality_setup<T: Scalar>(
        &self,
        market: &Market<T>,
        congested: bool,
    ) -> Result<(SupplierId, BTreeMap<SupplierId, f64>)> {
        let spec = self
            .rationality
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("scenario has no `rationality` section".into()))?;
        let source = if congested && !spec.opponents_congested.is_empty() {
            &spec.opponents_congested
        } else {
            &spec.opponents
        };
        let learner = market.supplier_by_label(spec.learner)?;
        let fixed = source
            .iter()
            .map(|(id, q)| Ok((market.supplier_by_label(*id)?, *q)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok((learner, fixed))
    }

    /// The bundled 3-bus system.
    pub fn threebus() -> Self {
        let net = threebus::network::<f64>(None);
        let label = |b: BusId| net.bus_label(b);
        let lines = net
            .lines
            .iter()
            .map(|l| LineSpec {
                from: label(l.from_bus),
                to: label(l.to_bus),
                reactance: l.reactance,
                capacity: l.capacity,
            })
            .collect();
        let suppliers = threebus::suppliers::<f64>()
            .into_iter()
            .map(|s| SupplierSpec {
                id: s.id,
                node: label(s.node),
                m: s.m,
                n: s.n,
                o: s.o,
                g_min: s.g_min,
                g_max: s.g_max,
            })
            .collect();
        let consumers = threebus::consumers::<f64>()
            .into_iter()
            .map(|c| ConsumerSpec {
                id: c.id,
                node: label(c.node),
                w: c.w,
                v: c.v,
            })
            .collect();
        let [o2, o3] = threebus::RATIONALITY_OPPONENTS;
        let [c2, c3] = threebus::RATIONALITY_OPPONENTS_CONGESTED;
        Self {
            name: Some("threebus".into()),
            buses: net.bus_labels.clone(),
            reference_bus: label(net.reference_bus),
            lines,
            suppliers,
            consumers,
            learner: LearnerSpec::default(),
            congestion: vec![LineCapSpec {
                line: "1-3".into(),
                capacity: threebus::CONGESTED_CAPACITY,
            }],
            rationality: Some(RationalitySpec {
                learner: 1,
                opponents: BTreeMap::from([(2, o2), (3, o3)]),
                opponents_congested: BTreeMap::from([(2, c2), (3, c3)]),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_matches_market_module() {
        let f = ScenarioFile::threebus();
        let m: Market<f64> = f.market(false).unwrap();
        let b = threebus::market::<f64>();
        assert_eq!(m.suppliers(), b.suppliers());
        assert_eq!(m.consumers(), b.consumers());
        assert_eq!(m.network(), b.network());
        let mc: Market<f64> = f.market(true).unwrap();
        assert_eq!(mc.network(), threebus::congested_market::<f64>().network());
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let f = ScenarioFile::threebus();
        let back = ScenarioFile::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(back, f);

        let minimal = r#"{
            "buses": [10, 20], "reference_bus": 20,
            "lines": [{"from": 10, "to": 20, "reactance": 0.1, "capacity": null}],
            "suppliers": [{"id": 7, "node": 10, "m": 0.01, "n": 1, "o": 5, "g_max": 100}],
            "consumers": [{"id": 1, "node": 20, "w": 50, "v": 0.1}]
        }"#;
        let f = ScenarioFile::from_json(minimal).unwrap();
        assert_eq!(f.learner, LearnerSpec::default());
        let m: Market<f64> = f.market(false).unwrap();
        assert_eq!(m.suppliers()[0].g_min, 0.0);
        assert_eq!(m.network().reference_bus, BusId(1));
        assert_eq!(m.supplier_by_label(7).unwrap(), SupplierId(0));
    }

    #[test]
    fn bad_references_rejected() {
        let mut f = ScenarioFile::threebus();
        f.suppliers[0].node = 9;
        assert!(matches!(f.market::<f64>(false), Err(Error::UnknownBus(9))));
        let mut f = ScenarioFile::threebus();
        f.congestion[0].line = "1-4".into();
        assert!(f.market::<f64>(true).is_err());
        assert!(ScenarioFile::from_json(r#"{"buses": [1], "bogus": 1}"#).is_err());
    }

    #[test]
    fn rationality_opponents() {
        let f = ScenarioFile::threebus();
        let m: Market<f64> = f.market(true).unwrap();
        let (who, fixed) = f.rationality_setup(&m, true).unwrap();
        assert_eq!(who, SupplierId(0));
        assert_eq!(fixed[&SupplierId(1)], 1268.0);
        let (_, fixed) = f.rationality_setup(&m, false).unwrap();
        assert_eq!(fixed[&SupplierId(2)], 995.0);
    }
}
