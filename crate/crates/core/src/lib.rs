//! Learning-automata quantity bidding for suppliers in a Cournot electricity
//! market cleared by a DC optimal power flow.
//!
//! The crate is organised bottom-up:
//!
//! * [`market`] holds participants, the network and the cost/utility/profit functions;
//! * [`dispatch`] clears the market for fixed quantity bids and prices each bus;
//! * [`learner`] is the Gaussian learning automaton that picks a supplier's bid;
//! * [`oracle`] computes grid best responses and iterated-best-response equilibria;
//! * [`harness`] runs whole experiments, writes traces and summarises them.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the experiment harness and
//! the file formats use.

pub mod dispatch;
pub mod error;
pub mod harness;
pub mod learner;
pub mod linalg;
pub mod market;
pub mod oracle;
pub mod scalar;
pub mod scenario;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Supplier = market::SupplierParams<f64>;
pub type Consumer = market::ConsumerParams<f64>;
pub type Line = market::Line<f64>;
pub type Network = market::Network<f64>;
pub type Market = market::Market<f64>;
pub type Bids = market::BidProfile<f64>;
pub type Dispatch = dispatch::DispatchResult<f64>;
pub type Ptdf = dispatch::PtdfMatrix<f64>;
pub type Learner = learner::LearnerState<f64>;
pub type LearnerConfig = learner::LearnerParams<f64>;
pub type BestResponse = oracle::BestResponseResult<f64>;
pub type Nash = oracle::NashResult<f64>;
