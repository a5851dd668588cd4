//! Market clearing for fixed quantity bids: welfare-maximizing demand
//! allocation under DC line limits, with nodal prices taken from the duals.

mod clearing;
mod kkt;
mod ptdf;

pub use clearing::{clear_market, closed_form_uncongested, BindingLine, DispatchResult, FlowDirection};
pub use kkt::{kkt_check, KktReport};
pub use ptdf::{compute_ptdf, PtdfMatrix};
