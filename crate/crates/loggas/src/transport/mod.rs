//! Cut-decoupling transport: ansatz fields, the first-order flow, the
//! Monge–Ampère residual and one-dimensional monotone maps.

pub mod field;
pub mod flow;
pub mod monotone;
pub mod residual;

pub use crate::interaction::{decoupled_potential, interaction_kernel};
pub use field::{build_vector_field, TransportField};
pub use flow::{build_schedule, flow_first_order, FieldSchedule};
pub use monotone::{monotone_transport, monotone_transport_to_cut, MonotoneMap};
pub use residual::{monge_ampere_residual, residual_statistics, ResidualStats};
