//! Rate regions and coded-retransmission protocols for the two-user layered
//! packet erasure broadcast channel with state feedback.
//!
//! A transmitter sends `Q` stacked packets per slot; user `u` receives the
//! bottom `N_u` layers, where the state vector `(N_1, N_2)` is drawn i.i.d.
//! from a joint PMF. With feedback the transmitter learns past states and can
//! retransmit overheard packets as random linear combinations over GF(2^8).
//! This crate computes:
//!
//! * capacity outer bounds (no state information, full lookahead, feedback),
//! * achievable regions for four coded-retransmission schemes (a per-layer
//!   scheme plus idle / intra-layer / inter-layer two-phase variants),
//! * region polygons, corner points and their inclusion relations,
//! * packet-level simulations of the two-phase protocols that check the
//!   analytic throughput predictions.
//!
//! See the `examples/` directory for runnable walkthroughs of each
//! capability, and the `lpebc` binary for the file-based command line.

pub mod bounds;
pub mod channel;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod gf;
pub mod optimizer;
pub mod schemes;
pub mod simcore;

pub use error::{Error, Result};
