//! Minimum-energy joint design of downlink energy/information beamforming,
//! uplink bandwidth, computation offloading and offloading time for a
//! wireless-powered fog computing network.
//!
//! Two designs are provided: [`fot`] fixes the offloading time and solves the
//! relaxed convex program (directly or through its dual decomposition), and
//! [`pdd`] optimizes the offloading time with a penalty dual decomposition.

pub mod channel;
pub mod error;
pub mod fot;
pub mod hermitian;
pub mod ipm;
pub mod model;
pub mod pdd;

pub use channel::{gen_channels, pathloss_gain, read_fixture, write_fixture, ChannelConfig};
pub use error::{Error, Result};
pub use fot::{dual_ascent_solve, solve_fot, DualAscentSettings, FotDuals, FotSolution};
pub use hermitian::{eig_hermitian, gram, rank_one_extract, trace_product, EigenDecomposition, HermitianMatrix};
pub use ipm::{ip_solve, IpmSettings, OffloadMode};
pub use model::{
    validate, Allocation, BeamformingDesign, ChannelSet, EhDevice, IdDevice, SolveReport, SystemParams,
    DEFAULT_FEAS_TOL,
};
pub use pdd::{solve_oot, OotSettings, OotSolution, OotTraceEntry, PddState};
