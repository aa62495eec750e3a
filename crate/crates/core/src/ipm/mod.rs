//! Barrier interior-point solver and the program builders for the design
//! problems.

pub mod builders;
mod program;
mod solver;
mod terms;

pub use builders::{build_fot_program, build_vblock_program, build_wblock_program, FotLayout, OffloadMode, VBlockLayout};
pub use program::{Constraint, ConvexExpr, ConvexTerm, IpmSettings, MixedConvexProgram, ScalarVar};
pub use solver::{ip_solve, phase_one, IpmPoint, IpmSolution, KktReport, PhaseOne};
pub use terms::{evaluate as evaluate_term, TermEval};
