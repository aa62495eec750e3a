//! Fixed-offloading-time design: the relaxed program solved directly, and the
//! dual-decomposition path built on the per-device closed forms.

mod dual;
mod lambert;

pub use dual::{
    device_lagrangian, dual_ascent_solve, offload_closed_form, phi_ratio, DualAscentSettings, DualAscentSolution,
    FotDuals,
};
pub use lambert::lambert_w0;

use crate::error::Result;
use crate::ipm::{build_fot_program, ip_solve, IpmSettings, KktReport, OffloadMode};
use crate::model::{validate, Allocation, BeamformingDesign, ChannelSet, SolveReport, SystemParams, DEFAULT_FEAS_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct FotSolution {
    /// Covariances with extracted beams.
    pub design: BeamformingDesign,
    pub alloc: Allocation,
    pub report: SolveReport,
    pub kkt: KktReport,
}

fn finish(mut design: BeamformingDesign, alloc: Allocation, kkt: KktReport, ch: &ChannelSet, p: &SystemParams) -> FotSolution {
    let rank_ratios = design.extract_beams();
    let mut report = validate(&design, &alloc, ch, p, DEFAULT_FEAS_TOL);
    report.iterations = kkt.newton_steps + kkt.phase_one_steps;
    report.rank_ratios = rank_ratios;
    FotSolution { design, alloc, report, kkt }
}

/// Solves the relaxed program at offloading time `t_u` in the given mode.
pub fn solve_fot(
    p: &SystemParams,
    ch: &ChannelSet,
    t_u: f64,
    mode: OffloadMode,
    settings: &IpmSettings,
) -> Result<FotSolution> {
    let (prog, layout) = build_fot_program(p, ch, t_u, mode)?;
    let sol = ip_solve(&prog, settings)?;
    let (design, alloc) = layout.decode(&sol.point);
    Ok(finish(design, alloc, sol.kkt, ch, p))
}

/// Re-solves for the covariances with `(α, O)` held fixed. Also returns the
/// central-path multipliers of every constraint row (SINR rows first, then
/// energy rows, fog, bandwidth).
pub(crate) fn solve_residual(
    p: &SystemParams,
    ch: &ChannelSet,
    t_u: f64,
    alpha: &[f64],
    offload: &[f64],
    settings: &IpmSettings,
) -> Result<(FotSolution, Vec<f64>)> {
    let (mut prog, layout) = build_fot_program(p, ch, t_u, OffloadMode::Partial)?;
    for (k, v) in layout.alpha.iter().zip(alpha).chain(layout.offload.iter().zip(offload)) {
        prog.scalars[*k].lower = *v;
        prog.scalars[*k].upper = *v;
    }
    let sol = ip_solve(&prog, settings)?;
    let duals = sol.kkt.constraint_duals.clone();
    let (design, alloc) = layout.decode(&sol.point);
    Ok((finish(design, alloc, sol.kkt, ch, p), duals))
}
