//! Convex programs for the fixed-offloading-time design and for the
//! beamforming/offloading block of the penalty dual decomposition.

use super::program::{ConvexExpr, ConvexTerm, MixedConvexProgram};
use super::solver::IpmPoint;
use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::model::{Allocation, BeamformingDesign, ChannelSet, SystemParams};
use crate::pdd::PddState;

/// Which offloading choices the program may make.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OffloadMode {
    /// Any split `0 ≤ O_i ≤ D_i`.
    Partial,
    /// `O_i = 0`: every task is computed locally.
    LocalOnly,
    /// `O_i = D_i`: every task is offloaded.
    OffloadOnly,
}

impl OffloadMode {
    pub const ALL: [OffloadMode; 3] = [OffloadMode::Partial, OffloadMode::LocalOnly, OffloadMode::OffloadOnly];

    pub fn name(self) -> &'static str {
        match self {
            OffloadMode::Partial => "partial",
            OffloadMode::LocalOnly => "local_only",
            OffloadMode::OffloadOnly => "offload_only",
        }
    }
}

impl std::str::FromStr for OffloadMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "partial" => Ok(OffloadMode::Partial),
            "local_only" => Ok(OffloadMode::LocalOnly),
            "offload_only" => Ok(OffloadMode::OffloadOnly),
            other => Err(Error::Params(format!("unknown offloading mode {other:?}"))),
        }
    }
}

/// Blocks `0..n_id` are the information covariances, block `n_id` is Λ.
#[derive(Debug, Clone, PartialEq)]
pub struct FotLayout {
    pub n_id: usize,
    pub t_u: f64,
    pub alpha: Vec<usize>,
    pub offload: Vec<usize>,
}

impl FotLayout {
    pub fn energy_block(&self) -> usize {
        self.n_id
    }

    pub fn decode(&self, point: &IpmPoint) -> (BeamformingDesign, Allocation) {
        let design = decode_design(point, self.n_id);
        let alpha = self.alpha.iter().map(|&k| point.scalars[k]).collect();
        let offload = self.offload.iter().map(|&k| point.scalars[k]).collect();
        (design, Allocation::with_consensus(alpha, offload, self.t_u))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VBlockLayout {
    pub n_id: usize,
    pub offload: Vec<usize>,
    pub t_u: usize,
    pub a_tilde: Vec<usize>,
}

impl VBlockLayout {
    /// Design plus an allocation that keeps the solved `ã` (no consensus).
    pub fn decode(&self, point: &IpmPoint, alpha: &[f64]) -> (BeamformingDesign, Allocation) {
        let design = decode_design(point, self.n_id);
        let alloc = Allocation {
            alpha: alpha.to_vec(),
            offload_bits: self.offload.iter().map(|&k| point.scalars[k]).collect(),
            t_u: point.scalars[self.t_u],
            a_tilde: self.a_tilde.iter().map(|&k| point.scalars[k]).collect(),
        };
        (design, alloc)
    }
}

fn decode_design(point: &IpmPoint, n_id: usize) -> BeamformingDesign {
    BeamformingDesign {
        info_cov: point.blocks[..n_id].to_vec(),
        energy_cov: point.blocks[n_id].clone(),
        beams: None,
    }
}

/// Shared skeleton: covariance blocks, the transmit-energy objective and the
/// SINR rows.
fn beamforming_skeleton(p: &SystemParams, ch: &ChannelSet) -> MixedConvexProgram {
    let n = p.n_antennas;
    let noise = p.noise_power_w();
    let mut prog = MixedConvexProgram::new();
    for j in 0..p.n_id() {
        let g = ch.gram_id[j].trace().max(f64::MIN_POSITIVE);
        let scale = (p.id[j].sinr_target.max(1e-3) * noise / g).max(1e-12);
        prog.add_psd_block(n, scale);
    }
    let lambda_scale = p
        .eh
        .iter()
        .zip(&ch.gram_eh)
        .map(|(d, h)| {
            let need = p.circuit_energy_j + d.cap_coeff * (d.cycles_per_bit * d.task_bits).powi(3) / p.block_time_s.powi(2);
            need / (d.conversion_eff * p.block_time_s * h.trace().max(f64::MIN_POSITIVE))
        })
        .fold(1e-12, f64::max);
    let lambda = prog.add_psd_block(n, lambda_scale);

    let energy_weight = HermitianMatrix::scaled_identity(n, p.block_time_s);
    let mut obj = ConvexExpr::new();
    for b in 0..=lambda {
        obj = obj.psd(b, energy_weight.clone());
    }
    prog.objective = obj;

    for j in 0..p.n_id() {
        let g = &ch.gram_id[j];
        let gamma = p.id[j].sinr_target;
        let mut row = ConvexExpr::new();
        for k in 0..p.n_id() {
            let coeff = if k == j { -1.0 } else { gamma };
            row = row.psd(k, g.scale(coeff));
        }
        row = row.psd(lambda, g.scale(gamma));
        prog.add_constraint(format!("sinr[{j}]"), row, -gamma * noise);
    }
    prog
}

/// `−ζ_i·T·(Σ_j Tr(H_i W_j) + Tr(H_i Λ))`
fn harvest_expr(p: &SystemParams, ch: &ChannelSet, i: usize) -> ConvexExpr {
    let h = ch.gram_eh[i].scale(-p.eh[i].conversion_eff * p.block_time_s);
    let mut e = ConvexExpr::new();
    for b in 0..=p.n_id() {
        e = e.psd(b, h.clone());
    }
    e
}

fn local_term(p: &SystemParams, i: usize, o: usize) -> ConvexTerm {
    let d = &p.eh[i];
    ConvexTerm::Cubic {
        v: o,
        k3: d.cap_coeff * d.cycles_per_bit.powi(3) / p.block_time_s.powi(2),
        k4: d.task_bits,
    }
}

fn check_inputs(p: &SystemParams, ch: &ChannelSet) -> Result<()> {
    p.validate()?;
    ch.check_against(p)
}

/// Relaxed beamforming program at a fixed offloading time `t_u`.
///
/// Scalars are `α_i` then `O_i`. Devices with `D_i = 0` have both pinned to
/// zero, as does every device in local-only mode; offload-only pins
/// `O_i = D_i`.
pub fn build_fot_program(
    p: &SystemParams,
    ch: &ChannelSet,
    t_u: f64,
    mode: OffloadMode,
) -> Result<(MixedConvexProgram, FotLayout)> {
    check_inputs(p, ch)?;
    let t = p.block_time_s;
    let offloads = mode != OffloadMode::LocalOnly && p.eh.iter().any(|d| d.task_bits > 0.0);
    if offloads && !(t_u > 0.0 && t_u < t) {
        return Err(Error::Params(format!("offloading time {t_u} must lie in (0, {t})")));
    }
    if !(0.0..=t).contains(&t_u) {
        return Err(Error::Params(format!("offloading time {t_u} outside [0, {t}]")));
    }

    let mut prog = beamforming_skeleton(p, ch);
    let n_eh = p.n_eh();
    let alpha: Vec<usize> = (0..n_eh)
        .map(|i| {
            let (lo, hi) = match mode {
                OffloadMode::LocalOnly => (0.0, 0.0),
                _ if p.eh[i].task_bits == 0.0 => (0.0, 0.0),
                _ => (0.0, 1.0),
            };
            prog.add_scalar(format!("alpha[{i}]"), lo, hi)
        })
        .collect();
    let offload: Vec<usize> = (0..n_eh)
        .map(|i| {
            let d = p.eh[i].task_bits;
            let (lo, hi) = match mode {
                OffloadMode::Partial => (0.0, d),
                OffloadMode::LocalOnly => (0.0, 0.0),
                OffloadMode::OffloadOnly => (d, d),
            };
            prog.add_scalar(format!("offload[{i}]"), lo, hi)
        })
        .collect();

    for &o in &offload {
        prog.objective = std::mem::take(&mut prog.objective).linear(o, p.fog_energy_per_bit_j);
    }

    let noise = p.noise_power_w();
    for i in 0..n_eh {
        let row = harvest_expr(p, ch, i)
            .term(local_term(p, i, offload[i]))
            .term(ConvexTerm::ExpPerspective {
                u: alpha[i],
                v: offload[i],
                k1: noise * t_u / ch.ul_gain[i],
                k2: p.bandwidth_hz * t_u,
            });
        prog.add_constraint(format!("energy[{i}]"), row, -p.circuit_energy_j);
    }

    let mut fog = ConvexExpr::new();
    let mut band = ConvexExpr::new();
    for i in 0..n_eh {
        fog = fog.linear(offload[i], p.eh[i].cycles_per_bit);
        band = band.linear(alpha[i], 1.0);
    }
    prog.add_constraint("fog", fog, p.fog_budget_cycles(t_u));
    prog.add_constraint("bandwidth", band, 1.0);

    Ok((prog, FotLayout { n_id: p.n_id(), t_u, alpha, offload }))
}

/// Beamforming part of the partial Lagrangian: minimizes
/// `Σ_j Tr(C W_j) + Tr(C Λ)` with `C = T·I − Σ_i μ_i ζ_i T H_i` subject to the
/// SINR rows and the transmit-energy budget `T·Tr(Σ_j W_j + Λ) ≤ budget_j`.
/// The budget keeps the minimum finite when `C` is indefinite.
pub fn build_wblock_program(p: &SystemParams, ch: &ChannelSet, mu: &[f64], budget_j: f64) -> Result<MixedConvexProgram> {
    check_inputs(p, ch)?;
    if mu.len() != p.n_eh() {
        return Err(Error::Dimension(format!("expected {} energy multipliers", p.n_eh())));
    }
    let mut prog = beamforming_skeleton(p, ch);
    let t = p.block_time_s;
    let mut c = HermitianMatrix::scaled_identity(p.n_antennas, t);
    for (i, &m) in mu.iter().enumerate() {
        c = c.sub(&ch.gram_eh[i].scale(m * p.eh[i].conversion_eff * t))?;
    }
    let energy = std::mem::take(&mut prog.objective);
    let mut obj = ConvexExpr::new();
    for b in 0..=p.n_id() {
        obj = obj.psd(b, c.clone());
    }
    prog.objective = obj;
    prog.add_constraint("budget", energy, budget_j);
    // Start well inside the budget.
    let start = budget_j / (4.0 * t * (p.n_id() + 1) as f64 * p.n_antennas as f64);
    for s in prog.psd_start_scale.iter_mut() {
        *s = s.min(start);
    }
    Ok(prog)
}

/// Augmented-Lagrangian subproblem over `{W, Λ, O, t_u, ã}` with `α` fixed.
///
/// Scalars are `O_i`, then `t_u`, then `ã_i`.
pub fn build_vblock_program(
    p: &SystemParams,
    ch: &ChannelSet,
    alpha: &[f64],
    state: &PddState,
) -> Result<(MixedConvexProgram, VBlockLayout)> {
    check_inputs(p, ch)?;
    let n_eh = p.n_eh();
    if alpha.len() != n_eh || state.lambda_tilde.len() != n_eh {
        return Err(Error::Dimension(format!("expected {n_eh} bandwidth fractions and duals")));
    }
    if alpha.iter().any(|a| !(0.0..=1.0).contains(a)) || alpha.iter().sum::<f64>() > 1.0 + 1e-12 {
        return Err(Error::Params("bandwidth fractions must lie in [0, 1] and sum to at most 1".into()));
    }
    if !(state.c > 0.0) {
        return Err(Error::State(format!("penalty parameter must be positive, got {}", state.c)));
    }
    let t = p.block_time_s;
    let mut prog = beamforming_skeleton(p, ch);
    let offload: Vec<usize> = (0..n_eh)
        .map(|i| prog.add_scalar(format!("offload[{i}]"), 0.0, p.eh[i].task_bits))
        .collect();
    let t_u = prog.add_scalar("t_u", 0.0, t);
    let a_tilde: Vec<usize> = (0..n_eh).map(|i| prog.add_scalar(format!("a_tilde[{i}]"), 0.0, t)).collect();

    let mut obj = std::mem::take(&mut prog.objective);
    for i in 0..n_eh {
        obj = obj.linear(offload[i], p.fog_energy_per_bit_j).term(ConvexTerm::Quadratic {
            v1: t_u,
            v2: a_tilde[i],
            k5: 0.5 / state.c,
            k6: alpha[i],
            k7: -1.0,
            k8: state.c * state.lambda_tilde[i],
        });
    }
    prog.objective = obj;

    let noise = p.noise_power_w();
    for i in 0..n_eh {
        let row = harvest_expr(p, ch, i).term(local_term(p, i, offload[i])).term(ConvexTerm::ExpPerspective {
            u: a_tilde[i],
            v: offload[i],
            k1: noise / ch.ul_gain[i],
            k2: p.bandwidth_hz,
        });
        prog.add_constraint(format!("energy[{i}]"), row, -p.circuit_energy_j);
    }
    let mut fog = ConvexExpr::new().linear(t_u, p.fog_cycles_per_s);
    for (&o, d) in offload.iter().zip(&p.eh) {
        fog = fog.linear(o, d.cycles_per_bit);
    }
    prog.add_constraint("fog", fog, p.fog_cycles_per_s * t);

    Ok((prog, VBlockLayout { n_id: p.n_id(), offload, t_u, a_tilde }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::gram;
    use crate::ipm::{ip_solve, IpmSettings};
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn channels(n_eh: usize, n_id: usize, n: usize) -> ChannelSet {
        let v = |s: f64| -> Vec<Complex64> {
            (0..n).map(|k| Complex64::new(s * (1.0 + k as f64) / 10.0, s * 0.05 * k as f64)).collect()
        };
        let eh: Vec<_> = (0..n_eh).map(|i| v(1.0 + i as f64)).collect();
        let id: Vec<_> = (0..n_id).map(|j| v(0.3 - 0.1 * j as f64)).collect();
        ChannelSet::new(eh.clone(), id, eh).unwrap()
    }

    #[test]
    fn single_user_mrt_power() {
        let mut p = SystemParams::with_users(0, 1);
        p.n_antennas = 3;
        p.set_sinr_db(6.0);
        let ch = channels(0, 1, 3);
        let (prog, layout) = build_fot_program(&p, &ch, 1.6, OffloadMode::Partial).unwrap();
        let sol = ip_solve(&prog, &IpmSettings::default()).unwrap();
        let h2 = ch.gram_id[0].trace();
        let expected = p.id[0].sinr_target * p.noise_power_w() / h2 * p.block_time_s;
        assert_relative_eq!(sol.objective, expected, max_relative = 1e-6);
        let (design, _) = layout.decode(&sol.point);
        let target = gram(&ch.dl_id[0]).scale(p.id[0].sinr_target * p.noise_power_w() / (h2 * h2));
        assert!(design.info_cov[0].sub(&target).unwrap().frobenius_norm() < 1e-6 * target.frobenius_norm());
    }

    #[test]
    fn row_count_at_defaults() {
        let p = SystemParams::default();
        let ch = channels(2, 2, 6);
        let (prog, _) = build_fot_program(&p, &ch, 1.6, OffloadMode::Partial).unwrap();
        assert_eq!(prog.inequality_rows(), 5 * 2 + 2 + 2);
        assert_eq!(prog.psd_blocks.len(), 3);
    }

    #[test]
    fn local_only_with_empty_tasks_pins_everything() {
        let mut p = SystemParams::default();
        p.set_task_bits(0.0);
        let ch = channels(2, 2, 6);
        let (prog, _) = build_fot_program(&p, &ch, 0.0, OffloadMode::LocalOnly).unwrap();
        assert_eq!(prog.free_scalars(), 0);
        assert_eq!(prog.inequality_rows(), 2 + 2 + 2);
    }

    #[test]
    fn offload_modes_require_interior_time() {
        let p = SystemParams::default();
        let ch = channels(2, 2, 6);
        assert!(build_fot_program(&p, &ch, 0.0, OffloadMode::Partial).is_err());
        assert!(build_fot_program(&p, &ch, 2.0, OffloadMode::OffloadOnly).is_err());
        assert!(build_fot_program(&p, &ch, 0.0, OffloadMode::LocalOnly).is_ok());
    }

    #[test]
    fn vblock_penalty_vanishes_for_huge_penalty() {
        let p = SystemParams::default();
        let ch = channels(2, 2, 6);
        let mut s = PddState::new(2);
        s.c = 1e12;
        let (prog, _) = build_vblock_program(&p, &ch, &[0.5, 0.5], &s).unwrap();
        for t in &prog.objective.terms {
            if let ConvexTerm::Quadratic { k5, .. } = t {
                assert!(*k5 < 1e-12);
            }
        }
    }

    #[test]
    fn vblock_rejects_bad_alpha() {
        let p = SystemParams::default();
        let ch = channels(2, 2, 6);
        let s = PddState::new(2);
        assert!(build_vblock_program(&p, &ch, &[0.7, 0.7], &s).is_err());
        assert!(build_vblock_program(&p, &ch, &[0.5], &s).is_err());
    }
}
