//! Penalty dual decomposition for the joint design with an optimized
//! offloading time.
//!
//! The coupling `ã_i = t_u·α_i` is moved into an augmented-Lagrangian
//! penalty. The inner loop alternates an exact convex solve over
//! `{W, Λ, O, t_u, ã}` with a closed-form projection for `α`; the outer loop
//! either updates the duals or shrinks the penalty parameter.

use crate::error::{Error, Result};
use crate::ipm::{build_vblock_program, ip_solve, IpmSettings};
use crate::model::{total_energy, validate, Allocation, BeamformingDesign, ChannelSet, SolveReport, SystemParams, DEFAULT_FEAS_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct PddState {
    /// Penalty parameter `c > 0`.
    pub c: f64,
    pub lambda_tilde: Vec<f64>,
    pub tau: f64,
    /// Violation threshold deciding between dual and penalty updates.
    pub delta: f64,
    pub k: usize,
    pub n: usize,
    /// Inner-loop tolerance on successive objective values.
    pub eps1: f64,
    /// Outer-loop tolerance on the consensus violation.
    pub eps2: f64,
}

impl PddState {
    pub fn new(n_eh: usize) -> Self {
        Self { c: 0.1, lambda_tilde: vec![1.0; n_eh], tau: 1.0, delta: 1.0, k: 0, n: 0, eps1: 1e-4, eps2: 1e-6 }
    }

    /// `τ ← 0.6τ`, `Δ ← τ^{1/6}`, `k ← k + 1`.
    pub fn advance_schedule(&mut self) {
        self.tau *= 0.6;
        self.delta = self.tau.powf(1.0 / 6.0);
        self.k += 1;
    }
}

/// `q = total energy + Σ_i (1/2c)(α_i t_u − ã_i + c λ̃_i)²`.
pub fn al_objective(design: &BeamformingDesign, alloc: &Allocation, p: &SystemParams, state: &PddState) -> Result<f64> {
    if !(state.c > 0.0) {
        return Err(Error::State(format!("penalty parameter must be positive, got {}", state.c)));
    }
    if alloc.alpha.len() != state.lambda_tilde.len() || alloc.a_tilde.len() != state.lambda_tilde.len() {
        return Err(Error::Dimension("allocation and duals disagree on the device count".into()));
    }
    let penalty: f64 = (0..alloc.alpha.len())
        .map(|i| {
            let r = alloc.alpha[i] * alloc.t_u - alloc.a_tilde[i] + state.c * state.lambda_tilde[i];
            r * r / (2.0 * state.c)
        })
        .sum();
    Ok(total_energy(design, alloc, p) + penalty)
}

/// `max_i |α_i t_u − ã_i|` (0 without EH devices).
pub fn violation(alloc: &Allocation) -> f64 {
    alloc
        .alpha
        .iter()
        .zip(&alloc.a_tilde)
        .map(|(a, at)| (a * alloc.t_u - at).abs())
        .fold(0.0, f64::max)
}

/// `λ̃_i ← λ̃_i + (α_i t_u − ã_i)/c`.
pub fn update_duals(state: &PddState, alloc: &Allocation) -> PddState {
    let mut next = state.clone();
    for (i, l) in next.lambda_tilde.iter_mut().enumerate() {
        *l += (alloc.alpha[i] * alloc.t_u - alloc.a_tilde[i]) / state.c;
    }
    next
}

/// `c ← θ·c`.
pub fn update_penalty(state: &PddState, p: &SystemParams) -> Result<PddState> {
    let theta = p.pdd_theta;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Params(format!("penalty shrink factor must lie in (0, 1), got {theta}")));
    }
    let mut next = state.clone();
    next.c *= theta;
    Ok(next)
}

/// Euclidean projection onto `{0 ≤ α_i ≤ 1, Σα_i ≤ 1}`.
pub fn project_capped_simplex(g: &[f64]) -> Vec<f64> {
    let clip = |v: f64| v.clamp(0.0, 1.0);
    let sum_at = |nu: f64| g.iter().map(|&x| clip(x - nu)).sum::<f64>();
    if sum_at(0.0) <= 1.0 {
        return g.iter().map(|&x| clip(x)).collect();
    }
    // Σ clip(g − ν) is non-increasing in ν and reaches 0 at ν = max g.
    let (mut lo, mut hi) = (0.0, g.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sum_at(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Recover ν exactly from the active set at the bracket.
    let nu = hi;
    let free: Vec<f64> = g.iter().copied().filter(|&x| x - nu > 0.0 && x - nu < 1.0).collect();
    let capped = g.iter().filter(|&&x| x - nu >= 1.0).count() as f64;
    let nu = if free.is_empty() { nu } else { (free.iter().sum::<f64>() + capped - 1.0) / free.len() as f64 };
    g.iter().map(|&x| clip(x - nu)).collect()
}

/// Exact minimizer of `Σ(α_i t_u − ã_i + cλ̃_i)²` over the bandwidth
/// constraints: the projection of `g_i = (ã_i − cλ̃_i)/t_u`.
pub fn alpha_block(a_tilde: &[f64], t_u: f64, state: &PddState) -> Result<Vec<f64>> {
    if !(t_u > 0.0) {
        return Err(Error::Params(format!("offloading time must be positive, got {t_u}")));
    }
    if a_tilde.len() != state.lambda_tilde.len() {
        return Err(Error::Dimension("auxiliary variables and duals disagree on the device count".into()));
    }
    let g: Vec<f64> = a_tilde
        .iter()
        .zip(&state.lambda_tilde)
        .map(|(a, l)| (a - state.c * l) / t_u)
        .collect();
    Ok(project_capped_simplex(&g))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OotSettings {
    pub max_outer: usize,
    pub max_inner: usize,
    pub c_min: f64,
    pub ipm: IpmSettings,
}

impl Default for OotSettings {
    fn default() -> Self {
        Self { max_outer: 50, max_inner: 100, c_min: 1e-8, ipm: IpmSettings::default() }
    }
}

/// One outer iteration of the decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct OotTraceEntry {
    pub k: usize,
    /// Augmented-Lagrangian objective after the last inner sweep.
    pub q: f64,
    pub eps_tilde: f64,
    pub c: f64,
    /// `q` after every inner sweep of this outer iteration.
    pub inner_q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OotSolution {
    pub design: BeamformingDesign,
    /// Allocation with `ã = t_u·α` enforced.
    pub alloc: Allocation,
    pub report: SolveReport,
    pub trace: Vec<OotTraceEntry>,
}

/// Runs the decomposition to `ε̃ ≤ ε₂` or the outer-iteration cap.
pub fn solve_oot(p: &SystemParams, ch: &ChannelSet, settings: &OotSettings) -> Result<OotSolution> {
    p.validate()?;
    ch.check_against(p)?;
    let n_eh = p.n_eh();
    let mut state = PddState::new(n_eh);
    let mut alpha = vec![if n_eh == 0 { 0.0 } else { (1.0 / n_eh as f64).min(1.0) }; n_eh];
    let mut q_prev = 0.0;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut last = None;

    while state.k < settings.max_outer {
        state.n = 0;
        let mut inner_q = Vec::new();
        let (design, alloc) = loop {
            let (prog, layout) = build_vblock_program(p, ch, &alpha, &state)?;
            let sol = ip_solve(&prog, &settings.ipm)?;
            let (design, mut alloc) = layout.decode(&sol.point, &alpha);
            alpha = alpha_block(&alloc.a_tilde, alloc.t_u, &state)?;
            alloc.alpha = alpha.clone();
            let q = al_objective(&design, &alloc, p, &state)?;
            inner_q.push(q);
            state.n += 1;
            let settled = (q - q_prev).abs() <= state.eps1;
            q_prev = q;
            if settled || state.n >= settings.max_inner {
                break (design, alloc);
            }
        };

        let eps = violation(&alloc);
        trace.push(OotTraceEntry { k: state.k, q: q_prev, eps_tilde: eps, c: state.c, inner_q });
        state = if eps <= state.delta {
            update_duals(&state, &alloc)
        } else {
            let mut next = update_penalty(&state, p)?;
            next.c = next.c.max(settings.c_min);
            next
        };
        state.advance_schedule();
        last = Some((design, alloc));
        if eps <= state.eps2 {
            converged = true;
            break;
        }
    }

    let (mut design, mut alloc) = last.ok_or_else(|| Error::Params("outer-iteration cap must be positive".into()))?;
    alloc.enforce_consensus();
    let rank_ratios = design.extract_beams();
    let mut report = validate(&design, &alloc, ch, p, DEFAULT_FEAS_TOL);
    report.iterations = trace.len();
    report.rank_ratios = rank_ratios;
    report.converged = report.converged && converged;
    Ok(OotSolution { design, alloc, report, trace })
}
