//! Dual decomposition of the fixed-offloading-time program: closed-form
//! bandwidth/offload updates per device and a projected subgradient loop on
//! the fog, bandwidth and energy multipliers.

use std::collections::HashMap;
use std::f64::consts::{E, LN_2};

use super::lambert::lambert_w0;
use super::{solve_residual, FotSolution};
use crate::error::{Error, Result};
use crate::ipm::{build_wblock_program, ip_solve, IpmSettings};
use crate::model::{ChannelSet, SystemParams};

/// Multipliers of the fog-capacity (`nu1`), bandwidth-sum (`nu2`), per-device
/// energy (`mu`) and per-user SINR (`lambda`) constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct FotDuals {
    pub nu1: f64,
    pub nu2: f64,
    pub mu: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl FotDuals {
    pub fn zeros(n_eh: usize, n_id: usize) -> Self {
        Self { nu1: 0.0, nu2: 0.0, mu: vec![0.0; n_eh], lambda: vec![0.0; n_id] }
    }

    fn check(&self) -> Result<()> {
        let all = [self.nu1, self.nu2].into_iter().chain(self.mu.iter().copied()).chain(self.lambda.iter().copied());
        for v in all {
            if !(v >= 0.0) {
                return Err(Error::Domain(format!("multipliers must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Stationary bits-per-bandwidth ratio `φ = O/α` of the per-device
/// Lagrangian:
/// `φ = (B t_u/ln2)·(W₀(ν₂‖h‖²/(μ δ² B t_u e) − 1/e) + 1)`.
pub fn phi_ratio(nu2: f64, mu_i: f64, ul_gain: f64, p: &SystemParams, t_u: f64) -> Result<f64> {
    if !(mu_i > 0.0) {
        return Err(Error::Domain(format!("energy multiplier must be positive, got {mu_i}")));
    }
    if !(nu2 >= 0.0 && ul_gain > 0.0 && t_u > 0.0) {
        return Err(Error::Domain("need ν₂ ≥ 0, positive uplink gain and positive offloading time".into()));
    }
    let bt = p.bandwidth_hz * t_u;
    let arg = nu2 * ul_gain / (mu_i * p.noise_psd_w_per_hz * bt * E) - 1.0 / E;
    let w = lambert_w0(arg)?;
    Ok((bt / LN_2 * (w + 1.0)).max(0.0))
}

fn local_energy_at(p: &SystemParams, i: usize, o: f64) -> f64 {
    let d = &p.eh[i];
    d.cap_coeff * (d.cycles_per_bit * (d.task_bits - o)).powi(3) / p.block_time_s.powi(2)
}

fn uplink_energy_at(p: &SystemParams, ul_gain: f64, t_u: f64, alpha: f64, o: f64) -> f64 {
    if o <= 0.0 {
        0.0
    } else if alpha <= 0.0 {
        f64::INFINITY
    } else {
        let bt = p.bandwidth_hz * t_u;
        alpha * bt * p.noise_psd_w_per_hz * (o / (alpha * bt) * LN_2).exp_m1() / ul_gain
    }
}

/// Per-device part of the partial Lagrangian,
/// `βO + ν₁qO + ν₂α + μ(local(O) + α t_u Bδ²(2^{O/(αBt_u)} − 1)/‖h‖² + E_c)`.
pub fn device_lagrangian(duals: &FotDuals, p: &SystemParams, i: usize, ul_gain: f64, t_u: f64, alpha: f64, o: f64) -> f64 {
    let mu = duals.mu[i];
    let energy = if mu == 0.0 {
        0.0
    } else {
        mu * (local_energy_at(p, i, o) + uplink_energy_at(p, ul_gain, t_u, alpha, o) + p.circuit_energy_j)
    };
    (p.fog_energy_per_bit_j + duals.nu1 * p.eh[i].cycles_per_bit) * o + duals.nu2 * alpha + energy
}

/// `∂/∂O` of the per-device Lagrangian at full bandwidth `α = 1`.
fn full_band_slope(duals: &FotDuals, p: &SystemParams, i: usize, ul_gain: f64, t_u: f64, o: f64) -> f64 {
    let d = &p.eh[i];
    let mu = duals.mu[i];
    let q3 = d.cycles_per_bit.powi(3);
    p.fog_energy_per_bit_j + duals.nu1 * d.cycles_per_bit
        - 3.0 * mu * d.cap_coeff * q3 * (d.task_bits - o).powi(2) / p.block_time_s.powi(2)
        + mu * LN_2 * p.noise_psd_w_per_hz / ul_gain * (o / (p.bandwidth_hz * t_u) * LN_2).exp()
}

/// Minimizer `(O°, α°)` of the per-device Lagrangian over `α ∈ [0, 1]`,
/// `O ∈ [0, D]`.
///
/// Interior case: `O° = [D − sqrt((β + ν₁q + 2^{φ/(Bt_u)} ln2 δ² μ/‖h‖²) T²/(3μκq³))]⁺`
/// and `α° = O°/φ`. When that `α°` would exceed one (always the case for
/// `φ = 0`), the bandwidth cap binds and `O°` solves the one-dimensional
/// problem at `α = 1`. A zero multiplier gives `(0, 0)`.
pub fn offload_closed_form(duals: &FotDuals, p: &SystemParams, i: usize, ul_gain: f64, t_u: f64) -> Result<(f64, f64)> {
    duals.check()?;
    let mu = duals.mu[i];
    let d = &p.eh[i];
    if mu == 0.0 || d.task_bits <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let phi = phi_ratio(duals.nu2, mu, ul_gain, p, t_u)?;
    let bt = p.bandwidth_hz * t_u;
    let t2 = p.block_time_s.powi(2);
    let q = d.cycles_per_bit;
    if phi > 0.0 {
        let marginal = p.fog_energy_per_bit_j
            + duals.nu1 * q
            + (phi / bt * LN_2).exp() * LN_2 * p.noise_psd_w_per_hz * mu / ul_gain;
        let o = (d.task_bits - (marginal * t2 / (3.0 * mu * d.cap_coeff * q.powi(3))).sqrt()).max(0.0);
        if o <= 0.0 {
            return Ok((0.0, 0.0));
        }
        if o <= phi {
            return Ok((o, o / phi));
        }
    }

    // α = 1: the Lagrangian is convex in O with a monotone slope on [φ, D].
    let lo0 = phi.min(d.task_bits);
    let slope = |o: f64| full_band_slope(duals, p, i, ul_gain, t_u, o);
    if slope(lo0) >= 0.0 {
        return Ok(if lo0 > 0.0 { (lo0, 1.0) } else { (0.0, 0.0) });
    }
    if slope(d.task_bits) <= 0.0 {
        return Ok((d.task_bits, 1.0));
    }
    let (mut lo, mut hi) = (lo0, d.task_bits);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi), 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualAscentSettings {
    pub max_iter: usize,
    /// Stop once `(best primal − best dual bound)/best primal` is below this.
    pub rel_gap: f64,
    /// Step scale `a` of the diminishing steps `a/√k`.
    pub step: f64,
    pub ipm: IpmSettings,
}

impl Default for DualAscentSettings {
    fn default() -> Self {
        Self { max_iter: 60, rel_gap: 1e-3, step: 0.1, ipm: IpmSettings::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualAscentSolution {
    /// Best feasible primal point recovered along the way.
    pub solution: FotSolution,
    pub duals: FotDuals,
    /// Best Lagrangian lower bound on the optimum.
    pub lower_bound: f64,
    pub iterations: usize,
}

fn bits_key(alpha: &[f64], o: &[f64]) -> Vec<u64> {
    alpha.iter().chain(o).map(|v| v.to_bits()).collect()
}

/// Maps a closed-form `(α, O)` onto the fog and bandwidth constraints.
fn project_allocation(p: &SystemParams, t_u: f64, alpha: &mut [f64], o: &mut [f64]) {
    for (a, b) in alpha.iter_mut().zip(o.iter_mut()) {
        if *a <= 0.0 {
            *b = 0.0;
        }
    }
    let band: f64 = alpha.iter().sum();
    if band > 1.0 {
        alpha.iter_mut().for_each(|a| *a /= band);
    }
    let cycles: f64 = o.iter().zip(&p.eh).map(|(b, d)| b * d.cycles_per_bit).sum();
    let budget = p.fog_budget_cycles(t_u);
    if cycles > budget {
        let f = budget / cycles * (1.0 - 1e-12);
        o.iter_mut().for_each(|b| *b *= f);
    }
}

const ENERGY_CAP_SLACK: f64 = 2.0;

/// Projected subgradient ascent on the fog, bandwidth and energy multipliers.
///
/// Each iteration evaluates the dual function (closed forms for `(α, O)` and a
/// budgeted beamforming program for `(W, Λ)`) and recovers a primal point by
/// fixing the projected `(α, O)` and re-solving for the covariances with all
/// constraints explicit. The energy multipliers start from the central-path
/// estimates of the first recovery solve.
pub fn dual_ascent_solve(
    p: &SystemParams,
    ch: &ChannelSet,
    t_u: f64,
    settings: &DualAscentSettings,
) -> Result<DualAscentSolution> {
    p.validate()?;
    ch.check_against(p)?;
    let (n_eh, n_id) = (p.n_eh(), p.n_id());
    let t = p.block_time_s;
    let budget_cycles = p.fog_budget_cycles(t_u);

    let mut cache: HashMap<Vec<u64>, (FotSolution, Vec<f64>)> = HashMap::new();
    let mut recover = |alpha: &[f64], o: &[f64]| -> Result<(FotSolution, Vec<f64>)> {
        let key = bits_key(alpha, o);
        if let Some(hit) = cache.get(&key) {
            return Ok(hit.clone());
        }
        let out = solve_residual(p, ch, t_u, alpha, o, &settings.ipm)?;
        cache.insert(key, out.clone());
        Ok(out)
    };

    let alpha0: Vec<f64> =
        p.eh.iter().map(|d| if d.task_bits > 0.0 { (1.0 / n_eh as f64).min(1.0) } else { 0.0 }).collect();
    let (first, row_duals) = recover(&alpha0, &vec![0.0; n_eh])?;
    let mut best = first;
    // Any feasible objective caps the optimal transmit energy; the slack keeps
    // the budgeted program strictly feasible when the cap is nearly tight.
    let budget_j = ENERGY_CAP_SLACK * best.report.objective_j;
    let mut duals = FotDuals {
        nu1: 0.0,
        nu2: 0.0,
        mu: (0..n_eh).map(|i| row_duals[n_id + i]).collect(),
        lambda: row_duals[..n_id].to_vec(),
    };
    let mu_ref = duals.mu.iter().copied().fold(0.0, f64::max).max(1e-6);
    let mut lower = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    for k in 1..=settings.max_iter {
        iterations = k;
        let mut alpha = vec![0.0; n_eh];
        let mut o = vec![0.0; n_eh];
        let mut device_part = 0.0;
        for i in 0..n_eh {
            let (oi, ai) = offload_closed_form(&duals, p, i, ch.ul_gain[i], t_u)?;
            o[i] = oi;
            alpha[i] = ai;
            device_part += device_lagrangian(&duals, p, i, ch.ul_gain[i], t_u, ai, oi);
        }

        let wprog = build_wblock_program(p, ch, &duals.mu, budget_j)?;
        let wsol = ip_solve(&wprog, &settings.ipm)?;
        let dual_value = wsol.objective + device_part - duals.nu1 * budget_cycles - duals.nu2;
        lower = lower.max(dual_value);

        let (mut pa, mut po) = (alpha.clone(), o.clone());
        project_allocation(p, t_u, &mut pa, &mut po);
        let (candidate, _) = recover(&pa, &po)?;
        if candidate.report.converged && candidate.report.objective_j < best.report.objective_j {
            best = candidate;
        }
        let upper = best.report.objective_j;
        if (upper - lower) <= settings.rel_gap * upper.abs() {
            converged = true;
            break;
        }

        // Subgradients of the dual function at the current multipliers.
        let step = settings.step / (k as f64).sqrt();
        let g_nu1 = o.iter().zip(&p.eh).map(|(b, d)| b * d.cycles_per_bit).sum::<f64>() - budget_cycles;
        let g_nu2 = alpha.iter().sum::<f64>() - 1.0;
        let total = wsol.point.blocks.iter().skip(1).try_fold(wsol.point.blocks[0].clone(), |acc, b| acc.add(b))?;
        for i in 0..n_eh {
            let need = local_energy_at(p, i, o[i]) + uplink_energy_at(p, ch.ul_gain[i], t_u, alpha[i], o[i]);
            let harvested = p.eh[i].conversion_eff * t * ch.gram_eh[i].trace_product(&total)?;
            let g_mu = need + p.circuit_energy_j - harvested;
            let scale = p.circuit_energy_j.max(1e-12);
            duals.mu[i] = (duals.mu[i] + step * mu_ref * (g_mu / scale).clamp(-1.0, 1.0)).max(0.0);
        }
        duals.nu1 = (duals.nu1 + step * upper / budget_cycles * (g_nu1 / budget_cycles).clamp(-1.0, 1.0)).max(0.0);
        duals.nu2 = (duals.nu2 + step * upper * g_nu2.clamp(-1.0, 1.0)).max(0.0);
    }

    best.report.converged = best.report.converged && converged;
    best.report.iterations = iterations;
    Ok(DualAscentSolution { solution: best, duals, lower_bound: lower, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn duals(mu: f64, nu1: f64, nu2: f64) -> FotDuals {
        FotDuals { nu1, nu2, mu: vec![mu; 2], lambda: vec![0.0; 2] }
    }

    #[test]
    fn phi_boundary_and_reference_value() {
        let p = SystemParams::default();
        assert_eq!(phi_ratio(0.0, 1.0, 1e-2, &p, 1.6).unwrap(), 0.0);
        // ν₂‖h‖²/(μδ²Bt_u) = e
        let (mu, g, t_u) = (2.0, 1e-2, 1.6);
        let nu2 = E * mu * p.noise_psd_w_per_hz * p.bandwidth_hz * t_u / g;
        let phi = phi_ratio(nu2, mu, g, &p, t_u).unwrap();
        let expected = 3.2e6 / LN_2 * (lambert_w0(1.0 - 1.0 / E).unwrap() + 1.0);
        assert_relative_eq!(phi, expected, max_relative = 1e-12);
        assert_relative_eq!(phi, 6.5404e6, max_relative = 1e-5);
        assert!(phi_ratio(2.0 * nu2, mu, g, &p, t_u).unwrap() > phi);
        assert!(phi_ratio(nu2, 0.0, g, &p, t_u).is_err());
    }

    #[test]
    fn zero_energy_multiplier_means_no_offload() {
        let p = SystemParams::default();
        assert_eq!(offload_closed_form(&duals(0.0, 0.0, 1.0), &p, 0, 1e-2, 1.6).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn large_marginal_cost_clamps_to_zero() {
        let p = SystemParams::default();
        assert_eq!(offload_closed_form(&duals(1e-3, 1.0, 1.0), &p, 0, 1e-2, 1.6).unwrap(), (0.0, 0.0));
    }

    fn grid_min(d: &FotDuals, p: &SystemParams, g: f64, t_u: f64, n: usize) -> (f64, f64, f64) {
        let dd = p.eh[0].task_bits;
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for a in 0..=n {
            for b in 0..=n {
                let (al, o) = (a as f64 / n as f64, dd * b as f64 / n as f64);
                let v = device_lagrangian(d, p, 0, g, t_u, al, o);
                if v < best.0 {
                    best = (v, al, o);
                }
            }
        }
        best
    }

    #[test]
    fn closed_form_matches_grid_search() {
        let mut p = SystemParams::default();
        p.set_task_bits(5e4);
        let (g, t_u) = (1e-2, 1.6);
        let mu = 1e3;
        let nu2 = E * mu * p.noise_psd_w_per_hz * p.bandwidth_hz * t_u / g;
        let d = duals(mu, 0.0, nu2);
        let (o, a) = offload_closed_form(&d, &p, 0, g, t_u).unwrap();
        let v = device_lagrangian(&d, &p, 0, g, t_u, a, o);
        let (vg, _, _) = grid_min(&d, &p, g, t_u, 400);
        assert!(v <= vg + 1e-12 * vg.abs().max(1.0), "{v} vs grid {vg}");
    }

    #[test]
    fn interior_stationarity() {
        let mut p = SystemParams::default();
        p.set_task_bits(5e4);
        let (g, t_u) = (1e-2, 1.6);
        let d = duals(1e3, 0.0, 1e-3);
        let (o, a) = offload_closed_form(&d, &p, 0, g, t_u).unwrap();
        assert!(o > 0.0 && o < p.eh[0].task_bits && a > 0.0 && a < 1.0, "({o}, {a})");
        let f = |a: f64, o: f64| device_lagrangian(&d, &p, 0, g, t_u, a, o);
        let (ha, ho) = (1e-6 * a, 1e-6 * o);
        let da = (f(a + ha, o) - f(a - ha, o)) / (2.0 * ha);
        let dob = (f(a, o + ho) - f(a, o - ho)) / (2.0 * ho);
        let scale = f(a, o).abs() / a.max(1e-12);
        assert!(da.abs() <= 1e-6 * scale, "∂α = {da}");
        assert!(dob.abs() <= 1e-6 * f(a, o).abs() / o, "∂O = {dob}");
    }
}
