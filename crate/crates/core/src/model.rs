//! Network parameters, channels, designs and the pure evaluators for every
//! energy, rate and capacity quantity of the system.
//!
//! Units throughout: joules, watts, seconds, hertz, bits, CPU cycles. The
//! noise level is a power spectral density in W/Hz; formulas only ever use it
//! as `δ²` or as the in-band noise power `B·δ²`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hermitian::{rank_one_extract, HermitianMatrix};

/// Absolute tolerance on constraint slacks for a point to count as feasible.
pub const DEFAULT_FEAS_TOL: f64 = 1e-8;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// SINR target equivalent to a rate target `R` over bandwidth `B`: `2^(R/B) − 1`.
pub fn sinr_from_rate(rate_bps: f64, bandwidth_hz: f64) -> f64 {
    (rate_bps / bandwidth_hz * std::f64::consts::LN_2).exp_m1()
}

pub fn rate_from_sinr(sinr: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * (1.0 + sinr).log2()
}

/// An energy-harvesting sensor with a divisible computation task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EhDevice {
    /// RF-to-DC conversion efficiency ζ, in (0, 1].
    pub conversion_eff: f64,
    /// Effective switched capacitance κ of the local CPU.
    pub cap_coeff: f64,
    pub cycles_per_bit: f64,
    pub task_bits: f64,
}

/// An information-decoding sensor with a linear SINR target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdDevice {
    pub sinr_target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub n_antennas: usize,
    pub block_time_s: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_w_per_hz: f64,
    pub fog_cycles_per_s: f64,
    pub fog_energy_per_bit_j: f64,
    /// Circuit energy each EH device must cover per block.
    pub circuit_energy_j: f64,
    pub eh: Vec<EhDevice>,
    pub id: Vec<IdDevice>,
    /// Penalty shrink factor of the penalty dual decomposition, in (0, 1).
    pub pdd_theta: f64,
}

impl Default for SystemParams {
    /// Six antennas, two EH and two ID devices, 2 MHz, −80 dBm/Hz noise,
    /// 4 GHz fog CPU, β = 1e-4 J/bit, T = 2 s, E_c = 1e-4·T J, ζ = 0.8,
    /// D = 10 Kbit, κ = 1e-24, q = 1e3 cycles/bit, γ = 0 dB, θ = 0.1.
    fn default() -> Self {
        Self::with_users(2, 2)
    }
}

impl SystemParams {
    pub fn with_users(n_eh: usize, n_id: usize) -> Self {
        let block_time_s = 2.0;
        Self {
            n_antennas: 6,
            block_time_s,
            bandwidth_hz: 2e6,
            noise_psd_w_per_hz: 1e-11,
            fog_cycles_per_s: 4e9,
            fog_energy_per_bit_j: 1e-4,
            circuit_energy_j: 1e-4 * block_time_s,
            eh: vec![
                EhDevice { conversion_eff: 0.8, cap_coeff: 1e-24, cycles_per_bit: 1e3, task_bits: 1e4 };
                n_eh
            ],
            id: vec![IdDevice { sinr_target: 1.0 }; n_id],
            pdd_theta: 0.1,
        }
    }

    pub fn n_eh(&self) -> usize {
        self.eh.len()
    }

    pub fn n_id(&self) -> usize {
        self.id.len()
    }

    /// In-band noise power `B·δ²` in watts.
    pub fn noise_power_w(&self) -> f64 {
        self.bandwidth_hz * self.noise_psd_w_per_hz
    }

    /// Fog computing budget `F·(T − t_u)` in cycles.
    pub fn fog_budget_cycles(&self, t_u: f64) -> f64 {
        self.fog_cycles_per_s * (self.block_time_s - t_u)
    }

    pub fn set_sinr_db(&mut self, db: f64) {
        let g = db_to_linear(db);
        for d in &mut self.id {
            d.sinr_target = g;
        }
    }

    pub fn set_rate_bps(&mut self, rate_bps: f64) {
        let g = sinr_from_rate(rate_bps, self.bandwidth_hz);
        for d in &mut self.id {
            d.sinr_target = g;
        }
    }

    pub fn set_task_bits(&mut self, bits: f64) {
        for d in &mut self.eh {
            d.task_bits = bits;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("block_time_s", self.block_time_s),
            ("bandwidth_hz", self.bandwidth_hz),
            ("noise_psd_w_per_hz", self.noise_psd_w_per_hz),
            ("fog_cycles_per_s", self.fog_cycles_per_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Params(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_antennas == 0 {
            return Err(Error::Params("n_antennas must be positive".into()));
        }
        if !(self.fog_energy_per_bit_j >= 0.0) || !(self.circuit_energy_j >= 0.0) {
            return Err(Error::Params("fog energy per bit and circuit energy must be nonnegative".into()));
        }
        if !(self.pdd_theta > 0.0 && self.pdd_theta < 1.0) {
            return Err(Error::Params(format!("pdd_theta must lie in (0, 1), got {}", self.pdd_theta)));
        }
        for (i, d) in self.eh.iter().enumerate() {
            if !(d.conversion_eff > 0.0 && d.conversion_eff <= 1.0) {
                return Err(Error::Params(format!("EH device {i}: conversion efficiency outside (0, 1]")));
            }
            if !(d.cap_coeff > 0.0) || !(d.cycles_per_bit > 0.0) || !(d.task_bits >= 0.0) {
                return Err(Error::Params(format!("EH device {i}: κ, q must be positive and D nonnegative")));
            }
        }
        for (j, d) in self.id.iter().enumerate() {
            if !(d.sinr_target >= 0.0 && d.sinr_target.is_finite()) {
                return Err(Error::Params(format!("ID device {j}: SINR target must be nonnegative")));
            }
        }
        Ok(())
    }
}

/// Downlink and uplink channel vectors with their derived Gram matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub dl_eh: Vec<Vec<Complex64>>,
    pub dl_id: Vec<Vec<Complex64>>,
    pub ul_eh: Vec<Vec<Complex64>>,
    pub gram_eh: Vec<HermitianMatrix>,
    pub gram_id: Vec<HermitianMatrix>,
    pub ul_gain: Vec<f64>,
}

impl ChannelSet {
    pub fn new(
        dl_eh: Vec<Vec<Complex64>>,
        dl_id: Vec<Vec<Complex64>>,
        ul_eh: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        let n = dl_eh.first().or(dl_id.first()).map(Vec::len).unwrap_or(0);
        if dl_eh.iter().chain(&dl_id).chain(&ul_eh).any(|h| h.len() != n) {
            return Err(Error::Dimension("channel vectors differ in length".into()));
        }
        if ul_eh.len() != dl_eh.len() {
            return Err(Error::Dimension("uplink and downlink EH channel counts differ".into()));
        }
        let ul_gain: Vec<f64> = ul_eh.iter().map(|h| h.iter().map(|z| z.norm_sqr()).sum()).collect();
        if let Some(i) = ul_gain.iter().position(|&g| !(g > 0.0)) {
            return Err(Error::Domain(format!("uplink channel of EH device {i} has zero gain")));
        }
        Ok(Self {
            gram_eh: dl_eh.iter().map(|h| HermitianMatrix::gram(h)).collect(),
            gram_id: dl_id.iter().map(|h| HermitianMatrix::gram(h)).collect(),
            dl_eh,
            dl_id,
            ul_eh,
            ul_gain,
        })
    }

    pub fn n_antennas(&self) -> usize {
        self.dl_eh.first().or(self.dl_id.first()).map(Vec::len).unwrap_or(0)
    }

    pub fn check_against(&self, p: &SystemParams) -> Result<()> {
        if self.dl_eh.len() != p.n_eh() || self.dl_id.len() != p.n_id() {
            return Err(Error::Dimension(format!(
                "channels for {} EH / {} ID devices, parameters for {} / {}",
                self.dl_eh.len(),
                self.dl_id.len(),
                p.n_eh(),
                p.n_id()
            )));
        }
        if self.n_antennas() != p.n_antennas {
            return Err(Error::Dimension(format!(
                "channels have {} antennas, parameters {}",
                self.n_antennas(),
                p.n_antennas
            )));
        }
        Ok(())
    }
}

/// Information covariances `W_j`, the energy covariance `Λ`, and optionally
/// the beams extracted from the `W_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingDesign {
    pub info_cov: Vec<HermitianMatrix>,
    pub energy_cov: HermitianMatrix,
    pub beams: Option<Vec<Vec<Complex64>>>,
}

impl BeamformingDesign {
    pub fn zeros(n_antennas: usize, n_id: usize) -> Self {
        Self {
            info_cov: vec![HermitianMatrix::zeros(n_antennas); n_id],
            energy_cov: HermitianMatrix::zeros(n_antennas),
            beams: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.energy_cov.dim()
    }

    /// Total transmit power `Σ Tr(W_j) + Tr(Λ)`.
    pub fn total_power_w(&self) -> f64 {
        self.info_cov.iter().map(HermitianMatrix::trace).sum::<f64>() + self.energy_cov.trace()
    }

    /// `Σ_j W_j + Λ`.
    pub fn total_covariance(&self) -> Result<HermitianMatrix> {
        self.info_cov.iter().try_fold(self.energy_cov.clone(), |acc, w| acc.add(w))
    }

    pub fn rank_ratios(&self) -> Vec<f64> {
        self.info_cov.iter().map(|w| rank_one_extract(w).1).collect()
    }

    /// Extracts the dominant beam of every `W_j`; returns the λ₂/λ₁ ratios.
    pub fn extract_beams(&mut self) -> Vec<f64> {
        let (beams, ratios): (Vec<_>, Vec<_>) = self.info_cov.iter().map(rank_one_extract).unzip();
        self.beams = Some(beams);
        ratios
    }

    fn check(&self, p: &SystemParams) -> Result<()> {
        if self.info_cov.len() != p.n_id() {
            return Err(Error::Dimension(format!(
                "{} information covariances for {} ID devices",
                self.info_cov.len(),
                p.n_id()
            )));
        }
        if self.dim() != p.n_antennas || self.info_cov.iter().any(|w| w.dim() != p.n_antennas) {
            return Err(Error::Dimension("covariance size differs from antenna count".into()));
        }
        Ok(())
    }
}

/// Uplink bandwidth split, offloaded bits, offloading time and the auxiliary
/// per-device time-bandwidth products `ã_i` (= `t_u·α_i` at consensus).
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub alpha: Vec<f64>,
    pub offload_bits: Vec<f64>,
    pub t_u: f64,
    pub a_tilde: Vec<f64>,
}

impl Allocation {
    /// No offloading at all.
    pub fn local_only(n_eh: usize, t_u: f64) -> Self {
        Self { alpha: vec![0.0; n_eh], offload_bits: vec![0.0; n_eh], t_u, a_tilde: vec![0.0; n_eh] }
    }

    /// Builds an allocation with `ã = t_u·α`.
    pub fn with_consensus(alpha: Vec<f64>, offload_bits: Vec<f64>, t_u: f64) -> Self {
        let a_tilde = alpha.iter().map(|a| a * t_u).collect();
        Self { alpha, offload_bits, t_u, a_tilde }
    }

    pub fn enforce_consensus(&mut self) {
        self.a_tilde = self.alpha.iter().map(|a| a * self.t_u).collect();
    }

    fn check(&self, p: &SystemParams) -> Result<()> {
        let n = p.n_eh();
        if self.alpha.len() != n || self.offload_bits.len() != n || self.a_tilde.len() != n {
            return Err(Error::Dimension(format!("allocation vectors do not match {n} EH devices")));
        }
        Ok(())
    }
}

/// Constraint slacks and solver bookkeeping for one design/allocation pair.
/// Every slack is "≥ 0 means satisfied".
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub objective_j: f64,
    /// `Tr(G_j W_j) − γ_j(Σ_{k≠j} Tr(G_j W_k) + Tr(G_j Λ) + Bδ²)`, watts.
    pub rate_slack: Vec<f64>,
    /// Harvested minus consumed (local + uplink + circuit) energy, joules.
    pub eh_slack: Vec<f64>,
    /// `F(T − t_u) − Σ O_i q_i`, cycles.
    pub fog_slack: f64,
    /// `1 − Σ α_i`.
    pub bandwidth_slack: f64,
    /// Smallest of the box slacks on α, O and t_u.
    pub box_slack: f64,
    /// Smallest eigenvalue over all covariances.
    pub psd_slack: f64,
    pub iterations: usize,
    pub converged: bool,
    pub rank_ratios: Vec<f64>,
}

impl SolveReport {
    pub fn min_slack(&self) -> f64 {
        self.rate_slack
            .iter()
            .chain(&self.eh_slack)
            .copied()
            .chain([self.fog_slack, self.bandwidth_slack, self.box_slack, self.psd_slack])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_rank_ratio(&self) -> f64 {
        self.rank_ratios.iter().copied().fold(0.0, f64::max)
    }
}

/// Energy harvested by EH device `i` over the block.
pub fn harvested_energy(design: &BeamformingDesign, ch: &ChannelSet, p: &SystemParams, i: usize) -> Result<f64> {
    design.check(p)?;
    let dev = p.eh.get(i).ok_or_else(|| Error::Dimension(format!("no EH device {i}")))?;
    let h = &ch.dl_eh[i];
    let received = design.total_covariance()?.quadratic_form(h)?;
    Ok(dev.conversion_eff * received.max(0.0) * p.block_time_s)
}

/// SINR and achievable rate (bits/s) of ID device `j`.
pub fn sinr_and_rate(design: &BeamformingDesign, ch: &ChannelSet, p: &SystemParams, j: usize) -> Result<(f64, f64)> {
    design.check(p)?;
    if j >= p.n_id() {
        return Err(Error::Dimension(format!("no ID device {j}")));
    }
    let g = &ch.gram_id[j];
    let signal = g.trace_product(&design.info_cov[j])?;
    let mut interference = g.trace_product(&design.energy_cov)?;
    for (k, w) in design.info_cov.iter().enumerate() {
        if k != j {
            interference += g.trace_product(w)?;
        }
    }
    let sinr = signal.max(0.0) / (interference.max(0.0) + p.noise_power_w());
    Ok((sinr, rate_from_sinr(sinr, p.bandwidth_hz)))
}

/// Uplink transmit power `α·Bδ²·(2^{O/(αBt_u)} − 1)/‖h‖²`; zero when nothing is offloaded.
pub fn offload_power(alloc: &Allocation, ch: &ChannelSet, p: &SystemParams, i: usize) -> Result<f64> {
    alloc.check(p)?;
    if i >= p.n_eh() {
        return Err(Error::Dimension(format!("no EH device {i}")));
    }
    let (a, o) = (alloc.alpha[i], alloc.offload_bits[i]);
    if o <= 0.0 {
        return Ok(0.0);
    }
    if a <= 0.0 || alloc.t_u <= 0.0 {
        return Err(Error::InfeasibleAllocation(format!(
            "device {i} offloads {o} bits with α = {a}, t_u = {}",
            alloc.t_u
        )));
    }
    let exponent = o / (a * p.bandwidth_hz * alloc.t_u) * std::f64::consts::LN_2;
    Ok(a * p.noise_power_w() * exponent.exp_m1() / ch.ul_gain[i])
}

/// Local computing energy `κ q³ (D − O)³ / T²`.
pub fn local_energy(alloc: &Allocation, p: &SystemParams, i: usize) -> Result<f64> {
    alloc.check(p)?;
    let dev = p.eh.get(i).ok_or_else(|| Error::Dimension(format!("no EH device {i}")))?;
    let o = alloc.offload_bits[i];
    let rest = dev.task_bits - o;
    if o < 0.0 || rest < -1e-9 * dev.task_bits.max(1.0) {
        return Err(Error::Domain(format!("device {i}: offload {o} outside [0, {}]", dev.task_bits)));
    }
    let cycles = dev.cycles_per_bit * rest.max(0.0);
    Ok(dev.cap_coeff * cycles.powi(3) / (p.block_time_s * p.block_time_s))
}

/// F-HAP energy: `(Σ Tr W_j + Tr Λ)·T + β·Σ O_i`.
pub fn total_energy(design: &BeamformingDesign, alloc: &Allocation, p: &SystemParams) -> f64 {
    transmit_energy(design, p) + computing_energy(alloc, p)
}

pub fn transmit_energy(design: &BeamformingDesign, p: &SystemParams) -> f64 {
    design.total_power_w() * p.block_time_s
}

pub fn computing_energy(alloc: &Allocation, p: &SystemParams) -> f64 {
    p.fog_energy_per_bit_j * alloc.offload_bits.iter().sum::<f64>()
}

/// Evaluates every constraint slack of a design/allocation pair.
///
/// Never fails on infeasibility: an allocation whose uplink power is
/// undefined shows up as an EH slack of −∞.
pub fn validate(
    design: &BeamformingDesign,
    alloc: &Allocation,
    ch: &ChannelSet,
    p: &SystemParams,
    feas_tol: f64,
) -> SolveReport {
    let shapes_ok = design.check(p).is_ok() && alloc.check(p).is_ok() && ch.check_against(p).is_ok();
    if !shapes_ok {
        return SolveReport {
            objective_j: f64::NAN,
            rate_slack: vec![f64::NEG_INFINITY; p.n_id()],
            eh_slack: vec![f64::NEG_INFINITY; p.n_eh()],
            fog_slack: f64::NEG_INFINITY,
            bandwidth_slack: f64::NEG_INFINITY,
            box_slack: f64::NEG_INFINITY,
            psd_slack: f64::NEG_INFINITY,
            iterations: 0,
            converged: false,
            rank_ratios: Vec::new(),
        };
    }

    let noise = p.noise_power_w();
    let rate_slack = (0..p.n_id())
        .map(|j| {
            let g = &ch.gram_id[j];
            let tp = |m: &HermitianMatrix| g.trace_product(m).unwrap_or(f64::NAN);
            let signal = tp(&design.info_cov[j]);
            let interference: f64 = design
                .info_cov
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, w)| tp(w))
                .sum::<f64>()
                + tp(&design.energy_cov);
            signal - p.id[j].sinr_target * (interference + noise)
        })
        .collect();

    let eh_slack = (0..p.n_eh())
        .map(|i| {
            let harvested = harvested_energy(design, ch, p, i).unwrap_or(f64::NAN);
            let local = local_energy(alloc, p, i).unwrap_or(f64::INFINITY);
            let uplink = offload_power(alloc, ch, p, i).map(|pw| pw * alloc.t_u).unwrap_or(f64::INFINITY);
            harvested - (local + uplink + p.circuit_energy_j)
        })
        .collect();

    let cycles: f64 = alloc.offload_bits.iter().zip(&p.eh).map(|(o, d)| o * d.cycles_per_bit).sum();
    let fog_slack = p.fog_budget_cycles(alloc.t_u) - cycles;
    let bandwidth_slack = 1.0 - alloc.alpha.iter().sum::<f64>();

    let mut box_slack = alloc.t_u.min(p.block_time_s - alloc.t_u);
    for (i, d) in p.eh.iter().enumerate() {
        let (a, o) = (alloc.alpha[i], alloc.offload_bits[i]);
        box_slack = box_slack.min(a).min(1.0 - a).min(o).min(d.task_bits - o);
    }

    let psd_slack = design
        .info_cov
        .iter()
        .chain(std::iter::once(&design.energy_cov))
        .map(HermitianMatrix::min_eigenvalue)
        .fold(f64::INFINITY, f64::min);

    let mut report = SolveReport {
        objective_j: total_energy(design, alloc, p),
        rate_slack,
        eh_slack,
        fog_slack,
        bandwidth_slack,
        box_slack,
        psd_slack,
        iterations: 0,
        converged: false,
        rank_ratios: design.rank_ratios(),
    };
    report.converged = report.min_slack() >= -feas_tol;
    report
}
