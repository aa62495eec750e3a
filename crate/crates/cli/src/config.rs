//! Flat TOML run configuration. Every key is optional; missing keys keep the
//! library defaults and command-line flags override the file.

use std::path::Path;

use anyhow::{bail, Context, Result};
use fogswipt_core::{ChannelConfig, EhDevice, IpmSettings, OffloadMode, OotSettings, SystemParams};
use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n_antennas: Option<usize>,
    pub n_eh: Option<usize>,
    pub n_id: Option<usize>,
    pub block_time_s: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    pub noise_psd_w_per_hz: Option<f64>,
    pub fog_cycles_per_s: Option<f64>,
    pub fog_energy_per_bit_j: Option<f64>,
    /// Circuit energy per second of block time; `E_c = rate·T`.
    pub circuit_power_w: Option<f64>,
    pub conversion_eff: Option<f64>,
    pub cap_coeff: Option<f64>,
    pub cycles_per_bit: Option<f64>,
    pub task_bits: Option<f64>,
    pub sinr_db: Option<f64>,
    pub pdd_theta: Option<f64>,

    pub eh_dist_range_m: Option<[f64; 2]>,
    pub id_dist_range_m: Option<[f64; 2]>,
    pub rician_k: Option<f64>,
    pub pathloss_exp: Option<f64>,
    pub reference_gain_at_1m: Option<f64>,
    pub reciprocal: Option<bool>,

    pub seeds: Option<Vec<u64>>,
    pub tu_fracs: Option<Vec<f64>>,
    pub modes: Option<Vec<String>>,
    pub jobs: Option<usize>,
    pub gamma_grid_db: Option<Vec<f64>>,
    pub task_grid_bits: Option<Vec<f64>>,
    pub time_grid_s: Option<Vec<f64>>,
    pub user_grid: Option<Vec<usize>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Fully resolved inputs of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    /// Base parameters; sweeps override the swept field per cell.
    pub params: SystemParams,
    pub circuit_power_w: f64,
    pub channel: ChannelConfig,
    /// SINR target set in the configuration, if any.
    pub sinr_db: Option<f64>,
    pub seeds: Vec<u64>,
    pub tu_fracs: Vec<f64>,
    pub modes: Vec<OffloadMode>,
    pub jobs: usize,
    pub gamma_grid_db: Vec<f64>,
    pub task_grid_bits: Vec<f64>,
    pub time_grid_s: Vec<f64>,
    pub user_grid: Vec<usize>,
    pub ipm: IpmSettings,
    pub oot: OotSettings,
}

impl Default for RunSpec {
    fn default() -> Self {
        let params = SystemParams::default();
        Self {
            circuit_power_w: params.circuit_energy_j / params.block_time_s,
            params,
            channel: ChannelConfig::default(),
            sinr_db: None,
            seeds: vec![0],
            tu_fracs: vec![0.8],
            modes: OffloadMode::ALL.to_vec(),
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            gamma_grid_db: vec![0.0, 3.0, 6.0, 9.0, 12.0],
            task_grid_bits: vec![2e3, 5e3, 1e4, 1.5e4, 2e4, 3e4, 4e4, 5e4],
            time_grid_s: vec![1.0, 1.5, 2.0, 2.5],
            user_grid: vec![1, 2, 3, 4],
            ipm: IpmSettings::default(),
            oot: OotSettings::default(),
        }
    }
}

impl RunSpec {
    pub fn from_file(cfg: &ConfigFile) -> Result<Self> {
        let mut spec = Self::default();
        let (n_eh, n_id) = (cfg.n_eh.unwrap_or(spec.params.n_eh()), cfg.n_id.unwrap_or(spec.params.n_id()));
        let base = spec.params.eh[0];
        let mut p = SystemParams::with_users(n_eh, n_id);
        let dev = EhDevice {
            conversion_eff: cfg.conversion_eff.unwrap_or(base.conversion_eff),
            cap_coeff: cfg.cap_coeff.unwrap_or(base.cap_coeff),
            cycles_per_bit: cfg.cycles_per_bit.unwrap_or(base.cycles_per_bit),
            task_bits: cfg.task_bits.unwrap_or(base.task_bits),
        };
        p.eh = vec![dev; n_eh];
        set(&mut p.n_antennas, cfg.n_antennas);
        set(&mut p.block_time_s, cfg.block_time_s);
        set(&mut p.bandwidth_hz, cfg.bandwidth_hz);
        set(&mut p.noise_psd_w_per_hz, cfg.noise_psd_w_per_hz);
        set(&mut p.fog_cycles_per_s, cfg.fog_cycles_per_s);
        set(&mut p.fog_energy_per_bit_j, cfg.fog_energy_per_bit_j);
        set(&mut p.pdd_theta, cfg.pdd_theta);
        set(&mut spec.circuit_power_w, cfg.circuit_power_w);
        p.circuit_energy_j = spec.circuit_power_w * p.block_time_s;
        if let Some(db) = cfg.sinr_db {
            p.set_sinr_db(db);
        }
        spec.sinr_db = cfg.sinr_db;
        spec.params = p;

        let ch = &mut spec.channel;
        if let Some([lo, hi]) = cfg.eh_dist_range_m {
            ch.eh_dist_range_m = (lo, hi);
        }
        if let Some([lo, hi]) = cfg.id_dist_range_m {
            ch.id_dist_range_m = (lo, hi);
        }
        set(&mut ch.rician_k, cfg.rician_k);
        set(&mut ch.pathloss_exp, cfg.pathloss_exp);
        set(&mut ch.reference_gain_at_1m, cfg.reference_gain_at_1m);
        set(&mut ch.reciprocal, cfg.reciprocal);

        set(&mut spec.seeds, cfg.seeds.clone());
        set(&mut spec.tu_fracs, cfg.tu_fracs.clone());
        if let Some(m) = &cfg.modes {
            spec.modes = parse_modes(m)?;
        }
        set(&mut spec.jobs, cfg.jobs);
        set(&mut spec.gamma_grid_db, cfg.gamma_grid_db.clone());
        set(&mut spec.task_grid_bits, cfg.task_grid_bits.clone());
        set(&mut spec.time_grid_s, cfg.time_grid_s.clone());
        set(&mut spec.user_grid, cfg.user_grid.clone());
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<()> {
        self.params.validate()?;
        self.channel.validate()?;
        if self.seeds.is_empty() || self.modes.is_empty() || self.tu_fracs.is_empty() {
            bail!("seeds, modes and t_u fractions must be nonempty");
        }
        if self.jobs == 0 {
            bail!("jobs must be at least 1");
        }
        if let Some(f) = self.tu_fracs.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
            bail!("t_u fraction {f} must lie in (0, 1)");
        }
        for (name, empty) in [
            ("gamma_grid_db", self.gamma_grid_db.is_empty()),
            ("task_grid_bits", self.task_grid_bits.is_empty()),
            ("time_grid_s", self.time_grid_s.is_empty()),
            ("user_grid", self.user_grid.is_empty()),
        ] {
            if empty {
                bail!("{name} must be nonempty");
            }
        }
        Ok(())
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

pub fn parse_modes<S: AsRef<str>>(names: &[S]) -> Result<Vec<OffloadMode>> {
    names.iter().map(|s| s.as_ref().trim().parse::<OffloadMode>().map_err(Into::into)).collect()
}

/// Parses `1,2,5` or the half-open range `0..20`, or a mix of both.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
                if a >= b {
                    bail!("empty seed range {part}");
                }
                out.extend(a..b);
            }
            None => out.push(part.parse().with_context(|| format!("bad seed {part:?}"))?),
        }
    }
    if out.is_empty() {
        bail!("no seeds in {text:?}");
    }
    Ok(out)
}
