//! Seeded channel realizations: Rician energy-harvesting links, Rayleigh
//! information links and distance-based path loss.
//!
//! Every device draws from its own ChaCha stream, selected by
//! `(link type << 32) | device index`, so adding devices of one type never
//! perturbs the draws of another. Per device the draw order is distance, then
//! the line-of-sight angle (Rician links only), then `N_t` complex normals.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::model::{ChannelSet, SystemParams};

const STREAM_EH_DOWNLINK: u64 = 1;
const STREAM_ID_DOWNLINK: u64 = 2;
const STREAM_EH_UPLINK: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub eh_dist_range_m: (f64, f64),
    pub id_dist_range_m: (f64, f64),
    /// Linear Rician factor of the EH links; `f64::INFINITY` gives pure line of sight.
    pub rician_k: f64,
    pub pathloss_exp: f64,
    pub reference_gain_at_1m: f64,
    pub seed: u64,
    /// Use the downlink EH channel as the uplink channel.
    pub reciprocal: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            eh_dist_range_m: (5.0, 10.0),
            id_dist_range_m: (15.0, 20.0),
            rician_k: 3.0,
            pathloss_exp: 2.0,
            reference_gain_at_1m: 1.0,
            seed: 0,
            reciprocal: true,
        }
    }
}

impl ChannelConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("eh", self.eh_dist_range_m), ("id", self.id_dist_range_m)] {
            if !(lo >= 1.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::Params(format!("{name} distance range [{lo}, {hi}] must be nonempty and start at 1 m or more")));
            }
        }
        if !(self.rician_k >= 0.0) {
            return Err(Error::Params(format!("Rician factor must be nonnegative, got {}", self.rician_k)));
        }
        if !(self.pathloss_exp > 0.0 && self.reference_gain_at_1m > 0.0) {
            return Err(Error::Params("path-loss exponent and reference gain must be positive".into()));
        }
        Ok(())
    }
}

/// `reference_gain · d^(−exponent)` for `d ≥ 1 m`.
pub fn pathloss_gain(d_m: f64, cfg: &ChannelConfig) -> Result<f64> {
    if !(d_m >= 1.0) {
        return Err(Error::Domain(format!("path loss is modelled from 1 m on, got {d_m} m")));
    }
    Ok(cfg.reference_gain_at_1m * d_m.powf(-cfg.pathloss_exp))
}

fn stream(seed: u64, tag: u64, index: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream((tag << 32) | index as u64);
    rng
}

/// `N_t` i.i.d. circular complex normals with unit variance.
fn scattered<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(s * re, s * im)
        })
        .collect()
}

fn draw_distance<R: Rng>(rng: &mut R, range: (f64, f64)) -> Result<f64> {
    let u = Uniform::new_inclusive(range.0, range.1).map_err(|e| Error::Params(e.to_string()))?;
    Ok(u.sample(rng))
}

/// Small-scale Rician fading with a half-wavelength linear-array steering
/// vector `a_k = exp(iπk sin φ)`.
fn rician<R: Rng>(rng: &mut R, n: usize, k: f64) -> Result<Vec<Complex64>> {
    let angle = Uniform::new(-FRAC_PI_2, FRAC_PI_2).map_err(|e| Error::Params(e.to_string()))?.sample(rng);
    let los = (0..n).map(|m| Complex64::from_polar(1.0, PI * m as f64 * angle.sin()));
    if k.is_infinite() {
        return Ok(los.collect());
    }
    let nlos = scattered(rng, n);
    let (a, b) = ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt());
    Ok(los.zip(nlos).map(|(l, g)| l * a + g * b).collect())
}

fn scale(h: Vec<Complex64>, gain: f64) -> Vec<Complex64> {
    let s = gain.sqrt();
    h.into_iter().map(|z| z * s).collect()
}

/// Draws one channel realization. Identical `(p, cfg)` give bit-identical output.
pub fn gen_channels(p: &SystemParams, cfg: &ChannelConfig) -> Result<ChannelSet> {
    cfg.validate()?;
    let n = p.n_antennas;
    let mut dl_eh = Vec::with_capacity(p.n_eh());
    let mut ul_eh = Vec::with_capacity(p.n_eh());
    for i in 0..p.n_eh() {
        let mut rng = stream(cfg.seed, STREAM_EH_DOWNLINK, i);
        let d = draw_distance(&mut rng, cfg.eh_dist_range_m)?;
        let gain = pathloss_gain(d, cfg)?;
        let h = scale(rician(&mut rng, n, cfg.rician_k)?, gain);
        if cfg.reciprocal {
            ul_eh.push(h.clone());
        } else {
            let mut up = stream(cfg.seed, STREAM_EH_UPLINK, i);
            ul_eh.push(scale(rician(&mut up, n, cfg.rician_k)?, gain));
        }
        dl_eh.push(h);
    }
    let dl_id = (0..p.n_id())
        .map(|j| {
            let mut rng = stream(cfg.seed, STREAM_ID_DOWNLINK, j);
            let d = draw_distance(&mut rng, cfg.id_dist_range_m)?;
            Ok(scale(scattered(&mut rng, n), pathloss_gain(d, cfg)?))
        })
        .collect::<Result<Vec<_>>>()?;
    ChannelSet::new(dl_eh, dl_id, ul_eh)
}

/// Text fixture: a header `n_antennas n_eh n_id`, then one `re im` line per
/// entry, device by device, in the order downlink EH, downlink ID, uplink EH.
/// Floats use the shortest representation that reads back exactly.
pub fn write_fixture(ch: &ChannelSet) -> String {
    let mut out = format!("{} {} {}\n", ch.n_antennas(), ch.dl_eh.len(), ch.dl_id.len());
    for h in ch.dl_eh.iter().chain(&ch.dl_id).chain(&ch.ul_eh) {
        for z in h {
            out.push_str(&format!("{} {}\n", z.re, z.im));
        }
    }
    out
}

pub fn read_fixture(text: &str) -> Result<ChannelSet> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Params("empty channel fixture".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Params(format!("bad fixture header {header:?}"))))
        .collect::<Result<_>>()?;
    let [n, n_eh, n_id] = dims[..] else {
        return Err(Error::Params(format!("fixture header needs three counts, got {header:?}")));
    };
    let mut next_vec = || -> Result<Vec<Complex64>> {
        (0..n)
            .map(|_| {
                let line = lines.next().ok_or_else(|| Error::Params("truncated channel fixture".into()))?;
                let mut parts = line.split_whitespace().map(str::parse::<f64>);
                match (parts.next(), parts.next(), parts.next()) {
                    (Some(Ok(re)), Some(Ok(im)), None) => Ok(Complex64::new(re, im)),
                    _ => Err(Error::Params(format!("bad fixture entry {line:?}"))),
                }
            })
            .collect()
    };
    let dl_eh = (0..n_eh).map(|_| next_vec()).collect::<Result<Vec<_>>>()?;
    let dl_id = (0..n_id).map(|_| next_vec()).collect::<Result<Vec<_>>>()?;
    let ul_eh = (0..n_eh).map(|_| next_vec()).collect::<Result<Vec<_>>>()?;
    if lines.next().is_some() {
        return Err(Error::Params("trailing data in channel fixture".into()));
    }
    ChannelSet::new(dl_eh, dl_id, ul_eh)
}
