//! Seeded sweeps. Every sweep expands into independent cells that run on a
//! bounded worker pool; rows come back in cell order regardless of which
//! worker finishes first.

use std::time::Instant;

use anyhow::Result;
use fogswipt_core::{gen_channels, solve_fot, solve_oot, ChannelConfig, ChannelSet, OffloadMode, OotTraceEntry, SystemParams};
use rayon::prelude::*;

use crate::config::RunSpec;

/// SINR target of the convergence experiment unless the configuration sets one.
pub const CONVERGENCE_SINR_DB: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub seed: u64,
    pub param_name: &'static str,
    pub param_value: f64,
    pub mode: OffloadMode,
    /// `fot`, `oot`, or `fot@<frac>` when several offloading times share a sweep.
    pub design: String,
    pub objective_j: f64,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub converged: bool,
    pub max_rank_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub seed: u64,
    pub entry: OotTraceEntry,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Design {
    /// Fixed offloading time at this fraction of the block.
    Fot(f64),
    Oot,
}

struct Cell {
    seed: u64,
    param_name: &'static str,
    param_value: f64,
    params: SystemParams,
    runs: Vec<(OffloadMode, Design)>,
    label_frac: bool,
}

fn solve_cell(cell: &Cell, spec: &RunSpec) -> Vec<ResultRow> {
    let channels = gen_channels(&cell.params, &channel_config(spec, cell.seed));
    cell.runs
        .iter()
        .map(|&(mode, design)| {
            let label = match design {
                Design::Fot(f) if cell.label_frac => format!("fot@{}", f),
                Design::Fot(_) => "fot".to_string(),
                Design::Oot => "oot".to_string(),
            };
            let mut row = ResultRow {
                seed: cell.seed,
                param_name: cell.param_name,
                param_value: cell.param_value,
                mode,
                design: label,
                objective_j: f64::NAN,
                iterations: 0,
                wall_time_s: 0.0,
                converged: false,
                max_rank_ratio: f64::NAN,
            };
            let Ok(ch) = &channels else { return row };
            let start = Instant::now();
            let report = run_design(&cell.params, ch, mode, design, spec);
            row.wall_time_s = start.elapsed().as_secs_f64();
            if let Ok(r) = report {
                row.objective_j = r.objective_j;
                row.iterations = r.iterations;
                row.converged = r.converged;
                row.max_rank_ratio = r.max_rank_ratio();
            }
            row
        })
        .collect()
}

fn run_design(
    p: &SystemParams,
    ch: &ChannelSet,
    mode: OffloadMode,
    design: Design,
    spec: &RunSpec,
) -> fogswipt_core::Result<fogswipt_core::SolveReport> {
    match design {
        Design::Fot(f) => Ok(solve_fot(p, ch, f * p.block_time_s, mode, &spec.ipm)?.report),
        Design::Oot => Ok(solve_oot(p, ch, &spec.oot)?.report),
    }
}

fn channel_config(spec: &RunSpec, seed: u64) -> ChannelConfig {
    ChannelConfig { seed, ..spec.channel.clone() }
}

fn run_cells(cells: Vec<Cell>, spec: &RunSpec) -> Result<Vec<ResultRow>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(spec.jobs).build()?;
    let rows: Vec<Vec<ResultRow>> = pool.install(|| cells.par_iter().map(|c| solve_cell(c, spec)).collect());
    Ok(rows.into_iter().flatten().collect())
}

fn fot_runs(spec: &RunSpec) -> Vec<(OffloadMode, Design)> {
    let f = spec.tu_fracs[0];
    spec.modes.iter().map(|&m| (m, Design::Fot(f))).collect()
}

fn sweep(
    spec: &RunSpec,
    param_name: &'static str,
    grid: &[f64],
    base: &SystemParams,
    apply: impl Fn(&mut SystemParams, f64),
    runs: Vec<(OffloadMode, Design)>,
    label_frac: bool,
) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &seed in &spec.seeds {
        for &v in grid {
            let mut params = base.clone();
            apply(&mut params, v);
            cells.push(Cell { seed, param_name, param_value: v, params, runs: runs.clone(), label_frac });
        }
    }
    cells
}

fn current_sinr_db(spec: &RunSpec) -> f64 {
    spec.sinr_db.unwrap_or_else(|| 10.0 * spec.params.id.first().map_or(1.0, |d| d.sinr_target).log10())
}

/// Every configured mode at the first t_u fraction, one cell per seed.
pub fn run_fot(spec: &RunSpec) -> Result<Vec<ResultRow>> {
    let g = current_sinr_db(spec);
    run_cells(sweep(spec, "sinr_db", &[g], &spec.params, |_, _| {}, fot_runs(spec), false), spec)
}

pub fn run_oot(spec: &RunSpec) -> Result<Vec<ResultRow>> {
    let g = current_sinr_db(spec);
    let runs = vec![(OffloadMode::Partial, Design::Oot)];
    run_cells(sweep(spec, "sinr_db", &[g], &spec.params, |_, _| {}, runs, false), spec)
}

pub fn run_gamma_sweep(spec: &RunSpec) -> Result<Vec<ResultRow>> {
    let cells = sweep(spec, "sinr_db", &spec.gamma_grid_db, &spec.params, |p, g| p.set_sinr_db(g), fot_runs(spec), false);
    run_cells(cells, spec)
}

pub fn run_task_sweep(spec: &RunSpec) -> Result<Vec<ResultRow>> {
    let cells = sweep(spec, "task_bits", &spec.task_grid_bits, &spec.params, |p, d| p.set_task_bits(d), fot_runs(spec), false);
    run_cells(cells, spec)
}

/// Partial offloading at every t_u fraction plus the optimized offloading time.
pub fn run_time_sweep(spec: &RunSpec) -> Result<Vec<ResultRow>> {
    let mut runs: Vec<_> = spec.tu_fracs.iter().map(|&f| (OffloadMode::Partial, Design::Fot(f))).collect();
    runs.push((OffloadMode::Partial, Design::Oot));
    let rate = spec.circuit_power_w;
    let apply = |p: &mut SystemParams, t: f64| {
        p.block_time_s = t;
        p.circuit_energy_j = rate * t;
    };
    run_cells(sweep(spec, "block_time_s", &spec.time_grid_s, &spec.params, apply, runs, true), spec)
}

/// Wall time of both designs with `n` EH and `n` ID devices per grid point.
/// Use a single job for undisturbed timings.
pub fn run_timing(spec: &RunSpec) -> Result<Vec<ResultRow>> {
    let runs = vec![(OffloadMode::Partial, Design::Fot(spec.tu_fracs[0])), (OffloadMode::Partial, Design::Oot)];
    let mut cells = Vec::new();
    for &seed in &spec.seeds {
        for &n in &spec.user_grid {
            let mut params = spec.params.clone();
            params.eh = vec![spec.params.eh[0]; n];
            params.id = vec![spec.params.id[0]; n];
            cells.push(Cell { seed, param_name: "n_users", param_value: n as f64, params, runs: runs.clone(), label_frac: false });
        }
    }
    run_cells(cells, spec)
}

/// Outer-iteration traces of the offloading-time optimization, seed by seed.
pub fn run_convergence(spec: &RunSpec) -> Result<(Vec<ConvergenceRow>, Vec<ResultRow>)> {
    let mut params = spec.params.clone();
    let g = spec.sinr_db.unwrap_or(CONVERGENCE_SINR_DB);
    params.set_sinr_db(g);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(spec.jobs).build()?;
    let per_seed: Vec<(Vec<ConvergenceRow>, ResultRow)> = pool.install(|| {
        spec.seeds
            .par_iter()
            .map(|&seed| {
                let mut row = ResultRow {
                    seed,
                    param_name: "sinr_db",
                    param_value: g,
                    mode: OffloadMode::Partial,
                    design: "oot".to_string(),
                    objective_j: f64::NAN,
                    iterations: 0,
                    wall_time_s: 0.0,
                    converged: false,
                    max_rank_ratio: f64::NAN,
                };
                let start = Instant::now();
                let sol = gen_channels(&params, &channel_config(spec, seed)).and_then(|ch| solve_oot(&params, &ch, &spec.oot));
                row.wall_time_s = start.elapsed().as_secs_f64();
                let Ok(sol) = sol else { return (Vec::new(), row) };
                row.objective_j = sol.report.objective_j;
                row.iterations = sol.report.iterations;
                row.converged = sol.report.converged;
                row.max_rank_ratio = sol.report.max_rank_ratio();
                (sol.trace.into_iter().map(|entry| ConvergenceRow { seed, entry }).collect(), row)
            })
            .collect()
    });
    let mut trace = Vec::new();
    let mut rows = Vec::new();
    for (t, r) in per_seed {
        trace.extend(t);
        rows.push(r);
    }
    Ok((trace, rows))
}

/// Sign pattern of `offload_only − local_only` along the task grid of one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossover {
    pub seed: u64,
    /// Sign at the smallest task size: −1 when offloading everything is cheaper.
    pub first_sign: i8,
    pub sign_changes: usize,
    /// First task size at which the sign differs from `first_sign`.
    pub crossover_bits: Option<f64>,
}

/// Seeds with a non-finite objective at any grid point are skipped.
pub fn crossover_summary(rows: &[ResultRow]) -> Vec<Crossover> {
    let mut seeds: Vec<u64> = rows.iter().map(|r| r.seed).collect();
    seeds.dedup();
    let mut out = Vec::new();
    'seed: for seed in seeds {
        let mut points: Vec<(f64, f64)> = Vec::new();
        let mut values: Vec<f64> = rows.iter().filter(|r| r.seed == seed).map(|r| r.param_value).collect();
        values.dedup();
        for v in values {
            let find = |m: OffloadMode| {
                rows.iter().find(|r| r.seed == seed && r.param_value == v && r.mode == m).map(|r| r.objective_j)
            };
            match (find(OffloadMode::OffloadOnly), find(OffloadMode::LocalOnly)) {
                (Some(a), Some(b)) if a.is_finite() && b.is_finite() => points.push((v, a - b)),
                _ => continue 'seed,
            }
        }
        let Some(&(_, d0)) = points.first() else { continue };
        let sign = |d: f64| if d < 0.0 { -1i8 } else { 1 };
        let first_sign = sign(d0);
        let mut changes = 0;
        let mut crossover_bits = None;
        for w in points.windows(2) {
            if sign(w[0].1) != sign(w[1].1) {
                changes += 1;
                crossover_bits.get_or_insert(w[1].0);
            }
        }
        out.push(Crossover { seed, first_sign, sign_changes: changes, crossover_bits });
    }
    out
}

pub fn median(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// Median wall time per (user count, design), in grid order.
pub fn timing_medians(rows: &[ResultRow]) -> Vec<(f64, String, f64)> {
    let mut keys: Vec<(f64, String)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|(v, d)| *v == r.param_value && *d == r.design) {
            keys.push((r.param_value, r.design.clone()));
        }
    }
    keys.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    keys.into_iter()
        .map(|(v, d)| {
            let mut t: Vec<f64> =
                rows.iter().filter(|r| r.param_value == v && r.design == d).map(|r| r.wall_time_s).collect();
            let m = median(&mut t);
            (v, d, m)
        })
        .collect()
}
