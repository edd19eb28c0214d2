//! Grid execution: one dataset, one private solve and one risk evaluation
//! per `(n, eps, trial)` cell.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use dpsco_core::problems::{empirical_grad, empirical_risk, excess_risk, ConstraintSet, DataDistribution, Dataset, LossModel};
use dpsco_core::{vector, Vector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::build::Components;
use crate::config::{EvalPolicy, ExperimentConfig};
use crate::error::{HarnessError, HarnessResult};
use crate::records::RunRecord;

/// Independent ChaCha streams carved out of one cell seed.
const STREAM_DATA: u64 = 0;
const STREAM_SOLVER: u64 = 1;
const STREAM_EVAL: u64 = 2;

/// The splitmix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of cell `(n_idx, eps_idx, trial)`; a pure function of its arguments.
pub fn derive_seed(base: u64, n_idx: usize, eps_idx: usize, trial: usize) -> u64 {
    let mut h = splitmix64(base);
    for part in [n_idx as u64, eps_idx as u64, trial as u64] {
        h = splitmix64(h ^ part);
    }
    h
}

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    n_idx: usize,
    eps_idx: usize,
    trial: usize,
}

fn baseline_cache() -> &'static Mutex<HashMap<String, Vector>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Vector>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Non-private minimiser of the empirical risk on a large draw: accelerated
/// projected gradient with backtracking.
pub fn high_accuracy_minimizer(
    data: &Dataset,
    loss: &LossModel,
    c: Option<&ConstraintSet>,
    max_iter: usize,
    tol: f64,
) -> HarnessResult<Vector> {
    let proj = |v: Vector| -> HarnessResult<Vector> {
        match c {
            Some(c) => Ok(c.project(&v)?),
            None => Ok(v),
        }
    };
    let d = data.d();
    let mut x = proj(vector::zeros(d))?;
    let mut z = x.clone();
    let mut t: f64 = 1.0;
    let mut eta = 1.0;
    for _ in 0..max_iter {
        let g = empirical_grad(&z, data, loss)?;
        let fz = empirical_risk(&z, data, loss)?;
        let next = loop {
            let mut trial = z.clone();
            vector::axpy(-eta, &g, &mut trial);
            let cand = proj(trial)?;
            let diff = vector::sub(&cand, &z);
            let model = fz + vector::dot(&g, &diff) + vector::dot(&diff, &diff) / (2.0 * eta);
            if empirical_risk(&cand, data, loss)? <= model + 1e-15 * fz.abs().max(1.0) {
                break cand;
            }
            eta *= 0.5;
            if eta < 1e-20 {
                return Err(HarnessError::Numeric("baseline solver step size collapsed".into()));
            }
        };
        let step = vector::sub(&next, &x);
        let moved = vector::l2_norm(&step);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = next.clone();
        vector::axpy((t - 1.0) / t_next, &step, &mut z);
        t = t_next;
        x = next;
        if moved <= tol * eta.max(1e-12) {
            return Ok(x);
        }
    }
    Ok(x)
}

/// Population minimiser used as the excess-risk reference: the closed form
/// when the distribution has one, else a cached non-private solve on
/// `cfg.baseline_samples` fresh draws.
pub fn baseline(cfg: &ExperimentConfig, comp: &Components) -> HarnessResult<Vector> {
    if let Some(w) = comp.dist.minimizer(comp.constraint.as_ref()) {
        return Ok(w);
    }
    let key = serde_json::json!({
        "distribution": cfg.distribution,
        "loss": cfg.loss,
        "geometry": cfg.geometry,
        "constraint": cfg.constraint,
        "samples": cfg.baseline_samples,
        "seed": cfg.base_seed,
    })
    .to_string();
    if let Some(w) = baseline_cache().lock().expect("cache lock").get(&key) {
        return Ok(w.clone());
    }
    let mut rng = stream(splitmix64(cfg.base_seed ^ 0x6261_7365), 0);
    let big = comp.dist.sample(cfg.baseline_samples, &mut rng)?;
    let w = high_accuracy_minimizer(&big, &comp.loss, comp.constraint.as_ref(), 5_000, 1e-12)?;
    baseline_cache().lock().expect("cache lock").insert(key, w.clone());
    Ok(w)
}

fn evaluate(
    cfg: &ExperimentConfig,
    comp: &Components,
    w: &[f64],
    reference: &[f64],
    seed: u64,
) -> HarnessResult<(f64, f64)> {
    let mut rng = stream(seed, STREAM_EVAL);
    let m = match cfg.evaluation {
        EvalPolicy::Oracle => {
            if !matches!(comp.dist, DataDistribution::MeanPoint { .. })
                || comp.loss.name() != "mean_point"
            {
                return Err(HarnessError::config(
                    "evaluation policy \"oracle\" is only available for the mean_point loss",
                ));
            }
            1
        }
        EvalPolicy::Mc { m_eval } => m_eval,
    };
    let e = excess_risk(w, reference, &comp.dist, &comp.loss, m, &mut rng)?;
    Ok((e.value, e.std_error))
}

fn run_cell(
    cfg: &ExperimentConfig,
    comp: &Components,
    reference: &[f64],
    cell: Cell,
) -> HarnessResult<RunRecord> {
    let n = cfg.n_grid[cell.n_idx];
    let epsilon = cfg.eps_grid[cell.eps_idx];
    let seed = derive_seed(cfg.base_seed, cell.n_idx, cell.eps_idx, cell.trial);
    let data = comp.dist.sample(n, &mut stream(seed, STREAM_DATA))?;
    let start = Instant::now();
    let outcome = comp.run_solver(cfg, &data, epsilon, &mut stream(seed, STREAM_SOLVER));
    let wall_ms = cfg
        .record_timing
        .then(|| start.elapsed().as_secs_f64() * 1e3);
    let mut rec = RunRecord {
        algorithm: cfg.algorithm.clone(),
        p: comp.p,
        d: comp.d,
        n,
        epsilon,
        delta: cfg.delta,
        trial: cell.trial,
        seed,
        excess_risk: None,
        excess_risk_se: None,
        truncation_fraction: None,
        wall_ms,
        refused: false,
        refusal_reason: None,
    };
    match outcome {
        Ok(out) => {
            let (value, se) = evaluate(cfg, comp, &out.w, reference, seed)?;
            rec.excess_risk = Some(value);
            rec.excess_risk_se = Some(se);
            rec.truncation_fraction = out.truncation_fraction;
        }
        Err(e) if e.is_refusal() => {
            rec.refused = true;
            rec.refusal_reason = Some(e.to_string());
        }
        Err(e) => return Err(e.into()),
    }
    Ok(rec)
}

/// Runs every cell of the grid. Records come back in grid order
/// (`n`, then `eps`, then trial) whatever order the workers finish in.
pub fn run_experiment(cfg: &ExperimentConfig) -> HarnessResult<Vec<RunRecord>> {
    cfg.validate()?;
    let comp = Components::build(cfg)?;
    comp.preflight(cfg)?;
    let reference = baseline(cfg, &comp)?;
    let cells: Vec<Cell> = (0..cfg.n_grid.len())
        .flat_map(|n_idx| {
            (0..cfg.eps_grid.len()).flat_map(move |eps_idx| {
                (0..cfg.trials).map(move |trial| Cell { n_idx, eps_idx, trial })
            })
        })
        .collect();
    let work = || -> HarnessResult<Vec<RunRecord>> {
        cells
            .par_iter()
            .map(|&cell| run_cell(cfg, &comp, &reference, cell))
            .collect()
    };
    match cfg.parallelism {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| HarnessError::config(format!("cannot build worker pool: {e}")))?
            .install(work),
        None => work(),
    }
}
