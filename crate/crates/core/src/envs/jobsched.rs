//! Fractional job scheduling on a shared pool of cores, with each job's
//! processing requirement spread over the rounds after its arrival.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{AffineConstraints, AssumptionConstants, DecisionVector, FeasibleSet, LinearLoss, ProblemInstance, Round};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    /// Arrival round `a_j`; the job is active for `t > a_j`.
    pub arrival: usize,
    /// Cores needed while running, `d_j`.
    pub demand: f64,
    /// Processing time `p_j`.
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobSchedConfig {
    /// Cores per server.
    pub cores: Vec<f64>,
    /// Explicit job list; when empty, `num_jobs` jobs are drawn from `seed`.
    pub jobs: Vec<Job>,
    pub num_jobs: usize,
    /// Flow-time norm order `k ≥ 1`.
    pub norm_order: f64,
    /// Prediction horizon `T`.
    pub horizon: usize,
    pub seed: u64,
}

impl JobSchedConfig {
    pub fn new(horizon: usize, seed: u64) -> Self {
        Self {
            cores: vec![4.0, 4.0],
            jobs: Vec::new(),
            num_jobs: 6,
            norm_order: 2.0,
            horizon,
            seed,
        }
    }

    pub fn total_cores(&self) -> f64 {
        self.cores.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 {
            return Err(Error::Config("job scheduling needs a horizon of at least 2".into()));
        }
        if self.cores.is_empty() || self.cores.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(Error::Config("every server needs a positive core count".into()));
        }
        if !(self.norm_order >= 1.0 && self.norm_order.is_finite()) {
            return Err(Error::Config(format!("norm order must be >= 1, got {}", self.norm_order)));
        }
        if self.jobs.is_empty() && self.num_jobs == 0 {
            return Err(Error::Config("job scheduling needs at least one job".into()));
        }
        let total = self.total_cores();
        for (i, job) in self.jobs.iter().enumerate() {
            if !(job.demand > 0.0 && job.demand <= total) {
                return Err(Error::Config(format!(
                    "job {i}: demand {} must lie in (0, {total}]",
                    job.demand
                )));
            }
            if !(job.duration > 0.0) || job.arrival as f64 + job.duration > self.horizon as f64 {
                return Err(Error::Config(format!(
                    "job {i}: arrival + duration must not exceed the horizon {}",
                    self.horizon
                )));
            }
        }
        Ok(())
    }
}

fn draw_jobs(cfg: &JobSchedConfig, rng: &mut ChaCha8Rng) -> Vec<Job> {
    let t = cfg.horizon;
    let total = cfg.total_cores();
    let mut jobs = Vec::with_capacity(cfg.num_jobs);
    // keep the summed steady-state load Σ d_j p_j/(T − a_j) within capacity
    let budget = 0.9 * total / cfg.num_jobs as f64;
    while jobs.len() < cfg.num_jobs {
        let arrival = rng.random_range(0..=t / 2);
        let room = t - arrival;
        let duration = rng.random_range(1..=room.div_ceil(2).max(1)) as f64;
        let demand = rng.random_range(1..=total.floor().max(1.0) as usize) as f64;
        if demand * duration / room as f64 <= budget {
            jobs.push(Job {
                arrival,
                demand,
                duration,
            });
        }
    }
    jobs
}

/// The jobs an instance was built from (explicit or drawn).
pub fn jobsched_jobs(cfg: &JobSchedConfig) -> Result<Vec<Job>> {
    cfg.validate()?;
    if !cfg.jobs.is_empty() {
        return Ok(cfg.jobs.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(draw_jobs(cfg, &mut rng))
}

/// Builds the instance. Round `t` has
/// `χ(t) = {0 ≤ y ≤ 1, y_j = 0 for inactive j, Σ d_j y_j ≤ Σ C_i}`,
/// `f_t(y) = Σ_{active} ((t − a_j)^k / p_j + p_j^{k−1}) y_j / s` and
/// `g_{t,j}(y) = p_j/(T − a_j) − y_j` for active jobs (0 otherwise).
/// `s` is the largest coefficient over the horizon, so every cost weight is
/// at most 1; the raw weights grow like `T^k` and would otherwise dwarf the
/// constraint. Scaling does not move any minimizer.
/// Because every cost coefficient is positive, the per-slot minimizer sets
/// each active `y_j` to its floor `p_j/(T − a_j)`.
pub fn jobsched_instance(cfg: &JobSchedConfig) -> Result<ProblemInstance> {
    let jobs = jobsched_jobs(cfg)?;
    let n = jobs.len();
    let total = cfg.total_cores();
    let horizon = cfg.horizon;
    let k = cfg.norm_order;
    let weights: Vec<f64> = jobs.iter().map(|j| j.demand).collect();
    let floor: Vec<f64> = jobs.iter().map(|j| j.duration / (horizon - j.arrival) as f64).collect();
    let raw_at_end: Vec<f64> = jobs
        .iter()
        .map(|j| ((horizon - j.arrival) as f64).powf(k) / j.duration + j.duration.powf(k - 1.0))
        .collect();
    let scale = raw_at_end.iter().copied().fold(f64::MIN_POSITIVE, f64::max);

    let mut rounds = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let active: Vec<bool> = jobs.iter().map(|j| t > j.arrival).collect();
        let load: f64 = (0..n).filter(|i| active[*i]).map(|i| weights[i] * floor[i]).sum();
        if load > total + 1e-12 {
            return Err(Error::Config(format!(
                "jobs are not schedulable: round {t} needs {load} cores out of {total}"
            )));
        }
        let upper: Vec<f64> = active.iter().map(|a| if *a { 1.0 } else { 0.0 }).collect();
        let coeffs: Vec<f64> = jobs
            .iter()
            .zip(&active)
            .map(|(j, a)| {
                if *a {
                    (((t - j.arrival) as f64).powf(k) / j.duration + j.duration.powf(k - 1.0)) / scale
                } else {
                    0.0
                }
            })
            .collect();
        let matrix: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut row = vec![0.0; n];
                if active[i] {
                    row[i] = -1.0;
                }
                row
            })
            .collect();
        let offset: Vec<f64> = (0..n).map(|i| if active[i] { floor[i] } else { 0.0 }).collect();
        let star: Vec<f64> = offset.clone();
        rounds.push(Round {
            loss: Arc::new(LinearLoss { coeffs, offset: 0.0 }),
            constraints: Arc::new(AffineConstraints { matrix, offset }),
            set: FeasibleSet::box_with_cap(vec![0.0; n], upper, weights.clone(), total)?,
            minimizer: Some(DecisionVector::new(star)?),
            sup_deviation: None,
        });
    }

    let value_f: f64 = raw_at_end.iter().map(|c| c / scale).sum();
    let grad_f = raw_at_end.iter().map(|c| (c / scale).powi(2)).sum::<f64>().sqrt();
    let nf = n as f64;
    let constants = AssumptionConstants::new(value_f.max(nf.sqrt()), grad_f.max(1.0), nf.sqrt(), n)?.with_beta(1.0)?;
    Ok(ProblemInstance::new("jobsched", n, n, constants, rounds)?
        .with_metadata("env", "jobsched")
        .with_metadata("jobs", n.to_string())
        .with_metadata("norm_order", format!("{k}"))
        .with_metadata("cost_scale", format!("{scale:e}")))
}

/// Largest distance of any `d_j y_j` from an integer. Rounding is not part
/// of the model; this only reports how fractional a schedule is.
pub fn integrality_gap(demands: &[f64], y: &[f64]) -> f64 {
    demands
        .iter()
        .zip(y)
        .map(|(d, v)| {
            let z = d * v;
            (z - z.round()).abs()
        })
        .fold(0.0, f64::max)
}
