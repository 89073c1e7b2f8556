//! Geo-distributed request routing: mapping nodes forward requests over
//! bandwidth-limited links to capacity-limited data centers.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{AffineConstraints, AssumptionConstants, FeasibleSet, ProblemInstance, Round, SeparableQuadraticLoss};
use crate::vecops;

/// Decision layout: link flows `x^{jk}` in row-major `(j, k)` order, then
/// the served amounts `y^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Mapping nodes.
    pub j: usize,
    /// Data centers.
    pub k: usize,
    /// Optional custom incidence matrix (`(J+K) × (J·K+K)`); the default
    /// one is built when absent.
    pub incidence: Option<Vec<Vec<f64>>>,
    /// Link bandwidths `B_jk`, row-major.
    pub bandwidth: Vec<f64>,
    /// Center capacities `C_k`.
    pub capacity: Vec<f64>,
    /// Mean arrival rate as a fraction of the largest safely routable rate.
    pub load: f64,
    /// Relative amplitude of the periodic arrival component.
    pub amplitude: f64,
    pub period: f64,
    /// Cost coefficients drift by uniform steps of this size inside
    /// `[0.5, 1.5]` (quadratic) and `[0.1, 1.0]` (linear).
    pub cost_step: f64,
    pub horizon: usize,
    pub seed: u64,
}

impl NetworkConfig {
    pub fn new(j: usize, k: usize, horizon: usize, seed: u64) -> Self {
        Self {
            j,
            k,
            incidence: None,
            bandwidth: vec![2.0; j * k],
            capacity: vec![3.0; k],
            load: 0.6,
            amplitude: 0.3,
            period: 24.0,
            cost_step: 0.05,
            horizon,
            seed,
        }
    }

    pub fn num_edges(&self) -> usize {
        self.j * self.k + self.k
    }

    pub fn num_nodes(&self) -> usize {
        self.j + self.k
    }

    pub fn validate(&self) -> Result<()> {
        if self.j == 0 || self.k == 0 {
            return Err(Error::Config("network needs at least one mapping node and one center".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.bandwidth.len() != self.j * self.k {
            return Err(Error::LengthMismatch {
                what: "network bandwidths",
                expected: self.j * self.k,
                actual: self.bandwidth.len(),
            });
        }
        if self.capacity.len() != self.k {
            return Err(Error::LengthMismatch {
                what: "network capacities",
                expected: self.k,
                actual: self.capacity.len(),
            });
        }
        if self.bandwidth.iter().chain(&self.capacity).any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config("bandwidths and capacities must be positive".into()));
        }
        if !(self.load > 0.0 && self.load < 1.0) {
            return Err(Error::Config(format!("network load must lie in (0, 1), got {}", self.load)));
        }
        if !(self.amplitude >= 0.0 && self.amplitude < 1.0) || !(self.period > 0.0) || !(self.cost_step >= 0.0) {
            return Err(Error::Config("network amplitude must lie in [0, 1), period > 0, cost step >= 0".into()));
        }
        if self.load * (1.0 + self.amplitude) >= 1.0 {
            return Err(Error::Config(format!(
                "peak load {} must stay below 1 so every round is feasible",
                self.load * (1.0 + self.amplitude)
            )));
        }
        if let Some(a) = &self.incidence {
            check_incidence(a, self.j, self.k)?;
        }
        Ok(())
    }
}

/// Node-by-edge incidence: link `(j, k)` leaves node `j` (−1) and enters
/// center `k` (+1); the served edge `y^k` leaves center `k` (−1).
pub fn default_incidence(j: usize, k: usize) -> Vec<Vec<f64>> {
    let e = j * k + k;
    let mut a = vec![vec![0.0; e]; j + k];
    for jj in 0..j {
        for kk in 0..k {
            let col = jj * k + kk;
            a[jj][col] = -1.0;
            a[j + kk][col] = 1.0;
        }
    }
    for kk in 0..k {
        a[j + kk][j * k + kk] = -1.0;
    }
    a
}

fn check_incidence(a: &[Vec<f64>], j: usize, k: usize) -> Result<()> {
    let (rows, cols) = (j + k, j * k + k);
    if a.len() != rows || a.iter().any(|r| r.len() != cols) {
        return Err(Error::Config(format!(
            "incidence matrix must be {rows}x{cols} for J={j}, K={k}"
        )));
    }
    if a.iter().flatten().any(|v| *v != 0.0 && *v != 1.0 && *v != -1.0) {
        return Err(Error::Config("incidence entries must be -1, 0 or 1".into()));
    }
    for col in 0..cols {
        let column: Vec<f64> = a.iter().map(|r| r[col]).collect();
        let leaves = column.iter().filter(|v| **v == -1.0).count();
        let enters = column.iter().filter(|v| **v == 1.0).count();
        let ok = if col < j * k {
            leaves == 1 && enters == 1 && column[..j].contains(&-1.0) && column[j..].contains(&1.0)
        } else {
            leaves == 1 && enters == 0 && column[j..].contains(&-1.0)
        };
        if !ok {
            return Err(Error::Config(format!(
                "incidence column {col} does not match a {} edge",
                if col < j * k { "node-to-center" } else { "served" }
            )));
        }
    }
    Ok(())
}

fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
    if v < lo {
        (2.0 * lo - v).min(hi)
    } else if v > hi {
        (2.0 * hi - v).max(lo)
    } else {
        v
    }
}

/// Builds the instance: `χ = Box[0, (B, C)]`, `g_t(x) = A x + b_t` with
/// arrivals `b_t` on the mapping nodes, and separable quadratic costs
/// `a·z² + c·z` on every edge with coefficients following reflected
/// random walks.
///
/// Arrivals at node `j` are `load · r_j · (1 + amplitude·sin(2πt/period))`
/// with `r_j = min(Σ_k B_jk, min_k C_k · K / J)`; splitting every node's
/// arrivals evenly across centers is then always feasible.
pub fn network_instance(cfg: &NetworkConfig) -> Result<ProblemInstance> {
    cfg.validate()?;
    let (j, k) = (cfg.j, cfg.k);
    let e = cfg.num_edges();
    let a = cfg.incidence.clone().unwrap_or_else(|| default_incidence(j, k));
    let mut upper = cfg.bandwidth.clone();
    upper.extend(&cfg.capacity);
    let set = FeasibleSet::boxed(vec![0.0; e], upper.clone())?;

    let min_cap = cfg.capacity.iter().copied().fold(f64::INFINITY, f64::min);
    let rates: Vec<f64> = (0..j)
        .map(|jj| {
            let out_bw: f64 = cfg.bandwidth[jj * k..(jj + 1) * k].iter().sum();
            let min_bw = cfg.bandwidth[jj * k..(jj + 1) * k].iter().copied().fold(f64::INFINITY, f64::min);
            out_bw.min(min_bw * k as f64).min(min_cap * k as f64 / j as f64)
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut quad: Vec<f64> = (0..e).map(|_| rng.random_range(0.5..=1.5)).collect();
    let mut lin: Vec<f64> = (0..e).map(|_| rng.random_range(0.1..=1.0)).collect();
    let mut prev_b: Option<Vec<f64>> = None;
    let mut rounds = Vec::with_capacity(cfg.horizon);
    for t in 1..=cfg.horizon {
        if t > 1 && cfg.cost_step > 0.0 {
            for q in quad.iter_mut() {
                *q = reflect(*q + rng.random_range(-cfg.cost_step..=cfg.cost_step), 0.5, 1.5);
            }
            for c in lin.iter_mut() {
                *c = reflect(*c + rng.random_range(-cfg.cost_step..=cfg.cost_step), 0.1, 1.0);
            }
        }
        let phase = (std::f64::consts::TAU * t as f64 / cfg.period).sin();
        let mut b = vec![0.0; j + k];
        for jj in 0..j {
            b[jj] = cfg.load * rates[jj] * (1.0 + cfg.amplitude * phase);
        }
        rounds.push(Round {
            loss: Arc::new(SeparableQuadraticLoss {
                quad: quad.clone(),
                lin: lin.clone(),
            }),
            constraints: Arc::new(AffineConstraints {
                matrix: a.clone(),
                offset: b.clone(),
            }),
            set: set.clone(),
            minimizer: None,
            sup_deviation: prev_b.as_ref().map(|p| vecops::dist(p, &b)),
        });
        prev_b = Some(b);
    }

    let value_f: f64 = upper.iter().map(|u| 1.5 * u * u + 1.0 * u).sum();
    let peak_b: Vec<f64> = rates.iter().map(|r| cfg.load * r * (1.0 + cfg.amplitude)).collect();
    let row_reach: f64 = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let s: f64 = row.iter().zip(&upper).map(|(aij, u)| aij.abs() * u).sum::<f64>()
                + peak_b.get(i).copied().unwrap_or(0.0);
            s * s
        })
        .sum::<f64>()
        .sqrt();
    let grad_f = upper.iter().map(|u| (3.0 * u + 1.0).powi(2)).sum::<f64>().sqrt();
    let grad_g = a.iter().map(|r| vecops::norm(r)).fold(0.0, f64::max);
    let frobenius = a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let constants = AssumptionConstants::new(value_f.max(row_reach), grad_f.max(grad_g), vecops::norm(&upper), j + k)?
        .with_beta(frobenius)?;
    Ok(ProblemInstance::new("network", e, j + k, constants, rounds)?
        .with_metadata("env", "network")
        .with_metadata("J", j.to_string())
        .with_metadata("K", k.to_string()))
}
