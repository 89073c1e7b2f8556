//! Dynamic regret, cumulative violations, regularity measures and
//! log-log growth fits.

use crate::error::{Error, Result};
use crate::problem::{DecisionVector, ProblemInstance, SharedLoss};
use crate::subsolver::estimate_sup_deviation;
use crate::vecops;

/// What happened in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    pub action: Vec<f64>,
    /// `f_t(x_t)`.
    pub loss: f64,
    /// `g_t(x_t)`.
    pub constraints: Vec<f64>,
    pub lambda: Vec<f64>,
    pub lambda_norm: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub algorithm: String,
    pub seed: Option<u64>,
    pub records: Vec<RoundRecord>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_constraints(&self) -> usize {
        self.records.first().map_or(0, |r| r.constraints.len())
    }

    pub fn max_residual(&self) -> f64 {
        self.records.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn max_lambda_norm(&self) -> f64 {
        self.records.iter().map(|r| r.lambda_norm).fold(0.0, f64::max)
    }
}

/// Cumulative `Σ_{s≤t} (f_s(x_s) − c_s)` for comparator losses `c_s`.
pub fn dynamic_regret_from_values(traj: &Trajectory, comparator_losses: &[f64]) -> Result<Vec<f64>> {
    if comparator_losses.len() != traj.len() {
        return Err(Error::LengthMismatch {
            what: "comparator losses",
            expected: traj.len(),
            actual: comparator_losses.len(),
        });
    }
    Ok(running_sum(traj.records.iter().zip(comparator_losses).map(|(r, c)| r.loss - c)))
}

/// Cumulative `Σ_{s≤t} (f_s(x_s) − f_s(x_s^*))`. May be negative.
pub fn dynamic_regret(traj: &Trajectory, minimizers: &[DecisionVector], losses: &[SharedLoss]) -> Result<Vec<f64>> {
    if minimizers.len() != losses.len() {
        return Err(Error::LengthMismatch {
            what: "minimizers vs losses",
            expected: losses.len(),
            actual: minimizers.len(),
        });
    }
    let values: Vec<f64> = minimizers.iter().zip(losses).map(|(x, f)| f.value(x)).collect();
    dynamic_regret_from_values(traj, &values)
}

/// Running componentwise sums of `g_t(x_t)`, one series per constraint.
pub fn violations(traj: &Trajectory) -> Vec<Vec<f64>> {
    (0..traj.num_constraints())
        .map(|k| running_sum(traj.records.iter().map(|r| r.constraints[k])))
        .collect()
}

fn running_sum(values: impl Iterator<Item = f64>) -> Vec<f64> {
    values
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// `Σ_{t≥2} ‖x_t − x_{t−1}‖`.
pub fn path_length(points: &[DecisionVector]) -> f64 {
    points.windows(2).map(|w| vecops::dist(&w[0], &w[1])).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationEstimate {
    pub value: f64,
    /// True when some round's sup was estimated by sampling, making `value`
    /// a lower bound.
    pub sampled: bool,
}

/// `Σ_{t≥2} sup_x ‖g_t(x) − g_{t−1}(x)‖`, using the generator's exact
/// per-round values where present and `samples` uniform points of `χ(t)`
/// (seeded with `seed ^ t`) elsewhere.
pub fn function_variation(instance: &ProblemInstance, samples: usize, seed: u64) -> VariationEstimate {
    let rounds = instance.rounds();
    let mut value = 0.0;
    let mut sampled = false;
    for t in 2..=rounds.len() {
        let (prev, cur) = (&rounds[t - 2], &rounds[t - 1]);
        value += match cur.sup_deviation {
            Some(v) => v,
            None => {
                sampled = true;
                estimate_sup_deviation(
                    cur.constraints.as_ref(),
                    prev.constraints.as_ref(),
                    &cur.set,
                    samples.max(1),
                    seed ^ t as u64,
                )
            }
        };
    }
    VariationEstimate { value, sampled }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    pub slope: f64,
    /// Constant added to the series before taking logs (0 if it was
    /// already positive on the window).
    pub shift: f64,
}

/// Least-squares slope of `log series[t]` against `log t` for
/// `t ∈ [t_lo, t_hi]` (1-based, inclusive). Series that are not positive
/// on the window are shifted by `max(0, −min) + 1` first.
pub fn growth_exponent(series: &[f64], window: (usize, usize)) -> Result<GrowthFit> {
    let (lo, hi) = (window.0.max(1), window.1.min(series.len()));
    if hi < lo || hi - lo + 1 < 10 {
        return Err(Error::Config(format!(
            "growth fit window [{}, {}] over a series of length {} has fewer than 10 points",
            window.0,
            window.1,
            series.len()
        )));
    }
    let slice = &series[lo - 1..hi];
    let min = slice.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = if min > 0.0 { 0.0 } else { (-min).max(0.0) + 1.0 };
    let n = slice.len() as f64;
    let xs: Vec<f64> = (lo..=hi).map(|t| (t as f64).ln()).collect();
    let ys: Vec<f64> = slice.iter().map(|v| (v + shift).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    Ok(GrowthFit { slope: sxy / sxx, shift })
}

/// The default fit window `[T/4, T]`.
pub fn default_window(horizon: usize) -> (usize, usize) {
    ((horizon / 4).max(1), horizon)
}

/// Slope of the series over `window`, or `None` when the series is
/// nonpositive on the whole window or the window is too short.
pub fn optional_exponent(series: &[f64], window: (usize, usize)) -> Option<GrowthFit> {
    let (lo, hi) = (window.0.max(1), window.1.min(series.len()));
    if hi < lo || series[lo - 1..hi].iter().all(|v| *v <= 0.0) {
        return None;
    }
    growth_exponent(series, window).ok()
}

/// Everything computed from one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub regret_cum: Vec<f64>,
    pub regret_avg: Vec<f64>,
    pub vio_cum: Vec<Vec<f64>>,
    pub vio_avg: Vec<Vec<f64>>,
    pub path_length: f64,
    pub variation: VariationEstimate,
    pub regret_exponent: Option<GrowthFit>,
    pub vio_exponents: Vec<Option<GrowthFit>>,
    pub comparator_max_violation: f64,
}

impl MetricsReport {
    pub fn build(
        traj: &Trajectory,
        comparator_points: &[DecisionVector],
        comparator_losses: &[f64],
        comparator_max_violation: f64,
        variation: VariationEstimate,
        window: (usize, usize),
    ) -> Result<Self> {
        let regret_cum = dynamic_regret_from_values(traj, comparator_losses)?;
        let vio_cum = violations(traj);
        let avg = |s: &[f64]| s.iter().enumerate().map(|(i, v)| v / (i + 1) as f64).collect::<Vec<_>>();
        let regret_avg = avg(&regret_cum);
        let vio_avg = vio_cum.iter().map(|s| avg(s)).collect();
        let regret_exponent = optional_exponent(&regret_cum, window);
        let vio_exponents = vio_cum.iter().map(|s| optional_exponent(s, window)).collect();
        Ok(Self {
            regret_cum,
            regret_avg,
            vio_cum,
            vio_avg,
            path_length: path_length(comparator_points),
            variation,
            regret_exponent,
            vio_exponents,
            comparator_max_violation,
        })
    }

    pub fn final_regret(&self) -> f64 {
        self.regret_cum.last().copied().unwrap_or(0.0)
    }

    pub fn final_violations(&self) -> Vec<f64> {
        self.vio_cum.iter().map(|s| s.last().copied().unwrap_or(0.0)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{
        AffineConstraints, AssumptionConstants, FeasibleSet, NoConstraints, Round, TrackingLoss,
    };
    use std::sync::Arc;

    fn traj(losses: &[f64], cons: &[Vec<f64>]) -> Trajectory {
        Trajectory {
            algorithm: "x".into(),
            seed: None,
            records: losses
                .iter()
                .zip(cons)
                .enumerate()
                .map(|(i, (l, c))| RoundRecord {
                    t: i + 1,
                    action: vec![0.0],
                    loss: *l,
                    constraints: c.clone(),
                    lambda: vec![0.0; c.len()],
                    lambda_norm: 0.0,
                    alpha: 1.0,
                    gamma: 1.0,
                    residual: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn regret_examples() {
        let tr = traj(&[1.0, 2.0], &[vec![0.0], vec![0.0]]);
        assert_eq!(dynamic_regret_from_values(&tr, &[0.5, 0.5]).unwrap(), vec![0.5, 2.0]);
        assert_eq!(dynamic_regret_from_values(&tr, &[1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(dynamic_regret_from_values(&tr, &[3.0, 2.0]).unwrap(), vec![-2.0, -2.0]);
        assert!(matches!(
            dynamic_regret_from_values(&tr, &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn regret_through_oracles() {
        let f: SharedLoss = Arc::new(TrackingLoss {
            target: vec![1.0],
            weight: 1.0,
        });
        let tr = traj(&[4.0, 1.0], &[vec![0.0], vec![0.0]]);
        let stars = vec![DecisionVector::new(vec![1.0]).unwrap(), DecisionVector::new(vec![0.0]).unwrap()];
        let r = dynamic_regret(&tr, &stars, &[f.clone(), f]).unwrap();
        assert_eq!(r, vec![4.0, 4.0]);
    }

    #[test]
    fn violation_examples() {
        let tr = traj(&[0.0, 0.0], &[vec![1.0, -1.0], vec![0.5, -0.2]]);
        let v = violations(&tr);
        assert_eq!(v[0], vec![1.0, 1.5]);
        assert!((v[1][1] + 1.2).abs() < 1e-15);
        assert_eq!(violations(&traj(&[0.0], &[vec![-3.0]])), vec![vec![-3.0]]);
        assert_eq!(violations(&traj(&[0.0; 3], &[vec![0.0], vec![0.0], vec![0.0]])), vec![vec![0.0; 3]]);
    }

    #[test]
    fn prefix_additivity() {
        let cons: Vec<Vec<f64>> = (0..20).map(|i| vec![(i as f64).sin()]).collect();
        let losses: Vec<f64> = (0..20).map(|i| (i as f64).cos()).collect();
        let comp = vec![0.1; 20];
        let full = traj(&losses, &cons);
        let head = traj(&losses[..8], &cons[..8]);
        let r_full = dynamic_regret_from_values(&full, &comp).unwrap();
        let r_head = dynamic_regret_from_values(&head, &comp[..8]).unwrap();
        assert_eq!(&r_full[..8], &r_head[..]);
        assert_eq!(&violations(&full)[0][..8], &violations(&head)[0][..]);
    }

    #[test]
    fn path_length_examples() {
        let p = |v: f64| DecisionVector::new(vec![v]).unwrap();
        assert_eq!(path_length(&[p(2.0), p(2.0), p(2.0)]), 0.0);
        assert_eq!(path_length(&[p(0.0), p(1.0), p(-1.0)]), 3.0);
        assert_eq!(path_length(&[p(5.0)]), 0.0);
    }

    fn shifted_instance(offsets: &[f64], analytic: bool) -> ProblemInstance {
        let set = FeasibleSet::cube(1, -1.0, 1.0).unwrap();
        let rounds = offsets
            .iter()
            .enumerate()
            .map(|(i, c)| Round {
                loss: Arc::new(crate::problem::ZeroLoss),
                constraints: Arc::new(AffineConstraints {
                    matrix: vec![vec![1.0]],
                    offset: vec![-c],
                }),
                set: set.clone(),
                minimizer: None,
                sup_deviation: (analytic && i > 0).then(|| (c - offsets[i - 1]).abs()),
            })
            .collect();
        let consts = AssumptionConstants::new(1.0, 1.0, 2.0, 1).unwrap();
        ProblemInstance::new("shift", 1, 1, consts, rounds).unwrap()
    }

    #[test]
    fn function_variation_examples() {
        let v = function_variation(&shifted_instance(&[0.0, 1.0, 3.0], false), 16, 3);
        assert!((v.value - 3.0).abs() < 1e-12);
        assert!(v.sampled);
        let v = function_variation(&shifted_instance(&[0.0, 1.0, 3.0], true), 16, 3);
        assert_eq!(v, VariationEstimate { value: 3.0, sampled: false });
        let set = FeasibleSet::cube(2, 0.0, 1.0).unwrap();
        let rounds = (0..4)
            .map(|_| Round {
                loss: Arc::new(crate::problem::ZeroLoss),
                constraints: Arc::new(NoConstraints { k: 2 }),
                set: set.clone(),
                minimizer: None,
                sup_deviation: None,
            })
            .collect();
        let inst = ProblemInstance::new(
            "still",
            2,
            2,
            AssumptionConstants::new(1.0, 1.0, 2.0, 2).unwrap(),
            rounds,
        )
        .unwrap();
        assert_eq!(function_variation(&inst, 8, 1).value, 0.0);
    }

    #[test]
    fn growth_exponent_recovers_power_laws() {
        let mk = |p: f64| (1..=400).map(|t| (t as f64).powf(p)).collect::<Vec<_>>();
        for p in [1.0, 0.5, 0.0, 0.75, 1.5] {
            let fit = growth_exponent(&mk(p), (100, 400)).unwrap();
            assert!((fit.slope - p).abs() < 1e-6, "{p} {fit:?}");
            assert_eq!(fit.shift, 0.0);
        }
        let c = vec![5.0; 50];
        assert!(growth_exponent(&c, (1, 50)).unwrap().slope.abs() < 1e-6);
    }

    #[test]
    fn growth_exponent_window_and_shift() {
        let s: Vec<f64> = (1..=100).map(|t| t as f64).collect();
        assert!(growth_exponent(&s, (1, 9)).is_err());
        let neg: Vec<f64> = (1..=100).map(|t| -(t as f64)).collect();
        let fit = growth_exponent(&neg, (50, 100)).unwrap();
        assert_eq!(fit.shift, 101.0);
        assert!(optional_exponent(&neg, (50, 100)).is_none());
        assert_eq!(default_window(2000), (500, 2000));
    }
}
