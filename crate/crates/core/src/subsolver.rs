//! Inner convex solvers: the strongly convex primal update of the
//! virtual-queue learners, the constrained per-slot minimizer, and sampled
//! estimates of constraint variation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{ConstraintOracle, DecisionVector, FeasibleSet, LossOracle};
use crate::vecops;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Fixed(f64),
    /// Sufficient-decrease backtracking starting from `init` (or twice the
    /// last accepted step, whichever is smaller).
    Backtracking { shrink: f64, init: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Tolerance on the projected-gradient fixed-point residual.
    pub tol: f64,
    pub step_rule: StepRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol: 1e-8,
            step_rule: StepRule::Backtracking {
                shrink: 0.5,
                init: 1.0,
            },
        }
    }
}

impl SolverConfig {
    /// Budget used for each inner solve of the per-slot minimizer, whose
    /// penalized objectives are worse conditioned than the primal update.
    pub fn for_minimizer() -> Self {
        Self {
            max_iters: 20_000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("solver max_iters must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("solver tol must be positive, got {}", self.tol)));
        }
        match self.step_rule {
            StepRule::Fixed(eta) if !(eta > 0.0 && eta.is_finite()) => {
                Err(Error::Config(format!("fixed step must be positive, got {eta}")))
            }
            StepRule::Backtracking { shrink, init }
                if !(shrink > 0.0 && shrink < 1.0 && init > 0.0 && init.is_finite()) =>
            {
                Err(Error::Config(format!(
                    "backtracking needs 0 < shrink < 1 and init > 0, got shrink={shrink} init={init}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Result of a projected-gradient solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub point: DecisionVector,
    /// `‖x − Π(x − ∇φ(x))‖` at the returned point.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// The primal update
///
/// ```text
/// minimize_{x ∈ set}  ∇f_t(x_t)ᵀ(x − x_t) + γ·wᵀg_t(x) + α‖x − x_t‖²
/// ```
///
/// where `w` is the (nonnegative) dual weight.
#[derive(Debug, Clone, Copy)]
pub struct SubproblemSpec<'a> {
    pub anchor: &'a [f64],
    pub loss_grad: &'a [f64],
    pub dual_weight: &'a [f64],
    pub gamma: f64,
    pub alpha: f64,
    pub constraints: &'a dyn ConstraintOracle,
    pub set: &'a FeasibleSet,
}

impl SubproblemSpec<'_> {
    pub fn validate(&self) -> Result<()> {
        let n = self.set.dim();
        for (what, len) in [("anchor", self.anchor.len()), ("loss gradient", self.loss_grad.len())] {
            if len != n {
                return Err(Error::LengthMismatch {
                    what: if what == "anchor" { "subproblem anchor" } else { "subproblem loss gradient" },
                    expected: n,
                    actual: len,
                });
            }
        }
        if self.dual_weight.len() != self.constraints.num_constraints() {
            return Err(Error::LengthMismatch {
                what: "subproblem dual weight",
                expected: self.constraints.num_constraints(),
                actual: self.dual_weight.len(),
            });
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be nonnegative, got {}", self.gamma)));
        }
        if let Some(k) = self.dual_weight.iter().position(|w| !(*w >= 0.0)) {
            return Err(Error::Config(format!(
                "dual weight must be nonnegative, component {k} is {}",
                self.dual_weight[k]
            )));
        }
        self.set.validate()
    }

    fn constraint_active(&self) -> bool {
        self.gamma > 0.0 && self.dual_weight.iter().any(|w| *w > 0.0)
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut v = vecops::dot(self.loss_grad, &vecops::sub(x, self.anchor));
        if self.constraint_active() {
            v += self.gamma * vecops::dot(self.dual_weight, &self.constraints.values(x));
        }
        let d = vecops::dist(x, self.anchor);
        v + self.alpha * d * d
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.loss_grad.to_vec();
        if self.constraint_active() {
            let jac = self.constraints.jacobian(x);
            let jw = vecops::jac_t_times(&jac, self.dual_weight, x.len());
            vecops::axpy(self.gamma, &jw, &mut g);
        }
        for ((gi, xi), ai) in g.iter_mut().zip(x).zip(self.anchor) {
            *gi += 2.0 * self.alpha * (xi - ai);
        }
        g
    }
}

/// Solves the primal update by projected gradient started at the anchor
/// (projected onto the set). The returned point is always a member of the
/// set; `converged` is false if the residual did not reach `cfg.tol`.
pub fn solve_primal_subproblem(spec: &SubproblemSpec<'_>, cfg: &SolverConfig) -> Result<SolveOutcome> {
    spec.validate()?;
    cfg.validate()?;
    let mut x0 = spec.anchor.to_vec();
    spec.set.project_in_place(&mut x0);
    projected_gradient(|x| spec.objective(x), |x| spec.gradient(x), spec.set, x0, cfg)
}

/// Fixed-point residual `‖x − Π(x − ∇φ(x))‖` of the primal update at `candidate`.
pub fn subproblem_residual(spec: &SubproblemSpec<'_>, candidate: &[f64]) -> f64 {
    fixed_point_residual(candidate, &spec.gradient(candidate), spec.set)
}

fn fixed_point_residual(x: &[f64], grad: &[f64], set: &FeasibleSet) -> f64 {
    let mut y = vecops::sub(x, grad);
    set.project_in_place(&mut y);
    vecops::dist(x, &y)
}

/// Projected gradient with optional backtracking. The set must already be
/// validated and `x0` must be a member.
///
/// Backtracking accepts a step `η` once the local curvature estimate
/// `‖∇φ(x⁺) − ∇φ(x)‖ / ‖x⁺ − x‖` is at most `1/η` and the objective has not
/// increased beyond rounding. Comparing gradients rather than function
/// values keeps the test meaningful at residuals near `1e−8`, where value
/// differences drown in cancellation.
pub(crate) fn projected_gradient<F, G>(
    value: F,
    grad: G,
    set: &FeasibleSet,
    x0: Vec<f64>,
    cfg: &SolverConfig,
) -> Result<SolveOutcome>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    const MAX_SHRINKS: usize = 80;
    let non_finite = |context: String, iterate: Vec<f64>| Error::NonFinite { context, iterate };
    let mut x = x0;
    let mut fx = value(&x);
    let mut g = grad(&x);
    let mut last_step = match cfg.step_rule {
        StepRule::Fixed(eta) => eta,
        StepRule::Backtracking { init, .. } => init,
    };
    let mut best: Option<(f64, Vec<f64>)> = None;

    for iter in 0..cfg.max_iters {
        if !vecops::all_finite(&g) || !fx.is_finite() {
            return Err(non_finite(format!("objective gradient at projected-gradient iteration {iter}"), x));
        }
        let residual = fixed_point_residual(&x, &g, set);
        if residual <= cfg.tol {
            return Ok(SolveOutcome {
                point: DecisionVector::from_finite(x),
                residual,
                iterations: iter,
                converged: true,
            });
        }
        if best.as_ref().is_none_or(|(r, _)| residual < *r) {
            best = Some((residual, x.clone()));
        }

        let mut eta = match cfg.step_rule {
            StepRule::Fixed(eta) => eta,
            StepRule::Backtracking { init, .. } => (2.0 * last_step).min(init),
        };
        let mut next = None;
        for _ in 0..MAX_SHRINKS {
            let mut trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - eta * gi).collect();
            set.project_in_place(&mut trial);
            let f_trial = value(&trial);
            let g_trial = grad(&trial);
            match cfg.step_rule {
                StepRule::Fixed(_) => {
                    next = Some((trial, f_trial, g_trial));
                }
                StepRule::Backtracking { shrink, .. } => {
                    let step = vecops::dist(&trial, &x);
                    let curvature_ok = eta * vecops::dist(&g_trial, &g) <= step;
                    let no_ascent = f_trial <= fx + 1e-12 * (1.0 + fx.abs());
                    if curvature_ok && no_ascent {
                        next = Some((trial, f_trial, g_trial));
                    } else {
                        eta *= shrink;
                    }
                }
            }
            if next.is_some() {
                break;
            }
        }
        let Some((xn, fxn, gn)) = next else { break };
        last_step = eta;
        (x, fx, g) = (xn, fxn, gn);
    }

    let residual = fixed_point_residual(&x, &g, set);
    let (residual, x) = match best {
        Some((r, bx)) if r < residual => (r, bx),
        _ => (residual, x),
    };
    if !vecops::all_finite(&x) {
        return Err(non_finite("projected-gradient final iterate".into(), x));
    }
    Ok(SolveOutcome {
        point: DecisionVector::from_finite(x),
        residual,
        iterations: cfg.max_iters,
        converged: residual <= cfg.tol,
    })
}

/// Result of the per-slot minimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimizerOutcome {
    pub point: DecisionVector,
    pub value: f64,
    /// `max(0, max_k g_k(x))` at the returned point.
    pub max_violation: f64,
    pub penalty: f64,
    pub outer_iterations: usize,
    /// Set when the returned point misses the 1e-6 feasibility target.
    pub warning: Option<String>,
}

/// Feasibility target for returned per-slot minimizers.
pub const MINIMIZER_FEASIBILITY_TOL: f64 = 1e-6;

/// `argmin { f(x) : x ∈ set, g(x) ≤ 0 }` by a quadratic-penalty homotopy
/// with multiplier updates (augmented Lagrangian). The penalty weight runs
/// through `10⁰..10⁶`, growing tenfold whenever the violation fails to
/// drop by a factor of four; each penalized problem is solved by projected
/// gradient warm-started at the previous solution, the first one at the
/// projection of the origin.
pub fn per_slot_minimizer(
    loss: &dyn LossOracle,
    constraints: &dyn ConstraintOracle,
    set: &FeasibleSet,
    cfg: &SolverConfig,
) -> Result<MinimizerOutcome> {
    const MAX_PENALTY: f64 = 1e6;
    const MAX_OUTER: usize = 200;
    const STOP_TOL: f64 = 1e-9;
    set.validate()?;
    cfg.validate()?;
    let k = constraints.num_constraints();
    let mut x = set.anchor_point().into_inner();
    let mut mult = vec![0.0; k];
    let mut rho: f64 = 1.0;
    let mut prev_violation = f64::INFINITY;
    let mut outer = 0;

    let violation_of = |gv: &[f64]| gv.iter().fold(0.0f64, |m, g| m.max(*g));

    if k == 0 {
        let out = projected_gradient(|y| loss.value(y), |y| loss.gradient(y), set, x, cfg)?;
        let value = loss.value(&out.point);
        return Ok(MinimizerOutcome {
            point: out.point,
            value,
            max_violation: 0.0,
            penalty: 0.0,
            outer_iterations: 0,
            warning: None,
        });
    }

    while outer < MAX_OUTER {
        outer += 1;
        let (m, r) = (mult.clone(), rho);
        let value = |y: &[f64]| {
            let gv = constraints.values(y);
            let pen: f64 = gv
                .iter()
                .zip(&m)
                .map(|(g, mu)| {
                    let s = (mu + r * g).max(0.0);
                    (s * s - mu * mu) / (2.0 * r)
                })
                .sum();
            loss.value(y) + pen
        };
        let grad = |y: &[f64]| {
            let gv = constraints.values(y);
            let w: Vec<f64> = gv.iter().zip(&m).map(|(g, mu)| (mu + r * g).max(0.0)).collect();
            let mut out = loss.gradient(y);
            if w.iter().any(|wi| *wi > 0.0) {
                let jw = vecops::jac_t_times(&constraints.jacobian(y), &w, y.len());
                vecops::axpy(1.0, &jw, &mut out);
            }
            out
        };
        let sol = projected_gradient(value, grad, set, x, cfg)?;
        x = sol.point.into_inner();

        let gv = constraints.values(&x);
        let violation = violation_of(&gv);
        let mut complementarity = 0.0f64;
        for (mu, g) in mult.iter_mut().zip(&gv) {
            *mu = (*mu + rho * g).max(0.0);
            complementarity = complementarity.max((-g).min(*mu).abs());
        }
        if violation <= STOP_TOL && complementarity <= STOP_TOL && sol.converged {
            break;
        }
        if violation > 0.25 * prev_violation && rho < MAX_PENALTY {
            rho = (rho * 10.0).min(MAX_PENALTY);
        }
        prev_violation = violation;
    }

    let violation = violation_of(&constraints.values(&x));
    let warning = (violation > MINIMIZER_FEASIBILITY_TOL).then(|| {
        format!("per-slot minimizer infeasible after {outer} outer iterations: max constraint {violation:.3e}")
    });
    let value = loss.value(&x);
    Ok(MinimizerOutcome {
        point: DecisionVector::from_finite(x),
        value,
        max_violation: violation,
        penalty: rho,
        outer_iterations: outer,
        warning,
    })
}

/// `max` over `samples` uniform points of `‖g_a(x) − g_b(x)‖`: a lower bound
/// on the true supremum. Points are drawn sequentially from `seed`, so more
/// samples extend the same sample set.
pub fn estimate_sup_deviation(
    g_a: &dyn ConstraintOracle,
    g_b: &dyn ConstraintOracle,
    set: &FeasibleSet,
    samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let x = set.sample_uniform(&mut rng);
            vecops::dist(&g_a.values(&x), &g_b.values(&x))
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{AffineConstraints, FnConstraints, FnLoss, NoConstraints, TrackingLoss};

    fn interval() -> FeasibleSet {
        FeasibleSet::cube(1, -1.0, 1.0).unwrap()
    }

    #[test]
    fn reduces_to_projected_ogd_without_dual_pressure() {
        let set = interval();
        let none = NoConstraints { k: 1 };
        let spec = SubproblemSpec {
            anchor: &[0.5],
            loss_grad: &[1.0],
            dual_weight: &[0.0],
            gamma: 1.0,
            alpha: 1.0,
            constraints: &none,
            set: &set,
        };
        let out = solve_primal_subproblem(&spec, &SolverConfig::default()).unwrap();
        assert!(out.converged);
        assert!(out.point[0].abs() < 1e-9, "{:?}", out.point);
    }

    #[test]
    fn zero_gradient_returns_anchor() {
        let set = FeasibleSet::cube(2, -1.0, 1.0).unwrap();
        let none = NoConstraints { k: 1 };
        let spec = SubproblemSpec {
            anchor: &[0.3, -0.2],
            loss_grad: &[0.0, 0.0],
            dual_weight: &[0.0],
            gamma: 0.5,
            alpha: 2.0,
            constraints: &none,
            set: &set,
        };
        let out = solve_primal_subproblem(&spec, &SolverConfig::default()).unwrap();
        assert_eq!(out.point.as_slice(), &[0.3, -0.2]);
        assert_eq!(out.residual, 0.0);
        assert_eq!(subproblem_residual(&spec, &[0.3, -0.2]), 0.0);
    }

    fn boundary_spec<'a>(set: &'a FeasibleSet, g: &'a AffineConstraints) -> SubproblemSpec<'a> {
        SubproblemSpec {
            anchor: &[0.0],
            loss_grad: &[1.0],
            dual_weight: &[1.0],
            gamma: 1.0,
            alpha: 1.0,
            constraints: g,
            set,
        }
    }

    #[test]
    fn one_dimensional_boundary_solution_matches_grid() {
        // objective x + x + x² on [-1, 1]
        let set = interval();
        let g = AffineConstraints {
            matrix: vec![vec![1.0]],
            offset: vec![0.0],
        };
        let spec = boundary_spec(&set, &g);
        let h = 1e-4;
        let (grid_x, _) = (0..=20_000)
            .map(|i| -1.0 + i as f64 * h)
            .map(|x| (x, spec.objective(&[x])))
            .fold((0.0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        assert!((grid_x + 1.0).abs() < 1e-12);
        let out = solve_primal_subproblem(&spec, &SolverConfig::default()).unwrap();
        assert!((out.point[0] - grid_x).abs() < 1e-9);
        assert_eq!(subproblem_residual(&spec, &[-1.0]), 0.0);
    }

    #[test]
    fn rejects_negative_dual_weight_and_bad_alpha() {
        let set = interval();
        let none = NoConstraints { k: 1 };
        let mut spec = SubproblemSpec {
            anchor: &[0.0],
            loss_grad: &[1.0],
            dual_weight: &[-0.1],
            gamma: 1.0,
            alpha: 1.0,
            constraints: &none,
            set: &set,
        };
        assert!(solve_primal_subproblem(&spec, &SolverConfig::default()).is_err());
        spec.dual_weight = &[0.0];
        spec.alpha = 0.0;
        assert!(solve_primal_subproblem(&spec, &SolverConfig::default()).is_err());
    }

    #[test]
    fn non_finite_gradient_is_numeric_error() {
        let set = interval();
        let g = FnConstraints::new(1, |x| vec![x[0]], |_| vec![vec![f64::NAN]]);
        let spec = SubproblemSpec {
            anchor: &[0.0],
            loss_grad: &[1.0],
            dual_weight: &[1.0],
            gamma: 1.0,
            alpha: 1.0,
            constraints: &g,
            set: &set,
        };
        let err = solve_primal_subproblem(&spec, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }), "{err}");
    }

    #[test]
    fn minimizer_with_active_constraint() {
        // f = (x-2)², g = x - 0.5 on [-1, 1]: KKT gives x = 0.5
        let f = TrackingLoss {
            target: vec![2.0],
            weight: 1.0,
        };
        let g = AffineConstraints {
            matrix: vec![vec![1.0]],
            offset: vec![-0.5],
        };
        let out = per_slot_minimizer(&f, &g, &interval(), &SolverConfig::for_minimizer()).unwrap();
        assert!((out.point[0] - 0.5).abs() < 1e-6, "{out:?}");
        assert!(out.max_violation <= MINIMIZER_FEASIBILITY_TOL);
        assert!(out.warning.is_none());
    }

    #[test]
    fn minimizer_with_inactive_constraint() {
        let f = TrackingLoss {
            target: vec![0.0],
            weight: 1.0,
        };
        let g = FnConstraints::new(1, |_| vec![-1.0], |_| vec![vec![0.0]]);
        let out = per_slot_minimizer(&f, &g, &interval(), &SolverConfig::for_minimizer()).unwrap();
        assert!(out.point[0].abs() < 1e-8);
    }

    #[test]
    fn minimizer_on_disc_constraint() {
        let f = TrackingLoss {
            target: vec![2.0, 2.0],
            weight: 1.0,
        };
        let g = FnConstraints::new(
            1,
            |x| vec![x[0] * x[0] + x[1] * x[1] - 1.0],
            |x| vec![vec![2.0 * x[0], 2.0 * x[1]]],
        );
        let set = FeasibleSet::cube(2, -2.0, 2.0).unwrap();
        let out = per_slot_minimizer(&f, &g, &set, &SolverConfig::for_minimizer()).unwrap();
        let r = 0.5f64.sqrt();
        assert!((out.point[0] - r).abs() < 1e-5 && (out.point[1] - r).abs() < 1e-5, "{out:?}");
        assert!(out.max_violation <= MINIMIZER_FEASIBILITY_TOL);
    }

    #[test]
    fn infeasible_region_yields_warning() {
        let f = FnLoss::new(|x| x[0], |_| vec![1.0]);
        let g = FnConstraints::new(1, |_| vec![1.0], |_| vec![vec![0.0]]);
        let out = per_slot_minimizer(&f, &g, &interval(), &SolverConfig::default()).unwrap();
        assert!(out.warning.is_some());
        assert_eq!(out.max_violation, 1.0);
    }

    #[test]
    fn sup_deviation_examples() {
        let set = FeasibleSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let a = AffineConstraints {
            matrix: vec![vec![1.0, 0.0]],
            offset: vec![0.0],
        };
        assert_eq!(estimate_sup_deviation(&a, &a, &set, 50, 1), 0.0);
        let b = AffineConstraints {
            matrix: vec![vec![1.0, 0.0]],
            offset: vec![0.3],
        };
        assert!((estimate_sup_deviation(&a, &b, &set, 50, 1) - 0.3).abs() < 1e-12);
        let sq = |c: f64| {
            FnConstraints::new(
                1,
                move |x: &[f64]| vec![x[0] * x[0] + x[1] * x[1] - c],
                |x: &[f64]| vec![vec![2.0 * x[0], 2.0 * x[1]]],
            )
        };
        let d = estimate_sup_deviation(&sq(1.0), &sq(2.0), &set, 20, 9);
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sup_deviation_monotone_in_samples() {
        let set = FeasibleSet::cube(2, -1.0, 1.0).unwrap();
        let a = FnConstraints::new(1, |x: &[f64]| vec![x[0] * x[1]], |x: &[f64]| vec![vec![x[1], x[0]]]);
        let b = NoConstraints { k: 1 };
        let mut prev = 0.0;
        for s in [1, 2, 5, 10, 50, 200] {
            let v = estimate_sup_deviation(&a, &b, &set, s, 42);
            assert!(v >= prev);
            prev = v;
        }
    }
}
