use rand::Rng;
use rand_distr::StandardNormal;

use super::DecisionVector;
use crate::error::{Error, Result};
use crate::vecops;

/// Closed, convex, compact feasible regions with cheap Euclidean projections.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    /// `{x : lower ≤ x ≤ upper}`
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `{x : ‖x − center‖ ≤ radius}`
    Ball { center: Vec<f64>, radius: f64 },
    /// `{x : lower ≤ x ≤ upper, weightsᵀx ≤ cap}`
    BoxWithLinearCap {
        lower: Vec<f64>,
        upper: Vec<f64>,
        weights: Vec<f64>,
        cap: f64,
    },
}

impl FeasibleSet {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let set = FeasibleSet::Box { lower, upper };
        set.validate()?;
        Ok(set)
    }

    /// `[lo, hi]ⁿ`
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(vec![lo; n], vec![hi; n])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let set = FeasibleSet::Ball { center, radius };
        set.validate()?;
        Ok(set)
    }

    pub fn box_with_cap(
        lower: Vec<f64>,
        upper: Vec<f64>,
        weights: Vec<f64>,
        cap: f64,
    ) -> Result<Self> {
        let set = FeasibleSet::BoxWithLinearCap {
            lower,
            upper,
            weights,
            cap,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Box { lower, .. } | FeasibleSet::BoxWithLinearCap { lower, .. } => {
                lower.len()
            }
            FeasibleSet::Ball { center, .. } => center.len(),
        }
    }

    /// Checks the variant describes a nonempty set.
    pub fn validate(&self) -> Result<()> {
        fn check_box(lower: &[f64], upper: &[f64]) -> Result<()> {
            if lower.len() != upper.len() {
                return Err(Error::LengthMismatch {
                    what: "box bounds",
                    expected: lower.len(),
                    actual: upper.len(),
                });
            }
            for (i, (l, u)) in lower.iter().zip(upper).enumerate() {
                if !l.is_finite() || !u.is_finite() {
                    return Err(Error::Config(format!("box bound {i} is not finite")));
                }
                if l > u {
                    return Err(Error::Config(format!(
                        "empty box: lower[{i}] = {l} > upper[{i}] = {u}"
                    )));
                }
            }
            Ok(())
        }

        match self {
            FeasibleSet::Box { lower, upper } => check_box(lower, upper),
            FeasibleSet::Ball { center, radius } => {
                if !vecops::all_finite(center) {
                    return Err(Error::Config("ball center is not finite".into()));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::Config(format!(
                        "ball radius must be positive, got {radius}"
                    )));
                }
                Ok(())
            }
            FeasibleSet::BoxWithLinearCap {
                lower,
                upper,
                weights,
                cap,
            } => {
                check_box(lower, upper)?;
                if weights.len() != lower.len() {
                    return Err(Error::LengthMismatch {
                        what: "cap weights",
                        expected: lower.len(),
                        actual: weights.len(),
                    });
                }
                if !vecops::all_finite(weights) || !cap.is_finite() {
                    return Err(Error::Config("cap weights or value not finite".into()));
                }
                let min_load = min_weighted_sum(lower, upper, weights);
                if min_load > *cap {
                    return Err(Error::Config(format!(
                        "cap {cap} unsatisfiable: smallest weighted sum over the box is {min_load}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Euclidean projection. Errors only if the set itself is empty or
    /// dimensions disagree.
    pub fn project(&self, point: &DecisionVector) -> Result<DecisionVector> {
        self.validate()?;
        if point.len() != self.dim() {
            return Err(Error::LengthMismatch {
                what: "projection point",
                expected: self.dim(),
                actual: point.len(),
            });
        }
        let mut x = point.to_vec();
        self.project_in_place(&mut x);
        Ok(DecisionVector::from_finite(x))
    }

    /// Projection without validation; callers must have validated the set.
    pub(crate) fn project_in_place(&self, x: &mut [f64]) {
        match self {
            FeasibleSet::Box { lower, upper } => clamp_box(x, lower, upper),
            FeasibleSet::Ball { center, radius } => {
                let d = vecops::dist(x, center);
                if d <= *radius {
                    return;
                }
                let diff = vecops::sub(x, center);
                let mut shrink = 0.0;
                loop {
                    let s = radius / d * (1.0 - shrink);
                    for ((xi, ci), di) in x.iter_mut().zip(center).zip(&diff) {
                        *xi = ci + s * di;
                    }
                    // rounding can leave the point a hair outside; shrink until
                    // the membership test used above passes, so projection is
                    // exactly idempotent
                    if vecops::dist(x, center) <= *radius {
                        break;
                    }
                    shrink = if shrink == 0.0 { f64::EPSILON } else { (2.0 * shrink).min(1.0) };
                }
            }
            FeasibleSet::BoxWithLinearCap {
                lower,
                upper,
                weights,
                cap,
            } => project_capped_box(x, lower, upper, weights, *cap),
        }
    }

    /// Membership up to `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        let in_box = |lower: &[f64], upper: &[f64]| {
            x.iter()
                .zip(lower.iter().zip(upper))
                .all(|(xi, (l, u))| *xi >= l - tol && *xi <= u + tol)
        };
        match self {
            FeasibleSet::Box { lower, upper } => in_box(lower, upper),
            FeasibleSet::Ball { center, radius } => vecops::dist(x, center) <= radius + tol,
            FeasibleSet::BoxWithLinearCap {
                lower,
                upper,
                weights,
                cap,
            } => in_box(lower, upper) && vecops::dot(weights, x) <= cap + tol,
        }
    }

    /// Largest pairwise distance. For the capped box this is the diameter of
    /// the enclosing box, an upper bound that is tight whenever the cap does
    /// not cut a diagonal.
    pub fn diameter(&self) -> f64 {
        match self {
            FeasibleSet::Box { lower, upper } | FeasibleSet::BoxWithLinearCap { lower, upper, .. } => {
                vecops::dist(lower, upper)
            }
            FeasibleSet::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// Projection of the origin; the canonical starting point of learners
    /// and solvers.
    pub fn anchor_point(&self) -> DecisionVector {
        let mut x = vec![0.0; self.dim()];
        self.project_in_place(&mut x);
        DecisionVector::from_finite(x)
    }

    /// Draws a point uniformly from the set. The capped box uses rejection
    /// from the enclosing box and falls back to projecting a box sample when
    /// the cap cuts away nearly all of it.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            FeasibleSet::Box { lower, upper } => sample_box(rng, lower, upper),
            FeasibleSet::Ball { center, radius } => {
                let n = center.len();
                let mut dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let len = vecops::norm(&dir);
                if len == 0.0 {
                    return center.clone();
                }
                let u: f64 = rng.random();
                let r = radius * u.powf(1.0 / n as f64);
                for (d, c) in dir.iter_mut().zip(center) {
                    *d = c + r * *d / len;
                }
                self.project_in_place(&mut dir);
                dir
            }
            FeasibleSet::BoxWithLinearCap {
                lower,
                upper,
                weights,
                cap,
            } => {
                const MAX_REJECTIONS: usize = 1000;
                let mut x = sample_box(rng, lower, upper);
                for _ in 0..MAX_REJECTIONS {
                    if vecops::dot(weights, &x) <= *cap {
                        return x;
                    }
                    x = sample_box(rng, lower, upper);
                }
                self.project_in_place(&mut x);
                x
            }
        }
    }
}

fn sample_box<R: Rng + ?Sized>(rng: &mut R, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    lower
        .iter()
        .zip(upper)
        .map(|(l, u)| {
            let s: f64 = rng.random();
            l + s * (u - l)
        })
        .collect()
}

fn clamp_box(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((xi, l), u) in x.iter_mut().zip(lower).zip(upper) {
        *xi = xi.clamp(*l, *u);
    }
}

fn min_weighted_sum(lower: &[f64], upper: &[f64], weights: &[f64]) -> f64 {
    weights
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(w, (l, u))| if *w >= 0.0 { w * l } else { w * u })
        .sum()
}

/// Projection onto `{lower ≤ y ≤ upper, wᵀy ≤ cap}`.
///
/// The KKT point is `y(μ) = clamp(x − μw)` for the smallest `μ ≥ 0` with
/// `wᵀy(μ) ≤ cap`; `wᵀy(μ)` is nonincreasing in μ. Bisection brackets μ, then
/// the free coordinates at the bracket give μ in closed form.
fn project_capped_box(x: &mut [f64], lower: &[f64], upper: &[f64], w: &[f64], cap: f64) {
    // y(μ) = clamp(x − μw) has a piecewise-linear, nonincreasing load wᵀy(μ);
    // find the breakpoint interval where it crosses the cap and solve exactly
    let y_at = |mu: f64| -> Vec<f64> {
        x.iter()
            .zip(w)
            .zip(lower.iter().zip(upper))
            .map(|((xi, wi), (l, u))| (xi - mu * wi).clamp(*l, *u))
            .collect()
    };
    let load_at = |mu: f64| vecops::dot(w, &y_at(mu));

    let la0 = load_at(0.0);
    if la0 <= cap {
        x.copy_from_slice(&y_at(0.0));
        return;
    }
    let mut breaks: Vec<f64> = x
        .iter()
        .zip(w)
        .zip(lower.iter().zip(upper))
        .filter(|(( _, wi), _)| **wi != 0.0)
        .flat_map(|((xi, wi), (l, u))| [(xi - u) / wi, (xi - l) / wi])
        .filter(|b| *b > 0.0)
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let (mut a, mut la) = (0.0, la0);
    let mut upper_bp = None;
    for &bp in &breaks {
        let l = load_at(bp);
        if l <= cap {
            upper_bp = Some((bp, l));
            break;
        }
        (a, la) = (bp, l);
    }
    let Some((b, lb)) = upper_bp else {
        x.copy_from_slice(&y_at(breaks.last().copied().unwrap_or(0.0)));
        return;
    };
    let mut mu = if la > lb { (a + (la - cap) / (la - lb) * (b - a)).clamp(a, b) } else { b };
    if load_at(mu) > cap {
        // rounding left the load a hair over the cap
        let (mut lo, mut hi) = (mu, b);
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if load_at(mid) > cap {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        mu = hi;
    }
    x.copy_from_slice(&y_at(mu));
}
