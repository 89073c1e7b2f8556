use std::fmt;
use std::sync::Arc;

use crate::vecops;

/// Coefficient table of an oracle, used for text snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleDescription {
    pub kind: &'static str,
    pub params: Vec<(&'static str, Vec<f64>)>,
}

impl OracleDescription {
    pub fn opaque() -> Self {
        Self {
            kind: "opaque",
            params: Vec::new(),
        }
    }
}

/// A convex loss `f_t` with analytic gradient.
pub trait LossOracle: Send + Sync + fmt::Debug {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn describe(&self) -> OracleDescription {
        OracleDescription::opaque()
    }
}

/// A vector of `K` convex constraint functions `g_t` with analytic Jacobian
/// (row `k` is `∇g_{t,k}`).
pub trait ConstraintOracle: Send + Sync + fmt::Debug {
    fn num_constraints(&self) -> usize;
    fn values(&self, x: &[f64]) -> Vec<f64>;
    fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>>;
    fn describe(&self) -> OracleDescription {
        OracleDescription::opaque()
    }
}

pub type SharedLoss = Arc<dyn LossOracle>;
pub type SharedConstraints = Arc<dyn ConstraintOracle>;

#[derive(Debug, Clone, Default)]
pub struct ZeroLoss;

impl LossOracle for ZeroLoss {
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
    fn describe(&self) -> OracleDescription {
        OracleDescription {
            kind: "zero",
            params: Vec::new(),
        }
    }
}

/// `cᵀx + offset`
#[derive(Debug, Clone)]
pub struct LinearLoss {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl LossOracle for LinearLoss {
    fn value(&self, x: &[f64]) -> f64 {
        vecops::dot(&self.coeffs, x) + self.offset
    }
    fn gradient(&self, _x: &[f64]) -> Vec<f64> {
        self.coeffs.clone()
    }
    fn describe(&self) -> OracleDescription {
        OracleDescription {
            kind: "linear",
            params: vec![("coeffs", self.coeffs.clone()), ("offset", vec![self.offset])],
        }
    }
}

/// `weight·‖x − target‖²`
#[derive(Debug, Clone)]
pub struct TrackingLoss {
    pub target: Vec<f64>,
    pub weight: f64,
}

impl LossOracle for TrackingLoss {
    fn value(&self, x: &[f64]) -> f64 {
        let d = vecops::dist(x, &self.target);
        self.weight * d * d
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.target)
            .map(|(xi, zi)| 2.0 * self.weight * (xi - zi))
            .collect()
    }
    fn describe(&self) -> OracleDescription {
        OracleDescription {
            kind: "tracking",
            params: vec![("target", self.target.clone()), ("weight", vec![self.weight])],
        }
    }
}

/// `Σ_i quad_i·x_i² + lin_i·x_i`, a separable convex quadratic (`quad ≥ 0`).
#[derive(Debug, Clone)]
pub struct SeparableQuadraticLoss {
    pub quad: Vec<f64>,
    pub lin: Vec<f64>,
}

impl LossOracle for SeparableQuadraticLoss {
    fn value(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.quad.iter().zip(&self.lin))
            .map(|(xi, (a, c))| a * xi * xi + c * xi)
            .sum()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.quad.iter().zip(&self.lin))
            .map(|(xi, (a, c))| 2.0 * a * xi + c)
            .collect()
    }
    fn describe(&self) -> OracleDescription {
        OracleDescription {
            kind: "separable_quadratic",
            params: vec![("quad", self.quad.clone()), ("lin", self.lin.clone())],
        }
    }
}

/// Ridge-style least squares `Σ_i (xᵀp_i + b − q_i)²`.
#[derive(Debug, Clone)]
pub struct LeastSquaresLoss {
    pub features: Vec<Vec<f64>>,
    pub intercept: f64,
    pub targets: Vec<f64>,
}

impl LeastSquaresLoss {
    fn residuals<'a>(&'a self, x: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        self.features
            .iter()
            .zip(&self.targets)
            .map(move |(p, q)| vecops::dot(x, p) + self.intercept - q)
    }
}

impl LossOracle for LeastSquaresLoss {
    fn value(&self, x: &[f64]) -> f64 {
        self.residuals(x).map(|r| r * r).sum()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for (r, p) in self.residuals(x).zip(&self.features) {
            vecops::axpy(2.0 * r, p, &mut g);
        }
        g
    }
    fn describe(&self) -> OracleDescription {
        let mut params: Vec<(&'static str, Vec<f64>)> = self
            .features
            .iter()
            .map(|p| ("feature", p.clone()))
            .collect();
        params.push(("intercept", vec![self.intercept]));
        params.push(("targets", self.targets.clone()));
        OracleDescription {
            kind: "least_squares",
            params,
        }
    }
}

/// `K` identically-zero constraints.
#[derive(Debug, Clone)]
pub struct NoConstraints {
    pub k: usize,
}

impl ConstraintOracle for NoConstraints {
    fn num_constraints(&self) -> usize {
        self.k
    }
    fn values(&self, _x: &[f64]) -> Vec<f64> {
        vec![0.0; self.k]
    }
    fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        vec![vec![0.0; x.len()]; self.k]
    }
    fn describe(&self) -> OracleDescription {
        OracleDescription {
            kind: "none",
            params: vec![("k", vec![self.k as f64])],
        }
    }
}

/// `g(x) = A x + b`
#[derive(Debug, Clone)]
pub struct AffineConstraints {
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl ConstraintOracle for AffineConstraints {
    fn num_constraints(&self) -> usize {
        self.offset.len()
    }
    fn values(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, b)| vecops::dot(row, x) + b)
            .collect()
    }
    fn jacobian(&self, _x: &[f64]) -> Vec<Vec<f64>> {
        self.matrix.clone()
    }
    fn describe(&self) -> OracleDescription {
        let mut params: Vec<(&'static str, Vec<f64>)> =
            self.matrix.iter().map(|r| ("row", r.clone())).collect();
        params.push(("offset", self.offset.clone()));
        OracleDescription {
            kind: "affine",
            params,
        }
    }
}

/// Single constraint `‖x‖ − radius`. The subgradient at the origin is taken
/// to be zero.
#[derive(Debug, Clone)]
pub struct NormConstraint {
    pub radius: f64,
}

impl ConstraintOracle for NormConstraint {
    fn num_constraints(&self) -> usize {
        1
    }
    fn values(&self, x: &[f64]) -> Vec<f64> {
        vec![vecops::norm(x) - self.radius]
    }
    fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n = vecops::norm(x);
        if n == 0.0 {
            vec![vec![0.0; x.len()]]
        } else {
            vec![vecops::scale(1.0 / n, x)]
        }
    }
    fn describe(&self) -> OracleDescription {
        OracleDescription {
            kind: "norm",
            params: vec![("radius", vec![self.radius])],
        }
    }
}

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type MatrixFn = dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync;

/// Loss built from closures.
pub struct FnLoss {
    value: Box<ScalarFn>,
    gradient: Box<VectorFn>,
}

impl FnLoss {
    pub fn new(
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Box::new(value),
            gradient: Box::new(gradient),
        }
    }
}

impl fmt::Debug for FnLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnLoss")
    }
}

impl LossOracle for FnLoss {
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }
}

/// Constraints built from closures.
pub struct FnConstraints {
    k: usize,
    values: Box<VectorFn>,
    jacobian: Box<MatrixFn>,
}

impl FnConstraints {
    pub fn new(
        k: usize,
        values: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        jacobian: impl Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            k,
            values: Box::new(values),
            jacobian: Box::new(jacobian),
        }
    }
}

impl fmt::Debug for FnConstraints {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnConstraints(k={})", self.k)
    }
}

impl ConstraintOracle for FnConstraints {
    fn num_constraints(&self) -> usize {
        self.k
    }
    fn values(&self, x: &[f64]) -> Vec<f64> {
        (self.values)(x)
    }
    fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (self.jacobian)(x)
    }
}
