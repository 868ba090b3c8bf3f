//! Metric-determined geometry: Christoffel symbols, curvature, and the
//! Laplace–Beltrami operator.
//!
//! Index conventions, fixed repository-wide:
//! - Connection-type arrays store `Γ^ρ_{μν}` as `[ρ][μ][ν]` (upper index
//!   first, then the derivative direction, then the acted-on index).
//! - The Riemann tensor `R^ρ_{σμν}` is stored `[ρ][σ][μ][ν]`.
//!
//! `MetricField` is a matrix field interpreted as a symmetric positive-definite
//! metric; validity is enforced pointwise by [`MetricAtPoint`].

use nalgebra::{Cholesky, DMatrix};

use crate::chart::ChartPoint;
use crate::diff::{self, DiffError, DifferentiationScheme};
use crate::exprlang::EvalError;
use crate::fields::{MatrixField, ScalarField};

/// A matrix field playing the role of a metric tensor.
pub type MetricField = MatrixField;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("metric is not symmetric: defect {defect:.3e} exceeds {tolerance:.3e}")]
    NotSymmetric { defect: f64, tolerance: f64 },
    #[error("metric is not positive-definite")]
    NotPositiveDefinite,
    #[error("metric is numerically singular: |det| = {det:.3e}, threshold {threshold:.3e}")]
    Singular { det: f64, threshold: f64 },
    #[error("metric inversion failed the identity check: residual {residual:.3e}")]
    IllConditioned { residual: f64 },
    #[error("expected a {expected}-dimensional metric, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("Gaussian curvature is defined only on 2-dimensional charts")]
    NotTwoDimensional,
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A validated metric value at one point: symmetric positive-definite, with
/// cached inverse and determinant.
#[derive(Debug, Clone)]
pub struct MetricAtPoint {
    g: DMatrix<f64>,
    inverse: DMatrix<f64>,
    det: f64,
}

impl MetricAtPoint {
    /// Validates and caches. The input must be symmetric to `1e-12·‖g‖` (it is
    /// then averaged with its transpose, so downstream identities hold
    /// exactly), positive-definite, nonsingular, and well-conditioned enough
    /// that `g·g⁻¹ = I` holds to `1e-10`.
    pub fn new(g: DMatrix<f64>) -> Result<MetricAtPoint, MetricError> {
        let n = g.nrows();
        if n == 0 || g.ncols() != n {
            return Err(MetricError::Dimension {
                expected: n.max(1),
                got: g.ncols(),
            });
        }
        let scale = g.amax().max(f64::MIN_POSITIVE);
        let sym_defect = (&g - g.transpose()).amax();
        let sym_tol = 1e-12 * scale;
        if !sym_defect.is_finite() || sym_defect > sym_tol {
            return Err(MetricError::NotSymmetric {
                defect: sym_defect,
                tolerance: sym_tol,
            });
        }
        let g = (&g + g.transpose()) * 0.5;
        let chol = Cholesky::new(g.clone()).ok_or(MetricError::NotPositiveDefinite)?;
        let det = chol.determinant();
        let threshold = 1e-12 * scale.powi(n as i32);
        if det.abs() <= threshold {
            return Err(MetricError::Singular { det, threshold });
        }
        let inverse = chol.inverse();
        let residual = (&g * &inverse - DMatrix::identity(n, n)).amax();
        if residual > 1e-10 {
            return Err(MetricError::IllConditioned { residual });
        }
        Ok(MetricAtPoint { g, inverse, det })
    }

    pub fn dimension(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn determinant(&self) -> f64 {
        self.det
    }

    pub fn get(&self, mu: usize, nu: usize) -> f64 {
        self.g[(mu, nu)]
    }
}

/// Evaluates a metric field at a point and validates the result.
pub fn metric_at(metric: &MetricField, p: &ChartPoint) -> Result<MetricAtPoint, MetricError> {
    MetricAtPoint::new(metric.eval(p)?)
}

/// A rank-3 coefficient array in the `[ρ][μ][ν]` convention, used for
/// connection coefficients `Γ^ρ_{μν}` and connection-type tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionCoefficients {
    n: usize,
    levi_civita: bool,
    vals: Vec<f64>,
}

impl ConnectionCoefficients {
    pub fn zeros(n: usize) -> ConnectionCoefficients {
        ConnectionCoefficients {
            n,
            levi_civita: false,
            vals: vec![0.0; n * n * n],
        }
    }

    /// Marks the coefficients as Levi-Civita output; enforced (μ,ν)-symmetric.
    pub(crate) fn flag_levi_civita(mut self) -> ConnectionCoefficients {
        debug_assert!(self.lower_symmetry_defect() <= 1e-10 * (1.0 + self.max_abs()));
        self.levi_civita = true;
        self
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    /// True when produced by [`christoffel`] (torsion-free by construction).
    pub fn is_levi_civita(&self) -> bool {
        self.levi_civita
    }

    pub fn get(&self, rho: usize, mu: usize, nu: usize) -> f64 {
        self.vals[(rho * self.n + mu) * self.n + nu]
    }

    pub fn set(&mut self, rho: usize, mu: usize, nu: usize, value: f64) {
        self.vals[(rho * self.n + mu) * self.n + nu] = value;
    }

    /// The n×n matrix `(Γ_μ)^ρ_ν` for a fixed derivative direction μ.
    pub fn direction_matrix(&self, mu: usize) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |rho, nu| self.get(rho, mu, nu))
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// max |Γ^ρ_{μν} − Γ^ρ_{νμ}|.
    pub fn lower_symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for rho in 0..self.n {
            for mu in 0..self.n {
                for nu in 0..self.n {
                    worst = worst.max((self.get(rho, mu, nu) - self.get(rho, nu, mu)).abs());
                }
            }
        }
        worst
    }

    /// Row-major `[ρ][μ][ν]` flattening.
    pub fn flatten(&self) -> &[f64] {
        &self.vals
    }

    /// Entrywise difference (self − other).
    pub fn difference(&self, other: &ConnectionCoefficients) -> ConnectionCoefficients {
        assert_eq!(self.n, other.n);
        ConnectionCoefficients {
            n: self.n,
            levi_civita: false,
            vals: self
                .vals
                .iter()
                .zip(&other.vals)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn max_abs_difference(&self, other: &ConnectionCoefficients) -> f64 {
        self.difference(other).max_abs()
    }
}

/// A rank-3 array with a documented per-use index meaning (e.g. torsion
/// `T^ρ_{μν}` as `[ρ][μ][ν]`, metric derivatives `∇_μ g_{νρ}` as `[μ][ν][ρ]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Rank3Tensor {
    n: usize,
    vals: Vec<f64>,
}

impl Rank3Tensor {
    pub fn zeros(n: usize) -> Rank3Tensor {
        Rank3Tensor {
            n,
            vals: vec![0.0; n * n * n],
        }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.vals[(i * self.n + j) * self.n + k]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        self.vals[(i * self.n + j) * self.n + k] = value;
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Row-major flattening in declared index order.
    pub fn flatten(&self) -> &[f64] {
        &self.vals
    }
}

/// Curvature of a metric at a point. `gaussian` is populated only in 2D,
/// where `scalar = 2·gaussian` holds by definition.
#[derive(Debug, Clone)]
pub struct CurvatureReport {
    n: usize,
    riemann: Vec<f64>,
    ricci: DMatrix<f64>,
    scalar: f64,
    gaussian: Option<f64>,
}

impl CurvatureReport {
    pub fn dimension(&self) -> usize {
        self.n
    }

    /// `R^ρ_{σμν}` with storage `[ρ][σ][μ][ν]`.
    pub fn riemann(&self, rho: usize, sigma: usize, mu: usize, nu: usize) -> f64 {
        let n = self.n;
        self.riemann[((rho * n + sigma) * n + mu) * n + nu]
    }

    pub fn ricci(&self) -> &DMatrix<f64> {
        &self.ricci
    }

    pub fn scalar(&self) -> f64 {
        self.scalar
    }

    pub fn gaussian(&self) -> Option<f64> {
        self.gaussian
    }

    /// max over the antisymmetry defect |R^ρ_{σμν} + R^ρ_{σνμ}|.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for rho in 0..n {
            for sigma in 0..n {
                for mu in 0..n {
                    for nu in 0..n {
                        worst = worst.max(
                            (self.riemann(rho, sigma, mu, nu) + self.riemann(rho, sigma, nu, mu))
                                .abs(),
                        );
                    }
                }
            }
        }
        worst
    }
}

/// First metric derivatives ∂_λ g at a point, symmetrized so that the exact
/// (μ,ν)-symmetry of the Levi-Civita formula survives floating-point noise.
fn metric_derivatives(
    metric: &MetricField,
    p: &ChartPoint,
    scheme: DifferentiationScheme,
) -> Result<Vec<DMatrix<f64>>, MetricError> {
    let n = metric.dimension();
    let mut dg = Vec::with_capacity(n);
    for lambda in 0..n {
        let d = diff::partial_matrix(metric, p, lambda, scheme)?;
        dg.push((&d + d.transpose()) * 0.5);
    }
    Ok(dg)
}

fn christoffel_from_parts(inv: &DMatrix<f64>, dg: &[DMatrix<f64>]) -> ConnectionCoefficients {
    let n = inv.nrows();
    let mut gamma = ConnectionCoefficients::zeros(n);
    for rho in 0..n {
        for mu in 0..n {
            for nu in 0..n {
                let mut acc = 0.0;
                for lambda in 0..n {
                    acc += inv[(rho, lambda)]
                        * (dg[mu][(lambda, nu)] + dg[nu][(lambda, mu)] - dg[lambda][(mu, nu)]);
                }
                gamma.set(rho, mu, nu, 0.5 * acc);
            }
        }
    }
    gamma
}

/// Levi-Civita connection coefficients
/// `Γ^ρ_{μν} = ½ g^{ρλ}(∂_μ g_{λν} + ∂_ν g_{λμ} − ∂_λ g_{μν})`.
pub fn christoffel(
    metric: &MetricField,
    p: &ChartPoint,
    scheme: DifferentiationScheme,
) -> Result<ConnectionCoefficients, MetricError> {
    let g = metric_at(metric, p)?;
    let dg = metric_derivatives(metric, p, scheme)?;
    Ok(christoffel_from_parts(g.inverse(), &dg).flag_levi_civita())
}

/// Exact ∂_κ Γ° via the product rule on the Christoffel formula, using the
/// field's analytic first and second derivatives.
fn christoffel_derivative_analytic(
    metric: &MetricField,
    p: &ChartPoint,
    kappa: usize,
) -> Result<DMatrix<f64>, MetricError> {
    let n = metric.dimension();
    let g = metric_at(metric, p)?;
    let inv = g.inverse();
    let coords = p.coordinates();

    let mut dg = Vec::with_capacity(n);
    for lambda in 0..n {
        let d = metric.analytic_partial_at(coords, lambda)?;
        dg.push((&d + d.transpose()) * 0.5);
    }
    let dgk = &dg[kappa];
    // ∂_κ g^{ρλ} = −g^{ρα} (∂_κ g_{αβ}) g^{βλ}
    let dinv = -(inv * dgk * inv);
    let mut ddg = Vec::with_capacity(n);
    for mu in 0..n {
        let d = metric.analytic_second_at(coords, kappa, mu)?;
        ddg.push((&d + d.transpose()) * 0.5);
    }

    // Packed as an n×n² block with column index μ*n+ν, matching the layout
    // the finite-difference path produces.
    let mut out = DMatrix::zeros(n, n * n);
    for rho in 0..n {
        for mu in 0..n {
            for nu in 0..n {
                let mut acc = 0.0;
                for lambda in 0..n {
                    let sym = dg[mu][(lambda, nu)] + dg[nu][(lambda, mu)] - dg[lambda][(mu, nu)];
                    let dsym =
                        ddg[mu][(lambda, nu)] + ddg[nu][(lambda, mu)] - ddg[lambda][(mu, nu)];
                    acc += dinv[(rho, lambda)] * sym + inv[(rho, lambda)] * dsym;
                }
                out[(rho, mu * n + nu)] = 0.5 * acc;
            }
        }
    }
    Ok(out)
}

/// Full curvature report from the standard coordinate formula
/// `R^ρ_{σμν} = ∂_μΓ^ρ_{νσ} − ∂_νΓ^ρ_{μσ} + Γ^ρ_{μλ}Γ^λ_{νσ} − Γ^ρ_{νλ}Γ^λ_{μσ}`.
///
/// In finite-difference modes the outer derivative of Γ° uses base step √h
/// (see [`DifferentiationScheme::outer`]); in analytic mode ∂Γ° is exact.
pub fn riemann(
    metric: &MetricField,
    p: &ChartPoint,
    scheme: DifferentiationScheme,
) -> Result<CurvatureReport, MetricError> {
    let n = metric.dimension();
    let g = metric_at(metric, p)?;
    let gamma = christoffel(metric, p, scheme)?;

    // dgamma[κ] as an n×n² block with column index μ*n+ν.
    let mut dgamma: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    match scheme {
        DifferentiationScheme::Analytic => {
            for kappa in 0..n {
                dgamma.push(christoffel_derivative_analytic(metric, p, kappa)?);
            }
        }
        _ => {
            let outer = scheme.outer();
            for kappa in 0..n {
                let block = diff::nested_outer_matrix(
                    |q| {
                        let gam = christoffel(metric, q, scheme).map_err(|e| match e {
                            MetricError::Diff(d) => d,
                            other => DiffError::Eval(EvalError {
                                expression: "christoffel".into(),
                                point: q.coordinates().to_vec(),
                                message: other.to_string(),
                            }),
                        })?;
                        let mut m = DMatrix::zeros(n, n * n);
                        for rho in 0..n {
                            for mu in 0..n {
                                for nu in 0..n {
                                    m[(rho, mu * n + nu)] = gam.get(rho, mu, nu);
                                }
                            }
                        }
                        Ok(m)
                    },
                    p,
                    kappa,
                    outer,
                )?;
                dgamma.push(block);
            }
        }
    }

    let dg_at = |kappa: usize, rho: usize, mu: usize, nu: usize| dgamma[kappa][(rho, mu * n + nu)];

    let mut riem = vec![0.0; n * n * n * n];
    for rho in 0..n {
        for sigma in 0..n {
            for mu in 0..n {
                for nu in 0..n {
                    let mut val = dg_at(mu, rho, nu, sigma) - dg_at(nu, rho, mu, sigma);
                    for lambda in 0..n {
                        val += gamma.get(rho, mu, lambda) * gamma.get(lambda, nu, sigma)
                            - gamma.get(rho, nu, lambda) * gamma.get(lambda, mu, sigma);
                    }
                    riem[((rho * n + sigma) * n + mu) * n + nu] = val;
                }
            }
        }
    }

    let mut ricci = DMatrix::zeros(n, n);
    for sigma in 0..n {
        for nu in 0..n {
            let mut acc = 0.0;
            for rho in 0..n {
                acc += riem[((rho * n + sigma) * n + rho) * n + nu];
            }
            ricci[(sigma, nu)] = acc;
        }
    }

    let mut scalar = 0.0;
    for sigma in 0..n {
        for nu in 0..n {
            scalar += g.inverse()[(sigma, nu)] * ricci[(sigma, nu)];
        }
    }

    let gaussian = (n == 2).then_some(0.5 * scalar);
    Ok(CurvatureReport {
        n,
        riemann: riem,
        ricci,
        scalar,
        gaussian,
    })
}

/// Gaussian curvature on a 2-dimensional chart.
pub fn gaussian_curvature(
    metric: &MetricField,
    p: &ChartPoint,
    scheme: DifferentiationScheme,
) -> Result<f64, MetricError> {
    riemann(metric, p, scheme)?
        .gaussian()
        .ok_or(MetricError::NotTwoDimensional)
}

/// Laplace–Beltrami operator
/// `Δf = (1/√det g) ∂_μ(√det g · g^{μν} ∂_ν f)`.
pub fn laplace_beltrami(
    metric: &MetricField,
    f: &ScalarField,
    p: &ChartPoint,
    scheme: DifferentiationScheme,
) -> Result<f64, MetricError> {
    if f.chart() != metric.chart() {
        return Err(MetricError::Diff(DiffError::ChartMismatch));
    }
    let n = metric.dimension();
    match scheme {
        DifferentiationScheme::Analytic => {
            // Expanded form: Δf = g^{μν}∂_μ∂_νf
            //   + (∂_μ g^{μν})∂_νf + ½ tr(g⁻¹ ∂_μg) g^{μν} ∂_νf.
            let g = metric_at(metric, p)?;
            let inv = g.inverse();
            let coords = p.coordinates();
            let mut dg = Vec::with_capacity(n);
            for mu in 0..n {
                let d = metric.analytic_partial_at(coords, mu)?;
                dg.push((&d + d.transpose()) * 0.5);
            }
            let mut df = Vec::with_capacity(n);
            for nu in 0..n {
                df.push(diff::partial_scalar(f, p, nu, scheme)?);
            }
            let mut acc = 0.0;
            for mu in 0..n {
                let dinv_mu = -(inv * &dg[mu] * inv);
                let log_vol = 0.5 * (inv * &dg[mu]).trace();
                for nu in 0..n {
                    acc += inv[(mu, nu)] * diff::second_partial_scalar(f, p, mu, nu, scheme)?;
                    acc += (dinv_mu[(mu, nu)] + log_vol * inv[(mu, nu)]) * df[nu];
                }
            }
            Ok(acc)
        }
        _ => {
            // Divergence form with one nested derivative: the flux fields
            // F^μ(x) = √det g · g^{μν} ∂_νf are differentiated with the outer
            // scheme, then scaled by 1/√det g at the base point.
            let g = metric_at(metric, p)?;
            let outer = scheme.outer();
            let metric_f = metric.clone();
            let f_f = f.clone();
            let chart = p.chart().clone();
            let mut acc = 0.0;
            for mu in 0..n {
                let metric_c = metric_f.clone();
                let f_c = f_f.clone();
                let chart_c = chart.clone();
                let flux = move |q: &ChartPoint| -> Result<f64, DiffError> {
                    let gq = MetricAtPoint::new(metric_c.eval(q)?).map_err(|e| {
                        DiffError::Eval(EvalError {
                            expression: "metric".into(),
                            point: q.coordinates().to_vec(),
                            message: e.to_string(),
                        })
                    })?;
                    let mut val = 0.0;
                    for nu in 0..chart_c.dimension() {
                        val += gq.inverse()[(mu, nu)] * diff::partial_scalar(&f_c, q, nu, scheme)?;
                    }
                    Ok(val * gq.determinant().sqrt())
                };
                acc += diff::nested_outer_scalar(flux, p, mu, outer)?;
            }
            Ok(acc / g.determinant().sqrt())
        }
    }
}
