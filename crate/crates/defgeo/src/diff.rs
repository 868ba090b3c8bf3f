//! Differentiation of fields: exact (analytic) or finite-difference backends.
//!
//! Three schemes:
//! - **Analytic** — delegates to the field's registered exact derivatives.
//! - **Central difference** — `(f(p+h·e_μ) − f(p−h·e_μ)) / 2h` with the step
//!   scaled by coordinate magnitude: `h_eff = h·max(1, |p_μ|)`.
//! - **Richardson** — repeated halving of the central step with extrapolation;
//!   `levels` counts the step sizes used, so `levels = 2` combines steps `h`
//!   and `h/2` as `(4·D_{h/2} − D_h)/3`.
//!
//! Finite-difference stencils are validated against the chart: a stencil point
//! outside the validity box (or inside an excluded region) is an error, never a
//! silent extrapolation.

use nalgebra::DMatrix;

use crate::chart::ChartPoint;
use crate::exprlang::EvalError;
use crate::fields::{MatrixField, ScalarField};

/// Default base step for finite-difference schemes.
pub const DEFAULT_STEP: f64 = 1e-5;
/// Default number of Richardson step sizes.
pub const DEFAULT_LEVELS: usize = 2;

/// How a partial derivative is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DifferentiationScheme {
    /// Exact derivatives from the field itself.
    Analytic,
    /// Second-order central difference quotient with base step `step`.
    CentralDifference { step: f64 },
    /// Richardson extrapolation over `levels` halvings of `step`.
    Richardson { step: f64, levels: usize },
}

impl DifferentiationScheme {
    pub fn analytic() -> Self {
        DifferentiationScheme::Analytic
    }

    pub fn central() -> Self {
        DifferentiationScheme::CentralDifference { step: DEFAULT_STEP }
    }

    pub fn richardson() -> Self {
        DifferentiationScheme::Richardson {
            step: DEFAULT_STEP,
            levels: DEFAULT_LEVELS,
        }
    }

    /// Same mode with a different base step (no effect on `Analytic`).
    pub fn with_step(self, step: f64) -> Self {
        match self {
            DifferentiationScheme::Analytic => self,
            DifferentiationScheme::CentralDifference { .. } => {
                DifferentiationScheme::CentralDifference { step }
            }
            DifferentiationScheme::Richardson { levels, .. } => {
                DifferentiationScheme::Richardson { step, levels }
            }
        }
    }

    pub fn validate(&self) -> Result<(), DiffError> {
        match *self {
            DifferentiationScheme::Analytic => Ok(()),
            DifferentiationScheme::CentralDifference { step } => {
                if step > 0.0 && step.is_finite() {
                    Ok(())
                } else {
                    Err(DiffError::BadScheme {
                        message: format!("step must be positive and finite, got {step}"),
                    })
                }
            }
            DifferentiationScheme::Richardson { step, levels } => {
                if !(step > 0.0 && step.is_finite()) {
                    return Err(DiffError::BadScheme {
                        message: format!("step must be positive and finite, got {step}"),
                    });
                }
                if levels == 0 {
                    return Err(DiffError::BadScheme {
                        message: "richardson needs at least one level".into(),
                    });
                }
                Ok(())
            }
        }
    }

    /// The scheme used for the outer derivative when an operation nests two
    /// numerical differentiations (e.g. curvature, Laplacians). The outer base
    /// step is √h, which balances the inner scheme's error against the outer
    /// truncation error; analytic mode nests exactly and is unchanged.
    pub fn outer(self) -> Self {
        match self {
            DifferentiationScheme::Analytic => self,
            DifferentiationScheme::CentralDifference { step } => {
                DifferentiationScheme::CentralDifference { step: step.sqrt() }
            }
            DifferentiationScheme::Richardson { step, levels } => {
                DifferentiationScheme::Richardson {
                    step: step.sqrt(),
                    levels,
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DifferentiationScheme::Analytic => "analytic",
            DifferentiationScheme::CentralDifference { .. } => "central",
            DifferentiationScheme::Richardson { .. } => "richardson",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiffError {
    #[error("direction index {mu} out of range for dimension {n}")]
    DirectionOutOfRange { mu: usize, n: usize },
    #[error("field and point live on different charts")]
    ChartMismatch,
    #[error(
        "finite-difference stencil leaves the chart domain at {point:?} \
         (direction {direction}, step {step})"
    )]
    StencilOutsideDomain {
        point: Vec<f64>,
        direction: usize,
        step: f64,
    },
    #[error("analytic derivatives unavailable: {what}")]
    AnalyticUnavailable { what: String },
    #[error("invalid differentiation scheme: {message}")]
    BadScheme { message: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Effective step for direction μ at the given coordinates.
fn effective_step(step: f64, coords: &[f64], mu: usize) -> f64 {
    step * coords[mu].abs().max(1.0)
}

/// Checks that every ±h/2^i shift stays inside the chart.
fn check_stencil(p: &ChartPoint, mu: usize, h: f64, halvings: usize) -> Result<(), DiffError> {
    let chart = p.chart();
    let mut coords = p.coordinates().to_vec();
    let center = coords[mu];
    for i in 0..halvings {
        let step = h / (1u32 << i) as f64;
        for signed in [center + step, center - step] {
            coords[mu] = signed;
            if !chart.contains(&coords) {
                return Err(DiffError::StencilOutsideDomain {
                    point: p.coordinates().to_vec(),
                    direction: mu,
                    step,
                });
            }
        }
    }
    Ok(())
}

fn central_scalar(f: &ScalarField, p: &ChartPoint, mu: usize, h: f64) -> Result<f64, DiffError> {
    let mut coords = p.coordinates().to_vec();
    let center = coords[mu];
    coords[mu] = center + h;
    let plus = f.eval_at(&coords)?;
    coords[mu] = center - h;
    let minus = f.eval_at(&coords)?;
    Ok((plus - minus) / (2.0 * h))
}

fn central_matrix(
    f: &MatrixField,
    p: &ChartPoint,
    mu: usize,
    h: f64,
) -> Result<DMatrix<f64>, DiffError> {
    let mut coords = p.coordinates().to_vec();
    let center = coords[mu];
    coords[mu] = center + h;
    let plus = f.eval_at(&coords)?;
    coords[mu] = center - h;
    let minus = f.eval_at(&coords)?;
    Ok((plus - minus) / (2.0 * h))
}

/// Richardson table over an abstract central-difference evaluator.
/// `d[i]` is the central estimate with step `h/2^i`.
fn richardson_combine<T, AddScale>(d: Vec<T>, add_scale: AddScale) -> T
where
    T: Clone,
    AddScale: Fn(&T, f64, &T, f64) -> T,
{
    // R[i][j] = (4^j R[i][j-1] - R[i-1][j-1]) / (4^j - 1)
    let mut row = d;
    let levels = row.len();
    for j in 1..levels {
        let weight = (4f64).powi(j as i32);
        let mut next = Vec::with_capacity(levels - j);
        for i in j..levels {
            next.push(add_scale(
                &row[i],
                weight / (weight - 1.0),
                &row[i - 1],
                -1.0 / (weight - 1.0),
            ));
        }
        row = next;
    }
    row.last().expect("at least one level").clone()
}

/// Partial derivative ∂_μ f at `p` under the given scheme.
pub fn partial_scalar(
    f: &ScalarField,
    p: &ChartPoint,
    mu: usize,
    scheme: DifferentiationScheme,
) -> Result<f64, DiffError> {
    scheme.validate()?;
    let n = f.chart().dimension();
    if mu >= n {
        return Err(DiffError::DirectionOutOfRange { mu, n });
    }
    if f.chart() != p.chart() {
        return Err(DiffError::ChartMismatch);
    }
    match scheme {
        DifferentiationScheme::Analytic => {
            let d = f
                .analytic_partial(mu)
                .ok_or(DiffError::AnalyticUnavailable {
                    what: "field has no registered exact derivative".into(),
                })?;
            Ok(d.eval(p)?)
        }
        DifferentiationScheme::CentralDifference { step } => {
            let h = effective_step(step, p.coordinates(), mu);
            check_stencil(p, mu, h, 1)?;
            central_scalar(f, p, mu, h)
        }
        DifferentiationScheme::Richardson { step, levels } => {
            let h = effective_step(step, p.coordinates(), mu);
            check_stencil(p, mu, h, levels)?;
            let mut estimates = Vec::with_capacity(levels);
            for i in 0..levels {
                estimates.push(central_scalar(f, p, mu, h / (1u32 << i) as f64)?);
            }
            Ok(richardson_combine(estimates, |a, ca, b, cb| {
                ca * a + cb * b
            }))
        }
    }
}

/// Entrywise partial derivative ∂_μ F at `p`.
pub fn partial_matrix(
    f: &MatrixField,
    p: &ChartPoint,
    mu: usize,
    scheme: DifferentiationScheme,
) -> Result<DMatrix<f64>, DiffError> {
    scheme.validate()?;
    let n = f.chart().dimension();
    if mu >= n {
        return Err(DiffError::DirectionOutOfRange { mu, n });
    }
    if f.chart() != p.chart() {
        return Err(DiffError::ChartMismatch);
    }
    match scheme {
        DifferentiationScheme::Analytic => {
            if !f.has_analytic_depth(1) {
                return Err(DiffError::AnalyticUnavailable {
                    what: "matrix field has no registered exact derivative".into(),
                });
            }
            Ok(f.analytic_partial_at(p.coordinates(), mu)?)
        }
        DifferentiationScheme::CentralDifference { step } => {
            let h = effective_step(step, p.coordinates(), mu);
            check_stencil(p, mu, h, 1)?;
            central_matrix(f, p, mu, h)
        }
        DifferentiationScheme::Richardson { step, levels } => {
            let h = effective_step(step, p.coordinates(), mu);
            check_stencil(p, mu, h, levels)?;
            let mut estimates = Vec::with_capacity(levels);
            for i in 0..levels {
                estimates.push(central_matrix(f, p, mu, h / (1u32 << i) as f64)?);
            }
            Ok(richardson_combine(estimates, |a, ca, b, cb| {
                a * ca + b * cb
            }))
        }
    }
}

/// Second partial ∂_κ∂_μ f. Analytic mode composes exact derivatives; the
/// finite-difference modes apply the outer derivative with base step √h (see
/// [`DifferentiationScheme::outer`]).
pub fn second_partial_scalar(
    f: &ScalarField,
    p: &ChartPoint,
    kappa: usize,
    mu: usize,
    scheme: DifferentiationScheme,
) -> Result<f64, DiffError> {
    scheme.validate()?;
    let n = f.chart().dimension();
    if kappa >= n || mu >= n {
        return Err(DiffError::DirectionOutOfRange {
            mu: kappa.max(mu),
            n,
        });
    }
    match scheme {
        DifferentiationScheme::Analytic => {
            let d = f
                .analytic_partial(mu)
                .and_then(|d| d.analytic_partial(kappa))
                .ok_or(DiffError::AnalyticUnavailable {
                    what: "field has no registered exact second derivative".into(),
                })?;
            Ok(d.eval(p)?)
        }
        _ => {
            let outer = scheme.outer();
            nested_outer_scalar(|q| partial_scalar(f, q, mu, scheme), p, kappa, outer)
        }
    }
}

/// Outer finite difference of an inner scalar-valued computation.
pub(crate) fn nested_outer_scalar(
    inner: impl Fn(&ChartPoint) -> Result<f64, DiffError>,
    p: &ChartPoint,
    kappa: usize,
    outer: DifferentiationScheme,
) -> Result<f64, DiffError> {
    let chart = p.chart().clone();
    let shifted = |h: f64| -> Result<f64, DiffError> {
        let mut coords = p.coordinates().to_vec();
        coords[kappa] += h;
        let q = chart
            .point(&coords)
            .map_err(|_| DiffError::StencilOutsideDomain {
                point: p.coordinates().to_vec(),
                direction: kappa,
                step: h.abs(),
            })?;
        inner(&q)
    };
    match outer {
        DifferentiationScheme::Analytic => unreachable!("outer scheme is finite-difference"),
        DifferentiationScheme::CentralDifference { step } => {
            let h = effective_step(step, p.coordinates(), kappa);
            Ok((shifted(h)? - shifted(-h)?) / (2.0 * h))
        }
        DifferentiationScheme::Richardson { step, levels } => {
            let h = effective_step(step, p.coordinates(), kappa);
            let mut estimates = Vec::with_capacity(levels);
            for i in 0..levels {
                let hi = h / (1u32 << i) as f64;
                estimates.push((shifted(hi)? - shifted(-hi)?) / (2.0 * hi));
            }
            Ok(richardson_combine(estimates, |a, ca, b, cb| {
                ca * a + cb * b
            }))
        }
    }
}

/// Outer finite difference of an inner matrix-valued computation (used for
/// nested derivatives of connection coefficients).
pub(crate) fn nested_outer_matrix(
    inner: impl Fn(&ChartPoint) -> Result<DMatrix<f64>, DiffError>,
    p: &ChartPoint,
    kappa: usize,
    outer: DifferentiationScheme,
) -> Result<DMatrix<f64>, DiffError> {
    let chart = p.chart().clone();
    let shifted = |h: f64| -> Result<DMatrix<f64>, DiffError> {
        let mut coords = p.coordinates().to_vec();
        coords[kappa] += h;
        let q = chart
            .point(&coords)
            .map_err(|_| DiffError::StencilOutsideDomain {
                point: p.coordinates().to_vec(),
                direction: kappa,
                step: h.abs(),
            })?;
        inner(&q)
    };
    match outer {
        DifferentiationScheme::Analytic => unreachable!("outer scheme is finite-difference"),
        DifferentiationScheme::CentralDifference { step } => {
            let h = effective_step(step, p.coordinates(), kappa);
            Ok((shifted(h)? - shifted(-h)?) / (2.0 * h))
        }
        DifferentiationScheme::Richardson { step, levels } => {
            let h = effective_step(step, p.coordinates(), kappa);
            let mut estimates = Vec::with_capacity(levels);
            for i in 0..levels {
                let hi = h / (1u32 << i) as f64;
                estimates.push((shifted(hi)? - shifted(-hi)?) / (2.0 * hi));
            }
            Ok(richardson_combine(estimates, |a, ca, b, cb| {
                a * ca + b * cb
            }))
        }
    }
}

/// Second partial ∂_κ∂_μ F, entrywise.
pub fn second_partial_matrix(
    f: &MatrixField,
    p: &ChartPoint,
    kappa: usize,
    mu: usize,
    scheme: DifferentiationScheme,
) -> Result<DMatrix<f64>, DiffError> {
    scheme.validate()?;
    match scheme {
        DifferentiationScheme::Analytic => {
            if !f.has_analytic_depth(2) {
                return Err(DiffError::AnalyticUnavailable {
                    what: "matrix field has no registered exact second derivative".into(),
                });
            }
            Ok(f.analytic_second_at(p.coordinates(), kappa, mu)?)
        }
        _ => nested_outer_matrix(
            |q| partial_matrix(f, q, mu, scheme),
            p,
            kappa,
            scheme.outer(),
        ),
    }
}
