//! Built-in deformation families with independently coded expected values.
//!
//! Each scenario bundles a chart, a reference metric, a deformation field,
//! and closed-form providers for the quantities that are known exactly on
//! that family. The providers are written directly from the explicit
//! formulas — they never call the generic pipeline (metric derivatives,
//! Christoffel symbols, rate tensors), so comparing the two paths is a real
//! cross-check rather than a tautology.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::chart::{Chart, ChartError, ChartPoint};
use crate::connection::{self, ConnectionError};
use crate::deformation::{self, DeformationError, DeformationField, RateKind, RateTensor};
use crate::diff::{self, DiffError, DifferentiationScheme};
use crate::exprlang::{EvalError, ParseError};
use crate::fields::{MatrixField, ScalarField};
use crate::metric::{self, ConnectionCoefficients, MetricError, MetricField};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("unknown scenario {name:?}; known scenarios: planar, dilation, sphere, shear, conformal_sphere")]
    UnknownScenario { name: String },
    #[error("radius must be positive and finite, got {value}")]
    InvalidRadius { value: f64 },
    #[error("shear parameter must satisfy 0 < |s| < 1, got {value}")]
    InvalidShearParameter { value: f64 },
    #[error("profile a(x) = {value} at x = {coordinate} violates a > s\u{b2} = {bound}")]
    ProfileTooSmall {
        coordinate: f64,
        value: f64,
        bound: f64,
    },
    #[error("shear profile must depend on the first coordinate only")]
    ProfileNotOneDimensional,
    #[error("chart [{lower}, {upper}] must exclude the poles of the polar coordinate")]
    ContainsPole { lower: f64, upper: f64 },
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Deformation(#[from] DeformationError),
    #[error(transparent)]
    Connection(#[from] ConnectionError),
}

pub type ScalarProvider = Arc<dyn Fn(&ChartPoint) -> Result<f64, ScenarioError> + Send + Sync>;
pub type MatrixProvider =
    Arc<dyn Fn(&ChartPoint) -> Result<DMatrix<f64>, ScenarioError> + Send + Sync>;
pub type RateProvider = Arc<dyn Fn(&ChartPoint) -> Result<RateTensor, ScenarioError> + Send + Sync>;
pub type ConnectionProvider =
    Arc<dyn Fn(&ChartPoint) -> Result<ConnectionCoefficients, ScenarioError> + Send + Sync>;

/// Exact expected values attached to a scenario. A `None` entry means no
/// closed form is known for that quantity on the family.
#[derive(Clone, Default)]
pub struct ClosedForms {
    /// The deformed metric g.
    pub metric: Option<MatrixProvider>,
    /// P⁻¹ where an explicit inverse is known.
    pub deformation_inverse: Option<MatrixProvider>,
    /// Levi-Civita coefficients Γ°\[g\].
    pub levi_civita: Option<ConnectionProvider>,
    /// Total coefficients Γ = Γ°\[g\] + Λ.
    pub total_connection: Option<ConnectionProvider>,
    /// Raw rate L̄.
    pub raw_rate: Option<RateProvider>,
    /// The isotropic (dilation) summand of L̄ where the family splits.
    pub raw_rate_dilation_part: Option<RateProvider>,
    /// The traceless (shear) summand of L̄ where the family splits.
    pub raw_rate_shear_part: Option<RateProvider>,
    /// Deformed-frame rate L.
    pub deformed_rate: Option<RateProvider>,
    /// Compensation Λ.
    pub compensation: Option<RateProvider>,
    /// Gaussian curvature of the deformed metric.
    pub gaussian_curvature: Option<ScalarProvider>,
}

/// A named deformation family: geometry inputs plus closed-form expectations.
///
/// Immutable after construction; all contained fields are shared by `Arc`,
/// so scenarios are cheap to clone and safe to use concurrently.
#[derive(Clone)]
pub struct Scenario {
    name: &'static str,
    summary: String,
    chart: Chart,
    deformation: DeformationField,
    closed: ClosedForms,
    rates_coincide: bool,
}

impl Scenario {
    /// CLI-addressable name.
    pub fn name(&self) -> &'static str {
        self.name
    }

    /// One-line human description.
    pub fn summary(&self) -> &str {
        &self.summary
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn deformation(&self) -> &DeformationField {
        &self.deformation
    }

    pub fn reference_metric(&self) -> &MetricField {
        self.deformation.reference_metric()
    }

    pub fn closed_forms(&self) -> &ClosedForms {
        &self.closed
    }

    /// Whether `[L̄_μ, P] = 0` holds identically on this family, making the
    /// raw and deformed-frame rates equal.
    pub fn rates_coincide(&self) -> bool {
        self.rates_coincide
    }

    /// Runs every attached closed-form comparison on a `resolution` per axis
    /// grid and reports one outcome per comparison.
    pub fn verify(
        &self,
        resolution: usize,
        scheme: DifferentiationScheme,
    ) -> Result<Vec<CheckOutcome>, ScenarioError> {
        scheme.validate()?;
        let ladder = tolerance_ladder(scheme);
        let grid = self.chart.grid(resolution);
        let g_field = deformation::deformed_metric_field(&self.deformation);
        let gbar_field = self.deformation.reference_metric();

        let mut checks: Vec<(&'static str, f64, f64)> = Vec::new();
        let mut residual = |name: &'static str, tolerance: f64, value: f64| match checks
            .iter_mut()
            .find(|(n, _, _)| *n == name)
        {
            Some(entry) => entry.2 = entry.2.max(value),
            None => checks.push((name, tolerance, value)),
        };

        let needs_rates = self.closed.raw_rate.is_some()
            || self.closed.raw_rate_dilation_part.is_some()
            || self.closed.deformed_rate.is_some()
            || self.closed.compensation.is_some()
            || self.closed.total_connection.is_some()
            || !self.rates_coincide;

        for p in &grid {
            if let Some(provider) = &self.closed.metric {
                let expected = provider(p)?;
                let got = g_field.eval(p)?;
                residual(
                    "deformed_metric",
                    ladder.algebraic,
                    (&got - &expected).amax(),
                );
            }
            if let Some(provider) = &self.closed.deformation_inverse {
                let expected = provider(p)?;
                let got = self
                    .deformation
                    .eval(p)?
                    .try_inverse()
                    .expect("validated deformation is invertible");
                residual(
                    "deformation_inverse",
                    ladder.algebraic,
                    (&got - &expected).amax(),
                );
            }
            if let Some(provider) = &self.closed.levi_civita {
                let expected = provider(p)?;
                let got = metric::christoffel(&g_field, p, scheme)?;
                residual(
                    "levi_civita_connection",
                    ladder.first_derivative,
                    got.max_abs_difference(&expected),
                );
            }

            if needs_rates {
                let raw = deformation::raw_rate(&self.deformation, gbar_field, p, scheme)?;
                let p_mat = self.deformation.eval(p)?;
                let deformed = deformation::deformed_frame_rate(&p_mat, &raw)?;
                let g_at = metric::metric_at(&g_field, p)?;
                let lambda = connection::sym_g(&deformed, &g_at)?;

                if let Some(provider) = &self.closed.raw_rate {
                    let expected = provider(p)?;
                    residual(
                        "raw_rate",
                        ladder.first_derivative,
                        raw.max_abs_difference(&expected),
                    );
                }
                if let (Some(dil), Some(shear)) = (
                    &self.closed.raw_rate_dilation_part,
                    &self.closed.raw_rate_shear_part,
                ) {
                    let dil = dil(p)?;
                    let shear = shear(p)?;
                    let summed: Vec<DMatrix<f64>> = (0..raw.dimension())
                        .map(|mu| dil.direction(mu) + shear.direction(mu))
                        .collect();
                    let summed = RateTensor::new(RateKind::Raw, summed);
                    residual(
                        "raw_rate_split",
                        ladder.first_derivative,
                        raw.max_abs_difference(&summed),
                    );
                }
                if let Some(provider) = &self.closed.deformed_rate {
                    let expected = provider(p)?;
                    residual(
                        "deformed_rate",
                        ladder.first_derivative,
                        deformed.max_abs_difference(&expected),
                    );
                }
                if let Some(provider) = &self.closed.compensation {
                    let expected = provider(p)?;
                    residual(
                        "compensation",
                        ladder.first_derivative,
                        lambda.max_abs_difference(&expected),
                    );
                }
                if let Some(provider) = &self.closed.total_connection {
                    let expected = provider(p)?;
                    let got = connection::total_connection(&g_field, &lambda, p, scheme)?;
                    residual(
                        "total_connection",
                        ladder.first_derivative,
                        got.coefficients().max_abs_difference(&expected),
                    );
                }

                if self.rates_coincide {
                    residual(
                        "raw_deformed_coincide",
                        ladder.first_derivative,
                        raw.max_abs_difference(&deformed),
                    );
                } else {
                    // Wherever the commutator [L̄_μ, P] is non-negligible the
                    // two rate representations must visibly separate; the
                    // residual is how far short of the separation floor the
                    // worst such point falls (zero when all separate).
                    let commutator = (0..raw.dimension())
                        .map(|mu| deformation::commutator_defect(raw.direction(mu), &p_mat).amax())
                        .fold(0.0, f64::max);
                    if commutator > 1e-6 {
                        let separation = raw.max_abs_difference(&deformed);
                        residual("raw_deformed_separate", 0.0, (1e-6 - separation).max(0.0));
                    }
                }
            }

            if let Some(provider) = &self.closed.gaussian_curvature {
                let expected = provider(p)?;
                let got = metric::gaussian_curvature(&g_field, p, scheme)?;
                residual(
                    "gaussian_curvature",
                    ladder.curvature,
                    (got - expected).abs(),
                );
            }
        }

        Ok(checks
            .into_iter()
            .map(|(name, tolerance, max_residual)| CheckOutcome {
                name: name.to_string(),
                tolerance,
                max_residual,
                passed: max_residual <= tolerance,
            })
            .collect())
    }
}

/// Result of one closed-form comparison swept over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub tolerance: f64,
    pub max_residual: f64,
    pub passed: bool,
}

/// Comparison tolerances by quantity class, loosened for finite-difference
/// schemes in line with their truncation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceLadder {
    /// Quantities needing only field evaluation (g, P⁻¹).
    pub algebraic: f64,
    /// Quantities needing one derivative (connections, rates).
    pub first_derivative: f64,
    /// Quantities needing two derivatives (curvature).
    pub curvature: f64,
}

pub fn tolerance_ladder(scheme: DifferentiationScheme) -> ToleranceLadder {
    match scheme {
        DifferentiationScheme::Analytic => ToleranceLadder {
            algebraic: 1e-10,
            first_derivative: 1e-8,
            curvature: 1e-6,
        },
        DifferentiationScheme::Richardson { .. } => ToleranceLadder {
            algebraic: 1e-10,
            first_derivative: 1e-7,
            curvature: 1e-4,
        },
        DifferentiationScheme::CentralDifference { .. } => ToleranceLadder {
            algebraic: 1e-10,
            first_derivative: 1e-5,
            curvature: 1e-2,
        },
    }
}

/// Names accepted by [`builtin`], in presentation order.
pub const BUILTIN_NAMES: [&str; 5] = ["planar", "dilation", "sphere", "shear", "conformal_sphere"];

/// Constructs a built-in scenario by CLI name, with the default parameters
/// documented on each constructor.
pub fn builtin(name: &str) -> Result<Scenario, ScenarioError> {
    match name {
        "planar" => {
            let chart = planar_chart()?;
            let phi = ScalarField::expression(&chart, "0.3*x + 0.1*y^2")?;
            let sigma = ScalarField::expression(&chart, "0.2*x*y")?;
            planar_dilation_shear(phi, sigma)
        }
        "dilation" => {
            let chart = planar_chart()?;
            let phi = ScalarField::expression(&chart, "0.2*x + 0.1*y^2")?;
            pure_dilation(phi)
        }
        "sphere" => sphere_from_flat(2.0),
        "shear" => {
            let chart = Chart::new(&["x", "y"], &[(-0.25, 0.75), (-1.0, 1.0)])?;
            let a = ScalarField::expression(&chart, "1 + x")?;
            nondiagonal_shear(a, 0.5)
        }
        "conformal_sphere" => {
            let chart = polar_chart()?;
            let varphi = ScalarField::expression(&chart, "0.1*cos(theta)")?;
            conformal_sphere(1.0, varphi)
        }
        other => Err(ScenarioError::UnknownScenario {
            name: other.to_string(),
        }),
    }
}

/// All five built-in scenarios with their default parameters.
pub fn builtin_scenarios() -> Result<Vec<Scenario>, ScenarioError> {
    BUILTIN_NAMES.iter().map(|name| builtin(name)).collect()
}

fn planar_chart() -> Result<Chart, ChartError> {
    Chart::new(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)])
}

fn polar_chart() -> Result<Chart, ChartError> {
    Chart::new(&["theta", "phi"], &[(0.3, PI - 0.3), (0.0, 2.0 * PI)])
}

/// One exact partial of a scalar input field: symbolic when the field
/// supports it, high-order finite differences otherwise. Input fields are
/// primitives here, so this does not touch the pipeline under test.
fn input_partial(f: &ScalarField, p: &ChartPoint, mu: usize) -> Result<f64, ScenarioError> {
    match f.analytic_partial(mu) {
        Some(df) => Ok(df.eval(p)?),
        None => Ok(diff::partial_scalar(
            f,
            p,
            mu,
            DifferentiationScheme::richardson(),
        )?),
    }
}

/// The flat-plane family deformed by an isotropic dilation exponent `phi`
/// and a traceless shear exponent `sigma`:
/// `P = e^φ·diag(e^σ, e^{−σ})` over ḡ = δ, giving
/// `g = diag(e^{2(φ+σ)}, e^{2(φ−σ)})`.
///
/// CLI name `planar` uses φ = 0.3x + 0.1y², σ = 0.2xy on [−1,1]².
///
/// # Panics
/// If the two fields live on different charts or the chart is not planar.
pub fn planar_dilation_shear(
    phi: ScalarField,
    sigma: ScalarField,
) -> Result<Scenario, ScenarioError> {
    assert!(
        phi.chart() == sigma.chart(),
        "dilation and shear exponents must live on the same chart"
    );
    assert_eq!(phi.chart().dimension(), 2, "the family is two-dimensional");
    let chart = phi.chart().clone();

    // Exponents of the two principal stretches.
    let plus = ScalarField::linear_combination(&[(1.0, &phi), (1.0, &sigma)]);
    let minus = ScalarField::linear_combination(&[(1.0, &phi), (-1.0, &sigma)]);

    let zero = ScalarField::constant(&chart, 0.0);
    let p_matrix =
        MatrixField::from_entries(&chart, vec![plus.exp(), zero.clone(), zero, minus.exp()]);
    let reference = MatrixField::identity(&chart);
    let deformation = DeformationField::new(p_matrix, reference)?;

    let metric = {
        let (plus, minus) = (plus.clone(), minus.clone());
        Arc::new(
            move |p: &ChartPoint| -> Result<DMatrix<f64>, ScenarioError> {
                let u = plus.eval(p)?;
                let v = minus.eval(p)?;
                Ok(DMatrix::from_row_slice(
                    2,
                    2,
                    &[(2.0 * u).exp(), 0.0, 0.0, (2.0 * v).exp()],
                ))
            },
        ) as MatrixProvider
    };

    // Every rate representation is the diagonal matrix
    // diag(∂_i(φ+σ), ∂_i(φ−σ)): the family is adapted (P, ḡ, g all
    // diagonal), so raw, deformed-frame, and compensation coincide.
    let diagonal_rate = |kind: RateKind| -> RateProvider {
        let (plus, minus) = (plus.clone(), minus.clone());
        Arc::new(move |p: &ChartPoint| -> Result<RateTensor, ScenarioError> {
            let mats = (0..2)
                .map(|i| {
                    let du = input_partial(&plus, p, i)?;
                    let dv = input_partial(&minus, p, i)?;
                    Ok(DMatrix::from_row_slice(2, 2, &[du, 0.0, 0.0, dv]))
                })
                .collect::<Result<Vec<_>, ScenarioError>>()?;
            Ok(RateTensor::new(kind, mats))
        })
    };

    let raw_rate_dilation_part = {
        let phi = phi.clone();
        Arc::new(move |p: &ChartPoint| -> Result<RateTensor, ScenarioError> {
            let mats = (0..2)
                .map(|i| Ok(DMatrix::identity(2, 2) * input_partial(&phi, p, i)?))
                .collect::<Result<Vec<_>, ScenarioError>>()?;
            Ok(RateTensor::new(RateKind::Raw, mats))
        }) as RateProvider
    };
    let raw_rate_shear_part = {
        let sigma = sigma.clone();
        Arc::new(move |p: &ChartPoint| -> Result<RateTensor, ScenarioError> {
            let mats = (0..2)
                .map(|i| {
                    let ds = input_partial(&sigma, p, i)?;
                    Ok(DMatrix::from_row_slice(2, 2, &[ds, 0.0, 0.0, -ds]))
                })
                .collect::<Result<Vec<_>, ScenarioError>>()?;
            Ok(RateTensor::new(RateKind::Raw, mats))
        }) as RateProvider
    };

    let levi_civita = {
        let (plus, minus, sigma) = (plus.clone(), minus.clone(), sigma.clone());
        Arc::new(
            move |p: &ChartPoint| -> Result<ConnectionCoefficients, ScenarioError> {
                let du = [input_partial(&plus, p, 0)?, input_partial(&plus, p, 1)?];
                let dv = [input_partial(&minus, p, 0)?, input_partial(&minus, p, 1)?];
                let s = sigma.eval(p)?;
                let mut c = ConnectionCoefficients::zeros(2);
                c.set(0, 0, 0, du[0]);
                c.set(0, 0, 1, du[1]);
                c.set(0, 1, 0, du[1]);
                c.set(0, 1, 1, -(-4.0 * s).exp() * dv[0]);
                c.set(1, 1, 1, dv[1]);
                c.set(1, 0, 1, dv[0]);
                c.set(1, 1, 0, dv[0]);
                c.set(1, 0, 0, -(4.0 * s).exp() * du[1]);
                Ok(c)
            },
        ) as ConnectionProvider
    };

    let total_connection = {
        let levi_civita = levi_civita.clone();
        let lambda = diagonal_rate(RateKind::Compensation);
        Arc::new(
            move |p: &ChartPoint| -> Result<ConnectionCoefficients, ScenarioError> {
                let base = levi_civita(p)?;
                let lam = lambda(p)?;
                let mut c = ConnectionCoefficients::zeros(2);
                for rho in 0..2 {
                    for mu in 0..2 {
                        for nu in 0..2 {
                            c.set(rho, mu, nu, base.get(rho, mu, nu) + lam.get(rho, mu, nu));
                        }
                    }
                }
                Ok(c)
            },
        ) as ConnectionProvider
    };

    Ok(Scenario {
        name: "planar",
        summary:
            "flat plane deformed by an isotropic dilation exponent and a traceless shear exponent"
                .to_string(),
        chart,
        deformation,
        closed: ClosedForms {
            metric: Some(metric),
            levi_civita: Some(levi_civita),
            total_connection: Some(total_connection),
            raw_rate: Some(diagonal_rate(RateKind::Raw)),
            raw_rate_dilation_part: Some(raw_rate_dilation_part),
            raw_rate_shear_part: Some(raw_rate_shear_part),
            deformed_rate: Some(diagonal_rate(RateKind::DeformedFrame)),
            compensation: Some(diagonal_rate(RateKind::Compensation)),
            ..ClosedForms::default()
        },
        rates_coincide: true,
    })
}

/// The shear-free member of the planar family: `P = e^φ·I`, `g = e^{2φ}δ`,
/// every rate representation equal to `(∂_iφ)I`.
///
/// CLI name `dilation` uses φ = 0.2x + 0.1y² on [−1,1]².
pub fn pure_dilation(phi: ScalarField) -> Result<Scenario, ScenarioError> {
    let sigma = ScalarField::constant(phi.chart(), 0.0);
    let mut scenario = planar_dilation_shear(phi, sigma)?;
    scenario.name = "dilation";
    scenario.summary = "flat plane deformed by an isotropic dilation exponent alone".to_string();
    Ok(scenario)
}

/// A round sphere of radius `R` produced from a flat polar patch by the
/// diagonal deformation `P = diag(R, R sinθ)`: the deformed metric is
/// `R²dθ² + R²sin²θ dφ²`, with Gaussian curvature 1/R².
///
/// The chart is θ ∈ [0.3, π − 0.3], φ ∈ [0, 2π], keeping every stencil away
/// from the sinθ = 0 degeneracies. CLI name `sphere` uses R = 2.
pub fn sphere_from_flat(radius: f64) -> Result<Scenario, ScenarioError> {
    if !radius.is_finite() || radius <= 0.0 {
        return Err(ScenarioError::InvalidRadius { value: radius });
    }
    let chart = polar_chart()?;
    let sin_theta = ScalarField::expression(&chart, "sin(theta)")?;
    let zero = ScalarField::constant(&chart, 0.0);
    let p_matrix = MatrixField::from_entries(
        &chart,
        vec![
            ScalarField::constant(&chart, radius),
            zero.clone(),
            zero,
            ScalarField::linear_combination(&[(radius, &sin_theta)]),
        ],
    );
    let reference = MatrixField::identity(&chart);
    let deformation = DeformationField::new(p_matrix, reference)?;

    let metric = Arc::new(
        move |p: &ChartPoint| -> Result<DMatrix<f64>, ScenarioError> {
            let sin = p.coordinate(0).sin();
            Ok(DMatrix::from_row_slice(
                2,
                2,
                &[radius * radius, 0.0, 0.0, radius * radius * sin * sin],
            ))
        },
    ) as MatrixProvider;

    // The only nonzero rate entry is the polar one: (L_θ)²₂ = cotθ. Both
    // rate representations agree (everything is diagonal), and a diagonal
    // rate is self-adjoint for a diagonal metric, so the compensation is the
    // rate itself.
    let diagonal_rate = |kind: RateKind| -> RateProvider {
        Arc::new(move |p: &ChartPoint| -> Result<RateTensor, ScenarioError> {
            let theta = p.coordinate(0);
            let cot = theta.cos() / theta.sin();
            Ok(RateTensor::new(
                kind,
                vec![
                    DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, cot]),
                    DMatrix::zeros(2, 2),
                ],
            ))
        })
    };

    let curvature = Arc::new(move |_: &ChartPoint| -> Result<f64, ScenarioError> {
        Ok(1.0 / (radius * radius))
    }) as ScalarProvider;

    Ok(Scenario {
        name: "sphere",
        summary: "flat polar patch deformed into a round sphere of constant curvature".to_string(),
        chart,
        deformation,
        closed: ClosedForms {
            metric: Some(metric),
            raw_rate: Some(diagonal_rate(RateKind::Raw)),
            deformed_rate: Some(diagonal_rate(RateKind::DeformedFrame)),
            compensation: Some(diagonal_rate(RateKind::Compensation)),
            gaussian_curvature: Some(curvature),
            ..ClosedForms::default()
        },
        rates_coincide: true,
    })
}

/// A genuinely non-diagonal family on the flat plane:
/// `P = [[a(x), s], [s, 1]]` with constant shear `s`, so the raw and
/// deformed-frame rates differ wherever `[L̄₁, P] ≠ 0`.
///
/// Requires 0 < |s| < 1 and a(x) > s² across the box (checked by sampling);
/// `a` must depend on the first coordinate only. CLI name `shear` uses
/// a = 1 + x, s = 1/2 on x ∈ [−0.25, 0.75], y ∈ [−1, 1].
pub fn nondiagonal_shear(a: ScalarField, s: f64) -> Result<Scenario, ScenarioError> {
    if !(s.abs() > 0.0 && s.abs() < 1.0) || !s.is_finite() {
        return Err(ScenarioError::InvalidShearParameter { value: s });
    }
    let chart = a.chart().clone();
    assert_eq!(chart.dimension(), 2, "the family is two-dimensional");

    // The validity constraint a > s² and the one-dimensionality of the
    // profile are checked on a dense sample of the box.
    let (x_lo, x_hi) = (chart.lower()[0], chart.upper()[0]);
    let (y_lo, y_hi) = (chart.lower()[1], chart.upper()[1]);
    let samples = 101;
    for i in 0..samples {
        let t = i as f64 / (samples - 1) as f64;
        let x = x_lo + t * (x_hi - x_lo);
        let mut value = f64::NAN;
        for (j, y) in [y_lo, 0.5 * (y_lo + y_hi), y_hi].iter().enumerate() {
            let here = a.eval(&chart.point(&[x, *y])?)?;
            if j == 0 {
                value = here;
            } else if (here - value).abs() > 1e-12 * value.abs().max(1.0) {
                return Err(ScenarioError::ProfileNotOneDimensional);
            }
        }
        if value <= s * s {
            return Err(ScenarioError::ProfileTooSmall {
                coordinate: x,
                value,
                bound: s * s,
            });
        }
    }

    let s_field = ScalarField::constant(&chart, s);
    let p_matrix = MatrixField::from_entries(
        &chart,
        vec![
            a.clone(),
            s_field.clone(),
            s_field,
            ScalarField::constant(&chart, 1.0),
        ],
    );
    let reference = MatrixField::identity(&chart);
    let deformation = DeformationField::new(p_matrix, reference)?;

    let metric = {
        let a = a.clone();
        Arc::new(
            move |p: &ChartPoint| -> Result<DMatrix<f64>, ScenarioError> {
                let av = a.eval(p)?;
                Ok(DMatrix::from_row_slice(
                    2,
                    2,
                    &[av * av + s * s, s * (av + 1.0), s * (av + 1.0), 1.0 + s * s],
                ))
            },
        ) as MatrixProvider
    };

    let deformation_inverse = {
        let a = a.clone();
        Arc::new(
            move |p: &ChartPoint| -> Result<DMatrix<f64>, ScenarioError> {
                let av = a.eval(p)?;
                let det = av - s * s;
                Ok(DMatrix::from_row_slice(2, 2, &[1.0, -s, -s, av]) / det)
            },
        ) as MatrixProvider
    };

    let raw_rate = {
        let a = a.clone();
        Arc::new(move |p: &ChartPoint| -> Result<RateTensor, ScenarioError> {
            let av = a.eval(p)?;
            let da = input_partial(&a, p, 0)?;
            let factor = da / (av - s * s);
            Ok(RateTensor::new(
                RateKind::Raw,
                vec![
                    DMatrix::from_row_slice(2, 2, &[factor, 0.0, -s * factor, 0.0]),
                    DMatrix::zeros(2, 2),
                ],
            ))
        }) as RateProvider
    };

    let deformed_rate = {
        let a = a.clone();
        Arc::new(move |p: &ChartPoint| -> Result<RateTensor, ScenarioError> {
            let av = a.eval(p)?;
            let da = input_partial(&a, p, 0)?;
            let factor = da / ((av - s * s) * (av - s * s));
            Ok(RateTensor::new(
                RateKind::DeformedFrame,
                vec![
                    DMatrix::from_row_slice(
                        2,
                        2,
                        &[
                            factor * av * (1.0 + s * s),
                            factor * s * (1.0 + s * s),
                            -factor * av * s * (av + 1.0),
                            -factor * s * s * (av + 1.0),
                        ],
                    ),
                    DMatrix::zeros(2, 2),
                ],
            ))
        }) as RateProvider
    };

    Ok(Scenario {
        name: "shear",
        summary: "flat plane under a non-diagonal constant shear, separating the raw and deformed-frame rates".to_string(),
        chart,
        deformation,
        closed: ClosedForms {
            metric: Some(metric),
            deformation_inverse: Some(deformation_inverse),
            raw_rate: Some(raw_rate),
            deformed_rate: Some(deformed_rate),
            ..ClosedForms::default()
        },
        rates_coincide: false,
    })
}

/// A round sphere of radius `R` conformally deformed by `P = e^φ·I`:
/// `g = e^{2φ}ḡ`, all rate representations equal to `(∂_μφ)I`, and the
/// deformed Gaussian curvature obeying `K = e^{−2φ}(1/R² − Δ̄φ)` with `Δ̄`
/// the reference-sphere Laplace–Beltrami operator.
///
/// CLI name `conformal_sphere` uses R = 1, φ = 0.1cosθ on the polar chart
/// θ ∈ [0.3, π − 0.3], φ ∈ [0, 2π].
pub fn conformal_sphere(radius: f64, varphi: ScalarField) -> Result<Scenario, ScenarioError> {
    if !radius.is_finite() || radius <= 0.0 {
        return Err(ScenarioError::InvalidRadius { value: radius });
    }
    let chart = varphi.chart().clone();
    assert_eq!(chart.dimension(), 2, "the family is two-dimensional");
    if chart.lower()[0] <= 0.0 || chart.upper()[0] >= PI {
        return Err(ScenarioError::ContainsPole {
            lower: chart.lower()[0],
            upper: chart.upper()[0],
        });
    }

    let theta_name = chart.coordinate_name(0).to_string();
    let sin_sq = ScalarField::expression(&chart, &format!("sin({theta_name})^2"))?;
    let zero = ScalarField::constant(&chart, 0.0);
    let reference = MatrixField::from_entries(
        &chart,
        vec![
            ScalarField::constant(&chart, radius * radius),
            zero.clone(),
            zero.clone(),
            ScalarField::linear_combination(&[(radius * radius, &sin_sq)]),
        ],
    );
    let p_matrix =
        MatrixField::from_entries(&chart, vec![varphi.exp(), zero.clone(), zero, varphi.exp()]);
    let deformation = DeformationField::new(p_matrix, reference.clone())?;

    let metric = {
        let varphi = varphi.clone();
        Arc::new(
            move |p: &ChartPoint| -> Result<DMatrix<f64>, ScenarioError> {
                let factor = (2.0 * varphi.eval(p)?).exp() * radius * radius;
                let sin = p.coordinate(0).sin();
                Ok(DMatrix::from_row_slice(
                    2,
                    2,
                    &[factor, 0.0, 0.0, factor * sin * sin],
                ))
            },
        ) as MatrixProvider
    };

    // All three representations are the isotropic (∂_μφ)I: an identity
    // multiple commutes with P and is self-adjoint for any metric.
    let isotropic_rate = |kind: RateKind| -> RateProvider {
        let varphi = varphi.clone();
        Arc::new(move |p: &ChartPoint| -> Result<RateTensor, ScenarioError> {
            let mats = (0..2)
                .map(|mu| Ok(DMatrix::identity(2, 2) * input_partial(&varphi, p, mu)?))
                .collect::<Result<Vec<_>, ScenarioError>>()?;
            Ok(RateTensor::new(kind, mats))
        })
    };

    // Conformal curvature law; the reference Laplacian runs symbolically
    // when the deformation exponent supports it.
    let curvature = {
        let varphi = varphi.clone();
        let reference = reference.clone();
        let scheme = if varphi.has_analytic_depth(2) {
            DifferentiationScheme::analytic()
        } else {
            DifferentiationScheme::richardson()
        };
        Arc::new(move |p: &ChartPoint| -> Result<f64, ScenarioError> {
            let lap = metric::laplace_beltrami(&reference, &varphi, p, scheme)?;
            let phi_val = varphi.eval(p)?;
            Ok((-2.0 * phi_val).exp() * (1.0 / (radius * radius) - lap))
        }) as ScalarProvider
    };

    Ok(Scenario {
        name: "conformal_sphere",
        summary: "round sphere conformally rescaled by a dilation exponent, with the matching curvature law".to_string(),
        chart,
        deformation,
        closed: ClosedForms {
            metric: Some(metric),
            raw_rate: Some(isotropic_rate(RateKind::Raw)),
            deformed_rate: Some(isotropic_rate(RateKind::DeformedFrame)),
            compensation: Some(isotropic_rate(RateKind::Compensation)),
            gaussian_curvature: Some(curvature),
            ..ClosedForms::default()
        },
        rates_coincide: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_all_pass(outcomes: &[CheckOutcome]) {
        for c in outcomes {
            assert!(
                c.passed,
                "{}: residual {:.3e} exceeds {:.3e}",
                c.name, c.max_residual, c.tolerance
            );
        }
    }

    #[test]
    fn builtin_names_round_trip() {
        for name in BUILTIN_NAMES {
            let scenario = builtin(name).unwrap();
            assert_eq!(scenario.name(), name);
            assert!(!scenario.summary().is_empty());
        }
        assert!(matches!(
            builtin("torus"),
            Err(ScenarioError::UnknownScenario { .. })
        ));
    }

    #[test]
    fn planar_pipeline_matches_closed_forms() {
        let scenario = builtin("planar").unwrap();
        let outcomes = scenario
            .verify(21, DifferentiationScheme::analytic())
            .unwrap();
        let names: Vec<&str> = outcomes.iter().map(|c| c.name.as_str()).collect();
        assert!(names.contains(&"deformed_metric"));
        assert!(names.contains(&"levi_civita_connection"));
        assert!(names.contains(&"total_connection"));
        assert!(names.contains(&"raw_rate"));
        assert!(names.contains(&"raw_rate_split"));
        assert!(names.contains(&"deformed_rate"));
        assert!(names.contains(&"compensation"));
        assert!(names.contains(&"raw_deformed_coincide"));
        assert_all_pass(&outcomes);
    }

    #[test]
    fn dilation_pipeline_matches_closed_forms() {
        let scenario = builtin("dilation").unwrap();
        assert_eq!(scenario.name(), "dilation");
        let outcomes = scenario
            .verify(11, DifferentiationScheme::analytic())
            .unwrap();
        assert_all_pass(&outcomes);
    }

    #[test]
    fn sphere_pipeline_matches_closed_forms() {
        let scenario = builtin("sphere").unwrap();
        let outcomes = scenario
            .verify(11, DifferentiationScheme::analytic())
            .unwrap();
        let k = outcomes
            .iter()
            .find(|c| c.name == "gaussian_curvature")
            .unwrap();
        assert!(k.passed, "curvature residual {:.3e}", k.max_residual);
        assert_all_pass(&outcomes);
    }

    #[test]
    fn shear_pipeline_matches_closed_forms_and_separates_rates() {
        let scenario = builtin("shear").unwrap();
        assert!(!scenario.rates_coincide());
        let outcomes = scenario
            .verify(11, DifferentiationScheme::analytic())
            .unwrap();
        let names: Vec<&str> = outcomes.iter().map(|c| c.name.as_str()).collect();
        assert!(names.contains(&"deformation_inverse"));
        assert!(names.contains(&"raw_deformed_separate"));
        assert_all_pass(&outcomes);
    }

    #[test]
    fn conformal_pipeline_matches_curvature_law() {
        let scenario = builtin("conformal_sphere").unwrap();
        let outcomes = scenario
            .verify(11, DifferentiationScheme::analytic())
            .unwrap();
        let k = outcomes
            .iter()
            .find(|c| c.name == "gaussian_curvature")
            .unwrap();
        assert!(k.passed, "curvature residual {:.3e}", k.max_residual);
        assert_all_pass(&outcomes);
    }

    #[test]
    fn verify_under_finite_difference_schemes() {
        let scenario = builtin("planar").unwrap();
        assert_all_pass(
            &scenario
                .verify(5, DifferentiationScheme::richardson())
                .unwrap(),
        );
        assert_all_pass(
            &scenario
                .verify(5, DifferentiationScheme::central())
                .unwrap(),
        );
    }

    #[test]
    fn trivial_exponents_leave_the_plane_flat() {
        let chart = planar_chart().unwrap();
        let zero = ScalarField::constant(&chart, 0.0);
        let scenario = planar_dilation_shear(zero.clone(), zero).unwrap();
        let p = chart.point(&[0.4, -0.2]).unwrap();
        let g = deformation::deformed_metric_field(scenario.deformation())
            .eval(&p)
            .unwrap();
        assert_eq!(g, DMatrix::identity(2, 2));
        let raw = (scenario.closed_forms().raw_rate.as_ref().unwrap())(&p).unwrap();
        assert_eq!(raw.max_abs(), 0.0);
    }

    #[test]
    fn shear_spot_values() {
        // At a = 1, a' = 1, s = 1/2 (x = 0 on the built-in profile) the two
        // rate representations take their tabulated values.
        let scenario = builtin("shear").unwrap();
        let p = scenario.chart().point(&[0.0, 0.3]).unwrap();
        let raw = (scenario.closed_forms().raw_rate.as_ref().unwrap())(&p).unwrap();
        let expected_raw = DMatrix::from_row_slice(2, 2, &[4.0 / 3.0, 0.0, -2.0 / 3.0, 0.0]);
        assert!((raw.direction(0) - expected_raw).amax() < 1e-14);
        assert!(raw.direction(1).amax() == 0.0);

        let deformed = (scenario.closed_forms().deformed_rate.as_ref().unwrap())(&p).unwrap();
        let expected_deformed =
            DMatrix::from_row_slice(2, 2, &[20.0 / 9.0, 10.0 / 9.0, -16.0 / 9.0, -8.0 / 9.0]);
        assert!((deformed.direction(0) - expected_deformed).amax() < 1e-14);
    }

    #[test]
    fn shear_constructor_rejects_bad_parameters() {
        let chart = Chart::new(&["x", "y"], &[(-0.25, 0.75), (-1.0, 1.0)]).unwrap();
        let a = ScalarField::expression(&chart, "1 + x").unwrap();
        assert!(matches!(
            nondiagonal_shear(a.clone(), 0.0),
            Err(ScenarioError::InvalidShearParameter { .. })
        ));
        assert!(matches!(
            nondiagonal_shear(a.clone(), 1.2),
            Err(ScenarioError::InvalidShearParameter { .. })
        ));

        let small = ScalarField::constant(&chart, 0.2);
        assert!(matches!(
            nondiagonal_shear(small, 0.5),
            Err(ScenarioError::ProfileTooSmall { .. })
        ));

        let wavy = ScalarField::expression(&chart, "1 + x + 0.01*y").unwrap();
        assert!(matches!(
            nondiagonal_shear(wavy, 0.5),
            Err(ScenarioError::ProfileNotOneDimensional)
        ));
    }

    #[test]
    fn sphere_constructor_rejects_bad_radius() {
        assert!(matches!(
            sphere_from_flat(0.0),
            Err(ScenarioError::InvalidRadius { .. })
        ));
        assert!(matches!(
            sphere_from_flat(-2.0),
            Err(ScenarioError::InvalidRadius { .. })
        ));
        assert!(matches!(
            sphere_from_flat(f64::NAN),
            Err(ScenarioError::InvalidRadius { .. })
        ));
    }

    #[test]
    fn conformal_constructor_rejects_poles() {
        let chart = Chart::new(&["theta", "phi"], &[(0.0, PI), (0.0, 2.0 * PI)]).unwrap();
        let varphi = ScalarField::expression(&chart, "0.1*cos(theta)").unwrap();
        assert!(matches!(
            conformal_sphere(1.0, varphi),
            Err(ScenarioError::ContainsPole { .. })
        ));
    }

    #[test]
    fn equator_rate_vanishes() {
        let scenario = sphere_from_flat(1.0).unwrap();
        let p = scenario.chart().point(&[PI / 2.0, 1.0]).unwrap();
        let raw = (scenario.closed_forms().raw_rate.as_ref().unwrap())(&p).unwrap();
        assert!(raw.max_abs() < 1e-15, "cot vanishes on the equator");
    }

    #[test]
    fn constant_exponent_is_a_homothety() {
        // A constant dilation exponent c rescales the sphere: the rates
        // vanish and the curvature drops by e^{2c}.
        let chart = polar_chart().unwrap();
        let c = 0.4;
        let varphi = ScalarField::constant(&chart, c);
        let scenario = conformal_sphere(1.0, varphi).unwrap();
        let p = chart.point(&[1.1, 2.0]).unwrap();

        let raw = (scenario.closed_forms().raw_rate.as_ref().unwrap())(&p).unwrap();
        assert_eq!(raw.max_abs(), 0.0);

        let k_closed = (scenario.closed_forms().gaussian_curvature.as_ref().unwrap())(&p).unwrap();
        assert!((k_closed - (-2.0 * c).exp()).abs() < 1e-14);

        let g_field = deformation::deformed_metric_field(scenario.deformation());
        let k_pipe =
            metric::gaussian_curvature(&g_field, &p, DifferentiationScheme::analytic()).unwrap();
        assert!((k_pipe - (-2.0 * c).exp()).abs() < 1e-8);
    }
}
