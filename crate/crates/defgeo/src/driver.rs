//! Turns declarative configs into swept, verified reports: the engine
//! behind the command-line verbs.
//!
//! Error classification maps onto process exit codes:
//! 0 — success; 1 — an identity check failed (the report still exists);
//! 2 — [`RunError::Config`]; 3 — [`RunError::Numerical`]. Use
//! [`exit_code`] to apply the mapping.

use nalgebra::DMatrix;

use crate::chart::{Chart, ChartError};
use crate::config::{ChartSection, GeometryConfig, MetricDocument, Quantity, SchemeSection};
use crate::connection::{self, AffineConnection, NonmetricityTensor};
use crate::deformation::{self, DeformationField, RateTensor};
use crate::diff::{self, DifferentiationScheme};
use crate::exprlang::EvalError;
use crate::fields::{MatrixField, ScalarField};
use crate::metric::{self, MetricAtPoint, MetricField};
use crate::report::{sha256_hex, IdentityCheck, PointRecord, Provenance, Report};
use crate::scenarios;

/// Recoveries whose metric pencil is conditioned worse than this abort.
pub const RECOVERY_CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    /// The inputs are unusable: parse failures, shape mismatches, invalid
    /// parameters, or a deformation that fails validation.
    #[error("configuration error: {message}")]
    Config { message: String },
    /// The inputs were well-formed but a computation failed at a point.
    #[error("numerical error: {message}")]
    Numerical { message: String },
}

impl RunError {
    /// Classifies a message as an input problem (exit code 2).
    pub fn config(message: impl Into<String>) -> RunError {
        RunError::Config {
            message: message.into(),
        }
    }

    /// Classifies a message as a computation failure (exit code 3).
    pub fn numerical(message: impl Into<String>) -> RunError {
        RunError::Numerical {
            message: message.into(),
        }
    }
}

/// Process exit code for a finished run: reports with failed checks exit 1,
/// so CI can gate on identities without parsing output.
pub fn exit_code(outcome: &Result<Report, RunError>) -> i32 {
    match outcome {
        Ok(report) if report.summary.passed => 0,
        Ok(_) => 1,
        Err(RunError::Config { .. }) => 2,
        Err(RunError::Numerical { .. }) => 3,
    }
}

fn build_chart(section: &ChartSection) -> Result<Chart, RunError> {
    let n = section.coordinates.len();
    if section.lower.len() != n || section.upper.len() != n {
        return Err(RunError::config(format!(
            "chart has {n} coordinates but {} lower and {} upper bounds",
            section.lower.len(),
            section.upper.len()
        )));
    }
    let names: Vec<&str> = section.coordinates.iter().map(String::as_str).collect();
    let intervals: Vec<(f64, f64)> = section
        .lower
        .iter()
        .zip(&section.upper)
        .map(|(lo, hi)| (*lo, *hi))
        .collect();
    let mut chart = Chart::new(&names, &intervals).map_err(chart_to_config)?;
    for sub in &section.excluded {
        chart = chart
            .exclude(&sub.lower, &sub.upper)
            .map_err(chart_to_config)?;
    }
    Ok(chart)
}

fn chart_to_config(err: ChartError) -> RunError {
    RunError::config(format!("invalid chart: {err}"))
}

fn build_matrix_field(
    chart: &Chart,
    rows: &[Vec<String>],
    what: &str,
) -> Result<MatrixField, RunError> {
    let n = chart.dimension();
    if rows.len() != n || rows.iter().any(|row| row.len() != n) {
        return Err(RunError::config(format!(
            "{what} must be a {n}x{n} array of expressions"
        )));
    }
    let mut entries = Vec::with_capacity(n * n);
    for (i, row) in rows.iter().enumerate() {
        for (j, src) in row.iter().enumerate() {
            let field = ScalarField::expression(chart, src)
                .map_err(|err| RunError::config(format!("{what}[{i}][{j}] {src:?}: {err}")))?;
            entries.push(field);
        }
    }
    Ok(MatrixField::from_entries(chart, entries))
}

/// Builds the differentiation scheme a `[scheme]` section asks for,
/// rejecting parameters that do not apply to the chosen mode.
pub fn scheme_from_section(section: &SchemeSection) -> Result<DifferentiationScheme, RunError> {
    let scheme = match section.mode.as_str() {
        "analytic" => {
            if section.step.is_some() || section.levels.is_some() {
                return Err(RunError::config(
                    "scheme.step and scheme.levels apply only to finite-difference modes",
                ));
            }
            DifferentiationScheme::Analytic
        }
        "central" => {
            if section.levels.is_some() {
                return Err(RunError::config(
                    "scheme.levels applies only to the richardson mode",
                ));
            }
            DifferentiationScheme::CentralDifference {
                step: section.step.unwrap_or(diff::DEFAULT_STEP),
            }
        }
        "richardson" => DifferentiationScheme::Richardson {
            step: section.step.unwrap_or(diff::DEFAULT_STEP),
            levels: section.levels.unwrap_or(diff::DEFAULT_LEVELS),
        },
        other => {
            return Err(RunError::config(format!(
                "unknown scheme mode {other:?}; expected analytic, central, or richardson"
            )))
        }
    };
    scheme
        .validate()
        .map_err(|err| RunError::config(err.to_string()))?;
    Ok(scheme)
}

fn numerical_at(what: &str, coords: &[f64], err: impl std::fmt::Display) -> RunError {
    RunError::numerical(format!("computing {what} at {coords:?}: {err}"))
}

fn push_matrix(values: &mut Vec<f64>, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            values.push(m[(i, j)]);
        }
    }
}

/// Sweeps the configured grid, computing every requested quantity at each
/// point through the generic pipeline, and verifying the structural
/// identities the requested quantities expose.
pub fn run_evaluate(config: &GeometryConfig) -> Result<Report, RunError> {
    let chart = build_chart(&config.chart)?;
    let n = chart.dimension();
    let scheme = scheme_from_section(&config.scheme)?;

    if config.output.quantities.is_empty() {
        return Err(RunError::config("output.quantities must not be empty"));
    }
    if config.output.resolution == 0 {
        return Err(RunError::config("output.resolution must be positive"));
    }
    let selected: Vec<Quantity> = Quantity::ALL
        .iter()
        .copied()
        .filter(|q| config.output.quantities.contains(q))
        .collect();
    if selected.contains(&Quantity::GaussianCurvature) && n != 2 {
        return Err(RunError::config(
            "K (Gaussian curvature) is defined only on two-dimensional charts",
        ));
    }

    let gbar_field = build_matrix_field(&chart, &config.reference_metric.rows, "reference_metric")?;

    let (deformation, g_field, recovered) =
        match (&config.deformation.rows, &config.deformation.recover) {
            (Some(rows), None) => {
                let p_field = build_matrix_field(&chart, rows, "deformation")?;
                let deformation =
                    DeformationField::new(p_field, gbar_field.clone()).map_err(|err| {
                        RunError::config(format!("deformation validation failed: {err}"))
                    })?;
                let g_field = deformation::deformed_metric_field(&deformation);
                (deformation, g_field, false)
            }
            (None, Some(target)) => {
                let g_field = build_matrix_field(&chart, &target.rows, "deformation.recover")?;
                let p_field = MatrixField::native(&chart, "recovered deformation", {
                    let gbar = gbar_field.clone();
                    let g = g_field.clone();
                    move |coords: &[f64]| -> Result<DMatrix<f64>, EvalError> {
                        recover_at(&gbar, &g, coords).map_err(|err| EvalError {
                            expression: "recovered deformation".to_string(),
                            point: coords.to_vec(),
                            message: err.to_string(),
                        })
                    }
                });
                let deformation =
                    DeformationField::new(p_field, gbar_field.clone()).map_err(|err| {
                        RunError::config(format!("deformation recovery failed: {err}"))
                    })?;
                (deformation, g_field, true)
            }
            _ => {
                return Err(RunError::config(
                    "deformation must set exactly one of `rows` or `recover`",
                ))
            }
        };

    if recovered
        && scheme == DifferentiationScheme::Analytic
        && selected.iter().any(Quantity::needs_deformation_derivatives)
    {
        return Err(RunError::config(
            "a recovered deformation has no exact derivatives; rate and connection \
             quantities require scheme.mode = \"central\" or \"richardson\"",
        ));
    }

    let mut columns: Vec<String> = chart
        .coordinate_names()
        .iter()
        .map(|s| s.to_string())
        .collect();
    for q in &selected {
        columns.extend(q.column_names(n));
    }
    if recovered {
        for i in 0..n {
            for j in 0..n {
                columns.push(format!("P_{i}_{j}"));
            }
        }
    }

    let needs_rates = selected.iter().any(Quantity::needs_deformation_derivatives);

    let mut purity_defect: f64 = 0.0;
    let mut lambda_self_adjoint: Option<f64> = None;
    let mut deviation_vs_compensation: Option<f64> = None;
    let mut nonmetricity_identity: Option<f64> = None;
    let mut recovery_roundtrip: Option<f64> = None;

    let grid = chart.grid(config.output.resolution);
    let mut points = Vec::with_capacity(grid.len());
    for p in &grid {
        let coords = p.coordinates();
        let mut values: Vec<f64> = Vec::with_capacity(columns.len() - n);

        // Shared intermediates, each computed at most once per point.
        let p_at = deformation
            .eval(p)
            .map_err(|err| numerical_at("P", coords, err))?;
        let mut rate_chain: Option<(RateTensor, RateTensor, RateTensor, MetricAtPoint)> = None;
        let mut total: Option<AffineConnection> = None;

        if needs_rates {
            let raw = deformation::raw_rate(&deformation, &gbar_field, p, scheme)
                .map_err(|err| numerical_at("Lbar", coords, err))?;
            let deformed = deformation::deformed_frame_rate(&p_at, &raw)
                .map_err(|err| numerical_at("L", coords, err))?;
            let g_at =
                metric::metric_at(&g_field, p).map_err(|err| numerical_at("g", coords, err))?;
            let lambda = connection::sym_g(&deformed, &g_at)
                .map_err(|err| numerical_at("Lambda", coords, err))?;

            let defect = connection::self_adjointness_defect(&lambda, &g_at);
            lambda_self_adjoint = Some(lambda_self_adjoint.unwrap_or(0.0).max(defect));

            if selected.iter().any(|q| {
                matches!(
                    q,
                    Quantity::TotalConnection
                        | Quantity::Deviation
                        | Quantity::Torsion
                        | Quantity::Nonmetricity
                )
            }) {
                let gamma = connection::total_connection(&g_field, &lambda, p, scheme)
                    .map_err(|err| numerical_at("Gamma", coords, err))?;
                total = Some(gamma);
            }
            rate_chain = Some((raw, deformed, lambda, g_at));
        }

        // ḡP must stay symmetric: the pointwise pure-deformation invariant.
        {
            let gbar_at = metric::metric_at(&gbar_field, p)
                .map_err(|err| numerical_at("gbar", coords, err))?;
            let lowered = gbar_at.matrix() * &p_at;
            let defect =
                (&lowered - lowered.transpose()).amax() / lowered.amax().max(f64::MIN_POSITIVE);
            purity_defect = purity_defect.max(defect);
        }

        for q in &selected {
            match q {
                Quantity::Metric => {
                    let g = g_field
                        .eval(p)
                        .map_err(|err| numerical_at("g", coords, err))?;
                    push_matrix(&mut values, &g);
                }
                Quantity::ReferenceConnection => {
                    let gamma = metric::christoffel(&gbar_field, p, scheme)
                        .map_err(|err| numerical_at("gammabar", coords, err))?;
                    values.extend_from_slice(gamma.flatten());
                }
                Quantity::LeviCivita => {
                    let gamma = metric::christoffel(&g_field, p, scheme)
                        .map_err(|err| numerical_at("gamma0", coords, err))?;
                    values.extend_from_slice(gamma.flatten());
                }
                Quantity::RawRate => {
                    let (raw, _, _, _) = rate_chain.as_ref().expect("rates computed");
                    values.extend_from_slice(&raw.flatten());
                }
                Quantity::DeformedRate => {
                    let (_, deformed, _, _) = rate_chain.as_ref().expect("rates computed");
                    values.extend_from_slice(&deformed.flatten());
                }
                Quantity::Compensation => {
                    let (_, _, lambda, _) = rate_chain.as_ref().expect("rates computed");
                    values.extend_from_slice(&lambda.flatten());
                }
                Quantity::TotalConnection => {
                    let gamma = total.as_ref().expect("total connection computed");
                    values.extend_from_slice(gamma.coefficients().flatten());
                }
                Quantity::Deviation => {
                    let gamma = total.as_ref().expect("total connection computed");
                    let c = connection::deviation(gamma, &g_field, p, scheme)
                        .map_err(|err| numerical_at("C", coords, err))?;
                    let (_, _, lambda, _) = rate_chain.as_ref().expect("rates computed");
                    let mut defect: f64 = 0.0;
                    for rho in 0..n {
                        for mu in 0..n {
                            for nu in 0..n {
                                defect = defect
                                    .max((c.get(rho, mu, nu) - lambda.get(rho, mu, nu)).abs());
                            }
                        }
                    }
                    deviation_vs_compensation =
                        Some(deviation_vs_compensation.unwrap_or(0.0).max(defect));
                    values.extend_from_slice(c.flatten());
                }
                Quantity::Torsion => {
                    let gamma = total.as_ref().expect("total connection computed");
                    values.extend_from_slice(connection::torsion(gamma).flatten());
                }
                Quantity::Nonmetricity => {
                    let gamma = total.as_ref().expect("total connection computed");
                    let nabla = connection::covariant_derivative_metric(gamma, &g_field, p, scheme)
                        .map_err(|err| numerical_at("nonmetricity", coords, err))?;
                    let (_, _, lambda, g_at) = rate_chain.as_ref().expect("rates computed");
                    let gm = g_at.matrix();
                    let mut defect: f64 = 0.0;
                    for mu in 0..n {
                        for nu in 0..n {
                            for rho in 0..n {
                                let mut residual = nabla.get(mu, nu, rho);
                                for sigma in 0..n {
                                    residual += gm[(sigma, rho)] * lambda.get(sigma, mu, nu);
                                    residual += gm[(nu, sigma)] * lambda.get(sigma, mu, rho);
                                }
                                defect = defect.max(residual.abs());
                            }
                        }
                    }
                    nonmetricity_identity = Some(nonmetricity_identity.unwrap_or(0.0).max(defect));
                    let q_tensor = NonmetricityTensor::from_covariant_derivative(&nabla);
                    values.extend_from_slice(q_tensor.flatten());
                }
                Quantity::GaussianCurvature => {
                    let k = metric::gaussian_curvature(&g_field, p, scheme)
                        .map_err(|err| numerical_at("K", coords, err))?;
                    values.push(k);
                }
            }
        }

        if recovered {
            push_matrix(&mut values, &p_at);
            let gbar_at = metric::metric_at(&gbar_field, p)
                .map_err(|err| numerical_at("gbar", coords, err))?;
            let g_at =
                metric::metric_at(&g_field, p).map_err(|err| numerical_at("g", coords, err))?;
            let reconstructed = p_at.transpose() * gbar_at.matrix() * &p_at;
            let rel = (&reconstructed - g_at.matrix()).amax()
                / g_at.matrix().amax().max(f64::MIN_POSITIVE);
            recovery_roundtrip = Some(recovery_roundtrip.unwrap_or(0.0).max(rel));
        }

        points.push(PointRecord {
            coordinates: coords.to_vec(),
            values,
        });
    }

    let mut checks = vec![IdentityCheck::new("pure_deformation", 1e-10, purity_defect)];
    if let Some(defect) = lambda_self_adjoint {
        checks.push(IdentityCheck::new(
            "compensation_self_adjoint",
            1e-10,
            defect,
        ));
    }
    if let Some(defect) = deviation_vs_compensation {
        checks.push(IdentityCheck::new(
            "deviation_equals_compensation",
            1e-10,
            defect,
        ));
    }
    if let Some(defect) = nonmetricity_identity {
        checks.push(IdentityCheck::new("nonmetricity_identity", 1e-8, defect));
    }
    if let Some(defect) = recovery_roundtrip {
        checks.push(IdentityCheck::new("recovery_roundtrip", 1e-9, defect));
    }

    let provenance = Provenance::new(sha256_hex(&config.to_canonical_toml()), scheme.name());
    Ok(Report::new(provenance, columns, points, checks))
}

fn recover_at(
    gbar: &MetricField,
    g: &MetricField,
    coords: &[f64],
) -> Result<DMatrix<f64>, deformation::DeformationError> {
    let point = gbar
        .chart()
        .point(coords)
        .expect("recovery runs on validated stencil points");
    let gbar_at = metric::metric_at(gbar, &point)?;
    let g_at = metric::metric_at(g, &point)?;
    deformation::recover_deformation(&gbar_at, &g_at)
}

/// Runs the named built-in scenario's closed-form comparisons on a
/// `resolution` per axis grid.
pub fn run_verify(
    name: &str,
    resolution: usize,
    scheme: DifferentiationScheme,
) -> Result<Report, RunError> {
    if resolution == 0 {
        return Err(RunError::config("resolution must be positive"));
    }
    scheme
        .validate()
        .map_err(|err| RunError::config(err.to_string()))?;
    let scenario = scenarios::builtin(name).map_err(|err| RunError::config(err.to_string()))?;
    let outcomes = scenario
        .verify(resolution, scheme)
        .map_err(|err| RunError::numerical(err.to_string()))?;
    let checks = outcomes
        .into_iter()
        .map(|c| IdentityCheck::new(c.name, c.tolerance, c.max_residual))
        .collect();

    let descriptor = format!("verify scenario={name} resolution={resolution} scheme={scheme:?}");
    let provenance = Provenance::new(sha256_hex(&descriptor), scheme.name());
    Ok(Report::new(provenance, Vec::new(), Vec::new(), checks))
}

/// Recovers the deformation pointwise from two metric documents sharing a
/// chart, reporting P and the reconstruction residual ‖PᵀḡP − g‖∞ per point.
pub fn run_recover(
    gbar_doc: &MetricDocument,
    g_doc: &MetricDocument,
    grid: usize,
) -> Result<Report, RunError> {
    if grid == 0 {
        return Err(RunError::config("grid must be positive"));
    }
    if gbar_doc.chart != g_doc.chart {
        return Err(RunError::config(
            "the two metric documents must share a chart",
        ));
    }
    let chart = build_chart(&gbar_doc.chart)?;
    let n = chart.dimension();
    let gbar_field = build_matrix_field(&chart, &gbar_doc.metric.rows, "reference metric")?;
    let g_field = build_matrix_field(&chart, &g_doc.metric.rows, "deformed metric")?;

    let mut columns: Vec<String> = chart
        .coordinate_names()
        .iter()
        .map(|s| s.to_string())
        .collect();
    for i in 0..n {
        for j in 0..n {
            columns.push(format!("P_{i}_{j}"));
        }
    }
    columns.push("roundtrip_residual".to_string());

    let mut worst_relative: f64 = 0.0;
    let mut points = Vec::new();
    for p in chart.grid(grid) {
        let coords = p.coordinates();
        let gbar_at = metric::metric_at(&gbar_field, &p)
            .map_err(|err| numerical_at("reference metric", coords, err))?;
        let g_at = metric::metric_at(&g_field, &p)
            .map_err(|err| numerical_at("deformed metric", coords, err))?;

        // The pencil ḡ⁻¹g has real positive spectrum; its spread bounds the
        // conditioning of the square-root extraction.
        let pencil = gbar_at.inverse() * g_at.matrix();
        let magnitudes: Vec<f64> = pencil
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .collect();
        let max = magnitudes.iter().cloned().fold(0.0, f64::max);
        let min = magnitudes.iter().cloned().fold(f64::INFINITY, f64::min);
        let condition = max / min.max(f64::MIN_POSITIVE);
        if condition > RECOVERY_CONDITION_LIMIT {
            return Err(RunError::numerical(format!(
                "recovery at {coords:?} is ill-conditioned: \
                 metric pencil condition {condition:.3e} exceeds {RECOVERY_CONDITION_LIMIT:.0e}"
            )));
        }

        let p_mat = deformation::recover_deformation(&gbar_at, &g_at)
            .map_err(|err| numerical_at("P", coords, err))?;
        let reconstructed = p_mat.transpose() * gbar_at.matrix() * &p_mat;
        let residual = (&reconstructed - g_at.matrix()).amax();
        worst_relative = worst_relative.max(residual / g_at.matrix().amax().max(f64::MIN_POSITIVE));

        let mut values = Vec::with_capacity(n * n + 1);
        push_matrix(&mut values, &p_mat);
        values.push(residual);
        points.push(PointRecord {
            coordinates: coords.to_vec(),
            values,
        });
    }

    let checks = vec![IdentityCheck::new(
        "recovery_roundtrip",
        1e-9,
        worst_relative,
    )];
    let descriptor = format!(
        "recover grid={grid}\n--- reference ---\n{}\n--- deformed ---\n{}",
        gbar_doc.to_canonical_toml(),
        g_doc.to_canonical_toml()
    );
    let provenance = Provenance::new(sha256_hex(&descriptor), "n/a");
    Ok(Report::new(provenance, columns, points, checks))
}

/// One line per built-in scenario: `name: summary`.
pub fn list_scenarios() -> Result<String, RunError> {
    let scenarios =
        scenarios::builtin_scenarios().map_err(|err| RunError::numerical(err.to_string()))?;
    let mut out = String::new();
    for s in &scenarios {
        out.push_str(&format!("{}: {}\n", s.name(), s.summary()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{DeformationSection, MatrixSection, OutputSection};

    fn rows(entries: &[[&str; 2]; 2]) -> Vec<Vec<String>> {
        entries
            .iter()
            .map(|row| row.iter().map(|s| s.to_string()).collect())
            .collect()
    }

    fn base_config() -> GeometryConfig {
        GeometryConfig {
            chart: ChartSection {
                coordinates: vec!["x".into(), "y".into()],
                lower: vec![-0.5, -1.0],
                upper: vec![0.5, 1.0],
                excluded: vec![],
            },
            reference_metric: MatrixSection {
                rows: rows(&[["1", "0"], ["0", "1"]]),
            },
            deformation: DeformationSection {
                rows: Some(rows(&[["1", "0"], ["0", "1"]])),
                recover: None,
            },
            scheme: SchemeSection::default(),
            output: OutputSection {
                quantities: vec![
                    Quantity::Compensation,
                    Quantity::Torsion,
                    Quantity::Nonmetricity,
                ],
                resolution: 3,
            },
        }
    }

    fn column_index(report: &Report, name: &str) -> usize {
        report
            .columns
            .iter()
            .position(|c| c == name)
            .unwrap_or_else(|| panic!("missing column {name}"))
    }

    fn value_at(report: &Report, record: usize, column: &str) -> f64 {
        let idx = column_index(report, column);
        let record = &report.points[record];
        if idx < record.coordinates.len() {
            record.coordinates[idx]
        } else {
            record.values[idx - record.coordinates.len()]
        }
    }

    #[test]
    fn identity_deformation_collapses_everything() {
        let report = run_evaluate(&base_config()).unwrap();
        assert_eq!(report.points.len(), 9);
        assert!(report.summary.passed);
        for record in &report.points {
            for value in &record.values {
                assert!(value.abs() <= 1e-10, "expected collapse, got {value}");
            }
        }
        assert_eq!(exit_code(&Ok(report)), 0);
    }

    #[test]
    fn shear_family_spot_values_via_config() {
        let mut config = base_config();
        config.deformation.rows = Some(rows(&[["1 + x", "0.5"], ["0.5", "1"]]));
        config.output.quantities = vec![Quantity::RawRate, Quantity::DeformedRate];
        let report = run_evaluate(&config).unwrap();
        assert!(report.summary.passed);

        // Resolution 3 on x ∈ [−0.5, 0.5] puts the middle column at x = 0,
        // where (a, a', s) = (1, 1, 1/2).
        let middle = report
            .points
            .iter()
            .position(|r| r.coordinates[0] == 0.0 && r.coordinates[1] == 0.0)
            .expect("grid contains the origin");
        let checks = [
            ("Lbar_0_0_0", 4.0 / 3.0),
            ("Lbar_0_0_1", 0.0),
            ("Lbar_1_0_0", -2.0 / 3.0),
            ("Lbar_1_0_1", 0.0),
            ("Lbar_0_1_0", 0.0),
            ("L_0_0_0", 20.0 / 9.0),
            ("L_0_0_1", 10.0 / 9.0),
            ("L_1_0_0", -16.0 / 9.0),
            ("L_1_0_1", -8.0 / 9.0),
            ("L_1_1_1", 0.0),
        ];
        for (column, expected) in checks {
            let got = value_at(&report, middle, column);
            assert!(
                (got - expected).abs() < 1e-9,
                "{column}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn recovery_directive_reports_the_deformation() {
        let mut config = base_config();
        config.deformation = DeformationSection {
            rows: None,
            recover: Some(MatrixSection {
                rows: rows(&[["1.25", "1"], ["1", "1.25"]]),
            }),
        };
        config.output.quantities = vec![Quantity::Metric];
        let report = run_evaluate(&config).unwrap();
        assert!(report.summary.passed);
        assert!(report
            .summary
            .checks
            .iter()
            .any(|c| c.name == "recovery_roundtrip"));

        for record in 0..report.points.len() {
            assert!((value_at(&report, record, "P_0_0") - 1.0).abs() < 1e-9);
            assert!((value_at(&report, record, "P_0_1") - 0.5).abs() < 1e-9);
            assert!((value_at(&report, record, "P_1_0") - 0.5).abs() < 1e-9);
            assert!((value_at(&report, record, "P_1_1") - 1.0).abs() < 1e-9);
            assert!((value_at(&report, record, "g_0_0") - 1.25).abs() < 1e-12);
        }
    }

    #[test]
    fn recovery_directive_rejects_analytic_rates() {
        let mut config = base_config();
        config.deformation = DeformationSection {
            rows: None,
            recover: Some(MatrixSection {
                rows: rows(&[["1.25", "1"], ["1", "1.25"]]),
            }),
        };
        config.output.quantities = vec![Quantity::RawRate];
        let err = run_evaluate(&config).unwrap_err();
        assert!(matches!(err, RunError::Config { .. }), "{err}");

        // The same request under a finite-difference scheme is legal.
        config.scheme.mode = "richardson".to_string();
        let report = run_evaluate(&config).unwrap();
        assert!(report.summary.passed);
        // Constant P means every rate vanishes.
        for record in &report.points {
            let start = report.columns.len() - record.coordinates.len() - 4; // before the P block
            for value in &record.values[..start] {
                assert!(value.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn config_errors_are_classified() {
        // Both deformation keys.
        let mut config = base_config();
        config.deformation.recover = Some(MatrixSection {
            rows: rows(&[["1", "0"], ["0", "1"]]),
        });
        assert_eq!(exit_code(&run_evaluate(&config)), 2);

        // Neither deformation key.
        let mut config = base_config();
        config.deformation.rows = None;
        assert_eq!(exit_code(&run_evaluate(&config)), 2);

        // Bad scheme mode.
        let mut config = base_config();
        config.scheme.mode = "spectral".to_string();
        assert_eq!(exit_code(&run_evaluate(&config)), 2);

        // Step with analytic mode.
        let mut config = base_config();
        config.scheme.step = Some(1e-4);
        assert_eq!(exit_code(&run_evaluate(&config)), 2);

        // Empty quantities, zero resolution.
        let mut config = base_config();
        config.output.quantities = vec![];
        assert_eq!(exit_code(&run_evaluate(&config)), 2);
        let mut config = base_config();
        config.output.resolution = 0;
        assert_eq!(exit_code(&run_evaluate(&config)), 2);

        // Malformed expression.
        let mut config = base_config();
        config.reference_metric.rows[0][0] = "1 +".to_string();
        assert_eq!(exit_code(&run_evaluate(&config)), 2);

        // Wrong matrix shape.
        let mut config = base_config();
        config.reference_metric.rows = vec![vec!["1".to_string()]];
        assert_eq!(exit_code(&run_evaluate(&config)), 2);

        // Deformation that is not pure (ḡP asymmetric).
        let mut config = base_config();
        config.deformation.rows = Some(rows(&[["1", "0.5"], ["-0.5", "1"]]));
        let err = run_evaluate(&config).unwrap_err();
        assert!(matches!(err, RunError::Config { .. }), "{err}");
    }

    #[test]
    fn verify_builtin_scenarios() {
        let report = run_verify("sphere", 5, DifferentiationScheme::analytic()).unwrap();
        assert!(report.summary.passed);
        assert!(report.points.is_empty());
        assert!(report
            .summary
            .checks
            .iter()
            .any(|c| c.name == "gaussian_curvature"));
        assert_eq!(exit_code(&Ok(report)), 0);

        // The shear family's rate separation is encoded as a passing check.
        let report = run_verify("shear", 5, DifferentiationScheme::analytic()).unwrap();
        assert!(report.summary.passed);
        assert!(report
            .summary
            .checks
            .iter()
            .any(|c| c.name == "raw_deformed_separate"));

        assert_eq!(
            exit_code(&run_verify("nope", 5, DifferentiationScheme::analytic())),
            2
        );
        assert_eq!(
            exit_code(&run_verify("sphere", 0, DifferentiationScheme::analytic())),
            2
        );
    }

    fn metric_document(rows_in: &[[&str; 2]; 2]) -> MetricDocument {
        MetricDocument {
            chart: ChartSection {
                coordinates: vec!["theta".into(), "phi".into()],
                lower: vec![0.3, 0.0],
                upper: vec![std::f64::consts::PI - 0.3, 6.2],
                excluded: vec![],
            },
            metric: MatrixSection {
                rows: rows(rows_in),
            },
        }
    }

    #[test]
    fn recover_between_documents() {
        // Identical documents recover the identity.
        let flat = metric_document(&[["1", "0"], ["0", "1"]]);
        let report = run_recover(&flat, &flat, 4).unwrap();
        assert!(report.summary.passed);
        for record in 0..report.points.len() {
            assert!((value_at(&report, record, "P_0_0") - 1.0).abs() < 1e-12);
            assert!(value_at(&report, record, "P_0_1").abs() < 1e-12);
            assert!(value_at(&report, record, "roundtrip_residual") < 1e-12);
        }

        // Flat reference to the round-sphere metric forces P = diag(R, R sinθ).
        let sphere = metric_document(&[["4", "0"], ["0", "4*sin(theta)^2"]]);
        let report = run_recover(&flat, &sphere, 5).unwrap();
        assert!(report.summary.passed);
        for record in 0..report.points.len() {
            let theta = report.points[record].coordinates[0];
            assert!((value_at(&report, record, "P_0_0") - 2.0).abs() < 1e-9);
            assert!((value_at(&report, record, "P_1_1") - 2.0 * theta.sin()).abs() < 1e-9);
        }

        // Mismatched charts are a config error.
        let mut other = flat.clone();
        other.chart.upper[1] = 6.0;
        assert_eq!(exit_code(&run_recover(&flat, &other, 4)), 2);
    }

    #[test]
    fn recover_rejects_ill_conditioned_pencils() {
        // Each metric is individually fine (condition 1e10), but the pencil
        // gbar^-1 g spans twenty orders of magnitude.
        let reference = metric_document(&[["1e-5", "0"], ["0", "1e5"]]);
        let skewed = metric_document(&[["1e5", "0"], ["0", "1e-5"]]);
        let err = run_recover(&reference, &skewed, 3).unwrap_err();
        assert!(matches!(err, RunError::Numerical { .. }), "{err}");
        assert!(err.to_string().contains("ill-conditioned"), "{err}");
        assert_eq!(exit_code(&Err(err)), 3);
    }

    #[test]
    fn reports_are_reproducible() {
        let config = base_config();
        let mut a = run_evaluate(&config).unwrap();
        let mut b = run_evaluate(&config).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        a.provenance.timestamp = 0;
        b.provenance.timestamp = 0;
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.provenance.config_hash, b.provenance.config_hash);
    }

    #[test]
    fn scenario_listing_names_all_builtins() {
        let listing = list_scenarios().unwrap();
        for name in scenarios::BUILTIN_NAMES {
            assert!(listing.contains(name), "{listing}");
        }
    }
}
