//! Declarative geometry definitions: a single TOML document describes the
//! chart, the reference metric, the deformation (given directly or recovered
//! from a target metric), the differentiation scheme, and which quantities a
//! sweep should emit.
//!
//! ```toml
//! [chart]
//! coordinates = ["x", "y"]
//! lower = [-1.0, -1.0]
//! upper = [1.0, 1.0]
//!
//! [reference_metric]
//! rows = [["1", "0"], ["0", "1"]]
//!
//! [deformation]
//! rows = [["exp(0.3*x)", "0"], ["0", "exp(0.3*x)"]]
//!
//! [scheme]
//! mode = "analytic"
//!
//! [output]
//! quantities = ["g", "Lbar", "Lambda", "K"]
//! resolution = 11
//! ```
//!
//! To recover the deformation from a known deformed metric instead of
//! spelling it out, replace the `rows` key with a nested target metric:
//!
//! ```toml
//! [deformation.recover]
//! rows = [["1.25", "1"], ["1", "1.25"]]
//! ```

use serde::{Deserialize, Serialize};

/// A full evaluation request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub chart: ChartSection,
    pub reference_metric: MatrixSection,
    pub deformation: DeformationSection,
    #[serde(default)]
    pub scheme: SchemeSection,
    pub output: OutputSection,
}

impl GeometryConfig {
    pub fn from_toml_str(text: &str) -> Result<GeometryConfig, toml::de::Error> {
        toml::from_str(text)
    }

    /// Canonical serialization; reports hash this, so formatting differences
    /// in the source document do not change the provenance hash.
    pub fn to_canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSection {
    pub coordinates: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<BoxSection>,
}

/// An open axis-aligned sub-box, used for excluded loci.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSection {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// An n×n array of coordinate expressions, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSection {
    pub rows: Vec<Vec<String>>,
}

/// Either explicit deformation entries or a directive to recover the
/// deformation pointwise from a target deformed metric. Exactly one of the
/// two keys must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformationSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recover: Option<MatrixSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    /// One of `analytic`, `central`, `richardson`.
    #[serde(default = "default_mode")]
    pub mode: String,
    /// Base step for the finite-difference schemes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Extrapolation depth for `richardson` (number of step sizes).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
}

fn default_mode() -> String {
    "analytic".to_string()
}

impl Default for SchemeSection {
    fn default() -> Self {
        SchemeSection {
            mode: default_mode(),
            step: None,
            levels: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub quantities: Vec<Quantity>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_resolution() -> usize {
    11
}

/// A standalone metric document, the input format of the recovery verb.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricDocument {
    pub chart: ChartSection,
    pub metric: MatrixSection,
}

impl MetricDocument {
    pub fn from_toml_str(text: &str) -> Result<MetricDocument, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_canonical_toml(&self) -> String {
        toml::to_string(self).expect("document serializes")
    }
}

/// The quantities a sweep can emit. Report columns always appear in the
/// declaration order of this enum, regardless of the order requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Quantity {
    /// Deformed metric g = PᵀḡP.
    #[serde(rename = "g")]
    Metric,
    /// Levi-Civita coefficients of the reference metric.
    #[serde(rename = "gammabar")]
    ReferenceConnection,
    /// Levi-Civita coefficients of the deformed metric.
    #[serde(rename = "gamma0")]
    LeviCivita,
    /// Raw rate L̄_μ = P⁻¹∇̄_μP.
    #[serde(rename = "Lbar")]
    RawRate,
    /// Deformed-frame rate L_μ = P⁻¹L̄_μP.
    #[serde(rename = "L")]
    DeformedRate,
    /// Compensation Λ_μ, the g-symmetric part of L_μ.
    #[serde(rename = "Lambda")]
    Compensation,
    /// Total connection Γ = Γ°\[g\] + Λ.
    #[serde(rename = "Gamma")]
    TotalConnection,
    /// Deviation C = Γ − Γ°\[g\].
    #[serde(rename = "C")]
    Deviation,
    /// Torsion of the total connection.
    #[serde(rename = "torsion")]
    Torsion,
    /// Nonmetricity Q_{μνρ} = −∇_μg_{νρ} of the total connection.
    #[serde(rename = "nonmetricity")]
    Nonmetricity,
    /// Gaussian curvature of the deformed metric (surfaces only).
    #[serde(rename = "K")]
    GaussianCurvature,
}

/// The shape a quantity contributes to a point record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantityShape {
    /// n×n values, row-major `[μ][ν]`.
    Matrix,
    /// n³ values, row-major `[ρ][μ][ν]` (nonmetricity: `[μ][ν][ρ]`).
    Rank3,
    /// A single value.
    Scalar,
}

impl Quantity {
    /// All quantities in canonical column order.
    pub const ALL: [Quantity; 11] = [
        Quantity::Metric,
        Quantity::ReferenceConnection,
        Quantity::LeviCivita,
        Quantity::RawRate,
        Quantity::DeformedRate,
        Quantity::Compensation,
        Quantity::TotalConnection,
        Quantity::Deviation,
        Quantity::Torsion,
        Quantity::Nonmetricity,
        Quantity::GaussianCurvature,
    ];

    /// The config/CSV spelling.
    pub fn label(&self) -> &'static str {
        match self {
            Quantity::Metric => "g",
            Quantity::ReferenceConnection => "gammabar",
            Quantity::LeviCivita => "gamma0",
            Quantity::RawRate => "Lbar",
            Quantity::DeformedRate => "L",
            Quantity::Compensation => "Lambda",
            Quantity::TotalConnection => "Gamma",
            Quantity::Deviation => "C",
            Quantity::Torsion => "torsion",
            Quantity::Nonmetricity => "nonmetricity",
            Quantity::GaussianCurvature => "K",
        }
    }

    pub fn shape(&self) -> QuantityShape {
        match self {
            Quantity::Metric => QuantityShape::Matrix,
            Quantity::GaussianCurvature => QuantityShape::Scalar,
            _ => QuantityShape::Rank3,
        }
    }

    /// Whether computing this quantity differentiates the deformation field
    /// (as opposed to only the two metrics).
    pub fn needs_deformation_derivatives(&self) -> bool {
        matches!(
            self,
            Quantity::RawRate
                | Quantity::DeformedRate
                | Quantity::Compensation
                | Quantity::TotalConnection
                | Quantity::Deviation
                | Quantity::Torsion
                | Quantity::Nonmetricity
        )
    }

    /// Number of values contributed on an n-dimensional chart.
    pub fn value_count(&self, n: usize) -> usize {
        match self.shape() {
            QuantityShape::Matrix => n * n,
            QuantityShape::Rank3 => n * n * n,
            QuantityShape::Scalar => 1,
        }
    }

    /// Column names, e.g. `Gamma_0_1_1`, in the flattening order of
    /// [`Quantity::shape`].
    pub fn column_names(&self, n: usize) -> Vec<String> {
        let label = self.label();
        match self.shape() {
            QuantityShape::Scalar => vec![label.to_string()],
            QuantityShape::Matrix => {
                let mut names = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        names.push(format!("{label}_{i}_{j}"));
                    }
                }
                names
            }
            QuantityShape::Rank3 => {
                let mut names = Vec::with_capacity(n * n * n);
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            names.push(format!("{label}_{i}_{j}_{k}"));
                        }
                    }
                }
                names
            }
        }
    }
}
