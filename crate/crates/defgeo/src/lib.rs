//! Numerical differential geometry of dilation- and shear-deformed metrics.
//!
//! A geometry here is specified by a reference metric ḡ on a coordinate
//! chart and a pure deformation field P (ḡ-symmetric with positive
//! spectrum). The crate computes everything the deformation induces:
//!
//! - the deformed metric g = PᵀḡP and its Levi-Civita data (Christoffel
//!   symbols, curvature, Laplace–Beltrami operator) — [`metric`];
//! - the deformation-rate tensors: the raw rate L̄_μ = P⁻¹∇̄_μP, its
//!   deformed-frame representation L_μ = P⁻¹L̄_μP, and the recovery of P
//!   from a metric pair — [`deformation`];
//! - the compensation Λ_μ (the g-symmetric part of L_μ), the total
//!   connection Γ = Γ°\[g\] + Λ, and its torsion and nonmetricity —
//!   [`connection`];
//! - built-in example families with independently coded closed forms —
//!   [`scenarios`];
//! - declarative configuration, grid sweeps, and machine-readable reports —
//!   [`config`], [`report`], [`driver`].
//!
//! Fields are entered as coordinate expressions ([`exprlang`]) or as native
//! closures; derivatives are taken symbolically when the field supports it
//! and by validated central-difference / Richardson stencils otherwise
//! ([`diff`]).
//!
//! ```
//! use defgeo::chart::Chart;
//! use defgeo::diff::DifferentiationScheme;
//! use defgeo::fields::{MatrixField, ScalarField};
//! use defgeo::deformation::{self, DeformationField};
//!
//! let chart = Chart::new(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
//! let phi = ScalarField::expression(&chart, "0.3*x + 0.1*y^2").unwrap();
//! let p = MatrixField::from_entries(
//!     &chart,
//!     vec![
//!         phi.exp(),
//!         ScalarField::constant(&chart, 0.0),
//!         ScalarField::constant(&chart, 0.0),
//!         phi.exp(),
//!     ],
//! );
//! let deformation =
//!     DeformationField::new(p, MatrixField::identity(&chart)).unwrap();
//! let g = deformation::deformed_metric_field(&deformation);
//!
//! let at = chart.point(&[0.2, -0.5]).unwrap();
//! let rate = deformation::raw_rate(
//!     &deformation,
//!     deformation.reference_metric(),
//!     &at,
//!     DifferentiationScheme::analytic(),
//! )
//! .unwrap();
//! assert!((rate.get(0, 0, 0) - 0.3).abs() < 1e-12);
//! assert!(g.eval(&at).unwrap()[(0, 0)] > 1.0);
//! ```

pub mod chart;
pub mod config;
pub mod connection;
pub mod deformation;
pub mod diff;
pub mod driver;
pub mod exprlang;
pub mod fields;
pub mod metric;
pub mod report;
pub mod scenarios;

pub use chart::{Chart, ChartPoint};
pub use config::{GeometryConfig, MetricDocument, Quantity};
pub use connection::{AffineConnection, ConnectionProvenance, NonmetricityTensor};
pub use deformation::{DeformationField, RateKind, RateTensor};
pub use diff::DifferentiationScheme;
pub use driver::{exit_code, run_evaluate, run_recover, run_verify, RunError};
pub use fields::{MatrixField, ScalarField};
pub use metric::{CurvatureReport, MetricAtPoint, MetricField};
pub use report::{IdentityCheck, Report};
pub use scenarios::Scenario;
