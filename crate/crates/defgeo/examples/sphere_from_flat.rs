//! Deforming a flat chart into the round sphere.
//!
//! On a (theta, phi) chart with the identity reference metric, the diagonal
//! deformation `P = diag(R, R sin(theta))` produces the round-sphere metric
//! `g = diag(R^2, R^2 sin^2(theta))`. The library recovers the constant
//! Gaussian curvature `1/R^2` from g alone, and the only nonzero rate entry
//! is the `cot(theta)` of the shrinking circles of latitude.
//!
//! Run with `cargo run --example sphere_from_flat`.

use std::f64::consts::PI;

use defgeo::chart::Chart;
use defgeo::deformation::{self, DeformationField};
use defgeo::diff::DifferentiationScheme;
use defgeo::fields::{MatrixField, ScalarField};
use defgeo::metric;

fn main() {
    let radius = 2.0_f64;
    // Stay away from the poles, where sin(theta) degenerates.
    let chart =
        Chart::new(&["theta", "phi"], &[(0.3, PI - 0.3), (0.0, 2.0 * PI)]).expect("valid chart");

    let p_field = MatrixField::from_entries(
        &chart,
        vec![
            ScalarField::constant(&chart, radius),
            ScalarField::constant(&chart, 0.0),
            ScalarField::constant(&chart, 0.0),
            ScalarField::expression(&chart, &format!("{radius} * sin(theta)")).expect("parses"),
        ],
    );
    let deformation =
        DeformationField::new(p_field, MatrixField::identity(&chart)).expect("pure deformation");
    let g_field = deformation::deformed_metric_field(&deformation);
    let scheme = DifferentiationScheme::analytic();

    println!("flat chart deformed into the round sphere, R = {radius}");
    println!("\n  theta      K(g)        R^2*K     |Lbar_theta[1][1] - cot(theta)|");
    let expected = 1.0 / (radius * radius);
    let mut worst = 0.0_f64;
    for i in 0..7 {
        let theta = 0.4 + i as f64 * (PI - 0.8) / 6.0;
        let at = chart.point(&[theta, 1.0]).expect("inside the chart");

        let k = metric::gaussian_curvature(&g_field, &at, scheme).expect("curvature");
        worst = worst.max((k - expected).abs());

        let raw = deformation::raw_rate(&deformation, deformation.reference_metric(), &at, scheme)
            .expect("raw rate");
        let cot = theta.cos() / theta.sin();
        println!(
            "  {theta:.4}   {k:+.8}   {:+.6}   {:.2e}",
            k * radius * radius,
            (raw.get(1, 0, 1) - cot).abs()
        );
    }
    println!("\n  max |K - 1/R^2| over the sweep: {worst:.2e}");

    // Diagonal P commutes with the diagonal rate, so both frames agree.
    let at = chart.point(&[1.1, 2.0]).expect("inside the chart");
    let raw = deformation::raw_rate(&deformation, deformation.reference_metric(), &at, scheme)
        .expect("raw rate");
    let p_at = deformation.eval(&at).expect("P at the point");
    let commutator = deformation::commutator_defect(raw.direction(0), &p_at);
    println!(
        "  frame coincidence: ||[Lbar_theta, P]|| = {:.2e}",
        commutator.norm()
    );
}
