//! A conformal rescaling of the round sphere: curved reference metric,
//! position-dependent dilation.
//!
//! Starting from the unit sphere as the reference geometry (not from a flat
//! chart), the deformation `P = exp(varphi) I` rescales lengths pointwise.
//! The Gaussian curvature of the deformed metric then follows the conformal
//! transformation law `K = exp(-2 varphi) (K_ref - lap varphi)`, where `lap`
//! is the Laplace-Beltrami operator of the reference metric.
//!
//! Run with `cargo run --example conformal_sphere`.

use std::f64::consts::PI;

use defgeo::chart::Chart;
use defgeo::deformation::{self, DeformationField};
use defgeo::diff::DifferentiationScheme;
use defgeo::fields::{MatrixField, ScalarField};
use defgeo::metric;

fn main() {
    let chart =
        Chart::new(&["theta", "phi"], &[(0.3, PI - 0.3), (0.0, 2.0 * PI)]).expect("valid chart");

    // Unit-sphere reference metric: diag(1, sin^2(theta)).
    let reference = MatrixField::from_expressions(
        &chart,
        &[
            vec!["1".to_string(), "0".to_string()],
            vec!["0".to_string(), "sin(theta)^2".to_string()],
        ],
    )
    .expect("parses");

    let varphi = ScalarField::expression(&chart, "0.1*cos(theta)").expect("parses");
    let p_field = MatrixField::from_entries(
        &chart,
        vec![
            varphi.exp(),
            ScalarField::constant(&chart, 0.0),
            ScalarField::constant(&chart, 0.0),
            varphi.exp(),
        ],
    );
    let deformation = DeformationField::new(p_field, reference.clone()).expect("pure");
    let g_field = deformation::deformed_metric_field(&deformation);
    let scheme = DifferentiationScheme::analytic();

    println!("conformal rescaling of the unit sphere, varphi = 0.1 cos(theta)");
    println!("\n  theta      K(g)         conformal law    residual");
    let mut worst = 0.0_f64;
    for i in 0..7 {
        let theta = 0.4 + i as f64 * (PI - 0.8) / 6.0;
        let at = chart.point(&[theta, 1.0]).expect("inside the chart");

        let k = metric::gaussian_curvature(&g_field, &at, scheme).expect("curvature");
        let phi_at = varphi.eval(&at).unwrap();
        let lap = metric::laplace_beltrami(&reference, &varphi, &at, scheme)
            .expect("reference Laplacian");
        let law = (-2.0 * phi_at).exp() * (1.0 - lap);
        worst = worst.max((k - law).abs());
        println!(
            "  {theta:.4}   {k:+.8}   {law:+.8}    {:.2e}",
            (k - law).abs()
        );
    }
    println!("\n  max residual against the transformation law: {worst:.2e}");

    // Constant varphi = c is a sanity anchor: K must be exp(-2c) * K_ref.
    let c = 0.25_f64;
    let constant = ScalarField::constant(&chart, c);
    let scaled = MatrixField::from_entries(
        &chart,
        vec![
            constant.exp(),
            ScalarField::constant(&chart, 0.0),
            ScalarField::constant(&chart, 0.0),
            constant.exp(),
        ],
    );
    let scaled = DeformationField::new(scaled, reference).expect("pure");
    let scaled_g = deformation::deformed_metric_field(&scaled);
    let at = chart.point(&[1.2, 3.0]).expect("inside the chart");
    let k = metric::gaussian_curvature(&scaled_g, &at, scheme).expect("curvature");
    println!(
        "  constant varphi = {c}: K = {k:.10} vs exp(-2c) = {:.10}",
        (-2.0 * c).exp()
    );
}
