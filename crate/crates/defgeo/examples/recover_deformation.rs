//! Recovering the pure deformation between two metrics.
//!
//! Given a reference metric and a deformed metric at the same point, there is
//! exactly one deformation P that is symmetric with respect to the reference
//! and has positive spectrum with `P^T gbar P = g`. The library reconstructs
//! it through a generalized square root and reports how well the roundtrip
//! closes.
//!
//! Run with `cargo run --example recover_deformation`.

use defgeo::chart::Chart;
use defgeo::deformation;
use defgeo::fields::MatrixField;
use defgeo::metric::{self, MetricAtPoint};
use nalgebra::{dmatrix, DMatrix};

fn show(label: &str, m: &DMatrix<f64>) {
    println!("  {label}:");
    for row in 0..m.nrows() {
        let cells: Vec<String> = (0..m.ncols())
            .map(|c| format!("{:+.6}", m[(row, c)]))
            .collect();
        println!("    [ {} ]", cells.join("  "));
    }
}

fn main() {
    // Flat reference, sheared target: the recovered P is the (unique)
    // symmetric positive square root of g.
    let gbar = MetricAtPoint::new(DMatrix::identity(2, 2)).expect("flat metric");
    let g = MetricAtPoint::new(dmatrix![1.25, 1.0; 1.0, 1.25]).expect("sheared metric");
    let p = deformation::recover_deformation(&gbar, &g).expect("recoverable");

    println!("flat reference, sheared target");
    show("recovered P", &p);
    println!("    expected     [[1.0, 0.5], [0.5, 1.0]]");
    let roundtrip = p.transpose() * gbar.matrix() * &p - g.matrix();
    println!("  roundtrip |P^T gbar P - g| = {:.2e}", roundtrip.amax());

    // Curved reference: recover the conformal factor between two spheres.
    let theta = 1.1_f64;
    let s2 = theta.sin() * theta.sin();
    let gbar = MetricAtPoint::new(dmatrix![1.0, 0.0; 0.0, s2]).expect("unit sphere");
    let g = MetricAtPoint::new(dmatrix![4.0, 0.0; 0.0, 4.0 * s2]).expect("doubled sphere");
    let p = deformation::recover_deformation(&gbar, &g).expect("recoverable");
    println!("\nunit sphere to radius-2 sphere at theta = {theta}");
    show("recovered P (a uniform doubling)", &p);

    // The same reconstruction works pointwise across a whole chart, here
    // against an anisotropic target built from expressions.
    let chart = Chart::new(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)]).expect("valid chart");
    let reference = MatrixField::identity(&chart);
    let target = MatrixField::from_expressions(
        &chart,
        &[
            vec!["exp(0.6*x)".to_string(), "0".to_string()],
            vec!["0".to_string(), "exp(-0.2*x)".to_string()],
        ],
    )
    .expect("parses");

    println!("\npointwise recovery of an anisotropic family, P = diag(exp(0.3x), exp(-0.1x))");
    println!("  x        P[0][0]     P[1][1]     roundtrip");
    let mut worst = 0.0_f64;
    for i in 0..5 {
        let x = -0.8 + 0.4 * i as f64;
        let at = chart.point(&[x, 0.0]).expect("inside the chart");
        let gbar_at = metric::metric_at(&reference, &at).expect("reference");
        let g_at = metric::metric_at(&target, &at).expect("target");
        let p = deformation::recover_deformation(&gbar_at, &g_at).expect("recoverable");
        let residual = (p.transpose() * gbar_at.matrix() * &p - g_at.matrix()).amax();
        worst = worst.max(residual);
        println!(
            "  {x:+.2}    {:.6}    {:.6}    {residual:.2e}",
            p[(0, 0)],
            p[(1, 1)]
        );
    }
    println!("  worst roundtrip residual: {worst:.2e}");
}
