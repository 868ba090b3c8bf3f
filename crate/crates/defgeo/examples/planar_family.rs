//! The diagonal planar family: an isotropic dilation `exp(phi)` stacked with
//! an area-preserving stretch `diag(exp(sigma), exp(-sigma))`.
//!
//! Because the deformation is diagonal it commutes with its own derivatives,
//! so the raw rate and the deformed-frame rate agree, the compensation equals
//! the rate, and every rate matrix splits cleanly into a dilation part
//! (multiple of the identity) plus a trace-free shear part.
//!
//! Run with `cargo run --example planar_family`.

use defgeo::chart::Chart;
use defgeo::connection;
use defgeo::deformation::{self, DeformationField};
use defgeo::diff::DifferentiationScheme;
use defgeo::fields::{MatrixField, ScalarField};
use defgeo::metric;
use nalgebra::DMatrix;

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
    let chart = Chart::new(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)]).expect("valid chart");
    let phi = ScalarField::expression(&chart, "0.3*x + 0.1*y^2").expect("parses");
    let sigma = ScalarField::expression(&chart, "0.2*x*y").expect("parses");

    // P = diag(exp(phi + sigma), exp(phi - sigma)).
    let plus = ScalarField::linear_combination(&[(1.0, &phi), (1.0, &sigma)]);
    let minus = ScalarField::linear_combination(&[(1.0, &phi), (-1.0, &sigma)]);
    let p_field = MatrixField::from_entries(
        &chart,
        vec![
            plus.exp(),
            ScalarField::constant(&chart, 0.0),
            ScalarField::constant(&chart, 0.0),
            minus.exp(),
        ],
    );
    let deformation =
        DeformationField::new(p_field, MatrixField::identity(&chart)).expect("pure deformation");
    let g_field = deformation::deformed_metric_field(&deformation);

    let at = chart.point(&[0.4, -0.3]).expect("inside the chart");
    let scheme = DifferentiationScheme::analytic();

    println!("planar family at (x, y) = (0.4, -0.3)");
    println!(
        "  phi = {:+.6}, sigma = {:+.6}",
        phi.eval(&at).unwrap(),
        sigma.eval(&at).unwrap()
    );

    let g = metric::metric_at(&g_field, &at).expect("deformed metric");
    show("deformed metric g = P^T gbar P", g.matrix());

    let raw = deformation::raw_rate(&deformation, deformation.reference_metric(), &at, scheme)
        .expect("raw rate");
    let p_at = deformation.eval(&at).expect("P at the point");
    let deformed = deformation::deformed_frame_rate(&p_at, &raw).expect("deformed-frame rate");
    println!(
        "\n  raw and deformed-frame rates agree: max |L - Lbar| = {:.2e}",
        raw.max_abs_difference(&deformed)
    );

    for mu in 0..2 {
        let lbar = raw.direction(mu);
        show(&format!("Lbar_{mu}"), lbar);

        // Split into the dilation part (trace/n times identity) and the shear rest.
        let trace = lbar.trace() / 2.0;
        let shear = lbar - DMatrix::identity(2, 2) * trace;
        println!(
            "    dilation part: {trace:+.6} * I, shear part trace = {:+.1e}",
            shear.trace()
        );
    }

    // The compensation (g-symmetric part of the rate) is the whole rate here.
    let lambda = connection::sym_g(&deformed, &g).expect("compensation");
    println!(
        "\n  compensation equals the rate: max |Lambda - L| = {:.2e}",
        lambda.max_abs_difference(&deformed)
    );

    // Against the Levi-Civita connection of g: the deviation is exactly Lambda.
    let total = connection::total_connection(&g_field, &lambda, &at, scheme).expect("total");
    let c = connection::deviation(&total, &g_field, &at, scheme).expect("deviation");
    println!(
        "  deviation from Levi-Civita reproduces it: max |C - Lambda| = {:.2e}",
        (0..2)
            .flat_map(|r| (0..2).flat_map(move |m| (0..2).map(move |n| (r, m, n))))
            .map(|(r, m, n)| (c.get(r, m, n) - lambda.get(r, m, n)).abs())
            .fold(0.0_f64, f64::max)
    );
}
