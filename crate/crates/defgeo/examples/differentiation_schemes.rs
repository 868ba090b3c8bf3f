//! The three differentiation schemes, compared on a known derivative.
//!
//! Expression-backed fields differentiate symbolically under the analytic
//! scheme; any field can fall back to validated central differences or
//! Richardson extrapolation. This example prints the error of each scheme
//! against the exact derivative as the step shrinks, showing the O(h^2)
//! decay of central differences and the extra orders Richardson buys.
//!
//! Run with `cargo run --example differentiation_schemes`.

use defgeo::chart::Chart;
use defgeo::diff::{self, DifferentiationScheme};
use defgeo::fields::ScalarField;

fn main() {
    let chart = Chart::new(&["x", "y"], &[(-2.0, 2.0), (-2.0, 2.0)]).expect("valid chart");
    let f = ScalarField::expression(&chart, "sin(3*x) * cos(y)").expect("parses");
    let at = chart.point(&[0.7, -0.4]).expect("inside the chart");

    // d/dx sin(3x)cos(y) = 3 cos(3x) cos(y).
    let exact = 3.0 * (3.0 * 0.7_f64).cos() * 0.4_f64.cos();

    let analytic = diff::partial_scalar(&f, &at, 0, DifferentiationScheme::analytic())
        .expect("symbolic derivative");
    println!("d/dx sin(3x)cos(y) at (0.7, -0.4), exact = {exact:+.15}");
    println!(
        "\n  analytic (symbolic): error {:.2e}",
        (analytic - exact).abs()
    );

    println!("\n  step        central           richardson");
    for exponent in 1..=5 {
        let h = 10.0_f64.powi(-exponent);
        let central =
            diff::partial_scalar(&f, &at, 0, DifferentiationScheme::central().with_step(h))
                .expect("central difference");
        let richardson =
            diff::partial_scalar(&f, &at, 0, DifferentiationScheme::richardson().with_step(h))
                .expect("extrapolated difference");
        println!(
            "  1e-{exponent}       {:.6e}      {:.6e}",
            (central - exact).abs(),
            (richardson - exact).abs()
        );
    }

    // Native closures have no expression tree, so the analytic scheme cannot
    // serve them; the finite-difference schemes still can.
    let native = ScalarField::native(&chart, "x^3", |coords: &[f64]| Ok(coords[0].powi(3)));
    let at = chart.point(&[0.5, 0.0]).expect("inside the chart");
    let err = diff::partial_scalar(&native, &at, 0, DifferentiationScheme::analytic());
    println!(
        "\n  native closure under the analytic scheme: {}",
        match err {
            Err(e) => format!("rejected ({e})"),
            Ok(_) => "unexpectedly succeeded".to_string(),
        }
    );
    let fd = diff::partial_scalar(&native, &at, 0, DifferentiationScheme::richardson())
        .expect("finite differences");
    println!("  same closure under richardson: d/dx x^3 = {fd:.10} (exact 0.75)");
}
