//! The coordinate-expression mini-language behind declarative fields.
//!
//! Scalar fields parse from strings whose variables are the chart's
//! coordinate names. The parser knows `+ - * / ^`, parentheses, unary minus,
//! and the functions sin, cos, tan, cot, exp, log, sqrt, sinh, cosh, abs.
//! Parsed fields differentiate symbolically to any depth, and evaluation
//! errors carry the offending expression and point.
//!
//! Run with `cargo run --example expression_fields`.

use defgeo::chart::Chart;
use defgeo::fields::ScalarField;

fn main() {
    let chart = Chart::new(&["r", "t"], &[(0.5, 3.0), (-3.0, 3.0)]).expect("valid chart");

    // Precedence: ^ binds tighter than unary minus, * tighter than +.
    let f = ScalarField::expression(&chart, "(1 + cos(t)^2) * exp(-r/2) + r^2/10").expect("parses");
    let at = chart.point(&[2.0, 1.0]).expect("inside the chart");
    println!("f = (1 + cos(t)^2) * exp(-r/2) + r^2/10");
    println!("  f(2, 1)        = {:+.12}", f.eval(&at).unwrap());

    // Symbolic differentiation, nested twice.
    let df_dr = f.analytic_partial(0).expect("symbolic in r");
    let d2f_drdt = df_dr.analytic_partial(1).expect("symbolic in t");
    println!("  df/dr(2, 1)    = {:+.12}", df_dr.eval(&at).unwrap());
    println!("  d2f/drdt(2, 1) = {:+.12}", d2f_drdt.eval(&at).unwrap());
    println!("  symbolic depth >= 3: {}", f.has_analytic_depth(3));

    // Fields are chart-aware: names that are not coordinates are rejected
    // at parse time, with a position.
    println!();
    match ScalarField::expression(&chart, "sin(theta) + r") {
        Err(err) => println!("unknown name is a parse error:\n  {err}"),
        Ok(_) => println!("unexpectedly parsed"),
    }
    match ScalarField::expression(&chart, "r * (1 +") {
        Err(err) => println!("truncated input is a parse error:\n  {err}"),
        Ok(_) => println!("unexpectedly parsed"),
    }

    // Evaluation guards domains: log of a non-positive argument reports the
    // expression and the point rather than returning NaN.
    let g = ScalarField::expression(&chart, "log(t)").expect("parses");
    let bad = chart.point(&[1.0, -2.0]).expect("inside the chart");
    println!();
    match g.eval(&bad) {
        Err(err) => println!("domain violations surface as errors:\n  {err}"),
        Ok(v) => println!("unexpectedly evaluated to {v}"),
    }

    // Algebra on fields keeps everything symbolic where possible.
    let h = ScalarField::linear_combination(&[(2.0, &f), (-1.0, &g.exp())]);
    println!(
        "\n2f - exp(log(t)) at (2, 1): {:+.12} (t = 1, so this is 2f - 1)",
        h.eval(&at).unwrap()
    );
}
