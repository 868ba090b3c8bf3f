//! A non-diagonal shear, where the two rate representations disagree.
//!
//! The deformation `P = [[a(x), s], [s, 1]]` mixes the coordinate directions,
//! so P no longer commutes with its own derivative: the raw rate `Lbar` and
//! the deformed-frame rate `L = P^-1 Lbar P` are genuinely different
//! matrices. The compensation is built from L, and only the g-symmetric part
//! of L enters the total connection.
//!
//! Run with `cargo run --example nondiagonal_shear`.

use defgeo::chart::Chart;
use defgeo::connection;
use defgeo::deformation::{self, DeformationField};
use defgeo::diff::DifferentiationScheme;
use defgeo::fields::MatrixField;
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
    // a(x) = 1 + x must dominate s^2 for P to stay pure; this chart keeps
    // a - s^2 >= 0.5 throughout.
    let chart = Chart::new(&["x", "y"], &[(-0.25, 0.75), (-1.0, 1.0)]).expect("valid chart");
    let p_field = MatrixField::from_expressions(
        &chart,
        &[
            vec!["1 + x".to_string(), "0.5".to_string()],
            vec!["0.5".to_string(), "1".to_string()],
        ],
    )
    .expect("parses");
    let deformation =
        DeformationField::new(p_field, MatrixField::identity(&chart)).expect("pure deformation");
    let g_field = deformation::deformed_metric_field(&deformation);
    let scheme = DifferentiationScheme::analytic();

    // At x = 0: a = 1, a' = 1, s = 1/2.
    let at = chart.point(&[0.0, 0.0]).expect("inside the chart");
    println!("non-diagonal shear at x = 0 (a = 1, a' = 1, s = 1/2)");

    let raw = deformation::raw_rate(&deformation, deformation.reference_metric(), &at, scheme)
        .expect("raw rate");
    let p_at = deformation.eval(&at).expect("P at the point");
    let deformed = deformation::deformed_frame_rate(&p_at, &raw).expect("deformed-frame rate");

    show("Lbar_x (raw)", raw.direction(0));
    println!("    closed form: [[4/3, 0], [-2/3, 0]]");
    show(
        "L_x = P^-1 Lbar_x P (deformed frame)",
        deformed.direction(0),
    );
    println!("    closed form: [[20/9, 10/9], [-16/9, -8/9]]");

    let commutator = deformation::commutator_defect(raw.direction(0), &p_at);
    println!("\n  the frames differ because P fails to commute with its rate:");
    println!(
        "    ||[Lbar_x, P]|| = {:.4}    max |L - Lbar| = {:.4}",
        commutator.norm(),
        raw.max_abs_difference(&deformed)
    );

    // Only the g-symmetric part of L feeds the connection; the compensation
    // is self-adjoint with respect to g even though L itself is not.
    let g = metric::metric_at(&g_field, &at).expect("deformed metric");
    let lambda = connection::sym_g(&deformed, &g).expect("compensation");
    println!("\n  self-adjointness defect (should vanish only for the compensation):");
    println!(
        "    rate L: {:.4}    compensation Lambda: {:.2e}",
        connection::self_adjointness_defect(&deformed, &g),
        connection::self_adjointness_defect(&lambda, &g)
    );
}
