//! The full connection pipeline: from a deformation to torsion and
//! nonmetricity.
//!
//! The total connection adds the compensation (the g-symmetric part of the
//! deformed-frame rate) to the Levi-Civita connection of the deformed
//! metric. This example walks the whole chain at one point and then checks
//! the structural identities that make the decomposition trustworthy:
//! the deviation from Levi-Civita reproduces the compensation, and the
//! nonmetricity is exactly the compensation with an index lowered,
//! symmetrized, and doubled.
//!
//! Run with `cargo run --example total_connection`.

use defgeo::chart::Chart;
use defgeo::connection::{self, ConnectionProvenance, NonmetricityTensor};
use defgeo::deformation::{self, DeformationField};
use defgeo::diff::DifferentiationScheme;
use defgeo::fields::MatrixField;
use defgeo::metric;

fn main() {
    let chart = Chart::new(&["x", "y"], &[(-0.25, 0.75), (-1.0, 1.0)]).expect("valid chart");
    let p_field = MatrixField::from_expressions(
        &chart,
        &[
            vec!["1 + 0.5*x".to_string(), "0.3".to_string()],
            vec!["0.3".to_string(), "1 + 0.1*y^2".to_string()],
        ],
    )
    .expect("parses");
    let deformation =
        DeformationField::new(p_field, MatrixField::identity(&chart)).expect("pure deformation");
    let g_field = deformation::deformed_metric_field(&deformation);
    let scheme = DifferentiationScheme::analytic();
    let at = chart.point(&[0.3, 0.4]).expect("inside the chart");

    // Chain: P -> rates -> compensation -> total connection.
    let raw = deformation::raw_rate(&deformation, deformation.reference_metric(), &at, scheme)
        .expect("raw rate");
    let p_at = deformation.eval(&at).expect("P at the point");
    let deformed = deformation::deformed_frame_rate(&p_at, &raw).expect("deformed-frame rate");
    let g = metric::metric_at(&g_field, &at).expect("deformed metric");
    let lambda = connection::sym_g(&deformed, &g).expect("compensation");
    let total = connection::total_connection(&g_field, &lambda, &at, scheme).expect("total");
    assert_eq!(total.provenance(), ConnectionProvenance::Total);

    println!("total connection at (0.3, 0.4), nonzero coefficients:");
    for rho in 0..2 {
        for mu in 0..2 {
            for nu in 0..2 {
                let value = total.get(rho, mu, nu);
                if value.abs() > 1e-12 {
                    println!("  Gamma^{rho}_{mu}{nu} = {value:+.6}");
                }
            }
        }
    }

    // Identity 1: subtracting Levi-Civita of g recovers the compensation.
    let c = connection::deviation(&total, &g_field, &at, scheme).expect("deviation");
    let mut worst = 0.0_f64;
    for rho in 0..2 {
        for mu in 0..2 {
            for nu in 0..2 {
                worst = worst.max((c.get(rho, mu, nu) - lambda.get(rho, mu, nu)).abs());
            }
        }
    }
    println!("\nidentities:");
    println!("  deviation reproduces the compensation:  max residual {worst:.2e}");

    // Identity 2: the induced nonmetricity is 2 * sym(g Lambda), lowered.
    let nabla_g = connection::covariant_derivative_metric(&total, &g_field, &at, scheme)
        .expect("covariant derivative");
    let q = NonmetricityTensor::from_covariant_derivative(&nabla_g);
    let mut worst = 0.0_f64;
    for mu in 0..2 {
        for nu in 0..2 {
            for rho in 0..2 {
                let mut lowered = 0.0;
                for sigma in 0..2 {
                    lowered += lambda.get(sigma, mu, nu) * g.get(sigma, rho)
                        + lambda.get(sigma, mu, rho) * g.get(nu, sigma);
                }
                worst = worst.max((q.get(mu, nu, rho) - lowered).abs());
            }
        }
    }
    println!("  nonmetricity is the lowered compensation: max residual {worst:.2e}");

    // Identity 3: a Levi-Civita connection alone is metric-compatible and
    // torsion-free; both defects vanish when the compensation is dropped.
    let levi_civita = metric::christoffel(&g_field, &at, scheme).expect("Christoffel");
    let levi_civita = connection::AffineConnection::levi_civita(levi_civita, false);
    let compat = connection::covariant_derivative_metric(&levi_civita, &g_field, &at, scheme)
        .expect("covariant derivative");
    println!(
        "  Levi-Civita alone: |nabla g| = {:.2e}, |torsion| = {:.2e}",
        compat.max_abs(),
        connection::torsion(&levi_civita).max_abs()
    );
    println!(
        "  total connection:  |nabla g| = {:.2e}, |torsion| = {:.2e}",
        nabla_g.max_abs(),
        connection::torsion(&total).max_abs()
    );
}
