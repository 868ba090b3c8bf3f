//! Pure dilation: an isotropic scaling `P = exp(phi) I` of the flat plane.
//!
//! The rate collapses to a gradient, `Lbar_mu = (d_mu phi) I`, and the total
//! connection it induces differs from Levi-Civita by that gradient. The
//! difference shows up as vectorial torsion `T^r_mn = d_m phi d^r_n - d_n phi
//! d^r_m` and as nonmetricity proportional to the deformed metric.
//!
//! Run with `cargo run --example pure_dilation`.

use defgeo::chart::Chart;
use defgeo::connection::{self, NonmetricityTensor};
use defgeo::deformation::{self, DeformationField};
use defgeo::diff::DifferentiationScheme;
use defgeo::fields::{MatrixField, ScalarField};
use defgeo::metric;

fn main() {
    let chart = Chart::new(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)]).expect("valid chart");
    let phi = ScalarField::expression(&chart, "0.3*x + 0.1*y^2").expect("parses");
    let p_field = MatrixField::from_entries(
        &chart,
        vec![
            phi.exp(),
            ScalarField::constant(&chart, 0.0),
            ScalarField::constant(&chart, 0.0),
            phi.exp(),
        ],
    );
    let deformation =
        DeformationField::new(p_field, MatrixField::identity(&chart)).expect("pure deformation");
    let g_field = deformation::deformed_metric_field(&deformation);

    let at = chart.point(&[0.25, 0.6]).expect("inside the chart");
    let scheme = DifferentiationScheme::analytic();

    // The rate is the gradient of phi times the identity.
    let raw = deformation::raw_rate(&deformation, deformation.reference_metric(), &at, scheme)
        .expect("raw rate");
    let dphi = [
        phi.analytic_partial(0)
            .expect("symbolic d/dx")
            .eval(&at)
            .unwrap(),
        phi.analytic_partial(1)
            .expect("symbolic d/dy")
            .eval(&at)
            .unwrap(),
    ];
    println!("pure dilation at (x, y) = (0.25, 0.60)");
    println!("  grad phi           = ({:+.6}, {:+.6})", dphi[0], dphi[1]);
    println!(
        "  Lbar_0 - dphi_0 I  : max residual {:.2e}",
        (raw.get(0, 0, 0) - dphi[0])
            .abs()
            .max((raw.get(1, 0, 1) - dphi[0]).abs())
            .max(raw.get(0, 0, 1).abs())
    );

    // Total connection = Levi-Civita of g plus the compensation.
    let g = metric::metric_at(&g_field, &at).expect("deformed metric");
    let p_at = deformation.eval(&at).expect("P at the point");
    let deformed = deformation::deformed_frame_rate(&p_at, &raw).expect("deformed-frame rate");
    let lambda = connection::sym_g(&deformed, &g).expect("compensation");
    let total = connection::total_connection(&g_field, &lambda, &at, scheme).expect("total");

    // Torsion: T^r_mn = delta^r_n d_m phi - delta^r_m d_n phi.
    let torsion = connection::torsion(&total);
    println!("\n  torsion of the total connection (vectorial):");
    for rho in 0..2 {
        for mu in 0..2 {
            for nu in 0..2 {
                let expected = delta(rho, nu) * dphi[mu] - delta(rho, mu) * dphi[nu];
                let got = torsion.get(rho, mu, nu);
                if expected != 0.0 || got.abs() > 1e-14 {
                    println!(
                        "    T^{rho}_{mu}{nu} = {got:+.6}   (gradient formula {expected:+.6})"
                    );
                }
            }
        }
    }

    // Nonmetricity: Q_mnr = -nabla_m g_nr = 2 d_m phi g_nr for this family.
    let nabla_g = connection::covariant_derivative_metric(&total, &g_field, &at, scheme)
        .expect("covariant derivative of g");
    let q = NonmetricityTensor::from_covariant_derivative(&nabla_g);
    println!("\n  nonmetricity tracks the metric:");
    for (mu, dphi_mu) in dphi.iter().enumerate() {
        let mut worst = 0.0_f64;
        for nu in 0..2 {
            for rho in 0..2 {
                let expected = 2.0 * dphi_mu * g.get(nu, rho);
                worst = worst.max((q.get(mu, nu, rho) - expected).abs());
            }
        }
        println!("    Q_{mu}.. vs 2 dphi_{mu} g..  max residual {worst:.2e}");
    }
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}
