//! The built-in scenario families and their closed-form cross-checks.
//!
//! Each scenario packages a chart, a reference metric, a deformation, and an
//! independently hand-coded set of closed forms for everything the pipeline
//! computes: deformed metric, rates, compensation, connections, curvature.
//! `verify` sweeps a grid and reports the worst residual per check, so any
//! drift between the general machinery and the known answers is caught.
//!
//! Run with `cargo run --example scenario_checks`.

use defgeo::diff::DifferentiationScheme;
use defgeo::scenarios;

fn main() {
    let scheme = DifferentiationScheme::analytic();
    println!("verifying every built-in scenario on an 11x11 grid (analytic scheme)\n");

    for scenario in scenarios::builtin_scenarios().expect("builtins construct") {
        println!("{}  ({})", scenario.name(), scenario.summary());
        println!(
            "  raw and deformed-frame rates {}",
            if scenario.rates_coincide() {
                "coincide"
            } else {
                "differ (non-commuting deformation)"
            }
        );
        let outcomes = scenario.verify(11, scheme).expect("verification runs");
        for check in &outcomes {
            println!(
                "  {}  {:28}  max residual {:.3e}  (tolerance {:.1e})",
                if check.passed { "PASS" } else { "FAIL" },
                check.name,
                check.max_residual,
                check.tolerance
            );
        }
        println!();
    }

    // The ladder of tolerances loosens for finite-difference schemes; the
    // same sweeps still pass under Richardson extrapolation.
    let scheme = DifferentiationScheme::richardson();
    let scenario = scenarios::builtin("sphere").expect("known name");
    let outcomes = scenario.verify(7, scheme).expect("verification runs");
    println!("sphere under richardson, for comparison:");
    for check in &outcomes {
        println!(
            "  {}  {:28}  max residual {:.3e}  (tolerance {:.1e})",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.max_residual,
            check.tolerance
        );
    }
}
