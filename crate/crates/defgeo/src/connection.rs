//! The induced connection structure of a deformed geometry.
//!
//! The deformed-frame rate `L` splits, relative to the deformed metric `g`,
//! into a g-symmetric part `Λ = Sym_g(L)` (the genuinely nonmetric
//! contribution) and a g-antisymmetric remainder (metric-preserving
//! transport). The total connection is `Γ = Γ°[g] + Λ`; its deviation from
//! Levi-Civita is `C = Γ − Γ°[g] = Λ`. Torsion and nonmetricity of `Γ` are
//! computed as diagnostics, not assumed to vanish.

use crate::chart::ChartPoint;
use crate::deformation::{RateKind, RateTensor};
use crate::diff::{self, DiffError, DifferentiationScheme};
use crate::metric::{
    self, ConnectionCoefficients, MetricAtPoint, MetricError, MetricField, Rank3Tensor,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConnectionError {
    #[error("rate tensor dimension {rate} does not match metric dimension {metric}")]
    Dimension { rate: usize, metric: usize },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Diff(#[from] DiffError),
}

/// Where a connection's coefficients came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectionProvenance {
    /// Levi-Civita of the reference metric ḡ.
    Reference,
    /// Levi-Civita of the deformed metric g.
    LeviCivitaDeformed,
    /// Γ°\[g\] + Λ built by [`total_connection`].
    Total,
    /// Anything user-assembled.
    Custom,
}

/// Connection coefficients with a provenance tag.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineConnection {
    coefficients: ConnectionCoefficients,
    provenance: ConnectionProvenance,
}

impl AffineConnection {
    /// Wraps Levi-Civita output (of either metric).
    ///
    /// # Panics
    /// If the coefficients are not flagged as Levi-Civita output.
    pub fn levi_civita(
        coefficients: ConnectionCoefficients,
        of_reference: bool,
    ) -> AffineConnection {
        assert!(
            coefficients.is_levi_civita(),
            "coefficients were not produced by a Levi-Civita construction"
        );
        AffineConnection {
            coefficients,
            provenance: if of_reference {
                ConnectionProvenance::Reference
            } else {
                ConnectionProvenance::LeviCivitaDeformed
            },
        }
    }

    /// Wraps arbitrary coefficients.
    pub fn custom(coefficients: ConnectionCoefficients) -> AffineConnection {
        AffineConnection {
            coefficients,
            provenance: ConnectionProvenance::Custom,
        }
    }

    pub fn provenance(&self) -> ConnectionProvenance {
        self.provenance
    }

    pub fn coefficients(&self) -> &ConnectionCoefficients {
        &self.coefficients
    }

    pub fn dimension(&self) -> usize {
        self.coefficients.dimension()
    }

    pub fn get(&self, rho: usize, mu: usize, nu: usize) -> f64 {
        self.coefficients.get(rho, mu, nu)
    }
}

/// Nonmetricity `Q_{μνρ} = −∇_μ g_{νρ}`, stored `[μ][ν][ρ]`; symmetric in
/// its last two indices.
#[derive(Debug, Clone, PartialEq)]
pub struct NonmetricityTensor {
    values: Rank3Tensor,
}

impl NonmetricityTensor {
    /// Builds from a covariant metric derivative (negating it).
    ///
    /// # Panics
    /// If ∇g is not symmetric in (ν,ρ) to 1e-10 of its magnitude — that
    /// symmetry is inherited from the metric and its failure indicates the
    /// input was not a metric derivative.
    pub fn from_covariant_derivative(nabla_g: &Rank3Tensor) -> NonmetricityTensor {
        let n = nabla_g.dimension();
        let scale = nabla_g.max_abs().max(1.0);
        let mut values = Rank3Tensor::zeros(n);
        for mu in 0..n {
            for nu in 0..n {
                for rho in 0..n {
                    let defect = (nabla_g.get(mu, nu, rho) - nabla_g.get(mu, rho, nu)).abs();
                    assert!(
                        defect <= 1e-10 * scale,
                        "∇g not symmetric in its last index pair: defect {defect:.3e}"
                    );
                    values.set(mu, nu, rho, -nabla_g.get(mu, nu, rho));
                }
            }
        }
        NonmetricityTensor { values }
    }

    pub fn dimension(&self) -> usize {
        self.values.dimension()
    }

    /// `Q_{μνρ}`.
    pub fn get(&self, mu: usize, nu: usize, rho: usize) -> f64 {
        self.values.get(mu, nu, rho)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.max_abs()
    }

    /// Row-major `[μ][ν][ρ]` flattening.
    pub fn flatten(&self) -> &[f64] {
        self.values.flatten()
    }
}

/// The g-symmetric part of a rate tensor:
/// `Λ_μ = ½(L_μ + g⁻¹·L_μᵀ·g)`, per direction μ.
///
/// Multiples of the identity are fixed points; the result is always
/// g-self-adjoint (g·Λ_μ symmetric) and the map is idempotent.
pub fn sym_g(rate: &RateTensor, g: &MetricAtPoint) -> Result<RateTensor, ConnectionError> {
    let n = rate.dimension();
    if g.dimension() != n {
        return Err(ConnectionError::Dimension {
            rate: n,
            metric: g.dimension(),
        });
    }
    let gm = g.matrix();
    let inv = g.inverse();
    let mats = rate
        .directions()
        .iter()
        .map(|l| (l + inv * l.transpose() * gm) * 0.5)
        .collect();
    Ok(RateTensor::new(RateKind::Compensation, mats))
}

/// The total connection `Γ^ρ_{μν} = Γ°^ρ_{μν}[g] + Λ^ρ_{μν}`.
pub fn total_connection(
    g: &MetricField,
    compensation: &RateTensor,
    p: &ChartPoint,
    scheme: DifferentiationScheme,
) -> Result<AffineConnection, ConnectionError> {
    let n = g.dimension();
    if compensation.dimension() != n {
        return Err(ConnectionError::Dimension {
            rate: compensation.dimension(),
            metric: n,
        });
    }
    let base = metric::christoffel(g, p, scheme)?;
    let mut coefficients = ConnectionCoefficients::zeros(n);
    for rho in 0..n {
        for mu in 0..n {
            for nu in 0..n {
                coefficients.set(
                    rho,
                    mu,
                    nu,
                    base.get(rho, mu, nu) + compensation.get(rho, mu, nu),
                );
            }
        }
    }
    Ok(AffineConnection {
        coefficients,
        provenance: ConnectionProvenance::Total,
    })
}

/// The deviation `C = Γ − Γ°[g]`. For a connection built by
/// [`total_connection`] this reproduces the compensation tensor to 1e-10.
pub fn deviation(
    connection: &AffineConnection,
    g: &MetricField,
    p: &ChartPoint,
    scheme: DifferentiationScheme,
) -> Result<ConnectionCoefficients, ConnectionError> {
    let base = metric::christoffel(g, p, scheme)?;
    Ok(connection.coefficients().difference(&base))
}

/// The covariant derivative of the metric under an arbitrary connection:
/// `∇_μ g_{νρ} = ∂_μ g_{νρ} − Γ^σ_{μν} g_{σρ} − Γ^σ_{μρ} g_{νσ}`.
/// Index order of the result: `[μ][ν][ρ]`.
pub fn covariant_derivative_metric(
    connection: &AffineConnection,
    g: &MetricField,
    p: &ChartPoint,
    scheme: DifferentiationScheme,
) -> Result<Rank3Tensor, ConnectionError> {
    let n = g.dimension();
    if connection.dimension() != n {
        return Err(ConnectionError::Dimension {
            rate: connection.dimension(),
            metric: n,
        });
    }
    let g_at = metric::metric_at(g, p)?;
    let mut dg = Vec::with_capacity(n);
    for mu in 0..n {
        let d = diff::partial_matrix(g, p, mu, scheme)?;
        dg.push((&d + d.transpose()) * 0.5);
    }
    let gm = g_at.matrix();
    let mut out = Rank3Tensor::zeros(n);
    for (mu, dg_mu) in dg.iter().enumerate() {
        for nu in 0..n {
            for rho in 0..n {
                let mut val = dg_mu[(nu, rho)];
                for sigma in 0..n {
                    val -= connection.get(sigma, mu, nu) * gm[(sigma, rho)];
                    val -= connection.get(sigma, mu, rho) * gm[(nu, sigma)];
                }
                out.set(mu, nu, rho, val);
            }
        }
    }
    Ok(out)
}

/// Torsion `T^ρ_{μν} = Γ^ρ_{μν} − Γ^ρ_{νμ}`, stored `[ρ][μ][ν]`.
pub fn torsion(connection: &AffineConnection) -> Rank3Tensor {
    let n = connection.dimension();
    let mut out = Rank3Tensor::zeros(n);
    for rho in 0..n {
        for mu in 0..n {
            for nu in 0..n {
                out.set(
                    rho,
                    mu,
                    nu,
                    connection.get(rho, mu, nu) - connection.get(rho, nu, mu),
                );
            }
        }
    }
    out
}

/// max over μ of the asymmetry of `g·Λ_μ` — zero exactly when the rate is
/// g-self-adjoint in every direction.
pub fn self_adjointness_defect(rate: &RateTensor, g: &MetricAtPoint) -> f64 {
    rate.directions()
        .iter()
        .map(|l| {
            let lowered = g.matrix() * l;
            (&lowered - lowered.transpose()).amax()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;
    use crate::fields::MatrixField;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};

    fn random_spd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        a.transpose() * &a + DMatrix::identity(n, n)
    }

    #[test]
    fn sym_g_matches_triple_loop_oracle() {
        // Independent oracle: dense index evaluation of
        // Λ^ρ_{μν} = ½(L^ρ_{μν} + g^{ρλ} g_{νσ} L^σ_{μλ}).
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(2..=4);
            let g = MetricAtPoint::new(random_spd(&mut rng, n)).unwrap();
            let mats: Vec<DMatrix<f64>> = (0..n)
                .map(|_| DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0)))
                .collect();
            let rate = RateTensor::new(RateKind::DeformedFrame, mats);
            let lambda = sym_g(&rate, &g).unwrap();

            let inv = g.inverse();
            let gm = g.matrix();
            for rho in 0..n {
                for mu in 0..n {
                    for nu in 0..n {
                        let mut lowered_term = 0.0;
                        for lam in 0..n {
                            for sig in 0..n {
                                lowered_term +=
                                    inv[(rho, lam)] * gm[(nu, sig)] * rate.get(sig, mu, lam);
                            }
                        }
                        let expected = 0.5 * (rate.get(rho, mu, nu) + lowered_term);
                        let got = lambda.get(rho, mu, nu);
                        assert!(
                            (got - expected).abs() < 1e-12,
                            "Λ^{rho}_{{{mu}{nu}}}: {got} vs {expected}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn sym_g_shear_spot_value() {
        // g and L₁ of the nondiagonal shear family at a=1, a′=1, s=½,
        // checked against the dense-loop formula by hand.
        let g = MetricAtPoint::new(DMatrix::from_row_slice(2, 2, &[1.25, 1.0, 1.0, 1.25])).unwrap();
        let l1 = DMatrix::from_row_slice(2, 2, &[20.0 / 9.0, 10.0 / 9.0, -16.0 / 9.0, -8.0 / 9.0]);
        let rate = RateTensor::new(
            RateKind::DeformedFrame,
            vec![l1.clone(), DMatrix::zeros(2, 2)],
        );
        let lambda = sym_g(&rate, &g).unwrap();
        // Fixed point only on the g-symmetric part: verify g·Λ symmetric and
        // Λ + antisymmetric part reassembles L.
        assert!(self_adjointness_defect(&lambda, &g) < 1e-12);
        let anti = &l1 - lambda.direction(0);
        let lowered = g.matrix() * anti;
        assert!(((&lowered + lowered.transpose()) * 0.5).amax() < 1e-12);
        // The deformed-frame rate here is NOT g-self-adjoint: Λ ≠ L.
        assert!((lambda.direction(0) - &l1).amax() > 0.1);
    }

    #[test]
    fn identity_multiples_are_fixed_points() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let g = MetricAtPoint::new(random_spd(&mut rng, 3)).unwrap();
        let mats: Vec<DMatrix<f64>> = (0..3)
            .map(|k| DMatrix::identity(3, 3) * (0.3 + 0.2 * k as f64))
            .collect();
        let rate = RateTensor::new(RateKind::DeformedFrame, mats.clone());
        let lambda = sym_g(&rate, &g).unwrap();
        for (mu, mat) in mats.iter().enumerate() {
            assert!((lambda.direction(mu) - mat).amax() < 1e-14);
        }
    }

    #[test]
    fn sym_g_is_idempotent() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let n = rng.gen_range(2..=4);
            let g = MetricAtPoint::new(random_spd(&mut rng, n)).unwrap();
            let mats: Vec<DMatrix<f64>> = (0..n)
                .map(|_| DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0)))
                .collect();
            let rate = RateTensor::new(RateKind::DeformedFrame, mats);
            let once = sym_g(&rate, &g).unwrap();
            let twice = sym_g(&once, &g).unwrap();
            assert!(once.max_abs_difference(&twice) <= 1e-12 * (1.0 + once.max_abs()));
        }
    }

    #[test]
    fn projection_split_is_g_orthogonal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let n = rng.gen_range(2..=4);
            let g = MetricAtPoint::new(random_spd(&mut rng, n)).unwrap();
            let mats: Vec<DMatrix<f64>> = (0..n)
                .map(|_| DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0)))
                .collect();
            let rate = RateTensor::new(RateKind::DeformedFrame, mats);
            let lambda = sym_g(&rate, &g).unwrap();
            assert!(self_adjointness_defect(&lambda, &g) < 1e-10);
            // The remainder is g-anti-self-adjoint.
            for mu in 0..n {
                let anti = rate.direction(mu) - lambda.direction(mu);
                let lowered = g.matrix() * anti;
                let defect = ((&lowered + lowered.transpose()) * 0.5).amax();
                assert!(defect < 1e-10, "direction {mu}: {defect}");
            }
        }
    }

    #[test]
    fn levi_civita_connection_is_metric_compatible_and_torsion_free() {
        let chart = Chart::new(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
        let metric = MatrixField::from_expressions(
            &chart,
            &[
                vec!["exp(0.4*x)".to_string(), "0.1".to_string()],
                vec!["0.1".to_string(), "1 + 0.2*y^2".to_string()],
            ],
        )
        .unwrap();
        let p = chart.point(&[0.3, -0.6]).unwrap();
        let scheme = DifferentiationScheme::analytic();
        let gamma = metric::christoffel(&metric, &p, scheme).unwrap();
        let conn = AffineConnection::levi_civita(gamma, false);
        assert_eq!(conn.provenance(), ConnectionProvenance::LeviCivitaDeformed);
        let nabla = covariant_derivative_metric(&conn, &metric, &p, scheme).unwrap();
        assert!(nabla.max_abs() < 1e-12);
        assert!(torsion(&conn).max_abs() < 1e-14);
    }

    #[test]
    fn total_connection_deviation_roundtrip() {
        let chart = Chart::new(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
        let metric = MatrixField::from_expressions(
            &chart,
            &[
                vec!["exp(0.4*x)".to_string(), "0".to_string()],
                vec!["0".to_string(), "exp(0.4*x)".to_string()],
            ],
        )
        .unwrap();
        let p = chart.point(&[0.1, 0.5]).unwrap();
        let scheme = DifferentiationScheme::analytic();
        let g_at = metric::metric_at(&metric, &p).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mats: Vec<DMatrix<f64>> = (0..2)
            .map(|_| DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-1.0..1.0)))
            .collect();
        let lambda = sym_g(&RateTensor::new(RateKind::DeformedFrame, mats), &g_at).unwrap();
        let total = total_connection(&metric, &lambda, &p, scheme).unwrap();
        assert_eq!(total.provenance(), ConnectionProvenance::Total);

        let c = deviation(&total, &metric, &p, scheme).unwrap();
        for rho in 0..2 {
            for mu in 0..2 {
                for nu in 0..2 {
                    assert!((c.get(rho, mu, nu) - lambda.get(rho, mu, nu)).abs() < 1e-12);
                }
            }
        }

        // Γ° itself deviates by zero.
        let gamma0 = metric::christoffel(&metric, &p, scheme).unwrap();
        let lc = AffineConnection::levi_civita(gamma0, false);
        let zero_dev = deviation(&lc, &metric, &p, scheme).unwrap();
        assert!(zero_dev.max_abs() < 1e-14);

        // Nonmetricity identity: ∇_μg_{νρ} = −(g_{σρ}Λ^σ_{μν} + g_{νσ}Λ^σ_{μρ}).
        let nabla = covariant_derivative_metric(&total, &metric, &p, scheme).unwrap();
        let gm = g_at.matrix();
        for mu in 0..2 {
            for nu in 0..2 {
                for rho in 0..2 {
                    let mut expected = 0.0;
                    for sigma in 0..2 {
                        expected -= gm[(sigma, rho)] * lambda.get(sigma, mu, nu);
                        expected -= gm[(nu, sigma)] * lambda.get(sigma, mu, rho);
                    }
                    assert!((nabla.get(mu, nu, rho) - expected).abs() < 1e-12);
                }
            }
        }

        let q = NonmetricityTensor::from_covariant_derivative(&nabla);
        assert_eq!(q.get(0, 0, 1), -nabla.get(0, 0, 1));
        assert!((q.get(0, 0, 1) - q.get(0, 1, 0)).abs() < 1e-12);
    }

    #[test]
    fn pure_dilation_torsion_closed_form() {
        // Total connection of the dilation family: Γ = Γ°[g] + δ^k_j ∂_iφ, so
        // T^k_{ij} = δ^k_j∂_iφ − δ^k_i∂_jφ.
        let chart = Chart::new(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
        let metric = MatrixField::from_expressions(
            &chart,
            &[
                vec!["exp(2*(0.3*x + 0.1*y^2))".to_string(), "0".to_string()],
                vec!["0".to_string(), "exp(2*(0.3*x + 0.1*y^2))".to_string()],
            ],
        )
        .unwrap();
        let p = chart.point(&[0.7, -0.4]).unwrap();
        let scheme = DifferentiationScheme::analytic();
        let g_at = metric::metric_at(&metric, &p).unwrap();
        let dphi = [0.3, 0.1 * 2.0 * -0.4]; // ∂φ of φ = 0.3x + 0.1y²
        let mats: Vec<DMatrix<f64>> = (0..2)
            .map(|mu| DMatrix::identity(2, 2) * dphi[mu])
            .collect();
        let lambda = sym_g(&RateTensor::new(RateKind::DeformedFrame, mats), &g_at).unwrap();
        let total = total_connection(&metric, &lambda, &p, scheme).unwrap();
        let t = torsion(&total);
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let expected =
                        if k == j { dphi[i] } else { 0.0 } - if k == i { dphi[j] } else { 0.0 };
                    assert!((t.get(k, i, j) - expected).abs() < 1e-12);
                }
            }
        }
    }
}
