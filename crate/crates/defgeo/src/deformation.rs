//! Pure deformation fields and their rate tensors.
//!
//! A deformation field `P` carries a reference metric `ḡ` into the deformed
//! metric `g = PᵀḡP`. "Pure" means `P` is ḡ-symmetric (the lowered matrix
//! `ḡP` is symmetric) and positive — no rotational part. Validation samples
//! these conditions on a grid at construction time.
//!
//! Rate tensors measure how `P` varies across the chart:
//! - raw rate `L̄_μ = P⁻¹ ∇̄_μP`, with `∇̄` the Levi-Civita connection of `ḡ`;
//! - deformed-frame rate `L_μ = P⁻¹ L̄_μ P`;
//! - the two coincide in a direction exactly when `[L̄_μ, P] = 0`.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use crate::chart::{Chart, ChartPoint};
use crate::diff::{self, DiffError, DifferentiationScheme};
use crate::exprlang::EvalError;
use crate::fields::MatrixField;
use crate::metric::{self, MetricAtPoint, MetricError, MetricField};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DeformationError {
    #[error(
        "not a pure deformation at {point:?}: lowered matrix asymmetry {defect:.3e} \
         exceeds {tolerance:.3e}"
    )]
    NotMetricSymmetric {
        point: Vec<f64>,
        defect: f64,
        tolerance: f64,
    },
    #[error("not a pure deformation at {point:?}: eigenvalue {eigenvalue:.3e} is not positive")]
    NotPositive { point: Vec<f64>, eigenvalue: f64 },
    #[error("deformation and reference metric live on different charts")]
    ChartMismatch,
    #[error("dimension mismatch: {left}×{left} vs {right}×{right}")]
    Dimension { left: usize, right: usize },
    #[error("deformation matrix is not invertible at {point:?}")]
    NotInvertible { point: Vec<f64> },
    #[error(
        "recovery postcondition failed: residual {residual:.3e} (tolerance {tolerance:.3e}), \
         condition number {condition:.3e}"
    )]
    ReconstructionFailed {
        residual: f64,
        tolerance: f64,
        condition: f64,
    },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Which rate a [`RateTensor`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    /// `L̄_μ = P⁻¹∇̄_μP`, components relative to the reference geometry.
    Raw,
    /// `L_μ = P⁻¹L̄_μP`, components in the frame adapted to the deformed metric.
    DeformedFrame,
    /// `Λ_μ`, the g-symmetric part of the deformed-frame rate.
    Compensation,
}

/// A per-direction family of n×n matrices: the matrix for direction μ has row
/// index ρ and column index ν, housing the component `X^ρ_{μν}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTensor {
    kind: RateKind,
    mats: Vec<DMatrix<f64>>,
}

impl RateTensor {
    /// # Panics
    /// If matrices are not square, not all of one size, not one per chart
    /// direction, or contain non-finite entries.
    pub fn new(kind: RateKind, mats: Vec<DMatrix<f64>>) -> RateTensor {
        let n = mats.len();
        assert!(n > 0, "need one matrix per direction");
        for m in &mats {
            assert_eq!(m.nrows(), n, "direction count must equal matrix size");
            assert_eq!(m.ncols(), n);
            assert!(
                m.iter().all(|v| v.is_finite()),
                "rate entries must be finite"
            );
        }
        RateTensor { kind, mats }
    }

    pub fn zeros(kind: RateKind, n: usize) -> RateTensor {
        RateTensor::new(kind, vec![DMatrix::zeros(n, n); n])
    }

    pub fn kind(&self) -> RateKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.mats.len()
    }

    /// The matrix for derivative direction μ.
    pub fn direction(&self, mu: usize) -> &DMatrix<f64> {
        &self.mats[mu]
    }

    pub fn directions(&self) -> &[DMatrix<f64>] {
        &self.mats
    }

    /// Component `X^ρ_{μν}`.
    pub fn get(&self, rho: usize, mu: usize, nu: usize) -> f64 {
        self.mats[mu][(rho, nu)]
    }

    pub fn max_abs(&self) -> f64 {
        self.mats.iter().fold(0.0, |m, mat| m.max(mat.amax()))
    }

    pub fn max_abs_difference(&self, other: &RateTensor) -> f64 {
        assert_eq!(self.dimension(), other.dimension());
        self.mats
            .iter()
            .zip(&other.mats)
            .fold(0.0, |m, (a, b)| m.max((a - b).amax()))
    }

    /// Row-major `[ρ][μ][ν]` flattening (matching connection coefficients).
    pub fn flatten(&self) -> Vec<f64> {
        let n = self.dimension();
        let mut out = Vec::with_capacity(n * n * n);
        for rho in 0..n {
            for mu in 0..n {
                for nu in 0..n {
                    out.push(self.get(rho, mu, nu));
                }
            }
        }
        out
    }
}

/// Grid resolution (points per axis) used to sample validity conditions.
pub const DEFAULT_VALIDATION_RESOLUTION: usize = 11;

/// A validated pure deformation field together with its reference metric.
#[derive(Debug, Clone)]
pub struct DeformationField {
    matrix: MatrixField,
    reference: MetricField,
}

impl DeformationField {
    /// Validates ḡ-symmetry and positivity of `P` on the default sampling grid
    /// (11 points per axis over the chart box).
    pub fn new(
        matrix: MatrixField,
        reference: MetricField,
    ) -> Result<DeformationField, DeformationError> {
        DeformationField::with_validation_resolution(
            matrix,
            reference,
            DEFAULT_VALIDATION_RESOLUTION,
        )
    }

    /// As [`DeformationField::new`] with an explicit sampling resolution
    /// (0 skips sampling; every later evaluation still validates locally).
    pub fn with_validation_resolution(
        matrix: MatrixField,
        reference: MetricField,
        resolution: usize,
    ) -> Result<DeformationField, DeformationError> {
        if matrix.chart() != reference.chart() {
            return Err(DeformationError::ChartMismatch);
        }
        let field = DeformationField { matrix, reference };
        if resolution > 0 {
            for p in field.matrix.chart().grid(resolution) {
                field.check_pure_at(&p)?;
            }
        }
        Ok(field)
    }

    pub fn chart(&self) -> &Chart {
        self.matrix.chart()
    }

    pub fn matrix_field(&self) -> &MatrixField {
        &self.matrix
    }

    pub fn reference_metric(&self) -> &MetricField {
        &self.reference
    }

    /// Evaluates `P` at a point (no purity re-check; see
    /// [`DeformationField::check_pure_at`]).
    pub fn eval(&self, p: &ChartPoint) -> Result<DMatrix<f64>, DeformationError> {
        Ok(self.matrix.eval(p)?)
    }

    /// Verifies the pure-deformation conditions at one point: `ḡP` symmetric
    /// to `1e-10·‖ḡP‖` and `E·P·E⁻¹` positive-definite, where `ḡ = EᵀE`.
    pub fn check_pure_at(&self, p: &ChartPoint) -> Result<(), DeformationError> {
        let gbar = metric::metric_at(&self.reference, p)?;
        let pm = self.matrix.eval(p)?;
        check_pure(&gbar, &pm, p.coordinates())
    }
}

fn check_pure(
    gbar: &MetricAtPoint,
    pm: &DMatrix<f64>,
    coords: &[f64],
) -> Result<(), DeformationError> {
    let lowered = gbar.matrix() * pm;
    let scale = lowered.amax().max(f64::MIN_POSITIVE);
    let defect = (&lowered - lowered.transpose()).amax();
    let tolerance = 1e-10 * scale;
    if !defect.is_finite() || defect > tolerance {
        return Err(DeformationError::NotMetricSymmetric {
            point: coords.to_vec(),
            defect,
            tolerance,
        });
    }
    // ḡ-symmetric P is similar to the symmetric matrix E·P·E⁻¹ (ḡ = EᵀE), so
    // positivity of P's spectrum is positive-definiteness of that conjugate.
    let e = metric_factor(gbar);
    let e_inv = e
        .clone()
        .try_inverse()
        .expect("triangular factor of a positive-definite matrix is invertible");
    let conj = &e * pm * &e_inv;
    let sym = (&conj + conj.transpose()) * 0.5;
    let eigen = SymmetricEigen::new(sym);
    let min = eigen
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min.is_nan() || min <= 0.0 {
        return Err(DeformationError::NotPositive {
            point: coords.to_vec(),
            eigenvalue: min,
        });
    }
    Ok(())
}

/// Upper-triangular `E` with `ḡ = EᵀE` (transpose of the Cholesky factor).
fn metric_factor(g: &MetricAtPoint) -> DMatrix<f64> {
    let chol = Cholesky::new(g.matrix().clone()).expect("validated metric is positive-definite");
    chol.l().transpose()
}

/// The basic law `g = PᵀḡP` evaluated at one point. The result is symmetrized
/// (averaged with its transpose) before validation and caching.
pub fn deformed_metric(
    p_field: &DeformationField,
    gbar: &MetricField,
    p: &ChartPoint,
) -> Result<MetricAtPoint, DeformationError> {
    let gbar_at = metric::metric_at(gbar, p)?;
    let pm = p_field.eval(p)?;
    check_pure(&gbar_at, &pm, p.coordinates())?;
    let g = pm.transpose() * gbar_at.matrix() * &pm;
    let g = (&g + g.transpose()) * 0.5;
    Ok(MetricAtPoint::new(g)?)
}

/// The deformed metric `g = PᵀḡP` as a matrix field, with exact derivatives
/// assembled by the product rule whenever both `P` and `ḡ` provide them.
pub fn deformed_metric_field(p_field: &DeformationField) -> MetricField {
    let chart = p_field.chart().clone();
    let pf = p_field.matrix_field().clone();
    let gf = p_field.reference_metric().clone();

    let eval = {
        let (pf, gf) = (pf.clone(), gf.clone());
        move |coords: &[f64]| -> Result<DMatrix<f64>, EvalError> {
            let pm = pf.eval_at(coords)?;
            let gm = gf.eval_at(coords)?;
            let g = pm.transpose() * gm * &pm;
            Ok((&g + g.transpose()) * 0.5)
        }
    };

    if !(pf.has_analytic_depth(1) && gf.has_analytic_depth(1)) {
        return MatrixField::native(&chart, "deformed metric", eval);
    }

    let partial = {
        let (pf, gf) = (pf.clone(), gf.clone());
        move |coords: &[f64], mu: usize| -> Result<DMatrix<f64>, EvalError> {
            let pm = pf.eval_at(coords)?;
            let gm = gf.eval_at(coords)?;
            let dp = pf.analytic_partial_at(coords, mu)?;
            let dg = gf.analytic_partial_at(coords, mu)?;
            let d =
                dp.transpose() * &gm * &pm + pm.transpose() * dg * &pm + pm.transpose() * gm * dp;
            Ok((&d + d.transpose()) * 0.5)
        }
    };

    let second: Option<_> = if pf.has_analytic_depth(2) && gf.has_analytic_depth(2) {
        let (pf, gf) = (pf.clone(), gf.clone());
        let f = move |coords: &[f64], kappa: usize, mu: usize| -> Result<DMatrix<f64>, EvalError> {
            let pm = pf.eval_at(coords)?;
            let gm = gf.eval_at(coords)?;
            let dp_m = pf.analytic_partial_at(coords, mu)?;
            let dp_k = pf.analytic_partial_at(coords, kappa)?;
            let dg_m = gf.analytic_partial_at(coords, mu)?;
            let dg_k = gf.analytic_partial_at(coords, kappa)?;
            let ddp = pf.analytic_second_at(coords, kappa, mu)?;
            let ddg = gf.analytic_second_at(coords, kappa, mu)?;
            // ∂_κ of (∂_μPᵀ ḡ P + Pᵀ ∂_μḡ P + Pᵀ ḡ ∂_μP), nine terms.
            let d = ddp.transpose() * &gm * &pm
                + dp_m.transpose() * &dg_k * &pm
                + dp_m.transpose() * &gm * &dp_k
                + dp_k.transpose() * &dg_m * &pm
                + pm.transpose() * ddg * &pm
                + pm.transpose() * &dg_m * &dp_k
                + dp_k.transpose() * &gm * &dp_m
                + pm.transpose() * &dg_k * &dp_m
                + pm.transpose() * &gm * ddp;
            Ok((&d + d.transpose()) * 0.5)
        };
        Some(std::sync::Arc::new(f)
            as std::sync::Arc<
                dyn Fn(&[f64], usize, usize) -> Result<DMatrix<f64>, EvalError> + Send + Sync,
            >)
    } else {
        None
    };

    MatrixField::native_with_partials(&chart, "deformed metric", eval, partial, second)
}

/// The square root of a symmetric positive-definite matrix by the scaled
/// Denman–Beavers iteration: `Y → ½(μY + (μZ)⁻¹)`, `Z → ½(μZ + (μY)⁻¹)`
/// from `Y = S, Z = I`, with determinantal scaling
/// `μ = (det Y · det Z)^{−1/(2n)}`. `Y` converges quadratically to `S^{1/2}`.
///
/// A spectral square root can lose half its digits when two eigenvalues
/// nearly coincide; the coupled iteration keeps `‖Y² − S‖` at rounding
/// level regardless. Returns the iterate with the smallest defect, or
/// `None` if an iterate degenerates before any progress is made.
fn spd_sqrt(s: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = s.nrows();
    let floor = 2.0 * n as f64 * f64::EPSILON * s.amax();
    let mut y = s.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    let mut best: Option<DMatrix<f64>> = None;
    let mut best_defect = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..64 {
        let defect = (&y * &y - s).amax();
        if defect < best_defect {
            best = Some(y.clone());
            best_defect = defect;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 3 {
                break;
            }
        }
        if defect <= floor {
            break;
        }
        let det_y = y.determinant().abs();
        let det_z = z.determinant().abs();
        if !det_y.is_normal() || !det_z.is_normal() {
            break;
        }
        let mu = (det_y * det_z).powf(-0.5 / n as f64);
        let y_inv = y.clone().try_inverse()?;
        let z_inv = z.clone().try_inverse()?;
        let next_y = (&y * mu + &z_inv / mu) * 0.5;
        let next_z = (&z * mu + &y_inv / mu) * 0.5;
        y = (&next_y + next_y.transpose()) * 0.5;
        z = (&next_z + next_z.transpose()) * 0.5;
    }
    best
}

/// Recovers the unique ḡ-symmetric positive-definite `P` with `PᵀḡP = g`.
///
/// Factor `ḡ = EᵀE`, form the symmetric positive-definite `S = E·(ḡ⁻¹g)·E⁻¹`,
/// take its matrix square root, and conjugate back: `P = E⁻¹·S^{1/2}·E`.
/// The square root comes from whichever of the Denman–Beavers iteration and
/// the spectral decomposition reconstructs `S` more accurately — the
/// iteration wins when the pencil has nearly degenerate eigenvalues.
/// Postconditions (`‖PᵀḡP − g‖∞ ≤ 1e-9·‖g‖∞`, ḡ-symmetry of `P` to `1e-9`)
/// are verified before returning.
pub fn recover_deformation(
    gbar: &MetricAtPoint,
    g: &MetricAtPoint,
) -> Result<DMatrix<f64>, DeformationError> {
    let n = gbar.dimension();
    if g.dimension() != n {
        return Err(DeformationError::Dimension {
            left: n,
            right: g.dimension(),
        });
    }
    let e = metric_factor(gbar);
    let e_inv = e
        .clone()
        .try_inverse()
        .expect("triangular factor of a positive-definite matrix is invertible");
    // S = E ḡ⁻¹ g E⁻¹ = E⁻ᵀ g E⁻¹, symmetric positive-definite.
    let s = &e * gbar.inverse() * g.matrix() * &e_inv;
    let s = (&s + s.transpose()) * 0.5;
    let eigen = SymmetricEigen::new(s.clone());
    let min = eigen
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let max = eigen.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if min.is_nan() || min <= 0.0 {
        return Err(DeformationError::NotPositive {
            point: Vec::new(),
            eigenvalue: min,
        });
    }
    let condition = max / min;
    let sqrt_vals = DMatrix::from_diagonal(&eigen.eigenvalues.map(f64::sqrt));
    let spectral = &eigen.eigenvectors * sqrt_vals * eigen.eigenvectors.transpose();
    let spectral_defect = (&spectral * &spectral - &s).amax();
    let sqrt_s = match spd_sqrt(&s) {
        Some(iterated) if (&iterated * &iterated - &s).amax() < spectral_defect => iterated,
        _ => spectral,
    };
    let p = &e_inv * sqrt_s * &e;

    let reconstructed = p.transpose() * gbar.matrix() * &p;
    let residual = (&reconstructed - g.matrix()).amax();
    let tolerance = 1e-9 * g.matrix().amax();
    let lowered = gbar.matrix() * &p;
    let sym_defect = (&lowered - lowered.transpose()).amax();
    let sym_tolerance = 1e-9 * lowered.amax().max(f64::MIN_POSITIVE);
    if residual > tolerance || sym_defect > sym_tolerance {
        return Err(DeformationError::ReconstructionFailed {
            residual: residual.max(sym_defect),
            tolerance: tolerance.max(sym_tolerance),
            condition,
        });
    }
    Ok(p)
}

/// The raw rate `L̄_μ = P⁻¹ ∇̄_μP` with
/// `∇̄_μP^α_ν = ∂_μP^α_ν + Γ̄^α_{μβ}P^β_ν − Γ̄^β_{μν}P^α_β`,
/// i.e. per direction `∇̄_μP = ∂_μP + Γ̄_μP − PΓ̄_μ`.
pub fn raw_rate(
    p_field: &DeformationField,
    gbar: &MetricField,
    p: &ChartPoint,
    scheme: DifferentiationScheme,
) -> Result<RateTensor, DeformationError> {
    let n = p_field.chart().dimension();
    let gamma_bar = metric::christoffel(gbar, p, scheme)?;
    let pm = p_field.eval(p)?;
    let p_inv = pm
        .clone()
        .try_inverse()
        .ok_or_else(|| DeformationError::NotInvertible {
            point: p.coordinates().to_vec(),
        })?;
    let mut mats = Vec::with_capacity(n);
    for mu in 0..n {
        let dp = diff::partial_matrix(p_field.matrix_field(), p, mu, scheme)?;
        let gm = gamma_bar.direction_matrix(mu);
        let covariant = dp + &gm * &pm - &pm * &gm;
        mats.push(&p_inv * covariant);
    }
    Ok(RateTensor::new(RateKind::Raw, mats))
}

/// The deformed-frame rate `L_μ = P⁻¹ L̄_μ P`.
pub fn deformed_frame_rate(
    p_at_point: &DMatrix<f64>,
    raw: &RateTensor,
) -> Result<RateTensor, DeformationError> {
    let p_inv = p_at_point
        .clone()
        .try_inverse()
        .ok_or_else(|| DeformationError::NotInvertible { point: Vec::new() })?;
    let mats = raw
        .directions()
        .iter()
        .map(|lbar| &p_inv * lbar * p_at_point)
        .collect();
    Ok(RateTensor::new(RateKind::DeformedFrame, mats))
}

/// The coincidence defect `[L̄_μ, P] = L̄_μP − PL̄_μ`; it vanishes exactly when
/// the raw and deformed-frame rates agree in direction μ.
pub fn commutator_defect(lbar_mu: &DMatrix<f64>, p_at_point: &DMatrix<f64>) -> DMatrix<f64> {
    lbar_mu * p_at_point - p_at_point * lbar_mu
}
