//! Scalar and matrix fields on a chart.
//!
//! A [`ScalarField`] is an evaluable real function of a chart point. It can be
//! backed by a parsed expression, by a native Rust closure, or by a small
//! algebra of combinators (linear combination, product, exponential). Every
//! backing except bare closures knows its own exact partial derivatives, and
//! the derivative of a combinator is again a combinator — so analytic
//! differentiation composes to any order.
//!
//! A [`MatrixField`] is a square matrix of scalar entries, or a native
//! matrix-valued closure with optional first/second derivative closures.
//!
//! All fields are immutable after construction and safe to share across
//! threads; evaluation is pure.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::chart::{Chart, ChartPoint};
use crate::exprlang::{self, EvalError, Expr};

type ScalarFn = Arc<dyn Fn(&[f64]) -> Result<f64, EvalError> + Send + Sync>;
type MatrixFn = Arc<dyn Fn(&[f64]) -> Result<DMatrix<f64>, EvalError> + Send + Sync>;
type MatrixPartialFn = Arc<dyn Fn(&[f64], usize) -> Result<DMatrix<f64>, EvalError> + Send + Sync>;
type MatrixSecondFn =
    Arc<dyn Fn(&[f64], usize, usize) -> Result<DMatrix<f64>, EvalError> + Send + Sync>;

enum ScalarNode {
    Const(f64),
    Expression(Expr),
    Native {
        name: String,
        eval: ScalarFn,
        /// Exact partials ∂_μ f as fields, when the author can supply them.
        partials: Option<Vec<ScalarField>>,
    },
    /// Σ_k coeff_k · field_k
    Linear {
        terms: Vec<(f64, ScalarField)>,
    },
    Product(ScalarField, ScalarField),
    Exp(ScalarField),
}

/// A real-valued field over one chart.
#[derive(Clone)]
pub struct ScalarField {
    chart: Chart,
    node: Arc<ScalarNode>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &*self.node {
            ScalarNode::Const(v) => write!(f, "ScalarField(const {v})"),
            ScalarNode::Expression(e) => write!(f, "ScalarField({e})"),
            ScalarNode::Native { name, .. } => write!(f, "ScalarField(native {name})"),
            ScalarNode::Linear { terms } => write!(f, "ScalarField(linear, {} terms)", terms.len()),
            ScalarNode::Product(..) => write!(f, "ScalarField(product)"),
            ScalarNode::Exp(_) => write!(f, "ScalarField(exp)"),
        }
    }
}

impl ScalarField {
    /// Parses `src` over the chart's coordinate names.
    pub fn expression(chart: &Chart, src: &str) -> Result<ScalarField, exprlang::ParseError> {
        let names = chart.coordinate_names();
        let expr = exprlang::parse(src, &names)?;
        Ok(ScalarField {
            chart: chart.clone(),
            node: Arc::new(ScalarNode::Expression(expr)),
        })
    }

    /// Wraps an already-built expression tree.
    ///
    /// # Panics
    /// If the expression references a coordinate index outside the chart.
    pub fn from_expr(chart: &Chart, expr: Expr) -> ScalarField {
        if let Some(max) = expr.max_var_index() {
            assert!(
                max < chart.dimension(),
                "expression uses coordinate index {max}, chart has {}",
                chart.dimension()
            );
        }
        ScalarField {
            chart: chart.clone(),
            node: Arc::new(ScalarNode::Expression(expr)),
        }
    }

    pub fn constant(chart: &Chart, value: f64) -> ScalarField {
        ScalarField {
            chart: chart.clone(),
            node: Arc::new(ScalarNode::Const(value)),
        }
    }

    /// A field backed by a Rust closure. Without registered partials it can
    /// only be differentiated by finite differences.
    pub fn native(
        chart: &Chart,
        name: impl Into<String>,
        eval: impl Fn(&[f64]) -> Result<f64, EvalError> + Send + Sync + 'static,
    ) -> ScalarField {
        ScalarField {
            chart: chart.clone(),
            node: Arc::new(ScalarNode::Native {
                name: name.into(),
                eval: Arc::new(eval),
                partials: None,
            }),
        }
    }

    /// A native field with exact partial derivatives, one field per direction.
    ///
    /// # Panics
    /// If the partial count differs from the chart dimension or charts differ.
    pub fn native_with_partials(
        chart: &Chart,
        name: impl Into<String>,
        eval: impl Fn(&[f64]) -> Result<f64, EvalError> + Send + Sync + 'static,
        partials: Vec<ScalarField>,
    ) -> ScalarField {
        assert_eq!(
            partials.len(),
            chart.dimension(),
            "one partial per direction"
        );
        for p in &partials {
            assert!(p.chart == *chart, "partials must live on the same chart");
        }
        ScalarField {
            chart: chart.clone(),
            node: Arc::new(ScalarNode::Native {
                name: name.into(),
                eval: Arc::new(eval),
                partials: Some(partials),
            }),
        }
    }

    /// Σ coeff·field. All fields must share one chart.
    ///
    /// # Panics
    /// On an empty term list or mismatched charts.
    pub fn linear_combination(terms: &[(f64, &ScalarField)]) -> ScalarField {
        assert!(!terms.is_empty(), "need at least one term");
        let chart = terms[0].1.chart.clone();
        for (_, f) in terms {
            assert!(f.chart == chart, "terms must live on the same chart");
        }
        ScalarField {
            chart,
            node: Arc::new(ScalarNode::Linear {
                terms: terms.iter().map(|(c, f)| (*c, (*f).clone())).collect(),
            }),
        }
    }

    /// Pointwise product.
    pub fn product(&self, other: &ScalarField) -> ScalarField {
        assert!(
            self.chart == other.chart,
            "factors must live on the same chart"
        );
        ScalarField {
            chart: self.chart.clone(),
            node: Arc::new(ScalarNode::Product(self.clone(), other.clone())),
        }
    }

    /// Pointwise e^f.
    pub fn exp(&self) -> ScalarField {
        ScalarField {
            chart: self.chart.clone(),
            node: Arc::new(ScalarNode::Exp(self.clone())),
        }
    }

    /// Pointwise −f.
    pub fn negate(&self) -> ScalarField {
        ScalarField::linear_combination(&[(-1.0, self)])
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    /// Evaluates at a validated point.
    pub fn eval(&self, p: &ChartPoint) -> Result<f64, EvalError> {
        self.eval_at(p.coordinates())
    }

    /// Evaluates at raw coordinates (used internally for stencil points that
    /// the caller has already validated against the chart).
    pub(crate) fn eval_at(&self, coords: &[f64]) -> Result<f64, EvalError> {
        match &*self.node {
            ScalarNode::Const(v) => Ok(*v),
            ScalarNode::Expression(e) => e.eval(coords),
            ScalarNode::Native { eval, .. } => eval(coords),
            ScalarNode::Linear { terms } => {
                let mut acc = 0.0;
                for (c, f) in terms {
                    acc += c * f.eval_at(coords)?;
                }
                Ok(acc)
            }
            ScalarNode::Product(a, b) => Ok(a.eval_at(coords)? * b.eval_at(coords)?),
            ScalarNode::Exp(a) => Ok(a.eval_at(coords)?.exp()),
        }
    }

    /// The exact partial ∂_μ as a field, when this backing supports it.
    pub fn analytic_partial(&self, mu: usize) -> Option<ScalarField> {
        match &*self.node {
            ScalarNode::Const(_) => Some(ScalarField::constant(&self.chart, 0.0)),
            ScalarNode::Expression(e) => Some(ScalarField {
                chart: self.chart.clone(),
                node: Arc::new(ScalarNode::Expression(exprlang::symbolic_partial(e, mu))),
            }),
            ScalarNode::Native { partials, .. } => partials.as_ref().map(|ps| ps[mu].clone()),
            ScalarNode::Linear { terms } => {
                let mut dterms = Vec::with_capacity(terms.len());
                for (c, f) in terms {
                    dterms.push((*c, f.analytic_partial(mu)?));
                }
                Some(ScalarField {
                    chart: self.chart.clone(),
                    node: Arc::new(ScalarNode::Linear { terms: dterms }),
                })
            }
            ScalarNode::Product(a, b) => {
                let da = a.analytic_partial(mu)?;
                let db = b.analytic_partial(mu)?;
                Some(ScalarField::linear_combination(&[
                    (1.0, &da.product(b)),
                    (1.0, &a.product(&db)),
                ]))
            }
            ScalarNode::Exp(a) => {
                let da = a.analytic_partial(mu)?;
                Some(da.product(self))
            }
        }
    }

    /// True when analytic partials exist down to the given derivative order.
    pub fn has_analytic_depth(&self, order: usize) -> bool {
        if order == 0 {
            return true;
        }
        match &*self.node {
            ScalarNode::Const(_) | ScalarNode::Expression(_) => true,
            ScalarNode::Native { partials, .. } => partials
                .as_ref()
                .is_some_and(|ps| ps.iter().all(|p| p.has_analytic_depth(order - 1))),
            ScalarNode::Linear { terms } => terms.iter().all(|(_, f)| f.has_analytic_depth(order)),
            ScalarNode::Product(a, b) => a.has_analytic_depth(order) && b.has_analytic_depth(order),
            ScalarNode::Exp(a) => a.has_analytic_depth(order),
        }
    }
}

enum MatrixNode {
    /// Row-major n×n scalar entries.
    Entries(Vec<ScalarField>),
    Native {
        name: String,
        eval: MatrixFn,
        partial: Option<MatrixPartialFn>,
        second: Option<MatrixSecondFn>,
    },
}

/// An n×n matrix-valued field over one chart (n = chart dimension).
#[derive(Clone)]
pub struct MatrixField {
    chart: Chart,
    node: Arc<MatrixNode>,
}

impl std::fmt::Debug for MatrixField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &*self.node {
            MatrixNode::Entries(_) => write!(f, "MatrixField(entries, chart {})", self.chart),
            MatrixNode::Native { name, .. } => write!(f, "MatrixField(native {name})"),
        }
    }
}

impl MatrixField {
    /// Builds from row-major scalar entries.
    ///
    /// # Panics
    /// If the entry count is not n² or any entry lives on another chart.
    pub fn from_entries(chart: &Chart, entries: Vec<ScalarField>) -> MatrixField {
        let n = chart.dimension();
        assert_eq!(entries.len(), n * n, "need n*n row-major entries");
        for e in &entries {
            assert!(e.chart() == chart, "entries must live on the chart");
        }
        MatrixField {
            chart: chart.clone(),
            node: Arc::new(MatrixNode::Entries(entries)),
        }
    }

    /// Parses an n×n array of expression strings (rows of entries).
    pub fn from_expressions(
        chart: &Chart,
        rows: &[Vec<String>],
    ) -> Result<MatrixField, exprlang::ParseError> {
        let n = chart.dimension();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            for src in row {
                entries.push(ScalarField::expression(chart, src)?);
            }
        }
        assert_eq!(entries.len(), n * n, "need n rows of n expressions");
        Ok(MatrixField::from_entries(chart, entries))
    }

    /// A constant matrix field.
    ///
    /// # Panics
    /// If the matrix is not n×n.
    pub fn constant(chart: &Chart, value: DMatrix<f64>) -> MatrixField {
        let n = chart.dimension();
        assert_eq!(value.nrows(), n);
        assert_eq!(value.ncols(), n);
        let entries = (0..n * n)
            .map(|k| ScalarField::constant(chart, value[(k / n, k % n)]))
            .collect();
        MatrixField::from_entries(chart, entries)
    }

    /// The identity matrix field.
    pub fn identity(chart: &Chart) -> MatrixField {
        MatrixField::constant(
            chart,
            DMatrix::identity(chart.dimension(), chart.dimension()),
        )
    }

    /// A matrix field backed by a closure, differentiable only by finite
    /// differences unless derivative closures are supplied via
    /// [`MatrixField::native_with_partials`].
    pub fn native(
        chart: &Chart,
        name: impl Into<String>,
        eval: impl Fn(&[f64]) -> Result<DMatrix<f64>, EvalError> + Send + Sync + 'static,
    ) -> MatrixField {
        MatrixField {
            chart: chart.clone(),
            node: Arc::new(MatrixNode::Native {
                name: name.into(),
                eval: Arc::new(eval),
                partial: None,
                second: None,
            }),
        }
    }

    /// A native matrix field with exact first and (optionally) second
    /// derivative closures: `partial(x, μ) = ∂_μF(x)`,
    /// `second(x, κ, μ) = ∂_κ∂_μF(x)`.
    pub fn native_with_partials(
        chart: &Chart,
        name: impl Into<String>,
        eval: impl Fn(&[f64]) -> Result<DMatrix<f64>, EvalError> + Send + Sync + 'static,
        partial: impl Fn(&[f64], usize) -> Result<DMatrix<f64>, EvalError> + Send + Sync + 'static,
        second: Option<MatrixSecondFn>,
    ) -> MatrixField {
        MatrixField {
            chart: chart.clone(),
            node: Arc::new(MatrixNode::Native {
                name: name.into(),
                eval: Arc::new(eval),
                partial: Some(Arc::new(partial)),
                second,
            }),
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dimension(&self) -> usize {
        self.chart.dimension()
    }

    /// Evaluates at a validated point.
    pub fn eval(&self, p: &ChartPoint) -> Result<DMatrix<f64>, EvalError> {
        self.eval_at(p.coordinates())
    }

    pub(crate) fn eval_at(&self, coords: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        let n = self.chart.dimension();
        match &*self.node {
            MatrixNode::Entries(entries) => {
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] = entries[i * n + j].eval_at(coords)?;
                    }
                }
                Ok(m)
            }
            MatrixNode::Native { eval, .. } => eval(coords),
        }
    }

    /// True when exact derivatives exist to the given order (1 or 2).
    pub fn has_analytic_depth(&self, order: usize) -> bool {
        match &*self.node {
            MatrixNode::Entries(entries) => entries.iter().all(|e| e.has_analytic_depth(order)),
            MatrixNode::Native {
                partial, second, ..
            } => match order {
                0 => true,
                1 => partial.is_some(),
                _ => partial.is_some() && second.is_some(),
            },
        }
    }

    /// Exact ∂_μF at raw coordinates. Callers check [`Self::has_analytic_depth`]
    /// first; an unsupported backing reports an evaluation error.
    pub(crate) fn analytic_partial_at(
        &self,
        coords: &[f64],
        mu: usize,
    ) -> Result<DMatrix<f64>, EvalError> {
        let n = self.chart.dimension();
        match &*self.node {
            MatrixNode::Entries(entries) => {
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        let d = entries[i * n + j].analytic_partial(mu).ok_or_else(|| {
                            no_analytic_partial(&format!("matrix entry ({i},{j})"), coords)
                        })?;
                        m[(i, j)] = d.eval_at(coords)?;
                    }
                }
                Ok(m)
            }
            MatrixNode::Native { name, partial, .. } => match partial {
                Some(p) => p(coords, mu),
                None => Err(no_analytic_partial(name, coords)),
            },
        }
    }

    /// Exact ∂_κ∂_μF at raw coordinates.
    pub(crate) fn analytic_second_at(
        &self,
        coords: &[f64],
        kappa: usize,
        mu: usize,
    ) -> Result<DMatrix<f64>, EvalError> {
        let n = self.chart.dimension();
        match &*self.node {
            MatrixNode::Entries(entries) => {
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        let d = entries[i * n + j]
                            .analytic_partial(mu)
                            .and_then(|d| d.analytic_partial(kappa))
                            .ok_or_else(|| {
                                no_analytic_partial(&format!("matrix entry ({i},{j})"), coords)
                            })?;
                        m[(i, j)] = d.eval_at(coords)?;
                    }
                }
                Ok(m)
            }
            MatrixNode::Native { name, second, .. } => match second {
                Some(s) => s(coords, kappa, mu),
                None => Err(no_analytic_partial(name, coords)),
            },
        }
    }
}

fn no_analytic_partial(what: &str, coords: &[f64]) -> EvalError {
    EvalError {
        expression: what.to_string(),
        point: coords.to_vec(),
        message: "no exact derivative is registered for this field".into(),
    }
}
