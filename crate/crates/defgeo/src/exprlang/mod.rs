//! A small deterministic expression language for declaring metrics, deformation
//! fields, and scalar fields in text form.
//!
//! The grammar covers real literals, coordinate variables, the binary operators
//! `+ - * / ^`, unary minus, and a fixed set of functions: `sin`, `cos`, `tan`,
//! `cot`, `exp`, `log`, `sqrt`, `sinh`, `cosh`, `abs`. `^` binds tightest and is
//! right-associative, then unary minus, then `* /`, then `+ -`; parentheses
//! override. `log` is the natural logarithm.
//!
//! Expressions are immutable after construction and safe to evaluate from many
//! threads. Evaluation is pure: identical arguments give bit-identical results.

mod parser;

use std::fmt;

pub use parser::parse;

/// Binary operators, in increasing binding strength: `+ -` < `* /` < `^`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// The fixed function set of the language.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Cot,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Abs,
}

impl Func {
    pub(crate) fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Cot => "cot",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Abs => "abs",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "tan" => Some(Func::Tan),
            "cot" => Some(Func::Cot),
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "sqrt" => Some(Func::Sqrt),
            "sinh" => Some(Func::Sinh),
            "cosh" => Some(Func::Cosh),
            "abs" => Some(Func::Abs),
            _ => None,
        }
    }
}

/// Abstract syntax tree of an expression over a fixed coordinate chart.
///
/// Variables carry both the coordinate index (position in the chart's
/// coordinate list) and the name they were written with.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(f64),
    Var { index: usize, name: String },
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Apply(Func, Box<Expr>),
}

/// Error from [`parse`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("invalid coordinate name `{name}`: {reason}")]
    BadCoordinate { name: String, reason: String },
}

/// Error from [`Expr::eval`], carrying the evaluation point and the offending
/// sub-expression.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("domain error evaluating `{expression}` at {point:?}: {message}")]
pub struct EvalError {
    pub expression: String,
    pub point: Vec<f64>,
    pub message: String,
}

impl EvalError {
    fn new(expr: &Expr, point: &[f64], message: impl Into<String>) -> Self {
        EvalError {
            expression: expr.to_string(),
            point: point.to_vec(),
            message: message.into(),
        }
    }
}

impl Expr {
    pub fn literal(value: f64) -> Expr {
        Expr::Literal(value)
    }

    pub fn var(index: usize, name: impl Into<String>) -> Expr {
        Expr::Var {
            index,
            name: name.into(),
        }
    }

    pub fn apply(func: Func, arg: Expr) -> Expr {
        Expr::Apply(func, Box::new(arg))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn negation(arg: Expr) -> Expr {
        Expr::Neg(Box::new(arg))
    }

    /// True when no variable occurs in the tree.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Literal(_) => true,
            Expr::Var { .. } => false,
            Expr::Neg(a) => a.is_constant(),
            Expr::Binary(_, a, b) => a.is_constant() && b.is_constant(),
            Expr::Apply(_, a) => a.is_constant(),
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var_index(&self) -> Option<usize> {
        match self {
            Expr::Literal(_) => None,
            Expr::Var { index, .. } => Some(*index),
            Expr::Neg(a) | Expr::Apply(_, a) => a.max_var_index(),
            Expr::Binary(_, a, b) => match (a.max_var_index(), b.max_var_index()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Evaluates the expression at the given coordinates.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        match self {
            Expr::Literal(v) => Ok(*v),
            Expr::Var { index, name } => point.get(*index).copied().ok_or_else(|| {
                EvalError::new(self, point, format!("coordinate `{name}` out of range"))
            }),
            Expr::Neg(a) => Ok(-a.eval(point)?),
            Expr::Binary(op, a, b) => {
                let x = a.eval(point)?;
                let y = b.eval(point)?;
                match op {
                    BinOp::Add => Ok(x + y),
                    BinOp::Sub => Ok(x - y),
                    BinOp::Mul => Ok(x * y),
                    BinOp::Div => {
                        if y == 0.0 {
                            Err(EvalError::new(self, point, "division by zero"))
                        } else {
                            Ok(x / y)
                        }
                    }
                    BinOp::Pow => {
                        if x == 0.0 && y < 0.0 {
                            return Err(EvalError::new(
                                self,
                                point,
                                "zero base with negative exponent",
                            ));
                        }
                        let v = x.powf(y);
                        if v.is_nan() {
                            Err(EvalError::new(
                                self,
                                point,
                                "negative base with non-integer exponent",
                            ))
                        } else {
                            Ok(v)
                        }
                    }
                }
            }
            Expr::Apply(func, a) => {
                let u = a.eval(point)?;
                match func {
                    Func::Sin => Ok(u.sin()),
                    Func::Cos => Ok(u.cos()),
                    Func::Tan => {
                        let c = u.cos();
                        if c == 0.0 {
                            Err(EvalError::new(self, point, "tan at pole"))
                        } else {
                            Ok(u.sin() / c)
                        }
                    }
                    Func::Cot => {
                        let s = u.sin();
                        if s == 0.0 {
                            Err(EvalError::new(self, point, "cot at pole"))
                        } else {
                            Ok(u.cos() / s)
                        }
                    }
                    Func::Exp => Ok(u.exp()),
                    Func::Log => {
                        if u <= 0.0 {
                            Err(EvalError::new(self, point, "log of non-positive value"))
                        } else {
                            Ok(u.ln())
                        }
                    }
                    Func::Sqrt => {
                        if u < 0.0 {
                            Err(EvalError::new(self, point, "sqrt of negative value"))
                        } else {
                            Ok(u.sqrt())
                        }
                    }
                    Func::Sinh => Ok(u.sinh()),
                    Func::Cosh => Ok(u.cosh()),
                    Func::Abs => Ok(u.abs()),
                }
            }
        }
    }
}

// Smart constructors with local constant folding. These never reassociate and
// only drop terms whose removal cannot shrink the domain of definition.
fn lit(v: f64) -> Expr {
    Expr::Literal(v)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Literal(x), Expr::Literal(y)) => lit(x + y),
        (Expr::Literal(x), _) if *x == 0.0 => b,
        (_, Expr::Literal(y)) if *y == 0.0 => a,
        _ => Expr::binary(BinOp::Add, a, b),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Literal(x), Expr::Literal(y)) => lit(x - y),
        (_, Expr::Literal(y)) if *y == 0.0 => a,
        (Expr::Literal(x), _) if *x == 0.0 => Expr::negation(b),
        _ => Expr::binary(BinOp::Sub, a, b),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Literal(x), Expr::Literal(y)) => lit(x * y),
        (Expr::Literal(x), _) if *x == 0.0 => lit(0.0),
        (_, Expr::Literal(y)) if *y == 0.0 => lit(0.0),
        (Expr::Literal(x), _) if *x == 1.0 => b,
        (_, Expr::Literal(y)) if *y == 1.0 => a,
        _ => Expr::binary(BinOp::Mul, a, b),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Expr::Literal(y)) if *y == 1.0 => a,
        _ => Expr::binary(BinOp::Div, a, b),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Literal(x) => lit(-x),
        Expr::Neg(inner) => *inner,
        _ => Expr::negation(a),
    }
}

fn square(a: Expr) -> Expr {
    Expr::binary(BinOp::Pow, a, lit(2.0))
}

/// Exact partial derivative of `expr` with respect to the coordinate at
/// `var_index`, as a new expression tree.
///
/// Standard chain, product, and quotient rules; the derivative of `cot(u)` is
/// `-u'/sin(u)^2` and the derivative of `abs(u)` is `u'*u/abs(u)` (undefined at
/// `u = 0`, as it must be). Differentiation is total on the grammar.
pub fn symbolic_partial(expr: &Expr, var_index: usize) -> Expr {
    match expr {
        Expr::Literal(_) => lit(0.0),
        Expr::Var { index, .. } => {
            if *index == var_index {
                lit(1.0)
            } else {
                lit(0.0)
            }
        }
        Expr::Neg(a) => neg(symbolic_partial(a, var_index)),
        Expr::Binary(op, a, b) => {
            let da = symbolic_partial(a, var_index);
            let db = symbolic_partial(b, var_index);
            match op {
                BinOp::Add => add(da, db),
                BinOp::Sub => sub(da, db),
                BinOp::Mul => add(mul(da, (**b).clone()), mul((**a).clone(), db)),
                BinOp::Div => div(
                    sub(mul(da, (**b).clone()), mul((**a).clone(), db)),
                    square((**b).clone()),
                ),
                BinOp::Pow => {
                    if b.is_constant() {
                        // d(a^c) = c * a^(c-1) * a'
                        let reduced = match **b {
                            Expr::Literal(c) => lit(c - 1.0),
                            _ => sub((**b).clone(), lit(1.0)),
                        };
                        mul(
                            mul(
                                (**b).clone(),
                                Expr::binary(BinOp::Pow, (**a).clone(), reduced),
                            ),
                            da,
                        )
                    } else {
                        // d(a^b) = a^b * (b' * log(a) + b * a' / a)
                        mul(
                            expr.clone(),
                            add(
                                mul(db, Expr::apply(Func::Log, (**a).clone())),
                                div(mul((**b).clone(), da), (**a).clone()),
                            ),
                        )
                    }
                }
            }
        }
        Expr::Apply(func, a) => {
            let da = symbolic_partial(a, var_index);
            let u = (**a).clone();
            match func {
                Func::Sin => mul(Expr::apply(Func::Cos, u), da),
                Func::Cos => neg(mul(Expr::apply(Func::Sin, u), da)),
                Func::Tan => div(da, square(Expr::apply(Func::Cos, u))),
                Func::Cot => neg(div(da, square(Expr::apply(Func::Sin, u)))),
                Func::Exp => mul(expr.clone(), da),
                Func::Log => div(da, u),
                Func::Sqrt => div(da, mul(lit(2.0), expr.clone())),
                Func::Sinh => mul(Expr::apply(Func::Cosh, u), da),
                Func::Cosh => mul(Expr::apply(Func::Sinh, u), da),
                Func::Abs => div(mul(da, u), expr.clone()),
            }
        }
    }
}

// Precedence levels used by both the parser and the printer:
// 1 = + -, 2 = * /, 3 = unary minus, 4 = ^, 5 = atom.
fn precedence(expr: &Expr) -> u8 {
    match expr {
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Literal(v) if *v < 0.0 => 3,
        Expr::Binary(BinOp::Pow, ..) => 4,
        _ => 5,
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "(")?;
        write!(f, "{e}")?;
        write!(f, ")")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    /// Prints with the minimal parentheses that make re-parsing structurally
    /// lossless: `parse(to_string(parse(s)))` equals `parse(s)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Literal(v) => write!(f, "{v}"),
            Expr::Var { name, .. } => write!(f, "{name}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                write_wrapped(f, a, precedence(a) < 3)
            }
            Expr::Binary(op, a, b) => {
                let (sym, prec) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                    BinOp::Pow => ("^", 4),
                };
                if *op == BinOp::Pow {
                    // Right-associative; the right operand may sit at unary level.
                    write_wrapped(f, a, precedence(a) <= prec)?;
                    write!(f, " {sym} ")?;
                    write_wrapped(f, b, precedence(b) < 3)
                } else {
                    // Left-associative; a right operand at the same level needs parens.
                    write_wrapped(f, a, precedence(a) < prec)?;
                    write!(f, " {sym} ")?;
                    write_wrapped(f, b, precedence(b) <= prec)
                }
            }
            Expr::Apply(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(src: &str, coords: &[&str]) -> Expr {
        parse(src, coords).unwrap()
    }

    #[test]
    fn precedence_forced_shapes() {
        let e = p("x + y*y", &["x", "y"]);
        assert_eq!(
            e,
            Expr::binary(
                BinOp::Add,
                Expr::var(0, "x"),
                Expr::binary(BinOp::Mul, Expr::var(1, "y"), Expr::var(1, "y")),
            )
        );

        let e = p("exp(phi)*cos(theta)", &["theta", "phi"]);
        assert_eq!(
            e,
            Expr::binary(
                BinOp::Mul,
                Expr::apply(Func::Exp, Expr::var(1, "phi")),
                Expr::apply(Func::Cos, Expr::var(0, "theta")),
            )
        );
    }

    #[test]
    fn power_is_right_associative() {
        // Hand evaluation of the right-associative tower: 3^2 = 9, 2^9 = 512.
        let e = p("2^3^2", &[]);
        assert_eq!(e.eval(&[]).unwrap(), 512.0);
        // Contrast with the forced left shape.
        assert_eq!(p("(2^3)^2", &[]).eval(&[]).unwrap(), 64.0);
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        assert_eq!(p("-x^2", &["x"]).eval(&[3.0]).unwrap(), -9.0);
        assert_eq!(p("(-x)^2", &["x"]).eval(&[3.0]).unwrap(), 9.0);
        // Exponent positions admit a sign.
        assert_eq!(p("2^-1", &[]).eval(&[]).unwrap(), 0.5);
    }

    #[test]
    fn left_associative_chains() {
        assert_eq!(p("2-3-4", &[]).eval(&[]).unwrap(), -5.0);
        assert_eq!(p("2/4/2", &[]).eval(&[]).unwrap(), 0.25);
        assert_eq!(p("2*3^2", &[]).eval(&[]).unwrap(), 18.0);
    }

    #[test]
    fn eval_examples() {
        let theta = std::f64::consts::FRAC_PI_2;
        let v = p("cot(theta)", &["theta"]).eval(&[theta]).unwrap();
        assert!(v.abs() < 1e-15, "cot(pi/2) = {v}");

        assert_eq!(p("exp(0)", &["x"]).eval(&[7.0]).unwrap(), 1.0);

        let v = p("0.3*x + 0.1*y^2", &["x", "y"]).eval(&[1.0, 2.0]).unwrap();
        assert!((v - 0.7).abs() < 1e-15);
    }

    #[test]
    fn eval_is_pure() {
        let e = p("sin(x)*exp(y) + x^3", &["x", "y"]);
        let a = e.eval(&[0.37, -1.2]).unwrap();
        let b = e.eval(&[0.37, -1.2]).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn domain_errors_carry_context() {
        let e = p("log(x)", &["x"]);
        let err = e.eval(&[-1.0]).unwrap_err();
        assert_eq!(err.point, vec![-1.0]);
        assert!(err.expression.contains("log"));

        assert!(p("sqrt(x)", &["x"]).eval(&[-0.5]).is_err());
        assert!(p("1/x", &["x"]).eval(&[0.0]).is_err());
        assert!(p("cot(x)", &["x"]).eval(&[0.0]).is_err());
        assert!(p("x^0.5", &["x"]).eval(&[-2.0]).is_err());
    }

    #[test]
    fn derivative_of_product() {
        let e = p("x*y", &["x", "y"]);
        let d = symbolic_partial(&e, 0);
        for &(x, y) in &[(0.0, 1.0), (2.5, -3.0), (-1.0, 0.25)] {
            assert_eq!(d.eval(&[x, y]).unwrap(), y);
        }
    }

    #[test]
    fn derivative_of_cot_matches_central_difference() {
        let e = p("cot(theta)", &["theta"]);
        let d = symbolic_partial(&e, 0);
        let t = std::f64::consts::FRAC_PI_4;
        let exact = d.eval(&[t]).unwrap();
        // Independent oracle: central finite difference with step 1e-5.
        let h = 1e-5;
        let fd = (e.eval(&[t + h]).unwrap() - e.eval(&[t - h]).unwrap()) / (2.0 * h);
        assert!((exact - fd).abs() < 1e-8, "exact {exact} vs fd {fd}");
        // -1/sin^2(pi/4) = -2.
        assert!((exact + 2.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let e = p("3.5*2 + exp(1)", &["x"]);
        let d = symbolic_partial(&e, 0);
        assert_eq!(d.eval(&[123.0]).unwrap(), 0.0);
    }

    #[test]
    fn derivative_of_general_power() {
        // d/dx x^x = x^x (log x + 1)
        let e = p("x^x", &["x"]);
        let d = symbolic_partial(&e, 0);
        let x = 1.7_f64;
        let expected = x.powf(x) * (x.ln() + 1.0);
        assert!((d.eval(&[x]).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn derivative_of_abs() {
        let e = p("abs(x)", &["x"]);
        let d = symbolic_partial(&e, 0);
        assert_eq!(d.eval(&[2.0]).unwrap(), 1.0);
        assert_eq!(d.eval(&[-2.0]).unwrap(), -1.0);
        assert!(d.eval(&[0.0]).is_err());
    }

    #[test]
    fn pretty_print_roundtrip_goldens() {
        for src in [
            "x + y*y",
            "2^3^2",
            "-x^2",
            "(-x)^2",
            "x - (y - 1)",
            "(x + y)/(x - y)",
            "cot(theta)^2*sin(phi)",
            "-(x + y)",
            "x^(1/2)",
            "2 - -x",
        ] {
            let before = p(src, &["x", "y", "theta", "phi"]);
            let printed = before.to_string();
            let after = p(&printed, &["x", "y", "theta", "phi"]);
            assert_eq!(before, after, "{src} printed as {printed}");
        }
    }

    #[test]
    fn parse_errors() {
        match parse("x + ", &["x"]) {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected syntax error, got {other:?}"),
        }
        match parse("x + bogus", &["x"]) {
            Err(ParseError::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "bogus");
                assert_eq!(offset, 4);
            }
            other => panic!("expected unknown identifier, got {other:?}"),
        }
        // A function name without arguments is a syntax error.
        assert!(matches!(
            parse("sin + 1", &["x"]),
            Err(ParseError::Syntax { .. })
        ));
        // Coordinates may not shadow function names.
        assert!(matches!(
            parse("x", &["sin"]),
            Err(ParseError::BadCoordinate { .. })
        ));
        assert!(matches!(
            parse("x", &["x", "x"]),
            Err(ParseError::BadCoordinate { .. })
        ));
        assert!(parse("x + (y", &["x", "y"]).is_err());
        assert!(parse("1 2", &["x"]).is_err());
    }
}
