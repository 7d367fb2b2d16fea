use std::collections::HashMap;
use std::f64::consts::PI;

use super::{BinOp, ExprError, Expression, Func, Var};

/// Values for the four free variables. Unset variables evaluate to
/// [`ExprError::MissingBinding`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bindings {
    pub omega: Option<f64>,
    pub t: Option<f64>,
    pub s: Option<f64>,
    pub lambda: Option<f64>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn omega(mut self, v: f64) -> Self {
        self.omega = Some(v);
        self
    }

    pub fn t(mut self, v: f64) -> Self {
        self.t = Some(v);
        self
    }

    pub fn s(mut self, v: f64) -> Self {
        self.s = Some(v);
        self
    }

    pub fn lambda(mut self, v: f64) -> Self {
        self.lambda = Some(v);
        self
    }

    pub fn get(&self, var: Var) -> Option<f64> {
        match var {
            Var::Omega => self.omega,
            Var::T => self.t,
            Var::S => self.s,
            Var::Lambda => self.lambda,
        }
    }

    /// Builds bindings from a name map; names outside the variable set are
    /// reported as unknown identifiers.
    pub fn from_map(map: &HashMap<String, f64>) -> Result<Self, ExprError> {
        let mut b = Bindings::default();
        for (name, &value) in map {
            match Var::from_name(name) {
                Some(Var::Omega) => b.omega = Some(value),
                Some(Var::T) => b.t = Some(value),
                Some(Var::S) => b.s = Some(value),
                Some(Var::Lambda) => b.lambda = Some(value),
                None => {
                    return Err(ExprError::UnknownIdentifier {
                        name: name.clone(),
                        offset: 0,
                    })
                }
            }
        }
        Ok(b)
    }
}

fn domain(msg: impl Into<String>) -> ExprError {
    ExprError::Domain(msg.into())
}

fn power(base: f64, exponent: f64) -> Result<f64, ExprError> {
    if base < 0.0 && exponent.fract() != 0.0 {
        return Err(domain(format!(
            "negative base {} with non-integer exponent {}",
            base, exponent
        )));
    }
    if base == 0.0 && exponent < 0.0 {
        return Err(domain("zero raised to a negative power"));
    }
    Ok(base.powf(exponent))
}

impl Expression {
    pub fn evaluate(&self, b: &Bindings) -> Result<f64, ExprError> {
        Ok(match self {
            Expression::Number(x) => *x,
            Expression::Pi => PI,
            Expression::Var(v) => b.get(*v).ok_or(ExprError::MissingBinding(*v))?,
            Expression::Neg(e) => -e.evaluate(b)?,
            Expression::Binary(op, l, r) => {
                let x = l.evaluate(b)?;
                let y = r.evaluate(b)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(domain("division by zero"));
                        }
                        x / y
                    }
                    BinOp::Pow => power(x, y)?,
                }
            }
            Expression::Call(func, args) => {
                let x = args[0].evaluate(b)?;
                match func {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(),
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(domain(format!("log of non-positive value {}", x)));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(domain(format!("sqrt of negative value {}", x)));
                        }
                        x.sqrt()
                    }
                    Func::Abs => x.abs(),
                    Func::Min => x.min(args[1].evaluate(b)?),
                    Func::Max => x.max(args[1].evaluate(b)?),
                    Func::Pow => power(x, args[1].evaluate(b)?)?,
                }
            }
        })
    }
}
