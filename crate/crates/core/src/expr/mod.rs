//! Scalar expression language used by config files.
//!
//! The grammar is deliberately small:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := unary ('^' factor)?
//! unary   := '-'? primary
//! primary := number | ident | ident '(' args ')' | '(' expr ')'
//! ```
//!
//! Identifiers are restricted to the variables `omega`, `t`, `s`, `lambda`,
//! the constant `pi` and a fixed set of builtin functions.

mod eval;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

pub use eval::Bindings;
pub use parser::parse;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("no binding for variable `{0}`")]
    MissingBinding(Var),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Free variables an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Omega,
    T,
    S,
    Lambda,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::Omega => "omega",
            Var::T => "t",
            Var::S => "s",
            Var::Lambda => "lambda",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        match name {
            "omega" => Some(Var::Omega),
            "t" => Some(Var::T),
            "s" => Some(Var::S),
            "lambda" => Some(Var::Lambda),
            _ => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Min,
    Max,
    Pow,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max | Func::Pow => 2,
            _ => 1,
        }
    }
}

/// Parsed expression tree. Immutable after parsing.
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Number(f64),
    Pi,
    Var(Var),
    Neg(Box<Expression>),
    Binary(BinOp, Box<Expression>, Box<Expression>),
    Call(Func, Vec<Expression>),
}

impl Expression {
    pub fn num(value: f64) -> Expression {
        Expression::Number(value)
    }

    /// Set of variables referenced anywhere in the tree.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expression::Number(_) | Expression::Pi => {}
            Expression::Var(v) => {
                out.insert(*v);
            }
            Expression::Neg(e) => e.collect_vars(out),
            Expression::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Expression::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Returns the first free variable not contained in `allowed`.
    pub fn first_var_outside(&self, allowed: &[Var]) -> Option<Var> {
        self.free_vars().into_iter().find(|v| !allowed.contains(v))
    }
}

/// Prints a fully parenthesized form that parses back to an equivalent tree.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `{:?}` on f64 is the shortest round-tripping representation.
            Expression::Number(x) => write!(f, "{:?}", x),
            Expression::Pi => f.write_str("pi"),
            Expression::Var(v) => f.write_str(v.name()),
            Expression::Neg(e) => write!(f, "(-({}))", e),
            Expression::Binary(op, l, r) => write!(f, "(({}){}({}))", l, op.symbol(), r),
            Expression::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{}", a)?;
                }
                f.write_str(")")
            }
        }
    }
}
