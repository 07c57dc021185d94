//! Constants, variables and the comparison semantics shared by the engine
//! and the relational store.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use rust_decimal::Decimal;
use thiserror::Error;

/// Interned-by-refcount identifier used for predicates, variables and symbols.
pub type Name = Arc<str>;

/// A ground value.
///
/// Equality is structural: `Integer(2)` and `Decimal(2.0)` are different
/// constants and never unify, although they compare equal under `=`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Constant {
    Symbol(Name),
    Integer(i64),
    Decimal(Decimal),
    Text(Name),
}

impl Constant {
    pub fn symbol(s: &str) -> Self {
        Constant::Symbol(s.into())
    }

    pub fn text(s: &str) -> Self {
        Constant::Text(s.into())
    }

    /// Builds a decimal constant, normalizing away trailing zeros so that
    /// `1.50` and `1.5` are the same constant.
    pub fn decimal(d: Decimal) -> Self {
        Constant::Decimal(d.normalize())
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Constant::Symbol(_) => "symbol",
            Constant::Integer(_) => "integer",
            Constant::Decimal(_) => "decimal",
            Constant::Text(_) => "text",
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Constant::Integer(_) | Constant::Decimal(_) => 0,
            Constant::Symbol(_) => 1,
            Constant::Text(_) => 2,
        }
    }

    fn numeric(&self) -> Option<Decimal> {
        match self {
            Constant::Integer(i) => Some(Decimal::from(*i)),
            Constant::Decimal(d) => Some(*d),
            _ => None,
        }
    }

    /// Evaluates `self op other`.
    ///
    /// Numbers compare numerically across integer and decimal. Symbols and
    /// texts order lexicographically within their own type. Across value
    /// types `=` is false, `!=` is true, and ordering operators are an error.
    pub fn compare(&self, op: CmpOp, other: &Constant) -> Result<bool, Incomparable> {
        let ord = match (self, other) {
            (Constant::Symbol(a), Constant::Symbol(b)) | (Constant::Text(a), Constant::Text(b)) => {
                Some(a.cmp(b))
            }
            _ => match (self.numeric(), other.numeric()) {
                (Some(a), Some(b)) => Some(a.cmp(&b)),
                _ => None,
            },
        };
        match ord {
            Some(ord) => Ok(op.holds(ord)),
            None => match op {
                CmpOp::Eq => Ok(false),
                CmpOp::Ne => Ok(true),
                _ => Err(Incomparable {
                    left: self.clone(),
                    op,
                    right: other.clone(),
                }),
            },
        }
    }
}

/// Total order used for sorting answers: numbers first (numerically, with
/// integers before an equal decimal), then symbols, then texts.
impl Ord for Constant {
    fn cmp(&self, other: &Self) -> Ordering {
        use Constant::*;
        match (self, other) {
            (Integer(a), Integer(b)) => a.cmp(b),
            (Decimal(a), Decimal(b)) => a.cmp(b),
            (Integer(a), Decimal(b)) => rust_decimal::Decimal::from(*a)
                .cmp(b)
                .then(Ordering::Less),
            (Decimal(a), Integer(b)) => a
                .cmp(&rust_decimal::Decimal::from(*b))
                .then(Ordering::Greater),
            (Symbol(a), Symbol(b)) | (Text(a), Text(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Constant {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Symbol(s) => f.write_str(s),
            Constant::Integer(i) => write!(f, "{i}"),
            // always keep a fractional part so the literal reads back as a decimal
            Constant::Decimal(d) if d.scale() == 0 => write!(f, "{d}.0"),
            Constant::Decimal(d) => write!(f, "{d}"),
            Constant::Text(s) => {
                f.write_str("'")?;
                for c in s.chars() {
                    match c {
                        '\'' => f.write_str("\\'")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("'")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("cannot order {left} ({}) against {right} ({}) with `{op}`", left.type_name(), right.type_name())]
pub struct Incomparable {
    pub left: Constant,
    pub op: CmpOp,
    pub right: Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn holds(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A variable or a constant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Variable(Name),
    Constant(Constant),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Variable(name.into())
    }

    pub fn as_variable(&self) -> Option<&Name> {
        match self {
            Term::Variable(v) => Some(v),
            Term::Constant(_) => None,
        }
    }

    pub fn as_constant(&self) -> Option<&Constant> {
        match self {
            Term::Constant(c) => Some(c),
            Term::Variable(_) => None,
        }
    }
}

impl From<Constant> for Term {
    fn from(c: Constant) -> Self {
        Term::Constant(c)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Variable(v) => write!(f, "?{v}"),
            Term::Constant(c) => c.fmt(f),
        }
    }
}

/// True for `[A-Za-z_][A-Za-z0-9_]*`, the shape of user-visible names.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
