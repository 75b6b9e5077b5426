//! Boolean predicates over arithmetic column expressions.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::value::{ColumnType, Schema, Value};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Col(String),
    Lit(Value),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// The operator that holds exactly when this one does not (for
    /// non-null operands).
    pub fn negated(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    /// The operator obtained by swapping the operands.
    pub fn flipped(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            other => other,
        }
    }

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
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Cmp { op: CmpOp, lhs: Expr, rhs: Expr },
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Not(Box<Predicate>),
    Const(bool),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("type error: {0}")]
    Type(String),
}

pub fn col(name: &str) -> Expr {
    Expr::Col(name.to_string())
}

pub fn lit(v: impl Into<Value>) -> Expr {
    Expr::Lit(v.into())
}

impl Expr {
    pub fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }

    pub fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }

    pub fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }

    fn cmp_with(self, op: CmpOp, rhs: impl Into<Expr>) -> Predicate {
        Predicate::Cmp { op, lhs: self, rhs: rhs.into() }
    }

    pub fn eq(self, rhs: impl Into<Expr>) -> Predicate {
        self.cmp_with(CmpOp::Eq, rhs)
    }

    pub fn ne(self, rhs: impl Into<Expr>) -> Predicate {
        self.cmp_with(CmpOp::Ne, rhs)
    }

    pub fn lt(self, rhs: impl Into<Expr>) -> Predicate {
        self.cmp_with(CmpOp::Lt, rhs)
    }

    pub fn le(self, rhs: impl Into<Expr>) -> Predicate {
        self.cmp_with(CmpOp::Le, rhs)
    }

    pub fn gt(self, rhs: impl Into<Expr>) -> Predicate {
        self.cmp_with(CmpOp::Gt, rhs)
    }

    pub fn ge(self, rhs: impl Into<Expr>) -> Predicate {
        self.cmp_with(CmpOp::Ge, rhs)
    }

    pub fn references_column(&self) -> bool {
        match self {
            Expr::Col(_) => true,
            Expr::Lit(_) => false,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.references_column() || b.references_column()
            }
            Expr::Neg(a) => a.references_column(),
        }
    }

    pub fn is_linear(&self) -> bool {
        match self {
            Expr::Col(_) | Expr::Lit(_) => true,
            Expr::Add(a, b) | Expr::Sub(a, b) => a.is_linear() && b.is_linear(),
            Expr::Mul(a, b) => {
                a.is_linear() && b.is_linear() && !(a.references_column() && b.references_column())
            }
            Expr::Neg(a) => a.is_linear(),
        }
    }

    pub fn collect_columns<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Expr::Col(c) => {
                out.insert(c);
            }
            Expr::Lit(_) => {}
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_columns(out);
                b.collect_columns(out);
            }
            Expr::Neg(a) => a.collect_columns(out),
        }
    }

    pub fn collect_constants(&self, out: &mut Vec<Value>) {
        match self {
            Expr::Col(_) => {}
            Expr::Lit(v) => out.push(v.clone()),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_constants(out);
                b.collect_constants(out);
            }
            Expr::Neg(a) => a.collect_constants(out),
        }
    }

    /// Renames columns through `f`; used when predicates move between schemas.
    pub fn map_columns(&self, f: &dyn Fn(&str) -> String) -> Expr {
        match self {
            Expr::Col(c) => Expr::Col(f(c)),
            Expr::Lit(v) => Expr::Lit(v.clone()),
            Expr::Add(a, b) => Expr::Add(Box::new(a.map_columns(f)), Box::new(b.map_columns(f))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.map_columns(f)), Box::new(b.map_columns(f))),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.map_columns(f)), Box::new(b.map_columns(f))),
            Expr::Neg(a) => Expr::Neg(Box::new(a.map_columns(f))),
        }
    }

    /// Static result type, `None` when a column is missing.
    pub fn result_type(&self, schema: &Schema) -> Result<ColumnType, EvalError> {
        match self {
            Expr::Col(c) => schema
                .column(c)
                .map(|c| c.ty)
                .ok_or_else(|| EvalError::UnknownColumn(c.clone())),
            Expr::Lit(v) => Ok(v.column_type()),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                let (ta, tb) = (a.result_type(schema)?, b.result_type(schema)?);
                match (ta, tb) {
                    (ColumnType::Int, ColumnType::Int) => Ok(ColumnType::Int),
                    (ColumnType::Null, t) | (t, ColumnType::Null) if t.is_numeric() || t == ColumnType::Null => Ok(t),
                    (x, y) if x.is_numeric() && y.is_numeric() => Ok(ColumnType::Float),
                    (x, y) => Err(EvalError::Type(format!("arithmetic on {x:?} and {y:?}"))),
                }
            }
            Expr::Neg(a) => {
                let t = a.result_type(schema)?;
                if t.is_numeric() || t == ColumnType::Null {
                    Ok(t)
                } else {
                    Err(EvalError::Type(format!("negation of {t:?}")))
                }
            }
        }
    }

    pub fn eval(&self, row: &[Value], schema: &Schema) -> Result<Value, EvalError> {
        match self {
            Expr::Col(c) => schema
                .index_of(c)
                .map(|i| row[i].clone())
                .ok_or_else(|| EvalError::UnknownColumn(c.clone())),
            Expr::Lit(v) => Ok(v.clone()),
            Expr::Add(a, b) => arith(a.eval(row, schema)?, b.eval(row, schema)?, '+'),
            Expr::Sub(a, b) => arith(a.eval(row, schema)?, b.eval(row, schema)?, '-'),
            Expr::Mul(a, b) => arith(a.eval(row, schema)?, b.eval(row, schema)?, '*'),
            Expr::Neg(a) => arith(Value::Int(0), a.eval(row, schema)?, '-'),
        }
    }
}

fn arith(a: Value, b: Value, op: char) -> Result<Value, EvalError> {
    match (&a, &b) {
        (Value::Null, _) | (_, Value::Null) => Ok(Value::Null),
        (Value::Int(x), Value::Int(y)) => {
            let r = match op {
                '+' => x.checked_add(*y),
                '-' => x.checked_sub(*y),
                _ => x.checked_mul(*y),
            };
            r.map(Value::Int).ok_or_else(|| EvalError::Type("integer overflow".into()))
        }
        _ => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => Ok(Value::Float(match op {
                '+' => x + y,
                '-' => x - y,
                _ => x * y,
            })),
            _ => Err(EvalError::Type(format!("arithmetic on {a} and {b}"))),
        },
    }
}

impl From<Value> for Expr {
    fn from(v: Value) -> Self {
        Expr::Lit(v)
    }
}

impl From<i64> for Expr {
    fn from(v: i64) -> Self {
        Expr::Lit(Value::Int(v))
    }
}

impl From<i32> for Expr {
    fn from(v: i32) -> Self {
        Expr::Lit(Value::Int(v.into()))
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::Lit(Value::Float(v))
    }
}

impl From<&str> for Expr {
    fn from(v: &str) -> Self {
        Expr::Lit(Value::Str(v.to_string()))
    }
}

impl Predicate {
    pub fn and(self, other: Predicate) -> Predicate {
        match self {
            Predicate::And(mut parts) => {
                parts.push(other);
                Predicate::And(parts)
            }
            p => Predicate::And(vec![p, other]),
        }
    }

    pub fn or(self, other: Predicate) -> Predicate {
        match self {
            Predicate::Or(mut parts) => {
                parts.push(other);
                Predicate::Or(parts)
            }
            p => Predicate::Or(vec![p, other]),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Predicate {
        Predicate::Not(Box::new(self))
    }

    /// True iff no comparison multiplies two column terms.
    pub fn is_linear(&self) -> bool {
        match self {
            Predicate::Cmp { lhs, rhs, .. } => lhs.is_linear() && rhs.is_linear(),
            Predicate::And(ps) | Predicate::Or(ps) => ps.iter().all(Predicate::is_linear),
            Predicate::Not(p) => p.is_linear(),
            Predicate::Const(_) => true,
        }
    }

    pub fn columns(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_columns(&mut out);
        out
    }

    fn collect_columns<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Predicate::Cmp { lhs, rhs, .. } => {
                lhs.collect_columns(out);
                rhs.collect_columns(out);
            }
            Predicate::And(ps) | Predicate::Or(ps) => ps.iter().for_each(|p| p.collect_columns(out)),
            Predicate::Not(p) => p.collect_columns(out),
            Predicate::Const(_) => {}
        }
    }

    pub fn constants(&self) -> Vec<Value> {
        let mut out = Vec::new();
        self.collect_constants(&mut out);
        out
    }

    fn collect_constants(&self, out: &mut Vec<Value>) {
        match self {
            Predicate::Cmp { lhs, rhs, .. } => {
                lhs.collect_constants(out);
                rhs.collect_constants(out);
            }
            Predicate::And(ps) | Predicate::Or(ps) => ps.iter().for_each(|p| p.collect_constants(out)),
            Predicate::Not(p) => p.collect_constants(out),
            Predicate::Const(_) => {}
        }
    }

    /// Top-level conjuncts, flattening nested ANDs.
    pub fn conjuncts(&self) -> Vec<&Predicate> {
        match self {
            Predicate::And(ps) => ps.iter().flat_map(Predicate::conjuncts).collect(),
            p => vec![p],
        }
    }

    pub fn conjunction(mut parts: Vec<Predicate>) -> Predicate {
        match parts.len() {
            0 => Predicate::Const(true),
            1 => parts.pop().unwrap(),
            _ => Predicate::And(parts),
        }
    }

    pub fn map_constants(&self, f: &dyn Fn(&Value) -> Value) -> Predicate {
        fn map_expr(e: &Expr, f: &dyn Fn(&Value) -> Value) -> Expr {
            match e {
                Expr::Col(c) => Expr::Col(c.clone()),
                Expr::Lit(v) => Expr::Lit(f(v)),
                Expr::Add(a, b) => Expr::Add(Box::new(map_expr(a, f)), Box::new(map_expr(b, f))),
                Expr::Sub(a, b) => Expr::Sub(Box::new(map_expr(a, f)), Box::new(map_expr(b, f))),
                Expr::Mul(a, b) => Expr::Mul(Box::new(map_expr(a, f)), Box::new(map_expr(b, f))),
                Expr::Neg(a) => Expr::Neg(Box::new(map_expr(a, f))),
            }
        }
        match self {
            Predicate::Cmp { op, lhs, rhs } => {
                Predicate::Cmp { op: *op, lhs: map_expr(lhs, f), rhs: map_expr(rhs, f) }
            }
            Predicate::And(ps) => Predicate::And(ps.iter().map(|p| p.map_constants(f)).collect()),
            Predicate::Or(ps) => Predicate::Or(ps.iter().map(|p| p.map_constants(f)).collect()),
            Predicate::Not(p) => Predicate::Not(Box::new(p.map_constants(f))),
            Predicate::Const(b) => Predicate::Const(*b),
        }
    }

    /// Checks column references and comparison operand types.
    pub fn check(&self, schema: &Schema) -> Result<(), EvalError> {
        match self {
            Predicate::Cmp { lhs, rhs, .. } => {
                let (a, b) = (lhs.result_type(schema)?, rhs.result_type(schema)?);
                let compatible = a == b
                    || a == ColumnType::Null
                    || b == ColumnType::Null
                    || (a.is_numeric() && b.is_numeric());
                if compatible {
                    Ok(())
                } else {
                    Err(EvalError::Type(format!("comparison of {a:?} with {b:?}")))
                }
            }
            Predicate::And(ps) | Predicate::Or(ps) => ps.iter().try_for_each(|p| p.check(schema)),
            Predicate::Not(p) => p.check(schema),
            Predicate::Const(_) => Ok(()),
        }
    }

    /// Kleene three-valued evaluation; `None` is unknown.
    pub fn eval(&self, row: &[Value], schema: &Schema) -> Result<Option<bool>, EvalError> {
        match self {
            Predicate::Cmp { op, lhs, rhs } => {
                let (a, b) = (lhs.eval(row, schema)?, rhs.eval(row, schema)?);
                let ord = a.sql_cmp(&b).map_err(EvalError::Type)?;
                Ok(ord.map(|o| op.holds(o)))
            }
            Predicate::And(ps) => {
                let mut result = Some(true);
                for p in ps {
                    match p.eval(row, schema)? {
                        Some(false) => return Ok(Some(false)),
                        None => result = None,
                        Some(true) => {}
                    }
                }
                Ok(result)
            }
            Predicate::Or(ps) => {
                let mut result = Some(false);
                for p in ps {
                    match p.eval(row, schema)? {
                        Some(true) => return Ok(Some(true)),
                        None => result = None,
                        Some(false) => {}
                    }
                }
                Ok(result)
            }
            Predicate::Not(p) => Ok(p.eval(row, schema)?.map(|b| !b)),
            Predicate::Const(b) => Ok(Some(*b)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Col(c) => f.write_str(c),
            Expr::Lit(v) => write!(f, "{v}"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Neg(a) => write!(f, "-{a}"),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join(f: &mut fmt::Formatter<'_>, ps: &[Predicate], sep: &str) -> fmt::Result {
            f.write_str("(")?;
            for (i, p) in ps.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                write!(f, "{p}")?;
            }
            f.write_str(")")
        }
        match self {
            Predicate::Cmp { op, lhs, rhs } => write!(f, "{lhs} {} {rhs}", op.symbol()),
            Predicate::And(ps) => join(f, ps, " AND "),
            Predicate::Or(ps) => join(f, ps, " OR "),
            Predicate::Not(p) => write!(f, "NOT {p}"),
            Predicate::Const(b) => write!(f, "{b}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Schema {
        Schema::ints(&["price", "qty", "age"])
    }

    #[test]
    fn linearity() {
        assert!(col("age").lt(55).is_linear());
        assert!(lit(3).mul(col("qty")).add(col("price")).gt(5).is_linear());
        assert!(!col("price").mul(col("qty")).gt(5).is_linear());
        assert!(!col("age").lt(5).or(col("price").mul(col("qty")).gt(5)).is_linear());
    }

    #[test]
    fn three_valued_logic() {
        let s = schema();
        let row = vec![Value::Null, Value::Int(2), Value::Int(30)];
        assert_eq!(col("price").gt(1).eval(&row, &s), Ok(None));
        assert_eq!(col("price").gt(1).or(col("age").gt(24)).eval(&row, &s), Ok(Some(true)));
        assert_eq!(col("price").gt(1).and(col("age").lt(24)).eval(&row, &s), Ok(Some(false)));
        assert_eq!(col("price").gt(1).not().eval(&row, &s), Ok(None));
    }

    #[test]
    fn unknown_column_is_reported() {
        assert_eq!(
            col("nope").lt(3).check(&schema()),
            Err(EvalError::UnknownColumn("nope".into()))
        );
    }

    #[test]
    fn json_shape() {
        let p = col("age").lt(55);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"cmp":{"op":"<","lhs":{"col":"age"},"rhs":{"lit":55}}}"#);
        assert_eq!(serde_json::from_str::<Predicate>(&json).unwrap(), p);
    }

    #[test]
    fn display() {
        let p = col("a").gt(1).and(col("b").le(lit(2).mul(col("c"))));
        assert_eq!(p.to_string(), "(a > 1 AND b <= (2 * c))");
    }
}
