//! Scalar values, schemas and result tables.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

/// How two result tables are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableSemantics {
    /// Duplicates are removed and order is ignored.
    #[default]
    Set,
    /// Duplicates count, order is ignored.
    Bag,
    /// Duplicates count and row order is observable.
    #[serde(rename = "orderedbag")]
    OrderedBag,
}

impl TableSemantics {
    pub const ALL: [TableSemantics; 3] = [Self::Set, Self::Bag, Self::OrderedBag];

    pub fn name(self) -> &'static str {
        match self {
            Self::Set => "set",
            Self::Bag => "bag",
            Self::OrderedBag => "orderedbag",
        }
    }
}

impl std::str::FromStr for TableSemantics {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "set" => Ok(Self::Set),
            "bag" => Ok(Self::Bag),
            "orderedbag" | "ordered-bag" | "ordered_bag" => Ok(Self::OrderedBag),
            other => Err(format!("unknown table semantics `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Int,
    Float,
    #[serde(rename = "string")]
    Str,
    Bool,
    Null,
}

impl ColumnType {
    pub fn is_numeric(self) -> bool {
        matches!(self, Self::Int | Self::Float)
    }
}

/// A scalar cell value.
///
/// Equality, hashing and ordering are total (floats use `total_cmp`), which
/// is what deduplication and sorted comparison of tables need. SQL-style
/// comparison with unknown results lives in [`Value::sql_cmp`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl Value {
    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Bool(_) => 1,
            Value::Int(_) => 2,
            Value::Float(_) => 3,
            Value::Str(_) => 4,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn column_type(&self) -> ColumnType {
        match self {
            Value::Null => ColumnType::Null,
            Value::Bool(_) => ColumnType::Bool,
            Value::Int(_) => ColumnType::Int,
            Value::Float(_) => ColumnType::Float,
            Value::Str(_) => ColumnType::Str,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }

    /// Three-valued comparison: `Ok(None)` when either side is null.
    pub fn sql_cmp(&self, other: &Value) -> Result<Option<Ordering>, String> {
        match (self, other) {
            (Value::Null, _) | (_, Value::Null) => Ok(None),
            (Value::Int(a), Value::Int(b)) => Ok(Some(a.cmp(b))),
            (Value::Bool(a), Value::Bool(b)) => Ok(Some(a.cmp(b))),
            (Value::Str(a), Value::Str(b)) => Ok(Some(a.cmp(b))),
            (a, b) => match (a.as_f64(), b.as_f64()) {
                (Some(x), Some(y)) => Ok(Some(x.total_cmp(&y))),
                _ => Err(format!("cannot compare {a} with {b}")),
            },
        }
    }

    /// Ordering used by Sort: nulls first, numbers compared numerically.
    pub fn sort_cmp(&self, other: &Value) -> Ordering {
        match self.sql_cmp(other) {
            Ok(Some(ord)) => ord,
            _ => self.cmp(other),
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Null, Value::Null) => Ordering::Equal,
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            (a, b) => a.rank().cmp(&b.rank()),
        }
    }
}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Value::Null => {}
            Value::Bool(b) => b.hash(state),
            Value::Int(i) => i.hash(state),
            Value::Float(f) => f.to_bits().hash(state),
            Value::Str(s) => s.hash(state),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Str(s) => write!(f, "{s:?}"),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<i32> for Value {
    fn from(v: i32) -> Self {
        Value::Int(v.into())
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Str(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ColumnType,
}

impl Column {
    pub fn new(name: impl Into<String>, ty: ColumnType) -> Self {
        Column { name: name.into(), ty }
    }
}

/// Ordered list of named, typed columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema {
    pub columns: Vec<Column>,
}

impl Schema {
    pub fn new(columns: Vec<Column>) -> Self {
        Schema { columns }
    }

    /// Shorthand used by fixtures: every column typed `int`.
    pub fn ints(names: &[&str]) -> Self {
        Schema::new(names.iter().map(|n| Column::new(*n, ColumnType::Int)).collect())
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn concat(&self, other: &Schema) -> Schema {
        let mut columns = self.columns.clone();
        columns.extend(other.columns.iter().cloned());
        Schema { columns }
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cols: Vec<_> = self.columns.iter().map(|c| c.name.as_str()).collect();
        write!(f, "({})", cols.join(", "))
    }
}

pub type Row = Vec<Value>;

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("row {row} has {found} values but the schema has {expected} columns")]
pub struct ArityError {
    pub row: usize,
    pub expected: usize,
    pub found: usize,
}

/// A result table: an ordered schema plus an ordered multiset of rows.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Table {
    pub schema: Schema,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(schema: Schema, rows: Vec<Row>) -> Result<Self, ArityError> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(ArityError { row: i, expected: schema.len(), found: row.len() });
            }
        }
        Ok(Table { schema, rows })
    }

    pub fn empty(schema: Schema) -> Self {
        Table { schema, rows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Removes duplicate rows, keeping the first occurrence of each.
    pub fn dedup(&mut self) {
        let mut seen = HashSet::with_capacity(self.rows.len());
        self.rows.retain(|r| seen.insert(r.clone()));
    }

    /// Rows in the form that is compared under `semantics`.
    pub fn normalized_rows(&self, semantics: TableSemantics) -> Vec<Row> {
        let mut rows = self.rows.clone();
        match semantics {
            TableSemantics::Set => {
                rows.sort();
                rows.dedup();
            }
            TableSemantics::Bag => rows.sort(),
            TableSemantics::OrderedBag => {}
        }
        rows
    }

    /// Whether two tables are the same result under `semantics`. Schemas
    /// must agree column by column, including names.
    pub fn same_result(&self, other: &Table, semantics: TableSemantics) -> bool {
        self.schema == other.schema
            && self.normalized_rows(semantics) == other.normalized_rows(semantics)
    }
}
