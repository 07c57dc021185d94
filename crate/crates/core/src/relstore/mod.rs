//! CSV-backed relational storage.
//!
//! A [`Catalog`] names typed tables. Tables come either from CSV files listed
//! in a catalog file or from rows supplied in memory. File-backed rows are
//! parsed and type-checked on first scan and cached afterwards.

mod selection;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use rust_decimal::Decimal;
use thiserror::Error;

use crate::term::{is_identifier, Constant, Name};

pub use selection::{evaluate_selection, ColumnRef, Condition, Operand, Selection};

pub type Row = Vec<Constant>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RelError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: header {found:?} does not match declared columns {expected:?}")]
    HeaderMismatch {
        path: PathBuf,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("table `{0}` declared twice")]
    DuplicateTable(Name),
    #[error("table `{table}` declares column `{column}` twice")]
    DuplicateColumn { table: Name, column: Name },
    #[error("catalog line {line}: {message}")]
    MalformedCatalog { line: usize, message: String },
    #[error("table `{table}`, row {row}: {message}")]
    BadRow {
        table: Name,
        row: usize,
        message: String,
    },
    #[error("unknown table `{0}`")]
    UnknownTable(Name),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` is ambiguous; qualify it with a table name")]
    AmbiguousColumn(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("table `{0}` listed more than once in a selection")]
    RepeatedTable(Name),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnType {
    Int,
    Dec,
    Str,
    Sym,
}

impl ColumnType {
    /// Parses one cell into a constant of this column's type.
    pub fn parse_cell(self, cell: &str) -> Result<Constant, String> {
        if cell.is_empty() {
            return Err("empty cell".into());
        }
        match self {
            ColumnType::Int => cell
                .parse::<i64>()
                .map(Constant::Integer)
                .map_err(|_| format!("`{cell}` is not an integer")),
            ColumnType::Dec => Decimal::from_str(cell)
                .map(Constant::decimal)
                .map_err(|_| format!("`{cell}` is not a decimal")),
            ColumnType::Str => Ok(Constant::text(cell)),
            ColumnType::Sym if is_identifier(cell) => Ok(Constant::symbol(cell)),
            ColumnType::Sym => Err(format!("`{cell}` is not a valid symbol")),
        }
    }

    /// Whether a constant can be stored in (and compared against) this column.
    pub fn admits(self, c: &Constant) -> bool {
        matches!(
            (self, c),
            (ColumnType::Int | ColumnType::Dec, Constant::Integer(_) | Constant::Decimal(_))
                | (ColumnType::Str, Constant::Text(_))
                | (ColumnType::Sym, Constant::Symbol(_))
        )
    }

    pub fn compatible(self, other: ColumnType) -> bool {
        self == other || (self.is_numeric() && other.is_numeric())
    }

    fn is_numeric(self) -> bool {
        matches!(self, ColumnType::Int | ColumnType::Dec)
    }
}

impl FromStr for ColumnType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "int" => Ok(ColumnType::Int),
            "dec" => Ok(ColumnType::Dec),
            "str" => Ok(ColumnType::Str),
            "sym" => Ok(ColumnType::Sym),
            _ => Err(format!("unknown column type `{s}` (expected int, dec, str or sym)")),
        }
    }
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnType::Int => "int",
            ColumnType::Dec => "dec",
            ColumnType::Str => "str",
            ColumnType::Sym => "sym",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableSchema {
    pub name: Name,
    pub columns: Vec<(Name, ColumnType)>,
}

impl TableSchema {
    pub fn new(name: &str, columns: &[(&str, ColumnType)]) -> Result<Self, RelError> {
        let schema = TableSchema {
            name: name.into(),
            columns: columns.iter().map(|(c, t)| (Name::from(*c), *t)).collect(),
        };
        for (i, (c, _)) in schema.columns.iter().enumerate() {
            if schema.columns[..i].iter().any(|(d, _)| d == c) {
                return Err(RelError::DuplicateColumn {
                    table: schema.name.clone(),
                    column: c.clone(),
                });
            }
        }
        Ok(schema)
    }

    pub fn column_index(&self, column: &str) -> Option<usize> {
        self.columns.iter().position(|(c, _)| &**c == column)
    }

    pub fn column_type(&self, index: usize) -> ColumnType {
        self.columns[index].1
    }

    fn header(&self) -> Vec<String> {
        self.columns.iter().map(|(c, _)| c.to_string()).collect()
    }
}

#[derive(Debug)]
enum Source {
    File(PathBuf),
    Memory,
}

#[derive(Debug)]
struct Table {
    schema: TableSchema,
    source: Source,
    rows: OnceLock<Result<Arc<Vec<Row>>, RelError>>,
}

/// Table name → schema and rows. Immutable once built; scanning is safe
/// from several threads.
#[derive(Debug, Default)]
pub struct Catalog {
    tables: BTreeMap<Name, Table>,
}

impl Catalog {
    pub fn new() -> Self {
        Catalog::default()
    }

    fn insert(&mut self, table: Table) -> Result<(), RelError> {
        let name = table.schema.name.clone();
        if self.tables.contains_key(&name) {
            return Err(RelError::DuplicateTable(name));
        }
        self.tables.insert(name, table);
        Ok(())
    }

    /// Adds an in-memory table, type-checking every row.
    pub fn add_table(&mut self, schema: TableSchema, rows: Vec<Row>) -> Result<(), RelError> {
        for (i, row) in rows.iter().enumerate() {
            let bad = |message: String| RelError::BadRow {
                table: schema.name.clone(),
                row: i + 1,
                message,
            };
            if row.len() != schema.columns.len() {
                return Err(bad(format!(
                    "expected {} values, found {}",
                    schema.columns.len(),
                    row.len()
                )));
            }
            for (value, (col, ty)) in row.iter().zip(&schema.columns) {
                if !ty.admits(value) {
                    return Err(bad(format!("value {value} does not fit {col}:{ty}")));
                }
            }
        }
        self.insert(Table {
            schema,
            source: Source::Memory,
            rows: OnceLock::from(Ok(Arc::new(rows))),
        })
    }

    /// Registers a CSV file, checking that its header matches the schema.
    /// Data rows are read on first scan.
    pub fn add_csv(&mut self, schema: TableSchema, path: impl Into<PathBuf>) -> Result<(), RelError> {
        let path = path.into();
        let io = |e: &dyn fmt::Display| RelError::Io {
            path: path.clone(),
            message: e.to_string(),
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(&path)
            .map_err(|e| io(&e))?;
        let found: Vec<String> = reader.headers().map_err(|e| io(&e))?.iter().map(String::from).collect();
        let expected = schema.header();
        if found != expected {
            return Err(RelError::HeaderMismatch {
                path,
                expected,
                found,
            });
        }
        self.insert(Table {
            schema,
            source: Source::File(path),
            rows: OnceLock::new(),
        })
    }

    /// Adds a table from CSV text held in memory. The header must match.
    pub fn add_csv_text(&mut self, schema: TableSchema, text: &str) -> Result<(), RelError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let found: Vec<String> = reader
            .headers()
            .map_err(|e| RelError::BadRow {
                table: schema.name.clone(),
                row: 0,
                message: e.to_string(),
            })?
            .iter()
            .map(String::from)
            .collect();
        let expected = schema.header();
        if found != expected {
            return Err(RelError::HeaderMismatch {
                path: PathBuf::from(format!("<{}>", schema.name)),
                expected,
                found,
            });
        }
        let rows = read_records(&schema, reader)?;
        self.insert(Table {
            schema,
            source: Source::Memory,
            rows: OnceLock::from(Ok(Arc::new(rows))),
        })
    }

    pub fn schema(&self, table: &str) -> Option<&TableSchema> {
        self.tables.get(table).map(|t| &t.schema)
    }

    pub fn table_names(&self) -> impl Iterator<Item = &Name> {
        self.tables.keys()
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// All rows of a table, parsing the backing file on first access.
    pub fn rows(&self, table: &str) -> Result<Arc<Vec<Row>>, RelError> {
        let t = self
            .tables
            .get(table)
            .ok_or_else(|| RelError::UnknownTable(table.into()))?;
        t.rows
            .get_or_init(|| match &t.source {
                Source::File(path) => read_csv(&t.schema, path).map(Arc::new),
                Source::Memory => Ok(Arc::new(Vec::new())),
            })
            .clone()
    }
}

fn read_csv(schema: &TableSchema, path: &Path) -> Result<Vec<Row>, RelError> {
    let reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| RelError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    read_records(schema, reader)
}

fn read_records<R: std::io::Read>(schema: &TableSchema, mut reader: csv::Reader<R>) -> Result<Vec<Row>, RelError> {
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 1;
        let bad = |message: String| RelError::BadRow {
            table: schema.name.clone(),
            row: row_no,
            message,
        };
        let record = record.map_err(|e| bad(e.to_string()))?;
        let row = record
            .iter()
            .zip(&schema.columns)
            .map(|(cell, (col, ty))| ty.parse_cell(cell).map_err(|m| bad(format!("column {col}: {m}"))))
            .collect::<Result<Row, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a catalog file. Relative CSV paths resolve against the catalog's
/// directory.
///
/// ```text
/// % comment
/// table persons file persons.csv columns id:int,name:str,age:int,gender:str
/// ```
pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog, RelError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| RelError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut catalog = Catalog::new();
    for (schema, file) in parse_catalog(&text)? {
        catalog.add_csv(schema, base.join(file))?;
    }
    Ok(catalog)
}

/// Parses catalog text into (schema, relative file) pairs.
pub fn parse_catalog(text: &str) -> Result<Vec<(TableSchema, String)>, RelError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('%').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |message: &str| RelError::MalformedCatalog {
            line: line_no,
            message: message.to_string(),
        };
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.len() < 6 || words[0] != "table" || words[2] != "file" || words[4] != "columns" {
            return Err(bad(
                "expected `table <name> file <path> columns <col:type,...>`",
            ));
        }
        let name = words[1];
        if !is_identifier(name) {
            return Err(bad(&format!("`{name}` is not a valid table name")));
        }
        let spec = words[5..].join("");
        let mut columns = Vec::new();
        for item in spec.split(',') {
            let (col, ty) = item
                .split_once(':')
                .ok_or_else(|| bad(&format!("column `{item}` lacks a `:type`")))?;
            if !is_identifier(col) {
                return Err(bad(&format!("`{col}` is not a valid column name")));
            }
            let ty = ty.parse::<ColumnType>().map_err(|m| bad(&m))?;
            columns.push((col, ty));
        }
        out.push((TableSchema::new(name, &columns)?, words[3].to_string()));
    }
    Ok(out)
}
