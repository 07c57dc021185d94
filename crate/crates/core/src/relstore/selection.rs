use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use super::{Catalog, ColumnType, RelError, Row};
use crate::term::{CmpOp, Constant, Name};

/// A column reference as written: `col` or `table.col`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnRef {
    pub table: Option<Name>,
    pub column: Name,
}

impl ColumnRef {
    pub fn new(table: Option<&str>, column: &str) -> Self {
        ColumnRef {
            table: table.map(Name::from),
            column: column.into(),
        }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.table {
            Some(t) => write!(f, "{t}.{}", self.column),
            None => f.write_str(&self.column),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Const(Constant),
    Column(ColumnRef),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Const(c) => c.fmt(f),
            Operand::Column(c) => c.fmt(f),
        }
    }
}

/// `column op (constant | column)`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub left: ColumnRef,
    pub op: CmpOp,
    pub right: Operand,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.left, self.op, self.right)
    }
}

/// `SELECT result FROM tables WHERE c1 AND c2 ...`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub result: Vec<ColumnRef>,
    pub tables: Vec<Name>,
    pub conditions: Vec<Condition>,
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |items: Vec<String>, sep: &str| items.join(sep);
        write!(
            f,
            "from {}",
            join(self.tables.iter().map(|t| t.to_string()).collect(), ", ")
        )?;
        if !self.conditions.is_empty() {
            write!(
                f,
                " where {}",
                join(self.conditions.iter().map(|c| c.to_string()).collect(), " and ")
            )?;
        }
        write!(
            f,
            " select {}",
            join(self.result.iter().map(|c| c.to_string()).collect(), ", ")
        )
    }
}

/// (position in `tables`, column index)
type Slot = (usize, usize);

#[derive(Debug, Clone)]
enum ROperand {
    Const(Constant),
    Column(Slot),
}

#[derive(Debug, Clone)]
struct RCondition {
    left: Slot,
    op: CmpOp,
    right: ROperand,
}

impl RCondition {
    /// Highest table position this condition reads.
    fn last_table(&self) -> usize {
        match self.right {
            ROperand::Column((t, _)) => t.max(self.left.0),
            ROperand::Const(_) => self.left.0,
        }
    }
}

impl Selection {
    fn resolve_column(&self, catalog: &Catalog, col: &ColumnRef) -> Result<(Slot, ColumnType), RelError> {
        let mut found = None;
        for (ti, table) in self.tables.iter().enumerate() {
            if col.table.as_ref().is_some_and(|t| t != table) {
                continue;
            }
            let schema = catalog
                .schema(table)
                .ok_or_else(|| RelError::UnknownTable(table.clone()))?;
            if let Some(ci) = schema.column_index(&col.column) {
                if found.is_some() {
                    return Err(RelError::AmbiguousColumn(col.to_string()));
                }
                found = Some(((ti, ci), schema.column_type(ci)));
            }
        }
        if let Some(t) = &col.table {
            if !self.tables.contains(t) {
                return Err(RelError::UnknownTable(t.clone()));
            }
        }
        found.ok_or_else(|| RelError::UnknownColumn(col.to_string()))
    }

    /// Checks tables, columns and constraint types against the catalog.
    pub fn validate(&self, catalog: &Catalog) -> Result<(), RelError> {
        self.resolve(catalog).map(|_| ())
    }

    fn resolve(&self, catalog: &Catalog) -> Result<Resolved, RelError> {
        for (i, t) in self.tables.iter().enumerate() {
            if catalog.schema(t).is_none() {
                return Err(RelError::UnknownTable(t.clone()));
            }
            if self.tables[..i].contains(t) {
                return Err(RelError::RepeatedTable(t.clone()));
            }
        }
        let mut result = Vec::with_capacity(self.result.len());
        for col in &self.result {
            result.push(self.resolve_column(catalog, col)?.0);
        }
        let mut conditions = Vec::with_capacity(self.conditions.len());
        for cond in &self.conditions {
            let (left, lty) = self.resolve_column(catalog, &cond.left)?;
            let right = match &cond.right {
                Operand::Const(c) => {
                    if !lty.admits(c) {
                        return Err(RelError::TypeMismatch(format!(
                            "`{cond}` compares a {lty} column with a {} constant",
                            c.type_name()
                        )));
                    }
                    ROperand::Const(c.clone())
                }
                Operand::Column(rc) => {
                    let (slot, rty) = self.resolve_column(catalog, rc)?;
                    if !lty.compatible(rty) {
                        return Err(RelError::TypeMismatch(format!(
                            "`{cond}` compares a {lty} column with a {rty} column"
                        )));
                    }
                    ROperand::Column(slot)
                }
            };
            conditions.push(RCondition {
                left,
                op: cond.op,
                right,
            });
        }
        let mut types = Vec::new();
        for t in &self.tables {
            let schema = catalog.schema(t).expect("checked above");
            types.push(schema.columns.iter().map(|(_, ty)| *ty).collect());
        }
        Ok(Resolved {
            result,
            conditions,
            types,
        })
    }
}

struct Resolved {
    result: Vec<Slot>,
    conditions: Vec<RCondition>,
    types: Vec<Vec<ColumnType>>,
}

fn test(rows: &[&Row], cond: &RCondition) -> Result<bool, RelError> {
    let left = &rows[cond.left.0][cond.left.1];
    let right = match &cond.right {
        ROperand::Const(c) => c,
        ROperand::Column((t, c)) => &rows[*t][*c],
    };
    left.compare(cond.op, right)
        .map_err(|e| RelError::TypeMismatch(e.to_string()))
}

/// Evaluates a selection: the cross product of its tables, filtered by every
/// condition and by `extra` (result position, value) equalities, projected
/// onto the result columns. The output is duplicate-free and sorted.
///
/// Conditions that mention a single table are applied before joining; an
/// equality between columns of the same type is executed as a hash join.
pub fn evaluate_selection(
    sel: &Selection,
    catalog: &Catalog,
    extra: &[(usize, Constant)],
) -> Result<Vec<Row>, RelError> {
    let mut resolved = sel.resolve(catalog)?;
    for (pos, value) in extra {
        let slot = *resolved.result.get(*pos).ok_or_else(|| {
            RelError::UnknownColumn(format!("result position {pos}"))
        })?;
        resolved.conditions.push(RCondition {
            left: slot,
            op: CmpOp::Eq,
            right: ROperand::Const(value.clone()),
        });
    }
    let Resolved {
        result,
        conditions,
        types,
    } = resolved;

    let tables: Vec<Arc<Vec<Row>>> = sel
        .tables
        .iter()
        .map(|t| catalog.rows(t))
        .collect::<Result<_, _>>()?;

    // conditions grouped by the last table they need
    let mut by_table: Vec<Vec<&RCondition>> = vec![Vec::new(); tables.len()];
    for c in &conditions {
        by_table[c.last_table()].push(c);
    }

    let mut partial: Vec<Vec<&Row>> = vec![Vec::new()];
    for (ti, rows) in tables.iter().enumerate() {
        let (local, cross): (Vec<&RCondition>, Vec<&RCondition>) =
            by_table[ti].iter().partition(|c| match c.right {
                ROperand::Const(_) => true,
                ROperand::Column((t, _)) => t == ti && c.left.0 == ti,
            });

        // single-table filtering first
        let mut candidates: Vec<&Row> = Vec::new();
        for row in rows.iter() {
            let mut scratch: Vec<&Row> = vec![row; ti + 1];
            scratch[ti] = row;
            let mut keep = true;
            for c in &local {
                if !test(&scratch, c)? {
                    keep = false;
                    break;
                }
            }
            if keep {
                candidates.push(row);
            }
        }

        // hash-joinable equalities: this table's column against an earlier table's
        let (hashable, residual): (Vec<&RCondition>, Vec<&RCondition>) =
            cross.into_iter().partition(|c| {
                let ROperand::Column(r) = c.right else { return false };
                c.op == CmpOp::Eq
                    && (c.left.0 == ti) != (r.0 == ti)
                    && types[c.left.0][c.left.1] == types[r.0][r.1]
            });
        let key_slots: Vec<(Slot, usize)> = hashable
            .iter()
            .map(|c| {
                let ROperand::Column(r) = c.right else { unreachable!() };
                if c.left.0 == ti {
                    (r, c.left.1)
                } else {
                    (c.left, r.1)
                }
            })
            .collect();

        let mut next = Vec::new();
        if key_slots.is_empty() {
            for prefix in &partial {
                for row in &candidates {
                    next.push(extend(prefix, row));
                }
            }
        } else {
            let mut index: HashMap<Vec<&Constant>, Vec<&Row>> = HashMap::new();
            for row in &candidates {
                let key = key_slots.iter().map(|(_, col)| &row[*col]).collect();
                index.entry(key).or_default().push(row);
            }
            for prefix in &partial {
                let key: Vec<&Constant> = key_slots
                    .iter()
                    .map(|((t, c), _)| &prefix[*t][*c])
                    .collect();
                if let Some(matches) = index.get(&key) {
                    for row in matches {
                        next.push(extend(prefix, row));
                    }
                }
            }
        }
        let mut filtered = Vec::with_capacity(next.len());
        'rows: for combo in next {
            for c in &residual {
                if !test(&combo, c)? {
                    continue 'rows;
                }
            }
            filtered.push(combo);
        }
        partial = filtered;
    }

    let out: BTreeSet<Row> = partial
        .iter()
        .map(|combo| result.iter().map(|(t, c)| combo[*t][*c].clone()).collect())
        .collect();
    Ok(out.into_iter().collect())
}

fn extend<'a>(prefix: &[&'a Row], row: &'a Row) -> Vec<&'a Row> {
    let mut v = Vec::with_capacity(prefix.len() + 1);
    v.extend_from_slice(prefix);
    v.push(row);
    v
}
