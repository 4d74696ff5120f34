//! Analytical queries over the warehouse: selection on dimension attributes,
//! grouping on dimension levels, aggregation of measures, and the roll-up /
//! drill-down rewrites along hierarchies.
//!
//! Evaluation joins cells to their dimension members, filters, groups and
//! aggregates. Join semantics are strict: a cell takes part only when every
//! attribute referenced by the query resolves on it; a cell that lacks a
//! referenced dimension (or whose member lacks the attribute value) is
//! filtered out. Grouping keys order rows lexicographically.
//!
//! Aggregation semantics: absent measure values are skipped by SUM, AVG, MIN
//! and MAX and not counted by COUNT(measure); COUNT(*) counts cells. Sums
//! are exact; AVG divides the exact sum by the count with half-even rounding
//! at [`crate::decimal::AVG_SCALE`] digits. A group whose values are all
//! absent yields an absent aggregate; groups only ever arise from cells, so
//! a selection matching nothing yields an empty table.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cell::Cell;
use core::cmp::Ordering;
use core::fmt;

use crate::decimal::Decimal;
use crate::mcm::{AttrType, MeasureType};
use crate::store::{HierarchyDef, MeasureValue, XCubeStore};
use crate::xml::Element;

/// A dimension attribute reference, rendered `Dimension.attribute`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct AttrRef {
    pub dimension: String,
    pub attribute: String,
}

impl AttrRef {
    pub fn new(dimension: impl Into<String>, attribute: impl Into<String>) -> Self {
        AttrRef {
            dimension: dimension.into(),
            attribute: attribute.into(),
        }
    }

    pub fn parse(text: &str) -> Option<AttrRef> {
        let (d, a) = text.split_once('.')?;
        if d.is_empty() || a.is_empty() {
            return None;
        }
        Some(AttrRef::new(d, a))
    }
}

impl fmt::Display for AttrRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.dimension, self.attribute)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    pub fn token(&self) -> &'static str {
        match self {
            Cmp::Eq => "eq",
            Cmp::Ne => "ne",
            Cmp::Lt => "lt",
            Cmp::Le => "le",
            Cmp::Gt => "gt",
            Cmp::Ge => "ge",
        }
    }

    pub fn parse(token: &str) -> Option<Cmp> {
        match token {
            "eq" => Some(Cmp::Eq),
            "ne" => Some(Cmp::Ne),
            "lt" => Some(Cmp::Lt),
            "le" => Some(Cmp::Le),
            "gt" => Some(Cmp::Gt),
            "ge" => Some(Cmp::Ge),
            _ => None,
        }
    }

    fn holds(&self, ord: Ordering) -> bool {
        match self {
            Cmp::Eq => ord == Ordering::Equal,
            Cmp::Ne => ord != Ordering::Equal,
            Cmp::Lt => ord == Ordering::Less,
            Cmp::Le => ord != Ordering::Greater,
            Cmp::Gt => ord == Ordering::Greater,
            Cmp::Ge => ord != Ordering::Less,
        }
    }

    fn is_ordering(&self) -> bool {
        !matches!(self, Cmp::Eq | Cmp::Ne)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Predicate {
    pub attr: AttrRef,
    pub cmp: Cmp,
    pub literal: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggFunc {
    Sum,
    Avg,
    Count,
    Min,
    Max,
}

impl AggFunc {
    pub fn as_str(&self) -> &'static str {
        match self {
            AggFunc::Sum => "SUM",
            AggFunc::Avg => "AVG",
            AggFunc::Count => "COUNT",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
        }
    }

    pub fn parse(text: &str) -> Option<AggFunc> {
        match text {
            "SUM" => Some(AggFunc::Sum),
            "AVG" => Some(AggFunc::Avg),
            "COUNT" => Some(AggFunc::Count),
            "MIN" => Some(AggFunc::Min),
            "MAX" => Some(AggFunc::Max),
            _ => None,
        }
    }
}

/// An aggregate column; `measure == "*"` is allowed for COUNT only and
/// counts cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AggSpec {
    pub func: AggFunc,
    pub measure: String,
}

impl AggSpec {
    pub fn column_name(&self) -> String {
        format!("{}({})", self.func.as_str(), self.measure)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalyticalQuery {
    pub selections: Vec<Predicate>,
    pub group_by: Vec<AttrRef>,
    pub aggregates: Vec<AggSpec>,
}

/// One aggregate cell of a result row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AggValue {
    Int(i128),
    Dec(Decimal),
    Count(u64),
    /// No value contributed to this aggregate in this group.
    Absent,
}

impl AggValue {
    pub fn render(&self) -> Option<String> {
        match self {
            AggValue::Int(v) => Some(v.to_string()),
            AggValue::Dec(d) => Some(d.to_string()),
            AggValue::Count(c) => Some(c.to_string()),
            AggValue::Absent => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResultRow {
    pub key: Vec<String>,
    pub values: Vec<AggValue>,
}

/// Grouped aggregation result; rows are ordered lexicographically by key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResultTable {
    pub header: Vec<String>,
    pub rows: Vec<ResultRow>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QueryError {
    UnknownAttribute(String),
    UnknownMeasure(String),
    TypeMismatch(String),
    HierarchyMismatch(String),
    Malformed(String),
    Overflow,
}

impl fmt::Display for QueryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryError::UnknownAttribute(a) => write!(f, "unknown attribute '{a}'"),
            QueryError::UnknownMeasure(m) => write!(f, "unknown measure '{m}'"),
            QueryError::TypeMismatch(msg) => write!(f, "type mismatch: {msg}"),
            QueryError::HierarchyMismatch(msg) => write!(f, "hierarchy mismatch: {msg}"),
            QueryError::Malformed(msg) => write!(f, "malformed query: {msg}"),
            QueryError::Overflow => write!(f, "aggregate overflow"),
        }
    }
}

impl core::error::Error for QueryError {}

/// Evaluation counters; the join-eliminating index must keep
/// `member_lookups` at zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalStats {
    pub member_lookups: u64,
}

/// Where the evaluation core reads cells from: the store (via member
/// lookups) or the denormalized index (inline).
pub(crate) trait CellSource {
    fn cell_count(&self) -> usize;
    fn attr_value(&self, cell: usize, attr: &AttrRef) -> Option<&str>;
    fn measure_value(&self, cell: usize, measure: &str) -> Option<&MeasureValue>;
}

struct StoreSource<'a> {
    store: &'a XCubeStore,
    // The join build side: member key -> attribute tuple.
    members: BTreeMap<(&'a str, &'a str), &'a [(String, String)]>,
    lookups: Cell<u64>,
}

impl<'a> StoreSource<'a> {
    fn new(store: &'a XCubeStore) -> Self {
        let members = store
            .members
            .iter()
            .map(|m| ((m.dimension.as_str(), m.node.as_str()), m.attributes.as_slice()))
            .collect();
        StoreSource {
            store,
            members,
            lookups: Cell::new(0),
        }
    }
}

impl<'a> CellSource for StoreSource<'a> {
    fn cell_count(&self) -> usize {
        self.store.cells.len()
    }

    fn attr_value(&self, cell: usize, attr: &AttrRef) -> Option<&str> {
        let node = self.store.cells[cell].coordinate(&attr.dimension)?;
        self.lookups.set(self.lookups.get() + 1);
        let attributes = self.members.get(&(attr.dimension.as_str(), node.as_str()))?;
        attributes
            .iter()
            .find(|(n, _)| *n == attr.attribute)
            .map(|(_, v)| v.as_str())
    }

    fn measure_value(&self, cell: usize, measure: &str) -> Option<&MeasureValue> {
        self.store.cells[cell].measure(measure)
    }
}

/// Evaluates a query directly against the store.
pub fn evaluate(store: &XCubeStore, q: &AnalyticalQuery) -> Result<ResultTable, QueryError> {
    evaluate_with_stats(store, q).map(|(table, _)| table)
}

/// Like [`evaluate`] but also reports how many member lookups the join
/// performed.
pub fn evaluate_with_stats(
    store: &XCubeStore,
    q: &AnalyticalQuery,
) -> Result<(ResultTable, EvalStats), QueryError> {
    let source = StoreSource::new(store);
    let table = evaluate_over(store, &source, q)?;
    Ok((
        table,
        EvalStats {
            member_lookups: source.lookups.get(),
        },
    ))
}

/// The shared evaluation core used by the direct and the indexed paths.
///
/// Group keys borrow from the source and a scratch key is reused across
/// cells, so the scan allocates only when a new group appears.
pub(crate) fn evaluate_over<'s>(
    catalogs: &XCubeStore,
    source: &'s dyn CellSource,
    q: &AnalyticalQuery,
) -> Result<ResultTable, QueryError> {
    let compiled = compile(catalogs, q)?;
    let mut groups: BTreeMap<Vec<&'s str>, Vec<Accumulator>> = BTreeMap::new();
    let mut scratch: Vec<&'s str> = Vec::with_capacity(q.group_by.len());

    'cells: for cell in 0..source.cell_count() {
        for predicate in &compiled.predicates {
            match source.attr_value(cell, &predicate.attr) {
                Some(value) if predicate.matches(value) => {}
                _ => continue 'cells,
            }
        }
        scratch.clear();
        for attr in &q.group_by {
            match source.attr_value(cell, attr) {
                Some(value) => scratch.push(value),
                None => continue 'cells,
            }
        }
        let accs = match groups.get_mut(&scratch) {
            Some(accs) => accs,
            None => groups
                .entry(scratch.clone())
                .or_insert_with(|| compiled.aggregates.iter().map(Accumulator::new).collect()),
        };
        for acc in accs.iter_mut() {
            acc.feed(source, cell)?;
        }
    }

    let header = q
        .group_by
        .iter()
        .map(AttrRef::to_string)
        .chain(q.aggregates.iter().map(|a| a.column_name()))
        .collect();
    let rows = groups
        .into_iter()
        .map(|(key, accs)| {
            Ok(ResultRow {
                key: key.iter().map(|s| s.to_string()).collect(),
                values: accs
                    .into_iter()
                    .map(Accumulator::finish)
                    .collect::<Result<_, _>>()?,
            })
        })
        .collect::<Result<Vec<_>, QueryError>>()?;
    Ok(ResultTable { header, rows })
}

pub(crate) struct CompiledPredicate {
    attr: AttrRef,
    cmp: Cmp,
    literal: Literal,
}

enum Literal {
    Str(String),
    Int { value: i64, canonical: String },
    Dec(Decimal),
}

impl CompiledPredicate {
    pub(crate) fn matches(&self, value: &str) -> bool {
        let ord = match &self.literal {
            Literal::Str(lit) => value.cmp(lit.as_str()),
            Literal::Int { value: lit, canonical } => {
                match cmp_int_text(value, canonical) {
                    Some(ord) => ord,
                    // Non-canonical digits ("007"): fall back to parsing.
                    None => match value.parse::<i64>() {
                        Ok(v) => v.cmp(lit),
                        Err(_) => return false,
                    },
                }
            }
            Literal::Dec(lit) => match Decimal::parse(value) {
                Ok(v) => v.cmp_numeric(lit),
                Err(_) => return false,
            },
        };
        self.cmp.holds(ord)
    }
}

/// Compares two canonical integer renderings without parsing: sign, then
/// digit count, then lexicographic. `None` when either side is not in
/// canonical form.
fn cmp_int_text(a: &str, b: &str) -> Option<Ordering> {
    fn canonical(s: &str) -> Option<(bool, &str)> {
        let (negative, digits) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let ok = !digits.is_empty()
            && digits.bytes().all(|b| b.is_ascii_digit())
            && (digits.len() == 1 || !digits.starts_with('0'));
        ok.then_some((negative, digits))
    }
    let (a_neg, a_digits) = canonical(a)?;
    let (b_neg, b_digits) = canonical(b)?;
    Some(match (a_neg, b_neg) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => (a_digits.len(), a_digits).cmp(&(b_digits.len(), b_digits)),
        (true, true) => (b_digits.len(), b_digits).cmp(&(a_digits.len(), a_digits)),
    })
}

struct Compiled {
    predicates: Vec<CompiledPredicate>,
    aggregates: Vec<CompiledAgg>,
}

#[derive(Clone)]
pub(crate) struct CompiledAgg {
    func: AggFunc,
    measure: String,
    ty: Option<MeasureType>,
}

fn compile(catalogs: &XCubeStore, q: &AnalyticalQuery) -> Result<Compiled, QueryError> {
    if q.aggregates.is_empty() {
        return Err(QueryError::Malformed(
            "a query needs at least one aggregate".to_string(),
        ));
    }
    for attr in &q.group_by {
        attr_type(catalogs, attr)?;
    }
    Ok(Compiled {
        predicates: q
            .selections
            .iter()
            .map(|p| compile_predicate(catalogs, p))
            .collect::<Result<_, _>>()?,
        aggregates: compile_aggregates(catalogs, &q.aggregates)?,
    })
}

fn attr_type(catalogs: &XCubeStore, attr: &AttrRef) -> Result<AttrType, QueryError> {
    catalogs
        .dimension_def(&attr.dimension)
        .and_then(|d| d.attribute_type(&attr.attribute))
        .ok_or_else(|| QueryError::UnknownAttribute(attr.to_string()))
}

/// Types a predicate's literal against the attribute catalog.
pub(crate) fn compile_predicate(
    catalogs: &XCubeStore,
    p: &Predicate,
) -> Result<CompiledPredicate, QueryError> {
    let ty = attr_type(catalogs, &p.attr)?;
    let literal = match ty {
        AttrType::String => {
            if p.cmp.is_ordering() {
                return Err(QueryError::TypeMismatch(format!(
                    "ordering comparator on string attribute '{}'",
                    p.attr
                )));
            }
            Literal::Str(p.literal.clone())
        }
        AttrType::Integer => {
            let value = p.literal.parse::<i64>().map_err(|_| {
                QueryError::TypeMismatch(format!(
                    "literal '{}' is not an integer for '{}'",
                    p.literal, p.attr
                ))
            })?;
            Literal::Int {
                value,
                canonical: value.to_string(),
            }
        }
        AttrType::Decimal => Literal::Dec(Decimal::parse(&p.literal).map_err(|_| {
            QueryError::TypeMismatch(format!(
                "literal '{}' is not a decimal for '{}'",
                p.literal, p.attr
            ))
        })?),
    };
    Ok(CompiledPredicate {
        attr: p.attr.clone(),
        cmp: p.cmp,
        literal,
    })
}

/// Types the aggregate list against the measure catalog.
pub(crate) fn compile_aggregates(
    catalogs: &XCubeStore,
    specs: &[AggSpec],
) -> Result<Vec<CompiledAgg>, QueryError> {
    let mut aggregates = Vec::new();
    for spec in specs {
        let ty = if spec.measure == "*" {
            if spec.func != AggFunc::Count {
                return Err(QueryError::Malformed(format!(
                    "'*' is only valid with COUNT, not {}",
                    spec.func.as_str()
                )));
            }
            None
        } else {
            Some(
                catalogs
                    .measure_def(&spec.measure)
                    .ok_or_else(|| QueryError::UnknownMeasure(spec.measure.clone()))?
                    .ty,
            )
        };
        aggregates.push(CompiledAgg {
            func: spec.func,
            measure: spec.measure.clone(),
            ty,
        });
    }
    Ok(aggregates)
}

/// Total order over measure values: numeric first, then representation, so
/// MIN/MAX stay associative across any partitioning of the cells.
fn cmp_total(a: &MeasureValue, b: &MeasureValue) -> Ordering {
    match (a, b) {
        (MeasureValue::Int(x), MeasureValue::Int(y)) => x.cmp(y),
        (MeasureValue::Dec(x), MeasureValue::Dec(y)) => x
            .cmp_numeric(y)
            .then(x.scale().cmp(&y.scale()))
            .then(x.mantissa().cmp(&y.mantissa())),
        // One measure has one declared type; mixed values cannot occur.
        (MeasureValue::Int(x), MeasureValue::Dec(y)) => {
            Decimal::from_int(*x).cmp_numeric(y).then(Ordering::Less)
        }
        (MeasureValue::Dec(x), MeasureValue::Int(y)) => {
            x.cmp_numeric(&Decimal::from_int(*y)).then(Ordering::Greater)
        }
    }
}

pub(crate) struct Accumulator {
    measure: String,
    state: AccState,
}

enum AccState {
    SumInt { sum: i128, any: bool },
    SumDec { sum: Option<Decimal> },
    AvgInt { sum: i128, count: u64 },
    AvgDec { sum: Option<Decimal>, count: u64 },
    CountMeasure(u64),
    CountCells(u64),
    Min(Option<MeasureValue>),
    Max(Option<MeasureValue>),
}

impl Accumulator {
    pub(crate) fn new(agg: &CompiledAgg) -> Accumulator {
        let state = match (agg.func, agg.ty) {
            (AggFunc::Count, None) => AccState::CountCells(0),
            (AggFunc::Count, Some(_)) => AccState::CountMeasure(0),
            (AggFunc::Sum, Some(MeasureType::Integer)) => AccState::SumInt { sum: 0, any: false },
            (AggFunc::Sum, _) => AccState::SumDec { sum: None },
            (AggFunc::Avg, Some(MeasureType::Integer)) => AccState::AvgInt { sum: 0, count: 0 },
            (AggFunc::Avg, _) => AccState::AvgDec { sum: None, count: 0 },
            (AggFunc::Min, _) => AccState::Min(None),
            (AggFunc::Max, _) => AccState::Max(None),
        };
        Accumulator {
            measure: agg.measure.clone(),
            state,
        }
    }

    fn feed(&mut self, source: &dyn CellSource, cell: usize) -> Result<(), QueryError> {
        if let AccState::CountCells(count) = &mut self.state {
            *count += 1;
            return Ok(());
        }
        let Some(value) = source.measure_value(cell, &self.measure) else {
            return Ok(());
        };
        self.absorb(value)
    }

    /// Folds one store cell in directly; used by view materialization.
    pub(crate) fn feed_cell(&mut self, cell: &crate::store::FactCell) -> Result<(), QueryError> {
        if let AccState::CountCells(count) = &mut self.state {
            *count += 1;
            return Ok(());
        }
        match cell.measure(&self.measure) {
            Some(value) => self.absorb(value),
            None => Ok(()),
        }
    }

    /// Folds one present value in; shared by direct evaluation and by view
    /// re-aggregation.
    fn absorb(&mut self, value: &MeasureValue) -> Result<(), QueryError> {
        match (&mut self.state, value) {
            (AccState::SumInt { sum, any }, MeasureValue::Int(v)) => {
                *sum = sum.checked_add(*v as i128).ok_or(QueryError::Overflow)?;
                *any = true;
            }
            (AccState::SumDec { sum }, MeasureValue::Dec(d)) => {
                *sum = Some(match sum.take() {
                    None => *d,
                    Some(s) => s.checked_add(*d).map_err(|_| QueryError::Overflow)?,
                });
            }
            (AccState::AvgInt { sum, count }, MeasureValue::Int(v)) => {
                *sum = sum.checked_add(*v as i128).ok_or(QueryError::Overflow)?;
                *count += 1;
            }
            (AccState::AvgDec { sum, count }, MeasureValue::Dec(d)) => {
                *sum = Some(match sum.take() {
                    None => *d,
                    Some(s) => s.checked_add(*d).map_err(|_| QueryError::Overflow)?,
                });
                *count += 1;
            }
            (AccState::CountMeasure(count), _) => *count += 1,
            (AccState::Min(best), v) => {
                let better = best
                    .as_ref()
                    .is_none_or(|b| cmp_total(v, b) == Ordering::Less);
                if better {
                    *best = Some(v.clone());
                }
            }
            (AccState::Max(best), v) => {
                let better = best
                    .as_ref()
                    .is_none_or(|b| cmp_total(v, b) == Ordering::Greater);
                if better {
                    *best = Some(v.clone());
                }
            }
            // One measure has one declared type, so a mismatch here means a
            // corrupt source.
            (_, other) => {
                return Err(QueryError::TypeMismatch(format!(
                    "measure '{}' carries a value of the wrong kind: {}",
                    self.measure,
                    other.render()
                )))
            }
        }
        Ok(())
    }

    pub(crate) fn finish(self) -> Result<AggValue, QueryError> {
        Ok(match self.state {
            AccState::SumInt { sum, any } => {
                if any {
                    AggValue::Int(sum)
                } else {
                    AggValue::Absent
                }
            }
            AccState::SumDec { sum } => sum.map_or(AggValue::Absent, AggValue::Dec),
            AccState::AvgInt { sum, count } => {
                if count == 0 {
                    AggValue::Absent
                } else {
                    let sum = Decimal::new(sum, 0).map_err(|_| QueryError::Overflow)?;
                    AggValue::Dec(sum.div_count_half_even(count).map_err(|_| QueryError::Overflow)?)
                }
            }
            AccState::AvgDec { sum, count } => match sum {
                None => AggValue::Absent,
                Some(s) => {
                    AggValue::Dec(s.div_count_half_even(count).map_err(|_| QueryError::Overflow)?)
                }
            },
            AccState::CountMeasure(count) | AccState::CountCells(count) => AggValue::Count(count),
            AccState::Min(best) | AccState::Max(best) => best.map_or(AggValue::Absent, |v| match v {
                MeasureValue::Int(i) => AggValue::Int(i as i128),
                MeasureValue::Dec(d) => AggValue::Dec(d),
            }),
        })
    }
}

/// Re-aggregation support for materialized views: fold pre-aggregated
/// partial values into query-level results.
pub(crate) fn reaggregate(
    catalogs: &XCubeStore,
    q: &AnalyticalQuery,
    groups: BTreeMap<Vec<String>, Vec<Vec<PartialAgg>>>,
) -> Result<ResultTable, QueryError> {
    let compiled = compile(catalogs, q)?;
    let header = q
        .group_by
        .iter()
        .map(AttrRef::to_string)
        .chain(q.aggregates.iter().map(|a| a.column_name()))
        .collect();
    let mut rows = Vec::new();
    for (key, partials) in groups {
        let mut values = Vec::with_capacity(compiled.aggregates.len());
        for (agg, column) in compiled.aggregates.iter().zip(partials_columns(&partials)) {
            values.push(fold_partials(agg, column)?);
        }
        rows.push(ResultRow { key, values });
    }
    Ok(ResultTable { header, rows })
}

/// One pre-aggregated contribution to a query aggregate: for SUM/MIN/MAX the
/// partial value, for COUNT the partial count, for AVG the partial sum and
/// count.
#[derive(Clone, Debug)]
pub(crate) enum PartialAgg {
    Value(AggValue),
    SumCount(AggValue, u64),
}

fn partials_columns(partials: &[Vec<PartialAgg>]) -> impl Iterator<Item = Vec<&PartialAgg>> {
    let columns = partials.first().map_or(0, Vec::len);
    (0..columns).map(move |i| partials.iter().map(|row| &row[i]).collect())
}

fn fold_partials(agg: &CompiledAgg, column: Vec<&PartialAgg>) -> Result<AggValue, QueryError> {
    let mut acc = Accumulator::new(agg);
    let mut count_total: u64 = 0;
    let mut sum_int: i128 = 0;
    let mut sum_dec: Option<Decimal> = None;
    let mut any = false;
    for partial in column {
        match (agg.func, partial) {
            (AggFunc::Count, PartialAgg::Value(AggValue::Count(c))) => count_total += c,
            (AggFunc::Sum | AggFunc::Min | AggFunc::Max, PartialAgg::Value(v)) => match v {
                AggValue::Int(i) => {
                    if agg.func == AggFunc::Sum {
                        sum_int = sum_int.checked_add(*i).ok_or(QueryError::Overflow)?;
                        any = true;
                    } else {
                        let small = i64::try_from(*i).map_err(|_| QueryError::Overflow)?;
                        acc.absorb(&MeasureValue::Int(small))?;
                    }
                }
                AggValue::Dec(d) => {
                    if agg.func == AggFunc::Sum {
                        sum_dec = Some(match sum_dec.take() {
                            None => *d,
                            Some(s) => s.checked_add(*d).map_err(|_| QueryError::Overflow)?,
                        });
                        any = true;
                    } else {
                        acc.absorb(&MeasureValue::Dec(*d))?;
                    }
                }
                AggValue::Absent => {}
                AggValue::Count(_) => {
                    return Err(QueryError::Malformed(
                        "count partial where a value was expected".to_string(),
                    ))
                }
            },
            (AggFunc::Avg, PartialAgg::SumCount(sum, count)) => {
                match sum {
                    AggValue::Int(i) => {
                        sum_int = sum_int.checked_add(*i).ok_or(QueryError::Overflow)?;
                    }
                    AggValue::Dec(d) => {
                        sum_dec = Some(match sum_dec.take() {
                            None => *d,
                            Some(s) => s.checked_add(*d).map_err(|_| QueryError::Overflow)?,
                        });
                    }
                    AggValue::Absent => {}
                    AggValue::Count(_) => {
                        return Err(QueryError::Malformed(
                            "count partial where a sum was expected".to_string(),
                        ))
                    }
                }
                count_total += count;
            }
            _ => {
                return Err(QueryError::Malformed(
                    "partial aggregate of the wrong shape".to_string(),
                ))
            }
        }
    }
    Ok(match agg.func {
        AggFunc::Count => AggValue::Count(count_total),
        AggFunc::Min | AggFunc::Max => acc.finish()?,
        AggFunc::Sum => match agg.ty {
            Some(MeasureType::Integer) => {
                if any {
                    AggValue::Int(sum_int)
                } else {
                    AggValue::Absent
                }
            }
            _ => sum_dec.map_or(AggValue::Absent, AggValue::Dec),
        },
        AggFunc::Avg => {
            if count_total == 0 {
                AggValue::Absent
            } else {
                let sum = match agg.ty {
                    Some(MeasureType::Integer) => {
                        Decimal::new(sum_int, 0).map_err(|_| QueryError::Overflow)?
                    }
                    _ => sum_dec.unwrap_or(Decimal::ZERO),
                };
                AggValue::Dec(
                    sum.div_count_half_even(count_total)
                        .map_err(|_| QueryError::Overflow)?,
                )
            }
        }
    })
}

/// Parses a serialized aggregate value, typed by the aggregate function and
/// the measure catalog; `None` means the value was absent.
pub(crate) fn parse_agg_value(
    raw: Option<&str>,
    spec: &AggSpec,
    catalogs: &XCubeStore,
) -> Result<AggValue, QueryError> {
    let Some(text) = raw else {
        return Ok(AggValue::Absent);
    };
    let bad = |what: &str| QueryError::Malformed(format!("'{text}' is not a valid {what}"));
    match spec.func {
        AggFunc::Count => Ok(AggValue::Count(text.parse().map_err(|_| bad("count"))?)),
        AggFunc::Avg => Ok(AggValue::Dec(
            Decimal::parse(text).map_err(|_| bad("average"))?,
        )),
        AggFunc::Sum | AggFunc::Min | AggFunc::Max => {
            let ty = catalogs
                .measure_def(&spec.measure)
                .ok_or_else(|| QueryError::UnknownMeasure(spec.measure.clone()))?
                .ty;
            match ty {
                MeasureType::Integer => {
                    Ok(AggValue::Int(text.parse().map_err(|_| bad("integer"))?))
                }
                MeasureType::Decimal => Ok(AggValue::Dec(
                    Decimal::parse(text).map_err(|_| bad("decimal"))?,
                )),
            }
        }
    }
}

/// Outcome of a roll-up or drill-down rewrite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelShift {
    pub query: AnalyticalQuery,
    /// True when the query was already at the hierarchy boundary and was
    /// returned unchanged.
    pub at_boundary: bool,
}

/// Rewrites the query one level coarser along `h`.
///
/// The finest grouped level of `h` is replaced by the full attribute list of
/// the next coarser level (catalog order), in place. Selections are
/// preserved. At the coarsest level the query comes back unchanged with the
/// boundary flag set.
pub fn rollup(
    store: &XCubeStore,
    q: &AnalyticalQuery,
    h: &HierarchyDef,
) -> Result<LevelShift, QueryError> {
    shift_level(store, q, h, true)
}

/// Rewrites the query one level finer along `h`; the inverse of [`rollup`]
/// away from the boundaries.
pub fn drilldown(
    store: &XCubeStore,
    q: &AnalyticalQuery,
    h: &HierarchyDef,
) -> Result<LevelShift, QueryError> {
    shift_level(store, q, h, false)
}

fn shift_level(
    store: &XCubeStore,
    q: &AnalyticalQuery,
    h: &HierarchyDef,
    coarser: bool,
) -> Result<LevelShift, QueryError> {
    let grouped_level = h
        .levels
        .iter()
        .position(|level| q.group_by.iter().any(|a| a.dimension == *level))
        .ok_or_else(|| {
            QueryError::HierarchyMismatch(format!(
                "query groups on no level of hierarchy [{}]",
                h.levels.join(", ")
            ))
        })?;
    let target = if coarser {
        grouped_level + 1
    } else {
        if grouped_level == 0 {
            return Ok(LevelShift {
                query: q.clone(),
                at_boundary: true,
            });
        }
        grouped_level - 1
    };
    let Some(target_name) = h.levels.get(target) else {
        return Ok(LevelShift {
            query: q.clone(),
            at_boundary: true,
        });
    };
    let target_def = store
        .dimension_def(target_name)
        .ok_or_else(|| QueryError::UnknownAttribute(format!("{target_name}.*")))?;
    let from_name = &h.levels[grouped_level];

    let mut group_by: Vec<AttrRef> = Vec::new();
    let push_unique = |list: &mut Vec<AttrRef>, attr: AttrRef| {
        if !list.contains(&attr) {
            list.push(attr);
        }
    };
    let mut replaced = false;
    for attr in &q.group_by {
        if attr.dimension == *from_name {
            if !replaced {
                for (name, _) in &target_def.attributes {
                    push_unique(&mut group_by, AttrRef::new(target_name.clone(), name.clone()));
                }
                replaced = true;
            }
        } else {
            push_unique(&mut group_by, attr.clone());
        }
    }
    Ok(LevelShift {
        query: AnalyticalQuery {
            selections: q.selections.clone(),
            group_by,
            aggregates: q.aggregates.clone(),
        },
        at_boundary: false,
    })
}

impl AnalyticalQuery {
    /// Reads the query file format:
    ///
    /// ```xml
    /// <query>
    ///   <select attribute="Time.year" op="eq" value="1999"/>
    ///   <group attribute="Product.sku"/>
    ///   <aggregate function="SUM" measure="amount"/>
    /// </query>
    /// ```
    pub fn from_xml(doc: &Element) -> Result<AnalyticalQuery, QueryError> {
        if doc.name != "query" {
            return Err(QueryError::Malformed(format!(
                "expected root element 'query', found '{}'",
                doc.name
            )));
        }
        let mut q = AnalyticalQuery {
            selections: Vec::new(),
            group_by: Vec::new(),
            aggregates: Vec::new(),
        };
        let attr_ref = |e: &Element| -> Result<AttrRef, QueryError> {
            let text = e
                .attr("attribute")
                .ok_or_else(|| QueryError::Malformed(format!("'{}' without attribute", e.name)))?;
            AttrRef::parse(text).ok_or_else(|| {
                QueryError::Malformed(format!("'{text}' is not a Dimension.attribute reference"))
            })
        };
        for child in &doc.children {
            match child.name.as_str() {
                "select" => {
                    let op = child
                        .attr("op")
                        .ok_or_else(|| QueryError::Malformed("select without op".to_string()))?;
                    q.selections.push(Predicate {
                        attr: attr_ref(child)?,
                        cmp: Cmp::parse(op).ok_or_else(|| {
                            QueryError::Malformed(format!("unknown comparator '{op}'"))
                        })?,
                        literal: child
                            .attr("value")
                            .ok_or_else(|| QueryError::Malformed("select without value".to_string()))?
                            .to_string(),
                    });
                }
                "group" => q.group_by.push(attr_ref(child)?),
                "aggregate" => {
                    let function = child.attr("function").ok_or_else(|| {
                        QueryError::Malformed("aggregate without function".to_string())
                    })?;
                    q.aggregates.push(AggSpec {
                        func: AggFunc::parse(function).ok_or_else(|| {
                            QueryError::Malformed(format!("unknown aggregate '{function}'"))
                        })?,
                        measure: child
                            .attr("measure")
                            .ok_or_else(|| {
                                QueryError::Malformed("aggregate without measure".to_string())
                            })?
                            .to_string(),
                    });
                }
                other => {
                    return Err(QueryError::Malformed(format!(
                        "unexpected element '{other}' in query"
                    )))
                }
            }
        }
        Ok(q)
    }

    pub fn to_xml(&self) -> Element {
        let mut doc = Element::new("query");
        for p in &self.selections {
            doc.children.push(
                Element::new("select")
                    .with_attr("attribute", p.attr.to_string())
                    .with_attr("op", p.cmp.token())
                    .with_attr("value", p.literal.clone()),
            );
        }
        for g in &self.group_by {
            doc.children
                .push(Element::new("group").with_attr("attribute", g.to_string()));
        }
        for a in &self.aggregates {
            doc.children.push(
                Element::new("aggregate")
                    .with_attr("function", a.func.as_str())
                    .with_attr("measure", a.measure.clone()),
            );
        }
        doc
    }
}

impl ResultTable {
    /// Serializes the result table; absent aggregates leave the `value`
    /// attribute off.
    pub fn to_xml(&self, group_columns: usize) -> Element {
        let mut doc = Element::new("result");
        let mut header = Element::new("header");
        for (i, column) in self.header.iter().enumerate() {
            let kind = if i < group_columns { "group" } else { "aggregate" };
            header
                .children
                .push(Element::new(kind).with_attr("column", column.clone()));
        }
        doc.children.push(header);
        for row in &self.rows {
            let mut r = Element::new("row");
            for (column, value) in self.header.iter().zip(row.key.iter()) {
                r.children.push(
                    Element::new("group")
                        .with_attr("column", column.clone())
                        .with_attr("value", value.clone()),
                );
            }
            for (column, value) in self.header[group_columns..].iter().zip(row.values.iter()) {
                let mut v = Element::new("value").with_attr("column", column.clone());
                if let Some(text) = value.render() {
                    v.set_attr("value", text);
                }
                r.children.push(v);
            }
            doc.children.push(r);
        }
        doc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::DimensionMember;
    use crate::testsupport::{random_query, random_store, sales_store, XorShift};
    use crate::xml;
    use alloc::vec;

    fn store_from(rows: &[(&str, u32, Option<&str>, Option<&str>, Option<i64>)]) -> XCubeStore {
        sales_store(rows)
    }

    fn agg(func: AggFunc, measure: &str) -> AggSpec {
        AggSpec {
            func,
            measure: measure.to_string(),
        }
    }

    fn query(
        selections: Vec<(&str, Cmp, &str)>,
        group_by: Vec<&str>,
        aggregates: Vec<AggSpec>,
    ) -> AnalyticalQuery {
        AnalyticalQuery {
            selections: selections
                .into_iter()
                .map(|(attr, cmp, literal)| Predicate {
                    attr: AttrRef::parse(attr).unwrap(),
                    cmp,
                    literal: literal.to_string(),
                })
                .collect(),
            group_by: group_by.into_iter().map(|a| AttrRef::parse(a).unwrap()).collect(),
            aggregates,
        }
    }

    #[test]
    fn full_aggregation_single_row() {
        let store = store_from(&[
            ("1.50", 1999, None, None, Some(2)),
            ("2.25", 2000, Some("wet"), Some("p1"), None),
        ]);
        let table = evaluate(&store, &query(vec![], vec![], vec![agg(AggFunc::Sum, "amount")])).unwrap();
        assert_eq!(table.header, vec!["SUM(amount)".to_string()]);
        assert_eq!(table.rows.len(), 1);
        assert!(table.rows[0].key.is_empty());
        assert_eq!(table.rows[0].values[0], AggValue::Dec(Decimal::parse("3.75").unwrap()));
    }

    #[test]
    fn empty_selection_yields_empty_table() {
        let store = store_from(&[("1", 1999, None, None, None)]);
        let table = evaluate(
            &store,
            &query(
                vec![("Time.year", Cmp::Eq, "1234")],
                vec![],
                vec![agg(AggFunc::Count, "*")],
            ),
        )
        .unwrap();
        assert!(table.rows.is_empty());
    }

    #[test]
    fn grouping_orders_rows_lexicographically() {
        let store = store_from(&[
            ("1", 2001, None, Some("pZ"), None),
            ("2", 2001, None, Some("pA"), None),
            ("3", 2001, None, Some("pM"), None),
        ]);
        let table = evaluate(
            &store,
            &query(vec![], vec!["Product.sku"], vec![agg(AggFunc::Count, "*")]),
        )
        .unwrap();
        let keys: Vec<&str> = table.rows.iter().map(|r| r.key[0].as_str()).collect();
        assert_eq!(keys, vec!["pA", "pM", "pZ"]);
    }

    #[test]
    fn cells_missing_referenced_attributes_are_excluded() {
        let store = store_from(&[
            ("1", 1999, Some("dry"), Some("p1"), None),
            ("2", 1999, None, Some("p2"), None),
            ("4", 2000, Some("dry"), None, None),
        ]);
        // Selection on season: the second cell lacks the value.
        let table = evaluate(
            &store,
            &query(
                vec![("Time.season", Cmp::Eq, "dry")],
                vec![],
                vec![agg(AggFunc::Count, "*")],
            ),
        )
        .unwrap();
        assert_eq!(table.rows[0].values[0], AggValue::Count(2));
        // Grouping on sku: the third cell lacks the whole dimension.
        let table = evaluate(
            &store,
            &query(vec![], vec!["Product.sku"], vec![agg(AggFunc::Count, "*")]),
        )
        .unwrap();
        assert_eq!(table.rows.len(), 2);
    }

    #[test]
    fn aggregate_semantics() {
        let store = store_from(&[
            ("1.5", 1999, None, None, Some(10)),
            ("2.5", 1999, None, None, None),
            ("4.0", 2000, None, None, Some(4)),
        ]);
        let table = evaluate(
            &store,
            &query(
                vec![],
                vec!["Time.year"],
                vec![
                    agg(AggFunc::Sum, "qty"),
                    agg(AggFunc::Avg, "amount"),
                    agg(AggFunc::Count, "qty"),
                    agg(AggFunc::Count, "*"),
                    agg(AggFunc::Min, "amount"),
                    agg(AggFunc::Max, "qty"),
                ],
            ),
        )
        .unwrap();
        let y1999 = &table.rows[0];
        assert_eq!(y1999.values[0], AggValue::Int(10));
        assert_eq!(y1999.values[1], AggValue::Dec(Decimal::parse("2.000000").unwrap()));
        assert_eq!(y1999.values[2], AggValue::Count(1));
        assert_eq!(y1999.values[3], AggValue::Count(2));
        assert_eq!(y1999.values[4], AggValue::Dec(Decimal::parse("1.5").unwrap()));
        assert_eq!(y1999.values[5], AggValue::Int(10));
    }

    #[test]
    fn all_absent_measure_gives_absent_aggregate() {
        let store = store_from(&[("1.5", 1999, None, None, None)]);
        let table = evaluate(
            &store,
            &query(vec![], vec![], vec![agg(AggFunc::Sum, "qty"), agg(AggFunc::Count, "qty")]),
        )
        .unwrap();
        assert_eq!(table.rows[0].values[0], AggValue::Absent);
        assert_eq!(table.rows[0].values[1], AggValue::Count(0));
    }

    #[test]
    fn typed_comparisons() {
        let store = store_from(&[
            ("1", 999, None, None, None),
            ("2", 1000, None, None, None),
            ("4", 1001, None, None, None),
        ]);
        // Numeric comparison, not lexicographic: "999" > "1000" as strings.
        let table = evaluate(
            &store,
            &query(
                vec![("Time.year", Cmp::Le, "1000")],
                vec![],
                vec![agg(AggFunc::Count, "*")],
            ),
        )
        .unwrap();
        assert_eq!(table.rows[0].values[0], AggValue::Count(2));
    }

    #[test]
    fn query_errors() {
        let store = store_from(&[("1", 1999, Some("dry"), None, None)]);
        let unknown_attr = query(vec![], vec!["Time.bogus"], vec![agg(AggFunc::Count, "*")]);
        assert!(matches!(
            evaluate(&store, &unknown_attr),
            Err(QueryError::UnknownAttribute(_))
        ));
        let unknown_measure = query(vec![], vec![], vec![agg(AggFunc::Sum, "bogus")]);
        assert!(matches!(
            evaluate(&store, &unknown_measure),
            Err(QueryError::UnknownMeasure(_))
        ));
        let ordered_string = query(
            vec![("Time.season", Cmp::Lt, "wet")],
            vec![],
            vec![agg(AggFunc::Count, "*")],
        );
        assert!(matches!(
            evaluate(&store, &ordered_string),
            Err(QueryError::TypeMismatch(_))
        ));
        let bad_literal = query(
            vec![("Time.year", Cmp::Eq, "abc")],
            vec![],
            vec![agg(AggFunc::Count, "*")],
        );
        assert!(matches!(
            evaluate(&store, &bad_literal),
            Err(QueryError::TypeMismatch(_))
        ));
        let no_aggregates = query(vec![], vec![], vec![]);
        assert!(matches!(
            evaluate(&store, &no_aggregates),
            Err(QueryError::Malformed(_))
        ));
        let star_sum = query(vec![], vec![], vec![agg(AggFunc::Sum, "*")]);
        assert!(matches!(
            evaluate(&store, &star_sum),
            Err(QueryError::Malformed(_))
        ));
    }

    // --- brute-force oracle -------------------------------------------------

    /// Fully materialized joined row: attribute values plus measures.
    struct JoinedRow {
        attrs: BTreeMap<String, String>,
        measures: BTreeMap<String, MeasureValue>,
    }

    /// Independent evaluator: materialize the whole join, then filter, group
    /// into a vector and aggregate from collected value lists.
    fn brute_force(store: &XCubeStore, q: &AnalyticalQuery) -> ResultTable {
        let member_of = |dim: &str, node: &str| -> &DimensionMember {
            store
                .members
                .iter()
                .find(|m| m.dimension == dim && m.node.as_str() == node)
                .expect("referential integrity")
        };
        let joined: Vec<JoinedRow> = store
            .cells
            .iter()
            .map(|cell| {
                let mut attrs = BTreeMap::new();
                for (dim, node) in &cell.coordinates {
                    for (name, value) in &member_of(dim, node.as_str()).attributes {
                        attrs.insert(format!("{dim}.{name}"), value.clone());
                    }
                }
                JoinedRow {
                    attrs,
                    measures: cell
                        .measures
                        .iter()
                        .map(|(n, v)| (n.clone(), v.clone()))
                        .collect(),
                }
            })
            .collect();

        let matches = |row: &JoinedRow, p: &Predicate| -> bool {
            let Some(value) = row.attrs.get(&p.attr.to_string()) else {
                return false;
            };
            let ty = store
                .dimension_def(&p.attr.dimension)
                .unwrap()
                .attribute_type(&p.attr.attribute)
                .unwrap();
            let ord = match ty {
                AttrType::String => value.as_str().cmp(p.literal.as_str()),
                AttrType::Integer => value.parse::<i64>().unwrap().cmp(&p.literal.parse().unwrap()),
                AttrType::Decimal => Decimal::parse(value)
                    .unwrap()
                    .cmp_numeric(&Decimal::parse(&p.literal).unwrap()),
            };
            p.cmp.holds(ord)
        };

        let mut groups: Vec<(Vec<String>, Vec<&JoinedRow>)> = Vec::new();
        'rows: for row in &joined {
            for p in &q.selections {
                if !matches(row, p) {
                    continue 'rows;
                }
            }
            let mut key = Vec::new();
            for attr in &q.group_by {
                match row.attrs.get(&attr.to_string()) {
                    Some(v) => key.push(v.clone()),
                    None => continue 'rows,
                }
            }
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, rows)) => rows.push(row),
                None => groups.push((key, vec![row])),
            }
        }
        groups.sort_by(|(a, _), (b, _)| a.cmp(b));

        let rows = groups
            .into_iter()
            .map(|(key, members)| {
                let values = q
                    .aggregates
                    .iter()
                    .map(|spec| {
                        if spec.measure == "*" {
                            return AggValue::Count(members.len() as u64);
                        }
                        let present: Vec<&MeasureValue> = members
                            .iter()
                            .filter_map(|r| r.measures.get(&spec.measure))
                            .collect();
                        if spec.func == AggFunc::Count {
                            return AggValue::Count(present.len() as u64);
                        }
                        if present.is_empty() {
                            return AggValue::Absent;
                        }
                        let ty = store.measure_def(&spec.measure).unwrap().ty;
                        match spec.func {
                            AggFunc::Sum => sum_values(&present, ty),
                            AggFunc::Avg => {
                                let sum = match sum_values(&present, ty) {
                                    AggValue::Int(i) => Decimal::new(i, 0).unwrap(),
                                    AggValue::Dec(d) => d,
                                    _ => unreachable!(),
                                };
                                AggValue::Dec(
                                    sum.div_count_half_even(present.len() as u64).unwrap(),
                                )
                            }
                            AggFunc::Min | AggFunc::Max => {
                                let mut sorted = present.clone();
                                sorted.sort_by(|a, b| cmp_total(a, b));
                                let pick = if spec.func == AggFunc::Min {
                                    sorted.first()
                                } else {
                                    sorted.last()
                                };
                                match pick.unwrap() {
                                    MeasureValue::Int(i) => AggValue::Int(*i as i128),
                                    MeasureValue::Dec(d) => AggValue::Dec(*d),
                                }
                            }
                            AggFunc::Count => unreachable!(),
                        }
                    })
                    .collect();
                ResultRow { key, values }
            })
            .collect();
        ResultTable {
            header: q
                .group_by
                .iter()
                .map(AttrRef::to_string)
                .chain(q.aggregates.iter().map(|a| a.column_name()))
                .collect(),
            rows,
        }
    }

    fn sum_values(values: &[&MeasureValue], ty: MeasureType) -> AggValue {
        match ty {
            MeasureType::Integer => AggValue::Int(
                values
                    .iter()
                    .map(|v| match v {
                        MeasureValue::Int(i) => *i as i128,
                        MeasureValue::Dec(_) => unreachable!(),
                    })
                    .sum(),
            ),
            MeasureType::Decimal => {
                let mut sum: Option<Decimal> = None;
                for v in values {
                    if let MeasureValue::Dec(d) = v {
                        sum = Some(match sum {
                            None => *d,
                            Some(s) => s.checked_add(*d).unwrap(),
                        });
                    }
                }
                AggValue::Dec(sum.unwrap())
            }
        }
    }

    #[test]
    fn matches_brute_force_on_random_suites() {
        let mut rng = XorShift(0x5eed_cafe);
        let store = random_store(&mut rng, 200);
        for _ in 0..120 {
            let q = random_query(&mut rng);
            let direct = evaluate(&store, &q).unwrap();
            let oracle = brute_force(&store, &q);
            assert_eq!(direct, oracle, "query diverged: {:?}", q);
        }
    }

    #[test]
    fn count_total_is_sum_of_group_counts() {
        let mut rng = XorShift(0xfeed);
        let store = random_store(&mut rng, 150);
        let grouped = evaluate(
            &store,
            &query(vec![], vec!["Time.year"], vec![agg(AggFunc::Count, "*")]),
        )
        .unwrap();
        let total = evaluate(&store, &query(vec![], vec![], vec![agg(AggFunc::Count, "*")])).unwrap();
        let group_sum: u64 = grouped
            .rows
            .iter()
            .map(|r| match r.values[0] {
                AggValue::Count(c) => c,
                _ => 0,
            })
            .sum();
        match total.rows[0].values[0] {
            AggValue::Count(c) => assert_eq!(c, group_sum),
            _ => panic!("COUNT(*) must yield a count"),
        }
    }

    // --- hierarchy rewrites --------------------------------------------------

    fn hierarchy_store() -> XCubeStore {
        crate::testsupport::hierarchy_store(0xda7e5, 90)
    }

    #[test]
    fn rollup_moves_one_level_coarser() {
        let store = hierarchy_store();
        let h = store.hierarchies[0].clone();
        let day_query = query(vec![], vec!["Day.date"], vec![agg(AggFunc::Sum, "amount")]);
        let rolled = rollup(&store, &day_query, &h).unwrap();
        assert!(!rolled.at_boundary);
        assert_eq!(rolled.query.group_by, vec![AttrRef::parse("Month.month").unwrap()]);

        let drilled = drilldown(&store, &rolled.query, &h).unwrap();
        assert!(!drilled.at_boundary);
        assert_eq!(drilled.query, day_query);
    }

    #[test]
    fn mid_level_round_trip_restores_the_query() {
        let store = hierarchy_store();
        let h = store.hierarchies[0].clone();
        let mid = query(vec![], vec!["Month.month"], vec![agg(AggFunc::Sum, "amount")]);
        let rolled = rollup(&store, &mid, &h).unwrap();
        assert_eq!(rolled.query.group_by, vec![AttrRef::parse("Year.year").unwrap()]);
        let back = drilldown(&store, &rolled.query, &h).unwrap();
        assert!(!back.at_boundary);
        assert_eq!(back.query, mid);
    }

    #[test]
    fn boundaries_return_the_query_unchanged() {
        let store = hierarchy_store();
        let h = store.hierarchies[0].clone();
        let coarsest = query(vec![], vec!["Year.year"], vec![agg(AggFunc::Sum, "amount")]);
        let rolled = rollup(&store, &coarsest, &h).unwrap();
        assert!(rolled.at_boundary);
        assert_eq!(rolled.query, coarsest);

        let finest = query(vec![], vec!["Day.date"], vec![agg(AggFunc::Sum, "amount")]);
        let drilled = drilldown(&store, &finest, &h).unwrap();
        assert!(drilled.at_boundary);
        assert_eq!(drilled.query, finest);
    }

    #[test]
    fn hierarchy_mismatch_is_reported() {
        let store = hierarchy_store();
        let h = store.hierarchies[0].clone();
        let q = query(vec![], vec![], vec![agg(AggFunc::Sum, "amount")]);
        assert!(matches!(
            rollup(&store, &q, &h),
            Err(QueryError::HierarchyMismatch(_))
        ));
    }

    #[test]
    fn sums_are_additive_along_the_hierarchy() {
        let store = hierarchy_store();
        let h = store.hierarchies[0].clone();
        let day_query = query(vec![], vec!["Day.date", "Month.month"], vec![agg(AggFunc::Sum, "amount")]);
        let fine = evaluate(&store, &day_query).unwrap();
        let rolled = rollup(&store, &day_query, &h).unwrap().query;
        assert_eq!(rolled.group_by, vec![AttrRef::parse("Month.month").unwrap()]);
        let coarse = evaluate(&store, &rolled).unwrap();

        // Sum the fine rows by their month key (position 1).
        let mut sums: BTreeMap<String, i128> = BTreeMap::new();
        for row in &fine.rows {
            if let AggValue::Int(v) = row.values[0] {
                *sums.entry(row.key[1].clone()).or_insert(0) += v;
            }
        }
        for row in &coarse.rows {
            assert_eq!(AggValue::Int(sums[&row.key[0]]), row.values[0]);
        }
        assert_eq!(coarse.rows.len(), sums.len());
    }

    #[test]
    fn query_xml_round_trip() {
        let q = query(
            vec![("Time.year", Cmp::Ge, "1999"), ("Product.sku", Cmp::Ne, "p1")],
            vec!["Time.year", "Product.sku"],
            vec![agg(AggFunc::Sum, "amount"), agg(AggFunc::Count, "*")],
        );
        let doc = q.to_xml();
        let back = AnalyticalQuery::from_xml(&doc).unwrap();
        assert_eq!(back, q);
    }

    #[test]
    fn query_xml_errors() {
        for text in [
            "<notquery/>",
            "<query><select attribute=\"Time.year\" op=\"??\" value=\"1\"/></query>",
            "<query><select attribute=\"noDot\" op=\"eq\" value=\"1\"/></query>",
            "<query><aggregate function=\"MEAN\" measure=\"m\"/></query>",
            "<query><widget/></query>",
        ] {
            let doc = xml::parse(text).unwrap();
            assert!(AnalyticalQuery::from_xml(&doc).is_err(), "accepted {text}");
        }
    }

    #[test]
    fn result_table_xml_layout() {
        let store = store_from(&[("1.5", 1999, None, None, None)]);
        let q = query(
            vec![],
            vec!["Time.year"],
            vec![agg(AggFunc::Sum, "amount"), agg(AggFunc::Sum, "qty")],
        );
        let table = evaluate(&store, &q).unwrap();
        let doc = table.to_xml(1);
        let row = doc.children_named("row").next().unwrap();
        assert_eq!(row.children[0].attr("value"), Some("1999"));
        assert_eq!(row.children[1].attr("value"), Some("1.5"));
        // Absent aggregate: no value attribute.
        assert_eq!(row.children[2].attr("value"), None);
    }
}

