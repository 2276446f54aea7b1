//! Categorical data model: schema, records, sparse contingency tables.
//!
//! Attribute order is the hierarchy order: level `k` of the query tree groups
//! records by their first `k` attribute values.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::Read;

use crate::{Error, Result};

/// Index tuple of category positions. Full-length tuples identify cells of
/// the contingency table, shorter ones identify prefix marginals.
pub type Tuple = Vec<u32>;

/// Sparse map from a length-`k` prefix to its count. Zero counts are absent.
pub type LevelMap = BTreeMap<Tuple, u64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    name: String,
    categories: Vec<String>,
}

impl Attribute {
    pub fn new(name: impl Into<String>, categories: Vec<String>) -> Self {
        Self {
            name: name.into(),
            categories,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn size(&self) -> usize {
        self.categories.len()
    }
}

/// Ordered list of categorical attribute domains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    attributes: Vec<Attribute>,
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::InvalidSchema(
                "at least one attribute is required".into(),
            ));
        }
        let mut names = HashSet::new();
        for attr in &attributes {
            if !names.insert(attr.name.as_str()) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate attribute name `{}`",
                    attr.name
                )));
            }
            if attr.categories.len() < 2 {
                return Err(Error::SingleCategory {
                    attribute: attr.name.clone(),
                });
            }
            if u32::try_from(attr.categories.len()).is_err() {
                return Err(Error::InvalidSchema(format!(
                    "attribute `{}` has too many categories",
                    attr.name
                )));
            }
            let mut labels = HashSet::new();
            for label in &attr.categories {
                if !labels.insert(label.as_str()) {
                    return Err(Error::InvalidSchema(format!(
                        "duplicate category `{label}` in attribute `{}`",
                        attr.name
                    )));
                }
            }
        }
        Ok(Self { attributes })
    }

    /// Builds a schema with generated names (`a0`, `a1`, ...) and categories
    /// (`0`, `1`, ...) for the given domain sizes.
    pub fn with_domain_sizes(sizes: &[usize]) -> Result<Self> {
        let attributes = sizes
            .iter()
            .enumerate()
            .map(|(i, &size)| {
                Attribute::new(format!("a{i}"), (0..size).map(|c| c.to_string()).collect())
            })
            .collect();
        Self::new(attributes)
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    /// Number of attributes, which is also the depth of the query tree.
    pub fn depth(&self) -> usize {
        self.attributes.len()
    }

    pub fn domain_sizes(&self) -> Vec<usize> {
        self.attributes.iter().map(Attribute::size).collect()
    }

    /// Size of the full universe, or `None` on overflow.
    pub fn universe_size(&self) -> Option<u128> {
        self.attributes
            .iter()
            .try_fold(1u128, |acc, a| acc.checked_mul(a.size() as u128))
    }

    fn check_tuple(&self, tuple: &[u32]) -> Result<()> {
        if tuple.len() != self.depth() {
            return Err(Error::InvalidRecord(format!(
                "expected {} values, found {}",
                self.depth(),
                tuple.len()
            )));
        }
        for (value, attr) in tuple.iter().zip(&self.attributes) {
            if *value as usize >= attr.size() {
                return Err(Error::InvalidRecord(format!(
                    "index {value} out of range for attribute `{}` with {} categories",
                    attr.name,
                    attr.size()
                )));
            }
        }
        Ok(())
    }

    fn labels<'a>(&'a self, tuple: &'a [u32]) -> impl Iterator<Item = &'a str> + 'a {
        tuple
            .iter()
            .zip(&self.attributes)
            .map(|(&v, a)| a.categories[v as usize].as_str())
    }
}

/// A multiset of encoded records over a schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    schema: Schema,
    records: Vec<Tuple>,
}

impl Dataset {
    pub fn new(schema: Schema, records: Vec<Tuple>) -> Result<Self> {
        for record in &records {
            schema.check_tuple(record)?;
        }
        Ok(Self { schema, records })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn records(&self) -> &[Tuple] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Writes the records as CSV with a header row of attribute names.
    pub fn to_csv(&self) -> String {
        let mut out = header_line(&self.schema, false);
        for record in &self.records {
            push_labels(&mut out, &self.schema, record);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    /// Attribute order to use instead of the header order. Must name every
    /// header column exactly once.
    pub columns: Option<Vec<String>>,
}

/// Reads a headered, comma-separated categorical dataset.
///
/// Quoting is not supported: a field containing `"` is rejected. Categories
/// are the distinct values of each column sorted lexicographically. Row
/// numbers in errors are 1-based line numbers, the header being row 1.
pub fn ingest_csv<R: Read>(mut source: R, options: &IngestOptions) -> Result<Dataset> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| {
        let row = bytes[..e.valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count()
            + 1;
        Error::Parse {
            row,
            message: "input is not valid UTF-8".into(),
        }
    })?;
    parse_csv(text, options)
}

fn parse_csv(text: &str, options: &IngestOptions) -> Result<Dataset> {
    let mut all: Vec<&str> = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();
    // A trailing newline leaves one empty final element.
    if all.len() > 1 && all.last() == Some(&"") {
        all.pop();
    }
    let header_line = all.first().copied().unwrap_or("");
    if header_line.is_empty() {
        return Err(Error::Parse {
            row: 1,
            message: "missing header".into(),
        });
    }
    let header = split_fields(header_line, 1)?;
    let d = header.len();
    let mut seen = HashSet::new();
    for name in &header {
        if !seen.insert(*name) {
            return Err(Error::Parse {
                row: 1,
                message: format!("duplicate column `{name}`"),
            });
        }
    }

    let mut rows: Vec<Vec<&str>> = Vec::with_capacity(all.len().saturating_sub(1));
    for (i, line) in all.iter().enumerate().skip(1) {
        let row = i + 1;
        if line.is_empty() {
            return Err(Error::Parse {
                row,
                message: "empty row".into(),
            });
        }
        let fields = split_fields(line, row)?;
        if fields.len() != d {
            return Err(Error::Parse {
                row,
                message: format!("expected {d} fields, found {}", fields.len()),
            });
        }
        rows.push(fields);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let order: Vec<usize> = match &options.columns {
        None => (0..d).collect(),
        Some(columns) => column_permutation(&header, columns)?,
    };

    let mut attributes = Vec::with_capacity(d);
    let mut lookups: Vec<HashMap<&str, u32>> = Vec::with_capacity(d);
    for &col in &order {
        let mut values: Vec<&str> = rows.iter().map(|r| r[col]).collect();
        values.sort_unstable();
        values.dedup();
        if values.len() < 2 {
            return Err(Error::SingleCategory {
                attribute: header[col].to_string(),
            });
        }
        lookups.push(
            values
                .iter()
                .enumerate()
                .map(|(i, v)| (*v, i as u32))
                .collect(),
        );
        attributes.push(Attribute::new(
            header[col],
            values.into_iter().map(str::to_string).collect(),
        ));
    }
    let schema = Schema::new(attributes)?;
    let records = rows
        .iter()
        .map(|r| {
            order
                .iter()
                .zip(&lookups)
                .map(|(&col, lookup)| lookup[r[col]])
                .collect()
        })
        .collect();
    Ok(Dataset { schema, records })
}

fn split_fields(line: &str, row: usize) -> Result<Vec<&str>> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.iter().any(|f| f.contains('"')) {
        return Err(Error::Parse {
            row,
            message: "quoted fields are not supported; values must not contain commas or quotes"
                .into(),
        });
    }
    Ok(fields)
}

fn column_permutation(header: &[&str], columns: &[String]) -> Result<Vec<usize>> {
    if columns.len() != header.len() {
        return Err(Error::InvalidParameter(format!(
            "column order lists {} columns but the input has {}",
            columns.len(),
            header.len()
        )));
    }
    let mut order = Vec::with_capacity(columns.len());
    for name in columns {
        let idx = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown column `{name}`")))?;
        if order.contains(&idx) {
            return Err(Error::InvalidParameter(format!(
                "column `{name}` listed twice"
            )));
        }
        order.push(idx);
    }
    Ok(order)
}

/// Sparse histogram of a dataset over the full universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    schema: Schema,
    counts: LevelMap,
    total: u64,
}

impl ContingencyTable {
    /// Builds a table from explicit cell counts. Zero counts are dropped.
    pub fn from_counts(schema: Schema, counts: LevelMap) -> Result<Self> {
        let mut total = 0u64;
        for tuple in counts.keys() {
            schema.check_tuple(tuple)?;
        }
        let counts: LevelMap = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        for c in counts.values() {
            total = total
                .checked_add(*c)
                .ok_or_else(|| Error::InvalidRecord("total count overflows".into()))?;
        }
        Ok(Self {
            schema,
            counts,
            total,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn counts(&self) -> &LevelMap {
        &self.counts
    }

    /// Count of a single cell; absent cells are zero.
    pub fn get(&self, tuple: &[u32]) -> u64 {
        self.counts.get(tuple).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Exact answers to all `k`-level hierarchical queries with nonzero count.
    /// Level 0 is the single empty prefix mapped to the total.
    pub fn prefix_counts(&self, k: usize) -> Result<LevelMap> {
        let depth = self.schema.depth();
        if k > depth {
            return Err(Error::LevelOutOfRange { k, depth });
        }
        if k == depth {
            return Ok(self.counts.clone());
        }
        let mut level = LevelMap::new();
        if k == 0 {
            level.insert(Vec::new(), self.total);
            return Ok(level);
        }
        for (tuple, &count) in &self.counts {
            *level.entry(tuple[..k].to_vec()).or_insert(0) += count;
        }
        Ok(level)
    }

    /// Expands the table back into records in lexicographic tuple order.
    pub fn materialize_records(&self) -> Dataset {
        let mut records = Vec::with_capacity(self.total as usize);
        for (tuple, &count) in &self.counts {
            records.extend(std::iter::repeat_n(tuple.clone(), count as usize));
        }
        Dataset {
            schema: self.schema.clone(),
            records,
        }
    }

    /// CSV with one row per nonzero cell and a trailing `count` column.
    pub fn to_table_csv(&self) -> String {
        let mut out = header_line(&self.schema, true);
        for (tuple, count) in &self.counts {
            push_labels(&mut out, &self.schema, tuple);
            let _ = writeln!(out, ",{count}");
        }
        out
    }
}

/// Histogram of a dataset.
pub fn contingency(dataset: &Dataset) -> ContingencyTable {
    let mut counts = LevelMap::new();
    for record in &dataset.records {
        *counts.entry(record.clone()).or_insert(0) += 1;
    }
    ContingencyTable {
        schema: dataset.schema.clone(),
        counts,
        total: dataset.records.len() as u64,
    }
}

fn header_line(schema: &Schema, with_count: bool) -> String {
    let mut out = schema
        .attributes
        .iter()
        .map(Attribute::name)
        .collect::<Vec<_>>()
        .join(",");
    if with_count {
        out.push_str(",count");
    }
    out.push('\n');
    out
}

fn push_labels(out: &mut String, schema: &Schema, tuple: &[u32]) {
    for (i, label) in schema.labels(tuple).enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(label);
    }
}
