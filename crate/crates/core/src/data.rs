//! Entity-by-period count matrices: loading, smoothing and slicing.
//!
//! Rows are entities, columns are periods in order. Column and row indices in
//! this module are 0-based; the command-line front end converts from the
//! 1-based numbering users see.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// The fixture matrix that ships with the crate: 24 characters by 5 books.
pub const TABLE1_CSV: &str = include_str!("../data/table1.csv");

/// Observed integer counts.
///
/// Structurally any non-negative matrix is allowed, including zero rows (they
/// arise from simulation and slicing). Observed training data should not have
/// zero rows; see [`PovMatrix::ensure_no_zero_rows`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PovMatrix {
    entity_names: Vec<String>,
    period_labels: Vec<String>,
    counts: Vec<Vec<u32>>,
}

/// Real-valued counts, produced by [`PovMatrix::smooth`] or by lifting an
/// integer matrix with [`PovMatrix::to_real`].
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedMatrix {
    entity_names: Vec<String>,
    period_labels: Vec<String>,
    counts: Vec<Vec<f64>>,
}

/// Parse the CSV interchange format.
///
/// The first row holds a corner label followed by one label per period; each
/// following row holds an entity name followed by its counts. Quoted fields are
/// rejected, so names cannot contain commas.
pub fn load_matrix(source: &str) -> Result<PovMatrix> {
    let mut lines = source
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());

    let (header_row, header) = lines.next().ok_or(Error::Empty)?;
    let header_cells = split_cells(header, header_row)?;
    if header_cells.len() < 2 {
        return Err(Error::Shape(format!(
            "header has {} cells, need a name column and at least one period",
            header_cells.len()
        )));
    }
    let period_labels: Vec<String> = header_cells[1..].iter().map(|s| s.to_string()).collect();
    let width = header_cells.len();

    let mut entity_names = Vec::new();
    let mut counts = Vec::new();
    for (row, line) in lines {
        let cells = split_cells(line, row)?;
        if cells.len() != width {
            return Err(Error::Shape(format!(
                "row {row} has {} cells, header has {width}",
                cells.len()
            )));
        }
        let name = cells[0];
        if name.is_empty() {
            return Err(Error::Parse {
                row,
                col: 1,
                message: "empty entity name".into(),
            });
        }
        let values = cells[1..]
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                cell.parse::<u32>().map_err(|_| Error::Parse {
                    row,
                    col: j + 2,
                    message: format!("{cell:?} is not a non-negative integer"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        entity_names.push(name.to_string());
        counts.push(values);
    }
    if counts.is_empty() {
        return Err(Error::Empty);
    }
    PovMatrix::new(entity_names, period_labels, counts)
}

fn split_cells(line: &str, row: usize) -> Result<Vec<&str>> {
    if let Some(pos) = line.find('"') {
        return Err(Error::Parse {
            row,
            col: line[..pos].matches(',').count() + 1,
            message: "quoted fields are not supported".into(),
        });
    }
    Ok(line.split(',').map(str::trim).collect())
}

/// The bundled 24 x 5 fixture.
pub fn table1() -> PovMatrix {
    load_matrix(TABLE1_CSV).expect("bundled table1.csv is valid")
}

impl PovMatrix {
    pub fn new(
        entity_names: Vec<String>,
        period_labels: Vec<String>,
        counts: Vec<Vec<u32>>,
    ) -> Result<Self> {
        check_shape(&entity_names, &period_labels, &counts)?;
        Ok(Self {
            entity_names,
            period_labels,
            counts,
        })
    }

    pub fn entity_names(&self) -> &[String] {
        &self.entity_names
    }

    pub fn period_labels(&self) -> &[String] {
        &self.period_labels
    }

    pub fn counts(&self) -> &[Vec<u32>] {
        &self.counts
    }

    pub fn n_entities(&self) -> usize {
        self.counts.len()
    }

    pub fn n_periods(&self) -> usize {
        self.period_labels.len()
    }

    pub fn get(&self, entity: usize, period: usize) -> u32 {
        self.counts[entity][period]
    }

    /// Row position of the entity with this name.
    pub fn entity_index(&self, name: &str) -> Option<usize> {
        self.entity_names.iter().position(|n| n == name)
    }

    pub fn column_sum(&self, period: usize) -> u64 {
        self.counts.iter().map(|r| u64::from(r[period])).sum()
    }

    /// Indices of rows with no nonzero entry.
    pub fn zero_rows(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, r)| r.iter().all(|&c| c == 0))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn ensure_no_zero_rows(&self) -> Result<()> {
        match self.zero_rows().first() {
            None => Ok(()),
            Some(&i) => Err(Error::Degenerate(format!(
                "entity {:?} has no nonzero count",
                self.entity_names[i]
            ))),
        }
    }

    /// Copy without the zero rows. Fails with [`Error::Empty`] if nothing is left.
    pub fn without_zero_rows(&self) -> Result<PovMatrix> {
        let zero = self.zero_rows();
        let keep: Vec<usize> = (0..self.n_entities()).filter(|i| !zero.contains(i)).collect();
        if keep.is_empty() {
            return Err(Error::Empty);
        }
        self.submatrix(&keep, &(0..self.n_periods()).collect::<Vec<_>>())
    }

    /// Select rows and columns, keeping the order given.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<PovMatrix> {
        if let Some(&r) = rows.iter().find(|&&r| r >= self.n_entities()) {
            return Err(Error::Index(format!(
                "row {r} (0-based) out of range for {} entities",
                self.n_entities()
            )));
        }
        if let Some(&c) = cols.iter().find(|&&c| c >= self.n_periods()) {
            return Err(Error::Index(format!(
                "column {c} (0-based) out of range for {} periods",
                self.n_periods()
            )));
        }
        if rows.is_empty() || cols.is_empty() {
            return Err(Error::Empty);
        }
        PovMatrix::new(
            rows.iter().map(|&r| self.entity_names[r].clone()).collect(),
            cols.iter().map(|&c| self.period_labels[c].clone()).collect(),
            rows.iter()
                .map(|&r| cols.iter().map(|&c| self.counts[r][c]).collect())
                .collect(),
        )
    }

    /// Redistribute the combined counts of periods `j1` and `j2` in proportion
    /// to the weights `c1` and `c2`.
    pub fn smooth(&self, j1: usize, j2: usize, c1: f64, c2: f64) -> Result<SmoothedMatrix> {
        self.to_real().smooth(j1, j2, c1, c2)
    }

    /// [`PovMatrix::smooth`] with the weights set to the two column sums, which
    /// keeps both column totals unchanged.
    pub fn smooth_by_column_sums(&self, j1: usize, j2: usize) -> Result<SmoothedMatrix> {
        self.check_pair(j1, j2)?;
        let (c1, c2) = (self.column_sum(j1) as f64, self.column_sum(j2) as f64);
        self.smooth(j1, j2, c1, c2)
    }

    fn check_pair(&self, j1: usize, j2: usize) -> Result<()> {
        check_pair(self.n_periods(), j1, j2)
    }

    pub fn to_real(&self) -> SmoothedMatrix {
        SmoothedMatrix {
            entity_names: self.entity_names.clone(),
            period_labels: self.period_labels.clone(),
            counts: self
                .counts
                .iter()
                .map(|r| r.iter().map(|&c| f64::from(c)).collect())
                .collect(),
        }
    }

    /// Total count, per period, contributed by entities whose first nonzero
    /// entry falls in that period. Entry `k` is period `k + 2` (1-based), i.e.
    /// the first period is skipped because every entity is new there.
    pub fn new_entity_counts(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.n_periods().saturating_sub(1)];
        for row in &self.counts {
            if let Some(first) = row.iter().position(|&c| c > 0) {
                if first >= 1 {
                    out[first - 1] += u64::from(row[first]);
                }
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("entity");
        for label in &self.period_labels {
            s.push(',');
            s.push_str(label);
        }
        s.push('\n');
        for (name, row) in self.entity_names.iter().zip(&self.counts) {
            s.push_str(name);
            for c in row {
                let _ = write!(s, ",{c}");
            }
            s.push('\n');
        }
        s
    }
}

impl From<&PovMatrix> for SmoothedMatrix {
    fn from(m: &PovMatrix) -> Self {
        m.to_real()
    }
}

impl SmoothedMatrix {
    pub fn new(
        entity_names: Vec<String>,
        period_labels: Vec<String>,
        counts: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_shape(&entity_names, &period_labels, &counts)?;
        if counts.iter().flatten().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Domain("counts must be finite and non-negative".into()));
        }
        Ok(Self {
            entity_names,
            period_labels,
            counts,
        })
    }

    pub fn entity_names(&self) -> &[String] {
        &self.entity_names
    }

    pub fn period_labels(&self) -> &[String] {
        &self.period_labels
    }

    pub fn counts(&self) -> &[Vec<f64>] {
        &self.counts
    }

    pub fn row(&self, entity: usize) -> &[f64] {
        &self.counts[entity]
    }

    pub fn n_entities(&self) -> usize {
        self.counts.len()
    }

    pub fn n_periods(&self) -> usize {
        self.period_labels.len()
    }

    pub fn column_sum(&self, period: usize) -> f64 {
        self.counts.iter().map(|r| r[period]).sum()
    }

    /// Replace columns `j1`, `j2` by `c1 * s / (c1 + c2)` and `c2 * s / (c1 + c2)`
    /// where `s` is the row's combined count over the pair.
    ///
    /// The larger share is computed from the formula and the smaller one as the
    /// remainder; that subtraction is exact (Sterbenz), so the pair sum of every
    /// row is preserved bit-for-bit and re-smoothing is a no-op.
    pub fn smooth(&self, j1: usize, j2: usize, c1: f64, c2: f64) -> Result<SmoothedMatrix> {
        check_pair(self.n_periods(), j1, j2)?;
        if !(c1 > 0.0 && c2 > 0.0 && c1.is_finite() && c2.is_finite()) {
            return Err(Error::Domain(format!(
                "smoothing weights must be positive, got ({c1}, {c2})"
            )));
        }
        let total_weight = c1 + c2;
        let mut out = self.clone();
        for row in &mut out.counts {
            let s = row[j1] + row[j2];
            // The larger share is at least s/2; clamping only undoes rounding.
            let larger = |c: f64| (c * s / total_weight).max(0.5 * s);
            let (a, b) = if c1 >= c2 {
                let a = larger(c1);
                (a, s - a)
            } else {
                let b = larger(c2);
                (s - b, b)
            };
            row[j1] = a;
            row[j2] = b;
        }
        Ok(out)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("entity");
        for label in &self.period_labels {
            s.push(',');
            s.push_str(label);
        }
        s.push('\n');
        for (name, row) in self.entity_names.iter().zip(&self.counts) {
            s.push_str(name);
            for c in row {
                let _ = write!(s, ",{c}");
            }
            s.push('\n');
        }
        s
    }
}

fn check_pair(n_periods: usize, j1: usize, j2: usize) -> Result<()> {
    if j1 >= n_periods || j2 >= n_periods {
        return Err(Error::Index(format!(
            "smoothing pair ({j1}, {j2}) (0-based) out of range for {n_periods} periods"
        )));
    }
    if j1 == j2 {
        return Err(Error::Index(format!("smoothing pair uses column {j1} twice")));
    }
    Ok(())
}

fn check_shape<T>(names: &[String], labels: &[String], counts: &[Vec<T>]) -> Result<()> {
    if counts.is_empty() {
        return Err(Error::Empty);
    }
    if labels.is_empty() {
        return Err(Error::Shape("no periods".into()));
    }
    if names.len() != counts.len() {
        return Err(Error::Shape(format!(
            "{} names for {} rows",
            names.len(),
            counts.len()
        )));
    }
    if let Some((i, r)) = counts.iter().enumerate().find(|(_, r)| r.len() != labels.len()) {
        return Err(Error::Shape(format!(
            "row {i} has {} entries, expected {}",
            r.len(),
            labels.len()
        )));
    }
    if names.iter().any(|n| n.contains(',') || n.contains('"') || n.contains('\n')) {
        return Err(Error::Shape("entity names may not contain commas, quotes or newlines".into()));
    }
    Ok(())
}
