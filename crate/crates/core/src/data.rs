//! LIBSVM text ingestion and partitioning of a dataset into equally sized
//! batch components.
//!
//! ```text
//! 1 1:0.5 3:2.0
//! -1 2:1     # trailing comments are ignored
//! ```
//!
//! Feature indices are 1-based in the file and stored 1-based in
//! [`SparseRow`]; the CSR storage of [`ComponentSet`] is 0-based.

use crate::shuffle::SeededRng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot map labels {labels:?} to {{-1, +1}}")]
    Labels { labels: Vec<f64> },
    #[error("dimension override {requested} is smaller than the largest feature index {observed}")]
    Dimension { requested: usize, observed: usize },
    #[error("invalid batch size {batch_size} for {samples} samples")]
    BatchSize { batch_size: usize, samples: usize },
}

/// One labelled sparse example.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseRow {
    /// Strictly increasing, 1-based.
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
    /// Always -1 or +1.
    pub label: f64,
}

impl SparseRow {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub rows: Vec<SparseRow>,
    pub dimension: usize,
}

impl Dataset {
    pub fn num_samples(&self) -> usize {
        self.rows.len()
    }

    pub fn max_index(&self) -> usize {
        self.rows
            .iter()
            .filter_map(|r| r.indices.last())
            .copied()
            .max()
            .unwrap_or(0) as usize
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(SparseRow::nnz).sum()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Force the dataset dimension (must be at least the largest index seen).
    pub dimension: Option<usize>,
}

fn parse_err(line: usize, message: impl Into<String>) -> DataError {
    DataError::Parse {
        line,
        message: message.into(),
    }
}

/// Parses a LIBSVM stream in one pass.
///
/// Raw labels are normalised once the whole stream is read: `{-1, +1}` pass
/// through, `{0, 1}` maps 0 to -1, `{1, 2}` maps 2 to -1. Anything else is an
/// error.
pub fn parse_libsvm<R: BufRead>(reader: R, opts: ParseOptions) -> Result<Dataset, DataError> {
    let mut rows = Vec::new();
    let mut raw_labels: Vec<f64> = Vec::new();
    let mut max_index = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        let mut tokens = content.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let label: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(lineno, format!("invalid label `{label_tok}`")))?;
        if !label.is_finite() {
            return Err(parse_err(lineno, format!("non-finite label `{label_tok}`")));
        }
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for tok in tokens {
            let (idx_s, val_s) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected `index:value`, found `{tok}`")))?;
            let idx: u32 = idx_s
                .parse()
                .map_err(|_| parse_err(lineno, format!("invalid feature index `{idx_s}`")))?;
            if idx == 0 {
                return Err(parse_err(lineno, "feature indices are 1-based; found 0"));
            }
            let val: f64 = val_s
                .parse()
                .map_err(|_| parse_err(lineno, format!("invalid feature value `{val_s}`")))?;
            if !val.is_finite() {
                return Err(parse_err(lineno, format!("non-finite feature value `{val_s}`")));
            }
            if let Some(&last) = indices.last() {
                if idx <= last {
                    return Err(parse_err(
                        lineno,
                        format!("feature indices must be strictly increasing ({last} then {idx})"),
                    ));
                }
            }
            indices.push(idx);
            values.push(val);
        }
        if let Some(&last) = indices.last() {
            max_index = max_index.max(last as usize);
        }
        if !raw_labels.contains(&label) {
            raw_labels.push(label);
        }
        rows.push(SparseRow { indices, values, label });
    }

    let map = label_map(&raw_labels)?;
    for row in &mut rows {
        row.label = map(row.label);
    }

    let dimension = match opts.dimension {
        Some(d) if d < max_index => {
            return Err(DataError::Dimension {
                requested: d,
                observed: max_index,
            })
        }
        Some(d) => d,
        None => max_index,
    };
    Ok(Dataset { rows, dimension })
}

fn label_map(raw: &[f64]) -> Result<fn(f64) -> f64, DataError> {
    let within = |set: &[f64]| raw.iter().all(|l| set.contains(l));
    if raw.len() > 2 {
        let mut labels = raw.to_vec();
        labels.sort_by(f64::total_cmp);
        return Err(DataError::Labels { labels });
    }
    if within(&[-1.0, 1.0]) {
        Ok(|l| l)
    } else if within(&[0.0, 1.0]) {
        Ok(|l| if l == 0.0 { -1.0 } else { 1.0 })
    } else if within(&[1.0, 2.0]) {
        Ok(|l| if l == 2.0 { -1.0 } else { 1.0 })
    } else {
        let mut labels = raw.to_vec();
        labels.sort_by(f64::total_cmp);
        Err(DataError::Labels { labels })
    }
}

pub fn parse_libsvm_str(text: &str, opts: ParseOptions) -> Result<Dataset, DataError> {
    parse_libsvm(text.as_bytes(), opts)
}

pub fn read_libsvm_file(path: &Path, opts: ParseOptions) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path)?;
    parse_libsvm(std::io::BufReader::new(file), opts)
}

/// Renders rows one per line; floats use the shortest representation that
/// parses back to the same bits.
pub fn serialize_libsvm(dataset: &Dataset) -> String {
    let mut out = String::new();
    for row in &dataset.rows {
        let _ = write!(out, "{}", row.label);
        for (i, v) in row.indices.iter().zip(&row.values) {
            let _ = write!(out, " {i}:{v}");
        }
        out.push('\n');
    }
    out
}

/// Compressed sparse rows with 0-based column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub indptr: Vec<usize>,
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
    pub cols: usize,
}

impl CsrMatrix {
    pub fn rows(&self) -> usize {
        self.indptr.len() - 1
    }

    #[inline]
    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    #[inline]
    pub fn row_dot(&self, r: usize, w: &[f64]) -> f64 {
        let (idx, val) = self.row(r);
        idx.iter().zip(val).map(|(&j, v)| v * w[j as usize]).sum()
    }

    /// `out += alpha * x_r`
    #[inline]
    pub fn row_axpy(&self, r: usize, alpha: f64, out: &mut [f64]) {
        let (idx, val) = self.row(r);
        for (&j, v) in idx.iter().zip(val) {
            out[j as usize] += alpha * v;
        }
    }
}

/// A view of one batch component: `batch_size` consecutive rows.
#[derive(Clone, Copy, Debug)]
pub struct Component<'a> {
    set: &'a ComponentSet,
    first_row: usize,
}

impl<'a> Component<'a> {
    pub fn rows(&self) -> std::ops::Range<usize> {
        self.first_row..self.first_row + self.set.batch_size
    }

    pub fn matrix(&self) -> &'a CsrMatrix {
        &self.set.matrix
    }

    pub fn labels(&self) -> &'a [f64] {
        &self.set.labels[self.rows()]
    }
}

/// The `n = floor(N / b)` equally sized components of a dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentSet {
    matrix: CsrMatrix,
    labels: Vec<f64>,
    batch_size: usize,
    dropped: usize,
}

impl ComponentSet {
    pub fn len(&self) -> usize {
        self.labels.len() / self.batch_size
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn dimension(&self) -> usize {
        self.matrix.cols
    }

    /// Trailing rows that did not fill a whole batch.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn component(&self, i: usize) -> Component<'_> {
        assert!(i < self.len(), "component {i} out of range");
        Component {
            set: self,
            first_row: i * self.batch_size,
        }
    }
}

/// Splits `dataset` into consecutive batches of `batch_size` rows in file
/// order. The `N - n·b` trailing rows are dropped and reported via
/// [`ComponentSet::dropped`].
pub fn partition(dataset: &Dataset, batch_size: usize) -> Result<ComponentSet, DataError> {
    let samples = dataset.num_samples();
    if batch_size == 0 || batch_size > samples {
        return Err(DataError::BatchSize { batch_size, samples });
    }
    let n = samples / batch_size;
    let kept = n * batch_size;
    let mut indptr = Vec::with_capacity(kept + 1);
    let mut indices = Vec::new();
    let mut values = Vec::new();
    let mut labels = Vec::with_capacity(kept);
    indptr.push(0);
    for row in &dataset.rows[..kept] {
        indices.extend(row.indices.iter().map(|&i| i - 1));
        values.extend_from_slice(&row.values);
        indptr.push(indices.len());
        labels.push(row.label);
    }
    Ok(ComponentSet {
        matrix: CsrMatrix {
            indptr,
            indices,
            values,
            cols: dataset.dimension,
        },
        labels,
        batch_size,
        dropped: samples - kept,
    })
}

/// The three benchmark datasets with their published sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedDataset {
    Mushrooms,
    A9a,
    W8a,
}

impl NamedDataset {
    pub const ALL: [NamedDataset; 3] = [NamedDataset::Mushrooms, NamedDataset::A9a, NamedDataset::W8a];

    pub fn name(self) -> &'static str {
        match self {
            NamedDataset::Mushrooms => "mushrooms",
            NamedDataset::A9a => "a9a",
            NamedDataset::W8a => "w8a",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == name)
    }

    pub fn samples(self) -> usize {
        match self {
            NamedDataset::Mushrooms => 8124,
            NamedDataset::A9a => 32561,
            NamedDataset::W8a => 49749,
        }
    }

    pub fn dimension(self) -> usize {
        match self {
            NamedDataset::Mushrooms => 112,
            NamedDataset::A9a => 123,
            NamedDataset::W8a => 300,
        }
    }

    pub fn batch_size(self) -> usize {
        match self {
            NamedDataset::Mushrooms => 64,
            NamedDataset::A9a | NamedDataset::W8a => 256,
        }
    }

    pub fn url(self) -> String {
        format!(
            "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/{}",
            self.name()
        )
    }
}

/// Seeded generator for binary classification data in the same shape as the
/// LIBSVM benchmarks (sparse, mostly 0/1 features).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub samples: usize,
    pub dimension: usize,
    /// Expected fraction of nonzero features per row.
    pub density: f64,
    /// Probability of flipping the label of the planted separator.
    #[serde(default)]
    pub label_noise: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn generate(&self) -> Dataset {
        let mut rng = SeededRng::new(self.seed);
        let truth: Vec<f64> = (0..self.dimension).map(|_| rng.normal()).collect();
        let mut rows = Vec::with_capacity(self.samples);
        for _ in 0..self.samples {
            let mut indices = Vec::new();
            let mut values = Vec::new();
            for j in 0..self.dimension {
                if rng.next_f64() < self.density {
                    indices.push(j as u32 + 1);
                    values.push(1.0);
                }
            }
            let margin: f64 = indices.iter().map(|&j| truth[j as usize - 1]).sum();
            let mut label = if margin >= 0.0 { 1.0 } else { -1.0 };
            if rng.next_f64() < self.label_noise {
                label = -label;
            }
            rows.push(SparseRow { indices, values, label });
        }
        Dataset {
            rows,
            dimension: self.dimension,
        }
    }
}
