//! Patterns, class labels, CSV ingestion, column transforms and per-class
//! evaluation.

use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{decide, forward_into, ForwardTrace};
use crate::topology::Topology;

#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub features: Vec<f64>,
    /// 1-based class, absent for patterns that are only classified.
    pub label: Option<usize>,
    pub tag: Option<String>,
}

impl Pattern {
    pub fn labeled(features: Vec<f64>, label: usize) -> Self {
        Self {
            features,
            label: Some(label),
            tag: None,
        }
    }

    pub fn unlabeled(features: Vec<f64>) -> Self {
        Self {
            features,
            label: None,
            tag: None,
        }
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = Some(tag.into());
        self
    }
}

/// A column transform applied to a dataset, kept so that identical
/// preprocessing can be replayed on other data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnTransform {
    /// Natural log of the listed 0-based columns.
    Log { columns: Vec<usize> },
    /// `(v - mean) / stddev` per column.
    Standardize { means: Vec<f64>, stddevs: Vec<f64> },
}

impl ColumnTransform {
    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        match self {
            ColumnTransform::Log { columns } => log_columns(dataset, columns),
            ColumnTransform::Standardize { means, stddevs } => {
                if means.len() != dataset.d || stddevs.len() != dataset.d {
                    return Err(Error::Dimension {
                        what: "standardization record",
                        expected: dataset.d,
                        actual: means.len(),
                    });
                }
                let mut out = dataset.clone();
                for p in &mut out.patterns {
                    for ((v, m), s) in p.features.iter_mut().zip(means).zip(stddevs) {
                        *v = (*v - m) / s;
                    }
                }
                out.transforms.push(self.clone());
                Ok(out)
            }
        }
    }
}

/// Replays a transform record, in order, on raw data.
pub fn apply_transforms(dataset: &Dataset, transforms: &[ColumnTransform]) -> Result<Dataset> {
    transforms
        .iter()
        .try_fold(dataset.clone(), |data, t| t.apply(&data))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    d: usize,
    n: usize,
    patterns: Vec<Pattern>,
    transforms: Vec<ColumnTransform>,
}

impl Dataset {
    /// Validates that every pattern has `d` finite features and a label in `1..=n`.
    pub fn new(d: usize, n: usize, patterns: Vec<Pattern>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("datasets need at least one feature".into()));
        }
        for p in &patterns {
            if p.features.len() != d {
                return Err(Error::Dimension {
                    what: "pattern features",
                    expected: d,
                    actual: p.features.len(),
                });
            }
            if p.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("pattern features"));
            }
            if let Some(label) = p.label {
                if label == 0 || label > n {
                    return Err(Error::Label {
                        label: label as i64,
                        n,
                    });
                }
            }
        }
        Ok(Self {
            d,
            n,
            patterns,
            transforms: Vec::new(),
        })
    }

    /// Builds a dataset with `n` taken as the largest label present.
    pub fn from_patterns(d: usize, patterns: Vec<Pattern>) -> Result<Self> {
        let n = patterns.iter().filter_map(|p| p.label).max().unwrap_or(0);
        Self::new(d, n.max(1), patterns)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn transforms(&self) -> &[ColumnTransform] {
        &self.transforms
    }

    /// Re-declares the class count, e.g. when a holdout split lacks the
    /// highest class.
    pub fn with_class_count(mut self, n: usize) -> Result<Self> {
        if let Some(bad) = self.patterns.iter().filter_map(|p| p.label).find(|&l| l > n) {
            return Err(Error::Label {
                label: bad as i64,
                n,
            });
        }
        self.n = n;
        Ok(self)
    }

    /// Labels of every pattern; fails on the first unlabeled one.
    pub fn labels(&self) -> Result<Vec<usize>> {
        self.patterns
            .iter()
            .enumerate()
            .map(|(index, p)| p.label.ok_or(Error::Unlabeled { index }))
            .collect()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.patterns.iter().all(|p| p.label.is_some())
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n];
        for label in self.patterns.iter().filter_map(|p| p.label) {
            counts[label - 1] += 1;
        }
        counts
    }

    /// Concatenates datasets with equal `d`; `n` becomes the maximum.
    pub fn concat(parts: &[Dataset]) -> Result<Dataset> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Config("nothing to concatenate".into()))?;
        let mut patterns = Vec::new();
        for part in parts {
            if part.d != first.d {
                return Err(Error::Dimension {
                    what: "pattern features",
                    expected: first.d,
                    actual: part.d,
                });
            }
            patterns.extend(part.patterns.iter().cloned());
        }
        let n = parts.iter().map(|p| p.n).max().unwrap_or(1);
        Dataset::new(first.d, n, patterns)
    }

    /// Checks `d` and `n` against a network shape.
    pub fn check_topology(&self, topology: &Topology) -> Result<()> {
        if self.d != topology.d() {
            return Err(Error::Dimension {
                what: "input dimension",
                expected: topology.d(),
                actual: self.d,
            });
        }
        if self.n > topology.n() {
            return Err(Error::Dimension {
                what: "class count",
                expected: topology.n(),
                actual: self.n,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelPosition {
    First,
    Last,
    Absent,
}

impl FromStr for LabelPosition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" | "label-first" => Ok(LabelPosition::First),
            "last" | "label-last" => Ok(LabelPosition::Last),
            "absent" | "label-absent" | "none" => Ok(LabelPosition::Absent),
            other => Err(Error::Config(format!("unknown label position {other:?}"))),
        }
    }
}

impl fmt::Display for LabelPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelPosition::First => "label-first",
            LabelPosition::Last => "label-last",
            LabelPosition::Absent => "label-absent",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvSchema {
    pub label: LabelPosition,
    pub delimiter: u8,
    /// Expected feature count; inferred from the first row when `None`.
    pub d: Option<usize>,
    /// Class count; the largest label seen when `None`.
    pub n: Option<usize>,
}

impl CsvSchema {
    pub fn new(label: LabelPosition) -> Self {
        Self {
            label,
            delimiter: b',',
            d: None,
            n: None,
        }
    }

    pub fn with_d(mut self, d: usize) -> Self {
        self.d = Some(d);
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }
}

fn parse_field(field: &str, line: u64, column: usize) -> Result<f64> {
    let trimmed = field.trim();
    match trimmed.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            line,
            column,
            field: trimmed.to_string(),
        }),
    }
}

/// Reads delimited numeric rows. Blank lines are skipped; line numbers in
/// errors are 1-based and columns are 1-based positions in the raw row.
pub fn load_csv<R: Read>(source: R, schema: CsvSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(schema.delimiter)
        .from_reader(source);

    let mut expected_fields = schema.d.map(|d| match schema.label {
        LabelPosition::Absent => d,
        _ => d + 1,
    });
    let mut patterns = Vec::new();
    let mut labels_raw = Vec::new();

    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let expected = *expected_fields.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Arity {
                line,
                expected,
                found: record.len(),
            });
        }
        let mut values = record
            .iter()
            .enumerate()
            .map(|(c, f)| parse_field(f, line, c + 1))
            .collect::<Result<Vec<f64>>>()?;
        let label = match schema.label {
            LabelPosition::Absent => None,
            LabelPosition::First => Some(values.remove(0)),
            LabelPosition::Last => values.pop(),
        };
        if let Some(raw) = label {
            if raw.fract() != 0.0 || raw < 1.0 {
                return Err(Error::Label {
                    label: raw as i64,
                    n: schema.n.unwrap_or(0),
                });
            }
            labels_raw.push(raw as usize);
        }
        patterns.push(Pattern {
            features: values,
            label: label.map(|l| l as usize),
            tag: None,
        });
    }

    let d = match (schema.d, expected_fields) {
        (Some(d), _) => d,
        (None, Some(fields)) => match schema.label {
            LabelPosition::Absent => fields,
            _ => fields.saturating_sub(1),
        },
        (None, None) => {
            return Err(Error::Config(
                "empty input: feature count cannot be inferred".into(),
            ))
        }
    };
    let n = match schema.n {
        Some(n) => n,
        None => labels_raw.iter().copied().max().unwrap_or(1),
    };
    Dataset::new(d, n, patterns)
}

pub fn load_csv_path(path: &Path, schema: CsvSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_csv(file, schema)
}

/// Writes patterns back in the given label layout with shortest round-trip
/// float formatting.
pub fn write_csv(dataset: &Dataset, label: LabelPosition) -> String {
    let mut out = String::new();
    for p in dataset.patterns() {
        let mut fields: Vec<String> = p.features.iter().map(|v| v.to_string()).collect();
        match (label, p.label) {
            (LabelPosition::First, Some(l)) => fields.insert(0, l.to_string()),
            (LabelPosition::Last, Some(l)) => fields.push(l.to_string()),
            _ => {}
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn log_columns(dataset: &Dataset, columns: &[usize]) -> Result<Dataset> {
    let mut out = dataset.clone();
    for &column in columns {
        if column >= dataset.d {
            return Err(Error::Transform {
                column,
                reason: format!("column out of range for d = {}", dataset.d),
            });
        }
        for p in &mut out.patterns {
            let v = p.features[column];
            if v <= 0.0 {
                return Err(Error::Transform {
                    column,
                    reason: format!("log of non-positive value {v}"),
                });
            }
            p.features[column] = v.ln();
        }
    }
    out.transforms.push(ColumnTransform::Log {
        columns: columns.to_vec(),
    });
    Ok(out)
}

/// Natural log of the selected 0-based columns.
pub fn log_transform(dataset: &Dataset, columns: &[usize]) -> Result<Dataset> {
    log_columns(dataset, columns)
}

/// Scales every column to zero mean and unit population standard deviation.
/// Constant columns pass through unchanged.
pub fn standardize(dataset: &Dataset) -> Result<(Dataset, ColumnTransform)> {
    if dataset.len() < 2 {
        return Err(Error::Config(
            "standardization needs at least two patterns".into(),
        ));
    }
    let count = dataset.len() as f64;
    let mut means = vec![0.0; dataset.d];
    for p in dataset.patterns() {
        for (m, v) in means.iter_mut().zip(&p.features) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= count);

    let mut stddevs = vec![0.0; dataset.d];
    for p in dataset.patterns() {
        for ((s, v), m) in stddevs.iter_mut().zip(&p.features).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    for (column, s) in stddevs.iter_mut().enumerate() {
        *s = (*s / count).sqrt();
        if *s == 0.0 {
            log::warn!("column {column} has zero variance; centered but left unscaled");
            *s = 1.0;
        }
    }
    let record = ColumnTransform::Standardize { means, stddevs };
    let out = record.apply(dataset)?;
    Ok((out, record))
}

/// One-hot target vector for a 1-based class.
pub fn desired_response(label: usize, n: usize) -> Result<Vec<f64>> {
    if label == 0 || label > n {
        return Err(Error::Label {
            label: label as i64,
            n,
        });
    }
    let mut r = vec![0.0; n];
    r[label - 1] = 1.0;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassTally {
    pub class: usize,
    pub total: usize,
    pub correct: usize,
}

impl ClassTally {
    pub fn percentage(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.correct as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternResult {
    pub tag: Option<String>,
    pub expected: usize,
    pub predicted: usize,
    pub outputs: Vec<f64>,
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub classes: Vec<ClassTally>,
    pub patterns: Vec<PatternResult>,
}

impl ClassReport {
    pub fn total(&self) -> usize {
        self.classes.iter().map(|c| c.total).sum()
    }

    pub fn correct(&self) -> usize {
        self.classes.iter().map(|c| c.correct).sum()
    }

    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.correct() as f64 / self.total() as f64
        }
    }
}

/// Formats `value` with at most `digits` significant digits, dropping
/// trailing zeros.
pub fn format_significant(value: f64, digits: usize) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let magnitude = value.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let s = format!("{value:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

impl fmt::Display for ClassReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.classes {
            writeln!(
                f,
                "Class = {} Total = {} Correct = {} Percentage = {}",
                c.class,
                c.total,
                c.correct,
                format_significant(c.percentage(), 9)
            )?;
        }
        write!(
            f,
            "Overall Total = {} Correct = {} Percentage = {}",
            self.total(),
            self.correct(),
            format_significant(100.0 * self.accuracy(), 9)
        )
    }
}

/// Classifies every labeled pattern and tallies results per class.
pub fn evaluate(topology: &Topology, weights: &[f64], dataset: &Dataset) -> Result<ClassReport> {
    dataset.check_topology(topology)?;
    if weights.len() != topology.weight_count() {
        return Err(Error::Dimension {
            what: "weight vector",
            expected: topology.weight_count(),
            actual: weights.len(),
        });
    }
    let labels = dataset.labels()?;
    let mut classes: Vec<ClassTally> = (1..=topology.n())
        .map(|class| ClassTally {
            class,
            total: 0,
            correct: 0,
        })
        .collect();
    let mut trace = ForwardTrace::new(topology);
    let mut patterns = Vec::with_capacity(dataset.len());
    for (p, &label) in dataset.patterns().iter().zip(&labels) {
        forward_into(topology, weights, &p.features, &mut trace);
        let c = decide(trace.outputs(topology));
        let tally = &mut classes[label - 1];
        tally.total += 1;
        if c.class == label {
            tally.correct += 1;
        }
        patterns.push(PatternResult {
            tag: p.tag.clone(),
            expected: label,
            predicted: c.class,
            outputs: c.outputs,
            ambiguous: c.ambiguous,
        });
    }
    classes.truncate(dataset.n().max(1));
    Ok(ClassReport { classes, patterns })
}

/// Logs of tetrahydrocortisone and pregnanetriol excretion rates, as tabulated
/// with the reference results.
#[allow(clippy::approx_constant)]
const CUSHING_TRAINING: [(&str, f64, f64, usize); 21] = [
    ("a1", 1.1314021, 2.45958884, 1),
    ("a2", 1.0986123, 0.26236426, 1),
    ("a3", 0.6418539, -2.30258509, 1),
    ("a4", 1.3350011, -3.21887582, 1),
    ("a5", 1.4109870, 0.09531018, 1),
    ("a6", 0.6418539, -0.91629073, 1),
    ("b1", 2.1162555, 0.00000000, 2),
    ("b2", 1.3350011, -1.60943791, 2),
    ("b3", 1.3609766, -0.51082562, 2),
    ("b4", 2.0541237, 0.18232156, 2),
    ("b5", 2.2082744, -0.51082562, 2),
    ("b6", 2.7343675, 1.28093385, 2),
    ("b7", 2.0412203, 0.47000363, 2),
    ("b8", 1.8718022, -0.91629073, 2),
    ("b9", 1.7404662, -0.91629073, 2),
    ("b10", 2.6100698, 0.47000363, 2),
    ("c1", 2.3223877, 1.85629799, 3),
    ("c2", 2.2192035, 2.06686276, 3),
    ("c3", 2.2617631, 1.13140211, 3),
    ("c4", 3.9852735, 0.91629073, 3),
    ("c5", 2.7600099, 2.02814825, 3),
];

#[allow(clippy::approx_constant)]
const CUSHING_UNKNOWN: [(&str, f64, f64); 6] = [
    ("u1", 1.6292405, -0.9162907),
    ("u2", 2.5572273, 1.6094379),
    ("u3", 2.5649494, -0.2231436),
    ("u4", 0.9555114, -2.3025851),
    ("u5", 3.4011974, -2.3025851),
    ("u6", 3.0204249, -0.2231436),
];

/// Class names of the Cushing data, indexed by `label - 1`.
pub const CUSHING_CLASSES: [&str; 3] = ["adenoma", "bilateral hyperplasia", "carcinoma"];

/// The 21 labeled Cushing syndrome patterns (log scale).
pub fn cushing_training_data() -> Dataset {
    let patterns = CUSHING_TRAINING
        .iter()
        .map(|&(tag, a, b, class)| Pattern::labeled(vec![a, b], class).with_tag(tag))
        .collect();
    Dataset::new(2, 3, patterns).expect("embedded data is valid")
}

/// The six Cushing patterns of unknown type (log scale).
pub fn cushing_unknown_data() -> Dataset {
    let patterns = CUSHING_UNKNOWN
        .iter()
        .map(|&(tag, a, b)| Pattern::unlabeled(vec![a, b]).with_tag(tag))
        .collect();
    Dataset::new(2, 3, patterns).expect("embedded data is valid")
}

/// Inclusive 1-based line range of a data file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineRange {
    pub first: usize,
    pub last: usize,
}

impl FromStr for LineRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Manifest(format!("bad line range {s:?}"));
        let (a, b) = match s.split_once('-') {
            Some((a, b)) => (a, b),
            None => (s, s),
        };
        let first: usize = a.trim().parse().map_err(|_| bad())?;
        let last: usize = b.trim().parse().map_err(|_| bad())?;
        if first == 0 || last < first {
            return Err(bad());
        }
        Ok(LineRange { first, last })
    }
}

impl fmt::Display for LineRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.first, self.last)
    }
}

/// A `key=value` text file describing how to turn a raw data file into named
/// splits, so that a train/holdout partition can be reproduced exactly.
///
/// ```text
/// source=wine.data
/// schema=label-first
/// delimiter=,
/// d=13
/// n=3
/// transforms=standardize
/// split.train=1-50,60-119,131-170
/// split.holdout=51-59,120-130,171-178
/// ```
///
/// Line ranges count non-blank data lines, 1-based and inclusive. `source` is
/// resolved relative to the manifest's directory. `transforms` lists
/// `log:<cols>` (1-based columns separated by `;`) and `standardize`, applied
/// in order; standardization statistics come from the `train` split.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub source: PathBuf,
    pub schema: CsvSchema,
    pub transforms: Vec<TransformStep>,
    pub splits: Vec<(String, Vec<LineRange>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransformStep {
    Log(Vec<usize>),
    Standardize,
}

impl Manifest {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut source = None;
        let mut label = LabelPosition::First;
        let mut delimiter = b',';
        let mut d = None;
        let mut n = None;
        let mut transforms = Vec::new();
        let mut splits = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Manifest(format!("line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let number = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| Error::Manifest(format!("{key}: not an integer: {v:?}")))
            };
            match key {
                "source" => source = Some(base_dir.join(value)),
                "schema" => label = value.parse()?,
                "delimiter" => {
                    let bytes = value.as_bytes();
                    delimiter = match value {
                        "tab" | "\\t" => b'\t',
                        _ if bytes.len() == 1 => bytes[0],
                        _ => {
                            return Err(Error::Manifest(format!("bad delimiter {value:?}")))
                        }
                    };
                }
                "d" => d = Some(number(value)?),
                "n" => n = Some(number(value)?),
                "transforms" => {
                    for step in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        if step == "standardize" {
                            transforms.push(TransformStep::Standardize);
                        } else if let Some(cols) = step.strip_prefix("log:") {
                            let cols = cols
                                .split(';')
                                .map(|c| match number(c.trim())? {
                                    0 => Err(Error::Manifest("log columns are 1-based".into())),
                                    c => Ok(c - 1),
                                })
                                .collect::<Result<Vec<_>>>()?;
                            transforms.push(TransformStep::Log(cols));
                        } else {
                            return Err(Error::Manifest(format!("unknown transform {step:?}")));
                        }
                    }
                }
                _ => {
                    if let Some(name) = key.strip_prefix("split.") {
                        let ranges = value
                            .split(',')
                            .map(str::parse)
                            .collect::<Result<Vec<LineRange>>>()?;
                        splits.push((name.to_string(), ranges));
                    } else {
                        return Err(Error::Manifest(format!("unknown key {key:?}")));
                    }
                }
            }
        }

        let source = source.ok_or_else(|| Error::Manifest("missing source".into()))?;
        let mut schema = CsvSchema::new(label);
        schema.delimiter = delimiter;
        schema.d = d;
        schema.n = n;
        Ok(Manifest {
            source,
            schema,
            transforms,
            splits,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    fn split_ranges(&self, name: &str) -> Result<&[LineRange]> {
        self.splits
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, r)| r.as_slice())
            .ok_or_else(|| Error::Manifest(format!("no split named {name:?}")))
    }

    /// The untransformed patterns of a split, in file order of the ranges.
    pub fn raw_split(&self, name: &str) -> Result<Dataset> {
        let all = load_csv_path(&self.source, self.schema)?;
        let ranges = self.split_ranges(name)?;
        let mut patterns = Vec::new();
        for r in ranges {
            if r.last > all.len() {
                return Err(Error::Manifest(format!(
                    "range {r} exceeds the {} data lines of {}",
                    all.len(),
                    self.source.display()
                )));
            }
            for line in r.first..=r.last {
                patterns.push(
                    all.patterns[line - 1]
                        .clone()
                        .with_tag(format!("line{line}")),
                );
            }
        }
        Dataset::new(all.d, all.n, patterns)
    }

    /// The transform record implied by the manifest, fitted on the `train`
    /// split.
    pub fn transform_record(&self) -> Result<Vec<ColumnTransform>> {
        let mut data = self.raw_split("train")?;
        let mut record = Vec::new();
        for step in &self.transforms {
            let t = match step {
                TransformStep::Log(cols) => ColumnTransform::Log {
                    columns: cols.clone(),
                },
                TransformStep::Standardize => standardize(&data)?.1,
            };
            data = t.apply(&data)?;
            record.push(t);
        }
        Ok(record)
    }

    /// A split with the manifest's transforms applied.
    pub fn split(&self, name: &str) -> Result<Dataset> {
        let record = self.transform_record()?;
        apply_transforms(&self.raw_split(name)?, &record)
    }
}
