//! Feature tables, PCA, patient-wise splitting and a synthetic generator.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nnet::LabeledSet;

pub const DEFAULT_PCA_DIM: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
    Unassigned,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
            Split::Unassigned => "",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Unassigned => "unassigned",
            s => s.as_str(),
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            "" | "unassigned" => Ok(Split::Unassigned),
            other => Err(format!("unknown split tag {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
    patient_ids: Vec<String>,
    splits: Vec<Split>,
}

impl FeatureTable {
    pub fn new(
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        patient_ids: Vec<String>,
        splits: Option<Vec<Split>>,
    ) -> Result<Self> {
        let s = rows.len();
        if labels.len() != s {
            return Err(Error::dim("labels", s, labels.len()));
        }
        if patient_ids.len() != s {
            return Err(Error::dim("patient ids", s, patient_ids.len()));
        }
        let splits = splits.unwrap_or_else(|| vec![Split::Unassigned; s]);
        if splits.len() != s {
            return Err(Error::dim("split tags", s, splits.len()));
        }
        let d = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::dim("feature row", d, r.len()));
        }
        let table = Self {
            rows,
            labels,
            patient_ids,
            splits,
        };
        table.check_patient_splits()?;
        Ok(table)
    }

    fn check_patient_splits(&self) -> Result<()> {
        let mut seen: BTreeMap<&str, Split> = BTreeMap::new();
        for (pid, &sp) in self.patient_ids.iter().zip(&self.splits) {
            if let Some(prev) = seen.insert(pid, sp) {
                if prev != sp {
                    return Err(Error::InvalidArgument(format!(
                        "patient {pid:?} appears in both {prev} and {sp}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn patient_ids(&self) -> &[String] {
        &self.patient_ids
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn has_splits(&self) -> bool {
        self.splits.iter().all(|s| *s != Split::Unassigned)
    }

    /// Distinct patients in a split.
    pub fn patients_in(&self, split: Split) -> BTreeSet<&str> {
        self.patient_ids
            .iter()
            .zip(&self.splits)
            .filter(|(_, s)| **s == split)
            .map(|(p, _)| p.as_str())
            .collect()
    }

    pub fn rows_in(&self, split: Split) -> Vec<Vec<f64>> {
        self.iter_split(split)
            .map(|i| self.rows[i].clone())
            .collect()
    }

    pub fn labeled(&self, split: Split) -> LabeledSet {
        LabeledSet {
            x: self.rows_in(split),
            y: self.iter_split(split).map(|i| self.labels[i]).collect(),
        }
    }

    fn iter_split(&self, split: Split) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.splits[i] == split)
    }

    /// Same table with every row replaced by `f(row)`.
    pub fn map_rows(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        Self::new(
            self.rows.iter().map(|r| f(r)).collect(),
            self.labels.clone(),
            self.patient_ids.clone(),
            Some(self.splits.clone()),
        )
    }

    /// Reads the feature CSV: header `patient_id,label[,split],f1,...,fD`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = rdr.headers()?.clone();
        let parse_err = |line: u64, msg: String| Error::Parse {
            line: line as usize,
            msg,
        };
        if header.get(0) != Some("patient_id") || header.get(1) != Some("label") {
            return Err(parse_err(
                1,
                "header must start with patient_id,label".into(),
            ));
        }
        let has_split = header.get(2) == Some("split");
        let first_feature = if has_split { 3 } else { 2 };
        let d = header.len().saturating_sub(first_feature);
        if d == 0 {
            return Err(parse_err(1, "no feature columns".into()));
        }

        let (mut rows, mut labels, mut pids, mut splits) = (vec![], vec![], vec![], vec![]);
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != header.len() {
                return Err(parse_err(
                    line,
                    format!("{} fields, expected {}", rec.len(), header.len()),
                ));
            }
            pids.push(rec[0].to_string());
            let label = rec[1].parse::<usize>().map_err(|_| {
                parse_err(
                    line,
                    format!("label {:?}: labels must be integer class indices", &rec[1]),
                )
            })?;
            labels.push(label);
            splits.push(if has_split {
                rec[2].parse::<Split>().map_err(|m| parse_err(line, m))?
            } else {
                Split::Unassigned
            });
            let row = (first_feature..rec.len())
                .map(|c| {
                    rec[c].parse::<f64>().map_err(|_| {
                        parse_err(line, format!("non-numeric feature cell {:?}", &rec[c]))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Self::new(rows, labels, pids, Some(splits))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let with_split = self.splits.iter().any(|s| *s != Split::Unassigned);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["patient_id".to_string(), "label".to_string()];
        if with_split {
            header.push("split".into());
        }
        header.extend((1..=self.dim()).map(|i| format!("f{i}")));
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = vec![self.patient_ids[i].clone(), self.labels[i].to_string()];
            if with_split {
                rec.push(self.splits[i].as_str().to_string());
            }
            rec.extend(self.rows[i].iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()?).map_err(|e| Error::io(path, e))
    }
}

/// Assigns whole patients to train/validation/test.
///
/// Patient ids are sorted, shuffled with `seed`, and cut into blocks whose
/// sizes follow `fractions` by largest remainder, each split getting at least
/// one patient. The result depends only on the set of ids and the seed.
pub fn patient_split(table: &FeatureTable, fractions: [f64; 3], seed: u64) -> Result<FeatureTable> {
    if fractions.iter().any(|f| f.is_nan() || *f <= 0.0) {
        return Err(Error::InvalidArgument(
            "split fractions must be positive".into(),
        ));
    }
    if (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(
            "split fractions must sum to 1".into(),
        ));
    }
    let mut patients: Vec<&str> = table
        .patient_ids
        .iter()
        .map(String::as_str)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = patients.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "patient-wise split needs at least 3 patients, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    patients.shuffle(&mut rng);

    let counts = allocate(n, &fractions);
    let tags = [Split::Train, Split::Validation, Split::Test];
    let mut assignment: BTreeMap<&str, Split> = BTreeMap::new();
    let mut offset = 0;
    for (count, tag) in counts.iter().zip(tags) {
        for p in &patients[offset..offset + count] {
            assignment.insert(p, tag);
        }
        offset += count;
    }
    let splits = table
        .patient_ids
        .iter()
        .map(|p| assignment[p.as_str()])
        .collect();
    FeatureTable::new(
        table.rows.clone(),
        table.labels.clone(),
        table.patient_ids.clone(),
        Some(splits),
    )
}

fn allocate(n: usize, fractions: &[f64; 3]) -> [usize; 3] {
    let targets: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts = [0usize; 3];
    for (c, t) in counts.iter_mut().zip(&targets) {
        *c = t.floor() as usize;
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = targets[a] - targets[a].floor();
        let rb = targets[b] - targets[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut left = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    for i in 0..3 {
        if counts[i] == 0 {
            let donor = (0..3)
                .max_by_key(|&j| (counts[j], std::cmp::Reverse(j)))
                .unwrap();
            counts[donor] -= 1;
            counts[i] = 1;
        }
    }
    counts
}

/// Principal directions fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PcaRepr", into = "PcaRepr")]
pub struct PcaModel {
    mean: Vec<f64>,
    /// `components[k]` is the k-th principal direction (length D).
    components: Vec<Vec<f64>>,
    explained_variance: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
struct PcaRepr {
    mean: Vec<f64>,
    /// D x d, column-major.
    components: Vec<f64>,
    explained_variance: Vec<f64>,
    d: usize,
    #[serde(rename = "D")]
    big_d: usize,
    centered: bool,
    standardized: bool,
}

impl From<PcaModel> for PcaRepr {
    fn from(m: PcaModel) -> Self {
        PcaRepr {
            d: m.components.len(),
            big_d: m.mean.len(),
            components: m.components.into_iter().flatten().collect(),
            mean: m.mean,
            explained_variance: m.explained_variance,
            centered: true,
            standardized: false,
        }
    }
}

impl TryFrom<PcaRepr> for PcaModel {
    type Error = Error;

    fn try_from(r: PcaRepr) -> Result<Self> {
        if r.mean.len() != r.big_d {
            return Err(Error::dim("pca mean", r.big_d, r.mean.len()));
        }
        if r.components.len() != r.big_d * r.d || r.big_d == 0 {
            return Err(Error::dim(
                "pca components",
                r.big_d * r.d,
                r.components.len(),
            ));
        }
        if r.explained_variance.len() != r.d {
            return Err(Error::dim(
                "explained variance",
                r.d,
                r.explained_variance.len(),
            ));
        }
        if r.standardized {
            return Err(Error::InvalidArgument(
                "standardized PCA models are not supported".into(),
            ));
        }
        Ok(PcaModel {
            mean: r.mean,
            components: r.components.chunks(r.big_d).map(<[f64]>::to_vec).collect(),
            explained_variance: r.explained_variance,
        })
    }
}

impl PcaModel {
    /// Top-`d` right singular vectors of the centered rows. Each component
    /// is signed so that its largest-magnitude entry is positive.
    pub fn fit(rows: &[Vec<f64>], d: usize) -> Result<Self> {
        let s = rows.len();
        if s < 2 {
            return Err(Error::InvalidArgument(format!(
                "PCA needs at least 2 rows, got {s}"
            )));
        }
        let big_d = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != big_d) {
            return Err(Error::dim("feature row", big_d, r.len()));
        }
        let max_d = (s - 1).min(big_d);
        if d == 0 || d > max_d {
            return Err(Error::InvalidArgument(format!(
                "PCA dimension {d} outside 1..={max_d}"
            )));
        }
        let mut mean = vec![0.0; big_d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= s as f64;
        }
        let centered = DMatrix::from_fn(s, big_d, |i, j| rows[i][j] - mean[j]);
        if centered.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidArgument(
                "all training rows are identical (zero variance)".into(),
            ));
        }

        let svd = centered.svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| {
            svd.singular_values[b]
                .total_cmp(&svd.singular_values[a])
                .then(a.cmp(&b))
        });

        let mut components = Vec::with_capacity(d);
        let mut explained_variance = Vec::with_capacity(d);
        for &k in order.iter().take(d) {
            let mut v: Vec<f64> = v_t.row(k).iter().copied().collect();
            let pivot =
                v.iter().enumerate().fold(
                    0,
                    |best, (i, x)| if x.abs() > v[best].abs() { i } else { best },
                );
            if v[pivot] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            components.push(v);
            let sigma = svd.singular_values[k];
            explained_variance.push(sigma * sigma / (s - 1) as f64);
        }
        Ok(Self {
            mean,
            components,
            explained_variance,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.components.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.input_dim() {
            return Err(Error::dim("PCA input", self.input_dim(), row.len()));
        }
        Ok(self
            .components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(row.iter().zip(&self.mean))
                    .map(|(w, (x, m))| w * (x - m))
                    .sum()
            })
            .collect())
    }

    /// `(rows - mean) . W`.
    pub fn transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}

/// Two Gaussian classes offset along a random unit direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub samples_per_class: usize,
    pub dim: usize,
    pub separation: f64,
    pub patients_per_class: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Class means sit at `-+separation/2` along `u`; covariance is the
    /// identity. Each class's samples are grouped into consecutive blocks,
    /// one block per synthetic patient.
    pub fn generate(&self) -> Result<FeatureTable> {
        if self.samples_per_class == 0 || self.dim == 0 || self.patients_per_class == 0 {
            return Err(Error::InvalidArgument(
                "synthetic spec sizes must be positive".into(),
            ));
        }
        if self.patients_per_class > self.samples_per_class {
            return Err(Error::InvalidArgument(
                "more patients than samples per class".into(),
            ));
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return Err(Error::InvalidArgument(
                "separation must be non-negative".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut u: Vec<f64> = (0..self.dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        u.iter_mut().for_each(|x| *x /= norm);

        let n = self.samples_per_class;
        let (mut rows, mut labels, mut pids) = (vec![], vec![], vec![]);
        for class in 0..2usize {
            let offset = if class == 0 { -0.5 } else { 0.5 } * self.separation;
            for j in 0..n {
                let row: Vec<f64> = u
                    .iter()
                    .map(|ui| {
                        let noise: f64 = StandardNormal.sample(&mut rng);
                        offset * ui + noise
                    })
                    .collect();
                rows.push(row);
                labels.push(class);
                let patient = class * self.patients_per_class + j * self.patients_per_class / n;
                pids.push(format!("P{patient:04}"));
            }
        }
        FeatureTable::new(rows, labels, pids, None)
    }
}
