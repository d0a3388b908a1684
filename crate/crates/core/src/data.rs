//! Node-classification datasets: synthetic heterogeneous generator, one-hop
//! relation-wise feature aggregation, and the CSV directory format.
//!
//! A dataset has one target node type (features, labels, split) plus any
//! number of auxiliary node types. Each auxiliary type carries its own raw
//! features and one relation of `(source, target)` edges into the target
//! nodes.
//!
//! On disk a dataset is a directory of headered CSV files:
//!
//! | file                | columns                        |
//! |---------------------|--------------------------------|
//! | `features.csv`      | `f0,…,f{d-1}`, row `i` = node `i` |
//! | `labels.csv`        | `node,label`                   |
//! | `split.csv`         | `node,split` (`train`/`val`/`test`) |
//! | `flags.csv`         | `node,noisy` (`0`/`1`), optional |
//! | `edges_<rel>.csv`   | `src,dst`                      |
//! | `nodes_<rel>.csv`   | `f0,…,f{d-1}` for the source type of `<rel>` |

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::{s, Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{LdtsError, Result};
use crate::sampler::RngState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "valid" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

/// An auxiliary node type and its edges into the target nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub name: String,
    /// Raw features of the source nodes, one row per source node.
    pub source_features: Array2<f64>,
    /// `(source index, target index)` pairs.
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub class_count: usize,
    pub relations: Vec<Relation>,
    /// Split assignment of every target node.
    pub split: Vec<Split>,
    /// Planted label-noise flags (synthetic data only).
    pub noisy: Option<Vec<bool>>,
}

impl Dataset {
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn split_indices(&self, which: Split) -> Vec<usize> {
        self.split
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == which)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let n = self.features.nrows();
        let d = self.features.ncols();
        if n == 0 {
            return Err("dataset has no target nodes".into());
        }
        if self.labels.len() != n {
            return Err(format!("{} labels for {n} feature rows", self.labels.len()));
        }
        if self.split.len() != n {
            return Err(format!("{} split entries for {n} nodes", self.split.len()));
        }
        if !self.split.contains(&Split::Train) {
            return Err("train split is empty".into());
        }
        if self.class_count < 2 {
            return Err(format!("need at least 2 classes, got {}", self.class_count));
        }
        if let Some(bad) = self.labels.iter().find(|&&y| y >= self.class_count) {
            return Err(format!("label {bad} >= class count {}", self.class_count));
        }
        if let Some(flags) = &self.noisy {
            if flags.len() != n {
                return Err(format!("{} noise flags for {n} nodes", flags.len()));
            }
        }
        if self.features.iter().any(|v| !v.is_finite()) {
            return Err("non-finite target feature".into());
        }
        for rel in &self.relations {
            let m = rel.source_features.nrows();
            if rel.source_features.ncols() != d {
                return Err(format!(
                    "relation `{}` features have {} columns, expected {d}",
                    rel.name,
                    rel.source_features.ncols()
                ));
            }
            if let Some(&(src, dst)) = rel.edges.iter().find(|(s, t)| *s >= m || *t >= n) {
                return Err(format!(
                    "relation `{}` edge ({src}, {dst}) out of range ({m} sources, {n} targets)",
                    rel.name
                ));
            }
            if rel.source_features.iter().any(|v| !v.is_finite()) {
                return Err(format!("non-finite feature in relation `{}`", rel.name));
            }
        }
        Ok(())
    }
}

/// Parameters of the synthetic generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_target: usize,
    pub class_count: usize,
    pub feature_dim: usize,
    /// Distance between any two class means.
    pub cluster_separation: f64,
    /// Fraction of train labels replaced by a different random class.
    pub noise_fraction: f64,
    pub aux_types: usize,
    /// Source nodes per auxiliary type; 0 picks `max(class_count, n_target / 4)`.
    pub aux_nodes_per_type: usize,
    /// Edges drawn per target node for each auxiliary type.
    pub edges_per_node: usize,
    /// Probability that a drawn edge goes to an auxiliary node of the target's class.
    pub homophily: f64,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_target: 2000,
            class_count: 4,
            feature_dim: 16,
            cluster_separation: 2.0,
            noise_fraction: 0.0,
            aux_types: 2,
            aux_nodes_per_type: 0,
            edges_per_node: 3,
            homophily: 0.7,
            train_fraction: 0.6,
            val_fraction: 0.2,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LdtsError::Config(msg));
        if self.class_count < 2 {
            return bad(format!("need at least 2 classes, got {}", self.class_count));
        }
        if self.n_target < self.class_count {
            return bad(format!(
                "n ({}) must be at least the class count ({})",
                self.n_target, self.class_count
            ));
        }
        if self.feature_dim == 0 {
            return bad("feature dimension must be positive".into());
        }
        if !(self.cluster_separation > 0.0 && self.cluster_separation.is_finite()) {
            return bad(format!(
                "cluster separation must be positive, got {}",
                self.cluster_separation
            ));
        }
        if !(0.0..1.0).contains(&self.noise_fraction) {
            return bad(format!(
                "noise fraction must be in [0, 1), got {}",
                self.noise_fraction
            ));
        }
        if self.aux_types > 0 && self.edges_per_node == 0 {
            return bad("edges per node must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.homophily) {
            return bad(format!(
                "homophily must be in [0, 1], got {}",
                self.homophily
            ));
        }
        if !(self.train_fraction > 0.0
            && self.val_fraction >= 0.0
            && self.train_fraction + self.val_fraction <= 1.0)
        {
            return bad(format!(
                "invalid split fractions train={} val={}",
                self.train_fraction, self.val_fraction
            ));
        }
        let n_train = (self.train_fraction * self.n_target as f64).round() as usize;
        if n_train == 0 {
            return bad("train split would be empty".into());
        }
        Ok(())
    }

    fn aux_node_count(&self) -> usize {
        if self.aux_nodes_per_type > 0 {
            self.aux_nodes_per_type
        } else {
            self.class_count.max(self.n_target / 4)
        }
    }
}

fn class_means(cfg: &SynthConfig, rng: &mut RngState) -> Array2<f64> {
    let (c, d) = (cfg.class_count, cfg.feature_dim);
    let scale = cfg.cluster_separation / std::f64::consts::SQRT_2;
    let mut means = Array2::zeros((c, d));
    if d >= c {
        // scaled basis vectors: every pair is exactly `separation` apart
        for k in 0..c {
            means[[k, k]] = scale;
        }
    } else {
        for mut row in means.rows_mut() {
            let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            for (r, x) in row.iter_mut().zip(v) {
                *r = scale * x / norm;
            }
        }
    }
    means
}

fn gaussian_rows(labels: &[usize], means: &Array2<f64>, rng: &mut RngState) -> Array2<f64> {
    let d = means.ncols();
    let mut out = Array2::zeros((labels.len(), d));
    for (mut row, &y) in out.rows_mut().into_iter().zip(labels) {
        for (j, v) in row.iter_mut().enumerate() {
            let noise: f64 = rng.sample(StandardNormal);
            *v = means[[y, j]] + noise;
        }
    }
    out
}

/// Builds a synthetic dataset. Deterministic in `cfg.seed`.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = RngState::new(cfg.seed);
    let n = cfg.n_target;
    let c = cfg.class_count;

    let means = class_means(cfg, &mut rng);
    let mut true_labels: Vec<usize> = (0..n).map(|i| i % c).collect();
    true_labels.shuffle(&mut rng);
    let features = gaussian_rows(&true_labels, &means, &mut rng);

    let m = cfg.aux_node_count();
    let mut relations = Vec::with_capacity(cfg.aux_types);
    for r in 0..cfg.aux_types {
        let aux_labels: Vec<usize> = (0..m).map(|j| j % c).collect();
        let source_features = gaussian_rows(&aux_labels, &means, &mut rng);
        let by_class: Vec<Vec<usize>> = (0..c)
            .map(|k| (0..m).filter(|j| aux_labels[*j] == k).collect())
            .collect();
        let mut edges = Vec::with_capacity(n * cfg.edges_per_node);
        for (target, &y) in true_labels.iter().enumerate() {
            let mut picked: Vec<usize> = (0..cfg.edges_per_node)
                .map(|_| {
                    if rng.random_bool(cfg.homophily) && !by_class[y].is_empty() {
                        by_class[y][rng.random_range(0..by_class[y].len())]
                    } else {
                        rng.random_range(0..m)
                    }
                })
                .collect();
            picked.sort_unstable();
            picked.dedup();
            edges.extend(picked.into_iter().map(|src| (src, target)));
        }
        relations.push(Relation {
            name: format!("aux{r}"),
            source_features,
            edges,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_train = (cfg.train_fraction * n as f64).round() as usize;
    let n_val = ((cfg.val_fraction * n as f64).round() as usize).min(n - n_train);
    let mut split = vec![Split::Test; n];
    for &i in &order[..n_train] {
        split[i] = Split::Train;
    }
    for &i in &order[n_train..n_train + n_val] {
        split[i] = Split::Val;
    }

    let mut labels = true_labels;
    let mut noisy = vec![false; n];
    let mut train: Vec<usize> = order[..n_train].to_vec();
    train.shuffle(&mut rng);
    let n_noisy = (cfg.noise_fraction * n_train as f64).round() as usize;
    for &i in &train[..n_noisy] {
        let offset = rng.random_range(1..c);
        labels[i] = (labels[i] + offset) % c;
        noisy[i] = true;
    }

    let ds = Dataset {
        features,
        labels,
        class_count: c,
        relations,
        split,
        noisy: Some(noisy),
    };
    debug_assert!(ds.validate().is_ok());
    Ok(ds)
}

/// Raw features followed by, for each relation, the mean raw feature of the
/// node's sources under that relation (zeros when it has none).
pub fn aggregate_features(ds: &Dataset) -> Array2<f64> {
    let n = ds.node_count();
    let d = ds.feature_dim();
    let mut out = Array2::zeros((n, d * (1 + ds.relations.len())));
    out.slice_mut(s![.., ..d]).assign(&ds.features);
    for (r, rel) in ds.relations.iter().enumerate() {
        let mut block = Array2::<f64>::zeros((n, d));
        let mut counts = Array1::<f64>::zeros(n);
        for &(src, dst) in &rel.edges {
            let mut row = block.row_mut(dst);
            row += &rel.source_features.row(src);
            counts[dst] += 1.0;
        }
        for (mut row, &count) in block.rows_mut().into_iter().zip(&counts) {
            if count > 0.0 {
                row /= count;
            }
        }
        let start = d * (r + 1);
        out.slice_mut(s![.., start..start + d]).assign(&block);
    }
    out
}

// ---------------------------------------------------------------------------
// CSV directory format

fn write_csv(
    path: &Path,
    header: &[String],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| LdtsError::io(path, e))
}

fn csv_error(path: &Path, err: csv::Error) -> LdtsError {
    if err.is_io_error() {
        match err.into_kind() {
            csv::ErrorKind::Io(e) => LdtsError::io(path, e),
            _ => unreachable!(),
        }
    } else {
        LdtsError::format(path, err.to_string())
    }
}

fn matrix_header(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("f{j}")).collect()
}

fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<()> {
    write_csv(
        path,
        &matrix_header(m.ncols()),
        m.rows()
            .into_iter()
            .map(|row| row.iter().map(|v| v.to_string()).collect()),
    )
}

pub fn save_dataset(ds: &Dataset, dir: &Path) -> Result<()> {
    ds.validate().map_err(|m| LdtsError::format(dir, m))?;
    fs::create_dir_all(dir).map_err(|e| LdtsError::io(dir, e))?;
    write_matrix(&dir.join("features.csv"), &ds.features)?;
    write_csv(
        &dir.join("labels.csv"),
        &["node".into(), "label".into()],
        ds.labels
            .iter()
            .enumerate()
            .map(|(i, y)| vec![i.to_string(), y.to_string()]),
    )?;
    write_csv(
        &dir.join("split.csv"),
        &["node".into(), "split".into()],
        ds.split
            .iter()
            .enumerate()
            .map(|(i, s)| vec![i.to_string(), s.to_string()]),
    )?;
    let flags_path = dir.join("flags.csv");
    match &ds.noisy {
        Some(flags) => write_csv(
            &flags_path,
            &["node".into(), "noisy".into()],
            flags
                .iter()
                .enumerate()
                .map(|(i, f)| vec![i.to_string(), u8::from(*f).to_string()]),
        )?,
        None if flags_path.exists() => {
            fs::remove_file(&flags_path).map_err(|e| LdtsError::io(&flags_path, e))?
        }
        None => {}
    }
    for rel in &ds.relations {
        write_csv(
            &dir.join(format!("edges_{}.csv", rel.name)),
            &["src".into(), "dst".into()],
            rel.edges
                .iter()
                .map(|(s, t)| vec![s.to_string(), t.to_string()]),
        )?;
        write_matrix(
            &dir.join(format!("nodes_{}.csv", rel.name)),
            &rel.source_features,
        )?;
    }
    Ok(())
}

fn read_records(path: &Path, expected_header: Option<&[&str]>) -> Result<Vec<csv::StringRecord>> {
    if !path.is_file() {
        return Err(LdtsError::format(path, "required file is missing"));
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    if let Some(expected) = expected_header {
        let header = reader.headers().map_err(|e| csv_error(path, e))?;
        if header.iter().ne(expected.iter().copied()) {
            return Err(LdtsError::format(
                path,
                format!(
                    "expected header {}, found {}",
                    expected.join(","),
                    header.iter().collect::<Vec<_>>().join(",")
                ),
            ));
        }
    }
    reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| csv_error(path, e))
}

fn parse_field<T: FromStr>(path: &Path, line: usize, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| LdtsError::format(path, format!("row {line}: cannot parse `{value}`: {e}")))
}

fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let records = read_records(path, None)?;
    let d = records.first().map_or(0, |r| r.len());
    let mut data = Vec::with_capacity(records.len() * d);
    for (i, rec) in records.iter().enumerate() {
        for v in rec.iter() {
            data.push(parse_field::<f64>(path, i + 1, v)?);
        }
    }
    Array2::from_shape_vec((records.len(), d), data)
        .map_err(|e| LdtsError::format(path, e.to_string()))
}

/// Reads a two-column `node,value` file whose nodes must be `0..n` in order.
fn read_node_column<T: FromStr>(path: &Path, header: [&str; 2]) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    read_records(path, Some(&header))?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let node: usize = parse_field(path, i + 1, &rec[0])?;
            if node != i {
                return Err(LdtsError::format(
                    path,
                    format!("row {}: expected node {i}, found {node}", i + 1),
                ));
            }
            parse_field(path, i + 1, &rec[1])
        })
        .collect()
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    if !dir.is_dir() {
        return Err(LdtsError::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
        ));
    }
    let features_path = dir.join("features.csv");
    let features = read_matrix(&features_path)?;
    let n = features.nrows();

    let labels_path = dir.join("labels.csv");
    let labels: Vec<usize> = read_node_column(&labels_path, ["node", "label"])?;
    if labels.len() != n {
        return Err(LdtsError::format(
            &labels_path,
            format!("{} labels but features.csv has {n} rows", labels.len()),
        ));
    }

    let split_path = dir.join("split.csv");
    let split: Vec<Split> = read_node_column(&split_path, ["node", "split"])?;
    if split.len() != n {
        return Err(LdtsError::format(
            &split_path,
            format!("{} split rows but features.csv has {n} rows", split.len()),
        ));
    }

    let flags_path = dir.join("flags.csv");
    let noisy = if flags_path.exists() {
        let raw: Vec<u8> = read_node_column(&flags_path, ["node", "noisy"])?;
        if raw.len() != n || raw.iter().any(|&f| f > 1) {
            return Err(LdtsError::format(
                &flags_path,
                format!("expected {n} rows of 0/1 flags"),
            ));
        }
        Some(raw.into_iter().map(|f| f == 1).collect())
    } else {
        None
    };

    let mut relation_names: Vec<String> = fs::read_dir(dir)
        .map_err(|e| LdtsError::io(dir, e))?
        .filter_map(|entry| entry.ok())
        .filter_map(|entry| {
            let name = entry.file_name().into_string().ok()?;
            Some(
                name.strip_prefix("edges_")?
                    .strip_suffix(".csv")?
                    .to_string(),
            )
        })
        .collect();
    relation_names.sort();

    let mut relations = Vec::with_capacity(relation_names.len());
    for name in relation_names {
        let edges_path = dir.join(format!("edges_{name}.csv"));
        let edges = read_records(&edges_path, Some(&["src", "dst"]))?
            .iter()
            .enumerate()
            .map(|(i, rec)| {
                Ok((
                    parse_field(&edges_path, i + 1, &rec[0])?,
                    parse_field(&edges_path, i + 1, &rec[1])?,
                ))
            })
            .collect::<Result<Vec<(usize, usize)>>>()?;
        let nodes_path = dir.join(format!("nodes_{name}.csv"));
        let source_features = read_matrix(&nodes_path)?;
        relations.push(Relation {
            name,
            source_features,
            edges,
        });
    }

    let class_count = labels.iter().max().map_or(0, |m| m + 1).max(2);
    let ds = Dataset {
        features,
        labels,
        class_count,
        relations,
        split,
        noisy,
    };
    ds.validate().map_err(|m| LdtsError::format(dir, m))?;
    Ok(ds)
}

/// Files a saved dataset consists of, relative to its directory.
pub fn dataset_files(ds: &Dataset) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = ["features.csv", "labels.csv", "split.csv"]
        .iter()
        .map(PathBuf::from)
        .collect();
    if ds.noisy.is_some() {
        files.push("flags.csv".into());
    }
    for rel in &ds.relations {
        files.push(format!("edges_{}.csv", rel.name).into());
        files.push(format!("nodes_{}.csv", rel.name).into());
    }
    files
}
