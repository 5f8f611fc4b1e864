use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseAdjacency;
use crate::linalg::DenseMatrix;

pub const META_FILE: &str = "meta.json";
pub const FEATURES_FILE: &str = "features.csv";
pub const EDGES_FILE: &str = "edges.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const SPLIT_FILE: &str = "split.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub n: usize,
    pub d0: usize,
    pub c: usize,
    pub dataset: String,
}

/// The standard train/validation/test index lists shipped with a dataset.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// A citation graph: features, structure, labels and the fixed split.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphBundle {
    pub dataset: String,
    /// `d0 x n`, one column per node.
    pub features: DenseMatrix,
    pub adjacency: SparseAdjacency,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub fixed_split: FixedSplit,
}

impl GraphBundle {
    /// Validates shapes, label ranges and split disjointness.
    pub fn new(
        dataset: impl Into<String>,
        features: DenseMatrix,
        adjacency: SparseAdjacency,
        labels: Vec<usize>,
        num_classes: usize,
        fixed_split: FixedSplit,
    ) -> Result<Self> {
        let n = adjacency.n();
        if features.cols() != n {
            return Err(Error::usage(format!(
                "features have {} columns but the graph has {n} nodes",
                features.cols()
            )));
        }
        if labels.len() != n {
            return Err(Error::usage(format!("{} labels for {n} nodes", labels.len())));
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= num_classes) {
            return Err(Error::usage(format!(
                "node {i} has label {y}, outside 0..{num_classes}"
            )));
        }
        let mut owner = vec![None::<&str>; n];
        for (name, list) in [
            ("train", &fixed_split.train),
            ("val", &fixed_split.val),
            ("test", &fixed_split.test),
        ] {
            for &i in list {
                if i >= n {
                    return Err(Error::usage(format!("{name} index {i} out of range for {n} nodes")));
                }
                if let Some(prev) = owner[i] {
                    return Err(Error::usage(format!(
                        "node {i} appears in both {prev} and {name} lists"
                    )));
                }
                owner[i] = Some(name);
            }
        }
        Ok(GraphBundle {
            dataset: dataset.into(),
            features,
            adjacency,
            labels,
            num_classes,
            fixed_split,
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.n()
    }

    pub fn d0(&self) -> usize {
        self.features.rows()
    }

    pub fn meta(&self) -> BundleMeta {
        BundleMeta {
            n: self.n(),
            d0: self.d0(),
            c: self.num_classes,
            dataset: self.dataset.clone(),
        }
    }

    /// Scales every node's feature vector to unit 1-norm; all-zero vectors
    /// stay zero.
    pub fn row_normalize_features(&mut self) {
        row_normalize(&mut self.features);
    }
}

pub(crate) fn row_normalize(features: &mut DenseMatrix) {
    let (d, n) = features.shape();
    let mut norms = vec![0.0; n];
    for r in 0..d {
        for (s, v) in norms.iter_mut().zip(features.row(r)) {
            *s += v.abs();
        }
    }
    for r in 0..d {
        for (v, &s) in features.row_mut(r).iter_mut().zip(&norms) {
            if s > 0.0 {
                *v /= s;
            }
        }
    }
}

fn load_error(file: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Load {
        file: file.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-empty lines with their 1-based line numbers.
fn csv_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn parse_field<T: std::str::FromStr>(file: &Path, line: usize, field: &str, what: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| load_error(file, line, format!("cannot parse {what} from {field:?}")))
}

fn parse_node_id(file: &Path, line: usize, field: &str, n: usize, seen: &mut [bool]) -> Result<usize> {
    let id: usize = parse_field(file, line, field, "node id")?;
    if id >= n {
        return Err(load_error(file, line, format!("node id {id} out of range for {n} nodes")));
    }
    if std::mem::replace(&mut seen[id], true) {
        return Err(load_error(file, line, format!("node id {id} listed twice")));
    }
    Ok(id)
}

fn check_all_seen(file: &Path, seen: &[bool]) -> Result<()> {
    match seen.iter().position(|s| !s) {
        Some(missing) => Err(load_error(file, 0, format!("no entry for node {missing}"))),
        None => Ok(()),
    }
}

/// Loads a bundle directory and row-normalizes its features.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<GraphBundle> {
    let dir = dir.as_ref();
    let meta_path = dir.join(META_FILE);
    let meta: BundleMeta = serde_json::from_str(&read(&meta_path)?).map_err(|e| {
        load_error(&meta_path, e.line(), format!("invalid metadata: {e}"))
    })?;
    let BundleMeta { n, d0, c, .. } = meta;

    let path = dir.join(FEATURES_FILE);
    let text = read(&path)?;
    let mut features = DenseMatrix::zeros(d0, n);
    let mut seen = vec![false; n];
    for (line, l) in csv_lines(&text) {
        let mut fields = l.split(',');
        let id = parse_node_id(&path, line, fields.next().unwrap_or(""), n, &mut seen)?;
        let mut count = 0;
        for (r, field) in fields.enumerate() {
            if r >= d0 {
                return Err(load_error(&path, line, format!("more than {d0} feature values")));
            }
            let v: f64 = parse_field(&path, line, field, "feature value")?;
            if !v.is_finite() {
                return Err(load_error(&path, line, "non-finite feature value"));
            }
            features.set(r, id, v);
            count += 1;
        }
        if count != d0 {
            return Err(load_error(&path, line, format!("expected {d0} feature values, found {count}")));
        }
    }
    check_all_seen(&path, &seen)?;

    let path = dir.join(EDGES_FILE);
    let text = read(&path)?;
    let mut edges = Vec::new();
    for (line, l) in csv_lines(&text) {
        let fields: Vec<&str> = l.split(',').collect();
        if fields.len() != 2 {
            return Err(load_error(&path, line, "expected `src,dst`"));
        }
        let s: usize = parse_field(&path, line, fields[0], "source node")?;
        let t: usize = parse_field(&path, line, fields[1], "target node")?;
        if s >= n || t >= n {
            return Err(load_error(&path, line, format!("edge ({s}, {t}) out of range for {n} nodes")));
        }
        edges.push((s, t));
    }
    let adjacency = SparseAdjacency::new(n, edges)?;

    let path = dir.join(LABELS_FILE);
    let text = read(&path)?;
    let mut labels = vec![0; n];
    let mut seen = vec![false; n];
    for (line, l) in csv_lines(&text) {
        let fields: Vec<&str> = l.split(',').collect();
        if fields.len() != 2 {
            return Err(load_error(&path, line, "expected `node_id,class_index`"));
        }
        let id = parse_node_id(&path, line, fields[0], n, &mut seen)?;
        let y: usize = parse_field(&path, line, fields[1], "class index")?;
        if y >= c {
            return Err(load_error(&path, line, format!("label {y} out of range for {c} classes")));
        }
        labels[id] = y;
    }
    check_all_seen(&path, &seen)?;

    let path = dir.join(SPLIT_FILE);
    let split: FixedSplit = serde_json::from_str(&read(&path)?)
        .map_err(|e| load_error(&path, e.line(), format!("invalid split: {e}")))?;

    let mut bundle = GraphBundle::new(meta.dataset, features, adjacency, labels, c, split)
        .map_err(|e| load_error(&path, 0, e.to_string()))?;
    bundle.row_normalize_features();
    Ok(bundle)
}

fn create(path: PathBuf) -> Result<(PathBuf, BufWriter<fs::File>)> {
    let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    Ok((path, BufWriter::new(f)))
}

/// Writes `bundle` in the directory layout read by [`load_bundle`]. Values use
/// the shortest decimal form that parses back to the same `f64`.
pub fn save_bundle(bundle: &GraphBundle, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |e| Error::io(p, e)
    };

    let (path, mut w) = create(dir.join(META_FILE))?;
    serde_json::to_writer(&mut w, &bundle.meta()).map_err(|e| Error::io(&path, e.into()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(io(&path))?;

    let (path, mut w) = create(dir.join(FEATURES_FILE))?;
    for i in 0..bundle.n() {
        let mut line = i.to_string();
        for r in 0..bundle.d0() {
            line.push(',');
            line.push_str(&bundle.features.get(r, i).to_string());
        }
        writeln!(w, "{line}").map_err(io(&path))?;
    }
    w.flush().map_err(io(&path))?;

    let (path, mut w) = create(dir.join(EDGES_FILE))?;
    for (i, j) in bundle.adjacency.edges() {
        writeln!(w, "{i},{j}").map_err(io(&path))?;
    }
    w.flush().map_err(io(&path))?;

    let (path, mut w) = create(dir.join(LABELS_FILE))?;
    for (i, y) in bundle.labels.iter().enumerate() {
        writeln!(w, "{i},{y}").map_err(io(&path))?;
    }
    w.flush().map_err(io(&path))?;

    let (path, mut w) = create(dir.join(SPLIT_FILE))?;
    serde_json::to_writer(&mut w, &bundle.fixed_split).map_err(|e| Error::io(&path, e.into()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(io(&path))?;
    Ok(())
}
