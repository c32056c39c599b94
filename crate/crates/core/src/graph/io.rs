//! On-disk dataset layout: a directory of four UTF-8 CSV files.
//!
//! ```text
//! edges.csv     src,dst      one row per directed entry; reversed duplicates allowed
//! features.csv  (no header)  row i holds the F feature values of node i
//! labels.csv    node,label   one row per node
//! splits.csv    node,split   optional; split is train | val | test
//! ```
//!
//! When `splits.csv` is absent, a seeded 1:1:8 random split is assigned.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{make_random_split, GraphDataset, Split};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub const EDGES_FILE: &str = "edges.csv";
pub const FEATURES_FILE: &str = "features.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const SPLITS_FILE: &str = "splits.csv";

/// Seed of the fallback split used when a directory has no `splits.csv`.
pub const DEFAULT_SPLIT_SEED: u64 = 0;
pub const DEFAULT_SPLIT_RATIOS: (f64, f64, f64) = (0.1, 0.1, 0.8);

struct CsvFile {
    path: PathBuf,
    text: String,
}

impl CsvFile {
    fn open(dir: &Path, name: &str) -> Result<Self> {
        let path = dir.join(name);
        if !path.is_file() {
            return Err(Error::MissingFile(path));
        }
        let text = fs::read_to_string(&path)?;
        Ok(Self { path, text })
    }

    /// Non-blank lines with 1-based line numbers; the header, when expected,
    /// is checked and skipped.
    fn rows(&self, header: Option<&str>) -> Result<Vec<(usize, Vec<&str>)>> {
        let mut out = Vec::new();
        let mut lines = self.text.lines().enumerate().map(|(i, l)| (i + 1, l));
        if let Some(want) = header {
            match lines.next() {
                Some((_, got)) if got.trim() == want => {}
                Some((no, got)) => {
                    return Err(self.err(no, format!("expected header {want:?}, found {got:?}")))
                }
                None => return Err(self.err(1, format!("empty file, expected header {want:?}"))),
            }
        }
        for (no, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            out.push((no, line.split(',').map(str::trim).collect()));
        }
        Ok(out)
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::parse(&self.path, line, msg)
    }
}

fn parse_index(file: &CsvFile, line: usize, field: &str, what: &str) -> Result<usize> {
    field
        .parse::<usize>()
        .map_err(|_| file.err(line, format!("invalid {what} {field:?}")))
}

fn expect_fields(file: &CsvFile, line: usize, fields: &[&str], n: usize) -> Result<()> {
    if fields.len() != n {
        return Err(file.err(
            line,
            format!("expected {n} fields, found {}", fields.len()),
        ));
    }
    Ok(())
}

/// Reads and validates a dataset directory.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<GraphDataset> {
    let dir = dir.as_ref();

    let features_file = CsvFile::open(dir, FEATURES_FILE)?;
    let mut data = Vec::new();
    let mut width = None;
    let mut n = 0;
    for (no, fields) in features_file.rows(None)? {
        if let Some(w) = width {
            expect_fields(&features_file, no, &fields, w)?;
        } else {
            width = Some(fields.len());
        }
        for f in fields {
            let v: f64 = f
                .parse()
                .map_err(|_| features_file.err(no, format!("invalid feature value {f:?}")))?;
            if !v.is_finite() {
                return Err(features_file.err(no, format!("non-finite feature value {f:?}")));
            }
            data.push(v);
        }
        n += 1;
    }
    let features = DenseMatrix::from_vec(n, width.unwrap_or(0), data)?;

    let labels_file = CsvFile::open(dir, LABELS_FILE)?;
    let mut labels = vec![None; n];
    for (no, fields) in labels_file.rows(Some("node,label"))? {
        expect_fields(&labels_file, no, &fields, 2)?;
        let node = parse_index(&labels_file, no, fields[0], "node id")?;
        let label = parse_index(&labels_file, no, fields[1], "label")?;
        let slot = labels
            .get_mut(node)
            .ok_or_else(|| labels_file.err(no, format!("node id {node} out of range (N = {n})")))?;
        if slot.replace(label).is_some() {
            return Err(labels_file.err(no, format!("duplicate label for node {node}")));
        }
    }
    let labels = labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            l.ok_or_else(|| labels_file.err(0, format!("node {i} has no label")))
        })
        .collect::<Result<Vec<_>>>()?;

    let edges_file = CsvFile::open(dir, EDGES_FILE)?;
    let mut edges = Vec::new();
    for (no, fields) in edges_file.rows(Some("src,dst"))? {
        expect_fields(&edges_file, no, &fields, 2)?;
        let u = parse_index(&edges_file, no, fields[0], "node id")?;
        let v = parse_index(&edges_file, no, fields[1], "node id")?;
        for id in [u, v] {
            if id >= n {
                return Err(edges_file.err(no, format!("node id {id} out of range (N = {n})")));
            }
        }
        // Self-loops are implied by normalization and never stored.
        if u != v {
            edges.push((u, v));
        }
    }

    let mut g = GraphDataset::without_split(features, labels, edges)?;

    let split_path = dir.join(SPLITS_FILE);
    if split_path.is_file() {
        let splits_file = CsvFile::open(dir, SPLITS_FILE)?;
        let mut split = vec![None; n];
        for (no, fields) in splits_file.rows(Some("node,split"))? {
            expect_fields(&splits_file, no, &fields, 2)?;
            let node = parse_index(&splits_file, no, fields[0], "node id")?;
            let tag: Split = fields[1].parse().map_err(|e: String| splits_file.err(no, e))?;
            let slot = split.get_mut(node).ok_or_else(|| {
                splits_file.err(no, format!("node id {node} out of range (N = {n})"))
            })?;
            if slot.replace(tag).is_some() {
                return Err(splits_file.err(no, format!("duplicate split for node {node}")));
            }
        }
        let split = split
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| splits_file.err(0, format!("node {i} has no split"))))
            .collect::<Result<Vec<_>>>()?;
        g.set_split(split);
        if let Some(c) = g.classes_missing_from_train().first() {
            return Err(splits_file.err(0, format!("class {c} has no node in the train split")));
        }
        Ok(g)
    } else {
        make_random_split(&g, DEFAULT_SPLIT_RATIOS, DEFAULT_SPLIT_SEED)
    }
}

/// Writes the dataset in the layout read by [`load_dataset`], including `splits.csv`.
pub fn save_dataset(g: &GraphDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;

    let mut w = BufWriter::new(fs::File::create(dir.join(EDGES_FILE))?);
    writeln!(w, "src,dst")?;
    for &(u, v) in g.edges() {
        writeln!(w, "{u},{v}")?;
    }
    w.flush()?;

    let mut w = BufWriter::new(fs::File::create(dir.join(FEATURES_FILE))?);
    for i in 0..g.num_nodes() {
        let row = g.features().row(i);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                w.write_all(b",")?;
            }
            // `{}` on f64 prints the shortest representation that parses back exactly.
            write!(w, "{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;

    let mut w = BufWriter::new(fs::File::create(dir.join(LABELS_FILE))?);
    writeln!(w, "node,label")?;
    for (i, y) in g.labels().iter().enumerate() {
        writeln!(w, "{i},{y}")?;
    }
    w.flush()?;

    let mut w = BufWriter::new(fs::File::create(dir.join(SPLITS_FILE))?);
    writeln!(w, "node,split")?;
    for (i, s) in g.split().iter().enumerate() {
        writeln!(w, "{i},{s}")?;
    }
    w.flush()?;
    Ok(())
}
