//! CSV outputs. Every file starts with the resolved config as `#` comments.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use blockgcl_core::{DenseMatrix, ProbeResult, RunRecord};

/// Written where a MAD value is undefined (no eligible node).
pub const UNDEFINED: &str = "NA";

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED.to_string(), |x| x.to_string())
}

pub fn write_csv(path: &Path, header: &str, columns: &str, rows: &[String]) -> std::io::Result<()> {
    let mut s = String::with_capacity(header.len() + 32 * rows.len());
    s.push_str(header);
    s.push_str(columns);
    s.push('\n');
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    fs::write(path, s)
}

pub fn loss_rows(record: &RunRecord) -> Vec<String> {
    record
        .loss_rows()
        .map(|(e, b, l, ms)| format!("{e},{b},{l},{ms}"))
        .collect()
}

/// Rows `layer,mad` with layers numbered from 1.
pub fn mad_rows(mad: &[Option<f64>]) -> Vec<String> {
    mad.iter()
        .enumerate()
        .map(|(l, v)| format!("{},{}", l + 1, opt(*v)))
        .collect()
}

pub fn probe_rows(probe: &ProbeResult) -> Vec<String> {
    probe
        .accuracies
        .iter()
        .enumerate()
        .map(|(r, a)| format!("{r},{a}"))
        .collect()
}

pub fn embedding_columns(dim: usize) -> String {
    let mut s = String::from("node");
    for d in 0..dim {
        let _ = write!(s, ",dim{d}");
    }
    s
}

pub fn embedding_rows(z: &DenseMatrix<f64>) -> Vec<String> {
    (0..z.rows())
        .map(|i| {
            let mut s = i.to_string();
            for v in z.row(i) {
                let _ = write!(s, ",{v}");
            }
            s
        })
        .collect()
}

/// Reads an embedding CSV written by [`embedding_rows`]; `#` lines are skipped.
pub fn read_embeddings(path: &Path) -> anyhow::Result<DenseMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut header_seen = false;
    for (idx, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            header_seen = true;
            anyhow::ensure!(line.starts_with("node"), "{}:{}: expected `node,dim0,..` header", path.display(), idx + 1);
            continue;
        }
        let mut fields = line.split(',');
        let node: usize = fields
            .next()
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|e| anyhow::anyhow!("{}:{}: bad node id: {e}", path.display(), idx + 1))?;
        anyhow::ensure!(node == rows.len(), "{}:{}: nodes must be listed in order", path.display(), idx + 1);
        let values = fields
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| anyhow::anyhow!("{}:{}: {e}", path.display(), idx + 1))?;
        rows.push(values);
    }
    Ok(DenseMatrix::from_rows(&rows)?)
}
