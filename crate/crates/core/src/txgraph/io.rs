//! Plain-text graph files.
//!
//! ```text
//! N nnz D
//! <row_ptr: N+1 integers>
//! <col_idx: nnz integers>
//! <values: nnz numbers>
//! <N lines of D numbers: node features>
//! ```
//!
//! Fields on a line are separated by single spaces; empty arrays are empty lines.

use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use super::{AddressIndex, GraphError, SparseAdjacency};
use crate::dense::DenseMatrix;
use crate::scalar::Scalar;

fn join<V: std::fmt::Display>(items: &[V]) -> String {
    let mut s = String::new();
    for (k, v) in items.iter().enumerate() {
        if k > 0 {
            s.push(' ');
        }
        write!(s, "{v}").expect("write to String");
    }
    s
}

pub fn write_graph_text<T: Scalar>(
    adj: &SparseAdjacency<T>,
    features: &DenseMatrix<T>,
) -> Result<String, GraphError> {
    if features.rows() != adj.n_nodes() {
        return Err(GraphError::Shape(crate::dense::ShapeError::new(
            "write_graph_text",
            format!("{} nodes vs {} feature rows", adj.n_nodes(), features.rows()),
        )));
    }
    let mut out = String::new();
    writeln!(out, "{} {} {}", adj.n_nodes(), adj.nnz(), features.cols()).expect("write to String");
    writeln!(out, "{}", join(adj.row_ptr())).expect("write to String");
    writeln!(out, "{}", join(adj.col_idx())).expect("write to String");
    writeln!(out, "{}", join(adj.values())).expect("write to String");
    for i in 0..features.rows() {
        writeln!(out, "{}", join(features.row(i))).expect("write to String");
    }
    Ok(out)
}

fn parse_line<V: FromStr>(line: Option<(usize, &str)>, expected: usize, what: &str) -> Result<Vec<V>, GraphError> {
    let (no, text) = line.ok_or_else(|| GraphError::Format { line: 0, message: format!("missing {what}") })?;
    let bad = |message: String| GraphError::Format { line: no + 1, message };
    let vals: Vec<V> = text
        .split_whitespace()
        .map(|t| t.parse::<V>().map_err(|_| bad(format!("cannot parse {t:?} in {what}"))))
        .collect::<Result<_, _>>()?;
    if vals.len() != expected {
        return Err(bad(format!("{what}: expected {expected} values, got {}", vals.len())));
    }
    Ok(vals)
}

pub fn read_graph_text<T: Scalar>(text: &str) -> Result<(SparseAdjacency<T>, DenseMatrix<T>), GraphError> {
    let mut lines = text.lines().enumerate();
    let header: Vec<usize> = parse_line(lines.next(), 3, "header")?;
    let (n, nnz, d) = (header[0], header[1], header[2]);
    let row_ptr = parse_line(lines.next(), n + 1, "row_ptr")?;
    let col_idx = parse_line(lines.next(), nnz, "col_idx")?;
    let values = parse_line(lines.next(), nnz, "values")?;
    let adj = SparseAdjacency::from_csr_parts(n, row_ptr, col_idx, values)?;
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        data.extend(parse_line::<T>(lines.next(), d, "feature row")?);
    }
    let features = DenseMatrix::from_vec(n, d, data).map_err(GraphError::Shape)?;
    Ok((adj, features))
}

/// One JSON object per edge: `{"src","dst","src_id","dst_id","weight"}`.
pub fn write_edge_ndjson<T: Scalar, W: Write>(
    adj: &SparseAdjacency<T>,
    index: &AddressIndex,
    mut out: W,
) -> std::io::Result<()> {
    for (i, j, w) in adj.triplets() {
        let obj = serde_json::json!({
            "src": index.address_of(i).map(|a| a.to_string()),
            "dst": index.address_of(j).map(|a| a.to_string()),
            "src_id": i,
            "dst_id": j,
            "weight": w.to_f64_lossy(),
        });
        writeln!(out, "{obj}")?;
    }
    Ok(())
}
