//! Graph file formats.
//!
//! JSON:
//!
//! ```text
//! {"n": 12, "observed_red": [0, 1], "edges": [[0, 1, 2], [0, 2, 2], ...]}
//! ```
//!
//! with edge attributes 1 (green) or 2 (red). Matrix text: a header line
//! `observed_red: <ids>` followed by the strict upper triangle of the
//! attribute matrix, row `i` holding the entries for columns `i+1..n`.
//! Lines starting with `#` are comments.
//!
//! Ids are 0-based unless `one_based` is set, in which case both formats read
//! and write 1-based ids.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AttributedGraph, EdgeAttr};
use crate::error::{Error, Result};

/// The example graph of the 12-vertex illustration (1-based ids).
pub const TABLE1_MATRIX: &str = "\
observed_red: 1 2
2 2 0 2 2 0 1 0 1 1 0
  0 0 0 0 0 0 0 0 0 1
    2 0 0 0 1 2 2 0 1
      0 0 1 0 1 1 0 0
        2 1 0 1 0 1 0
          0 0 0 0 0 0
            0 0 0 0 2
              1 0 0 0
                1 0 1
                  0 1
                    0
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphFormat {
    Json,
    Matrix,
}

impl GraphFormat {
    /// `.json` files are JSON, everything else is matrix text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => GraphFormat::Json,
            _ => GraphFormat::Matrix,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonGraph {
    n: usize,
    observed_red: Vec<usize>,
    edges: Vec<[usize; 3]>,
}

/// Ground-truth colouring kept next to a simulated graph, never inside it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub n: usize,
    pub red: Vec<usize>,
}

fn shift_in(id: usize, one_based: bool, what: &str) -> Result<usize> {
    if one_based {
        id.checked_sub(1)
            .ok_or_else(|| Error::InvalidGraph(format!("{what}: id 0 in a 1-based file")))
    } else {
        Ok(id)
    }
}

fn shift_out(id: usize, one_based: bool) -> usize {
    if one_based { id + 1 } else { id }
}

pub fn read_json_str(text: &str, one_based: bool) -> Result<AttributedGraph> {
    let raw: JsonGraph = serde_json::from_str(text)
        .map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
    let observed = raw
        .observed_red
        .iter()
        .map(|&v| shift_in(v, one_based, "observed_red"))
        .collect::<Result<Vec<_>>>()?;
    let mut graph = AttributedGraph::new(raw.n, &observed)?;
    for (k, &[u, v, code]) in raw.edges.iter().enumerate() {
        let what = format!("edges[{k}]");
        let attr = match EdgeAttr::from_code(code.min(u8::MAX as usize) as u8) {
            Some(a) if a.is_edge() => a,
            _ => {
                return Err(Error::InvalidGraph(format!(
                    "{what}: attribute must be 1 (green) or 2 (red), got {code}"
                )));
            }
        };
        let (u, v) = (shift_in(u, one_based, &what)?, shift_in(v, one_based, &what)?);
        if u < graph.n() && v < graph.n() && graph.edge(u, v).is_edge() {
            return Err(Error::InvalidGraph(format!("{what}: duplicate edge ({u}, {v})")));
        }
        graph.set_edge(u, v, attr).map_err(|e| Error::InvalidGraph(format!("{what}: {e}")))?;
    }
    Ok(graph)
}

pub fn write_json_string(graph: &AttributedGraph, one_based: bool) -> String {
    let raw = JsonGraph {
        n: graph.n(),
        observed_red: graph.observed_red().iter().map(|&v| shift_out(v, one_based)).collect(),
        edges: graph
            .edge_list()
            .into_iter()
            .map(|(u, v, a)| [shift_out(u, one_based), shift_out(v, one_based), a.code() as usize])
            .collect(),
    };
    let mut out = serde_json::to_string(&raw).expect("graph serialisation cannot fail");
    out.push('\n');
    out
}

pub fn read_matrix_str(text: &str, one_based: bool) -> Result<AttributedGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) =
        lines.next().ok_or(Error::Parse { line: 1, message: "empty graph file".into() })?;
    let ids = header.strip_prefix("observed_red:").ok_or_else(|| Error::Parse {
        line: header_line,
        message: "expected header `observed_red: <ids>`".into(),
    })?;
    let mut observed = Vec::new();
    for tok in ids.split_whitespace() {
        let id: usize = tok.parse().map_err(|_| Error::Parse {
            line: header_line,
            message: format!("invalid vertex id `{tok}`"),
        })?;
        observed.push(
            shift_in(id, one_based, "observed_red")
                .map_err(|e| Error::Parse { line: header_line, message: e.to_string() })?,
        );
    }

    let mut rows: Vec<(usize, Vec<EdgeAttr>)> = Vec::new();
    for (line_no, line) in lines {
        let mut row = Vec::new();
        for tok in line.split_whitespace() {
            let attr = match tok {
                "0" => EdgeAttr::Absent,
                "1" => EdgeAttr::Green,
                "2" => EdgeAttr::Red,
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("matrix entries must be 0, 1 or 2, got `{tok}`"),
                    });
                }
            };
            row.push(attr);
        }
        rows.push((line_no, row));
    }
    let n = rows.first().map_or(1, |(_, r)| r.len() + 1);
    if rows.len() + 1 != n {
        let line = rows.last().map_or(header_line, |(l, _)| *l);
        return Err(Error::Parse {
            line,
            message: format!("expected {} matrix rows for n = {n}, found {}", n - 1, rows.len()),
        });
    }
    let mut graph = AttributedGraph::new(n, &observed)
        .map_err(|e| Error::Parse { line: header_line, message: e.to_string() })?;
    for (i, (line_no, row)) in rows.iter().enumerate() {
        if row.len() != n - 1 - i {
            return Err(Error::Parse {
                line: *line_no,
                message: format!("row {} must have {} entries, found {}", i + 1, n - 1 - i, row.len()),
            });
        }
        for (k, &attr) in row.iter().enumerate() {
            graph.set_edge(i, i + 1 + k, attr)?;
        }
    }
    Ok(graph)
}

pub fn write_matrix_string(graph: &AttributedGraph, one_based: bool) -> String {
    let mut out = String::from("observed_red:");
    for &v in graph.observed_red() {
        let _ = write!(out, " {}", shift_out(v, one_based));
    }
    out.push('\n');
    let n = graph.n();
    for i in 0..n.saturating_sub(1) {
        out.push_str(&"  ".repeat(i));
        let row: Vec<String> =
            (i + 1..n).map(|j| graph.edge(i, j).code().to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_graph(path: &Path, format: GraphFormat, one_based: bool) -> Result<AttributedGraph> {
    let text = std::fs::read_to_string(path)?;
    match format {
        GraphFormat::Json => read_json_str(&text, one_based),
        GraphFormat::Matrix => read_matrix_str(&text, one_based),
    }
}

pub fn write_graph(
    path: &Path,
    graph: &AttributedGraph,
    format: GraphFormat,
    one_based: bool,
) -> Result<()> {
    let text = match format {
        GraphFormat::Json => write_json_string(graph, one_based),
        GraphFormat::Matrix => write_matrix_string(graph, one_based),
    };
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_truth(path: &Path, one_based: bool) -> Result<GroundTruth> {
    let text = std::fs::read_to_string(path)?;
    let mut truth: GroundTruth = serde_json::from_str(&text)
        .map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
    truth.red = truth
        .red
        .iter()
        .map(|&v| shift_in(v, one_based, "red"))
        .collect::<Result<Vec<_>>>()?;
    Ok(truth)
}

pub fn write_truth(path: &Path, truth: &GroundTruth, one_based: bool) -> Result<()> {
    let shifted = GroundTruth {
        n: truth.n,
        red: truth.red.iter().map(|&v| shift_out(v, one_based)).collect(),
    };
    let mut text = serde_json::to_string(&shifted)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
