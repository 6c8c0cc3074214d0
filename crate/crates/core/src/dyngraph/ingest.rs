use std::io::{BufRead, Write};

use indexmap::IndexSet;

use super::graph::{DynamicGraph, VertexId};
use crate::error::ParseError;

/// A graph read from an edge-list file, with the original labels kept
/// alongside the dense ids.
#[derive(Clone, Debug, Default)]
pub struct IngestedGraph {
    pub graph: DynamicGraph,
    pub labels: Vec<String>,
    /// Lines dropped as duplicates or self-loops.
    pub dropped: usize,
}

#[derive(Clone, Debug, Default)]
pub struct LabelMap {
    labels: IndexSet<String>,
}

impl LabelMap {
    pub fn id_of(&mut self, label: &str) -> VertexId {
        if let Some(i) = self.labels.get_index_of(label) {
            return i as VertexId;
        }
        self.labels.insert(label.to_owned());
        (self.labels.len() - 1) as VertexId
    }

    pub fn get(&self, label: &str) -> Option<VertexId> {
        self.labels.get_index_of(label).map(|i| i as VertexId)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn from_labels(labels: impl IntoIterator<Item = String>) -> Self {
        Self {
            labels: labels.into_iter().collect(),
        }
    }

    pub fn label(&self, id: VertexId) -> Option<&str> {
        self.labels.get_index(id as usize).map(String::as_str)
    }

    pub fn into_labels(self) -> Vec<String> {
        self.labels.into_iter().collect()
    }
}

/// Splits a non-comment line into its two endpoint tokens.
fn edge_tokens(line: &str, lineno: usize) -> Result<Option<(&str, &str)>, ParseError> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
        return Ok(None);
    }
    let mut it = trimmed.split_whitespace();
    match (it.next(), it.next()) {
        (Some(u), Some(v)) => Ok(Some((u, v))),
        _ => Err(ParseError::Malformed {
            line: lineno,
            message: format!("expected `u v`, got {trimmed:?}"),
        }),
    }
}

/// Reads a whitespace-separated edge list. Comment lines start with `#`;
/// duplicate edges and self-loops are dropped.
pub fn read_edge_list<R: BufRead>(reader: R) -> Result<IngestedGraph, ParseError> {
    let mut labels = LabelMap::default();
    let mut graph = DynamicGraph::new();
    let mut dropped = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let Some((a, b)) = edge_tokens(&line, i + 1)? else {
            continue;
        };
        let u = labels.id_of(a);
        let v = labels.id_of(b);
        graph.ensure_vertex(u.max(v));
        if u == v || graph.has_edge(u, v) {
            dropped += 1;
            continue;
        }
        graph.insert_edge(u, v).expect("checked above");
    }
    Ok(IngestedGraph {
        graph,
        labels: labels.into_labels(),
        dropped,
    })
}

/// Writes the graph as a dense-id edge list.
pub fn write_edge_list<W: Write>(graph: &DynamicGraph, mut out: W) -> std::io::Result<()> {
    let mut edges: Vec<_> = graph.edges().collect();
    edges.sort_unstable();
    writeln!(out, "# n={} m={}", graph.n(), graph.m())?;
    for e in edges {
        writeln!(out, "{} {}", e.lo(), e.hi())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snap_style_file() {
        let text = "# comment\n10 20\n20 10\n20 30\n30 30\n\n10\t30\n";
        let g = read_edge_list(text.as_bytes()).unwrap();
        assert_eq!(g.graph.n(), 3);
        assert_eq!(g.graph.m(), 3);
        assert_eq!(g.dropped, 2);
        assert_eq!(g.labels, vec!["10", "20", "30"]);
    }

    #[test]
    fn malformed_line() {
        let err = read_edge_list("1 2\n3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, ParseError::Malformed { line: 2, .. }));
    }

    #[test]
    fn write_then_read() {
        let g = DynamicGraph::from_edges(4, [(0, 1), (2, 3), (1, 2)]);
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let back = read_edge_list(buf.as_slice()).unwrap();
        assert_eq!(back.graph.m(), 3);
    }
}
