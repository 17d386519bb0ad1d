//! Text formats for edges, attributes, labels and the node id map.
//!
//! Edge file: `src dst [weight]` per line, whitespace separated, `#` comments.
//! Attribute file: header `num_nodes D`, then either sparse `row col value`
//! triplets or the keyword `dense` followed by comma-separated rows (`D`
//! values, or a node id followed by `D` values).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use log::warn;

use super::{AttributedGraph, Edge, EdgeSet, NodeIds, SparseRows};
use crate::error::{Error, Result};

/// Edge as read from disk, before node ids are resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct RawEdge {
    pub src: String,
    pub dst: String,
    pub weight: f64,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RawAttributes {
    Sparse {
        num_nodes: usize,
        dim: usize,
        triplets: Vec<(String, usize, f64)>,
    },
    Dense {
        num_nodes: usize,
        dim: usize,
        rows: Vec<(Option<String>, Vec<f64>)>,
    },
}

impl RawAttributes {
    fn num_nodes(&self) -> usize {
        match self {
            RawAttributes::Sparse { num_nodes, .. } | RawAttributes::Dense { num_nodes, .. } => *num_nodes,
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

/// Significant lines: trimmed, comments stripped, blanks skipped; 1-based line numbers.
fn content_lines<'a, R: Read + 'a>(reader: R, path: &'a Path) -> impl Iterator<Item = Result<(usize, String)>> + 'a {
    BufReader::new(reader)
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| match line {
            Err(e) => Some(Err(Error::io(path, e))),
            Ok(l) => {
                let body = l.split('#').next().unwrap_or("").trim();
                (!body.is_empty()).then(|| Ok((i + 1, body.to_string())))
            }
        })
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

fn parse_f64(path: &Path, line: usize, tok: &str, what: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("cannot parse {what} {tok:?} as a number")))
}

fn parse_usize(path: &Path, line: usize, tok: &str, what: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| parse_err(path, line, format!("cannot parse {what} {tok:?} as a nonnegative integer")))
}

pub fn parse_edges<R: Read>(reader: R, path: &Path) -> Result<Vec<RawEdge>> {
    let mut out = Vec::new();
    for item in content_lines(reader, path) {
        let (line, body) = item?;
        let toks: Vec<&str> = body.split_whitespace().collect();
        let weight = match toks.len() {
            2 => 1.0,
            3 => parse_f64(path, line, toks[2], "weight")?,
            n => return Err(parse_err(path, line, format!("expected `src dst [weight]`, found {n} fields"))),
        };
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::validation(format!(
                "{}:{line}: edge weight {weight} must be positive",
                path.display()
            )));
        }
        out.push(RawEdge { src: toks[0].to_string(), dst: toks[1].to_string(), weight, line });
    }
    Ok(out)
}

pub fn parse_attributes<R: Read>(reader: R, path: &Path) -> Result<RawAttributes> {
    let mut lines = content_lines(reader, path);
    let (hline, header) = lines
        .next()
        .transpose()?
        .ok_or_else(|| parse_err(path, 1, "missing `num_nodes D` header"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 2 {
        return Err(parse_err(path, hline, "header must be `num_nodes D`"));
    }
    let num_nodes = parse_usize(path, hline, h[0], "num_nodes")?;
    let dim = parse_usize(path, hline, h[1], "D")?;
    if dim == 0 {
        return Err(parse_err(path, hline, "attribute dimension D must be positive"));
    }

    let mut rest = lines.peekable();
    let dense = matches!(rest.peek(), Some(Ok((_, l))) if l.eq_ignore_ascii_case("dense"));
    if dense {
        rest.next();
        let mut rows = Vec::new();
        for item in rest {
            let (line, body) = item?;
            let toks: Vec<&str> = body.split(',').map(str::trim).collect();
            let (id, vals) = if toks.len() == dim {
                (None, &toks[..])
            } else if toks.len() == dim + 1 {
                (Some(toks[0].to_string()), &toks[1..])
            } else {
                return Err(parse_err(
                    path,
                    line,
                    format!("dense row has {} fields, expected {dim} (or an id plus {dim})", toks.len()),
                ));
            };
            let vals = vals
                .iter()
                .map(|t| parse_f64(path, line, t, "attribute value"))
                .collect::<Result<Vec<_>>>()?;
            rows.push((id, vals));
        }
        if rows.len() != num_nodes {
            return Err(Error::validation(format!(
                "{}: header declares {num_nodes} nodes but {} dense rows follow",
                path.display(),
                rows.len()
            )));
        }
        Ok(RawAttributes::Dense { num_nodes, dim, rows })
    } else {
        let mut triplets = Vec::new();
        for item in rest {
            let (line, body) = item?;
            let toks: Vec<&str> = body.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(parse_err(path, line, format!("expected `row col value`, found {} fields", toks.len())));
            }
            let col = parse_usize(path, line, toks[1], "column")?;
            if col >= dim {
                return Err(parse_err(path, line, format!("column {col} out of range for D = {dim}")));
            }
            let value = parse_f64(path, line, toks[2], "attribute value")?;
            triplets.push((toks[0].to_string(), col, value));
        }
        Ok(RawAttributes::Sparse { num_nodes, dim, triplets })
    }
}

/// Dense index assignment. When every token is an integer below `num_nodes`
/// the identity map is used; otherwise ids are numbered in order of first
/// appearance (attribute rows, then edges).
fn resolve_ids(attrs: &RawAttributes, edges: &[RawEdge]) -> Result<NodeIds> {
    let n = attrs.num_nodes();
    let attr_tokens: Vec<&str> = match attrs {
        RawAttributes::Sparse { triplets, .. } => triplets.iter().map(|t| t.0.as_str()).collect(),
        RawAttributes::Dense { rows, .. } => rows.iter().filter_map(|r| r.0.as_deref()).collect(),
    };
    let dense_positional = matches!(attrs, RawAttributes::Dense { rows, .. } if rows.iter().any(|r| r.0.is_none()));
    let edge_tokens = edges.iter().flat_map(|e| [e.src.as_str(), e.dst.as_str()]);
    let all_numeric = attr_tokens
        .iter()
        .copied()
        .chain(edge_tokens.clone())
        .all(|t| t.parse::<usize>().map(|v| v < n).unwrap_or(false));

    if all_numeric {
        if let RawAttributes::Dense { rows, .. } = attrs {
            for (pos, (id, _)) in rows.iter().enumerate() {
                if let Some(id) = id {
                    if id.parse::<usize>().ok() != Some(pos) {
                        return Err(Error::validation(format!(
                            "dense attribute row {pos} carries id {id:?}; numeric ids must match row order"
                        )));
                    }
                }
            }
        }
        return Ok(NodeIds::identity(n));
    }
    if dense_positional {
        return Err(Error::validation(
            "dense attribute rows without an id column require numeric node ids in 0..num_nodes",
        ));
    }
    let mut names: Vec<String> = Vec::with_capacity(n);
    let mut seen = std::collections::HashSet::new();
    for t in attr_tokens.into_iter().chain(edge_tokens) {
        if seen.insert(t) {
            names.push(t.to_string());
        }
    }
    if names.len() > n {
        return Err(Error::validation(format!(
            "{} distinct node ids found but the attribute header declares {n} nodes",
            names.len()
        )));
    }
    let mut k = 0;
    while names.len() < n {
        let candidate = format!("#{k}");
        if !seen.contains(candidate.as_str()) {
            names.push(candidate);
        }
        k += 1;
    }
    NodeIds::from_names(names)
}

/// Assemble a validated graph from parsed edge and attribute files.
///
/// Duplicate edges (either orientation when undirected) keep the first
/// weight; self-loops are dropped. Both are logged.
pub fn build_graph(raw_edges: &[RawEdge], raw_attrs: &RawAttributes, directed: bool) -> Result<AttributedGraph> {
    let ids = resolve_ids(raw_attrs, raw_edges)?;
    let lookup = |t: &str| ids.get(t).expect("every token was assigned an id");
    let attributes = match raw_attrs {
        RawAttributes::Sparse { num_nodes, dim, triplets } => {
            let t: Vec<(usize, usize, f64)> =
                triplets.iter().map(|(r, c, v)| (lookup(r) as usize, *c, *v)).collect();
            SparseRows::from_triplets(*num_nodes, *dim, &t)?
        }
        RawAttributes::Dense { dim, rows, .. } => {
            let mut ordered = vec![Vec::new(); rows.len()];
            for (pos, (id, vals)) in rows.iter().enumerate() {
                let idx = id.as_deref().map(|t| lookup(t) as usize).unwrap_or(pos);
                ordered[idx] = vals.clone();
            }
            SparseRows::from_dense(&ordered, *dim)?
        }
    };

    let mut set = EdgeSet::new(directed);
    let mut edges = Vec::with_capacity(raw_edges.len());
    let (mut loops, mut dups) = (0usize, 0usize);
    for e in raw_edges {
        let (s, d) = (lookup(&e.src), lookup(&e.dst));
        if s == d {
            loops += 1;
            continue;
        }
        if !set.insert(s, d) {
            dups += 1;
            continue;
        }
        edges.push(Edge::new(s, d, e.weight));
    }
    if loops > 0 {
        warn!("dropped {loops} self-loop(s)");
    }
    if dups > 0 {
        warn!("dropped {dups} duplicate edge(s)");
    }
    AttributedGraph::with_ids(ids, edges, directed, attributes)
}

pub fn load_graph(edge_path: &Path, attr_path: &Path, directed: bool) -> Result<AttributedGraph> {
    let raw_edges = parse_edges(open(edge_path)?, edge_path)?;
    let raw_attrs = parse_attributes(open(attr_path)?, attr_path)?;
    build_graph(&raw_edges, &raw_attrs, directed)
}

/// Class labels aligned with dense node indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Labels {
    pub classes: Vec<String>,
    pub of_node: Vec<Option<usize>>,
}

impl Labels {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// `(node, class)` for every labeled node.
    pub fn labeled(&self) -> Vec<(usize, usize)> {
        self.of_node
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|c| (i, c)))
            .collect()
    }
}

/// Read `node_id label` lines. Unknown node ids are an error.
pub fn load_labels(path: &Path, ids: &NodeIds) -> Result<Labels> {
    let mut classes: Vec<String> = Vec::new();
    let mut of_node = vec![None; ids.len()];
    for item in content_lines(open(path)?, path) {
        let (line, body) = item?;
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(path, line, "expected `node_id label`"));
        }
        let node = ids
            .get(toks[0])
            .ok_or_else(|| Error::validation(format!("{}:{line}: unknown node id {:?}", path.display(), toks[0])))?;
        let class = match classes.iter().position(|c| c == toks[1]) {
            Some(c) => c,
            None => {
                classes.push(toks[1].to_string());
                classes.len() - 1
            }
        };
        of_node[node as usize] = Some(class);
    }
    Ok(Labels { classes, of_node })
}

/// Persist the id map as `index<TAB>name` lines.
pub fn write_id_map(ids: &NodeIds, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (i, name) in ids.names().iter().enumerate() {
        writeln!(w, "{i}\t{name}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test")
    }

    #[test]
    fn edges_with_default_weight_and_comments() {
        let e = parse_edges("# header\n0 1\n1 2 0.5 # trailing\n\n".as_bytes(), p()).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].weight, 1.0);
        assert_eq!(e[1].weight, 0.5);
        assert_eq!(e[1].line, 3);
    }

    #[test]
    fn negative_weight_is_validation_error() {
        let err = parse_edges("0 1 -2.0\n".as_bytes(), p()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_edges("0 1\n0 1 x\n".as_bytes(), p()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
        let err = parse_edges("0\n".as_bytes(), p()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn empty_edges_with_three_attribute_rows() {
        let attrs = parse_attributes("3 2\n0 0 1.0\n2 1 0.5\n".as_bytes(), p()).unwrap();
        let g = build_graph(&[], &attrs, false).unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.num_edges(), 0);
        assert_eq!(g.attributes().row(2).to_dense(), vec![0.0, 0.5]);
    }

    #[test]
    fn dense_attributes() {
        let attrs = parse_attributes("2 3\ndense\n0.1, 0, 0.2\n0,1,0\n".as_bytes(), p()).unwrap();
        let edges = parse_edges("0 1\n".as_bytes(), p()).unwrap();
        let g = build_graph(&edges, &attrs, true).unwrap();
        assert_eq!(g.attributes().row(0).to_dense(), vec![0.1, 0.0, 0.2]);
        assert_eq!(g.num_arcs(), 1);
    }

    #[test]
    fn dense_row_count_mismatch() {
        let err = parse_attributes("3 1\ndense\n1\n2\n".as_bytes(), p()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn string_ids_are_densified() {
        let attrs = parse_attributes("3 2\npaperA 0 1\npaperC 1 1\n".as_bytes(), p()).unwrap();
        let edges = parse_edges("paperA paperB\npaperB paperC 2\n".as_bytes(), p()).unwrap();
        let g = build_graph(&edges, &attrs, false).unwrap();
        assert_eq!(g.ids().names(), &["paperA", "paperC", "paperB"]);
        assert_eq!(g.edges()[0], Edge::new(0, 2, 1.0));
        assert_eq!(g.attributes().row(1).to_dense(), vec![0.0, 1.0]);
    }

    #[test]
    fn too_many_ids_is_an_error() {
        let attrs = parse_attributes("2 1\na 0 1\n".as_bytes(), p()).unwrap();
        let edges = parse_edges("a b\nb c\n".as_bytes(), p()).unwrap();
        assert!(build_graph(&edges, &attrs, false).is_err());
    }

    #[test]
    fn duplicates_and_self_loops_dropped() {
        let attrs = parse_attributes("3 1\n".as_bytes(), p()).unwrap();
        let edges = parse_edges("0 1\n1 0\n2 2\n1 2\n".as_bytes(), p()).unwrap();
        let g = build_graph(&edges, &attrs, false).unwrap();
        assert_eq!(g.num_edges(), 2);
    }
}
