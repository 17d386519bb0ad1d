//! Tab-separated embedding export.
//!
//! ```text
//! # kind=glace symmetric=true
//! node_id  mu_1 .. mu_L  sigma_1 .. sigma_L
//! ```
//!
//! Values are written with round-trip precision.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::EmbeddingTable;
use crate::encoder::Kind;
use crate::error::{Error, Result};
use crate::graph::NodeIds;

pub fn export_embeddings(table: &EmbeddingTable, ids: &NodeIds, include_sigma: bool, path: &Path) -> Result<()> {
    if ids.len() != table.len() {
        return Err(Error::DimensionMismatch { expected: table.len(), got: ids.len() });
    }
    if include_sigma && table.kind() == Kind::Lace {
        return Err(Error::Config("point embeddings have no variances to export".into()));
    }
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "# kind={} symmetric={}", table.kind(), table.symmetric()).map_err(io)?;
    let l = table.dim();
    let mut header = vec!["node_id".to_string()];
    header.extend((1..=l).map(|k| format!("mu_{k}")));
    if include_sigma {
        header.extend((1..=l).map(|k| format!("sigma_{k}")));
    }
    writeln!(w, "{}", header.join("\t")).map_err(io)?;
    for i in 0..table.len() {
        write!(w, "{}", ids.name(i as u32)).map_err(io)?;
        for v in table.mu(i) {
            write!(w, "\t{v}").map_err(io)?;
        }
        if include_sigma {
            for v in table.sigma(i).expect("checked above") {
                write!(w, "\t{v}").map_err(io)?;
            }
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExportedEmbeddings {
    pub ids: NodeIds,
    pub table: EmbeddingTable,
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

pub fn read_embeddings(path: &Path) -> Result<ExportedEmbeddings> {
    let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut kind = Kind::Glace;
    let mut symmetric = true;
    let mut header: Option<(usize, bool)> = None;
    let (mut names, mut mu, mut sigma) = (Vec::new(), Vec::new(), Vec::new());
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if let Some(meta) = line.strip_prefix('#') {
            for kv in meta.split_whitespace() {
                match kv.split_once('=') {
                    Some(("kind", v)) => kind = v.parse().map_err(|e: Error| parse_err(path, lineno, e.to_string()))?,
                    Some(("symmetric", v)) => {
                        symmetric = v.parse().map_err(|_| parse_err(path, lineno, format!("bad symmetric flag {v:?}")))?
                    }
                    _ => {}
                }
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split('\t').collect();
        let Some((dim, has_sigma)) = header else {
            if toks.first() != Some(&"node_id") {
                return Err(parse_err(path, lineno, "expected a `node_id` header"));
            }
            let dim = toks.iter().filter(|t| t.starts_with("mu_")).count();
            let sig = toks.iter().filter(|t| t.starts_with("sigma_")).count();
            if dim == 0 || (sig != 0 && sig != dim) || toks.len() != 1 + dim + sig {
                return Err(parse_err(path, lineno, "malformed header"));
            }
            header = Some((dim, sig > 0));
            continue;
        };
        let width = 1 + dim * if has_sigma { 2 } else { 1 };
        if toks.len() != width {
            return Err(parse_err(path, lineno, format!("expected {width} columns, found {}", toks.len())));
        }
        names.push(toks[0].to_string());
        for (k, t) in toks[1..].iter().enumerate() {
            let v: f64 = t.parse().map_err(|_| parse_err(path, lineno, format!("bad number {t:?}")))?;
            if k < dim {
                mu.push(v);
            } else {
                sigma.push(v);
            }
        }
    }
    let (dim, has_sigma) = header.ok_or_else(|| parse_err(path, 0, "empty embedding file"))?;
    let table = EmbeddingTable::from_parts(dim, kind, symmetric, mu, has_sigma.then_some(sigma))?;
    Ok(ExportedEmbeddings { ids: NodeIds::from_names(names)?, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{HiddenActivation, Mode, ModelParams};
    use crate::exec::Executor;
    use crate::graph::SparseRows;

    #[test]
    fn shape_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.tsv");
        let m = ModelParams::init(3, 4, 2, Mode::First, Kind::Glace, false, HiddenActivation::Identity, 5).unwrap();
        let a = SparseRows::from_dense(&[vec![1.0, 0.0, 0.5], vec![0.0, 2.0, 0.0], vec![0.3, 0.3, 0.3]], 3).unwrap();
        let t = EmbeddingTable::from_model(&m, &a, &Executor::sequential()).unwrap();
        let ids = NodeIds::from_names(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        export_embeddings(&t, &ids, true, &path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.split('\t').count() == 5));

        let back = read_embeddings(&path).unwrap();
        assert_eq!(back.ids, ids);
        for i in 0..3 {
            for j in 0..3 {
                assert!((back.table.score(i, j) - t.score(i, j)).abs() < 1e-9);
            }
        }
        assert!(!back.table.symmetric());
    }

    #[test]
    fn lace_has_no_sigma_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lace.tsv");
        let t = EmbeddingTable::from_parts(2, Kind::Lace, true, vec![1.0, 2.0, 3.0, 4.0], None).unwrap();
        let ids = NodeIds::identity(2);
        assert!(export_embeddings(&t, &ids, true, &path).is_err());
        export_embeddings(&t, &ids, false, &path).unwrap();
        let back = read_embeddings(&path).unwrap();
        assert_eq!(back.table, t);
    }

    #[test]
    fn malformed_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.tsv");
        std::fs::write(&path, "node_id\tmu_1\tsigma_1\nx\t1.0\n").unwrap();
        assert!(matches!(read_embeddings(&path), Err(Error::Parse { line: 2, .. })));
        std::fs::write(&path, "node_id\tmu_1\tsigma_1\nx\t1.0\t-1\n").unwrap();
        assert!(read_embeddings(&path).is_err());
    }
}
