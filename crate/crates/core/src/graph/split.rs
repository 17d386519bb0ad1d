//! Edge splits for link prediction and node hiding for inductive evaluation,
//! plus the plain-text split manifest.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::{AttributedGraph, Edge, EdgeSet, NodeId, Pair, SparseRows};
use crate::error::{Error, Result};
use crate::seed;

/// Maximum rejection-sampling attempts per requested negative pair.
pub const NEGATIVE_ATTEMPTS_PER_PAIR: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeSplit {
    pub train: Vec<Edge>,
    pub val_pos: Vec<Edge>,
    pub val_neg: Vec<Pair>,
    pub test_pos: Vec<Edge>,
    pub test_neg: Vec<Pair>,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct InductiveSplit {
    /// Graph over the visible nodes only, re-indexed `0..visible.len()`.
    pub visible_graph: AttributedGraph,
    /// Original index of each visible node.
    pub visible_nodes: Vec<NodeId>,
    /// Original indices of the hidden nodes, ascending.
    pub hidden_nodes: Vec<NodeId>,
    /// Attribute rows of `hidden_nodes`, same order.
    pub hidden_attr: SparseRows,
    /// Pairs in original indexing with at least one hidden endpoint.
    pub eval_pos: Vec<Edge>,
    pub eval_neg: Vec<Pair>,
    pub seed: u64,
}

fn round_count(frac: f64, total: usize) -> usize {
    (frac * total as f64).round() as usize
}

/// Uniform non-edge pairs, distinct, never self-pairs, never in `taken`.
/// `first` draws the first endpoint; the second is uniform over all nodes.
fn sample_negatives<R: rand::Rng>(
    rng: &mut R,
    num_nodes: usize,
    count: usize,
    edges: &EdgeSet,
    taken: &mut EdgeSet,
    mut first: impl FnMut(&mut R) -> NodeId,
) -> Result<Vec<Pair>> {
    let mut out = Vec::with_capacity(count);
    let budget = NEGATIVE_ATTEMPTS_PER_PAIR * count;
    let mut attempts = 0;
    while out.len() < count {
        if attempts >= budget {
            return Err(Error::Sampling(format!(
                "found only {} of {count} non-edges after {budget} attempts; graph too dense",
                out.len()
            )));
        }
        attempts += 1;
        let a = first(rng);
        let b = rng.random_range(0..num_nodes as NodeId);
        if a == b || edges.contains(a, b) || taken.contains(a, b) {
            continue;
        }
        taken.insert(a, b);
        out.push((a, b));
    }
    Ok(out)
}

fn split_impl(g: &AttributedGraph, n_test: usize, n_val: usize, seed: u64) -> Result<EdgeSplit> {
    let m = g.num_edges();
    if m == 0 {
        return Err(Error::validation("cannot split a graph with no edges"));
    }
    if n_test + n_val >= m {
        return Err(Error::validation(format!(
            "split would leave no training edges ({n_test} test + {n_val} validation of {m})"
        )));
    }
    let mut rng = seed::rng_for(seed, "split-edges");
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);
    let mut test_idx = order[..n_test].to_vec();
    let mut val_idx = order[n_test..n_test + n_val].to_vec();
    let mut train_idx = order[n_test + n_val..].to_vec();
    test_idx.sort_unstable();
    val_idx.sort_unstable();
    train_idx.sort_unstable();
    let pick = |idx: &[usize]| idx.iter().map(|&i| g.edges()[i]).collect::<Vec<_>>();

    let edges = g.edge_set();
    let mut taken = EdgeSet::new(g.is_directed());
    let n = g.num_nodes();
    let uniform = |r: &mut seed::Rng| r.random_range(0..n as NodeId);
    let test_neg = sample_negatives(&mut rng, n, n_test, &edges, &mut taken, uniform)?;
    let val_neg = sample_negatives(&mut rng, n, n_val, &edges, &mut taken, uniform)?;

    Ok(EdgeSplit {
        train: pick(&train_idx),
        val_pos: pick(&val_idx),
        val_neg,
        test_pos: pick(&test_idx),
        test_neg,
        seed,
    })
}

/// Random edge split with equally many sampled non-edges for validation and test.
///
/// Validation edges come out of the non-test portion.
pub fn split_edges(g: &AttributedGraph, test_frac: f64, val_frac: f64, seed: u64) -> Result<EdgeSplit> {
    if !(test_frac > 0.0 && test_frac < 1.0) {
        return Err(Error::Config(format!("test fraction {test_frac} must lie in (0, 1)")));
    }
    if !(0.0..1.0).contains(&val_frac) || test_frac + val_frac >= 1.0 {
        return Err(Error::Config(format!(
            "validation fraction {val_frac} must lie in [0, 1) with test + validation < 1"
        )));
    }
    let m = g.num_edges();
    split_impl(g, round_count(test_frac, m), round_count(val_frac, m), seed)
}

/// Train/validation split with an empty test portion.
pub fn split_train_val(g: &AttributedGraph, val_frac: f64, seed: u64) -> Result<EdgeSplit> {
    if !(0.0..1.0).contains(&val_frac) {
        return Err(Error::Config(format!("validation fraction {val_frac} must lie in [0, 1)")));
    }
    split_impl(g, 0, round_count(val_frac, g.num_edges()), seed)
}

/// Hide a uniformly random `round(frac * n)` node subset.
///
/// Every edge touching a hidden node moves to `eval_pos`; an equal number of
/// non-edges with a hidden first endpoint become `eval_neg`.
pub fn hide_nodes(g: &AttributedGraph, frac: f64, seed: u64) -> Result<InductiveSplit> {
    let n = g.num_nodes();
    if n == 0 {
        return Err(Error::validation("cannot hide nodes of an empty graph"));
    }
    if !(0.0..1.0).contains(&frac) {
        return Err(Error::Config(format!("hide fraction {frac} must lie in [0, 1)")));
    }
    let mut rng = seed::rng_for(seed, "hide-nodes");
    let mut order: Vec<NodeId> = (0..n as NodeId).collect();
    order.shuffle(&mut rng);
    let mut hidden = order[..round_count(frac, n)].to_vec();
    hidden.sort_unstable();
    build_inductive(g, hidden, None, seed, &mut rng)
}

fn build_inductive(
    g: &AttributedGraph,
    hidden: Vec<NodeId>,
    eval_neg: Option<Vec<Pair>>,
    seed: u64,
    rng: &mut seed::Rng,
) -> Result<InductiveSplit> {
    let n = g.num_nodes();
    let mut is_hidden = vec![false; n];
    for &h in &hidden {
        is_hidden[h as usize] = true;
    }
    let visible_nodes: Vec<NodeId> = (0..n as NodeId).filter(|&i| !is_hidden[i as usize]).collect();
    let mut new_index = vec![NodeId::MAX; n];
    for (k, &v) in visible_nodes.iter().enumerate() {
        new_index[v as usize] = k as NodeId;
    }

    let mut eval_pos = Vec::new();
    let mut visible_edges = Vec::new();
    for e in g.edges() {
        if is_hidden[e.src as usize] || is_hidden[e.dst as usize] {
            eval_pos.push(*e);
        } else {
            visible_edges.push(Edge::new(new_index[e.src as usize], new_index[e.dst as usize], e.weight));
        }
    }
    if visible_edges.is_empty() {
        return Err(Error::validation(format!(
            "hiding {} of {n} nodes leaves the visible graph without edges",
            hidden.len()
        )));
    }

    let rows: Vec<usize> = visible_nodes.iter().map(|&v| v as usize).collect();
    let visible_graph = AttributedGraph::with_ids(
        g.ids().select(&rows),
        visible_edges,
        g.is_directed(),
        g.attributes().select_rows(&rows),
    )?;
    let hidden_rows: Vec<usize> = hidden.iter().map(|&h| h as usize).collect();
    let hidden_attr = g.attributes().select_rows(&hidden_rows);

    let eval_neg = match eval_neg {
        Some(neg) => neg,
        None if hidden.is_empty() => Vec::new(),
        None => {
            let edges = g.edge_set();
            let mut taken = EdgeSet::new(g.is_directed());
            let hs = &hidden;
            sample_negatives(rng, n, eval_pos.len(), &edges, &mut taken, |r| hs[r.random_range(0..hs.len())])?
        }
    };

    Ok(InductiveSplit {
        visible_graph,
        visible_nodes,
        hidden_nodes: hidden,
        hidden_attr,
        eval_pos,
        eval_neg,
        seed,
    })
}

/// A split read back from a manifest.
#[derive(Clone, Debug)]
pub enum SplitManifest {
    Edges(EdgeSplit),
    Inductive(InductiveSplit),
}

const MANIFEST_MAGIC: &str = "glace-split v1";

fn write_edges<W: Write>(w: &mut W, g: &AttributedGraph, name: &str, edges: &[Edge]) -> std::io::Result<()> {
    writeln!(w, "[{name}] {}", edges.len())?;
    for e in edges {
        writeln!(w, "{}\t{}\t{}", g.ids().name(e.src), g.ids().name(e.dst), e.weight)?;
    }
    Ok(())
}

fn write_pairs<W: Write>(w: &mut W, g: &AttributedGraph, name: &str, pairs: &[Pair]) -> std::io::Result<()> {
    writeln!(w, "[{name}] {}", pairs.len())?;
    for &(a, b) in pairs {
        writeln!(w, "{}\t{}", g.ids().name(a), g.ids().name(b))?;
    }
    Ok(())
}

/// Write a replayable split. Node ids are written by name.
pub fn write_split_manifest(path: &Path, g: &AttributedGraph, split: &SplitManifest) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "{MANIFEST_MAGIC}")?;
        match split {
            SplitManifest::Edges(s) => {
                writeln!(w, "kind edges")?;
                writeln!(w, "seed {}", s.seed)?;
                writeln!(w, "num_nodes {}", g.num_nodes())?;
                write_edges(&mut w, g, "train", &s.train)?;
                write_edges(&mut w, g, "val_pos", &s.val_pos)?;
                write_pairs(&mut w, g, "val_neg", &s.val_neg)?;
                write_edges(&mut w, g, "test_pos", &s.test_pos)?;
                write_pairs(&mut w, g, "test_neg", &s.test_neg)?;
            }
            SplitManifest::Inductive(s) => {
                writeln!(w, "kind inductive")?;
                writeln!(w, "seed {}", s.seed)?;
                writeln!(w, "num_nodes {}", g.num_nodes())?;
                writeln!(w, "[hidden] {}", s.hidden_nodes.len())?;
                for &h in &s.hidden_nodes {
                    writeln!(w, "{}", g.ids().name(h))?;
                }
                write_edges(&mut w, g, "eval_pos", &s.eval_pos)?;
                write_pairs(&mut w, g, "eval_neg", &s.eval_neg)?;
            }
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

/// Read a manifest written by [`write_split_manifest`] against the same graph.
pub fn read_split_manifest(path: &Path, g: &AttributedGraph) -> Result<SplitManifest> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let perr = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut lines: Vec<(usize, String)> = Vec::new();
    for (i, l) in BufReader::new(file).lines().enumerate() {
        let l = l.map_err(|e| Error::io(path, e))?;
        if !l.trim().is_empty() {
            lines.push((i + 1, l));
        }
    }
    let mut it = lines.into_iter();
    match it.next() {
        Some((_, l)) if l.trim() == MANIFEST_MAGIC => {}
        _ => return Err(perr(1, format!("not a split manifest (expected `{MANIFEST_MAGIC}`)"))),
    }
    let mut field = |key: &str| -> Result<String> {
        let (line, l) = it.next().ok_or_else(|| perr(0, format!("missing `{key}`")))?;
        let rest = l
            .strip_prefix(key)
            .map(str::trim)
            .ok_or_else(|| perr(line, format!("expected `{key} ...`")))?;
        Ok(rest.to_string())
    };
    let kind = field("kind")?;
    let seed: u64 = field("seed")?.parse().map_err(|_| perr(3, "bad seed".into()))?;
    let nn: usize = field("num_nodes")?.parse().map_err(|_| perr(4, "bad num_nodes".into()))?;
    if nn != g.num_nodes() {
        return Err(Error::validation(format!(
            "manifest was written for {nn} nodes but the graph has {}",
            g.num_nodes()
        )));
    }

    let mut sections: Vec<(String, Vec<(usize, Vec<String>)>)> = Vec::new();
    for (line, l) in it {
        if let Some(head) = l.strip_prefix('[') {
            let name = head.split(']').next().unwrap_or("").to_string();
            sections.push((name, Vec::new()));
        } else {
            let cur = sections
                .last_mut()
                .ok_or_else(|| perr(line, "data before first section".into()))?;
            cur.1.push((line, l.split('\t').map(str::to_string).collect()));
        }
    }
    let node = |line: usize, name: &str| -> Result<NodeId> {
        g.ids()
            .get(name)
            .ok_or_else(|| perr(line, format!("unknown node id {name:?}")))
    };
    let section = |name: &str| -> Result<&Vec<(usize, Vec<String>)>> {
        sections
            .iter()
            .find(|s| s.0 == name)
            .map(|s| &s.1)
            .ok_or_else(|| perr(0, format!("missing section [{name}]")))
    };
    let edges = |name: &str| -> Result<Vec<Edge>> {
        section(name)?
            .iter()
            .map(|(line, f)| {
                if f.len() != 3 {
                    return Err(perr(*line, "expected `src dst weight`".into()));
                }
                let w: f64 = f[2].parse().map_err(|_| perr(*line, "bad weight".into()))?;
                Ok(Edge::new(node(*line, &f[0])?, node(*line, &f[1])?, w))
            })
            .collect()
    };
    let pairs = |name: &str| -> Result<Vec<Pair>> {
        section(name)?
            .iter()
            .map(|(line, f)| {
                if f.len() != 2 {
                    return Err(perr(*line, "expected `src dst`".into()));
                }
                Ok((node(*line, &f[0])?, node(*line, &f[1])?))
            })
            .collect()
    };

    match kind.as_str() {
        "edges" => Ok(SplitManifest::Edges(EdgeSplit {
            train: edges("train")?,
            val_pos: edges("val_pos")?,
            val_neg: pairs("val_neg")?,
            test_pos: edges("test_pos")?,
            test_neg: pairs("test_neg")?,
            seed,
        })),
        "inductive" => {
            let mut hidden = section("hidden")?
                .iter()
                .map(|(line, f)| node(*line, &f[0]))
                .collect::<Result<Vec<_>>>()?;
            hidden.sort_unstable();
            let eval_neg = pairs("eval_neg")?;
            let mut rng = seed::rng_for(seed, "hide-nodes");
            let split = build_inductive(g, hidden, Some(eval_neg), seed, &mut rng)?;
            let recorded = edges("eval_pos")?;
            if recorded != split.eval_pos {
                return Err(Error::validation(
                    "manifest eval_pos does not match the edges incident to its hidden nodes",
                ));
            }
            Ok(SplitManifest::Inductive(split))
        }
        other => Err(perr(2, format!("unknown split kind {other:?}"))),
    }
}
