//! Attributed graphs: the in-memory model, file loading, and train/test splits.

mod csr;
mod io;
mod sparse;
mod split;

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

pub use csr::Csr;
pub use io::{build_graph, load_graph, load_labels, parse_attributes, parse_edges, write_id_map, Labels, RawAttributes, RawEdge};
pub use sparse::{SparseRow, SparseRows};
pub use split::{
    hide_nodes, read_split_manifest, split_edges, split_train_val, write_split_manifest, EdgeSplit, InductiveSplit,
    SplitManifest, NEGATIVE_ATTEMPTS_PER_PAIR,
};

pub type NodeId = u32;

/// An unordered or ordered node pair without a weight (used for negatives).
pub type Pair = (NodeId, NodeId);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: f64,
}

impl Edge {
    pub fn new(src: NodeId, dst: NodeId, weight: f64) -> Self {
        Edge { src, dst, weight }
    }

    pub fn pair(&self) -> Pair {
        (self.src, self.dst)
    }
}

/// Mapping between external node names and dense indices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeIds {
    names: Vec<String>,
    index: HashMap<String, NodeId>,
}

impl NodeIds {
    /// Names `"0" .. "n-1"`.
    pub fn identity(n: usize) -> Self {
        Self::from_names((0..n).map(|i| i.to_string()).collect()).expect("identity names are unique")
    }

    pub fn from_names(names: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i as NodeId).is_some() {
                return Err(Error::validation(format!("duplicate node id {name:?}")));
            }
        }
        Ok(NodeIds { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: NodeId) -> &str {
        &self.names[i as usize]
    }

    pub fn get(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn select(&self, nodes: &[usize]) -> NodeIds {
        Self::from_names(nodes.iter().map(|&i| self.names[i].clone()).collect()).expect("subset of unique names")
    }
}

/// Membership test for node pairs, orientation-insensitive on undirected graphs.
#[derive(Clone, Debug)]
pub struct EdgeSet {
    directed: bool,
    pairs: HashSet<Pair>,
}

impl EdgeSet {
    pub fn new(directed: bool) -> Self {
        EdgeSet { directed, pairs: HashSet::new() }
    }

    fn key(&self, a: NodeId, b: NodeId) -> Pair {
        if self.directed || a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Returns false if the pair was already present.
    pub fn insert(&mut self, a: NodeId, b: NodeId) -> bool {
        let k = self.key(a, b);
        self.pairs.insert(k)
    }

    pub fn contains(&self, a: NodeId, b: NodeId) -> bool {
        self.pairs.contains(&self.key(a, b))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Node set, weighted edges, out-adjacency and sparse attributes.
///
/// Undirected edges are stored once in `edges` and as two opposite arcs of
/// equal weight in the adjacency. The graph is immutable after construction.
#[derive(Clone, Debug)]
pub struct AttributedGraph {
    num_nodes: usize,
    edges: Vec<Edge>,
    directed: bool,
    attributes: SparseRows,
    adjacency: Csr,
    ids: NodeIds,
}

impl AttributedGraph {
    pub fn new(num_nodes: usize, edges: Vec<Edge>, directed: bool, attributes: SparseRows) -> Result<Self> {
        Self::with_ids(NodeIds::identity(num_nodes), edges, directed, attributes)
    }

    pub fn with_ids(ids: NodeIds, edges: Vec<Edge>, directed: bool, attributes: SparseRows) -> Result<Self> {
        let num_nodes = ids.len();
        if attributes.nrows() != num_nodes {
            return Err(Error::validation(format!(
                "attribute matrix has {} rows but the graph has {num_nodes} nodes",
                attributes.nrows()
            )));
        }
        let mut seen = EdgeSet::new(directed);
        for (k, e) in edges.iter().enumerate() {
            if e.src as usize >= num_nodes || e.dst as usize >= num_nodes {
                return Err(Error::validation(format!(
                    "edge {k} ({} -> {}) references a node outside 0..{num_nodes}",
                    e.src, e.dst
                )));
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(Error::validation(format!(
                    "edge {k} ({} -> {}) has weight {}; weights must be positive",
                    e.src, e.dst, e.weight
                )));
            }
            if e.src == e.dst {
                return Err(Error::validation(format!("edge {k} is a self-loop on node {}", e.src)));
            }
            if !seen.insert(e.src, e.dst) {
                return Err(Error::validation(format!(
                    "edge {k} ({} -> {}) is a duplicate; multigraphs are not supported",
                    e.src, e.dst
                )));
            }
        }
        let adjacency = Csr::from_arcs(num_nodes, arcs_of(&edges, directed));
        Ok(AttributedGraph { num_nodes, edges, directed, attributes, adjacency, ids })
    }

    /// Same nodes and attributes, different edge set.
    pub fn with_edges(&self, edges: Vec<Edge>) -> Result<Self> {
        Self::with_ids(self.ids.clone(), edges, self.directed, self.attributes.clone())
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.adjacency.num_arcs()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn attributes(&self) -> &SparseRows {
        &self.attributes
    }

    pub fn attr_dim(&self) -> usize {
        self.attributes.ncols()
    }

    pub fn adjacency(&self) -> &Csr {
        &self.adjacency
    }

    pub fn ids(&self) -> &NodeIds {
        &self.ids
    }

    pub fn edge_set(&self) -> EdgeSet {
        let mut set = EdgeSet::new(self.directed);
        for e in &self.edges {
            set.insert(e.src, e.dst);
        }
        set
    }
}

fn arcs_of(edges: &[Edge], directed: bool) -> impl Iterator<Item = (u32, u32, f64)> + Clone + '_ {
    edges.iter().flat_map(move |e| {
        let fwd = Some((e.src, e.dst, e.weight));
        let back = (!directed).then_some((e.dst, e.src, e.weight));
        fwd.into_iter().chain(back)
    })
}
