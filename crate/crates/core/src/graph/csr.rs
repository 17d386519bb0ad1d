/// Compressed out-adjacency: arcs grouped by source, with weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
}

impl Csr {
    /// Counting-sort construction; arcs keep their input order within a source.
    pub fn from_arcs(num_nodes: usize, arcs: impl Iterator<Item = (u32, u32, f64)> + Clone) -> Self {
        let mut offsets = vec![0usize; num_nodes + 1];
        for (s, _, _) in arcs.clone() {
            offsets[s as usize + 1] += 1;
        }
        for i in 0..num_nodes {
            offsets[i + 1] += offsets[i];
        }
        let total = offsets[num_nodes];
        let mut cursor = offsets.clone();
        let mut targets = vec![0u32; total];
        let mut weights = vec![0.0; total];
        for (s, t, w) in arcs {
            let slot = &mut cursor[s as usize];
            targets[*slot] = t;
            weights[*slot] = w;
            *slot += 1;
        }
        Csr { offsets, targets, weights }
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_arcs(&self) -> usize {
        self.targets.len()
    }

    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (u32, f64)> + '_ {
        let (a, b) = (self.offsets[node], self.offsets[node + 1]);
        self.targets[a..b].iter().copied().zip(self.weights[a..b].iter().copied())
    }

    /// Sum of outgoing arc weights.
    pub fn out_weight(&self, node: usize) -> f64 {
        let (a, b) = (self.offsets[node], self.offsets[node + 1]);
        self.weights[a..b].iter().sum()
    }

    /// All arcs as `(src, dst, weight)`, grouped by source.
    pub fn arcs(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        (0..self.num_nodes()).flat_map(move |s| self.neighbors(s).map(move |(t, w)| (s as u32, t, w)))
    }
}
