use super::sampler::enumerate_bfs;
use super::{GraphError, HeteroGraph, Metapath, NodeId, Result};

/// Undirected homogeneous graph over a subset of a heterogeneous graph's
/// nodes. `nodes[i]` is the original id of local node `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomGraph {
    pub nodes: Vec<NodeId>,
    pub adjacency: Vec<Vec<usize>>,
}

impl HomGraph {
    /// Builds from local-index edges; duplicates and self-loops are dropped.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for (u, w) in edges {
            if u != w {
                adjacency[u].push(w);
                adjacency[w].push(u);
            }
        }
        for a in &mut adjacency {
            a.sort_unstable();
            a.dedup();
        }
        Self {
            nodes: (0..n).collect(),
            adjacency,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, a)| a.iter().filter(move |&&w| u < w).map(move |&w| (u, w)))
    }
}

/// Connects two nodes of the metapath's end type whenever some instance
/// runs from one to the other.
pub fn metapath_subgraph(g: &HeteroGraph, metapath: &Metapath) -> Result<HomGraph> {
    if metapath.start() != metapath.end() {
        return Err(GraphError::Schema(format!(
            "metapath {} must start and end on the same type",
            metapath.name
        )));
    }
    let nodes = g.nodes_of_type(metapath.start()).to_vec();
    let mut local = vec![usize::MAX; g.node_count()];
    for (i, &v) in nodes.iter().enumerate() {
        local[v] = i;
    }
    let mut edges = Vec::new();
    for (i, &v) in nodes.iter().enumerate() {
        for p in enumerate_bfs(g, v, metapath) {
            edges.push((i, local[*p.last().unwrap()]));
        }
    }
    let mut h = HomGraph::from_edges(nodes.len(), edges);
    h.nodes = nodes;
    Ok(h)
}
