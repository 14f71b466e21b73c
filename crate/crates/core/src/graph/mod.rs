//! Heterogeneous graphs, metapath-instance sampling and structural analysis.

mod delta;
mod io;
mod sampler;
mod subgraph;
mod synthetic;

pub use delta::{delta_hyperbolicity, DeltaReport, EXACT_DELTA_LIMIT};
pub use io::{load_dataset, write_dataset, Schema, SchemaRelation};
pub(crate) use sampler::derive_seed;
pub use sampler::{sample_all, sample_instances, InstanceSet, SamplerConfig};
pub use subgraph::{metapath_subgraph, HomGraph};
pub use synthetic::{degrees_of_type, generate_synthetic, SyntheticMetapath, SyntheticSpec};

use std::collections::HashMap;
use std::path::PathBuf;

use thiserror::Error;

use crate::autodiff::Tensor;

pub type NodeId = usize;
pub type TypeId = usize;
pub type RelationId = usize;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },
    #[error("{file}:{line}: edge references unknown node {id}")]
    DanglingEdge { file: String, line: usize, id: NodeId },
    #[error("{file}:{line}: expected {expected} features, found {found}")]
    FeatureDim {
        file: String,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("schema: {0}")]
    Schema(String),
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("node {node} has type {found}, expected {expected}")]
    WrongNodeType {
        node: NodeId,
        found: String,
        expected: String,
    },
    #[error("metapath {metapath} has {len} node types, more than the maximum length {max}")]
    MetapathTooLong { metapath: String, len: usize, max: usize },
    #[error("graph has {0} nodes in its largest component; at least 4 are needed")]
    TooFewNodes(usize),
    #[error("could not realise a feasible degree sequence after {0} attempts")]
    InfeasibleDegrees(usize),
}

pub type Result<T> = std::result::Result<T, GraphError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    pub src: TypeId,
    pub dst: TypeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub relation: RelationId,
}

/// An ordered sequence of node types, e.g. `A,P,A`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Metapath {
    pub name: String,
    pub types: Vec<TypeId>,
}

impl Metapath {
    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn start(&self) -> TypeId {
        self.types[0]
    }

    pub fn end(&self) -> TypeId {
        *self.types.last().unwrap()
    }
}

/// Typed nodes, typed undirected edges, per-type feature matrices and
/// optional labels on the target type. Immutable once built.
#[derive(Debug, Clone)]
pub struct HeteroGraph {
    type_names: Vec<String>,
    relations: Vec<Relation>,
    target: TypeId,
    metapaths: Vec<Metapath>,
    link_relation: Option<RelationId>,
    node_type: Vec<TypeId>,
    local_index: Vec<usize>,
    type_nodes: Vec<Vec<NodeId>>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<NodeId>>,
    features: Vec<Tensor>,
    labels: Vec<Option<usize>>,
    num_classes: usize,
}

impl HeteroGraph {
    pub fn node_count(&self) -> usize {
        self.node_type.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn type_names(&self) -> &[String] {
        &self.type_names
    }

    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.type_names.iter().position(|t| t == name)
    }

    pub fn type_name(&self, t: TypeId) -> &str {
        &self.type_names[t]
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn target_type(&self) -> TypeId {
        self.target
    }

    pub fn metapaths(&self) -> &[Metapath] {
        &self.metapaths
    }

    pub fn link_relation(&self) -> Option<RelationId> {
        self.link_relation
    }

    pub fn node_type(&self, v: NodeId) -> TypeId {
        self.node_type[v]
    }

    pub fn nodes_of_type(&self, t: TypeId) -> &[NodeId] {
        &self.type_nodes[t]
    }

    pub fn target_nodes(&self) -> &[NodeId] {
        &self.type_nodes[self.target]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edges_of(&self, r: RelationId) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.relation == r)
    }

    /// Sorted neighbours of `v` across every relation.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.first().map_or(0, |f| f.cols)
    }

    pub fn features(&self, v: NodeId) -> &[f64] {
        self.features[self.node_type[v]].row_slice(self.local_index[v])
    }

    pub fn type_features(&self, t: TypeId) -> &Tensor {
        &self.features[t]
    }

    pub fn label(&self, v: NodeId) -> Option<usize> {
        self.labels[v]
    }

    pub fn labeled_nodes(&self) -> Vec<NodeId> {
        (0..self.node_count()).filter(|&v| self.labels[v].is_some()).collect()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Parses `"A,P,A"` against this graph's schema.
    pub fn parse_metapath(&self, spec: &str) -> Result<Metapath> {
        parse_metapath(&self.type_names, &self.relations, spec)
    }

    /// Returns a copy with the listed edges removed (matched either direction).
    pub fn without_edges(&self, removed: &[(NodeId, NodeId)]) -> HeteroGraph {
        let drop: std::collections::HashSet<(NodeId, NodeId)> =
            removed.iter().flat_map(|&(u, v)| [(u, v), (v, u)]).collect();
        let mut g = self.clone();
        g.edges.retain(|e| !drop.contains(&(e.src, e.dst)));
        g.adjacency = build_adjacency(g.node_count(), &g.edges);
        g
    }
}

fn build_adjacency(n: usize, edges: &[Edge]) -> Vec<Vec<NodeId>> {
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        adj[e.src].push(e.dst);
        adj[e.dst].push(e.src);
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

pub(crate) fn parse_metapath(type_names: &[String], relations: &[Relation], spec: &str) -> Result<Metapath> {
    let types: Vec<TypeId> = spec
        .split(',')
        .map(|s| {
            let s = s.trim();
            type_names
                .iter()
                .position(|t| t == s)
                .ok_or_else(|| GraphError::Schema(format!("metapath {spec}: unknown type {s:?}")))
        })
        .collect::<Result<_>>()?;
    if types.len() < 2 {
        return Err(GraphError::Schema(format!("metapath {spec} needs at least two types")));
    }
    for w in types.windows(2) {
        let linked = relations
            .iter()
            .any(|r| (r.src == w[0] && r.dst == w[1]) || (r.src == w[1] && r.dst == w[0]));
        if !linked {
            return Err(GraphError::Schema(format!(
                "metapath {spec}: no relation between {} and {}",
                type_names[w[0]], type_names[w[1]]
            )));
        }
    }
    let name = types
        .iter()
        .map(|&t| type_names[t].as_str())
        .collect::<Vec<_>>()
        .join(",");
    Ok(Metapath { name, types })
}

/// Incremental, validating constructor for [`HeteroGraph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    type_names: Vec<String>,
    relations: Vec<Relation>,
    target: Option<TypeId>,
    metapath_specs: Vec<String>,
    link_relation: Option<String>,
    node_type: Vec<TypeId>,
    edges: Vec<Edge>,
    features: HashMap<TypeId, Vec<(NodeId, Vec<f64>)>>,
    labels: Vec<(NodeId, usize)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a type if unseen and returns its id.
    pub fn add_type(&mut self, name: &str) -> TypeId {
        if let Some(t) = self.type_names.iter().position(|t| t == name) {
            return t;
        }
        self.type_names.push(name.to_string());
        self.type_names.len() - 1
    }

    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.type_names.iter().position(|t| t == name)
    }

    pub fn add_relation(&mut self, name: &str, src: &str, dst: &str) -> RelationId {
        let (src, dst) = (self.add_type(src), self.add_type(dst));
        if let Some(r) = self.relations.iter().position(|r| r.name == name) {
            return r;
        }
        self.relations.push(Relation {
            name: name.to_string(),
            src,
            dst,
        });
        self.relations.len() - 1
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn set_target(&mut self, name: &str) {
        self.target = Some(self.add_type(name));
    }

    pub fn add_metapath(&mut self, spec: &str) {
        self.metapath_specs.push(spec.to_string());
    }

    pub fn set_link_relation(&mut self, name: &str) {
        self.link_relation = Some(name.to_string());
    }

    pub fn add_node(&mut self, type_name: &str) -> NodeId {
        let t = self.add_type(type_name);
        self.node_type.push(t);
        self.node_type.len() - 1
    }

    pub fn add_node_of(&mut self, t: TypeId) -> NodeId {
        self.node_type.push(t);
        self.node_type.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.node_type.len()
    }

    pub fn node_type(&self, v: NodeId) -> Option<TypeId> {
        self.node_type.get(v).copied()
    }

    /// Adds an undirected edge; endpoint types are checked in [`build`](Self::build).
    pub fn add_edge(&mut self, src: NodeId, dst: NodeId, relation: RelationId) {
        self.edges.push(Edge { src, dst, relation });
    }

    pub fn set_features(&mut self, v: NodeId, features: Vec<f64>) {
        let t = self.node_type[v];
        self.features.entry(t).or_default().push((v, features));
    }

    pub fn set_label(&mut self, v: NodeId, class: usize) {
        self.labels.push((v, class));
    }

    pub fn build(self) -> Result<HeteroGraph> {
        let n = self.node_type.len();
        let target = self
            .target
            .ok_or_else(|| GraphError::Schema("no target type declared".into()))?;
        for e in &self.edges {
            for id in [e.src, e.dst] {
                if id >= n {
                    return Err(GraphError::Invalid(format!("edge references unknown node {id}")));
                }
            }
            let r = self
                .relations
                .get(e.relation)
                .ok_or_else(|| GraphError::Invalid(format!("unknown relation {}", e.relation)))?;
            let (ts, td) = (self.node_type[e.src], self.node_type[e.dst]);
            if (ts, td) != (r.src, r.dst) {
                return Err(GraphError::Invalid(format!(
                    "edge {}-{} has types {}-{}, relation {} expects {}-{}",
                    e.src,
                    e.dst,
                    self.type_names[ts],
                    self.type_names[td],
                    r.name,
                    self.type_names[r.src],
                    self.type_names[r.dst]
                )));
            }
        }

        let mut type_nodes = vec![Vec::new(); self.type_names.len()];
        let mut local_index = vec![0; n];
        for (v, &t) in self.node_type.iter().enumerate() {
            local_index[v] = type_nodes[t].len();
            type_nodes[t].push(v);
        }

        let mut dim = None;
        let mut features = Vec::with_capacity(self.type_names.len());
        for (t, nodes) in type_nodes.iter().enumerate() {
            let rows = self.features.get(&t).map(Vec::as_slice).unwrap_or(&[]);
            if rows.len() != nodes.len() {
                return Err(GraphError::Invalid(format!(
                    "type {} has {} nodes but {} feature rows",
                    self.type_names[t],
                    nodes.len(),
                    rows.len()
                )));
            }
            let width = rows.first().map_or(dim.unwrap_or(0), |(_, f)| f.len());
            let dim = *dim.get_or_insert(width);
            let mut m = Tensor::zeros(nodes.len(), dim);
            let mut seen = vec![false; nodes.len()];
            for (v, f) in rows {
                if f.len() != dim {
                    return Err(GraphError::Invalid(format!(
                        "node {v}: expected {dim} features, found {}",
                        f.len()
                    )));
                }
                let li = local_index[*v];
                if std::mem::replace(&mut seen[li], true) {
                    return Err(GraphError::Invalid(format!("node {v}: duplicate feature row")));
                }
                m.data[li * dim..(li + 1) * dim].copy_from_slice(f);
            }
            features.push(m);
        }

        let mut labels = vec![None; n];
        let mut num_classes = 0;
        for &(v, c) in &self.labels {
            if v >= n {
                return Err(GraphError::Invalid(format!("label for unknown node {v}")));
            }
            if self.node_type[v] != target {
                return Err(GraphError::WrongNodeType {
                    node: v,
                    found: self.type_names[self.node_type[v]].clone(),
                    expected: self.type_names[target].clone(),
                });
            }
            labels[v] = Some(c);
            num_classes = num_classes.max(c + 1);
        }

        let metapaths = self
            .metapath_specs
            .iter()
            .map(|s| parse_metapath(&self.type_names, &self.relations, s))
            .collect::<Result<Vec<_>>>()?;
        let link_relation = match &self.link_relation {
            Some(name) => Some(
                self.relations
                    .iter()
                    .position(|r| &r.name == name)
                    .ok_or_else(|| GraphError::Schema(format!("unknown link relation {name}")))?,
            ),
            None => None,
        };

        let adjacency = build_adjacency(n, &self.edges);
        Ok(HeteroGraph {
            type_names: self.type_names,
            relations: self.relations,
            target,
            metapaths,
            link_relation,
            node_type: self.node_type,
            local_index,
            type_nodes,
            edges: self.edges,
            adjacency,
            features,
            labels,
            num_classes,
        })
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Author/paper/conference graph shaped like DBLP.
    pub fn dblp_like() -> HeteroGraph {
        let mut b = GraphBuilder::new();
        b.set_target("A");
        let ap = b.add_relation("A-P", "A", "P");
        let pc = b.add_relation("P-C", "P", "C");
        let a: Vec<_> = (0..4).map(|_| b.add_node("A")).collect();
        let p: Vec<_> = (0..3).map(|_| b.add_node("P")).collect();
        let c = b.add_node("C");
        for &(x, y) in &[(0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (3, 2)] {
            b.add_edge(a[x], p[y], ap);
        }
        for &pp in &p {
            b.add_edge(pp, c, pc);
        }
        for v in 0..b.node_count() {
            b.set_features(v, vec![v as f64, 1.0]);
        }
        for (i, &v) in a.iter().enumerate() {
            b.set_label(v, i % 2);
        }
        b.add_metapath("A,P,A");
        b.add_metapath("A,P,C,P,A");
        b.build().unwrap()
    }
}
