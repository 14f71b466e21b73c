//! Dataset directory layout:
//!
//! ```text
//! schema.toml           target type, relations, metapaths
//! nodes.tsv             node_id <TAB> type_name
//! edges.tsv             src_id <TAB> dst_id <TAB> relation_name
//! features_<type>.tsv   node_id <TAB> f1 <TAB> ... <TAB> fn
//! labels.tsv            node_id <TAB> class_index      (optional)
//! ```
//!
//! All files are UTF-8; blank lines and lines starting with `#` are ignored.
//! Node ids must cover `0..N` exactly once.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GraphBuilder, GraphError, HeteroGraph, NodeId, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaRelation {
    pub name: String,
    pub src: String,
    pub dst: String,
}

/// Contents of `schema.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    pub target: String,
    /// Comma-joined type names, e.g. `"A,P,A"`.
    pub metapaths: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_relation: Option<String>,
    pub relations: Vec<SchemaRelation>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Non-comment lines with their 1-based line numbers, split on tabs.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let t = line.trim_end_matches('\r');
        if t.trim().is_empty() || t.trim_start().starts_with('#') {
            None
        } else {
            Some((i + 1, t.split('\t').map(str::trim).collect()))
        }
    })
}

fn parse_err(file: &str, line: usize, msg: impl Into<String>) -> GraphError {
    GraphError::Parse {
        file: file.to_string(),
        line,
        msg: msg.into(),
    }
}

fn parse_id(file: &str, line: usize, s: &str) -> Result<NodeId> {
    s.parse()
        .map_err(|_| parse_err(file, line, format!("invalid node id {s:?}")))
}

pub fn load_dataset(dir: impl AsRef<Path>) -> Result<HeteroGraph> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(GraphError::Io {
            path: dir.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
        });
    }
    let schema_text = read(&dir.join("schema.toml"))?;
    let schema: Schema = toml::from_str(&schema_text).map_err(|e| GraphError::Schema(e.to_string()))?;

    let mut b = GraphBuilder::new();
    b.set_target(&schema.target);
    for r in &schema.relations {
        b.add_relation(&r.name, &r.src, &r.dst);
    }
    for m in &schema.metapaths {
        b.add_metapath(m);
    }
    if let Some(l) = &schema.link_relation {
        b.set_link_relation(l);
    }

    let file = "nodes.tsv";
    let text = read(&dir.join(file))?;
    let mut declared: Vec<Option<(String, usize)>> = Vec::new();
    for (line, f) in records(&text) {
        if f.len() != 2 {
            return Err(parse_err(file, line, "expected node_id<TAB>type_name"));
        }
        let id = parse_id(file, line, f[0])?;
        if id >= declared.len() {
            declared.resize(id + 1, None);
        }
        if declared[id].is_some() {
            return Err(parse_err(file, line, format!("duplicate node id {id}")));
        }
        declared[id] = Some((f[1].to_string(), line));
    }
    for (id, d) in declared.iter().enumerate() {
        match d {
            Some((t, _)) => {
                b.add_node(t);
            }
            None => {
                return Err(parse_err(
                    file,
                    0,
                    format!("node ids must be contiguous; {id} is missing"),
                ))
            }
        }
    }
    let n = b.node_count();

    let file = "edges.tsv";
    let text = read(&dir.join(file))?;
    for (line, f) in records(&text) {
        if f.len() != 3 {
            return Err(parse_err(file, line, "expected src_id<TAB>dst_id<TAB>relation"));
        }
        let (s, d) = (parse_id(file, line, f[0])?, parse_id(file, line, f[1])?);
        for id in [s, d] {
            if id >= n {
                return Err(GraphError::DanglingEdge {
                    file: file.into(),
                    line,
                    id,
                });
            }
        }
        let r = b
            .relation_id(f[2])
            .ok_or_else(|| parse_err(file, line, format!("unknown relation {:?}", f[2])))?;
        let rel = &schema.relations[r];
        let (ts, td) = (b.node_type(s).unwrap(), b.node_type(d).unwrap());
        if ts != b.type_id(&rel.src).unwrap() || td != b.type_id(&rel.dst).unwrap() {
            return Err(parse_err(
                file,
                line,
                format!(
                    "endpoint types do not match relation {} ({}-{})",
                    rel.name, rel.src, rel.dst
                ),
            ));
        }
        b.add_edge(s, d, r);
    }

    let types: Vec<String> = {
        let mut seen: Vec<String> = Vec::new();
        for (t, _) in declared.iter().flatten() {
            if !seen.contains(t) {
                seen.push(t.clone());
            }
        }
        seen
    };
    let mut dim: Option<usize> = None;
    for t in &types {
        let file = format!("features_{t}.tsv");
        let text = read(&dir.join(&file))?;
        let tid = b.type_id(t).unwrap();
        for (line, f) in records(&text) {
            let id = parse_id(&file, line, f[0])?;
            if b.node_type(id) != Some(tid) {
                return Err(parse_err(&file, line, format!("node {id} is not of type {t}")));
            }
            let values = f[1..]
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| parse_err(&file, line, format!("invalid feature {s:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let expected = *dim.get_or_insert(values.len());
            if values.len() != expected {
                return Err(GraphError::FeatureDim {
                    file,
                    line,
                    expected,
                    found: values.len(),
                });
            }
            b.set_features(id, values);
        }
    }

    let path = dir.join("labels.tsv");
    if path.exists() {
        let file = "labels.tsv";
        let text = read(&path)?;
        for (line, f) in records(&text) {
            if f.len() != 2 {
                return Err(parse_err(file, line, "expected node_id<TAB>class_index"));
            }
            let id = parse_id(file, line, f[0])?;
            if id >= n {
                return Err(parse_err(file, line, format!("unknown node {id}")));
            }
            let class = f[1]
                .parse()
                .map_err(|_| parse_err(file, line, format!("invalid class {:?}", f[1])))?;
            b.set_label(id, class);
        }
    }
    b.build()
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `g` in the layout read by [`load_dataset`].
pub fn write_dataset(g: &HeteroGraph, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| GraphError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let schema = Schema {
        target: g.type_name(g.target_type()).to_string(),
        metapaths: g.metapaths().iter().map(|m| m.name.clone()).collect(),
        link_relation: g.link_relation().map(|r| g.relations()[r].name.clone()),
        relations: g
            .relations()
            .iter()
            .map(|r| SchemaRelation {
                name: r.name.clone(),
                src: g.type_name(r.src).to_string(),
                dst: g.type_name(r.dst).to_string(),
            })
            .collect(),
    };
    let text = toml::to_string(&schema).map_err(|e| GraphError::Schema(e.to_string()))?;
    write(&dir.join("schema.toml"), &text)?;

    let mut s = String::from("# node_id\ttype\n");
    for v in 0..g.node_count() {
        writeln!(s, "{v}\t{}", g.type_name(g.node_type(v))).unwrap();
    }
    write(&dir.join("nodes.tsv"), &s)?;

    let mut s = String::from("# src\tdst\trelation\n");
    for e in g.edges() {
        writeln!(s, "{}\t{}\t{}", e.src, e.dst, g.relations()[e.relation].name).unwrap();
    }
    write(&dir.join("edges.tsv"), &s)?;

    for (t, name) in g.type_names().iter().enumerate() {
        let mut s = String::new();
        for &v in g.nodes_of_type(t) {
            write!(s, "{v}").unwrap();
            for x in g.features(v) {
                write!(s, "\t{x}").unwrap();
            }
            s.push('\n');
        }
        write(&dir.join(format!("features_{name}.tsv")), &s)?;
    }

    let labeled = g.labeled_nodes();
    if !labeled.is_empty() {
        let mut s = String::new();
        for v in labeled {
            writeln!(s, "{v}\t{}", g.label(v).unwrap()).unwrap();
        }
        write(&dir.join("labels.tsv"), &s)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::dblp_like;

    fn minimal(dir: &Path, edges: &str) {
        fs::write(
            dir.join("schema.toml"),
            "target = \"A\"\nmetapaths = [\"A,P\"]\n[[relations]]\nname = \"A-P\"\nsrc = \"A\"\ndst = \"P\"\n",
        )
        .unwrap();
        fs::write(dir.join("nodes.tsv"), "# comment\n0\tA\n1\tP\n").unwrap();
        fs::write(dir.join("edges.tsv"), edges).unwrap();
        fs::write(dir.join("features_A.tsv"), "0\t1.0\t0.5\n").unwrap();
        fs::write(dir.join("features_P.tsv"), "1\t0.0\t2.0\n").unwrap();
    }

    #[test]
    fn loads_minimal_fixture() {
        let dir = tempfile::tempdir().unwrap();
        minimal(dir.path(), "0\t1\tA-P\n");
        let g = load_dataset(dir.path()).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.feature_dim(), 2);
        assert_eq!(g.metapaths()[0].name, "A,P");
    }

    #[test]
    fn dangling_edge_names_line() {
        let dir = tempfile::tempdir().unwrap();
        minimal(dir.path(), "# header\n0\t1\tA-P\n0\t7\tA-P\n");
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(matches!(err, GraphError::DanglingEdge { line: 3, id: 7, .. }), "{err}");
        assert!(err.to_string().contains("edges.tsv:3"));
    }

    #[test]
    fn feature_dim_mismatch_names_line() {
        let dir = tempfile::tempdir().unwrap();
        minimal(dir.path(), "0\t1\tA-P\n");
        fs::write(dir.path().join("features_P.tsv"), "1\t0.0\n").unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(matches!(
            err,
            GraphError::FeatureDim {
                line: 1,
                expected: 2,
                found: 1,
                ..
            }
        ));
    }

    #[test]
    fn missing_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        minimal(dir.path(), "0\t1\tA-P\n");
        fs::remove_file(dir.path().join("features_P.tsv")).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(matches!(err, GraphError::Io { .. }));
        assert!(load_dataset(dir.path().join("nope")).is_err());
    }

    #[test]
    fn wrong_endpoint_types_rejected() {
        let dir = tempfile::tempdir().unwrap();
        minimal(dir.path(), "1\t0\tA-P\n");
        assert!(matches!(
            load_dataset(dir.path()),
            Err(GraphError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn write_then_load_preserves_graph() {
        let g = dblp_like();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&g, dir.path()).unwrap();
        let h = load_dataset(dir.path()).unwrap();
        assert_eq!(h.type_names(), g.type_names());
        assert_eq!(h.edges(), g.edges());
        assert_eq!(h.metapaths(), g.metapaths());
        for v in 0..g.node_count() {
            assert_eq!(h.features(v), g.features(v));
            assert_eq!(h.label(v), g.label(v));
        }
    }
}
