//! Narrative entity knowledge graph: entity vertices, timestamped event
//! edges, and the recency queries the plot loop retrieves context from.
//!
//! The graph is embedded and in-process. [`NekgGraph::export`] emits
//! GraphML, JSON, or a property-graph import script for use with an
//! external graph database; GraphML and JSON re-import losslessly.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::storyline::StorylineEntry;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("an event edge with time_stamp {0} already exists")]
    DuplicateTimestamp(u64),
    #[error("alias {alias:?} already resolves to {existing:?}, not {requested:?}")]
    AliasConflict {
        alias: String,
        existing: String,
        requested: String,
    },
    #[error("entity {0:?} is not a vertex of the graph")]
    UnknownVertex(String),
    #[error("unsupported export format {0:?} (expected graphml, json, or import-script)")]
    UnsupportedFormat(String),
    #[error("cannot import graph document: {0}")]
    InvalidDocument(String),
}

/// An entity vertex plus every alias that resolves to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRef {
    pub canonical_name: String,
    pub aliases: BTreeSet<String>,
}

/// A directed, timestamped event between two entities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventEdge {
    pub edge_id: u64,
    /// Canonical subject entity name.
    pub subject: String,
    /// Canonical object entity name.
    pub object: String,
    pub verb: String,
    /// Copied from the originating storyline entry.
    pub time_stamp: u64,
    pub chapter_index: usize,
}

/// Export formats understood by [`NekgGraph::export`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphExportFormat {
    GraphMl,
    Json,
    /// Property-graph CREATE statements for an external database import.
    ImportScript,
}

impl std::str::FromStr for GraphExportFormat {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, GraphError> {
        match s {
            "graphml" => Ok(GraphExportFormat::GraphMl),
            "json" => Ok(GraphExportFormat::Json),
            "import-script" => Ok(GraphExportFormat::ImportScript),
            other => Err(GraphError::UnsupportedFormat(other.to_string())),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    vertices: Vec<EntityRef>,
    edges: Vec<EventEdge>,
}

/// The narrative entity knowledge graph.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NekgGraph {
    vertices: BTreeMap<String, EntityRef>,
    edges: Vec<EventEdge>,
    alias_map: BTreeMap<String, String>,
    next_edge_id: u64,
    stamps: BTreeSet<u64>,
}

impl NekgGraph {
    pub fn new() -> Self {
        NekgGraph {
            vertices: BTreeMap::new(),
            edges: Vec::new(),
            alias_map: BTreeMap::new(),
            next_edge_id: 1,
            stamps: BTreeSet::new(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = &EntityRef> {
        self.vertices.values()
    }

    pub fn edges(&self) -> &[EventEdge] {
        &self.edges
    }

    /// Resolves a name through the alias map to a canonical vertex name.
    pub fn resolve(&self, name: &str) -> Option<&str> {
        if self.vertices.contains_key(name) {
            Some(self.vertices.get_key_value(name).expect("present").0)
        } else {
            self.alias_map.get(name).map(String::as_str)
        }
    }

    /// Number of edges touching an entity (after alias resolution).
    pub fn degree(&self, name: &str) -> usize {
        match self.resolve(name) {
            None => 0,
            Some(canon) => self
                .edges
                .iter()
                .filter(|e| e.subject == canon || e.object == canon)
                .count(),
        }
    }

    fn upsert_vertex(&mut self, name: &str) -> String {
        if let Some(canon) = self.resolve(name) {
            return canon.to_string();
        }
        self.vertices.insert(
            name.to_string(),
            EntityRef {
                canonical_name: name.to_string(),
                aliases: BTreeSet::new(),
            },
        );
        name.to_string()
    }

    /// Records a storyline entry as an event edge.
    ///
    /// Subject and object vertices are created if absent; SVS nodes become
    /// self-loop edges. Each time_stamp may be recorded once.
    pub fn record_event(&mut self, entry: &StorylineEntry) -> Result<EventEdge, GraphError> {
        if self.stamps.contains(&entry.time_stamp) {
            return Err(GraphError::DuplicateTimestamp(entry.time_stamp));
        }
        let edge = self.push_edge(
            entry.node.subject(),
            entry.node.verb(),
            entry.node.object(),
            entry.time_stamp,
            entry.chapter_index,
        );
        self.stamps.insert(entry.time_stamp);
        Ok(edge)
    }

    /// Conjunction-splitting variant of [`NekgGraph::record_event`].
    ///
    /// Compound names joined by the token "and" are split into their
    /// conjuncts and every subject/object pair becomes an edge, all
    /// sharing the entry's time_stamp.
    pub fn record_event_split(
        &mut self,
        entry: &StorylineEntry,
    ) -> Result<Vec<EventEdge>, GraphError> {
        if self.stamps.contains(&entry.time_stamp) {
            return Err(GraphError::DuplicateTimestamp(entry.time_stamp));
        }
        let subjects = split_conjuncts(entry.node.subject());
        let objects = split_conjuncts(entry.node.object());
        let mut edges = Vec::with_capacity(subjects.len() * objects.len());
        for s in &subjects {
            for o in &objects {
                edges.push(self.push_edge(
                    s,
                    entry.node.verb(),
                    o,
                    entry.time_stamp,
                    entry.chapter_index,
                ));
            }
        }
        self.stamps.insert(entry.time_stamp);
        Ok(edges)
    }

    fn push_edge(
        &mut self,
        subject: &str,
        verb: &str,
        object: &str,
        time_stamp: u64,
        chapter_index: usize,
    ) -> EventEdge {
        let subject = self.upsert_vertex(subject);
        let object = self.upsert_vertex(object);
        let edge = EventEdge {
            edge_id: self.next_edge_id,
            subject,
            object,
            verb: verb.to_string(),
            time_stamp,
            chapter_index,
        };
        self.next_edge_id += 1;
        self.edges.push(edge.clone());
        edge
    }

    fn sorted_desc(mut hits: Vec<EventEdge>, limit: usize) -> Vec<EventEdge> {
        hits.sort_by(|a, b| {
            b.time_stamp
                .cmp(&a.time_stamp)
                .then(b.edge_id.cmp(&a.edge_id))
        });
        hits.truncate(limit);
        hits
    }

    /// The most recent events between two entities, ignoring edge
    /// direction. `a == b` matches self-loops only. Names absent from the
    /// graph yield an empty list.
    pub fn events_between(&self, a: &str, b: &str, limit: usize) -> Vec<EventEdge> {
        let (Some(a), Some(b)) = (self.resolve(a), self.resolve(b)) else {
            return Vec::new();
        };
        let hits = self
            .edges
            .iter()
            .filter(|e| {
                if a == b {
                    e.subject == a && e.object == a
                } else {
                    (e.subject == a && e.object == b) || (e.subject == b && e.object == a)
                }
            })
            .cloned()
            .collect();
        Self::sorted_desc(hits, limit)
    }

    /// The most recent events where the entity is subject or object.
    pub fn events_involving(&self, entity: &str, limit: usize) -> Vec<EventEdge> {
        let Some(canon) = self.resolve(entity) else {
            return Vec::new();
        };
        let hits = self
            .edges
            .iter()
            .filter(|e| e.subject == canon || e.object == canon)
            .cloned()
            .collect();
        Self::sorted_desc(hits, limit)
    }

    /// Makes `alias` resolve to the existing vertex `canonical`.
    ///
    /// If `alias` is itself a vertex, its edges are re-homed to
    /// `canonical`, its own aliases are absorbed, and the vertex is
    /// removed.
    pub fn merge_alias(&mut self, alias: &str, canonical: &str) -> Result<(), GraphError> {
        if !self.vertices.contains_key(canonical) {
            return Err(GraphError::UnknownVertex(canonical.to_string()));
        }
        if alias == canonical {
            return Ok(());
        }
        if let Some(existing) = self.alias_map.get(alias) {
            if existing == canonical {
                return Ok(());
            }
            return Err(GraphError::AliasConflict {
                alias: alias.to_string(),
                existing: existing.clone(),
                requested: canonical.to_string(),
            });
        }
        let mut absorbed: Vec<String> = Vec::new();
        if let Some(removed) = self.vertices.remove(alias) {
            for edge in &mut self.edges {
                if edge.subject == alias {
                    edge.subject = canonical.to_string();
                }
                if edge.object == alias {
                    edge.object = canonical.to_string();
                }
            }
            absorbed.extend(removed.aliases);
        }
        for a in &absorbed {
            self.alias_map.insert(a.clone(), canonical.to_string());
        }
        self.alias_map
            .insert(alias.to_string(), canonical.to_string());
        let target = self.vertices.get_mut(canonical).expect("checked above");
        target.aliases.insert(alias.to_string());
        target.aliases.extend(absorbed);
        Ok(())
    }

    /// Serializes the graph in the requested format.
    pub fn export(&self, format: GraphExportFormat) -> String {
        match format {
            GraphExportFormat::Json => self.export_json(),
            GraphExportFormat::GraphMl => self.export_graphml(),
            GraphExportFormat::ImportScript => self.export_import_script(),
        }
    }

    fn doc(&self) -> GraphDoc {
        let mut edges = self.edges.clone();
        edges.sort_by_key(|e| e.edge_id);
        GraphDoc {
            vertices: self.vertices.values().cloned().collect(),
            edges,
        }
    }

    fn export_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(&self.doc()).expect("graph doc serializes");
        out.push('\n');
        out
    }

    fn export_graphml(&self) -> String {
        let doc = self.doc();
        let ids: BTreeMap<&str, usize> = doc
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.canonical_name.as_str(), i))
            .collect();
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        out.push_str(concat!(
            "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\"",
            " xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\"",
            " xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns",
            " http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n"
        ));
        out.push_str("  <key id=\"d0\" for=\"node\" attr.name=\"name\" attr.type=\"string\"/>\n");
        out.push_str(
            "  <key id=\"d1\" for=\"node\" attr.name=\"aliases\" attr.type=\"string\"/>\n",
        );
        out.push_str("  <key id=\"d2\" for=\"edge\" attr.name=\"verb\" attr.type=\"string\"/>\n");
        out.push_str(
            "  <key id=\"d3\" for=\"edge\" attr.name=\"time_stamp\" attr.type=\"long\"/>\n",
        );
        out.push_str(
            "  <key id=\"d4\" for=\"edge\" attr.name=\"chapter_index\" attr.type=\"long\"/>\n",
        );
        out.push_str("  <graph id=\"G\" edgedefault=\"directed\">\n");
        for (i, v) in doc.vertices.iter().enumerate() {
            let aliases =
                serde_json::to_string(&v.aliases).expect("alias set serializes");
            let _ = writeln!(
                out,
                "    <node id=\"n{i}\"><data key=\"d0\">{}</data><data key=\"d1\">{}</data></node>",
                xml_escape(&v.canonical_name),
                xml_escape(&aliases),
            );
        }
        for e in &doc.edges {
            let src = ids[e.subject.as_str()];
            let dst = ids[e.object.as_str()];
            let _ = writeln!(
                out,
                "    <edge id=\"e{}\" source=\"n{src}\" target=\"n{dst}\">\
<data key=\"d2\">{}</data><data key=\"d3\">{}</data><data key=\"d4\">{}</data></edge>",
                e.edge_id,
                xml_escape(&e.verb),
                e.time_stamp,
                e.chapter_index,
            );
        }
        out.push_str("  </graph>\n</graphml>\n");
        out
    }

    fn export_import_script(&self) -> String {
        let doc = self.doc();
        let mut out = String::new();
        for v in &doc.vertices {
            let aliases: Vec<String> = v.aliases.iter().map(|a| cypher_str(a)).collect();
            let _ = writeln!(
                out,
                "CREATE (:Entity {{name: {}, aliases: [{}]}});",
                cypher_str(&v.canonical_name),
                aliases.join(", "),
            );
        }
        for e in &doc.edges {
            let _ = writeln!(
                out,
                "MATCH (a:Entity {{name: {}}}), (b:Entity {{name: {}}}) \
CREATE (a)-[:EVENT {{verb: {}, time_stamp: {}, chapter_index: {}, edge_id: {}}}]->(b);",
                cypher_str(&e.subject),
                cypher_str(&e.object),
                cypher_str(&e.verb),
                e.time_stamp,
                e.chapter_index,
                e.edge_id,
            );
        }
        out
    }

    fn from_doc(doc: GraphDoc) -> Result<Self, GraphError> {
        let mut graph = NekgGraph::new();
        for v in doc.vertices {
            if graph.vertices.contains_key(&v.canonical_name) {
                return Err(GraphError::InvalidDocument(format!(
                    "duplicate vertex {:?}",
                    v.canonical_name
                )));
            }
            for alias in &v.aliases {
                if graph.alias_map.contains_key(alias) {
                    return Err(GraphError::InvalidDocument(format!(
                        "alias {alias:?} maps to two vertices"
                    )));
                }
                graph
                    .alias_map
                    .insert(alias.clone(), v.canonical_name.clone());
            }
            graph.vertices.insert(v.canonical_name.clone(), v);
        }
        let mut edges = doc.edges;
        edges.sort_by_key(|e| e.edge_id);
        for e in &edges {
            for endpoint in [&e.subject, &e.object] {
                if !graph.vertices.contains_key(endpoint) {
                    return Err(GraphError::InvalidDocument(format!(
                        "edge {} references unknown vertex {:?}",
                        e.edge_id, endpoint
                    )));
                }
            }
            graph.stamps.insert(e.time_stamp);
        }
        graph.next_edge_id = edges.iter().map(|e| e.edge_id).max().unwrap_or(0) + 1;
        graph.edges = edges;
        Ok(graph)
    }

    /// Reconstructs a graph from its JSON export.
    pub fn import_json(text: &str) -> Result<Self, GraphError> {
        let doc: GraphDoc =
            serde_json::from_str(text).map_err(|e| GraphError::InvalidDocument(e.to_string()))?;
        Self::from_doc(doc)
    }

    /// Reconstructs a graph from its GraphML export.
    pub fn import_graphml(text: &str) -> Result<Self, GraphError> {
        let xml = roxmltree::Document::parse(text)
            .map_err(|e| GraphError::InvalidDocument(e.to_string()))?;
        let root = xml.root_element();
        if root.tag_name().name() != "graphml" {
            return Err(GraphError::InvalidDocument(
                "root element is not <graphml>".into(),
            ));
        }
        // attr.name -> key id, so imports survive renumbered keys.
        let mut key_names: BTreeMap<String, String> = BTreeMap::new();
        for key in root.children().filter(|n| n.has_tag_name("key")) {
            if let (Some(id), Some(name)) = (key.attribute("id"), key.attribute("attr.name")) {
                key_names.insert(id.to_string(), name.to_string());
            }
        }
        let graph_el = root
            .children()
            .find(|n| n.has_tag_name("graph"))
            .ok_or_else(|| GraphError::InvalidDocument("missing <graph> element".into()))?;
        let data_of = |node: roxmltree::Node, want: &str| -> Option<String> {
            node.children()
                .filter(|c| c.has_tag_name("data"))
                .find(|c| {
                    c.attribute("key")
                        .and_then(|k| key_names.get(k))
                        .is_some_and(|n| n == want)
                })
                .map(|c| c.text().unwrap_or("").to_string())
        };
        let mut vertices = Vec::new();
        let mut node_names: BTreeMap<String, String> = BTreeMap::new();
        for node in graph_el.children().filter(|n| n.has_tag_name("node")) {
            let id = node
                .attribute("id")
                .ok_or_else(|| GraphError::InvalidDocument("node without id".into()))?;
            let name = data_of(node, "name")
                .ok_or_else(|| GraphError::InvalidDocument(format!("node {id} has no name")))?;
            let aliases: BTreeSet<String> = match data_of(node, "aliases") {
                Some(raw) => serde_json::from_str(&raw)
                    .map_err(|e| GraphError::InvalidDocument(format!("bad alias list: {e}")))?,
                None => BTreeSet::new(),
            };
            node_names.insert(id.to_string(), name.clone());
            vertices.push(EntityRef {
                canonical_name: name,
                aliases,
            });
        }
        let mut edges = Vec::new();
        for edge in graph_el.children().filter(|n| n.has_tag_name("edge")) {
            let lookup = |attr: &str| -> Result<String, GraphError> {
                let id = edge
                    .attribute(attr)
                    .ok_or_else(|| GraphError::InvalidDocument(format!("edge missing {attr}")))?;
                node_names
                    .get(id)
                    .cloned()
                    .ok_or_else(|| GraphError::InvalidDocument(format!("unknown node id {id:?}")))
            };
            let parse_num = |field: &str| -> Result<u64, GraphError> {
                data_of(edge, field)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| {
                        GraphError::InvalidDocument(format!("edge missing numeric {field}"))
                    })
            };
            let edge_id = edge
                .attribute("id")
                .and_then(|id| id.strip_prefix('e'))
                .and_then(|id| id.parse().ok())
                .ok_or_else(|| GraphError::InvalidDocument("edge id not of form eN".into()))?;
            edges.push(EventEdge {
                edge_id,
                subject: lookup("source")?,
                object: lookup("target")?,
                verb: data_of(edge, "verb").unwrap_or_default(),
                time_stamp: parse_num("time_stamp")?,
                chapter_index: parse_num("chapter_index")? as usize,
            });
        }
        Self::from_doc(GraphDoc { vertices, edges })
    }
}

/// Splits a compound entity on the standalone token "and".
///
/// Returns the original name unless the split yields two or more
/// non-empty conjuncts.
fn split_conjuncts(name: &str) -> Vec<String> {
    let tokens: Vec<&str> = name.split_whitespace().collect();
    let mut groups: Vec<String> = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for tok in &tokens {
        if *tok == "and" {
            groups.push(current.join(" "));
            current.clear();
        } else {
            current.push(tok);
        }
    }
    groups.push(current.join(" "));
    if groups.len() >= 2 && groups.iter().all(|g| !g.is_empty()) {
        groups
    } else {
        vec![name.to_string()]
    }
}

fn xml_escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            other => out.push(other),
        }
    }
    out
}

fn cypher_str(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('\'');
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            other => out.push(other),
        }
    }
    out.push('\'');
    out
}
