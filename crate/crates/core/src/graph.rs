//! Exploration graph types shared by every level of the hierarchy, plus
//! JSON and DOT exports.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, RobotState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphLevel {
    Local,
    Pathways,
    Candidate,
    Unified,
}

/// A graph node: pose, predicted volumetric gain, frontier flag and an
/// optional confidence score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: u32,
    pub pose: RobotState,
    pub gain: f64,
    pub is_frontier: bool,
    pub confidence: Option<f64>,
}

impl GraphNode {
    pub fn position(&self) -> Point3 {
        self.pose.position()
    }
}

/// Simple undirected graph with Euclidean edge lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationGraph {
    pub level: GraphLevel,
    nodes: BTreeMap<u32, GraphNode>,
    /// Edges with a < b, sorted, unique.
    edges: Vec<(u32, u32, f64)>,
}

impl ExplorationGraph {
    pub fn new(level: GraphLevel) -> Self {
        Self { level, nodes: BTreeMap::new(), edges: Vec::new() }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, id: u32) -> Option<&GraphNode> {
        self.nodes.get(&id)
    }

    pub fn node_mut(&mut self, id: u32) -> Option<&mut GraphNode> {
        self.nodes.get_mut(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &GraphNode> {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.nodes.keys().copied()
    }

    pub fn edges(&self) -> &[(u32, u32, f64)] {
        &self.edges
    }

    pub fn contains(&self, id: u32) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn add_node(&mut self, node: GraphNode) -> Result<()> {
        if self.nodes.contains_key(&node.id) {
            return Err(Error::Contract(format!("duplicate node id {}", node.id)));
        }
        self.nodes.insert(node.id, node);
        Ok(())
    }

    /// Adds an undirected edge; the length is derived from the endpoint
    /// poses. Self-loops and duplicates are rejected.
    pub fn add_edge(&mut self, a: u32, b: u32) -> Result<()> {
        if a == b {
            return Err(Error::Contract("self-loop".into()));
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        let (Some(na), Some(nb)) = (self.nodes.get(&a), self.nodes.get(&b)) else {
            return Err(Error::Contract(format!("edge ({a},{b}) references missing node")));
        };
        let len = na.position().dist(&nb.position());
        match self.edges.binary_search_by(|e| (e.0, e.1).cmp(&(a, b))) {
            Ok(_) => Err(Error::Contract(format!("duplicate edge ({a},{b})"))),
            Err(pos) => {
                self.edges.insert(pos, (a, b, len));
                Ok(())
            }
        }
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search_by(|e| (e.0, e.1).cmp(&(a, b))).is_ok()
    }

    /// Adjacency lists: id -> [(neighbor, length)].
    pub fn adjacency(&self) -> BTreeMap<u32, Vec<(u32, f64)>> {
        let mut adj: BTreeMap<u32, Vec<(u32, f64)>> = BTreeMap::new();
        for id in self.nodes.keys() {
            adj.insert(*id, Vec::new());
        }
        for &(a, b, len) in &self.edges {
            adj.get_mut(&a).unwrap().push((b, len));
            adj.get_mut(&b).unwrap().push((a, len));
        }
        adj
    }

    /// Checks edge referential integrity, simplicity and length coherence.
    pub fn validate(&self) -> Result<()> {
        let mut prev: Option<(u32, u32)> = None;
        for &(a, b, len) in &self.edges {
            if a >= b {
                return Err(Error::Contract("edge not normalized".into()));
            }
            if prev == Some((a, b)) {
                return Err(Error::Contract("duplicate edge".into()));
            }
            prev = Some((a, b));
            let (Some(na), Some(nb)) = (self.nodes.get(&a), self.nodes.get(&b)) else {
                return Err(Error::Contract("edge references missing node".into()));
            };
            let want = na.position().dist(&nb.position());
            if (len - want).abs() > 1e-9 {
                return Err(Error::Contract(format!("edge ({a},{b}) length mismatch")));
            }
        }
        Ok(())
    }

    /// JSON export: `{level, nodes:[...], edges:[[a,b,len]]}`.
    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = self
            .nodes
            .values()
            .map(|n| {
                serde_json::json!({
                    "id": n.id,
                    "x": n.pose.x,
                    "y": n.pose.y,
                    "z": n.pose.z,
                    "psi": n.pose.psi,
                    "gain": n.gain,
                    "frontier": n.is_frontier,
                    "confidence": n.confidence,
                })
            })
            .collect();
        let edges: Vec<serde_json::Value> = self
            .edges
            .iter()
            .map(|(a, b, len)| serde_json::json!([a, b, len]))
            .collect();
        serde_json::json!({
            "level": match self.level {
                GraphLevel::Local => "local",
                GraphLevel::Pathways => "pathways",
                GraphLevel::Candidate => "candidate",
                GraphLevel::Unified => "unified",
            },
            "nodes": nodes,
            "edges": edges,
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let level = match value["level"].as_str() {
            Some("local") => GraphLevel::Local,
            Some("pathways") => GraphLevel::Pathways,
            Some("candidate") => GraphLevel::Candidate,
            Some("unified") => GraphLevel::Unified,
            _ => return Err(Error::Malformed("bad graph level".into())),
        };
        let mut graph = Self::new(level);
        for n in value["nodes"].as_array().ok_or_else(|| Error::Malformed("nodes".into()))? {
            graph.add_node(GraphNode {
                id: n["id"].as_u64().ok_or_else(|| Error::Malformed("node id".into()))? as u32,
                pose: RobotState::new(
                    n["x"].as_f64().unwrap_or(f64::NAN),
                    n["y"].as_f64().unwrap_or(f64::NAN),
                    n["z"].as_f64().unwrap_or(f64::NAN),
                    n["psi"].as_f64().unwrap_or(f64::NAN),
                )?,
                gain: n["gain"].as_f64().unwrap_or(0.0),
                is_frontier: n["frontier"].as_bool().unwrap_or(false),
                confidence: n["confidence"].as_f64(),
            })?;
        }
        for e in value["edges"].as_array().ok_or_else(|| Error::Malformed("edges".into()))? {
            let a = e[0].as_u64().ok_or_else(|| Error::Malformed("edge".into()))? as u32;
            let b = e[1].as_u64().ok_or_else(|| Error::Malformed("edge".into()))? as u32;
            graph.add_edge(a, b)?;
        }
        Ok(graph)
    }

    /// Graphviz DOT export for visualization.
    pub fn write_dot<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "graph exploration {{")?;
        for n in self.nodes.values() {
            let shape = if n.is_frontier { "doublecircle" } else { "circle" };
            writeln!(
                w,
                "  n{} [shape={shape} label=\"{}\\n{:.2},{:.2},{:.2}\\nphi={:.3}\"];",
                n.id, n.id, n.pose.x, n.pose.y, n.pose.z, n.gain
            )?;
        }
        for (a, b, len) in &self.edges {
            writeln!(w, "  n{a} -- n{b} [label=\"{len:.2}\"];")?;
        }
        writeln!(w, "}}")?;
        Ok(())
    }
}

/// An ordered root-to-terminal walk through an owning graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub node_ids: Vec<u32>,
    pub length: f64,
    pub confidence: Option<f64>,
}

impl Path {
    pub fn terminal(&self) -> u32 {
        *self.node_ids.last().expect("path is nonempty")
    }

    /// Verifies consecutive ids share an edge and the length is the sum of
    /// member edge lengths.
    pub fn validate(&self, graph: &ExplorationGraph) -> Result<()> {
        if self.node_ids.is_empty() {
            return Err(Error::Contract("empty path".into()));
        }
        let mut total = 0.0;
        for pair in self.node_ids.windows(2) {
            if !graph.has_edge(pair[0], pair[1]) {
                return Err(Error::Contract(format!("path edge ({},{}) missing", pair[0], pair[1])));
            }
            total += graph.node(pair[0]).unwrap().position().dist(&graph.node(pair[1]).unwrap().position());
        }
        if (total - self.length).abs() > 1e-6 {
            return Err(Error::Contract("path length mismatch".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: u32, x: f64, y: f64) -> GraphNode {
        GraphNode {
            id,
            pose: RobotState::new(x, y, 0.0, 0.0).unwrap(),
            gain: 0.0,
            is_frontier: false,
            confidence: None,
        }
    }

    #[test]
    fn edges_normalized_and_simple() {
        let mut g = ExplorationGraph::new(GraphLevel::Local);
        g.add_node(node(0, 0.0, 0.0)).unwrap();
        g.add_node(node(1, 3.0, 4.0)).unwrap();
        g.add_edge(1, 0).unwrap();
        assert!(g.add_edge(0, 1).is_err());
        assert!(g.add_edge(0, 0).is_err());
        assert_eq!(g.edges()[0], (0, 1, 5.0));
        g.validate().unwrap();
    }

    #[test]
    fn json_roundtrip() {
        let mut g = ExplorationGraph::new(GraphLevel::Candidate);
        g.add_node(node(0, 0.0, 0.0)).unwrap();
        let mut f = node(3, 1.0, 2.0);
        f.is_frontier = true;
        f.gain = 0.9;
        g.add_node(f).unwrap();
        g.add_edge(0, 3).unwrap();
        let json = g.to_json();
        let back = ExplorationGraph::from_json(&json).unwrap();
        assert_eq!(back.level, GraphLevel::Candidate);
        assert_eq!(back.node_count(), 2);
        assert!(back.node(3).unwrap().is_frontier);
        assert_eq!(back.edges(), g.edges());
    }

    #[test]
    fn dot_export_mentions_every_node() {
        let mut g = ExplorationGraph::new(GraphLevel::Local);
        g.add_node(node(0, 0.0, 0.0)).unwrap();
        g.add_node(node(1, 1.0, 0.0)).unwrap();
        g.add_edge(0, 1).unwrap();
        let mut buf = Vec::new();
        g.write_dot(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("n0") && text.contains("n1") && text.contains("n0 -- n1"));
    }
}
