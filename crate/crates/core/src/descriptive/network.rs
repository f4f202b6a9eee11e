//! Bipartite network of publications and their subject codes.
//!
//! Nodes are discussion papers on one side and single-letter JEL codes on
//! the other; a paper is linked to every code it carries, so papers with two
//! or more codes bridge fields. Per-code degree and degree share (degree over
//! total edges) quantify how much attention each field receives. The graph
//! exports to DOT, GraphML, and JSON; the JSON form re-imports to an
//! identical graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DescriptiveError;
use crate::indicators::PublicationRecord;
use crate::jel::JelCode;

/// Supported network export formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkFormat {
    Dot,
    Graphml,
    Json,
}

impl FromStr for NetworkFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<NetworkFormat, String> {
        match s {
            "dot" => Ok(NetworkFormat::Dot),
            "graphml" => Ok(NetworkFormat::Graphml),
            "json" => Ok(NetworkFormat::Json),
            other => Err(format!(
                "unknown network format {other:?} (expected dot, graphml, or json)"
            )),
        }
    }
}

impl fmt::Display for NetworkFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NetworkFormat::Dot => "dot",
            NetworkFormat::Graphml => "graphml",
            NetworkFormat::Json => "json",
        })
    }
}

/// The paper–code bipartite graph with per-code degree statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    dp_nodes: BTreeSet<String>,
    jel_nodes: BTreeSet<JelCode>,
    edges: BTreeSet<(String, JelCode)>,
    jel_degree: BTreeMap<JelCode, usize>,
    jel_share: BTreeMap<JelCode, f64>,
}

impl BipartiteGraph {
    fn from_edges(edges: BTreeSet<(String, JelCode)>) -> BipartiteGraph {
        let dp_nodes: BTreeSet<String> = edges.iter().map(|(p, _)| p.clone()).collect();
        let jel_nodes: BTreeSet<JelCode> = edges.iter().map(|(_, j)| *j).collect();
        let mut jel_degree: BTreeMap<JelCode, usize> = BTreeMap::new();
        for (_, jel) in &edges {
            *jel_degree.entry(*jel).or_insert(0) += 1;
        }
        let total = edges.len();
        // degree shares are undefined (left empty) for an edgeless graph
        let jel_share = if total == 0 {
            BTreeMap::new()
        } else {
            jel_degree
                .iter()
                .map(|(&jel, &deg)| (jel, deg as f64 / total as f64))
                .collect()
        };
        BipartiteGraph {
            dp_nodes,
            jel_nodes,
            edges,
            jel_degree,
            jel_share,
        }
    }

    /// Paper node ids, sorted.
    pub fn dp_nodes(&self) -> &BTreeSet<String> {
        &self.dp_nodes
    }

    /// Code nodes, sorted.
    pub fn jel_nodes(&self) -> &BTreeSet<JelCode> {
        &self.jel_nodes
    }

    pub fn edges(&self) -> &BTreeSet<(String, JelCode)> {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edge count per code.
    pub fn jel_degree(&self) -> &BTreeMap<JelCode, usize> {
        &self.jel_degree
    }

    /// Degree over total edges per code; empty when the graph has no edges.
    pub fn jel_share(&self) -> &BTreeMap<JelCode, f64> {
        &self.jel_share
    }
}

/// Builds the bipartite graph from publication records: one edge per
/// distinct (publication, code) pair. Publications without any code carry no
/// edges and are not part of the network.
pub fn build_jel_network(pubs: &[PublicationRecord]) -> BipartiteGraph {
    let mut edges = BTreeSet::new();
    for p in pubs {
        for jel in &p.jel_codes {
            edges.insert((p.pub_id.clone(), *jel));
        }
    }
    BipartiteGraph::from_edges(edges)
}

fn dp_id(pub_id: &str) -> String {
    format!("dp:{pub_id}")
}

fn jel_id(jel: JelCode) -> String {
    format!("jel:{}", jel.letter())
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

/// Serializes the graph in the chosen format. Code nodes carry their degree
/// share as a size attribute so a renderer can scale them.
pub fn export_network(graph: &BipartiteGraph, format: NetworkFormat) -> String {
    match format {
        NetworkFormat::Dot => export_dot(graph),
        NetworkFormat::Graphml => export_graphml(graph),
        NetworkFormat::Json => export_json(graph),
    }
}

fn export_dot(graph: &BipartiteGraph) -> String {
    let mut out = String::from("graph dp_jel {\n");
    for dp in &graph.dp_nodes {
        out.push_str(&format!("  \"{}\" [kind=\"dp\"];\n", dot_escape(&dp_id(dp))));
    }
    for &jel in &graph.jel_nodes {
        let degree = graph.jel_degree.get(&jel).copied().unwrap_or(0);
        let share = graph.jel_share.get(&jel).copied().unwrap_or(0.0);
        out.push_str(&format!(
            "  \"{}\" [kind=\"jel\", degree={degree}, share={share}];\n",
            dot_escape(&jel_id(jel))
        ));
    }
    for (dp, jel) in &graph.edges {
        out.push_str(&format!(
            "  \"{}\" -- \"{}\";\n",
            dot_escape(&dp_id(dp)),
            dot_escape(&jel_id(*jel))
        ));
    }
    out.push_str("}\n");
    out
}

fn export_graphml(graph: &BipartiteGraph) -> String {
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n\
         \x20 <key id=\"kind\" for=\"node\" attr.name=\"kind\" attr.type=\"string\"/>\n\
         \x20 <key id=\"share\" for=\"node\" attr.name=\"share\" attr.type=\"double\"/>\n\
         \x20 <graph id=\"dp_jel\" edgedefault=\"undirected\">\n",
    );
    for dp in &graph.dp_nodes {
        out.push_str(&format!(
            "    <node id=\"{}\"><data key=\"kind\">dp</data></node>\n",
            xml_escape(&dp_id(dp))
        ));
    }
    for &jel in &graph.jel_nodes {
        let share = graph.jel_share.get(&jel).copied().unwrap_or(0.0);
        out.push_str(&format!(
            "    <node id=\"{}\"><data key=\"kind\">jel</data><data key=\"share\">{share}</data></node>\n",
            xml_escape(&jel_id(jel))
        ));
    }
    for (dp, jel) in &graph.edges {
        out.push_str(&format!(
            "    <edge source=\"{}\" target=\"{}\"/>\n",
            xml_escape(&dp_id(dp)),
            xml_escape(&jel_id(*jel))
        ));
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct NetworkDocument {
    nodes: Vec<NetworkNode>,
    edges: Vec<NetworkEdge>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NetworkNode {
    id: String,
    kind: String,
    share: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NetworkEdge {
    source: String,
    target: String,
}

fn export_json(graph: &BipartiteGraph) -> String {
    let mut nodes: Vec<NetworkNode> = graph
        .dp_nodes
        .iter()
        .map(|dp| NetworkNode {
            id: dp_id(dp),
            kind: "dp".into(),
            share: None,
        })
        .collect();
    nodes.extend(graph.jel_nodes.iter().map(|&jel| NetworkNode {
        id: jel_id(jel),
        kind: "jel".into(),
        share: graph.jel_share.get(&jel).copied(),
    }));
    let edges = graph
        .edges
        .iter()
        .map(|(dp, jel)| NetworkEdge {
            source: dp_id(dp),
            target: jel_id(*jel),
        })
        .collect();
    let doc = NetworkDocument { nodes, edges };
    let mut text = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    text.push('\n');
    text
}

/// Rebuilds a graph from its JSON export. Node kinds and edge endpoints are
/// validated; degree statistics are recomputed from the edges, so the result
/// is identical to the exported graph.
pub fn import_network_json(text: &str) -> Result<BipartiteGraph, DescriptiveError> {
    let doc: NetworkDocument = serde_json::from_str(text)?;
    let mut dp_nodes = BTreeSet::new();
    let mut jel_nodes = BTreeSet::new();
    for node in &doc.nodes {
        match node.kind.as_str() {
            "dp" => {
                let id = node.id.strip_prefix("dp:").ok_or_else(|| {
                    DescriptiveError::InvalidNetworkDocument(format!(
                        "dp node id {:?} lacks the dp: prefix",
                        node.id
                    ))
                })?;
                dp_nodes.insert(id.to_string());
            }
            "jel" => {
                let raw = node.id.strip_prefix("jel:").ok_or_else(|| {
                    DescriptiveError::InvalidNetworkDocument(format!(
                        "jel node id {:?} lacks the jel: prefix",
                        node.id
                    ))
                })?;
                let mut chars = raw.chars();
                let (letter, rest) = (chars.next(), chars.next());
                let letter = match (letter, rest) {
                    (Some(c), None) => c,
                    _ => {
                        return Err(DescriptiveError::InvalidNetworkDocument(format!(
                            "jel node id {:?} is not a single letter",
                            node.id
                        )))
                    }
                };
                let jel = JelCode::new(letter).map_err(|e| {
                    DescriptiveError::InvalidNetworkDocument(e.to_string())
                })?;
                jel_nodes.insert(jel);
            }
            other => {
                return Err(DescriptiveError::InvalidNetworkDocument(format!(
                    "unknown node kind {other:?}"
                )))
            }
        }
    }
    let mut edges = BTreeSet::new();
    for edge in &doc.edges {
        let dp = edge.source.strip_prefix("dp:").ok_or_else(|| {
            DescriptiveError::InvalidNetworkDocument(format!(
                "edge source {:?} is not a dp node id",
                edge.source
            ))
        })?;
        let jel_raw = edge.target.strip_prefix("jel:").ok_or_else(|| {
            DescriptiveError::InvalidNetworkDocument(format!(
                "edge target {:?} is not a jel node id",
                edge.target
            ))
        })?;
        if !dp_nodes.contains(dp) {
            return Err(DescriptiveError::InvalidNetworkDocument(format!(
                "edge source {:?} has no node declaration",
                edge.source
            )));
        }
        let mut chars = jel_raw.chars();
        let letter = chars.next().filter(|_| chars.next().is_none()).ok_or_else(|| {
            DescriptiveError::InvalidNetworkDocument(format!(
                "edge target {:?} is not a single-letter jel id",
                edge.target
            ))
        })?;
        let jel = JelCode::new(letter)
            .map_err(|e| DescriptiveError::InvalidNetworkDocument(e.to_string()))?;
        if !jel_nodes.contains(&jel) {
            return Err(DescriptiveError::InvalidNetworkDocument(format!(
                "edge target {:?} has no node declaration",
                edge.target
            )));
        }
        edges.insert((dp.to_string(), jel));
    }
    // isolated declared nodes are legal in the document but the graph keeps
    // only connected ones, matching the builder's behavior
    Ok(BipartiteGraph::from_edges(edges))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pub_with_codes(id: &str, codes: &str) -> PublicationRecord {
        PublicationRecord {
            pub_id: id.into(),
            unit_id: "SP1".into(),
            year: 2010,
            citations: 0,
            n_authors: 1,
            field_mean_citations: 1.0,
            journal_mean_citations: 1.0,
            jel_codes: JelCode::parse_list(codes).unwrap(),
        }
    }

    #[test]
    fn single_publication_with_two_codes() {
        let graph = build_jel_network(&[pub_with_codes("DP1", "C;G")]);
        assert_eq!(graph.edge_count(), 2);
        assert_eq!(graph.dp_nodes().len(), 1);
        assert_eq!(graph.jel_nodes().len(), 2);
        let c = JelCode::new('C').unwrap();
        let g = JelCode::new('G').unwrap();
        assert!((graph.jel_share()[&c] - 0.5).abs() < 1e-15);
        assert!((graph.jel_share()[&g] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_input_gives_empty_graph_with_undefined_shares() {
        let graph = build_jel_network(&[]);
        assert_eq!(graph.edge_count(), 0);
        assert!(graph.jel_share().is_empty());
    }

    #[test]
    fn duplicate_codes_on_one_publication_collapse_to_one_edge() {
        let graph = build_jel_network(&[pub_with_codes("DP1", "C;C;G")]);
        assert_eq!(graph.edge_count(), 2);
    }

    #[test]
    fn edge_count_equals_sum_of_code_list_sizes() {
        let pubs = vec![
            pub_with_codes("DP1", "C;G"),
            pub_with_codes("DP2", "E"),
            pub_with_codes("DP3", "C;E;J"),
        ];
        let graph = build_jel_network(&pubs);
        let expected: usize = pubs.iter().map(|p| p.jel_codes.len()).sum();
        assert_eq!(graph.edge_count(), expected);
        let share_sum: f64 = graph.jel_share().values().sum();
        assert!((share_sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dot_export_of_one_publication_has_three_nodes_and_two_edges() {
        let graph = build_jel_network(&[pub_with_codes("DP1", "C;G")]);
        let dot = export_network(&graph, NetworkFormat::Dot);
        assert_eq!(dot.matches("[kind=").count(), 3);
        assert_eq!(dot.matches(" -- ").count(), 2);
        assert!(dot.starts_with("graph dp_jel {"));
        assert!(dot.trim_end().ends_with('}'));
    }

    #[test]
    fn empty_graph_exports_are_well_formed() {
        let graph = build_jel_network(&[]);
        assert_eq!(export_network(&graph, NetworkFormat::Dot), "graph dp_jel {\n}\n");
        let xml = export_network(&graph, NetworkFormat::Graphml);
        assert!(xml.contains("<graphml"));
        assert!(xml.contains("</graphml>"));
        let round = import_network_json(&export_network(&graph, NetworkFormat::Json)).unwrap();
        assert_eq!(round, graph);
    }

    #[test]
    fn json_round_trip_is_identical() {
        let pubs = vec![
            pub_with_codes("DP1", "C;G"),
            pub_with_codes("DP2", "E;C"),
            pub_with_codes("DP \"quoted\"", "J"),
        ];
        let graph = build_jel_network(&pubs);
        let json = export_network(&graph, NetworkFormat::Json);
        let round = import_network_json(&json).unwrap();
        assert_eq!(round, graph);
    }

    #[test]
    fn import_rejects_dangling_edges_and_unknown_kinds() {
        let dangling = r#"{"nodes":[{"id":"jel:C","kind":"jel","share":null}],
                           "edges":[{"source":"dp:DP1","target":"jel:C"}]}"#;
        assert!(matches!(
            import_network_json(dangling),
            Err(DescriptiveError::InvalidNetworkDocument(_))
        ));
        let bad_kind = r#"{"nodes":[{"id":"x","kind":"author","share":null}],"edges":[]}"#;
        assert!(matches!(
            import_network_json(bad_kind),
            Err(DescriptiveError::InvalidNetworkDocument(_))
        ));
    }

    #[test]
    fn graphml_escapes_xml_metacharacters() {
        let graph = build_jel_network(&[pub_with_codes("a<b>&\"c\"", "C")]);
        let xml = export_network(&graph, NetworkFormat::Graphml);
        assert!(xml.contains("a&lt;b&gt;&amp;&quot;c&quot;"));
        assert!(!xml.contains("a<b>"));
    }
}
