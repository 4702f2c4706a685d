//! Rule-flow graphs: rules as nodes, dependencies as typed edges.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::rule::BusinessRule;

/// The three dependency kinds an edge can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DependencyKind {
    Sequential,
    Conditional,
    Parallel,
}

impl DependencyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DependencyKind::Sequential => "sequential",
            DependencyKind::Conditional => "conditional",
            DependencyKind::Parallel => "parallel",
        }
    }
}

impl fmt::Display for DependencyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A dependency verdict for a rule pair: one of the three kinds, or `No`
/// for unrelated rules. `No` produces no edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DependencyCall {
    Sequential,
    Conditional,
    Parallel,
    No,
}

impl DependencyCall {
    pub fn kind(self) -> Option<DependencyKind> {
        match self {
            DependencyCall::Sequential => Some(DependencyKind::Sequential),
            DependencyCall::Conditional => Some(DependencyKind::Conditional),
            DependencyCall::Parallel => Some(DependencyKind::Parallel),
            DependencyCall::No => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DependencyCall::Sequential => "sequential",
            DependencyCall::Conditional => "conditional",
            DependencyCall::Parallel => "parallel",
            DependencyCall::No => "no",
        }
    }

    pub const ALL: [DependencyCall; 4] = [
        DependencyCall::Sequential,
        DependencyCall::Conditional,
        DependencyCall::Parallel,
        DependencyCall::No,
    ];
}

impl fmt::Display for DependencyCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<DependencyKind> for DependencyCall {
    fn from(kind: DependencyKind) -> Self {
        match kind {
            DependencyKind::Sequential => DependencyCall::Sequential,
            DependencyKind::Conditional => DependencyCall::Conditional,
            DependencyKind::Parallel => DependencyCall::Parallel,
        }
    }
}

impl FromStr for DependencyCall {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "sequential" => Ok(DependencyCall::Sequential),
            "conditional" => Ok(DependencyCall::Conditional),
            "parallel" => Ok(DependencyCall::Parallel),
            "no" => Ok(DependencyCall::No),
            other => Err(format!("unknown dependency label `{other}`")),
        }
    }
}

/// One labeled pair fed to [`build_graph`]: gold annotations and pipeline
/// predictions both reduce to this.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphLabel {
    pub from: usize,
    pub to: usize,
    pub call: DependencyCall,
    pub trigger: Option<String>,
}

/// A typed edge of the rule-flow graph. `trigger` is populated only on
/// conditional edges; parallel edges are stored with `from < to`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub kind: DependencyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger: Option<String>,
}

/// A rule-flow graph: nodes in document order plus typed edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct RuleFlowGraph {
    pub nodes: Vec<BusinessRule>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("dependency ({from}, {to}) references a rule outside 0..{nodes}")]
    IndexOutOfRange { from: usize, to: usize, nodes: usize },
    #[error("dependency on rule {index} points at itself")]
    SelfEdge { index: usize },
}

/// Non-fatal findings from graph construction and validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphDiagnostic {
    /// Two labels disagreed about the same rule pair; the first was kept.
    Conflict {
        a: usize,
        b: usize,
        kept: String,
        dropped: String,
    },
    /// A directed cycle over sequential edges, listed in path order.
    CycleDetected { nodes: Vec<usize> },
    /// Two conditional edges leave the same node with the same trigger.
    DuplicateTrigger { node: usize, trigger: String },
    /// Node cannot be reached from any source node over directed edges.
    Unreachable { node: usize },
}

impl fmt::Display for GraphDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphDiagnostic::Conflict { a, b, kept, dropped } => write!(
                f,
                "conflicting labels for pair ({a}, {b}): kept {kept}, dropped {dropped}"
            ),
            GraphDiagnostic::CycleDetected { nodes } => {
                let path: Vec<String> = nodes.iter().map(|n| format!("R{n}")).collect();
                write!(f, "sequential cycle through {}", path.join(" -> "))
            }
            GraphDiagnostic::DuplicateTrigger { node, trigger } => write!(
                f,
                "node R{node} has two conditional edges triggered by `{trigger}`"
            ),
            GraphDiagnostic::Unreachable { node } => {
                write!(f, "node R{node} is unreachable from every source node")
            }
        }
    }
}

/// The outcome of [`build_graph`]: the graph plus any conflict warnings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphBuild {
    pub graph: RuleFlowGraph,
    pub warnings: Vec<GraphDiagnostic>,
}

fn describe_edge(edge: &Edge) -> String {
    match &edge.trigger {
        Some(t) => format!("{} ({}->{}, trigger `{t}`)", edge.kind, edge.from, edge.to),
        None => format!("{} ({}->{})", edge.kind, edge.from, edge.to),
    }
}

/// Builds a rule-flow graph from dependency labels.
///
/// `No` labels contribute nothing. Parallel edges are canonicalized to
/// `from < to` since simultaneity has no direction, and triggers are kept
/// only on conditional edges. Each unordered rule pair gets at most one
/// edge: exact duplicate labels collapse silently, disagreeing labels keep
/// the first and emit a [`GraphDiagnostic::Conflict`] warning. Edges come
/// back sorted by (from, to, kind), so the edge list does not depend on
/// label order for conflict-free input.
pub fn build_graph(rules: &[BusinessRule], labels: &[GraphLabel]) -> Result<GraphBuild, GraphError> {
    let mut edges: Vec<Edge> = Vec::new();
    let mut by_pair: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut warnings = Vec::new();

    for label in labels {
        if label.from >= rules.len() || label.to >= rules.len() {
            return Err(GraphError::IndexOutOfRange {
                from: label.from,
                to: label.to,
                nodes: rules.len(),
            });
        }
        if label.from == label.to {
            return Err(GraphError::SelfEdge { index: label.from });
        }
        let kind = match label.call.kind() {
            Some(kind) => kind,
            None => continue,
        };
        let (from, to) = match kind {
            DependencyKind::Parallel => {
                (label.from.min(label.to), label.from.max(label.to))
            }
            _ => (label.from, label.to),
        };
        let trigger = match kind {
            DependencyKind::Conditional => label.trigger.clone(),
            _ => None,
        };
        let candidate = Edge { from, to, kind, trigger };
        let key = (from.min(to), from.max(to));
        match by_pair.get(&key) {
            None => {
                by_pair.insert(key, edges.len());
                edges.push(candidate);
            }
            Some(&existing) => {
                if edges[existing] != candidate {
                    warnings.push(GraphDiagnostic::Conflict {
                        a: key.0,
                        b: key.1,
                        kept: describe_edge(&edges[existing]),
                        dropped: describe_edge(&candidate),
                    });
                }
            }
        }
    }

    edges.sort_by_key(|e| (e.from, e.to, e.kind));
    Ok(GraphBuild {
        graph: RuleFlowGraph {
            nodes: rules.to_vec(),
            edges,
        },
        warnings,
    })
}

fn sequential_cycles(graph: &RuleFlowGraph) -> Vec<GraphDiagnostic> {
    let n = graph.nodes.len();
    let mut adjacency = vec![Vec::new(); n];
    for edge in &graph.edges {
        if edge.kind == DependencyKind::Sequential {
            adjacency[edge.from].push(edge.to);
        }
    }
    for next in &mut adjacency {
        next.sort_unstable();
    }

    // 0 = unvisited, 1 = on the current path, 2 = done.
    let mut color = vec![0u8; n];
    let mut diagnostics = Vec::new();
    let mut path: Vec<usize> = Vec::new();

    fn visit(
        node: usize,
        adjacency: &[Vec<usize>],
        color: &mut [u8],
        path: &mut Vec<usize>,
        diagnostics: &mut Vec<GraphDiagnostic>,
    ) {
        color[node] = 1;
        path.push(node);
        for &next in &adjacency[node] {
            match color[next] {
                0 => visit(next, adjacency, color, path, diagnostics),
                1 => {
                    let start = path.iter().position(|&p| p == next).unwrap_or(0);
                    diagnostics.push(GraphDiagnostic::CycleDetected {
                        nodes: path[start..].to_vec(),
                    });
                }
                _ => {}
            }
        }
        path.pop();
        color[node] = 2;
    }

    for node in 0..n {
        if color[node] == 0 {
            visit(node, &adjacency, &mut color, &mut path, &mut diagnostics);
        }
    }
    diagnostics
}

/// Checks graph-level consistency: directed cycles over sequential edges,
/// conditional out-edges of one node sharing a trigger, and (informational)
/// nodes no source node reaches over directed sequential/conditional edges.
pub fn validate_graph(graph: &RuleFlowGraph) -> Vec<GraphDiagnostic> {
    let mut diagnostics = sequential_cycles(graph);

    let mut triggers_seen: BTreeMap<(usize, &str), usize> = BTreeMap::new();
    for edge in &graph.edges {
        if edge.kind != DependencyKind::Conditional {
            continue;
        }
        if let Some(trigger) = &edge.trigger {
            *triggers_seen.entry((edge.from, trigger.as_str())).or_insert(0) += 1;
        }
    }
    for ((node, trigger), count) in triggers_seen {
        if count > 1 {
            diagnostics.push(GraphDiagnostic::DuplicateTrigger {
                node,
                trigger: trigger.to_string(),
            });
        }
    }

    let n = graph.nodes.len();
    let mut in_degree = vec![0usize; n];
    let mut adjacency = vec![Vec::new(); n];
    for edge in &graph.edges {
        if edge.kind == DependencyKind::Parallel {
            continue;
        }
        in_degree[edge.to] += 1;
        adjacency[edge.from].push(edge.to);
    }
    let mut visited = vec![false; n];
    let mut queue: Vec<usize> = (0..n).filter(|&i| in_degree[i] == 0).collect();
    for &source in &queue {
        visited[source] = true;
    }
    while let Some(node) = queue.pop() {
        for &next in &adjacency[node] {
            if !visited[next] {
                visited[next] = true;
                queue.push(next);
            }
        }
    }
    for (node, seen) in visited.iter().enumerate() {
        if !seen {
            diagnostics.push(GraphDiagnostic::Unreachable { node });
        }
    }
    diagnostics
}

fn dot_escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders the graph as Graphviz DOT text. Nodes are labeled
/// `R{index}: {slot type}`; every edge carries a `kind` attribute;
/// conditional edges show their trigger as the edge label; parallel edges
/// render undirected. Output is byte-deterministic for equal graphs.
pub fn to_dot(graph: &RuleFlowGraph) -> String {
    let mut out = String::from("digraph rule_flow {\n");
    for (i, rule) in graph.nodes.iter().enumerate() {
        let label = dot_escape(&format!("R{i}: {}", rule.condition.slot_type));
        out.push_str(&format!("  r{i} [label=\"{label}\"];\n"));
    }
    let mut edges: Vec<&Edge> = graph.edges.iter().collect();
    edges.sort_by_key(|e| (e.from, e.to, e.kind));
    for edge in edges {
        let mut attrs = vec![format!("kind={}", edge.kind)];
        if edge.kind == DependencyKind::Conditional {
            if let Some(trigger) = &edge.trigger {
                attrs.push(format!("label=\"{}\"", dot_escape(trigger)));
            }
        }
        if edge.kind == DependencyKind::Parallel {
            attrs.push("dir=none".to_string());
        }
        out.push_str(&format!(
            "  r{} -> r{} [{}];\n",
            edge.from,
            edge.to,
            attrs.join(", ")
        ));
    }
    out.push_str("}\n");
    out
}
