//! Spillover networks: directed graphs built from a normalized
//! decomposition, quantile pruning, undirected conversion, Louvain
//! communities and graph export.
//!
//! Edges point from the shock source `j` to the receiver `i` and carry
//! `theta_norm[i][j]`. Nodes and edges are kept sorted by ticker so every
//! export is byte-for-byte reproducible.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gfevd::{summarize, SpilloverMatrix};
use crate::stats;

/// Descriptive attributes attached to a node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMeta {
    pub ticker: String,
    pub subsector: String,
    pub country: String,
}

impl NodeMeta {
    pub fn bare(ticker: impl Into<String>) -> Self {
        NodeMeta {
            ticker: ticker.into(),
            subsector: String::new(),
            country: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub ticker: String,
    pub subsector: String,
    pub country: String,
    /// Contribution to others in the unpruned matrix.
    pub node_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: String,
    pub target: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpilloverNetwork {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub directed: bool,
}

impl SpilloverNetwork {
    pub fn node_index(&self) -> BTreeMap<&str, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (n.ticker.as_str(), i)).collect()
    }

    fn sort(&mut self) {
        self.nodes.sort_by(|a, b| a.ticker.cmp(&b.ticker));
        self.edges.sort_by(|a, b| (&a.source, &a.target).cmp(&(&b.source, &b.target)));
    }
}

/// One directed edge `j -> i` per positive off-diagonal `theta_norm[i][j]`.
/// `meta` must describe exactly the matrix labels (any order).
pub fn build_network(m: &SpilloverMatrix, meta: &[NodeMeta]) -> Result<SpilloverNetwork> {
    let by_ticker: BTreeMap<&str, &NodeMeta> = meta.iter().map(|x| (x.ticker.as_str(), x)).collect();
    let labels: BTreeSet<&str> = m.labels.iter().map(String::as_str).collect();
    if labels.len() != m.labels.len() {
        return Err(Error::Data("duplicate labels in spillover matrix".into()));
    }
    let known: BTreeSet<&str> = by_ticker.keys().copied().collect();
    if labels != known || meta.len() != known.len() {
        let missing: Vec<&str> = labels.difference(&known).copied().collect();
        let extra: Vec<&str> = known.difference(&labels).copied().collect();
        return Err(Error::Data(format!(
            "metadata does not match matrix labels (missing: {missing:?}, unexpected: {extra:?})"
        )));
    }
    let summary = summarize(m);
    let n = m.n();
    let nodes = (0..n)
        .map(|i| {
            let md = by_ticker[m.labels[i].as_str()];
            Node {
                ticker: m.labels[i].clone(),
                subsector: md.subsector.clone(),
                country: md.country.clone(),
                node_weight: summary.to_others[i],
            }
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let w = m.theta_norm[(i, j)];
            if i != j && w > 0.0 {
                edges.push(Edge {
                    source: m.labels[j].clone(),
                    target: m.labels[i].clone(),
                    weight: w,
                });
            }
        }
    }
    let mut net = SpilloverNetwork {
        nodes,
        edges,
        directed: true,
    };
    net.sort();
    Ok(net)
}

/// Drop edges whose `|weight|` is strictly below the `q`-quantile of all
/// edge weights (linear interpolation, inclusive). Nodes are never removed.
pub fn prune_edges(net: &SpilloverNetwork, q: f64) -> SpilloverNetwork {
    let mut out = net.clone();
    if net.edges.is_empty() {
        return out;
    }
    let weights: Vec<f64> = net.edges.iter().map(|e| e.weight.abs()).collect();
    let threshold = stats::quantile_linear(&weights, q.clamp(0.0, 1.0));
    out.edges.retain(|e| e.weight.abs() >= threshold);
    out
}

/// Undirected edge `{i, j}` weighted by the sum of the surviving directed
/// weights; the endpoint with the smaller ticker is stored as `source`.
pub fn to_undirected(net: &SpilloverNetwork) -> SpilloverNetwork {
    let mut acc: BTreeMap<(String, String), f64> = BTreeMap::new();
    for e in &net.edges {
        let key = if e.source <= e.target {
            (e.source.clone(), e.target.clone())
        } else {
            (e.target.clone(), e.source.clone())
        };
        *acc.entry(key).or_insert(0.0) += e.weight;
    }
    SpilloverNetwork {
        nodes: net.nodes.clone(),
        edges: acc
            .into_iter()
            .map(|((source, target), weight)| Edge { source, target, weight })
            .collect(),
        directed: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PruneOrder {
    #[default]
    PruneThenConvert,
    ConvertThenPrune,
}

impl FromStr for PruneOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "prune_then_convert" => Ok(PruneOrder::PruneThenConvert),
            "convert_then_prune" => Ok(PruneOrder::ConvertThenPrune),
            other => Err(Error::Config(format!("unknown prune order '{other}'"))),
        }
    }
}

/// The undirected graph that community detection runs on.
pub fn community_graph(directed: &SpilloverNetwork, q: f64, order: PruneOrder) -> SpilloverNetwork {
    match order {
        PruneOrder::PruneThenConvert => to_undirected(&prune_edges(directed, q)),
        PruneOrder::ConvertThenPrune => prune_edges(&to_undirected(directed), q),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityPartition {
    /// Sorted tickers.
    pub labels: Vec<String>,
    /// Community id per label; ids are numbered by first appearance.
    pub assignment: Vec<usize>,
    pub modularity: f64,
    pub sizes: Vec<usize>,
    /// Node weights carried over from the network, aligned with `labels`.
    pub node_weights: Vec<f64>,
}

impl CommunityPartition {
    pub fn members(&self, community: usize) -> Vec<&str> {
        self.labels
            .iter()
            .zip(&self.assignment)
            .filter(|(_, &c)| c == community)
            .map(|(l, _)| l.as_str())
            .collect()
    }

    /// Most members, then larger total node weight, then the smallest
    /// member ticker.
    pub fn largest_community(&self) -> Option<usize> {
        let k = self.sizes.len();
        let weight = |c: usize| -> f64 {
            self.assignment
                .iter()
                .zip(&self.node_weights)
                .filter(|(&a, _)| a == c)
                .map(|(_, w)| w)
                .sum()
        };
        let first = |c: usize| self.members(c).into_iter().min().unwrap_or("").to_string();
        (0..k).filter(|&c| self.sizes[c] > 0).max_by(|&a, &b| {
            self.sizes[a]
                .cmp(&self.sizes[b])
                .then(weight(a).partial_cmp(&weight(b)).unwrap_or(std::cmp::Ordering::Equal))
                .then_with(|| first(b).cmp(&first(a)))
        })
    }
}

/// Symmetric dense weight matrix over the network's node order.
fn adjacency(net: &SpilloverNetwork) -> Vec<Vec<f64>> {
    let idx = net.node_index();
    let n = net.nodes.len();
    let mut a = vec![vec![0.0; n]; n];
    for e in &net.edges {
        let (i, j) = (idx[e.source.as_str()], idx[e.target.as_str()]);
        if i == j {
            a[i][i] += 2.0 * e.weight;
        } else {
            a[i][j] += e.weight;
            a[j][i] += e.weight;
        }
    }
    a
}

fn modularity_dense(a: &[Vec<f64>], assignment: &[usize]) -> f64 {
    let two_m: f64 = a.iter().flatten().sum();
    if two_m <= 0.0 {
        return 0.0;
    }
    let k: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let n_comm = assignment.iter().max().map_or(0, |m| m + 1);
    let mut inside = vec![0.0; n_comm];
    let mut tot = vec![0.0; n_comm];
    for i in 0..a.len() {
        tot[assignment[i]] += k[i];
        for j in 0..a.len() {
            if assignment[i] == assignment[j] {
                inside[assignment[i]] += a[i][j];
            }
        }
    }
    (0..n_comm).map(|c| inside[c] / two_m - (tot[c] / two_m).powi(2)).sum()
}

/// Newman modularity (resolution 1) of `assignment` on an undirected network
/// whose nodes are in the network's own order.
pub fn modularity(net: &SpilloverNetwork, assignment: &[usize]) -> f64 {
    modularity_dense(&adjacency(net), assignment)
}

/// One pass of local moves; returns the community of every node.
fn local_moves(a: &[Vec<f64>], two_m: f64) -> (Vec<usize>, bool) {
    let n = a.len();
    let k: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let mut comm: Vec<usize> = (0..n).collect();
    let mut tot = k.clone();
    let mut moved_any = false;
    loop {
        let mut moved = false;
        for i in 0..n {
            let own = comm[i];
            tot[own] -= k[i];
            let mut links: BTreeMap<usize, f64> = BTreeMap::new();
            links.insert(own, 0.0);
            for j in 0..n {
                if j != i && a[i][j] > 0.0 {
                    *links.entry(comm[j]).or_insert(0.0) += a[i][j];
                }
            }
            let gain = |c: usize, kin: f64| kin - tot[c] * k[i] / two_m;
            let mut best = own;
            let mut best_gain = gain(own, links[&own]);
            for (&c, &kin) in &links {
                let g = gain(c, kin);
                if g > best_gain + 1e-12 {
                    best = c;
                    best_gain = g;
                }
            }
            tot[best] += k[i];
            if best != own {
                comm[i] = best;
                moved = true;
                moved_any = true;
            }
        }
        if !moved {
            break;
        }
    }
    (renumber(&comm), moved_any)
}

/// Relabel ids by first appearance.
fn renumber(comm: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    comm.iter()
        .map(|c| {
            let next = map.len();
            *map.entry(*c).or_insert(next)
        })
        .collect()
}

fn aggregate(a: &[Vec<f64>], comm: &[usize]) -> Vec<Vec<f64>> {
    let k = comm.iter().max().map_or(0, |m| m + 1);
    let mut out = vec![vec![0.0; k]; k];
    for i in 0..a.len() {
        for j in 0..a.len() {
            out[comm[i]][comm[j]] += a[i][j];
        }
    }
    out
}

/// Two-phase Louvain with nodes swept in sorted-ticker order.
pub fn louvain(net: &SpilloverNetwork) -> CommunityPartition {
    let mut sorted = net.clone();
    sorted.sort();
    let a0 = adjacency(&sorted);
    let n = a0.len();
    let two_m: f64 = a0.iter().flatten().sum();
    let mut assignment: Vec<usize> = (0..n).collect();
    if two_m > 0.0 {
        let mut a = a0.clone();
        loop {
            let (comm, moved) = local_moves(&a, two_m);
            if !moved {
                break;
            }
            for c in assignment.iter_mut() {
                *c = comm[*c];
            }
            a = aggregate(&a, &comm);
        }
        assignment = renumber(&assignment);
    }
    let n_comm = assignment.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0; n_comm];
    for &c in &assignment {
        sizes[c] += 1;
    }
    CommunityPartition {
        labels: sorted.nodes.iter().map(|x| x.ticker.clone()).collect(),
        modularity: modularity_dense(&a0, &assignment),
        assignment,
        sizes,
        node_weights: sorted.nodes.iter().map(|x| x.node_weight).collect(),
    }
}

/// Intersection of the largest community of every partition, sorted.
pub fn central_intersection(partitions: &[CommunityPartition]) -> Vec<String> {
    let mut sets = partitions.iter().map(|p| {
        p.largest_community()
            .map(|c| p.members(c).into_iter().map(str::to_string).collect::<BTreeSet<String>>())
            .unwrap_or_default()
    });
    let Some(first) = sets.next() else {
        return Vec::new();
    };
    sets.fold(first, |acc, s| acc.intersection(&s).cloned().collect()).into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphFormat {
    GraphMl,
    Dot,
    Json,
}

impl GraphFormat {
    pub fn extension(self) -> &'static str {
        match self {
            GraphFormat::GraphMl => "graphml",
            GraphFormat::Dot => "dot",
            GraphFormat::Json => "json",
        }
    }
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "graphml" => Ok(GraphFormat::GraphMl),
            "dot" => Ok(GraphFormat::Dot),
            "json" => Ok(GraphFormat::Json),
            other => Err(Error::Usage(format!("unknown graph format '{other}'"))),
        }
    }
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn graphml(net: &SpilloverNetwork) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\" xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n");
    s.push_str("  <key id=\"subsector\" for=\"node\" attr.name=\"subsector\" attr.type=\"string\"/>\n");
    s.push_str("  <key id=\"country\" for=\"node\" attr.name=\"country\" attr.type=\"string\"/>\n");
    s.push_str("  <key id=\"to_others\" for=\"node\" attr.name=\"to_others\" attr.type=\"double\"/>\n");
    s.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
    let kind = if net.directed { "directed" } else { "undirected" };
    let _ = writeln!(s, "  <graph id=\"spillover\" edgedefault=\"{kind}\">");
    for n in &net.nodes {
        let _ = writeln!(s, "    <node id=\"{}\">", xml_escape(&n.ticker));
        let _ = writeln!(s, "      <data key=\"subsector\">{}</data>", xml_escape(&n.subsector));
        let _ = writeln!(s, "      <data key=\"country\">{}</data>", xml_escape(&n.country));
        let _ = writeln!(s, "      <data key=\"to_others\">{}</data>", n.node_weight);
        s.push_str("    </node>\n");
    }
    for e in &net.edges {
        let _ = writeln!(
            s,
            "    <edge source=\"{}\" target=\"{}\">\n      <data key=\"weight\">{}</data>\n    </edge>",
            xml_escape(&e.source),
            xml_escape(&e.target),
            e.weight
        );
    }
    s.push_str("  </graph>\n</graphml>\n");
    s
}

fn dot(net: &SpilloverNetwork) -> String {
    let (kw, arrow) = if net.directed { ("digraph", "->") } else { ("graph", "--") };
    let mut s = format!("{kw} spillover {{\n");
    for n in &net.nodes {
        let _ = writeln!(
            s,
            "  \"{}\" [subsector=\"{}\", country=\"{}\", to_others={}];",
            dot_escape(&n.ticker),
            dot_escape(&n.subsector),
            dot_escape(&n.country),
            n.node_weight
        );
    }
    for e in &net.edges {
        let _ = writeln!(s, "  \"{}\" {arrow} \"{}\" [weight={}];", dot_escape(&e.source), dot_escape(&e.target), e.weight);
    }
    s.push_str("}\n");
    s
}

pub fn render_graph(net: &SpilloverNetwork, format: GraphFormat) -> Result<String> {
    let mut sorted = net.clone();
    sorted.sort();
    Ok(match format {
        GraphFormat::GraphMl => graphml(&sorted),
        GraphFormat::Dot => dot(&sorted),
        GraphFormat::Json => serde_json::to_string_pretty(&sorted)? + "\n",
    })
}

pub fn export_graph(net: &SpilloverNetwork, format: GraphFormat, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, render_graph(net, format)?)?;
    Ok(())
}

pub fn import_json(text: &str) -> Result<SpilloverNetwork> {
    let net: SpilloverNetwork = serde_json::from_str(text)?;
    let idx = net.node_index();
    for e in &net.edges {
        for end in [&e.source, &e.target] {
            if !idx.contains_key(end.as_str()) {
                return Err(Error::Data(format!("edge endpoint '{end}' is not a node")));
            }
        }
    }
    Ok(net)
}
