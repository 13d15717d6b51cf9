//! Directed retweet graph and per-node degree statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use crate::corpus::CorpusView;

pub const GRAPH_DIM: usize = 6;

pub const GRAPH_NAMES: [&str; GRAPH_DIM] = [
    "in_degree",
    "out_degree",
    "degree",
    "weighted_in_degree",
    "weighted_out_degree",
    "weighted_degree",
];

/// Edge `i -> j` with weight w: user i retweeted user j w times.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RetweetGraph {
    nodes: BTreeSet<String>,
    edges: BTreeMap<(String, String), u64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GraphFeatures {
    pub in_degree: u64,
    pub out_degree: u64,
    pub degree: u64,
    pub weighted_in_degree: u64,
    pub weighted_out_degree: u64,
    pub weighted_degree: u64,
}

impl GraphFeatures {
    pub fn to_array(self) -> [f64; GRAPH_DIM] {
        [
            self.in_degree,
            self.out_degree,
            self.degree,
            self.weighted_in_degree,
            self.weighted_out_degree,
            self.weighted_degree,
        ]
        .map(|v| v as f64)
    }
}

impl RetweetGraph {
    pub fn add_node(&mut self, id: &str) {
        self.nodes.insert(id.to_string());
    }

    pub fn add_retweet(&mut self, from: &str, to: &str) {
        self.add_node(from);
        self.add_node(to);
        *self.edges.entry((from.to_string(), to.to_string())).or_default() += 1;
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn weight(&self, from: &str, to: &str) -> u64 {
        self.edges.get(&(from.to_string(), to.to_string())).copied().unwrap_or(0)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(String::as_str)
    }

    /// Edges in (source, target) order with their weights.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.edges.iter().map(|((a, b), &w)| (a.as_str(), b.as_str(), w))
    }

    /// Users who retweeted themselves.
    pub fn self_loops(&self) -> Vec<&str> {
        self.edges().filter(|(a, b, _)| a == b).map(|(a, _, _)| a).collect()
    }

    /// Degrees over distinct neighbours, weighted variants over retweet
    /// counts. A self-loop counts once in each direction. Unknown users get
    /// zeros.
    pub fn node_stats(&self, user: &str) -> GraphFeatures {
        let mut f = GraphFeatures::default();
        for (a, b, w) in self.edges() {
            if a == user {
                f.out_degree += 1;
                f.weighted_out_degree += w;
            }
            if b == user {
                f.in_degree += 1;
                f.weighted_in_degree += w;
            }
        }
        f.degree = f.in_degree + f.out_degree;
        f.weighted_degree = f.weighted_in_degree + f.weighted_out_degree;
        f
    }

    /// Stats for every node at once, in one pass over the edges.
    pub fn all_stats(&self) -> BTreeMap<&str, GraphFeatures> {
        let mut out: BTreeMap<&str, GraphFeatures> = self.nodes().map(|n| (n, GraphFeatures::default())).collect();
        for (a, b, w) in self.edges() {
            let fa = out.get_mut(a).expect("edge endpoints are nodes");
            fa.out_degree += 1;
            fa.weighted_out_degree += w;
            let fb = out.get_mut(b).expect("edge endpoints are nodes");
            fb.in_degree += 1;
            fb.weighted_in_degree += w;
        }
        for f in out.values_mut() {
            f.degree = f.in_degree + f.out_degree;
            f.weighted_degree = f.weighted_in_degree + f.weighted_out_degree;
        }
        out
    }

    /// `source,target,weight` rows with a header.
    pub fn write_edge_list<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["source", "target", "weight"])?;
        for (a, b, weight) in self.edges() {
            w.write_record([a, b, &weight.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Every account is a node; retweeted authors outside the corpus are added
/// as nodes too.
pub fn build_graph(view: &CorpusView) -> RetweetGraph {
    let mut g = RetweetGraph::default();
    for id in view.user_ids() {
        g.add_node(id);
    }
    for t in view.tweets() {
        if let Some(rt) = &t.retweet {
            g.add_retweet(&t.author_id, &rt.author_id);
        }
    }
    g
}
