//! Graph and corpus statistics: node/edge counts, undirected diameter,
//! degrees, DAG detection, and the aggregate TSV report.

use crate::amr::AmrGraph;
use crate::corpus::Example;
use std::collections::VecDeque;
use std::fmt::Write as _;
use thiserror::Error;

/// Per-graph statistics over the original labeled graph (not the Levi view).
#[derive(Clone, Debug, PartialEq)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    /// Max over connected components of the longest undirected
    /// shortest path, in hops.
    pub diameter: usize,
    pub max_out_degree: usize,
    /// Mean undirected degree, `2m / n`.
    pub mean_degree: f64,
    pub is_dag: bool,
}

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("empty corpus")]
    EmptyCorpus,
}

fn undirected_adjacency(g: &AmrGraph) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); g.node_count()];
    for e in &g.edges {
        adj[e.source].push(e.target);
        adj[e.target].push(e.source);
    }
    adj
}

/// BFS distances from `start` over an adjacency list; unreachable nodes
/// stay `usize::MAX`.
fn bfs_distances(adj: &[Vec<usize>], start: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Undirected diameter per component, maximized over components.
pub fn undirected_diameter(g: &AmrGraph) -> usize {
    let adj = undirected_adjacency(g);
    let mut best = 0;
    for start in 0..adj.len() {
        for &d in bfs_distances(&adj, start).iter() {
            if d != usize::MAX && d > best {
                best = d;
            }
        }
    }
    best
}

/// Cycle detection over directed edges (iterative three-color DFS).
pub fn is_dag(g: &AmrGraph) -> bool {
    let n = g.node_count();
    let mut out = vec![Vec::new(); n];
    for e in &g.edges {
        out[e.source].push(e.target);
    }
    // 0 = white, 1 = on stack, 2 = done
    let mut color = vec![0u8; n];
    for start in 0..n {
        if color[start] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        color[start] = 1;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next < out[node].len() {
                let child = out[node][*next];
                *next += 1;
                match color[child] {
                    0 => {
                        color[child] = 1;
                        stack.push((child, 0));
                    }
                    1 => return false,
                    _ => {}
                }
            } else {
                color[node] = 2;
                stack.pop();
            }
        }
    }
    true
}

pub fn graph_stats(g: &AmrGraph) -> GraphStats {
    let n = g.node_count();
    let m = g.edge_count();
    let mut out_degree = vec![0usize; n];
    for e in &g.edges {
        out_degree[e.source] += 1;
    }
    GraphStats {
        node_count: n,
        edge_count: m,
        diameter: undirected_diameter(g),
        max_out_degree: out_degree.iter().copied().max().unwrap_or(0),
        mean_degree: if n == 0 { 0.0 } else { 2.0 * m as f64 / n as f64 },
        is_dag: is_dag(g),
    }
}

/// Min/mean/max triple for one statistic.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub min: usize,
    pub mean: f64,
    pub max: usize,
}

fn summarize(values: &[usize]) -> Summary {
    let min = values.iter().copied().min().unwrap_or(0);
    let max = values.iter().copied().max().unwrap_or(0);
    let mean = if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<usize>() as f64 / values.len() as f64
    };
    Summary { min, mean, max }
}

fn histogram(values: &[usize]) -> Vec<usize> {
    let max = values.iter().copied().max().unwrap_or(0);
    let mut bins = vec![0usize; max + 1];
    for &v in values {
        bins[v] += 1;
    }
    bins
}

/// Aggregate report over a corpus: per-graph node/edge/diameter summaries,
/// per-node degree summary (pooled over all graphs), sentence lengths,
/// DAG counts and unit-width histograms for diameter and degree.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusReport {
    pub instances: usize,
    pub dag_count: usize,
    pub non_dag_count: usize,
    pub nodes: Summary,
    pub edges: Summary,
    pub diameter: Summary,
    pub degree: Summary,
    pub sentence_length: Summary,
    /// `hist_diameter[d]` = number of graphs with diameter `d`.
    pub hist_diameter: Vec<usize>,
    /// `hist_degree[d]` = number of nodes (over all graphs) with
    /// undirected degree `d`.
    pub hist_degree: Vec<usize>,
}

pub fn corpus_stats(corpus: &[Example]) -> Result<CorpusReport, StatsError> {
    if corpus.is_empty() {
        return Err(StatsError::EmptyCorpus);
    }
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut diameters = Vec::new();
    let mut degrees = Vec::new();
    let mut sentence_lengths = Vec::new();
    let mut dag_count = 0;
    for ex in corpus {
        let st = graph_stats(&ex.graph);
        nodes.push(st.node_count);
        edges.push(st.edge_count);
        diameters.push(st.diameter);
        if st.is_dag {
            dag_count += 1;
        }
        let mut per_node = vec![0usize; ex.graph.node_count()];
        for e in &ex.graph.edges {
            per_node[e.source] += 1;
            per_node[e.target] += 1;
        }
        degrees.extend(per_node);
        sentence_lengths.push(ex.sentence.len());
    }
    Ok(CorpusReport {
        instances: corpus.len(),
        dag_count,
        non_dag_count: corpus.len() - dag_count,
        nodes: summarize(&nodes),
        edges: summarize(&edges),
        diameter: summarize(&diameters),
        degree: summarize(&degrees),
        sentence_length: summarize(&sentence_lengths),
        hist_diameter: histogram(&diameters),
        hist_degree: histogram(&degrees),
    })
}

impl CorpusReport {
    /// TSV rendering: one `name min mean max` row per statistic (means with
    /// four decimals), then `hist_* bucket_low bucket_high count` rows.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "instances\t{}", self.instances);
        let _ = writeln!(out, "dag_graphs\t{}", self.dag_count);
        let _ = writeln!(out, "non_dag_graphs\t{}", self.non_dag_count);
        for (name, s) in [
            ("nodes", &self.nodes),
            ("edges", &self.edges),
            ("diameter", &self.diameter),
            ("degree", &self.degree),
            ("sentence_length", &self.sentence_length),
        ] {
            let _ = writeln!(out, "{name}\t{}\t{:.4}\t{}", s.min, s.mean, s.max);
        }
        for (name, hist) in [
            ("hist_diameter", &self.hist_diameter),
            ("hist_degree", &self.hist_degree),
        ] {
            for (low, count) in hist.iter().enumerate() {
                let _ = writeln!(out, "{name}\t{low}\t{}\t{count}", low + 1);
            }
        }
        out
    }
}
