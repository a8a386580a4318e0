//! AMR graphs and their unlabeled views.
//!
//! An [`AmrGraph`] is the rooted, directed, edge-labeled graph parsed from
//! PENMAN text. [`levi_transform`] rewrites every labeled edge into a
//! relation node with two unlabeled edges, producing the top-down
//! [`GraphView`]; [`reverse_view`] flips every edge for the bottom-up view.

/// A concept node, or a constant leaf (which has no variable).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmrNode {
    pub variable: Option<String>,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmrEdge {
    pub source: usize,
    pub relation: String,
    pub target: usize,
}

/// Rooted directed labeled graph. `nodes[i]` is the node with id `i`;
/// edge order follows the order relations appear in the PENMAN source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmrGraph {
    pub nodes: Vec<AmrNode>,
    pub edges: Vec<AmrEdge>,
    pub root: usize,
}

impl AmrGraph {
    /// Number of nodes `n`.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of edges `m`.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViewKind {
    TopDown,
    BottomUp,
}

/// Unlabeled directed graph over concept nodes followed by relation nodes.
/// Neighbor lists preserve source order, which fixes DFS tie-breaking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphView {
    pub node_labels: Vec<String>,
    pub in_neighbors: Vec<Vec<usize>>,
    pub out_neighbors: Vec<Vec<usize>>,
    pub root: usize,
    pub kind: ViewKind,
}

impl GraphView {
    pub fn node_count(&self) -> usize {
        self.node_labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_neighbors.iter().map(Vec::len).sum()
    }
}

/// Rewrite each labeled edge `(v, r, w)` into a relation node labeled `r`
/// with unlabeled edges `v -> r` and `r -> w`. The result has `n + m`
/// nodes and `2m` edges and keeps the original edge directions (top-down).
pub fn levi_transform(g: &AmrGraph) -> GraphView {
    let n = g.node_count();
    let m = g.edge_count();
    let mut node_labels: Vec<String> = g.nodes.iter().map(|node| node.label.clone()).collect();
    let mut in_neighbors = vec![Vec::new(); n + m];
    let mut out_neighbors = vec![Vec::new(); n + m];
    for (k, edge) in g.edges.iter().enumerate() {
        let rel = n + k;
        node_labels.push(edge.relation.clone());
        out_neighbors[edge.source].push(rel);
        in_neighbors[rel].push(edge.source);
        out_neighbors[rel].push(edge.target);
        in_neighbors[edge.target].push(rel);
    }
    GraphView {
        node_labels,
        in_neighbors,
        out_neighbors,
        root: g.root,
        kind: ViewKind::TopDown,
    }
}

/// Flip every edge of a top-down view, yielding the bottom-up view.
///
/// Panics if the input is already bottom-up.
pub fn reverse_view(v: &GraphView) -> GraphView {
    assert_eq!(
        v.kind,
        ViewKind::TopDown,
        "reverse_view: input is already bottom-up"
    );
    let mut out = reverse_edges(v);
    out.kind = ViewKind::BottomUp;
    out
}

/// Edge reversal without the kind bookkeeping; reversing twice restores
/// the original edge sets.
pub fn reverse_edges(v: &GraphView) -> GraphView {
    GraphView {
        node_labels: v.node_labels.clone(),
        in_neighbors: v.out_neighbors.clone(),
        out_neighbors: v.in_neighbors.clone(),
        root: v.root,
        kind: v.kind,
    }
}

/// Depth-first preorder over the top-down view, visiting children in
/// source order and each node once; nodes unreachable from the root are
/// appended in id (parse) order.
pub fn dfs_order(v: &GraphView) -> Vec<usize> {
    assert_eq!(v.kind, ViewKind::TopDown, "dfs_order: expected top-down view");
    let n = v.node_count();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![v.root];
    while let Some(node) = stack.pop() {
        if visited[node] {
            continue;
        }
        visited[node] = true;
        order.push(node);
        for &child in v.out_neighbors[node].iter().rev() {
            if !visited[child] {
                stack.push(child);
            }
        }
    }
    for (id, seen) in visited.iter().enumerate() {
        if !seen {
            order.push(id);
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penman::parse_penman;

    fn semester() -> AmrGraph {
        parse_penman("(s / semester :mod (t / that))").unwrap()
    }

    #[test]
    fn levi_of_single_edge_graph() {
        let view = levi_transform(&semester());
        assert_eq!(view.node_labels, vec!["semester", "that", ":mod"]);
        assert_eq!(view.node_count(), 3);
        assert_eq!(view.edge_count(), 2);
        // semester -> :mod -> that
        assert_eq!(view.out_neighbors[0], vec![2]);
        assert_eq!(view.out_neighbors[2], vec![1]);
        assert_eq!(view.out_neighbors[1], Vec::<usize>::new());
    }

    #[test]
    fn levi_counts_on_single_node() {
        let g = parse_penman("(w / want-01)").unwrap();
        let view = levi_transform(&g);
        assert_eq!(view.node_count(), 1);
        assert_eq!(view.edge_count(), 0);
    }

    #[test]
    fn levi_counting_identity() {
        // n = 5, m = 6 (one reentrancy) -> 11 view nodes, 12 directed edges
        let g = parse_penman(
            "(a / alpha :r1 (b / beta :r2 (c / gamma) :r3 (d / delta :r4 c)) :r5 (e / eps :r6 b))",
        )
        .unwrap();
        assert_eq!(g.node_count(), 5);
        assert_eq!(g.edge_count(), 6);
        let view = levi_transform(&g);
        assert_eq!(view.node_count(), 11);
        assert_eq!(view.edge_count(), 12);
    }

    #[test]
    fn reverse_flips_every_edge() {
        let view = levi_transform(&semester());
        let rev = reverse_view(&view);
        assert_eq!(rev.kind, ViewKind::BottomUp);
        // :mod -> semester in the reversed view
        assert_eq!(rev.out_neighbors[2], vec![0]);
        assert_eq!(rev.out_neighbors[1], vec![2]);
        assert_eq!(rev.node_labels, view.node_labels);
    }

    #[test]
    fn reverse_is_an_involution_on_edges() {
        let view = levi_transform(&semester());
        let twice = reverse_edges(&reverse_edges(&view));
        assert_eq!(twice, view);
    }

    #[test]
    fn reverse_of_single_node_flips_only_kind() {
        let g = parse_penman("(w / want-01)").unwrap();
        let view = levi_transform(&g);
        let rev = reverse_view(&view);
        assert_eq!(rev.node_labels, view.node_labels);
        assert_eq!(rev.edge_count(), 0);
        assert_eq!(rev.kind, ViewKind::BottomUp);
    }

    #[test]
    #[should_panic(expected = "already bottom-up")]
    fn reverse_rejects_bottom_up_input() {
        let view = levi_transform(&semester());
        let rev = reverse_view(&view);
        reverse_view(&rev);
    }

    #[test]
    fn dfs_visits_single_path_in_order() {
        let view = levi_transform(&semester());
        let order = dfs_order(&view);
        let labels: Vec<&str> = order.iter().map(|&i| view.node_labels[i].as_str()).collect();
        assert_eq!(labels, vec!["semester", ":mod", "that"]);
    }

    #[test]
    fn dfs_respects_penman_sibling_order() {
        let g = parse_penman("(a / act :ARG0 (b / boy :mod (c / tall)) :ARG1 (d / dog))").unwrap();
        let view = levi_transform(&g);
        let order = dfs_order(&view);
        let labels: Vec<&str> = order.iter().map(|&i| view.node_labels[i].as_str()).collect();
        // :ARG0 subtree fully precedes :ARG1 subtree
        assert_eq!(
            labels,
            vec!["act", ":ARG0", "boy", ":mod", "tall", ":ARG1", "dog"]
        );
    }

    #[test]
    fn dfs_visits_reentrant_node_once_at_first_reach() {
        let g = parse_penman("(a / and :op1 (b / brave :poss (p / person)) :op2 (c / calm :poss p))")
            .unwrap();
        let view = levi_transform(&g);
        let order = dfs_order(&view);
        assert_eq!(order.len(), view.node_count());
        let labels: Vec<&str> = order.iter().map(|&i| view.node_labels[i].as_str()).collect();
        let person_positions: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == "person")
            .map(|(i, _)| i)
            .collect();
        assert_eq!(person_positions.len(), 1);
        // first reach is inside the :op1 subtree, before :op2
        let op2_pos = labels.iter().position(|l| *l == ":op2").unwrap();
        assert!(person_positions[0] < op2_pos);
    }

    #[test]
    fn dfs_is_a_permutation() {
        let g = parse_penman(
            "(a / alpha :r1 (b / beta :r2 (c / gamma) :r3 (d / delta :r4 c)) :r5 (e / eps :r6 b))",
        )
        .unwrap();
        let view = levi_transform(&g);
        let mut order = dfs_order(&view);
        order.sort_unstable();
        assert_eq!(order, (0..view.node_count()).collect::<Vec<_>>());
    }

    #[test]
    fn relation_nodes_have_degree_one_each_way() {
        let g = parse_penman(
            "(a / alpha :r1 (b / beta :r2 (c / gamma) :r3 (d / delta :r4 c)) :r5 (e / eps :r6 b))",
        )
        .unwrap();
        let view = levi_transform(&g);
        for rel in g.node_count()..view.node_count() {
            assert_eq!(view.in_neighbors[rel].len(), 1);
            assert_eq!(view.out_neighbors[rel].len(), 1);
        }
    }
}
