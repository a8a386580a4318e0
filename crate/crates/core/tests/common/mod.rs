#![allow(dead_code)]
//! Shared test helpers: random PENMAN generation with known ground-truth
//! counts, plus independent graph oracles (different algorithms than the
//! implementations they check).

use dualgraph_core::AmrGraph;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const CONCEPTS: [&str; 12] = [
    "want-01", "go-02", "boy", "girl", "city", "country", "say-01", "possible", "name", "and",
    "temperature", "think-01",
];
pub const ROLES: [&str; 8] = [
    ":ARG0", ":ARG1", ":ARG2", ":mod", ":op1", ":time", ":location", ":manner",
];

/// A random PENMAN string with its ground-truth node and edge counts.
/// Concepts form a random tree; extra edges re-reference earlier
/// variables (reentrancies, possibly cycles); constants appear as leaf
/// targets.
pub fn random_penman(seed: u64, max_concepts: usize) -> (String, usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let concepts = rng.gen_range(1..=max_concepts);
    let mut parent = vec![usize::MAX; concepts];
    for i in 1..concepts {
        parent[i] = rng.gen_range(0..i);
    }
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); concepts];
    for i in 1..concepts {
        children[parent[i]].push(i);
    }
    // reentrant edges from a random node to a random earlier-or-later node
    let extra_count = if concepts > 1 { rng.gen_range(0..=concepts / 3) } else { 0 };
    let mut extras: Vec<Vec<usize>> = vec![Vec::new(); concepts];
    for _ in 0..extra_count {
        let src = rng.gen_range(0..concepts);
        let dst = rng.gen_range(0..concepts);
        extras[src].push(dst);
    }
    // constant leaves
    let mut constants: Vec<Vec<String>> = vec![Vec::new(); concepts];
    let mut constant_count = 0;
    for slot in constants.iter_mut() {
        if rng.gen::<f64>() < 0.25 {
            let c = match rng.gen_range(0..3) {
                0 => rng.gen_range(0..100).to_string(),
                1 => "-".to_string(),
                _ => format!("\"Val{}\"", rng.gen_range(0..10)),
            };
            slot.push(c);
            constant_count += 1;
        }
    }

    fn write_node(
        id: usize,
        out: &mut String,
        rng: &mut ChaCha8Rng,
        children: &[Vec<usize>],
        extras: &[Vec<usize>],
        constants: &[Vec<String>],
    ) {
        let concept = CONCEPTS[rng.gen_range(0..CONCEPTS.len())];
        out.push_str(&format!("(x{id} / {concept}"));
        for &child in &children[id] {
            out.push_str(&format!(" {} ", ROLES[rng.gen_range(0..ROLES.len())]));
            write_node(child, out, rng, children, extras, constants);
        }
        for &target in &extras[id] {
            out.push_str(&format!(" {} x{target}", ROLES[rng.gen_range(0..ROLES.len())]));
        }
        for c in &constants[id] {
            out.push_str(&format!(" {} {c}", ROLES[rng.gen_range(0..ROLES.len())]));
        }
        out.push(')');
    }

    let mut text = String::new();
    write_node(0, &mut text, &mut rng, &children, &extras, &constants);
    let nodes = concepts + constant_count;
    let edges = (concepts - 1) + extra_count + constant_count;
    (text, nodes, edges)
}

/// Kahn's algorithm; independent of the DFS-coloring implementation.
pub fn is_dag_by_toposort(g: &AmrGraph) -> bool {
    let n = g.node_count();
    let mut indeg = vec![0usize; n];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in &g.edges {
        out[e.source].push(e.target);
        indeg[e.target] += 1;
    }
    let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(u) = queue.pop() {
        seen += 1;
        for &v in &out[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                queue.push(v);
            }
        }
    }
    seen == n
}

/// Floyd-Warshall all-pairs undirected diameter; independent of the
/// per-node BFS implementation.
pub fn diameter_by_floyd_warshall(g: &AmrGraph) -> usize {
    let n = g.node_count();
    let inf = usize::MAX / 4;
    let mut dist = vec![vec![inf; n]; n];
    for (i, row) in dist.iter_mut().enumerate() {
        row[i] = 0;
    }
    for e in &g.edges {
        if e.source != e.target {
            dist[e.source][e.target] = 1;
            dist[e.target][e.source] = 1;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let through = dist[i][k] + dist[k][j];
                if through < dist[i][j] {
                    dist[i][j] = through;
                }
            }
        }
    }
    let mut best = 0;
    for row in &dist {
        for &d in row {
            if d < inf && d > best {
                best = d;
            }
        }
    }
    best
}
