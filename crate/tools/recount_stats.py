#!/usr/bin/env python3
"""Independent recount of the corpus statistics report.

Parses the AMR-release file with its own minimal PENMAN reader, computes
node/edge counts, undirected per-component diameters (brute-force
all-pairs BFS), pooled node degrees, DAG flags and sentence lengths, and
prints the same TSV the `stats` subcommand emits. Used to (re)generate
the golden file:

    python3 tools/recount_stats.py data/mini.amr > data/mini_stats.golden.tsv
"""
import re
import sys
from collections import deque


def tokenize(text):
    return re.findall(r'"(?:[^"\\]|\\.)*"|[()/]|[^\s()/]+', text)


def parse_penman(text):
    toks = tokenize(text)
    defined = set()
    for i in range(len(toks) - 2):
        if toks[i] == "(" and toks[i + 2] == "/":
            defined.add(toks[i + 1])
    nodes, edges, var_ids, pending = [], [], {}, []
    pos = 0

    def parse_node():
        nonlocal pos
        assert toks[pos] == "(", "expected ("
        pos += 1
        var = toks[pos]
        pos += 1
        assert toks[pos] == "/", "expected /"
        pos += 1
        label = toks[pos].strip('"')
        pos += 1
        node_id = len(nodes)
        nodes.append(label)
        var_ids[var] = node_id
        while toks[pos] != ")":
            role = toks[pos]
            assert role.startswith(":"), role
            pos += 1
            edge_idx = len(edges)
            edges.append([node_id, role, None])
            if toks[pos] == "(":
                edges[edge_idx][2] = parse_node()
            else:
                sym = toks[pos]
                pos += 1
                if sym in var_ids:
                    edges[edge_idx][2] = var_ids[sym]
                elif sym in defined:
                    pending.append((edge_idx, sym))
                else:
                    cid = len(nodes)
                    nodes.append(sym.strip('"'))
                    edges[edge_idx][2] = cid
        pos += 1
        return node_id

    root = parse_node()
    for edge_idx, var in pending:
        edges[edge_idx][2] = var_ids[var]
    return nodes, [(s, r, t) for s, r, t in edges], root


def read_corpus(path):
    examples = []
    sentence, graph_lines = None, []
    with open(path) as f:
        blocks = f.read().split("\n\n")
    for block in blocks:
        sentence, graph_lines = None, []
        for line in block.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = re.match(r"#\s*::snt\s*(.*)", line)
                if m:
                    sentence = m.group(1).strip()
            else:
                graph_lines.append(line)
        if graph_lines:
            examples.append((parse_penman(" ".join(graph_lines)),
                             (sentence or "").split()))
    return examples


def diameter(n, edges):
    adj = [[] for _ in range(n)]
    for s, _, t in edges:
        adj[s].append(t)
        adj[t].append(s)
    best = 0
    for start in range(n):
        dist = [None] * n
        dist[start] = 0
        q = deque([start])
        while q:
            u = q.popleft()
            for v in adj[u]:
                if dist[v] is None:
                    dist[v] = dist[u] + 1
                    q.append(v)
        best = max(best, max(d for d in dist if d is not None))
    return best


def is_dag(n, edges):
    out = [[] for _ in range(n)]
    indeg = [0] * n
    for s, _, t in edges:
        out[s].append(t)
        indeg[t] += 1
    q = deque(i for i in range(n) if indeg[i] == 0)
    seen = 0
    while q:
        u = q.popleft()
        seen += 1
        for v in out[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                q.append(v)
    return seen == n


def main(path):
    examples = read_corpus(path)
    nodes, edges, diams, degrees, slens, dag = [], [], [], [], [], 0
    for (labels, es, _root), sent in examples:
        n = len(labels)
        nodes.append(n)
        edges.append(len(es))
        diams.append(diameter(n, es))
        per = [0] * n
        for s, _, t in es:
            per[s] += 1
            per[t] += 1
        degrees.extend(per)
        slens.append(len(sent))
        dag += is_dag(n, es)

    def summary(name, vals):
        print(f"{name}\t{min(vals)}\t{sum(vals) / len(vals):.4f}\t{max(vals)}")

    print(f"instances\t{len(examples)}")
    print(f"dag_graphs\t{dag}")
    print(f"non_dag_graphs\t{len(examples) - dag}")
    summary("nodes", nodes)
    summary("edges", edges)
    summary("diameter", diams)
    summary("degree", degrees)
    summary("sentence_length", slens)
    for name, vals in [("hist_diameter", diams), ("hist_degree", degrees)]:
        bins = [0] * (max(vals) + 1)
        for v in vals:
            bins[v] += 1
        for low, count in enumerate(bins):
            print(f"{name}\t{low}\t{low + 1}\t{count}")


if __name__ == "__main__":
    main(sys.argv[1])
