//! Bus graph with parallel branches collapsed into one edge.

use std::collections::{HashMap, VecDeque};

use super::{Line, Network};

#[derive(Debug, Clone)]
pub(crate) struct Edge {
    pub a: usize,
    pub b: usize,
    /// Indices into `Network::lines`.
    pub lines: Vec<usize>,
    /// Indices into `Network::transformers`.
    pub transformers: Vec<usize>,
}

impl Edge {
    pub fn other(&self, node: usize) -> usize {
        if self.a == node {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Graph {
    pub edges: Vec<Edge>,
    pub adj: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    /// Graph over `network.buses` containing the lines accepted by
    /// `include_line` and every transformer. Unknown bus references are
    /// skipped; callers validate first.
    pub fn build(
        network: &Network,
        index: &HashMap<&str, usize>,
        mut include_line: impl FnMut(&Line) -> bool,
    ) -> Graph {
        let mut graph = Graph {
            edges: Vec::new(),
            adj: vec![Vec::new(); network.buses.len()],
        };
        let mut by_pair: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edge_for = |graph: &mut Graph, a: usize, b: usize| -> usize {
            let key = (a.min(b), a.max(b));
            *by_pair.entry(key).or_insert_with(|| {
                graph.edges.push(Edge {
                    a: key.0,
                    b: key.1,
                    lines: Vec::new(),
                    transformers: Vec::new(),
                });
                let e = graph.edges.len() - 1;
                graph.adj[key.0].push((key.1, e));
                graph.adj[key.1].push((key.0, e));
                e
            })
        };
        for (i, line) in network.lines.iter().enumerate() {
            if !include_line(line) {
                continue;
            }
            let (Some(&a), Some(&b)) = (index.get(line.from_bus.as_str()), index.get(line.to_bus.as_str())) else {
                continue;
            };
            if a == b {
                continue;
            }
            let e = edge_for(&mut graph, a, b);
            graph.edges[e].lines.push(i);
        }
        for (i, t) in network.transformers.iter().enumerate() {
            let (Some(&a), Some(&b)) = (index.get(t.hv_bus.as_str()), index.get(t.lv_bus.as_str())) else {
                continue;
            };
            if a == b {
                continue;
            }
            let e = edge_for(&mut graph, a, b);
            graph.edges[e].transformers.push(i);
        }
        graph
    }

    /// Switch-resolved graph of conducting branches.
    pub fn active(network: &Network, index: &HashMap<&str, usize>) -> Graph {
        Graph::build(network, index, |l| network.line_is_active(l))
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn reachable(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Breadth-first spanning tree from `root`: parent edge per node and the
    /// visiting order. Unreached nodes have no parent and are not listed.
    pub fn bfs_tree(&self, root: usize) -> (Vec<Option<usize>>, Vec<usize>) {
        let mut parent = vec![None; self.node_count()];
        let mut seen = vec![false; self.node_count()];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &(w, e) in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(e);
                    queue.push_back(w);
                }
            }
        }
        (parent, order)
    }

    /// Per edge: true if removing it disconnects its endpoints.
    pub fn bridges(&self) -> Vec<bool> {
        let n = self.node_count();
        let mut is_bridge = vec![false; self.edges.len()];
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut timer = 0usize;
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            // (node, parent edge, next adjacency slot)
            let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(root, None, 0)];
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            while let Some(&mut (v, pe, ref mut slot)) = stack.last_mut() {
                if let Some(&(w, e)) = self.adj[v].get(*slot) {
                    *slot += 1;
                    if Some(e) == pe {
                        continue;
                    }
                    if disc[w] == usize::MAX {
                        disc[w] = timer;
                        low[w] = timer;
                        timer += 1;
                        stack.push((w, Some(e), 0));
                    } else {
                        low[v] = low[v].min(disc[w]);
                    }
                } else {
                    stack.pop();
                    if let (Some(e), Some(&(u, _, _))) = (pe, stack.last()) {
                        low[u] = low[u].min(low[v]);
                        if low[v] > disc[u] {
                            is_bridge[e] = true;
                        }
                    }
                }
            }
        }
        is_bridge
    }

    /// Per node: true if the node lies on a cycle.
    pub fn on_cycle(&self) -> Vec<bool> {
        let bridges = self.bridges();
        self.adj
            .iter()
            .map(|nbrs| nbrs.iter().any(|&(_, e)| !bridges[e]))
            .collect()
    }

    /// True if some simple path from `from` to one of `targets` uses edge
    /// `edge`. Decided by a unit node-capacity max-flow: two node-disjoint
    /// paths must connect the edge's endpoints to `{from}` and `targets`.
    pub fn edge_on_simple_path(&self, edge: usize, from: usize, targets: &[usize]) -> bool {
        let e = &self.edges[edge];
        if targets.contains(&from) {
            return false;
        }
        let n = self.node_count();
        // node v -> in = 2v, out = 2v+1; super source S, target hub T, sink K
        let s = 2 * n;
        let t_hub = 2 * n + 1;
        let sink = 2 * n + 2;
        let mut flow = FlowNet::new(2 * n + 3);
        for v in 0..n {
            flow.add(2 * v, 2 * v + 1, 1);
        }
        for (i, ed) in self.edges.iter().enumerate() {
            if i == edge {
                continue;
            }
            flow.add(2 * ed.a + 1, 2 * ed.b, 1);
            flow.add(2 * ed.b + 1, 2 * ed.a, 1);
        }
        flow.add(s, 2 * e.a, 1);
        flow.add(s, 2 * e.b, 1);
        flow.add(2 * from + 1, sink, 1);
        for &t in targets {
            flow.add(2 * t + 1, t_hub, 1);
        }
        flow.add(t_hub, sink, 1);
        flow.max_flow(s, sink, 2) == 2
    }
}

struct FlowNet {
    // (to, capacity, reverse index)
    adj: Vec<Vec<(usize, i32, usize)>>,
}

impl FlowNet {
    fn new(n: usize) -> Self {
        FlowNet {
            adj: vec![Vec::new(); n],
        }
    }

    fn add(&mut self, u: usize, v: usize, cap: i32) {
        let ru = self.adj[v].len();
        let rv = self.adj[u].len();
        self.adj[u].push((v, cap, ru));
        self.adj[v].push((u, 0, rv));
    }

    fn max_flow(&mut self, s: usize, t: usize, limit: i32) -> i32 {
        let mut total = 0;
        while total < limit {
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.adj.len()];
            let mut queue = VecDeque::from([s]);
            let mut seen = vec![false; self.adj.len()];
            seen[s] = true;
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for (k, &(v, cap, _)) in self.adj[u].iter().enumerate() {
                    if cap > 0 && !seen[v] {
                        seen[v] = true;
                        prev[v] = Some((u, k));
                        queue.push_back(v);
                    }
                }
            }
            if !seen[t] {
                break;
            }
            let mut v = t;
            while let Some((u, k)) = prev[v] {
                let rev = self.adj[u][k].2;
                self.adj[u][k].1 -= 1;
                self.adj[v][rev].1 += 1;
                v = u;
            }
            total += 1;
        }
        total
    }
}
