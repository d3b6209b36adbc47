//! Dinic maximum flow over any [`Scalar`].
//!
//! With `f64` capacities, residuals at or below the scalar tolerance count as
//! saturated, which bounds the number of augmentations.

use crate::scalar::Scalar;
use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Edge<T> {
    to: usize,
    cap: T,
}

#[derive(Debug, Clone)]
pub struct FlowNetwork<T> {
    // Edge `e` and its reverse `e ^ 1` are stored adjacently.
    edges: Vec<Edge<T>>,
    adj: Vec<Vec<usize>>,
    original: Vec<T>,
}

impl<T: Scalar> FlowNetwork<T> {
    pub fn new(nodes: usize) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); nodes],
            original: Vec::new(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    /// Adds `from → to` and returns its id for [`FlowNetwork::flow_on`].
    pub fn add_edge(&mut self, from: usize, to: usize, cap: T) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge {
            to,
            cap: cap.clone(),
        });
        self.edges.push(Edge {
            to: from,
            cap: T::zero(),
        });
        self.original.push(cap);
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }

    /// Flow currently routed on edge `id`.
    pub fn flow_on(&self, id: usize) -> T {
        self.original[id / 2].clone() - self.edges[id].cap.clone()
    }

    fn levels(&self, s: usize, t: usize) -> Option<Vec<usize>> {
        let mut level = vec![usize::MAX; self.num_nodes()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let Edge { to, cap } = &self.edges[e];
                if level[*to] == usize::MAX && cap.is_pos() {
                    level[*to] = level[u] + 1;
                    queue.push_back(*to);
                }
            }
        }
        (level[t] != usize::MAX).then_some(level)
    }

    fn push(&mut self, u: usize, t: usize, limit: T, level: &[usize], next: &mut [usize]) -> T {
        if u == t {
            return limit;
        }
        while next[u] < self.adj[u].len() {
            let e = self.adj[u][next[u]];
            let to = self.edges[e].to;
            if level[to] == level[u] + 1 && self.edges[e].cap.is_pos() {
                let room = if self.edges[e].cap < limit {
                    self.edges[e].cap.clone()
                } else {
                    limit.clone()
                };
                let pushed = self.push(to, t, room, level, next);
                if pushed.is_pos() {
                    self.edges[e].cap = self.edges[e].cap.clone() - pushed.clone();
                    self.edges[e ^ 1].cap = self.edges[e ^ 1].cap.clone() + pushed.clone();
                    return pushed;
                }
            }
            next[u] += 1;
        }
        T::zero()
    }

    /// Maximum `s → t` flow; the network keeps the resulting residuals.
    pub fn max_flow(&mut self, s: usize, t: usize) -> T {
        let mut total = T::zero();
        // Source outflow bounds every augmentation.
        let cap_out = self.adj[s]
            .iter()
            .fold(T::zero(), |acc, &e| acc + self.edges[e].cap.clone());
        while let Some(level) = self.levels(s, t) {
            let mut next = vec![0; self.num_nodes()];
            loop {
                let pushed = self.push(s, t, cap_out.clone(), &level, &mut next);
                if !pushed.is_pos() {
                    break;
                }
                total = total + pushed;
            }
        }
        total
    }
}
