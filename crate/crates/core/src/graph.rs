//! Undirected, unweighted communication topology.

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    OutOfRange(usize, usize, usize),
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    Duplicate(usize, usize),
    #[error("graph is disconnected: node {0} is unreachable from node 0")]
    Disconnected(usize),
}

/// Communication graph with 0/1 adjacency weights.
///
/// Construction guarantees symmetry, an empty diagonal and connectivity, so
/// every `CommGraph` value satisfies the connectivity hypothesis of the
/// controller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommGraph {
    n: usize,
    adjacency: Vec<u8>,
    neighbors: Vec<Vec<usize>>,
}

impl CommGraph {
    pub fn new(node_count: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if node_count == 0 {
            return Err(GraphError::Empty);
        }
        let mut adjacency = vec![0u8; node_count * node_count];
        for &(i, j) in edges {
            if i >= node_count || j >= node_count {
                return Err(GraphError::OutOfRange(i, j, node_count));
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            if adjacency[i * node_count + j] != 0 {
                return Err(GraphError::Duplicate(i, j));
            }
            adjacency[i * node_count + j] = 1;
            adjacency[j * node_count + i] = 1;
        }
        let neighbors = (0..node_count)
            .map(|i| {
                (0..node_count)
                    .filter(|&j| adjacency[i * node_count + j] != 0)
                    .collect()
            })
            .collect();
        let g = Self {
            n: node_count,
            adjacency,
            neighbors,
        };
        if let Some(unreached) = g.first_unreachable() {
            return Err(GraphError::Disconnected(unreached));
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Adjacency weight `a_ij`, either 0 or 1.
    pub fn weight(&self, i: usize, j: usize) -> u8 {
        self.adjacency[i * self.n + j]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Each undirected edge once, as `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for &j in &self.neighbors[i] {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn adjacency_rows(&self) -> Vec<Vec<u8>> {
        self.adjacency.chunks(self.n).map(<[u8]>::to_vec).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.weight(i, j) == self.weight(j, i)))
    }

    /// Breadth-first search from node 0 reaches every node.
    pub fn is_connected(&self) -> bool {
        self.first_unreachable().is_none()
    }

    fn first_unreachable(&self) -> Option<usize> {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.iter().position(|&s| !s)
    }
}

/// Connectivity of an arbitrary edge list, without the construction checks.
pub fn edges_connected(node_count: usize, edges: &[(usize, usize)]) -> bool {
    if node_count == 0 {
        return false;
    }
    let mut adj = vec![Vec::new(); node_count];
    for &(i, j) in edges {
        if i < node_count && j < node_count {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    let mut seen = vec![false; node_count];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}
