//! Undirected, unweighted labeled graphs and the normalized Laplacian.

use crate::linalg::Matrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("graph has no nodes")]
    NoNodes,
    #[error("expected {expected} node labels, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    EdgeOutOfRange(usize, usize, usize),
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("node {0} is isolated (degree 0)")]
    IsolatedNode(usize),
}

/// Where a graph came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    #[default]
    Original,
    Synthetic {
        seed_graph: Option<usize>,
    },
}

/// An undirected simple graph with one atom label per node.
///
/// Edges are stored once, as `(i, j)` with `i < j`, in sorted order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    labels: Vec<String>,
    #[serde(default)]
    provenance: Provenance,
}

impl Graph {
    /// Builds a graph, normalizing edge orientation and dropping duplicate
    /// pairs.
    pub fn new(labels: Vec<String>, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        let n = labels.len();
        if n == 0 {
            return Err(GraphError::NoNodes);
        }
        let mut normalized = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(GraphError::EdgeOutOfRange(a, b, n));
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        normalized.dedup();
        Ok(Self {
            node_count: n,
            edges: normalized,
            labels,
            provenance: Provenance::Original,
        })
    }

    /// Unlabeled convenience constructor; every node is labeled "C".
    pub fn unlabeled(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        Self::new(vec!["C".to_string(); node_count], edges)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// `2|E| / (n (n - 1))`, or `None` for single-node graphs.
    pub fn density(&self) -> Option<f64> {
        let n = self.node_count as f64;
        (self.node_count > 1).then(|| 2.0 * self.edges.len() as f64 / (n * (n - 1.0)))
    }

    pub fn first_isolated_node(&self) -> Option<usize> {
        self.degrees().iter().position(|&d| d == 0)
    }

    /// Connected components as sorted node lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.node_count).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut root_slot = vec![usize::MAX; self.node_count];
        for v in 0..self.node_count {
            let r = find(&mut parent, v);
            if root_slot[r] == usize::MAX {
                root_slot[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[root_slot[r]].push(v);
        }
        groups
    }

    /// The subgraph induced by `nodes` (which must be sorted and unique),
    /// re-indexed in the given order.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Graph {
        let mut remap = vec![usize::MAX; self.node_count];
        for (new, &old) in nodes.iter().enumerate() {
            remap[old] = new;
        }
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter(|(a, b)| remap[*a] != usize::MAX && remap[*b] != usize::MAX)
            .map(|&(a, b)| (remap[a], remap[b]))
            .collect();
        let labels = nodes.iter().map(|&v| self.labels[v].clone()).collect();
        Graph {
            node_count: nodes.len(),
            edges: {
                let mut e = edges;
                e.sort_unstable();
                e
            },
            labels,
            provenance: self.provenance,
        }
    }

    /// Drops degree-0 nodes. Returns `None` when nothing would remain.
    pub fn without_isolated_nodes(&self) -> Option<Graph> {
        let deg = self.degrees();
        let keep: Vec<usize> = (0..self.node_count).filter(|&v| deg[v] > 0).collect();
        (!keep.is_empty()).then(|| self.induced_subgraph(&keep))
    }
}

/// Symmetric 0/1 adjacency matrix with zero diagonal.
pub fn build_adjacency(g: &Graph) -> Matrix {
    let mut a = Matrix::zeros(g.node_count(), g.node_count());
    for &(i, j) in g.edges() {
        a[(i, j)] = 1.0;
        a[(j, i)] = 1.0;
    }
    a
}

/// `L = I - D^{-1/2} A D^{-1/2}`.
///
/// Fails with [`GraphError::IsolatedNode`] when any node has degree 0; such
/// graphs are rejected rather than patched.
pub fn normalized_laplacian(g: &Graph) -> Result<Matrix, GraphError> {
    let deg = g.degrees();
    if let Some(v) = deg.iter().position(|&d| d == 0) {
        return Err(GraphError::IsolatedNode(v));
    }
    let inv_sqrt: Vec<f64> = deg.iter().map(|&d| 1.0 / (d as f64).sqrt()).collect();
    let mut l = Matrix::identity(g.node_count());
    for &(i, j) in g.edges() {
        l[(i, j)] = -(inv_sqrt[i] * inv_sqrt[j]);
    }
    l.symmetrize_from_upper();
    Ok(l)
}

/// Degree vector scaled to unit Euclidean norm. An edgeless graph yields
/// the zero vector.
pub fn default_signal(g: &Graph) -> Vec<f64> {
    let deg: Vec<f64> = g.degrees().into_iter().map(|d| d as f64).collect();
    let norm = deg.iter().map(|d| d * d).sum::<f64>().sqrt();
    if norm == 0.0 {
        return deg;
    }
    deg.into_iter().map(|d| d / norm).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        Graph::unlabeled(3, [(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn adjacency_examples() {
        let g = Graph::unlabeled(2, [(0, 1)]).unwrap();
        assert_eq!(build_adjacency(&g).to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);

        let a = build_adjacency(&triangle());
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a[(i, j)], if i == j { 0.0 } else { 1.0 });
            }
        }

        let empty = Graph::unlabeled(3, []).unwrap();
        assert_eq!(build_adjacency(&empty), Matrix::zeros(3, 3));
    }

    #[test]
    fn constructor_validates() {
        assert_eq!(Graph::unlabeled(0, []), Err(GraphError::NoNodes));
        assert_eq!(Graph::unlabeled(2, [(1, 1)]), Err(GraphError::SelfLoop(1)));
        assert_eq!(Graph::unlabeled(2, [(0, 2)]), Err(GraphError::EdgeOutOfRange(0, 2, 2)));
        let g = Graph::unlabeled(3, [(2, 0), (0, 2), (1, 0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2)]);
    }

    #[test]
    fn laplacian_examples() {
        let g = Graph::unlabeled(2, [(0, 1)]).unwrap();
        assert_eq!(
            normalized_laplacian(&g).unwrap().to_rows(),
            vec![vec![1.0, -1.0], vec![-1.0, 1.0]]
        );

        // D = 2I, so off-diagonals are -1/2.
        let l = normalized_laplacian(&triangle()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { -0.5 };
                assert!((l[(i, j)] - expected).abs() < 1e-15);
            }
        }

        let single = Graph::unlabeled(1, []).unwrap();
        assert_eq!(normalized_laplacian(&single), Err(GraphError::IsolatedNode(0)));
    }

    #[test]
    fn laplacian_is_bitwise_symmetric() {
        let g = Graph::unlabeled(5, [(0, 1), (1, 2), (2, 3), (3, 4), (1, 3), (0, 4)]).unwrap();
        let l = normalized_laplacian(&g).unwrap();
        assert!(l.is_symmetric(0.0));
    }

    #[test]
    fn default_signal_examples() {
        let s = default_signal(&Graph::unlabeled(2, [(0, 1)]).unwrap());
        let r = 1.0 / 2f64.sqrt();
        assert!(s.iter().all(|x| (x - r).abs() < 1e-15));

        let star = Graph::unlabeled(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let s = default_signal(&star);
        let norm = 12f64.sqrt();
        let expected = [3.0 / norm, 1.0 / norm, 1.0 / norm, 1.0 / norm];
        assert!(s.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-15));

        let s = default_signal(&triangle());
        assert!(s.iter().all(|x| (x - 1.0 / 3f64.sqrt()).abs() < 1e-15));
    }

    #[test]
    fn components_and_isolated_removal() {
        let g = Graph::unlabeled(6, [(0, 1), (3, 4), (4, 5)]).unwrap();
        assert_eq!(g.components(), vec![vec![0, 1], vec![2], vec![3, 4, 5]]);
        let h = g.without_isolated_nodes().unwrap();
        assert_eq!(h.node_count(), 5);
        assert_eq!(h.edges(), &[(0, 1), (2, 3), (3, 4)]);
        assert!(Graph::unlabeled(2, []).unwrap().without_isolated_nodes().is_none());
    }

    #[test]
    fn density() {
        assert_eq!(triangle().density(), Some(1.0));
        assert_eq!(Graph::unlabeled(1, []).unwrap().density(), None);
    }
}
