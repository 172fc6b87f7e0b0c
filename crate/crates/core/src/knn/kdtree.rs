use crate::error::{Error, Result};

/// Exact k-nearest-neighbour search over a fixed point set, Euclidean
/// metric, ties at equal distance broken by lowest point index.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec<f64>>,
    nodes: Vec<Node>,
    root: Option<usize>,
    dims: usize,
}

#[derive(Debug, Clone)]
struct Node {
    point_idx: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist2: f64,
    idx: usize,
}

impl Candidate {
    fn worse_than(&self, other: &Candidate) -> bool {
        // Lexicographic (distance, index): larger is worse.
        self.dist2 > other.dist2 || (self.dist2 == other.dist2 && self.idx > other.idx)
    }
}

impl KdTree {
    pub fn build(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InsufficientData("KD-tree needs at least one point".into()));
        }
        let dims = points[0].len();
        if dims == 0 || points.iter().any(|p| p.len() != dims) {
            return Err(Error::Dimension("inconsistent point dimensions".into()));
        }
        let mut tree = Self {
            points,
            nodes: Vec::new(),
            root: None,
            dims,
        };
        let mut indices: Vec<usize> = (0..tree.points.len()).collect();
        tree.root = tree.build_rec(&mut indices, 0);
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    fn build_rec(&mut self, indices: &mut [usize], depth: usize) -> Option<usize> {
        if indices.is_empty() {
            return None;
        }
        let axis = depth % self.dims;
        // Sort by (coordinate, index) so the build is deterministic under
        // duplicate coordinates.
        indices.sort_by(|&a, &b| {
            self.points[a][axis]
                .partial_cmp(&self.points[b][axis])
                .unwrap()
                .then(a.cmp(&b))
        });
        let mid = indices.len() / 2;
        let point_idx = indices[mid];
        let node_id = self.nodes.len();
        self.nodes.push(Node {
            point_idx,
            axis,
            left: None,
            right: None,
        });
        let (lo, rest) = indices.split_at_mut(mid);
        let hi = &mut rest[1..];
        let left = self.build_rec(lo, depth + 1);
        let right = self.build_rec(hi, depth + 1);
        self.nodes[node_id].left = left;
        self.nodes[node_id].right = right;
        Some(node_id)
    }

    /// Indices of the k nearest points, sorted by (distance, index).
    pub fn nearest(&self, query: &[f64], k: usize) -> Result<Vec<usize>> {
        if query.len() != self.dims {
            return Err(Error::Dimension(format!(
                "query has {} dims, tree has {}",
                query.len(),
                self.dims
            )));
        }
        let k = k.min(self.points.len());
        if k == 0 {
            return Ok(Vec::new());
        }
        let mut best: Vec<Candidate> = Vec::with_capacity(k + 1);
        self.search(self.root, query, k, &mut best);
        best.sort_by(|a, b| {
            a.dist2
                .partial_cmp(&b.dist2)
                .unwrap()
                .then(a.idx.cmp(&b.idx))
        });
        Ok(best.into_iter().map(|c| c.idx).collect())
    }

    fn search(&self, node: Option<usize>, query: &[f64], k: usize, best: &mut Vec<Candidate>) {
        let Some(node_id) = node else { return };
        let node = &self.nodes[node_id];
        let point = &self.points[node.point_idx];
        let dist2 = point
            .iter()
            .zip(query)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>();
        self.offer(
            Candidate {
                dist2,
                idx: node.point_idx,
            },
            k,
            best,
        );

        let diff = query[node.axis] - point[node.axis];
        let (near, far) = if diff < 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        self.search(near, query, k, best);
        // The far side may hold equal-distance points with lower indices,
        // so prune strictly only when the plane is farther than the worst.
        if best.len() < k || diff * diff <= self.worst(best).dist2 {
            self.search(far, query, k, best);
        }
    }

    fn worst(&self, best: &[Candidate]) -> Candidate {
        let mut worst = best[0];
        for c in &best[1..] {
            if c.worse_than(&worst) {
                worst = *c;
            }
        }
        worst
    }

    fn offer(&self, cand: Candidate, k: usize, best: &mut Vec<Candidate>) {
        if best.len() < k {
            best.push(cand);
            return;
        }
        let (worst_pos, worst) = best
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| {
                if a.worse_than(b) {
                    std::cmp::Ordering::Greater
                } else {
                    std::cmp::Ordering::Less
                }
            })
            .map(|(i, c)| (i, *c))
            .unwrap();
        if worst.worse_than(&cand) {
            best[worst_pos] = cand;
        }
    }
}

/// Brute-force reference with the same tie rule; the tree's correctness
/// oracle.
pub fn brute_force_nearest(points: &[Vec<f64>], query: &[f64], k: usize) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let d2 = p
                .iter()
                .zip(query)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            (d2, i)
        })
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|(_, i)| i).collect()
}
