//! Minimal static 3D k-d tree for nearest-neighbor queries during graph
//! construction. Deterministic: ties resolve by smaller point id.

use crate::geometry::Point3;

struct Node {
    point: usize,
    axis: usize,
    left: Option<Box<Node>>,
    right: Option<Box<Node>>,
}

pub struct KdTree {
    points: Vec<Point3>,
    root: Option<Box<Node>>,
}

impl KdTree {
    pub fn build(points: Vec<Point3>) -> Self {
        let mut ids: Vec<usize> = (0..points.len()).collect();
        let root = Self::build_node(&points, &mut ids, 0);
        Self { points, root }
    }

    fn build_node(points: &[Point3], ids: &mut [usize], depth: usize) -> Option<Box<Node>> {
        if ids.is_empty() {
            return None;
        }
        let axis = depth % 3;
        let key = |i: usize| -> (f64, usize) {
            let p = &points[i];
            let c = match axis {
                0 => p.x,
                1 => p.y,
                _ => p.z,
            };
            (c, i)
        };
        ids.sort_by(|&a, &b| key(a).partial_cmp(&key(b)).unwrap());
        let mid = ids.len() / 2;
        let point = ids[mid];
        let (left_ids, rest) = ids.split_at_mut(mid);
        let right_ids = &mut rest[1..];
        Some(Box::new(Node {
            point,
            axis,
            left: Self::build_node(points, left_ids, depth + 1),
            right: Self::build_node(points, right_ids, depth + 1),
        }))
    }

    /// Ids of the `k` nearest points to `query`, excluding `exclude`,
    /// ordered by (distance, id).
    pub fn k_nearest(&self, query: &Point3, k: usize, exclude: Option<usize>) -> Vec<usize> {
        if k == 0 {
            return Vec::new();
        }
        // Max-heap-by-distance emulated with a sorted vec; k is small.
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        self.search(self.root.as_deref(), query, k, exclude, &mut best);
        best.into_iter().map(|(_, i)| i).collect()
    }

    fn search(
        &self,
        node: Option<&Node>,
        query: &Point3,
        k: usize,
        exclude: Option<usize>,
        best: &mut Vec<(f64, usize)>,
    ) {
        let Some(node) = node else { return };
        let p = &self.points[node.point];
        if Some(node.point) != exclude {
            let d = query.dist(p);
            let entry = (d, node.point);
            let pos = best.partition_point(|e| *e < entry);
            best.insert(pos, entry);
            if best.len() > k {
                best.pop();
            }
        }
        let qc = match node.axis {
            0 => query.x,
            1 => query.y,
            _ => query.z,
        };
        let pc = match node.axis {
            0 => p.x,
            1 => p.y,
            _ => p.z,
        };
        let (near, far) = if qc < pc {
            (node.left.as_deref(), node.right.as_deref())
        } else {
            (node.right.as_deref(), node.left.as_deref())
        };
        self.search(near, query, k, exclude, best);
        let plane_dist = (qc - pc).abs();
        if best.len() < k || plane_dist <= best.last().unwrap().0 {
            self.search(far, query, k, exclude, best);
        }
    }
}
