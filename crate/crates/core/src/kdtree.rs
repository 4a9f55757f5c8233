//! Balanced 3D kd-tree for exact k-nearest-neighbor queries.
//!
//! Queries return exactly the points a brute-force scan sorted by
//! (squared distance, point index) would return, so distance ties are
//! broken deterministically by index.

use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud};

struct Node {
    /// Index into the original cloud.
    point: u32,
    split_dim: u8,
    left: i32,
    right: i32,
}

/// Immutable spatial index over a point cloud.
pub struct KdTree {
    points: Vec<Point3>,
    nodes: Vec<Node>,
    root: i32,
}

/// One k-NN result: squared distance and the point's index in the cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub dist_sq: f64,
    pub index: usize,
}

fn coord(p: Point3, dim: u8) -> f64 {
    match dim {
        0 => p.x,
        1 => p.y,
        _ => p.z,
    }
}

impl KdTree {
    /// Builds the index. Deterministic for a given input order.
    pub fn build(cloud: &PointCloud) -> Result<KdTree> {
        if cloud.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let points = cloud.points.clone();
        let mut indices: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::with_capacity(points.len());
        let root = build_recursive(&points, &mut indices, &mut nodes);
        Ok(KdTree {
            points,
            nodes,
            root,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The k nearest neighbors of `query`, sorted ascending by
    /// (squared distance, index). Returns fewer than k when the cloud is
    /// smaller than k.
    pub fn nearest(&self, query: Point3, k: usize) -> Vec<Neighbor> {
        let mut heap = BoundedHeap::new(k);
        if k > 0 {
            self.search(self.root, query, &mut heap);
        }
        heap.into_sorted()
    }

    fn search(&self, node_id: i32, query: Point3, heap: &mut BoundedHeap) {
        if node_id < 0 {
            return;
        }
        let node = &self.nodes[node_id as usize];
        let p = self.points[node.point as usize];
        let d = query - p;
        heap.offer(d.norm_squared(), node.point as usize);

        let delta = coord(query, node.split_dim) - coord(p, node.split_dim);
        let (near, far) = if delta <= 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        self.search(near, query, heap);
        // The far side can still hold equal-distance points with smaller
        // indices, so only prune on a strictly larger plane distance.
        if !heap.full() || delta * delta <= heap.worst_dist() {
            self.search(far, query, heap);
        }
    }
}

fn build_recursive(points: &[Point3], indices: &mut [u32], nodes: &mut Vec<Node>) -> i32 {
    if indices.is_empty() {
        return -1;
    }
    // Split along the widest extent of this subset.
    let mut min = points[indices[0] as usize];
    let mut max = min;
    for &i in indices.iter() {
        let p = points[i as usize];
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        min.z = min.z.min(p.z);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
        max.z = max.z.max(p.z);
    }
    let ext = max - min;
    let split_dim = if ext.x >= ext.y && ext.x >= ext.z {
        0u8
    } else if ext.y >= ext.z {
        1u8
    } else {
        2u8
    };

    let mid = indices.len() / 2;
    indices.select_nth_unstable_by(mid, |&a, &b| {
        let ca = coord(points[a as usize], split_dim);
        let cb = coord(points[b as usize], split_dim);
        ca.partial_cmp(&cb).unwrap().then(a.cmp(&b))
    });
    let point = indices[mid];

    let node_id = nodes.len() as i32;
    nodes.push(Node {
        point,
        split_dim,
        left: -1,
        right: -1,
    });
    let (lo, rest) = indices.split_at_mut(mid);
    let hi = &mut rest[1..];
    let left = build_recursive(points, lo, nodes);
    let right = build_recursive(points, hi, nodes);
    nodes[node_id as usize].left = left;
    nodes[node_id as usize].right = right;
    node_id
}

/// Max-heap over (dist_sq, index) keeping the k lexicographically smallest.
struct BoundedHeap {
    k: usize,
    entries: Vec<(f64, usize)>,
}

impl BoundedHeap {
    fn new(k: usize) -> Self {
        BoundedHeap {
            k,
            entries: Vec::with_capacity(k + 1),
        }
    }

    fn full(&self) -> bool {
        self.entries.len() >= self.k
    }

    fn worst_dist(&self) -> f64 {
        self.entries.first().map(|e| e.0).unwrap_or(f64::INFINITY)
    }

    fn offer(&mut self, dist_sq: f64, index: usize) {
        let candidate = (dist_sq, index);
        if self.full() {
            let worst = self.entries[0];
            if candidate < worst {
                self.pop_root();
            } else {
                return;
            }
        }
        self.entries.push(candidate);
        // sift up
        let mut i = self.entries.len() - 1;
        while i > 0 {
            let parent = (i - 1) / 2;
            if self.entries[parent] < self.entries[i] {
                self.entries.swap(parent, i);
                i = parent;
            } else {
                break;
            }
        }
    }

    fn pop_root(&mut self) {
        let last = self.entries.len() - 1;
        self.entries.swap(0, last);
        self.entries.pop();
        // sift down
        let n = self.entries.len();
        let mut i = 0;
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut largest = i;
            if l < n && self.entries[l] > self.entries[largest] {
                largest = l;
            }
            if r < n && self.entries[r] > self.entries[largest] {
                largest = r;
            }
            if largest == i {
                break;
            }
            self.entries.swap(i, largest);
            i = largest;
        }
    }

    fn into_sorted(self) -> Vec<Neighbor> {
        let mut v = self.entries;
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.into_iter()
            .map(|(dist_sq, index)| Neighbor { dist_sq, index })
            .collect()
    }
}

/// Reference k-NN by exhaustive scan, used by tests as the oracle.
pub fn brute_force_knn(points: &[Point3], query: Point3, k: usize) -> Vec<Neighbor> {
    let mut all: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| ((query - *p).norm_squared(), i))
        .collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all.truncate(k);
    all.into_iter()
        .map(|(dist_sq, index)| Neighbor { dist_sq, index })
        .collect()
}
