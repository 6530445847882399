//! Exact Euclidean minimum spanning trees and the Friedman-Rafsky
//! cross-edge count.
//!
//! Edges are compared by the strict total order
//! `(squared length, min index, max index)`, so the tree is unique even when
//! the input has tied distances, and Prim and Kruskal agree on the edge set.

use crate::error::{Error, Result};
use std::cmp::Ordering;

/// `n` points in `dim` dimensions, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    data: Vec<f64>,
    dim: usize,
}

impl PointCloud {
    /// Build from row-major data. Rejects empty clouds, ragged data and
    /// non-finite values.
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("point dimension must be at least 1".into()));
        }
        if data.is_empty() {
            return Err(Error::InvalidInput("point cloud must contain at least one point".into()));
        }
        if data.len() % dim != 0 {
            return Err(Error::ShapeError(format!(
                "{} values do not form rows of length {dim}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput {
                row: i / dim,
                col: i % dim,
            });
        }
        Ok(Self { data, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::ShapeError(format!(
                    "row {i} has {} columns, expected {dim}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(data, dim)
    }

    /// One-dimensional cloud from scalar values.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), 1)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Multiply every coordinate by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.data.iter().map(|v| v * s).collect(), self.dim)
    }

    #[inline]
    fn dist2(&self, a: usize, b: usize) -> f64 {
        self.row(a)
            .iter()
            .zip(self.row(b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum()
    }
}

/// Which sample a point was drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    P,
    Q,
}

/// The pooled cloud `Xp ∪ Xq` with per-point origin labels. The first
/// `n_p` rows come from `P`.
#[derive(Clone, Debug)]
pub struct LabeledSampleSet {
    cloud: PointCloud,
    labels: Vec<Origin>,
    n_p: usize,
    n_q: usize,
}

impl LabeledSampleSet {
    pub fn new(xp: &PointCloud, xq: &PointCloud) -> Result<Self> {
        if xp.dim() != xq.dim() {
            return Err(Error::DimensionMismatch {
                expected: xp.dim(),
                actual: xq.dim(),
            });
        }
        let mut data = Vec::with_capacity(xp.as_slice().len() + xq.as_slice().len());
        data.extend_from_slice(xp.as_slice());
        data.extend_from_slice(xq.as_slice());
        let cloud = PointCloud::new(data, xp.dim())?;
        let mut labels = vec![Origin::P; xp.len()];
        labels.resize(xp.len() + xq.len(), Origin::Q);
        Ok(Self {
            cloud,
            labels,
            n_p: xp.len(),
            n_q: xq.len(),
        })
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn labels(&self) -> &[Origin] {
        &self.labels
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct SpanningTree {
    edges: Vec<Edge>,
    node_count: usize,
}

impl SpanningTree {
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Edge endpoint pairs as `(min, max)`, sorted.
    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = self.edges.iter().map(|e| (e.a.min(e.b), e.a.max(e.b))).collect();
        v.sort_unstable();
        v
    }
}

/// Total order key of an edge.
#[derive(Clone, Copy, Debug)]
struct EdgeKey {
    d2: f64,
    lo: usize,
    hi: usize,
}

impl EdgeKey {
    fn new(d2: f64, a: usize, b: usize) -> Self {
        Self {
            d2,
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.lo.cmp(&other.lo))
            .then(self.hi.cmp(&other.hi))
    }
}

fn require_two(cloud: &PointCloud) -> Result<()> {
    if cloud.len() < 2 {
        return Err(Error::InvalidInput(
            "a spanning tree needs at least two points".into(),
        ));
    }
    Ok(())
}

/// Exact EMST by dense Prim: O(n²) distance evaluations, O(n) memory.
///
/// Every unordered pair is evaluated exactly once, which is also where
/// duplicate rows are detected.
pub fn build_emst(cloud: &PointCloud) -> Result<SpanningTree> {
    require_two(cloud)?;
    let n = cloud.len();
    let mut in_tree = vec![false; n];
    let mut best: Vec<EdgeKey> = vec![
        EdgeKey {
            d2: f64::INFINITY,
            lo: usize::MAX,
            hi: usize::MAX,
        };
        n
    ];
    let mut parent = vec![usize::MAX; n];
    let mut edges = Vec::with_capacity(n - 1);

    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let d2 = cloud.dist2(current, v);
            if d2 == 0.0 {
                return Err(Error::DuplicatePoints {
                    first: current.min(v),
                    second: current.max(v),
                });
            }
            let key = EdgeKey::new(d2, current, v);
            if key.cmp(&best[v]) == Ordering::Less {
                best[v] = key;
                parent[v] = current;
            }
            if next == usize::MAX || best[v].cmp(&best[next]) == Ordering::Less {
                next = v;
            }
        }
        in_tree[next] = true;
        edges.push(Edge {
            a: parent[next],
            b: next,
            weight: best[next].d2.sqrt(),
        });
        current = next;
    }
    Ok(SpanningTree {
        edges,
        node_count: n,
    })
}

/// Exact EMST by Kruskal over all O(n²) edges. Used as a cross-check of
/// [`build_emst`]; memory grows quadratically.
pub fn build_emst_kruskal(cloud: &PointCloud) -> Result<SpanningTree> {
    require_two(cloud)?;
    let n = cloud.len();
    let mut all = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in (a + 1)..n {
            let d2 = cloud.dist2(a, b);
            if d2 == 0.0 {
                return Err(Error::DuplicatePoints { first: a, second: b });
            }
            all.push(EdgeKey::new(d2, a, b));
        }
    }
    all.sort_unstable_by(|x, y| x.cmp(y));

    let mut uf = UnionFind::new(n);
    let mut edges = Vec::with_capacity(n - 1);
    for k in all {
        if uf.union(k.lo, k.hi) {
            edges.push(Edge {
                a: k.lo,
                b: k.hi,
                weight: k.d2.sqrt(),
            });
            if edges.len() == n - 1 {
                break;
            }
        }
    }
    Ok(SpanningTree {
        edges,
        node_count: n,
    })
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            Ordering::Less => self.parent[ra] = rb,
            Ordering::Greater => self.parent[rb] = ra,
            Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Number of tree edges whose endpoints carry different labels.
pub fn count_cross_edges(tree: &SpanningTree, labels: &[Origin]) -> Result<usize> {
    if labels.len() != tree.node_count() {
        return Err(Error::LabelMismatch {
            labels: labels.len(),
            nodes: tree.node_count(),
        });
    }
    Ok(tree
        .edges()
        .iter()
        .filter(|e| labels[e.a] != labels[e.b])
        .count())
}

/// Friedman-Rafsky statistic of two samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrStatistic {
    pub cross_edges: usize,
    pub n_p: usize,
    pub n_q: usize,
}

pub fn fr_statistic(xp: &PointCloud, xq: &PointCloud) -> Result<FrStatistic> {
    let set = LabeledSampleSet::new(xp, xq)?;
    let tree = build_emst(set.cloud())?;
    let c = count_cross_edges(&tree, set.labels())?;
    Ok(FrStatistic {
        cross_edges: c,
        n_p: set.n_p(),
        n_q: set.n_q(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud1(v: &[f64]) -> PointCloud {
        PointCloud::from_scalars(v).unwrap()
    }

    #[test]
    fn chain_in_one_dimension() {
        let t = build_emst(&cloud1(&[0.0, 1.0, 3.0])).unwrap();
        assert_eq!(t.edge_pairs(), vec![(0, 1), (1, 2)]);
        assert_eq!(t.total_weight(), 3.0);
    }

    #[test]
    fn square_corners_tie_break() {
        let c = PointCloud::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        let prim = build_emst(&c).unwrap();
        let kruskal = build_emst_kruskal(&c).unwrap();
        assert_eq!(prim.total_weight(), 3.0);
        // Unit edges in lexicographic order: (0,1), (0,2), (1,3), (2,3).
        assert_eq!(prim.edge_pairs(), vec![(0, 1), (0, 2), (1, 3)]);
        assert_eq!(prim.edge_pairs(), kruskal.edge_pairs());
    }

    #[test]
    fn duplicates_rejected() {
        let c = PointCloud::from_rows(&[[0.0, 1.0], [2.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            build_emst(&c),
            Err(Error::DuplicatePoints { first: 0, second: 2 })
        ));
        assert!(matches!(
            build_emst_kruskal(&c),
            Err(Error::DuplicatePoints { first: 0, second: 2 })
        ));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            PointCloud::new(vec![0.0, f64::NAN], 1),
            Err(Error::NonFiniteInput { row: 1, col: 0 })
        ));
        assert!(matches!(
            PointCloud::new(vec![0.0, 1.0, f64::INFINITY, 2.0], 2),
            Err(Error::NonFiniteInput { row: 1, col: 0 })
        ));
    }

    #[test]
    fn single_point_has_no_tree() {
        assert!(build_emst(&cloud1(&[1.0])).is_err());
    }

    #[test]
    fn cross_edge_examples() {
        let fr = fr_statistic(&cloud1(&[0.0]), &cloud1(&[1.0])).unwrap();
        assert_eq!(fr.cross_edges, 1);
        let fr = fr_statistic(&cloud1(&[0.0, 2.0]), &cloud1(&[1.0])).unwrap();
        assert_eq!(fr.cross_edges, 2);
        let fr = fr_statistic(&cloud1(&[0.0, 1.0]), &cloud1(&[100.0, 101.0])).unwrap();
        assert_eq!(fr.cross_edges, 1);
        assert_eq!((fr.n_p, fr.n_q), (2, 2));
    }

    #[test]
    fn separated_clusters_have_one_bridge() {
        let xp: Vec<[f64; 2]> = (0..20).map(|i| [i as f64 * 0.1, (i * i) as f64 * 0.01]).collect();
        let xq: Vec<[f64; 2]> = xp.iter().map(|r| [r[0] + 1e3, r[1] - 1e3]).collect();
        let fr = fr_statistic(
            &PointCloud::from_rows(&xp).unwrap(),
            &PointCloud::from_rows(&xq).unwrap(),
        )
        .unwrap();
        assert_eq!(fr.cross_edges, 1);
    }

    #[test]
    fn label_length_checked() {
        let t = build_emst(&cloud1(&[0.0, 1.0])).unwrap();
        assert!(matches!(
            count_cross_edges(&t, &[Origin::P]),
            Err(Error::LabelMismatch { labels: 1, nodes: 2 })
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let a = cloud1(&[0.0]);
        let b = PointCloud::from_rows(&[[0.0, 1.0]]).unwrap();
        assert!(matches!(
            fr_statistic(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
