#![allow(dead_code)]

use fimest::emst::PointCloud;
use fimest::rng::CtrRng;
use nalgebra::DMatrix;

pub fn uniform_cloud(n: usize, k: usize, rng: &mut CtrRng) -> PointCloud {
    let data = (0..n * k).map(|_| rng.uniform()).collect();
    PointCloud::new(data, k).unwrap()
}

pub fn dist(x: &PointCloud, a: usize, b: usize) -> f64 {
    x.row(a)
        .iter()
        .zip(x.row(b))
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Sum of edge lengths over sorted `(min, max)` pairs, in that order.
pub fn tree_length(x: &PointCloud, pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(a, b)| dist(x, a, b)).sum()
}

/// Decode a Prüfer sequence into the sorted edge list of a labelled tree.
fn prufer_edges(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in seq {
        let leaf = (0..n).find(|&i| degree[i] == 1).unwrap();
        edges.push((leaf.min(s), leaf.max(s)));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&i| degree[i] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges.sort_unstable();
    edges
}

/// Minimum spanning tree by enumerating all `n^(n-2)` labelled trees.
pub fn brute_force_mst(x: &PointCloud) -> (f64, Vec<(usize, usize)>) {
    let n = x.len();
    if n == 2 {
        return (dist(x, 0, 1), vec![(0, 1)]);
    }
    let len = n - 2;
    let mut seq = vec![0usize; len];
    let mut best = (f64::INFINITY, Vec::new());
    loop {
        let edges = prufer_edges(&seq, n);
        let w = tree_length(x, &edges);
        if w < best.0 {
            best = (w, edges);
        }
        let mut i = 0;
        while i < len {
            seq[i] += 1;
            if seq[i] < n {
                break;
            }
            seq[i] = 0;
            i += 1;
        }
        if i == len {
            return best;
        }
    }
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut CtrRng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.normal())
}

/// Random symmetric positive semidefinite `d × d` matrix of rank `rank`.
pub fn random_psd(d: usize, rank: usize, rng: &mut CtrRng) -> DMatrix<f64> {
    let a = random_matrix(d, rank, rng);
    &a * a.transpose()
}

/// Random symmetric positive definite matrix with condition number at most
/// about `1 + d`.
pub fn random_spd(d: usize, rng: &mut CtrRng) -> DMatrix<f64> {
    let a = random_matrix(d, d, rng);
    &a * a.transpose() + DMatrix::identity(d, d) * (d as f64)
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}
