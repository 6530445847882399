//! Build the Euclidean MST of two pooled samples and count the edges that
//! join a point of one sample to a point of the other.

use fimest::emst::{build_emst, count_cross_edges, LabeledSampleSet, PointCloud};
use fimest::models::{GaussianMeanModel, GenerativeModel};

fn main() -> fimest::Result<()> {
    let model = GaussianMeanModel::standard(2)?;
    for shift in [0.0, 1.0, 3.0] {
        let xp = model.sample(&[0.0, 0.0], 300, 1)?;
        let xq = model.sample(&[shift, 0.0], 300, 2)?;
        let set = LabeledSampleSet::new(&xp, &xq)?;
        let tree = build_emst(set.cloud())?;
        let c = count_cross_edges(&tree, set.labels())?;
        println!(
            "shift {shift:.1}: {} edges, total length {:.3}, {c} cross edges (C/N = {:.3})",
            tree.edges().len(),
            tree.total_weight(),
            c as f64 / set.cloud().len() as f64
        );
    }

    // Ties are broken by index, so the tree of a unit square is fixed.
    let square = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])?;
    println!("unit square edges: {:?}", build_emst(&square)?.edge_pairs());
    Ok(())
}
