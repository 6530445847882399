use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Number of distinct entries of a symmetric `d × d` matrix.
pub fn vec_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Inverse of [`vec_len`]; `None` if `len` is not a triangular number.
pub fn dim_from_vec_len(len: usize) -> Option<usize> {
    let mut d = 0;
    while vec_len(d) < len {
        d += 1;
    }
    (vec_len(d) == len).then_some(d)
}

/// Upper-triangle index pairs `(i, j)`, `i < j`, in row-major order. This is
/// the order of the off-diagonal block of a vectorized FIM.
pub fn off_diagonal_pairs(d: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..d).flat_map(move |i| ((i + 1)..d).map(move |j| (i, j)))
}

/// `[F11, …, Fdd, F12, F13, …, F(d-1)d]`.
pub fn vec_fim(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeError(format!(
            "FIM must be square, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let d = m.nrows();
    let mut out = Vec::with_capacity(vec_len(d));
    out.extend((0..d).map(|i| m[(i, i)]));
    for (i, j) in off_diagonal_pairs(d) {
        if m[(i, j)] != m[(j, i)] {
            return Err(Error::ShapeError(format!("matrix is not symmetric at ({i}, {j})")));
        }
        out.push(m[(i, j)]);
    }
    Ok(out)
}

pub fn mat_fim(v: &[f64]) -> Result<DMatrix<f64>> {
    let d = dim_from_vec_len(v.len()).ok_or_else(|| {
        Error::ShapeError(format!("{} entries do not vectorize a symmetric matrix", v.len()))
    })?;
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = v[i];
    }
    for ((i, j), &x) in off_diagonal_pairs(d).zip(&v[d..]) {
        m[(i, j)] = x;
        m[(j, i)] = x;
    }
    Ok(m)
}
