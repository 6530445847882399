//! Fisher information from perturbed sampling.
//!
//! For a perturbation `u` of the parameter, `Q = 2 Dα(p_θ, p_{θ+u})` is
//! modelled as the quadratic form `uᵀ F u`. Collecting `M` perturbations gives
//! the linear system `Q ≈ U · vec(F)`, solved either by plain least squares
//! or with the diagonal pinned to per-axis estimates and `F ⪰ 0` enforced.

mod design;
mod q;
mod solve;
mod vecmat;

pub use design::{
    design_row, sample_perturbations, sample_perturbations_with, PerturbationDesign, PerturbationLaw,
    MAX_NORMAL_CONDITION,
};
pub use q::{diagonal_fim, estimate_q, fit_axis, job_seeds, QOptions, QSource, QVector};
pub use solve::{
    ls_fim, ls_objective, psd_constrained_fim, Diagnostics, FimEstimate, FimMethod, PSD_MAX_ITERATIONS,
};
pub use vecmat::{dim_from_vec_len, mat_fim, off_diagonal_pairs, vec_fim, vec_len};
