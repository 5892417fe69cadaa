//! Cartesian stiffness of the linkage, its rank structure, stability
//! indicators, and the five-spring pseudo-rigid reduction.
//!
//! The loaded stiffness of one chain comes from the bordered system
//!
//! ```text
//! M = | Jt kt Jt'         Jq + Jt kt Htq |        kt = (Ktheta - Htt)^-1
//!     | Jq' + Hqt kt Jt'  Hqq + Hqt kt Htq |
//! ```
//!
//! whose leading 6x6 block of M^-1 maps platform displacement to wrench. M is
//! inverted as a whole; the passive-joint border is what removes stiffness
//! along the free direction, so it must not be eliminated early.
//!
//! The stability indicator restricts the load-corrected coordinate stiffness
//!
//! ```text
//! W = | -Hqq  -Hqt          |
//!     | -Htq  Ktheta - Htt  |
//! ```
//!
//! to the kernel of [Jq Jt], i.e. to coordinate motions that keep the platform
//! fixed. A nonpositive eigenvalue there means the chain can release elastic
//! energy without the platform moving: geometric buckling.

use nalgebra::linalg::{FullPivLU, SymmetricEigen, SVD};
use nalgebra::{Matrix2, Matrix6, SMatrix, Vector2, Vector6};

use crate::error::{Error, Result};
use crate::linkage::{chain_hessians, chain_jacobians, ChainState, Matrix8, ParallelogramModel};
use crate::spatial::{elem_transform, ElemKind};

/// Relative singular-value cutoff for rank decisions.
pub const RANK_THRESHOLD: f64 = 1e-10;
/// A kernel basis is trusted only if the third-smallest singular value of J
/// clears this fraction of the largest one.
const KERNEL_GAP: f64 = 1e-6;

type Matrix6x8 = SMatrix<f64, 6, 8>;

/// Symmetrized Cartesian stiffness together with the relative asymmetry of
/// the raw result (a numerical-quality diagnostic; the exact matrix is
/// symmetric).
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianStiffness {
    pub k: Matrix6<f64>,
    pub asymmetry: f64,
}

fn finish(raw: Matrix6<f64>) -> CartesianStiffness {
    let scale = raw.amax();
    let asymmetry = if scale > 0.0 {
        (raw - raw.transpose()).amax() / scale
    } else {
        0.0
    };
    CartesianStiffness {
        k: (raw + raw.transpose()) / 2.0,
        asymmetry,
    }
}

/// The bordered 8x8 system of one loaded chain.
fn loaded_system(
    model: &ParallelogramModel,
    chain: usize,
    state: &ChainState,
) -> Result<Matrix8> {
    let jac = chain_jacobians(model, chain, &state.q, &state.theta)?;
    let hess = chain_hessians(model, chain, &state.q, &state.theta, &state.lambda)?;
    let k_eff = model.k_theta[chain - 1] - hess.h_thetatheta;
    let k_inv = k_eff.try_inverse().ok_or(Error::SingularConfiguration {
        condition: f64::INFINITY,
        limit: crate::equilibrium::SINGULAR_CONDITION,
    })?;
    let h_thetaq = hess.h_qtheta.transpose();

    let mut m = Matrix8::zeros();
    m.fixed_view_mut::<6, 6>(0, 0)
        .copy_from(&(jac.j_theta * k_inv * jac.j_theta.transpose()));
    m.fixed_view_mut::<6, 2>(0, 6)
        .copy_from(&(jac.j_q + jac.j_theta * k_inv * h_thetaq));
    m.fixed_view_mut::<2, 6>(6, 0)
        .copy_from(&(jac.j_q.transpose() + hess.h_qtheta * k_inv * jac.j_theta.transpose()));
    m.fixed_view_mut::<2, 2>(6, 6)
        .copy_from(&(hess.h_qq + hess.h_qtheta * k_inv * h_thetaq));
    Ok(m)
}

fn chain_stiffness_raw(
    model: &ParallelogramModel,
    chain: usize,
    state: &ChainState,
) -> Result<Matrix6<f64>> {
    let m = loaded_system(model, chain, state)?;
    let inv = FullPivLU::new(m)
        .try_inverse()
        .ok_or(Error::SingularConfiguration {
            condition: f64::INFINITY,
            limit: crate::equilibrium::SINGULAR_CONDITION,
        })?;
    Ok(inv.fixed_view::<6, 6>(0, 0).into_owned())
}

/// Cartesian stiffness of one chain at the given equilibrium state.
pub fn chain_stiffness(
    model: &ParallelogramModel,
    chain: usize,
    state: &ChainState,
) -> Result<CartesianStiffness> {
    Ok(finish(chain_stiffness_raw(model, chain, state)?))
}

/// Total Cartesian stiffness: sum over both chains.
pub fn total_stiffness(
    model: &ParallelogramModel,
    states: &[ChainState; 2],
) -> Result<CartesianStiffness> {
    let raw =
        chain_stiffness_raw(model, 1, &states[0])? + chain_stiffness_raw(model, 2, &states[1])?;
    Ok(finish(raw))
}

/// Total stiffness with no load and straight bars at passive angle q.
pub fn unloaded_stiffness(model: &ParallelogramModel, q_angle: f64) -> Result<CartesianStiffness> {
    let state = ChainState {
        q: Vector2::new(q_angle, -q_angle),
        theta: Vector6::zeros(),
        lambda: Vector6::zeros(),
    };
    total_stiffness(model, &[state.clone(), state])
}

/// Condition number of the bordered system, worst chain. Large values flag an
/// unreliable linearization (e.g. at a stability boundary).
pub fn stiffness_system_condition(
    model: &ParallelogramModel,
    states: &[ChainState; 2],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for chain in 1..=2 {
        let m = loaded_system(model, chain, &states[chain - 1])?;
        let sv = m.singular_values();
        let mut smax: f64 = 0.0;
        let mut smin = f64::INFINITY;
        for &s in sv.iter() {
            smax = smax.max(s);
            smin = smin.min(s);
        }
        let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        worst = worst.max(cond);
    }
    Ok(worst)
}

/// Express a platform-frame stiffness matrix in the bar-aligned frame
/// (rotated by the passive angle about y).
pub fn bar_frame_stiffness(k_world: &Matrix6<f64>, q_angle: f64) -> Matrix6<f64> {
    let r = elem_transform(ElemKind::Ry, q_angle)
        .fixed_view::<3, 3>(0, 0)
        .into_owned();
    let mut q = Matrix6::zeros();
    q.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    q.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
    q.transpose() * k_world * q
}

/// Closed-form unloaded stiffness of the full parallelogram in the
/// bar-aligned frame. Only the entries below are nonzero; the third row and
/// column vanish identically (the free translation).
pub fn analytic_unloaded_stiffness(
    k_bar: &Matrix6<f64>,
    width: f64,
    q_angle: f64,
) -> Matrix6<f64> {
    let (s, c) = q_angle.sin_cos();
    let d2 = width * width;
    let k11 = k_bar[(0, 0)];
    let k22 = k_bar[(1, 1)];
    let k26 = k_bar[(1, 5)];
    let k44 = k_bar[(3, 3)];
    let k66 = k_bar[(5, 5)];

    let mut k = Matrix6::zeros();
    k[(0, 0)] = 2.0 * k11;
    k[(1, 1)] = 2.0 * k22;
    k[(1, 5)] = 2.0 * k26;
    k[(5, 1)] = 2.0 * k26;
    k[(3, 3)] = 2.0 * (k44 + d2 * c * c * k22 / 4.0);
    k[(3, 5)] = 2.0 * d2 * (2.0 * s * c) * k22 / 8.0;
    k[(5, 3)] = k[(3, 5)];
    k[(4, 4)] = 2.0 * d2 * c * c * k11 / 4.0;
    k[(5, 5)] = 2.0 * (k66 + d2 * s * s * k22 / 4.0);
    k
}

/// Rank structure of a stiffness matrix.
#[derive(Debug, Clone)]
pub struct RankReport {
    pub rank: usize,
    /// Descending.
    pub singular_values: Vector6<f64>,
    /// Right singular vectors below the rank cutoff, sign-normalized.
    pub null_space: Vec<Vector6<f64>>,
}

fn orient(v: &Vector6<f64>) -> Vector6<f64> {
    let mut imax = 0;
    for i in 1..6 {
        if v[i].abs() > v[imax].abs() {
            imax = i;
        }
    }
    if v[imax] < 0.0 {
        -*v
    } else {
        *v
    }
}

pub fn rank_analysis(k: &Matrix6<f64>) -> RankReport {
    let svd = SVD::new(*k, false, true);
    let v_t = svd.v_t.expect("SVD with v requested");
    let mut idx: Vec<usize> = (0..6).collect();
    idx.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .expect("singular values are ordered")
    });
    let mut singular_values = Vector6::zeros();
    let mut vectors = Vec::with_capacity(6);
    for (pos, &i) in idx.iter().enumerate() {
        singular_values[pos] = svd.singular_values[i];
        vectors.push(v_t.row(i).transpose());
    }
    let cutoff = RANK_THRESHOLD * singular_values[0];
    let rank = singular_values.iter().filter(|&&s| s > cutoff).count();
    let null_space = vectors[rank..].iter().map(orient).collect();
    RankReport {
        rank,
        singular_values,
        null_space,
    }
}

/// Smallest eigenvalue of W restricted to the kernel of the chain Jacobian
/// (the platform-fixed coordinate motions). Nonpositive means unstable.
///
/// The kernel basis comes from the complement projector of the row space,
/// I - QQ' with Q from a QR of J'. The projector's spectrum is exactly {0, 1},
/// so its top eigenvectors stay accurate even though J itself has singular
/// values spread over seven orders of magnitude (a direct eigensolve of J'J
/// mixes the kernel with the nearby small-singular-value cluster).
pub fn range_restricted_min_eig(w: &Matrix8, j: &Matrix6x8) -> Result<f64> {
    let sv = j.singular_values();
    let mut s_max: f64 = 0.0;
    let mut s_min = f64::INFINITY;
    for &s in sv.iter() {
        s_max = s_max.max(s);
        s_min = s_min.min(s);
    }
    if !(s_min > KERNEL_GAP * s_max) {
        return Err(Error::SingularConfiguration {
            condition: s_max / s_min.max(f64::MIN_POSITIVE),
            limit: 1.0 / KERNEL_GAP,
        });
    }
    let q = nalgebra::linalg::QR::new(j.transpose()).q();
    let projector = SMatrix::<f64, 8, 8>::identity() - q * q.transpose();
    let eig = SymmetricEigen::new(projector);
    let mut idx: Vec<usize> = (0..8).collect();
    idx.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are ordered")
    });
    debug_assert!(eig.eigenvalues[idx[1]] > 0.5 && eig.eigenvalues[idx[2]] < 0.5);
    let mut z = SMatrix::<f64, 8, 2>::zeros();
    z.set_column(0, &eig.eigenvectors.column(idx[0]));
    z.set_column(1, &eig.eigenvectors.column(idx[1]));
    let reduced: Matrix2<f64> = z.transpose() * w * z;
    let sym = (reduced + reduced.transpose()) / 2.0;
    Ok(sym.symmetric_eigenvalues().min())
}

/// Buckling indicator of one chain at a (loaded) state.
pub fn chain_indicator(
    model: &ParallelogramModel,
    chain: usize,
    state: &ChainState,
) -> Result<f64> {
    let jac = chain_jacobians(model, chain, &state.q, &state.theta)?;
    let hess = chain_hessians(model, chain, &state.q, &state.theta, &state.lambda)?;
    let mut w = Matrix8::zeros();
    w.fixed_view_mut::<2, 2>(0, 0).copy_from(&(-hess.h_qq));
    w.fixed_view_mut::<2, 6>(0, 2).copy_from(&(-hess.h_qtheta));
    w.fixed_view_mut::<6, 2>(2, 0)
        .copy_from(&(-hess.h_qtheta.transpose()));
    w.fixed_view_mut::<6, 6>(2, 2)
        .copy_from(&(model.k_theta[chain - 1] - hess.h_thetatheta));
    let mut j = Matrix6x8::zeros();
    j.fixed_view_mut::<6, 2>(0, 0).copy_from(&jac.j_q);
    j.fixed_view_mut::<6, 6>(0, 2).copy_from(&jac.j_theta);
    range_restricted_min_eig(&w, &j)
}

/// Buckling indicator of the linkage: worst chain.
pub fn buckling_indicator(model: &ParallelogramModel, states: &[ChainState; 2]) -> Result<f64> {
    let a = chain_indicator(model, 1, &states[0])?;
    let b = chain_indicator(model, 2, &states[1])?;
    Ok(a.min(b))
}

/// Smallest eigenvalue of the load-corrected spring stiffness Ktheta - Htt of
/// one chain. A coarser margin than the projected indicator: it ignores the
/// passive joints, so it can stay positive through a geometric instability.
pub fn spring_margin(model: &ParallelogramModel, chain: usize, state: &ChainState) -> Result<f64> {
    let hess = chain_hessians(model, chain, &state.q, &state.theta, &state.lambda)?;
    Ok((model.k_theta[chain - 1] - hess.h_thetatheta)
        .symmetric_eigenvalues()
        .min())
}

/// Rank-5 spectral reduction: five orthogonal one-dimensional springs plus
/// one free direction.
#[derive(Debug, Clone)]
pub struct PseudoRigidModel {
    /// Zero-stiffness direction, sign-normalized.
    pub free_axis: Vector6<f64>,
    /// Spring directions, ascending stiffness, sign-normalized.
    pub axes: [Vector6<f64>; 5],
    /// Spring rates, ascending.
    pub stiffness: [f64; 5],
}

impl PseudoRigidModel {
    /// Sum of the five rank-one springs; reproduces the reduced matrix.
    pub fn reassemble(&self) -> Matrix6<f64> {
        let mut k = Matrix6::zeros();
        for i in 0..5 {
            k += self.stiffness[i] * self.axes[i] * self.axes[i].transpose();
        }
        k
    }
}

/// Reduce a rank-5 positive-semidefinite stiffness matrix to the five-spring
/// model. Rejects matrices that are not PSD or whose rank is not exactly 5.
pub fn pseudo_rigid_reduction(k: &Matrix6<f64>) -> Result<PseudoRigidModel> {
    let sym = (k + k.transpose()) / 2.0;
    let eig = SymmetricEigen::new(sym);
    let mut idx: Vec<usize> = (0..6).collect();
    idx.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("eigenvalues are ordered")
    });
    let max = eig.eigenvalues[idx[5]];
    if !(max > 0.0) {
        return Err(Error::NotReducible(
            "stiffness matrix has no positive eigenvalue".into(),
        ));
    }
    let tol = RANK_THRESHOLD * max;
    let min = eig.eigenvalues[idx[0]];
    if min < -tol {
        return Err(Error::NotReducible(format!(
            "stiffness matrix is not positive-semidefinite (eigenvalue {min:e})"
        )));
    }
    let zero_count = idx
        .iter()
        .filter(|&&i| eig.eigenvalues[i].abs() <= tol)
        .count();
    if zero_count != 1 {
        return Err(Error::NotReducible(format!(
            "expected rank 5 with one free direction, got rank {}",
            6 - zero_count
        )));
    }
    let free_axis = orient(&eig.eigenvectors.column(idx[0]).into_owned());
    let axes = std::array::from_fn(|i| orient(&eig.eigenvectors.column(idx[i + 1]).into_owned()));
    let stiffness = std::array::from_fn(|i| eig.eigenvalues[idx[i + 1]]);
    Ok(PseudoRigidModel {
        free_axis,
        axes,
        stiffness,
    })
}
