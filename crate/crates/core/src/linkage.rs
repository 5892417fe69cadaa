//! Parallelogram linkage model: two serial chains, each a passive pivot, a rigid
//! bar, a 6-coordinate virtual spring at the bar tip, and a second passive pivot
//! carrying the platform half-link.
//!
//! Chain i (i in {1,2}, eta = (-1)^i) is the ordered product
//!
//! ```text
//! T_i = Tz(eta d/2) Ry(q_i1) Tx(L) Tx(th1) Ty(th2) Tz(th3)
//!       Rx(th4) Ry(th5) Rz(th6) Ry(q_i2) Tz(-eta d/2)
//! ```
//!
//! The platform half-link follows the second pivot rigidly; with both passive
//! rotations free this closes the loop for q_i2 = -q_i1 at zero spring
//! deflection and gives the parallelogram its translational coupling.

use nalgebra::{Matrix2, Matrix6, SMatrix, Vector2, Vector6};

use crate::error::{Error, Result};
use crate::spatial::{
    compose, elem_derivative, elem_transform, euler_rate_inverse, pose_from_transform, ElemKind,
    Pose, Transform4,
};

pub type Matrix6x2 = SMatrix<f64, 6, 2>;
pub type Matrix2x6 = SMatrix<f64, 2, 6>;
pub type Matrix8 = SMatrix<f64, 8, 8>;
pub type Vector8 = SMatrix<f64, 8, 1>;

/// Translational elastic range as a fraction of bar length.
pub const ELASTIC_TRANSLATION_FACTOR: f64 = 0.2;
/// Rotational elastic range [rad].
pub const ELASTIC_ROTATION_LIMIT: f64 = 0.5;
/// Finite-difference step for the Hessian blocks [mm or rad].
pub const HESSIAN_STEP: f64 = 1e-5;

/// Geometry and spring stiffness of the parallelogram.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelogramModel {
    /// Bar length L [mm].
    pub length: f64,
    /// Parallelogram width d (bar separation) [mm].
    pub width: f64,
    /// Bar stiffness matrix [N/mm, N/rad, N·mm/mm, N·mm/rad by block].
    pub k_bar: Matrix6<f64>,
    /// Virtual-spring stiffness per chain; defaults to the bar matrix.
    pub k_theta: [Matrix6<f64>; 2],
}

impl ParallelogramModel {
    pub fn new(length: f64, width: f64, k_bar: Matrix6<f64>) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::Config(format!("L must be positive, got {length}")));
        }
        if !(width > 0.0) {
            return Err(Error::Config(format!("d must be positive, got {width}")));
        }
        validate_spring_matrix("Kb", &k_bar)?;
        Ok(Self {
            length,
            width,
            k_bar,
            k_theta: [k_bar, k_bar],
        })
    }

    /// Replace the per-chain spring matrices (validated like the bar matrix).
    pub fn with_chain_springs(mut self, k_theta: [Matrix6<f64>; 2]) -> Result<Self> {
        validate_spring_matrix("Ktheta[1]", &k_theta[0])?;
        validate_spring_matrix("Ktheta[2]", &k_theta[1])?;
        self.k_theta = k_theta;
        Ok(self)
    }

    /// Pose of the platform center with no load and straight bars.
    pub fn unloaded_pose(&self) -> Pose {
        Pose::new(self.length, 0.0, 0.0, 0.0, 0.0, 0.0)
    }

    /// Signed side of the chain: eta = (-1)^i.
    pub fn eta(chain: usize) -> f64 {
        assert!(chain == 1 || chain == 2, "chain index must be 1 or 2");
        if chain == 1 {
            -1.0
        } else {
            1.0
        }
    }
}

/// Symmetry (1e-9 relative) and positive-definiteness check, with the violated
/// entry named in the rejection.
pub(crate) fn validate_spring_matrix(name: &str, m: &Matrix6<f64>) -> Result<()> {
    let scale = m.amax();
    if !scale.is_finite() || scale == 0.0 {
        return Err(Error::Config(format!("{name} entries must be finite and non-zero")));
    }
    for i in 0..6 {
        for j in (i + 1)..6 {
            let diff = (m[(i, j)] - m[(j, i)]).abs();
            if diff > 1e-9 * scale {
                return Err(Error::Config(format!(
                    "{name} not symmetric at ({},{})/({},{}): {:e} vs {:e}",
                    i + 1,
                    j + 1,
                    j + 1,
                    i + 1,
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }
    let eig = m.symmetric_eigenvalues();
    let min = eig.min();
    if !(min > 0.0) {
        return Err(Error::Config(format!(
            "{name} not positive-definite: smallest eigenvalue {min:e}"
        )));
    }
    Ok(())
}

/// One chain's coordinates and reaction wrench.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    /// Passive joint angles (q_i1, q_i2) [rad].
    pub q: Vector2<f64>,
    /// Virtual-spring deflections (3 translations [mm], 3 rotations [rad]).
    pub theta: Vector6<f64>,
    /// Endpoint wrench: force [N], torque [N·mm].
    pub lambda: Vector6<f64>,
}

impl ChainState {
    pub fn zero() -> Self {
        Self {
            q: Vector2::zeros(),
            theta: Vector6::zeros(),
            lambda: Vector6::zeros(),
        }
    }

    /// None if within the elastic range, otherwise a description of the violation.
    pub fn elastic_range_violation(&self, model: &ParallelogramModel) -> Option<String> {
        let t_limit = ELASTIC_TRANSLATION_FACTOR * model.length;
        for k in 0..3 {
            if self.theta[k].abs() > t_limit {
                return Some(format!(
                    "spring translation theta{} = {:.3} mm exceeds {:.1} mm",
                    k + 1,
                    self.theta[k],
                    t_limit
                ));
            }
        }
        for k in 3..6 {
            if self.theta[k].abs() > ELASTIC_ROTATION_LIMIT {
                return Some(format!(
                    "spring rotation theta{} = {:.3} rad exceeds {:.1} rad",
                    k + 1,
                    self.theta[k],
                    ELASTIC_ROTATION_LIMIT
                ));
            }
        }
        None
    }
}

/// Pose-rate Jacobians of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainJacobians {
    /// 6x6, column k = d(pose)/d(theta_k).
    pub j_theta: Matrix6<f64>,
    /// 6x2, column k = d(pose)/d(q_k).
    pub j_q: Matrix6x2,
}

/// Second derivatives of Psi = g(q,theta)^T lambda.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainHessians {
    pub h_qq: Matrix2<f64>,
    pub h_qtheta: Matrix2x6,
    pub h_thetatheta: Matrix6<f64>,
}

const N_FACTORS: usize = 11;
const Q1_FACTOR: usize = 1;
const THETA_FACTOR0: usize = 3;
const Q2_FACTOR: usize = 9;

fn chain_factors(
    model: &ParallelogramModel,
    chain: usize,
    q: &Vector2<f64>,
    theta: &Vector6<f64>,
) -> [(ElemKind, f64); N_FACTORS] {
    let e = ParallelogramModel::eta(chain) * model.width / 2.0;
    [
        (ElemKind::Tz, e),
        (ElemKind::Ry, q[0]),
        (ElemKind::Tx, model.length),
        (ElemKind::Tx, theta[0]),
        (ElemKind::Ty, theta[1]),
        (ElemKind::Tz, theta[2]),
        (ElemKind::Rx, theta[3]),
        (ElemKind::Ry, theta[4]),
        (ElemKind::Rz, theta[5]),
        (ElemKind::Ry, q[1]),
        (ElemKind::Tz, -e),
    ]
}

/// Full homogeneous transform of chain i at coordinates (q, theta).
pub fn chain_transform(
    model: &ParallelogramModel,
    chain: usize,
    q: &Vector2<f64>,
    theta: &Vector6<f64>,
) -> Transform4 {
    let mats: Vec<Transform4> = chain_factors(model, chain, q, theta)
        .iter()
        .map(|&(kind, v)| elem_transform(kind, v))
        .collect();
    compose(&mats)
}

/// Endpoint pose g_i(q, theta) of chain i.
pub fn chain_pose(
    model: &ParallelogramModel,
    chain: usize,
    q: &Vector2<f64>,
    theta: &Vector6<f64>,
) -> Result<Pose> {
    pose_from_transform(&chain_transform(model, chain, q, theta))
}

/// Analytic pose-rate Jacobians, by chain rule over the elementary factors.
pub fn chain_jacobians(
    model: &ParallelogramModel,
    chain: usize,
    q: &Vector2<f64>,
    theta: &Vector6<f64>,
) -> Result<ChainJacobians> {
    let factors = chain_factors(model, chain, q, theta);
    let mats: Vec<Transform4> = factors
        .iter()
        .map(|&(kind, v)| elem_transform(kind, v))
        .collect();

    let mut prefix = [Transform4::identity(); N_FACTORS + 1];
    for k in 0..N_FACTORS {
        prefix[k + 1] = prefix[k] * mats[k];
    }
    let mut suffix = [Transform4::identity(); N_FACTORS + 1];
    for k in (0..N_FACTORS).rev() {
        suffix[k] = mats[k] * suffix[k + 1];
    }

    let total = prefix[N_FACTORS];
    let pose = pose_from_transform(&total)?;
    let rot_t = total.fixed_view::<3, 3>(0, 0).transpose();
    let e_inv = euler_rate_inverse(&pose.fixed_rows::<3>(3).into())?;

    let column = |k: usize| -> Vector6<f64> {
        let (kind, v) = factors[k];
        let d = prefix[k] * elem_derivative(kind, v) * suffix[k + 1];
        let dp = d.fixed_view::<3, 1>(0, 3).into_owned();
        let w_mat = d.fixed_view::<3, 3>(0, 0) * rot_t;
        let w = nalgebra::Vector3::new(
            (w_mat[(2, 1)] - w_mat[(1, 2)]) / 2.0,
            (w_mat[(0, 2)] - w_mat[(2, 0)]) / 2.0,
            (w_mat[(1, 0)] - w_mat[(0, 1)]) / 2.0,
        );
        let dphi = e_inv * w;
        let mut col = Vector6::zeros();
        col.fixed_rows_mut::<3>(0).copy_from(&dp);
        col.fixed_rows_mut::<3>(3).copy_from(&dphi);
        col
    };

    let mut j_q = Matrix6x2::zeros();
    j_q.set_column(0, &column(Q1_FACTOR));
    j_q.set_column(1, &column(Q2_FACTOR));
    let mut j_theta = Matrix6::zeros();
    for k in 0..6 {
        j_theta.set_column(k, &column(THETA_FACTOR0 + k));
    }
    Ok(ChainJacobians { j_theta, j_q })
}

/// Gradient of Psi = g^T lambda over the stacked coordinates (q, theta).
fn psi_gradient(
    model: &ParallelogramModel,
    chain: usize,
    q: &Vector2<f64>,
    theta: &Vector6<f64>,
    lambda: &Vector6<f64>,
) -> Result<Vector8> {
    let jac = chain_jacobians(model, chain, q, theta)?;
    let mut g = Vector8::zeros();
    g.fixed_rows_mut::<2>(0)
        .copy_from(&(jac.j_q.transpose() * lambda));
    g.fixed_rows_mut::<6>(2)
        .copy_from(&(jac.j_theta.transpose() * lambda));
    Ok(g)
}

fn raw_hessian(
    model: &ParallelogramModel,
    chain: usize,
    q: &Vector2<f64>,
    theta: &Vector6<f64>,
    lambda: &Vector6<f64>,
    step: f64,
) -> Result<Matrix8> {
    let mut h = Matrix8::zeros();
    for k in 0..8 {
        let mut qp = *q;
        let mut qm = *q;
        let mut tp = *theta;
        let mut tm = *theta;
        if k < 2 {
            qp[k] += step;
            qm[k] -= step;
        } else {
            tp[k - 2] += step;
            tm[k - 2] -= step;
        }
        let gp = psi_gradient(model, chain, &qp, &tp, lambda)?;
        let gm = psi_gradient(model, chain, &qm, &tm, lambda)?;
        h.set_column(k, &((gp - gm) / (2.0 * step)));
    }
    Ok(h)
}

/// Hessian blocks of Psi = g^T lambda: central finite differences of the
/// analytic Jacobians contracted with lambda, symmetrized.
pub fn chain_hessians(
    model: &ParallelogramModel,
    chain: usize,
    q: &Vector2<f64>,
    theta: &Vector6<f64>,
    lambda: &Vector6<f64>,
) -> Result<ChainHessians> {
    let raw = raw_hessian(model, chain, q, theta, lambda, HESSIAN_STEP)?;
    let h = (raw + raw.transpose()) / 2.0;
    Ok(ChainHessians {
        h_qq: h.fixed_view::<2, 2>(0, 0).into_owned(),
        h_qtheta: h.fixed_view::<2, 6>(0, 2).into_owned(),
        h_thetatheta: h.fixed_view::<6, 6>(2, 2).into_owned(),
    })
}

/// Largest entrywise asymmetry of the stacked Hessian before symmetrization.
pub fn hessian_asymmetry(
    model: &ParallelogramModel,
    chain: usize,
    q: &Vector2<f64>,
    theta: &Vector6<f64>,
    lambda: &Vector6<f64>,
) -> Result<f64> {
    let raw = raw_hessian(model, chain, q, theta, lambda, HESSIAN_STEP)?;
    Ok((raw - raw.transpose()).amax())
}

/// Target on the passive travel arc with vertical displacement u: the platform
/// center moves on the circle of radius L, so the force-free pose at height u
/// is (sqrt(L^2 - u^2), 0, u) with identity orientation.
pub fn passive_path_target(model: &ParallelogramModel, u: f64) -> Pose {
    let x = (model.length * model.length - u * u).sqrt();
    Pose::new(x, 0.0, u, 0.0, 0.0, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::orthoglide_fixture;
    use approx::assert_relative_eq;

    fn model() -> ParallelogramModel {
        orthoglide_fixture().to_model().unwrap()
    }

    #[test]
    fn loop_closes_at_opposite_passive_angles() {
        let m = model();
        let q = Vector2::new(0.1, -0.1);
        let th = Vector6::zeros();
        let p1 = chain_pose(&m, 1, &q, &th).unwrap();
        let p2 = chain_pose(&m, 2, &q, &th).unwrap();
        assert_relative_eq!(p1, p2, epsilon = 1e-12);
        // frozen against an independent finite-difference implementation
        assert_relative_eq!(p1[0], 308.4512912361880, max_relative = 1e-13);
        assert_relative_eq!(p1[2], -30.94835916051673, max_relative = 1e-13);
        assert_relative_eq!(p1[1], 0.0, epsilon = 1e-14);
        assert_relative_eq!(p1[4], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn deflected_pose_frozen_values() {
        let m = model();
        let q = Vector2::new(0.15, -0.05);
        let th = Vector6::new(0.4, -0.2, 0.3, 0.02, -0.01, 0.03);
        let p = chain_pose(&m, 1, &q, &th).unwrap();
        let expected = [
            310.0642617768710,
            -0.9414960256338984,
            -46.23675059487654,
            0.02155039280434203,
            0.08998790680720266,
            0.02682654608523895,
        ];
        for k in 0..6 {
            assert_relative_eq!(p[k], expected[k], max_relative = 1e-12);
        }
    }

    #[test]
    fn jacobian_frozen_columns() {
        let m = model();
        let q = Vector2::new(0.15, -0.05);
        let th = Vector6::new(0.4, -0.2, 0.3, 0.02, -0.01, 0.03);
        let jac = chain_jacobians(&m, 1, &q, &th).unwrap();
        let jq0 = [
            -11.68675059487655,
            0.0,
            -310.0642617768710,
            0.001944375876378306,
            0.9997677992717422,
            -0.02163626901492499,
        ];
        let jq1 = [
            34.39782333325234,
            0.9934131071477309,
            -3.083079683191384,
            -0.02693230146304028,
            0.9996401897918699,
            0.002420311802555265,
        ];
        let jt4 = [
            34.40999660696338,
            -0.04141682814640540,
            -3.106482796816616,
            0.003148715782969211,
            0.9999939590849147,
            -0.001782114264453573,
        ];
        for k in 0..6 {
            assert_relative_eq!(jac.j_q[(k, 0)], jq0[k], epsilon = 1e-11, max_relative = 1e-11);
            assert_relative_eq!(jac.j_q[(k, 1)], jq1[k], epsilon = 1e-11, max_relative = 1e-11);
            assert_relative_eq!(jac.j_theta[(k, 4)], jt4[k], epsilon = 1e-11, max_relative = 1e-11);
        }
        assert_relative_eq!(
            jac.j_theta.column(1).into_owned(),
            Vector6::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let m = model();
        let q = Vector2::new(0.12, -0.07);
        let th = Vector6::new(0.3, -0.1, 0.2, 0.03, -0.02, 0.01);
        let jac = chain_jacobians(&m, 2, &q, &th).unwrap();
        let h = 1e-6;
        for k in 0..2 {
            let mut qp = q;
            let mut qm = q;
            qp[k] += h;
            qm[k] -= h;
            let fd = (chain_pose(&m, 2, &qp, &th).unwrap()
                - chain_pose(&m, 2, &qm, &th).unwrap())
                / (2.0 * h);
            assert_relative_eq!(jac.j_q.column(k).into_owned(), fd, epsilon = 1e-7);
        }
        for k in 0..6 {
            let mut tp = th;
            let mut tm = th;
            tp[k] += h;
            tm[k] -= h;
            let fd = (chain_pose(&m, 2, &q, &tp).unwrap()
                - chain_pose(&m, 2, &q, &tm).unwrap())
                / (2.0 * h);
            assert_relative_eq!(jac.j_theta.column(k).into_owned(), fd, epsilon = 1e-7);
        }
    }

    #[test]
    fn hessian_linear_in_lambda() {
        let m = model();
        let q = Vector2::new(0.1, -0.1);
        let th = Vector6::new(0.1, 0.05, -0.02, 0.01, 0.02, -0.01);
        let lam = Vector6::new(3.0, -1.0, 2.0, 0.5, -0.2, 1.5);
        let h1 = chain_hessians(&m, 1, &q, &th, &lam).unwrap();
        let h2 = chain_hessians(&m, 1, &q, &th, &(lam * 2.0)).unwrap();
        assert_relative_eq!(h2.h_qq, h1.h_qq * 2.0, epsilon = 1e-12);
        assert_relative_eq!(h2.h_qtheta, h1.h_qtheta * 2.0, epsilon = 1e-12);
        assert_relative_eq!(h2.h_thetatheta, h1.h_thetatheta * 2.0, epsilon = 1e-12);
    }

    #[test]
    fn hessian_nearly_symmetric_before_symmetrization() {
        let m = model();
        let q = Vector2::new(0.1, -0.08);
        let th = Vector6::new(0.2, -0.1, 0.15, 0.02, -0.03, 0.01);
        let lam = Vector6::new(1.0, 0.5, -0.7, 0.2, -0.1, 0.3);
        let asym = hessian_asymmetry(&m, 1, &q, &th, &lam).unwrap();
        assert!(asym < 1e-6, "asymmetry {asym:e}");
    }

    #[test]
    fn hessian_step_refinement_is_second_order() {
        // Richardson self-check: central differences have O(h^2) error, so the
        // h-step result must sit ~4x further from the extrapolated limit than
        // the h/2-step result.
        let m = model();
        let q = Vector2::new(0.1, -0.1);
        let th = Vector6::new(0.1, -0.05, 0.08, 0.01, -0.02, 0.015);
        let lam = Vector6::new(5.0, -2.0, 1.0, 0.3, -0.4, 0.6);
        let h = 1e-3;
        let raw_h = raw_hessian(&m, 1, &q, &th, &lam, h).unwrap();
        let raw_h2 = raw_hessian(&m, 1, &q, &th, &lam, h / 2.0).unwrap();
        let limit = (raw_h2 * 4.0 - raw_h) / 3.0;
        let err_h = (raw_h - limit).amax();
        let err_h2 = (raw_h2 - limit).amax();
        assert!(
            err_h > 2.5 * err_h2,
            "expected ~4x error reduction, got {err_h:e} vs {err_h2:e}"
        );
    }

    #[test]
    fn passive_path_stays_on_circle() {
        let m = model();
        let t = passive_path_target(&m, 1.0);
        assert_relative_eq!(
            (t[0] * t[0] + t[2] * t[2]).sqrt(),
            m.length,
            max_relative = 1e-15
        );
        assert_eq!(t[2], 1.0);
    }

    #[test]
    fn model_validation_names_violations() {
        let mut kb = orthoglide_fixture().to_model().unwrap().k_bar;
        kb[(1, 5)] = -2839.0;
        let err = ParallelogramModel::new(310.0, 69.1, kb).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(2,6)"), "{msg}");
        assert!(matches!(err, Error::Config(_)));
    }
}
