//! Homogeneous transforms and the 6-coordinate pose chart.
//!
//! A pose is t = (p, phi) with p in mm and phi = (phi_x, phi_y, phi_z) in rad,
//! where the rotation factors as R = Rx(phi_x) * Ry(phi_y) * Rz(phi_z). This
//! matches the rotation order of the virtual-spring coordinates, so spring
//! deflections read as pose coordinates to first order.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector6};

use crate::error::{Error, Result};

pub type Transform4 = Matrix4<f64>;
pub type Pose = Vector6<f64>;

/// Guard band around the phi_y = +-pi/2 extraction singularity.
pub const ORIENTATION_GUARD: f64 = 1e-9;

/// Elementary transform tags: translations along and rotations about the frame axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElemKind {
    Tx,
    Ty,
    Tz,
    Rx,
    Ry,
    Rz,
}

/// Standard elementary translation or rotation about the named axis.
pub fn elem_transform(kind: ElemKind, value: f64) -> Transform4 {
    let mut t = Transform4::identity();
    match kind {
        ElemKind::Tx => t[(0, 3)] = value,
        ElemKind::Ty => t[(1, 3)] = value,
        ElemKind::Tz => t[(2, 3)] = value,
        ElemKind::Rx => {
            let (s, c) = value.sin_cos();
            t[(1, 1)] = c;
            t[(1, 2)] = -s;
            t[(2, 1)] = s;
            t[(2, 2)] = c;
        }
        ElemKind::Ry => {
            let (s, c) = value.sin_cos();
            t[(0, 0)] = c;
            t[(0, 2)] = s;
            t[(2, 0)] = -s;
            t[(2, 2)] = c;
        }
        ElemKind::Rz => {
            let (s, c) = value.sin_cos();
            t[(0, 0)] = c;
            t[(0, 1)] = -s;
            t[(1, 0)] = s;
            t[(1, 1)] = c;
        }
    }
    t
}

/// Derivative of the elementary transform with respect to its coordinate.
pub(crate) fn elem_derivative(kind: ElemKind, value: f64) -> Matrix4<f64> {
    let mut d = Matrix4::zeros();
    match kind {
        ElemKind::Tx => d[(0, 3)] = 1.0,
        ElemKind::Ty => d[(1, 3)] = 1.0,
        ElemKind::Tz => d[(2, 3)] = 1.0,
        ElemKind::Rx => {
            let (s, c) = value.sin_cos();
            d[(1, 1)] = -s;
            d[(1, 2)] = -c;
            d[(2, 1)] = c;
            d[(2, 2)] = -s;
        }
        ElemKind::Ry => {
            let (s, c) = value.sin_cos();
            d[(0, 0)] = -s;
            d[(0, 2)] = c;
            d[(2, 0)] = -c;
            d[(2, 2)] = -s;
        }
        ElemKind::Rz => {
            let (s, c) = value.sin_cos();
            d[(0, 0)] = -s;
            d[(0, 1)] = -c;
            d[(1, 0)] = c;
            d[(1, 1)] = -s;
        }
    }
    d
}

/// Left-to-right product of the factor list.
pub fn compose(factors: &[Transform4]) -> Transform4 {
    assert!(!factors.is_empty(), "compose: empty factor list");
    let mut t = factors[0];
    for f in &factors[1..] {
        t *= f;
    }
    t
}

/// Transform with translation p and rotation Rx(phi_x) * Ry(phi_y) * Rz(phi_z).
pub fn transform_from_pose(pose: &Pose) -> Transform4 {
    let mut t = elem_transform(ElemKind::Rx, pose[3])
        * elem_transform(ElemKind::Ry, pose[4])
        * elem_transform(ElemKind::Rz, pose[5]);
    t[(0, 3)] = pose[0];
    t[(1, 3)] = pose[1];
    t[(2, 3)] = pose[2];
    t
}

/// Extract t = (p, phi) from a transform; rejects configurations within
/// [`ORIENTATION_GUARD`] of the phi_y = +-pi/2 singularity.
pub fn pose_from_transform(t: &Transform4) -> Result<Pose> {
    let r13 = t[(0, 2)];
    if r13.abs() >= 1.0 - ORIENTATION_GUARD {
        return Err(Error::OrientationSingular {
            value: r13.abs(),
            guard: ORIENTATION_GUARD,
        });
    }
    let phi_y = r13.clamp(-1.0, 1.0).asin();
    let phi_z = (-t[(0, 1)]).atan2(t[(0, 0)]);
    let phi_x = (-t[(1, 2)]).atan2(t[(2, 2)]);
    Ok(Pose::new(t[(0, 3)], t[(1, 3)], t[(2, 3)], phi_x, phi_y, phi_z))
}

/// Inverse of the map from the phi rate to the angular-velocity vector.
///
/// For R = Rx(a)*Ry(b)*Rz(c), the angular velocity is E(phi) * dphi with
/// E columns [e_x, Rx(a) e_y, Rx(a) Ry(b) e_z]; this returns E^-1.
pub(crate) fn euler_rate_inverse(phi: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let (sa, ca) = phi[0].sin_cos();
    let (sb, cb) = phi[1].sin_cos();
    let e = Matrix3::new(
        1.0, 0.0, sb, //
        0.0, ca, -sa * cb, //
        0.0, sa, ca * cb,
    );
    e.try_inverse().ok_or(Error::OrientationSingular {
        value: sb.abs(),
        guard: ORIENTATION_GUARD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn elementary_rotation_entries() {
        let r = elem_transform(ElemKind::Ry, 0.3);
        assert_relative_eq!(r[(0, 0)], 0.3f64.cos(), max_relative = 1e-15);
        assert_relative_eq!(r[(0, 2)], 0.3f64.sin(), max_relative = 1e-15);
        assert_relative_eq!(r[(2, 0)], -(0.3f64.sin()), max_relative = 1e-15);
        assert_eq!(r[(1, 1)], 1.0);
        assert_eq!(r[(3, 3)], 1.0);
    }

    #[test]
    fn translation_and_rotation_compose() {
        let t = compose(&[
            elem_transform(ElemKind::Tx, 2.0),
            elem_transform(ElemKind::Ry, std::f64::consts::FRAC_PI_2 * 0.5),
            elem_transform(ElemKind::Tz, 1.0),
        ]);
        let c = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(t[(0, 3)], 2.0 + c, max_relative = 1e-14);
        assert_relative_eq!(t[(2, 3)], c, max_relative = 1e-14);
    }

    #[test]
    fn pose_round_trip() {
        let poses = [
            Pose::new(310.0, 0.0, 0.0, 0.0, 0.0, 0.0),
            Pose::new(1.5, -2.0, 3.0, 0.4, -0.2, 0.3),
            Pose::new(-10.0, 5.0, 0.1, -1.2, 1.1, 2.9),
        ];
        for p in &poses {
            let t = transform_from_pose(p);
            let back = pose_from_transform(&t).unwrap();
            assert_relative_eq!(back, *p, epsilon = 1e-10);
            let t2 = transform_from_pose(&back);
            assert_relative_eq!(t2, t, epsilon = 1e-10);
        }
    }

    #[test]
    fn extraction_rejects_gimbal_lock() {
        let t = elem_transform(ElemKind::Ry, std::f64::consts::FRAC_PI_2);
        assert!(matches!(
            pose_from_transform(&t),
            Err(Error::OrientationSingular { .. })
        ));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-7;
        for kind in [
            ElemKind::Tx,
            ElemKind::Ty,
            ElemKind::Tz,
            ElemKind::Rx,
            ElemKind::Ry,
            ElemKind::Rz,
        ] {
            let v = 0.37;
            let fd = (elem_transform(kind, v + h) - elem_transform(kind, v - h)) / (2.0 * h);
            let an = elem_derivative(kind, v);
            assert_relative_eq!(an, fd, epsilon = 1e-9);
        }
    }

    #[test]
    fn euler_rate_inverse_identity_at_zero() {
        let e = euler_rate_inverse(&Vector3::zeros()).unwrap();
        assert_relative_eq!(e, Matrix3::identity(), epsilon = 1e-15);
    }
}
