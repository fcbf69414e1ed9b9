//! Cylindrical/Cartesian conversions for swirl-free axisymmetric fields and
//! the advection-integrand identity that links the two weak formulations.
//!
//! The cylindrical frame is `e_r = (cos θ, sin θ, 0)`,
//! `e_θ = (−sin θ, cos θ, 0)`, `e_z = (0, 0, 1)`. A field is *axisymmetric*
//! when its cylindrical components depend only on `(r, z)` and *swirl-free*
//! when the `e_θ` component vanishes.

use crate::error::{Error, Result};

/// A point in cylindrical coordinates, `r > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CylPoint {
    pub r: f64,
    pub theta: f64,
    pub z: f64,
}

/// A vector attached to a cylindrical point, components in the local frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CylVec {
    pub point: CylPoint,
    pub v_r: f64,
    pub v_theta: f64,
    pub v_z: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CartPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CartVec {
    pub point: CartPoint,
    pub v_x: f64,
    pub v_y: f64,
    pub v_z: f64,
}

impl CylVec {
    /// Swirl-free means the angular component is exactly zero.
    pub fn is_swirl_free(&self) -> bool {
        self.v_theta == 0.0
    }
}

/// Lift a planar `(v_r, v_z)` pair to the swirl-free axisymmetric 3D field
/// `v_r e_r + v_z e_z` at the given point. The result is swirl-free by
/// construction (`v_theta` is the exact zero).
pub fn lift_swirl_free(v_r: f64, v_z: f64, point: CylPoint) -> CylVec {
    CylVec {
        point,
        v_r,
        v_theta: 0.0,
        v_z,
    }
}

fn check_finite(vals: &[f64]) -> Result<()> {
    if vals.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidField("non-finite component".into()))
    }
}

/// Convert a cylindrical vector to Cartesian components:
/// `v_x = v_r cos θ − v_θ sin θ`, `v_y = v_r sin θ + v_θ cos θ`, `v_z` unchanged.
pub fn to_cartesian(v: &CylVec) -> Result<CartVec> {
    check_finite(&[v.point.r, v.point.theta, v.point.z, v.v_r, v.v_theta, v.v_z])?;
    if v.point.r <= 0.0 {
        return Err(Error::InvalidField(
            "attachment point requires r > 0".into(),
        ));
    }
    let (s, c) = v.point.theta.sin_cos();
    Ok(CartVec {
        point: CartPoint {
            x: v.point.r * c,
            y: v.point.r * s,
            z: v.point.z,
        },
        v_x: v.v_r * c - v.v_theta * s,
        v_y: v.v_r * s + v.v_theta * c,
        v_z: v.v_z,
    })
}

/// Inverse conversion; `r = hypot(x, y)` must be positive.
pub fn to_cylindrical(v: &CartVec) -> Result<CylVec> {
    check_finite(&[v.point.x, v.point.y, v.point.z, v.v_x, v.v_y, v.v_z])?;
    let r = v.point.x.hypot(v.point.y);
    if r <= 0.0 {
        return Err(Error::InvalidField("point lies on the axis".into()));
    }
    let theta = v.point.y.atan2(v.point.x);
    let (s, c) = theta.sin_cos();
    Ok(CylVec {
        point: CylPoint {
            r,
            theta,
            z: v.point.z,
        },
        v_r: v.v_x * c + v.v_y * s,
        v_theta: -v.v_x * s + v.v_y * c,
        v_z: v.v_z,
    })
}

/// Cylindrical derivative data of a swirl-free axisymmetric test field
/// `φ = φ_r(r,z) e_r + φ_z(r,z) e_z`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SwirlFreeGrad {
    pub phi_r: f64,
    pub phi_z: f64,
    pub d_r_phi_r: f64,
    pub d_z_phi_r: f64,
    pub d_r_phi_z: f64,
    pub d_z_phi_z: f64,
}

/// Full Cartesian gradient `(∇_x φ)_{ij} = ∂_j φ_i` of the swirl-free
/// axisymmetric field described by `g`, evaluated at angle `theta`,
/// radius `r`. The `φ_r/r` contributions come from differentiating the
/// rotating frame vectors.
fn cartesian_gradient(g: &SwirlFreeGrad, r: f64, theta: f64) -> [[f64; 3]; 3] {
    let (s, c) = theta.sin_cos();
    let pr_over_r = g.phi_r / r;
    [
        [
            c * c * g.d_r_phi_r + s * s * pr_over_r,
            s * c * g.d_r_phi_r - s * c * pr_over_r,
            c * g.d_z_phi_r,
        ],
        [
            s * c * g.d_r_phi_r - s * c * pr_over_r,
            s * s * g.d_r_phi_r + c * c * pr_over_r,
            s * g.d_z_phi_r,
        ],
        [c * g.d_r_phi_z, s * g.d_r_phi_z, g.d_z_phi_z],
    ]
}

/// Evaluate both sides of the advection-integrand identity
///
/// `⟨v ⊗ v, ∇_x φ⟩ = v_r² ∂_r φ_r + v_r v_z ∂_z φ_r + v_r v_z ∂_r φ_z + v_z² ∂_z φ_z`
///
/// for a swirl-free `v` and a swirl-free axisymmetric test field. The left
/// side goes through the Cartesian conversion, the right side is the
/// four-term cylindrical form. The two agree to `1e-12 · (1 + |lhs|)`.
pub fn advection_integrand_identity(v: &CylVec, grad: &SwirlFreeGrad) -> Result<(f64, f64)> {
    if v.v_theta != 0.0 {
        return Err(Error::NotSwirlFree);
    }
    let cart = to_cartesian(v)?;
    let gm = cartesian_gradient(grad, v.point.r, v.point.theta);
    let vv = [cart.v_x, cart.v_y, cart.v_z];
    let mut lhs = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            lhs += vv[i] * vv[j] * gm[i][j];
        }
    }
    let rhs = v.v_r * v.v_r * grad.d_r_phi_r
        + v.v_r * v.v_z * grad.d_z_phi_r
        + v.v_r * v.v_z * grad.d_r_phi_z
        + v.v_z * v.v_z * grad.d_z_phi_z;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn at(r: f64, theta: f64) -> CylPoint {
        CylPoint { r, theta, z: 0.3 }
    }

    #[test]
    fn basis_alignment_at_theta_zero() {
        let v = CylVec {
            point: at(1.0, 0.0),
            v_r: 1.0,
            v_theta: 0.0,
            v_z: 0.0,
        };
        let c = to_cartesian(&v).unwrap();
        assert_eq!((c.v_x, c.v_y, c.v_z), (1.0, 0.0, 0.0));
    }

    #[test]
    fn e_theta_at_quarter_turn() {
        let v = CylVec {
            point: at(1.0, PI / 2.0),
            v_r: 0.0,
            v_theta: 1.0,
            v_z: 0.0,
        };
        let c = to_cartesian(&v).unwrap();
        assert!((c.v_x + 1.0).abs() < 1e-15);
        assert!(c.v_y.abs() < 1e-15);
        assert_eq!(c.v_z, 0.0);
    }

    #[test]
    fn formula_instantiation() {
        let v = CylVec {
            point: at(0.8, 1.1),
            v_r: 0.3,
            v_theta: 0.0,
            v_z: 0.7,
        };
        let c = to_cartesian(&v).unwrap();
        assert!((c.v_x - 0.3 * 1.1f64.cos()).abs() < 1e-15);
        assert!((c.v_y - 0.3 * 1.1f64.sin()).abs() < 1e-15);
        assert_eq!(c.v_z, 0.7);
    }

    #[test]
    fn non_finite_input_rejected() {
        let v = CylVec {
            point: at(1.0, 0.0),
            v_r: f64::NAN,
            v_theta: 0.0,
            v_z: 0.0,
        };
        assert!(matches!(to_cartesian(&v), Err(Error::InvalidField(_))));
    }

    #[test]
    fn round_trip_relative_error_below_1e14() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100_000 {
            let v = CylVec {
                point: CylPoint {
                    r: rng.gen_range(0.5..2.0),
                    theta: rng.gen_range(0.0..2.0 * PI),
                    z: rng.gen_range(-1.0..1.0),
                },
                v_r: rng.gen_range(-1.0..1.0),
                v_theta: rng.gen_range(-1.0..1.0),
                v_z: rng.gen_range(-1.0..1.0),
            };
            let back = to_cylindrical(&to_cartesian(&v).unwrap()).unwrap();
            let scale = 1.0 + v.v_r.abs() + v.v_theta.abs() + v.v_z.abs();
            assert!((back.v_r - v.v_r).abs() < 1e-14 * scale);
            assert!((back.v_theta - v.v_theta).abs() < 1e-14 * scale);
            assert!((back.v_z - v.v_z).abs() < 1e-14 * scale);
            assert!((back.point.r - v.point.r).abs() < 1e-14 * v.point.r);
        }
    }

    #[test]
    fn identity_zero_field() {
        let v = lift_swirl_free(0.0, 0.0, at(1.0, 0.4));
        let (lhs, rhs) = advection_integrand_identity(&v, &SwirlFreeGrad::default()).unwrap();
        assert_eq!(lhs, 0.0);
        assert_eq!(rhs, 0.0);
    }

    #[test]
    fn identity_single_term() {
        let v = lift_swirl_free(1.0, 0.0, at(1.3, 0.9));
        let grad = SwirlFreeGrad {
            d_r_phi_r: 1.0,
            ..Default::default()
        };
        let (lhs, rhs) = advection_integrand_identity(&v, &grad).unwrap();
        assert!((lhs - 1.0).abs() < 1e-14);
        assert_eq!(rhs, 1.0);
    }

    #[test]
    fn identity_random_swirl_free_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let v = lift_swirl_free(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                CylPoint {
                    r: rng.gen_range(0.5..2.0),
                    theta: rng.gen_range(0.0..2.0 * PI),
                    z: rng.gen_range(-1.0..1.0),
                },
            );
            let grad = SwirlFreeGrad {
                phi_r: rng.gen_range(-1.0..1.0),
                phi_z: rng.gen_range(-1.0..1.0),
                d_r_phi_r: rng.gen_range(-1.0..1.0),
                d_z_phi_r: rng.gen_range(-1.0..1.0),
                d_r_phi_z: rng.gen_range(-1.0..1.0),
                d_z_phi_z: rng.gen_range(-1.0..1.0),
            };
            let (lhs, rhs) = advection_integrand_identity(&v, &grad).unwrap();
            assert!(
                (lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()),
                "identity violated: lhs={lhs} rhs={rhs}"
            );
        }
    }

    #[test]
    fn swirl_rejected() {
        let v = CylVec {
            point: at(1.0, 0.2),
            v_r: 0.1,
            v_theta: 0.5,
            v_z: 0.0,
        };
        assert!(matches!(
            advection_integrand_identity(&v, &SwirlFreeGrad::default()),
            Err(Error::NotSwirlFree)
        ));
    }

    #[test]
    fn lifted_field_is_swirl_free_and_axisymmetric() {
        // Cylindrical components of the lifted field must not depend on theta;
        // sample 16 equispaced angles and compare exactly.
        let (v_r, v_z) = (0.4, -0.9);
        let reference = lift_swirl_free(v_r, v_z, at(1.2, 0.0));
        for k in 0..16 {
            let theta = 2.0 * PI * k as f64 / 16.0;
            let lifted = lift_swirl_free(v_r, v_z, at(1.2, theta));
            assert!(lifted.is_swirl_free());
            assert_eq!(lifted.v_r, reference.v_r);
            assert_eq!(lifted.v_z, reference.v_z);
        }
    }
}
