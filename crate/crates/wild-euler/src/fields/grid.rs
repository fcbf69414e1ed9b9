//! Uniform grids over the strip `Ω = (δ, R) × 𝕋` and a time interval,
//! with second-order finite differences and trapezoid/midpoint quadrature.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// The computational domain: radial strip `(δ, R)`, `z`-period and final time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub delta: f64,
    pub r_outer: f64,
    pub z_period: f64,
    pub t_end: f64,
}

impl Domain {
    pub fn new(delta: f64, r_outer: f64, z_period: f64, t_end: f64) -> Result<Self> {
        let d = Domain {
            delta,
            r_outer,
            z_period,
            t_end,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.delta > 0.0
            && self.r_outer > self.delta
            && self.z_period > 0.0
            && self.t_end > 0.0
            && [self.delta, self.r_outer, self.z_period, self.t_end]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDomain(format!(
                "require 0 < delta < R, positive z_period and t_end; got delta={}, R={}, z_period={}, t_end={}",
                self.delta, self.r_outer, self.z_period, self.t_end
            )))
        }
    }

    pub fn r_extent(&self) -> f64 {
        self.r_outer - self.delta
    }
}

/// Tensor rank of the samples stored in a [`GridField`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rank {
    Scalar,
    Vec2,
    /// Traceless symmetric 2×2; components stored as `(u, w)` for
    /// `[[u, w], [w, -u]]`.
    Sym2Traceless,
}

impl Rank {
    pub fn ncomp(self) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vec2 | Rank::Sym2Traceless => 2,
        }
    }

    pub fn component_names(self) -> &'static [&'static str] {
        match self {
            Rank::Scalar => &["value"],
            Rank::Vec2 => &["v_r", "v_z"],
            Rank::Sym2Traceless => &["u_rr", "u_rz"],
        }
    }
}

/// Differentiation / grid axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    R,
    Z,
    T,
}

/// Quadrature weight selector for radial integrals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weight {
    One,
    R,
}

/// Samples on the uniform grid. The `r` axis carries `nr + 1` nodes including
/// both endpoints `δ` and `R`; the periodic `z` axis carries `nz` nodes; the
/// `t` axis carries `nt + 1` nodes including `0` and `t_end`. Storage is
/// row-major with `t` outermost, then `z`, then `r`, then the component.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub domain: Domain,
    pub nr: usize,
    pub nz: usize,
    pub nt: usize,
    pub rank: Rank,
    data: Vec<f64>,
}

impl GridField {
    pub fn zeros(domain: Domain, nr: usize, nz: usize, nt: usize, rank: Rank) -> Result<Self> {
        domain.validate()?;
        if nr == 0 || nz == 0 || nt == 0 {
            return Err(Error::GridTooCoarse);
        }
        let len = (nr + 1) * nz * (nt + 1) * rank.ncomp();
        Ok(GridField {
            domain,
            nr,
            nz,
            nt,
            rank,
            data: vec![0.0; len],
        })
    }

    pub fn from_fn<F>(
        domain: Domain,
        nr: usize,
        nz: usize,
        nt: usize,
        rank: Rank,
        mut f: F,
    ) -> Result<Self>
    where
        F: FnMut(f64, f64, f64) -> [f64; 2],
    {
        let mut g = GridField::zeros(domain, nr, nz, nt, rank)?;
        let ncomp = rank.ncomp();
        for it in 0..=nt {
            let t = g.t_at(it);
            for iz in 0..nz {
                let z = g.z_at(iz);
                for ir in 0..=nr {
                    let vals = f(g.r_at(ir), z, t);
                    for c in 0..ncomp {
                        if !vals[c].is_finite() {
                            return Err(Error::InvalidField(format!(
                                "non-finite sample at (r={}, z={}, t={})",
                                g.r_at(ir),
                                z,
                                t
                            )));
                        }
                        let idx = g.index(ir, iz, it, c);
                        g.data[idx] = vals[c];
                    }
                }
            }
        }
        Ok(g)
    }

    pub fn scalar_from_fn<F>(domain: Domain, nr: usize, nz: usize, nt: usize, f: F) -> Result<Self>
    where
        F: Fn(f64, f64, f64) -> f64,
    {
        GridField::from_fn(domain, nr, nz, nt, Rank::Scalar, |r, z, t| {
            [f(r, z, t), 0.0]
        })
    }

    pub fn vec2_from_fn<F>(domain: Domain, nr: usize, nz: usize, nt: usize, f: F) -> Result<Self>
    where
        F: Fn(f64, f64, f64) -> [f64; 2],
    {
        GridField::from_fn(domain, nr, nz, nt, Rank::Vec2, f)
    }

    pub fn sym2_from_fn<F>(domain: Domain, nr: usize, nz: usize, nt: usize, f: F) -> Result<Self>
    where
        F: Fn(f64, f64, f64) -> [f64; 2],
    {
        GridField::from_fn(domain, nr, nz, nt, Rank::Sym2Traceless, f)
    }

    pub fn h_r(&self) -> f64 {
        self.domain.r_extent() / self.nr as f64
    }

    pub fn h_z(&self) -> f64 {
        self.domain.z_period / self.nz as f64
    }

    pub fn h_t(&self) -> f64 {
        self.domain.t_end / self.nt as f64
    }

    pub fn r_at(&self, ir: usize) -> f64 {
        self.domain.delta + ir as f64 * self.h_r()
    }

    pub fn z_at(&self, iz: usize) -> f64 {
        iz as f64 * self.h_z()
    }

    pub fn t_at(&self, it: usize) -> f64 {
        it as f64 * self.h_t()
    }

    #[inline]
    fn index(&self, ir: usize, iz: usize, it: usize, c: usize) -> usize {
        ((it * self.nz + iz) * (self.nr + 1) + ir) * self.rank.ncomp() + c
    }

    #[inline]
    pub fn get(&self, ir: usize, iz: usize, it: usize, c: usize) -> f64 {
        self.data[self.index(ir, iz, it, c)]
    }

    #[inline]
    pub fn set(&mut self, ir: usize, iz: usize, it: usize, c: usize, v: f64) {
        let idx = self.index(ir, iz, it, c);
        self.data[idx] = v;
    }

    #[inline]
    pub fn add(&mut self, ir: usize, iz: usize, it: usize, c: usize, v: f64) {
        let idx = self.index(ir, iz, it, c);
        self.data[idx] += v;
    }

    pub fn same_grid(&self, other: &GridField) -> bool {
        self.domain == other.domain
            && self.nr == other.nr
            && self.nz == other.nz
            && self.nt == other.nt
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Trapezoid weight along `r` for node `ir`, without the `h_r` factor.
    #[inline]
    pub fn w_r(&self, ir: usize) -> f64 {
        if ir == 0 || ir == self.nr {
            0.5
        } else {
            1.0
        }
    }

    /// Trapezoid weight along `t` for node `it`, without the `h_t` factor.
    #[inline]
    pub fn w_t(&self, it: usize) -> f64 {
        if it == 0 || it == self.nt {
            0.5
        } else {
            1.0
        }
    }

    /// Second-order finite difference along `axis`: centered stencils in the
    /// interior and everywhere in the periodic `z` direction, one-sided
    /// second-order stencils at the `r` and `t` boundaries.
    pub fn fd_derivative(&self, axis: Axis) -> Result<GridField> {
        let ok = match axis {
            Axis::R => self.nr + 1 >= 4,
            Axis::Z => self.nz >= 4,
            Axis::T => self.nt + 1 >= 4,
        };
        if !ok {
            return Err(Error::GridTooCoarse);
        }
        let mut out = GridField::zeros(self.domain, self.nr, self.nz, self.nt, self.rank)?;
        let ncomp = self.rank.ncomp();
        let (h, n) = match axis {
            Axis::R => (self.h_r(), self.nr),
            Axis::Z => (self.h_z(), self.nz),
            Axis::T => (self.h_t(), self.nt),
        };
        let inv2h = 1.0 / (2.0 * h);
        for it in 0..=self.nt {
            for iz in 0..self.nz {
                for ir in 0..=self.nr {
                    for c in 0..ncomp {
                        let d = match axis {
                            Axis::R => {
                                one_sided_or_centered(|i| self.get(i, iz, it, c), ir, n, inv2h)
                            }
                            Axis::T => {
                                one_sided_or_centered(|i| self.get(ir, iz, i, c), it, n, inv2h)
                            }
                            Axis::Z => {
                                let jm = (iz + self.nz - 1) % self.nz;
                                let jp = (iz + 1) % self.nz;
                                (self.get(ir, jp, it, c) - self.get(ir, jm, it, c)) * inv2h
                            }
                        };
                        out.set(ir, iz, it, c, d);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Spatial quadrature at a fixed time node: trapezoid along `r`, node sum
    /// along the periodic `z` direction, optionally weighted by `r`.
    pub fn integrate(&self, it: usize, weight: Weight) -> Result<f64> {
        if self.rank != Rank::Scalar {
            return Err(Error::InvalidField(
                "integrate expects a scalar field".into(),
            ));
        }
        let mut total = 0.0;
        for iz in 0..self.nz {
            for ir in 0..=self.nr {
                let w = match weight {
                    Weight::One => self.w_r(ir),
                    Weight::R => self.w_r(ir) * self.r_at(ir),
                };
                total += w * self.get(ir, iz, it, 0);
            }
        }
        Ok(total * self.h_r() * self.h_z())
    }

    /// Space-time quadrature: trapezoid along `r` and `t`, node sum along `z`.
    pub fn integrate_spacetime(&self, weight: Weight) -> Result<f64> {
        let mut total = 0.0;
        for it in 0..=self.nt {
            total += self.w_t(it) * self.integrate(it, weight)?;
        }
        Ok(total * self.h_t())
    }

    /// CSV dump: header `r,z,t,<components>`, rows in storage order
    /// (`t` outer, `z` middle, `r` inner), 17 significant digits.
    pub fn dump_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        write!(out, "r,z,t")?;
        for name in self.rank.component_names() {
            write!(out, ",{name}")?;
        }
        writeln!(out)?;
        let ncomp = self.rank.ncomp();
        for it in 0..=self.nt {
            for iz in 0..self.nz {
                for ir in 0..=self.nr {
                    write!(
                        out,
                        "{:.16e},{:.16e},{:.16e}",
                        self.r_at(ir),
                        self.z_at(iz),
                        self.t_at(it)
                    )?;
                    for c in 0..ncomp {
                        write!(out, ",{:.16e}", self.get(ir, iz, it, c))?;
                    }
                    writeln!(out)?;
                }
            }
        }
        Ok(())
    }
}

fn one_sided_or_centered<F: Fn(usize) -> f64>(f: F, i: usize, n: usize, inv2h: f64) -> f64 {
    if i == 0 {
        (-3.0 * f(0) + 4.0 * f(1) - f(2)) * inv2h
    } else if i == n {
        (3.0 * f(n) - 4.0 * f(n - 1) + f(n - 2)) * inv2h
    } else {
        (f(i + 1) - f(i - 1)) * inv2h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn dom() -> Domain {
        Domain::new(0.5, 2.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn domain_validation() {
        assert!(Domain::new(0.5, 0.5, 1.0, 1.0).is_err());
        assert!(Domain::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(Domain::new(0.5, 2.0, 0.0, 1.0).is_err());
        assert!(Domain::new(0.5, 2.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = GridField::scalar_from_fn(dom(), 8, 8, 4, |_, _, _| 3.7).unwrap();
        for axis in [Axis::R, Axis::Z, Axis::T] {
            let d = g.fd_derivative(axis).unwrap();
            // centered stencils cancel exactly; the one-sided boundary
            // stencils leave a rounding-level remainder
            assert!(d.max_abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_exact_on_linear() {
        let g = GridField::scalar_from_fn(dom(), 12, 8, 4, |r, _, _| r).unwrap();
        let d = g.fd_derivative(Axis::R).unwrap();
        for it in 0..=4 {
            for iz in 0..8 {
                for ir in 0..=12 {
                    assert!((d.get(ir, iz, it, 0) - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn periodic_derivative_second_order() {
        let err_for = |nz: usize| -> f64 {
            let g =
                GridField::scalar_from_fn(dom(), 4, nz, 2, |_, z, _| (2.0 * PI * z).sin()).unwrap();
            let d = g.fd_derivative(Axis::Z).unwrap();
            let mut worst = 0.0f64;
            for iz in 0..nz {
                let z = g.z_at(iz);
                let exact = 2.0 * PI * (2.0 * PI * z).cos();
                worst = worst.max((d.get(2, iz, 1, 0) - exact).abs());
            }
            worst
        };
        let e64 = err_for(64);
        let e128 = err_for(128);
        let order = (e64 / e128).log2();
        assert!(
            (order - 2.0).abs() < 0.1,
            "measured order {order}, errors {e64} {e128}"
        );
    }

    #[test]
    fn grid_too_coarse_rejected() {
        let g = GridField::scalar_from_fn(dom(), 2, 8, 4, |r, _, _| r).unwrap();
        assert!(matches!(
            g.fd_derivative(Axis::R),
            Err(Error::GridTooCoarse)
        ));
    }

    #[test]
    fn integrate_area_and_moment() {
        let g = GridField::scalar_from_fn(dom(), 32, 16, 2, |_, _, _| 1.0).unwrap();
        assert!((g.integrate(0, Weight::One).unwrap() - 1.5).abs() < 1e-13);
        assert!((g.integrate(0, Weight::R).unwrap() - 1.875).abs() < 1e-13);
    }

    #[test]
    fn integrate_separable_product() {
        // ∫ r sin²(2πz) over (δ,R)×T = (R²−δ²)/4; node sums in z are exact
        // for this integrand, trapezoid in r is exact for linear ones.
        let g =
            GridField::scalar_from_fn(dom(), 64, 32, 2, |r, z, _| r * (2.0 * PI * z).sin().powi(2))
                .unwrap();
        let got = g.integrate(0, Weight::One).unwrap();
        let h = g.h_r();
        assert!(
            (got - 0.9375).abs() < h * h,
            "got {got}, want 0.9375 within O(h^2)"
        );
    }

    #[test]
    fn refinement_quarters_fd_error() {
        let err_for = |nr: usize| -> f64 {
            let g = GridField::scalar_from_fn(dom(), nr, 4, 2, |r, _, _| (3.0 * r).sin()).unwrap();
            let d = g.fd_derivative(Axis::R).unwrap();
            let mut worst = 0.0f64;
            for ir in 0..=nr {
                let exact = 3.0 * (3.0 * g.r_at(ir)).cos();
                worst = worst.max((d.get(ir, 1, 1, 0) - exact).abs());
            }
            worst
        };
        let ratio = err_for(64) / err_for(128);
        assert!(
            (3.0..5.0).contains(&ratio),
            "halving h should divide the error by 4±25%, got {ratio}"
        );
    }

    #[test]
    fn csv_dump_has_header_and_17_digits() {
        let g = GridField::vec2_from_fn(dom(), 2, 2, 1, |r, _, _| [r, -r]).unwrap();
        let mut buf = Vec::new();
        g.dump_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "r,z,t,v_r,v_z");
        let first = lines.next().unwrap();
        assert!(first.starts_with("5.0000000000000000e-1,"), "{first}");
        assert_eq!(text.lines().count() - 1, 3 * 2 * 2);
    }
}
