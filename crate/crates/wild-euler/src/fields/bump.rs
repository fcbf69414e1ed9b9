//! Compactly supported smooth test functions for weak-form evaluation.

use super::grid::Domain;
use crate::error::{Error, Result};

/// Which component of a test field the bump occupies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestKind {
    /// Scalar test function.
    Scalar,
    /// Vector test `(b, 0)`.
    VecR,
    /// Vector test `(0, b)`.
    VecZ,
}

/// Tensor-product bump `ψ((r−r₀)/a_r) ψ((z−z₀)/a_z) ψ((t−t₀)/a_t)` built from
/// the standard profile `ψ(s) = exp(−1/(1−s²))` on `|s| < 1`, zero outside.
/// The spatial support lies strictly inside the open strip; the time support
/// may touch `t = 0` (that is how the initial-data terms of the weak forms
/// are exercised) but must end before `t_end`. The `z` offset is understood
/// periodically.
#[derive(Clone, Copy, Debug)]
pub struct BumpTestFn {
    pub center: (f64, f64, f64),
    pub radii: (f64, f64, f64),
    pub kind: TestKind,
    z_period: f64,
}

/// Value and derivative of the 1D profile at `s`.
#[inline]
fn profile(s: f64) -> (f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let g = 1.0 - s * s;
    let v = (-1.0 / g).exp();
    (v, v * (-2.0 * s) / (g * g))
}

/// Scalar value of a test function together with its three partials.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ScalarTestEval {
    pub val: f64,
    pub dr: f64,
    pub dz: f64,
    pub dt: f64,
}

impl BumpTestFn {
    pub fn new(
        domain: &Domain,
        center: (f64, f64, f64),
        radii: (f64, f64, f64),
        kind: TestKind,
    ) -> Result<Self> {
        let (r0, _z0, t0) = center;
        let (ar, az, at) = radii;
        if !(ar > 0.0 && az > 0.0 && at > 0.0) {
            return Err(Error::InvalidField("bump radii must be positive".into()));
        }
        if r0 - ar <= domain.delta || r0 + ar >= domain.r_outer {
            return Err(Error::InvalidField(
                "bump support must stay strictly inside (delta, R)".into(),
            ));
        }
        if az >= 0.5 * domain.z_period {
            return Err(Error::InvalidField(
                "bump z radius must stay below half the period".into(),
            ));
        }
        if t0 < 0.0 || t0 + at >= domain.t_end {
            return Err(Error::InvalidField(
                "bump time support must end before t_end".into(),
            ));
        }
        Ok(BumpTestFn {
            center,
            radii,
            kind,
            z_period: domain.z_period,
        })
    }

    /// Constructor without the support checks, for quadrature properties that
    /// deliberately place supports away from the grid.
    pub fn new_unchecked(
        z_period: f64,
        center: (f64, f64, f64),
        radii: (f64, f64, f64),
        kind: TestKind,
    ) -> Self {
        BumpTestFn {
            center,
            radii,
            kind,
            z_period,
        }
    }

    /// Whether the bump is nonzero somewhere on the initial slice `t = 0`.
    pub fn touches_initial_slice(&self) -> bool {
        self.center.2 - self.radii.2 < 0.0
    }

    #[inline]
    fn wrap_z(&self, dz: f64) -> f64 {
        dz - self.z_period * (dz / self.z_period).round()
    }

    /// Evaluate the scalar profile and its partials at `(r, z, t)`.
    #[inline]
    pub fn eval(&self, r: f64, z: f64, t: f64) -> ScalarTestEval {
        let sr = (r - self.center.0) / self.radii.0;
        let sz = self.wrap_z(z - self.center.1) / self.radii.1;
        let st = (t - self.center.2) / self.radii.2;
        let (pr, dpr) = profile(sr);
        if pr == 0.0 {
            return ScalarTestEval::default();
        }
        let (pz, dpz) = profile(sz);
        if pz == 0.0 {
            return ScalarTestEval::default();
        }
        let (pt, dpt) = profile(st);
        if pt == 0.0 {
            return ScalarTestEval::default();
        }
        ScalarTestEval {
            val: pr * pz * pt,
            dr: dpr / self.radii.0 * pz * pt,
            dz: pr * dpz / self.radii.1 * pt,
            dt: pr * pz * dpt / self.radii.2,
        }
    }
}

/// A finite linear combination of bumps of the same kind, evaluated
/// pointwise. Used to state linearity of the weak residual in the test
/// function.
#[derive(Clone, Debug)]
pub struct TestCombination {
    pub terms: Vec<(f64, BumpTestFn)>,
}

impl TestCombination {
    pub fn new(terms: Vec<(f64, BumpTestFn)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidField("empty test combination".into()));
        }
        let kind = terms[0].1.kind;
        if terms.iter().any(|(_, b)| b.kind != kind) {
            return Err(Error::InvalidField(
                "all terms of a combination must share the test kind".into(),
            ));
        }
        Ok(TestCombination { terms })
    }

    pub fn kind(&self) -> TestKind {
        self.terms[0].1.kind
    }

    pub fn touches_initial_slice(&self) -> bool {
        self.terms.iter().any(|(_, b)| b.touches_initial_slice())
    }

    #[inline]
    pub fn eval(&self, r: f64, z: f64, t: f64) -> ScalarTestEval {
        let mut acc = ScalarTestEval::default();
        for (c, b) in &self.terms {
            let e = b.eval(r, z, t);
            acc.val += c * e.val;
            acc.dr += c * e.dr;
            acc.dz += c * e.dz;
            acc.dt += c * e.dt;
        }
        acc
    }
}

/// Deterministic pseudo-random bump set. Kinds are cycled from `kinds`;
/// roughly a third of the bumps touch the initial slice so that the
/// initial-data terms of the weak forms are exercised.
pub fn sample_bumps(
    domain: &Domain,
    n: usize,
    seed: u64,
    kinds: &[TestKind],
) -> Result<Vec<BumpTestFn>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let ext = domain.r_extent();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let ar = rng.gen_range(0.08..0.14) * ext;
        let az = rng.gen_range(0.08..0.16) * domain.z_period;
        let at = rng.gen_range(0.08..0.14) * domain.t_end;
        let margin = 1e-3 * ext;
        let r0 = rng.gen_range(domain.delta + ar + margin..domain.r_outer - ar - margin);
        let z0 = rng.gen_range(0.0..domain.z_period);
        let t0 = if i % 3 == 0 {
            // touch the initial slice
            rng.gen_range(0.0..0.8 * at)
        } else {
            rng.gen_range(at + 1e-3 * domain.t_end..domain.t_end - at - 1e-3 * domain.t_end)
        };
        out.push(BumpTestFn::new(
            domain,
            (r0, z0, t0),
            (ar, az, at),
            kinds[i % kinds.len()],
        )?);
    }
    Ok(out)
}
