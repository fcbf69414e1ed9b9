//! Scenario configuration: a single JSON document with embedded defaults,
//! validated against the owning modules' invariants before any run.

use crate::breaking::FanParams;
use crate::constraint::DensityPressure;
use crate::error::{Error, Result};
use crate::fields::Domain;
use crate::subsolution::ChiTilde;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nr: usize,
    pub nz: usize,
    pub nt: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CiConfig {
    pub steps: usize,
    pub frequency: u32,
}

/// Tolerances pinned against the quadrature floors of the default grid; see
/// the module documentation of `subsolution` and `admissibility` for the
/// calibration.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub identity_tol: f64,
    pub momentum_weak_tol: f64,
    pub continuity_weak_tol: f64,
    pub agreement_tol: f64,
    pub energy_identity_coeff: f64,
    pub ci_weak_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity_tol: 1e-12,
            momentum_weak_tol: 2.5e-4,
            continuity_weak_tol: 5e-4,
            agreement_tol: 1e-10,
            energy_identity_coeff: 5.0,
            ci_weak_tol: 5e-4,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    pub domain: Domain,
    pub gamma: f64,
    pub chi_tilde: ChiTilde,
    pub chi0: f64,
    pub ode_dt: f64,
    pub fan: Option<FanParams>,
    pub grid: GridConfig,
    pub ci: CiConfig,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            schema: SCHEMA_VERSION,
            name: "default".into(),
            domain: Domain {
                delta: 0.5,
                r_outer: 2.0,
                z_period: 1.0,
                t_end: 1.0,
            },
            gamma: 2.0,
            chi_tilde: ChiTilde::Constant { value: 1.0 },
            chi0: 16.0,
            ode_dt: 1e-4,
            fan: Some(FanParams {
                r0: 1.0,
                lambda: 0.1,
                eps: 0.1,
            }),
            grid: GridConfig {
                nr: 128,
                nz: 128,
                nt: 64,
            },
            ci: CiConfig {
                steps: 20,
                frequency: 64,
            },
            seed: 7,
            tolerances: Tolerances::default(),
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario> {
        let sc: Scenario =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported schema {}, expected {SCHEMA_VERSION}",
                self.schema
            )));
        }
        self.domain.validate()?;
        DensityPressure::new(self.gamma)?;
        self.chi_tilde
            .validate(self.domain.t_end, self.grid.nt.max(2))?;
        if !(self.chi0 > 0.0) {
            return Err(Error::InvalidConfig("chi0 must be positive".into()));
        }
        if !(self.ode_dt > 0.0 && self.ode_dt <= self.domain.t_end) {
            return Err(Error::InvalidConfig("ode_dt must lie in (0, t_end]".into()));
        }
        if self.grid.nr < 4 || self.grid.nz < 4 || self.grid.nt < 4 {
            return Err(Error::InvalidConfig(
                "grid needs at least 4 cells per axis".into(),
            ));
        }
        if let Some(fan) = &self.fan {
            fan.validate(&self.domain)?;
            // the t = 0 jump datum must not sit on a radial node
            let h_r = self.domain.r_extent() / self.grid.nr as f64;
            let steps = (fan.r0 - self.domain.delta) / h_r;
            if (steps - steps.round()).abs() < 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "a radial grid node coincides with the fan center r0 = {}; adjust nr or r0",
                    fan.r0
                )));
            }
        }
        if self.ci.steps == 0 {
            return Err(Error::InvalidConfig("ci.steps must be positive".into()));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("identity_tol", t.identity_tol),
            ("momentum_weak_tol", t.momentum_weak_tol),
            ("continuity_weak_tol", t.continuity_weak_tol),
            ("agreement_tol", t.agreement_tol),
            ("energy_identity_coeff", t.energy_identity_coeff),
            ("ci_weak_tol", t.ci_weak_tol),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn dp(&self) -> DensityPressure {
        DensityPressure { gamma: self.gamma }
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_json() {
        let sc = Scenario::default();
        let text = sc.to_pretty_json();
        let back = Scenario::from_json(&text).unwrap();
        assert_eq!(back, sc);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v: serde_json::Value =
            serde_json::from_str(&Scenario::default().to_pretty_json()).unwrap();
        v["surprise"] = serde_json::json!(1);
        assert!(matches!(
            Scenario::from_json(&v.to_string()),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut sc = Scenario::default();
        sc.gamma = 1.0;
        assert!(sc.validate().is_err());
        let mut sc = Scenario::default();
        sc.domain.delta = 0.0;
        assert!(sc.validate().is_err());
        let mut sc = Scenario::default();
        sc.fan = Some(FanParams {
            r0: 1.0,
            lambda: 0.9,
            eps: 0.1,
        });
        assert!(sc.validate().is_err());
    }
}
