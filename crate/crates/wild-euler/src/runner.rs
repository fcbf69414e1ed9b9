//! Scenario runners behind the CLI subcommands. Runners are pure: they take
//! a scenario and return reports, curves, and ready-to-write artifact
//! bodies; file IO stays in the binary.

use crate::admissibility::{
    equivalence_check, feasibility_window, integrate_chi, pointwise_energy_condition, ChiProfile,
    EquivalenceOpts, FeasibilityWindow,
};
use crate::breaking::{build_breaking_subsolution, verify_breaking, BreakingCurves};
use crate::coords::{
    advection_integrand_identity, lift_swirl_free, to_cartesian, to_cylindrical, CylPoint, CylVec,
    SwirlFreeGrad,
};
use crate::error::{Error, Result};
use crate::fields::Weight;
use crate::laminate::{max_discrete_divergence, run_iteration, IterationTrace, LaminateConfig};
use crate::plot::LinePlot;
use crate::report::VerificationReport;
use crate::scenario::Scenario;
use crate::subsolution::{
    build_explicit_subsolution, chi_threshold, target_state, validate_subsolution,
    SubsolutionState, ValidateOpts,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Coordinate-identity suite: the advection integrand identity on random
/// swirl-free samples and the cylindrical/Cartesian round trip.
pub fn run_check_identity(sc: &Scenario) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("coordinate-identities");
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let dom = sc.domain;
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let v = lift_swirl_free(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            CylPoint {
                r: rng.gen_range(dom.delta..dom.r_outer),
                theta: rng.gen_range(0.0..2.0 * PI),
                z: rng.gen_range(0.0..dom.z_period),
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
        let (lhs, rhs) = advection_integrand_identity(&v, &grad)?;
        worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
    }
    report.push(
        "advection-integrand-identity",
        "advection-identity",
        worst,
        sc.tolerances.identity_tol,
        worst <= sc.tolerances.identity_tol,
    );

    let mut worst_rt = 0.0f64;
    for _ in 0..100_000 {
        let v = CylVec {
            point: CylPoint {
                r: rng.gen_range(dom.delta..dom.r_outer),
                theta: rng.gen_range(0.0..2.0 * PI),
                z: rng.gen_range(0.0..dom.z_period),
            },
            v_r: rng.gen_range(-1.0..1.0),
            v_theta: rng.gen_range(-1.0..1.0),
            v_z: rng.gen_range(-1.0..1.0),
        };
        let back = to_cylindrical(&to_cartesian(&v)?)?;
        let scale = 1.0 + v.v_r.abs() + v.v_theta.abs() + v.v_z.abs();
        worst_rt = worst_rt.max((back.v_r - v.v_r).abs() / scale);
        worst_rt = worst_rt.max((back.v_theta - v.v_theta).abs() / scale);
        worst_rt = worst_rt.max((back.v_z - v.v_z).abs() / scale);
    }
    report.push(
        "cylindrical-round-trip",
        "frame-conversion",
        worst_rt,
        1e-14,
        worst_rt <= 1e-14,
    );
    Ok(report)
}

/// Build the explicit subsolution, pick `χ = 1.1 × sup threshold`, validate
/// the full contract and run the weak-formulation equivalence check.
pub struct SubsolutionRun {
    pub report: VerificationReport,
    pub equivalence: VerificationReport,
    pub state: SubsolutionState,
    pub chi: ChiProfile,
    pub chi_value: f64,
    pub threshold_sup: f64,
    pub initial_gap: f64,
}

pub fn run_verify_subsolution(sc: &Scenario) -> Result<SubsolutionRun> {
    let (nr, nz, nt) = (sc.grid.nr, sc.grid.nz, sc.grid.nt);
    let sub = build_explicit_subsolution(sc.domain, nr, nz, nt, sc.dp(), sc.chi_tilde.clone())?;
    let threshold_sup = chi_threshold(&sub).sup_over(sc.domain.t_end, nt);
    let chi_value = 1.1 * threshold_sup;
    let chi = ChiProfile::constant(chi_value, sc.domain.t_end, nt);
    let opts = ValidateOpts {
        n_bumps: 20,
        seed: sc.seed,
        momentum_tol: sc.tolerances.momentum_weak_tol,
        continuity_tol: sc.tolerances.continuity_weak_tol,
    };
    let report = validate_subsolution(&sub, &chi, &opts)?;
    let eq_opts = EquivalenceOpts {
        n_bumps: 50,
        seed: sc.seed,
        agreement_tol: sc.tolerances.agreement_tol,
        energy_tol_coeff: sc.tolerances.energy_identity_coeff,
        weak_tol: sc.tolerances.momentum_weak_tol,
        divergence_tol: sc.tolerances.continuity_weak_tol,
    };
    let equivalence = equivalence_check(&sub, &chi, &eq_opts)?;
    let initial_gap = target_state(&sub, &chi)?.initial_gap;
    Ok(SubsolutionRun {
        report,
        equivalence,
        state: sub,
        chi,
        chi_value,
        threshold_sup,
        initial_gap,
    })
}

/// χ-window search: integrate the admissibility ODE from `chi0` and locate
/// the first crossing with the subsolution threshold curve.
pub struct ChiWindowRun {
    pub report: VerificationReport,
    pub window: FeasibilityWindow,
    pub profile: ChiProfile,
    pub threshold: crate::subsolution::ThresholdCurve,
    pub margin_min: f64,
}

#[derive(Serialize)]
pub struct ChiWindowSummary {
    pub chi0: f64,
    pub gamma: f64,
    pub delta: f64,
    #[serde(rename = "R")]
    pub r_outer: f64,
    #[serde(rename = "T_max")]
    pub t_max: f64,
    pub limiting: crate::admissibility::Limiting,
    pub margin_min: f64,
}

pub fn run_chi_window(sc: &Scenario) -> Result<ChiWindowRun> {
    let (nr, nz, nt) = (sc.grid.nr, sc.grid.nz.min(8), sc.grid.nt);
    let sub = build_explicit_subsolution(sc.domain, nr, nz, nt, sc.dp(), sc.chi_tilde.clone())?;
    let threshold = chi_threshold(&sub);
    let profile = integrate_chi(sc.chi0, &sc.domain, &sc.dp(), sc.ode_dt)?;
    let window = feasibility_window(&profile, |t| threshold.at(t))?;
    let margin_min = window
        .margin
        .iter()
        .filter(|(t, _)| *t <= window.t_max)
        .map(|(_, m)| *m)
        .fold(f64::INFINITY, f64::min);

    let mut report = VerificationReport::new("chi-window");
    report.push(
        "window-positive",
        "admissible-time-window",
        window.t_max,
        0.0,
        window.t_max > 0.0,
    );
    let mut monotone = true;
    for w in profile.values.windows(2) {
        if w[0] > 0.0 && w[1] >= w[0] {
            monotone = false;
        }
    }
    report.push(
        "chi-strictly-decreasing",
        "dissipative-profile",
        if monotone { 1.0 } else { 0.0 },
        1.0,
        monotone,
    );
    if let Some(err) = profile.step_error {
        report.record_norm("ode-step-error-estimate", err);
    }
    let pw = pointwise_energy_condition(&sub, &profile, Some(window.t_max))?;
    for c in pw.checks {
        if c.asserted {
            report.push(c.name, c.anchor, c.value, c.tolerance, c.pass);
        } else {
            report.push_diagnostic(c.name, c.anchor, c.value, c.tolerance, c.pass);
        }
    }
    Ok(ChiWindowRun {
        report,
        threshold,
        window,
        profile,
        margin_min,
    })
}

/// Full symmetry-breaking suite on the scenario fan.
pub struct BreakingRun {
    pub report: VerificationReport,
    pub curves: BreakingCurves,
    pub csv: String,
    pub profiles_plot: LinePlot,
    pub deficit_plot: LinePlot,
}

pub fn run_symmetry_breaking(sc: &Scenario) -> Result<BreakingRun> {
    let fan = sc.fan.ok_or_else(|| {
        Error::InvalidConfig("scenario has no fan parameters for symmetry breaking".into())
    })?;
    let bs = build_breaking_subsolution(sc.domain, fan)?;
    let ntheta = 16;
    let (report, curves) = verify_breaking(&bs, sc.grid.nr, ntheta, sc.grid.nt)?;

    // CSV over (r, t): f, e, ē(0), ē(π/2)
    let mut csv = String::from("r,t,f,e,ebar_theta0,ebar_theta_pi_2\n");
    let h_r = sc.domain.r_extent() / sc.grid.nr as f64;
    let h_t = sc.domain.t_end / sc.grid.nt as f64;
    for it in 0..=sc.grid.nt {
        let t = it as f64 * h_t;
        for ir in 0..=sc.grid.nr {
            let r = sc.domain.delta + ir as f64 * h_r;
            let _ = writeln!(
                csv,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r,
                t,
                bs.f(r, t),
                bs.energy_lambda_max(r, t),
                bs.ebar(r, 0.0, t),
                bs.ebar(r, 0.5 * PI, t)
            );
        }
    }

    let mut profiles_plot = LinePlot::new("rarefaction profile", "r", "f(r, t)");
    for frac in [0.25, 0.5, 0.75, 1.0] {
        let t = frac * sc.domain.t_end;
        let pts: Vec<(f64, f64)> = (0..=sc.grid.nr)
            .map(|ir| {
                let r = sc.domain.delta + ir as f64 * h_r;
                (r, bs.f(r, t))
            })
            .collect();
        profiles_plot.add_series(&format!("t = {t:.2}"), pts);
    }
    let mut deficit_plot = LinePlot::new("energy deficit and theta-variance", "t", "value");
    deficit_plot.add_series(
        "deficit",
        curves
            .times
            .iter()
            .cloned()
            .zip(curves.deficit.iter().cloned())
            .collect(),
    );
    deficit_plot.add_series(
        "theta-variance (max over r)",
        curves
            .times
            .iter()
            .cloned()
            .zip(curves.variance.iter().cloned())
            .collect(),
    );

    Ok(BreakingRun {
        report,
        curves,
        csv,
        profiles_plot,
        deficit_plot,
    })
}

/// Laminate iteration demo on the scenario grid.
pub struct CiDemoRun {
    pub report: VerificationReport,
    pub trace: IterationTrace,
    pub csv: String,
    pub gap_plot: LinePlot,
    pub final_divergence: f64,
}

pub fn run_ci_demo(sc: &Scenario, steps: usize, frequency: u32) -> Result<CiDemoRun> {
    let (nr, nz, nt) = (sc.grid.nr, sc.grid.nz, sc.grid.nt);
    let mut sub = build_explicit_subsolution(sc.domain, nr, nz, nt, sc.dp(), sc.chi_tilde.clone())?;
    let threshold_sup = chi_threshold(&sub).sup_over(sc.domain.t_end, nt);
    let chi = ChiProfile::constant(1.1 * threshold_sup, sc.domain.t_end, nt);
    let cfg = LaminateConfig {
        frequency,
        residual_seed: sc.seed,
        ..Default::default()
    };
    let trace = run_iteration(&mut sub, &chi, steps, &cfg)?;
    let final_divergence = max_discrete_divergence(&sub.m)?;

    let mut report = VerificationReport::new("laminate-iteration");
    let monotone = trace
        .steps
        .iter()
        .map(|s| s.gap)
        .fold((true, trace.initial_gap), |(ok, prev), gap| {
            (ok && gap < prev, gap)
        })
        .0;
    report.push(
        "gap-strictly-decreasing",
        "momentum-mass-increase",
        if monotone { 1.0 } else { 0.0 },
        1.0,
        monotone,
    );
    let min_margin = trace
        .steps
        .iter()
        .map(|s| s.min_margin)
        .fold(f64::INFINITY, f64::min);
    report.push(
        "hull-margin-positive",
        "strict-energy-inequality",
        min_margin,
        0.0,
        trace.steps.is_empty() || min_margin > 0.0,
    );
    report.push(
        "discrete-divergence",
        "solenoidal-stream-construction",
        final_divergence,
        1e-13,
        final_divergence <= 1e-13,
    );
    let max_residual = trace
        .steps
        .iter()
        .map(|s| s.weak_residual)
        .fold(trace.initial_residual, f64::max);
    report.push(
        "weak-residual-bounded",
        "linear-system-momentum",
        max_residual,
        sc.tolerances.ci_weak_tol,
        max_residual <= sc.tolerances.ci_weak_tol,
    );
    report.push(
        "quadratic-decrease-fit",
        "perturbation-gain",
        trace.fitted_c,
        0.0,
        trace.steps.is_empty() || trace.fitted_c > 0.0,
    );
    if let Some(exp) = trace.empirical_exponent {
        report.record_norm("empirical-gain-exponent", exp);
    }

    let mut csv = String::from(
        "step,gap,gap_decrease,amplitude,weak_residual,perturbation_residual,min_margin\n",
    );
    for s in &trace.steps {
        let _ = writeln!(
            csv,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            s.step,
            s.gap,
            s.gap_decrease,
            s.amplitude,
            s.weak_residual,
            s.perturbation_residual,
            s.min_margin
        );
    }
    let mut gap_plot = LinePlot::new("space-time energy gap per accepted step", "step", "gap");
    let mut pts = vec![(0.0, trace.initial_gap)];
    pts.extend(trace.steps.iter().map(|s| (s.step as f64 + 1.0, s.gap)));
    if trace.steps.is_empty() {
        pts.clear();
    }
    gap_plot.add_series("gap", pts);

    Ok(CiDemoRun {
        report,
        trace,
        csv,
        gap_plot,
        final_divergence,
    })
}

/// Line plot of the χ profile against the threshold with the window marker.
pub fn chi_window_plot(run: &ChiWindowRun) -> LinePlot {
    let mut plot = LinePlot::new("chi profile against the subsolution threshold", "t", "chi");
    let stride = (run.profile.times.len() / 512).max(1);
    let chi_pts: Vec<(f64, f64)> = run
        .profile
        .times
        .iter()
        .step_by(stride)
        .map(|&t| (t, run.profile.value_at(t)))
        .collect();
    let thr_pts: Vec<(f64, f64)> = run
        .profile
        .times
        .iter()
        .step_by(stride)
        .map(|&t| (t, run.threshold.at(t)))
        .collect();
    plot.add_series("chi(t)", chi_pts);
    plot.add_series("threshold(t)", thr_pts);
    plot.markers.push((run.window.t_max, "T_max".into()));
    plot
}

/// Dump of a subsolution state: per-component CSVs plus a JSON sidecar.
pub struct SubsolutionDump {
    pub m_csv: Vec<u8>,
    pub stress_csv: Vec<u8>,
    pub q_csv: Option<Vec<u8>>,
    pub sidecar: serde_json::Value,
}

pub fn dump_subsolution(sc: &Scenario, run: &SubsolutionRun) -> Result<SubsolutionDump> {
    let mut m_csv = Vec::new();
    run.state.m.dump_csv(&mut m_csv)?;
    let mut stress_csv = Vec::new();
    run.state.stress.dump_csv(&mut stress_csv)?;
    let q_csv = match &run.state.q {
        Some(q) => {
            let mut buf = Vec::new();
            q.dump_csv(&mut buf)?;
            Some(buf)
        }
        None => None,
    };
    let sidecar = serde_json::json!({
        "gamma": sc.gamma,
        "chi_tilde": sc.chi_tilde,
        "chi": run.chi_value,
        "domain": sc.domain,
        "grid": sc.grid,
    });
    Ok(SubsolutionDump {
        m_csv,
        stress_csv,
        q_csv,
        sidecar,
    })
}

/// The slice-wise momentum mass `∫|m|² dz dr` at `t = 0`, reported alongside
/// the verify-subsolution document.
pub fn initial_momentum_mass(state: &SubsolutionState) -> Result<f64> {
    let g = &state.m;
    let mut sq =
        crate::fields::GridField::zeros(g.domain, g.nr, g.nz, g.nt, crate::fields::Rank::Scalar)?;
    for iz in 0..g.nz {
        for ir in 0..=g.nr {
            let v = g.get(ir, iz, 0, 0).powi(2) + g.get(ir, iz, 0, 1).powi(2);
            sq.set(ir, iz, 0, 0, v);
        }
    }
    sq.integrate(0, Weight::One)
}
