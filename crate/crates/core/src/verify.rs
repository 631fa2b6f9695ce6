//! Sampling-based certification of the energy identities, the Lyapunov
//! decrease conditions, uniqueness of the orbit and convergence to it.
//!
//! Every check produces a [`CertReport`]. Samples are drawn from a seeded
//! ChaCha generator before any evaluation, evaluations run in parallel and
//! are collected in sample order, so reports do not depend on the number of
//! threads.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{State, SystemParams};
use crate::energy::{energy_split, trapezoid_area};
use crate::error::Result;
use crate::hybridsim::{simulate, ResetLaw, SimOptions};
use crate::orbit::{balance_residual, defect_scan, find_periodic_orbit, OrbitSolution};

/// At most this many offending samples are listed per report.
pub const MAX_OFFENDERS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Offender {
    pub index: usize,
    pub state: State,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub name: String,
    pub samples: usize,
    pub worst_residual: f64,
    pub tolerance: f64,
    /// `true` when the check is `worst_residual < tolerance` rather than `<=`.
    pub strict: bool,
    pub passed: bool,
    pub offending: Vec<Offender>,
}

impl CertReport {
    fn build(name: &str, tolerance: f64, strict: bool, residuals: Vec<(State, f64)>) -> Self {
        let ok = |r: f64| if strict { r < tolerance } else { r <= tolerance };
        let worst = residuals
            .iter()
            .map(|&(_, r)| if r.is_nan() { f64::INFINITY } else { r })
            .fold(f64::NEG_INFINITY, f64::max);
        let mut offending: Vec<Offender> = residuals
            .iter()
            .enumerate()
            .filter(|(_, &(_, r))| !ok(r))
            .map(|(index, &(state, residual))| Offender { index, state, residual })
            .collect();
        offending.truncate(MAX_OFFENDERS);
        Self {
            name: name.to_string(),
            samples: residuals.len(),
            worst_residual: worst,
            tolerance,
            strict,
            passed: !residuals.is_empty() && ok(worst),
            offending,
        }
    }

    fn single(name: &str, tolerance: f64, residual: f64) -> Self {
        Self::build(name, tolerance, false, vec![(State::ORIGIN, residual)])
    }
}

/// Aligned plain-text table of reports.
pub fn format_reports(reports: &[CertReport]) -> String {
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(4).max(5);
    let mut out = format!(
        "{:<width$}  {:>8}  {:>12}  {:>12}  {}\n",
        "check", "samples", "worst", "tolerance", "result"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<width$}  {:>8}  {:>12.4e}  {}{:>11.1e}  {}",
            r.name,
            r.samples,
            r.worst_residual,
            if r.strict { "<" } else { " " },
            r.tolerance,
            if r.passed { "PASS" } else { "FAIL" }
        );
    }
    out
}

/// Counts and tolerances for the full certification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertConfig {
    pub area_samples: usize,
    pub area_steps: usize,
    pub area_tol: f64,
    pub flow_arcs: usize,
    pub flow_points_per_arc: usize,
    pub flow_tol: f64,
    pub jump_samples: usize,
    /// Jump states with `|Π - Π*|` below this are treated as on the attractor.
    pub attractor_band: f64,
    pub scan_points: usize,
    pub balance_tol: f64,
    pub convergence_jmax: usize,
    pub convergence_tol: f64,
}

impl Default for CertConfig {
    fn default() -> Self {
        Self {
            area_samples: 100,
            area_steps: 100_000,
            area_tol: 1e-5,
            flow_arcs: 100,
            flow_points_per_arc: 8,
            flow_tol: 1e-8,
            jump_samples: 300,
            attractor_band: 1e-6,
            scan_points: 50,
            balance_tol: 1e-10,
            convergence_jmax: 100,
            convergence_tol: 1e-3,
        }
    }
}

/// Rejection samples `n` states of `C` in `[-half_width, half_width]²` with
/// `|x| >= r_min`.
pub fn sample_flow_states(p: &SystemParams, n: usize, seed: u64, half_width: f64, r_min: f64) -> Vec<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = State::new(
            rng.random_range(-half_width..half_width),
            rng.random_range(-half_width..half_width),
        );
        if x.norm() >= r_min && p.in_flow_set(x) {
            out.push(x);
        }
    }
    out
}

/// Dissipation area by quadrature against the energy drop, relative to `E_b`.
pub fn certify_lemma1(p: &SystemParams, n_samples: usize, seed: u64) -> CertReport {
    let cfg = CertConfig::default();
    certify_dissipation_area_with(p, &sample_flow_states(p, n_samples, seed, 2.0, 0.05), cfg.area_steps, cfg.area_tol)
}

pub fn certify_dissipation_area_with(p: &SystemParams, states: &[State], n_steps: usize, tol: f64) -> CertReport {
    let residuals = states
        .par_iter()
        .map(|&x| {
            let r = energy_split(p, x)
                .map(|s| {
                    let area = trapezoid_area(p, s.back.state, s.arc_duration(), n_steps);
                    (p.c() * area - s.dissipated()).abs() / s.e_b()
                })
                .unwrap_or(f64::INFINITY);
            (x, r)
        })
        .collect();
    CertReport::build("dissipation_area", tol, false, residuals)
}

/// Which side of `Π*` and `Π0` a jump state falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiRegime {
    /// `Π > Π* > Π0`
    AboveOrbit,
    /// `Π* > Π > Π0`
    BetweenCornerAndOrbit,
    /// `0 < Π < Π0`
    BelowCorner,
}

pub fn classify(pi: f64, pi_star: f64, pi_0: f64) -> PiRegime {
    if pi > pi_star {
        PiRegime::AboveOrbit
    } else if pi > pi_0 {
        PiRegime::BetweenCornerAndOrbit
    } else {
        PiRegime::BelowCorner
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovCert {
    pub flow: CertReport,
    pub jump: CertReport,
    pub coverage: CertReport,
}

impl LyapunovCert {
    pub fn reports(&self) -> Vec<CertReport> {
        vec![self.flow.clone(), self.jump.clone(), self.coverage.clone()]
    }

    pub fn passed(&self) -> bool {
        self.flow.passed && self.jump.passed && self.coverage.passed
    }
}

/// Jump-set states `(0, ±v)` with `v` log-uniform in `[v_lo, v_hi]`, keeping
/// only those with `|Π - Π*| > band`.
pub fn sample_jump_states(p: &SystemParams, n: usize, seed: u64, v_lo: f64, v_hi: f64, band: f64) -> Vec<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi_star = p.u_hat() / p.c();
    let (a, b) = (v_lo.ln(), v_hi.ln());
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let v = rng.random_range(a..b).exp();
        let x = State::new(0.0, if rng.random_bool(0.5) { v } else { -v });
        if let Ok(s) = energy_split(p, x) {
            if (s.pi() - pi_star).abs() > band {
                out.push(x);
            }
        }
    }
    out
}

/// Flow constancy and jump decrease of `V`.
pub fn certify_lyapunov(p: &SystemParams, n_flow: usize, n_jump: usize, seed: u64) -> Result<LyapunovCert> {
    let cfg = CertConfig {
        flow_arcs: n_flow,
        jump_samples: n_jump,
        ..CertConfig::default()
    };
    let orbit = find_periodic_orbit(p)?;
    certify_lyapunov_with(p, &orbit, &cfg, seed)
}

pub fn certify_lyapunov_with(p: &SystemParams, orbit: &OrbitSolution, cfg: &CertConfig, seed: u64) -> Result<LyapunovCert> {
    // flow: relative variation of V at interior points of each arc
    let starts = sample_flow_states(p, cfg.flow_arcs, seed, 2.0, 0.05);
    let k = cfg.flow_points_per_arc;
    let flow_res = starts
        .par_iter()
        .map(|&x| {
            let r = energy_split(p, x)
                .and_then(|s| {
                    let v0 = s.lyapunov();
                    (1..=k)
                        .map(|i| {
                            let y = p.propagate(x, s.fwd.tau * i as f64 / (k + 1) as f64);
                            Ok((energy_split(p, y)?.lyapunov() - v0).abs() / v0)
                        })
                        .try_fold(0.0f64, |acc, r: Result<f64>| Ok(acc.max(r?)))
                })
                .unwrap_or(f64::INFINITY);
            (x, r)
        })
        .collect();
    let flow = CertReport::build("flow_constancy", cfg.flow_tol, false, flow_res);

    // jumps: V(G(x)) - V(x) < 0 off the attractor
    let pi_star = p.u_hat() / p.c();
    let pi_0 = energy_split(p, State::new(p.theta_hat(), 0.0))?.pi();
    let jump_states = sample_jump_states(
        p,
        cfg.jump_samples,
        seed.wrapping_add(1),
        orbit.v_star * 1e-3,
        orbit.v_star * 10.0,
        cfg.attractor_band,
    );
    let evaluated: Vec<(State, f64, Option<PiRegime>)> = jump_states
        .par_iter()
        .map(|&x| {
            let out = energy_split(p, x).and_then(|s| {
                let post = p.apply_jump(x, None)?;
                let margin = energy_split(p, post)?.lyapunov() - s.lyapunov();
                Ok((margin, classify(s.pi(), pi_star, pi_0)))
            });
            match out {
                Ok((margin, regime)) => (x, margin, Some(regime)),
                Err(_) => (x, f64::INFINITY, None),
            }
        })
        .collect();
    let jump = CertReport::build(
        "jump_decrease",
        0.0,
        true,
        evaluated.iter().map(|&(x, m, _)| (x, m)).collect(),
    );
    let missing = [
        PiRegime::AboveOrbit,
        PiRegime::BetweenCornerAndOrbit,
        PiRegime::BelowCorner,
    ]
    .iter()
    .filter(|&&r| !evaluated.iter().any(|e| e.2 == Some(r)))
    .count();
    let mut coverage = CertReport::single("regime_coverage", 0.0, missing as f64);
    coverage.samples = evaluated.len();
    Ok(LyapunovCert { flow, jump, coverage })
}

/// Energy balance at the computed orbit.
pub fn certify_orbit_balance(p: &SystemParams, orbit: &OrbitSolution, tol: f64) -> Result<CertReport> {
    Ok(CertReport::single("energy_balance", tol, balance_residual(p, orbit)?.abs()))
}

/// Sign changes and monotonicity of the return defect on a log grid over
/// `[v*/10, 10 v*]`; the residual counts deviations from one sign change and
/// strict decrease.
pub fn certify_uniqueness(p: &SystemParams, orbit: &OrbitSolution, n: usize) -> Result<CertReport> {
    let scan = defect_scan(p, orbit.v_star / 10.0, orbit.v_star * 10.0, n)?;
    let changes = scan.windows(2).filter(|w| (w[0].1 > 0.0) != (w[1].1 > 0.0)).count();
    let non_monotone = scan.windows(2).filter(|w| w[1].1 >= w[0].1).count();
    let residual = (changes as f64 - 1.0).abs() + non_monotone as f64;
    let mut report = CertReport::single("uniqueness_scan", 0.0, residual);
    report.samples = scan.len();
    Ok(report)
}

/// Convergence of simulated solutions: `V` at successive jumps must strictly
/// decrease while off the attractor band, and the distance to the orbit must
/// drop below `cfg.convergence_tol` within `j_max` jumps.
pub fn certify_convergence(p: &SystemParams, x0_list: &[State], j_max: usize) -> Result<Vec<CertReport>> {
    let orbit = find_periodic_orbit(p)?;
    let cfg = CertConfig {
        convergence_jmax: j_max,
        ..CertConfig::default()
    };
    certify_convergence_with(p, &orbit, x0_list, &cfg)
}

pub fn certify_convergence_with(
    p: &SystemParams,
    orbit: &OrbitSolution,
    x0_list: &[State],
    cfg: &CertConfig,
) -> Result<Vec<CertReport>> {
    let pi_star = p.u_hat() / p.c();
    let opts = SimOptions {
        j_max: cfg.convergence_jmax,
        ..SimOptions::default()
    };
    let per_start: Vec<(State, f64, f64)> = x0_list
        .par_iter()
        .map(|&x0| {
            let run = || -> Result<(f64, f64)> {
                let arc = simulate(p, &ResetLaw::Centered, x0, &opts)?;
                let mut points = vec![x0];
                points.extend(arc.jumps.iter().map(|j| j.post));
                let splits = points
                    .iter()
                    .map(|&x| energy_split(p, x))
                    .collect::<Result<Vec<_>>>()?;
                let violations = splits
                    .windows(2)
                    .filter(|w| (w[0].pi() - pi_star).abs() > cfg.attractor_band)
                    .filter(|w| w[1].lyapunov() >= w[0].lyapunov())
                    .count();
                let min_distance = arc
                    .jumps
                    .iter()
                    .map(|j| orbit.distance(j.post))
                    .fold(orbit.distance(x0), f64::min);
                Ok((violations as f64, min_distance))
            };
            let (violations, distance) = run().unwrap_or((f64::INFINITY, f64::INFINITY));
            (x0, violations, distance)
        })
        .collect();
    Ok(vec![
        CertReport::build(
            "lyapunov_monotone",
            0.0,
            false,
            per_start.iter().map(|&(x, v, _)| (x, v)).collect(),
        ),
        CertReport::build(
            "distance_to_orbit",
            cfg.convergence_tol,
            false,
            per_start.iter().map(|&(x, _, d)| (x, d)).collect(),
        ),
    ])
}

/// Runs every check with one seed.
pub fn certify_all(p: &SystemParams, x0_list: &[State], cfg: &CertConfig, seed: u64) -> Result<Vec<CertReport>> {
    let orbit = find_periodic_orbit(p)?;
    let area_states = sample_flow_states(p, cfg.area_samples, seed, 2.0, 0.05);
    let mut reports = vec![certify_dissipation_area_with(p, &area_states, cfg.area_steps, cfg.area_tol)];
    reports.extend(certify_lyapunov_with(p, &orbit, cfg, seed.wrapping_add(1))?.reports());
    reports.push(certify_orbit_balance(p, &orbit, cfg.balance_tol)?);
    reports.push(certify_uniqueness(p, &orbit, cfg.scan_points)?);
    reports.extend(certify_convergence_with(p, &orbit, x0_list, cfg)?);
    Ok(reports)
}
