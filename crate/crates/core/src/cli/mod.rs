//! `reset-orbit` command line front end.
//!
//! Exit status: 0 on success, 1 when a certification check fails, 2 on
//! configuration or domain errors.

pub mod config;
pub mod svg;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Read as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{State, SystemParams};
use crate::energy::energy_split;
use crate::hybridsim::{fmt_f64, periodic_arc, simulate, HybridArc, ResetLaw};
use crate::orbit::{balance_residual, find_periodic_orbit, OrbitSolution};
use crate::verify::{certify_all, format_reports, CertReport};
use config::{LawKind, RunConfig, Validated};
use svg::{Figure, PALETTE};

#[derive(Debug, Parser)]
#[command(name = "reset-orbit", version, about = "Reset-controlled oscillator: simulation, periodic orbit and Lyapunov checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate hybrid arcs from each initial condition.
    Simulate(CommonArgs),
    /// Solve for the periodic orbit.
    Orbit(CommonArgs),
    /// Evaluate the Lyapunov function on a grid.
    LyapunovField {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid points per axis.
        #[arg(long)]
        grid_n: Option<usize>,
    },
    /// Run all certification checks.
    Verify(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON configuration file, or `-` for stdin.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub law: Option<LawKind>,
    #[arg(long)]
    pub eps_phi: Option<f64>,
    #[arg(long)]
    pub theta_hat: Option<f64>,
    #[arg(long)]
    pub jmax: Option<usize>,
    #[arg(long)]
    pub tmax: Option<f64>,
}

impl CommonArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            None => RunConfig::default(),
            Some(path) if path.as_os_str() == "-" => {
                let mut text = String::new();
                std::io::stdin().read_to_string(&mut text)?;
                RunConfig::from_json(&text)?
            }
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                RunConfig::from_json(&text)?
            }
        };
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(law) = self.law {
            cfg.law = law;
        }
        if let Some(eps) = self.eps_phi {
            cfg.eps_phi = eps;
        }
        if let Some(th) = self.theta_hat {
            cfg.params.theta_hat = th;
        }
        if let Some(j) = self.jmax {
            cfg.j_max = j;
        }
        if let Some(t) = self.tmax {
            cfg.t_max = Some(t);
        }
        Ok(cfg)
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn execute(command: &Command) -> Result<bool> {
    match command {
        Command::Simulate(args) => cmd_simulate(&args.load()?.validate()?).map(|_| true),
        Command::Orbit(args) => cmd_orbit(&args.load()?.validate()?).map(|_| true),
        Command::LyapunovField { common, grid_n } => {
            let mut cfg = common.load()?;
            if let Some(n) = grid_n {
                cfg.grid.n1 = *n;
                cfg.grid.n2 = *n;
            }
            cmd_lyapunov_field(&cfg.validate()?).map(|_| true)
        }
        Command::Verify(args) => cmd_verify(&args.load()?.validate()?),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn out_dir(v: &Validated) -> Result<&Path> {
    let dir = v.config.out_dir.as_path();
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

/// `V` per flow segment, as `(t_start, t_end, j, V)`; `NaN` where undefined.
fn lyapunov_series(p: &SystemParams, arc: &HybridArc) -> Vec<(f64, f64, usize, f64)> {
    arc.segments
        .iter()
        .map(|seg| {
            let v = energy_split(p, seg.samples[0].x).map_or(f64::NAN, |s| s.lyapunov());
            (seg.t_start, seg.t_end, seg.j, v)
        })
        .collect()
}

fn phase_bounds(arcs: &[HybridArc], extra: f64) -> (f64, f64) {
    let mut r1 = extra;
    let mut r2 = extra;
    for (_, _, x) in arcs.iter().flat_map(|a| a.rows()) {
        r1 = r1.max(x.x1.abs());
        r2 = r2.max(x.x2.abs());
    }
    (1.1 * r1, 1.1 * r2)
}

/// Phase portrait with the flow set shaded, the jump set and `C0`.
fn phase_svg(p: &SystemParams, law: &ResetLaw, arcs: &[HybridArc], orbit: Option<&OrbitSolution>) -> String {
    let (r1, r2) = phase_bounds(arcs, 1.2 * p.theta_hat());
    let mut fig = Figure::new(640.0, 520.0, (-r1, r1), (-r2, r2));
    fig.rect(-r1, -r2, r1, r2, "#e8f0fa");
    let th = p.theta_hat();
    match *law {
        ResetLaw::Centered => {
            fig.rect(0.0, 0.0, th, r2, "#ffffff");
            fig.rect(-th, -r2, 0.0, 0.0, "#ffffff");
            fig.polyline(&[(0.0, -r2), (0.0, r2)], "#c00000", 1.5, None);
            fig.polyline(&[(th, r2), (th, 0.0), (-th, 0.0), (-th, -r2)], "#555555", 1.5, Some("6 3"));
        }
        ResetLaw::Offset { eps_phi } => {
            fig.rect(-eps_phi, 0.0, th - eps_phi, r2, "#ffffff");
            fig.rect(eps_phi - th, -r2, eps_phi, 0.0, "#ffffff");
            fig.polyline(&[(-eps_phi, 0.0), (-eps_phi, r2)], "#c00000", 1.5, None);
            fig.polyline(&[(eps_phi, -r2), (eps_phi, 0.0)], "#c00000", 1.5, None);
        }
    }
    if let Some(orbit) = orbit {
        for arc in orbit.arcs() {
            let pts: Vec<(f64, f64)> = arc.iter().map(|s| (s.x1, s.x2)).collect();
            fig.polyline(&pts, "#000000", 2.5, Some("2 2"));
        }
    }
    for (i, arc) in arcs.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for seg in &arc.segments {
            let pts: Vec<(f64, f64)> = seg.samples.iter().map(|s| (s.x.x1, s.x.x2)).collect();
            fig.polyline(&pts, color, 1.2, None);
        }
        for jmp in &arc.jumps {
            fig.polyline(&[(jmp.pre.x1, jmp.pre.x2), (jmp.post.x1, jmp.post.x2)], color, 0.8, Some("3 3"));
        }
    }
    fig.axes("x1 [m]", "x2 [m/s]", "phase plot");
    fig.render()
}

/// `log10 V` against ordinary time.
fn lyapunov_svg(series: &[Vec<(f64, f64, usize, f64)>]) -> String {
    let logs: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.iter()
                .filter(|e| e.3 > 0.0 && e.3.is_finite())
                .flat_map(|&(t0, t1, _, v)| [(t0, v.log10()), (t1, v.log10())])
                .collect()
        })
        .collect();
    let all = logs.iter().flatten();
    let t_max = all.clone().map(|p| p.0).fold(1e-9, f64::max);
    let lo = all.clone().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = all.map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo < hi { (lo, hi) } else { (-1.0, 1.0) };
    let mut fig = Figure::new(640.0, 360.0, (0.0, t_max), (lo, hi));
    for (i, pts) in logs.iter().enumerate() {
        fig.polyline(pts, PALETTE[i % PALETTE.len()], 1.5, None);
    }
    fig.axes("t [s]", "log10 V", "Lyapunov function along solutions");
    fig.render()
}

pub fn cmd_simulate(v: &Validated) -> Result<()> {
    let dir = out_dir(v)?;
    let p = &v.params;
    let arcs = v
        .initial
        .par_iter()
        .map(|&x0| simulate(p, &v.law, x0, &v.sim))
        .collect::<crate::Result<Vec<_>>>()?;
    let centered = v.law == ResetLaw::Centered;
    let mut series = Vec::new();
    for (i, arc) in arcs.iter().enumerate() {
        write_file(&dir.join(format!("trajectory_{i}.csv")), &arc.to_csv())?;
        write_file(&dir.join(format!("arc_{i}.json")), &arc.to_json()?)?;
        if centered {
            let s = lyapunov_series(p, arc);
            let mut csv = String::from("t,j,V\n");
            for &(t0, t1, j, val) in &s {
                for t in [t0, t1] {
                    let _ = writeln!(csv, "{},{},{}", fmt_f64(t), j, fmt_f64(val));
                }
            }
            write_file(&dir.join(format!("lyapunov_{i}.csv")), &csv)?;
            series.push(s);
        }
        let last = arc.final_state();
        println!(
            "x0 = ({}, {}): {} jumps, t = {:.6}, final state ({:.9}, {:.9})",
            arc.initial.x1,
            arc.initial.x2,
            arc.jumps.len(),
            arc.segments.last().map_or(0.0, |s| s.t_end),
            last.x1,
            last.x2
        );
    }
    let orbit = if centered { Some(find_periodic_orbit(p)?) } else { None };
    write_file(&dir.join("phase.svg"), &phase_svg(p, &v.law, &arcs, orbit.as_ref()))?;
    if centered {
        write_file(&dir.join("lyapunov.svg"), &lyapunov_svg(&series))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct OrbitSummary {
    m: f64,
    c: f64,
    k: f64,
    theta_hat: f64,
    v_star: f64,
    tau_star: f64,
    period_t: f64,
    period_j: u32,
    balance_residual: f64,
}

pub fn cmd_orbit(v: &Validated) -> Result<()> {
    let dir = out_dir(v)?;
    let p = &v.params;
    let orbit = find_periodic_orbit(p)?;
    let residual = balance_residual(p, &orbit)?;
    let arc = periodic_arc(p, &orbit)?;
    write_file(&dir.join("orbit.csv"), &arc.to_csv())?;
    write_file(&dir.join("orbit_arc.json"), &arc.to_json()?)?;
    let summary = OrbitSummary {
        m: p.m(),
        c: p.c(),
        k: p.k(),
        theta_hat: p.theta_hat(),
        v_star: orbit.v_star,
        tau_star: orbit.tau_star,
        period_t: orbit.period_t,
        period_j: orbit.period_j,
        balance_residual: residual,
    };
    write_file(&dir.join("orbit.json"), &serde_json::to_string_pretty(&summary)?)?;
    write_file(&dir.join("orbit.svg"), &phase_svg(p, &ResetLaw::Centered, &[arc], Some(&orbit)))?;
    println!("v*        = {}", fmt_f64(orbit.v_star));
    println!("tau*      = {}", fmt_f64(orbit.tau_star));
    println!("T         = {}", fmt_f64(orbit.period_t));
    println!("J         = {}", orbit.period_j);
    println!("|cPi*-U^| = {:.3e}", residual.abs());
    Ok(())
}

/// `V` on the configured grid; `NaN` outside `C ∪ D \ {0}`.
pub fn lyapunov_grid(v: &Validated) -> Vec<(f64, f64, f64)> {
    let p = &v.params;
    let x1s = v.config.grid.x1_values();
    let x2s = v.config.grid.x2_values();
    x2s.par_iter()
        .flat_map_iter(|&x2| {
            x1s.iter().map(move |&x1| {
                let x = State::new(x1, x2);
                let val = energy_split(p, x).map_or(f64::NAN, |s| s.lyapunov());
                (x1, x2, val)
            })
        })
        .collect()
}

pub fn cmd_lyapunov_field(v: &Validated) -> Result<()> {
    let dir = out_dir(v)?;
    let mut csv = String::from("x1,x2,V\n");
    for (x1, x2, val) in lyapunov_grid(v) {
        let _ = writeln!(csv, "{},{},{}", fmt_f64(x1), fmt_f64(x2), fmt_f64(val));
    }
    write_file(&dir.join("lyapunov_field.csv"), &csv)?;
    println!("wrote {}", dir.join("lyapunov_field.csv").display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct VerifyOutput<'a> {
    params: config::ParamsSpec,
    seed: u64,
    initial_conditions: &'a [[f64; 2]],
    passed: bool,
    reports: &'a [CertReport],
}

/// Runs every certification; `Ok(false)` when any check fails.
pub fn cmd_verify(v: &Validated) -> Result<bool> {
    let dir = out_dir(v)?;
    let reports = certify_all(&v.params, &v.initial, &v.config.verify, v.config.seed)?;
    let passed = reports.iter().all(|r| r.passed);
    let out = VerifyOutput {
        params: v.config.params,
        seed: v.config.seed,
        initial_conditions: &v.config.initial_conditions,
        passed,
        reports: &reports,
    };
    write_file(&dir.join("verify_report.json"), &serde_json::to_string_pretty(&out)?)?;
    let text = format_reports(&reports);
    write_file(&dir.join("verify_report.txt"), &text)?;
    print!("{text}");
    for r in reports.iter().filter(|r| !r.passed) {
        eprintln!("check failed: {}", r.name);
    }
    Ok(passed)
}
