use std::fs;
use std::path::Path;

use reset_orbit::cli::config::RunConfig;
use reset_orbit::cli::{lyapunov_grid, run};
use reset_orbit::energy::energy_split;
use reset_orbit::hybridsim::{periodic_arc, HybridArc, ResetLaw};
use reset_orbit::orbit::find_periodic_orbit;
use reset_orbit::{State, SystemParams};

fn run_in(dir: &Path, args: &[&str]) -> i32 {
    let mut full = vec!["reset-orbit"];
    full.extend_from_slice(args);
    let out = dir.to_str().unwrap();
    full.extend_from_slice(&["--out", out]);
    run(full)
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn simulate_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["simulate", "--jmax", "10"]), 0);
    for name in [
        "trajectory_0.csv",
        "trajectory_1.csv",
        "arc_0.json",
        "lyapunov_0.csv",
        "phase.svg",
        "lyapunov.svg",
    ] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let text = fs::read_to_string(dir.path().join("trajectory_0.csv")).unwrap();
    assert!(text.starts_with("t,j,x1,x2\n"));
    assert!(!text.contains(' '));
    let svg = fs::read_to_string(dir.path().join("phase.svg")).unwrap();
    assert!(svg.contains("<svg") && !svg.contains("href"));
    let arc = HybridArc::from_json(&fs::read_to_string(dir.path().join("arc_1.json")).unwrap()).unwrap();
    arc.validate(&ResetLaw::Centered).unwrap();
    assert_eq!(arc.jumps.len(), 10);
}

#[test]
fn jmax_zero_gives_a_single_flow_segment() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["simulate", "--jmax", "0"]), 0);
    let rows = read_csv(&dir.path().join("trajectory_0.csv"));
    assert!(rows.len() > 2);
    assert!(rows.iter().all(|r| r[1] == "0"));
    let last = rows.last().unwrap();
    assert_eq!(last[2].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn offset_law_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"initial_conditions": [[1.0, 0.0], [-0.5, -0.5]]}"#).unwrap();
    let code = run_in(
        dir.path(),
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--law",
            "offset",
            "--eps-phi",
            "0.2",
            "--theta-hat",
            "0.6",
            "--jmax",
            "20",
        ],
    );
    assert_eq!(code, 0);
    let law = ResetLaw::Offset { eps_phi: 0.2 };
    let arc = HybridArc::from_json(&fs::read_to_string(dir.path().join("arc_0.json")).unwrap()).unwrap();
    arc.validate(&law).unwrap();
    for j in &arc.jumps {
        assert!((j.post.x1 - j.pre.x1).abs() - 0.6 < 1e-12);
    }
    // no Lyapunov output for the offset law
    assert!(!dir.path().join("lyapunov_0.csv").exists());
}

fn inside(poly: &[State], x: State) -> bool {
    let mut odd = false;
    for w in poly.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.x2 > x.x2) != (b.x2 > x.x2) {
            let at = a.x1 + (x.x2 - a.x2) / (b.x2 - a.x2) * (b.x1 - a.x1);
            if x.x1 < at {
                odd = !odd;
            }
        }
    }
    odd
}

#[test]
fn larger_reset_gives_enclosing_orbit() {
    let small = find_periodic_orbit(&SystemParams::new(1.0, 0.3, 1.0, 0.2).unwrap()).unwrap();
    let large = find_periodic_orbit(&SystemParams::new(1.0, 0.3, 1.0, 0.3).unwrap()).unwrap();
    let outer = large.closed_curve();
    assert!(small.closed_curve().iter().all(|&x| inside(&outer, x)));
    assert!(!large.closed_curve().iter().step_by(16).any(|&x| inside(&small.closed_curve(), State::new(1.01 * x.x1, 1.01 * x.x2))));
}

#[test]
fn orbit_command_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["orbit", "--theta-hat", "0.2"]), 0);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("orbit.json")).unwrap()).unwrap();
    assert!(summary["balance_residual"].as_f64().unwrap().abs() <= 1e-10);
    assert_eq!(summary["period_j"], 2);

    let p = SystemParams::new(1.0, 0.3, 1.0, 0.2).unwrap();
    let orbit = find_periodic_orbit(&p).unwrap();
    let arc = HybridArc::from_json(&fs::read_to_string(dir.path().join("orbit_arc.json")).unwrap()).unwrap();
    assert_eq!(arc, periodic_arc(&p, &orbit).unwrap());
    arc.validate(&ResetLaw::Centered).unwrap();
    assert_eq!(arc.jumps.len(), 2);
    assert!(arc.final_state().max_abs_diff(arc.initial) < 1e-10);
    assert!((arc.segments.last().unwrap().t_end - orbit.period_t).abs() < 1e-9);
    let rows = read_csv(&dir.path().join("orbit.csv"));
    assert_eq!(rows.last().unwrap()[1], "2");
}

#[test]
fn lyapunov_field_marks_the_wedge_and_peaks_off_the_orbit() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["lyapunov-field", "--grid-n", "80"]), 0);
    let p = SystemParams::new(1.0, 0.3, 1.0, 0.3).unwrap();
    let rows = read_csv(&dir.path().join("lyapunov_field.csv"));
    assert_eq!(rows.len(), 80 * 80);
    let mut best = (f64::INFINITY, State::ORIGIN);
    for r in &rows {
        let x = State::new(r[0].parse().unwrap(), r[1].parse().unwrap());
        let wedge = x.x1.abs() < p.theta_hat() && x.x1 * x.x2 > 0.0;
        if wedge {
            assert_eq!(r[2], "nan", "{x:?}");
        }
        if r[2] != "nan" {
            let v: f64 = r[2].parse().unwrap();
            if v < best.0 {
                best = (v, x);
            }
        }
    }
    let orbit = find_periodic_orbit(&p).unwrap();
    let spacing = 2.0 / 79.0;
    assert!(orbit.distance(best.1) <= spacing, "{best:?}");
}

#[test]
fn lyapunov_constant_along_a_grid_resolved_arc() {
    let mut cfg = RunConfig::default();
    cfg.grid.n1 = 21;
    cfg.grid.n2 = 21;
    let v = cfg.validate().unwrap();
    let grid = lyapunov_grid(&v);
    let p = &v.params;
    let spacing = 0.1;
    for &(x1, x2, val) in grid.iter().filter(|g| g.2.is_finite() && g.0.abs() > 0.5).take(10) {
        let x = State::new(x1, x2);
        let tau = energy_split(p, x).unwrap().fwd.tau;
        let dt = spacing / x.norm().max(1.0);
        let mut t = 0.0;
        while t < tau {
            let y = p.propagate(x, t);
            let vy = energy_split(p, y).unwrap().lyapunov();
            assert!((vy - val).abs() <= 1e-6 * val, "{x:?} t={t}");
            t += dt;
        }
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let tampered = dir.path().join("tampered.json");
    fs::write(
        &tampered,
        r#"{"verify": {"area_samples": 10, "area_tol": 1e-15, "flow_arcs": 10}}"#,
    )
    .unwrap();
    assert_eq!(run_in(dir.path(), &["verify", "--config", tampered.to_str().unwrap()]), 1);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify_report.json")).unwrap()).unwrap();
    let failing: Vec<&str> = report["reports"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["passed"] == false)
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert_eq!(failing, ["dissipation_area"]);

    let overdamped = dir.path().join("overdamped.json");
    fs::write(&overdamped, r#"{"params": {"m": 1, "c": 3, "k": 1, "theta_hat": 0.2}}"#).unwrap();
    assert_eq!(run_in(dir.path(), &["orbit", "--config", overdamped.to_str().unwrap()]), 2);
    assert_eq!(run_in(dir.path(), &["simulate", "--tmax", "-1"]), 2);
    assert_eq!(run_in(dir.path(), &["bogus"]), 2);
    assert_eq!(run(["reset-orbit", "--help"]), 0);
}

#[test]
fn outputs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(run_in(d.path(), &["simulate", "--jmax", "5"]), 0);
    }
    for name in ["trajectory_0.csv", "arc_1.json", "lyapunov_0.csv", "phase.svg"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}
