//! The unique nontrivial periodic orbit and distances to it.
//!
//! The orbit is parameterized by its post-jump state `(theta_hat, v)` on the
//! vertical piece of `C0`. By central symmetry, periodicity reduces to the
//! half-return condition: the speed at the next crossing of `D` equals `v`.
//! The defect `g(v) = return_speed(v) - v` is monotone, so its root is found
//! by bracketing and bisection.

use serde::{Deserialize, Serialize};

use crate::dynamics::{State, SystemParams};
use crate::energy::energy_split;
use crate::error::{Error, Result};
use crate::events::time_to_d;

/// Stopping threshold on `|g(v)|` (m/s).
pub const DEFECT_TOL: f64 = 1e-12;
/// Polyline segments over one flow half-period.
pub const SAMPLE_SEGMENTS: usize = 2048;
/// Bracket expansion stops once `v_hi` exceeds the seed by this factor.
const MAX_BRACKET_DOUBLINGS: u32 = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSolution {
    pub theta_hat: f64,
    /// Post-jump speed (m/s).
    pub v_star: f64,
    /// Flow time from `(theta_hat, v_star)` to `D` (s).
    pub tau_star: f64,
    /// Hybrid period in ordinary time, `2 tau_star`.
    pub period_t: f64,
    /// Jumps per period.
    pub period_j: u32,
    /// Flow arc from `(theta_hat, v_star)` to `(0, -v_star)`, uniform in time.
    pub samples: Vec<State>,
}

impl OrbitSolution {
    /// The full attractor as two polylines: the sampled half and its mirror.
    pub fn arcs(&self) -> [Vec<State>; 2] {
        let mirrored = self.samples.iter().map(|&s| -s).collect();
        [self.samples.clone(), mirrored]
    }

    /// Closed curve traced by one period, jump segments included.
    pub fn closed_curve(&self) -> Vec<State> {
        let mut curve = self.samples.clone();
        curve.extend(self.samples.iter().map(|&s| -s));
        curve.push(self.samples[0]);
        curve
    }

    /// Minimum Euclidean distance from `x` to the flow arcs of the orbit.
    pub fn distance(&self, x: State) -> f64 {
        let d_pos = polyline_distance(&self.samples, x);
        let d_neg = polyline_distance(&self.samples, -x);
        d_pos.min(d_neg)
    }
}

fn segment_distance(a: State, b: State, x: State) -> f64 {
    let (dx, dy) = (b.x1 - a.x1, b.x2 - a.x2);
    let len_sq = dx * dx + dy * dy;
    let s = if len_sq > 0.0 {
        (((x.x1 - a.x1) * dx + (x.x2 - a.x2) * dy) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    x.distance(State::new(a.x1 + s * dx, a.x2 + s * dy))
}

fn polyline_distance(points: &[State], x: State) -> f64 {
    match points {
        [] => f64::INFINITY,
        [only] => only.distance(x),
        _ => points
            .windows(2)
            .map(|w| segment_distance(w[0], w[1], x))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Speed `|x2|` at the first crossing of `D` after leaving `(theta_hat, v)`.
pub fn return_speed(p: &SystemParams, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidArgument(format!("post-jump speed must be positive, got {v}")));
    }
    let hit = time_to_d(p, State::new(p.theta_hat(), v))?;
    Ok(hit.state.x2.abs())
}

/// Half-return defect `g(v) = return_speed(v) - v`.
pub fn return_defect(p: &SystemParams, v: f64) -> Result<f64> {
    Ok(return_speed(p, v)? - v)
}

/// Initial guess for the lower end of the bracket.
pub fn seed_speed(p: &SystemParams) -> f64 {
    p.theta_hat() * p.omega_d() / 8.0
}

/// Solves for the periodic orbit and checks its defining identities.
pub fn find_periodic_orbit(p: &SystemParams) -> Result<OrbitSolution> {
    let seed = seed_speed(p);

    let mut lo = seed;
    let mut g_lo = return_defect(p, lo)?;
    let mut halvings = 0;
    while g_lo <= 0.0 {
        if halvings == MAX_BRACKET_DOUBLINGS {
            return Err(Error::BracketNotFound { v_hi: lo });
        }
        lo *= 0.5;
        g_lo = return_defect(p, lo)?;
        halvings += 1;
    }

    let mut hi = lo;
    let mut g_hi = g_lo;
    let cap = seed * 2f64.powi(MAX_BRACKET_DOUBLINGS as i32);
    while g_hi > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > cap {
            return Err(Error::BracketNotFound { v_hi: hi });
        }
        g_hi = return_defect(p, hi)?;
    }

    let mut v_star = 0.5 * (lo + hi);
    if g_hi == 0.0 {
        v_star = hi;
    } else {
        for _ in 0..200 {
            v_star = 0.5 * (lo + hi);
            let g = return_defect(p, v_star)?;
            if g.abs() <= DEFECT_TOL || hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
            if g > 0.0 {
                lo = v_star;
            } else {
                hi = v_star;
            }
        }
    }

    let start = State::new(p.theta_hat(), v_star);
    let tau_star = time_to_d(p, start)?.tau;
    let samples = (0..=SAMPLE_SEGMENTS)
        .map(|i| p.propagate(start, tau_star * i as f64 / SAMPLE_SEGMENTS as f64))
        .collect();
    let orbit = OrbitSolution {
        theta_hat: p.theta_hat(),
        v_star,
        tau_star,
        period_t: 2.0 * tau_star,
        period_j: 2,
        samples,
    };
    check_orbit(p, &orbit)?;
    Ok(orbit)
}

fn check_orbit(p: &SystemParams, orbit: &OrbitSolution) -> Result<()> {
    let ensure = |check: &'static str, residual: f64, tolerance: f64| {
        if residual <= tolerance {
            Ok(())
        } else {
            Err(Error::OrbitCheckFailed {
                check,
                residual,
                tolerance,
            })
        }
    };
    ensure("fixed point", return_defect(p, orbit.v_star)?.abs(), 1e-10)?;
    ensure("energy balance", balance_residual(p, orbit)?.abs(), 1e-10)?;
    // T_b = T_f along the arc; the last sample sits on D where T_f is trivial
    let stride = SAMPLE_SEGMENTS / 16;
    for x in orbit.samples[..SAMPLE_SEGMENTS].iter().step_by(stride) {
        let split = energy_split(p, *x)?;
        ensure("kinetic symmetry", (split.t_b - split.t_f).abs(), 1e-8)?;
    }
    Ok(())
}

/// `c Π - U_hat` at the post-jump orbit state.
pub fn balance_residual(p: &SystemParams, orbit: &OrbitSolution) -> Result<f64> {
    Ok(energy_split(p, State::new(p.theta_hat(), orbit.v_star))?.balance_residual())
}

/// Minimum distance from `x` to the orbit's flow arcs.
pub fn distance_to_attractor(x: State, orbit: &OrbitSolution) -> f64 {
    orbit.distance(x)
}

/// `g` on `n` logarithmically spaced speeds in `[lo, hi]`.
pub fn defect_scan(p: &SystemParams, lo: f64, hi: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            let v = (a + (b - a) * i as f64 / (n - 1).max(1) as f64).exp();
            Ok((v, return_defect(p, v)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::total_energy;

    fn nominal_params() -> SystemParams {
        SystemParams::new(1.0, 0.3, 1.0, 0.2).unwrap()
    }

    #[test]
    fn return_speed_bounded_by_injected_energy() {
        let p = nominal_params();
        for v in [1e-3, 0.05, 0.2, 0.5, 1.0, 4.0] {
            let r = return_speed(&p, v).unwrap();
            assert!(r < (v * v + p.k() * p.theta_hat().powi(2) / p.m()).sqrt());
        }
        assert!(return_speed(&p, 0.0).is_err());
    }

    #[test]
    fn orbit_satisfies_balance() {
        let p = nominal_params();
        let orbit = find_periodic_orbit(&p).unwrap();
        assert!(orbit.v_star > 0.0);
        assert!(return_defect(&p, orbit.v_star).unwrap().abs() <= 1e-10);
        assert!(balance_residual(&p, &orbit).unwrap().abs() <= 1e-10);
        assert_eq!(orbit.period_j, 2);
        assert_eq!(orbit.period_t, 2.0 * orbit.tau_star);
        let last = *orbit.samples.last().unwrap();
        assert!(last.x1.abs() < 1e-12);
        assert!((last.x2 + orbit.v_star).abs() < 1e-10);
    }

    #[test]
    fn weak_damping_orbit() {
        let p = SystemParams::new(1.0, 1e-3, 1.0, 0.2).unwrap();
        let orbit = find_periodic_orbit(&p).unwrap();
        let base = find_periodic_orbit(&nominal_params()).unwrap();
        assert!(orbit.v_star > base.v_star);
        let split = energy_split(&p, State::new(0.2, orbit.v_star)).unwrap();
        assert!((split.dissipated() - p.u_hat()).abs() <= 1e-10);
    }

    #[test]
    fn defect_is_monotone_around_root() {
        let p = nominal_params();
        let orbit = find_periodic_orbit(&p).unwrap();
        let scan = defect_scan(&p, orbit.v_star / 10.0, orbit.v_star * 10.0, 50).unwrap();
        for w in scan.windows(2) {
            assert!(w[1].1 < w[0].1, "{:?}", w);
        }
        let changes = scan.windows(2).filter(|w| (w[0].1 > 0.0) != (w[1].1 > 0.0)).count();
        assert_eq!(changes, 1);
    }

    #[test]
    fn distances() {
        let p = nominal_params();
        let orbit = find_periodic_orbit(&p).unwrap();
        for s in orbit.samples.iter().step_by(97) {
            assert!(orbit.distance(*s) <= 1e-12);
            assert!(orbit.distance(-*s) <= 1e-12);
        }
        // midpoints between samples are within polyline resolution
        let mid = p.propagate(orbit.samples[100], orbit.tau_star / (2.0 * SAMPLE_SEGMENTS as f64));
        assert!(orbit.distance(mid) <= 1e-4);
        let x = State::new(0.7, -0.3);
        assert_eq!(orbit.distance(x), orbit.distance(-x));
        assert!((orbit.distance(State::new(0.2, orbit.v_star + 0.01)) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn pi_star_exceeds_corner_dissipation() {
        let p = nominal_params();
        let corner = energy_split(&p, State::new(p.theta_hat(), 0.0)).unwrap();
        assert!(corner.dissipated() < p.u_hat());
        assert!(total_energy(&p, corner.fwd.state) > 0.0);
    }
}
