//! Backward and forward energies, the dissipation area and the Lyapunov
//! function built from them.
//!
//! For `x` in `C`, follow the flow backward to `C0` (at `(x1b, x2b)`) and
//! forward to `D` (at `(0, x2f)`). Then
//!
//! ```text
//! T_b = m x2b² / 2,   U_b = k x1b² / 2,   T_f = m x2f² / 2
//! c Π = (T_b + U_b) - T_f
//! V   = (c Π - U_hat)² / U_b,   U_hat = k theta_hat² / 2
//! ```
//!
//! All three energies are constant along a flow arc, and so is `V`.

use serde::{Deserialize, Serialize};

pub use crate::dynamics::total_energy;
use crate::dynamics::{State, SystemParams};
use crate::error::{Error, Result};
use crate::events::{time_back_to_c0, time_to_d, CrossingResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySplit {
    /// Backward kinetic energy `T_b` (J).
    pub t_b: f64,
    /// Backward potential energy `U_b` (J).
    pub u_b: f64,
    /// Forward kinetic energy `T_f` (J).
    pub t_f: f64,
    /// Damping coefficient, kept to convert energies into areas.
    pub c: f64,
    /// Injected potential energy `k theta_hat² / 2` (J).
    pub u_hat: f64,
    /// Backward crossing with `C0`.
    pub back: CrossingResult,
    /// Forward crossing with `D`.
    pub fwd: CrossingResult,
}

impl EnergySplit {
    /// Total energy right after the last jump.
    pub fn e_b(&self) -> f64 {
        self.t_b + self.u_b
    }

    /// Total energy right before the next jump.
    pub fn e_f(&self) -> f64 {
        self.t_f
    }

    /// Energy dissipated along the arc, `E_b - E_f = c Π`.
    pub fn dissipated(&self) -> f64 {
        self.e_b() - self.e_f()
    }

    /// Dissipation area `Π`.
    pub fn pi(&self) -> f64 {
        self.dissipated() / self.c
    }

    /// Full arc duration from `C0` to `D`.
    pub fn arc_duration(&self) -> f64 {
        self.back.tau + self.fwd.tau
    }

    /// Energy balance residual `T_b + U_b - T_f - U_hat`, zero on the orbit.
    pub fn balance_residual(&self) -> f64 {
        self.e_b() - self.e_f() - self.u_hat
    }

    /// `V` written as `(c Π - U_hat)² / U_b`.
    pub fn lyapunov(&self) -> f64 {
        let excess = self.c * self.pi() - self.u_hat;
        excess * excess / self.u_b
    }

    /// `V` written directly in the energies, `(U_b + T_b - T_f - U_hat)² / U_b`.
    pub fn lyapunov_direct(&self) -> f64 {
        let r = self.u_b + self.t_b - self.t_f - self.u_hat;
        r * r / self.u_b
    }
}

fn check_domain(p: &SystemParams, x: State) -> Result<()> {
    if x.is_origin() || !x.is_finite() || !p.in_flow_set(x) {
        return Err(Error::DomainError { x1: x.x1, x2: x.x2 });
    }
    Ok(())
}

/// Backward/forward energies of the flow arc through `x`.
pub fn energy_split(p: &SystemParams, x: State) -> Result<EnergySplit> {
    if x.is_origin() {
        return Err(Error::OriginInput);
    }
    check_domain(p, x)?;
    let back = time_back_to_c0(p, x)?;
    let fwd = time_to_d(p, x)?;
    Ok(EnergySplit {
        t_b: 0.5 * p.m() * back.state.x2 * back.state.x2,
        u_b: 0.5 * p.k() * back.state.x1 * back.state.x1,
        t_f: 0.5 * p.m() * fwd.state.x2 * fwd.state.x2,
        c: p.c(),
        u_hat: p.u_hat(),
        back,
        fwd,
    })
}

/// Lyapunov function `V` on `C ∪ D \ {0}`.
pub fn lyapunov(p: &SystemParams, x: State) -> Result<f64> {
    check_domain(p, x)?;
    Ok(energy_split(p, x)?.lyapunov())
}

/// `∫ x2(t)² dt` over the flow arc through `x`, from its backward `C0`
/// crossing to its forward `D` crossing, by the composite trapezoid rule
/// with `n_steps` uniform substeps on the exact flow.
///
/// Multiplied by `c` this is the energy removed by the damper, so it checks
/// `Π` independently of the energy difference.
pub fn dissipation_area_oracle(p: &SystemParams, x: State, n_steps: usize) -> Result<f64> {
    if n_steps < 100 {
        return Err(Error::InvalidArgument(format!(
            "n_steps must be at least 100, got {n_steps}"
        )));
    }
    let split = energy_split(p, x)?;
    Ok(trapezoid_area(p, split.back.state, split.arc_duration(), n_steps))
}

pub(crate) fn trapezoid_area(p: &SystemParams, start: State, duration: f64, n_steps: usize) -> f64 {
    if duration == 0.0 {
        return 0.0;
    }
    let h = duration / n_steps as f64;
    let sq = |i: usize| {
        let y = p.propagate(start, i as f64 * h);
        y.x2 * y.x2
    };
    let interior: f64 = (1..n_steps).map(sq).sum();
    h * (0.5 * sq(0) + interior + 0.5 * sq(n_steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::Piece;
    use proptest::prelude::*;

    fn nominal_params() -> SystemParams {
        SystemParams::new(1.0, 0.3, 1.0, 0.2).unwrap()
    }

    #[test]
    fn total_energy_examples() {
        let p = nominal_params();
        assert_eq!(total_energy(&p, State::ORIGIN), 0.0);
        assert!((total_energy(&p, State::new(0.2, 0.0)) - 0.02).abs() < 1e-16);
    }

    #[test]
    fn corner_split() {
        let p = nominal_params();
        let s = energy_split(&p, State::new(0.2, 0.0)).unwrap();
        assert_eq!(s.t_b, 0.0);
        assert!((s.u_b - 0.02).abs() < 1e-16);
        assert_eq!(s.back.tau, 0.0);
        let fwd = time_to_d(&p, State::new(0.2, 0.0)).unwrap();
        assert_eq!(s.t_f, 0.5 * fwd.state.x2 * fwd.state.x2);
        assert!(s.dissipated() > 0.0);
        // c Π0 stays below the injected energy
        assert!(s.dissipated() < p.u_hat());
    }

    #[test]
    fn wedge_and_origin_are_outside_domain() {
        let p = nominal_params();
        assert!(matches!(lyapunov(&p, State::new(0.1, 0.05)), Err(Error::DomainError { .. })));
        assert!(matches!(lyapunov(&p, State::ORIGIN), Err(Error::DomainError { .. })));
        assert!(matches!(energy_split(&p, State::new(-0.1, -0.05)), Err(Error::DomainError { .. })));
        assert!(matches!(energy_split(&p, State::ORIGIN), Err(Error::OriginInput)));
    }

    #[test]
    fn both_lyapunov_forms_agree() {
        let p = nominal_params();
        let s = energy_split(&p, State::new(0.1, -0.05)).unwrap();
        let v = s.lyapunov();
        assert!(v > 0.0);
        assert!((v - s.lyapunov_direct()).abs() <= 1e-12 * v);
        assert_eq!(s.back.piece, Piece::C0Horizontal);
    }

    #[test]
    fn lyapunov_blows_up_at_origin() {
        let p = nominal_params();
        // start inside the orbit, where V grows toward the origin
        let values: Vec<f64> = (4..=16)
            .map(|k| {
                let s = 0.5f64.powi(k);
                lyapunov(&p, State::new(s, -s)).unwrap()
            })
            .collect();
        for w in values.windows(2) {
            assert!(w[1] > w[0]);
        }
        for w in values.windows(3) {
            assert!(w[2] >= 2.0 * w[0]);
        }
        assert!(values.last().unwrap() > &1e3);
    }

    #[test]
    fn area_increases_along_vertical_piece() {
        let p = nominal_params();
        let areas: Vec<f64> = [0.1, 0.2, 0.4, 0.8]
            .iter()
            .map(|&v| dissipation_area_oracle(&p, State::new(0.2, v), 20_000).unwrap())
            .collect();
        for w in areas.windows(2) {
            assert!(w[1] > w[0], "{areas:?}");
        }
    }

    #[test]
    fn oracle_rejects_coarse_grids() {
        let p = nominal_params();
        assert!(matches!(
            dissipation_area_oracle(&p, State::new(0.2, 0.1), 99),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn trapezoid_is_second_order() {
        let p = nominal_params();
        let x = State::new(0.2, 0.0);
        let exact = energy_split(&p, x).unwrap().pi();
        let err = |n| (dissipation_area_oracle(&p, x, n).unwrap() - exact).abs();
        let (e1, e2, e3) = (err(100), err(200), err(400));
        assert!((e1 / e2 - 4.0).abs() < 0.2, "{e1} {e2}");
        assert!((e2 / e3 - 4.0).abs() < 0.2, "{e2} {e3}");
    }

    fn arb_domain_state() -> impl Strategy<Value = State> {
        (-2.0..2.0f64, -2.0..2.0f64)
            .prop_map(|(a, b)| State::new(a, b))
            .prop_filter("in C away from origin", |x| {
                nominal_params().in_flow_set(*x) && x.norm() >= 0.05
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn split_invariants(x in arb_domain_state()) {
            let p = nominal_params();
            let s = energy_split(&p, x).unwrap();
            prop_assert!(s.t_b >= 0.0 && s.u_b > 0.0 && s.t_f >= 0.0);
            prop_assert!(s.u_b <= p.u_hat() * (1.0 + 1e-12));
            prop_assert!(s.dissipated() >= 0.0);
            let m = energy_split(&p, -x).unwrap();
            prop_assert_eq!((m.t_b, m.u_b, m.t_f), (s.t_b, s.u_b, s.t_f));
            let v = s.lyapunov();
            prop_assert!((lyapunov(&p, -x).unwrap() - v).abs() <= 1e-15 * v.max(1.0));
        }

        #[test]
        fn damping_work_equals_energy_drop(x in arb_domain_state()) {
            let p = nominal_params();
            let s = energy_split(&p, x).unwrap();
            let area = dissipation_area_oracle(&p, x, 100_000).unwrap();
            prop_assert!((p.c() * area - s.dissipated()).abs() <= 1e-6 * s.e_b());
        }

        #[test]
        fn lyapunov_is_constant_on_flow_arcs(x in arb_domain_state(), frac in 0.0..1.0f64) {
            let p = nominal_params();
            let s = energy_split(&p, x).unwrap();
            let dt = frac * s.fwd.tau;
            prop_assume!(dt > 0.0);
            let v0 = s.lyapunov();
            let v1 = lyapunov(&p, p.propagate(x, dt)).unwrap();
            prop_assert!((v1 - v0).abs() <= 1e-8 * v0.max(1.0), "{} vs {}", v0, v1);
        }
    }
}
