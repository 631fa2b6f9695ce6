//! Physical parameters, the exact underdamped flow and the set predicates.
//!
//! Coordinates are `x1 = q - θ` (spring deflection) and `x2 = q'` (velocity).
//! The flow set is
//!
//! ```text
//! C = { x1 x2 <= 0 } ∪ { |x1| >= theta_hat, x1 x2 >= 0 }
//! ```
//!
//! the jump set is the line `D = { x1 = 0 }`, and the jump map sends
//! `(0, x2)` to `(theta_hat SGN(x2), x2)`.

use std::f64::consts::PI;
use std::ops::Neg;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the phase plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    /// Spring deflection (m).
    pub x1: f64,
    /// Velocity (m/s).
    pub x2: f64,
}

impl State {
    pub const ORIGIN: State = State { x1: 0.0, x2: 0.0 };

    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    pub fn is_origin(&self) -> bool {
        self.x1 == 0.0 && self.x2 == 0.0
    }

    pub fn norm(&self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn distance(&self, other: State) -> f64 {
        (self.x1 - other.x1).hypot(self.x2 - other.x2)
    }

    /// Largest componentwise absolute difference.
    pub fn max_abs_diff(&self, other: State) -> f64 {
        (self.x1 - other.x1).abs().max((self.x2 - other.x2).abs())
    }
}

impl Neg for State {
    type Output = State;

    fn neg(self) -> State {
        State::new(-self.x1, -self.x2)
    }
}

impl From<[f64; 2]> for State {
    fn from(v: [f64; 2]) -> Self {
        State::new(v[0], v[1])
    }
}

/// Branch of the set-valued `SGN` at `x2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// The conjugate pair `re ± i im`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPair {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawParams {
    m: f64,
    c: f64,
    k: f64,
    theta_hat: f64,
}

/// Validated physical constants of the oscillator and the reset offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct SystemParams {
    m: f64,
    c: f64,
    k: f64,
    theta_hat: f64,
    sigma: f64,
    omega_d: f64,
}

impl TryFrom<RawParams> for SystemParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        SystemParams::new(raw.m, raw.c, raw.k, raw.theta_hat)
    }
}

impl From<SystemParams> for RawParams {
    fn from(p: SystemParams) -> Self {
        RawParams {
            m: p.m,
            c: p.c,
            k: p.k,
            theta_hat: p.theta_hat,
        }
    }
}

impl SystemParams {
    /// Validates the constants and derives `sigma = c/2m` and
    /// `omega_d = sqrt(k/m - sigma²)`.
    pub fn new(m: f64, c: f64, k: f64, theta_hat: f64) -> Result<Self> {
        for (name, value) in [("m", m), ("c", c), ("k", k), ("theta_hat", theta_hat)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NonPositiveParameter { name, value });
            }
        }
        let sigma = c / (2.0 * m);
        let k_over_m = k / m;
        let sigma_sq = sigma * sigma;
        if sigma_sq >= k_over_m {
            return Err(Error::NotUnderdamped { sigma_sq, k_over_m });
        }
        Ok(Self {
            m,
            c,
            k,
            theta_hat,
            sigma,
            omega_d: (k_over_m - sigma_sq).sqrt(),
        })
    }

    /// Same oscillator with another reset offset.
    pub fn with_theta_hat(&self, theta_hat: f64) -> Result<Self> {
        Self::new(self.m, self.c, self.k, theta_hat)
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn theta_hat(&self) -> f64 {
        self.theta_hat
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn omega_d(&self) -> f64 {
        self.omega_d
    }

    /// Damped period `2π / omega_d`.
    pub fn damped_period(&self) -> f64 {
        2.0 * PI / self.omega_d
    }

    /// Potential energy injected by one reset, `k theta_hat² / 2`.
    pub fn u_hat(&self) -> f64 {
        0.5 * self.k * self.theta_hat * self.theta_hat
    }

    pub fn eigenvalues(&self) -> ComplexPair {
        ComplexPair {
            re: -self.sigma,
            im: self.omega_d,
        }
    }

    /// Vector field of the flow.
    pub fn flow_map(&self, x: State) -> State {
        State::new(x.x2, -(self.c / self.m) * x.x2 - (self.k / self.m) * x.x1)
    }

    /// Exact solution of the linear flow after `dt` seconds (negative `dt`
    /// flows backward):
    ///
    /// `e^{A dt} = e^{-σ dt} [cos(ω dt) I + sin(ω dt)/ω (A + σ I)]`.
    pub fn propagate(&self, x: State, dt: f64) -> State {
        if dt == 0.0 {
            return x;
        }
        let (s, co) = (self.omega_d * dt).sin_cos();
        let envelope = (-self.sigma * dt).exp();
        let sw = s / self.omega_d;
        let k_over_m = self.k / self.m;
        let x1 = co * x.x1 + sw * (self.sigma * x.x1 + x.x2);
        let x2 = co * x.x2 - sw * (k_over_m * x.x1 + self.sigma * x.x2);
        State::new(envelope * x1, envelope * x2)
    }

    /// Membership in the flow set `C`.
    pub fn in_flow_set(&self, x: State) -> bool {
        let prod = x.x1 * x.x2;
        prod <= 0.0 || x.x1.abs() >= self.theta_hat
    }

    /// Membership in the `⊐`-shaped curve `C0` of post-jump and turning states.
    pub fn in_c0(&self, x: State) -> bool {
        let vertical = x.x1.abs() == self.theta_hat && x.x1 * x.x2 >= 0.0;
        let horizontal = x.x1.abs() <= self.theta_hat && x.x2 == 0.0;
        vertical || horizontal
    }

    /// Applies the jump map `(0, x2) -> (theta_hat SGN(x2), x2)`.
    ///
    /// `branch` selects the value of `SGN(0)` and is only consulted when
    /// `x2 == 0`. The caller is responsible for `x` being in `D`.
    pub fn apply_jump(&self, x: State, branch: Option<Branch>) -> Result<State> {
        let sign = if x.x2 > 0.0 {
            1.0
        } else if x.x2 < 0.0 {
            -1.0
        } else {
            branch.ok_or(Error::MissingBranch)?.sign()
        };
        Ok(State::new(self.theta_hat * sign, x.x2))
    }
}

/// Membership in the jump set `D = { x1 = 0 }`.
pub fn in_jump_set(x: State) -> bool {
    x.x1 == 0.0
}

/// Total mechanical energy `m x2²/2 + k x1²/2`.
pub fn total_energy(p: &SystemParams, x: State) -> f64 {
    0.5 * p.m() * x.x2 * x.x2 + 0.5 * p.k() * x.x1 * x.x1
}
