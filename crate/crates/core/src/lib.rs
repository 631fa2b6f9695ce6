//! Reset-controlled mass-spring-damper as a planar hybrid system.
//!
//! The flow is the underdamped linear oscillator `m q'' + c q' + k (q - θ) = 0`
//! in the coordinates `x1 = q - θ`, `x2 = q'`. Whenever the deflection `x1`
//! reaches zero the spring rest position is switched, which resets `|x1|` to
//! `theta_hat` and injects `k theta_hat² / 2` of potential energy. Damping
//! and resets balance on a unique periodic orbit; this crate computes that
//! orbit, simulates hybrid arcs, evaluates the energy-based Lyapunov function
//! and runs sampling checks of its decrease properties.
//!
//! Module map:
//!
//! - [`dynamics`]: parameters, exact linear flow, flow/jump set predicates.
//! - [`events`]: first crossings of the jump set (forward) and of `C0` (backward).
//! - [`energy`]: backward/forward energies, dissipation area, Lyapunov function.
//! - [`orbit`]: the periodic orbit and distances to it.
//! - [`hybridsim`]: hybrid arcs for the centered and offset reset laws.
//! - [`verify`]: batch certification reports.
//! - [`cli`]: the `reset-orbit` command line front end.

pub mod cli;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod events;
pub mod hybridsim;
pub mod orbit;
pub mod verify;

pub use dynamics::{Branch, ComplexPair, State, SystemParams};
pub use energy::EnergySplit;
pub use error::{Error, Result};
pub use events::{CrossingResult, Piece};
pub use hybridsim::{HybridArc, OriginPolicy, ResetLaw, SimOptions};
pub use orbit::OrbitSolution;
pub use verify::CertReport;
