//! First crossings of the exact flow with the jump set and with `C0`.
//!
//! The flow is marched with a fixed step of 1/256 of a damped period to
//! bracket sign changes, then roots are refined by bisection. Within one
//! step `x1` has at most one extremum, located where `x2` changes sign, so
//! each step is split there first; that catches pairs of `x1 = const` roots
//! straddling a turning point.

use serde::{Deserialize, Serialize};

use crate::dynamics::{State, SystemParams};
use crate::error::{Error, Result};

/// Slack used when a bracket touches zero without a sign change and when
/// checking the side conditions of a crossing.
pub const EVENT_ATOL: f64 = 1e-11;

/// Scan steps per damped period.
pub const SCAN_STEPS_PER_PERIOD: usize = 256;

/// Search horizon in damped periods.
pub const HORIZON_PERIODS: f64 = 50.0;

const TIME_RTOL: f64 = 1e-13;

/// Which piece of a set a crossing landed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Piece {
    /// The jump set `x1 = 0`.
    D,
    /// `x1 = +theta_hat`, `x2 >= 0`.
    C0VerticalPlus,
    /// `x1 = -theta_hat`, `x2 <= 0`.
    C0VerticalMinus,
    /// `x2 = 0`, `|x1| <= theta_hat`.
    C0Horizontal,
    /// Offset-law guard `x1 = -eps_phi` reached with `x2 >= 0`.
    GuardPlus,
    /// Offset-law guard `x1 = +eps_phi` reached with `x2 <= 0`.
    GuardMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingResult {
    /// Flow duration to the crossing, always `>= 0` whichever the direction.
    pub tau: f64,
    pub state: State,
    pub piece: Piece,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VelocitySide {
    Any,
    NonNegative,
    NonPositive,
}

impl VelocitySide {
    fn admits(self, x2: f64) -> bool {
        match self {
            VelocitySide::Any => true,
            VelocitySide::NonNegative => x2 >= -EVENT_ATOL,
            VelocitySide::NonPositive => x2 <= EVENT_ATOL,
        }
    }

    fn admits_exact(self, x2: f64) -> bool {
        match self {
            VelocitySide::Any => true,
            VelocitySide::NonNegative => x2 >= 0.0,
            VelocitySide::NonPositive => x2 <= 0.0,
        }
    }
}

/// A line of the phase plane restricted by a side condition.
#[derive(Debug, Clone, Copy)]
enum Surface {
    /// `x1 = at`, admitted when the velocity lies on `side`.
    Vertical {
        at: f64,
        side: VelocitySide,
        piece: Piece,
    },
    /// `x2 = 0`, admitted when `|x1| <= half_width`.
    Horizontal { half_width: f64, piece: Piece },
}

impl Surface {
    fn value(&self, x: State) -> f64 {
        match *self {
            Surface::Vertical { at, .. } => x.x1 - at,
            Surface::Horizontal { .. } => x.x2,
        }
    }

    fn piece(&self) -> Piece {
        match *self {
            Surface::Vertical { piece, .. } | Surface::Horizontal { piece, .. } => piece,
        }
    }

    fn contains_exact(&self, x: State) -> bool {
        match *self {
            Surface::Vertical { at, side, .. } => x.x1 == at && side.admits_exact(x.x2),
            Surface::Horizontal { half_width, .. } => x.x2 == 0.0 && x.x1.abs() <= half_width,
        }
    }

    /// Snaps a refined root onto the surface and checks the side condition.
    fn admit(&self, x: State) -> Option<State> {
        match *self {
            Surface::Vertical { at, side, .. } => side.admits(x.x2).then(|| State::new(at, x.x2)),
            Surface::Horizontal { half_width, .. } => {
                (x.x1.abs() <= half_width + EVENT_ATOL).then(|| State::new(x.x1, 0.0))
            }
        }
    }
}

fn horizon(p: &SystemParams) -> f64 {
    HORIZON_PERIODS * p.damped_period()
}

/// Bisection on `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    let tol = TIME_RTOL * hi.abs().max(1.0);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Earliest admitted crossing of any surface along `propagate(x, direction * tau)`.
///
/// Surfaces earlier in the slice win ties.
fn locate(p: &SystemParams, x: State, direction: f64, surfaces: &[Surface]) -> Result<CrossingResult> {
    if x.is_origin() {
        return Err(Error::OriginInput);
    }
    if let Some(s) = surfaces.iter().find(|s| s.contains_exact(x)) {
        return Ok(CrossingResult {
            tau: 0.0,
            state: x,
            piece: s.piece(),
        });
    }

    let flow = |tau: f64| p.propagate(x, direction * tau);
    let horizon = horizon(p);
    let step = p.damped_period() / SCAN_STEPS_PER_PERIOD as f64;

    let mut a = 0.0;
    let mut ya = x;
    let mut index = 0usize;
    while a < horizon {
        index += 1;
        let b = (index as f64 * step).min(horizon);
        let yb = flow(b);
        if !yb.is_finite() {
            break;
        }

        // split at the turning point of x1, if any
        let mut knots = vec![(a, ya)];
        if ya.x2 * yb.x2 < 0.0 {
            let t_turn = bisect(|t| flow(t).x2, a, b, ya.x2);
            knots.push((t_turn, flow(t_turn)));
        }
        knots.push((b, yb));

        let mut best: Option<(f64, usize, State)> = None;
        for pair in knots.windows(2) {
            let (s0, y0) = pair[0];
            let (s1, y1) = pair[1];
            for (rank, surface) in surfaces.iter().enumerate() {
                let g0 = surface.value(y0);
                let g1 = surface.value(y1);
                let root = if g0 * g1 < 0.0 {
                    if matches!(surface, Surface::Horizontal { .. }) && knots.len() == 3 {
                        // the split point already is the x2 root
                        Some(knots[1].0)
                    } else {
                        Some(bisect(|t| surface.value(flow(t)), s0, s1, g0))
                    }
                } else if g1 == 0.0 || g1.abs() <= EVENT_ATOL {
                    // exact hit or tangency at the right end of the bracket
                    Some(s1)
                } else {
                    None
                };
                let Some(tau) = root else { continue };
                let Some(state) = surface.admit(flow(tau)) else { continue };
                let better = match best {
                    None => true,
                    Some((t_best, r_best, _)) => {
                        let tol = TIME_RTOL * tau.max(1.0);
                        tau < t_best - tol || ((tau - t_best).abs() <= tol && rank < r_best)
                    }
                };
                if better {
                    best = Some((tau, rank, state));
                }
            }
        }
        if let Some((tau, rank, state)) = best {
            return Ok(CrossingResult {
                tau,
                state,
                piece: surfaces[rank].piece(),
            });
        }
        a = b;
        ya = yb;
    }
    Err(Error::HorizonExceeded { horizon })
}

/// First forward-time intersection with the jump set `x1 = 0`.
pub fn time_to_d(p: &SystemParams, x: State) -> Result<CrossingResult> {
    locate(
        p,
        x,
        1.0,
        &[Surface::Vertical {
            at: 0.0,
            side: VelocitySide::Any,
            piece: Piece::D,
        }],
    )
}

/// First backward-time intersection with `C0`.
///
/// The returned `tau` is the positive backward duration, so
/// `propagate(state, tau)` recovers `x`.
pub fn time_back_to_c0(p: &SystemParams, x: State) -> Result<CrossingResult> {
    let th = p.theta_hat();
    locate(
        p,
        x,
        -1.0,
        &[
            Surface::Vertical {
                at: th,
                side: VelocitySide::NonNegative,
                piece: Piece::C0VerticalPlus,
            },
            Surface::Vertical {
                at: -th,
                side: VelocitySide::NonPositive,
                piece: Piece::C0VerticalMinus,
            },
            Surface::Horizontal {
                half_width: th,
                piece: Piece::C0Horizontal,
            },
        ],
    )
}

/// First forward-time intersection with the offset-law guard lines
/// `x1 = -eps_phi` (moving right) and `x1 = +eps_phi` (moving left).
pub fn time_to_offset_guard(p: &SystemParams, x: State, eps_phi: f64) -> Result<CrossingResult> {
    locate(
        p,
        x,
        1.0,
        &[
            Surface::Vertical {
                at: -eps_phi,
                side: VelocitySide::NonNegative,
                piece: Piece::GuardPlus,
            },
            Surface::Vertical {
                at: eps_phi,
                side: VelocitySide::NonPositive,
                piece: Piece::GuardMinus,
            },
        ],
    )
}
