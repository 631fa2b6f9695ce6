//! Forward simulation of hybrid arcs.
//!
//! Flows use the exact linear solution and stop at the first point of the
//! jump set, where the simulator always jumps. Two reset laws are available:
//!
//! - `Centered`: jump on `x1 = 0` to `(theta_hat SGN(x2), x2)`.
//! - `Offset`: jump on `x1 = -eps_phi sign(x2)` to `(x1 + theta_hat sign(x2), x2)`.
//!   The flow set is the complement of the two open wedges skipped by the
//!   jump, `{x2 > 0, -eps_phi < x1 < theta_hat - eps_phi}` and its mirror
//!   image, which reduces to the centered flow set when `eps_phi = 0`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dynamics::{in_jump_set, Branch, State, SystemParams};
use crate::error::{Error, Result};
use crate::events::{time_to_d, time_to_offset_guard, CrossingResult};
use crate::orbit::OrbitSolution;

/// Samples per flow segment when no fixed sampling step is requested.
pub const DEFAULT_SEGMENT_SAMPLES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResetLaw {
    Centered,
    Offset { eps_phi: f64 },
}

impl ResetLaw {
    pub fn validate(&self, p: &SystemParams) -> Result<()> {
        match *self {
            ResetLaw::Centered => Ok(()),
            ResetLaw::Offset { eps_phi } => {
                if !(eps_phi > 0.0 && eps_phi.is_finite()) {
                    Err(Error::InvalidResetLaw(format!("eps_phi must be positive, got {eps_phi}")))
                } else if p.theta_hat() < 2.0 * eps_phi {
                    Err(Error::InvalidResetLaw(format!(
                        "theta_hat = {} must be at least 2 eps_phi = {}",
                        p.theta_hat(),
                        2.0 * eps_phi
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn in_flow_set(&self, p: &SystemParams, x: State) -> bool {
        match *self {
            ResetLaw::Centered => p.in_flow_set(x),
            ResetLaw::Offset { eps_phi } => {
                let reach = p.theta_hat() - eps_phi;
                let right_wedge = x.x2 > 0.0 && x.x1 > -eps_phi && x.x1 < reach;
                let left_wedge = x.x2 < 0.0 && x.x1 < eps_phi && x.x1 > -reach;
                !(right_wedge || left_wedge)
            }
        }
    }

    pub fn in_jump_set(&self, x: State) -> bool {
        match *self {
            ResetLaw::Centered => in_jump_set(x),
            ResetLaw::Offset { eps_phi } => {
                (x.x1 == -eps_phi && x.x2 >= 0.0) || (x.x1 == eps_phi && x.x2 <= 0.0)
            }
        }
    }

    /// Jump map; `branch` resolves the sign of a zero velocity.
    pub fn jump(&self, p: &SystemParams, x: State, branch: Option<Branch>) -> Result<State> {
        match *self {
            ResetLaw::Centered => p.apply_jump(x, branch),
            ResetLaw::Offset { .. } => {
                let sign = if x.x2 > 0.0 {
                    1.0
                } else if x.x2 < 0.0 {
                    -1.0
                } else {
                    branch.ok_or(Error::MissingBranch)?.sign()
                };
                Ok(State::new(x.x1 + p.theta_hat() * sign, x.x2))
            }
        }
    }

    fn next_jump(&self, p: &SystemParams, x: State) -> Result<CrossingResult> {
        match *self {
            ResetLaw::Centered => time_to_d(p, x),
            ResetLaw::Offset { eps_phi } => time_to_offset_guard(p, x, eps_phi),
        }
    }
}

/// What to do at a jump-set state with zero velocity (the origin for the
/// centered law).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OriginPolicy {
    /// Stay at rest until `t_max`.
    #[default]
    Flow,
    JumpPlus,
    JumpMinus,
}

impl OriginPolicy {
    fn branch(self) -> Option<Branch> {
        match self {
            OriginPolicy::Flow => None,
            OriginPolicy::JumpPlus => Some(Branch::Plus),
            OriginPolicy::JumpMinus => Some(Branch::Minus),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Ordinary-time limit; `f64::INFINITY` leaves only the jump limit.
    pub t_max: f64,
    /// Maximum number of jumps.
    pub j_max: usize,
    pub origin_policy: OriginPolicy,
    /// Fixed sampling step for the polylines; `None` uses
    /// [`DEFAULT_SEGMENT_SAMPLES`] per segment.
    pub sample_dt: Option<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            t_max: f64::INFINITY,
            j_max: 100,
            origin_policy: OriginPolicy::Flow,
            sample_dt: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: State,
}

/// Flow on `[t_start, t_end] x {j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub j: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub samples: Vec<Sample>,
    pub end: State,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Jump from `(t, j)` to `(t, j + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub t: f64,
    pub j: usize,
    pub pre: State,
    pub post: State,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridArc {
    pub initial: State,
    pub segments: Vec<Segment>,
    pub jumps: Vec<Jump>,
}

impl HybridArc {
    /// Hybrid time domain as `(t_j, t_{j+1}, j)` intervals.
    pub fn domain(&self) -> Vec<(f64, f64, usize)> {
        self.segments.iter().map(|s| (s.t_start, s.t_end, s.j)).collect()
    }

    /// Ordinary times of the jumps with the jump counter before each jump.
    pub fn jump_times(&self) -> Vec<(f64, usize)> {
        self.jumps.iter().map(|jmp| (jmp.t, jmp.j)).collect()
    }

    pub fn final_state(&self) -> State {
        self.segments.last().map_or(self.initial, |s| s.end)
    }

    /// Every sample in hybrid-time order as `(t, j, x)`.
    pub fn rows(&self) -> impl Iterator<Item = (f64, usize, State)> + '_ {
        self.segments
            .iter()
            .flat_map(|s| s.samples.iter().map(move |smp| (smp.t, s.j, smp.x)))
    }

    /// Checks the structural invariants of a hybrid arc.
    pub fn validate(&self, law: &ResetLaw) -> Result<()> {
        let fail = |msg: String| Err(Error::Format(msg));
        if self.segments.is_empty() {
            return fail("arc has no segments".into());
        }
        if self.segments.len() != self.jumps.len() + 1 {
            return fail(format!(
                "{} segments but {} jumps",
                self.segments.len(),
                self.jumps.len()
            ));
        }
        if self.segments[0].t_start != 0.0 || self.segments[0].samples.first().map(|s| s.x) != Some(self.initial) {
            return fail("first segment does not start at the initial state".into());
        }
        for (idx, seg) in self.segments.iter().enumerate() {
            if seg.j != idx || seg.t_end.partial_cmp(&seg.t_start).is_none_or(|o| o.is_lt()) {
                return fail(format!("segment {idx} has an invalid domain"));
            }
            if seg.samples.is_empty() || seg.samples.last().map(|s| s.x) != Some(seg.end) {
                return fail(format!("segment {idx} samples do not end at its end state"));
            }
            if seg.samples.windows(2).any(|w| w[1].t < w[0].t) {
                return fail(format!("segment {idx} samples are not ordered in time"));
            }
        }
        for (idx, jmp) in self.jumps.iter().enumerate() {
            let before = &self.segments[idx];
            let after = &self.segments[idx + 1];
            if jmp.j != idx || jmp.t != before.t_end || after.t_start != jmp.t {
                return fail(format!("jump {idx} is misplaced in hybrid time"));
            }
            if jmp.pre != before.end || after.samples[0].x != jmp.post {
                return fail(format!("jump {idx} does not connect its segments"));
            }
            if !law.in_jump_set(jmp.pre) {
                return fail(format!("jump {idx} starts outside the jump set"));
            }
        }
        Ok(())
    }

    /// CSV with header `t,j,x1,x2`, numbers with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,j,x1,x2\n");
        for (t, j, x) in self.rows() {
            let _ = writeln!(out, "{},{},{},{}", fmt_f64(t), j, fmt_f64(x.x1), fmt_f64(x.x2));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Locale-independent float formatting with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn sample_segment(p: &SystemParams, start: State, t0: f64, duration: f64, end: State, opts: &SimOptions) -> Vec<Sample> {
    if duration == 0.0 {
        return vec![Sample { t: t0, x: end }];
    }
    let n = match opts.sample_dt {
        Some(dt) => ((duration / dt).ceil() as usize).max(1),
        None => DEFAULT_SEGMENT_SAMPLES,
    };
    let mut samples: Vec<Sample> = (0..n)
        .map(|i| {
            let s = duration * i as f64 / n as f64;
            Sample { t: t0 + s, x: p.propagate(start, s) }
        })
        .collect();
    samples.push(Sample { t: t0 + duration, x: end });
    samples
}

/// Simulates one hybrid arc from `x0`.
pub fn simulate(p: &SystemParams, law: &ResetLaw, x0: State, opts: &SimOptions) -> Result<HybridArc> {
    law.validate(p)?;
    if !x0.is_finite() || (!law.in_flow_set(p, x0) && !law.in_jump_set(x0)) {
        return Err(Error::InvalidStart { x1: x0.x1, x2: x0.x2 });
    }
    if opts.t_max.is_nan() || opts.t_max < 0.0 {
        return Err(Error::InvalidArgument(format!("t_max must be non-negative, got {}", opts.t_max)));
    }
    if let Some(dt) = opts.sample_dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("sample_dt must be positive, got {dt}")));
        }
    }

    let mut segments = Vec::new();
    let mut jumps = Vec::new();
    let mut x = x0;
    let mut t = 0.0;
    let mut j = 0usize;

    loop {
        let at_rest_on_guard = law.in_jump_set(x) && x.x2 == 0.0;
        // (duration to the jump set, pre-jump state); None means no jump ahead
        let target: Option<(f64, State)> = if law.in_jump_set(x) {
            if at_rest_on_guard && opts.origin_policy == OriginPolicy::Flow {
                None
            } else {
                Some((0.0, x))
            }
        } else if x.is_origin() {
            None
        } else {
            let hit = law.next_jump(p, x)?;
            Some((hit.tau, hit.state))
        };

        let (duration, end, reached) = match target {
            Some((tau, pre)) if t + tau <= opts.t_max => (tau, pre, true),
            Some(_) | None => {
                if !opts.t_max.is_finite() {
                    return Err(Error::InvalidArgument(
                        "t_max must be finite when the solution can rest forever".into(),
                    ));
                }
                let remaining = opts.t_max - t;
                (remaining, p.propagate(x, remaining), false)
            }
        };

        segments.push(Segment {
            j,
            t_start: t,
            t_end: t + duration,
            samples: sample_segment(p, x, t, duration, end, opts),
            end,
        });
        t += duration;

        if !reached || j >= opts.j_max {
            break;
        }
        let post = law.jump(p, end, opts.origin_policy.branch())?;
        jumps.push(Jump { t, j, pre: end, post });
        j += 1;
        x = post;
    }

    Ok(HybridArc {
        initial: x0,
        segments,
        jumps,
    })
}

/// One period of the orbit as a hybrid arc starting at `(theta_hat, v*)`:
/// two flows, two jumps, and a zero-length final segment at the start state.
pub fn periodic_arc(p: &SystemParams, orbit: &OrbitSolution) -> Result<HybridArc> {
    let x0 = State::new(p.theta_hat(), orbit.v_star);
    let opts = SimOptions {
        j_max: 1,
        ..SimOptions::default()
    };
    let mut arc = simulate(p, &ResetLaw::Centered, x0, &opts)?;
    let last = arc.segments.last().cloned().ok_or(Error::MissingBranch)?;
    let post = ResetLaw::Centered.jump(p, last.end, None)?;
    arc.jumps.push(Jump {
        t: last.t_end,
        j: last.j,
        pre: last.end,
        post,
    });
    arc.segments.push(Segment {
        j: last.j + 1,
        t_start: last.t_end,
        t_end: last.t_end,
        samples: vec![Sample { t: last.t_end, x: post }],
        end: post,
    });
    Ok(arc)
}

/// Ordinary times of the jumps with their counters.
pub fn jump_times(arc: &HybridArc) -> Vec<(f64, usize)> {
    arc.jump_times()
}
