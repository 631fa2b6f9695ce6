use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dynamics::{State, SystemParams};
use crate::error::{Error, Result};
use crate::hybridsim::{OriginPolicy, ResetLaw, SimOptions};
use crate::verify::CertConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamsSpec {
    pub m: f64,
    pub c: f64,
    pub k: f64,
    pub theta_hat: f64,
}

impl Default for ParamsSpec {
    fn default() -> Self {
        Self {
            m: 1.0,
            c: 0.3,
            k: 1.0,
            theta_hat: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LawKind {
    #[default]
    Centered,
    Offset,
}

/// Rectangular grid for the Lyapunov field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
    pub n1: usize,
    pub n2: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x1_min: -1.0,
            x1_max: 1.0,
            x2_min: -1.0,
            x2_max: 1.0,
            n1: 200,
            n2: 200,
        }
    }
}

impl GridSpec {
    fn axis(min: f64, max: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.5 * (min + max)];
        }
        (0..n).map(|i| min + (max - min) * i as f64 / (n - 1) as f64).collect()
    }

    pub fn x1_values(&self) -> Vec<f64> {
        Self::axis(self.x1_min, self.x1_max, self.n1)
    }

    pub fn x2_values(&self) -> Vec<f64> {
        Self::axis(self.x2_min, self.x2_max, self.n2)
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.x1_min, self.x1_max, self.x2_min, self.x2_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x1_min >= self.x1_max || self.x2_min >= self.x2_max || self.n1 == 0 || self.n2 == 0 {
            return Err(Error::InvalidArgument(format!("invalid grid {self:?}")));
        }
        Ok(())
    }
}

/// One self-describing run configuration, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub params: ParamsSpec,
    pub law: LawKind,
    pub eps_phi: f64,
    pub initial_conditions: Vec<[f64; 2]>,
    /// `None` means no ordinary-time limit.
    pub t_max: Option<f64>,
    pub j_max: usize,
    pub sample_dt: Option<f64>,
    pub origin_policy: OriginPolicy,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub grid: GridSpec,
    pub verify: CertConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ParamsSpec::default(),
            law: LawKind::Centered,
            eps_phi: 0.2,
            initial_conditions: vec![[0.1, -0.05], [0.5, -0.05]],
            t_max: None,
            j_max: 30,
            sample_dt: None,
            origin_policy: OriginPolicy::Flow,
            seed: 42,
            out_dir: PathBuf::from("out"),
            grid: GridSpec::default(),
            verify: CertConfig::default(),
        }
    }
}

/// A configuration whose physical content has been validated.
#[derive(Debug, Clone)]
pub struct Validated {
    pub config: RunConfig,
    pub params: SystemParams,
    pub law: ResetLaw,
    pub initial: Vec<State>,
    pub sim: SimOptions,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))
    }

    pub fn validate(self) -> Result<Validated> {
        let ps = self.params;
        let params = SystemParams::new(ps.m, ps.c, ps.k, ps.theta_hat)?;
        let law = match self.law {
            LawKind::Centered => ResetLaw::Centered,
            LawKind::Offset => ResetLaw::Offset { eps_phi: self.eps_phi },
        };
        law.validate(&params)?;
        if self.initial_conditions.is_empty() {
            return Err(Error::InvalidArgument("no initial conditions".into()));
        }
        let initial: Vec<State> = self.initial_conditions.iter().map(|&v| State::from(v)).collect();
        for x in &initial {
            if !x.is_finite() || !(law.in_flow_set(&params, *x) || law.in_jump_set(*x)) {
                return Err(Error::InvalidStart { x1: x.x1, x2: x.x2 });
            }
        }
        let t_max = match self.t_max {
            None => f64::INFINITY,
            Some(t) if t >= 0.0 && t.is_finite() => t,
            Some(t) => return Err(Error::InvalidArgument(format!("t_max must be non-negative, got {t}"))),
        };
        if let Some(dt) = self.sample_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidArgument(format!("sample step must be positive, got {dt}")));
            }
        }
        self.grid.validate()?;
        let sim = SimOptions {
            t_max,
            j_max: self.j_max,
            origin_policy: self.origin_policy,
            sample_dt: self.sample_dt,
        };
        Ok(Validated {
            config: self,
            params,
            law,
            initial,
            sim,
        })
    }
}
