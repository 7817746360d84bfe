use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    Antiderivative,
    DiffusionReaction,
    Burgers,
    Eikonal,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Antiderivative => "antiderivative",
            ProblemKind::DiffusionReaction => "diffusion_reaction",
            ProblemKind::Burgers => "burgers",
            ProblemKind::Eikonal => "eikonal",
        })
    }
}

impl FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "antiderivative" => Ok(ProblemKind::Antiderivative),
            "diffusion_reaction" => Ok(ProblemKind::DiffusionReaction),
            "burgers" => Ok(ProblemKind::Burgers),
            "eikonal" => Ok(ProblemKind::Eikonal),
            other => Err(Error::Config(format!("unknown benchmark `{other}`"))),
        }
    }
}

/// Physical constants, present exactly for the kinds that use them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Constants {
    None,
    DiffusionReaction { d: f64, k: f64 },
    Burgers { nu: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollocationSpec {
    /// Constraint points per sample.
    pub p: usize,
    /// Residual points per sample.
    pub q: usize,
    /// Half-width of the square sampling box for the Eikonal problem.
    pub box_half_width: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PdeProblem {
    pub kind: ProblemKind,
    pub constants: Constants,
    pub lambda_ic: f64,
    /// When false only the constraint terms are trained (conventional DeepONet).
    pub physics: bool,
    /// Eikonal only: weight of the penalty on `G` having the wrong sign
    /// inside or outside the curve. 0 leaves the plain residual loss.
    pub sign_weight: f64,
    pub collocation: CollocationSpec,
}

impl PdeProblem {
    pub fn antiderivative(m: usize) -> Self {
        Self::new(ProblemKind::Antiderivative, Constants::None, 1, m, 0.0)
    }

    pub fn diffusion_reaction(p: usize, q: usize) -> Self {
        Self::new(
            ProblemKind::DiffusionReaction,
            Constants::DiffusionReaction { d: 0.01, k: 0.01 },
            p,
            q,
            0.0,
        )
    }

    pub fn burgers(p: usize, q: usize, lambda_ic: f64) -> Self {
        let mut s = Self::new(ProblemKind::Burgers, Constants::Burgers { nu: 0.01 }, p, q, 0.0);
        s.lambda_ic = lambda_ic;
        s
    }

    pub fn eikonal(q: usize, box_half_width: f64) -> Self {
        Self::new(ProblemKind::Eikonal, Constants::None, 0, q, box_half_width)
    }

    fn new(kind: ProblemKind, constants: Constants, p: usize, q: usize, half: f64) -> Self {
        Self {
            kind,
            constants,
            lambda_ic: 1.0,
            physics: true,
            sign_weight: 0.0,
            collocation: CollocationSpec {
                p,
                q,
                box_half_width: half,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = matches!(
            (self.kind, self.constants),
            (ProblemKind::Antiderivative | ProblemKind::Eikonal, Constants::None)
                | (ProblemKind::DiffusionReaction, Constants::DiffusionReaction { .. })
                | (ProblemKind::Burgers, Constants::Burgers { .. })
        );
        if !ok {
            return Err(Error::Config(format!("constants {:?} do not fit {}", self.constants, self.kind)));
        }
        if !(self.lambda_ic > 0.0) {
            return Err(Error::Config("lambda_ic must be positive".into()));
        }
        if !(self.sign_weight >= 0.0) {
            return Err(Error::Config("sign_weight must be non-negative".into()));
        }
        let c = &self.collocation;
        if c.q == 0 {
            return Err(Error::Config("Q must be at least 1".into()));
        }
        if c.p == 0 && self.kind != ProblemKind::Eikonal {
            return Err(Error::Config("P must be at least 1".into()));
        }
        if self.kind == ProblemKind::Eikonal && !(c.box_half_width > 0.0) {
            return Err(Error::Config("Eikonal box half-width must be positive".into()));
        }
        Ok(())
    }

    /// Query coordinate dimension.
    pub fn d(&self) -> usize {
        match self.kind {
            ProblemKind::Antiderivative => 1,
            _ => 2,
        }
    }
}
