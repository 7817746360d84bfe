use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nn::{Activation, BackboneKind, NetSpec};
use crate::pde::{Constants, PdeProblem, ProblemKind};

/// Everything needed to generate data for, train and evaluate one benchmark.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    // [problem]
    pub benchmark: ProblemKind,
    pub lambda_ic: f64,
    /// False trains on the constraint rows only (conventional DeepONet).
    pub physics: bool,
    /// Eikonal only: weight of the inside/outside sign penalty.
    pub sign_weight: f64,

    // [data]
    pub n_train: usize,
    pub n_test: usize,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub length_scale: f64,
    pub radius_min: f64,
    pub radius_max: f64,
    pub box_half_width: f64,
    /// Diffusion–reaction grid points per axis; Burgers spatial points.
    pub solver_nx: usize,
    pub solver_nt: usize,
    pub solver_dt: f64,
    /// Eikonal test grid points per axis.
    pub test_grid: usize,

    // [model]
    pub depth: usize,
    pub width: usize,
    pub backbone: BackboneKind,
    pub activation: Activation,
    pub fourier_sigma: Option<f64>,
    pub fourier_features: Option<usize>,

    // [train]
    pub base_lr: f64,
    pub batch_size: usize,
    pub iterations: u64,
    pub seed: u64,
    pub log_every: u64,
    /// Share of each batch drawn from constraint pools; `None` is proportional to pool sizes.
    pub constraint_fraction: Option<f64>,
    /// Record elapsed time in the metrics; off makes the CSV fully reproducible.
    pub wall_clock: bool,
}

impl TrainConfig {
    /// Full-size settings.
    pub fn paper(kind: ProblemKind) -> Self {
        let mut c = Self::base(kind);
        c.batch_size = 10_000;
        match kind {
            ProblemKind::Antiderivative => {
                c.n_train = 10_000;
                c.n_test = 1_000;
                c.iterations = 40_000;
            }
            ProblemKind::DiffusionReaction => {
                c.n_train = 10_000;
                c.n_test = 1_000;
                c.p = 100;
                c.iterations = 120_000;
            }
            ProblemKind::Burgers => {
                c.n_train = 1_000;
                c.n_test = 1_000;
                c.p = 100;
                c.q = 2_500;
                c.depth = 7;
                c.width = 100;
                c.iterations = 200_000;
                c.solver_dt = 1e-4;
                c.backbone = BackboneKind::ModifiedMlp;
                c.lambda_ic = 20.0;
            }
            ProblemKind::Eikonal => {
                c.n_train = 1_000;
                c.n_test = 1_000;
                c.q = 1_000;
                c.depth = 6;
                c.iterations = 80_000;
            }
        }
        c
    }

    /// Reduced settings that train in minutes on one CPU core.
    pub fn desk(kind: ProblemKind) -> Self {
        let mut c = Self::base(kind);
        c.depth = 3;
        c.width = 32;
        c.batch_size = 512;
        match kind {
            ProblemKind::Antiderivative => {
                c.n_train = 1_000;
                c.n_test = 200;
                c.iterations = 20_000;
            }
            ProblemKind::DiffusionReaction => {
                c.n_train = 1_000;
                c.n_test = 100;
                c.p = 100;
                c.depth = 5;
                c.iterations = 30_000;
            }
            ProblemKind::Burgers => {
                c.n_train = 100;
                c.n_test = 20;
                c.m = 64;
                c.p = 64;
                c.q = 200;
                c.depth = 5;
                c.iterations = 30_000;
                c.backbone = BackboneKind::ModifiedMlp;
                c.lambda_ic = 20.0;
            }
            ProblemKind::Eikonal => {
                c.n_train = 200;
                c.n_test = 20;
                c.m = 32;
                c.q = 200;
                c.depth = 4;
                c.width = 50;
                c.iterations = 20_000;
                c.sign_weight = 1.0;
            }
        }
        c
    }

    fn base(kind: ProblemKind) -> Self {
        Self {
            benchmark: kind,
            lambda_ic: 1.0,
            physics: true,
            sign_weight: 0.0,
            n_train: 1_000,
            n_test: 100,
            m: 100,
            p: 1,
            q: 100,
            length_scale: 0.2,
            radius_min: 0.5,
            radius_max: 1.5,
            box_half_width: 2.0,
            solver_nx: if kind == ProblemKind::Burgers { 128 } else { 100 },
            solver_nt: 100,
            solver_dt: 1e-3,
            test_grid: 50,
            depth: 5,
            width: 50,
            backbone: BackboneKind::Mlp,
            activation: Activation::Tanh,
            fourier_sigma: None,
            fourier_features: None,
            base_lr: 1e-3,
            batch_size: 10_000,
            iterations: 10_000,
            seed: 0,
            log_every: 100,
            constraint_fraction: None,
            wall_clock: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.n_train == 0 || self.m < 2 || self.q == 0 {
            return bad("n_train, m and q must be positive (m >= 2)");
        }
        if self.p == 0 && self.benchmark != ProblemKind::Eikonal {
            return bad("p must be positive");
        }
        if self.benchmark == ProblemKind::Eikonal && self.m < 3 {
            return bad("Eikonal curves need m >= 3");
        }
        if !(self.base_lr > 0.0) || self.batch_size == 0 || self.log_every == 0 {
            return bad("base_lr, batch_size and log_every must be positive");
        }
        if let Some(f) = self.constraint_fraction {
            if !(f > 0.0 && f < 1.0) {
                return bad("constraint_fraction must lie in (0, 1)");
            }
        }
        if !(self.length_scale > 0.0) {
            return bad("length_scale must be positive");
        }
        if !(self.radius_min > 0.0 && self.radius_max >= self.radius_min && self.radius_max < self.box_half_width) {
            return bad("radii must satisfy 0 < radius_min <= radius_max < box_half_width");
        }
        if let Some(s) = self.fourier_sigma {
            if !(s > 0.0) {
                return bad("fourier_sigma must be positive");
            }
        }
        self.problem().validate()?;
        self.branch_spec().validate()?;
        self.trunk_spec().validate()?;
        Ok(())
    }

    pub fn problem(&self) -> PdeProblem {
        let mut p = match self.benchmark {
            ProblemKind::Antiderivative => PdeProblem::antiderivative(self.q),
            ProblemKind::DiffusionReaction => PdeProblem::diffusion_reaction(self.p, self.q),
            ProblemKind::Burgers => PdeProblem::burgers(self.p, self.q, self.lambda_ic),
            ProblemKind::Eikonal => PdeProblem::eikonal(self.q, self.box_half_width),
        };
        if self.benchmark == ProblemKind::Antiderivative {
            p.collocation.p = self.p;
        }
        if !matches!(p.constants, Constants::Burgers { .. }) {
            p.lambda_ic = self.lambda_ic;
        }
        p.physics = self.physics;
        p.sign_weight = self.sign_weight;
        p
    }

    /// Length of the branch input vector.
    pub fn branch_inputs(&self) -> usize {
        match self.benchmark {
            ProblemKind::Eikonal => 2 * self.m,
            _ => self.m,
        }
    }

    pub fn branch_spec(&self) -> NetSpec {
        NetSpec {
            in_dim: self.branch_inputs(),
            depth: self.depth,
            width: self.width,
            backbone: self.backbone,
            activation: self.activation,
            fourier: None,
        }
    }

    pub fn trunk_spec(&self) -> NetSpec {
        NetSpec {
            in_dim: self.problem().d(),
            depth: self.depth,
            width: self.width,
            backbone: self.backbone,
            activation: self.activation,
            fourier: self
                .fourier_sigma
                .map(|s| (self.fourier_features.unwrap_or((self.width / 2).max(1)), s)),
        }
    }

    pub fn to_text(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
        let mut s = String::new();
        let _ = writeln!(s, "[problem]");
        let _ = writeln!(s, "benchmark = {}", self.benchmark);
        let _ = writeln!(s, "lambda_ic = {:?}", self.lambda_ic);
        let _ = writeln!(s, "physics = {}", self.physics);
        let _ = writeln!(s, "sign_weight = {:?}", self.sign_weight);
        let _ = writeln!(s, "\n[data]");
        let _ = writeln!(s, "n_train = {}", self.n_train);
        let _ = writeln!(s, "n_test = {}", self.n_test);
        let _ = writeln!(s, "m = {}", self.m);
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "q = {}", self.q);
        let _ = writeln!(s, "length_scale = {:?}", self.length_scale);
        let _ = writeln!(s, "radius_min = {:?}", self.radius_min);
        let _ = writeln!(s, "radius_max = {:?}", self.radius_max);
        let _ = writeln!(s, "box_half_width = {:?}", self.box_half_width);
        let _ = writeln!(s, "solver_nx = {}", self.solver_nx);
        let _ = writeln!(s, "solver_nt = {}", self.solver_nt);
        let _ = writeln!(s, "solver_dt = {:?}", self.solver_dt);
        let _ = writeln!(s, "test_grid = {}", self.test_grid);
        let _ = writeln!(s, "\n[model]");
        let _ = writeln!(s, "depth = {}", self.depth);
        let _ = writeln!(s, "width = {}", self.width);
        let _ = writeln!(s, "backbone = {}", self.backbone);
        let _ = writeln!(s, "activation = {}", self.activation);
        let _ = writeln!(s, "fourier_sigma = {}", opt(self.fourier_sigma.map(|v| format!("{v:?}"))));
        let _ = writeln!(s, "fourier_features = {}", opt(self.fourier_features.map(|v| v.to_string())));
        let _ = writeln!(s, "\n[train]");
        let _ = writeln!(s, "base_lr = {:?}", self.base_lr);
        let _ = writeln!(s, "batch_size = {}", self.batch_size);
        let _ = writeln!(s, "iterations = {}", self.iterations);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "log_every = {}", self.log_every);
        let _ = writeln!(s, "constraint_fraction = {}", opt(self.constraint_fraction.map(|v| format!("{v:?}"))));
        let _ = writeln!(s, "wall_clock = {}", self.wall_clock);
        s
    }

    /// Parses `key = value` lines under `[section]` headers. The benchmark
    /// key picks the preset (desk unless `preset = paper`); every other key
    /// overrides it.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            entries.push((i + 1, section.clone(), k.trim().to_string(), v.trim().to_string()));
        }
        let bench = entries
            .iter()
            .find(|(_, s, k, _)| s == "problem" && k == "benchmark")
            .ok_or_else(|| Error::Config("missing [problem] benchmark".into()))?;
        let kind = parse_value(bench.0, &bench.3)?;
        let preset = entries.iter().rev().find(|(_, s, k, _)| s == "problem" && k == "preset");
        let mut c = match preset.map(|e| e.3.as_str()) {
            None | Some("desk") => Self::desk(kind),
            Some("paper") => Self::paper(kind),
            Some(other) => {
                return Err(Error::Config(format!(
                    "line {}: preset must be `desk` or `paper`, got `{other}`",
                    preset.unwrap().0
                )))
            }
        };
        for (line, section, key, value) in &entries {
            c.set(*line, section, key, value)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            e => e,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    fn set(&mut self, line: usize, section: &str, key: &str, v: &str) -> Result<()> {
        match (section, key) {
            ("problem", "benchmark") => self.benchmark = parse_value(line, v)?,
            ("problem", "lambda_ic") => self.lambda_ic = parse_value(line, v)?,
            ("problem", "physics") => self.physics = parse_value(line, v)?,
            ("problem", "preset") => {}
            ("problem", "sign_weight") => self.sign_weight = parse_value(line, v)?,
            ("data", "n_train") => self.n_train = parse_value(line, v)?,
            ("data", "n_test") => self.n_test = parse_value(line, v)?,
            ("data", "m") => self.m = parse_value(line, v)?,
            ("data", "p") => self.p = parse_value(line, v)?,
            ("data", "q") => self.q = parse_value(line, v)?,
            ("data", "length_scale") => self.length_scale = parse_value(line, v)?,
            ("data", "radius_min") => self.radius_min = parse_value(line, v)?,
            ("data", "radius_max") => self.radius_max = parse_value(line, v)?,
            ("data", "box_half_width") => self.box_half_width = parse_value(line, v)?,
            ("data", "solver_nx") => self.solver_nx = parse_value(line, v)?,
            ("data", "solver_nt") => self.solver_nt = parse_value(line, v)?,
            ("data", "solver_dt") => self.solver_dt = parse_value(line, v)?,
            ("data", "test_grid") => self.test_grid = parse_value(line, v)?,
            ("model", "depth") => self.depth = parse_value(line, v)?,
            ("model", "width") => self.width = parse_value(line, v)?,
            ("model", "backbone") => self.backbone = parse_value(line, v)?,
            ("model", "activation") => self.activation = parse_value(line, v)?,
            ("model", "fourier_sigma") => self.fourier_sigma = parse_opt(line, v)?,
            ("model", "fourier_features") => self.fourier_features = parse_opt(line, v)?,
            ("train", "base_lr") => self.base_lr = parse_value(line, v)?,
            ("train", "batch_size") => self.batch_size = parse_value(line, v)?,
            ("train", "iterations") => self.iterations = parse_value(line, v)?,
            ("train", "seed") => self.seed = parse_value(line, v)?,
            ("train", "log_every") => self.log_every = parse_value(line, v)?,
            ("train", "constraint_fraction") => self.constraint_fraction = parse_opt(line, v)?,
            ("train", "wall_clock") => self.wall_clock = parse_value(line, v)?,
            _ => return Err(Error::Config(format!("line {line}: unknown key `{key}` in section [{section}]"))),
        }
        Ok(())
    }
}

fn parse_value<T: FromStr>(line: usize, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("line {line}: cannot parse `{v}`")))
}

fn parse_opt<T: FromStr>(line: usize, v: &str) -> Result<Option<T>> {
    if v == "none" {
        Ok(None)
    } else {
        parse_value(line, v).map(Some)
    }
}
