//! Run configuration in a flat `key = value` format.
//!
//! ```text
//! # comments and blank lines are ignored
//! space.dim = 1
//! space.extent = 1
//! space.n = 99
//! problem.a = 1
//! problem.gamma = 3
//! sweep.spacing = relative
//! ```
//!
//! Multi-axis values are comma separated (`space.n = 31,31`). Keys that are
//! absent keep their default; unknown keys are rejected. Reals are written
//! with the shortest representation that parses back to the same `f64`, so
//! `parse(to_text(c)) == c` holds bit for bit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fiber::ProblemParams;
use crate::space::SpaceConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
    /// Log-spaced fractions of `λ*_h`; the extremal estimate runs first.
    Relative,
}

impl Spacing {
    pub fn label(&self) -> &'static str {
        match self {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
            Spacing::Relative => "relative",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Spacing::Linear),
            "log" => Ok(Spacing::Log),
            "relative" | "relative-to-extremal" => Ok(Spacing::Relative),
            other => Err(Error::InvalidConfig(format!(
                "unknown sweep spacing {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub count: usize,
    pub spacing: Spacing,
    pub warm_start: bool,
    /// Solve rows on separate threads; only honoured with warm starts off.
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// Relative residual required of branch points.
    pub residual: f64,
    /// Relative tolerance of closed-form fiber checks.
    pub fiber: f64,
    /// Conjugate-gradient relative residual for descent directions.
    pub cg: f64,
    /// Relative agreement required between the two routes to `λ₀*_h`.
    pub grid: f64,
    /// Allowed relative gap between the minimizer energy at `0.999·λ*_h` and
    /// the `N⁰` level.
    pub collapse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub space: SpaceConfig,
    pub a: f64,
    pub gamma: f64,
    pub sweep: SweepSpec,
    pub tolerances: Tolerances,
    pub path_points: usize,
    pub rho_fraction: f64,
    /// Fractions of `λ₀*_h` for the asymptotic study, decreasing.
    pub asym_fractions: Vec<f64>,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            space: SpaceConfig::interval(1.0, 99),
            a: 1.0,
            gamma: 3.0,
            sweep: SweepSpec {
                lambda_min: 0.008,
                lambda_max: 0.999,
                count: 24,
                spacing: Spacing::Relative,
                warm_start: true,
                parallel: false,
            },
            tolerances: Tolerances {
                residual: 1e-8,
                fiber: 1e-12,
                cg: 1e-10,
                grid: 1e-6,
                collapse: 0.05,
            },
            path_points: 32,
            rho_fraction: 0.9,
            asym_fractions: vec![1e-1, 1e-2, 1e-3],
            seed: 42,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn real(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|e| Error::InvalidConfig(format!("{key}: {v:?}: {e}")))
}

fn reals(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| real(key, s.trim())).collect()
}

fn integer<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| Error::InvalidConfig(format!("{key}: {v:?}: {e}")))
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::InvalidConfig(format!(
            "{key}: expected true or false, got {v:?}"
        ))),
    }
}

impl RunConfig {
    pub fn params(&self, lambda: f64) -> Result<ProblemParams> {
        ProblemParams::new(self.a, self.gamma, lambda)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (key, v) = (key.trim(), value.trim());
            match key {
                "space.dim" => c.space.dim = integer(key, v)?,
                "space.extent" => c.space.extent = reals(key, v)?,
                "space.n" => {
                    c.space.n = v
                        .split(',')
                        .map(|s| integer(key, s.trim()))
                        .collect::<Result<_>>()?
                }
                "problem.a" => c.a = real(key, v)?,
                "problem.gamma" => c.gamma = real(key, v)?,
                "sweep.lambda_min" => c.sweep.lambda_min = real(key, v)?,
                "sweep.lambda_max" => c.sweep.lambda_max = real(key, v)?,
                "sweep.count" => c.sweep.count = integer(key, v)?,
                "sweep.spacing" => c.sweep.spacing = Spacing::parse(v)?,
                "sweep.warm_start" => c.sweep.warm_start = boolean(key, v)?,
                "sweep.parallel" => c.sweep.parallel = boolean(key, v)?,
                "tolerances.residual" => c.tolerances.residual = real(key, v)?,
                "tolerances.fiber" => c.tolerances.fiber = real(key, v)?,
                "tolerances.cg" => c.tolerances.cg = real(key, v)?,
                "tolerances.grid" => c.tolerances.grid = real(key, v)?,
                "tolerances.collapse" => c.tolerances.collapse = real(key, v)?,
                "mountain.path_points" => c.path_points = integer(key, v)?,
                "mountain.rho_fraction" => c.rho_fraction = real(key, v)?,
                "asym.fractions" => c.asym_fractions = reals(key, v)?,
                "seed" => c.seed = integer(key, v)?,
                "out_dir" => c.out_dir = PathBuf::from(v),
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "line {}: unknown key {other:?}",
                        lineno + 1
                    )))
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::parse(&std::fs::read_to_string(path)?).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.space
            .validate()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        ProblemParams::new(self.a, self.gamma, 0.0)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let t = &self.tolerances;
        for (name, v) in [
            ("residual", t.residual),
            ("fiber", t.fiber),
            ("cg", t.cg),
            ("grid", t.grid),
            ("collapse", t.collapse),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "tolerances.{name} must be positive, got {v}"
                )));
            }
        }
        let s = &self.sweep;
        if s.count < 2 {
            return Err(Error::InvalidConfig(format!(
                "sweep.count must be at least 2, got {}",
                s.count
            )));
        }
        if !(s.lambda_min > 0.0 && s.lambda_max > s.lambda_min && s.lambda_max.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sweep range must satisfy 0 < lambda_min < lambda_max, got [{}, {}]",
                s.lambda_min, s.lambda_max
            )));
        }
        if self.path_points < 3 {
            return Err(Error::InvalidConfig(
                "mountain.path_points must be at least 3".into(),
            ));
        }
        if !(self.rho_fraction > 0.0 && self.rho_fraction < 1.0) {
            return Err(Error::InvalidConfig(
                "mountain.rho_fraction must lie in (0, 1)".into(),
            ));
        }
        let f = &self.asym_fractions;
        if f.is_empty()
            || f.windows(2).any(|w| w[1] >= w[0])
            || f.iter().any(|x| !(*x > 0.0 && *x < 1.0))
        {
            return Err(Error::InvalidConfig(
                "asym.fractions must decrease strictly inside (0, 1)".into(),
            ));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let s = &self.sweep;
        let t = &self.tolerances;
        let _ = writeln!(o, "space.dim = {}", self.space.dim);
        let _ = writeln!(o, "space.extent = {}", join(&self.space.extent));
        let _ = writeln!(o, "space.n = {}", join(&self.space.n));
        let _ = writeln!(o, "problem.a = {}", self.a);
        let _ = writeln!(o, "problem.gamma = {}", self.gamma);
        let _ = writeln!(o, "sweep.lambda_min = {}", s.lambda_min);
        let _ = writeln!(o, "sweep.lambda_max = {}", s.lambda_max);
        let _ = writeln!(o, "sweep.count = {}", s.count);
        let _ = writeln!(o, "sweep.spacing = {}", s.spacing.label());
        let _ = writeln!(o, "sweep.warm_start = {}", s.warm_start);
        let _ = writeln!(o, "sweep.parallel = {}", s.parallel);
        let _ = writeln!(o, "tolerances.residual = {:e}", t.residual);
        let _ = writeln!(o, "tolerances.fiber = {:e}", t.fiber);
        let _ = writeln!(o, "tolerances.cg = {:e}", t.cg);
        let _ = writeln!(o, "tolerances.grid = {:e}", t.grid);
        let _ = writeln!(o, "tolerances.collapse = {}", t.collapse);
        let _ = writeln!(o, "mountain.path_points = {}", self.path_points);
        let _ = writeln!(o, "mountain.rho_fraction = {}", self.rho_fraction);
        let _ = writeln!(o, "asym.fractions = {}", join(&self.asym_fractions));
        let _ = writeln!(o, "seed = {}", self.seed);
        let _ = writeln!(o, "out_dir = {}", self.out_dir.display());
        o
    }

    /// The λ grid of the sweep, ascending. `lambda_star` is required for
    /// relative spacing.
    pub fn sweep_lambdas(&self, lambda_star: Option<f64>) -> Result<Vec<f64>> {
        let s = &self.sweep;
        let n = s.count;
        let frac = |i: usize| i as f64 / (n - 1) as f64;
        let log_grid = |lo: f64, hi: f64| -> Vec<f64> {
            let (l0, l1) = (lo.ln(), hi.ln());
            (0..n).map(|i| (l0 + frac(i) * (l1 - l0)).exp()).collect()
        };
        Ok(match s.spacing {
            Spacing::Linear => (0..n)
                .map(|i| s.lambda_min + frac(i) * (s.lambda_max - s.lambda_min))
                .collect(),
            Spacing::Log => log_grid(s.lambda_min, s.lambda_max),
            Spacing::Relative => {
                let star = lambda_star.ok_or_else(|| {
                    Error::InvalidConfig("relative spacing needs the extremal estimate".into())
                })?;
                log_grid(s.lambda_min, s.lambda_max)
                    .into_iter()
                    .map(|f| f * star)
                    .collect()
            }
        })
    }
}
