//! TOML run configuration.

use std::path::{Path, PathBuf};

use dirac1d::field::{GridSpec, Profile};
use dirac1d::models::Model;
use dirac1d::solver::{BoundaryPolicy, FSubstep, Scheme, SolverConfig};
use dirac1d::C64;
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("{path}: {msg}")]
    Invalid { path: PathBuf, msg: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub grid: GridToml,
    pub initial: InitialSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub solver: SolverSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// `thirring`, `federbusch`, `gross-neveu` or `custom`.
    pub name: String,
    /// Coupling of a preset model.
    pub coefficient: Option<f64>,
    /// `[j, k, w_jk]` triples of a custom potential.
    #[serde(default)]
    pub terms: Vec<(u32, u32, f64)>,
    /// Gross-Neveu coupling of a custom model.
    #[serde(default)]
    pub gamma: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridToml {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub u: ProfileSpec,
    pub v: ProfileSpec,
}

/// Either a real number or `[re, im]`.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Amplitude> for C64 {
    fn from(a: Amplitude) -> Self {
        match a {
            Amplitude::Real(re) => C64::new(re, 0.0),
            Amplitude::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileSpec {
    Gaussian {
        amplitude: Amplitude,
        center: f64,
        width: f64,
    },
    Bump {
        amplitude: Amplitude,
        center: f64,
        radius: f64,
    },
    Zero,
    /// Snapshot CSV; relative paths are taken from the config file's directory.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub t_final: f64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub windows: Vec<(f64, f64)>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_stride() -> usize {
    10
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub f_substep: FSubstep,
    pub max_picard_iters: Option<usize>,
    pub picard_tol: Option<f64>,
    /// The CLI aborts by default when data reach the boundary.
    #[serde(default = "default_policy")]
    pub boundary_policy: BoundaryPolicy,
    pub boundary_threshold: Option<f64>,
    #[serde(default = "default_parallel")]
    pub parallel: bool,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            scheme: Scheme::default(),
            f_substep: FSubstep::default(),
            max_picard_iters: None,
            picard_tol: None,
            boundary_policy: default_policy(),
            boundary_threshold: None,
            parallel: default_parallel(),
        }
    }
}

fn default_policy() -> BoundaryPolicy {
    BoundaryPolicy::Abort
}

fn default_parallel() -> bool {
    true
}

/// Validated, ready-to-run configuration.
#[derive(Debug)]
pub struct Resolved {
    pub model: Model,
    pub grid: GridSpec,
    pub u0: Profile,
    pub v0: Profile,
    pub t_final: f64,
    pub snapshot_stride: usize,
    pub windows: Vec<(f64, f64)>,
    pub out: PathBuf,
    pub solver: SolverConfig,
}

pub fn load(path: &Path) -> Result<Resolved, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let raw: RunConfig = toml::from_str(&text).map_err(|source| ConfigError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    raw.resolve(base).map_err(|msg| ConfigError::Invalid {
        path: path.to_path_buf(),
        msg,
    })
}

fn err(key: &'static str) -> impl Fn(dirac1d::Error) -> String {
    move |e| format!("{key}: {e}")
}

impl RunConfig {
    fn resolve(self, base: &Path) -> Result<Resolved, String> {
        let model = match self.model.name.as_str() {
            "custom" => {
                if self.model.coefficient.is_some() {
                    return Err(
                        "model.coefficient: not used by custom models, use terms and gamma".into(),
                    );
                }
                Model::new("custom", self.model.terms, self.model.gamma).map_err(err("model"))?
            }
            name => {
                if !self.model.terms.is_empty() || self.model.gamma != 0.0 {
                    return Err(format!(
                        "model: terms and gamma only apply to custom models, not `{name}`"
                    ));
                }
                let coef = self
                    .model
                    .coefficient
                    .ok_or_else(|| format!("model.coefficient: required for `{name}`"))?;
                Model::preset(name, coef).map_err(err("model"))?
            }
        };
        let grid = GridSpec::new(self.grid.x_min, self.grid.x_max, self.grid.n_cells)
            .map_err(err("grid"))?;
        let u0 = self.initial.u.into_profile(base);
        let v0 = self.initial.v.into_profile(base);
        u0.validate().map_err(err("initial.u"))?;
        v0.validate().map_err(err("initial.v"))?;
        if !(self.run.t_final.is_finite() && self.run.t_final >= 0.0) {
            return Err(format!(
                "run.t_final: must be finite and >= 0, got {}",
                self.run.t_final
            ));
        }
        if self.run.snapshot_stride == 0 {
            return Err("run.snapshot_stride: must be >= 1".into());
        }
        for &(a, b) in &self.run.windows {
            if !(a < b) {
                return Err(format!("run.windows: need a < b, got [{a}, {b}]"));
            }
        }
        let defaults = SolverConfig::default();
        let s = self.solver;
        let solver = SolverConfig {
            scheme: s.scheme,
            f_substep: s.f_substep,
            max_picard_iters: s.max_picard_iters.unwrap_or(defaults.max_picard_iters),
            picard_tol: s.picard_tol.unwrap_or(defaults.picard_tol),
            boundary_policy: s.boundary_policy,
            boundary_threshold: s.boundary_threshold.unwrap_or(defaults.boundary_threshold),
            parallel: s.parallel,
        };
        solver.validate().map_err(err("solver"))?;
        let out = if self.run.out.is_absolute() {
            self.run.out
        } else {
            base.join(self.run.out)
        };
        Ok(Resolved {
            model,
            grid,
            u0,
            v0,
            t_final: self.run.t_final,
            snapshot_stride: self.run.snapshot_stride,
            windows: self.run.windows,
            out,
            solver,
        })
    }
}

impl ProfileSpec {
    fn into_profile(self, base: &Path) -> Profile {
        match self {
            Self::Gaussian {
                amplitude,
                center,
                width,
            } => Profile::gaussian(amplitude.into(), center, width),
            Self::Bump {
                amplitude,
                center,
                radius,
            } => Profile::bump(amplitude.into(), center, radius),
            Self::Zero => Profile::Zero,
            Self::File { path } => Profile::FromFile {
                path: if path.is_absolute() {
                    path
                } else {
                    base.join(path)
                },
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
[model]
name = "gross-neveu"
coefficient = 1.0

[grid]
x_min = -8.0
x_max = 8.0
n_cells = 256

[initial.u]
kind = "bump"
amplitude = 0.1
center = -2.0
radius = 1.0

[initial.v]
kind = "gaussian"
amplitude = [0.0, 0.1]
center = 2.0
width = 0.5

[run]
t_final = 2.0
windows = [[-2.0, 2.0]]

[solver]
scheme = "lie1"
"#;

    fn parse(text: &str) -> Result<Resolved, String> {
        let raw: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        raw.resolve(Path::new("/cfg"))
    }

    #[test]
    fn good_config_resolves() {
        let r = parse(GOOD).unwrap();
        assert_eq!(r.model.gn_coupling(), 1.0);
        assert_eq!(r.grid.n_cells(), 256);
        assert_eq!(r.solver.scheme, Scheme::Lie1);
        assert_eq!(r.solver.boundary_policy, BoundaryPolicy::Abort);
        assert_eq!(r.snapshot_stride, 10);
        assert_eq!(r.out, PathBuf::from("/cfg/out"));
        assert_eq!(r.v0, Profile::gaussian(C64::new(0.0, 0.1), 2.0, 0.5));
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let bad = GOOD.replace("radius = 1.0", "radius = 1.0\nradios = 2.0");
        let msg = parse(&bad).unwrap_err();
        assert!(msg.contains("line"), "{msg}");
        assert!(msg.contains("radios"), "{msg}");
    }

    #[test]
    fn semantic_errors_name_the_key() {
        let msg = parse(&GOOD.replace("n_cells = 256", "n_cells = 0")).unwrap_err();
        assert!(msg.starts_with("grid"), "{msg}");
        let msg = parse(&GOOD.replace("coefficient = 1.0", "")).unwrap_err();
        assert!(msg.contains("model.coefficient"), "{msg}");
        let msg = parse(&GOOD.replace("[[-2.0, 2.0]]", "[[2.0, -2.0]]")).unwrap_err();
        assert!(msg.contains("run.windows"), "{msg}");
    }

    #[test]
    fn custom_model_and_file_profile() {
        let text = GOOD
            .replace(
                "name = \"gross-neveu\"\ncoefficient = 1.0",
                "name = \"custom\"\nterms = [[1, 1, 0.5], [2, 0, 0.1]]\ngamma = 0.25",
            )
            .replace(
                "kind = \"bump\"\namplitude = 0.1\ncenter = -2.0\nradius = 1.0",
                "kind = \"file\"\npath = \"u0.csv\"",
            );
        let r = parse(&text).unwrap();
        assert_eq!(r.model.w_coeffs().len(), 2);
        assert_eq!(
            r.u0,
            Profile::FromFile {
                path: PathBuf::from("/cfg/u0.csv")
            }
        );
    }
}
