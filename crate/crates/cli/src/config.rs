//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Angles may be written as a
//! multiple of π with a `pi` suffix (`theta = 0.304pi`). All other values are
//! SI. Unknown keys are rejected so that typos do not silently fall back to
//! defaults.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `gamma_dot_0` `h0` `xi0` `xi_inf` `q` `n` | aluminium | flow and hardening constants |
//! | `xi_inf_star` | none | saturation override (`none` to clear) |
//! | `c11` `c12` `c44` | aluminium | cubic elastic constants (Pa) |
//! | `theta` `phi` | 0.25pi, 0 | orientation (rad) |
//! | `dt` `steps` | 1e-3, 100 | time step (s) and step count |
//! | `path` | uniaxial | `uniaxial`, `shear` or `table` |
//! | `rate` | 1e-3 (drift: -0.55/1.5) | `λ̇` (uniaxial, 1/s) or `γ̇` (shear, 1/s) |
//! | `path_table` | – | file with one row-major `F` (9 numbers) per step |
//! | `integrator` | relax | `relax` or `naive` |
//! | `naive_passes` | 2 | passes of the naive scheme |
//! | `omega0` `eps_rel` `abs_floor` `max_substeps` `omega_min` `omega_max` `use_predictor` | see `RelaxationConfig` | relaxation |
//! | `newton_tol` `newton_max_iter` | 1e-10, 50 | flow Newton |
//! | `drift_dts` | 0.0025,0.0075 | drift-study step sizes (s) |
//! | `dt_ref` | 1e-4 | drift reference step (s) |
//! | `duration` | 1.5 | drift-study loading time (s) |
//! | `grid_points` `grid_min` `grid_max` | 91, -0.25, 0.65 | error surface grid |
//! | `norm_points` `norm_max` | 91, 0.45 | 1-D bound sweep |
//! | `mesh` | – | FEM mesh file |
//! | `eas_modes` | stable12 | `stable12` or `transverse12` |
//! | `fem_tol` `fem_max_iter` `fem_bisections` | 1e-8, 25, 4 | global Newton |
//! | `length` `area` | mesh extents | normalisation of `Ē₃₃` and `σ̄₃₃` |
//! | `orientations` | – | `θ,φ; θ,φ; ...` for pole figures |
//! | `output` | `<mode>.csv` | output file name inside `--out` |

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crystal_core::constitutive::{MaterialParams, NewtonSettings};
use crystal_core::fem::EasModes;
use crystal_core::lattice::{ElasticityVoigt, Orientation};
use crystal_core::stagger::RelaxationConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Point,
    Drift,
    ErrorSurface,
    Fem,
    Pole,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Point => "point",
            Mode::Drift => "drift",
            Mode::ErrorSurface => "error-surface",
            Mode::Fem => "fem",
            Mode::Pole => "pole",
        }
    }
}

impl FromStr for Mode {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Ok(match s {
            "point" => Mode::Point,
            "drift" => Mode::Drift,
            "error-surface" => Mode::ErrorSurface,
            "fem" => Mode::Fem,
            "pole" => Mode::Pole,
            other => return Err(ConfigError(format!("unknown mode '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub enum StrainPath {
    /// `F = diag(1, 1, 1 + rate·t)`; lateral stretches held at 1.
    Uniaxial { rate: f64 },
    /// `F = I + rate·t e₁⊗e₂`.
    Shear { rate: f64 },
    /// One deformation gradient per step.
    Table(Vec<nalgebra::Matrix3<f64>>),
}

impl StrainPath {
    /// Deformation gradient after `step` steps of size `dt`.
    pub fn deformation(&self, step: usize, dt: f64) -> nalgebra::Matrix3<f64> {
        let t = step as f64 * dt;
        let mut f = nalgebra::Matrix3::identity();
        match self {
            StrainPath::Uniaxial { rate } => f[(2, 2)] += rate * t,
            StrainPath::Shear { rate } => f[(0, 1)] = rate * t,
            StrainPath::Table(rows) => {
                if step > 0 {
                    f = rows[(step - 1).min(rows.len() - 1)];
                }
            }
        }
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Relax,
    Naive { passes: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub material: MaterialParams,
    pub orientation: Orientation,
    pub dt: f64,
    pub steps: usize,
    pub path: StrainPath,
    pub integrator: Integrator,
    pub relaxation: RelaxationConfig,
    pub drift_dts: Vec<f64>,
    pub dt_ref: f64,
    pub duration: f64,
    pub grid_points: usize,
    pub grid_min: f64,
    pub grid_max: f64,
    pub norm_points: usize,
    pub norm_max: f64,
    pub mesh: Option<PathBuf>,
    pub eas_modes: EasModes,
    pub fem_tol: f64,
    pub fem_max_iter: usize,
    pub fem_bisections: usize,
    pub length: Option<f64>,
    pub area: Option<f64>,
    pub orientations: Vec<Orientation>,
    pub output: String,
}

impl RunConfig {
    pub fn defaults(mode: Mode) -> Self {
        // Drift runs default to 55 % compression with lateral stretches held.
        let rate = match mode {
            Mode::Drift => -0.55 / 1.5,
            _ => 1e-3,
        };
        Self {
            mode,
            material: MaterialParams::aluminum(),
            orientation: Orientation::new(0.25 * std::f64::consts::PI, 0.0),
            dt: 1e-3,
            steps: 100,
            path: StrainPath::Uniaxial { rate },
            integrator: Integrator::Relax,
            relaxation: RelaxationConfig::default(),
            drift_dts: vec![0.0025, 0.0075],
            dt_ref: 1e-4,
            duration: 1.5,
            grid_points: 91,
            grid_min: -0.25,
            grid_max: 0.65,
            norm_points: 91,
            norm_max: 0.45,
            mesh: None,
            eas_modes: EasModes::default(),
            fem_tol: 1e-8,
            fem_max_iter: 25,
            fem_bisections: 4,
            length: None,
            area: None,
            orientations: Vec::new(),
            output: format!("{}.csv", mode.name()),
        }
    }

    /// Parses `text`; relative file paths resolve against `base`.
    pub fn parse(mode: Mode, text: &str, base: &std::path::Path) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key = value", k + 1)))?;
            let key = key.trim().to_string();
            if entries.insert(key.clone(), (k + 1, value.trim().to_string())).is_some() {
                return Err(ConfigError(format!("line {}: duplicate key '{key}'", k + 1)));
            }
        }

        let mut cfg = Self::defaults(mode);
        let default_rate = match cfg.path {
            StrainPath::Uniaxial { rate } => rate,
            _ => 1e-3,
        };
        let mut rate: Option<f64> = None;
        let mut path_kind = "uniaxial".to_string();
        let mut table: Option<PathBuf> = None;
        let mut integrator = "relax".to_string();
        let mut passes = 2usize;
        let (mut c11, mut c12, mut c44) = (
            cfg.material.elasticity.c11,
            cfg.material.elasticity.c12,
            cfg.material.elasticity.c44,
        );
        let mut omega_bounds = cfg.relaxation.omega_bounds;
        let mut newton = NewtonSettings::default();

        for (key, (line, value)) in &entries {
            let v = value.as_str();
            let err = |what: &str| ConfigError(format!("line {line}: {key}: {what}"));
            let num = || parse_number(v).map_err(|e| err(&e));
            let count = || v.parse::<usize>().map_err(|_| err("expected a non-negative integer"));
            match key.as_str() {
                "gamma_dot_0" => cfg.material.gamma_dot_0 = num()?,
                "h0" => cfg.material.h0 = num()?,
                "xi0" => cfg.material.xi0 = num()?,
                "xi_inf" => cfg.material.xi_inf = num()?,
                "xi_inf_star" => {
                    cfg.material.xi_inf_star = if v == "none" { None } else { Some(num()?) };
                }
                "q" => cfg.material.q = num()?,
                "n" => cfg.material.n = num()?,
                "c11" => c11 = num()?,
                "c12" => c12 = num()?,
                "c44" => c44 = num()?,
                "theta" => cfg.orientation.theta = num()?,
                "phi" => cfg.orientation.phi = num()?,
                "dt" => cfg.dt = num()?,
                "steps" => cfg.steps = count()?,
                "path" => path_kind = v.to_string(),
                "rate" => rate = Some(num()?),
                "path_table" => table = Some(base.join(v)),
                "integrator" => integrator = v.to_string(),
                "naive_passes" => passes = count()?,
                "omega0" => cfg.relaxation.omega0 = num()?,
                "eps_rel" => cfg.relaxation.eps_rel = num()?,
                "abs_floor" => cfg.relaxation.abs_floor = num()?,
                "max_substeps" => cfg.relaxation.max_substeps = count()?,
                "omega_min" => omega_bounds.0 = num()?,
                "omega_max" => omega_bounds.1 = num()?,
                "use_predictor" => cfg.relaxation.use_predictor = parse_bool(v).map_err(|e| err(&e))?,
                "newton_tol" => newton.tol = num()?,
                "newton_max_iter" => newton.max_iter = count()?,
                "drift_dts" => {
                    cfg.drift_dts = v
                        .split(',')
                        .map(|s| parse_number(s.trim()))
                        .collect::<Result<_, _>>()
                        .map_err(|e| err(&e))?
                }
                "dt_ref" => cfg.dt_ref = num()?,
                "duration" => cfg.duration = num()?,
                "grid_points" => cfg.grid_points = count()?,
                "grid_min" => cfg.grid_min = num()?,
                "grid_max" => cfg.grid_max = num()?,
                "norm_points" => cfg.norm_points = count()?,
                "norm_max" => cfg.norm_max = num()?,
                "mesh" => cfg.mesh = Some(base.join(v)),
                "eas_modes" => cfg.eas_modes = v.parse().map_err(|_| err("expected stable12 or transverse12"))?,
                "fem_tol" => cfg.fem_tol = num()?,
                "fem_max_iter" => cfg.fem_max_iter = count()?,
                "fem_bisections" => cfg.fem_bisections = count()?,
                "length" => cfg.length = Some(num()?),
                "area" => cfg.area = Some(num()?),
                "orientations" => cfg.orientations = parse_orientations(v).map_err(|e| err(&e))?,
                "output" => cfg.output = v.to_string(),
                _ => return Err(err("unknown key")),
            }
        }

        cfg.material.elasticity =
            ElasticityVoigt::cubic(c11, c12, c44).map_err(|e| ConfigError(format!("elastic constants: {e}")))?;
        cfg.relaxation.omega_bounds = omega_bounds;
        cfg.relaxation.newton = newton;
        cfg.integrator = match integrator.as_str() {
            "relax" => Integrator::Relax,
            "naive" => Integrator::Naive { passes },
            other => return Err(ConfigError(format!("integrator: unknown '{other}'"))),
        };
        cfg.path = match path_kind.as_str() {
            "uniaxial" => StrainPath::Uniaxial {
                rate: rate.unwrap_or(default_rate),
            },
            "shear" => StrainPath::Shear {
                rate: rate.unwrap_or(default_rate),
            },
            "table" => {
                let file = table.ok_or_else(|| ConfigError("path = table needs path_table".into()))?;
                let text = std::fs::read_to_string(&file)
                    .map_err(|e| ConfigError(format!("{}: {e}", file.display())))?;
                let rows = parse_table(&text)?;
                cfg.steps = rows.len();
                StrainPath::Table(rows)
            }
            other => return Err(ConfigError(format!("path: unknown '{other}'"))),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.material
            .validate()
            .map_err(|e| ConfigError(format!("material: {e}")))?;
        self.relaxation
            .validate()
            .map_err(|e| ConfigError(format!("relaxation: {e}")))?;
        if !(self.dt > 0.0) {
            return Err(ConfigError("dt must be positive".into()));
        }
        if self.steps == 0 {
            return Err(ConfigError("steps must be at least 1".into()));
        }
        if let Integrator::Naive { passes: 0 } = self.integrator {
            return Err(ConfigError("naive_passes must be at least 1".into()));
        }
        if self.drift_dts.iter().any(|d| !(*d > 0.0)) || !(self.dt_ref > 0.0) || !(self.duration > 0.0) {
            return Err(ConfigError("drift time steps and duration must be positive".into()));
        }
        if self.grid_points < 2 || self.norm_points < 2 || !(self.grid_max > self.grid_min) {
            return Err(ConfigError("error-surface grid needs at least 2 points and max > min".into()));
        }
        if !(self.norm_max >= 0.0 && self.norm_max < 0.5) {
            return Err(ConfigError("norm_max must lie in [0, 0.5)".into()));
        }
        if self.mode == Mode::Fem && self.mesh.is_none() {
            return Err(ConfigError("fem mode needs a mesh file".into()));
        }
        if self.mode == Mode::Pole && self.orientations.is_empty() {
            return Err(ConfigError("pole mode needs orientations".into()));
        }
        Ok(())
    }
}

/// Number with optional `pi` suffix: `0.25pi`, `pi`, `-1.5e-3`.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let (body, scale) = match s.strip_suffix("pi") {
        Some(b) => (b.trim().trim_end_matches('*').trim(), std::f64::consts::PI),
        None => (s, 1.0),
    };
    let value = match (body, scale == 1.0) {
        ("", false) => 1.0,
        ("-", false) => -1.0,
        (b, _) => b.parse::<f64>().map_err(|_| format!("bad number '{s}'"))?,
    };
    let out = value * scale;
    if out.is_finite() {
        Ok(out)
    } else {
        Err(format!("non-finite number '{s}'"))
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("expected true/false, got '{other}'")),
    }
}

fn parse_orientations(s: &str) -> Result<Vec<Orientation>, String> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|pair| {
            let (t, p) = pair
                .split_once(',')
                .ok_or_else(|| format!("expected 'theta,phi', got '{pair}'"))?;
            Ok(Orientation::new(parse_number(t)?, parse_number(p)?))
        })
        .collect()
}

fn parse_table(text: &str) -> Result<Vec<nalgebra::Matrix3<f64>>, ConfigError> {
    let mut rows = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let values = body
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| ConfigError(format!("path table line {}: bad number", k + 1)))?;
        if values.len() != 9 {
            return Err(ConfigError(format!("path table line {}: expected 9 values", k + 1)));
        }
        let f = nalgebra::Matrix3::from_row_slice(&values);
        if !(f.determinant() > 0.0) {
            return Err(ConfigError(format!("path table line {}: det F must be positive", k + 1)));
        }
        rows.push(f);
    }
    if rows.is_empty() {
        return Err(ConfigError("path table is empty".into()));
    }
    Ok(rows)
}
