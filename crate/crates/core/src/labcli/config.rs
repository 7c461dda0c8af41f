//! INI-style scenario files.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gauge::default_thetas;
use crate::sensing::{KineticMode, PostAnchor};
use crate::states::{table2_state, PacketParams, StateId};
use crate::units::{mev, nm, FS, NM, PS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Fig2a,
    Fig2b,
    Fig2c,
    EField,
    BField,
    Custom,
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "fig2a" => Self::Fig2a,
            "fig2b" => Self::Fig2b,
            "fig2c" => Self::Fig2c,
            "efield" => Self::EField,
            "bfield" => Self::BField,
            "custom" => Self::Custom,
            _ => return Err(format!("unknown scenario kind '{s}'")),
        })
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Fig2a => "fig2a",
            Self::Fig2b => "fig2b",
            Self::Fig2c => "fig2c",
            Self::EField => "efield",
            Self::BField => "bfield",
            Self::Custom => "custom",
        })
    }
}

/// Grid in SI units. The y fields are only used by 2D scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub dx: f64,
    pub dt: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub dy: f64,
    pub y_min: f64,
    pub y_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandauConfig {
    pub b: f64,
    pub k_y: f64,
    pub levels: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub grid: GridConfig,
    pub pre: PacketParams,
    pub post: PacketParams,
    pub landau: LandauConfig,
    /// Uniform field for the E scenario (V/m); 0 means free.
    pub e_field: f64,
    pub thetas: Vec<f64>,
    pub stride_steps: Vec<usize>,
    pub trajectories: usize,
    pub sample_times: usize,
    pub t_end: f64,
    /// Extra trajectory time for the oscillation-period measurement.
    pub period_window: f64,
    pub traj_dt: f64,
    pub seed: u64,
    pub kinetic_mode: KineticMode,
    pub anchor: PostAnchor,
    pub refine: bool,
    pub out: PathBuf,
}

impl ScenarioConfig {
    pub fn defaults(kind: ScenarioKind) -> Self {
        let fig2_grid = GridConfig {
            dx: nm(0.2),
            dt: 0.01 * FS,
            x_min: nm(-400.0),
            x_max: nm(1200.0),
            dy: nm(2.0),
            y_min: nm(-600.0),
            y_max: nm(600.0),
        };
        let (pre, post) = match kind {
            ScenarioKind::Fig2b => (StateId::Phi2, StateId::Phi1),
            ScenarioKind::Fig2c => (StateId::Phi3, StateId::Phi4),
            _ => (StateId::Phi1, StateId::Phi2),
        };
        let mut cfg = Self {
            kind,
            grid: fig2_grid,
            pre: table2_state(pre),
            post: table2_state(post),
            landau: LandauConfig { b: 0.19, k_y: 0.0118 / NM, levels: 10 },
            e_field: 0.0,
            thetas: default_thetas(8),
            stride_steps: (1..=10).map(|i| 10 * i).collect(),
            trajectories: 10,
            sample_times: 20,
            t_end: 0.2 * PS,
            period_window: 0.0,
            traj_dt: 0.01 * FS,
            seed: 1,
            kinetic_mode: KineticMode::Direct,
            anchor: PostAnchor::Comoving,
            refine: false,
            out: PathBuf::from(format!("out/{kind}")),
        };
        match kind {
            ScenarioKind::EField => {
                cfg.grid.x_min = nm(-800.0);
                cfg.grid.x_max = nm(2000.0);
                cfg.pre = table2_state(StateId::Phi5);
                cfg.e_field = -1e6;
                cfg.stride_steps = vec![50];
                cfg.t_end = 0.4 * PS;
                cfg.thetas = vec![];
            }
            ScenarioKind::BField => {
                cfg.grid.dx = nm(0.5);
                cfg.grid.x_min = nm(-700.0);
                cfg.grid.x_max = nm(620.0);
                cfg.stride_steps = vec![50];
                cfg.t_end = 20.0 * PS;
                cfg.period_window = 10.0 * PS;
                cfg.traj_dt = 0.1 * FS;
                cfg.thetas = vec![];
            }
            _ => {}
        }
        cfg
    }

    /// Evenly spaced sample times in [0, t_end), each a multiple of `unit`.
    pub fn sample_times(&self, unit: f64) -> Vec<f64> {
        let n = self.sample_times.max(1);
        (0..n)
            .map(|i| {
                let t = self.t_end * i as f64 / n as f64;
                (t / unit).round() * unit
            })
            .collect()
    }
}

fn cfg_err(key: &str, msg: impl Into<String>) -> Error {
    Error::ConfigValue { key: key.to_string(), msg: msg.into() }
}

fn num(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| cfg_err(key, format!("'{v}' is not a number")))?;
    if !x.is_finite() {
        return Err(cfg_err(key, "must be finite"));
    }
    Ok(x)
}

fn positive(key: &str, v: &str) -> Result<f64> {
    let x = num(key, v)?;
    if x <= 0.0 {
        return Err(cfg_err(key, format!("must be positive, got {x}")));
    }
    Ok(x)
}

fn count(key: &str, v: &str) -> Result<usize> {
    v.parse().map_err(|_| cfg_err(key, format!("'{v}' is not a non-negative integer")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(cfg_err(key, format!("'{v}' is not a boolean"))),
    }
}

fn list<T>(key: &str, v: &str, f: impl Fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| f(key, s)).collect()
}

struct Entry {
    line: usize,
    section: String,
    key: String,
    value: String,
}

fn tokenize(text: &str) -> Result<Vec<Entry>> {
    const SECTIONS: [&str; 5] = ["grid", "states", "gauge", "derivatives", "run"];
    let mut section: Option<String> = None;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split(['#', ';']).next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or(Error::ConfigParse { line, msg: "unterminated section header".into() })?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(Error::ConfigParse { line, msg: format!("unknown section [{name}]") });
            }
            section = Some(name.to_string());
            continue;
        }
        let (k, v) = s.split_once('=').ok_or(Error::ConfigParse { line, msg: format!("expected key = value, got '{s}'") })?;
        let section = section.clone().ok_or(Error::ConfigParse { line, msg: "key outside of a section".into() })?;
        out.push(Entry { line, section, key: k.trim().to_string(), value: v.trim().to_string() });
    }
    Ok(out)
}

fn set_packet(p: &mut PacketParams, field: &str, key: &str, v: &str) -> Result<()> {
    match field {
        "energy_mev" => p.energy = mev(num(key, v)?),
        "center_nm" => p.center = nm(num(key, v)?),
        "sigma_nm" => p.sigma = nm(positive(key, v)?),
        _ => unreachable!(),
    }
    Ok(())
}

/// Parse a scenario file. `kind` in [run] selects the defaults the other keys override.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let entries = tokenize(text)?;
    let kind = match entries.iter().find(|e| e.section == "run" && e.key == "kind") {
        Some(e) => e.value.parse().map_err(|m: String| cfg_err("run.kind", m))?,
        None => ScenarioKind::Custom,
    };
    let mut cfg = ScenarioConfig::defaults(kind);
    let mut theta_count = None;
    for e in &entries {
        let path = format!("{}.{}", e.section, e.key);
        let (key, v) = (path.as_str(), e.value.as_str());
        match (e.section.as_str(), e.key.as_str()) {
            ("grid", "dx_nm") => cfg.grid.dx = nm(positive(key, v)?),
            ("grid", "dt_fs") => cfg.grid.dt = positive(key, v)? * FS,
            ("grid", "x_min_nm") => cfg.grid.x_min = nm(num(key, v)?),
            ("grid", "x_max_nm") => cfg.grid.x_max = nm(num(key, v)?),
            ("grid", "dy_nm") => cfg.grid.dy = nm(positive(key, v)?),
            ("grid", "y_min_nm") => cfg.grid.y_min = nm(num(key, v)?),
            ("grid", "y_max_nm") => cfg.grid.y_max = nm(num(key, v)?),
            ("states", "pre") => cfg.pre = table2_state(v.parse()?),
            ("states", "post") => cfg.post = table2_state(v.parse()?),
            ("states", k) if k.starts_with("pre_") && ["energy_mev", "center_nm", "sigma_nm"].contains(&&k[4..]) => {
                set_packet(&mut cfg.pre, &k[4..], key, v)?
            }
            ("states", k) if k.starts_with("post_") && ["energy_mev", "center_nm", "sigma_nm"].contains(&&k[5..]) => {
                set_packet(&mut cfg.post, &k[5..], key, v)?
            }
            ("states", "e_field_v_per_m") => cfg.e_field = num(key, v)?,
            ("states", "landau_b_t") => cfg.landau.b = num(key, v)?,
            ("states", "landau_ky_per_nm") => cfg.landau.k_y = num(key, v)? / NM,
            ("states", "landau_levels") => cfg.landau.levels = count(key, v)?,
            ("gauge", "theta_count") => theta_count = Some(count(key, v)?),
            ("gauge", "thetas_rad") => cfg.thetas = list(key, v, num)?,
            ("derivatives", "stride_steps") => cfg.stride_steps = list(key, v, count)?,
            ("derivatives", "refine") => cfg.refine = flag(key, v)?,
            ("derivatives", "kinetic_mode") => {
                cfg.kinetic_mode = match v {
                    "direct" => KineticMode::Direct,
                    "bohmian" => KineticMode::Bohmian,
                    _ => return Err(cfg_err(key, format!("expected direct or bohmian, got '{v}'"))),
                }
            }
            ("derivatives", "anchor") => {
                cfg.anchor = match v {
                    "comoving" => PostAnchor::Comoving,
                    "fixed" => PostAnchor::Fixed,
                    _ => return Err(cfg_err(key, format!("expected comoving or fixed, got '{v}'"))),
                }
            }
            ("run", "kind") => {}
            ("run", "seed") => cfg.seed = v.parse().map_err(|_| cfg_err(key, format!("'{v}' is not a u64")))?,
            ("run", "trajectories") => cfg.trajectories = count(key, v)?,
            ("run", "sample_times") => cfg.sample_times = count(key, v)?,
            ("run", "t_end_ps") => cfg.t_end = positive(key, v)? * PS,
            ("run", "period_window_ps") => cfg.period_window = num(key, v)?.max(0.0) * PS,
            ("run", "traj_dt_fs") => cfg.traj_dt = positive(key, v)? * FS,
            ("run", "out") => cfg.out = PathBuf::from(v),
            _ => return Err(Error::ConfigParse { line: e.line, msg: format!("unknown key '{path}'") }),
        }
    }
    if let Some(n) = theta_count {
        cfg.thetas = default_thetas(n);
    }
    validate(&cfg)?;
    Ok(cfg)
}

pub fn validate(cfg: &ScenarioConfig) -> Result<()> {
    let g = &cfg.grid;
    if g.x_max <= g.x_min {
        return Err(cfg_err("grid.x_max_nm", "must exceed x_min_nm"));
    }
    if g.y_max <= g.y_min {
        return Err(cfg_err("grid.y_max_nm", "must exceed y_min_nm"));
    }
    if cfg.stride_steps.is_empty() || cfg.stride_steps.contains(&0) {
        return Err(cfg_err("derivatives.stride_steps", "needs at least one positive stride"));
    }
    if cfg.landau.levels == 0 {
        return Err(cfg_err("states.landau_levels", "must be at least 1"));
    }
    let ratio = cfg.traj_dt / g.dt;
    if cfg.kind == ScenarioKind::BField && ((ratio - ratio.round()).abs() > 1e-6 || ratio < 0.5) {
        return Err(cfg_err("run.traj_dt_fs", "must be a multiple of grid.dt_fs"));
    }
    Ok(())
}
