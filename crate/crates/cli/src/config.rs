//! Run configuration: presets, flat `key = value` config files and flags.
//! Precedence is flags (and `DECAYLIFE_SEED`) over the config file over
//! preset defaults.

use clap::{Args, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::path::{Path, PathBuf};

use decaylife_core::lifetime::RegimeConfig;
use decaylife_core::optimize::{default_k_grid, log_grid, RatioModel, DEFAULT_SEED};
use decaylife_core::system::{BasisMap, PostselectParams, StateSpec, SystemParams};

use crate::error::CliError;
use crate::output::parse_f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub dm_over_gamma: f64,
    pub k: f64,
    pub provenance: &'static str,
}

pub const PRESETS: [Preset; 3] = [
    Preset {
        name: "dmeson",
        dm_over_gamma: 1e-3,
        k: 1.0,
        provenance: "D meson: ΔM/Γ~10⁻³, k=1",
    },
    Preset {
        name: "bmeson",
        dm_over_gamma: 0.77,
        k: 1.0,
        provenance: "B meson: ΔM/Γ≈0.77, k≈1",
    },
    Preset {
        name: "bsmeson",
        dm_over_gamma: 26.89,
        k: 1.0,
        provenance: "Bs meson: ΔM/Γ=26.89, k=1",
    },
];

pub fn preset(name: &str) -> Result<Preset, CliError> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .copied()
        .ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
            CliError::Usage(format!("unknown preset {name:?}; known: {}", names.join(", ")))
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Auto,
    Exact,
    Small,
    Large,
}

impl From<ModelArg> for RatioModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Auto => RatioModel::Auto,
            ModelArg::Exact => RatioModel::Exact,
            ModelArg::Small => RatioModel::SmallSplitting,
            ModelArg::Large => RatioModel::LargeSplitting,
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Named parameter set: dmeson, bmeson, bsmeson.
    #[arg(long)]
    pub preset: Option<String>,
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Mass splitting M_H - M_L.
    #[arg(long, allow_hyphen_values = true)]
    pub dm: Option<f64>,
    /// Width of the light eigenstate.
    #[arg(long)]
    pub gl: Option<f64>,
    /// Width of the heavy eigenstate.
    #[arg(long)]
    pub gh: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub ml: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mh: Option<f64>,
    /// Γ = 1 system with this ΔM/Γ (with --k).
    #[arg(long)]
    pub dm_over_gamma: Option<f64>,
    /// Γ_H/Γ_L for --dm-over-gamma.
    #[arg(long)]
    pub k: Option<f64>,
    /// Rescale the system to Γ = 1.
    #[arg(long)]
    pub normalize_gamma: bool,
    /// Basis coefficient p (real, with --q); default p = q = 1/√2.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    /// Preselected state: P, Pbar, or "re,im,re,im".
    #[arg(long, allow_hyphen_values = true)]
    pub pre: Option<String>,
    /// |b_P| of the postselected state.
    #[arg(long)]
    pub bmag: Option<f64>,
    /// Relative phase θ of the postselected state.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Postselected state as "re,im,re,im" (overrides --bmag/--theta).
    #[arg(long, allow_hyphen_values = true)]
    pub post: Option<String>,
    /// k grid as lo:hi:n[:log|lin].
    #[arg(long)]
    pub k_grid: Option<String>,
    #[arg(long, env = "DECAYLIFE_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
}

const SYSTEM_KEYS: [&str; 5] = ["dm", "gl", "gh", "ml", "mh"];
const REGIME_KEYS: [&str; 2] = ["dm_over_gamma", "k"];

/// Parses a flat `key = value` file. `#` starts a comment; keys may use `-` or `_`.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

fn read_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

/// Flags as a key map, for uniform precedence handling.
fn flag_map(a: &CommonArgs) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            m.insert(k.to_string(), v);
        }
    };
    put("preset", a.preset.clone());
    put("dm", a.dm.map(|x| x.to_string()));
    put("gl", a.gl.map(|x| x.to_string()));
    put("gh", a.gh.map(|x| x.to_string()));
    put("ml", a.ml.map(|x| x.to_string()));
    put("mh", a.mh.map(|x| x.to_string()));
    put("dm_over_gamma", a.dm_over_gamma.map(|x| x.to_string()));
    put("k", a.k.map(|x| x.to_string()));
    put("p", a.p.map(|x| x.to_string()));
    put("q", a.q.map(|x| x.to_string()));
    put("pre", a.pre.clone());
    put("bmag", a.bmag.map(|x| x.to_string()));
    put("theta", a.theta.map(|x| x.to_string()));
    put("post", a.post.clone());
    put("k_grid", a.k_grid.clone());
    put("seed", a.seed.map(|x| x.to_string()));
    put("out", a.out.as_ref().map(|p| p.display().to_string()));
    put("format", a.format.map(|f| format!("{f:?}").to_lowercase()));
    put("model", a.model.map(|m| format!("{m:?}").to_lowercase()));
    if a.normalize_gamma {
        put("normalize_gamma", Some("true".into()));
    }
    m
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub system: SystemParams,
    pub preset: Option<Preset>,
    pub basis: BasisMap,
    pub basis_symmetric: bool,
    pub pre: StateSpec,
    pub post: StateSpec,
    /// Set when the postselection is given as `(|b_P|, θ)`.
    pub post_params: Option<PostselectParams>,
    pub k_grid: Option<Vec<f64>>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub model: Option<RatioModel>,
}

struct Lookup {
    flags: BTreeMap<String, String>,
    file: BTreeMap<String, String>,
}

impl Lookup {
    fn get(&self, key: &str) -> Option<&str> {
        self.flags.get(key).or_else(|| self.file.get(key)).map(String::as_str)
    }

    fn num(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.get(key).map(parse_f64).transpose()
    }
}

fn parse_state(s: &str) -> Result<StateSpec, CliError> {
    match s.trim() {
        "P" | "p" => return Ok(StateSpec::p()),
        "Pbar" | "pbar" => return Ok(StateSpec::pbar()),
        _ => {}
    }
    let v = s.split(',').map(parse_f64).collect::<Result<Vec<f64>, _>>()?;
    if v.len() != 4 {
        return Err(CliError::Usage(format!("state {s:?}: expected P, Pbar, or re,im,re,im")));
    }
    Ok(StateSpec::new(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]))?)
}

/// `lo:hi:n[:log|lin]`, log spacing by default.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(CliError::Usage(format!("grid {s:?}: expected lo:hi:n[:log|lin]")));
    }
    let lo = parse_f64(parts[0])?;
    let hi = parse_f64(parts[1])?;
    let n: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("grid {s:?}: bad point count")))?;
    if n == 0 || !(hi >= lo) {
        return Err(CliError::Usage(format!("grid {s:?}: need n >= 1 and hi >= lo")));
    }
    match parts.get(3).map(|x| x.trim()) {
        None | Some("log") => Ok(log_grid(lo, hi, n)?),
        Some("lin") => Ok(if n == 1 {
            vec![lo]
        } else {
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        }),
        Some(other) => Err(CliError::Usage(format!("grid spacing {other:?}: expected log or lin"))),
    }
}

fn parse_model(s: &str) -> Result<RatioModel, CliError> {
    match s {
        "auto" => Ok(RatioModel::Auto),
        "exact" => Ok(RatioModel::Exact),
        "small" => Ok(RatioModel::SmallSplitting),
        "large" => Ok(RatioModel::LargeSplitting),
        _ => Err(CliError::Usage(format!("model {s:?}: expected auto, exact, small or large"))),
    }
}

fn parse_format(s: &str) -> Result<Format, CliError> {
    match s {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        _ => Err(CliError::Usage(format!("format {s:?}: expected csv or json"))),
    }
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let flags = flag_map(args);
        let file = match &args.config {
            Some(p) => read_config(p)?,
            None => BTreeMap::new(),
        };
        if flags.contains_key("preset")
            && SYSTEM_KEYS.iter().chain(&REGIME_KEYS).any(|k| flags.contains_key(*k))
        {
            return Err(CliError::Usage(
                "give either --preset or explicit system parameters, not both".into(),
            ));
        }
        let look = Lookup { flags, file };
        let preset = look.get("preset").map(preset).transpose()?;

        let explicit = SYSTEM_KEYS.iter().any(|k| look.get(k).is_some());
        let regime = REGIME_KEYS.iter().any(|k| look.get(k).is_some());
        let mut system = if explicit {
            let gl = look.num("gl")?.ok_or_else(|| CliError::Usage("--gl is required".into()))?;
            let gh = look.num("gh")?.ok_or_else(|| CliError::Usage("--gh is required".into()))?;
            let ml = look.num("ml")?.unwrap_or(0.0);
            let mh = match (look.num("mh")?, look.num("dm")?) {
                (Some(mh), Some(dm)) if (mh - ml - dm).abs() > 1e-12 * mh.abs().max(1.0) => {
                    return Err(CliError::Usage("--dm disagrees with --mh - --ml".into()));
                }
                (Some(mh), _) => mh,
                (None, Some(dm)) => ml + dm,
                (None, None) => return Err(CliError::Usage("--dm or --mh is required".into())),
            };
            SystemParams::new(ml, mh, gl, gh)?
        } else if regime || preset.is_some() {
            let e = look.num("dm_over_gamma")?.or(preset.map(|p| p.dm_over_gamma));
            let e = e.ok_or_else(|| CliError::Usage("--dm-over-gamma is required".into()))?;
            let k = look.num("k")?.or(preset.map(|p| p.k)).unwrap_or(1.0);
            RegimeConfig::new(e, k)?.system()
        } else {
            return Err(CliError::Usage(
                "no system: give --preset, --gl/--gh/--dm, or --dm-over-gamma".into(),
            ));
        };
        if look.get("normalize_gamma").is_some_and(|v| v == "true") {
            system = system.normalized_to_unit_gamma();
        }

        let (basis, basis_symmetric) = match (look.num("p")?, look.num("q")?) {
            (None, None) => (BasisMap::symmetric(), true),
            (Some(p), Some(q)) => (BasisMap::restricted(p, q)?, false),
            _ => return Err(CliError::Usage("--p and --q go together".into())),
        };
        let pre = look.get("pre").map(parse_state).transpose()?.unwrap_or_else(StateSpec::p);
        let (post, post_params) = match look.get("post") {
            Some(s) => (parse_state(s)?, None),
            None => {
                let b = look.num("bmag")?.unwrap_or(FRAC_1_SQRT_2);
                let t = look.num("theta")?.unwrap_or(0.0);
                let ps = PostselectParams::new(b, t)?;
                (StateSpec::from_postselect(&ps), Some(ps))
            }
        };
        let seed = match look.get("seed") {
            Some(s) => s
                .trim()
                .parse::<u64>()
                .map_err(|_| CliError::Usage(format!("seed {s:?} is not a 64-bit integer")))?,
            None => DEFAULT_SEED,
        };
        Ok(Self {
            system,
            preset,
            basis,
            basis_symmetric,
            pre,
            post,
            post_params,
            k_grid: look.get("k_grid").map(parse_grid).transpose()?,
            seed,
            out: look.get("out").map(PathBuf::from),
            format: look.get("format").map(parse_format).transpose()?,
            model: look.get("model").map(parse_model).transpose()?,
        })
    }

    pub fn k_grid_or_default(&self) -> Vec<f64> {
        self.k_grid.clone().unwrap_or_else(default_k_grid)
    }
}

/// Like [`RunConfig::resolve`] but a system is optional (figure, validate).
pub fn resolve_loose(args: &CommonArgs) -> Result<Option<RunConfig>, CliError> {
    let any_system = args.preset.is_some()
        || args.config.is_some()
        || args.dm.is_some()
        || args.gl.is_some()
        || args.gh.is_some()
        || args.dm_over_gamma.is_some();
    if any_system {
        RunConfig::resolve(args).map(Some)
    } else {
        Ok(None)
    }
}
