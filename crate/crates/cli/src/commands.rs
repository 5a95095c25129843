use clap::Args;
use serde::Serialize;
use std::path::PathBuf;

use decaylife_core::distributions::{coeffs, norm_integral, DecayModel, DistributionKind};
use decaylife_core::figures::{figure, CurveRole, FigureCurve};
use decaylife_core::lifetime::{
    lifetime_conditional, lifetime_linear, lifetime_unconditional, shifted_weak_value, weak_value,
    WeakValue, RegimeConfig,
};
use decaylife_core::montecarlo::{estimate_lifetime, sample_with, SamplerOptions};
use decaylife_core::optimize::{envelope_with, envelope_at_theta, EnvelopeCurve, ExtremumOptions, RatioModel};
use decaylife_core::rng;
use decaylife_core::system::{PostselectParams, StateSpec, SystemParams};
use decaylife_core::validation::{run_all, CheckOutcome};
use decaylife_core::Error as CoreError;

use crate::config::{parse_grid, resolve_loose, CommonArgs, Format, Preset, RunConfig};
use crate::error::CliError;
use crate::output::{csv_text, emit, fmt_f64, json_text, write_atomic};

#[derive(Debug, Serialize)]
struct SystemEcho {
    m_light: f64,
    m_heavy: f64,
    gamma_light: f64,
    gamma_heavy: f64,
    delta_m: f64,
    gamma: f64,
    k: f64,
    dm_over_gamma: f64,
}

impl From<&SystemParams> for SystemEcho {
    fn from(s: &SystemParams) -> Self {
        Self {
            m_light: s.m_light(),
            m_heavy: s.m_heavy(),
            gamma_light: s.gamma_light(),
            gamma_heavy: s.gamma_heavy(),
            delta_m: s.delta_m(),
            gamma: s.gamma(),
            k: s.k(),
            dm_over_gamma: s.dm_over_gamma(),
        }
    }
}

#[derive(Debug, Serialize)]
struct StateEcho {
    a_p: [f64; 2],
    a_pbar: [f64; 2],
}

impl From<&StateSpec> for StateEcho {
    fn from(s: &StateSpec) -> Self {
        Self {
            a_p: [s.a_p().re, s.a_p().im],
            a_pbar: [s.a_pbar().re, s.a_pbar().im],
        }
    }
}

#[derive(Debug, Serialize)]
struct EvalReport {
    preset: Option<Preset>,
    system: SystemEcho,
    basis_symmetric: bool,
    pre: StateEcho,
    post: StateEcho,
    post_params: Option<PostselectParams>,
    tau_unconditional: f64,
    tau_conditional: f64,
    tau_linear: f64,
    postselection_probability: f64,
    ratio: f64,
    /// Null when ΔM = 0; see `shifted_weak_value`.
    weak_value: Option<WeakValue>,
    /// `g·A_w`, the weak value of `Ĥ - (M - iΓ/2)`; finite at ΔM = 0.
    shifted_weak_value: WeakValue,
    /// ΔM/(2Γ); the first-order lifetime needs this ≪ 1.
    coupling: f64,
    notes: Vec<String>,
}

fn eval_report(cfg: &RunConfig) -> Result<EvalReport, CliError> {
    let sys = &cfg.system;
    let c = coeffs(&cfg.pre, &cfg.post, &cfg.basis)?;
    let tau_u = lifetime_unconditional(sys, &cfg.basis, &cfg.pre)?;
    let tau_c = lifetime_conditional(sys, &c)?;
    let lin = lifetime_linear(sys, &c)?;
    let mut notes = Vec::new();
    let wv = match weak_value(sys, &c) {
        Ok(w) => Some(w),
        Err(CoreError::DegenerateMass) => {
            notes.push("dM = 0: normalized weak value undefined; shifted_weak_value is used for tau_linear".into());
            None
        }
        Err(e) => return Err(e.into()),
    };
    Ok(EvalReport {
        preset: cfg.preset,
        system: sys.into(),
        basis_symmetric: cfg.basis_symmetric,
        pre: (&cfg.pre).into(),
        post: (&cfg.post).into(),
        post_params: cfg.post_params,
        tau_unconditional: tau_u,
        tau_conditional: tau_c,
        tau_linear: lin.tau,
        postselection_probability: norm_integral(sys, &c)?,
        ratio: tau_c / tau_u,
        weak_value: wv,
        shifted_weak_value: shifted_weak_value(sys, &c)?.into(),
        coupling: lin.coupling,
        notes,
    })
}

pub fn cmd_eval(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args)?;
    let r = eval_report(&cfg)?;
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => json_text(&r)?,
        Format::Csv => {
            let mut rows: Vec<(&str, f64)> = vec![
                ("tau_unconditional", r.tau_unconditional),
                ("tau_conditional", r.tau_conditional),
                ("tau_linear", r.tau_linear),
                ("postselection_probability", r.postselection_probability),
                ("ratio", r.ratio),
            ];
            if let Some(w) = r.weak_value {
                rows.push(("weak_value_re", w.re));
                rows.push(("weak_value_im", w.im));
            }
            rows.push(("shifted_weak_value_re", r.shifted_weak_value.re));
            rows.push(("shifted_weak_value_im", r.shifted_weak_value.im));
            rows.push(("coupling", r.coupling));
            let rows: Vec<Vec<String>> = rows.into_iter().map(|(k, v)| vec![k.to_string(), fmt_f64(v)]).collect();
            csv_text(&["field", "value"], &rows)
        }
    };
    emit(cfg.out.as_deref(), &text)
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    /// Figure number, 1 to 4.
    pub number: String,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Serialize)]
struct ManifestCurve {
    file: String,
    name: String,
    role: CurveRole,
    dm_over_gamma: f64,
    b_mag: Option<f64>,
    theta: Option<f64>,
    model: RatioModel,
    points: usize,
    limit_points: Vec<usize>,
}

#[derive(Debug, Serialize)]
struct Manifest {
    figure: u8,
    description: String,
    k_grid: KGridEcho,
    curves: Vec<ManifestCurve>,
    notes: Vec<String>,
}

#[derive(Debug, Serialize)]
struct KGridEcho {
    lo: f64,
    hi: f64,
    n: usize,
}

fn curve_csv(c: &FigureCurve) -> String {
    let rows: Vec<Vec<String>> = c.k.iter().zip(&c.r).map(|(k, r)| vec![fmt_f64(*k), fmt_f64(*r)]).collect();
    csv_text(&["k", "R"], &rows)
}

pub fn figure_number(s: &str) -> Result<u8, CliError> {
    match s.trim().parse::<u8>() {
        Ok(n @ 1..=4) => Ok(n),
        _ => Err(CliError::Usage(format!("figure number must be 1, 2, 3 or 4, got {s:?}"))),
    }
}

pub fn cmd_figure(args: &FigureArgs) -> Result<PathBuf, CliError> {
    let n = figure_number(&args.number)?;
    let k_grid = match &args.common.k_grid {
        Some(g) => parse_grid(g)?,
        None => decaylife_core::optimize::default_k_grid(),
    };
    let dir = args.common.out.clone().unwrap_or_else(|| PathBuf::from("figures"));
    let data = figure(n, &k_grid)?;
    let mut curves = Vec::new();
    for c in &data.curves {
        let file = format!("fig{n}_{}.csv", c.spec.name);
        write_atomic(&dir.join(&file), curve_csv(c).as_bytes())?;
        curves.push(ManifestCurve {
            file,
            name: c.spec.name.clone(),
            role: c.spec.role,
            dm_over_gamma: c.spec.dm_over_gamma,
            b_mag: c.spec.b_mag,
            theta: c.spec.theta,
            model: c.spec.model,
            points: c.k.len(),
            limit_points: c.limit.iter().enumerate().filter(|(_, &l)| l).map(|(i, _)| i).collect(),
        });
    }
    let manifest = Manifest {
        figure: n,
        description: data.description,
        k_grid: KGridEcho {
            lo: k_grid[0],
            hi: k_grid[k_grid.len() - 1],
            n: k_grid.len(),
        },
        curves,
        notes: data.notes,
    };
    let path = dir.join(format!("fig{n}_manifest.json"));
    write_atomic(&path, json_text(&manifest)?.as_bytes())?;
    Ok(path)
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// |b_P| grid lo:hi:n[:log|lin]; default is the single --bmag value.
    #[arg(long)]
    pub bmag_grid: Option<String>,
    /// θ grid lo:hi:n[:log|lin]; default is the single --theta value.
    #[arg(long)]
    pub theta_grid: Option<String>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Serialize)]
struct SweepRow {
    k: f64,
    b_mag: f64,
    theta: f64,
    r: f64,
}

fn lin_grid(s: &str) -> Result<Vec<f64>, CliError> {
    if s.split(':').count() == 3 {
        parse_grid(&format!("{s}:lin"))
    } else {
        parse_grid(s)
    }
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&args.common)?;
    let e = cfg.system.dm_over_gamma();
    let model = cfg.model.unwrap_or(RatioModel::Exact);
    let base = cfg
        .post_params
        .ok_or_else(|| CliError::Usage("sweep needs --bmag/--theta, not --post".into()))?;
    let bs = match &args.bmag_grid {
        Some(g) => lin_grid(g)?,
        None => vec![base.b_mag()],
    };
    let ts = match &args.theta_grid {
        Some(g) => lin_grid(g)?,
        None => vec![base.theta()],
    };
    let ks = cfg.k_grid_or_default();
    let mut points = Vec::with_capacity(ks.len() * bs.len() * ts.len());
    for &k in &ks {
        for &b in &bs {
            for &t in &ts {
                points.push((k, b, t));
            }
        }
    }
    let rows = decaylife_core::exec::par_map(&points, |_, &(k, b, t)| -> Result<SweepRow, CoreError> {
        let ps = PostselectParams::new(b, t)?;
        let r = model.eval(&RegimeConfig::new(e, k)?, &ps)?;
        Ok(SweepRow { k, b_mag: b, theta: t, r })
    });
    let rows: Vec<SweepRow> = rows.into_iter().collect::<Result<_, _>>()?;
    let text = match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => json_text(&serde_json::json!({
            "dm_over_gamma": e,
            "model": model,
            "rows": rows,
        }))?,
        Format::Csv => {
            let r: Vec<Vec<String>> = rows
                .iter()
                .map(|x| vec![fmt_f64(x.k), fmt_f64(x.b_mag), fmt_f64(x.theta), fmt_f64(x.r)])
                .collect();
            csv_text(&["k", "b_mag", "theta", "R"], &r)
        }
    };
    emit(cfg.out.as_deref(), &text)
}

#[derive(Debug, Args)]
pub struct EnvelopeArgs {
    /// Take extrema over |b_P| only, at this θ.
    #[arg(long, allow_hyphen_values = true)]
    pub at_theta: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

fn envelope_csv(env: &EnvelopeCurve) -> String {
    let rows: Vec<Vec<String>> = (0..env.k_grid.len())
        .map(|i| {
            vec![
                fmt_f64(env.k_grid[i]),
                fmt_f64(env.upper[i]),
                fmt_f64(env.lower[i]),
                (env.limit[i] as u8).to_string(),
            ]
        })
        .collect();
    csv_text(&["k", "upper", "lower", "limit"], &rows)
}

pub fn cmd_envelope(args: &EnvelopeArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&args.common)?;
    let e = cfg.system.dm_over_gamma();
    let model = cfg.model.unwrap_or(RatioModel::Auto);
    let ks = cfg.k_grid_or_default();
    let env = match args.at_theta {
        Some(t) => envelope_at_theta(e, &ks, t, model)?,
        None => envelope_with(
            e,
            &ks,
            &ExtremumOptions {
                model,
                seed: cfg.seed,
                ..Default::default()
            },
        )?,
    };
    let text = match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => json_text(&env)?,
        Format::Csv => envelope_csv(&env),
    };
    emit(cfg.out.as_deref(), &text)
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Number of draws.
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    /// Sample the decay time without postselection.
    #[arg(long)]
    pub unconditional: bool,
    /// One draw per equal-probability stratum.
    #[arg(long)]
    pub stratified: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Serialize)]
struct SampleReport {
    kind: DistributionKind,
    n: usize,
    seed: u64,
    stratified: bool,
    mean: f64,
    stderr: f64,
    closed_form_mean: f64,
    /// `(mean - closed_form_mean) / stderr`
    z: f64,
    times_file: String,
}

pub fn cmd_sample(args: &SampleArgs) -> Result<PathBuf, CliError> {
    let cfg = RunConfig::resolve(&args.common)?;
    let dir = cfg
        .out
        .clone()
        .ok_or_else(|| CliError::Usage("sample needs --out DIR".into()))?;
    let model = if args.unconditional {
        DecayModel::unconditional(&cfg.system, &cfg.basis, &cfg.pre)?
    } else {
        DecayModel::conditional(&cfg.system, &coeffs(&cfg.pre, &cfg.post, &cfg.basis)?)?
    };
    let batch = sample_with(
        &model,
        args.n,
        cfg.seed,
        SamplerOptions {
            stratified: args.stratified,
        },
    )?;
    let rows: Vec<Vec<String>> = batch.times.iter().map(|t| vec![fmt_f64(*t)]).collect();
    write_atomic(&dir.join("times.csv"), csv_text(&["t"], &rows).as_bytes())?;
    let (mean, stderr) = match estimate_lifetime(&batch) {
        Ok(e) => (e.mean, e.stderr),
        Err(CoreError::InsufficientSamples { .. }) => (batch.times[0], f64::NAN),
        Err(e) => return Err(e.into()),
    };
    let closed = model.mean();
    let report = SampleReport {
        kind: batch.kind,
        n: batch.n,
        seed: batch.seed,
        stratified: batch.stratified,
        mean,
        stderr,
        closed_form_mean: closed,
        z: (mean - closed) / stderr,
        times_file: "times.csv".into(),
    };
    let path = dir.join("estimate.json");
    write_atomic(&path, json_text(&report)?.as_bytes())?;
    Ok(path)
}

/// CSV text round trip over random bit patterns.
fn csv_round_trip(seed: u64) -> CheckOutcome {
    let mut s = rng::stream(seed);
    let mut bad = None;
    for _ in 0..100_000 {
        let x = f64::from_bits(rand_bits(&mut s));
        if !x.is_finite() {
            continue;
        }
        let back: f64 = fmt_f64(x).parse().unwrap_or(f64::NAN);
        if back.to_bits() != x.to_bits() {
            bad = Some(x);
            break;
        }
    }
    CheckOutcome {
        name: "csv_round_trip".into(),
        passed: bad.is_none(),
        detail: match bad {
            Some(x) => format!("{x:e} does not round-trip"),
            None => "100000 random doubles round-trip bit-exactly".into(),
        },
    }
}

fn rand_bits(s: &mut rng::Stream) -> u64 {
    let hi = (rng::uniform(s) * 4294967296.0) as u64;
    let lo = (rng::uniform(s) * 4294967296.0) as u64;
    (hi << 32) | lo
}

pub fn cmd_validate(args: &CommonArgs) -> Result<(), CliError> {
    let seed = args.seed.unwrap_or(decaylife_core::optimize::DEFAULT_SEED);
    // a system is not needed, but a malformed one is still an error
    resolve_loose(args)?;
    let mut results = run_all(seed);
    results.push(csv_round_trip(seed));
    let text = match args.format.unwrap_or(Format::Csv) {
        Format::Json => json_text(&results)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = results
                .iter()
                .map(|r| {
                    vec![
                        r.name.clone(),
                        if r.passed { "pass" } else { "FAIL" }.to_string(),
                        format!("\"{}\"", r.detail.replace('"', "'")),
                    ]
                })
                .collect();
            csv_text(&["check", "status", "detail"], &rows)
        }
    };
    emit(args.out.as_deref(), &text)?;
    let failing: Vec<String> = results.into_iter().filter(|r| !r.passed).map(|r| r.name).collect();
    if failing.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failing))
    }
}
