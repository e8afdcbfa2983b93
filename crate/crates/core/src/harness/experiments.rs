use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{RunSettings, Settings};
use super::output::{
    ensure_dir, loglog_fit, scatter_svg, write_csv, write_json, write_text, LineFit, RunRecord, Verdict,
};
use super::HarnessError;
use crate::asymmetry::{alpha, alpha_r, annulus_lower_bound, fraenkel, fraenkel_composite, symdiff_volume};
use crate::capacity::{cap_ball, cap_wos, capacity, deficit, CapacityMode, CapacityResult, Solver, WosConfig, WosTarget};
use crate::domains::{
    generate_family, parse_record, CompositeDomain, FamilyMember, FamilySpec, FamilyVariant, StarDomain,
};
use crate::sphere::{unit_ball_volume, HarmonicCoeffs};
use crate::stability::{
    ball_profile, default_profile_grid, h_half_norm, second_variation, spectrum, taylor_check, QuadraticFormSpec,
    TaylorRow,
};
use crate::vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    SolverFailure,
    PropertyViolation,
}

impl Status {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Ok => 0,
            Self::SolverFailure => 3,
            Self::PropertyViolation => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub summary: Value,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Cap,
    Sweep,
    Fuglede,
    Truncation,
    Spectrum,
    Profile,
    Asym,
}

pub fn run(command: Command, settings: &Settings) -> Result<CommandOutput, HarnessError> {
    match command {
        Command::Cap => cmd_cap(settings),
        Command::Sweep => cmd_sweep(settings),
        Command::Fuglede => cmd_fuglede(settings),
        Command::Truncation => cmd_truncation(settings),
        Command::Spectrum => cmd_spectrum(settings),
        Command::Profile => cmd_profile(settings),
        Command::Asym => cmd_asym(settings),
    }
}

fn json_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("summaries serialize")
}

fn outer_radius(mode: CapacityMode) -> Option<f64> {
    match mode {
        CapacityMode::Absolute => None,
        CapacityMode::Relative { outer_radius } => Some(outer_radius),
    }
}

fn form_spec(mode: CapacityMode) -> QuadraticFormSpec {
    match mode {
        CapacityMode::Absolute => QuadraticFormSpec::absolute(3),
        CapacityMode::Relative { outer_radius } => QuadraticFormSpec::relative(3, outer_radius),
    }
}

fn prepare_out_dir(run: &RunSettings) -> Result<&Path, HarnessError> {
    ensure_dir(&run.out_dir)?;
    Ok(&run.out_dir)
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// The single domain named by `domain.ball`, `domain.ellipsoid` or
/// `domain.file`, if any.
fn domain_from(s: &Settings) -> Result<Option<(String, StarDomain)>, HarnessError> {
    let given: Vec<&str> = ["domain.ball", "domain.ellipsoid", "domain.file"]
        .into_iter()
        .filter(|k| s.contains(k))
        .collect();
    if given.len() > 1 {
        return Err(HarnessError::Config(format!("conflicting domain settings: {}", given.join(", "))));
    }
    if let Some(r) = s.get::<f64>("domain.ball")? {
        return Ok(Some((format!("ball-r{r}"), StarDomain::ball(r, vec3::ZERO)?)));
    }
    if let Some(eps) = s.get::<f64>("domain.ellipsoid")? {
        return Ok(Some((format!("ellipsoid-eps{eps}"), StarDomain::ellipsoid(eps)?)));
    }
    if let Some(path) = s.get_str("domain.file") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read domain file {path}: {e}")))?;
        let d = parse_record(&text).map_err(|e| HarnessError::Config(format!("{path}: {e}")))?;
        let id = Path::new(path)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "file".into());
        return Ok(Some((id, d)));
    }
    Ok(None)
}

pub fn cmd_cap(s: &Settings) -> Result<CommandOutput, HarnessError> {
    let run = RunSettings::from_settings(s)?;
    let (id, domain) = domain_from(s)?
        .ok_or_else(|| HarnessError::Config("cap needs a domain (--ball, --ellipsoid or --domain)".into()))?;
    let r = capacity(&domain, run.mode, &run.solver)?;
    Ok(CommandOutput {
        summary: json!({
            "domain": id,
            "mode": run.mode.label(),
            "R": outer_radius(run.mode),
            "value": r.value,
            "method": r.method,
            "error_estimate": r.error_estimate,
            "bias_bound": r.bias_bound,
        }),
        status: Status::Ok,
    })
}

/// Family from `[family]`; defaults reproduce the standard sweeps.
pub fn family_from_settings(s: &Settings, seed: u64) -> Result<FamilySpec, HarnessError> {
    let kind = s.get_str("family.kind").unwrap_or("random_star");
    let (variant, default_count) = match kind {
        "ellipsoid" => (
            FamilyVariant::Ellipsoid {
                eps_min: s.get_or("family.eps_min", 0.05)?,
                eps_max: s.get_or("family.eps_max", 0.4)?,
            },
            8,
        ),
        "harmonic" => (
            FamilyVariant::HarmonicPerturbation {
                degree: s.get_or("family.degree", 2)?,
                order: s.get_or("family.order", 0)?,
                amplitude: s.get_or("family.amplitude", 0.1)?,
            },
            6,
        ),
        "random_star" => (
            FamilyVariant::RandomStar {
                seed,
                max_degree: s.get_or("family.max_degree", 6)?,
                amplitude: s.get_or("family.amplitude", 0.3)?,
            },
            200,
        ),
        other => {
            return Err(HarnessError::Config(format!(
                "unknown family `{other}` (expected ellipsoid, harmonic or random_star)"
            )))
        }
    };
    let spec = FamilySpec {
        variant,
        count: s.get_or("family.count", default_count)?,
        normalize: s.get_bool("family.normalize", true)?,
    };
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub domain_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub mode: &'static str,
    #[serde(rename = "R")]
    pub outer_radius: Option<f64>,
    pub members: usize,
    pub solved: usize,
    pub failures: Vec<Failure>,
    /// Some member failed; the fit and the minimum cover the rest.
    pub partial: bool,
    pub fit: Option<LineFit>,
    /// Empirical constant: smallest ratio column.
    pub min_ratio: Option<f64>,
    pub min_ratio_domain: Option<String>,
    pub holds: usize,
    pub holds_within_error: usize,
    pub violated: usize,
    pub files: Vec<PathBuf>,
}

/// Evaluates one family member; the error string is kept for the summary.
pub fn evaluate_member(member: &FamilyMember, run: &RunSettings) -> Result<RunRecord, String> {
    let domain = member.domain.normalize_volume();
    let d = deficit(&domain, run.mode, &run.solver).map_err(|e| e.to_string())?;
    let a = fraenkel(&domain).value;
    let (alpha_value, ratio) = match run.mode {
        CapacityMode::Absolute => (alpha(&domain), d.value / (a * a)),
        CapacityMode::Relative { .. } => {
            let v = symdiff_volume(&domain, vec3::ZERO, 1.0);
            (alpha_r(&domain).map_err(|e| e.to_string())?, d.value / (v * v))
        }
    };
    let hhalf = domain.radial_perturbation().map(|phi| h_half_norm(&phi, &form_spec(run.mode)));
    Ok(RunRecord {
        domain_id: member.id.clone(),
        eps_or_t: member.parameter,
        volume: Some(domain.volume()),
        deficit: Some(d.value),
        deficit_err: Some(d.error),
        fraenkel: Some(a),
        alpha: Some(alpha_value),
        hhalf,
        ratio: ratio.is_finite().then_some(ratio),
        verdict: Some(Verdict::for_margin(d.value, d.error)),
    })
}

pub fn cmd_sweep(s: &Settings) -> Result<CommandOutput, HarnessError> {
    let run = RunSettings::from_settings(s)?;
    let spec = family_from_settings(s, run.seed)?;
    let members = generate_family(&spec)?;
    let out_dir = prepare_out_dir(&run)?;

    let results: Vec<Result<RunRecord, String>> = members.par_iter().map(|m| evaluate_member(m, &run)).collect();
    let mut records = Vec::with_capacity(members.len());
    let mut failures = Vec::new();
    for (m, r) in members.iter().zip(results) {
        match r {
            Ok(rec) => records.push(rec),
            Err(error) => {
                failures.push(Failure {
                    domain_id: m.id.clone(),
                    error,
                });
                records.push(RunRecord::failed(m.id.clone(), m.parameter));
            }
        }
    }

    let fit = loglog_fit(&records);
    let (min_ratio, min_ratio_domain) = records
        .iter()
        .filter_map(|r| r.ratio.map(|v| (v, &r.domain_id)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(v, id)| (Some(v), Some(id.clone())))
        .unwrap_or((None, None));
    let count = |v: Verdict| records.iter().filter(|r| r.verdict == Some(v)).count();

    let files = vec![
        out_dir.join("sweep.csv"),
        out_dir.join("sweep.json"),
        out_dir.join("sweep.svg"),
        out_dir.join("sweep_summary.json"),
    ];
    write_csv(&files[0], &records)?;
    write_json(&files[1], &records)?;
    let title = format!("deficit vs Fraenkel asymmetry ({} mode)", run.mode.label());
    let ts = run.timestamp.then(now_unix);
    write_text(&files[2], &scatter_svg(&records, fit.as_ref(), &title, ts))?;

    let summary = SweepSummary {
        mode: run.mode.label(),
        outer_radius: outer_radius(run.mode),
        members: members.len(),
        solved: members.len() - failures.len(),
        partial: !failures.is_empty(),
        failures,
        fit,
        min_ratio,
        min_ratio_domain,
        holds: count(Verdict::Holds),
        holds_within_error: count(Verdict::HoldsWithinError),
        violated: count(Verdict::Violated),
        files: files.clone(),
    };
    write_json(&files[3], &summary)?;
    let status = if summary.violated > 0 {
        Status::PropertyViolation
    } else if summary.partial {
        Status::SolverFailure
    } else {
        Status::Ok
    };
    Ok(CommandOutput {
        summary: json_value(&summary),
        status,
    })
}

pub fn cmd_fuglede(s: &Settings) -> Result<CommandOutput, HarnessError> {
    let run = RunSettings::from_settings(s)?;
    let degree: usize = s.get_or("fuglede.degree", 2)?;
    let order: i32 = s.get_or("fuglede.order", 0)?;
    if order.unsigned_abs() as usize > degree {
        return Err(HarnessError::Config(format!("order {order} exceeds degree {degree}")));
    }
    let ladder = s.get_list("fuglede.ladder")?.unwrap_or_else(|| vec![0.02, 0.01, 0.005]);
    if ladder.is_empty() || ladder.iter().any(|t| !(*t > 0.0 && *t < 0.5)) {
        return Err(HarnessError::Config("ladder entries must lie in (0, 0.5)".into()));
    }
    let phi = HarmonicCoeffs::single(degree, order, 1.0);
    let spec = form_spec(run.mode);
    let rows: Vec<TaylorRow> = taylor_check(&phi, &ladder, &spec, &run.solver)?;
    let out_dir = prepare_out_dir(&run)?;
    let files = vec![out_dir.join("fuglede.csv"), out_dir.join("fuglede.json")];
    write_csv(&files[0], &rows)?;
    write_json(&files[1], &rows)?;
    let form = second_variation(&phi, &spec);
    let decreasing = rows.windows(2).all(|w| w[1].e.abs() < w[0].e.abs());
    Ok(CommandOutput {
        summary: json!({
            "mode": run.mode.label(),
            "R": outer_radius(run.mode),
            "degree": degree,
            "order": order,
            "second_variation": form,
            "limit": 0.5 * form,
            "e_decreasing": decreasing,
            "rows": rows,
            "files": files,
        }),
        status: Status::Ok,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "R")]
    pub outer_radius: f64,
    pub degree: usize,
    pub dtn_exterior: f64,
    pub dtn_relative: f64,
    pub form_abs: f64,
    pub form_rel: f64,
}

pub fn cmd_spectrum(s: &Settings) -> Result<CommandOutput, HarnessError> {
    let run = RunSettings::from_settings(s)?;
    let n: usize = s.get_or("spectrum.n", 3)?;
    if n < 3 {
        return Err(HarnessError::Config(format!("dimension N = {n} must be at least 3")));
    }
    let radii = s.get_list("spectrum.r_list")?.unwrap_or_else(|| vec![2.0, 1e6]);
    if radii.is_empty() || radii.iter().any(|r| !(*r > 1.0)) {
        return Err(HarnessError::Config("every outer radius must exceed 1".into()));
    }
    let lmax: usize = s.get_or("spectrum.lmax", 4)?;
    let abs = spectrum(&QuadraticFormSpec::absolute(n), lmax);
    let mut rows = Vec::new();
    for &r in &radii {
        for (a, rel) in abs.iter().zip(spectrum(&QuadraticFormSpec::relative(n, r), lmax)) {
            rows.push(SpectrumRow {
                n,
                outer_radius: r,
                degree: a.degree,
                dtn_exterior: a.energy,
                dtn_relative: rel.energy,
                form_abs: a.form,
                form_rel: rel.form,
            });
        }
    }
    let out_dir = prepare_out_dir(&run)?;
    let path = out_dir.join("spectrum.csv");
    write_csv(&path, &rows)?;
    Ok(CommandOutput {
        summary: json!({ "rows": rows, "files": [path] }),
        status: Status::Ok,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub r: f64,
    pub g: f64,
}

pub fn cmd_profile(s: &Settings) -> Result<CommandOutput, HarnessError> {
    let run = RunSettings::from_settings(s)?;
    let big_r: f64 = s.get_or("solver.r", 2.0)?;
    let eta: f64 = s.get_or("profile.eta", 0.01)?;
    if !(big_r > 1.0) || !(eta > 0.0) {
        return Err(HarnessError::Config("profile needs R > 1 and η > 0".into()));
    }
    let grid = default_profile_grid(big_r);
    let p = ball_profile(&grid, big_r, eta, 3)?;
    let rows: Vec<ProfileRow> = p.radii.iter().zip(&p.values).map(|(&r, &g)| ProfileRow { r, g }).collect();
    let out_dir = prepare_out_dir(&run)?;
    let path = out_dir.join("profile.csv");
    write_csv(&path, &rows)?;
    let ok = p.argmin == 1.0 && p.c_emp > 0.0;
    Ok(CommandOutput {
        summary: json!({
            "R": big_r,
            "eta": eta,
            "points": rows.len(),
            "argmin": p.argmin,
            "c_emp": p.c_emp,
            "files": [path],
        }),
        status: if ok { Status::Ok } else { Status::PropertyViolation },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymRow {
    pub domain_id: String,
    pub eps_or_t: f64,
    pub volume: f64,
    /// |Ω Δ B₁|, unit ball at the origin.
    pub symdiff: f64,
    pub fraenkel: f64,
    pub alpha: f64,
    pub alpha_r: f64,
    pub annulus_bound: f64,
    /// α_R ≥ annulus bound, with a 1e−10 quadrature allowance.
    pub verdict: Verdict,
}

fn asym_row(id: String, parameter: f64, domain: &StarDomain) -> Result<AsymRow, HarnessError> {
    let domain = domain.normalize_volume();
    let v = symdiff_volume(&domain, vec3::ZERO, 1.0);
    let a_r = alpha_r(&domain)?;
    let bound = annulus_lower_bound(v, 3);
    Ok(AsymRow {
        domain_id: id,
        eps_or_t: parameter,
        volume: domain.volume(),
        symdiff: v,
        fraenkel: fraenkel(&domain).value,
        alpha: alpha(&domain),
        alpha_r: a_r,
        annulus_bound: bound,
        verdict: Verdict::for_margin(a_r - bound, 1e-10),
    })
}

pub fn cmd_asym(s: &Settings) -> Result<CommandOutput, HarnessError> {
    let run = RunSettings::from_settings(s)?;
    let rows: Vec<AsymRow> = match domain_from(s)? {
        Some((id, d)) => vec![asym_row(id, 0.0, &d)?],
        None => {
            let members = generate_family(&family_from_settings(s, run.seed)?)?;
            members
                .par_iter()
                .map(|m| asym_row(m.id.clone(), m.parameter, &m.domain))
                .collect::<Result<_, _>>()?
        }
    };
    let out_dir = prepare_out_dir(&run)?;
    let files = vec![out_dir.join("asym.csv"), out_dir.join("asym.json")];
    write_csv(&files[0], &rows)?;
    write_json(&files[1], &rows)?;
    let violated = rows.iter().filter(|r| r.verdict == Verdict::Violated).count();
    let summary = if rows.len() == 1 {
        json!({ "record": rows[0], "files": files })
    } else {
        json!({ "members": rows.len(), "violated": violated, "files": files })
    };
    Ok(CommandOutput {
        summary,
        status: if violated > 0 { Status::PropertyViolation } else { Status::Ok },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl From<&CapacityResult> for Estimate {
    fn from(r: &CapacityResult) -> Self {
        Self {
            value: r.value,
            error: r.total_error(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Item {
    pub item: u8,
    pub statement: &'static str,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationSummary {
    #[serde(rename = "S")]
    pub truncation_radius: f64,
    #[serde(rename = "S_prime")]
    pub outer_truncation_radius: f64,
    pub lambda: f64,
    /// |Ω ∖ B_S|.
    pub outside_volume: f64,
    pub far_volume_beyond_s_prime: f64,
    pub diameter: f64,
    /// 2λS: Ω̃ ⊂ λB_S.
    pub diameter_bound: f64,
    pub volume_tilde: f64,
    /// Capacity of Ω by walk-on-spheres (3σ error bar plus bias).
    pub cap_omega: Estimate,
    /// Capacity of Ω ∩ B_S by walk-on-spheres.
    pub cap_truncated: Estimate,
    pub deficit_omega: Estimate,
    pub deficit_tilde: Estimate,
    pub fraenkel_omega: f64,
    pub fraenkel_tilde: f64,
    /// D(Ω̃)/D(Ω); absent for 0/0.
    pub deficit_ratio: Option<f64>,
    /// Smallest C with D(Ω̃) ≤ C·D(Ω) and 𝒜(Ω̃) ≥ 𝒜(Ω) − C·D(Ω).
    pub c_emp: Option<f64>,
    /// Cap(B₁)(1 − |Ω∖B_S|/|B₁|)^{1/3}.
    pub estcap_lower: f64,
    /// (Cap(Ω) − Cap(Ω∩B_S))/((1 − S/S′)^{1/3}|Ω∖B_{S′}|^{1/3}) when the far mass is nonzero.
    pub estcap_c_emp: Option<f64>,
    pub items: Vec<Item>,
}

/// Absolute capacity: closed form or collocation for one component,
/// walk-on-spheres for several.
fn composite_capacity(c: &CompositeDomain, run: &RunSettings, wos: &WosConfig) -> Result<CapacityResult, HarnessError> {
    match c.components() {
        [single] => Ok(capacity(single, CapacityMode::Absolute, &auto_or(&run.solver))?),
        _ => wos_with_3_sigma(c, wos),
    }
}

fn auto_or(solver: &Solver) -> Solver {
    match solver {
        Solver::Wos(_) => Solver::default(),
        other => other.clone(),
    }
}

/// Walk-on-spheres capacity whose error estimate is widened to 3σ.
fn wos_with_3_sigma(c: &CompositeDomain, cfg: &WosConfig) -> Result<CapacityResult, HarnessError> {
    let mut r = cap_wos(&WosTarget::from(c), cfg)?;
    r.error_estimate *= 3.0;
    Ok(r)
}

fn composite_fraenkel(c: &CompositeDomain) -> f64 {
    match c.components() {
        [single] => fraenkel(single).value,
        _ => fraenkel_composite(c).value,
    }
}

pub fn cmd_truncation(s: &Settings) -> Result<CommandOutput, HarnessError> {
    let run = RunSettings::from_settings(s)?;
    let big_s: f64 = s.get_or("truncation.s", 2.0)?;
    let big_s_prime: f64 = s.get_or("truncation.s_prime", 2.0 * big_s)?;
    let far_fraction: f64 = s.get_or("truncation.far_volume", 0.01)?;
    let far_distance: f64 = s.get_or("truncation.far_distance", 10.0)?;
    let main_eps: f64 = s.get_or("truncation.main_eps", 0.0)?;
    if !(big_s > 0.0 && big_s_prime > big_s) {
        return Err(HarnessError::Config(format!("need 0 < S < S′, got S = {big_s}, S′ = {big_s_prime}")));
    }
    if !(0.0..1.0).contains(&far_fraction) {
        return Err(HarnessError::Config(format!("far volume fraction {far_fraction} outside [0, 1)")));
    }
    let wos = WosConfig {
        num_walks: s.get_or("solver.walks", 100_000)?,
        seed: run.seed,
        ..WosConfig::default()
    };

    let omega = unit_ball_volume(3);
    let main_scale = (1.0 - far_fraction).cbrt();
    let main = if main_eps == 0.0 {
        StarDomain::ball(main_scale, vec3::ZERO)?
    } else {
        StarDomain::ellipsoid(main_eps)?.normalize_volume().dilated(main_scale)
    };
    let mut parts = vec![main];
    if far_fraction > 0.0 {
        parts.push(StarDomain::ball(far_fraction.cbrt(), [far_distance, 0.0, 0.0])?);
    }
    let domain = CompositeDomain::new(parts)?;
    let (tilde, report) = domain.truncate_rescale(big_s)?;
    let (_, outer_report) = domain.truncate_rescale(big_s_prime)?;
    let truncated =
        CompositeDomain::new(report.kept.iter().map(|&i| domain.components()[i].clone()).collect())?;

    let cap_omega = composite_capacity(&domain, &run, &wos)?;
    let cap_tilde = composite_capacity(&tilde, &run, &wos)?;
    let ball = cap_ball(1.0, 3);
    let deficit_omega = Estimate {
        value: cap_omega.value - ball,
        error: cap_omega.total_error(),
    };
    let deficit_tilde = Estimate {
        value: cap_tilde.value - ball,
        error: cap_tilde.total_error(),
    };
    let fraenkel_omega = composite_fraenkel(&domain);
    let fraenkel_tilde = composite_fraenkel(&tilde);

    let ratio = deficit_tilde.value / deficit_omega.value;
    let deficit_ratio = ratio.is_finite().then_some(ratio);
    let c3 = if deficit_tilde.value <= 0.0 { Some(0.0) } else { deficit_ratio };
    let gap = fraenkel_omega - fraenkel_tilde;
    let c4 = if gap <= 0.0 {
        Some(0.0)
    } else {
        let c = gap / deficit_omega.value;
        (c.is_finite() && c >= 0.0).then_some(c)
    };
    let c_emp = match (c3, c4) {
        (Some(a), Some(b)) => Some(a.max(b).max(0.0)),
        _ => None,
    };

    // both sides of the capacity sandwich come from walk-on-spheres; the
    // second and third walks use their own seeds
    let wos_omega = wos_with_3_sigma(&domain, &WosConfig { seed: wos.seed.wrapping_add(1), ..wos.clone() })?;
    let wos_truncated = wos_with_3_sigma(&truncated, &WosConfig { seed: wos.seed.wrapping_add(2), ..wos.clone() })?;
    let estcap_lower = ball * (1.0 - report.outside_volume / omega).cbrt();
    let far = outer_report.outside_volume;
    let drop = wos_omega.value - wos_truncated.value;
    let drop_err = wos_omega.total_error() + wos_truncated.total_error();
    let estcap_c_emp = (far > 0.0).then(|| drop / ((1.0 - big_s / big_s_prime).cbrt() * far.cbrt()));

    let diameter_bound = 2.0 * report.lambda * big_s;
    let volume_tilde = tilde.volume();
    let holds = |ok: bool| if ok { Verdict::Holds } else { Verdict::Violated };
    let mut items = vec![
        Item {
            item: 1,
            statement: "diam(Ω̃) ≤ d",
            verdict: holds(report.diameter <= diameter_bound),
        },
        Item {
            item: 2,
            statement: "|Ω̃| = |B₁|",
            verdict: holds((volume_tilde - omega).abs() <= 1e-12 * omega),
        },
        Item {
            item: 3,
            statement: "D(Ω̃) ≤ C·D(Ω) with finite C",
            verdict: holds(c3.is_some()),
        },
        Item {
            item: 4,
            statement: "𝒜(Ω̃) ≥ 𝒜(Ω) − C·D(Ω) with finite C",
            verdict: holds(c4.is_some()),
        },
        Item {
            item: 5,
            statement: "Cap(B₁)(1 − |Ω∖B_S|/|B₁|)^{1/3} ≤ Cap(Ω∩B_S)",
            verdict: Verdict::for_margin(wos_truncated.value - estcap_lower, wos_truncated.total_error()),
        },
    ];
    if far > 0.0 {
        items.push(Item {
            item: 6,
            statement: "Cap(Ω∩B_S) < Cap(Ω), positive c for |Ω∖B_S′|",
            verdict: Verdict::for_margin(drop, drop_err),
        });
    }

    let summary = TruncationSummary {
        truncation_radius: big_s,
        outer_truncation_radius: big_s_prime,
        lambda: report.lambda,
        outside_volume: report.outside_volume,
        far_volume_beyond_s_prime: far,
        diameter: report.diameter,
        diameter_bound,
        volume_tilde,
        cap_omega: Estimate::from(&wos_omega),
        cap_truncated: Estimate::from(&wos_truncated),
        deficit_omega,
        deficit_tilde,
        fraenkel_omega,
        fraenkel_tilde,
        deficit_ratio,
        c_emp,
        estcap_lower,
        estcap_c_emp,
        items,
    };
    let out_dir = prepare_out_dir(&run)?;
    let path = out_dir.join("truncation.json");
    write_json(&path, &summary)?;
    let status = if summary.items.iter().any(|i| i.verdict == Verdict::Violated) {
        Status::PropertyViolation
    } else {
        Status::Ok
    };
    let mut value = json_value(&summary);
    value["files"] = json!([path]);
    Ok(CommandOutput { summary: value, status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn settings(pairs: &[(&str, &str)], dir: &Path) -> Settings {
        let mut s = Settings::new();
        s.set("run.out_dir", dir.to_str().unwrap()).unwrap();
        s.set("run.no_timestamp", "true").unwrap();
        for (k, v) in pairs {
            s.set(k, v).unwrap();
        }
        s
    }

    #[test]
    fn cap_of_balls() {
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_cap(&settings(&[("domain.ball", "1")], dir.path())).unwrap();
        assert_abs_diff_eq!(out.summary["value"].as_f64().unwrap(), 4.0 * PI, epsilon = 1e-13);
        let out = cmd_cap(&settings(&[("domain.ball", "1"), ("solver.mode", "rel"), ("solver.r", "2")], dir.path()))
            .unwrap();
        assert_abs_diff_eq!(out.summary["value"].as_f64().unwrap(), 8.0 * PI, epsilon = 1e-12);
        assert!(matches!(cmd_cap(&settings(&[], dir.path())), Err(HarnessError::Config(_))));
        let bad = dir.path().join("bad.txt");
        std::fs::write(&bad, "not a domain\n").unwrap();
        let err = cmd_cap(&settings(&[("domain.file", bad.to_str().unwrap())], dir.path())).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn empty_family_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let s = settings(&[("family.kind", "ellipsoid"), ("family.count", "0")], dir.path());
        assert!(matches!(cmd_sweep(&s), Err(HarnessError::Config(_))));
    }

    #[test]
    fn small_ellipsoid_sweep() {
        let dir = tempfile::tempdir().unwrap();
        let s = settings(&[("family.kind", "ellipsoid"), ("family.count", "4")], dir.path());
        let out = cmd_sweep(&s).unwrap();
        assert_eq!(out.status, Status::Ok);
        let slope = out.summary["fit"]["slope"].as_f64().unwrap();
        assert!((slope - 2.0).abs() < 0.15, "{slope}");
        let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert_eq!(csv.lines().count(), 5);
        assert!(std::fs::read_to_string(dir.path().join("sweep.svg")).unwrap().contains("<line"));
    }

    #[test]
    fn relative_sweep_records_failures_and_continues() {
        // ε = 0.49 in B₂ leaves the collocation solver's resolvable range
        let dir = tempfile::tempdir().unwrap();
        let s = settings(
            &[
                ("family.kind", "ellipsoid"),
                ("family.count", "2"),
                ("family.eps_min", "0.1"),
                ("family.eps_max", "0.49"),
                ("solver.mode", "rel"),
                ("solver.lmax", "8"),
            ],
            dir.path(),
        );
        let out = cmd_sweep(&s).unwrap();
        assert_eq!(out.summary["members"], 2);
        if out.summary["partial"].as_bool().unwrap() {
            assert_eq!(out.status, Status::SolverFailure);
            let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
            assert!(csv.contains("ellipsoid-001,0.49,,"));
        }
    }

    #[test]
    fn spectrum_table() {
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_spectrum(&settings(&[], dir.path())).unwrap();
        let rows = out.summary["rows"].as_array().unwrap();
        let l1 = rows.iter().find(|r| r["R"] == 2.0 && r["degree"] == 1).unwrap();
        assert_abs_diff_eq!(l1["dtn_relative"].as_f64().unwrap(), 17.0 / 7.0, epsilon = 1e-14);
        assert!(matches!(
            cmd_spectrum(&settings(&[("spectrum.r_list", "0.5")], dir.path())),
            Err(HarnessError::Config(_))
        ));
    }

    #[test]
    fn profile_minimum_at_one() {
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_profile(&settings(&[], dir.path())).unwrap();
        assert_eq!(out.status, Status::Ok);
        assert_eq!(out.summary["argmin"], 1.0);
        assert_eq!(out.summary["points"], 400);
    }

    #[test]
    fn truncation_without_far_mass_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let s = settings(
            &[("truncation.far_volume", "0"), ("truncation.main_eps", "0.1"), ("solver.walks", "20000")],
            dir.path(),
        );
        let out = cmd_truncation(&s).unwrap();
        assert_eq!(out.status, Status::Ok);
        assert_abs_diff_eq!(out.summary["lambda"].as_f64().unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.summary["deficit_ratio"].as_f64().unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn truncation_rejects_slicing() {
        let dir = tempfile::tempdir().unwrap();
        let s = settings(&[("truncation.far_distance", "2.0")], dir.path());
        assert!(matches!(cmd_truncation(&s), Err(HarnessError::Config(_))));
    }

    #[test]
    fn asym_single_domain() {
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_asym(&settings(&[("domain.ellipsoid", "0.1")], dir.path())).unwrap();
        assert_eq!(out.status, Status::Ok);
        let rec = &out.summary["record"];
        assert!(rec["alpha_r"].as_f64().unwrap() >= rec["annulus_bound"].as_f64().unwrap());
    }
}
