//! `isocap` command line tool. Exit codes: 0 ok, 2 config error, 3 solver
//! failure, 4 property violation.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isocap::harness::{self, Command, HarnessError, Settings};

#[derive(Parser, Debug)]
#[command(name = "isocap", version, about = "Capacity, asymmetry and isocapacitary deficits of star-shaped domains")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Settings file ([section] headers, key = value lines); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Absolute capacity in ℝ³ or capacity relative to B_R.
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    /// Outer radius for relative mode (and the profile).
    #[arg(long = "R", global = true)]
    outer_radius: Option<f64>,
    /// Spherical-harmonic truncation degree (table length for `spectrum`).
    #[arg(long = "Lmax", global = true)]
    lmax: Option<usize>,
    #[arg(long, global = true, value_enum)]
    method: Option<Method>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Walk-on-spheres walk count.
    #[arg(long, global = true)]
    walks: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Omit the generation timestamp from SVG output.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Worker threads (advisory; defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Mode {
    Abs,
    Rel,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Method {
    Auto,
    Harmonic,
    ClosedForm,
    Wos,
}

#[derive(Args, Debug, Default)]
struct DomainArgs {
    /// Ball of this radius centered at the origin.
    #[arg(long)]
    ball: Option<f64>,
    /// Volume-preserving ellipsoid with semi-axes (1+ε, 1+ε, (1+ε)⁻²).
    #[arg(long)]
    ellipsoid: Option<f64>,
    /// Domain record file (isocap-domain v1).
    #[arg(long)]
    domain: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct FamilyArgs {
    /// ellipsoid, harmonic or random_star.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    eps_min: Option<f64>,
    #[arg(long)]
    eps_max: Option<f64>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    order: Option<i32>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    max_degree: Option<usize>,
    #[arg(long)]
    normalize: Option<bool>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Capacity of one domain, printed as JSON.
    Cap(DomainArgs),
    /// Deficit/asymmetry sweep over a domain family (CSV, JSON, SVG).
    Sweep(FamilyArgs),
    /// Second-order Taylor check along t·Y_{l,m}.
    Fuglede {
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        order: Option<i32>,
        /// Comma-separated t values.
        #[arg(long)]
        ladder: Option<String>,
    },
    /// Truncation of a near-unit body with a far ball.
    Truncation {
        #[arg(long = "S")]
        s: Option<f64>,
        #[arg(long = "S-prime")]
        s_prime: Option<f64>,
        /// Far-ball volume as a fraction of |B₁|.
        #[arg(long)]
        far_volume: Option<f64>,
        #[arg(long)]
        far_distance: Option<f64>,
        /// Eccentricity of the main component (0 for a ball).
        #[arg(long)]
        main_eps: Option<f64>,
    },
    /// Dirichlet-to-Neumann and second-variation spectra.
    Spectrum {
        #[arg(long = "N")]
        n: Option<usize>,
        /// Comma-separated outer radii.
        #[arg(long = "R-list")]
        r_list: Option<String>,
    },
    /// Ball profile g(r) = Cap_R(B_r) + f_η(|B_r|).
    Profile {
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Asymmetries of one domain or of a family.
    Asym {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        family: FamilyArgs,
    },
}

struct Overrides(Settings);

impl Overrides {
    fn put<T: ToString>(&mut self, key: &str, v: Option<T>) -> Result<(), HarnessError> {
        match v {
            Some(v) => self.0.set(key, &v.to_string()),
            None => Ok(()),
        }
    }

    fn domain(&mut self, d: &DomainArgs) -> Result<(), HarnessError> {
        self.put("domain.ball", d.ball)?;
        self.put("domain.ellipsoid", d.ellipsoid)?;
        self.put("domain.file", d.domain.as_ref().map(|p| p.display()))
    }

    fn family(&mut self, f: &FamilyArgs) -> Result<(), HarnessError> {
        self.put("family.kind", f.family.as_ref())?;
        self.put("family.count", f.count)?;
        self.put("family.eps_min", f.eps_min)?;
        self.put("family.eps_max", f.eps_max)?;
        self.put("family.degree", f.degree)?;
        self.put("family.order", f.order)?;
        self.put("family.amplitude", f.amplitude)?;
        self.put("family.max_degree", f.max_degree)?;
        self.put("family.normalize", f.normalize)
    }
}

fn settings(cli: &Cli) -> Result<(Command, Settings), HarnessError> {
    let c = &cli.common;
    let mut settings = match &c.config {
        Some(path) => Settings::load(path)?,
        None => Settings::new(),
    };
    let mut o = Overrides(Settings::new());
    o.put(
        "solver.mode",
        c.mode.map(|m| match m {
            Mode::Abs => "abs",
            Mode::Rel => "rel",
        }),
    )?;
    o.put("solver.r", c.outer_radius)?;
    o.put(
        "solver.method",
        c.method.map(|m| match m {
            Method::Auto => "auto",
            Method::Harmonic => "harmonic",
            Method::ClosedForm => "closed_form",
            Method::Wos => "wos",
        }),
    )?;
    o.put("solver.walks", c.walks)?;
    o.put("run.seed", c.seed)?;
    o.put("run.out_dir", c.out_dir.as_ref().map(|p| p.display()))?;
    o.put("run.threads", c.threads)?;
    if c.no_timestamp {
        o.put("run.no_timestamp", Some(true))?;
    }
    let lmax_key = if matches!(cli.command, Cmd::Spectrum { .. }) {
        "spectrum.lmax"
    } else {
        "solver.lmax"
    };
    o.put(lmax_key, c.lmax)?;

    let command = match &cli.command {
        Cmd::Cap(d) => {
            o.domain(d)?;
            Command::Cap
        }
        Cmd::Sweep(f) => {
            o.family(f)?;
            Command::Sweep
        }
        Cmd::Fuglede { degree, order, ladder } => {
            o.put("fuglede.degree", *degree)?;
            o.put("fuglede.order", *order)?;
            o.put("fuglede.ladder", ladder.as_ref())?;
            Command::Fuglede
        }
        Cmd::Truncation {
            s,
            s_prime,
            far_volume,
            far_distance,
            main_eps,
        } => {
            o.put("truncation.s", *s)?;
            o.put("truncation.s_prime", *s_prime)?;
            o.put("truncation.far_volume", *far_volume)?;
            o.put("truncation.far_distance", *far_distance)?;
            o.put("truncation.main_eps", *main_eps)?;
            Command::Truncation
        }
        Cmd::Spectrum { n, r_list } => {
            o.put("spectrum.n", *n)?;
            o.put("spectrum.r_list", r_list.as_ref())?;
            Command::Spectrum
        }
        Cmd::Profile { eta } => {
            o.put("profile.eta", *eta)?;
            Command::Profile
        }
        Cmd::Asym { domain, family } => {
            o.domain(domain)?;
            o.family(family)?;
            Command::Asym
        }
    };
    settings.merge(&o.0);
    Ok((command, settings))
}

fn execute(cli: &Cli) -> Result<i32, HarnessError> {
    let (command, settings) = settings(cli)?;
    if let Some(n) = settings.get::<usize>("run.threads")? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    }
    let out = harness::run(command, &settings)?;
    let text = serde_json::to_string_pretty(&out.summary).expect("summary serializes");
    // a closed pipe downstream is not an error of the run
    let _ = writeln!(std::io::stdout(), "{text}");
    Ok(out.status.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
