use std::path::PathBuf;
use std::process::ExitCode;

use ccl_cli::{emit_report, emit_sweep, run_suite, run_sweep, CheckName, ConfigError, Format, SuiteConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ccl", version, about = "Total-curvature and isoperimetric checks for hypersurfaces in symmetric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification checks; all applicable checks when none are named.
    Verify {
        checks: Vec<CheckName>,
        #[command(flatten)]
        common: Common,
    },
    /// Run an algebraic audit (det-audit or sqrt-audit).
    Audit {
        check: CheckName,
        /// Matrix size.
        #[arg(long)]
        dim: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Emit per-direction contact records.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// e.g. `hyperbolic:3,kappa=1`, `spd:3,lambda=1`, `hyperbolic:2xeuclidean:1`
    #[arg(long)]
    space: Option<String>,
    /// e.g. `geodesic-sphere:r=1`, `radial-graph:base=1,mode=zonal,amp=0.2`
    #[arg(long)]
    surface: Option<String>,
    /// `<lat>x<lon>` for 2-spheres, `<k>^<n>` in general.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    directions: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `<check>.<name>=<value>`, repeatable.
    #[arg(long = "tol", value_name = "KEY=VALUE")]
    tolerances: Vec<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    output: Option<PathBuf>,
}

impl Common {
    fn into_config(self, checks: Vec<CheckName>) -> Result<SuiteConfig, ConfigError> {
        let mut c = match &self.config {
            Some(p) => SuiteConfig::load(p)?,
            None => SuiteConfig::new(self.space.as_deref().unwrap_or("euclidean:3")),
        };
        if let Some(s) = self.space {
            c.space = s;
        }
        c.surface = self.surface.or(c.surface);
        c.grid = self.grid.or(c.grid);
        c.samples = self.samples.or(c.samples);
        c.directions = self.directions.or(c.directions);
        c.seed = self.seed.unwrap_or(c.seed);
        c.format = self.format.unwrap_or(c.format);
        c.output = self.output.or(c.output);
        if !checks.is_empty() {
            c.checks = checks;
        }
        for kv in self.tolerances {
            let parsed = kv.split_once('=').and_then(|(k, v)| Some((k.to_string(), v.parse::<f64>().ok()?)));
            let (k, v) = parsed.ok_or_else(|| {
                ConfigError::Core(ccl_core::error::Error::Parse { token: kv.clone(), message: "expected <check>.<name>=<number>".into() })
            })?;
            c.tolerances.insert(k, v);
        }
        c.validate()?;
        Ok(c)
    }
}

fn threads() {
    if let Some(n) = std::env::var("CCL_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        // fails only if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run(cli: Cli) -> Result<bool, ConfigError> {
    match cli.command {
        Command::Verify { checks, common } => {
            let c = common.into_config(checks)?;
            report(&c)
        }
        Command::Audit { check, dim, common } => {
            if !matches!(check, CheckName::DetAudit | CheckName::SqrtAudit) {
                return Err(ConfigError::Core(ccl_core::error::Error::Parse {
                    token: check.to_string(),
                    message: "audit takes det-audit or sqrt-audit".into(),
                }));
            }
            let mut c = common.into_config(vec![check])?;
            c.audit_dim = dim.or(c.audit_dim);
            report(&c)
        }
        Command::Sweep { common } => {
            let c = common.into_config(Vec::new())?;
            let records = run_sweep(&c)?;
            emit_sweep(&records, c.format, c.output.as_deref()).map_err(|source| io_error(&c, source))?;
            Ok(records.iter().all(|r| r.as_ref().is_ok_and(|r| r.failures.is_empty())))
        }
    }
}

fn report(c: &SuiteConfig) -> Result<bool, ConfigError> {
    let reports = run_suite(c)?;
    emit_report(&reports, c.format, c.output.as_deref()).map_err(|source| io_error(c, source))?;
    for r in &reports {
        eprintln!("{:<18} {}  margin {:+.3e}", r.check, if r.pass { "PASS" } else { "FAIL" }, r.margin);
    }
    Ok(reports.iter().all(|r| r.pass))
}

fn io_error(c: &SuiteConfig, source: std::io::Error) -> ConfigError {
    ConfigError::Io { path: c.output.clone().unwrap_or_else(|| PathBuf::from("<stdout>")), source }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    threads();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
