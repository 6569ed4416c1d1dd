use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use g2kleinian::abel::Divisor2;
use g2kleinian::cli::{parse_json, parse_poly_value, run, Command, JobSpec, Method};
use g2kleinian::{DiskTriple, Error, Result, C64};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "g2kleinian",
    version,
    about = "Genus-2 Kleinian functions via Richelot towers"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Dump the Richelot tower.
    Iterate(Common),
    /// Period matrices and the Riemann matrix.
    Periods(Common),
    /// Evaluate S, its derivatives, wp, sigma and zeta at points.
    Eval(EvalArgs),
    /// Invert the Abel map for divisors of two points.
    Abel(AbelArgs),
}

#[derive(Args)]
struct Common {
    /// Job file (JSON); command-line flags override its fields.
    #[arg(long)]
    job: Option<PathBuf>,
    /// Coefficients, constant term first, e.g. '[-1,0,0,0,0,0,1]' or '[[1,0],[0,2]]'.
    #[arg(long)]
    poly: Option<String>,
    /// Disk triple file overriding the heuristic.
    #[arg(long)]
    disks: Option<PathBuf>,
    #[arg(long)]
    tol_tower: Option<f64>,
    #[arg(long)]
    tol_fit: Option<f64>,
    #[arg(long)]
    tol_cert: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Richelot,
    Theta,
    Both,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Points as JSON, e.g. '[[[0.1,0],[0.2,0]]]'.
    #[arg(long)]
    points: Option<String>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long)]
    derivatives: bool,
    /// Also report sigma and zeta (needs a quintic with leading coefficient 4).
    #[arg(long)]
    weierstrass: bool,
}

#[derive(Args)]
struct AbelArgs {
    #[command(flatten)]
    common: Common,
    /// Divisor as JSON, e.g. '{"p":[[0.5,0],[0.4,0.3]],"q":{"inf":[0,0]}}'; repeatable.
    #[arg(long)]
    divisor: Vec<String>,
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn load(c: &Common) -> Result<JobSpec> {
    let mut job = match &c.job {
        Some(p) => parse_json::<JobSpec>(&p.display().to_string(), &read(p)?)?,
        None => {
            let text = c
                .poly
                .as_deref()
                .ok_or_else(|| Error::Input("either --job or --poly is required".into()))?;
            JobSpec::new(parse_poly_value(&parse_json::<Value>("--poly", text)?)?)
        }
    };
    if let (Some(_), Some(text)) = (&c.job, &c.poly) {
        job.polynomial = parse_poly_value(&parse_json::<Value>("--poly", text)?)?;
    }
    if let Some(p) = &c.disks {
        job.disks = Some(parse_json::<DiskTriple>(
            &p.display().to_string(),
            &read(p)?,
        )?);
    }
    if let Some(t) = c.tol_tower {
        job.tolerances.tower_tol = t;
    }
    if let Some(t) = c.tol_fit {
        job.tolerances.fit_tol = t;
    }
    if let Some(t) = c.tol_cert {
        job.tolerances.cert_tol = t;
    }
    if let Some(s) = c.seed {
        job.seed = s;
    }
    Ok(job)
}

fn prepare(cmd: &Cmd) -> Result<(Command, JobSpec, Option<PathBuf>)> {
    Ok(match cmd {
        Cmd::Iterate(c) => (Command::Iterate, load(c)?, c.out.clone()),
        Cmd::Periods(c) => (Command::Periods, load(c)?, c.out.clone()),
        Cmd::Eval(a) => {
            let mut job = load(&a.common)?;
            if let Some(p) = &a.points {
                job.points = parse_json::<Vec<[C64; 2]>>("--points", p)?;
            }
            if let Some(m) = a.method {
                job.method = match m {
                    MethodArg::Richelot => Method::Richelot,
                    MethodArg::Theta => Method::Theta,
                    MethodArg::Both => Method::Both,
                };
            }
            job.derivatives |= a.derivatives;
            job.weierstrass |= a.weierstrass;
            (Command::Eval, job, a.common.out.clone())
        }
        Cmd::Abel(a) => {
            let mut job = load(&a.common)?;
            for d in &a.divisor {
                job.divisors.push(parse_json::<Divisor2>("--divisor", d)?);
            }
            (Command::Abel, job, a.common.out.clone())
        }
    })
}

fn error_json(e: &Error) -> Value {
    let (kind, module) = match e {
        Error::Domain { module, .. } => ("domain", *module),
        Error::Convergence { module, .. } => ("convergence", *module),
        Error::Certificate { module, .. } => ("certificate", *module),
        Error::Input(_) => ("input", "cli"),
    };
    json!({ "error": kind, "module": module, "message": e.to_string() })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = prepare(&cli.cmd).and_then(|(cmd, job, out)| {
        let report = run(cmd, &job)?;
        let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
        match out {
            Some(p) => {
                fs::write(&p, text).map_err(|e| Error::Input(format!("{}: {e}", p.display())))
            }
            None => {
                print!("{text}");
                Ok(())
            }
        }
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
