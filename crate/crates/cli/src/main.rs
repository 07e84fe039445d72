use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use sphlink::catalog::catalog_schemas;
use sphlink::engine::GridOverrides;
use sphlink::kernel::KernelMode;
use sphlink::linkspec::{self, LinkSpec, Overrides, RunReport, SpecMethod};

/// Linking numbers of submanifolds of round spheres.
#[derive(Parser, Debug)]
#[command(name = "sphlink", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a link spec with the method it names.
    Link(RunArgs),
    /// Tabulate phi, phi/sin^n and the convolution kernel as CSV.
    Phi(PhiArgs),
    /// Values and error estimates over successive grid doublings.
    Convergence {
        #[command(flatten)]
        run: RunArgs,
        /// Number of levels, counting the base grid.
        #[arg(long, default_value_t = 5)]
        levels: usize,
    },
    /// List the submanifold kinds a spec may use.
    Catalog {
        #[arg(long)]
        json: bool,
    },
    /// Gauss-integral cross-check of an S^3 curve pair.
    Oracle(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Link spec (JSON); `-` reads standard input.
    spec: PathBuf,
    #[arg(long)]
    tol: Option<f64>,
    /// Nodes per chart dimension, e.g. `k=64,l=32,u=16`.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<GridOverrides>,
    #[arg(long)]
    max_level: Option<usize>,
    #[arg(long)]
    min_alpha: Option<f64>,
    /// Seed for perturbed curves that carry none.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    json: bool,
    /// Record wall time in the report.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct PhiArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    l: usize,
    #[arg(long, default_value_t = 0.0)]
    alpha_min: f64,
    #[arg(long, default_value_t = PI)]
    alpha_max: f64,
    #[arg(long, default_value_t = 256)]
    points: usize,
    /// `closed_form` or `numeric`; closed forms where known by default.
    #[arg(long, value_parser = parse_mode)]
    kernel_mode: Option<KernelMode>,
}

fn parse_grid(s: &str) -> Result<GridOverrides, String> {
    let mut g = GridOverrides::default();
    for part in s.split(',').filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got `{part}`"))?;
        let v: usize = value
            .trim()
            .parse()
            .map_err(|_| format!("`{value}` is not a node count"))?;
        if v == 0 {
            return Err("node counts must be positive".into());
        }
        match key.trim() {
            "k" => g.k = Some(v),
            "l" => g.l = Some(v),
            "u" => g.u = Some(v),
            other => return Err(format!("unknown grid key `{other}` (use k, l, u)")),
        }
    }
    Ok(g)
}

fn parse_mode(s: &str) -> Result<KernelMode, String> {
    match s {
        "closed_form" | "closed-form" => Ok(KernelMode::ClosedForm),
        "numeric" => Ok(KernelMode::Numeric),
        _ => Err(format!("unknown kernel mode `{s}`")),
    }
}

fn read_spec(args: &RunArgs) -> Result<LinkSpec, String> {
    let text = if args.spec.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin()).map_err(|e| format!("reading stdin: {e}"))?
    } else {
        std::fs::read_to_string(&args.spec).map_err(|e| format!("reading {}: {e}", args.spec.display()))?
    };
    let spec = LinkSpec::from_json(&text).map_err(|e| e.to_string())?;
    Ok(spec.with_overrides(&Overrides {
        tol: args.tol,
        grid: args.grid.unwrap_or_default(),
        max_level: args.max_level,
        min_alpha: args.min_alpha,
        seed: args.seed,
    }))
}

fn summary(r: &RunReport) -> String {
    let res = &r.result;
    let verdict = match res.linking_number {
        Some(n) => format!("linking number {n}"),
        None if !res.converged => "not converged".to_string(),
        None => "rejected: not close to an integer".to_string(),
    };
    let mut out = format!(
        "{verdict}\nmethod          {}\nraw value       {}\nresidual        {}\nerror estimate  {}\nalpha range     [{}, {}]\nlevels used     {}\n",
        serde_name(&res.method),
        linkspec::fmt_f64(res.raw_value),
        linkspec::fmt_f64(res.residual),
        linkspec::fmt_f64(res.error_estimate),
        linkspec::fmt_f64(res.min_alpha),
        linkspec::fmt_f64(res.max_alpha),
        res.levels_used,
    );
    if let Some(p) = &r.pole {
        let p: Vec<String> = p.iter().map(|v| format!("{v:.6}")).collect();
        out.push_str(&format!("pole            ({})\n", p.join(", ")));
    }
    if let Some(t) = r.wall_time_seconds {
        out.push_str(&format!("wall time       {t:.3} s\n"));
    }
    out
}

fn serde_name(m: &sphlink::engine::Method) -> String {
    serde_json::to_string(m).unwrap_or_default().trim_matches('"').to_string()
}

fn run(args: &RunArgs, spec: LinkSpec) -> Result<ExitCode, String> {
    let start = Instant::now();
    let mut report = linkspec::run_spec(&spec).map_err(|e| e.to_string())?;
    if args.timing {
        report.wall_time_seconds = Some(start.elapsed().as_secs_f64());
    }
    if args.json {
        print!("{}", linkspec::to_json(&report));
    } else {
        print!("{}", summary(&report));
    }
    Ok(ExitCode::from(report.exit_code() as u8))
}

fn dispatch(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Link(args) => {
            let spec = read_spec(&args)?;
            run(&args, spec)
        }
        Command::Oracle(args) => {
            let mut spec = read_spec(&args)?;
            spec.method = SpecMethod::Oracle;
            run(&args, spec)
        }
        Command::Phi(a) => {
            let csv = linkspec::phi_table_csv(a.k, a.l, a.alpha_min, a.alpha_max, a.points, a.kernel_mode)
                .map_err(|e| e.to_string())?;
            print!("{csv}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Convergence { run, levels } => {
            let spec = read_spec(&run)?;
            let rows = linkspec::convergence_study(&spec, levels).map_err(|e| e.to_string())?;
            if run.json {
                print!("{}", linkspec::to_json(&rows));
            } else {
                print!("{}", linkspec::convergence_csv(&rows));
            }
            let done = rows.last().is_some_and(|r| r.converged);
            Ok(if done { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Catalog { json } => {
            if json {
                print!("{}", linkspec::to_json(&catalog_schemas()));
            } else {
                print!("{}", linkspec::catalog_text());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are validation errors too
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    // SPHLINK_WORKERS pins the worker count; results do not depend on it
    if let Some(n) = std::env::var("SPHLINK_WORKERS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }
    match dispatch(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
