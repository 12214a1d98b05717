use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use homotopy_cascade::cascade::{
    run_cascade, solve_total_degree, totals, verify_witness, CascadeConfig, CascadeError,
    LevelStats, SolutionClass,
};
use homotopy_cascade::poly::{parse_system, PolynomialSystem};
use homotopy_cascade::report::{digest, write_witness_file, RunKind, RunReport};

const EXIT_IO: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_NON_SQUARE: u8 = 3;
const EXIT_CONFIG: u8 = 4;
const EXIT_VERIFY: u8 = 5;

#[derive(Parser, Debug)]
#[command(
    name = "cascade",
    version,
    about = "Homotopy cascade solver for polynomial systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for the random parameters and start system.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Slack vectors at or below this size count as zero.
    #[arg(long, global = true)]
    tol_z: Option<f64>,
    /// Largest condition number accepted as nonsingular.
    #[arg(long, global = true)]
    cond_max: Option<f64>,
    /// Newton corrector tolerance.
    #[arg(long, global = true)]
    newton_tol: Option<f64>,
    /// Worker threads for path tracking.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the JSON run report here.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// TOML run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Witness file path (default: `<input>.witness`).
    #[arg(long, global = true)]
    witness: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Total-degree homotopy to the system alone.
    Solve { file: PathBuf },
    /// Full cascade: witness sets for every dimension.
    Cascade { file: PathBuf },
    /// Re-evaluate the witnesses stored in a report.
    Verify {
        report: PathBuf,
        /// Check the witnesses against this system instead.
        #[arg(long)]
        against: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))
}

fn load_system(path: &Path) -> Result<PolynomialSystem, Failure> {
    let text = read(path)?;
    let f =
        parse_system(&text).map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    if !f.is_square() {
        return Err(fail(
            EXIT_NON_SQUARE,
            format!(
                "{}: {} polynomials in {} variables; the system must be square",
                path.display(),
                f.n_polys(),
                f.n_vars()
            ),
        ));
    }
    Ok(f)
}

fn build_config(cli: &Cli) -> Result<CascadeConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => toml::from_str(&read(path)?)
            .map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())))?,
        None => CascadeConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(v) = cli.tol_z {
        cfg.tol_z = v;
    }
    if let Some(v) = cli.cond_max {
        cfg.cond_max = v;
    }
    if let Some(v) = cli.newton_tol {
        cfg.tracker.newton_tol = v;
    }
    cfg.validate()
        .map_err(|e| fail(EXIT_CONFIG, e.to_string()))?;
    Ok(cfg)
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    job: impl FnOnce() -> T + Send,
) -> Result<T, Failure> {
    match threads {
        None => Ok(job()),
        Some(0) => Err(fail(EXIT_CONFIG, "--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(job))
            .map_err(|e| fail(EXIT_CONFIG, e.to_string())),
    }
}

fn cascade_failure(e: CascadeError) -> Failure {
    let code = match e {
        CascadeError::NonSquareSystem { .. } => EXIT_NON_SQUARE,
        CascadeError::ZeroPolynomial { .. } => EXIT_PARSE,
        CascadeError::TopLevelOutOfRange { .. } | CascadeError::Config(_) => EXIT_CONFIG,
    };
    fail(code, e.to_string())
}

fn stats_table(rows: &[LevelStats]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<7} {:>7} {:>6} {:>6} {:>6} {:>9} {:>7} {:>10}",
        "level", "#paths", "z=0", "z!=0", "->inf", "singular", "failed", "ms"
    )
    .unwrap();
    let line = |out: &mut String, label: String, r: &LevelStats| {
        writeln!(
            out,
            "{:<7} {:>7} {:>6} {:>6} {:>6} {:>9} {:>7} {:>10.1}",
            label,
            r.paths,
            r.on_component,
            r.slack_nonzero,
            r.diverged,
            r.singular,
            r.failed,
            r.wall_ms
        )
        .unwrap();
    };
    for r in rows {
        line(&mut out, format!("E_{}", r.level), r);
    }
    line(&mut out, "total".to_string(), &totals(rows));
    out
}

fn fmt_point(x: &[homotopy_cascade::numeric::C64]) -> String {
    let parts: Vec<String> = x
        .iter()
        .map(|v| format!("{:+.6e}{:+.6e}i", v.re, v.im))
        .collect();
    format!("({})", parts.join(", "))
}

fn emit(cli: &Cli, report: &RunReport, table: String) -> Result<(), Failure> {
    let json = report.to_json();
    if let Some(path) = &cli.report {
        write(path, &json)?;
    }
    match cli.format {
        Format::Table => print!("{table}"),
        Format::Json => println!("{json}"),
    }
    Ok(())
}

fn cmd_solve(cli: &Cli, file: &Path) -> Result<(), Failure> {
    let f = load_system(file)?;
    let cfg = build_config(cli)?;
    let out =
        with_threads(cli.threads, || solve_total_degree(&f, &cfg))?.map_err(cascade_failure)?;
    let mut table = stats_table(std::slice::from_ref(&out.stats));
    writeln!(table).unwrap();
    for (k, (r, class)) in out
        .record
        .results
        .iter()
        .zip(&out.record.classes)
        .enumerate()
    {
        let label = match class {
            SolutionClass::NonsingularSlack => "regular",
            SolutionClass::SingularUnresolved => "singular",
            SolutionClass::Diverged => "diverged",
            SolutionClass::Failed => "failed",
            SolutionClass::OnComponent => unreachable!("no slack variables at level 0"),
        };
        if matches!(class, SolutionClass::Diverged | SolutionClass::Failed) {
            writeln!(table, "path {k:>3}  {label}").unwrap();
        } else {
            writeln!(
                table,
                "path {:>3}  {label:<8}  residual {:.2e}  condition {:.2e}  {}",
                k,
                r.residual,
                r.condition,
                fmt_point(&r.endpoint)
            )
            .unwrap();
        }
    }
    emit(cli, &RunReport::from_solve(&f, &out, &cfg), table)
}

fn cmd_cascade(cli: &Cli, file: &Path) -> Result<(), Failure> {
    let f = load_system(file)?;
    let cfg = build_config(cli)?;
    let out = with_threads(cli.threads, || run_cascade(&f, &cfg))?.map_err(cascade_failure)?;
    let report = RunReport::from_cascade(&out, &cfg);

    let witness_path = cli.witness.clone().unwrap_or_else(|| {
        let mut p = file.as_os_str().to_owned();
        p.push(".witness");
        PathBuf::from(p)
    });
    write(&witness_path, &write_witness_file(&out.supersets))?;

    let mut table = stats_table(&out.stats);
    writeln!(table).unwrap();
    let isolated = out.isolated_solutions.len();
    let plural = |k: usize| if k == 1 { "" } else { "s" };
    match out.top_dimension {
        Some(d) if d > 0 => {
            writeln!(table, "top dimension: {d}").unwrap();
            for w in out
                .supersets
                .iter()
                .filter(|w| w.level > 0 && !w.points.is_empty())
            {
                writeln!(
                    table,
                    "dimension {}: {} witness point{}, degree {}",
                    w.level,
                    w.points.len(),
                    plural(w.points.len()),
                    w.degree()
                )
                .unwrap();
            }
            writeln!(table, "{isolated} isolated solution{}", plural(isolated)).unwrap();
        }
        _ => writeln!(
            table,
            "no positive-dimensional components detected; {isolated} isolated solution{}",
            plural(isolated)
        )
        .unwrap(),
    }
    let singular = out.singular_solutions.len();
    if singular > 0 {
        writeln!(
            table,
            "{singular} singular endpoint{} at dimension 0",
            plural(singular)
        )
        .unwrap();
    }
    writeln!(table, "witness file: {}", witness_path.display()).unwrap();
    emit(cli, &report, table)
}

fn cmd_verify(cli: &Cli, report_path: &Path, against: Option<&Path>) -> Result<(), Failure> {
    let report = RunReport::from_json(&read(report_path)?)
        .map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", report_path.display())))?;
    let own = parse_system(&report.system).map_err(|e| {
        fail(
            EXIT_PARSE,
            format!("{}: stored system: {e}", report_path.display()),
        )
    })?;
    let mut all_pass = true;
    let target = match against {
        Some(path) => load_system(path)?,
        None => {
            if digest(&report.system) != report.input_digest {
                println!("input digest mismatch");
                all_pass = false;
            }
            own
        }
    };
    let mut cfg = report.config.clone();
    if let Some(v) = cli.newton_tol {
        cfg.tracker.newton_tol = v;
    }

    let mut checks = Vec::new();
    for w in &report.supersets {
        for p in &w.points {
            checks.push((w.level, &w.slice[..], &p.point));
        }
    }
    if report.kind == RunKind::Solve {
        for p in report
            .isolated_solutions
            .iter()
            .chain(&report.singular_solutions)
        {
            checks.push((0, &[][..], &p.point));
        }
    }

    for (k, (level, slice, point)) in checks.into_iter().enumerate() {
        let ok = point.len() == target.n_vars();
        let verdict = if ok {
            let check = verify_witness(point, &target, slice, &cfg);
            let line = format!(
                "residual {:.2e}  refined {:.2e}",
                check.residual, check.refined_residual
            );
            (check.pass, line)
        } else {
            (
                false,
                format!(
                    "{} coordinates for {} variables",
                    point.len(),
                    target.n_vars()
                ),
            )
        };
        all_pass &= verdict.0;
        println!(
            "dim {level} point {k}: {}  {}",
            if verdict.0 { "pass" } else { "FAIL" },
            verdict.1
        );
    }
    if all_pass {
        Ok(())
    } else {
        Err(fail(EXIT_VERIFY, "verification failed"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve { file } => cmd_solve(&cli, file),
        Command::Cascade { file } => cmd_cascade(&cli, file),
        Command::Verify { report, against } => cmd_verify(&cli, report, against.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
