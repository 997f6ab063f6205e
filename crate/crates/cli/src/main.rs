use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hcont::dethom::{self, DethomError, SymmetricPencil};
use hcont::poly::parse_system;
use hcont::solver::{solve, SolveError, SolveOptions};
use hcont::systems::{self, BenchmarkEntry, CORPUS};
use hcont::C64;

mod report;

use report::{DethomReport, DethomSolution, SolutionReport, SolveReport};

#[derive(Parser)]
#[command(name = "hcont", version, about = "Homotopy continuation for polynomial systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Copy)]
struct RunFlags {
    /// Seed for the random gamma.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Newton corrector tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Track straight to t = 0 instead of running the Cauchy endgame.
    #[arg(long)]
    no_endgame: bool,
}

impl RunFlags {
    fn options(&self) -> SolveOptions {
        let mut opts = SolveOptions { seed: self.seed, threads: self.threads, use_endgame: !self.no_endgame, ..Default::default() };
        if let Some(tol) = self.tol {
            opts.tracker.corrector_tol = tol;
        }
        opts
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the square system in FILE and print the solutions as JSON.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
        /// Write the JSON here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run benchmark systems and compare root counts with the known values.
    Bench {
        /// heart, ipp2, cyclic7, katsura11, any cyclicN or katsuraN, or all.
        name: String,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Track singular points of the symmetroid of pencil B to that of A.
    Dethom {
        target: PathBuf,
        start: PathBuf,
        /// Start points, one per line as `re im` pairs for x0..x3.
        starts: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
        /// Relative eigenvalue tolerance of the spectrahedron test.
        #[arg(long, default_value_t = 1e-8)]
        psd_tol: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compute singular points of a small symmetroid by expanding its
    /// determinant; prints them in the start file format.
    SingularPoints {
        pencil: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
}

/// Failures mapped to exit codes: 2 for unreadable input, 3 for problems
/// setting up the solve.
enum Failure {
    Input(String),
    Setup(String),
    Output(String),
}

impl Failure {
    fn exit(self) -> ExitCode {
        let (code, msg) = match self {
            Failure::Input(m) => (2, m),
            Failure::Setup(m) => (3, m),
            Failure::Output(m) => (1, m),
        };
        eprintln!("error: {msg}");
        ExitCode::from(code)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit(json: &str, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, format!("{json}\n")).map_err(|e| Failure::Output(format!("{}: {e}", path.display()))),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn setup(e: SolveError) -> Failure {
    Failure::Setup(e.to_string())
}

fn cmd_solve(file: &Path, flags: RunFlags, output: Option<&Path>) -> Result<(), Failure> {
    let text = read(file)?;
    let parsed = parse_system(&text).map_err(|e| Failure::Input(format!("{}: {e}", file.display())))?;
    let result = solve(&parsed.system, &flags.options()).map_err(setup)?;
    let json = serde_json::to_string_pretty(&SolveReport::from(&result)).expect("report serializes");
    emit(&json, output)
}

fn cmd_bench(name: &str, flags: RunFlags) -> Result<bool, Failure> {
    let names: Vec<String> = if name == "all" { CORPUS.iter().map(|e| e.name.to_string()).collect() } else { vec![name.to_string()] };
    println!("{:<12} {:>7} {:>9} {:>6} {:>7} {:>10}  verdict", "system", "paths", "solutions", "real", "failed", "seconds");
    let mut all_pass = true;
    for name in names {
        let file = systems::by_name(&name).ok_or_else(|| Failure::Input(format!("unknown benchmark `{name}`")))?;
        let result = solve(&file.system, &flags.options()).map_err(setup)?;
        let verdict = match systems::benchmark_entry(&name) {
            Some(BenchmarkEntry { expected_complex_roots, expected_real_roots, .. }) => {
                let pass = result.n_finite() == expected_complex_roots && result.n_real() == expected_real_roots;
                all_pass &= pass;
                format!("{} (expected {expected_complex_roots} / {expected_real_roots})", if pass { "PASS" } else { "FAIL" })
            }
            None => "-".to_string(),
        };
        println!(
            "{:<12} {:>7} {:>9} {:>6} {:>7} {:>10.2}  {verdict}",
            name,
            result.n_paths,
            result.n_finite(),
            result.n_real(),
            result.n_failed,
            result.runtime_seconds
        );
    }
    Ok(all_pass)
}

fn read_pencil(path: &Path) -> Result<SymmetricPencil, Failure> {
    dethom::parse_pencil(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Parses start points: each line holds `re im` for x0, x1, x2, x3.
fn parse_starts(text: &str) -> Result<Vec<Vec<C64>>, String> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums = line
            .split_whitespace()
            .map(|w| w.parse::<f64>().map_err(|_| format!("line {}: bad number `{w}`", idx + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        if nums.len() != 8 {
            return Err(format!("line {}: expected 8 numbers (re im for x0..x3), found {}", idx + 1, nums.len()));
        }
        out.push(nums.chunks(2).map(|c| C64::new(c[0], c[1])).collect());
    }
    Ok(out)
}

fn write_starts(points: &[Vec<C64>]) -> String {
    let mut out = String::from("# re im for x0 x1 x2 x3\n");
    for p in points {
        let cols: Vec<String> = p.iter().map(|c| format!("{:?} {:?}", c.re, c.im)).collect();
        out.push_str(&cols.join(" "));
        out.push('\n');
    }
    out
}

fn dethom_failure(e: DethomError) -> Failure {
    match e {
        DethomError::Parse { .. } | DethomError::NotSymmetric { .. } | DethomError::Shape { .. } => Failure::Input(e.to_string()),
        _ => Failure::Setup(e.to_string()),
    }
}

fn cmd_dethom(
    target: &Path,
    start: &Path,
    starts: &Path,
    flags: RunFlags,
    psd_tol: f64,
    output: Option<&Path>,
) -> Result<(), Failure> {
    let a = read_pencil(target)?;
    let b = read_pencil(start)?;
    let points = parse_starts(&read(starts)?).map_err(|e| Failure::Input(format!("{}: {e}", starts.display())))?;
    let opts = flags.options();
    let result = dethom::track_singular_points(&a, &b, &points, &opts).map_err(dethom_failure)?;
    let solutions = result
        .solutions
        .iter()
        .map(|s| {
            let real = s.is_real.then(|| [s.x[0].re, s.x[1].re, s.x[2].re, s.x[3].re]);
            let on_spectrahedron = real.and_then(|x| dethom::on_spectrahedron_boundary(&a, &x, psd_tol).ok());
            DethomSolution { solution: SolutionReport::from(s), on_spectrahedron }
        })
        .collect();
    let rep = DethomReport {
        seed: result.seed,
        n_paths: result.n_paths,
        n_failed: result.n_failed,
        runtime_seconds: result.runtime_seconds,
        solutions,
        failed_paths: report::failed_paths(&result),
    };
    emit(&serde_json::to_string_pretty(&rep).expect("report serializes"), output)
}

fn cmd_singular_points(pencil: &Path, flags: RunFlags) -> Result<(), Failure> {
    let p = read_pencil(pencil)?;
    let points = dethom::singular_points(&p, &flags.options()).map_err(dethom_failure)?;
    print!("{}", write_starts(&points));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve { file, flags, output } => cmd_solve(file, *flags, output.as_deref()).map(|_| true),
        Command::Bench { name, flags } => cmd_bench(name, *flags),
        Command::Dethom { target, start, starts, flags, psd_tol, output } => {
            cmd_dethom(target, start, starts, *flags, *psd_tol, output.as_deref()).map(|_| true)
        }
        Command::SingularPoints { pencil, flags } => cmd_singular_points(pencil, *flags).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => f.exit(),
    }
}
