//! `lame-geom`: command-line front end for the numerical pipeline.

mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use lame_geom::addition::{measure_degree, sigma_of, DegreeMethod, FamilySpec, SigmaValue};
use lame_geom::divisor::{divisor_of, monodromy_rs, Monodromy};
use lame_geom::even_solution::{find_branch_points, solve_even, wronskian_sq, BranchPoint, Reducibility};
use lame_geom::limits::{run_a_limit, run_b_limit_h, run_p_limit, Branch, LimitScenario};
use lame_geom::report::C;
use lame_geom::verify::{ode_residual, run_suite, Suite};
use lame_geom::{Error, MultiIndex, PotentialSpec, Torus};

use output::{Envelope, SCHEMA};

#[derive(Parser)]
#[command(name = "lame-geom", version, about = "Spectral curves, divisors and addition-map degrees of generalized Lamé equations")]
struct Cli {
    /// Worker threads (default: LAME_GEOM_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Elliptic functions.
    Ell {
        #[command(subcommand)]
        cmd: EllCmd,
    },
    /// The potential q(z).
    Potential {
        #[command(subcommand)]
        cmd: PotentialCmd,
    },
    /// The even elliptic solution and the spectral polynomial.
    Phi {
        #[command(subcommand)]
        cmd: PhiCmd,
    },
    /// Divisor of the eigenfunction for one W-sign.
    Divisor {
        #[command(flatten)]
        pot: PotentialArgs,
        #[arg(long, default_value = "+", allow_hyphen_values = true)]
        sign: Branch,
    },
    /// Value of the addition map.
    Sigma {
        #[command(flatten)]
        pot: PotentialArgs,
        #[arg(long, default_value = "+", allow_hyphen_values = true)]
        sign: Branch,
    },
    /// Degree of the addition map.
    Degree(DegreeArgs),
    /// Limit scenarios on the spectral curve.
    Limits(LimitsArgs),
    /// Seeded self-check suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Record wall times and check runtime budgets (output is then not
        /// reproducible byte for byte).
        #[arg(long)]
        timings: bool,
    },
}

#[derive(Subcommand)]
enum EllCmd {
    Eval {
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        tau: Complex64,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        z: Complex64,
        #[arg(long = "fn", value_enum)]
        function: EllFn,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EllFn {
    Wp,
    Wp1,
    Zeta,
    Sigma,
}

#[derive(Subcommand)]
enum PotentialCmd {
    Eval {
        #[command(flatten)]
        pot: PotentialArgs,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        z: Complex64,
    },
}

#[derive(Subcommand)]
enum PhiCmd {
    Solve {
        #[command(flatten)]
        pot: PotentialArgs,
        /// Recompute W^2 and the ODE residual at fresh points.
        #[arg(long)]
        validate: bool,
    },
    Branch {
        #[command(flatten)]
        fam: FamilyArgs,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "0,0")]
        center: Complex64,
        #[arg(long, default_value_t = 4.0)]
        radius: f64,
        #[arg(long, default_value_t = 15)]
        grid: usize,
    },
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    tau: Complex64,
    #[arg(long, value_parser = parse_index)]
    n: MultiIndex,
    /// Extra singular point; selects the GLE family.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    p: Option<Complex64>,
}

#[derive(Args)]
struct PotentialArgs {
    #[command(flatten)]
    fam: FamilyArgs,
    /// Accessory parameter of the GLE family.
    #[arg(long = "A", value_parser = parse_complex, allow_hyphen_values = true)]
    a: Option<Complex64>,
    /// Spectral parameter of the H family.
    #[arg(long = "B", value_parser = parse_complex, allow_hyphen_values = true)]
    b: Option<Complex64>,
}

#[derive(Args)]
struct DegreeArgs {
    #[arg(long, value_enum)]
    family: FamilyFlag,
    #[arg(long, value_parser = parse_index)]
    n: MultiIndex,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    p: Option<Complex64>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    tau: Complex64,
    #[arg(long, value_enum, default_value = "both")]
    method: MethodFlag,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FamilyFlag {
    Gle,
    H,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodFlag {
    Fit,
    Contour,
    Both,
}

#[derive(Args)]
struct LimitsArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioFlag,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    tau: Complex64,
    #[arg(long, value_parser = parse_index)]
    n: MultiIndex,
    /// Fixed `p` for `a-inf`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    p: Option<Complex64>,
    /// Half period approached by `p-half`.
    #[arg(long, default_value_t = 0)]
    k: usize,
    /// Branch (`p-half`) or W-sign (`a-inf`).
    #[arg(long, default_value = "+", allow_hyphen_values = true)]
    branch: Branch,
    #[arg(long = "B-target", value_parser = parse_complex, allow_hyphen_values = true)]
    b_target: Option<Complex64>,
    /// Comma- or space-separated values of A, |delta| or B.
    #[arg(long)]
    schedule: Option<String>,
    /// Also write the divisor trajectory as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ScenarioFlag {
    #[value(name = "a-inf")]
    AInf,
    #[value(name = "p-half")]
    PHalf,
    #[value(name = "b-inf-h")]
    BInfH,
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |x: &str| x.parse::<f64>().map_err(|_| format!("not a number: {x:?}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected re,im, got {s:?}")),
    }
}

fn parse_index(s: &str) -> Result<MultiIndex, String> {
    let v: Vec<u32> = s
        .split(',')
        .map(|x| x.trim().parse::<u32>().map_err(|_| format!("not a nonnegative integer: {x:?}")))
        .collect::<Result<_, _>>()?;
    let n: [u32; 4] = v
        .try_into()
        .map_err(|_| format!("expected four entries n0,n1,n2,n3, got {s:?}"))?;
    Ok(MultiIndex::new(n))
}

fn parse_schedule(s: &str) -> lame_geom::Result<Vec<f64>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|x| !x.is_empty())
        .map(|x| {
            x.parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("schedule entry {x:?} is not a number")))
        })
        .collect()
}

fn torus(tau: Complex64) -> lame_geom::Result<Arc<Torus>> {
    Ok(Arc::new(Torus::new(tau)?))
}

impl PotentialArgs {
    fn spec(&self) -> lame_geom::Result<PotentialSpec> {
        let t = torus(self.fam.tau)?;
        match (self.fam.p, self.a, self.b) {
            (Some(p), Some(a), None) => PotentialSpec::gle(t, self.fam.n, p, a),
            (None, None, Some(b)) => Ok(PotentialSpec::h(t, self.fam.n, b)),
            (Some(_), _, _) => Err(Error::InvalidInput("the GLE family (--p) takes --A and not --B".into())),
            (None, _, _) => Err(Error::InvalidInput("the H family takes --B and not --A".into())),
        }
    }
}

fn sign_of(b: Branch) -> i32 {
    match b {
        Branch::Plus => 1,
        Branch::Minus => -1,
    }
}

#[derive(Serialize)]
struct ValueOut {
    #[serde(with = "lame_geom::report::finite")]
    value_re: f64,
    #[serde(with = "lame_geom::report::finite")]
    value_im: f64,
}

#[derive(Serialize)]
struct PotentialOut {
    family: lame_geom::FamilyKind,
    n: [u32; 4],
    b: C,
    value: C,
    derivative: C,
}

#[derive(Serialize)]
struct Validation {
    wsq_recomputed: C,
    #[serde(with = "lame_geom::report::finite")]
    max_ode_residual: f64,
}

#[derive(Serialize)]
struct PhiOut {
    family: lame_geom::FamilyKind,
    n: [u32; 4],
    basis: Vec<String>,
    coeffs: Vec<C>,
    wsq: C,
    w: C,
    #[serde(with = "lame_geom::report::finite")]
    quality: f64,
    #[serde(with = "lame_geom::report::finite")]
    wsq_spread: f64,
    reducibility: Reducibility,
    #[serde(skip_serializing_if = "Option::is_none")]
    validation: Option<Validation>,
}

#[derive(Serialize)]
struct BranchOut {
    branch_points: Vec<BranchPoint>,
}

#[derive(Serialize)]
struct PointOut {
    /// Lattice coordinates: `z = x + y tau`.
    x: f64,
    y: f64,
    z: C,
}

#[derive(Serialize)]
struct DivisorOut {
    points: Vec<PointOut>,
    c: C,
    case: lame_geom::divisor::CaseTag,
    #[serde(flatten)]
    monodromy: MonodromyOut,
    w_used: C,
    #[serde(with = "lame_geom::report::finite_vec")]
    margins: Vec<f64>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum MonodromyOut {
    Rs { r: C, s: C },
    Half { m1: f64, m2: f64 },
}

#[derive(Serialize)]
struct SigmaOut {
    sign: i32,
    #[serde(flatten)]
    sigma: SigmaValue,
}

fn emit<T: Serialize>(command: &str, body: T, out: &Option<PathBuf>) -> Result<(), String> {
    let bytes = output::to_bytes(&Envelope {
        schema: SCHEMA,
        command,
        body,
    })
    .map_err(|e| e.to_string())?;
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout().write_all(&bytes).map_err(|e| e.to_string()),
    }
}

fn write_csv(path: &PathBuf, s: &LimitScenario) -> Result<(), String> {
    let mut w = csv::Writer::from_path(path).map_err(|e| e.to_string())?;
    w.write_record(["step", "param", "point_index", "x", "y", "dist"])
        .map_err(|e| e.to_string())?;
    let t = Torus::new(s.tau).map_err(|e| e.to_string())?;
    for (i, r) in s.records.iter().enumerate() {
        for (j, &z) in r.points.iter().enumerate() {
            let (x, y) = t.point(z).coords;
            let dist = r.distance.map_or("nan".to_string(), |d| format!("{d:.16e}"));
            w.write_record([
                i.to_string(),
                format!("{:.16e}", r.value),
                j.to_string(),
                format!("{x:.16e}"),
                format!("{y:.16e}"),
                dist,
            ])
            .map_err(|e| e.to_string())?;
        }
    }
    w.flush().map_err(|e| e.to_string())
}

enum Failure {
    Core(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::Core(e)
    }
}

impl From<String> for Failure {
    fn from(e: String) -> Failure {
        Failure::Io(e)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let out = &cli.output;
    match cli.command {
        Command::Ell {
            cmd: EllCmd::Eval { tau, z, function },
        } => {
            let t = Torus::new(tau)?;
            let v = match function {
                EllFn::Wp => t.wp(z, 0)?,
                EllFn::Wp1 => t.wp(z, 1)?,
                EllFn::Zeta => t.zeta(z)?,
                EllFn::Sigma => t.sigma(z),
            };
            emit(
                "ell eval",
                ValueOut {
                    value_re: v.re,
                    value_im: v.im,
                },
                out,
            )?;
        }
        Command::Potential {
            cmd: PotentialCmd::Eval { pot, z },
        } => {
            let spec = pot.spec()?;
            let (q, dq) = spec.eval_with_derivative(z)?;
            emit(
                "potential eval",
                PotentialOut {
                    family: spec.kind(),
                    n: spec.n.n,
                    b: C(spec.b()),
                    value: C(q),
                    derivative: C(dq),
                },
                out,
            )?;
        }
        Command::Phi {
            cmd: PhiCmd::Solve { pot, validate },
        } => {
            let spec = pot.spec()?;
            let sol = solve_even(&spec)?;
            let validation = if validate {
                let wsq = wronskian_sq(&sol)?;
                let mut r: f64 = 0.0;
                for (x, y) in [(0.13, 0.29), (0.37, 0.71), (0.61, 0.17), (0.83, 0.58)] {
                    let z = spec.torus.from_coords(x, y);
                    if spec.singular_distance(z) > 0.05 && spec.torus.half_period_distance(z) > 0.05 {
                        r = r.max(ode_residual(&sol, z)?);
                    }
                }
                Some(Validation {
                    wsq_recomputed: C(wsq),
                    max_ode_residual: r,
                })
            } else {
                None
            };
            emit(
                "phi solve",
                PhiOut {
                    family: spec.kind(),
                    n: spec.n.n,
                    basis: sol.basis.iter().map(|b| format!("{b:?}")).collect(),
                    coeffs: sol.coeffs.iter().map(|&c| C(c)).collect(),
                    wsq: C(sol.wsq),
                    w: C(sol.w),
                    quality: sol.quality,
                    wsq_spread: sol.wsq_spread,
                    reducibility: sol.reducibility(),
                    validation,
                },
                out,
            )?;
        }
        Command::Phi {
            cmd: PhiCmd::Branch {
                fam,
                center,
                radius,
                grid,
            },
        } => {
            let t = torus(fam.tau)?;
            let bps = find_branch_points(&t, fam.n, fam.p, center, radius, grid)?;
            emit("phi branch", BranchOut { branch_points: bps }, out)?;
        }
        Command::Divisor { pot, sign } => {
            let spec = pot.spec()?;
            let sol = solve_even(&spec)?;
            let d = divisor_of(&sol, sign_of(sign))?;
            let monodromy = match d.monodromy {
                Monodromy::Rs { .. } => {
                    let (r, s) = monodromy_rs(&d, &spec);
                    MonodromyOut::Rs { r: C(r), s: C(s) }
                }
                Monodromy::Half { m1, m2 } => MonodromyOut::Half { m1, m2 },
            };
            let points = d
                .points
                .iter()
                .map(|&z| {
                    let (x, y) = spec.torus.point(z).coords;
                    PointOut { x, y, z: C(z) }
                })
                .collect();
            emit(
                "divisor",
                DivisorOut {
                    points,
                    c: C(d.c),
                    case: d.case_tag,
                    monodromy,
                    w_used: C(d.w_used),
                    margins: d.margins.clone(),
                },
                out,
            )?;
        }
        Command::Sigma { pot, sign } => {
            let spec = pot.spec()?;
            let sol = solve_even(&spec)?;
            let d = divisor_of(&sol, sign_of(sign))?;
            let s = sigma_of(&d, &spec)?;
            emit(
                "sigma",
                SigmaOut {
                    sign: sign_of(sign),
                    sigma: s,
                },
                out,
            )?;
        }
        Command::Degree(a) => {
            let t = torus(a.tau)?;
            let fam = match (a.family, a.p) {
                (FamilyFlag::Gle, Some(p)) => FamilySpec::gle(t, a.n, p)?,
                (FamilyFlag::H, None) => FamilySpec::h(t, a.n),
                (FamilyFlag::Gle, None) => return Err(Error::InvalidInput("--family gle needs --p".into()).into()),
                (FamilyFlag::H, Some(_)) => return Err(Error::InvalidInput("--family h takes no --p".into()).into()),
            };
            let method = match a.method {
                MethodFlag::Fit => DegreeMethod::RationalFit,
                MethodFlag::Contour => DegreeMethod::ContourCount,
                MethodFlag::Both => DegreeMethod::Both,
            };
            let r = measure_degree(&fam, method, a.seed)?;
            emit("degree", r, out)?;
        }
        Command::Limits(a) => {
            let t = torus(a.tau)?;
            let schedule = match (&a.schedule, a.scenario) {
                (Some(s), _) => parse_schedule(s)?,
                (None, ScenarioFlag::AInf) => vec![1e1, 1e2, 1e3, 1e4],
                (None, ScenarioFlag::PHalf) => vec![1e-1, 1e-2, 1e-3],
                (None, ScenarioFlag::BInfH) => vec![1e2, 1e3, 1e4],
            };
            let s = match a.scenario {
                ScenarioFlag::AInf => {
                    let p = a
                        .p
                        .ok_or_else(|| Error::InvalidInput("scenario a-inf needs --p".into()))?;
                    run_a_limit(&t, a.n, p, &schedule, sign_of(a.branch))?
                }
                ScenarioFlag::PHalf => {
                    let b = a
                        .b_target
                        .ok_or_else(|| Error::InvalidInput("scenario p-half needs --B-target".into()))?;
                    run_p_limit(&t, a.n, a.k, a.branch, b, &schedule)?
                }
                ScenarioFlag::BInfH => run_b_limit_h(&t, a.n, &schedule)?,
            };
            if let Some(path) = &a.csv {
                write_csv(path, &s)?;
            }
            emit("limits", s, out)?;
        }
        Command::Verify { suite, seed, timings } => {
            let r = run_suite(suite, seed, timings);
            emit("verify", r, out)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ErrorOut {
    error: ErrorBody,
}

#[derive(Serialize)]
struct ErrorBody {
    kind: &'static str,
    message: String,
}

fn fail(kind: &'static str, message: String, code: u8) -> ExitCode {
    eprintln!("lame-geom: {message}");
    let body = ErrorOut {
        error: ErrorBody { kind, message },
    };
    if let Ok(bytes) = output::to_bytes(&Envelope {
        schema: SCHEMA,
        command: "error",
        body,
    }) {
        let _ = std::io::stdout().write_all(&bytes);
    }
    ExitCode::from(code)
}

fn configure_threads(threads: Option<usize>) -> Result<(), String> {
    let n = match threads {
        Some(n) => Some(n),
        None => match std::env::var("LAME_GEOM_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("LAME_GEOM_THREADS={v:?} is not a thread count"))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err("thread count must be at least 1".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match config::merge(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("lame-geom: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads(cli.threads) {
        return fail("validation", e, 2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) if e.is_validation() => fail("validation", e.to_string(), 2),
        Err(Failure::Core(e)) => fail("numerical", e.to_string(), 3),
        Err(Failure::Io(e)) => fail("io", e, 3),
    }
}
