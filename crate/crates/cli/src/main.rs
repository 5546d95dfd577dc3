//! `kornlab`: mesh generation, discrete constants, Helmholtz splits,
//! certification of the main inequality, identity checks and refinement
//! studies.
//!
//! Exit codes: 0 success, 1 computational error, 2 validation failure
//! (invalid input or a failed verdict), 64 usage error.

mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kornlab::constants::ConstantsError;
use kornlab::fem::{FemError, MatrixCoefficient};
use kornlab::hodge::HodgeError;
use kornlab::mesh::{MeshError, Primitive, TagSelector};
use std::path::PathBuf;
use std::process::ExitCode;

pub const EXIT_COMPUTE: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "kornlab",
    version,
    about = "Discrete Poincaré, Korn and Maxwell constants with mixed boundary conditions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Accepted for scripts; every run is already deterministic.
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a primitive mesh in kornmesh format.
    Gen(GenArgs),
    /// Read and validate a mesh, printing its summary.
    Validate(MeshArgs),
    /// Compute all constants and derived bounds.
    Constants(ConstantsArgs),
    /// Compute the discrete harmonic fields.
    Harmonics(HarmonicsArgs),
    /// Split an edge field into gradient, harmonic and coexact parts.
    Decompose(DecomposeArgs),
    /// Certify the main inequality on random tensor fields.
    Certify(CertifyArgs),
    /// Check the Korn identities, skew embeddings and projections.
    Identities(IdentitiesArgs),
    /// Constants over a refinement sequence.
    Study(StudyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct MeshArgs {
    /// Mesh file in kornmesh format.
    #[arg(long, conflicts_with = "primitive", required_unless_present = "primitive")]
    pub mesh: Option<PathBuf>,
    /// Built-in geometry: unit_cube, slab_mixed or cube_with_tunnel.
    #[arg(long)]
    pub primitive: Option<Primitive>,
    /// Cells per unit length of the primitive.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Γ_t selector: keep, all, none, complement, `faces x=0,z=1` or `file <path>`.
    #[arg(long = "gamma-t", default_value = "keep")]
    pub gamma_t: TagSelector,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Quadrature degree per tet.
    #[arg(long, default_value_t = kornlab::fem::DEFAULT_QUAD_ORDER)]
    pub quad_order: usize,
    /// Relative eigenpair residual target.
    #[arg(long)]
    pub eig_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub primitive: Primitive,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Uniform refinements applied after generation.
    #[arg(long, default_value_t = 0)]
    pub refine: usize,
    #[arg(long = "gamma-t", default_value = "keep")]
    pub gamma_t: TagSelector,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConstantsArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Also compute the direct constant of the main inequality.
    #[arg(long)]
    pub direct: bool,
    /// Also compute the per-slice Korn constant when Γ_t is empty.
    #[arg(long)]
    pub slices: bool,
    /// Matrix coefficient F: `identity`, `scale=s`, `diag=a,b,c` or
    /// `matrix=a11,a12,...,a33`.
    #[arg(long, value_parser = parse_coefficient)]
    pub coefficient: Option<MatrixCoefficient>,
    /// Random tensor fields to certify.
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct HarmonicsArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Edge field: `random`, or a file with one value per free edge dof.
    #[arg(long, default_value = "random")]
    pub field: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct IdentitiesArgs {
    /// Random fields per family.
    #[arg(long, default_value_t = 100)]
    pub fields: usize,
    #[arg(long, default_value_t = 5)]
    pub max_degree: u32,
    /// Number of α values.
    #[arg(long, default_value_t = 20)]
    pub alphas: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StudyArgs {
    /// Built-in geometry, generated once per entry of `--levels`.
    #[arg(long, conflicts_with = "mesh", required_unless_present = "mesh")]
    pub primitive: Option<Primitive>,
    /// Cells per unit length of each level.
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3])]
    pub levels: Vec<usize>,
    /// Coarsest mesh, refined uniformly `--refinements` times.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub refinements: usize,
    #[arg(long = "gamma-t", default_value = "keep")]
    pub gamma_t: TagSelector,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_coefficient(s: &str) -> Result<MatrixCoefficient, String> {
    let numbers = |v: &str, n: usize| -> Result<Vec<f64>, String> {
        let xs: Result<Vec<f64>, _> = v.split(',').map(|x| x.trim().parse::<f64>()).collect();
        let xs = xs.map_err(|_| format!("bad number in '{v}'"))?;
        if xs.len() != n {
            return Err(format!("expected {n} numbers, got {}", xs.len()));
        }
        Ok(xs)
    };
    let s = s.trim();
    if s == "identity" {
        return Ok(MatrixCoefficient::identity());
    }
    let (kind, v) = s.split_once('=').ok_or_else(|| format!("unknown coefficient '{s}'"))?;
    match kind {
        "scale" => Ok(MatrixCoefficient::scaled_identity(numbers(v, 1)?[0])),
        "diag" => {
            let d = numbers(v, 3)?;
            Ok(MatrixCoefficient::diagonal([d[0], d[1], d[2]]))
        }
        "matrix" => {
            let m = numbers(v, 9)?;
            Ok(MatrixCoefficient::constant(std::array::from_fn(|i| std::array::from_fn(|j| m[3 * i + j]))))
        }
        _ => Err(format!("unknown coefficient kind '{kind}'")),
    }
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    pub fn validation(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_VALIDATION, message: message.into() }
    }
}

impl From<MeshError> for Failure {
    fn from(e: MeshError) -> Failure {
        let code = if matches!(e, MeshError::Io(_)) { EXIT_COMPUTE } else { EXIT_VALIDATION };
        Failure { code, message: e.to_string() }
    }
}

fn fem_code(e: &FemError) -> u8 {
    match e {
        FemError::NonPositiveDeterminant { .. } | FemError::DeterminantBelowBound { .. } => EXIT_VALIDATION,
        _ => EXIT_COMPUTE,
    }
}

impl From<ConstantsError> for Failure {
    fn from(e: ConstantsError) -> Failure {
        let code = match &e {
            ConstantsError::Mesh(m) if !matches!(m, MeshError::Io(_)) => EXIT_VALIDATION,
            ConstantsError::Fem(f) => fem_code(f),
            ConstantsError::Unsupported(_) => EXIT_VALIDATION,
            _ => EXIT_COMPUTE,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<HodgeError> for Failure {
    fn from(e: HodgeError) -> Failure {
        Failure { code: EXIT_COMPUTE, message: e.to_string() }
    }
}

impl From<FemError> for Failure {
    fn from(e: FemError) -> Failure {
        Failure { code: fem_code(&e), message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure { code: EXIT_COMPUTE, message: e.to_string() }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("KORNLAB_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(format!("KORNLAB_THREADS must be a positive integer, got '{v}'")))?;
    // fails only when a pool already exists, which is harmless here
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = configure_threads().and_then(|_| match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Validate(a) => commands::validate(a),
        Command::Constants(a) => commands::constants(a),
        Command::Harmonics(a) => commands::harmonics(a),
        Command::Decompose(a) => commands::decompose(a),
        Command::Certify(a) => commands::certify(a),
        Command::Identities(a) => commands::identities(a),
        Command::Study(a) => commands::study(a),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VALIDATION),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
