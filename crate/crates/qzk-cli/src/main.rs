use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qzk::analysis::{optimize_prover, AttackConfig};
use qzk::fixtures::{fixture_by_name, FIXTURE_NAMES};
use qzk::protocol::{load_protocol, Meta, ProtocolFile, VerifierFile};
use qzk::qip::run;
use qzk::qla::{trace_norm, DensityMatrix};
use qzk::report::{Format, Recorder, Relation, Report};
use qzk::suite::{run_suite, SuiteConfig};
use qzk::transforms::{transform_by_name, Guarantee, TransformArgs};
use qzk::zk::{hv_check, rewind_run, DishonestVerifier, HvMode};
use qzk::{linalg, tol, QzkError, Result};

#[derive(Parser)]
#[command(name = "qzk", version, about = "Quantum interactive proof and zero-knowledge protocol simulator")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of printing it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Largest state vector, in qubits.
    #[arg(long, global = true, default_value_t = tol::DEFAULT_STATE_CAP)]
    state_cap: usize,
    /// Largest dense operator, in qubits.
    #[arg(long, global = true, default_value_t = tol::DEFAULT_DENSE_CAP)]
    dense_cap: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Honest execution: acceptance against the file's claims.
    Run { file: PathBuf },
    /// Rewrite a protocol file.
    Transform {
        #[arg(long)]
        kind: Kind,
        /// Copies for the repetitions.
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Acceptance threshold for sequential repetition.
        #[arg(long, default_value_t = 2)]
        t: usize,
        /// Completeness error to claim instead of the file's.
        #[arg(long)]
        eps: Option<f64>,
        input: PathBuf,
        output: PathBuf,
    },
    /// Compare simulated and real honest-verifier views.
    VerifyZk {
        #[arg(long, value_enum, default_value_t = Mode::Perfect)]
        mode: Mode,
        file: PathBuf,
    },
    /// Rewinding simulator against dishonest verifiers.
    Rewind {
        /// Random verifiers, or the one in --dv-file.
        #[arg(long, value_enum, default_value_t = Dv::Random)]
        dv: Dv,
        #[arg(long)]
        dv_file: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        file: PathBuf,
    },
    /// Search for a cheating prover and compare with the claimed soundness.
    Attack {
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        file: PathBuf,
    },
    /// Write a built-in fixture as a protocol file.
    Export {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(FIXTURE_NAMES))]
        fixture: String,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        output: PathBuf,
    },
    /// Run the acceptance suite and print one line per check.
    Demo,
    /// Run the acceptance suite and emit the full report.
    Report {
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        format: ReportFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Parallelize,
    PublicCoin,
    PerfectComplete,
    ParRep,
    SeqRep,
}

impl Kind {
    fn transform(self) -> &'static str {
        match self {
            Kind::Parallelize => "parallelize",
            Kind::PublicCoin => "public-coin",
            Kind::PerfectComplete => "perfect-complete",
            Kind::ParRep => "parallel-repeat",
            Kind::SeqRep => "sequential-repeat",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Perfect,
    Statistical,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Dv {
    Random,
    File,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Md,
    Csv,
}

impl From<ReportFormat> for Format {
    fn from(f: ReportFormat) -> Self {
        match f {
            ReportFormat::Json => Format::Json,
            ReportFormat::Md => Format::Markdown,
            ReportFormat::Csv => Format::Csv,
        }
    }
}

/// 2 for bad input, 3 for invalid circuits or states, 4 for resource caps.
fn exit_code(err: &QzkError) -> u8 {
    match err.root() {
        QzkError::CapExceeded { .. } => 4,
        QzkError::Schema(_) | QzkError::Io(_) | QzkError::Parameter(_) | QzkError::Precondition(_) | QzkError::Unsupported(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tol::set_caps(cli.state_cap, cli.dense_cap);
    match execute(&cli) {
        Ok(report) if report.passed => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn execute(cli: &Cli) -> Result<Report> {
    let start = std::time::Instant::now();
    let (title, rec) = match &cli.command {
        Command::Demo => {
            let report = run_suite(&SuiteConfig { seed: cli.seed, ..Default::default() });
            for c in &report.checks {
                println!("{c}");
            }
            println!("{} checks, {} failed, {:.1}s", report.checks.len(), report.failures().count(), report.seconds);
            if let Some(path) = &cli.out {
                write(path, &report.to_json()?)?;
            }
            return Ok(report);
        }
        Command::Report { format } => {
            let report = run_suite(&SuiteConfig { seed: cli.seed, ..Default::default() });
            emit(cli, &report.render((*format).into())?)?;
            return Ok(report);
        }
        Command::Export { fixture, eps, output } => {
            let f = fixture_by_name(fixture, *eps)?;
            let file = ProtocolFile::from_fixture(&f)?;
            file.save(output)?;
            let mut rec = Recorder::for_command("export");
            rec.holds("reload", "written file reloads to the same canonical text", ProtocolFile::load(output)?.to_canonical()? == file.to_canonical()?);
            ("export", rec)
        }
        Command::Run { file } => ("run", run_file(file)?),
        Command::Transform { kind, k, t, eps, input, output } => ("transform", transform(*kind, *k, *t, *eps, input, output)?),
        Command::VerifyZk { mode, file } => ("verify-zk", verify_zk(*mode, file)?),
        Command::Rewind { dv, dv_file, trials, file } => ("rewind", rewind(cli.seed, *dv, dv_file.as_deref(), *trials, file)?),
        Command::Attack { restarts, iters, file } => ("attack", attack(cli.seed, *restarts, *iters, file)?),
    };
    let report = Report::new(title, cli.seed, rec.checks, start.elapsed().as_secs_f64());
    for c in &report.checks {
        println!("{c}");
    }
    if let Some(path) = &cli.out {
        write(path, &report.to_json()?)?;
    }
    Ok(report)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| QzkError::Io(format!("{}: {e}", path.display())))
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_file(file: &Path) -> Result<Recorder> {
    let (inst, meta) = load_protocol(file)?;
    let p = run(&inst.ps, &inst.honest)?.0;
    let mut rec = Recorder::for_command("run");
    rec.check("completeness", "honest acceptance at least 1 − ε", Relation::AtLeast, p, 1.0 - meta.epsilon, tol::REPORTED);
    if let Some(stated) = meta.p_acc {
        rec.check("stated-acceptance", "stated exact honest acceptance", Relation::Equal, p, stated, tol::REPORTED);
    }
    Ok(rec)
}

fn transform(kind: Kind, k: usize, t: usize, eps: Option<f64>, input: &Path, output: &Path) -> Result<Recorder> {
    let file = ProtocolFile::load(input)?;
    let inst = file.to_instance().map_err(|e| e.context(input.display().to_string()))?;
    let claims = Guarantee::new(eps.unwrap_or(file.meta.epsilon), file.meta.delta)?;
    let args = TransformArgs { k, t, p_acc: file.meta.p_acc };
    let (out, report) = transform_by_name(kind.transform(), &args)?.apply(&inst, &claims)?;
    let p = run(&out.ps, &out.honest)?.0;
    let mut rec = Recorder::for_command("transform");
    rec.check("completeness", report.completeness.reference, Relation::AtLeast, p, report.completeness.value, tol::REPORTED);
    println!("completeness {}", report.completeness);
    println!("soundness {}", report.soundness);
    let meta = Meta { epsilon: 1.0 - report.completeness.value, delta: 1.0 - report.soundness.value, p_acc: Some(p) };
    ProtocolFile::from_instance(&format!("{}.{}", file.name, kind.transform()), &out, meta).save(output)?;
    Ok(rec)
}

fn verify_zk(mode: Mode, file: &Path) -> Result<Recorder> {
    let (inst, _) = load_protocol(file)?;
    let hv_mode = match mode {
        Mode::Perfect => HvMode::Perfect,
        Mode::Statistical => HvMode::Statistical,
    };
    let hv = hv_check(&inst.ps, &inst.honest, &inst.sim, hv_mode)?;
    let mut rec = Recorder::for_command("verify-zk");
    for (j, d) in hv.distances.iter().enumerate() {
        match mode {
            Mode::Perfect => rec.check(&format!("view-{}", j + 1), "simulated view equals real view", Relation::AtMost, *d, 0.0, tol::REPORTED),
            Mode::Statistical => rec.check(&format!("view-{}", j + 1), "trace norm of simulated minus real view", Relation::AtMost, *d, 2.0, 0.0),
        }
    }
    Ok(rec)
}

fn rewind(seed: u64, dv: Dv, dv_file: Option<&Path>, trials: usize, file: &Path) -> Result<Recorder> {
    let (inst, _) = load_protocol(file)?;
    let verifiers = match (dv, dv_file) {
        (Dv::File, Some(path)) | (Dv::Random, Some(path)) => vec![VerifierFile::load(path)?.to_verifier(&inst.ps)?],
        (Dv::File, None) => return Err(QzkError::Parameter("--dv file needs --dv-file".into())),
        (Dv::Random, None) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..trials)
                .map(|_| {
                    let v = DishonestVerifier::random(&inst.ps, 1, 1, &mut rng)?;
                    v.with_aux(DensityMatrix::new(linalg::random_density(2, 2, &mut rng))?)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let mut rec = Recorder::for_command("rewind");
    for (i, v) in verifiers.iter().enumerate() {
        let r = rewind_run(&inst.ps, &inst.honest, &inst.sim, v)?;
        rec.check(&format!("success-{}", i + 1), "rewinding guess success probability", Relation::Equal, r.success_prob, 0.5, tol::DERIVED);
        let d = trace_norm(&(&r.output_choi.matrix - &r.interaction_choi.matrix))?;
        rec.check(&format!("choi-{}", i + 1), "rewound output channel equals real interaction", Relation::AtMost, d, 0.0, 1e-8);
    }
    Ok(rec)
}

fn attack(seed: u64, restarts: usize, iters: usize, file: &Path) -> Result<Recorder> {
    let (inst, meta) = load_protocol(file)?;
    let cfg = AttackConfig { prover_width: inst.honest.width.max(1), restarts, iters, seed, ..Default::default() };
    let res = optimize_prover(&inst.ps, &cfg)?;
    let mut rec = Recorder::for_command("attack");
    rec.check("soundness", "cheating acceptance at most 1 − δ", Relation::AtMost, res.best_p, 1.0 - meta.delta, 1e-6);
    rec.holds("monotone", "alternating ascent never decreases acceptance", res.monotone);
    Ok(rec)
}
