use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sqverify::graph::VerificationGraph;
use sqverify::harness::{
    all_passed, gap_report, report_to_string, run, sweep, write_report, ExperimentSpec, Format,
    Protocol, ReportRow, StateChoice, SweepGrid,
};
use sqverify::lh::{
    heisenberg_chain, tfim_chain, toy_x_plus_zz, toy_zz, EnergyPromise, LocalHamiltonian,
};
use sqverify::mbqc::{ProtocolParams, VerifierCircuit, DEFAULT_A, DEFAULT_B};
use sqverify::Error;

const EXIT_BOUND_FAILURE: u8 = 2;
const EXIT_INPUT_ERROR: u8 = 1;

#[derive(Parser)]
#[command(
    name = "sqverify",
    version,
    about = "Verify quantum proofs with single-qubit measurements: stabilizer tests, MBQC verifiers and local-Hamiltonian checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutFormat,
}

#[derive(Args)]
struct Sampling {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    shots: u64,
    /// Run shots on one thread (results are identical either way).
    #[arg(long)]
    serial: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphPreset {
    Path4,
    Cycle4,
    Grid2x3,
    WitnessGrid,
    Star5,
}

#[derive(Clone, Copy, ValueEnum)]
enum HamiltonianPreset {
    Zz,
    XZz,
    Tfim4,
    Heisenberg4,
}

#[derive(Subcommand)]
enum Command {
    /// Stabilizer test on an honest or supplied state.
    StabTest {
        #[arg(long, conflicts_with = "preset")]
        graph: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<GraphPreset>,
        /// Witness state file; the honest state is built from it.
        #[arg(long, conflicts_with = "state")]
        witness: Option<PathBuf>,
        /// State file on all vertices, used as received.
        #[arg(long)]
        state: Option<PathBuf>,
        /// Weight of white noise mixed into the state.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        output: Output,
    },
    /// Test-or-compute protocol on a compiled verifier circuit.
    MbqcRun {
        /// Circuit file; defaults to a built-in no-instance with acceptance 1/2.
        #[arg(long)]
        circuit: Option<PathBuf>,
        #[arg(long, conflicts_with = "state")]
        witness: Option<PathBuf>,
        #[arg(long)]
        state: Option<PathBuf>,
        /// Branch probability; defaults to the optimal value for the other parameters.
        #[arg(long)]
        q: Option<f64>,
        /// Defaults to 1/(2|x|^2).
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_A)]
        a: f64,
        #[arg(long, default_value_t = DEFAULT_B)]
        b: f64,
        #[arg(long, default_value_t = 4)]
        x_size: u64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        output: Output,
    },
    /// Local-Hamiltonian verification rounds.
    LhVerify {
        #[command(flatten)]
        instance: LhInstance,
        /// Promise as `Ea,Eb`; derived from the exact spectrum when omitted.
        #[arg(long, allow_hyphen_values = true)]
        promise: Option<String>,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        output: Output,
    },
    /// Energy estimate from single-qubit Pauli measurements.
    EstimateEnergy {
        #[command(flatten)]
        instance: LhInstance,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        output: Output,
    },
    /// Closed-form completeness/soundness gap over a range of |x|.
    GapReport {
        #[arg(long, default_value_t = 4)]
        x_min: u64,
        #[arg(long, default_value_t = 100)]
        x_max: u64,
        #[arg(long, default_value_t = DEFAULT_A)]
        a: f64,
        #[arg(long, default_value_t = DEFAULT_B)]
        b: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Grid over q, epsilon, |x| and noise weight.
    Sweep {
        #[arg(long)]
        circuit: Option<PathBuf>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1"
        )]
        q: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        epsilon: Vec<f64>,
        #[arg(long = "x", value_delimiter = ',', default_value = "4")]
        x_sizes: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2")]
        noise: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_A)]
        a: f64,
        #[arg(long, default_value_t = DEFAULT_B)]
        b: f64,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct LhInstance {
    #[arg(long, conflicts_with = "builtin")]
    hamiltonian: Option<PathBuf>,
    #[arg(long, value_enum)]
    builtin: Option<HamiltonianPreset>,
    /// State file; the exact ground state is used when omitted.
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
}

fn graph_from(
    path: Option<PathBuf>,
    preset: Option<GraphPreset>,
) -> Result<VerificationGraph, Error> {
    match (path, preset) {
        (Some(p), _) => VerificationGraph::load(p),
        (None, Some(GraphPreset::Path4)) => VerificationGraph::path(4),
        (None, Some(GraphPreset::Cycle4)) => VerificationGraph::cycle(4),
        (None, Some(GraphPreset::Grid2x3)) => VerificationGraph::grid(2, 3),
        (None, Some(GraphPreset::WitnessGrid)) => VerificationGraph::witness_grid(2, 2),
        (None, Some(GraphPreset::Star5)) => VerificationGraph::star(5),
        (None, None) => Err(Error::InvalidParams(
            "stab-test needs --graph or --preset".into(),
        )),
    }
}

fn hamiltonian_from(instance: &LhInstance) -> Result<LocalHamiltonian, Error> {
    match (&instance.hamiltonian, instance.builtin) {
        (Some(p), _) => LocalHamiltonian::load(p),
        (None, Some(HamiltonianPreset::Zz)) => toy_zz(),
        (None, Some(HamiltonianPreset::XZz)) => toy_x_plus_zz(),
        (None, Some(HamiltonianPreset::Tfim4)) => tfim_chain(4, 1.0, 1.0),
        (None, Some(HamiltonianPreset::Heisenberg4)) => heisenberg_chain(4, 1.0),
        (None, None) => Err(Error::InvalidParams(
            "needs --hamiltonian or --builtin".into(),
        )),
    }
}

fn state_choice(
    witness: Option<PathBuf>,
    state: Option<PathBuf>,
    default: StateChoice,
) -> StateChoice {
    match (witness, state) {
        (_, Some(s)) => StateChoice::Received(s),
        (Some(w), None) => StateChoice::Witness(w),
        (None, None) => default,
    }
}

fn mbqc_params(
    q: Option<f64>,
    epsilon: Option<f64>,
    a: f64,
    b: f64,
    x_size: u64,
) -> Result<ProtocolParams, Error> {
    let epsilon = match epsilon {
        Some(e) => e,
        None if x_size > 0 => 1.0 / (2.0 * (x_size as f64).powi(2)),
        None => {
            return Err(Error::InvalidParams(
                "give --epsilon or a positive --x-size".into(),
            ))
        }
    };
    let base = ProtocolParams::new(0.0, epsilon, a, b, x_size)?;
    let q = match q {
        Some(q) => q,
        None => base.optimal_q()?.min(1.0),
    };
    base.with_q(q)
}

fn lh_spec(
    protocol: Protocol,
    instance: &LhInstance,
    sampling: &Sampling,
) -> Result<ExperimentSpec, Error> {
    let mut spec = ExperimentSpec::new(
        protocol.to_string(),
        protocol,
        sampling.shots,
        sampling.seed,
    );
    spec.hamiltonian = Some(hamiltonian_from(instance)?);
    spec.state = match &instance.state {
        Some(p) => StateChoice::Received(p.clone()),
        None => StateChoice::Ground,
    };
    spec.noise = instance.noise;
    spec.parallel = !sampling.serial;
    Ok(spec)
}

fn execute(command: Command) -> Result<(Vec<ReportRow>, Output), Error> {
    match command {
        Command::StabTest {
            graph,
            preset,
            witness,
            state,
            noise,
            sampling,
            output,
        } => {
            let mut spec = ExperimentSpec::new(
                "stab-test",
                Protocol::StabOnly,
                sampling.shots,
                sampling.seed,
            );
            spec.graph = Some(graph_from(graph, preset)?);
            spec.state = state_choice(witness, state, StateChoice::RandomWitness);
            spec.noise = noise;
            spec.parallel = !sampling.serial;
            Ok((run(&spec)?, output))
        }
        Command::MbqcRun {
            circuit,
            witness,
            state,
            q,
            epsilon,
            a,
            b,
            x_size,
            noise,
            sampling,
            output,
        } => {
            let mut spec =
                ExperimentSpec::new("mbqc-run", Protocol::Mbqc, sampling.shots, sampling.seed);
            spec.circuit = Some(match circuit {
                Some(p) => VerifierCircuit::load(p)?,
                None => VerifierCircuit::soundness_toy(),
            });
            spec.params = Some(mbqc_params(q, epsilon, a, b, x_size)?);
            spec.state = state_choice(witness, state, StateChoice::RandomWitness);
            spec.noise = noise;
            spec.parallel = !sampling.serial;
            Ok((run(&spec)?, output))
        }
        Command::LhVerify {
            instance,
            promise,
            sampling,
            output,
        } => {
            let mut spec = lh_spec(Protocol::Lh, &instance, &sampling)?;
            spec.promise = promise.as_deref().map(EnergyPromise::parse).transpose()?;
            Ok((run(&spec)?, output))
        }
        Command::EstimateEnergy {
            instance,
            sampling,
            output,
        } => {
            let spec = lh_spec(Protocol::Energy, &instance, &sampling)?;
            Ok((run(&spec)?, output))
        }
        Command::GapReport {
            x_min,
            x_max,
            a,
            b,
            output,
        } => Ok((gap_report(x_min, x_max, a, b)?, output)),
        Command::Sweep {
            circuit,
            q,
            epsilon,
            x_sizes,
            noise,
            a,
            b,
            sampling,
            output,
        } => {
            let grid = SweepGrid {
                qs: q,
                epsilons: epsilon,
                x_sizes,
                noises: noise,
                a,
                b,
                circuit: match circuit {
                    Some(p) => VerifierCircuit::load(p)?,
                    None => VerifierCircuit::soundness_toy(),
                },
                shots: sampling.shots,
                seed: sampling.seed,
                parallel: !sampling.serial,
            };
            Ok((sweep(&grid)?, output))
        }
    }
}

fn emit(rows: &[ReportRow], output: &Output) -> Result<(), Error> {
    let format = match output.format {
        OutFormat::Csv => Format::Csv,
        OutFormat::Json => Format::Json,
    };
    match &output.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::File {
                path: path.display().to_string(),
                source: Box::new(Error::Io(e)),
            })?;
            let mut w = BufWriter::new(file);
            write_report(rows, format, &mut w)?;
            w.flush()?;
        }
        None => {
            let text = report_to_string(rows, format)?;
            let mut stdout = io::stdout().lock();
            match stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
            {
                // a closed pipe (e.g. `| head`) is not an error
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = execute(cli.command).and_then(|(rows, output)| {
        emit(&rows, &output)?;
        Ok(rows)
    });
    match result {
        Ok(rows) if all_passed(&rows) => ExitCode::SUCCESS,
        Ok(rows) => {
            for r in rows.iter().filter(|r| !r.passed) {
                eprintln!("bound check failed in {}: {}", r.experiment, r.checks);
            }
            ExitCode::from(EXIT_BOUND_FAILURE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT_ERROR)
        }
    }
}
