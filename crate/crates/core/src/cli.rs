//! Command-line front end.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::adapt::{default_grid, gl_select, CnRange, DEFAULT_M_MAX};
use crate::density::{DensitySpec, EnvDensity};
use crate::error::{Error, Result};
use crate::estimate::{density_estimate, oracle_fm};
use crate::experiment::{
    loss_summary, run_experiment, write_losses, write_summary, ExperimentConfig,
};
use crate::io::{read_z, write_estimate, write_trajectory, write_z, EstimateHeader};
use crate::regime::{classify, DEFAULT_TOLERANCE};
use crate::seed::stream_rng;
use crate::simulate::{counts_to_branch, run_walk_to_hit, simulate_bpire, DEFAULT_MAX_STEPS};

#[derive(Debug, Parser)]
#[command(
    name = "rwre",
    version,
    about = "Random walks in random environment: simulation and density estimation"
)]
pub struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Walk,
    Bpire,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CnRangeArg {
    All,
    Above,
}

impl From<CnRangeArg> for CnRange {
    fn from(a: CnRangeArg) -> Self {
        match a {
            CnRangeArg::All => CnRange::All,
            CnRangeArg::Above => CnRange::Above,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the regime report of an environment density as JSON.
    Classify {
        #[arg(long)]
        density: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
    },
    /// Simulate a branch sequence (bpire) or a walk trajectory (walk).
    Simulate {
        #[arg(long)]
        density: PathBuf,
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value = "bpire")]
        mode: Mode,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: u64,
        /// Z sequence (bpire) or trajectory counts (walk); stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Walk mode only: also write the Z sequence read off the counts.
        #[arg(long)]
        z_out: Option<PathBuf>,
    },
    /// Order-M estimate from a Z file.
    Estimate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "M")]
        m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed recorded in the output header.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Data-driven choice of M; writes the diagnostics JSON.
    Select {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated ascending M values; geometric grid if absent.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<usize>>,
        #[arg(long, default_value_t = DEFAULT_M_MAX)]
        m_max: usize,
        #[arg(long, value_enum, default_value = "all")]
        cn_range: CnRangeArg,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the selected estimate.
        #[arg(long)]
        estimate_out: Option<PathBuf>,
    },
    /// Order-M approximation built from the exact beta moments.
    Oracle {
        #[arg(long)]
        density: PathBuf,
        #[arg(long = "M")]
        m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo experiment; writes summary.csv and losses.csv.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load_density(path: &Path) -> Result<EnvDensity> {
    DensitySpec::from_json(&read_text(path)?)?.build()
}

fn load_z(path: &Path) -> Result<crate::simulate::BranchSequence> {
    let f = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_z(BufReader::new(f))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Runs `body` against the file at `path`, or stdout.
fn with_output(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            body(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Classify { density, tol } => {
            let report = classify(&load_density(&density)?, tol)?;
            println!("{}", serde_json::to_string(&report)?);
        }
        Command::Simulate {
            density,
            n,
            mode,
            seed,
            max_steps,
            out,
            z_out,
        } => {
            let d = load_density(&density)?;
            let mut rng = stream_rng(seed);
            match mode {
                Mode::Bpire => {
                    if z_out.is_some() {
                        return Err(Error::ParameterDomain(
                            "--z-out applies to walk mode only".into(),
                        ));
                    }
                    let z = simulate_bpire(&d, n as usize, &mut rng)?;
                    with_output(out.as_deref(), |w| write_z(&z, w))?;
                }
                Mode::Walk => {
                    let sc = run_walk_to_hit(&d, n, max_steps, &mut rng)?;
                    with_output(out.as_deref(), |w| write_trajectory(&sc, w))?;
                    if let Some(path) = z_out {
                        let z = counts_to_branch(&sc)?;
                        with_output(Some(&path), |w| write_z(&z, w))?;
                    }
                }
            }
        }
        Command::Estimate { data, m, out, seed } => {
            let z = load_z(&data)?;
            let est = density_estimate(&z, m)?;
            let header = EstimateHeader { n: z.n(), m, seed };
            with_output(out.as_deref(), |w| write_estimate(&est, header, w))?;
        }
        Command::Select {
            data,
            grid,
            m_max,
            cn_range,
            out,
            estimate_out,
        } => {
            let z = load_z(&data)?;
            let grid = grid.unwrap_or_else(|| default_grid(z.n(), m_max));
            let sel = gl_select(&z, &grid, cn_range.into())?;
            with_output(out.as_deref(), |w| {
                serde_json::to_writer(&mut *w, &sel.diagnostics)?;
                writeln!(w)?;
                Ok(())
            })?;
            if let Some(path) = estimate_out {
                let header = EstimateHeader {
                    n: z.n(),
                    m: sel.diagnostics.chosen,
                    seed: None,
                };
                with_output(Some(&path), |w| write_estimate(&sel.estimate, header, w))?;
            }
        }
        Command::Oracle { density, m, out } => {
            let est = oracle_fm(&load_density(&density)?, m)?;
            let header = EstimateHeader {
                n: 0,
                m,
                seed: None,
            };
            with_output(out.as_deref(), |w| write_estimate(&est, header, w))?;
        }
        Command::Experiment { config, out_dir } => {
            let cfg = ExperimentConfig::from_json(&read_text(&config)?)?;
            let output = run_experiment(&cfg)?;
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
            with_output(Some(&out_dir.join("summary.csv")), |w| {
                write_summary(&output, w)
            })?;
            with_output(Some(&out_dir.join("losses.csv")), |w| {
                write_losses(&output, w)
            })?;
            let report = serde_json::json!({
                "density_id": output.density_id,
                "truncated": output.truncated,
                "losses": loss_summary(&output.losses),
            });
            println!("{report}");
        }
    }
    Ok(())
}

/// Error line written to stderr on runtime failure.
pub fn error_line(e: &Error) -> String {
    serde_json::json!({ "error": e.code(), "message": e.to_string() }).to_string()
}

/// Parses `args` and runs the command. Returns the process exit code:
/// 0 on success, 1 on runtime errors, 2 on usage errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Error::ParameterDomain(
            "--threads must be at least 1".into(),
        )),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Io(e.to_string()))
            .and_then(|pool| pool.install(|| execute(cli.command))),
        None => execute(cli.command),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            1
        }
    }
}
