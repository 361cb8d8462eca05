use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use snblock::certify::parse_certificate_k;
use snblock::dynamics::verify::Verdict;
use snblock::ingest::{parse_samples, SampledVectorField};
use snblock::pipeline::{
    block_stage, certify_stage, graphic_stage, index_stage, ingest_stage, read_artifact,
    synthesize_stage, verify_stage, write_artifact, BlockSpec, PipelineConfig, PipelineError,
};
use snblock::synthesis::model_file::{read_model, write_model};

#[derive(Parser, Debug)]
#[command(
    name = "snblock",
    version,
    about = "Saddle-node certification and model synthesis from sampled vector fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Sample file.
    #[arg(long, global = true)]
    samples: Option<PathBuf>,

    /// Block description file.
    #[arg(long, global = true)]
    block: Option<PathBuf>,

    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Target bifurcation parameter of the synthesized model.
    #[arg(long, global = true, default_value_t = 0.5)]
    lambda0: f64,

    /// Newton residual tolerance of the equilibrium census.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,

    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Check the sampling assumptions on the block.
    Ingest,
    /// Build the isolating block and its attractor/repeller split.
    Block,
    /// Compute the Conley indices of S, A and A*.
    Index,
    /// Decide the homological saddle-node certificate.
    Certify,
    /// Synthesize the two-parameter family (needs certificate.txt).
    Synthesize,
    /// Verify the synthesized family (needs model.txt).
    Verify,
    /// Emit the Cerf graphic of the synthesized family (needs model.txt).
    Graphic,
}

/// Outcome of a subcommand that ran to completion.
enum Outcome {
    Pass,
    Fail,
}

fn config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let samples = cli.samples.clone().unwrap_or_default();
    let mut cfg = PipelineConfig::new(samples, cli.block.clone(), cli.out.clone());
    cfg.lambda0 = cli.lambda0;
    cfg.newton_tol = cli.tol;
    cfg.seed = cli.seed;
    cfg.validate()?;
    Ok(cfg)
}

fn load_samples(cfg: &PipelineConfig) -> Result<SampledVectorField> {
    if cfg.samples.as_os_str().is_empty() {
        return Err(PipelineError::ConfigInvalid("--samples is required".into()).into());
    }
    let text = read_artifact(&cfg.samples)?;
    parse_samples(&text).with_context(|| cfg.samples.display().to_string())
}

fn load_block(cfg: &PipelineConfig) -> Result<BlockSpec> {
    let path = cfg
        .block
        .as_ref()
        .ok_or_else(|| PipelineError::ConfigInvalid("--block is required".into()))?;
    Ok(BlockSpec::parse(&read_artifact(path)?)?)
}

fn emit(cfg: &PipelineConfig, name: &str, text: &str) -> Result<()> {
    write_artifact(&cfg.artifact(name), text)?;
    Ok(())
}

fn run(command: Command, cfg: &PipelineConfig) -> Result<Outcome> {
    match command {
        Command::Ingest => {
            let svf = load_samples(cfg)?;
            let report = ingest_stage(&svf, &load_block(cfg)?)?;
            emit(cfg, "assumptions.txt", &report.to_text())?;
            Ok(if report.certified() {
                Outcome::Pass
            } else {
                Outcome::Fail
            })
        }
        Command::Block => {
            let svf = load_samples(cfg)?;
            let spec = load_block(cfg)?;
            let pair = block_stage(&svf, &spec)?;
            emit(cfg, "block.txt", &pair.parent.to_text())?;
            emit(cfg, "pair.txt", &pair.to_text())?;
            Ok(Outcome::Pass)
        }
        Command::Index => {
            let svf = load_samples(cfg)?;
            let pair = block_stage(&svf, &load_block(cfg)?)?;
            emit(cfg, "index.txt", &index_stage(&pair)?.to_text())?;
            Ok(Outcome::Pass)
        }
        Command::Certify => {
            let svf = load_samples(cfg)?;
            let pair = block_stage(&svf, &load_block(cfg)?)?;
            let outcome = certify_stage(&pair)?;
            emit(cfg, "certificate.txt", outcome.document())?;
            Ok(if outcome.verdict.is_certificate() {
                Outcome::Pass
            } else {
                Outcome::Fail
            })
        }
        Command::Synthesize => {
            let cert = read_artifact(&cfg.artifact("certificate.txt"))?;
            let k = parse_certificate_k(&cert).ok_or_else(|| {
                PipelineError::ConfigInvalid("certificate.txt does not hold a certificate".into())
            })?;
            let svf = load_samples(cfg)?;
            let pair = block_stage(&svf, &load_block(cfg)?)?;
            let (family, radius) = synthesize_stage(&svf, &pair, k, cfg)?;
            emit(cfg, "model.txt", &write_model(&family, &svf, radius))?;
            Ok(Outcome::Pass)
        }
        Command::Verify => {
            let (family, _) = read_model(&read_artifact(&cfg.artifact("model.txt"))?)?;
            let report = verify_stage(&family, cfg)?;
            emit(cfg, "verify.txt", &report.to_text())?;
            let branches: String = report
                .branches
                .iter()
                .map(|b| b.to_tsv())
                .collect::<Vec<_>>()
                .join("\n");
            emit(cfg, "branches.tsv", &branches)?;
            Ok(if report.verdict() == Verdict::Pass {
                Outcome::Pass
            } else {
                Outcome::Fail
            })
        }
        Command::Graphic => {
            let (family, _) = read_model(&read_artifact(&cfg.artifact("model.txt"))?)?;
            let (graphic, cusp) = graphic_stage(&family)?;
            emit(cfg, "graphic_arcs.tsv", &graphic.arcs_tsv())?;
            emit(cfg, "graphic_events.tsv", &graphic.events_tsv())?;
            emit(cfg, "graphic.svg", &graphic.to_svg())?;
            emit(cfg, "cusp.tsv", &cusp)?;
            Ok(Outcome::Pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = config(&cli)
        .map_err(anyhow::Error::from)
        .and_then(|cfg| run(cli.command, &cfg));
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
