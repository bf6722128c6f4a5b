//! Command-line front end: partition reports, spectral-weight sweeps, the
//! envelope-function test grid, matrix generation, single-input evaluation,
//! distinguisher experiments, mass checks, and constant measurement.
//!
//! Every subcommand writes a key=value manifest next to its outputs so a run
//! can be reproduced exactly. Exit codes: 0 ok, 1 failed checks, 2 bad
//! arguments.

use anyhow::Context;
use clap::{Parser, Subcommand};
use rorrelation::families::{
    binomial, halving_cost_ratio_sup, partition_cost, partition_pnk, partition_to_text,
    pi_upper_bound, verify_cover,
};
use rorrelation::harness::{
    advantage_csv, estimate_constants, mass_checks, mass_csv, run_distinguisher,
    Constants, ExperimentConfig, MatrixSource, Policy,
};
use rorrelation::lambda::{lambda, lambda_oracle, verify_weight_bounds};
use rorrelation::rng::{stream, StreamLabel};
use rorrelation::rorrelation::{write_matrix_binary, HardDistribution};
use rorrelation::tree::{enumerate_trees, random_tree, DecisionTree, LeafModel};
use rorrelation::{InputMatrix, OrthogonalMatrix, RorrelationInstance};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rorr", about = "Decision-tree spectrum and planted-input experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the recursive set-family partition for (n, k) with its cost.
    Partition {
        n: u64,
        k: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Sweep decision trees against the level-weight bounds.
    WeightCheck {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        kmax: u32,
        /// Enumerate every {-1,0,1} constant-leaf tree instead of sampling.
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Check the envelope function against its grid oracle and print a table.
    LambdaSweep {
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Draw a random orthogonal matrix and write it in binary form.
    HaarGen {
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate phi, the class, and the quantum acceptance on one input.
    RorrEval {
        /// hadamard | haar:SEED | file:PATH
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        k: usize,
        /// Input file ("n k" header then k sign rows), or "all-ones".
        #[arg(long)]
        input: String,
        /// Dimension; required with --input all-ones, ignored otherwise.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Run the query-bounded distinguishers described by a config file.
    Distinguish {
        #[arg(long)]
        config: PathBuf,
        /// Measured-constants file; its c_prime_hat scales the ceiling.
        #[arg(long, default_value = "constants.txt")]
        constants: PathBuf,
    },
    /// Check the class masses of both input distributions.
    MassCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Measure the pinned constants and write them to a file.
    EstimateConstants {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "constants.txt")]
        out: PathBuf,
    },
}

/// A check that ran to completion but did not hold (exit 1, not 2).
#[derive(Debug)]
struct CheckFailed(String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "check failed: {}", self.0)
    }
}

impl std::error::Error for CheckFailed {}

fn main() -> ExitCode {
    let cli = Cli::parse(); // clap exits 2 on bad arguments
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".to_string())
}

fn sha256_file(path: &Path) -> String {
    match fs::read(path) {
        Ok(bytes) => format!("{:x}", Sha256::digest(&bytes)),
        Err(_) => "none".to_string(),
    }
}

fn write_manifest(
    dir: &Path,
    subcommand: &str,
    config: &str,
    seed: u64,
    constants_path: &Path,
) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    let mut text = String::new();
    writeln!(text, "subcommand={subcommand}").unwrap();
    for line in config.lines().filter(|l| !l.trim().is_empty()) {
        writeln!(text, "config.{line}").unwrap();
    }
    writeln!(text, "seed={seed}").unwrap();
    writeln!(text, "git_describe={}", git_describe()).unwrap();
    writeln!(text, "constants_sha256={}", sha256_file(constants_path)).unwrap();
    let path = dir.join(format!("manifest-{subcommand}.txt"));
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// RORR_MASTER_SEED overrides the master seed and nothing else.
fn master_seed_override(configured: u64) -> anyhow::Result<u64> {
    match std::env::var("RORR_MASTER_SEED") {
        Ok(v) => v.parse().with_context(|| format!("bad RORR_MASTER_SEED `{v}`")),
        Err(_) => Ok(configured),
    }
}

fn parse_matrix_source(source: &str) -> anyhow::Result<MatrixSource> {
    if source == "hadamard" {
        Ok(MatrixSource::Hadamard)
    } else if let Some(seed) = source.strip_prefix("haar:") {
        Ok(MatrixSource::Haar { seed: seed.parse().context("bad haar seed")? })
    } else if let Some(path) = source.strip_prefix("file:") {
        Ok(MatrixSource::File(path.to_string()))
    } else {
        anyhow::bail!("bad matrix source `{source}` (want hadamard | haar:SEED | file:PATH)")
    }
}

fn read_input(path_or_ones: &str, n: usize, k: usize) -> anyhow::Result<InputMatrix> {
    if path_or_ones == "all-ones" {
        return Ok(InputMatrix::all_ones(n, k)?);
    }
    let text = fs::read_to_string(path_or_ones).with_context(|| format!("reading {path_or_ones}"))?;
    let mut tokens = text.split_whitespace();
    let fn_ = |t: Option<&str>| -> anyhow::Result<i64> {
        t.context("truncated input file")?.parse().context("bad input entry")
    };
    let (fin, fik) = (fn_(tokens.next())? as usize, fn_(tokens.next())? as usize);
    if fin != n || fik != k {
        anyhow::bail!("input file is {fin}x{fik} but the instance is {n}x{k}");
    }
    let mut signs = Vec::with_capacity(n * k);
    for _ in 0..n * k {
        let v = fn_(tokens.next())?;
        if v != 1 && v != -1 {
            anyhow::bail!("input entries must be +-1, got {v}");
        }
        signs.push(v as i8);
    }
    Ok(InputMatrix::new(n, k, signs)?)
}

fn load_constants(path: &Path) -> Option<Constants> {
    fs::read_to_string(path).ok().and_then(|t| Constants::from_text(&t).ok())
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Partition { n, k, out } => cmd_partition(n, k, &out),
        Command::WeightCheck { n, d, kmax, exhaustive, samples, seed, out } => {
            cmd_weight_check(n, d, kmax, exhaustive, samples, seed, &out)
        }
        Command::LambdaSweep { out } => cmd_lambda_sweep(&out),
        Command::HaarGen { n, seed, out } => cmd_haar_gen(n, seed, &out),
        Command::RorrEval { matrix, k, input, n } => cmd_rorr_eval(&matrix, k, &input, n),
        Command::Distinguish { config, constants } => cmd_distinguish(&config, &constants),
        Command::MassCheck { config } => cmd_mass_check(&config),
        Command::EstimateConstants { seed, out } => cmd_estimate_constants(seed, &out),
    }
}

fn cmd_partition(n: u64, k: u64, out: &Path) -> anyhow::Result<()> {
    if !(1..=64).contains(&n) || k < 1 {
        anyhow::bail!(clap::Error::raw(
            clap::error::ErrorKind::InvalidValue,
            "need 1 <= n <= 64 and k >= 1\n",
        ));
    }
    let parts = partition_pnk(n, k);
    let text = partition_to_text(&parts);
    print!("{text}");
    let cost = partition_cost(&parts);
    let c_hat = halving_cost_ratio_sup(60).max(1.0);
    let lower = (binomial(n, k) as f64).sqrt();
    let upper = pi_upper_bound(n, k, c_hat);
    println!("families={} cost={cost} lower={lower} upper={upper}", parts.len());
    fs::create_dir_all(out)?;
    fs::write(out.join("partition.txt"), &text)?;
    fs::write(
        out.join("partition_cost.csv"),
        format!("n,k,families,cost,lower,upper\n{n},{k},{},{cost},{lower},{upper}\n", parts.len()),
    )?;
    write_manifest(out, "partition", &format!("n={n}\nk={k}\nc_hat={c_hat}"), 0, Path::new("constants.txt"))?;
    let covered = verify_cover(n, k, &parts)?;
    if !covered {
        return Err(CheckFailed(format!("partition for ({n},{k}) is not an exact cover")).into());
    }
    if !(lower <= cost && cost <= upper) {
        return Err(CheckFailed(format!(
            "cost {cost} outside [{lower}, {upper}] for ({n},{k})"
        ))
        .into());
    }
    println!("cover=exact cost-in-bounds=yes");
    Ok(())
}

fn cmd_weight_check(
    n: usize,
    d: usize,
    kmax: u32,
    exhaustive: bool,
    samples: usize,
    seed: u64,
    out: &Path,
) -> anyhow::Result<()> {
    let labels = [-1.0, 0.0, 1.0];
    let report = if exhaustive {
        verify_weight_bounds(enumerate_trees(n, d, &labels)?, 1.0, 1.0)?
    } else {
        let mut rng = stream(seed, StreamLabel::TreeSample, 0);
        let trees: Vec<DecisionTree> = (0..samples)
            .map(|_| random_tree(n, d, LeafModel::Pm01 { density: 2.0 / 3.0 }, &mut rng))
            .collect::<Result<_, _>>()?;
        verify_weight_bounds(&trees, 1.0, 1.0)?
    };
    let mut csv = String::from("n,d,k,p,level_weight,bound_main,bound_clean,ratio,normalized\n");
    for r in report.rows.iter().filter(|r| r.k <= kmax) {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.n, r.d, r.k, r.p, r.level_weight, r.bound_main, r.bound_clean, r.ratio,
            r.normalized
        )
        .unwrap();
    }
    fs::create_dir_all(out)?;
    fs::write(out.join("weight_check.csv"), csv)?;
    write_manifest(
        out,
        "weight-check",
        &format!("n={n}\nd={d}\nkmax={kmax}\nexhaustive={exhaustive}\nsamples={samples}"),
        seed,
        Path::new("constants.txt"),
    )?;
    println!(
        "trees={} max_ratio={} max_normalized={}{}",
        report.trees,
        report.max_ratio,
        report.max_normalized,
        if report.truncated { " (row log truncated)" } else { "" }
    );
    if report.max_ratio > 1.0 {
        return Err(CheckFailed(format!(
            "level weight exceeded its bound (max ratio {})",
            report.max_ratio
        ))
        .into());
    }
    Ok(())
}

fn cmd_lambda_sweep(out: &Path) -> anyhow::Result<()> {
    let mut csv = String::from("m,k,p,lambda,oracle\n");
    let mut worst_low = f64::INFINITY;
    let mut worst_high = 0.0f64;
    for &m in &[4u64, 64, 4096, 1_000_000] {
        for k in 1..=4u32 {
            for &p in &[1e-6, 1e-3, 0.01, 0.1, 0.5, 1.0] {
                let l = lambda(m, k, p)?;
                let o = lambda_oracle(m, k, p, 200)?;
                writeln!(csv, "{m},{k},{p},{l},{o}").unwrap();
                println!("m={m} k={k} p={p} lambda={l} oracle={o}");
                worst_low = worst_low.min(o / l);
                worst_high = worst_high.max(o / l);
            }
        }
    }
    fs::create_dir_all(out)?;
    fs::write(out.join("lambda_sweep.csv"), csv)?;
    write_manifest(out, "lambda-sweep", "grid=200", 0, Path::new("constants.txt"))?;
    println!("oracle/lambda in [{worst_low}, {worst_high}]");
    if !(0.98 <= worst_low && worst_high <= 1.0 + 1e-9) {
        return Err(CheckFailed(format!(
            "grid oracle strayed from the closed form: ratios in [{worst_low}, {worst_high}]"
        ))
        .into());
    }
    Ok(())
}

fn cmd_haar_gen(n: usize, seed: u64, out: &Path) -> anyhow::Result<()> {
    let mut rng = stream(seed, StreamLabel::HaarMatrix, 0);
    let u = OrthogonalMatrix::haar(n, &mut rng)?;
    let defect = u.orthogonality_defect();
    let mut file = std::io::BufWriter::new(fs::File::create(out)?);
    write_matrix_binary(&mut file, &u)?;
    drop(file);
    let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    write_manifest(
        dir,
        "haar-gen",
        &format!("n={n}\nout={}", out.display()),
        seed,
        Path::new("constants.txt"),
    )?;
    println!("wrote {} (orthogonality defect {defect:e})", out.display());
    Ok(())
}

fn cmd_rorr_eval(matrix: &str, k: usize, input: &str, n_flag: Option<usize>) -> anyhow::Result<()> {
    let source = parse_matrix_source(matrix)?;
    // Resolve the matrix first; hadamard/haar need n, which comes from the
    // input file header.
    let u = match source {
        MatrixSource::File(path) => {
            let file = fs::File::open(&path).with_context(|| format!("opening {path}"))?;
            let mut reader = std::io::BufReader::new(file);
            rorrelation::rorrelation::read_matrix_binary(&mut reader)?
        }
        MatrixSource::Hadamard | MatrixSource::Haar { .. } => {
            let n = if input == "all-ones" {
                n_flag.context("--n is required with --input all-ones")?
            } else {
                let text = fs::read_to_string(input)?;
                let n: usize = text
                    .split_whitespace()
                    .next()
                    .context("empty input file")?
                    .parse()
                    .context("bad input header")?;
                n
            };
            match source {
                MatrixSource::Hadamard => OrthogonalMatrix::hadamard(n)?,
                MatrixSource::Haar { seed } => {
                    let mut rng = stream(seed, StreamLabel::HaarMatrix, 0);
                    OrthogonalMatrix::haar(n, &mut rng)?
                }
                MatrixSource::File(_) => unreachable!(),
            }
        }
    };
    let inst = RorrelationInstance::new(u, k)?;
    let x = read_input(input, inst.n(), k)?;
    let phi = inst.phi(&x)?;
    println!("phi = {phi:.8}");
    println!("class = {:?}", inst.classify(&x)?);
    println!("quantum_acceptance = {:.8}", inst.quantum_acceptance(&x)?);
    Ok(())
}

fn cmd_distinguish(config_path: &Path, constants_path: &Path) -> anyhow::Result<()> {
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("reading {}", config_path.display()))?;
    let mut config = ExperimentConfig::from_text(&text)?;
    config.master_seed = master_seed_override(config.master_seed)?;
    let c_prime = load_constants(constants_path).map(|c| c.c_prime_hat).unwrap_or(1.0);
    let u = config.load_matrix()?;
    let inst = RorrelationInstance::new(u, config.k)?;
    let mut rows = Vec::new();
    let mut policies = vec![Policy::ConstantZero];
    for &d in &config.depths {
        policies.push(Policy::RandomProbe { depth: d });
        policies.push(Policy::GreedyProbe { depth: d });
    }
    policies.push(Policy::FullInformation);
    for (i, policy) in policies.iter().enumerate() {
        rows.push(run_distinguisher(
            *policy,
            &inst,
            config.epsilon,
            config.samples,
            config.master_seed.wrapping_add((i as u64) << 32),
            c_prime,
        )?);
    }
    let out = PathBuf::from(&config.out_dir);
    fs::create_dir_all(&out)?;
    fs::write(out.join("advantage.csv"), advantage_csv(&rows))?;
    write_manifest(&out, "distinguish", &config.to_text(), config.master_seed, constants_path)?;
    let mut failed = Vec::new();
    for r in &rows {
        println!(
            "{} d={} E_U={:.5} E_D={:.5} advantage={:.5} bound={:.5}",
            r.policy, r.depth, r.e_uniform, r.e_hard, r.advantage, r.bound
        );
        // The ceiling constrains the depth-limited policies; the
        // full-information run is the reference attack above it.
        if r.policy != "full-information" {
            let sigma = (r.se_uniform.powi(2) + r.se_hard.powi(2)).sqrt();
            if r.advantage > r.bound + 4.0 * sigma {
                failed.push(format!("{} d={} advantage {}", r.policy, r.depth, r.advantage));
            }
        }
    }
    if !failed.is_empty() {
        return Err(CheckFailed(format!("advantage over ceiling: {}", failed.join("; "))).into());
    }
    Ok(())
}

fn cmd_mass_check(config_path: &Path) -> anyhow::Result<()> {
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("reading {}", config_path.display()))?;
    let mut config = ExperimentConfig::from_text(&text)?;
    config.master_seed = master_seed_override(config.master_seed)?;
    let u = config.load_matrix()?;
    let inst = RorrelationInstance::new(u, config.k)?;
    let report = mass_checks(&inst, config.epsilon, config.samples, config.master_seed)?;
    let out = PathBuf::from(&config.out_dir);
    fs::create_dir_all(&out)?;
    fs::write(out.join("mass.csv"), mass_csv(&[report]))?;
    write_manifest(&out, "mass-check", &config.to_text(), config.master_seed, Path::new("constants.txt"))?;
    println!(
        "P_U[f!=0]={} (<= {} + 4sigma: {}) P_D[f=1]={} (>= {} - 4sigma: {})",
        report.p_nonzero_uniform,
        report.bound_uniform,
        report.ok_uniform,
        report.p_one_hard,
        report.bound_hard,
        report.ok_hard
    );
    if !(report.ok_uniform && report.ok_hard) {
        return Err(CheckFailed("mass bounds violated".into()).into());
    }
    Ok(())
}

fn cmd_estimate_constants(seed: u64, out: &Path) -> anyhow::Result<()> {
    let constants = estimate_constants(seed)?;
    let date = std::process::Command::new("date")
        .arg("+%Y-%m-%d")
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".to_string());
    let text = format!("# measured {date}\n{}", constants.to_text());
    fs::write(out, &text)?;
    let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    write_manifest(dir, "estimate-constants", &constants.to_text(), seed, out)?;
    print!("{text}");
    // The hard-distribution default epsilon is part of the pinned setup;
    // echo it so reports are self-describing.
    println!("# default_epsilon={}", HardDistribution::DEFAULT_EPSILON);
    Ok(())
}
