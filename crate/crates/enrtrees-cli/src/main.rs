use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use enrtrees::metrics::{
    diameter_height, fpp_metric, ktree_chain, stationary, DiameterHeight, FppLaw, MetricError, PatchedSpace,
};
use enrtrees::models::{decode, decoding_for, Decoding, Model, ModelError};
use enrtrees::oracle::{enumerate_unlabelled, to_csv, OracleError};
use enrtrees::par::try_collect_indexed;
use enrtrees::powerseries::{
    estimate_rho, solve_enriched_fixed_point, solve_enriched_fixed_point_exact, SeriesError, RHO_TOLERANCE,
};
use enrtrees::samplers::{
    exact_size_sample, sample_limit_trimmed, CriticalSampler, ExactMethod, ExactTables, GibbsMethod, GibbsSampler,
    LimitKind, RngStream, SamplerError,
};
use enrtrees::species::{parse_species_json, Species, SpeciesError};
use enrtrees::stats::{diameter_scaling_report, hhat_limit_code, hhat_tree_code, median, tv_distance, Census};
use enrtrees::verify::{run_suite, Suite, VerifyConfig, VerifyError};

#[derive(Parser)]
#[command(name = "enrtrees", version, about = "Random unlabelled enriched trees, block graphs and k-trees")]
struct Cli {
    /// Worker threads for Monte-Carlo loops.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Species JSON file used instead of a built-in model.
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    #[arg(long, global = true, env = "ENRTREES_SEED", default_value_t = 1)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coefficients of the generating series.
    Series {
        model: String,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        rational: bool,
    },
    /// Singularity and criticality report.
    Rho { model: String },
    /// Exact-size samples as JSON lines.
    Sample {
        model: String,
        #[arg(short)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, value_enum)]
        decode: Option<DecodeArg>,
        #[arg(long, default_value = "recursive")]
        method: ExactMethod,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// TV distance between neighbourhood censuses of the n-sized tree and a limit.
    Census {
        model: String,
        #[arg(short)]
        n: usize,
        #[arg(long)]
        radius: usize,
        #[arg(long, default_value = "tinf")]
        limit: LimitKind,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
    },
    /// Acceptance suites: oracle, criticality, exactness, coupling, clt, local,
    /// moments, diameter, chain, gibbs, cycle, bijection or all.
    Verify { suite: String },
    /// Remainder sizes of Gibbs partitions.
    Gibbs {
        model: String,
        #[arg(short)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
    },
    /// Spine chain of k-trees.
    KtreeChain {
        #[arg(short)]
        k: usize,
        #[arg(long)]
        steps: u64,
    },
    /// Diameter and height scaling of decoded graphs.
    Diameter {
        model: String,
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[arg(long)]
        fpp: Option<FppLaw>,
        /// Per-sample CSV rows.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force oracle table as CSV (code,weight).
    Oracle {
        model: String,
        #[arg(short)]
        n: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DecodeArg {
    Graph,
    Ktree,
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {source}")]
    SpecFile { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Species(#[from] SpeciesError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("{0}")]
    Usage(String),
    #[error("output: {0}")]
    Io(#[from] io::Error),
    #[error("verification failed: {0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) | CliError::Verify(VerifyError::UnknownSuite(_)) => 2,
            CliError::Model(ModelError::UnknownModel(_)) | CliError::SpecFile { .. } | CliError::Species(_) => 3,
            CliError::Sampler(SamplerError::Lattice { .. } | SamplerError::TableTooSmall { .. }) => 4,
            CliError::Io(_) => 5,
            _ => 6,
        }
    }
}

struct Target {
    name: String,
    species: Species,
}

fn target(cli: &Cli, name: &str) -> Result<Target, CliError> {
    let species = match &cli.spec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::SpecFile { path: path.clone(), source })?;
            parse_species_json(&text)?
        }
        None => name.parse::<Model>()?.species(),
    };
    Ok(Target { name: name.to_string(), species })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn print_json(v: &Value) -> Result<(), CliError> {
    emit(None, &format!("{}\n", serde_json::to_string_pretty(v).expect("serializable")))
}

fn stream(seed: u64, part: u64, i: u64) -> RngStream {
    RngStream::new(seed, (part << 40) | i)
}

fn series(t: &Target, degree: usize, rational: bool) -> Result<Value, CliError> {
    let coeffs: Vec<Value> = if rational {
        solve_enriched_fixed_point_exact(&t.species, degree)?.coeffs().iter().map(|c| json!(c.to_string())).collect()
    } else {
        solve_enriched_fixed_point(&t.species, degree)?.coeffs().iter().map(|&c| json!(c)).collect()
    };
    Ok(json!({
        "schema": "enrtrees.series/1",
        "model": t.name,
        "degree": degree,
        "mode": if rational { "rational" } else { "float" },
        "coefficients": coeffs,
    }))
}

fn rho(t: &Target) -> Result<Value, CliError> {
    let r = estimate_rho(&t.species, enrtrees::powerseries::DEFAULT_DEGREE_CAP, RHO_TOLERANCE)?;
    let mut v = json!({ "schema": "enrtrees.rho/1", "model": t.name });
    v["report"] = serde_json::to_value(&r).expect("serializable");
    v["exi_hat"] = json!(r.exi_hat());
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn sample(
    t: &Target,
    n: usize,
    count: u64,
    decode_as: Option<DecodeArg>,
    method: ExactMethod,
    seed: u64,
    threads: usize,
) -> Result<String, CliError> {
    let decoding = decoding_for(&t.species);
    if let Some(DecodeArg::Ktree) = decode_as {
        if !matches!(decoding, Decoding::KTree(_)) {
            return Err(CliError::Usage(format!("model {} does not decode to k-trees", t.name)));
        }
    }
    let ctx = CriticalSampler::new(&t.species)?;
    let tables = ExactTables::build(&t.species, ctx.rho(), n);
    let lines = try_collect_indexed(count, threads, |i| -> Result<String, CliError> {
        let mut rng = RngStream::new(seed, i).rng();
        let tree = exact_size_sample(&ctx, &tables, n, method, &mut rng)?;
        let plane = tree.materialize();
        let mut v = json!({
            "schema": "enrtrees.sample/1",
            "model": t.name,
            "n": n,
            "seed": seed,
            "stream": i,
            "tree": tree.to_json(),
            "stats": { "fixpoints": tree.fixpoint_count(), "height": plane.height(), "diameter": plane.diameter() },
        });
        if decode_as.is_some() {
            v["graph"] = decode(&tree, &decoding)?.to_json();
        }
        Ok(serde_json::to_string(&v).expect("serializable"))
    })?;
    Ok(lines.into_iter().map(|l| l + "\n").collect())
}

fn census(t: &Target, n: usize, radius: usize, limit: LimitKind, samples: u64, seed: u64, threads: usize) -> Result<Value, CliError> {
    let ctx = CriticalSampler::new(&t.species)?;
    let tables = ExactTables::build(&t.species, ctx.rho(), n);
    let finite: Census = try_collect_indexed(samples, threads, |i| -> Result<String, CliError> {
        let mut rng = stream(seed, 0, i).rng();
        Ok(match limit {
            LimitKind::TInf => tables.sample(n, Some(radius), &mut rng)?.shape_code(false, Some(radius)),
            LimitKind::HHat => hhat_tree_code(&tables.sample(n, None, &mut rng)?, radius, &mut rng),
        })
    })?
    .into_iter()
    .collect();
    let reference: Census = try_collect_indexed(samples, threads, |i| -> Result<String, CliError> {
        let mut rng = stream(seed, 1, i).rng();
        let s = sample_limit_trimmed(&ctx, radius, limit, &mut rng)?;
        Ok(match limit {
            LimitKind::TInf => s.tree.shape_code(false, Some(radius)),
            LimitKind::HHat => hhat_limit_code(&s, radius),
        })
    })?
    .into_iter()
    .collect();
    let tv = tv_distance(&finite, &reference);
    Ok(json!({
        "schema": "enrtrees.census/1",
        "model": t.name,
        "n": n,
        "radius": radius,
        "limit": match limit { LimitKind::TInf => "tinf", LimitKind::HHat => "hhat" },
        "samples": samples,
        "seed": seed,
        "tv": tv.tv,
        "se": tv.se,
        "corrected": tv.corrected(),
        "classes": { "finite": finite.classes(), "limit": reference.classes() },
    }))
}

fn gibbs(t: &Target, n: usize, samples: u64, seed: u64, threads: usize) -> Result<Value, CliError> {
    let sampler = GibbsSampler::new(&t.species, n)?;
    let rows = try_collect_indexed(samples, threads, |i| -> Result<(usize, usize), CliError> {
        let sizes = sampler.sizes(n, GibbsMethod::Recursive, &mut RngStream::new(seed, i).rng())?;
        let components = sizes.iter().map(|s| s.1 as usize).sum();
        Ok((n - sizes.iter().map(|s| s.0).max().unwrap_or(0), components))
    })?;
    let mut hist = BTreeMap::new();
    for (r, _) in &rows {
        *hist.entry(*r).or_insert(0u64) += 1;
    }
    let rem: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
    Ok(json!({
        "schema": "enrtrees.gibbs/1",
        "model": t.name,
        "n": n,
        "samples": samples,
        "seed": seed,
        "remainder": {
            "histogram": hist.iter().map(|(k, v)| json!([k, v])).collect::<Vec<_>>(),
            "mean": rem.iter().sum::<f64>() / rem.len().max(1) as f64,
            "median": median(&rem),
        },
        "mean_components": rows.iter().map(|r| r.1 as f64).sum::<f64>() / rows.len().max(1) as f64,
    }))
}

fn chain(k: usize, steps: u64, seed: u64) -> Result<Value, CliError> {
    if k == 0 || steps == 0 {
        return Err(CliError::Usage("k and steps must be positive".into()));
    }
    let r = ktree_chain(k, steps, &mut RngStream::new(seed, 0).rng());
    Ok(json!({
        "schema": "enrtrees.ktree_chain/1",
        "k": k,
        "steps": steps,
        "seed": seed,
        "b_k": r.b_k,
        "terminal_distance": r.terminal_distance,
        "rate": r.rate(),
        "occupancy": r.occupancy,
        "stationary": stationary(k),
        "occupancy_tv": r.occupancy_tv(),
    }))
}

struct Row {
    n: usize,
    dh: DiameterHeight,
    fixpoints: u64,
    ms: f64,
}

fn diameter(
    t: &Target,
    sizes: &[usize],
    samples: u64,
    fpp: Option<FppLaw>,
    seed: u64,
    threads: usize,
) -> Result<(Value, String), CliError> {
    if sizes.is_empty() {
        return Err(CliError::Usage("--sizes needs at least one size".into()));
    }
    let decoding = decoding_for(&t.species);
    let ctx = CriticalSampler::new(&t.species)?;
    let tables = ExactTables::build(&t.species, ctx.rho(), *sizes.iter().max().expect("nonempty"));
    let mut rows = Vec::new();
    for (p, &n) in sizes.iter().enumerate() {
        rows.extend(try_collect_indexed(samples, threads, |i| -> Result<Row, CliError> {
            let start = Instant::now();
            let mut rng = stream(seed, p as u64, i).rng();
            let tree = tables.sample(n, None, &mut rng)?;
            let g = decode(&tree, &decoding)?;
            let space = match fpp {
                Some(law) => fpp_metric(&g, law, &mut rng)?,
                None => PatchedSpace::from_graph(&g),
            };
            let dh = diameter_height(&space);
            Ok(Row { n, dh, fixpoints: tree.fixpoint_count(), ms: start.elapsed().as_secs_f64() * 1e3 })
        })?);
    }
    let mut csv = String::from("# schema=enrtrees.diameter.csv/1\nmodel,n,seed,D,H,fixpoints,runtime_ms\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{},{},{},{},{:.3}\n", t.name, r.n, seed, r.dh.diameter, r.dh.height, r.fixpoints, r.ms));
    }
    let grouped: Vec<(usize, Vec<DiameterHeight>)> = sizes
        .iter()
        .map(|&n| (n, rows.iter().filter(|r| r.n == n).map(|r| r.dh).collect()))
        .collect();
    let report = diameter_scaling_report(&grouped);
    let mut v = json!({
        "schema": "enrtrees.diameter/1",
        "model": t.name,
        "seed": seed,
        "samples": samples,
        "metric": fpp.map_or("graph", |l| l.name()),
    });
    v["report"] = serde_json::to_value(&report).expect("serializable");
    Ok((v, csv))
}

fn verify(suite: &str, seed: u64, threads: usize) -> Result<Value, CliError> {
    let suite: Suite = suite.parse()?;
    let reports = run_suite(suite, &VerifyConfig { seed, threads })?;
    for r in &reports {
        eprintln!("{}", r.line());
    }
    let passed = reports.iter().all(|r| r.passed);
    let v = json!({ "schema": "enrtrees.verify/1", "suite": suite.name(), "seed": seed, "passed": passed, "criteria": reports });
    print_json(&v)?;
    if !passed {
        let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name).collect();
        return Err(CliError::Failed(failed.join(", ")));
    }
    Ok(v)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let (seed, threads) = (cli.seed, cli.threads.max(1));
    match &cli.command {
        Command::Series { model, degree, rational } => print_json(&series(&target(cli, model)?, *degree, *rational)?),
        Command::Rho { model } => print_json(&rho(&target(cli, model)?)?),
        Command::Sample { model, n, count, decode, method, out } => {
            let text = sample(&target(cli, model)?, *n, *count, *decode, *method, seed, threads)?;
            emit(out.as_deref(), &text)
        }
        Command::Census { model, n, radius, limit, samples } => {
            print_json(&census(&target(cli, model)?, *n, *radius, *limit, *samples, seed, threads)?)
        }
        Command::Verify { suite } => verify(suite, seed, threads).map(|_| ()),
        Command::Gibbs { model, n, samples } => print_json(&gibbs(&target(cli, model)?, *n, *samples, seed, threads)?),
        Command::KtreeChain { k, steps } => print_json(&chain(*k, *steps, seed)?),
        Command::Diameter { model, sizes, samples, fpp, out } => {
            let (report, csv) = diameter(&target(cli, model)?, sizes, *samples, *fpp, seed, threads)?;
            if let Some(path) = out {
                fs::write(path, csv)?;
            }
            print_json(&report)
        }
        Command::Oracle { model, n } => {
            let entries = enumerate_unlabelled(&target(cli, model)?.species, *n)?;
            emit(None, &format!("# schema=enrtrees.oracle.csv/1\n{}", to_csv(&entries)))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
