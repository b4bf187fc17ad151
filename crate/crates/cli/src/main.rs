use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mtco_core::benchgen::{generate_pair, generate_suite, load_mt, p_r_grid, save_mt, MultiTaskInstance};
use mtco_core::harness::persist::{self, load_manifest, save_study, write_dat};
use mtco_core::harness::{
    study_ablation, study_compare, study_distance_srcc, study_transferability, CompareConfig, CompareStudy,
    SrccStudy, TransferabilityStudy,
};
use mtco_core::{inter_task_distance, load_taillard, run_pair, Instance, Orientation, RunConfig, RunTrace, Variant};

/// Multi-task permutation flowshop optimization.
#[derive(Parser)]
#[command(name = "mtco", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inter-task distance between instances (Taillard files or one .mt pair).
    Distance(DistanceArgs),
    /// Generate multi-task pairs from base instances.
    Generate(GenerateArgs),
    /// Solve a .mt pair with one algorithm variant.
    Solve(SolveArgs),
    /// Distance against sampled rank correlation for a suite.
    StudySrcc(SrccArgs),
    /// Rank of each problem's best solution on its partner.
    StudyTransferability(TransferArgs),
    /// Compare algorithm variants on a suite.
    StudyCompare(CompareArgs),
    /// STSS, the single-transfer variants and MTCO on a suite.
    StudyAblation(AblationArgs),
    /// Print the summary of a study directory.
    Report(ReportArgs),
}

#[derive(Args)]
struct InputOpts {
    /// Matrix layout of Taillard files.
    #[arg(long, default_value = "auto", value_parser = parse_orientation)]
    orientation: Orientation,
}

#[derive(Args)]
struct DistanceArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Match jobs across the two problems before measuring.
    #[arg(long)]
    align_jobs: bool,
    /// Write the pairwise distance matrix as tab-separated values.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    input: InputOpts,
}

#[derive(Args)]
struct GenerateArgs {
    /// Base instance; repeat for several.
    #[arg(long = "base", required = true)]
    bases: Vec<PathBuf>,
    /// Replacing probability; repeat for several.
    #[arg(long = "pr", conflicts_with = "grid")]
    pr: Vec<f64>,
    /// Use the grid 1/N, 2/N, ..., 1 instead of --pr.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output .mt file for a single pair, or a directory for several.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    input: InputOpts,
}

#[derive(Args)]
struct RunOpts {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Evaluations per problem; defaults to 200·n·(n−1).
    #[arg(long)]
    budget: Option<u64>,
}

impl RunOpts {
    fn config(&self) -> RunConfig {
        RunConfig { max_evals: self.budget, rng_seed: self.seed, ..RunConfig::default() }
    }
}

#[derive(Args)]
struct SolveArgs {
    pair: PathBuf,
    #[arg(long, default_value = "mtco", value_parser = parse_variant)]
    variant: Variant,
    #[command(flatten)]
    run: RunOpts,
    /// Result file (JSON); printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SuiteInput {
    /// .mt files, or directories containing them.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SrccArgs {
    #[command(flatten)]
    suite: SuiteInput,
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TransferArgs {
    #[command(flatten)]
    suite: SuiteInput,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[command(flatten)]
    run: RunOpts,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    suite: SuiteInput,
    /// Variant to include; repeat for several. Defaults to stss and mtco.
    #[arg(long = "variant", value_parser = parse_variant)]
    variants: Vec<Variant>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[command(flatten)]
    run: RunOpts,
}

#[derive(Args)]
struct AblationArgs {
    #[command(flatten)]
    suite: SuiteInput,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[command(flatten)]
    run: RunOpts,
}

#[derive(Args)]
struct ReportArgs {
    dir: PathBuf,
}

fn parse_orientation(s: &str) -> Result<Orientation, String> {
    s.parse().map_err(|e: mtco_core::Error| e.to_string())
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: mtco_core::Error| e.to_string())
}

/// Taillard file, or the first problem of a `.mt` pair.
fn load_instances(path: &Path, orientation: Orientation) -> anyhow::Result<Vec<Instance>> {
    if path.extension().is_some_and(|e| e == "mt") {
        let mt = load_mt(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(vec![mt.problem1, mt.problem2]);
    }
    Ok(vec![load_taillard(path, orientation).with_context(|| format!("reading {}", path.display()))?])
}

fn distance(args: &DistanceArgs) -> anyhow::Result<()> {
    let mut named = Vec::new();
    for f in &args.files {
        let insts = load_instances(f, args.input.orientation)?;
        let stem = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        if insts.len() == 2 {
            named.extend(insts.into_iter().zip(1..).map(|(inst, k)| (format!("{stem}:{k}"), inst)));
        } else {
            named.extend(insts.into_iter().map(|inst| (stem.clone(), inst)));
        }
    }
    if named.len() < 2 {
        bail!(Usage("distance needs two instances or one .mt pair".into()));
    }
    if named.len() == 2 {
        let r = inter_task_distance(&named[0].1, &named[1].1, args.align_jobs)?;
        println!("d = {:.6}", r.normalized);
        println!("t* = {:.6}  b* = {:.6}  raw = {:.6}", r.t_star, r.b_star, r.raw);
    }
    let mut table = String::from("\t");
    table.push_str(&named.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join("\t"));
    table.push('\n');
    for (na, a) in &named {
        let row: Vec<String> = named
            .iter()
            .map(|(_, b)| inter_task_distance(a, b, args.align_jobs).map(|r| format!("{:.4}", r.normalized)))
            .collect::<mtco_core::Result<_>>()?;
        table.push_str(&format!("{na}\t{}\n", row.join("\t")));
    }
    if named.len() > 2 {
        print!("{table}");
    }
    if let Some(out) = &args.out {
        fs::write(out, table)?;
    }
    Ok(())
}

fn generate(args: &GenerateArgs) -> anyhow::Result<()> {
    let bases: Vec<Instance> = args
        .bases
        .iter()
        .map(|b| load_taillard(b, args.input.orientation).with_context(|| format!("reading {}", b.display())))
        .collect::<anyhow::Result<_>>()?;
    let grid = match (args.grid, args.pr.is_empty()) {
        (Some(0), _) => bail!(Usage("--grid must be positive".into())),
        (Some(g), _) => p_r_grid(g),
        (None, false) => args.pr.clone(),
        (None, true) => bail!(Usage("give --pr or --grid".into())),
    };
    if bases.len() * grid.len() * args.reps == 1 {
        let mut mt = generate_pair(&bases[0], grid[0], args.seed)?;
        mt.recorded_distance = Some(inter_task_distance(&mt.problem1, &mt.problem2, false)?.normalized);
        save_mt(&mt, &args.out)?;
        println!("{} d = {:.6}", args.out.display(), mt.recorded_distance.unwrap_or(f64::NAN));
        return Ok(());
    }
    let suite = generate_suite(&bases, &grid, args.reps, args.seed)?;
    fs::create_dir_all(&args.out)?;
    let mut points = Vec::with_capacity(suite.len());
    for (i, mt) in suite.iter().enumerate() {
        let (b, rest) = (i / (grid.len() * args.reps), i % (grid.len() * args.reps));
        let (k, r) = (rest / args.reps, rest % args.reps);
        save_mt(mt, args.out.join(format!("pair_b{b:02}_p{k:02}_r{r:02}.mt")))?;
        points.push((mt.p_r, mt.recorded_distance.unwrap_or(f64::NAN)));
    }
    write_dat(args.out.join("distances.dat"), ("p_r", "distance"), &points)?;
    println!("{} pairs written to {}", suite.len(), args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct SolveResult<'a> {
    variant: Variant,
    seed: u64,
    budget: Option<u64>,
    problem1: &'a RunTrace,
    problem2: &'a RunTrace,
}

fn solve(args: &SolveArgs) -> anyhow::Result<()> {
    let mt = load_mt(&args.pair).with_context(|| format!("reading {}", args.pair.display()))?;
    let cfg = RunConfig { variant: args.variant, ..args.run.config() };
    let (t1, t2) = run_pair(&mt.problem1, &mt.problem2, &cfg)?;
    let result =
        SolveResult { variant: args.variant, seed: args.run.seed, budget: args.run.budget, problem1: &t1, problem2: &t2 };
    let mut json = serde_json::to_string_pretty(&result)?;
    json.push('\n');
    match &args.out {
        Some(out) => {
            fs::write(out, &json)?;
            for (k, t) in [(1, &t1), (2, &t2)] {
                println!("problem {k}: {} after {} evaluations ({} transfers)", t.best_value, t.evals, t.fired().count());
            }
        }
        None => print!("{json}"),
    }
    Ok(())
}

fn load_suite(inputs: &[PathBuf]) -> anyhow::Result<(Vec<MultiTaskInstance>, Vec<String>)> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)?
                .map(|e| e.map(|e| e.path()))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .filter(|f| f.extension().is_some_and(|e| e == "mt"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        bail!("no .mt files found");
    }
    let suite = files
        .iter()
        .map(|f| load_mt(f).with_context(|| format!("reading {}", f.display())))
        .collect::<anyhow::Result<_>>()?;
    Ok((suite, files.iter().map(|f| f.display().to_string()).collect()))
}

fn study_srcc(args: &SrccArgs) -> anyhow::Result<()> {
    let (suite, names) = load_suite(&args.suite.inputs)?;
    let st = study_distance_srcc(&suite, args.samples, args.seed)?;
    save_study(&st, &args.suite.out, args.seed, &names)?;
    print_srcc(&st);
    Ok(())
}

fn study_transfer(args: &TransferArgs) -> anyhow::Result<()> {
    let (suite, names) = load_suite(&args.suite.inputs)?;
    let st = study_transferability(&suite, args.samples, &args.run.config(), args.run.seed)?;
    save_study(&st, &args.suite.out, args.run.seed, &names)?;
    print_transferability(&st);
    Ok(())
}

fn study_cmp(args: &CompareArgs) -> anyhow::Result<()> {
    let (suite, names) = load_suite(&args.suite.inputs)?;
    let variants = if args.variants.is_empty() { vec![Variant::Stss, Variant::Mtco] } else { args.variants.clone() };
    let cfg = CompareConfig::new(variants, args.reps, args.run.config(), args.run.seed);
    let st = study_compare(&suite, &cfg)?;
    save_study(&st, &args.suite.out, args.run.seed, &names)?;
    print_compare(&st)
}

fn study_abl(args: &AblationArgs) -> anyhow::Result<()> {
    let (suite, names) = load_suite(&args.suite.inputs)?;
    let st = study_ablation(&suite, &args.run.config(), args.reps, args.run.seed)?;
    save_study(&st, &args.suite.out, args.run.seed, &names)?;
    print_compare(&st)
}

fn print_srcc(st: &SrccStudy) {
    println!("{} pairs, {} samples each", st.rows.len(), st.samples);
    match &st.fit {
        Some(f) => println!("srcc = {:.4}·d + {:.4}  (R² = {:.4})", f.slope, f.intercept, f.r2),
        None => println!("no fit: all distances are equal"),
    }
}

fn print_transferability(st: &TransferabilityStudy) {
    println!("{} pairs, {} samples each", st.rows.len(), st.samples);
    for (lo, hi) in [(0.0, 0.1), (0.1, 0.5), (0.5, 0.9), (0.9, 1.0)] {
        let n = st.rows.iter().filter(|r| (lo..=hi).contains(&r.distance)).count();
        if let Some(s) = st.share_within(lo, hi, 10) {
            println!("d in [{lo}, {hi}]: {:.1}% of {n} pairs rank <= 10", 100.0 * s);
        }
    }
}

fn print_compare(st: &CompareStudy) -> anyhow::Result<()> {
    println!("{:<16} {:>9} {:>9} {:>9} {:>9} {:>9}", "variant", "BRE%", "ARE%", "WRE%", "RPS", "speed-up");
    for s in st.summary()? {
        let sp = s.mean_speedup.map_or("-".to_string(), |v| format!("{v:.3}"));
        println!(
            "{:<16} {:>9.3} {:>9.3} {:>9.3} {:>9.3} {:>9}",
            s.variant.to_string(),
            s.mean_bre,
            s.mean_are,
            s.mean_wre,
            s.mean_rps,
            sp
        );
    }
    Ok(())
}

fn report(args: &ReportArgs) -> anyhow::Result<()> {
    let m = load_manifest(&args.dir).with_context(|| format!("reading {}", args.dir.display()))?;
    println!("study {} (version {}, seed {}, {} inputs)", m.study, m.version, m.seed, m.inputs.len());
    match m.study.as_str() {
        "distance-srcc" => print_srcc(&persist::load_study(&args.dir)?),
        "transferability" => print_transferability(&persist::load_study(&args.dir)?),
        "compare" => print_compare(&persist::load_study(&args.dir)?)?,
        other => return Err(anyhow!("unknown study kind `{other}`")),
    }
    Ok(())
}

/// Marks an error as a usage problem rather than a data problem.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Distance(a) => distance(a),
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::StudySrcc(a) => study_srcc(a),
        Command::StudyTransferability(a) => study_transfer(a),
        Command::StudyCompare(a) => study_cmp(a),
        Command::StudyAblation(a) => study_abl(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
