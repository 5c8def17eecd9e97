use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use catci::bench::{self, BenchTest, Experiment, ExperimentConfig};
use catci::citest::{CiQuery, TestSpec};
use catci::data::load_csv;
use catci::pc::{cpdag_edge_list, pc, write_test_log_file, PcConfig};
use catci::sim::NullVariant;
use catci::Error;

#[derive(Parser)]
#[command(name = "catci", version, about = "Conditional independence tests for categorical data")]
struct Cli {
    /// Log progress to stderr
    #[arg(short, long, global = true)]
    verbose: bool,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test one conditional independence query on a dataset
    Citest(CitestArgs),
    /// Learn a CPDAG with PC-stable
    Pc(PcArgs),
    /// Run a benchmark experiment and write metric rows as CSV
    Bench(BenchArgs),
}

#[derive(Args)]
struct TestArgs {
    /// qtest, g2 or g2mc (qtest:glm style names also accepted)
    #[arg(long, default_value = "qtest")]
    test: String,
    /// Estimator for qtest: glm, rft, saturated, binomial, multinomial, polr
    #[arg(long)]
    estimator: Option<String>,
    /// Permutations for g2mc
    #[arg(long)]
    permutations: Option<usize>,
}

impl TestArgs {
    fn spec(&self) -> Result<TestSpec, Error> {
        let mut name = self.test.clone();
        if let Some(est) = &self.estimator {
            if name != "qtest" {
                return Err(Error::InvalidArgument(format!("--estimator does not apply to `{name}`")));
            }
            name = format!("qtest:{est}");
        }
        if let Some(b) = self.permutations {
            if name != "g2mc" {
                return Err(Error::InvalidArgument("--permutations only applies to g2mc".into()));
            }
            name = format!("g2mc:{b}");
        }
        name.parse()
    }
}

#[derive(Args)]
struct CitestArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    /// Conditioning variables, comma separated
    #[arg(long, value_delimiter = ',')]
    z: Vec<String>,
    #[command(flatten)]
    test: TestArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PcArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[command(flatten)]
    test: TestArgs,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Largest conditioning set size
    #[arg(long)]
    max_cond: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Edge list output (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV log of every test performed
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// calibration, discrimination, modeltest, structure, adult or runtime
    experiment: String,
    /// CSV output (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Significance levels, comma separated; the first one is used for
    /// accept/reject decisions
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Tests, comma separated: qtest:glm, qtest:rft, qtest:saturated, g2,
    /// g2mc, g2mc:B, oracle
    #[arg(long, value_delimiter = ',')]
    tests: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Conditioner counts, or variables per random DAG
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    p_edge: Option<Vec<f64>>,
    /// Calibration generator: as-written, strict-binary or categorical:KX:KY
    #[arg(long)]
    null_variant: Option<String>,
    /// Ordinal discrimination protocol
    #[arg(long)]
    ordinal: bool,
    #[arg(long)]
    max_cond: Option<usize>,
    /// Trees per forest
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    /// True graph edge list for file-based structure runs
    #[arg(long)]
    truth: Option<PathBuf>,
}

fn parse_null_variant(s: &str) -> Result<NullVariant, Error> {
    match s {
        "as-written" => Ok(NullVariant::AsWritten),
        "strict-binary" => Ok(NullVariant::StrictBinary),
        _ => {
            let bad = || Error::InvalidArgument(format!("unknown null variant `{s}`"));
            let rest = s.strip_prefix("categorical:").ok_or_else(bad)?;
            let (kx, ky) = rest.split_once(':').ok_or_else(bad)?;
            Ok(NullVariant::Categorical {
                kx: kx.parse().map_err(|_| bad())?,
                ky: ky.parse().map_err(|_| bad())?,
            })
        }
    }
}

fn bench_config(a: &BenchArgs) -> Result<ExperimentConfig, Error> {
    let experiment: Experiment = a.experiment.parse()?;
    let mut cfg = ExperimentConfig::new(experiment);
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.replicates {
        cfg.replicates = v;
    }
    if let Some(v) = &a.alpha {
        cfg.alpha = v.clone();
    }
    if let Some(v) = &a.tests {
        cfg.tests = v.iter().map(|t| t.parse::<BenchTest>()).collect::<Result<_, _>>()?;
    }
    if let Some(v) = &a.n {
        cfg.n = v.clone();
    }
    if let Some(v) = &a.k {
        cfg.k = v.clone();
    }
    if let Some(v) = &a.beta {
        cfg.beta = v.clone();
    }
    if let Some(v) = &a.p_edge {
        cfg.p_edge = v.clone();
    }
    if let Some(v) = &a.null_variant {
        cfg.null_variant = parse_null_variant(v)?;
    }
    if let Some(v) = a.trees {
        cfg.fit.forest.n_trees = v;
    }
    cfg.ordinal = a.ordinal;
    cfg.max_cond_size = a.max_cond;
    cfg.data = a.data.clone();
    cfg.schema = a.schema.clone();
    cfg.truth = a.truth.clone();
    if experiment == Experiment::Adult && cfg.schema.is_none() {
        cfg.schema = Some(PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data/adult_schema.json")));
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Citest(a) => {
            let spec = a.test.spec()?;
            let (ds, _) = load_csv(&a.data, &a.schema)?;
            let z: Vec<&str> = a.z.iter().map(String::as_str).collect();
            let q = CiQuery::new(&a.x, &a.y, &z);
            let r = spec.run(&ds, &q, a.seed, &Default::default())?;
            println!(
                "{q}: test={spec} family={} statistic={} df={} p={} n={} degenerate={}",
                r.family, r.statistic, r.df, r.p_value, r.diagnostics.n_used, r.diagnostics.degenerate
            );
        }
        Command::Pc(a) => {
            let cfg = PcConfig {
                alpha: a.alpha,
                max_cond_size: a.max_cond,
                test: a.test.spec()?,
                seed: a.seed,
                fit: Default::default(),
            };
            let (ds, _) = load_csv(&a.data, &a.schema)?;
            let res = pc(&ds, &cfg)?;
            let names: Vec<String> = ds.names().map(str::to_string).collect();
            let edges = cpdag_edge_list(&res.cpdag, &names);
            match &a.out {
                Some(p) => std::fs::write(p, &edges).map_err(|e| Error::Io {
                    path: p.clone(),
                    source: e,
                })?,
                None => print!("{edges}"),
            }
            if let Some(p) = &a.log {
                write_test_log_file(&res.skeleton.test_log, &names, p)?;
            }
        }
        Command::Bench(a) => {
            let cfg = bench_config(&a)?;
            let rows = bench::run(&cfg)?;
            match &a.out {
                Some(p) => bench::write_rows_file(&rows, p)?,
                None => bench::write_rows(&rows, std::io::stdout().lock())?,
            }
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numerical(_) => 3,
        Error::InvalidArgument(_) => 1,
        e if e.is_data_error() => 2,
        Error::Graph(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(exit_code(&Error::Numerical("singular".into())), 3);
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), 1);
        assert_eq!(exit_code(&Error::UnknownColumn("x".into())), 2);
        assert_eq!(exit_code(&Error::Schema("x".into())), 2);
        assert_eq!(exit_code(&Error::Graph("x".into())), 2);
    }

    #[test]
    fn null_variant_names() {
        assert_eq!(parse_null_variant("strict-binary").unwrap(), NullVariant::StrictBinary);
        assert_eq!(
            parse_null_variant("categorical:4:2").unwrap(),
            NullVariant::Categorical { kx: 4, ky: 2 }
        );
        assert!(parse_null_variant("categorical:4").is_err());
    }
}
