use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use keyed_npht::adversary::SourceKind;
use keyed_npht::aggregate::Method;
use keyed_npht::dataset::{read_points, read_samples, read_values};
use keyed_npht::detector::{Decision, Detector, DetectorConfig, DEFAULT_THRESHOLD};
use keyed_npht::harness::{self, ExperimentSpec};
use keyed_npht::keying::{generate_keys, KeyBundle, DEFAULT_DEGREE, DEFAULT_KEY_COUNT};
use keyed_npht::randomness::{
    self, FixedSource, LatticeAdversary, MinDistConfig, PlanePermutationKey, PointSource,
    UniformSource,
};
use keyed_npht::report::{fmt17, Format, Report, Value};
use keyed_npht::seed::derive_seed;
use keyed_npht::stats::mann_whitney_u;
use keyed_npht::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "keyed-npht",
    version,
    about = "Keyed non-parametric tests and poisoning experiments"
)]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = harness::DEFAULT_SEED)]
    seed: u64,
    /// Output directory (a file path for `keygen`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Format of the report printed on standard output.
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Format {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a bundle of secret polynomial keys.
    Keygen(KeygenArgs),
    /// Two-sided Mann-Whitney U test of two dataset files.
    Mwu(MwuArgs),
    /// Keyed poison detection of an unknown batch against a trusted one.
    Detect(DetectArgs),
    /// Honest-versus-attack simulation with CSV and SVG output.
    Experiment(ExperimentArgs),
    /// Classical or keyed minimum-distance randomness test.
    Mindist(MindistArgs),
}

#[derive(Args, Debug)]
struct KeygenArgs {
    #[arg(long, default_value_t = DEFAULT_DEGREE)]
    degree: usize,
    #[arg(long, default_value_t = DEFAULT_KEY_COUNT)]
    count: usize,
    #[arg(
        long,
        default_value = "-1,0,1",
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    coeff_set: Vec<f64>,
}

#[derive(Args, Debug)]
struct MwuArgs {
    /// First sample file.
    #[arg(long)]
    a: PathBuf,
    /// Second sample file.
    #[arg(long)]
    b: PathBuf,
}

#[derive(Args, Debug)]
struct DetectArgs {
    #[arg(long)]
    safe: PathBuf,
    #[arg(long)]
    unknown: PathBuf,
    /// Key bundle written by `keygen`.
    #[arg(long)]
    key: PathBuf,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value = "stouffer")]
    agg: Method,
    /// Draw a fresh bundle of the same shape (seeded by --seed) instead.
    #[arg(long)]
    refresh: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AttackKind {
    TwoPoint,
    TwoPointBalanced,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum HonestKind {
    Gaussian,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    q: f64,
    #[arg(long, default_value_t = harness::DEFAULT_N)]
    n: usize,
    #[arg(long, default_value_t = harness::DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_DEGREE)]
    degree: usize,
    #[arg(long, default_value_t = DEFAULT_KEY_COUNT)]
    keys: usize,
    #[arg(
        long,
        default_value = "-1,0,1",
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    coeff_set: Vec<f64>,
    #[arg(long, default_value = "stouffer")]
    agg: Method,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Leave out the identity witness key.
    #[arg(long)]
    no_identity: bool,
    /// Use one sample pair per trial arm for every key.
    #[arg(long)]
    shared_samples: bool,
    #[arg(long, value_enum, default_value_t = AttackKind::TwoPoint)]
    attack: AttackKind,
    #[arg(long, value_enum, default_value_t = HonestKind::Gaussian)]
    honest: HonestKind,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Resample honest data from this dataset file instead.
    #[arg(long)]
    from_file: Option<PathBuf>,
    /// Also write experiment.svg.
    #[arg(long)]
    plot: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PointSourceKind {
    Builtin,
    Lattice,
    File,
}

#[derive(Args, Debug)]
struct MindistArgs {
    #[arg(long, default_value_t = randomness::DEFAULT_POINTS)]
    points: usize,
    #[arg(long, default_value_t = randomness::DEFAULT_SIDE)]
    square: f64,
    #[arg(long, default_value_t = randomness::DEFAULT_ITERATIONS)]
    trials: usize,
    /// Apply a secret plane permutation before measuring.
    #[arg(long)]
    keyed: bool,
    /// Seed of the plane key (default derived from --seed).
    #[arg(long)]
    key_seed: Option<u64>,
    #[arg(long, default_value_t = randomness::DEFAULT_ROUNDS)]
    rounds: usize,
    #[arg(long, value_enum, default_value_t = PointSourceKind::Builtin)]
    source: PointSourceKind,
    /// Point file for `--source file`: one `x,y` pair per line.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Write per-iteration δ² to mindist.csv in --out.
    #[arg(long)]
    csv: bool,
}

struct Outcome {
    report: Report,
    code: u8,
}

fn ok(report: Report) -> Result<Outcome> {
    Ok(Outcome { report, code: 0 })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn keygen(cli: &Cli, a: &KeygenArgs) -> Result<Outcome> {
    let bundle = generate_keys(a.degree, a.count, &a.coeff_set, cli.seed)?;
    let text = bundle.to_json();
    let mut report = Report::new();
    match &cli.out {
        Some(p) => {
            let path = if p.is_dir() {
                p.join("key.json")
            } else {
                p.clone()
            };
            write_text(&path, &text)?;
            report = report.text("key_file", path.display().to_string());
        }
        None => print!("{text}"),
    }
    ok(report
        .int("seed", bundle.seed())
        .int("degree", bundle.degree() as u64)
        .int("count", bundle.len() as u64)
        .text("fingerprint", bundle.fingerprint()))
}

fn mwu(a: &MwuArgs) -> Result<Outcome> {
    let r = mann_whitney_u(&read_samples(&a.a)?, &read_samples(&a.b)?)?;
    ok(Report::new()
        .int("n0", r.n0 as u64)
        .int("n1", r.n1 as u64)
        .num("r0", r.r0)
        .num("r1", r.r1)
        .num("u0", r.u0)
        .num("u1", r.u1)
        .num("u", r.u)
        .num("lambda_u", r.lambda_u)
        .num("sigma_u", r.sigma_u)
        .num("z", r.z)
        .num("p", r.p)
        .field("tie_corrected", Value::Bool(r.tie_corrected))
        .int("ties", r.ties as u64))
}

fn detect(cli: &Cli, a: &DetectArgs) -> Result<Outcome> {
    let text = fs::read_to_string(&a.key).map_err(|e| Error::Io {
        path: a.key.clone(),
        source: e,
    })?;
    let bundle = KeyBundle::from_json(&text)?;
    let cfg = DetectorConfig {
        threshold: a.threshold,
        method: a.agg,
        refresh_keys: a.refresh,
        ..DetectorConfig::new(bundle)
    };
    let mut det = Detector::new(cfg, cli.seed)?;
    let v = det.detect(&read_samples(&a.safe)?, &read_samples(&a.unknown)?)?;
    let code = match v.decision {
        Decision::Accept => 0,
        Decision::Reject => 2,
    };
    let decision = match v.decision {
        Decision::Accept => "accept",
        Decision::Reject => "reject",
    };
    let report = Report::new()
        .field("per_key_p", Value::Nums(v.per_key_p))
        .num("delta", v.delta)
        .text("decision", decision)
        .text("key_fingerprint", v.key_fingerprint)
        .text("method", v.method.to_string())
        .num("threshold", v.threshold)
        .text("reasons", v.reasons.join("; "));
    Ok(Outcome { report, code })
}

fn experiment(cli: &Cli, a: &ExperimentArgs) -> Result<Outcome> {
    let honest = match &a.from_file {
        Some(path) => SourceKind::Table {
            values: read_values(path)?,
        },
        None => match a.honest {
            HonestKind::Gaussian => SourceKind::Gaussian {
                mu: a.mu,
                sigma: a.sigma,
            },
        },
    };
    let attack = match a.attack {
        AttackKind::TwoPoint => SourceKind::TwoPoint { q: a.q },
        AttackKind::TwoPointBalanced => SourceKind::BalancedTwoPoint { q: a.q },
    };
    let spec = ExperimentSpec {
        q: a.q,
        n: a.n,
        trials: a.trials,
        degree: a.degree,
        keys: a.keys,
        coeff_set: a.coeff_set.clone(),
        include_identity: !a.no_identity,
        method: a.agg,
        seed: cli.seed,
        threshold: a.threshold,
        honest,
        attack,
        shared_samples: a.shared_samples,
    };
    let result = match a.workers {
        Some(w) => harness::run_experiment_with_workers(&spec, w)?,
        None => harness::run_experiment(&spec)?,
    };
    let s = &result.summary;
    let mut report = Report::new()
        .text("spec", spec.describe())
        .text("key_fingerprint", result.bundle.fingerprint())
        .num("mean_honest_delta", s.mean_honest_delta)
        .num("mean_attack_delta", s.mean_attack_delta)
        .num("gap_standard_error", s.gap_standard_error)
        .num("honest_reject_rate", s.honest_reject_rate)
        .num("attack_reject_rate", s.attack_reject_rate)
        .num("ks_honest_delta_uniform", s.ks_honest_delta_uniform)
        .field("defense_holds", Value::Bool(s.defense_holds))
        .int("degenerate_tests", s.degenerate_tests)
        .field(
            "key_index",
            Value::Nums(s.per_key.iter().map(|k| k.key_index as f64).collect()),
        )
        .field(
            "mean_honest_p",
            Value::Nums(s.per_key.iter().map(|k| k.mean_honest).collect()),
        )
        .field(
            "mean_attack_p",
            Value::Nums(s.per_key.iter().map(|k| k.mean_attack).collect()),
        )
        .field(
            "ks_honest_p_uniform",
            Value::Nums(s.per_key.iter().map(|k| k.ks_honest_uniform).collect()),
        );
    let dir = match (&cli.out, a.plot) {
        (Some(d), _) => Some(d.clone()),
        (None, true) => Some(PathBuf::from(".")),
        (None, false) => None,
    };
    if let Some(dir) = dir {
        let mut files: Vec<String> = harness::emit_csv(&result, &dir)?
            .iter()
            .map(|p| p.display().to_string())
            .collect();
        if a.plot {
            files.push(harness::emit_plots(&result, &dir)?.display().to_string());
        }
        report = report.text("files", files.join(";"));
    }
    ok(report)
}

fn mindist(cli: &Cli, a: &MindistArgs) -> Result<Outcome> {
    let cfg = MinDistConfig {
        points: a.points,
        side: a.square,
        iterations: a.trials,
        ..MinDistConfig::default()
    };
    let source_seed = derive_seed(cli.seed, &[0x4d49_4e44]);
    let source: Box<dyn PointSource> = match a.source {
        PointSourceKind::Builtin => Box::new(UniformSource { seed: source_seed }),
        PointSourceKind::Lattice => Box::new(LatticeAdversary::new(source_seed)),
        PointSourceKind::File => {
            let path = a
                .input
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("--source file needs --input".into()))?;
            Box::new(FixedSource {
                points: read_points(path)?,
            })
        }
    };
    let key = if a.keyed {
        let seed = a
            .key_seed
            .unwrap_or_else(|| randomness::plane_key_seed(cli.seed));
        Some(PlanePermutationKey::generate(seed, a.square, a.rounds))
    } else {
        None
    };
    let r = randomness::min_distance_test(source.as_ref(), &cfg, key.as_ref())?;
    let opt = |x: Option<f64>| x.map_or(Value::Null, Value::Num);
    let mut report = Report::new()
        .field("keyed", Value::Bool(r.keyed))
        .int("points", cfg.points as u64)
        .num("square", cfg.side)
        .int("iterations", r.iterations as u64)
        .num("null_mean", cfg.null_mean)
        .num("mean_delta_sq", r.mean_delta_sq)
        .field("ks_distance", opt(r.ks_distance))
        .field("ks_pvalue", opt(r.ks_pvalue))
        .field("passed", r.passed.map_or(Value::Null, Value::Bool));
    if let Some(k) = &key {
        report = report.int("key_seed", k.seed);
    }
    if r.iterations == 1 {
        report = report.num("delta_sq", r.delta_sq[0]);
    }
    if a.csv {
        let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
        create_dir(&dir)?;
        let path = dir.join("mindist.csv");
        let mut text = String::from("iteration,delta_sq\n");
        for (i, d) in r.delta_sq.iter().enumerate() {
            text.push_str(&format!("{i},{}\n", fmt17(*d)));
        }
        write_text(&path, &text)?;
        report = report.text("files", path.display().to_string());
    }
    ok(report)
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Keygen(a) => keygen(cli, a),
        Command::Mwu(a) => mwu(a),
        Command::Detect(a) => detect(cli, a),
        Command::Experiment(a) => experiment(cli, a),
        Command::Mindist(a) => mindist(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(out) => {
            let fmt: Format = cli.format.into();
            if !(matches!(cli.command, Command::Keygen(_)) && cli.out.is_none()) {
                print!("{}", out.report.render(fmt));
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
