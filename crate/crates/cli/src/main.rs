use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use shfold::certificate::{
    config_hash, parse_branch_certificate, parse_certificate, sha256_hex, BranchBody, Certificate, CertificateError,
    FoldBody, Kind, Step1Body, Step2Body, TheoremBody,
};
use shfold::continuation::{verify_separation, write_branch_csv, CertifiedBranch};
use shfold::fold::FoldCertificate;
use shfold::pipeline::{self, ErrorClass, PipelineError, RunConfig, Step1, Step2};
use shfold::reference::XI_SWITCH;
use shfold::seeds::{self, parse_seed_file};
use shfold::selftest::{self, SelftestConfig};

const LOWER: &str = "branch_lower.json";
const UPPER: &str = "branch_upper.json";
const STEP1: &str = "step1.json";
const CURVE: &str = "curve.json";
const STEP2: &str = "step2.json";
const FOLD: &str = "fold.json";
const THEOREM: &str = "theorem.json";
const DIAGRAM: &str = "diagram.csv";
const REPORT: &str = "run_report.json";

#[derive(Parser)]
#[command(name = "shfold", version, about = "Certified continuation of even periodic orbits and their fold")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Opts {
    /// Directory for certificates and reports.
    #[arg(long, global = true, default_value = "shfold-out")]
    out: PathBuf,
    /// Worker threads (certificates do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    taylor_order: Option<usize>,
    /// Local error tolerance of the integrator.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Parameter range of the first stage, `lo:hi`.
    #[arg(long, global = true, conflicts_with_all = ["full_range", "desk_scale"])]
    range: Option<String>,
    /// Run the first stage from xi = 0.
    #[arg(long, global = true, conflicts_with = "desk_scale")]
    full_range: bool,
    /// Run the first stage from xi = 1.5 (the default).
    #[arg(long, global = true)]
    desk_scale: bool,
    /// Seed file to use instead of the built-in one.
    #[arg(long, global = true)]
    seed_file: Option<PathBuf>,
    /// On a continuation failure, write what was certified before it.
    #[arg(long, global = true)]
    partial_results: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Certify both branches over the first-stage range.
    Step1,
    /// Certify the x-parameterized curve, its concavity and the joins.
    Step2,
    /// Certify the fold and place it on the curve.
    Step3,
    /// Re-check everything and write the combined certificate.
    Step4,
    /// Run all four stages.
    All,
    /// Write a CSV of all certified boxes.
    Diagram,
    /// Run the property suites.
    Selftest {
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
    },
    /// Regenerate a seed file by nonrigorous shooting.
    Seeds {
        /// Parameter values below the switching value to record.
        #[arg(long, value_delimiter = ',', default_value = "1.9,1.5")]
        levels: Vec<f64>,
    },
}

type Res<T> = Result<T, PipelineError>;

fn io_err(path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::new(ErrorClass::Other, format!("{}: {e}", path.display()))
}

fn build_config(o: &Opts) -> Res<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(k) = o.taylor_order {
        cfg.integrator.taylor_order = k;
    }
    if let Some(t) = o.tolerance {
        cfg.integrator.tolerance = t;
    }
    if o.full_range {
        cfg.step1_range = [0.0, XI_SWITCH];
    }
    if let Some(r) = &o.range {
        cfg.step1_range = pipeline::parse_range(r)?;
    }
    if let Some(p) = &o.seed_file {
        let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
        cfg.seeds = parse_seed_file(&text).map_err(|e| PipelineError::config(format!("{}: {e}", p.display())))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

struct Store<'a> {
    dir: &'a Path,
    cfg: &'a RunConfig,
    hash: String,
}

impl<'a> Store<'a> {
    fn new(dir: &'a Path, cfg: &'a RunConfig) -> Self {
        Store { dir, cfg, hash: config_hash(cfg) }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn read(&self, name: &str) -> Res<String> {
        let p = self.path(name);
        fs::read_to_string(&p).map_err(|e| {
            PipelineError::config(format!("{} is required: {e}; run the earlier stages first", p.display()))
        })
    }

    fn check<T>(&self, name: &str, r: Result<Certificate<T>, CertificateError>) -> Res<Certificate<T>> {
        let c = r.map_err(|e| {
            let class = match e {
                CertificateError::Content(_) => ErrorClass::Gluing,
                _ => ErrorClass::Config,
            };
            PipelineError::new(class, format!("{name}: {e}"))
        })?;
        if c.header.config_hash != self.hash {
            return Err(PipelineError::config(format!(
                "{name} was produced with a different configuration ({}); rerun it with the current options",
                c.header.config_hash
            )));
        }
        Ok(c)
    }

    fn branch(&self, name: &str) -> Res<CertifiedBranch> {
        Ok(self.check(name, parse_branch_certificate(&self.read(name)?))?.body.branch)
    }

    fn load<T: serde::de::DeserializeOwned>(&self, name: &str, kind: Kind) -> Res<T> {
        Ok(self.check(name, parse_certificate(&self.read(name)?, kind))?.body)
    }

    /// Writes all files or none: each goes to a temporary name first.
    fn write_all(&self, files: &[(&str, String)]) -> Res<()> {
        fs::create_dir_all(self.dir).map_err(|e| io_err(self.dir, e))?;
        let mut staged = Vec::new();
        for (name, text) in files {
            let tmp = self.path(&format!(".{name}.tmp"));
            if let Err(e) = fs::write(&tmp, text) {
                for t in &staged {
                    let _ = fs::remove_file(t);
                }
                return Err(io_err(&tmp, e));
            }
            staged.push(tmp);
        }
        for ((name, _), tmp) in files.iter().zip(&staged) {
            let dst = self.path(name);
            fs::rename(tmp, &dst).map_err(|e| io_err(&dst, e))?;
        }
        Ok(())
    }

    fn cert<T: Serialize>(&self, kind: Kind, body: T) -> String {
        Certificate::new(kind, self.cfg, body).to_json()
    }

    fn step1(&self) -> Res<Step1> {
        let lower = self.branch(LOWER)?;
        let upper = self.branch(UPPER)?;
        let recorded: Step1Body = self.load(STEP1, Kind::Step1)?;
        let separation = verify_separation(&lower, &upper)
            .map_err(|e| PipelineError::new(ErrorClass::Gluing, format!("separation: {e}")))?;
        if separation != recorded.separation {
            return Err(PipelineError::new(ErrorClass::Gluing, "recorded separation does not match the branches"));
        }
        Ok(Step1 { lower, upper, separation })
    }

    fn step2(&self) -> Res<Step2> {
        let curve = self.branch(CURVE)?;
        let b: Step2Body = self.load(STEP2, Kind::Step2)?;
        Ok(Step2 { curve, concavity: b.concavity, glue: b.glue })
    }
}

/// Per-stage timing and counters, merged into `run_report.json`.
struct Report {
    path: PathBuf,
    value: Value,
}

impl Report {
    fn open(dir: &Path, threads: usize, hash: &str) -> Self {
        let path = dir.join(REPORT);
        let mut value = fs::read_to_string(&path)
            .ok()
            .and_then(|t| serde_json::from_str::<Value>(&t).ok())
            .filter(|v| v.get("config_hash").and_then(Value::as_str) == Some(hash))
            .unwrap_or_else(|| json!({ "config_hash": hash, "stages": {} }));
        value["threads"] = json!(threads);
        Report { path, value }
    }

    fn stage(&mut self, name: &str, seconds: f64, details: Value) {
        self.value["stages"][name] = json!({ "seconds": seconds, "details": details });
    }

    fn save(&self) -> Res<()> {
        let text = serde_json::to_string_pretty(&self.value).expect("report serializes") + "\n";
        fs::write(&self.path, text).map_err(|e| io_err(&self.path, e))
    }
}

fn branch_details(b: &CertifiedBranch) -> Value {
    json!({
        "segments": b.segments.len(),
        "geometry_indeterminate_final": pipeline::geometry_failures(b),
        "stats": b.stats,
        "end": b.endpoints[1],
    })
}

fn with_partial(store: &Store, allow: bool, e: PipelineError) -> PipelineError {
    if let (true, Some((name, branch))) = (allow, &e.partial) {
        let body = BranchBody { name: format!("partial-{name}"), branch: (**branch).clone() };
        let file = format!("partial_{name}.json");
        if let Err(w) = store.write_all(&[(&file, store.cert(Kind::Branch, body))]) {
            eprintln!("could not write partial result: {w}");
        }
    }
    e
}

fn run_step1(store: &Store, report: &mut Report, partial: bool) -> Res<Step1> {
    let t = Instant::now();
    let s1 = pipeline::step1(store.cfg).map_err(|e| with_partial(store, partial, e))?;
    let secs = t.elapsed().as_secs_f64();
    let body = Step1Body { separation: s1.separation.clone(), comparisons: s1.comparisons() };
    store.write_all(&[
        (LOWER, store.cert(Kind::Branch, BranchBody { name: "lower".into(), branch: s1.lower.clone() })),
        (UPPER, store.cert(Kind::Branch, BranchBody { name: "upper".into(), branch: s1.upper.clone() })),
        (STEP1, store.cert(Kind::Step1, body)),
    ])?;
    report.stage(
        "step1",
        secs,
        json!({ "lower": branch_details(&s1.lower), "upper": branch_details(&s1.upper), "comparisons": s1.comparisons() }),
    );
    Ok(s1)
}

fn run_step2(store: &Store, report: &mut Report, partial: bool, s1: &Step1) -> Res<Step2> {
    let t = Instant::now();
    let s2 = pipeline::step2(store.cfg, s1).map_err(|e| with_partial(store, partial, e))?;
    let secs = t.elapsed().as_secs_f64();
    let body = Step2Body {
        switching_range: s2.curve.range,
        concavity: s2.concavity.clone(),
        glue: s2.glue.clone(),
        comparisons: s2.comparisons(),
    };
    store.write_all(&[
        (CURVE, store.cert(Kind::Branch, BranchBody { name: "curve".into(), branch: s2.curve.clone() })),
        (STEP2, store.cert(Kind::Step2, body)),
    ])?;
    report.stage("step2", secs, json!({ "curve": branch_details(&s2.curve), "comparisons": s2.comparisons() }));
    Ok(s2)
}

fn run_step3(store: &Store, report: &mut Report, s2: &Step2) -> Res<FoldCertificate> {
    let t = Instant::now();
    let fc = pipeline::step3(store.cfg, s2)?;
    let secs = t.elapsed().as_secs_f64();
    let comparisons = pipeline::fold_comparisons(&fc);
    store.write_all(&[(FOLD, store.cert(Kind::Fold, FoldBody { fold: fc.clone(), comparisons: comparisons.clone() }))])?;
    report.stage("step3", secs, json!({ "comparisons": comparisons }));
    Ok(fc)
}

fn run_step4(store: &Store, report: &mut Report) -> Res<()> {
    let t = Instant::now();
    let s1 = store.step1()?;
    let s2 = store.step2()?;
    let fold: FoldBody = store.load(FOLD, Kind::Fold)?;
    let theorem = pipeline::step4(&s1, &s2, &fold.fold)?;
    let mut inputs = BTreeMap::new();
    for name in [LOWER, UPPER, STEP1, CURVE, STEP2, FOLD] {
        inputs.insert(name.to_string(), sha256_hex(store.read(name)?.as_bytes()));
    }
    store.write_all(&[(THEOREM, store.cert(Kind::Theorem, TheoremBody { theorem, inputs }))])?;
    report.stage("step4", t.elapsed().as_secs_f64(), json!({}));
    Ok(())
}

fn run_diagram(store: &Store) -> Res<()> {
    let lower = store.branch(LOWER)?;
    let upper = store.branch(UPPER)?;
    let curve = store.branch(CURVE)?;
    let mut buf = Vec::new();
    write_branch_csv(&[("lower", &lower), ("upper", &upper), ("curve", &curve)], &mut buf)
        .map_err(|e| PipelineError::new(ErrorClass::Other, e.to_string()))?;
    store.write_all(&[(DIAGRAM, String::from_utf8(buf).expect("ascii csv"))])
}

fn run(cli: Cli) -> Res<()> {
    let o = &cli.opts;
    let threads = o.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(PipelineError::config("--threads must be positive"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| PipelineError::new(ErrorClass::Other, e.to_string()))?;

    match cli.command {
        Command::Selftest { samples, seed } => {
            let r = selftest::run(&SelftestConfig { seed, containment_samples: samples, ..Default::default() });
            println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
            return if r.passed { Ok(()) } else { Err(PipelineError::new(ErrorClass::Other, "selftest failed")) };
        }
        Command::Seeds { levels } => {
            let s = seeds::regenerate(&levels).map_err(PipelineError::from)?;
            let text = serde_json::to_string_pretty(&s).expect("seeds serialize") + "\n";
            let path = o.out.join("seeds.json");
            fs::create_dir_all(&o.out).map_err(|e| io_err(&o.out, e))?;
            return fs::write(&path, text).map_err(|e| io_err(&path, e));
        }
        _ => {}
    }

    let cfg = build_config(o)?;
    let store = Store::new(&o.out, &cfg);
    if matches!(cli.command, Command::Diagram) {
        return run_diagram(&store);
    }
    fs::create_dir_all(&o.out).map_err(|e| io_err(&o.out, e))?;
    let mut report = Report::open(&o.out, threads, &store.hash);
    let p = o.partial_results;
    let result = match cli.command {
        Command::Step1 => run_step1(&store, &mut report, p).map(drop),
        Command::Step2 => store.step1().and_then(|s1| run_step2(&store, &mut report, p, &s1)).map(drop),
        Command::Step3 => store.step2().and_then(|s2| run_step3(&store, &mut report, &s2)).map(drop),
        Command::Step4 => run_step4(&store, &mut report),
        Command::All => (|| {
            let s1 = run_step1(&store, &mut report, p)?;
            let s2 = run_step2(&store, &mut report, p, &s1)?;
            run_step3(&store, &mut report, &s2)?;
            run_step4(&store, &mut report)
        })(),
        _ => unreachable!(),
    };
    report.save()?;
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let err = json!({ "error": { "class": e.class, "exit_code": e.class.exit_code(), "message": e.message } });
            eprintln!("{err}");
            ExitCode::from(e.class.exit_code() as u8)
        }
    }
}
