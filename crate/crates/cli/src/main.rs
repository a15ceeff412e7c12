//! `nematic`: batch driver for runs, audits, certificates and sweeps.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nematic_core::certificate::{
    certify, parameter_hypotheses, scaling_check, BlowupCertificate, CertificateError, CertifyInput, SobolevMethod,
    SweepAxis, SweepRow,
};
use nematic_core::constitutive::validate_params;
use nematic_core::diagnostics::{energy_audit, EnergyAudit};
use nematic_core::dynamics::io::{self, StoredTrajectory};
use nematic_core::dynamics::{simulate, RunConfig, RunStatus, SimulateError};
use serde_json::json;

const EXIT_ERROR: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_ABORTED: u8 = 3;
const EXIT_REFUSED: u8 = 4;

#[derive(Parser)]
#[command(name = "nematic", version, about = "Compressible nematic flow: runs, energy audits and lifespan certificates")]
struct Cli {
    /// Worker threads (sweeps: concurrent child runs)
    #[arg(long, global = true, env = "NEMATIC_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check material parameters and config sanity
    Validate {
        #[command(flatten)]
        input: ConfigInput,
        /// Print the report as JSON
        #[arg(long)]
        json: bool,
    },
    /// Run a config and write a trajectory directory
    Simulate {
        #[command(flatten)]
        input: ConfigInput,
        #[command(flatten)]
        output: Output,
    },
    /// Energy audit of a stored trajectory (writes energy_audit.json)
    Analyze {
        #[arg(long)]
        traj: PathBuf,
    },
    /// Lifespan certificate of a stored trajectory (writes certificate.json)
    Certify {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long, value_enum, default_value = "talenti")]
        c1: C1Method,
    },
    /// Run the cartesian product of parameter axes, one child process per point
    Sweep {
        #[command(flatten)]
        input: ConfigInput,
        /// `key=v1,v2,...`; repeat for more axes
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct ConfigInput {
    #[arg(long)]
    config: PathBuf,
    /// Dotted-key override, e.g. `params.mu4=0.01`
    #[arg(long = "set")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct Output {
    /// Output directory; relative paths resolve under the output root
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "NEMATIC_OUTPUT_ROOT", default_value = "runs")]
    output_root: PathBuf,
    /// Replace an existing output directory
    #[arg(long)]
    force: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum C1Method {
    Talenti,
    Rayleigh,
}

impl From<C1Method> for SobolevMethod {
    fn from(m: C1Method) -> Self {
        match m {
            C1Method::Talenti => SobolevMethod::Talenti,
            C1Method::Rayleigh => SobolevMethod::Rayleigh,
        }
    }
}

struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl Failure {
    fn new(code: u8, err: impl Into<anyhow::Error>) -> Self {
        Failure { code, err: err.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure { code: EXIT_ERROR, err }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("warning: thread pool: {e}");
        }
    }
    let res = match cli.command {
        Cmd::Validate { input, json } => validate(&input, json),
        Cmd::Simulate { input, output } => run_simulate(&input, &output),
        Cmd::Analyze { traj } => analyze(&traj),
        Cmd::Certify { traj, c1 } => run_certify(&traj, c1.into()),
        Cmd::Sweep { input, axes, output } => sweep(&input, &axes, &output, cli.threads),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", render(&f.err));
            ExitCode::from(f.code)
        }
    }
}

/// Error chain on one line; causes already quoted by their parent are skipped.
fn render(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let msg = cause.to_string();
        if !out.ends_with(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::from)
}

fn load_config(input: &ConfigInput) -> Result<RunConfig, Failure> {
    let text = read_text(&input.config)?;
    RunConfig::from_json_with_overrides(&text, &input.overrides)
        .with_context(|| format!("config {}", input.config.display()))
        .map_err(|e| Failure::new(EXIT_INVALID, e))
}

fn validate(input: &ConfigInput, as_json: bool) -> Outcome {
    let cfg = match load_config(input) {
        Ok(c) => c,
        Err(f) if as_json => {
            println!("{}", json!({ "admissible": false, "errors": [render(&f.err)] }));
            return Err(f);
        }
        Err(f) => return Err(f),
    };
    let p = cfg.params;
    let checked = validate_params(&p, cfg.validation);
    let hypotheses = parameter_hypotheses(&p);
    let admissible = checked.is_ok();
    if as_json {
        let (violations, warnings) = match &checked {
            Ok(v) => (json!([]), serde_json::to_value(&v.warnings).unwrap_or_default()),
            Err(e) => (serde_json::to_value(&e.violations).unwrap_or_default(), json!([])),
        };
        let report = json!({
            "config": input.config,
            "config_hash": cfg.hash(),
            "admissible": admissible,
            "validation_mode": cfg.validation,
            "violations": violations,
            "warnings": warnings,
            "cross_coeff": p.cross_coeff(),
            "cross_bound": p.cross_bound(),
            "certificate_hypotheses": hypotheses,
        });
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        println!("config {} (hash {})", input.config.display(), &cfg.hash()[..12]);
        match &checked {
            Ok(v) => {
                println!("admissible: yes");
                for w in &v.warnings {
                    println!("  warning: {w}");
                }
            }
            Err(e) => {
                println!("admissible: no");
                for v in &e.violations {
                    println!("  {v}");
                }
            }
        }
        println!("cross coupling |{:.6e}| vs bound {:.6e}", p.cross_coeff(), p.cross_bound());
        if hypotheses.is_empty() {
            println!("certificate hypotheses on parameters: satisfied");
        } else {
            for h in &hypotheses {
                println!("  certificate would need: {h}");
            }
        }
    }
    match checked {
        Ok(_) => Ok(()),
        Err(e) => Err(Failure::new(EXIT_INVALID, e)),
    }
}

fn output_dir(output: &Output, default_name: &str) -> PathBuf {
    match &output.out {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => output.output_root.join(p),
        None => output.output_root.join(default_name),
    }
}

fn prepare_dir(dir: &Path, force: bool) -> Outcome {
    if dir.exists() {
        if !force {
            return Err(anyhow!("{} already exists (use --force to replace it)", dir.display()).into());
        }
        fs::remove_dir_all(dir).with_context(|| format!("removing {}", dir.display()))?;
    }
    Ok(())
}

fn default_name(config: &Path, cfg: &RunConfig) -> String {
    let stem = config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    format!("{stem}-{}", &cfg.hash()[..12])
}

fn run_simulate(input: &ConfigInput, output: &Output) -> Outcome {
    let cfg = load_config(input)?;
    let dir = output_dir(output, &default_name(&input.config, &cfg));
    prepare_dir(&dir, output.force)?;
    let traj = simulate(&cfg).map_err(|e| {
        let code = match e {
            SimulateError::Params(_) | SimulateError::Initial(_) => EXIT_INVALID,
            SimulateError::Step(_) => EXIT_ABORTED,
            SimulateError::Diagnostics(_) => EXIT_ERROR,
        };
        Failure::new(code, e)
    })?;
    io::write_trajectory(&traj, &dir).context("writing trajectory")?;
    for w in &traj.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}", dir.display());
    println!("{} steps, t = {}, {}", traj.steps, traj.final_state().t, traj.status);
    match &traj.status {
        RunStatus::Completed => Ok(()),
        s => Err(Failure::new(EXIT_ABORTED, anyhow!("{s}"))),
    }
}

fn open(traj: &Path) -> Result<StoredTrajectory, Failure> {
    StoredTrajectory::open(traj)
        .with_context(|| format!("trajectory {}", traj.display()))
        .map_err(Failure::from)
}

fn check_existing_hash(path: &Path, hash: &str) -> Outcome {
    if !path.exists() {
        return Ok(());
    }
    let v: serde_json::Value = serde_json::from_str(&read_text(path)?).with_context(|| format!("{}", path.display()))?;
    match v.get("config_hash").and_then(|h| h.as_str()) {
        Some(h) if h == hash => Ok(()),
        found => Err(anyhow!(
            "{} belongs to config hash {}, trajectory has {hash}",
            path.display(),
            found.unwrap_or("<none>")
        )
        .into()),
    }
}

fn analyze(traj: &Path) -> Outcome {
    let stored = open(traj)?;
    let hash = stored.config_hash().to_string();
    let path = traj.join(io::AUDIT_FILE);
    check_existing_hash(&path, &hash)?;
    let audit = energy_audit(&hash, &stored.reports).context("energy audit")?;
    io::write_json_atomic(&path, &audit).context("writing audit")?;
    println!(
        "{} intervals to t = {}: max |residual| {:.3e}, relative {}, {} law violation(s), mass drift {:.2e}",
        audit.intervals,
        audit.t_final,
        audit.max_abs_residual,
        audit.relative_residual.map(|r| format!("{r:.3e}")).unwrap_or_else(|| "n/a".into()),
        audit.law_violations.len(),
        audit.mass_drift_rel
    );
    println!("{}", path.display());
    Ok(())
}

fn run_certify(traj: &Path, method: SobolevMethod) -> Outcome {
    let stored = open(traj)?;
    let hash = stored.config_hash().to_string();
    let path = traj.join(io::CERTIFICATE_FILE);
    check_existing_hash(&path, &hash)?;
    let snapshots = stored.load_snapshots().context("loading snapshots")?;
    let input = CertifyInput {
        config: &stored.config,
        config_hash: &hash,
        reports: &stored.reports,
        snapshots: &snapshots,
        status: &stored.summary.status,
    };
    let cert = match certify(input, method) {
        Ok(c) => c,
        Err(e @ CertificateError::Refused(_)) => return Err(Failure::new(EXIT_REFUSED, e)),
        Err(e) => return Err(anyhow::Error::from(e).context("certify").into()),
    };
    io::write_json_atomic(&path, &cert).context("writing certificate")?;
    print_certificate(&cert);
    println!("{}", path.display());
    if cert.holds {
        Ok(())
    } else {
        Err(Failure::new(EXIT_REFUSED, anyhow!("certificate does not hold: {}", cert.verdict)))
    }
}

fn print_certificate(c: &BlowupCertificate) {
    println!("C1 = {:.15} ({:?}), C2 = {:.6e}", c.c1, c.c1_method, c.c2);
    println!("C = {:.6e} (printed form {:.6e})", c.c_lemma, c.c_lemma_printed_form);
    println!("E0 = {:.6e}, rate = {:.6e}, T* = {:.6e}", c.lifespan.e0, c.lifespan.rate, c.lifespan.t_star);
    match c.validity_window {
        Some([a, b]) => println!("window [{a}, {b}]"),
        None => println!("window empty"),
    }
    for n in &c.notes {
        println!("  note: {n}");
    }
    println!("{}", c.verdict);
}

// --- sweep ---

fn child(args: &[String]) -> Result<std::process::Output, Failure> {
    let exe = std::env::current_exe().context("locating executable")?;
    Command::new(exe)
        .args(args)
        .env_remove("NEMATIC_OUTPUT_ROOT")
        .output()
        .context("spawning child run")
        .map_err(Failure::from)
}

fn combos(axes: &[SweepAxis]) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    for ax in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                ax.values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(format!("{}={v}", ax.key));
                    p
                })
            })
            .collect();
    }
    out
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Option<T> {
    serde_json::from_str(&fs::read_to_string(path).ok()?).ok()
}

fn stderr_line(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stderr).lines().last().unwrap_or("").trim_start_matches("error: ").to_string()
}

fn sweep_point(config: &Path, base: &[String], point: &[String], dir: &Path) -> Result<SweepRow, Failure> {
    let mut sets: Vec<String> = base.to_vec();
    sets.extend(point.iter().cloned());
    let text = read_text(config)?;
    let cfg = RunConfig::from_json_with_overrides(&text, &sets)
        .map_err(|e| Failure::new(EXIT_INVALID, anyhow!("{}: {e}", point.join(" "))))?;
    let mut row = SweepRow {
        overrides: point.to_vec(),
        gamma: cfg.params.gamma,
        mu4: cfg.params.mu4,
        e0: None,
        c_lemma: None,
        t_star: None,
        rate: None,
        max_lemma_violation: None,
        max_energy_residual: None,
        holds: false,
        verdict: String::new(),
    };
    let mut args = vec!["--threads".to_string(), "1".into(), "simulate".into(), "--config".into()];
    args.push(config.display().to_string());
    for s in &sets {
        args.extend(["--set".to_string(), s.clone()]);
    }
    args.extend(["--out".to_string(), dir.display().to_string(), "--force".into()]);
    let sim = child(&args)?;
    if !dir.join(io::RUN_FILE).exists() {
        row.verdict = format!("run failed: {}", stderr_line(&sim));
        return Ok(row);
    }
    let traj = dir.display().to_string();
    child(&["analyze".into(), "--traj".into(), traj.clone()])?;
    let cert = child(&["--threads".into(), "1".into(), "certify".into(), "--traj".into(), traj])?;
    if let Some(a) = read_json::<EnergyAudit>(&dir.join(io::AUDIT_FILE)) {
        row.max_energy_residual = Some(a.max_abs_residual);
    }
    match read_json::<BlowupCertificate>(&dir.join(io::CERTIFICATE_FILE)) {
        Some(c) => {
            row.e0 = Some(c.lifespan.e0);
            row.c_lemma = Some(c.c_lemma);
            row.t_star = Some(c.lifespan.t_star);
            row.rate = Some(c.lifespan.rate);
            let in_window = c.records.iter().filter(|r| r.in_window).map(|r| r.slack);
            let min = in_window.chain(c.min_step_lemma_slack).fold(f64::INFINITY, f64::min);
            row.max_lemma_violation = min.is_finite().then(|| (-min).max(0.0));
            row.holds = c.holds;
            row.verdict = c.verdict;
        }
        None => row.verdict = stderr_line(&cert),
    }
    Ok(row)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Outcome {
    let mut s = String::from("overrides,gamma,mu4,e0,c_lemma,t_star,rate,max_lemma_violation,max_energy_residual,holds\n");
    for r in rows {
        s += &format!(
            "\"{}\",{:e},{:e},{},{},{},{},{},{},{}\n",
            r.overrides.join(" ").replace('"', "\"\""),
            r.gamma,
            r.mu4,
            opt(r.e0),
            opt(r.c_lemma),
            opt(r.t_star),
            opt(r.rate),
            opt(r.max_lemma_violation),
            opt(r.max_energy_residual),
            r.holds
        );
    }
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn sweep(input: &ConfigInput, axes: &[String], output: &Output, threads: Option<usize>) -> Outcome {
    let cfg = load_config(input)?;
    let axes = axes
        .iter()
        .map(|a| SweepAxis::parse(a).ok_or_else(|| Failure::new(EXIT_INVALID, anyhow!("bad axis `{a}`, expected key=v1,v2"))))
        .collect::<Result<Vec<_>, _>>()?;
    let points = combos(&axes);
    let dir = output_dir(output, &format!("sweep-{}", default_name(&input.config, &cfg)));
    prepare_dir(&dir, output.force)?;
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let config = fs::canonicalize(&input.config).context("resolving config path")?;

    let workers = threads
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .clamp(1, points.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<SweepRow, Failure>>>> = Mutex::new((0..points.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= points.len() {
                    break;
                }
                let r = sweep_point(&config, &input.overrides, &points[i], &dir.join(format!("point_{i:03}")));
                results.lock().expect("results lock")[i] = Some(r);
            });
        }
    });
    let rows = results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|r| r.expect("every point ran"))
        .collect::<Result<Vec<_>, _>>()?;

    let check = scaling_check(&rows);
    write_sweep_csv(&dir.join("sweep.csv"), &rows)?;
    io::write_json_atomic(dir.join("sweep.json"), &json!({ "config_hash": cfg.hash(), "rows": rows, "scaling": check }))
        .context("writing sweep.json")?;
    println!("{:<48} {:>14} {:>12} {:>12}  holds", "point", "T*", "lemma viol", "residual");
    for r in &rows {
        println!(
            "{:<48} {:>14} {:>12} {:>12}  {}",
            r.overrides.join(" "),
            r.t_star.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into()),
            r.max_lemma_violation.map(|v| format!("{v:.2e}")).unwrap_or_else(|| "-".into()),
            r.max_energy_residual.map(|v| format!("{v:.2e}")).unwrap_or_else(|| "-".into()),
            r.holds
        );
    }
    println!(
        "scaling: max deviation {:.2e}, mu4 exponent {}, E0 exponent {} (expected {})",
        check.max_relative_deviation,
        check.fitted_mu4_exponent.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
        check.fitted_e0_exponent.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
        check.expected_e0_exponent.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
    );
    println!("{}", dir.display());
    if rows.iter().all(|r| r.holds) {
        Ok(())
    } else {
        Err(Failure::new(EXIT_REFUSED, anyhow!("certificate missing or failing at some sweep points")))
    }
}
