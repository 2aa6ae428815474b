//! `propver` command line.
//!
//! Exit codes: 0 success, 1 usage/config/I/O/parse error, 2 depth cap reached
//! with survivors, 3 certificate verification failed, 4 run stopped early
//! (`--stop-after`) with a checkpoint saved.
//!
//! Results go to stdout as `key=value` lines; progress and diagnostics go to
//! stderr. Every `run` flag can also come from a `key=value` config file
//! (`--config`, keys are the flag names without dashes) or from a
//! `PROPVER_<FLAG>` environment variable. Flags and environment variables
//! take precedence over the file.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use crate::constraints::{
    classify, constants_hash, step_i_report, step_ii_report, step_iii_report, step_iv_report, ComponentStatus,
    SearchBox, StepIVReport,
};
use crate::geometry::{f0, gamma_i, h_system, lambda, EdgeTriple};
use crate::traversal::{
    checkpoint_out, resume, run_with_progress, verify_certificate_file, Domain, Progress, RunConfig, RunReport, TraversalError,
    VerifyFailure, DEFAULT_CHECKPOINT_INTERVAL, DEFAULT_DEPTH_CAP,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_DEPTH_CAP: u8 = 2;
pub const EXIT_VERIFY_FAILED: u8 = 3;
pub const EXIT_INTERRUPTED: u8 = 4;

const PROGRESS_EVERY: Duration = Duration::from_secs(10);
const SURVIVORS_ON_STDERR: usize = 1000;

#[derive(Debug, Parser)]
#[command(name = "propver", version, about = "Epsilon-net elimination certificates for the propeller bound")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Traverse a domain and write an elimination certificate.
    Run(RunArgs),
    /// Continue a checkpointed run.
    Resume(ResumeArgs),
    /// Replay a certificate and check coverage.
    Verify(VerifyArgs),
    /// Print plain-float quantities at a point, or the classification trace of a box.
    Spotcheck(SpotArgs),
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// key=value file with defaults for the flags below.
    #[arg(long, env = "PROPVER_CONFIG")]
    pub config: Option<PathBuf>,
    /// Numerator ranges `a:b,c:d,e:f` at the base depth.
    #[arg(long, env = "PROPVER_SUB")]
    pub sub: Option<String>,
    /// Center point (one value, or three comma-separated) for a neighborhood domain.
    #[arg(long, env = "PROPVER_POINT")]
    pub point: Option<String>,
    /// Half-width in cells of the `--point` neighborhood.
    #[arg(long, env = "PROPVER_RADIUS_CELLS")]
    pub radius_cells: Option<i64>,
    #[arg(long, env = "PROPVER_BASE_DEPTH")]
    pub base_depth: Option<u32>,
    #[arg(long, env = "PROPVER_DEPTH_CAP")]
    pub depth_cap: Option<u32>,
    #[arg(long, env = "PROPVER_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, env = "PROPVER_CHECKPOINT")]
    pub checkpoint: Option<PathBuf>,
    /// Seconds between checkpoints.
    #[arg(long, env = "PROPVER_CHECKPOINT_INTERVAL")]
    pub checkpoint_interval: Option<u64>,
    #[arg(long, env = "PROPVER_OUT")]
    pub out: Option<PathBuf>,
    /// Stop after classifying this many boxes (requires `--checkpoint`).
    #[arg(long, env = "PROPVER_STOP_AFTER")]
    pub stop_after: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ResumeArgs {
    #[arg(long, env = "PROPVER_CHECKPOINT")]
    pub checkpoint: PathBuf,
    #[arg(long, env = "PROPVER_WORKERS", default_value_t = 1)]
    pub workers: usize,
    #[arg(long, env = "PROPVER_STOP_AFTER")]
    pub stop_after: Option<u64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub certificate: PathBuf,
    #[arg(long, env = "PROPVER_WORKERS", default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct SpotArgs {
    /// Edge lengths: one value, or three comma-separated.
    #[arg(long)]
    pub point: Option<String>,
    /// Box as `j a1 a2 a3` (spaces or commas).
    #[arg(long = "box")]
    pub search_box: Option<String>,
}

/// Error carrying the exit status and a message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_ERROR, message: message.into() }
    }
}

impl From<TraversalError> for Failure {
    fn from(e: TraversalError) -> Self {
        Failure::usage(e.to_string())
    }
}

type CliResult = Result<u8, Failure>;

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

pub fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Run(a) => cmd_run(a),
        Command::Resume(a) => cmd_resume(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Spotcheck(a) => cmd_spotcheck(a),
    }
}

/// Parses a flat `key=value` file; `#` starts a comment line.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, Failure> {
    const KEYS: &[&str] = &[
        "sub",
        "point",
        "radius-cells",
        "base-depth",
        "depth-cap",
        "workers",
        "checkpoint",
        "checkpoint-interval",
        "out",
        "stop-after",
    ];
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("config line {}: expected key=value", i + 1)))?;
        let k = k.trim().replace('_', "-");
        if !KEYS.contains(&k.as_str()) {
            return Err(Failure::usage(format!("config line {}: unknown key '{k}'", i + 1)));
        }
        if map.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(Failure::usage(format!("config line {}: duplicate key '{k}'", i + 1)));
        }
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, Failure> {
    v.parse().map_err(|_| Failure::usage(format!("invalid value for {key}: '{v}'")))
}

/// Fills unset flags from the config file, if any.
fn merge_config(mut a: RunArgs) -> Result<RunArgs, Failure> {
    let Some(path) = a.config.clone() else { return Ok(a) };
    let text =
        fs::read_to_string(&path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let map = parse_config(&text)?;
    for (k, v) in &map {
        match k.as_str() {
            "sub" => a.sub = a.sub.or(Some(v.clone())),
            "point" => a.point = a.point.or(Some(v.clone())),
            "radius-cells" => a.radius_cells = a.radius_cells.or(Some(parse_value(k, v)?)),
            "base-depth" => a.base_depth = a.base_depth.or(Some(parse_value(k, v)?)),
            "depth-cap" => a.depth_cap = a.depth_cap.or(Some(parse_value(k, v)?)),
            "workers" => a.workers = a.workers.or(Some(parse_value(k, v)?)),
            "checkpoint" => a.checkpoint = a.checkpoint.or(Some(PathBuf::from(v))),
            "checkpoint-interval" => {
                a.checkpoint_interval = a.checkpoint_interval.or(Some(parse_value(k, v)?))
            }
            "out" => a.out = a.out.or(Some(PathBuf::from(v))),
            "stop-after" => a.stop_after = a.stop_after.or(Some(parse_value(k, v)?)),
            _ => unreachable!("keys validated by parse_config"),
        }
    }
    Ok(a)
}

/// `a:b,c:d,e:f`.
pub fn parse_sub(s: &str) -> Result<[(i64, i64); 3], Failure> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Failure::usage(format!("--sub expects three ranges a:b,c:d,e:f, got '{s}'")));
    }
    let mut out = [(0, 0); 3];
    for (o, p) in out.iter_mut().zip(parts) {
        let (lo, hi) = p.split_once(':').ok_or_else(|| Failure::usage(format!("bad range '{p}'")))?;
        *o = (parse_value("--sub", lo.trim())?, parse_value("--sub", hi.trim())?);
    }
    Ok(out)
}

/// One value (repeated) or three comma-separated values.
pub fn parse_point(s: &str) -> Result<[f64; 3], Failure> {
    let vals = s
        .split(',')
        .map(|p| parse_value::<f64>("--point", p.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    let p = match vals.as_slice() {
        [x] => [*x; 3],
        [x, y, z] => [*x, *y, *z],
        _ => return Err(Failure::usage(format!("--point expects one or three values, got '{s}'"))),
    };
    if p.iter().any(|x| !(0.0..=std::f64::consts::PI).contains(x)) {
        return Err(Failure::usage(format!("point {s} lies outside [0, π]³")));
    }
    Ok(p)
}

/// `j a1 a2 a3`, separated by spaces or commas.
pub fn parse_box(s: &str) -> Result<SearchBox, Failure> {
    let f: Vec<&str> = s.split(|c: char| c == ',' || c.is_whitespace()).filter(|p| !p.is_empty()).collect();
    if f.len() != 4 {
        return Err(Failure::usage(format!("box expects 'j a1 a2 a3', got '{s}'")));
    }
    let j: u32 = parse_value("box depth", f[0])?;
    let mut a = [0i64; 3];
    for (x, p) in a.iter_mut().zip(&f[1..]) {
        *x = parse_value("box numerator", p)?;
    }
    SearchBox::new(j, a).map_err(|e| Failure::usage(e.to_string()))
}

/// Builds the traversal configuration from merged flags.
pub fn run_config(args: RunArgs) -> Result<RunConfig, Failure> {
    let a = merge_config(args)?;
    let depth = a.base_depth.unwrap_or(0);
    let domain = match (&a.sub, &a.point) {
        (Some(_), Some(_)) => return Err(Failure::usage("--sub and --point are mutually exclusive")),
        (Some(s), None) => Domain::new(depth, parse_sub(s)?)?,
        (None, Some(p)) => Domain::around_point(parse_point(p)?, a.radius_cells.unwrap_or(1), depth)?,
        (None, None) => Domain::full(depth),
    };
    let mut cfg = RunConfig::new(domain, a.out.unwrap_or_else(|| PathBuf::from("certificate.txt")));
    cfg.depth_cap = a.depth_cap.unwrap_or(DEFAULT_DEPTH_CAP.max(depth));
    cfg.workers = a.workers.unwrap_or(1);
    cfg.checkpoint = a.checkpoint;
    cfg.checkpoint_interval =
        a.checkpoint_interval.map(Duration::from_secs).unwrap_or(DEFAULT_CHECKPOINT_INTERVAL);
    cfg.stop_after = a.stop_after;
    cfg.validate()?;
    Ok(cfg)
}

fn progress_printer() -> impl FnMut(&Progress) {
    let mut last = Instant::now();
    move |p: &Progress| {
        if last.elapsed() >= PROGRESS_EVERY {
            last = Instant::now();
            let c = p.level.by_case;
            eprintln!(
                "depth {}: {} classified at this level ({} total), I={} II={} III={} IV={}, {} unresolved",
                p.depth, p.level.classified, p.total_classified, c[0], c[1], c[2], c[3], p.level.survivors
            );
        }
    }
}

fn print_report(r: &RunReport) {
    println!("status=complete");
    println!("certificate={}", r.certificate.display());
    println!("records={}", r.records);
    println!("max_depth={}", r.max_depth);
    for l in &r.levels {
        let c = l.by_case;
        println!("level.{}.classified={}", l.depth, l.classified);
        println!("level.{}.survivors={}", l.depth, l.survivors);
        println!("level.{}.cases={},{},{},{}", l.depth, c[0], c[1], c[2], c[3]);
    }
}

fn survivors_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".survivors");
    PathBuf::from(s)
}

fn finish_run(result: Result<RunReport, TraversalError>, out: &Path) -> CliResult {
    match result {
        Ok(r) => {
            print_report(&r);
            Ok(EXIT_OK)
        }
        Err(TraversalError::DepthCap { depth, survivors, .. }) => {
            let path = survivors_path(out);
            let mut text = String::with_capacity(survivors.len() * 24);
            for b in &survivors {
                text.push_str(&b.to_string());
                text.push('\n');
            }
            fs::write(&path, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
            eprintln!("depth cap {depth} reached with {} unresolved boxes:", survivors.len());
            let stderr = std::io::stderr();
            let mut err = stderr.lock();
            for b in survivors.iter().take(SURVIVORS_ON_STDERR) {
                let _ = writeln!(err, "  {b}");
            }
            if survivors.len() > SURVIVORS_ON_STDERR {
                let _ = writeln!(err, "  ... see {}", path.display());
            }
            println!("status=depth-cap");
            println!("depth={depth}");
            println!("survivors={}", survivors.len());
            println!("survivors_file={}", path.display());
            Ok(EXIT_DEPTH_CAP)
        }
        Err(TraversalError::Interrupted { classified, checkpoint }) => {
            eprintln!("stopped after {classified} boxes; resume from {}", checkpoint.display());
            println!("status=interrupted");
            println!("classified={classified}");
            println!("checkpoint={}", checkpoint.display());
            Ok(EXIT_INTERRUPTED)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn cmd_run(args: RunArgs) -> CliResult {
    let cfg = run_config(args)?;
    eprintln!("traversing {} base cells at depth {}", cfg.domain.cell_count(), cfg.domain.depth);
    let mut progress = progress_printer();
    let res = run_with_progress(&cfg, &mut progress);
    finish_run(res, &cfg.out)
}

pub fn cmd_resume(args: ResumeArgs) -> CliResult {
    let mut progress = progress_printer();
    let res = resume(&args.checkpoint, args.workers, args.stop_after, &mut progress);
    let out = match &res {
        Ok(r) => r.certificate.clone(),
        Err(_) => checkpoint_out(&args.checkpoint).unwrap_or_else(|_| args.checkpoint.clone()),
    };
    finish_run(res, &out)
}

pub fn cmd_verify(args: VerifyArgs) -> CliResult {
    if args.workers == 0 {
        return Err(Failure::usage("worker count must be at least 1"));
    }
    match verify_certificate_file(&args.certificate, args.workers)? {
        Ok(s) => {
            println!("status=ok");
            println!("records={}", s.records);
            println!("max_depth={}", s.max_depth);
            Ok(EXIT_OK)
        }
        Err(f) => {
            eprintln!("verification failed: {f}");
            println!("status=failed");
            match &f {
                VerifyFailure::ConstantsMismatch { .. } => println!("failure=constants-mismatch"),
                VerifyFailure::Replay { index, .. } => {
                    println!("failure=replay");
                    println!("index={index}");
                }
                VerifyFailure::Misplaced { index, .. } => {
                    println!("failure=misplaced");
                    println!("index={index}");
                }
                VerifyFailure::Uncovered { cell, .. } => {
                    println!("failure=uncovered");
                    println!("cell={cell}");
                }
                VerifyFailure::Incomplete { cell, .. } => {
                    println!("failure=incomplete");
                    println!("cell={cell}");
                }
            }
            Ok(EXIT_VERIFY_FAILED)
        }
    }
}

fn show<E>(r: Result<f64, E>) -> String {
    r.map(|v| v.to_string()).unwrap_or_else(|_| "undefined".into())
}

fn print_point(p: [f64; 3]) {
    let e = EdgeTriple::from_array(p);
    println!("point={},{},{}", p[0], p[1], p[2]);
    println!("lambda={}", show(lambda(&e)));
    for i in 1..=3 {
        println!("gamma{i}={}", show(gamma_i(&e, i)));
    }
    match h_system(&e) {
        Ok(h) => {
            for (i, v) in h.iter().enumerate() {
                println!("h{}={v}", i + 1);
            }
        }
        Err(_) => {
            for i in 1..=3 {
                println!("h{i}=undefined");
            }
        }
    }
    println!("f0={}", show(f0(&e)));
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "none".into())
}

fn print_trace(b: &SearchBox) {
    let c = b.center_values();
    println!("box={b}");
    println!("center={},{},{}", c[0], c[1], c[2]);
    println!("radius={}", b.radius());

    let si = step_i_report(b);
    println!("step_i.rows_held={}", si.rows_held);
    match si.failed {
        Some(f) => println!("step_i.failed={}.{}", f.row, f.sub),
        None => println!("step_i.failed=none"),
    }
    println!("step_i.lambda={}", opt(si.lambda));

    let sii = step_ii_report(b);
    for (k, r) in sii.candidates.iter().enumerate() {
        let p = format!("step_ii.candidate{}", k + 1);
        println!("{p}.value={}", r.candidate);
        println!("{p}.distance_l2={}", r.d2_squared.sqrt());
        println!("{p}.distance_l1={}", r.d1);
        println!("{p}.lhs={}", r.lhs);
        println!("{p}.rhs={}", r.rhs);
        println!("{p}.inside={}", r.inside);
    }

    let siii = step_iii_report(b);
    for r in &siii.components {
        let p = format!("step_iii.h{}", r.component);
        if let Some(v) = r.values {
            let signs: String = v.iter().map(|x| if *x > 0.0 { '+' } else if *x < 0.0 { '-' } else { '0' }).collect();
            println!("{p}.signs={signs}");
        }
        match r.status {
            ComponentStatus::Inconclusive(why) => println!("{p}.status=inconclusive:{why:?}"),
            ComponentStatus::Evaluated { min_abs, lhs, rhs_modulus, rhs_sqrt, passed } => {
                println!("{p}.status=evaluated");
                println!("{p}.min_abs={min_abs}");
                println!("{p}.lhs={lhs}");
                println!("{p}.rhs_modulus={}", opt(rhs_modulus));
                println!("{p}.rhs_sqrt={rhs_sqrt}");
                println!("{p}.passed={}", passed.map(|t| t.to_string()).unwrap_or_else(|| "none".into()));
            }
        }
    }

    match step_iv_report(b) {
        StepIVReport::Inconclusive => println!("step_iv.status=inconclusive"),
        StepIVReport::Evaluated { f0, margin, grad, rhs, eliminated } => {
            println!("step_iv.status=evaluated");
            println!("step_iv.f0={f0}");
            println!("step_iv.margin={margin}");
            println!("step_iv.grad={},{},{}", grad[0], grad[1], grad[2]);
            println!("step_iv.rhs={rhs}");
            println!("step_iv.eliminated={eliminated}");
        }
    }
    let o = classify(b);
    println!("outcome={} {}", o.case, o.detail);
    println!("constants_hash={}", constants_hash());
}

pub fn cmd_spotcheck(args: SpotArgs) -> CliResult {
    if let Some(p) = &args.point {
        print_point(parse_point(p)?);
    } else if let Some(b) = &args.search_box {
        print_trace(&parse_box(b)?);
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let m = parse_config("# c\nsub = 0:9,0:9,0:9\ndepth_cap=4\n\n").unwrap();
        assert_eq!(m["sub"], "0:9,0:9,0:9");
        assert_eq!(m["depth-cap"], "4");
        assert!(parse_config("bogus=1").is_err());
        assert!(parse_config("sub").is_err());
        assert!(parse_config("out=a\nout=b").is_err());
    }

    #[test]
    fn sub_point_box_parsing() {
        assert_eq!(parse_sub("0:9, 1:2,3:4").unwrap(), [(0, 9), (1, 2), (3, 4)]);
        assert!(parse_sub("0:9,1:2").is_err());
        assert_eq!(parse_point("1.5").unwrap(), [1.5; 3]);
        assert!(parse_point("4,1,1").is_err());
        assert!(parse_point("1,1").is_err());
        assert_eq!(parse_box("0 50 50 50").unwrap().numerators(), [50; 3]);
        assert_eq!(parse_box("1,5,6,7").unwrap().depth(), 1);
        assert!(parse_box("0 50 50").is_err());
        assert!(parse_box("0 50 50 101").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "sub=0:9,0:9,0:9\ndepth-cap=4\nworkers=3\n").unwrap();
        let args = RunArgs { config: Some(cfg), workers: Some(2), ..Default::default() };
        let c = run_config(args).unwrap();
        assert_eq!(c.workers, 2);
        assert_eq!(c.depth_cap, 4);
        assert_eq!(c.domain.ranges, [(0, 9); 3]);
    }

    #[test]
    fn run_config_rejects_conflicts() {
        let args = RunArgs { sub: Some("0:1,0:1,0:1".into()), point: Some("1".into()), ..Default::default() };
        assert!(run_config(args).is_err());
        let args = RunArgs { sub: Some("0:1,0:1,0:1".into()), workers: Some(0), ..Default::default() };
        assert!(run_config(args).is_err());
    }
}
