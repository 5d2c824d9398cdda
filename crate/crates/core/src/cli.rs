//! Command-line front end.
//!
//! Every command is a pure function of its flags, input files and seed.
//! Reports go to stdout (or `--out FILE`), logs to stderr. Exit codes are
//! 0 on success, 1 on usage errors and 2 on data errors.
//!
//! Each run also produces a [`RunManifest`]: JSON reports embed it under
//! `"manifest"`, file outputs get a `FILE.manifest.json` sidecar, and CSV on
//! stdout logs it to stderr. `hetdp replay MANIFEST` re-executes a run.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bounds::bounds_report;
use crate::io::{format_f64, json_f64, json_f64_vec, read_dataset, read_profile, values_csv};
use crate::mechanisms::{estimate, Method, NoiseSource};
use crate::simulation::{gen_eps, run_mse, scatter_fh, Distribution, Regime, SimulationConfig};
use crate::weights::{compute_weights, upper_bound_mse};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "hetdp",
    version,
    about = "Mean estimation under heterogeneous differential privacy"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal weights and granted privacy for a profile.
    Weights(WeightsArgs),
    /// Upper bound, lower bound and their ratio.
    Bounds(BoundsArgs),
    /// Release one private mean estimate.
    Estimate(EstimateArgs),
    /// Monte-Carlo MSE comparison of the estimators.
    Simulate(SimulateArgs),
    /// (ln f, ln H) for random unsaturated profiles.
    Scatter(ScatterArgs),
    /// Write a random privacy profile.
    GenEps(GenEpsArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Low,
    High,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Low => Regime::Low,
            RegimeArg::High => Regime::High,
        }
    }
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    #[arg(long)]
    pub eps: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub eps: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long, value_parser = parse_method)]
    pub method: Method,
    #[arg(long)]
    pub eps: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, env = "HETDP_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Project the release onto [-0.5, 0.5] (ADPM only).
    #[arg(long)]
    pub clip: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("profile").required(true).args(["regime", "eps"])))]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub regime: Option<RegimeArg>,
    #[arg(long)]
    pub eps: Option<PathBuf>,
    /// Number of users when generating a profile from --regime.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 20_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Comma-separated subset of adpm,uni,sm,ldpe,prop.
    #[arg(long, value_delimiter = ',', value_parser = parse_method,
          default_value = "adpm,prop,ldpe,sm,uni")]
    pub methods: Vec<Method>,
    /// beta:A,B | bernoulli:D | point:C
    #[arg(long, value_parser = parse_distribution, default_value = "beta:2,3")]
    pub dist: Distribution,
    #[arg(long, env = "HETDP_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; output does not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub clip: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    #[arg(long, default_value_t = 1000)]
    pub sequences: usize,
    #[arg(long, env = "HETDP_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenEpsArgs {
    #[arg(long, value_enum)]
    pub regime: RegimeArg,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, env = "HETDP_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_distribution(s: &str) -> std::result::Result<Distribution, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, as given.
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub version: String,
    pub inputs: Vec<InputDigest>,
}

fn digest_file(path: &Path) -> Result<InputDigest> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

enum Report {
    Json(Value),
    Csv(String),
}

struct Output {
    report: Report,
    manifest: RunManifest,
    out: Option<PathBuf>,
    logs: Vec<String>,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<W: Write, E: Write>(argv: &[String], stdout: &mut W, stderr: &mut E) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{rendered}");
                    EXIT_USAGE
                }
            };
        }
    };
    let args = argv.get(1..).unwrap_or_default().to_vec();
    match execute(cli.command, args, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_DATA
        }
    }
}

fn execute<W: Write, E: Write>(
    command: Command,
    args: Vec<String>,
    stdout: &mut W,
    stderr: &mut E,
) -> Result<i32> {
    let output = match command {
        Command::Weights(a) => cmd_weights(&a, args)?,
        Command::Bounds(a) => cmd_bounds(&a, args)?,
        Command::Estimate(a) => cmd_estimate(&a, args)?,
        Command::Simulate(a) => cmd_simulate(&a, args)?,
        Command::Scatter(a) => cmd_scatter(&a, args)?,
        Command::GenEps(a) => cmd_gen_eps(&a, args)?,
        Command::Replay(a) => return cmd_replay(&a, stdout, stderr),
    };
    emit(output, stdout, stderr)?;
    Ok(EXIT_OK)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Sidecar path for a report written to `out`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn emit<W: Write, E: Write>(output: Output, stdout: &mut W, stderr: &mut E) -> Result<()> {
    let manifest_json = serde_json::to_string_pretty(&output.manifest)?;
    let (text, is_csv) = match output.report {
        Report::Json(mut v) => {
            if let Value::Object(map) = &mut v {
                map.insert("manifest".into(), serde_json::to_value(&output.manifest)?);
            }
            (serde_json::to_string_pretty(&v)? + "\n", false)
        }
        Report::Csv(s) => (s, true),
    };
    let io_err = |source| Error::Io {
        path: "<stdout>".into(),
        source,
    };
    match &output.out {
        Some(path) => {
            write_file(path, &text)?;
            write_file(&manifest_path(path), &(manifest_json + "\n"))?;
        }
        None => {
            stdout.write_all(text.as_bytes()).map_err(io_err)?;
            if is_csv {
                let compact = serde_json::to_string(&output.manifest)?;
                let _ = writeln!(stderr, "manifest: {compact}");
            }
        }
    }
    for line in output.logs {
        let _ = writeln!(stderr, "{line}");
    }
    Ok(())
}

fn manifest(
    command: &str,
    args: Vec<String>,
    seed: Option<u64>,
    inputs: &[&Path],
) -> Result<RunManifest> {
    Ok(RunManifest {
        command: command.to_string(),
        args,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        inputs: inputs
            .iter()
            .map(|p| digest_file(p))
            .collect::<Result<_>>()?,
    })
}

fn cmd_weights(a: &WeightsArgs, args: Vec<String>) -> Result<Output> {
    let profile = read_profile(&a.eps)?;
    let sp = profile.sorted();
    let alloc = compute_weights(&sp);
    let w = alloc.w_original();
    let granted = alloc.granted();
    let upper = upper_bound_mse(&alloc);
    let report = match a.format {
        Format::Json => Report::Json(json!({
            "eps": json_f64_vec(profile.eps()),
            "r": json_f64_vec(&granted),
            "w": json_f64_vec(&w),
            "eta": json_f64(alloc.eta()),
            "granted": json_f64_vec(&granted),
            "sat_index": alloc.sat_index(),
            "f": json_f64(alloc.f_value()),
            "upper_bound": json_f64(upper),
            "trivial_fallback": alloc.trivial_fallback(),
        })),
        Format::Csv => {
            let mut s = String::from("user,eps,w,granted\n");
            for (i, (&e, (&wi, &g))) in profile.eps().iter().zip(w.iter().zip(&granted)).enumerate()
            {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    i,
                    format_f64(e),
                    format_f64(wi),
                    format_f64(g)
                ));
            }
            Report::Csv(s)
        }
    };
    let logs = vec![format!(
        "n={} eta={} f={} upper_bound={} sat_index={} trivial_fallback={}",
        alloc.len(),
        format_f64(alloc.eta()),
        format_f64(alloc.f_value()),
        format_f64(upper),
        alloc
            .sat_index()
            .map_or_else(|| "none".to_string(), |k| k.to_string()),
        alloc.trivial_fallback()
    )];
    Ok(Output {
        report,
        manifest: manifest("weights", args, None, &[&a.eps])?,
        out: a.out.clone(),
        logs,
    })
}

fn cmd_bounds(a: &BoundsArgs, args: Vec<String>) -> Result<Output> {
    let sp = read_profile(&a.eps)?.sorted();
    let b = bounds_report(&sp);
    Ok(Output {
        report: Report::Json(json!({
            "h": json_f64(b.h),
            "p": b.p,
            "f": json_f64(b.f),
            "upper": json_f64(b.upper),
            "ratio": json_f64(b.ratio),
        })),
        manifest: manifest("bounds", args, None, &[&a.eps])?,
        out: a.out.clone(),
        logs: vec![],
    })
}

fn cmd_estimate(a: &EstimateArgs, args: Vec<String>) -> Result<Output> {
    let sp = read_profile(&a.eps)?.sorted();
    let data = read_dataset(&a.data)?;
    let alloc = compute_weights(&sp);
    let mut ns = NoiseSource::new(a.seed, 0);
    let est = estimate(a.method, &sp, &alloc, &data, &mut ns, a.clip)?;
    Ok(Output {
        report: Report::Json(json!({
            "value": json_f64(est.value),
            "method": est.method.name(),
            "eta_used": json_f64(est.eta_used),
            "seed": est.seed,
            "stream_id": est.stream_id,
        })),
        manifest: manifest("estimate", args, Some(a.seed), &[&a.eps, &a.data])?,
        out: a.out.clone(),
        logs: vec![],
    })
}

fn cmd_simulate(a: &SimulateArgs, args: Vec<String>) -> Result<Output> {
    let (profile, inputs): (_, Vec<&Path>) = match (&a.eps, a.regime) {
        (Some(path), _) => (read_profile(path)?, vec![path.as_path()]),
        (None, Some(regime)) => (gen_eps(regime.into(), a.n as usize, a.seed)?, vec![]),
        (None, None) => unreachable!("clap enforces the profile group"),
    };
    let config = SimulationConfig {
        profile,
        distribution: a.dist,
        trials: a.trials as usize,
        methods: a.methods.clone(),
        seed: a.seed,
        clip: a.clip,
    };
    let rep = run_mse(&config, a.threads)?;
    let report = match a.format {
        Format::Csv => {
            let mut s = String::from("method,trials,mse,ln_mse,std_err\n");
            for m in &rep.methods {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    m.method.name(),
                    rep.trials,
                    format_f64(m.mse),
                    format_f64(m.ln_mse),
                    format_f64(m.std_err)
                ));
            }
            Report::Csv(s)
        }
        Format::Json => Report::Json(json!({
            "n": rep.n,
            "trials": rep.trials,
            "seed": rep.seed,
            "distribution": rep.distribution.to_string(),
            "true_mean": json_f64(rep.true_mean),
            "predicted_adpm_mse": json_f64(rep.predicted_adpm_mse),
            "worst_case_bound": json_f64(rep.worst_case_bound),
            "methods": rep.methods.iter().map(|m| json!({
                "method": m.method.name(),
                "mse": json_f64(m.mse),
                "ln_mse": json_f64(m.ln_mse),
                "std_err": json_f64(m.std_err),
            })).collect::<Vec<_>>(),
        })),
    };
    let logs = vec![format!(
        "n={} true_mean={} predicted_adpm_mse={} worst_case_bound={}",
        rep.n,
        format_f64(rep.true_mean),
        format_f64(rep.predicted_adpm_mse),
        format_f64(rep.worst_case_bound)
    )];
    Ok(Output {
        report,
        manifest: manifest("simulate", args, Some(a.seed), &inputs)?,
        out: a.out.clone(),
        logs,
    })
}

fn cmd_scatter(a: &ScatterArgs, args: Vec<String>) -> Result<Output> {
    let points = scatter_fh(a.sequences, a.seed);
    let mut s = String::from("n,ln_f,ln_h\n");
    let mut max_ratio = f64::NEG_INFINITY;
    let mut violations = 0usize;
    for p in &points {
        s.push_str(&format!(
            "{},{},{}\n",
            p.n,
            format_f64(p.ln_f),
            format_f64(p.ln_h)
        ));
        max_ratio = max_ratio.max(p.ratio());
        if p.ln_h < p.ln_f - crate::bounds::OPTIMALITY_CONSTANT.ln() {
            violations += 1;
        }
    }
    let summary = if points.is_empty() {
        "sequences=0".to_string()
    } else {
        format!(
            "sequences={} max_ratio={} violations_443={}",
            points.len(),
            format_f64(max_ratio),
            violations
        )
    };
    Ok(Output {
        report: Report::Csv(s),
        manifest: manifest("scatter", args, Some(a.seed), &[])?,
        out: a.out.clone(),
        logs: vec![summary],
    })
}

fn cmd_gen_eps(a: &GenEpsArgs, args: Vec<String>) -> Result<Output> {
    let profile = gen_eps(a.regime.into(), a.n as usize, a.seed)?;
    Ok(Output {
        report: Report::Csv(values_csv("eps", profile.eps())),
        manifest: manifest("gen-eps", args, Some(a.seed), &[])?,
        out: Some(a.out.clone()),
        logs: vec![],
    })
}

fn cmd_replay<W: Write, E: Write>(a: &ReplayArgs, stdout: &mut W, stderr: &mut E) -> Result<i32> {
    let text = std::fs::read_to_string(&a.manifest).map_err(|source| Error::Io {
        path: a.manifest.display().to_string(),
        source,
    })?;
    let m: RunManifest = serde_json::from_str(&text)?;
    for input in &m.inputs {
        let now = digest_file(Path::new(&input.path))?;
        if now.sha256 != input.sha256 {
            return Err(Error::InvalidConfig(format!(
                "input {} changed since the manifest was written",
                input.path
            )));
        }
    }
    let mut argv = vec!["hetdp".to_string()];
    argv.extend(m.args.iter().cloned());
    if let Some(seed) = m.seed {
        if !m
            .args
            .iter()
            .any(|a| a == "--seed" || a.starts_with("--seed="))
        {
            argv.push("--seed".into());
            argv.push(seed.to_string());
        }
    }
    Ok(run(&argv, stdout, stderr))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let argv: Vec<String> = std::iter::once("hetdp")
            .chain(args.iter().copied())
            .map(String::from)
            .collect();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(&argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn usage_errors_exit_1() {
        assert_eq!(run_args(&["nope"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["simulate"]).0, EXIT_USAGE);
        assert_eq!(
            run_args(&["gen-eps", "--regime", "low", "--n", "0", "--out", "x"]).0,
            EXIT_USAGE
        );
        assert_eq!(run_args(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn missing_file_exits_2() {
        let (code, _, err) = run_args(&["bounds", "--eps", "/nonexistent/eps.csv"]);
        assert_eq!(code, EXIT_DATA);
        assert!(err.contains("nonexistent"));
    }

    #[test]
    fn manifest_sidecar_name() {
        assert_eq!(
            manifest_path(Path::new("/tmp/out.csv")),
            PathBuf::from("/tmp/out.csv.manifest.json")
        );
    }
}
