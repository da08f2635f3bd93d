//! `wds`: order checks, Psi and barrier export, embedding simulation,
//! transforms and the acceptance examples.
//!
//! Exit codes: 0 when the property holds or the command succeeds, 1 when a
//! valid run finds the property failing, 2 on usage or input errors.

mod inputs;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use wds_core::cox_hobson::barrier;
use wds_core::mc_sim::{
    check_monotone_t, check_supermartingale, embed_family, threads_from_env, Binning, PathConfig, SimError,
};
use wds_core::measures::io::{family_to_json, measure_from_json, measure_to_json};
use wds_core::measures::MeasureFamily;
use wds_core::orderings::{
    compare_family, k_function, psi_mrl, psi_wds, psi_wis, tabulate, tabulation_csv, ExtendedReal, GridPolicy,
    OrderVerdict, Relation, DEFAULT_TOL,
};
use wds_core::reproduce::{self, CriterionReport, CRITERIA};
use wds_core::transforms::{
    censor, censor_family, convex_combine_family, random_translate, random_translate_family, scale_mix,
    scale_mix_family, subordinate, LogConcaveDensity, MixingKernel, PositiveDensity, Provenance,
};

use manifest::{manifest_beside, Recorder};

/// Quantile bins and slack of the supermartingale check in `embed simulate`.
const SUPERMARTINGALE_BINS: usize = 10;
const SUPERMARTINGALE_TOL: f64 = 0.01;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_owned(),
            source,
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

#[derive(Parser)]
#[command(name = "wds", version, about = "Weak decreasing stochastic order toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ordering checks on families.
    #[command(subcommand)]
    Order(OrderCmd),
    /// Psi and K tabulation.
    #[command(subcommand)]
    Psi(PsiCmd),
    /// Cox-Hobson barrier export.
    #[command(subcommand)]
    Barrier(BarrierCmd),
    /// Monte Carlo embedding.
    #[command(subcommand)]
    Embed(EmbedCmd),
    /// Order-preserving transforms.
    #[command(subcommand)]
    Transform(TransformCmd),
    /// Acceptance examples.
    #[command(subcommand)]
    Examples(ExamplesCmd),
}

#[derive(Subcommand)]
enum OrderCmd {
    /// Exit 0 if the relation holds over the family, 1 if it fails.
    Check(CheckArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// st-increasing, st-decreasing, icx, dcx, mrl, wds or wis.
    #[arg(long)]
    relation: String,
    /// Family (or single measure) JSON file.
    #[arg(long, conflicts_with = "example", required_unless_present = "example")]
    family: Option<PathBuf>,
    /// Built-in family: discrete-k<k>, density-k<k>, two-atom, translated, peacock.
    #[arg(long)]
    example: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Verdict JSON.
    #[arg(long, default_value = "verdict.json")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum PsiCmd {
    /// Tabulate a Psi functional or K on a grid as CSV.
    Eval(PsiArgs),
}

#[derive(Args)]
struct PsiArgs {
    #[arg(long)]
    measure: PathBuf,
    /// auto, lo:hi:n, or x1,x2,...
    #[arg(long, default_value = "auto")]
    grid: String,
    /// psi-wds, psi-mrl, psi-wis or k.
    #[arg(long, default_value = "psi-wds")]
    function: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum BarrierCmd {
    /// Write the barrier knots as CSV, or JSON for a `.json` output.
    Export(BarrierArgs),
}

#[derive(Args)]
struct BarrierArgs {
    #[arg(long)]
    measure: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum EmbedCmd {
    /// Simulate the stopping times of a family on shared paths.
    Simulate(EmbedArgs),
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    family: PathBuf,
    #[arg(long, default_value_t = PathConfig::default().dt)]
    dt: f64,
    #[arg(long, default_value_t = PathConfig::default().n_paths)]
    paths: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = PathConfig::default().horizon)]
    horizon: f64,
    #[arg(long)]
    allow_non_wds: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum TransformCmd {
    /// Apply censor, convex-combine, subordinate, random-translate or scale-mix.
    Apply(TransformArgs),
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long)]
    name: String,
    /// Inline JSON object or a JSON file.
    #[arg(long)]
    params: String,
    /// Measure or family JSON.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum ExamplesCmd {
    /// Run one acceptance criterion or all of them.
    Run(ExamplesArgs),
}

#[derive(Args)]
struct ExamplesArgs {
    /// Criterion name or number.
    #[arg(long, conflicts_with = "all", required_unless_present = "all")]
    name: Option<String>,
    #[arg(long)]
    all: bool,
    /// Output directory for the summary files.
    #[arg(long, default_value = "wds-examples")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let rec = Recorder::new(std::env::args().skip(1).collect());
    let result = match cli.command {
        Command::Order(OrderCmd::Check(a)) => order_check(a, rec),
        Command::Psi(PsiCmd::Eval(a)) => psi_eval(a, rec),
        Command::Barrier(BarrierCmd::Export(a)) => barrier_export(a, rec),
        Command::Embed(EmbedCmd::Simulate(a)) => embed_simulate(a, rec),
        Command::Transform(TransformCmd::Apply(a)) => transform_apply(a, rec),
        Command::Examples(ExamplesCmd::Run(a)) => examples_run(a, rec),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn json_bytes(v: &impl serde::Serialize) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn print_verdict(v: &OrderVerdict, members: usize) {
    let state = if v.inconclusive {
        "INCONCLUSIVE"
    } else if v.holds {
        "HOLDS"
    } else {
        "FAILS"
    };
    println!("relation  members  grid points  verdict");
    println!(
        "{:<9} {:>7}  {:>11}  {state}",
        v.relation.name(),
        members,
        v.grid_points
    );
    if let Some(w) = &v.witness {
        println!(
            "witness: s = {}, t = {}, x = {}, lhs = {}, rhs = {}",
            w.s, w.t, w.x, w.lhs, w.rhs
        );
    }
}

fn order_check(a: CheckArgs, mut rec: Recorder) -> Result<bool, CliError> {
    let relation: Relation = a.relation.parse().map_err(input)?;
    let fam = match (&a.family, &a.example) {
        (Some(p), _) => inputs::read_family(p, &mut rec)?,
        (None, Some(name)) => inputs::builtin_family(name)?,
        (None, None) => unreachable!("clap requires --family or --example"),
    };
    let v = compare_family(relation, &fam, &GridPolicy::Auto, a.tol).map_err(input)?;
    print_verdict(&v, fam.len());
    rec.write_output(&a.out, &json_bytes(&v))?;
    rec.finish(&manifest_beside(&a.out))?;
    Ok(v.holds && !v.inconclusive)
}

fn psi_eval(a: PsiArgs, mut rec: Recorder) -> Result<bool, CliError> {
    let m = inputs::read_measure(&a.measure, &mut rec)?;
    let grid = inputs::parse_grid(&a.grid, &m)?;
    let rows = match a.function.as_str() {
        "psi-wds" => {
            psi_wds(&m, 0.0).map_err(input)?;
            tabulate(&grid, |x| psi_wds(&m, x).expect("negative mean checked"))
        }
        "psi-wis" => {
            psi_wis(&m, 0.0).map_err(input)?;
            tabulate(&grid, |x| psi_wis(&m, x).expect("positive mean checked"))
        }
        "psi-mrl" => tabulate(&grid, |x| psi_mrl(&m, x)),
        "k" => {
            k_function(&m, 0.0).map_err(input)?;
            tabulate(&grid, |x| {
                ExtendedReal::Finite(k_function(&m, x).expect("negative mean checked"))
            })
        }
        f => {
            return Err(CliError::Input(format!(
                "unknown function {f:?} (psi-wds, psi-mrl, psi-wis, k)"
            )))
        }
    };
    let infinite = rows.iter().filter(|r| r.1.is_infinite()).count();
    println!("function  points  infinite");
    println!("{:<9} {:>6}  {:>8}", a.function, rows.len(), infinite);
    rec.write_output(&a.out, tabulation_csv(&rows).as_bytes())?;
    rec.finish(&manifest_beside(&a.out))?;
    Ok(true)
}

fn barrier_export(a: BarrierArgs, mut rec: Recorder) -> Result<bool, CliError> {
    let m = inputs::read_measure(&a.measure, &mut rec)?;
    let b = barrier(&m).map_err(input)?;
    println!("knots  l        r");
    println!("{:>5}  {:<8} {}", b.knots().len(), b.l_inf(), b.r_sup());
    let text = if a.out.extension().is_some_and(|e| e == "json") {
        b.to_json()
    } else {
        b.to_csv()
    };
    rec.write_output(&a.out, text.as_bytes())?;
    rec.finish(&manifest_beside(&a.out))?;
    Ok(true)
}

fn embed_simulate(a: EmbedArgs, mut rec: Recorder) -> Result<bool, CliError> {
    let fam = inputs::read_family(&a.family, &mut rec)?;
    rec.set_seed(a.seed);
    let cfg = PathConfig {
        dt: a.dt,
        horizon: a.horizon,
        n_paths: a.paths,
        seed: a.seed,
        threads: threads_from_env(),
        allow_non_wds: a.allow_non_wds,
    };
    let res = match embed_family(&fam, &cfg) {
        Ok(r) => r,
        Err(SimError::NotWdsOrdered { s, t, verdict }) => {
            println!("family is not WDS ordered between t = {s} and t = {t}; use --allow-non-wds to simulate anyway");
            print_verdict(&verdict, fam.len());
            return Ok(false);
        }
        Err(e) => return Err(input(e)),
    };
    let members: Vec<_> = fam.measures().collect();
    let summaries = res.summarize(&members);
    let monotone = check_monotone_t(&res);
    let times = res.times();
    let mut pass = monotone.violating_paths == 0;
    let mut bins = Vec::new();
    for w in times.windows(2) {
        let report = check_supermartingale(
            &res,
            w[0],
            w[1],
            SUPERMARTINGALE_BINS,
            SUPERMARTINGALE_TOL,
            Binning::Stopped,
        );
        match report {
            Ok(r) => {
                pass &= r.all_pass;
                bins.push(json!(r));
            }
            Err(e) => bins.push(json!({ "s": w[0], "t": w[1], "error": e.to_string() })),
        }
    }

    println!(
        "{:>8}  {:>8}  {:>10}  {:>10}  {:>8}  {:>8}",
        "t", "censored", "mean B_T", "target", "ks", "w1"
    );
    for s in &summaries {
        println!(
            "{:>8}  {:>8}  {:>10.5}  {:>10.5}  {:>8.4}  {:>8.4}",
            s.t, s.censored, s.mean_b, s.target_mean, s.ks, s.w1
        );
    }
    println!(
        "monotone violations: {} of {} paths",
        monotone.violating_paths, monotone.paths_checked
    );

    let mut files = Vec::new();
    for (i, col) in res.columns.iter().enumerate() {
        let name = format!("time_{i}.csv");
        rec.write_output(&a.out.join(&name), col.to_csv().as_bytes())?;
        files.push(json!({ "t": col.t, "file": name }));
    }
    // Thread count does not affect results, so it stays out of the outputs.
    let mut config = json!(res.config);
    config.as_object_mut().expect("config is an object").remove("threads");
    let summary = json!({
        "config": config,
        "steps": res.steps,
        "censored_paths": res.censored_paths(),
        "columns": files,
        "distances": summaries,
        "monotone": monotone,
        "supermartingale": bins,
    });
    rec.write_output(&a.out.join("summary.json"), &json_bytes(&summary))?;
    rec.finish(&a.out.join("manifest.json"))?;
    Ok(pass)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CensorParams {
    a: f64,
    b: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConvexParams {
    tau: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
enum TranslateParams {
    Density(LogConcaveDensity),
    Triangular { w: f64, n: usize },
    Gaussian { sd: f64, n: usize },
}

#[derive(Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
enum ScaleParams {
    Density(PositiveDensity),
    Lognormal { mu: f64, sigma: f64, n: usize },
}

fn parse_params<T: for<'de> Deserialize<'de>>(text: &str, name: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("bad params for {name}: {e}")))
}

fn transform_apply(a: TransformArgs, mut rec: Recorder) -> Result<bool, CliError> {
    let params = if a.params.trim_start().starts_with('{') {
        a.params.clone()
    } else {
        rec.read_input(Path::new(&a.params))?
    };
    let text = rec.read_input(&a.input)?;
    // A single measure is transformed directly; families familywise.
    let single = measure_from_json(&text).ok();
    let fam = match &single {
        Some(_) => None,
        None => Some(inputs::read_family_text(&text, &a.input)?),
    };
    let name = a.name.as_str();
    let family_only = |fam: &Option<MeasureFamily>| {
        fam.clone()
            .ok_or_else(|| CliError::Input(format!("{name} needs a family input, got a single measure")))
    };
    let (json_out, provenance): (String, Provenance) = match name {
        "censor" => {
            let p: CensorParams = parse_params(&params, name)?;
            match (&single, &fam) {
                (Some(m), _) => {
                    let out = censor(m, p.a, p.b).map_err(input)?;
                    let prov = Provenance {
                        transform: "censor".into(),
                        params: json!({ "a": p.a, "b": p.b }),
                        renormalization: None,
                    };
                    (measure_to_json(&out, Some(prov.to_value())), prov)
                }
                (None, Some(f)) => {
                    let out = censor_family(f, p.a, p.b).map_err(input)?;
                    (
                        family_to_json(&out.family, Some(out.provenance.to_value())),
                        out.provenance,
                    )
                }
                (None, None) => unreachable!("one input form parsed"),
            }
        }
        "convex-combine" => {
            let p: ConvexParams = parse_params(&params, name)?;
            let out = convex_combine_family(&family_only(&fam)?, &p.tau).map_err(input)?;
            (
                family_to_json(&out.family, Some(out.provenance.to_value())),
                out.provenance,
            )
        }
        "subordinate" => {
            let kernel: MixingKernel = parse_params(&params, name)?;
            let out = subordinate(&family_only(&fam)?, &kernel).map_err(input)?;
            (
                family_to_json(&out.family, Some(out.provenance.to_value())),
                out.provenance,
            )
        }
        "random-translate" => {
            let density = match parse_params::<TranslateParams>(&params, name)? {
                TranslateParams::Density(d) => d,
                TranslateParams::Triangular { w, n } => LogConcaveDensity::triangular(w, n).map_err(input)?,
                TranslateParams::Gaussian { sd, n } => LogConcaveDensity::gaussian(sd, n).map_err(input)?,
            };
            match (&single, &fam) {
                (Some(m), _) => {
                    let out = random_translate(m, &density).map_err(input)?;
                    (
                        measure_to_json(&out.measure, Some(out.provenance.to_value())),
                        out.provenance,
                    )
                }
                (None, Some(f)) => {
                    let out = random_translate_family(f, &density).map_err(input)?;
                    (
                        family_to_json(&out.family, Some(out.provenance.to_value())),
                        out.provenance,
                    )
                }
                (None, None) => unreachable!("one input form parsed"),
            }
        }
        "scale-mix" => {
            let density = match parse_params::<ScaleParams>(&params, name)? {
                ScaleParams::Density(d) => d,
                ScaleParams::Lognormal { mu, sigma, n } => PositiveDensity::lognormal(mu, sigma, n).map_err(input)?,
            };
            match (&single, &fam) {
                (Some(m), _) => {
                    let out = scale_mix(m, &density).map_err(input)?;
                    (
                        measure_to_json(&out.measure, Some(out.provenance.to_value())),
                        out.provenance,
                    )
                }
                (None, Some(f)) => {
                    let out = scale_mix_family(f, &density).map_err(input)?;
                    (
                        family_to_json(&out.family, Some(out.provenance.to_value())),
                        out.provenance,
                    )
                }
                (None, None) => unreachable!("one input form parsed"),
            }
        }
        other => {
            return Err(CliError::Input(format!(
                "unknown transform {other:?} (censor, convex-combine, subordinate, random-translate, scale-mix)"
            )))
        }
    };
    println!("transform         renormalization");
    println!(
        "{:<17} {}",
        provenance.transform,
        provenance
            .renormalization
            .map_or("exact".to_string(), |f| format!("{f:.6}"))
    );
    rec.write_output(&a.out, json_out.as_bytes())?;
    rec.finish(&manifest_beside(&a.out))?;
    Ok(true)
}

/// Reports without timings, so reruns write identical files.
fn report_record(r: &CriterionReport) -> Value {
    json!({ "id": r.id, "name": r.name, "pass": r.pass, "detail": r.detail })
}

fn examples_run(a: ExamplesArgs, mut rec: Recorder) -> Result<bool, CliError> {
    let ids: Vec<u8> = match &a.name {
        Some(name) => vec![reproduce::criterion_id(name).ok_or_else(|| {
            let names: Vec<&str> = CRITERIA.iter().map(|c| c.1).collect();
            CliError::Input(format!("unknown example {name:?}; known: {}", names.join(", ")))
        })?],
        None => CRITERIA.iter().map(|c| c.0).collect(),
    };
    let reports: Vec<CriterionReport> = ids.iter().filter_map(|&id| reproduce::run(id)).collect();
    print!("{}", reproduce::summary_table(&reports));
    let mut text = String::new();
    for r in &reports {
        text.push_str(&format!(
            "{} {:>2} {}: {}\n",
            if r.pass { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.detail
        ));
    }
    let records: Vec<Value> = reports.iter().map(report_record).collect();
    rec.write_output(&a.out.join("summary.txt"), text.as_bytes())?;
    rec.write_output(&a.out.join("summary.json"), &json_bytes(&records))?;
    rec.finish(&a.out.join("manifest.json"))?;
    Ok(reports.iter().all(|r| r.pass))
}
