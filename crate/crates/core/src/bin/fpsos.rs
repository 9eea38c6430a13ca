//! Command-line front end: analyze programs, run the sampling oracle,
//! verify certificates, and reproduce the benchmark table.

use clap::{Args, Parser, Subcommand};
use fpsos::analysis::{analyze_spec, auto_budget, format_from_name, AnalysisResult};
use fpsos::bench;
use fpsos::certify::{certificate_from_string, certificate_to_string, check_certificate};
use fpsos::engine::AnalysisOptions;
use fpsos::parser::parse_program;
use fpsos::program::ProgramSpec;
use fpsos::rational::{rat_to_f64, to_decimal_string};
use fpsos::rounding::RoundingOptions;
use fpsos::sampling::sample_program;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fpsos",
    version,
    about = "Certified roundoff error bounds via sparse sums-of-squares relaxations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct AnalyzeFlags {
    /// relaxation order (default: minimal order for the problem)
    #[arg(short = 'd', long)]
    order: Option<usize>,
    /// floating-point format: single, double, quad, or a bit count
    #[arg(long, default_value = "double")]
    precision: String,
    /// merge products of fresh error factors into one variable
    #[arg(long)]
    merge_errors: bool,
    /// subdivision budget: a count, or "auto"
    #[arg(long, default_value = "auto")]
    subdivide: String,
    /// extract exact rational certificates
    #[arg(long)]
    certify: bool,
    /// re-check a previously written certificate file against the program
    #[arg(long)]
    check: Option<PathBuf>,
    /// solver backend: embedded, or sdpa-files:<dir>
    #[arg(long, default_value = "embedded")]
    solver: String,
    /// round input variables (real-input convention)
    #[arg(long, default_value = "on")]
    input_rounding: String,
    /// attach an error variable to unary negation
    #[arg(long, default_value = "off")]
    neg_error: String,
    /// round non-representable constants
    #[arg(long, default_value = "on")]
    const_rounding: String,
    /// error-variable count above which per-term interval bounding is used
    #[arg(long, default_value_t = 64)]
    max_joint_errors: usize,
    /// disable the reduced coupled-block bases
    #[arg(long)]
    full_basis: bool,
    /// directory for certificate files
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// machine-readable output
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a certified roundoff error bound for one program
    Analyze {
        path: PathBuf,
        #[command(flatten)]
        flags: AnalyzeFlags,
    },
    /// Execute a program on random inputs and report the largest observed error
    Sample {
        path: PathBuf,
        /// number of accepted samples
        #[arg(short = 'n', long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 20_177)]
        seed: u64,
        #[arg(long, default_value = "double")]
        precision: String,
        #[arg(long)]
        json: bool,
    },
    /// Analyze every .prog file in a directory and print the comparison table
    Bench {
        suite_dir: PathBuf,
        #[command(flatten)]
        flags: AnalyzeFlags,
        /// also run the sampling oracle per program
        #[arg(long, default_value_t = 0)]
        sample_count: usize,
        /// comma-separated benchmark ids to skip
        #[arg(long, default_value = "")]
        skip: String,
        /// include benchmarks the reference tool itself failed on
        #[arg(long)]
        include_excluded: bool,
    },
}

fn parse_on_off(s: &str, what: &str) -> Result<bool, String> {
    match s {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        other => Err(format!("{what} must be on|off, got `{other}`")),
    }
}

fn options_from_flags(flags: &AnalyzeFlags, spec: &ProgramSpec) -> Result<AnalysisOptions, String> {
    let format = format_from_name(&flags.precision)
        .ok_or_else(|| format!("unknown precision `{}`", flags.precision))?;
    let budget = match flags.subdivide.as_str() {
        "auto" => auto_budget(spec),
        other => other
            .parse::<usize>()
            .map_err(|_| format!("bad subdivision budget `{other}`"))?
            .max(1),
    };
    if flags.solver != "embedded" && !flags.solver.starts_with("sdpa-files:") {
        return Err(format!("unknown solver backend `{}`", flags.solver));
    }
    let sdpa_dir = flags.solver.strip_prefix("sdpa-files:").map(PathBuf::from);
    Ok(AnalysisOptions {
        format,
        rounding: RoundingOptions {
            input_rounding: parse_on_off(&flags.input_rounding, "--input-rounding")?,
            constant_rounding: parse_on_off(&flags.const_rounding, "--const-rounding")?,
            neg_error: parse_on_off(&flags.neg_error, "--neg-error")?,
            merge_products: flags.merge_errors,
        },
        order: flags.order,
        subdivide_budget: budget,
        certify: flags.certify,
        max_joint_errors: flags.max_joint_errors,
        reduced_basis: !flags.full_basis,
        sdpa_dir,
        ..Default::default()
    })
}

fn load_program(path: &Path) -> Result<ProgramSpec, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let spec = parse_program(&text).map_err(|e| e.to_string())?;
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn write_certificates(res: &AnalysisResult, dir: &Path) -> Result<Vec<PathBuf>, String> {
    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for cert in &res.certificates {
        let path = dir.join(format!("{}.cert", cert.name));
        std::fs::write(&path, certificate_to_string(cert)).map_err(|e| e.to_string())?;
        out.push(path);
    }
    Ok(out)
}

fn run_analyze(path: &Path, flags: &AnalyzeFlags) -> Result<(), (u8, String)> {
    let spec = load_program(path).map_err(|e| (2, e))?;
    let opts = options_from_flags(flags, &spec).map_err(|e| (2, e))?;
    if let Some(cert_path) = &flags.check {
        return run_check(&spec, &opts, cert_path).map_err(|e| (3, e));
    }
    let res = analyze_spec(&spec, &opts).map_err(|e| (3, e.to_string()))?;
    let cert_paths = match &flags.output_dir {
        Some(dir) if !res.certificates.is_empty() => {
            write_certificates(&res, dir).map_err(|e| (3, e))?
        }
        _ => vec![],
    };
    if flags.json {
        let mut j = res.to_json();
        j["certificate_paths"] = serde_json::json!(cert_paths
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>());
        println!("{}", serde_json::to_string_pretty(&j).unwrap());
    } else {
        println!("benchmark     : {}", res.benchmark);
        println!("bound         : {:.6e}", res.bound_f64());
        println!(
            "interval      : [{:.6e}, {:.6e}]",
            rat_to_f64(&res.interval.lo),
            rat_to_f64(&res.interval.hi)
        );
        println!("order         : {}", res.order);
        println!("error vars    : {}", res.error_vars);
        println!("time          : {} ms", res.wall_ms);
        if !res.fallbacks.is_empty() {
            println!("fallbacks     : {}", res.fallbacks.join("; "));
        }
        if res.certificates.is_empty() {
            println!("certificates  : none (pass --certify)");
        } else {
            let mut paths = cert_paths
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>();
            paths.resize(res.certificates.len(), "<not written>".to_string());
            for (cert, p) in res.certificates.iter().zip(paths) {
                println!(
                    "certificate   : {} mu={} residual_lo={} -> {}",
                    cert.name,
                    to_decimal_string(&cert.mu, 6),
                    to_decimal_string(&cert.residual_bound.lo, 3),
                    p
                );
            }
        }
    }
    Ok(())
}

fn run_check(spec: &ProgramSpec, opts: &AnalysisOptions, cert_path: &Path) -> Result<(), String> {
    let text = std::fs::read_to_string(cert_path).map_err(|e| e.to_string())?;
    let cert = certificate_from_string(&text).map_err(|e| e.to_string())?;
    let ctx = fpsos::engine::rebuild_certificate_context(spec, opts, &cert.name)
        .map_err(|e| e.to_string())?;
    if ctx.objective != cert.objective {
        return Err("certificate does not match this program and option set".to_string());
    }
    let result = check_certificate(&cert.objective, &ctx.declared, &cert, &cert.domain)
        .map_err(|e| e.to_string())?;
    println!(
        "PASS {}: certified bound {} (residual [{}, {}], exact={})",
        cert.name,
        to_decimal_string(&result.certified_bound, 8),
        to_decimal_string(&result.residual.lo, 3),
        to_decimal_string(&result.residual.hi, 3),
        result.exact
    );
    Ok(())
}

fn run_sample(
    path: &Path,
    samples: usize,
    seed: u64,
    precision: &str,
    json: bool,
) -> Result<(), (u8, String)> {
    let spec = load_program(path).map_err(|e| (2, e))?;
    let format =
        format_from_name(precision).ok_or((2, format!("unknown precision `{precision}`")))?;
    let res =
        sample_program(&spec, format.precision, samples, seed).map_err(|e| (3, e.to_string()))?;
    if json {
        println!(
            "{}",
            serde_json::json!({
                "schema_version": fpsos::analysis::JSON_SCHEMA_VERSION,
                "benchmark": spec.name,
                "max_abs_error": rat_to_f64(&res.max_abs_error),
                "samples": res.samples_requested,
                "accepted": res.accepted,
                "boundary_probes": res.boundary_probes,
                "seed": res.seed,
            })
        );
    } else {
        println!(
            "{}: observed lower bound {:.6e} over {} samples (seed {})",
            spec.name,
            rat_to_f64(&res.max_abs_error),
            res.accepted,
            res.seed
        );
    }
    Ok(())
}

fn run_bench(
    suite_dir: &Path,
    flags: &AnalyzeFlags,
    sample_count: usize,
    skip: &str,
    include_excluded: bool,
) -> Result<(), (u8, String)> {
    let skip_set: Vec<&str> = skip.split(',').filter(|s| !s.is_empty()).collect();
    let mut files: Vec<PathBuf> = std::fs::read_dir(suite_dir)
        .map_err(|e| (2, format!("cannot read {}: {e}", suite_dir.display())))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().map(|x| x == "prog").unwrap_or(false))
        .collect();
    files.sort();
    let mut rows = Vec::new();
    let mut had_error = false;
    let mut soundness_violated = false;
    for file in &files {
        let stem = file.file_stem().unwrap().to_string_lossy().to_string();
        if skip_set.contains(&stem.as_str()) {
            continue;
        }
        let reference = bench::lookup(&stem);
        if let Some(r) = reference {
            if r.excluded && !include_excluded {
                rows.push(serde_json::json!({
                    "id": stem, "status": "skipped (reference ran out of memory)",
                }));
                continue;
            }
        }
        let started = std::time::Instant::now();
        let outcome = load_program(file).and_then(|spec| {
            let opts = options_from_flags(flags, &spec)?;
            let res = analyze_spec(&spec, &opts).map_err(|e| e.to_string())?;
            let sampled = if sample_count > 0 {
                Some(
                    sample_program(&spec, opts.format.precision, sample_count, 20_177)
                        .map_err(|e| e.to_string())?,
                )
            } else {
                None
            };
            Ok((res, sampled))
        });
        match outcome {
            Ok((res, sampled)) => {
                let bound = res.bound_f64();
                let sampled_val = sampled.as_ref().map(|s| rat_to_f64(&s.max_abs_error));
                let sound = sampled_val.map(|s| s <= bound).unwrap_or(true);
                if !sound {
                    soundness_violated = true;
                }
                let ratio = reference.and_then(|r| r.reference_bound).map(|rb| bound / rb);
                rows.push(serde_json::json!({
                    "id": stem,
                    "bound": bound,
                    "reference_bound": reference.and_then(|r| r.reference_bound),
                    "reference_lower": reference.map(|r| r.lower_bound),
                    "ratio_to_reference": ratio,
                    "sampled_lower": sampled_val,
                    "sound_vs_sampled": sound,
                    "order": res.order,
                    "error_vars": res.error_vars,
                    "fallbacks": res.fallbacks,
                    "wall_ms": started.elapsed().as_millis(),
                }));
            }
            Err(e) => {
                had_error = true;
                rows.push(serde_json::json!({ "id": stem, "status": "error", "error": e }));
            }
        }
    }
    if flags.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::json!({
                "schema_version": fpsos::analysis::JSON_SCHEMA_VERSION,
                "tool_version": fpsos::VERSION,
                "rows": rows,
            }))
            .unwrap()
        );
    } else {
        println!(
            "{:<12} {:>12} {:>12} {:>8} {:>12} {:>9} {:>9}",
            "benchmark", "bound", "reference", "ratio", "sampled", "time", "notes"
        );
        for row in &rows {
            if let Some(status) = row.get("status").and_then(|s| s.as_str()) {
                println!("{:<12} {status}", row["id"].as_str().unwrap_or("?"));
                continue;
            }
            println!(
                "{:<12} {:>12.3e} {:>12} {:>8} {:>12} {:>8}ms {:>9}",
                row["id"].as_str().unwrap_or("?"),
                row["bound"].as_f64().unwrap_or(f64::NAN),
                row["reference_bound"]
                    .as_f64()
                    .map(|v| format!("{v:.3e}"))
                    .unwrap_or_else(|| "-".to_string()),
                row["ratio_to_reference"]
                    .as_f64()
                    .map(|v| format!("{v:.2}x"))
                    .unwrap_or_else(|| "-".to_string()),
                row["sampled_lower"]
                    .as_f64()
                    .map(|v| format!("{v:.3e}"))
                    .unwrap_or_else(|| "-".to_string()),
                row["wall_ms"].as_u64().unwrap_or(0),
                if row["fallbacks"].as_array().map(|a| !a.is_empty()).unwrap_or(false) {
                    "fallback"
                } else {
                    ""
                },
            );
        }
    }
    if soundness_violated {
        return Err((3, "soundness check failed: a bound fell below a sampled error".to_string()));
    }
    if had_error {
        return Err((2, "some benchmarks failed".to_string()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Analyze { path, flags } => run_analyze(path, flags),
        Command::Sample { path, samples, seed, precision, json } => {
            run_sample(path, *samples, *seed, precision, *json)
        }
        Command::Bench { suite_dir, flags, sample_count, skip, include_excluded } => {
            run_bench(suite_dir, flags, *sample_count, skip, *include_excluded)
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
