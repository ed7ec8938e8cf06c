//! Command-line front end: channel inspection, exact capacity, closed-form
//! bounds, decomposition/witness verification, and Monte-Carlo sweeps.
//!
//! Exit codes: 0 success, 1 validation error (flags, configs, shapes),
//! 2 numerical-consistency failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use batchline::config::{
    BoundConfig, ChannelConfig, NetworkConfig, RegimeSpec, SimulationConfig, SweepConfig,
};
use batchline::{
    blahut_arimoto, bottleneck_decompose, canonical_bound, canonical_witness, collapse_chain,
    end_to_end, erasure_bound, format_sig, general_bound, mutual_information, pairwise_overlap,
    verify_collapse, BatchNetwork, BoundParams, BoundRegime, Error, ErrorCategory,
    InputDistribution,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Parser)]
#[command(
    name = "batchline",
    version,
    about = "Batched codes on line networks: capacity, converse bounds and simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to the JSON config for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the output to a file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format where applicable (default: text for inspect/capacity/
    /// verify, csv for bound/sweep, json for simulate).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Unit for information quantities in text output.
    #[arg(long, global = true, value_enum, default_value_t = Units::Nats)]
    units: Units,
    /// Overrides the config's rng_seed (simulate/sweep) and seeds the
    /// sampled input laws of verify.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance in nats: capacity convergence gap and the verify
    /// consistency thresholds.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Channel parameters: capacity, pairwise overlap floor, canonical witness.
    Inspect,
    /// Exact per-use rate of a network via the end-to-end matrix.
    Capacity,
    /// Closed-form converse bound for the configured regime.
    Bound,
    /// Numerical checks: collapse decomposition and collapse-chain witness.
    Verify,
    /// Monte-Carlo execution of a network.
    Simulate,
    /// Monte-Carlo sweep over network lengths against the regime bound.
    Sweep,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Units {
    Nats,
    Bits,
}

impl Units {
    fn scale(self, nats: f64) -> f64 {
        match self {
            Units::Nats => nats,
            Units::Bits => nats / LN_2,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }
}

enum Failure {
    Validation(String),
    Consistency(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e.category() {
            ErrorCategory::Validation => Failure::Validation(e.to_string()),
            ErrorCategory::Consistency => Failure::Consistency(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            // --help / --version
            emit(&e.to_string());
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Consistency(msg)) => {
            eprintln!("consistency failure: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let output = match cli.command {
        Command::Inspect => inspect(cli)?,
        Command::Capacity => capacity(cli)?,
        Command::Bound => bound(cli)?,
        Command::Verify => verify(cli)?,
        Command::Simulate => simulate(cli)?,
        Command::Sweep => sweep(cli)?,
    };
    match &cli.out {
        Some(path) => {
            fs::write(path, output).map_err(|e| {
                Failure::Validation(format!("cannot write {}: {e}", path.display()))
            })?;
            eprintln!("wrote {}", path.display());
        }
        None => emit(&output),
    }
    Ok(())
}

/// Writes to stdout, tolerating a closed pipe (e.g. piping into `head`).
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn load_config<T: serde::de::DeserializeOwned>(cli: &Cli) -> CliResult<T> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Validation("--config PATH is required".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Validation(format!("malformed config {}: {e}", path.display())))
}

fn format_or(cli: &Cli, default: Format) -> Format {
    cli.format.unwrap_or(default)
}

fn inspect(cli: &Cli) -> CliResult<String> {
    let cfg: ChannelConfig = load_config(cli)?;
    let link = cfg.build()?;
    let cap = blahut_arimoto(&link, cli.tol, batchline::infotheory::DEFAULT_MAX_ITER)?;
    if !cap.converged {
        return Err(Failure::Consistency(format!(
            "capacity iteration did not converge (gap {})",
            cap.gap_bound
        )));
    }
    let overlap = pairwise_overlap(&link);
    let witness = canonical_witness(&link);
    let u = cli.units;
    match format_or(cli, Format::Text) {
        Format::Json => {
            let value = serde_json::json!({
                "input_alphabet": link.input_alphabet().symbols(),
                "output_alphabet": link.output_alphabet().symbols(),
                "capacity": u.scale(cap.capacity_nats),
                "units": u.label(),
                "iterations": cap.iterations,
                "gap_bound": cap.gap_bound,
                "pairwise_overlap": overlap,
                "canonical_witness": witness.map(|w| serde_json::json!({
                    "output": link.output_alphabet().symbol(w.output),
                    "eps": w.eps,
                })),
            });
            Ok(format!("{value:#}\n"))
        }
        _ => {
            let mut out = String::new();
            out.push_str(&format!(
                "input alphabet:  {} symbols\noutput alphabet: {} symbols\n",
                link.num_inputs(),
                link.num_outputs()
            ));
            out.push_str(&format!(
                "capacity: {} {}/use ({} iterations, gap {})\n",
                format_sig(u.scale(cap.capacity_nats)),
                u.label(),
                cap.iterations,
                format_sig(cap.gap_bound)
            ));
            out.push_str(&format!(
                "pairwise overlap floor: {}\n",
                format_sig(overlap)
            ));
            match witness {
                Some(w) => out.push_str(&format!(
                    "canonical witness: output {:?} (eps {})\n",
                    link.output_alphabet().symbol(w.output),
                    format_sig(w.eps)
                )),
                None => out.push_str("canonical witness: none\n"),
            }
            Ok(out)
        }
    }
}

fn capacity(cli: &Cli) -> CliResult<String> {
    let cfg: NetworkConfig = load_config(cli)?;
    let net = cfg.build()?;
    let w = end_to_end(&net)?;
    let cap = blahut_arimoto(&w, cli.tol, batchline::infotheory::DEFAULT_MAX_ITER)?;
    if !cap.converged {
        return Err(Failure::Consistency(format!(
            "capacity iteration did not converge (gap {})",
            cap.gap_bound
        )));
    }
    let per_use = cap.capacity_nats / net.inner_blocklength() as f64;
    let u = cli.units;
    match format_or(cli, Format::Text) {
        Format::Json => {
            let value = serde_json::json!({
                "l": net.length(),
                "n": net.inner_blocklength(),
                "m": net.batch_size(),
                "rate_per_use": u.scale(per_use),
                "units": u.label(),
                "iterations": cap.iterations,
                "gap_bound": cap.gap_bound,
            });
            Ok(format!("{value:#}\n"))
        }
        _ => Ok(format!(
            "network: L={}, N={}, M={}\nrate: {} {}/use ({} iterations, gap {})\n",
            net.length(),
            net.inner_blocklength(),
            net.batch_size(),
            format_sig(u.scale(per_use)),
            u.label(),
            cap.iterations,
            format_sig(cap.gap_bound)
        )),
    }
}

fn evaluate_bound(regime: RegimeSpec, params: &BoundParams) -> CliResult<batchline::BoundValue> {
    Ok(match regime {
        RegimeSpec::Erasure => erasure_bound(params)?,
        RegimeSpec::Canonical => canonical_bound(params)?,
        RegimeSpec::General => general_bound(params)?,
    })
}

fn bound(cli: &Cli) -> CliResult<String> {
    let cfg: BoundConfig = load_config(cli)?;
    let lengths = cfg.lengths()?;
    let mut rows = Vec::with_capacity(lengths.len());
    for &l in &lengths {
        let params = cfg.params_at(l)?;
        let value = evaluate_bound(cfg.regime, &params)?;
        rows.push((params, value));
    }
    match format_or(cli, Format::Csv) {
        Format::Json => {
            let items: Vec<_> = rows
                .iter()
                .map(|(p, v)| {
                    serde_json::json!({
                        "regime": regime_name(cfg.regime),
                        "l": p.length,
                        "n": p.blocklength,
                        "m": p.batch_size,
                        "k": p.group,
                        "eps": p.eps,
                        "bound_nats": v.nats_per_use,
                        "log_bound": v.ln_nats_per_use,
                    })
                })
                .collect();
            Ok(format!("{:#}\n", serde_json::Value::Array(items)))
        }
        _ => {
            let mut out = String::from("regime,L,N,M,K,eps,bound_nats,log_bound\n");
            for (p, v) in &rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    regime_name(cfg.regime),
                    p.length,
                    p.blocklength,
                    p.batch_size,
                    p.group,
                    format_sig(p.eps),
                    format_sig(v.nats_per_use),
                    format_sig(v.ln_nats_per_use),
                ));
            }
            Ok(out)
        }
    }
}

fn regime_name(r: RegimeSpec) -> &'static str {
    match r {
        RegimeSpec::Erasure => "erasure",
        RegimeSpec::Canonical => "canonical",
        RegimeSpec::General => "general",
    }
}

fn verify(cli: &Cli) -> CliResult<String> {
    let cfg: NetworkConfig = load_config(cli)?;
    let net = cfg.build()?;
    let mut out = format!(
        "network: L={}, N={}, M={}\n",
        net.length(),
        net.inner_blocklength(),
        net.batch_size()
    );

    // collapse decomposition: reconstruction + zero information
    let witness_outputs: Vec<usize> = net
        .links()
        .iter()
        .enumerate()
        .map(|(i, q)| {
            canonical_witness(q).map(|w| w.output).ok_or_else(|| {
                Failure::Validation(format!("link {i} has no canonical witness output"))
            })
        })
        .collect::<CliResult<_>>()?;
    let d = bottleneck_decompose(&net, &witness_outputs)?;
    let w = end_to_end(&net)?;
    let mut reconstruction_err: f64 = 0.0;
    for x in 0..w.num_inputs() {
        for y in 0..w.num_outputs() {
            let back = d.p0 * d.w0.prob(x, y) + (1.0 - d.p0) * d.w1.prob(x, y);
            reconstruction_err = reconstruction_err.max((back - w.prob(x, y)).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed.unwrap_or(0));
    let mut max_mi: f64 = 0.0;
    for _ in 0..100 {
        let p = InputDistribution::random(w.num_inputs(), &mut rng);
        max_mi = max_mi.max(mutual_information(&p, &d.w0)?);
    }
    let tol = cli.tol;
    out.push_str(&format!("collapse probability p0: {}\n", format_sig(d.p0)));
    out.push_str(&format!(
        "reconstruction max error: {} (tolerance {tol:e})\n",
        format_sig(reconstruction_err)
    ));
    out.push_str(&format!(
        "max I(p, w0) over 100 sampled input laws: {} nats (tolerance {tol:e})\n",
        format_sig(max_mi)
    ));
    if reconstruction_err > tol {
        return Err(Failure::Consistency(format!(
            "decomposition reconstruction error {reconstruction_err:e} exceeds the tolerance {tol:e}"
        )));
    }
    if max_mi >= tol {
        return Err(Failure::Consistency(format!(
            "collapse conditional information {max_mi:e} is not below the tolerance {tol:e}"
        )));
    }

    // collapse-chain witness
    let n = net.inner_blocklength();
    let hops_needed = ((n as f64) * (net.q_in().len() as f64).log2()).ceil() as usize;
    if !net.scheme().is_deterministic() {
        out.push_str("collapse chain: skipped (randomized scheme)\n");
    } else if hops_needed > net.length() {
        out.push_str(&format!(
            "collapse chain: skipped (needs {hops_needed} hops, network has {})\n",
            net.length()
        ));
    } else {
        let chain = collapse_chain(&net, hops_needed)?;
        verify_collapse(&net, &chain)?;
        let label: Vec<String> = chain
            .final_output
            .iter()
            .map(|&s| net.q_out().symbol(s).to_string())
            .collect();
        out.push_str(&format!(
            "collapse chain: singleton after {} hop(s), trace {:?}, output {:?}, probability {} >= floor {}\n",
            chain.per_hop_noise.len(),
            chain.set_trace,
            label.join(""),
            format_sig(chain.probability),
            format_sig(chain.probability_lower_bound)
        ));
    }
    out.push_str("verify: ok\n");
    Ok(out)
}

fn simulate(cli: &Cli) -> CliResult<String> {
    let mut cfg: SimulationConfig = load_config(cli)?;
    if let Some(seed) = cli.seed {
        cfg.rng_seed = seed;
    }
    let net = cfg.network.build()?;
    let law = cfg.input_law.build()?;
    let report = batchline::simulate(&net, cfg.trials, cfg.rng_seed, &law)?;
    let n = net.inner_blocklength() as f64;
    match format_or(cli, Format::Json) {
        Format::Csv => Ok(format!(
            "L,trials,mi_nats_per_use,mi_stderr\n{},{},{},{}\n",
            net.length(),
            report.trials,
            format_sig(report.mi_estimate_nats / n),
            format_sig(report.mi_stderr / n),
        )),
        _ => {
            let value = serde_json::json!({
                "config": serde_json::to_value(&cfg)
                    .map_err(|e| Failure::Validation(e.to_string()))?,
                "report": {
                    "trials": report.trials,
                    "mi_nats_per_use": report.mi_estimate_nats / n,
                    "mi_stderr": report.mi_stderr / n,
                    "elapsed_secs": report.elapsed_secs,
                },
            });
            Ok(format!("{value:#}\n"))
        }
    }
}

fn sweep(cli: &Cli) -> CliResult<String> {
    let mut cfg: SweepConfig = load_config(cli)?;
    if let Some(seed) = cli.seed {
        cfg.rng_seed = seed;
    }
    let regime: BoundRegime = cfg.regime.into();
    let group = cfg.k.unwrap_or(1);
    let build = |l: usize| cfg.network_at(l).build();
    let bound_for = |net: &BatchNetwork| {
        let params = BoundParams::from_network(net, regime, group)?;
        Ok(match regime {
            BoundRegime::Erasure => erasure_bound(&params)?.nats_per_use,
            BoundRegime::Canonical => canonical_bound(&params)?.nats_per_use,
            BoundRegime::General => general_bound(&params)?.nats_per_use,
        })
    };
    let law = cfg.input_law.build()?;
    let rows = batchline::sweep(
        &cfg.l_values,
        build,
        bound_for,
        cfg.trials,
        cfg.rng_seed,
        &law,
    )?;
    match format_or(cli, Format::Csv) {
        Format::Json => {
            let items: Vec<_> = rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "l": r.length,
                        "trials": r.trials,
                        "mi_nats_per_use": r.mi_nats_per_use,
                        "mi_stderr": r.mi_stderr_per_use,
                        "bound_nats_per_use": r.bound_nats_per_use,
                        "ratio": r.ratio,
                    })
                })
                .collect();
            Ok(format!("{:#}\n", serde_json::Value::Array(items)))
        }
        _ => Ok(batchline::sweep_csv(&rows)),
    }
}
