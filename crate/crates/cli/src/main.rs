//! `rasm`: enumerate rule-generated species, verify operator identities,
//! simulate and marginalize the induced Markov chains.

mod output;
mod system;
mod verify;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use rasm::canon::CanonicalKey;
use rasm::json::{rule_set_to_json, write_table_csv, write_table_json};
use rasm::markov::{
    build_generator, derive_marginal_generator, dtmc_propagate, embedded_dtmc, export_distribution, marginal_propagate,
    mean_and_stderr, ssa_ensemble, Absorbing, Distribution, Format, Horizon, TransitionSet,
};
use rasm::operator::StateBasis;
use rasm::species::{count_patterns, expand, CountTable, GenerationTable};

use output::{emit, resolve_format, write_atomic};
use system::{resolve, System, SystemArgs};
use verify::Suite;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) | CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Domain(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

fn domain<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Domain(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rasm",
    version,
    about = "Stochastic graph rewriting: species, operator identities, Markov chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Expand generations from the initial state and print g_n.
    Enumerate {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 5)]
        generations: usize,
        /// Generation table output file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Check a suite of identities exactly on a truncated basis.
    Verify {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, value_enum)]
        suite: Suite,
        /// Interior generations checked; the basis extends beyond as needed.
        #[arg(long)]
        depth: Option<usize>,
        /// Decay coefficient of O_P3 in the P3 relation.
        #[arg(long, default_value_t = 3, allow_hyphen_values = true)]
        p3_decay: i64,
    },
    /// Run an ensemble of stochastic simulations.
    Ssa {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, conflicts_with = "time")]
        steps: Option<usize>,
        #[arg(long)]
        time: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        /// JSONL trajectory output file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Propagate the pattern-count jump chain.
    Marginal {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        steps: usize,
        /// Generations used to fit the count-lattice generator.
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Joint (P2, P3) distributions as CSV plus a gnuplot script.
    Plotdata {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, value_delimiter = ',', default_value = "3,4,5")]
        steps: Vec<usize>,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Write the system's rule set as JSON.
    Rules {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the state basis, generator and jump chain for inspection.
    Dump {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("RASM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("RASM_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| run(cli.command));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cmd: Command) -> Result<u8, CliError> {
    match cmd {
        Command::Enumerate {
            system,
            generations,
            out,
            format,
        } => enumerate(&resolve(&system)?, generations, out.as_deref(), format.map(Into::into)),
        Command::Verify {
            system,
            suite,
            depth,
            p3_decay,
        } => {
            let sys = resolve(&system)?;
            let checks = verify::run(&sys, suite, depth.unwrap_or(suite.default_depth()), p3_decay)?;
            verify::print_table(suite, &checks);
            Ok(if checks.iter().all(|c| c.passed) { 0 } else { 1 })
        }
        Command::Ssa {
            system,
            steps,
            time,
            samples,
            seed,
            out,
        } => ssa(&resolve(&system)?, steps, time, samples, seed, out.as_deref()),
        Command::Marginal {
            system,
            steps,
            depth,
            out,
            format,
        } => marginal(&resolve(&system)?, steps, depth, out.as_deref(), format.map(Into::into)),
        Command::Plotdata {
            system,
            steps,
            depth,
            out_dir,
        } => plotdata(&resolve(&system)?, &steps, depth, &out_dir),
        Command::Rules { system, out } => {
            let sys = resolve(&system)?;
            let j = rule_set_to_json(&sys.types, &sys.rules, Some(&sys.initial), sys.constraints.as_ref());
            let mut bytes = serde_json::to_vec_pretty(&j).map_err(domain)?;
            bytes.push(b'\n');
            emit(out.as_deref(), &bytes)?;
            Ok(0)
        }
        Command::Dump { system, depth, out_dir } => dump(&resolve(&system)?, depth, &out_dir),
    }
}

fn table(sys: &System, depth: usize) -> Result<(GenerationTable, CountTable), CliError> {
    let t = expand(&sys.rules, &sys.initial, depth, sys.semantics, sys.constraints.as_ref()).map_err(domain)?;
    let c = count_patterns(&t, &sys.observables);
    Ok((t, c))
}

fn enumerate(sys: &System, generations: usize, out: Option<&Path>, format: Option<Format>) -> Result<u8, CliError> {
    let (t, c) = table(sys, generations)?;
    if let Some(path) = out {
        let mut bytes = Vec::new();
        match resolve_format(format, Some(path), Format::Json) {
            Format::Json => write_table_json(&t, Some(&c), &mut bytes),
            Format::Csv => write_table_csv(&t, Some(&c), &mut bytes),
        }
        .map_err(domain)?;
        write_atomic(path, &bytes)?;
    }
    for n in 0..=generations {
        let states = t.generation(n).map_err(domain)?.len();
        println!("g_{n} = {}  ({states} states)", t.total(n));
    }
    Ok(0)
}

/// Exact jump-chain distribution after `steps` steps, on the states the chain
/// can reach.
fn exact_after(sys: &System, steps: usize) -> Result<Distribution<CanonicalKey>, CliError> {
    let t = expand(&sys.rules, &sys.initial, steps, sys.semantics, sys.constraints.as_ref()).map_err(domain)?;
    let basis = Arc::new(StateBasis::from_table(&t, steps));
    let ts = TransitionSet::new(sys.rules.clone(), sys.semantics).map_err(domain)?;
    let d = embedded_dtmc(&ts, &basis, Absorbing::SelfLoop);
    dtmc_propagate(&d, &sys.initial.canonical_form(), steps).map_err(domain)
}

/// Largest step count for which the exact comparison is attempted.
const EXACT_STEP_LIMIT: usize = 8;

fn ssa(
    sys: &System,
    steps: Option<usize>,
    time: Option<f64>,
    samples: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<u8, CliError> {
    let horizon = match (steps, time) {
        (Some(n), None) => Horizon::steps(n),
        (None, Some(t)) if t >= 0.0 && t.is_finite() => Horizon::time(t),
        (None, Some(t)) => return Err(CliError::Usage(format!("bad --time {t}"))),
        _ => return Err(CliError::Usage("exactly one of --steps and --time is required".into())),
    };
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let ts = TransitionSet::new(sys.rules.clone(), sys.semantics).map_err(domain)?;
    let runs = ssa_ensemble(&ts, &sys.initial, horizon, seed, samples, &sys.observables);
    let names = sys.names();
    if let Some(path) = out {
        let mut bytes = Vec::new();
        for r in &runs {
            r.write_jsonl(&names, &mut bytes).map_err(domain)?;
        }
        write_atomic(path, &bytes)?;
    }
    println!("samples {samples}, seed {seed}");
    for (i, name) in names.iter().enumerate() {
        let xs: Vec<f64> = runs.iter().map(|r| r.last().counts[i] as f64).collect();
        let (m, se) = mean_and_stderr(&xs);
        println!("final {name}: mean {m:.6} stderr {se:.6}");
    }
    let times: Vec<f64> = runs.iter().map(|r| r.last().time).collect();
    let (m, se) = mean_and_stderr(&times);
    println!("last jump time: mean {m:.6} stderr {se:.6}");

    if let Some(n) = steps.filter(|&n| n <= EXACT_STEP_LIMIT) {
        let exact = exact_after(sys, n)?;
        let probs = exact.to_float_map();
        let mut freq: BTreeMap<&CanonicalKey, usize> = BTreeMap::new();
        for r in &runs {
            *freq.entry(&r.last().state).or_default() += 1;
        }
        let outside: usize = freq
            .iter()
            .filter(|(k, _)| !probs.contains_key(**k))
            .map(|(_, c)| c)
            .sum();
        let total = samples as f64;
        let chi2: f64 = probs
            .iter()
            .map(|(k, p)| {
                let e = p * total;
                let o = freq.get(k).copied().unwrap_or(0) as f64;
                (o - e).powi(2) / e
            })
            .sum();
        let df = probs.len().saturating_sub(1);
        let p = if outside > 0 {
            0.0
        } else if df == 0 {
            1.0
        } else {
            1.0 - ChiSquared::new(df as f64).map_err(domain)?.cdf(chi2)
        };
        println!(
            "jump chain at step {n}: {} states, chi-square {chi2:.4}, df {df}, p {p:.4}, outside support {outside}",
            probs.len()
        );
    }
    Ok(0)
}

fn marginal_table(sys: &System, depth: usize) -> Result<(rasm::markov::MarginalGenerator, Vec<u64>), CliError> {
    if sys.observables.is_empty() {
        return Err(CliError::Usage(
            "the system has no observables to marginalize on".into(),
        ));
    }
    let (t, c) = table(sys, depth)?;
    let mg = derive_marginal_generator(&t, &c).map_err(domain)?;
    let c0 = c
        .get(&sys.initial.canonical_form())
        .expect("initial state is counted")
        .to_vec();
    Ok((mg, c0))
}

fn marginal(
    sys: &System,
    steps: usize,
    depth: usize,
    out: Option<&Path>,
    format: Option<Format>,
) -> Result<u8, CliError> {
    let (mg, c0) = marginal_table(sys, depth)?;
    let d = marginal_propagate(&mg, &c0, steps).map_err(domain)?;
    let mut bytes = Vec::new();
    export_distribution(&d, &mg.names, resolve_format(format, out, Format::Csv), &mut bytes).map_err(domain)?;
    emit(out, &bytes)?;
    if out.is_some() {
        println!("{mg}");
        println!("step {steps}: {} count vectors", d.len());
    }
    Ok(0)
}

fn plotdata(sys: &System, steps: &[usize], depth: usize, out_dir: &Path) -> Result<u8, CliError> {
    sys.require(&["P2", "P3"])?;
    let (mg, c0) = marginal_table(sys, depth)?;
    let at = |name: &str| mg.names.iter().position(|n| n == name).expect("required above");
    let (i2, i3) = (at("P2"), at("P3"));
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let names = vec!["P2".to_string(), "P3".to_string()];
    let mut script = String::from("set datafile separator ','\nset xlabel 'n_P2'\nset ylabel 'n_P3'\n");
    writeln!(script, "set multiplot layout 1,{}", steps.len()).unwrap();
    for &n in steps {
        let d = marginal_propagate(&mg, &c0, n).map_err(domain)?;
        if !d.is_normalized() {
            return Err(CliError::Domain(format!("distribution at step {n} is not normalized")));
        }
        let joint = d.marginalize(|k| vec![k[i2], k[i3]]);
        let file = format!("counts_n{n}.csv");
        let mut bytes = Vec::new();
        export_distribution(&joint, &names, Format::Csv, &mut bytes).map_err(domain)?;
        write_atomic(&out_dir.join(&file), &bytes)?;
        writeln!(script, "set title 'n = {n}'").unwrap();
        writeln!(
            script,
            "plot '{file}' skip 1 using 1:2:3 with points pointtype 5 pointsize 1 palette notitle"
        )
        .unwrap();
        println!("{file}: {} points", joint.len());
    }
    script.push_str("unset multiplot\n");
    write_atomic(&out_dir.join("counts.gp"), script.as_bytes())?;
    println!("counts.gp");
    Ok(0)
}

fn dump(sys: &System, depth: usize, out_dir: &Path) -> Result<u8, CliError> {
    let (t, _) = table(sys, depth)?;
    let basis = Arc::new(StateBasis::from_table(&t, depth));
    let ts = TransitionSet::new(sys.rules.clone(), sys.semantics).map_err(domain)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let mut manifest = serde_json::to_vec_pretty(&basis.manifest_json()).map_err(domain)?;
    manifest.push(b'\n');
    write_atomic(&out_dir.join("basis.json"), &manifest)?;
    for (file, op) in [
        ("generator.csv", build_generator(&ts, &basis)),
        ("dtmc.csv", embedded_dtmc(&ts, &basis, Absorbing::SelfLoop)),
    ] {
        let mut bytes = Vec::new();
        op.write_csv(&mut bytes).map_err(domain)?;
        write_atomic(&out_dir.join(file), &bytes)?;
    }
    let complete = (0..basis.len()).filter(|&j| basis.generation(j) < depth).count();
    println!("{} states, {complete} with complete columns", basis.len());
    Ok(0)
}
