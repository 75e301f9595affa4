use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use qgear_core::bench::{self, BenchSpec, MonotonicClock, Workload};
use qgear_core::generators::{build_qft, generate_random_gate_list, QftSpec, RandomSpec};
use qgear_core::ir::container::{read_container, write_container};
use qgear_core::ir::{encode_circuits, validate, CircuitSet};
use qgear_core::partition::{execute_distributed, DistOptions};
use qgear_core::qasm::parse_qasm;
use qgear_core::qcrank::{self, ImageGray, QCrankPlan};
use qgear_core::statevec::{basis_label, exact_probabilities, CountsTable, Precision, SimOptions};

#[derive(Parser)]
#[command(name = "qgear", version, about = "Tensor-encoded circuit simulation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert an OpenQASM 2.0 file to a circuit container.
    Import {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate one circuit from a container and write counts as JSON.
    Run(RunArgs),
    /// Generate synthetic workloads.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Encode images as circuits or decode measured counts back to images.
    #[command(subcommand)]
    Qcrank(QcrankCommand),
    /// Time workloads across qubit counts, precisions and worker counts.
    ///
    /// Writes one CSV row per run as it finishes. With --check-scaling the
    /// per-series slope of log2(median time) against qubit count must lie in
    /// [0.8, 1.3]. GPU-versus-CPU speedups of about 400x, 42-qubit runs on
    /// 1024 GPUs and 3M to 98M-shot image runs need hardware far beyond one
    /// host; this sweep checks the scaling shape instead.
    Bench(BenchArgs),
    /// Check a container against the tensor layout rules.
    Validate {
        #[arg(long)]
        circuits: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    circuits: PathBuf,
    /// Which circuit of the container to run.
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// 0 selects exact mode: probabilities instead of counts.
    #[arg(long, default_value_t = 0)]
    shots: u64,
    #[arg(long, default_value = "fp64")]
    precision: Precision,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "QGEAR_WORKERS", default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Random blocks of RY, RZ and CX on random qubit pairs.
    Random {
        #[arg(long)]
        qubits: usize,
        #[arg(long)]
        blocks: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of circuits; circuit i uses seed + i.
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Append a MEASURE on every qubit.
        #[arg(long)]
        measure: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Quantum Fourier transform without the final swaps.
    Qft {
        #[arg(long)]
        qubits: usize,
        #[arg(long)]
        reversed: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum QcrankCommand {
    Encode {
        /// Binary PGM (P5, maxval 255).
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        addr: usize,
        #[arg(long)]
        data: usize,
        #[arg(long)]
        out: PathBuf,
        /// Plan JSON path; defaults to the container path with `.plan.json`.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, default_value_t = qcrank::DEFAULT_SHOTS_PER_ADDRESS)]
        shots_per_address: u64,
    },
    Decode {
        /// Output of `qgear run`.
        #[arg(long)]
        counts: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Original image, for error metrics in the report.
        #[arg(long)]
        source: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "random")]
    workload: Workload,
    /// `A..B` (inclusive) or a single count.
    #[arg(long, default_value = "10..14")]
    qubits: String,
    #[arg(long, default_value_t = 100)]
    blocks: usize,
    /// Data qubits for the qcrank workload.
    #[arg(long, default_value_t = 2)]
    data: usize,
    #[arg(long, value_delimiter = ',', default_value = "fp64")]
    precision: Vec<Precision>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    workers: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    shots: u64,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Run independent circuits concurrently.
    #[arg(long)]
    parallel_circuits: bool,
    /// Exit with status 2 unless every series scales with slope in [0.8, 1.3].
    #[arg(long)]
    check_scaling: bool,
}

fn parse_range(s: &str) -> Result<(usize, usize)> {
    let parse = |t: &str| t.trim().parse::<usize>().with_context(|| format!("bad qubit count {t:?}"));
    match s.split_once("..") {
        Some((a, b)) => Ok((parse(a)?, parse(b.trim_start_matches('='))?)),
        None => {
            let n = parse(s)?;
            Ok((n, n))
        }
    }
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn save_set(path: &Path, set: &CircuitSet) -> Result<()> {
    write_container(path, set).with_context(|| format!("writing {}", path.display()))
}

fn import(input: &Path, out: &Path) -> Result<()> {
    let src = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let parsed = parse_qasm(&src);
    for d in &parsed.diagnostics {
        eprintln!("{}: {d}", input.display());
    }
    let Some(list) = parsed.circuit else {
        bail!("{} has errors; nothing written", input.display());
    };
    let mut set = encode_circuits(std::slice::from_ref(&list))?;
    if let Some(name) = input.file_name() {
        set.metadata.insert("source".into(), name.to_string_lossy().into_owned());
    }
    save_set(out, &set)?;
    eprintln!("{} qubits, {} gates -> {}", list.n_qubits, list.gates.len(), out.display());
    Ok(())
}

fn run(args: &RunArgs) -> Result<()> {
    let set = read_container(&args.circuits).with_context(|| format!("reading {}", args.circuits.display()))?;
    let circuit = set
        .circuits
        .get(args.index)
        .ok_or_else(|| anyhow!("container has {} circuits, no index {}", set.len(), args.index))?;
    let options = SimOptions { precision: args.precision, shots: args.shots, rng_seed: args.seed, ..SimOptions::default() };
    let dist = DistOptions::new(args.workers);
    let start = Instant::now();
    let out = execute_distributed(circuit, &dist, &options)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    let n = out.state.n_qubits();
    let messages: Vec<Value> = out
        .stats
        .per_worker
        .iter()
        .enumerate()
        .map(|(w, s)| json!({"worker": w, "sent": s.messages_sent, "received": s.messages_received, "amplitudes_sent": s.amplitudes_sent}))
        .collect();
    let mut doc = json!({
        "counts": out.counts.as_ref().map_or_else(|| json!({}), |c| json!(c.counts)),
        "metadata": {
            "n_qubits": n,
            "shots": args.shots,
            "seed": args.seed,
            "precision": args.precision.as_str(),
            "workers": args.workers,
            "exchange_gates": out.stats.exchange_gates,
            "messages": messages,
            "wall_time_ms": wall_ms,
        }
    });
    if args.shots == 0 {
        let probs: BTreeMap<String, f64> = exact_probabilities(&out.state)
            .into_iter()
            .enumerate()
            .filter(|(_, p)| *p > 0.0)
            .map(|(i, p)| (basis_label(i, n), p))
            .collect();
        doc["probabilities"] = json!(probs);
    }
    write_json(&args.out, &doc)?;
    eprintln!("{n} qubits, {:.3} ms, {} worker(s) -> {}", wall_ms, args.workers, args.out.display());
    Ok(())
}

fn generate(cmd: &GenCommand) -> Result<()> {
    let (lists, out, meta) = match cmd {
        GenCommand::Random { qubits, blocks, seed, count, measure, out } => {
            let lists = (0..*count)
                .map(|i| {
                    generate_random_gate_list(&RandomSpec {
                        n_qubits: *qubits,
                        n_blocks: *blocks,
                        seed: seed.wrapping_add(i),
                        include_measure: *measure,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            (lists, out, vec![("generator", "random".to_string()), ("seed", seed.to_string()), ("blocks", blocks.to_string())])
        }
        GenCommand::Qft { qubits, reversed, out } => (
            vec![build_qft(&QftSpec { n_qubits: *qubits, reversed: *reversed })?],
            out,
            vec![("generator", "qft".to_string()), ("reversed", reversed.to_string())],
        ),
    };
    let mut set = encode_circuits(&lists)?;
    for (k, v) in meta {
        set.metadata.insert(k.into(), v);
    }
    save_set(out, &set)?;
    eprintln!("{} circuit(s), capacity {} -> {}", set.len(), set.capacity, out.display());
    Ok(())
}

fn counts_from_json(doc: &Value) -> Result<Option<CountsTable>> {
    let Some(map) = doc.get("counts").and_then(Value::as_object) else {
        bail!("counts file has no `counts` object");
    };
    if map.is_empty() {
        return Ok(None);
    }
    let n = map.keys().next().map_or(0, String::len);
    let mut table = CountsTable::new(n);
    for (k, v) in map {
        let c = v.as_u64().ok_or_else(|| anyhow!("count for {k:?} is not a non-negative integer"))?;
        table.add(k.clone(), c);
    }
    Ok(Some(table))
}

fn probabilities_from_json(doc: &Value, n_qubits: usize) -> Result<Vec<f64>> {
    let map = doc
        .get("probabilities")
        .and_then(Value::as_object)
        .ok_or_else(|| anyhow!("counts file has neither counts nor probabilities"))?;
    let mut probs = vec![0.0; 1 << n_qubits];
    for (k, v) in map {
        let i = qgear_core::statevec::parse_label(k)
            .filter(|&i| k.len() == n_qubits && i < probs.len())
            .ok_or_else(|| anyhow!("probability key {k:?} does not fit {n_qubits} qubits"))?;
        probs[i] = v.as_f64().ok_or_else(|| anyhow!("probability for {k:?} is not a number"))?;
    }
    Ok(probs)
}

fn qcrank_cmd(cmd: &QcrankCommand) -> Result<()> {
    match cmd {
        QcrankCommand::Encode { image, addr, data, out, plan, shots_per_address } => {
            let img = ImageGray::read(image).with_context(|| format!("reading {}", image.display()))?;
            let p = QCrankPlan::for_image(&img, *addr, *data)?.with_shots_per_address(*shots_per_address);
            let mut set = qcrank::build_batch(std::slice::from_ref(&img), *addr, *data)?;
            set.metadata.insert("generator".into(), "qcrank".into());
            set.metadata.insert("plan".into(), serde_json::to_string(&p)?);
            save_set(out, &set)?;
            let plan_path = plan.clone().unwrap_or_else(|| {
                let mut s = out.clone().into_os_string();
                s.push(".plan.json");
                PathBuf::from(s)
            });
            write_json(&plan_path, &serde_json::to_value(p)?)?;
            eprintln!(
                "{} pixels on {} qubits, suggested shots {} -> {} (plan {})",
                img.len(),
                p.n_qubits(),
                p.shots(),
                out.display(),
                plan_path.display()
            );
            Ok(())
        }
        QcrankCommand::Decode { counts, plan, out, report, source } => {
            let plan: QCrankPlan = serde_json::from_str(&fs::read_to_string(plan)?).context("parsing plan")?;
            let doc: Value = serde_json::from_str(&fs::read_to_string(counts)?).context("parsing counts")?;
            let src = source.as_deref().map(ImageGray::read).transpose()?;
            let (rep, img) = match counts_from_json(&doc)? {
                Some(table) => qcrank::decode_counts(&table, &plan, src.as_ref())?,
                None => qcrank::decode_exact(&probabilities_from_json(&doc, plan.n_qubits())?, &plan, src.as_ref())?,
            };
            img.write(out)?;
            for a in &rep.empty_addresses {
                eprintln!("warning: address {a} received no shots; its pixels decode to mid-gray");
            }
            if let Some(path) = report {
                write_json(path, &serde_json::to_value(&rep)?)?;
            }
            match rep.correlation {
                Some(c) => eprintln!("decoded {} pixels, correlation {c:.4} -> {}", img.len(), out.display()),
                None => eprintln!("decoded {} pixels -> {}", img.len(), out.display()),
            }
            Ok(())
        }
    }
}

fn bench_cmd(args: &BenchArgs) -> Result<ExitCode> {
    let (lo, hi) = parse_range(&args.qubits)?;
    let spec = BenchSpec {
        workload: args.workload,
        qubits_min: lo,
        qubits_max: hi,
        blocks: args.blocks,
        n_data: args.data,
        precisions: args.precision.clone(),
        workers: args.workers.clone(),
        shots: args.shots,
        reps: args.reps,
        seed: args.seed,
        parallel_circuits: args.parallel_circuits,
        ..BenchSpec::default()
    };
    let out = bench::run_suite_to_csv(&spec, &MonotonicClock::new(), &args.csv)?;
    eprintln!("{} records -> {}", out.records.len(), args.csv.display());
    if let Some(svg) = &args.svg {
        fs::write(svg, bench::emit_chart(&out.records)?)?;
    }
    match bench::fit_scaling(&out.records) {
        Ok(fits) => {
            let mut ok = true;
            for f in &fits {
                eprintln!("{}: slope {:.3} ({})", f.series(), f.slope, if f.conformant { "conformant" } else { "non-conformant" });
                ok &= f.conformant;
            }
            if args.check_scaling && !ok {
                return Ok(ExitCode::from(2));
            }
        }
        Err(e) if args.check_scaling => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(2));
        }
        Err(_) => {}
    }
    Ok(ExitCode::SUCCESS)
}

fn validate_cmd(path: &Path) -> Result<ExitCode> {
    let set = read_container(path).with_context(|| format!("reading {}", path.display()))?;
    let report = validate(&set);
    for v in &report.violations {
        println!("{v}");
    }
    if report.is_valid() {
        println!("{}: {} circuit(s), capacity {}, valid", path.display(), set.len(), set.capacity);
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{}: {} violation(s)", path.display(), report.violations.len());
        Ok(ExitCode::FAILURE)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Import { input, out } => import(input, out).map(|_| ExitCode::SUCCESS),
        Command::Run(args) => run(args).map(|_| ExitCode::SUCCESS),
        Command::Gen(cmd) => generate(cmd).map(|_| ExitCode::SUCCESS),
        Command::Qcrank(cmd) => qcrank_cmd(cmd).map(|_| ExitCode::SUCCESS),
        Command::Bench(args) => bench_cmd(args),
        Command::Validate { circuits } => validate_cmd(circuits),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
