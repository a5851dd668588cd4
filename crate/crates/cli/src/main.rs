use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use cournot_la::dispatch::{clear_market, kkt_check};
use cournot_la::harness::{
    read_trace_csv, summarize, sweep, write_trace_csv, Benchmark, RunTrace, ScenarioSpec, Stagger, DEFAULT_TAIL_WINDOW,
};
use cournot_la::market::LineId;
use cournot_la::oracle::{best_response, iterate_nash};
use cournot_la::scenario::ScenarioFile;
use cournot_la::{Bids, Market};

#[derive(Parser)]
#[command(
    name = "cournot-la",
    version,
    about = "Learning-automata bidding in a DC-network Cournot market"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clear the market for a fixed bid profile.
    Clear {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated bids in supplier order, MW.
        #[arg(long, value_delimiter = ',', required = true)]
        bids: Vec<f64>,
        /// Override a line limit, `1-3=16` or `3=16`; `none` removes it.
        #[arg(long = "line-cap")]
        line_caps: Vec<String>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Iterated grid best response equilibrium.
    Nash {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 1.0)]
        grid: f64,
        #[arg(long, default_value_t = 200)]
        max_rounds: usize,
        /// Starting bids; defaults to each supplier's midpoint.
        #[arg(long, value_delimiter = ',')]
        initial: Option<Vec<f64>>,
        #[arg(long, default_value = "nash.csv")]
        csv: PathBuf,
        /// Write the result as a benchmark file for `report`.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run learning experiments.
    Learn {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Sweep over these seeds instead of `--seed`.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = StaggerArg::None)]
        stagger: StaggerArg,
        #[arg(long, default_value_t = DEFAULT_TAIL_WINDOW)]
        tail: u64,
        /// Override the iteration limit from the scenario file.
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long, default_value_t = 1.0)]
        grid: f64,
    },
    /// Summarize a trace CSV against a benchmark JSON.
    Report {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        benchmark: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TAIL_WINDOW)]
        tail: u64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Print the bundled 3-bus scenario file.
    Scenario,
}

#[derive(clap::Args)]
struct ScenarioArgs {
    /// Scenario JSON; the bundled 3-bus system when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Apply the scenario's `congestion` line limits.
    #[arg(long)]
    congested: bool,
}

impl ScenarioArgs {
    fn load(&self) -> Result<(ScenarioFile, Market)> {
        let file = match &self.scenario {
            Some(p) => ScenarioFile::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => ScenarioFile::threebus(),
        };
        let market = file.market(self.congested)?;
        Ok((file, market))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Rationality,
    Convergence,
}

#[derive(Clone, Copy, ValueEnum)]
enum StaggerArg {
    None,
    RoundRobin,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Clear {
            scenario,
            bids,
            line_caps,
            csv,
        } => clear(&scenario, bids, &line_caps, csv.as_deref()),
        Command::Nash {
            scenario,
            grid,
            max_rounds,
            initial,
            csv,
            json,
        } => nash(&scenario, grid, max_rounds, initial, &csv, json.as_deref()),
        Command::Learn {
            scenario,
            mode,
            seed,
            seeds,
            out,
            stagger,
            tail,
            iterations,
            grid,
        } => learn(
            &scenario,
            mode,
            seeds.unwrap_or_else(|| vec![seed]),
            &out,
            stagger,
            tail,
            iterations,
            grid,
        ),
        Command::Report {
            trace,
            benchmark,
            tail,
            json,
        } => report(&trace, &benchmark, tail, json.as_deref()),
        Command::Scenario => {
            println!("{}", ScenarioFile::threebus().to_json()?);
            Ok(true)
        }
    }
}

fn apply_line_caps(mut market: Market, caps: &[String]) -> Result<Market> {
    for spec in caps {
        let (line, value) = spec
            .split_once('=')
            .with_context(|| format!("line cap `{spec}` is not LINE=MW"))?;
        let id = market.network().find_line(line)?;
        let cap = match value.trim() {
            "none" | "null" | "inf" => None,
            v => Some(v.parse::<f64>().with_context(|| format!("bad capacity in `{spec}`"))?),
        };
        market = market.with_line_capacity(id, cap)?;
    }
    Ok(market)
}

fn clear(args: &ScenarioArgs, bids: Vec<f64>, caps: &[String], csv: Option<&Path>) -> Result<bool> {
    let (_, market) = args.load()?;
    let market = apply_line_caps(market, caps)?;
    let bids = Bids::new(bids);
    let r = clear_market(&market, &bids)?;
    let net = market.network();

    match r.uniform_price() {
        Some(p) => println!("uniform price {p:.4} $/MWh (no binding lines)"),
        None => println!("congested: nodal prices differ"),
    }
    println!("{:>6} {:>12} {:>12} {:>12}", "bus", "gen MW", "demand MW", "LMP $/MWh");
    for b in 0..net.bus_count {
        let gen: f64 = market
            .suppliers()
            .iter()
            .zip(&bids.quantities)
            .filter(|(s, _)| s.node.0 == b)
            .map(|(_, q)| *q)
            .sum();
        println!(
            "{:>6} {:>12.3} {:>12.3} {:>12.4}",
            net.bus_labels[b], gen, r.bus_demands[b], r.lmps[b]
        );
    }
    println!("{:>6} {:>12} {:>12} {:>12}", "line", "flow MW", "limit MW", "binding");
    for (l, line) in net.lines.iter().enumerate() {
        let binding = r
            .binding_lines
            .iter()
            .find(|b| b.line.0 == l)
            .map_or(String::new(), |b| format!("{:?} μ={:.4}", b.direction, b.multiplier));
        let cap = line.capacity.map_or("-".to_string(), |c| format!("{c:.3}"));
        println!(
            "{:>6} {:>12.3} {:>12} {:>12}",
            net.line_label(LineId(l)),
            r.flows[l],
            cap,
            binding
        );
    }
    println!("{:>8} {:>12} {:>12}", "supplier", "LMP", "profit $/h");
    for id in market.supplier_ids() {
        println!(
            "{:>8} {:>12.4} {:>12.1}",
            market.supplier(id).id,
            r.supplier_lmp(&market, id),
            r.supplier_profit(&market, &bids, id)?
        );
    }
    let kkt = kkt_check(&market, &bids, &r);
    println!(
        "welfare {:.2} $/h, KKT max violation {:.2e}",
        r.objective, kkt.max_violation
    );

    if let Some(path) = csv {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["kind", "id", "value", "lmp"])?;
        for b in 0..net.bus_count {
            w.write_record([
                "bus_demand",
                &net.bus_labels[b].to_string(),
                &r.bus_demands[b].to_string(),
                &r.lmps[b].to_string(),
            ])?;
        }
        for l in 0..net.lines.len() {
            w.write_record(["line_flow", &net.line_label(LineId(l)), &r.flows[l].to_string(), ""])?;
        }
        w.flush()?;
    }
    Ok(true)
}

fn nash(
    args: &ScenarioArgs,
    grid: f64,
    max_rounds: usize,
    initial: Option<Vec<f64>>,
    csv: &Path,
    json: Option<&Path>,
) -> Result<bool> {
    let (_, market) = args.load()?;
    let start = initial.map(Bids::new).unwrap_or_else(|| market.midpoint_bids());
    let n = iterate_nash(&market, grid, max_rounds, &start)?;
    println!(
        "iterated best response: {} after {} sweeps (grid {} MW)",
        if n.converged { "converged" } else { "NOT converged" },
        n.iterations,
        grid
    );
    println!(
        "{:>8} {:>11} {:>12} {:>10}",
        "supplier", "action MW", "profit $/h", "LMP"
    );
    let mut w = csv::Writer::from_path(csv)?;
    w.write_record(["supplier", "quantity_mw", "profit_per_h", "lmp"])?;
    for (k, s) in market.suppliers().iter().enumerate() {
        let lmp = n.lmps[s.node.0];
        println!(
            "{:>8} {:>11.1} {:>12.1} {:>10.3}",
            s.id, n.quantities[k], n.profits[k], lmp
        );
        w.write_record([
            s.id.to_string(),
            n.quantities[k].to_string(),
            n.profits[k].to_string(),
            lmp.to_string(),
        ])?;
    }
    w.flush()?;
    if !n.cycle.is_empty() {
        println!("best responses cycle with period {}:", n.cycle.len());
        for profile in &n.cycle {
            let cells: Vec<String> = profile.iter().map(|q| format!("{q:.1}")).collect();
            println!("  ({})", cells.join(", "));
        }
    }
    if let Some(path) = json {
        fs::write(path, serde_json::to_string_pretty(&Benchmark::from_nash(&market, &n))?)?;
    }
    Ok(n.converged)
}

#[allow(clippy::too_many_arguments)]
fn learn(
    args: &ScenarioArgs,
    mode: ModeArg,
    seeds: Vec<u64>,
    out: &Path,
    stagger: StaggerArg,
    tail: u64,
    iterations: Option<u64>,
    grid: f64,
) -> Result<bool> {
    let (file, market) = args.load()?;
    let mut params = file.learner_params()?;
    if let Some(m) = iterations {
        params.iteration_limit = m;
    }
    let first = seeds[0];
    let (mut spec, benchmark) = match mode {
        ModeArg::Rationality => {
            let (learner, fixed) = file.rationality_setup(&market, args.congested)?;
            let mut profile = Bids::new(vec![0.0; market.suppliers().len()]);
            for (id, q) in &fixed {
                profile.quantities[id.0] = *q;
            }
            let br = best_response(&market, learner, &profile, grid)?;
            let spec = ScenarioSpec::rationality(market.clone(), learner, fixed, params, first)?;
            (spec, Benchmark::from_best_response(&market, &br))
        }
        ModeArg::Convergence => {
            let n = iterate_nash(&market, grid, 200, &market.midpoint_bids())?;
            let spec = ScenarioSpec::convergence(market.clone(), params, first)?;
            (spec, Benchmark::from_nash(&market, &n))
        }
    };
    spec.stagger = match stagger {
        StaggerArg::None => Stagger::None,
        StaggerArg::RoundRobin => Stagger::RoundRobin,
    };

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("benchmark.json"), serde_json::to_string_pretty(&benchmark)?)?;
    let report = sweep(&spec, &seeds, &benchmark, tail)?;
    for o in &report.outcomes {
        if let Some(trace) = &o.trace {
            let f = fs::File::create(out.join(format!("trace_seed{}.csv", o.seed)))?;
            write_trace_csv(&trace.records, std::io::BufWriter::new(f))?;
        }
        if let Some(s) = &o.summary {
            fs::write(
                out.join(format!("summary_seed{}.json", o.seed)),
                serde_json::to_string_pretty(s)?,
            )?;
            if seeds.len() == 1 {
                print!("{s}");
            }
        }
    }
    fs::write(out.join("sweep.json"), serde_json::to_string_pretty(&report)?)?;
    if seeds.len() > 1 {
        print!("{report}");
    }
    if !benchmark.converged {
        eprintln!("benchmark did not converge");
    }
    Ok(benchmark.converged && report.failures().next().is_none())
}

fn report(trace: &Path, benchmark: &Path, tail: u64, json: Option<&Path>) -> Result<bool> {
    let records = read_trace_csv(fs::File::open(trace).with_context(|| format!("opening {}", trace.display()))?)?;
    if records.is_empty() {
        bail!("trace {} is empty", trace.display());
    }
    let bench: Benchmark = serde_json::from_str(&fs::read_to_string(benchmark)?)?;
    let summary = summarize(&RunTrace::from_records(0, records), &bench, tail)?;
    print!("{summary}");
    if let Some(path) = json {
        fs::write(path, serde_json::to_string_pretty(&summary)?)?;
    }
    Ok(bench.converged)
}
