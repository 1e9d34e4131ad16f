use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use harpocrates::{bench, metrics, onion, scenario, sweep, topology, Result, ScenarioConfig, SimError};

#[derive(Parser)]
#[command(name = "harpocrates", version, about = "Anonymous delegated publication simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and print its metrics row.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// `key=value` overrides applied after the config file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Write the per-packet delay CDF here.
        #[arg(long)]
        cdf: Option<PathBuf>,
        /// Write the event trace here (enables tracing).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Print the actor placement.
        #[arg(long)]
        placement: bool,
    },
    /// Run a parameter grid and write the metrics CSV.
    Sweep {
        grid: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Worker threads; defaults to the number of CPUs.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Time the signature primitives on this machine.
    BenchCrypto {
        #[arg(long, default_value_t = 256)]
        q_bits: u64,
        #[arg(long, default_value_t = 200)]
        iterations: usize,
    },
    /// Measure per-layer onion costs and print them as config lines.
    CalibrateOnion {
        #[arg(long, default_value_t = 256)]
        q_bits: u64,
        #[arg(long, default_value_t = 1024)]
        packet_size: usize,
        #[arg(long, default_value_t = 200)]
        rounds: usize,
    },
    /// Write key and proxy-signature test-vector files.
    GenVectors {
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 64)]
        q_bits: u64,
        #[arg(long, default_value_t = 16)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the built-in synthetic AS1221-sized topology in file format.
    SynthTopology {
        #[arg(long, default_value_t = 2.0)]
        delay_ms: f64,
    },
    /// Parse a topology file and report its size and connectivity.
    ValidateTopology {
        path: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        default_delay_ms: f64,
    },
}

fn load_config(path: Option<&PathBuf>, seed: Option<u64>, set: &[String]) -> Result<ScenarioConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)?,
        None => String::new(),
    };
    let mut pairs: Vec<(String, String)> = harpocrates::config::parse_pairs(&text)?.into_iter().collect();
    for kv in set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| SimError::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        pairs.push((k.trim().to_owned(), v.trim().to_owned()));
    }
    let mut cfg = ScenarioConfig::default();
    for (k, v) in pairs {
        cfg.set(&k, &v)?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            set,
            cdf,
            trace,
            placement,
        } => {
            let mut cfg = load_config(config.as_ref(), seed, &set)?;
            cfg.trace |= trace.is_some();
            let topo = scenario::load_topology(&cfg)?;
            let group = scenario::scenario_group(&cfg)?;
            let out = scenario::run_normalized(&topo, &group, &cfg)?;
            if placement {
                eprint!("{}", out.placement.dump(&topo));
            }
            for f in &out.metrics.failures {
                eprintln!("warning: {f}");
            }
            println!("{}", metrics::CSV_HEADER);
            println!("{}", out.metrics.csv_row());
            if let Some(p) = cdf {
                std::fs::write(p, metrics::cdf_table(&out.metrics.per_packet_delays_ms))?;
            }
            if let Some(p) = trace {
                let mut text = out.trace.join("\n");
                text.push('\n');
                std::fs::write(p, text)?;
            }
            let m = &out.metrics;
            if !m.integrity_ok || !m.anonymity_ok() || m.signature_failures.is_some_and(|n| n > 0) {
                return Err(SimError::Invariant(format!(
                    "integrity {} exposures {} signature failures {:?}",
                    m.integrity_ok, m.exposures, m.signature_failures
                )));
            }
        }
        Command::Sweep { grid, output, threads } => {
            let grid = sweep::Grid::load(&grid)?;
            let result = sweep::run_grid(&grid, threads)?;
            let csv = result.to_csv();
            match output {
                Some(p) => std::fs::write(p, csv)?,
                None => print!("{csv}"),
            }
            if let Some(v) = result.invariant_violation() {
                return Err(SimError::Invariant(v));
            }
        }
        Command::BenchCrypto { q_bits, iterations } => {
            let report = bench::run(q_bits, iterations)?;
            print!("{}", report.table());
        }
        Command::CalibrateOnion {
            q_bits,
            packet_size,
            rounds,
        } => {
            let cfg = ScenarioConfig {
                q_bits,
                ..ScenarioConfig::default()
            };
            let group = scenario::scenario_group(&cfg)?;
            let mut rng = rand::thread_rng();
            let cost = onion::calibrate(&group, packet_size, rounds, &mut rng);
            println!("onion_encrypt_us = {:.1}", cost.encrypt_us);
            println!("onion_decrypt_us = {:.1}", cost.decrypt_us);
        }
        Command::GenVectors {
            out_dir,
            q_bits,
            count,
            seed,
        } => {
            for p in bench::write_vectors(&out_dir, q_bits, count, seed)? {
                println!("wrote {}", p.display());
            }
        }
        Command::SynthTopology { delay_ms } => {
            let topo = topology::synthetic_as1221(delay_ms);
            println!("# synthetic three-tier ISP map, {} routers, {} links", topo.routers(), topo.links().len());
            println!("# node_a node_b delay_ms");
            print!("{}", topo.to_text());
        }
        Command::ValidateTopology { path, default_delay_ms } => {
            let topo = topology::Topology::load(&path, default_delay_ms)?;
            println!("routers {} links {} connected {}", topo.routers(), topo.links().len(), topo.is_connected());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
