use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hampack::graph::{gen_gnp, read_edge_list, write_edge_list, Graph};
use hampack::pipeline::{pack, pack_graph, run_experiment, verify_packing, PackingConfig};
use hampack::report::{parse_report, report_serialize, ReportFormat};

#[derive(Parser)]
#[command(
    name = "hampack",
    version,
    about = "Pack edge-disjoint Hamilton cycles in G(n,p)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Sample G(n,p) and write it as an edge list.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pack a sampled (or given) graph and write the report.
    Pack {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: f64,
        /// Edge list to pack instead of sampling.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Where to write the packed graph's edge list.
        #[arg(long)]
        graph_out: Option<PathBuf>,
        /// Overrides the config file's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Re-check a report's cycles against a graph.
    Verify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Monte-Carlo statistics over a grid of (n, p) points.
    Experiment {
        /// Comma-separated `n:p`; `p` may be a number or `<c>logn` for `c ln n / n`.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip packing; gather only the degree and S-set statistics.
        #[arg(long)]
        no_pack: bool,
    },
}

type CliResult<T> = Result<T, String>;

fn load_config(path: Option<&Path>) -> CliResult<PackingConfig> {
    let Some(path) = path else {
        return Ok(PackingConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let cfg: PackingConfig =
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn read_graph(path: &Path) -> CliResult<Graph> {
    let f = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    read_edge_list(BufReader::new(f)).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_graph(g: &Graph, path: &Path) -> CliResult<()> {
    let f = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
    write_edge_list(g, BufWriter::new(f)).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(bytes: &[u8], out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display())),
        None => io::stdout().write_all(bytes).map_err(|e| e.to_string()),
    }
}

fn parse_grid(spec: &str) -> CliResult<Vec<(usize, f64)>> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|point| {
            let (n, p) = point
                .trim()
                .split_once(':')
                .ok_or_else(|| format!("grid point {point:?} is not n:p"))?;
            let n: usize = n.parse().map_err(|_| format!("bad n in {point:?}"))?;
            let p = match p.strip_suffix("logn") {
                Some(c) => {
                    let c: f64 = if c.is_empty() {
                        1.0
                    } else {
                        c.parse().map_err(|_| format!("bad p in {point:?}"))?
                    };
                    c * (n as f64).ln() / n as f64
                }
                None => p.parse().map_err(|_| format!("bad p in {point:?}"))?,
            };
            Ok((n, p))
        })
        .collect()
}

fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Generate { n, p, seed, out } => {
            let g = gen_gnp(n, p, seed).map_err(|e| e.to_string())?;
            write_graph(&g, &out)?;
            Ok(0)
        }
        Command::Pack {
            n,
            p,
            graph,
            graph_out,
            seed,
            config,
            out,
            format,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let packing = match (graph, n) {
                (Some(path), _) => pack_graph(&read_graph(&path)?, p, &cfg),
                (None, Some(n)) => pack(n, p, &cfg),
                (None, None) => return Err("pack needs --n or --graph".into()),
            }
            .map_err(|e| e.to_string())?;
            if let Some(path) = graph_out {
                write_graph(&packing.graph, &path)?;
            }
            let fmt = match format {
                Format::Json => ReportFormat::Json,
                Format::Text => ReportFormat::Text,
            };
            emit(&report_serialize(&packing.report, fmt), out.as_deref())?;
            Ok(packing.report.outcome.exit_code() as u8)
        }
        Command::Verify { graph, report } => {
            let g = read_graph(&graph)?;
            let bytes = std::fs::read(&report).map_err(|e| format!("{}: {e}", report.display()))?;
            let r = parse_report(&bytes).map_err(|e| e.to_string())?;
            let v = verify_packing(&g, &r.cycles);
            let claims_full = r.outcome == hampack::report::Outcome::Full;
            let count_ok =
                !claims_full || (r.cycles.len() == r.k_target && r.k_target == g.min_degree() / 2);
            println!(
                "{} cycles, verification {}",
                r.cycles.len(),
                if v.pass && count_ok {
                    "passed"
                } else {
                    "FAILED"
                }
            );
            for f in &v.failures {
                println!("  {f:?}");
            }
            if !count_ok {
                println!(
                    "  report claims full with {} of {} cycles",
                    r.cycles.len(),
                    g.min_degree() / 2
                );
            }
            Ok(if v.pass && count_ok { 0 } else { 3 })
        }
        Command::Experiment {
            grid,
            trials,
            seed,
            config,
            out,
            no_pack,
        } => {
            let cfg = load_config(config.as_deref())?.with_seed(seed);
            let agg = run_experiment(&parse_grid(&grid)?, trials, &cfg, !no_pack)
                .map_err(|e| e.to_string())?;
            let mut bytes = serde_json::to_vec_pretty(&agg).map_err(|e| e.to_string())?;
            bytes.push(b'\n');
            emit(&bytes, out.as_deref())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("hampack: {msg}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_grid("2000:2logn, 100:0.1").unwrap();
        assert_eq!(g.len(), 2);
        assert!((g[0].1 - 2.0 * 2000f64.ln() / 2000.0).abs() < 1e-15);
        assert_eq!(g[1], (100, 0.1));
        assert!(parse_grid("100").is_err());
        assert!(parse_grid("x:0.1").is_err());
    }
}
