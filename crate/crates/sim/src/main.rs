use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use czdg::config::parse_config;
use czdg::run::run;
use czdg::verify::{run_suite, SUITES};
use czdg_core::mesh::{generate_rect, read_mesh, write_mesh, BoundaryKind, FaceKind, RectSpec};

/// Cohesive-zone discontinuous Galerkin fracture simulations.
#[derive(Parser)]
#[command(name = "czdg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario configuration.
    Run {
        config: PathBuf,
        /// Output directory; overrides the configured one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate or inspect meshes.
    #[command(subcommand)]
    Mesh(MeshCommand),
    /// Run a verification suite (or `all`).
    Verify { suite: String },
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Structured rectangle with boundary tags bottom=1, right=2, top=3, left=4.
    Gen {
        #[arg(long, default_value_t = 1.0)]
        width: f64,
        #[arg(long, default_value_t = 1.0)]
        height: f64,
        #[arg(long, default_value_t = 10)]
        nx: usize,
        #[arg(long, default_value_t = 10)]
        ny: usize,
        /// Four triangles per cell instead of two.
        #[arg(long)]
        crossed: bool,
        /// Write here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print counts and tags of a mesh file.
    Info { file: PathBuf },
}

const EXIT_IO: u8 = 1;
const EXIT_ABORTED: u8 = 2;
const EXIT_VERIFY: u8 = 3;

fn configure_threads() {
    if let Ok(v) = std::env::var("CZDG_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("CZDG_THREADS ignored: {e}");
                }
            }
            _ => log::warn!("CZDG_THREADS={v} is not a positive integer, ignored"),
        }
    }
}

fn run_config(config: &Path, out: Option<PathBuf>) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let scenario = parse_config(&text).with_context(|| format!("{}", config.display()))?;
    let base = config.parent().unwrap_or(Path::new("."));
    let out = out
        .or_else(|| scenario.output.dir.as_ref().map(|d| base.join(d)))
        .unwrap_or_else(|| PathBuf::from("out"));
    let start = std::time::Instant::now();
    let outcome = run(&scenario, base, Some(&out))?;
    log::info!("finished in {:.1} s", start.elapsed().as_secs_f64());
    println!("{} steps written to {}", outcome.steps.len(), out.display());
    Ok(match outcome.error {
        None => 0,
        Some(e) => {
            eprintln!("error: step {} aborted: {e}", outcome.steps.len() + 1);
            EXIT_ABORTED
        }
    })
}

fn mesh_info(file: &Path) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let data = read_mesh(&text).with_context(|| format!("{}", file.display()))?;
    let kinds: BTreeMap<u32, BoundaryKind> = data
        .boundary_tags()
        .into_iter()
        .map(|t| (t, BoundaryKind::Neumann))
        .collect();
    let mesh = data.build(&kinds)?;
    println!("nodes = {}", mesh.n_nodes());
    println!("triangles = {}", mesh.n_triangles());
    println!("interior_faces = {}", mesh.count(FaceKind::Interior));
    println!("boundary_faces = {}", mesh.count(FaceKind::Neumann));
    println!("regions = {:?}", mesh.region_tags());
    println!("boundary_tags = {:?}", mesh.boundary_tags());
    println!("area = {}", mesh.total_area());
    let h = mesh.faces().iter().map(|f| f.h_f);
    println!(
        "h_f = {} .. {}",
        h.clone().fold(f64::INFINITY, f64::min),
        h.fold(0.0, f64::max)
    );
    Ok(())
}

fn verify(suite: &str) -> anyhow::Result<u8> {
    let names: Vec<&str> = if suite == "all" {
        SUITES.to_vec()
    } else {
        vec![suite]
    };
    let mut ok = true;
    for name in names {
        let report =
            run_suite(name).with_context(|| format!("unknown suite '{name}' (one of {} or all)", SUITES.join(", ")))?;
        println!("{report}");
        ok &= report.passed();
    }
    Ok(if ok { 0 } else { EXIT_VERIFY })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_IO } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    let result = match cli.command {
        Command::Run { config, out } => run_config(&config, out),
        Command::Verify { suite } => verify(&suite),
        Command::Mesh(MeshCommand::Info { file }) => mesh_info(&file).map(|_| 0),
        Command::Mesh(MeshCommand::Gen {
            width,
            height,
            nx,
            ny,
            crossed,
            out,
        }) => (|| {
            let spec = RectSpec {
                width,
                height,
                nx,
                ny,
                crossed,
            };
            let text = write_mesh(&generate_rect(&spec, &[])?);
            match out {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
            Ok(0)
        })(),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_IO)
        }
    }
}
