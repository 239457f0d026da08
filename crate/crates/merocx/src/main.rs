use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};
use merocx::config::{load_config, RunConfig, Scenario};
use merocx::{acceptance, scenario};
use merocx_core::cell::AxiomSet;

#[derive(Parser)]
#[command(name = "merocx", version, about = "Truncated cochain complexes, star products, invariants and Čech-de Rham checks")]
struct Cli {
    /// JSON config; its values override command line flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for report.json and CSV tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seeds, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct CellArgs {
    #[arg(long)]
    l_max: Option<usize>,
    #[arg(long)]
    k_max: Option<u32>,
    /// Window E.
    #[arg(long)]
    window: Option<u32>,
    /// Axiom list, e.g. KG,SHUFFLE,POLE,COMPOSE.
    #[arg(long)]
    axioms: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the scenario named in --config.
    Run,
    AxiomAudit(CellArgs),
    Cohomology(CellArgs),
    Star {
        /// Factor cochain files (JSON); seeded random pairs if omitted.
        #[arg(long, num_args = 1..)]
        factors: Vec<PathBuf>,
        /// Variable identifications, e.g. "0.z1=1.z1".
        #[arg(long, default_value = "")]
        identify: String,
        #[arg(long)]
        lambda_order: Option<u32>,
        #[arg(long)]
        grid: Option<u32>,
    },
    Invariant {
        #[command(subcommand)]
        which: InvariantCmd,
    },
    Invariance {
        /// Automorphism, e.g. "z + 1/2*z^2 - z^3"; random unipotent if omitted.
        #[arg(long)]
        rho: Option<String>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        cochain: Option<PathBuf>,
    },
    Cech {
        #[arg(long)]
        atlas: Option<PathBuf>,
        #[arg(long)]
        kmax: Option<usize>,
        #[arg(long)]
        dmax: Option<usize>,
    },
    /// Run the full acceptance suite.
    Acceptance,
}

#[derive(Subcommand)]
enum InvariantCmd {
    Gv {
        /// Preset name or "all".
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn cell_args(cfg: &mut RunConfig, a: &CellArgs) -> Result<()> {
    if let Some(x) = a.l_max {
        cfg.l_max = x;
    }
    if let Some(x) = a.k_max {
        cfg.k_max = x;
    }
    if let Some(x) = a.window {
        cfg.window = x;
    }
    if let Some(x) = &a.axioms {
        cfg.axioms = AxiomSet::parse(x).map_err(|e| anyhow!("--axioms: {e}"))?;
    }
    Ok(())
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let scenario = match &cli.cmd {
        Cmd::Run | Cmd::Acceptance | Cmd::Cohomology(_) => Scenario::Cohomology,
        Cmd::AxiomAudit(_) => Scenario::AxiomAudit,
        Cmd::Star { .. } => Scenario::Star,
        Cmd::Invariant { .. } => Scenario::InvariantGv,
        Cmd::Invariance { .. } => Scenario::Invariance,
        Cmd::Cech { .. } => Scenario::Cech,
    };
    let mut cfg = RunConfig::new(scenario);
    if let Some(s) = &cli.seeds {
        cfg.seeds = s.clone();
    }
    match &cli.cmd {
        Cmd::AxiomAudit(a) | Cmd::Cohomology(a) => cell_args(&mut cfg, a)?,
        Cmd::Star { factors, identify, lambda_order, grid } => {
            cfg.star.factors = factors.clone();
            cfg.star.identify = identify.clone();
            if let Some(x) = lambda_order {
                cfg.lambda = *x;
            }
            if let Some(x) = grid {
                cfg.star.grid = *x;
            }
        }
        Cmd::Invariant { which: InvariantCmd::Gv { preset, seed } } => {
            if let Some(p) = preset {
                cfg.gv.preset = p.clone();
            }
            if let Some(s) = seed {
                cfg.seeds = vec![*s];
            }
        }
        Cmd::Invariance { rho, order, cochain } => {
            cfg.invariance.rho = rho.clone();
            cfg.invariance.cochain = cochain.clone();
            if let Some(o) = order {
                cfg.invariance.order = *o;
            }
        }
        Cmd::Cech { atlas, kmax, dmax } => {
            cfg.cech.atlas = atlas.clone();
            if let Some(k) = kmax {
                cfg.cech.kmax = *k;
            }
            if let Some(d) = dmax {
                cfg.cech.dmax = *d;
            }
        }
        Cmd::Run | Cmd::Acceptance => {}
    }
    if let Some(o) = &cli.out {
        cfg.output = o.clone();
    }
    if let Some(f) = &cli.config {
        load_config(&mut cfg, f)?;
    } else if matches!(cli.cmd, Cmd::Run) {
        return Err(anyhow!("`run` needs --config"));
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    scenario::init_threads();
    let cli = Cli::parse();
    let res = (|| -> Result<bool> {
        if matches!(cli.cmd, Cmd::Acceptance) {
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("merocx-acceptance"));
            let lines = acceptance::run(&dir)?;
            for l in &lines {
                println!("{l}");
            }
            return Ok(lines.iter().all(|l| l.ok));
        }
        let cfg = build_config(&cli)?;
        let rep = scenario::run_and_emit(&cfg)?;
        for c in &rep.checks {
            if !c.ok {
                eprintln!("FAIL {}: {}", c.name, c.detail);
            }
        }
        let failed = rep.checks.iter().filter(|c| !c.ok).count();
        println!("{}: {} checks, {failed} failed; report in {}", rep.scenario, rep.checks.len(), cfg.output.display());
        Ok(failed == 0)
    })();
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
