//! `slitspdc`: phase matching, pump profiles, coincidence maps, sweeps and
//! bootstrap errors from one TOML configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use slitspdc_core::imaging::transfer_field;
use slitspdc_core::io;
use slitspdc_core::stats::RNG_NAME;
use slitspdc_core::*;

const CONFIG_ENV: &str = "SLITSPDC_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "slitspdc", version, about = "Spatial correlations of SPDC photon pairs pumped through a slit mask")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// TOML configuration; defaults are used when absent.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,

    /// Override a configuration key, e.g. `--set slits.pitch_um=50`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Replaces `output_dir` from the configuration.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the collinear phase-matching angle.
    Phasematch {
        /// Report both Type I and Type II.
        #[arg(long)]
        both: bool,
    },
    /// Write the pump profile at the crystal.
    Pump {
        /// Image the slit mask at every integration plane through the crystal.
        #[arg(long)]
        through_crystal: bool,
    },
    /// Compute the coincidence map, singles and the correlation coefficient.
    Simulate {
        /// Bootstrap resamples for sigma_rho.
        #[arg(long)]
        bootstrap: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Vary one parameter and record rho for each value.
    Sweep {
        /// width, pitch, Lz, sigma or process.
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated values in the parameter's unit (um, mm).
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true, value_parser = non_empty)]
        values: Vec<String>,
        #[arg(long)]
        bootstrap: Option<usize>,
    },
    /// Bootstrap sigma_rho of a simulated or saved map.
    Bootstrap {
        /// Map CSV from `simulate`; simulated from the configuration when absent.
        #[arg(long)]
        map: Option<PathBuf>,
        /// Default: stats.resamples.
        #[arg(long)]
        resamples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn non_empty(s: &str) -> std::result::Result<String, String> {
    let s = s.trim();
    if s.is_empty() {
        Err("empty value".into())
    } else {
        Ok(s.to_string())
    }
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    config_hash: String,
    rng: &'static str,
    outputs: Vec<String>,
    config: &'a RunConfig,
}

struct Context {
    cfg: RunConfig,
    out: PathBuf,
}

impl Context {
    fn load(global: &Global) -> Result<Self> {
        let text = match &global.config {
            Some(path) => fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            None => String::new(),
        };
        let mut cfg = RunConfig::from_toml_with_overrides(&text, &global.overrides)?;
        if let Some(dir) = &global.output_dir {
            cfg.output_dir = dir.clone();
        }
        Ok(Context {
            out: cfg.output_dir.clone(),
            cfg,
        })
    }

    fn path(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out).map_err(|e| Error::Config(format!("cannot create {}: {e}", self.out.display())))?;
        Ok(self.out.join(name))
    }

    fn metadata(&self, command: &str, outputs: &[PathBuf]) -> Result<()> {
        let meta = Metadata {
            tool: "slitspdc",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed: self.cfg.seed,
            config_hash: self.cfg.hash()?,
            rng: RNG_NAME,
            outputs: outputs
                .iter()
                .filter_map(|p| p.file_name())
                .map(|n| n.to_string_lossy().into_owned())
                .collect(),
            config: &self.cfg,
        };
        let text = toml::to_string(&meta).map_err(Error::TomlSer)?;
        let path = self.path(&format!("{command}.metadata.toml"))?;
        fs::write(&path, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
    }
}

fn phasematch(ctx: &Context, both: bool) -> Result<()> {
    let set = ctx.cfg.sellmeier()?;
    let lambda = ctx.cfg.pump_wavelength();
    let processes = if both {
        vec![Process::TypeIEoo, Process::TypeIIEoe]
    } else {
        vec![ctx.cfg.crystal.process]
    };
    println!("sellmeier: {} ({})", set.material(), set.source());
    for process in processes {
        let mut crystal = ctx.cfg.crystal_spec()?;
        crystal.process = process;
        let crystal = crystal.tilted_to_collinear(&set, lambda)?;
        let matcher = PhaseMatcher::for_crystal(&set, &crystal, lambda)?;
        let dk = matcher.delta_k(Direction::AXIAL, Direction::AXIAL);
        println!(
            "{process}: collinear angle {:.4} deg, residual dk_z {:.3e} rad/m, tilt from cut {:+.4} deg",
            crystal.pump_angle().to_degrees(),
            dk.dk_z,
            crystal.tilt.to_degrees()
        );
    }
    Ok(())
}

fn pump(ctx: &Context, through_crystal: bool) -> Result<()> {
    let cfg = &ctx.cfg;
    let field = if through_crystal {
        let mut imaged = cfg.clone();
        imaged.pump.source = PumpSource::Imaged;
        imaged.pump_field()?
    } else if cfg.pump.source == PumpSource::Imaged {
        let grid = cfg.pump_grid()?;
        let object = analytic_profile(&cfg.pump_spec(), &grid)?;
        transfer_field(&object, &cfg.lens_spec(), &grid, cfg.lens.quadrature_order)?.peak_normalized()
    } else {
        cfg.pump_field()?
    };
    let path = ctx.path("pump.csv")?;
    io::write_field_csv(&path, &field)?;
    ctx.metadata("pump", &[path.clone()])?;
    println!("wrote {}", path.display());
    Ok(())
}

fn simulate(mut ctx: Context, bootstrap: Option<usize>, seed: Option<u64>) -> Result<()> {
    if let Some(seed) = seed {
        ctx.cfg.seed = seed;
    }
    let cfg = &ctx.cfg;
    let map = Simulation::from_config(cfg)?.run()?;
    let result = match bootstrap {
        Some(n) => bootstrap_sigma(&map, cfg.stats.counts_total, n, cfg.seed, cfg.stats.centering)?,
        None => CorrelationResult {
            rho: pearson(&map, cfg.stats.centering)?,
            sigma_rho: None,
            n_resamples: 0,
            seed: None,
            skipped: 0,
        },
    };
    let outputs = [
        ctx.path("map.csv")?,
        ctx.path("singles_signal.csv")?,
        ctx.path("singles_idler.csv")?,
        ctx.path("result.csv")?,
    ];
    io::write_map_csv(&outputs[0], &map)?;
    io::write_profile_csv(&outputs[1], &map.x1, &singles_profile(&map, Detector::Signal))?;
    io::write_profile_csv(&outputs[2], &map.x2, &singles_profile(&map, Detector::Idler))?;
    io::write_result_csv(&outputs[3], &result, cfg.stats.counts_total, &cfg.hash()?)?;
    ctx.metadata("simulate", &outputs)?;
    match result.sigma_rho {
        Some(s) => println!("rho = {:.6} +- {s:.2e}", result.rho),
        None => println!("rho = {:.6}", result.rho),
    }
    Ok(())
}

fn sweep(ctx: &Context, param: SweepParam, values: &[String], bootstrap: Option<usize>) -> Result<bool> {
    let values = values
        .iter()
        .map(|v| param.parse_value(v))
        .collect::<Result<Vec<_>>>()?;
    let spec = SweepSpec {
        param,
        values,
        base: ctx.cfg.clone(),
        bootstrap,
    };
    let result = run_sweep(&spec)?;
    let path = ctx.path("sweep.csv")?;
    io::write_sweep_csv(&path, &result)?;
    ctx.metadata("sweep", &[path.clone()])?;
    for row in &result.rows {
        match (&row.rho, &row.error) {
            (Some(rho), _) => println!("{} = {}{}: rho = {rho:.6}", param.name(), row.value, param.unit()),
            (None, Some(e)) => eprintln!("{} = {}{}: failed: {e}", param.name(), row.value, param.unit()),
            (None, None) => {}
        }
    }
    Ok(result.failures() == 0)
}

fn bootstrap(mut ctx: Context, map: Option<&Path>, resamples: Option<usize>, seed: Option<u64>) -> Result<()> {
    if let Some(seed) = seed {
        ctx.cfg.seed = seed;
    }
    let cfg = &ctx.cfg;
    let map = match map {
        Some(path) => io::read_map_csv(path)?,
        None => Simulation::from_config(cfg)?.run()?,
    };
    let n = resamples.unwrap_or(cfg.stats.resamples);
    let result = bootstrap_sigma(&map, cfg.stats.counts_total, n, cfg.seed, cfg.stats.centering)?;
    let path = ctx.path("bootstrap.csv")?;
    io::write_result_csv(&path, &result, cfg.stats.counts_total, &cfg.hash()?)?;
    ctx.metadata("bootstrap", &[path.clone()])?;
    println!(
        "rho = {:.6} +- {:.2e} ({} resamples, {} skipped)",
        result.rho,
        result.sigma_rho.unwrap_or(f64::NAN),
        result.n_resamples,
        result.skipped
    );
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let ctx = Context::load(&cli.global)?;
    match cli.command {
        Command::Phasematch { both } => phasematch(&ctx, both)?,
        Command::Pump { through_crystal } => pump(&ctx, through_crystal)?,
        Command::Simulate { bootstrap, seed } => simulate(ctx, bootstrap, seed)?,
        Command::Sweep {
            param,
            values,
            bootstrap,
        } => return sweep(&ctx, param, &values, bootstrap),
        Command::Bootstrap { map, resamples, seed } => bootstrap(ctx, map.as_deref(), resamples, seed)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
