use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use styleforge::color::CpMode;
use styleforge::dsm::{restore_state, snapshot_state, ExchangePolicy, MemoryLayout};
use styleforge::pipeline::synth::{generate_corpus, write_corpus, SynthConfig};
use styleforge::pipeline::{
    augment_batch, export_style_table, load_config, load_dataset, perturb_directory, preseed_state,
    read_style_table, style_diversity, sweep, write_outputs, CpModeName, PipelineConfig, SweepParam,
};
use styleforge::{Error, Result};

#[derive(Parser)]
#[command(
    name = "styleforge",
    version,
    about = "Color perturbation and dual style memory augmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Permute the color channels of every image in a directory.
    Cp {
        #[arg(long, value_parser = ["uniform6", "coinflip"], default_value = "coinflip")]
        mode: String,
        #[arg(long, default_value_t = 0.5)]
        p_raw: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full augmentation pipeline over an annotated image set.
    Augment(AugmentArgs),
    /// Repeat the pipeline for several capacities or placements.
    Sweep {
        #[arg(long)]
        param: SweepParam,
        #[arg(long, num_args = 1.., required = true)]
        values: Vec<usize>,
        #[command(flatten)]
        run: AugmentArgs,
        /// Synthetic images used when no image set is given.
        #[arg(long, default_value_t = 32)]
        synth_n: usize,
    },
    /// Write a synthetic annotated corpus.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 2)]
        objects: usize,
    },
    /// Mean pairwise distance of the styles in a CSV table.
    Diversity {
        #[arg(long)]
        styles: PathBuf,
    },
}

#[derive(clap::Args)]
struct AugmentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long)]
    ann: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dsm_placement: Option<usize>,
    #[arg(long)]
    dsm_capacity: Option<usize>,
    #[arg(long)]
    dsm_mode: Option<ExchangePolicy>,
    #[arg(long)]
    dsm_layout: Option<MemoryLayout>,
    #[arg(long, value_parser = ["uniform6", "coinflip"])]
    cp_mode: Option<String>,
    #[arg(long)]
    export_styles: Option<PathBuf>,
    #[arg(long)]
    snapshot: Option<PathBuf>,
    /// Start from a saved memory snapshot.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Fill the memories from a style table before the first image.
    #[arg(long)]
    preseed: Option<PathBuf>,
    /// Extract features without restyling (evaluation runs).
    #[arg(long)]
    no_dsm: bool,
    #[arg(long)]
    no_cp: bool,
}

impl AugmentArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => PipelineConfig::default(),
        };
        let p = &mut cfg.paths;
        for (slot, flag) in [
            (&mut p.images, &self.images),
            (&mut p.annotations, &self.ann),
            (&mut p.out, &self.out),
            (&mut p.export_styles, &self.export_styles),
            (&mut p.snapshot, &self.snapshot),
            (&mut p.resume, &self.resume),
            (&mut p.preseed, &self.preseed),
        ] {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.dsm_placement {
            cfg.dsm.placement = v;
        }
        if let Some(v) = self.dsm_capacity {
            cfg.dsm.capacity = v;
        }
        if let Some(v) = self.dsm_mode {
            cfg.dsm.exchange = v;
        }
        if let Some(v) = self.dsm_layout {
            cfg.dsm.layout = v;
        }
        if let Some(v) = &self.cp_mode {
            cfg.cp.mode = if v == "uniform6" {
                CpModeName::Uniform6
            } else {
                CpModeName::Coinflip
            };
        }
        if self.no_dsm {
            cfg.dsm.enabled = false;
        }
        if self.no_cp {
            cfg.cp.enabled = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn required<'a>(v: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    v.as_deref()
        .ok_or_else(|| Error::InvalidConfig(format!("missing --{flag}")))
}

fn run_augment(args: &AugmentArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let paths = &cfg.paths;
    let out_dir = required(&paths.out, "out")?;
    let items = load_dataset(
        required(&paths.images, "images")?,
        required(&paths.annotations, "ann")?,
    )?;
    let mut state = match &paths.resume {
        Some(p) => restore_state(p)?,
        None => cfg.dsm.config().new_state()?,
    };
    if let Some(p) = &paths.preseed {
        let table = read_style_table(p)?;
        if table.channels() != cfg.feature_channels() {
            return Err(Error::InvalidConfig(format!(
                "preseed styles have {} channels, placement {} yields {}",
                table.channels(),
                cfg.dsm.placement,
                cfg.feature_channels()
            )));
        }
        preseed_state(&mut state, &table);
    }
    info!("augmenting {} images", items.len());
    let output = augment_batch(&items, &cfg, &mut state)?;
    write_outputs(&output, out_dir)?;
    let snapshot = paths
        .snapshot
        .clone()
        .unwrap_or_else(|| out_dir.join("snapshot.npy"));
    snapshot_state(&state, &snapshot)?;
    if let Some(p) = &paths.export_styles {
        export_style_table(&output.output_styles, p)?;
    }
    let mut resolved = cfg.clone();
    resolved.paths = Default::default();
    let cfg_path = out_dir.join("config.json");
    let json = serde_json::to_string_pretty(&resolved).expect("config serializes");
    std::fs::write(&cfg_path, json + "\n").map_err(|e| Error::Io {
        path: cfg_path,
        source: e,
    })?;
    Ok(())
}

fn run_sweep(param: SweepParam, values: &[usize], args: &AugmentArgs, synth_n: usize) -> Result<()> {
    let cfg = args.resolve()?;
    let items = match (&cfg.paths.images, &cfg.paths.annotations) {
        (Some(i), Some(a)) => load_dataset(i, a)?,
        _ => generate_corpus(&SynthConfig {
            count: synth_n,
            seed: cfg.seed,
            ..SynthConfig::default()
        })?
        .into_iter()
        .map(|s| (s.image, s.annotations))
        .collect(),
    };
    let results = sweep(&items, &cfg, param, values)?;
    println!("value,input_diversity,output_diversity");
    for (point, out) in &results {
        println!(
            "{},{},{}",
            point.value, point.input_diversity, point.output_diversity
        );
        if let Some(dir) = &cfg.paths.out {
            write_outputs(out, dir.join(format!("value_{}", point.value)))?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Cp {
            mode,
            p_raw,
            seed,
            images,
            out,
        } => {
            let mode = if mode == "uniform6" {
                CpMode::Uniform6
            } else {
                CpMode::CoinFlip { p_raw }
            };
            for (name, perm) in perturb_directory(&images, &out, mode, seed)? {
                println!("{name}\t{perm}");
            }
            Ok(())
        }
        Command::Augment(args) => run_augment(&args),
        Command::Sweep {
            param,
            values,
            run,
            synth_n,
        } => run_sweep(param, &values, &run, synth_n),
        Command::Synth {
            n,
            out,
            seed,
            size,
            objects,
        } => {
            let scenes = generate_corpus(&SynthConfig {
                count: n,
                height: size,
                width: size,
                objects_per_image: objects,
                seed,
            })?;
            write_corpus(&scenes, &out)
        }
        Command::Diversity { styles } => {
            let table = read_style_table(&styles)?;
            println!("{}", style_diversity(table.styles())?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e.root() {
                Error::InvalidConfig(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
