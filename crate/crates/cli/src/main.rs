//! `segsynth` command-line tool.

mod gallery;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use segsynth::metrics::{dice, paired_t_test, PairedScores};
use segsynth::par::{current_threads, with_threads, Execution};
use segsynth::pipeline::{export_shard, generate_batch, generate_sample_timed, load_config, read_mask_png, StageTimings};
use segsynth::promptgen::{default_dilation, sample_prompts, PromptConfig};
use segsynth::stream::{StreamServer, DEFAULT_PORT};
use segsynth::{GenConfig, SampleRng};
use rand::SeedableRng;

#[derive(Parser)]
#[command(name = "segsynth", version, about = "Synthetic segmentation sample generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// JSON config file; absent fields take their defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the config's master seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> segsynth::Result<GenConfig> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => GenConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a shard of samples and write it to a directory.
    Gen {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// First sample index.
        #[arg(long, default_value_t = 0)]
        start: u64,
        /// Number of samples (default: the config's epoch size).
        #[arg(long)]
        count: Option<u64>,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Generate on the calling thread only.
        #[arg(long)]
        sequential: bool,
    },
    /// Render a PNG gallery of samples with instance overlays and prompt markers.
    Preview {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Number of tiles (at most 64).
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..=64))]
        count: u32,
        /// Output PNG file.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Sample click prompts for a mask PNG and print them as JSON lines.
    Prompts {
        /// 8-bit PNG; nonzero pixels are foreground.
        #[arg(long, value_name = "FILE.png")]
        mask: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        npos: u32,
        #[arg(long, default_value_t = 0)]
        nneg: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Band dilation in iterations (default scales with the mask size).
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        dilation: Option<u32>,
    },
    /// Score predicted masks against ground truth with the Dice coefficient.
    Eval {
        /// Directory of predicted mask PNGs.
        #[arg(long, value_name = "DIR")]
        pred: PathBuf,
        /// Directory of ground-truth mask PNGs, matched by file name.
        #[arg(long, value_name = "DIR")]
        gt: PathBuf,
        /// Second prediction directory for a paired t-test against --pred.
        #[arg(long, value_name = "DIR")]
        paired_against: Option<PathBuf>,
    },
    /// Serve samples over TCP.
    Serve {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_name = "HOST:PORT", default_value_t = format!("127.0.0.1:{DEFAULT_PORT}"))]
        bind: String,
    },
    /// Time sample generation single- and multi-threaded.
    Bench {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        count: u64,
        /// Worker threads for the multi-threaded run (default: all cores).
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        threads: Option<u64>,
        /// Print a JSON report.
        #[arg(long)]
        json: bool,
    },
    /// Load and validate a config file, then print its hash.
    ValidateConfig {
        #[arg(value_name = "PATH")]
        path: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SYNTHFM_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

type CmdResult = Result<(), String>;

fn run(cmd: Command) -> CmdResult {
    match cmd {
        Command::Gen { cfg, start, count, out, sequential } => cmd_gen(&cfg.load().map_err(|e| e.to_string())?, start, count, &out, sequential),
        Command::Preview { cfg, count, out } => cmd_preview(&cfg.load().map_err(|e| e.to_string())?, count, &out),
        Command::Prompts { mask, npos, nneg, seed, dilation } => cmd_prompts(&mask, npos, nneg, seed, dilation),
        Command::Eval { pred, gt, paired_against } => cmd_eval(&pred, &gt, paired_against.as_deref()),
        Command::Serve { cfg, bind } => cmd_serve(cfg.load().map_err(|e| e.to_string())?, &bind),
        Command::Bench { cfg, count, threads, json } => cmd_bench(&cfg.load().map_err(|e| e.to_string())?, count, threads, json),
        Command::ValidateConfig { path } => {
            let cfg = load_config(&path).map_err(|e| e.to_string())?;
            println!("ok {}", cfg.config_hash());
            Ok(())
        }
    }
}

fn cmd_gen(cfg: &GenConfig, start: u64, count: Option<u64>, out: &Path, sequential: bool) -> CmdResult {
    let count = count.unwrap_or(cfg.epoch_size);
    let end = start.checked_add(count).ok_or("index range overflows u64")?;
    let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
    let t = Instant::now();
    let manifest = export_shard(cfg, start..end, out, exec).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    println!("manifest: {}", out.join(segsynth::pipeline::MANIFEST_NAME).display());
    println!("samples: {} in {secs:.2}s ({:.2} samples/s)", manifest.count, manifest.count as f64 / secs.max(1e-9));
    Ok(())
}

fn cmd_preview(cfg: &GenConfig, count: u32, out: &Path) -> CmdResult {
    let records = generate_batch(cfg, 0..count as u64, Execution::Sequential).map_err(|e| e.to_string())?;
    gallery::render(&records).save(out).map_err(|e| format!("writing {}: {e}", out.display()))?;
    println!("gallery: {} ({} tiles)", out.display(), records.len());
    Ok(())
}

fn cmd_serve(cfg: GenConfig, bind: &str) -> CmdResult {
    let server = StreamServer::bind(bind, cfg).map_err(|e| format!("binding {bind}: {e}"))?;
    let addr = server.local_addr().map_err(|e| e.to_string())?;
    println!("listening on {addr}");
    std::io::Write::flush(&mut std::io::stdout()).map_err(|e| e.to_string())?;
    server.run().map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct PromptLine {
    role: &'static str,
    x: i64,
    y: i64,
}

fn cmd_prompts(mask: &Path, npos: u32, nneg: u32, seed: u64, dilation: Option<u32>) -> CmdResult {
    let m = read_mask_png(mask).map_err(|e| format!("{}: {e}", mask.display()))?;
    if m.is_empty() {
        return Err(format!("{}: mask has no foreground pixels", mask.display()));
    }
    let dilation = dilation.unwrap_or_else(|| default_dilation(m.width(), m.height()));
    let set = sample_prompts(&m, PromptConfig::new(npos, nneg), &mut SampleRng::seed_from_u64(seed), dilation).map_err(|e| e.to_string())?;
    let lines = set
        .positives
        .iter()
        .map(|p| PromptLine { role: "positive", x: p.x, y: p.y })
        .chain(set.negatives.iter().map(|p| PromptLine { role: "negative", x: p.x, y: p.y }));
    for l in lines {
        println!("{}", serde_json::to_string(&l).expect("plain struct serializes"));
    }
    Ok(())
}

fn png_names(dir: &Path) -> Result<BTreeSet<String>, String> {
    let entries = std::fs::read_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let mut names = BTreeSet::new();
    for e in entries {
        let e = e.map_err(|e| e.to_string())?;
        let name = e.file_name().to_string_lossy().into_owned();
        if name.to_ascii_lowercase().ends_with(".png") {
            names.insert(name);
        }
    }
    Ok(names)
}

fn dice_scores(pred: &Path, gt: &Path, names: &BTreeSet<String>) -> Result<Vec<f64>, String> {
    names
        .iter()
        .map(|n| {
            let a = read_mask_png(pred.join(n)).map_err(|e| format!("{}: {e}", pred.join(n).display()))?;
            let b = read_mask_png(gt.join(n)).map_err(|e| format!("{}: {e}", gt.join(n).display()))?;
            dice(&a, &b).map_err(|e| format!("{n}: {e}"))
        })
        .collect()
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (mean, sd)
}

fn cmd_eval(pred: &Path, gt: &Path, paired: Option<&Path>) -> CmdResult {
    let gt_names = png_names(gt)?;
    let mut dirs = vec![pred];
    dirs.extend(paired);
    for dir in &dirs {
        let names = png_names(dir)?;
        let orphans: Vec<&String> = names.symmetric_difference(&gt_names).collect();
        if !orphans.is_empty() {
            let list: Vec<&str> = orphans.iter().map(|s| s.as_str()).collect();
            return Err(format!("files not matched between {} and {}: {}", dir.display(), gt.display(), list.join(", ")));
        }
    }
    if gt_names.is_empty() {
        return Err(format!("no PNG masks in {}", gt.display()));
    }
    let scores = dice_scores(pred, gt, &gt_names)?;
    for (n, s) in gt_names.iter().zip(&scores) {
        println!("{n}\t{s:.6}");
    }
    let (mean, sd) = mean_sd(&scores);
    println!("mean dice: {mean:.6} ± {sd:.6} (n = {})", scores.len());
    if let Some(other) = paired {
        let other_scores = dice_scores(other, gt, &gt_names)?;
        let (om, osd) = mean_sd(&other_scores);
        println!("paired dice: {om:.6} ± {osd:.6}");
        let t = paired_t_test(&PairedScores::new(scores, other_scores).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        println!(
            "paired t-test: t = {:.6}, df = {}, p = {:.6} ({})",
            t.t_statistic,
            t.degrees_of_freedom,
            t.p_value_two_tailed,
            t.significance().label()
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct RunReport {
    threads: usize,
    seconds: f64,
    samples_per_sec: f64,
}

#[derive(Serialize)]
struct BenchReport {
    count: u64,
    width: u32,
    height: u32,
    single_thread: RunReport,
    multi_thread: RunReport,
    speedup: f64,
    /// Seconds per stage, summed over the single-threaded run.
    stages: Vec<(String, f64)>,
}

fn cmd_bench(cfg: &GenConfig, count: u64, threads: Option<u64>, json: bool) -> CmdResult {
    let threads = threads.map_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()), |t| t as usize);
    let mut stages = StageTimings::default();
    let t = Instant::now();
    for i in 0..count {
        generate_sample_timed(cfg, i, &mut stages).map_err(|e| e.to_string())?;
    }
    let single = t.elapsed().as_secs_f64();
    let (multi, used) = with_threads(threads, || {
        let t = Instant::now();
        let r = generate_batch(cfg, 0..count, Execution::Parallel).map(|_| t.elapsed().as_secs_f64());
        (r, current_threads())
    });
    let multi = multi.map_err(|e| e.to_string())?;
    let rate = |s: f64| count as f64 / s.max(1e-9);
    let report = BenchReport {
        count,
        width: cfg.image_width,
        height: cfg.image_height,
        single_thread: RunReport { threads: 1, seconds: single, samples_per_sec: rate(single) },
        multi_thread: RunReport { threads: used, seconds: multi, samples_per_sec: rate(multi) },
        speedup: single / multi.max(1e-9),
        stages: stages.stages().iter().map(|(n, d)| (n.to_string(), d.as_secs_f64())).collect(),
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        return Ok(());
    }
    println!("{} samples at {}x{}", count, cfg.image_width, cfg.image_height);
    println!("1 thread:   {:.3}s  {:.2} samples/s", single, report.single_thread.samples_per_sec);
    println!("{} threads: {:.3}s  {:.2} samples/s  (speedup {:.2}x)", used, multi, report.multi_thread.samples_per_sec, report.speedup);
    println!("stages (single-threaded run):");
    for (n, s) in &report.stages {
        println!("  {n:<12} {s:>8.3}s");
    }
    Ok(())
}
