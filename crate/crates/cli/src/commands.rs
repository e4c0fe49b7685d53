use std::fs;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fruitnet::augmentation::Scenario;
use fruitnet::evaluation::{evaluate, predict_image};
use fruitnet::imaging::{flood_fill_background, ppm, remove_background, resize_bilinear, FloodFillParams, RasterImage};
use fruitnet::network::NetworkConfig;
use fruitnet::records::{build_shards, BuildOptions, LabelMap, ShardSet, Split};
use fruitnet::synthetic::{generate_corpus, SyntheticSpec};
use fruitnet::training::{Checkpoint, TrainConfig, Trainer, CHECKPOINT_FILE, METRICS_FILE};

use crate::config::{require_dir, require_file, ProjectConfig};
use crate::{BuildArgs, ExtractArgs, PredictArgs, SynthArgs, TestArgs, TrainArgs};

const IMAGE_EXTENSIONS: [&str; 5] = ["ppm", "pnm", "jpg", "jpeg", "png"];

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

/// PPM through the library codec, JPEG and PNG through `image`.
pub fn load_image(path: &Path) -> Result<RasterImage> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or_default().to_ascii_lowercase();
    if ext == "ppm" || ext == "pnm" {
        return Ok(ppm::read(path)?);
    }
    let rgb = image::open(path)
        .with_context(|| format!("decoding {}", path.display()))?
        .to_rgb8();
    let (w, h) = rgb.dimensions();
    Ok(RasterImage::from_rgb8(h as usize, w as usize, rgb.as_raw())?)
}

/// Deletes the listed paths unless disarmed.
struct Cleanup(Vec<PathBuf>);

impl Cleanup {
    fn disarm(mut self) {
        self.0.clear();
    }
}

impl Drop for Cleanup {
    fn drop(&mut self) {
        for p in self.0.iter().rev() {
            let _ = if p.is_dir() { fs::remove_dir_all(p) } else { fs::remove_file(p) };
        }
    }
}

pub fn extract_background(args: &ExtractArgs) -> Result<()> {
    require_dir(&args.input_dir, "input directory")?;
    anyhow::ensure!(args.size > 0, "--size must be positive");
    let params = FloodFillParams::new(args.threshold)?;
    let existed = args.output_dir.exists();
    let mut cleanup = Cleanup(Vec::new());
    if !existed {
        cleanup.0.push(args.output_dir.clone());
    }

    let mut count = 0usize;
    for entry in walkdir::WalkDir::new(&args.input_dir).sort_by_file_name() {
        let entry = entry.with_context(|| format!("walking {}", args.input_dir.display()))?;
        if !entry.file_type().is_file() || !is_image(entry.path()) {
            continue;
        }
        let rel = entry.path().strip_prefix(&args.input_dir)?;
        let dest = args.output_dir.join(rel).with_extension("ppm");
        if let Some(parent) = dest.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        let img = load_image(entry.path())?;
        let mask = flood_fill_background(&img, params)?;
        let clean = resize_bilinear(&remove_background(&img, &mask)?, args.size, args.size)?;
        if existed {
            cleanup.0.push(dest.clone());
        }
        ppm::write(&dest, &clean)?;
        count += 1;
    }
    cleanup.disarm();
    println!("Processed {count} images into {}", args.output_dir.display());
    Ok(())
}

pub fn build_records(project: &ProjectConfig, args: &BuildArgs) -> Result<()> {
    let train_dir = args.train_directory.clone().unwrap_or_else(|| project.training_images_dir.clone());
    let test_dir = args.validation_directory.clone().unwrap_or_else(|| project.test_images_dir.clone());
    let out_dir = args.output_directory.clone().unwrap_or_else(|| project.data_dir.clone());
    let labels = args.labels_file.clone().unwrap_or_else(|| project.labels_file.clone());
    require_dir(&train_dir, "training directory")?;
    require_dir(&test_dir, "validation directory")?;
    require_file(&labels, "labels file")?;

    let opts = BuildOptions {
        train_shards: args.train_shards,
        test_shards: args.test_shards,
        image_height: args.size,
        image_width: args.size,
        num_threads: args.num_threads,
        ..BuildOptions::default()
    };
    let (train, test) = build_shards(&train_dir, &test_dir, &labels, &out_dir, &opts).context("building record shards")?;
    println!(
        "Wrote {} training records in {} shards and {} test records in {} shards to {}",
        train.count,
        train.paths.len(),
        test.count,
        test.paths.len(),
        out_dir.display()
    );
    Ok(())
}

fn default_checkpoint(project: &ProjectConfig, given: &Option<PathBuf>) -> PathBuf {
    given.clone().unwrap_or_else(|| project.models_dir.join(CHECKPOINT_FILE))
}

pub fn train(project: &ProjectConfig, args: &TrainArgs) -> Result<()> {
    let out = args.out.clone().unwrap_or_else(|| project.models_dir.clone());
    let shard_dir = args.shards.clone().unwrap_or_else(|| project.data_dir.clone());
    require_dir(&shard_dir, "shard directory")?;
    let shards = ShardSet::discover(&shard_dir, Split::Train)?;
    anyhow::ensure!(!shards.is_empty(), "no training records under {}", shard_dir.display());
    let scenario: Option<Scenario> = args.scenario.as_deref().map(str::parse).transpose()?;
    let ckpt_path = out.join(CHECKPOINT_FILE);

    let (mut trainer, fresh) = if args.resume {
        let ckpt = Checkpoint::load(&ckpt_path).context("loading checkpoint to resume")?;
        let scenario = scenario.unwrap_or(ckpt.scenario);
        let net = match args.config_nr {
            Some(nr) => NetworkConfig {
                lrn: args.lrn,
                ..NetworkConfig::table(nr.into(), scenario.input_channels(), ckpt.net.num_classes)?
            },
            None => ckpt.net.clone(),
        };
        let cfg = train_config(args, scenario, net);
        (Trainer::from_checkpoint(cfg, ckpt, &shards)?, false)
    } else {
        let labels_file = args.labels_file.clone().unwrap_or_else(|| project.labels_file.clone());
        require_file(&labels_file, "labels file")?;
        let labels = LabelMap::load(&labels_file)?;
        let scenario = scenario.unwrap_or(Scenario::HsvGrayAug);
        let net = NetworkConfig {
            lrn: args.lrn,
            ..NetworkConfig::table(args.config_nr.unwrap_or(1).into(), scenario.input_channels(), labels.num_classes())?
        };
        let cfg = train_config(args, scenario, net);
        (Trainer::new(cfg, labels, &shards)?, true)
    };

    let mut cleanup = Cleanup(Vec::new());
    if fresh {
        if !out.exists() {
            cleanup.0.push(out.clone());
        } else {
            cleanup.0.extend([ckpt_path.clone(), out.join(METRICS_FILE)]);
        }
    }
    let ckpt = trainer
        .run(&out, |p| {
            println!("{p}");
            ControlFlow::Continue(())
        })
        .context("training")?;
    cleanup.disarm();
    println!("Finished at iteration {} with learning rate {}", ckpt.iteration, ckpt.learning_rate);
    println!("Checkpoint: {}", ckpt_path.display());
    println!("Metrics: {}", out.join(METRICS_FILE).display());
    Ok(())
}

fn train_config(args: &TrainArgs, scenario: Scenario, net: NetworkConfig) -> TrainConfig {
    let mut cfg = TrainConfig::new(scenario, net);
    cfg.iterations = args.iterations;
    cfg.seed = args.seed;
    cfg.display_interval = args.display_interval;
    cfg.batch_size = args.batch_size;
    cfg
}

pub fn test(project: &ProjectConfig, args: &TestArgs) -> Result<()> {
    let ckpt_path = default_checkpoint(project, &args.checkpoint);
    let ckpt = Checkpoint::load(&ckpt_path)?;
    let shard_dir = args.shards.clone().unwrap_or_else(|| project.data_dir.clone());
    require_dir(&shard_dir, "shard directory")?;
    let (split, expected) = if args.use_train {
        (Split::Train, project.train_images)
    } else {
        (Split::Test, project.test_images)
    };
    let shards = ShardSet::discover(&shard_dir, split)?;
    if shards.count != expected {
        eprintln!("note: {} {} records found, config expects {expected}", shards.count, split.tag());
    }
    let report = evaluate(&ckpt, &shards, ckpt.scenario, args.batch_size, |p| {
        println!("Processed {} images, {} correct", p.processed, p.correct);
    })?;
    print!("{report}");

    let report_path = args.report.clone().unwrap_or_else(|| {
        let dir = ckpt_path.parent().map(Path::to_path_buf).unwrap_or_default();
        dir.join(format!("report_{}.json", split.tag()))
    });
    let tmp = report_path.with_extension("json.tmp");
    fs::write(&tmp, report.to_json()).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, &report_path).with_context(|| format!("writing {}", report_path.display()))?;
    println!("Report: {}", report_path.display());
    Ok(())
}

pub fn predict(project: &ProjectConfig, args: &PredictArgs) -> Result<()> {
    let ckpt = Checkpoint::load(&default_checkpoint(project, &args.checkpoint))?;
    let img = load_image(&args.image_path)?;
    let p = predict_image(&ckpt, &img, ckpt.scenario)?;
    println!("{p}");
    Ok(())
}

pub fn gen_synthetic(project: &ProjectConfig, args: &SynthArgs) -> Result<()> {
    let root = args.out.clone().unwrap_or_else(|| project.root_dir.clone());
    let spec = SyntheticSpec {
        classes: args.classes,
        train_per_class: args.train_per_class,
        test_per_class: args.test_per_class,
        height: args.size,
        width: args.size,
        seed: args.seed,
        raw_background: args.raw_background,
    };
    let targets = [root.join("Training"), root.join("Test"), root.join("labels.txt")];
    if let Some(t) = targets.iter().find(|t| t.exists()) {
        bail!("{} already exists; refusing to overwrite", t.display());
    }
    let cleanup = Cleanup(targets.to_vec());
    let corpus = generate_corpus(&root, &spec)?;
    cleanup.disarm();
    println!("Training images: {}", corpus.train_dir.display());
    println!("Test images: {}", corpus.test_dir.display());
    println!("Labels: {}", corpus.labels_file.display());
    Ok(())
}
