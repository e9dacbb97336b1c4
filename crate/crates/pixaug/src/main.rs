use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pixaug::checkpoint::{ClassifierCheckpoint, GanCheckpoint, Selection};
use pixaug::config::PipelineConfig;
use pixaug::error::{exit, Error, Result};
use pixaug::pipeline::{self, GeneratedSetRecord};
use pixaug::report::{validate_sets, AccuracyRecord, Report};
use pixaug::scenario::ScenarioSpec;
use pixaug::{fsutil, pixels, scene};
use pixaug_core::classifier;
use pixaug_core::data::{classify_scene, Label, Normalization, Role};
use pixaug_core::gan::generate_pixels;
use pixaug_core::rng::derive_indexed;

const EXIT_CODES: &str = "\
Exit codes:
  0  success (validate: every test accepts)
  1  validate: at least one test rejects
  2  invalid argument or configuration
  3  data error (parse failure, missing class, corrupt checkpoint)
  4  numeric failure during training
  5  I/O error

Every flag can also be set through an environment variable named
PIXAUG_<FLAG>, e.g. PIXAUG_SEED=7 or PIXAUG_OUT_DIR=runs/a.";

#[derive(Parser)]
#[command(name = "pixaug", version, about = "GAN-based augmentation of labeled spectral pixels", after_help = EXIT_CODES)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON pipeline configuration; flags override its fields.
    #[arg(long, global = true, env = "PIXAUG_CONFIG")]
    config: Option<PathBuf>,
    /// Master seed; every stage seed is derived from it.
    #[arg(long, global = true, env = "PIXAUG_SEED")]
    seed: Option<u64>,
    #[arg(long, global = true, env = "PIXAUG_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Worker threads for the classifier grid search.
    #[arg(long, global = true, env = "PIXAUG_THREADS")]
    threads: Option<usize>,
    /// Permutations for the Ball Divergence test.
    #[arg(long, global = true, env = "PIXAUG_PERMUTATIONS")]
    permutations: Option<usize>,
    /// Significance level.
    #[arg(long, global = true, env = "PIXAUG_ALPHA")]
    alpha: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the GAN on the built-up pixels of a training file.
    TrainGan {
        #[arg(long, env = "PIXAUG_TRAIN")]
        train: PathBuf,
        /// Overrides the configured iteration count.
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Sample one synthetic set from a GAN checkpoint.
    Generate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// 1-based set number; selects the noise stream.
        #[arg(long, default_value_t = 1)]
        set_index: usize,
    },
    /// KS and Ball Divergence tests of generated sets against originals.
    Validate {
        /// Original pixels; only built-up rows are used when labeled.
        #[arg(long)]
        original: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        generated: Vec<PathBuf>,
    },
    /// Grid-search and fit the classifier.
    TrainClf {
        #[arg(long, env = "PIXAUG_TRAIN")]
        train: PathBuf,
        /// Generated sets added as built-up pixels, in order.
        #[arg(long, num_args = 0..)]
        generated: Vec<PathBuf>,
    },
    /// Evaluate a classifier checkpoint on labeled test pixels.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, env = "PIXAUG_TEST")]
        test: PathBuf,
    },
    /// Classify every pixel of a scene CSV into a PGM raster.
    ClassifyScene {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        scene: PathBuf,
    },
    /// Run the full protocol: GAN, generation, validation, accuracy table.
    Experiment {
        #[arg(long, env = "PIXAUG_TRAIN")]
        train: Option<PathBuf>,
        #[arg(long, env = "PIXAUG_TEST")]
        test: Option<PathBuf>,
        #[arg(long, env = "PIXAUG_SCENE")]
        scene: Option<PathBuf>,
    },
    /// Write the synthetic scenario (train.csv, test.csv, scene.csv).
    MakeScenario {
        /// Side length of the square scene.
        #[arg(long, default_value_t = 64)]
        scene_size: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    if let Some(d) = &common.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    if let Some(p) = common.permutations {
        cfg.permutations = p;
    }
    if let Some(a) = common.alpha {
        cfg.alpha = a;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<i32> {
    let mut cfg = load_config(&cli.common)?;
    let seeds = cfg.seeds();
    let out = cfg.out_dir.clone();
    match cli.command {
        Command::TrainGan { train, iterations } => {
            if let Some(n) = iterations {
                cfg.gan.train.epochs = n;
            }
            let data = pixels::read_pixels(&train, Role::Train)?;
            let t = pipeline::train_gan_stage(&data, &cfg.gan, seeds.gan)?;
            GanCheckpoint::new(&t.model).save(&out.join("gan.json"))?;
            pipeline::write_trace(&out.join("gan_trace.csv"), &t)?;
            let last = t.trace.last().map_or(f64::NAN, |s| s.value);
            println!("trained {} iterations, final V(G,D) = {last:.5}", t.trace.len());
            println!("wrote {}", out.join("gan.json").display());
        }
        Command::Generate {
            checkpoint,
            count,
            set_index,
        } => {
            if set_index == 0 || count == 0 {
                return Err(Error::Argument("count and set-index must be >= 1".to_string()));
            }
            let model = GanCheckpoint::load(&checkpoint)?;
            let seed = derive_indexed(seeds.generate, set_index as u64 - 1);
            let rows = generate_pixels(&model, count, seed)?;
            let name = format!("generated_{set_index}.csv");
            pixels::save_rows(&out.join(&name), &rows)?;
            let record = GeneratedSetRecord {
                set_index,
                file: name.clone(),
                rows: rows.len(),
                seed,
            };
            let manifest = serde_json::json!({
                "schema_version": pipeline::MANIFEST_SCHEMA,
                "master_seed": cfg.master_seed,
                "inputs": [pipeline::digest(&checkpoint)?],
                "generated_sets": [record],
            });
            fsutil::write_json(&out.join(format!("generated_{set_index}.manifest.json")), &manifest)?;
            println!("wrote {} rows to {}", rows.len(), out.join(name).display());
        }
        Command::Validate { original, generated } => {
            let orig = pixels::read_pixels(&original, Role::Test)?;
            let orig_rows = if orig.samples.iter().all(|s| s.label.is_some()) {
                orig.rows_with(Label::BuiltUp)
            } else {
                orig.rows()
            };
            let sets = generated
                .iter()
                .map(|p| pixels::read_rows(p))
                .collect::<Result<Vec<_>>>()?;
            let (ks, ball) = validate_sets(
                &orig_rows,
                &sets,
                cfg.alpha,
                cfg.permutations,
                seeds.validate,
                cfg.ks_method,
            )?;
            let mut report = Report::new(cfg.master_seed, cfg.alpha);
            report.set_validation(ks, ball);
            print_validation(&report);
            fsutil::write_json(&out.join("validation_report.json"), &report)?;
            return Ok(if report.all_pass { exit::OK } else { exit::SOME_FAIL });
        }
        Command::TrainClf { train, generated } => {
            let data = pixels::read_pixels(&train, Role::Train)?;
            let sets = generated
                .iter()
                .map(|p| pixels::read_rows(p))
                .collect::<Result<Vec<_>>>()?;
            let norm = Normalization::fit(&data.rows())?;
            let k = sets.len();
            let assembled = pixaug_core::data::assemble_training(&data, &sets, k)?;
            let examples = classifier::examples(&assembled.normalized_with(&norm)?)?;
            let mut ccfg = cfg.classifier.clone();
            ccfg.train.seed = derive_indexed(seeds.classifier, k as u64);
            let fit = pipeline::grid_search(&examples, &ccfg, cfg.threads)?;
            let sel = Selection {
                hidden_units: fit.chosen_hidden_units,
                lambda: fit.chosen_lambda,
                cv_accuracy: fit.cv_accuracy,
                k,
                builtup_original: data.count(Label::BuiltUp),
                builtup_generated: sets.iter().map(|s| s.len()).sum(),
                nonbuiltup: data.count(Label::NonBuiltUp),
            };
            for c in &fit.cells {
                println!("H={} lambda={} cv_accuracy={:.4}", c.hidden_units, c.lambda, c.cv_accuracy);
            }
            println!(
                "chosen H={} lambda={} (cv accuracy {:.4})",
                sel.hidden_units, sel.lambda, sel.cv_accuracy
            );
            ClassifierCheckpoint::new(&fit.model, &norm, Some(sel)).save(&out.join("classifier.json"))?;
        }
        Command::Evaluate { checkpoint, test } => {
            let (ck, model) = ClassifierCheckpoint::load(&checkpoint)?;
            let data = pixels::read_pixels(&test, Role::Test)?;
            let examples = classifier::examples(&data.normalized_with(&ck.normalization)?)?;
            let eval = classifier::evaluate(&model, &examples, cfg.threshold, cfg.positive_label)?;
            let sel = ck.selection.unwrap_or(Selection {
                hidden_units: model.layers()[0].spec().output_width,
                lambda: f64::NAN,
                cv_accuracy: f64::NAN,
                k: 0,
                builtup_original: 0,
                builtup_generated: 0,
                nonbuiltup: 0,
            });
            let record = AccuracyRecord::new(
                sel.k,
                (sel.builtup_original, sel.builtup_generated, sel.nonbuiltup),
                (sel.hidden_units, sel.lambda, sel.cv_accuracy),
                &eval,
            );
            print_accuracy(std::slice::from_ref(&record));
            let mut report = Report::new(cfg.master_seed, cfg.alpha);
            report.accuracy_table.push(record);
            fsutil::write_json(&out.join("evaluation_report.json"), &report)?;
        }
        Command::ClassifyScene { checkpoint, scene: scene_path } => {
            let (ck, model) = ClassifierCheckpoint::load(&checkpoint)?;
            let grid = scene::read_scene(&scene_path)?;
            let labels = classify_scene(&model, &grid, &ck.normalization, cfg.threshold)?;
            write_raster(&out, "scene", grid.width, grid.height, cfg.threshold, &labels)?;
        }
        Command::Experiment { train, test, scene } => {
            cfg.train = train.or(cfg.train);
            cfg.test = test.or(cfg.test);
            cfg.scene = scene.or(cfg.scene);
            let report = pipeline::run_experiment(&cfg, &mut |m| eprintln!("{m}"))?;
            if !report.ks_table.is_empty() {
                print_validation(&report);
            }
            print_accuracy(&report.accuracy_table);
            println!("wrote {}", out.join(pipeline::MANIFEST_FILE).display());
        }
        Command::MakeScenario { scene_size } => {
            if scene_size == 0 {
                return Err(Error::Argument("scene-size must be >= 1".to_string()));
            }
            let spec = ScenarioSpec::default();
            let sc = spec.generate(cfg.master_seed)?;
            pixels::save_pixels(&out.join("train.csv"), &sc.train.samples)?;
            pixels::save_pixels(&out.join("test.csv"), &sc.test.samples)?;
            let (grid, truth) = spec.scene(scene_size, cfg.master_seed)?;
            fsutil::write_with(&out.join("scene.csv"), |w| scene::write_scene(w, &grid))?;
            fsutil::write_with(&out.join("scene_truth.pgm"), |w| {
                scene::write_pgm(w, grid.width, grid.height, &truth)
            })?;
            println!("wrote train.csv, test.csv, scene.csv and scene_truth.pgm to {}", out.display());
        }
    }
    Ok(exit::OK)
}

fn write_raster(dir: &Path, stem: &str, w: usize, h: usize, threshold: f64, labels: &[u8]) -> Result<()> {
    let raster = format!("{stem}.pgm");
    fsutil::write_with(&dir.join(&raster), |out| scene::write_pgm(out, w, h, labels))?;
    let side = scene::SceneSidecar::new(w, h, threshold, labels, &raster);
    fsutil::write_json(&dir.join(format!("{stem}.json")), &side)?;
    println!(
        "{w}x{h} scene: {} built-up, {} non-built-up pixels -> {}",
        side.builtup_pixels,
        side.nonbuiltup_pixels,
        dir.join(raster).display()
    );
    Ok(())
}

fn print_validation(report: &Report) {
    println!("set band  KS D     p        pass");
    for e in &report.ks_table {
        println!("{:>3} {:<4} {:.4}  {:.4}   {}", e.set, e.band, e.statistic, e.p_value, e.pass);
    }
    println!("set Ball stat  p       pass");
    for e in &report.ball_table {
        println!("{:>3} {:.6}  {:.4}  {}", e.set, e.statistic, e.p_value, e.pass);
    }
}

fn print_accuracy(rows: &[AccuracyRecord]) {
    println!("k  BU(orig) BU(gen) NBU  H  lambda  sens    spec    PPV     NPV     acc     kappa");
    let f = |v: Option<f64>| v.map_or("  -   ".to_string(), |x| format!("{x:.4}"));
    for r in rows {
        println!(
            "{:<2} {:>8} {:>7} {:>4} {:>2}  {:<6}  {}  {}  {}  {}  {:.4}  {:.4}",
            r.k,
            r.builtup_original,
            r.builtup_generated,
            r.nonbuiltup,
            r.chosen_hidden_units,
            r.chosen_lambda,
            f(r.sensitivity),
            f(r.specificity),
            f(r.ppv),
            f(r.npv),
            r.accuracy,
            r.kappa
        );
    }
}
