use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::warn;

use crate::error::{CliError, CliResult};
use crate::manifest::{absolute, read_schedule, read_toml, schedule_to_string, write_file, Manifest};
use crate::settings::{ExploreSettings, GenerateSettings, LabelSettings, ModelFlags, StreamSettings, TokenizeSettings};
use crate::Common;
use rost_core::eval::{
    mutual_information, run_experiment, schedules_from_str, schedules_to_string, ExperimentConfig, MapSource,
};
use rost_core::explore::{run_exploration, ExploreConfig, Policy, ScoringOptions};
use rost_core::model::{fold_in_label, read_checkpoint, write_checkpoint, TopicModel};
use rost_core::stream::{run_stream, StreamConfig};
use rost_core::world::{
    load_ground_truth, load_word_map, load_word_stream, read_pgm, tokenize_image, train_codebook, write_ground_truth,
    write_pgm, write_word_map, Family, GrayImage, SyntheticSpec, WordMap,
};
use rost_core::{CellKey, Labeling, RngSeed};

fn seed_of(common: &Common) -> CliResult<u64> {
    let seed = common.seed.unwrap_or(0);
    // Manifests store the seed as a TOML integer.
    if seed > i64::MAX as u64 {
        return Err(CliError::Config(format!("seed must be at most {}", i64::MAX)));
    }
    Ok(seed)
}

fn config_or_default<T: serde::de::DeserializeOwned + Default>(common: &Common) -> CliResult<T> {
    match &common.config {
        Some(p) => read_toml(p),
        None => Ok(T::default()),
    }
}

fn required(path: &Path, what: &str) -> CliResult<PathBuf> {
    if path.as_os_str().is_empty() {
        return Err(CliError::Config(format!("missing {what}")));
    }
    absolute(path)
}

// ---- generate ----

pub fn generate(
    common: &Common,
    family: Option<Family>,
    width: Option<u32>,
    height: Option<u32>,
    terrains: Option<usize>,
) -> CliResult<()> {
    let mut spec: SyntheticSpec = config_or_default(common)?;
    if let Some(f) = family {
        spec.family = f;
    }
    spec.width = width.unwrap_or(spec.width);
    spec.height = height.unwrap_or(spec.height);
    spec.terrains = terrains.unwrap_or(spec.terrains);
    spec.validate()?;
    let mut m =
        Manifest::new("generate", seed_of(common)?, &[("map", "map.txt"), ("ground_truth", "ground_truth.txt")]);
    m.generate = Some(GenerateSettings { spec });
    m.write(&common.out)?;
    run_generate(&m, &common.out)
}

fn run_generate(m: &Manifest, out: &Path) -> CliResult<()> {
    let s = m.generate.as_ref().ok_or_else(|| CliError::Config("manifest lacks [generate]".into()))?;
    let world = s.spec.generate(RngSeed(m.seed))?;
    write_file(out, "map.txt", &write_word_map(&world))?;
    write_file(out, "ground_truth.txt", &write_ground_truth(world.ground_truth().unwrap_or(&[]), world.bounds()))?;
    println!("generated {}x{} map with {} words", world.bounds().width, world.bounds().height, world.total_words());
    Ok(())
}

// ---- explore ----

pub fn explore(
    common: &Common,
    map: Option<PathBuf>,
    ground_truth: Option<PathBuf>,
    policy: Option<Policy>,
    steps: Option<u32>,
    flags: &ModelFlags,
) -> CliResult<()> {
    let mut s: ExploreSettings = config_or_default(common)?;
    s.map = required(&map.unwrap_or(s.map), "--map")?;
    s.ground_truth = ground_truth.or(s.ground_truth).map(|p| absolute(&p)).transpose()?;
    s.policy = policy.unwrap_or(s.policy);
    s.steps = steps.unwrap_or(s.steps);
    s.model.apply(flags);
    s.model.check_gamma()?;
    let mut m = Manifest::new(
        "explore",
        seed_of(common)?,
        &[
            ("path", "path.csv"),
            ("checkpoint", "model.ckpt"),
            ("labels", "labels.txt"),
            ("label_image", "labels.pgm"),
            ("schedule", "schedule.txt"),
        ],
    );
    if s.ground_truth.is_some() {
        m.artifacts.insert("metrics".into(), "metrics.csv".into());
    }
    m.explore = Some(s);
    m.write(&common.out)?;
    run_explore(&m, &common.out, None)
}

fn load_map(map: &Path, gt: Option<&Path>) -> CliResult<WordMap> {
    let world = load_word_map(map)?;
    Ok(match gt {
        Some(p) => {
            let labels = load_ground_truth(p, world.bounds())?;
            world.with_ground_truth(labels)?
        }
        None => world,
    })
}

fn run_explore(m: &Manifest, out: &Path, replay: Option<&[u32]>) -> CliResult<()> {
    let s = m.explore.as_ref().ok_or_else(|| CliError::Config("manifest lacks [explore]".into()))?;
    let world = load_map(&s.map, s.ground_truth.as_deref())?;
    let cfg = ExploreConfig {
        policy: s.policy,
        steps: s.steps,
        params: s.model.params(world.vocab().size())?,
        neighborhood: s.model.neighborhood(),
        refine: s.model.refinement(),
        scoring: ScoringOptions { gamma: s.model.gamma },
        recompute_path_topics: s.recompute_path_topics,
        start: s.start.map(|[x, y]| CellKey::spatial(x, y)),
    };
    let master = RngSeed(m.seed);
    let run = run_exploration(&world, &cfg, master.derive(0), replay)?;

    let mut csv = String::from("step,x,y,chosen_weight,candidates\n");
    for (i, c) in run.path.iter().enumerate() {
        let _ = write!(csv, "{i},{},{},", c.x, c.y);
        if let Some(rec) = i.checked_sub(1).map(|j| &run.moves[j]) {
            let cands: Vec<String> = rec.candidates.iter().map(|(g, w)| format!("{}:{}:{w}", g.x, g.y)).collect();
            let _ = write!(csv, "{},{}", rec.chosen_weight, cands.join(";"));
        } else {
            csv.push(',');
        }
        csv.push('\n');
    }
    write_file(out, "path.csv", &csv)?;
    write_file(out, "schedule.txt", &schedule_to_string(&run.schedule))?;
    std::fs::create_dir_all(out).map_err(|e| crate::error::io_err(out, e))?;
    write_checkpoint(&run.model, &out.join("model.ckpt"))?;

    let labels = fold_in_label(&world, &run.model, s.fold_in_iterations, &mut master.derive(1).rng())?;
    write_labels(out, &labels, run.model.topics(), s.scale)?;
    if let Some(gt) = world.ground_truth_labeling() {
        write_metrics(out, &labels, &gt)?;
    }
    let distinct: std::collections::BTreeSet<_> = run.path.iter().collect();
    println!(
        "{} steps, {} distinct cells, {} words in the model",
        run.path.len(),
        distinct.len(),
        run.model.total_words()
    );
    Ok(())
}

fn write_labels(out: &Path, labels: &Labeling, topics: usize, scale: u32) -> CliResult<()> {
    let text = write_ground_truth(&labels.labels, labels.bounds);
    write_file(out, "labels.txt", &text)?;
    write_pgm(&label_image(labels, topics, scale.max(1)), &out.join("labels.pgm"))?;
    Ok(())
}

fn write_metrics(out: &Path, labels: &Labeling, gt: &Labeling) -> CliResult<()> {
    let mi = mutual_information(labels, gt)?;
    write_file(out, "metrics.csv", &format!("# mutual information in bits\nmi_vs_gt\n{mi}\n"))
}

/// One gray level per topic, spread over 32..=255; unlabeled cells are black.
fn label_image(labels: &Labeling, topics: usize, scale: u32) -> GrayImage {
    let (w, h) = (labels.bounds.width, labels.bounds.height);
    let level = |l: Option<u32>| match l {
        None => 0u8,
        Some(_) if topics <= 1 => 255,
        Some(k) => (32 + (k as usize * 223) / (topics - 1)) as u8,
    };
    let mut px = Vec::with_capacity((w * h * scale * scale) as usize);
    for y in 0..h * scale {
        for x in 0..w * scale {
            px.push(level(labels.labels[((y / scale) * w + x / scale) as usize]));
        }
    }
    GrayImage::from_raw(w * scale, h * scale, px).expect("buffer matches dimensions")
}

// ---- stream ----

pub fn stream(common: &Common, input: Option<PathBuf>, flags: &ModelFlags) -> CliResult<()> {
    let mut s: StreamSettings = config_or_default(common)?;
    s.input = required(&input.unwrap_or(s.input), "--input")?;
    s.model.apply(flags);
    s.model.check_gamma()?;
    let mut m = Manifest::new(
        "stream",
        seed_of(common)?,
        &[
            ("scores", "stream.csv"),
            ("refine_histogram", "refine_histogram.csv"),
            ("checkpoint", "model.ckpt"),
            ("schedule", "schedule.txt"),
        ],
    );
    m.stream = Some(s);
    m.write(&common.out)?;
    run_stream_cmd(&m, &common.out, None)
}

fn run_stream_cmd(m: &Manifest, out: &Path, replay: Option<&[u32]>) -> CliResult<()> {
    let s = m.stream.as_ref().ok_or_else(|| CliError::Config("manifest lacks [stream]".into()))?;
    let input = load_word_stream(&s.input)?;
    let cfg = StreamConfig {
        params: s.model.params(input.vocab.size())?,
        neighborhood: s.model.neighborhood(),
        refine: s.model.refinement(),
        gamma: s.model.gamma,
    };
    let run = run_stream(&input, &cfg, RngSeed(m.seed), replay)?;

    let mut csv = String::from("t,x,y,label,word_perplexity,topic_perplexity,curiosity\n");
    for r in &run.rows {
        let label = r.label.map_or_else(String::new, |l| l.to_string());
        let _ = writeln!(
            csv,
            "{},{},{},{label},{},{},{}",
            r.t, r.x, r.y, r.word_perplexity, r.topic_perplexity, r.curiosity
        );
    }
    write_file(out, "stream.csv", &csv)?;
    let total: u64 = run.refine_ages.values().sum();
    let mut hist = String::from("age,draws,fraction\n");
    for (age, n) in &run.refine_ages {
        let _ = writeln!(hist, "{age},{n},{}", *n as f64 / total as f64);
    }
    write_file(out, "refine_histogram.csv", &hist)?;
    write_file(out, "schedule.txt", &schedule_to_string(&run.schedule))?;
    write_checkpoint(&run.model, &out.join("model.ckpt"))?;
    println!("{} documents over {} timesteps", run.rows.len(), run.schedule.len());
    Ok(())
}

// ---- evaluate ----

pub fn evaluate(
    common: &Common,
    policies: Vec<Policy>,
    restarts: Option<u32>,
    parallel: bool,
    flags: &ModelFlags,
) -> CliResult<()> {
    let path = common.config.as_ref().ok_or_else(|| CliError::Config("evaluate needs --config".into()))?;
    let mut cfg: ExperimentConfig = read_toml(path)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if cfg.seed > i64::MAX as u64 {
        return Err(CliError::Config(format!("seed must be at most {}", i64::MAX)));
    }
    if !policies.is_empty() {
        cfg.policies = policies;
    }
    cfg.restarts = restarts.unwrap_or(cfg.restarts);
    cfg.parallel |= parallel;
    macro_rules! take {
        ($($f:ident),*) => { $(if let Some(v) = flags.$f { cfg.$f = v; })* };
    }
    take!(topics, alpha, beta, eta, budget_ms, gamma);
    if let Some(r) = flags.radius {
        cfg.spatial_radius = r;
    }
    if flags.draws.is_some() {
        cfg.draws = flags.draws;
    } else if flags.budget_ms.is_some() {
        cfg.draws = None;
    }
    if let MapSource::Files { map, ground_truth } = &mut cfg.map {
        *map = absolute(map)?;
        if let Some(gt) = ground_truth {
            *gt = absolute(gt)?;
        }
    }
    cfg.validate()?;
    let mut m = Manifest::new(
        "evaluate",
        cfg.seed,
        &[
            ("results", "results.csv"),
            ("summary", "summary.csv"),
            ("timings", "timings.csv"),
            ("schedule", "schedules.txt"),
        ],
    );
    m.evaluate = Some(cfg);
    m.write(&common.out)?;
    run_evaluate(&m, &common.out, None)
}

fn run_evaluate(m: &Manifest, out: &Path, replay: Option<&rost_core::eval::Schedules>) -> CliResult<()> {
    let cfg = m.evaluate.as_ref().ok_or_else(|| CliError::Config("manifest lacks [evaluate]".into()))?;
    let world = cfg.map.load()?;
    let results = run_experiment(cfg, &world, replay)?;
    for f in results.failures() {
        warn!(
            "run {} len {} restart {} failed: {}",
            f.key.policy,
            f.key.path_len,
            f.key.restart,
            f.error.as_deref().unwrap_or("")
        );
    }
    write_file(out, "results.csv", &results.results_csv())?;
    write_file(out, "summary.csv", &results.summary_csv())?;
    write_file(out, "timings.csv", &results.timings_csv())?;
    write_file(out, "schedules.txt", &schedules_to_string(&results.schedules()))?;
    print!("{}", results.summary_csv());
    Ok(())
}

// ---- label ----

pub fn label(
    common: &Common,
    map: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
    ground_truth: Option<PathBuf>,
    iterations: Option<u32>,
) -> CliResult<()> {
    let mut s: LabelSettings = config_or_default(common)?;
    s.map = required(&map.unwrap_or(s.map), "--map")?;
    s.checkpoint = required(&checkpoint.unwrap_or(s.checkpoint), "--checkpoint")?;
    s.ground_truth = ground_truth.or(s.ground_truth).map(|p| absolute(&p)).transpose()?;
    s.iterations = iterations.unwrap_or(s.iterations);
    let mut m = Manifest::new("label", seed_of(common)?, &[("labels", "labels.txt"), ("label_image", "labels.pgm")]);
    if s.ground_truth.is_some() {
        m.artifacts.insert("metrics".into(), "metrics.csv".into());
    }
    m.label = Some(s);
    m.write(&common.out)?;
    run_label(&m, &common.out)
}

fn run_label(m: &Manifest, out: &Path) -> CliResult<()> {
    let s = m.label.as_ref().ok_or_else(|| CliError::Config("manifest lacks [label]".into()))?;
    let world = load_map(&s.map, s.ground_truth.as_deref())?;
    let model: TopicModel = read_checkpoint(&s.checkpoint)?;
    let labels = fold_in_label(&world, &model, s.iterations, &mut RngSeed(m.seed).rng())?;
    write_labels(out, &labels, model.topics(), s.scale)?;
    if let Some(gt) = world.ground_truth_labeling() {
        write_metrics(out, &labels, &gt)?;
    }
    println!("labeled {} cells", labels.labeled_count());
    Ok(())
}

// ---- tokenize ----

pub fn tokenize(
    common: &Common,
    train: Vec<PathBuf>,
    image: Option<PathBuf>,
    codebook_size: Option<usize>,
    patch: Option<u32>,
    cell_width: Option<u32>,
    stride: Option<u32>,
) -> CliResult<()> {
    let mut s: TokenizeSettings = config_or_default(common)?;
    s.image = required(&image.unwrap_or(s.image), "--image")?;
    if !train.is_empty() {
        s.train = train;
    }
    if s.train.is_empty() {
        s.train = vec![s.image.clone()];
    }
    s.train = s.train.iter().map(|p| absolute(p)).collect::<CliResult<_>>()?;
    s.codebook_size = codebook_size.unwrap_or(s.codebook_size);
    s.patch = patch.unwrap_or(s.patch);
    s.cell_width = cell_width.unwrap_or(s.cell_width);
    s.stride = stride.unwrap_or(s.stride);
    let mut m = Manifest::new("tokenize", seed_of(common)?, &[("map", "map.txt")]);
    m.tokenize = Some(s);
    m.write(&common.out)?;
    run_tokenize(&m, &common.out)
}

fn run_tokenize(m: &Manifest, out: &Path) -> CliResult<()> {
    let s = m.tokenize.as_ref().ok_or_else(|| CliError::Config("manifest lacks [tokenize]".into()))?;
    let images = s.train.iter().map(|p| read_pgm(p)).collect::<rost_core::Result<Vec<_>>>()?;
    let codebook = train_codebook(&images, s.codebook_size, s.patch, RngSeed(m.seed))?;
    let map = tokenize_image(&read_pgm(&s.image)?, &codebook, s.cell_width, s.stride)?;
    write_file(out, "map.txt", &write_word_map(&map))?;
    println!("{}x{} cells, {} words", map.bounds().width, map.bounds().height, map.total_words());
    Ok(())
}

// ---- replay ----

pub fn replay(manifest: &Path, out: &Path) -> CliResult<()> {
    let m = Manifest::read(manifest)?;
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let schedule = m.artifact(dir, "schedule");
    m.write(out)?;
    match m.command.as_str() {
        "generate" => run_generate(&m, out),
        "label" => run_label(&m, out),
        "tokenize" => run_tokenize(&m, out),
        "explore" => {
            let s = read_schedule(&schedule.ok_or_else(|| CliError::Config("manifest names no schedule".into()))?)?;
            run_explore(&m, out, Some(&s))
        }
        "stream" => {
            let s = read_schedule(&schedule.ok_or_else(|| CliError::Config("manifest names no schedule".into()))?)?;
            run_stream_cmd(&m, out, Some(&s))
        }
        "evaluate" => {
            let path = schedule.ok_or_else(|| CliError::Config("manifest names no schedule".into()))?;
            let text = std::fs::read_to_string(&path).map_err(|e| crate::error::io_err(&path, e))?;
            run_evaluate(&m, out, Some(&schedules_from_str(&text, &path)?))
        }
        other => Err(CliError::Config(format!("unknown command `{other}` in manifest"))),
    }
}
