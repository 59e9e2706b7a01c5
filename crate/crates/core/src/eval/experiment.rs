//! Policy comparison: explore from many restarts, label the whole map with
//! each learned model, and score the labeling against the batch oracle and
//! the ground truth.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mi::{entropy, mutual_information};
use super::stats::{mean, stddev};
use crate::error::{Error, Result};
use crate::explore::{run_exploration, ExploreConfig, Policy, ScoringOptions};
use crate::grid::{CellKey, NeighborhoodConfig};
use crate::labeling::Labeling;
use crate::model::{fold_in_label, Budget, ModelParams, RefinementConfig, TopicModel, DEFAULT_FOLD_IN_ITERATIONS};
use crate::seed::RngSeed;
use crate::world::{load_ground_truth, load_word_map, SyntheticSpec, WordMap};

pub const RESULTS_SCHEMA: &str = "# rost-results v1 (mutual information in bits)";
pub const SUMMARY_SCHEMA: &str = "# rost-summary v1 (mutual information in bits)";
pub const TIMINGS_SCHEMA: &str = "# rost-timings v1";

/// Adds every cell's words to a fresh model, runs batch Gibbs sweeps and
/// labels each cell with its majority topic.
pub fn batch_oracle_labeling(
    world: &WordMap,
    params: ModelParams,
    neighborhood: NeighborhoodConfig,
    iterations: u32,
    seed: RngSeed,
) -> Result<(Labeling, TopicModel)> {
    let mut model = TopicModel::new(params, world.bounds().with_duration(1), neighborhood)?;
    let mut rng = seed.rng();
    for (i, words) in world.cells().iter().enumerate() {
        model.add_observation(world.bounds().key_at(i), words, &mut rng)?;
    }
    model.batch_refine(iterations, &mut rng);
    Ok((model.majority_labels(), model))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapSource {
    Synthetic {
        #[serde(default)]
        spec: SyntheticSpec,
        seed: u64,
    },
    Files {
        map: PathBuf,
        ground_truth: Option<PathBuf>,
    },
}

impl MapSource {
    pub fn name(&self) -> String {
        match self {
            MapSource::Synthetic { spec, seed } => {
                format!("synthetic-{:?}-{}x{}-s{seed}", spec.family, spec.width, spec.height).to_lowercase()
            }
            MapSource::Files { map, .. } => {
                map.file_stem().map_or_else(|| "map".into(), |s| s.to_string_lossy().into_owned())
            }
        }
    }

    pub fn load(&self) -> Result<WordMap> {
        match self {
            MapSource::Synthetic { spec, seed } => spec.generate(RngSeed(*seed)),
            MapSource::Files { map, ground_truth } => {
                let world = load_word_map(map)?;
                match ground_truth {
                    Some(p) => {
                        let gt = load_ground_truth(p, world.bounds())?;
                        world.with_ground_truth(gt)
                    }
                    None => Ok(world),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub map: MapSource,
    pub policies: Vec<Policy>,
    pub path_lengths: Vec<u32>,
    pub restarts: u32,
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    /// Milliseconds of refinement per step; ignored when `draws` is set.
    pub budget_ms: u64,
    /// Fixed refinement draws per step.
    pub draws: Option<u32>,
    pub gamma: f64,
    pub spatial_radius: u32,
    pub batch_iterations: u32,
    pub fold_in_iterations: u32,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            map: MapSource::Synthetic { spec: SyntheticSpec::default(), seed: 1 },
            policies: Policy::ALL.to_vec(),
            path_lengths: vec![10, 20, 40, 80, 160, 320],
            restarts: 20,
            topics: 64,
            alpha: 0.1,
            beta: 0.1,
            eta: 0.5,
            budget_ms: 200,
            draws: None,
            gamma: 1.0,
            spatial_radius: 1,
            batch_iterations: 100,
            fold_in_iterations: DEFAULT_FOLD_IN_ITERATIONS,
            seed: 0,
            parallel: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        self.refinement().validate()?;
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn budget(&self) -> Budget {
        match self.draws {
            Some(n) => Budget::Draws(n),
            None => Budget::millis(self.budget_ms),
        }
    }

    pub fn refinement(&self) -> RefinementConfig {
        RefinementConfig { eta: self.eta, budget: self.budget(), iterations: self.batch_iterations }
    }

    pub fn neighborhood(&self) -> NeighborhoodConfig {
        NeighborhoodConfig { spatial_radius: self.spatial_radius, temporal_depth: 1 }
    }

    pub fn params(&self, vocab: usize) -> Result<ModelParams> {
        ModelParams::new(self.topics, vocab, self.alpha, self.beta)
    }

    /// Every (policy, path length, restart) case in output order.
    pub fn cases(&self) -> Vec<RunKey> {
        let mut out = Vec::new();
        for &policy in &self.policies {
            for &path_len in &self.path_lengths {
                for restart in 0..self.restarts {
                    out.push(RunKey { policy, path_len, restart });
                }
            }
        }
        out
    }

    /// Start cell of restart `r`, shared by every policy and path length.
    pub fn start_cell(&self, world: &WordMap, restart: u32) -> CellKey {
        let mut rng = RngSeed(self.seed).derive_all(&[0x57a27, restart as u64]).rng();
        let b = world.bounds();
        CellKey::spatial(rng.random_range(0..b.width), rng.random_range(0..b.height))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RunKey {
    pub policy: Policy,
    pub path_len: u32,
    pub restart: u32,
}

impl RunKey {
    fn seed(&self, master: u64) -> RngSeed {
        let p = Policy::ALL.iter().position(|&q| q == self.policy).unwrap_or(0) as u64;
        RngSeed(master).derive_all(&[p, self.path_len as u64, self.restart as u64])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRow {
    pub key: RunKey,
    pub mi_vs_batch: Option<f64>,
    pub mi_vs_gt: Option<f64>,
    pub runtime_ms: f64,
    pub schedule: Vec<u32>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub policy: Policy,
    pub path_len: u32,
    pub runs: usize,
    pub mean_batch: f64,
    pub sd_batch: f64,
    pub mean_gt: Option<f64>,
    pub sd_gt: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ExperimentResults {
    pub map: String,
    pub rows: Vec<RunRow>,
    pub summary: Vec<SummaryRow>,
    /// Entropy of the batch oracle labeling, the ceiling for `mi_vs_batch`.
    pub batch_entropy: f64,
    /// Entropy of the ground truth, when available.
    pub gt_entropy: Option<f64>,
}

/// Recorded refinement schedules keyed by run; replaying them makes an
/// experiment with a wall-clock budget reproducible.
pub type Schedules = BTreeMap<RunKey, Vec<u32>>;

pub fn run_experiment(
    cfg: &ExperimentConfig,
    world: &WordMap,
    replay: Option<&Schedules>,
) -> Result<ExperimentResults> {
    cfg.validate()?;
    let params = cfg.params(world.vocab().size())?;
    let (batch, _) = batch_oracle_labeling(
        world,
        params,
        cfg.neighborhood(),
        cfg.batch_iterations,
        RngSeed(cfg.seed).derive(0xba7c),
    )?;
    let gt = world.ground_truth_labeling();

    let cases = cfg.cases();
    let one = |key: &RunKey| run_case(cfg, world, params, &batch, gt.as_ref(), *key, replay.and_then(|s| s.get(key)));
    let rows: Vec<RunRow> =
        if cfg.parallel { cases.par_iter().map(one).collect() } else { cases.iter().map(one).collect() };

    Ok(ExperimentResults {
        map: cfg.map.name(),
        summary: summarize(&rows),
        batch_entropy: entropy(&batch),
        gt_entropy: gt.as_ref().map(entropy),
        rows,
    })
}

fn run_case(
    cfg: &ExperimentConfig,
    world: &WordMap,
    params: ModelParams,
    batch: &Labeling,
    gt: Option<&Labeling>,
    key: RunKey,
    replay: Option<&Vec<u32>>,
) -> RunRow {
    let started = Instant::now();
    let seed = key.seed(cfg.seed);
    let explore = ExploreConfig {
        policy: key.policy,
        steps: key.path_len,
        params,
        neighborhood: cfg.neighborhood(),
        refine: cfg.refinement(),
        scoring: ScoringOptions { gamma: cfg.gamma },
        recompute_path_topics: false,
        start: Some(cfg.start_cell(world, key.restart)),
    };
    let outcome = (|| -> Result<(f64, Option<f64>, Vec<u32>)> {
        let run = run_exploration(world, &explore, seed, replay.map(Vec::as_slice))?;
        let labels = fold_in_label(world, &run.model, cfg.fold_in_iterations, &mut seed.derive(1).rng())?;
        let vs_batch = mutual_information(&labels, batch)?;
        let vs_gt = gt.map(|g| mutual_information(&labels, g)).transpose()?;
        Ok((vs_batch, vs_gt, run.schedule))
    })();
    let runtime_ms = started.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok((b, g, schedule)) => RunRow { key, mi_vs_batch: Some(b), mi_vs_gt: g, runtime_ms, schedule, error: None },
        Err(e) => RunRow {
            key,
            mi_vs_batch: None,
            mi_vs_gt: None,
            runtime_ms,
            schedule: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

fn summarize(rows: &[RunRow]) -> Vec<SummaryRow> {
    let mut groups: Vec<((Policy, u32), Vec<&RunRow>)> = Vec::new();
    for r in rows {
        let k = (r.key.policy, r.key.path_len);
        match groups.last_mut() {
            Some((g, v)) if *g == k => v.push(r),
            _ => groups.push((k, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|((policy, path_len), rs)| {
            let b: Vec<f64> = rs.iter().filter_map(|r| r.mi_vs_batch).collect();
            let g: Vec<f64> = rs.iter().filter_map(|r| r.mi_vs_gt).collect();
            SummaryRow {
                policy,
                path_len,
                runs: b.len(),
                mean_batch: mean(&b),
                sd_batch: stddev(&b),
                mean_gt: (!g.is_empty()).then(|| mean(&g)),
                sd_gt: (!g.is_empty()).then(|| stddev(&g)),
            }
        })
        .collect()
}

impl ExperimentResults {
    /// MI values of one case, in restart order.
    pub fn values(&self, policy: Policy, path_len: u32, vs_gt: bool) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.key.policy == policy && r.key.path_len == path_len)
            .filter_map(|r| if vs_gt { r.mi_vs_gt } else { r.mi_vs_batch })
            .collect()
    }

    pub fn failures(&self) -> impl Iterator<Item = &RunRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }

    /// Per-run results. Deterministic given the config and schedules.
    pub fn results_csv(&self) -> String {
        let mut s = format!("{RESULTS_SCHEMA}\nmap,policy,path_len,restart,mi_vs_batch,mi_vs_gt,error\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                self.map,
                r.key.policy,
                r.key.path_len,
                r.key.restart,
                opt(r.mi_vs_batch),
                opt(r.mi_vs_gt),
                r.error.as_deref().unwrap_or("").replace([',', '\n'], ";")
            );
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = format!(
            "{SUMMARY_SCHEMA}\nmap,policy,path_len,runs,mean_mi_vs_batch,sd_mi_vs_batch,mean_mi_vs_gt,sd_mi_vs_gt\n"
        );
        for r in &self.summary {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                self.map,
                r.policy,
                r.path_len,
                r.runs,
                r.mean_batch,
                r.sd_batch,
                opt(r.mean_gt),
                opt(r.sd_gt)
            );
        }
        s
    }

    /// Wall-clock runtime per run; varies between otherwise identical runs.
    pub fn timings_csv(&self) -> String {
        let mut s = format!("{TIMINGS_SCHEMA}\nmap,policy,path_len,restart,runtime_ms\n");
        for r in &self.rows {
            let _ =
                writeln!(s, "{},{},{},{},{:.3}", self.map, r.key.policy, r.key.path_len, r.key.restart, r.runtime_ms);
        }
        s
    }

    pub fn schedules(&self) -> Schedules {
        self.rows.iter().map(|r| (r.key, r.schedule.clone())).collect()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// `policy,path_len,restart,d1 d2 d3 ...` per line.
pub fn schedules_to_string(s: &Schedules) -> String {
    let mut out = String::new();
    for (k, draws) in s {
        let d: Vec<String> = draws.iter().map(u32::to_string).collect();
        let _ = writeln!(out, "{},{},{},{}", k.policy, k.path_len, k.restart, d.join(" "));
    }
    out
}

pub fn schedules_from_str(text: &str, origin: &std::path::Path) -> Result<Schedules> {
    let mut out = Schedules::new();
    for (n, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.splitn(4, ',').collect();
        if f.len() != 4 {
            return Err(Error::parse(origin, n, "expected `policy,path_len,restart,draws...`"));
        }
        let bad = |_| Error::parse(origin, n, "malformed schedule entry");
        let key = RunKey {
            policy: f[0].parse().map_err(|e: Error| Error::parse(origin, n, e.to_string()))?,
            path_len: f[1].parse().map_err(bad)?,
            restart: f[2].parse().map_err(bad)?,
        };
        let draws = f[3].split_whitespace().map(|d| d.parse().map_err(bad)).collect::<Result<_>>()?;
        out.insert(key, draws);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Family;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            map: MapSource::Synthetic {
                spec: SyntheticSpec {
                    family: Family::Voronoi,
                    width: 12,
                    height: 12,
                    terrains: 2,
                    words_per_cell: 8.0,
                    ..Default::default()
                },
                seed: 3,
            },
            policies: vec![Policy::RandomWalk, Policy::TopicPerplexity],
            path_lengths: vec![3, 6],
            restarts: 2,
            topics: 4,
            draws: Some(3),
            batch_iterations: 10,
            fold_in_iterations: 5,
            seed: 17,
            ..Default::default()
        }
    }

    #[test]
    fn oracle_with_one_topic_has_no_information() {
        let cfg = small_cfg();
        let world = cfg.map.load().unwrap();
        let (labels, model) = batch_oracle_labeling(
            &world,
            ModelParams::new(1, world.vocab().size(), 0.1, 0.1).unwrap(),
            NeighborhoodConfig::default(),
            3,
            RngSeed(0),
        )
        .unwrap();
        assert_eq!(model.total_words() as usize, world.total_words());
        let gt = world.ground_truth_labeling().unwrap();
        assert_eq!(mutual_information(&labels, &gt).unwrap(), 0.0);
    }

    #[test]
    fn experiment_shape_and_determinism() {
        let cfg = small_cfg();
        let world = cfg.map.load().unwrap();
        let a = run_experiment(&cfg, &world, None).unwrap();
        assert_eq!(a.rows.len(), 8);
        assert_eq!(a.summary.len(), 4);
        assert_eq!(a.failures().count(), 0);
        let par = run_experiment(&ExperimentConfig { parallel: true, ..cfg.clone() }, &world, None).unwrap();
        assert_eq!(a.results_csv(), par.results_csv());
        assert_eq!(a.summary_csv(), par.summary_csv());
        assert!(a.results_csv().starts_with(RESULTS_SCHEMA));
        let sched = a.schedules();
        let text = schedules_to_string(&sched);
        assert_eq!(schedules_from_str(&text, std::path::Path::new("s")).unwrap(), sched);
    }

    #[test]
    fn no_policies_no_rows() {
        let cfg = ExperimentConfig { policies: vec![], ..small_cfg() };
        let world = cfg.map.load().unwrap();
        let r = run_experiment(&cfg, &world, None).unwrap();
        assert!(r.rows.is_empty() && r.summary.is_empty());
    }

    #[test]
    fn failed_runs_are_recorded() {
        let cfg = small_cfg();
        let world = cfg.map.load().unwrap();
        let bad = Schedules::from([(RunKey { policy: Policy::RandomWalk, path_len: 3, restart: 0 }, vec![1])]);
        let r = run_experiment(&cfg, &world, Some(&bad)).unwrap();
        assert_eq!(r.failures().count(), 1);
        assert!(r.results_csv().contains("replay schedule"));
    }

    #[test]
    fn missing_ground_truth_leaves_column_empty() {
        let cfg = small_cfg();
        let world = cfg.map.load().unwrap();
        let bare = WordMap::new(world.bounds(), world.vocab().clone(), world.cells().to_vec()).unwrap();
        let r = run_experiment(&cfg, &bare, None).unwrap();
        assert!(r.rows.iter().all(|row| row.mi_vs_gt.is_none() && row.mi_vs_batch.is_some()));
        assert!(r.gt_entropy.is_none());
    }
}
