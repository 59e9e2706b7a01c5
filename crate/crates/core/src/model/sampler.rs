use std::time::{Duration, Instant};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{draw_cumulative, TopicModel};
use crate::error::{Error, Result};
use crate::grid::CellKey;
use crate::seed::Rng;

/// How much refinement each timestep gets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Budget {
    /// Refine until the monotonic clock passes the budget. The clock is read
    /// between refinement draws, so a step can overshoot by one draw.
    WallClock(Duration),
    /// Exactly this many refinement draws; fully reproducible.
    Draws(u32),
}

impl Budget {
    pub fn millis(ms: u64) -> Self {
        Budget::WallClock(Duration::from_millis(ms))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementConfig {
    /// Probability of refining the newest timestep.
    pub eta: f64,
    pub budget: Budget,
    /// Full sweeps for batch refinement.
    pub iterations: u32,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        RefinementConfig { eta: 0.5, budget: Budget::millis(200), iterations: 100 }
    }
}

impl RefinementConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::Config(format!("eta must lie in [0, 1], got {}", self.eta)));
        }
        if let Budget::WallClock(d) = self.budget {
            if d.is_zero() {
                return Err(Error::Config("time budget must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RefineReport {
    pub draws: u32,
    /// Time from the start of refinement to the last budget check.
    pub elapsed: Duration,
    /// Longest gap between two budget checks, i.e. one draw.
    pub max_draw: Duration,
    /// Timestep refined by each draw.
    pub targets: Vec<u32>,
}

/// Draws a timestep to refine: `T` with probability `eta`, otherwise uniform
/// over `1..T`. With `T = 1` there is no history and the answer is always 1.
pub fn pick_refinement_time(now: u32, eta: f64, rng: &mut Rng) -> u32 {
    assert!(now >= 1, "refinement needs at least one timestep");
    if now == 1 {
        return 1;
    }
    if rng.random::<f64>() < eta {
        now
    } else {
        rng.random_range(1..now)
    }
}

impl TopicModel {
    /// Resamples every word of `c` in insertion order, updating all counts
    /// after each draw. Unknown cells are ignored.
    pub fn resample_cell(&mut self, c: CellKey, rng: &mut Rng) {
        let Some(&idx) = self.index.get(&c) else {
            return;
        };
        let k = self.params.topics;
        let (alpha, beta) = (self.params.alpha, self.params.beta);
        let mut context = vec![0.0; k];
        self.context_counts(c, &mut context);
        let mut cumulative = vec![0.0; k];

        let len = self.cells[idx].words.len();
        for i in 0..len {
            let (w, old) = {
                let cell = &self.cells[idx];
                (cell.words[i] as usize, cell.labels[i] as usize)
            };
            self.topic_word[w * k + old] -= 1;
            self.adjust_total(old, -1);
            self.cells[idx].counts[old] -= 1;
            context[old] -= 1.0;

            let row = &self.topic_word[w * k..(w + 1) * k];
            let mut acc = 0.0;
            for t in 0..k {
                acc += (row[t] as f64 + beta) * self.inv_denom[t] * (context[t] + alpha);
                cumulative[t] = acc;
            }
            let new = draw_cumulative(&cumulative, rng);

            self.topic_word[w * k + new] += 1;
            self.adjust_total(new, 1);
            let cell = &mut self.cells[idx];
            cell.counts[new] += 1;
            cell.labels[i] = new as u32;
            context[new] += 1.0;
        }
    }

    /// `iterations` full sweeps over every cell, time-major then row-major.
    pub fn batch_refine(&mut self, iterations: u32, rng: &mut Rng) {
        let mut order: Vec<CellKey> = self.cell_keys().collect();
        order.sort();
        for _ in 0..iterations {
            for &c in &order {
                self.resample_cell(c, rng);
            }
        }
    }

    /// Resamples every cell observed at timestep `t`.
    pub fn refine_timestep(&mut self, t: u32, rng: &mut Rng) {
        let cells = self.cells_at(t).to_vec();
        for c in cells {
            self.resample_cell(c, rng);
        }
    }

    /// Exactly `draws` refinement draws for current time `now`.
    pub fn refine_draws(&mut self, now: u32, eta: f64, draws: u32, rng: &mut Rng) -> RefineReport {
        let start = Instant::now();
        let mut report = RefineReport::default();
        if now == 0 {
            return report;
        }
        let mut last = start;
        for _ in 0..draws {
            let t = pick_refinement_time(now, eta, rng);
            self.refine_timestep(t, rng);
            report.targets.push(t);
            report.draws += 1;
            let tick = Instant::now();
            report.max_draw = report.max_draw.max(tick - last);
            last = tick;
        }
        report.elapsed = last - start;
        report
    }

    /// Refinement for current time `now` under `cfg.budget`. A wall-clock
    /// budget always performs at least one draw.
    pub fn realtime_refine(&mut self, now: u32, cfg: &RefinementConfig, rng: &mut Rng) -> RefineReport {
        let budget = match cfg.budget {
            Budget::Draws(n) => return self.refine_draws(now, cfg.eta, n, rng),
            Budget::WallClock(d) => d,
        };
        let mut report = RefineReport::default();
        if now == 0 {
            return report;
        }
        let start = Instant::now();
        let mut last = start;
        loop {
            if report.draws > 0 {
                let tick = Instant::now();
                report.max_draw = report.max_draw.max(tick - last);
                last = tick;
                if tick - start >= budget {
                    break;
                }
            }
            let t = pick_refinement_time(now, cfg.eta, rng);
            self.refine_timestep(t, rng);
            report.targets.push(t);
            report.draws += 1;
        }
        report.elapsed = last - start;
        report
    }
}
