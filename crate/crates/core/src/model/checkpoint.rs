//! Plain-text model checkpoints.
//!
//! ```text
//! ROST-CHECKPOINT 1
//! TOPICS <K> VOCAB <V> ALPHA <alpha> BETA <beta>
//! GRID <width> <height> <duration|-> RADIUS <r> DEPTH <d>
//! TOPIC-WORD <nonzero entries>
//! <topic> <word> <count>            one line per nonzero n_k^v, by topic then word
//! CELLS <cell count>
//! <x> <y> <t> : <w>:<z> <w>:<z> ...  insertion order; words in insertion order
//! TIMESTEPS <T>
//! <x>,<y>,<t> <x>,<y>,<t> ...        cells of timestep 1..T, one line each
//! ```
//!
//! Floats use the shortest representation that parses back to the same bits,
//! so write -> read -> write is byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use super::{ModelParams, TopicModel};
use crate::error::{Error, Result};
use crate::grid::{CellKey, GridBounds, NeighborhoodConfig};

pub const CHECKPOINT_MAGIC: &str = "ROST-CHECKPOINT 1";

impl TopicModel {
    pub fn to_checkpoint_string(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let _ = writeln!(s, "{CHECKPOINT_MAGIC}");
        let _ = writeln!(s, "TOPICS {} VOCAB {} ALPHA {} BETA {}", p.topics, p.vocab, p.alpha, p.beta);
        let dur = self.bounds.duration.map_or_else(|| "-".to_string(), |d| d.to_string());
        let _ = writeln!(
            s,
            "GRID {} {} {} RADIUS {} DEPTH {}",
            self.bounds.width,
            self.bounds.height,
            dur,
            self.neighborhood.spatial_radius,
            self.neighborhood.temporal_depth
        );
        let mut entries = Vec::new();
        for k in 0..p.topics {
            for v in 0..p.vocab {
                let n = self.topic_word[v * p.topics + k];
                if n > 0 {
                    entries.push((k, v, n));
                }
            }
        }
        let _ = writeln!(s, "TOPIC-WORD {}", entries.len());
        for (k, v, n) in entries {
            let _ = writeln!(s, "{k} {v} {n}");
        }
        let _ = writeln!(s, "CELLS {}", self.cells.len());
        for cell in &self.cells {
            let _ = write!(s, "{} {} {} :", cell.key.x, cell.key.y, cell.key.t);
            for (w, z) in cell.words.iter().zip(&cell.labels) {
                let _ = write!(s, " {w}:{z}");
            }
            s.push('\n');
        }
        let _ = writeln!(s, "TIMESTEPS {}", self.timesteps.len());
        for cells in &self.timesteps {
            let line: Vec<String> = cells.iter().map(|c| format!("{},{},{}", c.x, c.y, c.t)).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn from_checkpoint_str(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| Error::parse(origin, 0, format!("unexpected end of file, expected {what}")))
        };
        let err = |line: usize, msg: String| Error::parse(origin, line, msg);

        let (n, magic) = next("header")?;
        if magic.trim() != CHECKPOINT_MAGIC {
            return Err(err(n, format!("expected `{CHECKPOINT_MAGIC}`")));
        }

        let (n, line) = next("TOPICS line")?;
        let f = fields(line, &["TOPICS", "VOCAB", "ALPHA", "BETA"])
            .ok_or_else(|| err(n, "malformed TOPICS line".into()))?;
        let params = ModelParams::new(
            num(f[0], n, origin)?,
            num(f[1], n, origin)?,
            num(f[2], n, origin)?,
            num(f[3], n, origin)?,
        )
        .map_err(|e| err(n, e.to_string()))?;

        let (n, line) = next("GRID line")?;
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != 8 || tok[0] != "GRID" || tok[4] != "RADIUS" || tok[6] != "DEPTH" {
            return Err(err(n, "malformed GRID line".into()));
        }
        let mut bounds = GridBounds::new(num(tok[1], n, origin)?, num(tok[2], n, origin)?);
        if tok[3] != "-" {
            bounds = bounds.with_duration(num(tok[3], n, origin)?);
        }
        let hood =
            NeighborhoodConfig { spatial_radius: num(tok[5], n, origin)?, temporal_depth: num(tok[7], n, origin)? };
        let mut model = TopicModel::new(params, bounds, hood)?;

        let (n, line) = next("TOPIC-WORD line")?;
        let entries: usize = section(line, "TOPIC-WORD", n, origin)?;
        let mut expected = vec![0u32; params.topics * params.vocab];
        for _ in 0..entries {
            let (n, line) = next("topic-word entry")?;
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 3 {
                return Err(err(n, "expected `<topic> <word> <count>`".into()));
            }
            let (k, v, c): (usize, usize, u32) = (num(t[0], n, origin)?, num(t[1], n, origin)?, num(t[2], n, origin)?);
            if k >= params.topics || v >= params.vocab {
                return Err(err(n, format!("entry ({k}, {v}) outside the {}x{} matrix", params.topics, params.vocab)));
            }
            expected[v * params.topics + k] = c;
        }

        let (n, line) = next("CELLS line")?;
        let cells: usize = section(line, "CELLS", n, origin)?;
        for _ in 0..cells {
            let (n, line) = next("cell line")?;
            let (head, body) = line.split_once(':').ok_or_else(|| err(n, "cell line lacks `:`".into()))?;
            let h: Vec<&str> = head.split_whitespace().collect();
            if h.len() != 3 {
                return Err(err(n, "expected `<x> <y> <t> :`".into()));
            }
            let key = CellKey::new(num(h[0], n, origin)?, num(h[1], n, origin)?, num(h[2], n, origin)?);
            let mut words = Vec::new();
            let mut labels = Vec::new();
            for pair in body.split_whitespace() {
                let (w, z) = pair.split_once(':').ok_or_else(|| err(n, format!("bad word:label pair `{pair}`")))?;
                words.push(num(w, n, origin)?);
                labels.push(num(z, n, origin)?);
            }
            if words.is_empty() {
                return Err(err(n, format!("cell {key} has no words")));
            }
            if model.contains_cell(&key) {
                return Err(err(n, format!("cell {key} listed twice")));
            }
            model.add_labeled(key, &words, &labels).map_err(|e| err(n, e.to_string()))?;
        }

        let (n, line) = next("TIMESTEPS line")?;
        let steps: usize = section(line, "TIMESTEPS", n, origin)?;
        for _ in 0..steps {
            let (n, line) = next("timestep line")?;
            let mut cells = Vec::new();
            for tok in line.split_whitespace() {
                let p: Vec<&str> = tok.split(',').collect();
                if p.len() != 3 {
                    return Err(err(n, format!("bad cell `{tok}`")));
                }
                cells.push(CellKey::new(num(p[0], n, origin)?, num(p[1], n, origin)?, num(p[2], n, origin)?));
            }
            model.push_timestep(cells);
        }

        if model.topic_word != expected {
            return Err(err(0, "topic-word counts do not match the cell labels".into()));
        }
        Ok(model)
    }
}

pub fn write_checkpoint(model: &TopicModel, path: &Path) -> Result<()> {
    std::fs::write(path, model.to_checkpoint_string()).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<TopicModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TopicModel::from_checkpoint_str(&text, path)
}

fn fields<'a>(line: &'a str, keys: &[&str]) -> Option<Vec<&'a str>> {
    let tok: Vec<&str> = line.split_whitespace().collect();
    if tok.len() != keys.len() * 2 {
        return None;
    }
    keys.iter().enumerate().map(|(i, k)| (tok[2 * i] == *k).then_some(tok[2 * i + 1])).collect()
}

fn section(line: &str, key: &str, n: usize, origin: &Path) -> Result<usize> {
    match line.split_whitespace().collect::<Vec<_>>().as_slice() {
        [k, v] if *k == key => num(v, n, origin),
        _ => Err(Error::parse(origin, n, format!("expected `{key} <count>`"))),
    }
}

fn num<T: std::str::FromStr>(s: &str, line: usize, origin: &Path) -> Result<T> {
    s.parse().map_err(|_| Error::parse(origin, line, format!("cannot parse `{s}`")))
}
