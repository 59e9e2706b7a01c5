//! Text formats for word maps, ground truth and word streams. See
//! `docs/formats.md` for the grammar.

use std::fmt::Write as _;
use std::path::Path;

use super::WordMap;
use crate::error::{Error, Result};
use crate::grid::{CellKey, GridBounds};
use crate::vocab::Vocabulary;

struct Header {
    vocab: Vocabulary,
    bounds: GridBounds,
}

/// Parses `V <int> WIDTH <int> HEIGHT <int>` plus any `RANGE` lines that
/// follow it. Returns the header and the remaining numbered lines.
fn parse_header<'a>(text: &'a str, origin: &Path) -> Result<(Header, impl Iterator<Item = (usize, &'a str)>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .peekable();
    let (n, head) = lines.next().ok_or_else(|| Error::parse(origin, 1, "missing header"))?;
    let tok: Vec<&str> = head.split_whitespace().collect();
    if tok.len() != 6 || tok[0] != "V" || tok[2] != "WIDTH" || tok[4] != "HEIGHT" {
        return Err(Error::parse(origin, n, "expected `V <int> WIDTH <int> HEIGHT <int>`"));
    }
    let v: usize = num(tok[1], n, origin)?;
    let (w, h): (u32, u32) = (num(tok[3], n, origin)?, num(tok[5], n, origin)?);
    if w == 0 || h == 0 {
        return Err(Error::parse(origin, n, "grid dimensions must be positive"));
    }
    let mut vocab = Vocabulary::new(v).map_err(|e| Error::parse(origin, n, e.to_string()))?;
    while let Some(&(n, line)) = lines.peek() {
        if !line.starts_with("RANGE") {
            break;
        }
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 4 {
            return Err(Error::parse(origin, n, "expected `RANGE <name> <start> <end>`"));
        }
        vocab = vocab
            .with_range(t[1], num(t[2], n, origin)?..num(t[3], n, origin)?)
            .map_err(|e| Error::parse(origin, n, e.to_string()))?;
        lines.next();
    }
    Ok((Header { vocab, bounds: GridBounds::new(w, h) }, lines))
}

fn parse_words(body: &str, vocab: &Vocabulary, n: usize, origin: &Path) -> Result<Vec<u32>> {
    body.split_whitespace()
        .map(|t| {
            let w: u32 = num(t, n, origin)?;
            vocab.check(w).map_err(|e| Error::parse(origin, n, e.to_string()))?;
            Ok(w)
        })
        .collect()
}

fn parse_xy(head: &str, bounds: GridBounds, n: usize, origin: &Path) -> Result<CellKey> {
    let t: Vec<&str> = head.split_whitespace().collect();
    if t.len() != 2 {
        return Err(Error::parse(origin, n, "expected `<x> <y> :`"));
    }
    let c = CellKey::spatial(num(t[0], n, origin)?, num(t[1], n, origin)?);
    if !bounds.contains(&c) {
        return Err(Error::parse(
            origin,
            n,
            format!("cell ({}, {}) outside {}x{} grid", c.x, c.y, bounds.width, bounds.height),
        ));
    }
    Ok(c)
}

pub fn parse_word_map(text: &str, origin: &Path) -> Result<WordMap> {
    let (header, lines) = parse_header(text, origin)?;
    let bounds = header.bounds;
    let mut cells = vec![Vec::new(); bounds.cell_count()];
    let mut seen = vec![false; bounds.cell_count()];
    for (n, line) in lines {
        let (head, body) = line.split_once(':').ok_or_else(|| Error::parse(origin, n, "cell line lacks `:`"))?;
        let c = parse_xy(head, bounds, n, origin)?;
        let i = bounds.index(&c);
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::parse(origin, n, format!("cell ({}, {}) listed twice", c.x, c.y)));
        }
        cells[i] = parse_words(body, &header.vocab, n, origin)?;
    }
    WordMap::new(bounds, header.vocab, cells)
}

pub fn load_word_map(path: &Path) -> Result<WordMap> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_word_map(&text, path)
}

fn header_string(vocab: &Vocabulary, bounds: GridBounds) -> String {
    let mut s = format!("V {} WIDTH {} HEIGHT {}\n", vocab.size(), bounds.width, bounds.height);
    for (name, r) in vocab.ranges() {
        let _ = writeln!(s, "RANGE {name} {} {}", r.start, r.end);
    }
    s
}

/// Serializes non-empty cells in row-major order.
pub fn write_word_map(map: &WordMap) -> String {
    let mut s = header_string(map.vocab(), map.bounds());
    for (i, words) in map.cells().iter().enumerate() {
        if words.is_empty() {
            continue;
        }
        let c = map.bounds().key_at(i);
        let _ = write!(s, "{} {} :", c.x, c.y);
        for w in words {
            let _ = write!(s, " {w}");
        }
        s.push('\n');
    }
    s
}

/// Reads `x y label` lines into a per-cell ground-truth vector.
pub fn load_ground_truth(path: &Path, bounds: GridBounds) -> Result<Vec<Option<u32>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = vec![None; bounds.cell_count()];
    for (n, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 3 {
            return Err(Error::parse(path, n, "expected `<x> <y> <label>`"));
        }
        let c = parse_xy(&t[..2].join(" "), bounds, n, path)?;
        out[bounds.index(&c)] = Some(num(t[2], n, path)?);
    }
    Ok(out)
}

pub fn write_ground_truth(labels: &[Option<u32>], bounds: GridBounds) -> String {
    let mut s = String::new();
    for (i, l) in labels.iter().enumerate() {
        if let Some(l) = l {
            let c = bounds.key_at(i);
            let _ = writeln!(s, "{} {} {l}", c.x, c.y);
        }
    }
    s
}

/// One observed cell and its words.
pub type Document = (CellKey, Vec<u32>);

/// Time-ordered sequence of word documents, one per observed cell.
#[derive(Clone, Debug, PartialEq)]
pub struct WordStream {
    pub bounds: GridBounds,
    pub vocab: Vocabulary,
    /// Documents sorted by nondecreasing timestep.
    pub documents: Vec<Document>,
}

impl WordStream {
    /// Documents grouped by timestep, in order.
    pub fn timesteps(&self) -> Vec<(u32, &[Document])> {
        let mut out = Vec::new();
        let mut start = 0;
        while start < self.documents.len() {
            let t = self.documents[start].0.t;
            let end = start + self.documents[start..].iter().take_while(|(c, _)| c.t == t).count();
            out.push((t, &self.documents[start..end]));
            start = end;
        }
        out
    }
}

/// Same header as a word map; body lines are `t x y : w1 w2 ...` with
/// nondecreasing `t`.
pub fn load_word_stream(path: &Path) -> Result<WordStream> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (header, lines) = parse_header(&text, path)?;
    let mut documents: Vec<(CellKey, Vec<u32>)> = Vec::new();
    for (n, line) in lines {
        let (head, body) = line.split_once(':').ok_or_else(|| Error::parse(path, n, "document line lacks `:`"))?;
        let t: Vec<&str> = head.split_whitespace().collect();
        if t.len() != 3 {
            return Err(Error::parse(path, n, "expected `<t> <x> <y> :`"));
        }
        let time: u32 = num(t[0], n, path)?;
        let c = parse_xy(&t[1..].join(" "), header.bounds, n, path)?;
        let key = CellKey::new(c.x, c.y, time);
        if let Some((prev, _)) = documents.last() {
            if prev.t > time {
                return Err(Error::parse(path, n, "timesteps must be nondecreasing"));
            }
            if documents.iter().rev().take_while(|(p, _)| p.t == time).any(|(p, _)| *p == key) {
                return Err(Error::parse(path, n, format!("document {key} listed twice")));
            }
        }
        documents.push((key, parse_words(body, &header.vocab, n, path)?));
    }
    Ok(WordStream { bounds: header.bounds, vocab: header.vocab, documents })
}

pub fn write_word_stream(stream: &WordStream) -> String {
    let mut s = header_string(&stream.vocab, stream.bounds);
    for (c, words) in &stream.documents {
        let _ = write!(s, "{} {} {} :", c.t, c.x, c.y);
        for w in words {
            let _ = write!(s, " {w}");
        }
        s.push('\n');
    }
    s
}

fn num<T: std::str::FromStr>(s: &str, line: usize, origin: &Path) -> Result<T> {
    s.parse().map_err(|_| Error::parse(origin, line, format!("cannot parse `{s}`")))
}
