use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rost")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = rost(args);
    assert!(out.status.success(), "rost {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A generated 12x12 map and its ground truth.
fn small_map(dir: &Path) -> (PathBuf, PathBuf) {
    let out = dir.join("gen");
    ok(&["generate", "--out", s(&out), "--seed", "1", "--width", "12", "--height", "12"]);
    (out.join("map.txt"), out.join("ground_truth.txt"))
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn exit_codes_follow_error_class() {
    let tmp = tempfile::tempdir().unwrap();
    let (map, _) = small_map(tmp.path());
    let out = tmp.path().join("x");

    let bad_gamma = rost(&["explore", "--map", s(&map), "--gamma", "1.5", "--out", s(&out)]);
    assert_eq!(bad_gamma.status.code(), Some(2));
    let zero_topics = rost(&["explore", "--map", s(&map), "--topics", "0", "--out", s(&out)]);
    assert_eq!(zero_topics.status.code(), Some(2));
    let usage = rost(&["explore", "--no-such-flag"]);
    assert_eq!(usage.status.code(), Some(2));

    let missing = rost(&["explore", "--map", s(&tmp.path().join("absent.txt")), "--out", s(&out)]);
    assert_eq!(missing.status.code(), Some(3));
    fs::write(tmp.path().join("bad.txt"), "V 4 WIDTH 2 HEIGHT 2\n0 0 : 1 9\n").unwrap();
    let malformed = rost(&["explore", "--map", s(&tmp.path().join("bad.txt")), "--out", s(&out)]);
    assert_eq!(malformed.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&malformed.stderr).contains("bad.txt:2:"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("gen.toml");
    fs::write(&cfg, "[spec]\nwidht = 10\n").unwrap();
    let out = rost(&["generate", "--config", s(&cfg), "--out", s(&tmp.path().join("g"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_spec_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rost(&["generate", "--terrains", "0", "--out", s(&tmp.path().join("g"))]);
    assert_eq!(out.status.code(), Some(2));
    let out = rost(&["generate", "--width", "0", "--out", s(&tmp.path().join("g"))]);
    assert!(!out.status.success());
}

#[test]
fn zero_steps_gives_an_empty_path() {
    let tmp = tempfile::tempdir().unwrap();
    let (map, gt) = small_map(tmp.path());
    let out = tmp.path().join("e");
    ok(&["explore", "--map", s(&map), "--ground-truth", s(&gt), "--steps", "0", "--draws", "5", "--out", s(&out)]);
    assert!(csv_rows(&out.join("path.csv")).is_empty());
    // Nothing observed, so the fold-in still labels every cell from the prior.
    assert!(out.join("metrics.csv").exists());
}

#[test]
fn missing_ground_truth_is_not_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let (map, _) = small_map(tmp.path());
    let out = tmp.path().join("e");
    ok(&["explore", "--map", s(&map), "--steps", "10", "--draws", "5", "--topics", "4", "--out", s(&out)]);
    assert_eq!(csv_rows(&out.join("path.csv")).len(), 10);
    assert!(out.join("labels.txt").exists());
    assert!(out.join("labels.pgm").exists());
    assert!(!out.join("metrics.csv").exists());
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("command = \"explore\""));
    assert!(!manifest.contains("metrics"));
}

#[test]
fn path_steps_are_adjacent_and_weighted() {
    let tmp = tempfile::tempdir().unwrap();
    let (map, _) = small_map(tmp.path());
    let out = tmp.path().join("e");
    ok(&[
        "explore",
        "--map",
        s(&map),
        "--steps",
        "15",
        "--draws",
        "5",
        "--topics",
        "4",
        "--policy",
        "coverage",
        "--out",
        s(&out),
    ]);
    let rows = csv_rows(&out.join("path.csv"));
    for pair in rows.windows(2) {
        let xy = |r: &Vec<String>| (r[1].parse::<i64>().unwrap(), r[2].parse::<i64>().unwrap());
        let ((x0, y0), (x1, y1)) = (xy(&pair[0]), xy(&pair[1]));
        assert_eq!((x0 - x1).abs() + (y0 - y1).abs(), 1);
        let weight: f64 = pair[1][3].parse().unwrap();
        assert!(weight > 0.0 && weight <= 1.0);
        assert!(pair[1][4].split(';').any(|c| c.starts_with(&format!("{x1}:{y1}:"))));
    }
}

fn write_stream(path: &Path, timesteps: u32) {
    let mut text = String::from("V 8 WIDTH 4 HEIGHT 4\n");
    for t in 0..timesteps {
        text.push_str(&format!("{t} {} {} : {} {} {}\n", t % 4, (t / 4) % 4, t % 8, (t + 1) % 8, (t * 3) % 8));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn stream_refinement_histogram_follows_eta() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("s.txt");
    write_stream(&input, 40);
    let out = tmp.path().join("o");
    ok(&["stream", "--input", s(&input), "--draws", "500", "--eta", "0.5", "--topics", "4", "--out", s(&out)]);
    let rows = csv_rows(&out.join("refine_histogram.csv"));
    let draws: u64 = rows.iter().map(|r| r[1].parse::<u64>().unwrap()).sum();
    assert_eq!(draws, 40 * 500);
    let newest: u64 = rows.iter().find(|r| r[0] == "0").unwrap()[1].parse().unwrap();
    // The first timestep has no history, so all of its draws are age 0.
    let expected = (500.0 + 39.0 * 250.0) / 20_000.0;
    let got = newest as f64 / draws as f64;
    assert!((got - expected).abs() < 0.02, "{got} vs {expected}");
    assert_eq!(csv_rows(&out.join("stream.csv")).len(), 40);
}

#[test]
fn single_document_stream() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("s.txt");
    write_stream(&input, 1);
    let out = tmp.path().join("o");
    ok(&["stream", "--input", s(&input), "--draws", "3", "--topics", "4", "--out", s(&out)]);
    let rows = csv_rows(&out.join("stream.csv"));
    assert_eq!(rows.len(), 1);
    // No topics learned yet: perplexities equal V and K.
    assert!((rows[0][4].parse::<f64>().unwrap() - 8.0).abs() < 1e-9);
    assert!((rows[0][5].parse::<f64>().unwrap() - 4.0).abs() < 1e-9);
}

#[test]
fn large_vocabulary_with_ranges() {
    let tmp = tempfile::tempdir().unwrap();
    let map = tmp.path().join("map.txt");
    let mut text = String::from("V 6000 WIDTH 6 HEIGHT 6\nRANGE orb 0 5000\nRANGE texton 5000 6000\n");
    for y in 0..6u32 {
        for x in 0..6u32 {
            let base = if x < 3 { 100 } else { 4900 };
            let words: Vec<String> = (0..10).map(|i| (base + (x * 7 + y * 13 + i * 11) % 200).to_string()).collect();
            text.push_str(&format!("{x} {y} : {} {}\n", words.join(" "), 5000 + x * 100 + y));
        }
    }
    fs::write(&map, text).unwrap();
    let out = tmp.path().join("e");
    ok(&["explore", "--map", s(&map), "--steps", "12", "--draws", "20", "--topics", "3", "--out", s(&out)]);
    let ckpt = out.join("model.ckpt");
    let labeled = tmp.path().join("l");
    ok(&["label", "--map", s(&map), "--checkpoint", s(&ckpt), "--iterations", "5", "--out", s(&labeled)]);
    let labels = fs::read_to_string(labeled.join("labels.txt")).unwrap();
    assert_eq!(labels.lines().filter(|l| !l.starts_with('#')).count(), 36);
}

#[test]
fn label_checks_vocabulary_against_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let (map, _) = small_map(tmp.path());
    let out = tmp.path().join("e");
    ok(&["explore", "--map", s(&map), "--steps", "3", "--draws", "2", "--topics", "4", "--out", s(&out)]);
    let other = tmp.path().join("other.txt");
    fs::write(&other, "V 5000 WIDTH 2 HEIGHT 2\n0 0 : 1 4999\n").unwrap();
    let res = rost(&[
        "label",
        "--map",
        s(&other),
        "--checkpoint",
        s(&out.join("model.ckpt")),
        "--out",
        s(&tmp.path().join("l")),
    ]);
    assert!(!res.status.success());
}

#[test]
fn evaluate_requires_a_config() {
    let tmp = tempfile::tempdir().unwrap();
    let res = rost(&["evaluate", "--out", s(&tmp.path().join("o"))]);
    assert_eq!(res.status.code(), Some(2));
}
