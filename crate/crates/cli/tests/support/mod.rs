//! Synthetic corpus and helpers for driving the `lfmmi` binary.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lfmmi::forward::{lemi_bytes, EmissionMatrix};

pub const LEXICON: &str = "phones: sil a b\nx a\ny b\n";

/// (utterance id, reference transcript). `u1` gets transducer emissions
/// that hear the tokens in the wrong order.
pub const CORPUS: [(&str, &[&str]); 5] = [
    ("u1", &["x", "y"]),
    ("u2", &["y", "x"]),
    ("u3", &["x"]),
    ("u4", &["y", "y"]),
    ("u5", &["x", "y", "x"]),
];

pub const MISLEADING: &str = "u1";

fn phone_of(token: &str) -> usize {
    match token {
        "x" => 2,
        "y" => 3,
        _ => unreachable!(),
    }
}

fn token_of(token: &str) -> usize {
    match token {
        "x" => 1,
        "y" => 2,
        _ => unreachable!(),
    }
}

/// Frame-level phone targets: two frames per token, with a blank frame
/// between repeated phones. Returns (phone per frame, first frame of each token).
fn alignment(tokens: &[&str]) -> (Vec<usize>, Vec<usize>) {
    let mut frames = Vec::new();
    let mut starts = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 && tokens[i - 1] == *t {
            frames.push(0);
        }
        starts.push(frames.len());
        frames.extend([phone_of(t); 2]);
    }
    (frames, starts)
}

fn one_hot_logits(units: usize, targets: &[usize], peak: f64) -> Vec<Vec<f64>> {
    targets
        .iter()
        .map(|&p| {
            let mut row = vec![0.0; units];
            row[p] = peak;
            row
        })
        .collect()
}

pub fn phone_emissions(tokens: &[&str]) -> EmissionMatrix {
    let (frames, _) = alignment(tokens);
    EmissionMatrix::from_logits(&one_hot_logits(4, &frames, 5.0)).unwrap()
}

pub fn token_emissions(utt: &str, tokens: &[&str]) -> EmissionMatrix {
    if utt == MISLEADING {
        return EmissionMatrix::from_logits(&[
            vec![0.0, 0.2, 0.6],
            vec![0.5, 0.0, 0.0],
            vec![0.0, 0.6, 0.2],
            vec![0.5, 0.0, 0.0],
        ])
        .unwrap();
    }
    let (frames, starts) = alignment(tokens);
    let mut rows = vec![vec![2.0, 0.0, 0.0]; frames.len()];
    for (t, &s) in tokens.iter().zip(&starts) {
        rows[s] = vec![0.0, 0.0, 0.0];
        rows[s][token_of(t)] = 2.0;
    }
    EmissionMatrix::from_logits(&rows).unwrap()
}

pub struct Corpus {
    pub dir: PathBuf,
}

impl Corpus {
    pub fn write(dir: &Path) -> Self {
        fs::write(dir.join("lexicon.txt"), LEXICON).unwrap();
        let mut transcripts = String::new();
        let mut manifest = String::new();
        for (utt, tokens) in CORPUS {
            transcripts.push_str(&format!("{utt} {}\n", tokens.join(" ")));
            let pe = format!("{utt}.phones.lemi");
            let te = format!("{utt}.tokens.lemi");
            fs::write(dir.join(&pe), lemi_bytes(phone_emissions(tokens).matrix()).unwrap()).unwrap();
            fs::write(dir.join(&te), lemi_bytes(token_emissions(utt, tokens).matrix()).unwrap()).unwrap();
            manifest.push_str(&format!("{utt}\t{pe}\t{te}\n"));
        }
        fs::write(dir.join("transcripts.txt"), transcripts).unwrap();
        fs::write(dir.join("manifest.tsv"), manifest).unwrap();
        Self { dir: dir.to_path_buf() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn arg(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }
}

pub fn lfmmi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfmmi"))
        .args(args)
        .output()
        .expect("running lfmmi")
}

pub fn ok(args: &[&str]) -> Output {
    let out = lfmmi(args);
    assert!(
        out.status.success(),
        "lfmmi {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// First-ranked token sequence per utterance in an N-best file.
pub fn one_best(nbest: &str) -> Vec<(String, String)> {
    nbest
        .lines()
        .skip(1)
        .filter_map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f[1] == "1").then(|| (f[0].to_string(), f[4].to_string()))
        })
        .collect()
}

/// Runs compile-graphs, score, decode-nt (with and without MMI) and rescore.
/// Returns the produced files' contents by name.
pub fn pipeline(c: &Corpus) -> Vec<(String, Vec<u8>)> {
    let graphs = c.path("graphs");
    let g = |n: &str| graphs.join(n).display().to_string();
    ok(&[
        "compile-graphs",
        "--lexicon", &c.arg("lexicon.txt"),
        "--transcripts", &c.arg("transcripts.txt"),
        "--out", &graphs.display().to_string(),
    ]);
    ok(&[
        "score",
        "--lexicon", &g("lexicon.bin"),
        "--den", &g("den.lfsa"),
        "--manifest", &c.arg("manifest.tsv"),
        "--transcripts", &c.arg("transcripts.txt"),
        "--grad-dir", &c.arg("grads"),
        "--output", &c.arg("score.jsonl"),
        "--jobs", "2",
    ]);
    for (beta, out) in [("0", "base.nbest"), ("0.2", "mmi.nbest")] {
        ok(&[
            "decode-nt",
            "--lexicon", &g("lexicon.bin"),
            "--den", &g("den.lfsa"),
            "--manifest", &c.arg("manifest.tsv"),
            "--beta-mmi", beta,
            "--jobs", "3",
            "--output", &c.arg(out),
        ]);
    }
    ok(&[
        "rescore",
        "--nbest", &c.arg("mmi.nbest"),
        "--lexicon", &g("lexicon.bin"),
        "--manifest", &c.arg("manifest.tsv"),
        "--lambda-mmi", "0.2",
        "--output", &c.arg("rescored.nbest"),
    ]);
    let mut files = Vec::new();
    for name in ["graphs/den.lfsa", "graphs/lexicon.bin", "graphs/bigram.json", "score.jsonl", "base.nbest", "mmi.nbest", "rescored.nbest"] {
        files.push((name.to_string(), fs::read(c.path(name)).unwrap()));
    }
    files
}
