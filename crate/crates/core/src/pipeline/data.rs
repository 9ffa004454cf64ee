use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::corpus::jsonl::{to_jsonl, Record};
use crate::corpus::{kfold_split, load_jsonl, CompletionExample, DaExample, FieldMapping, SrlExample, SyntheticCorpus};
use crate::error::{Error, Result};

pub const COMPLETION_FILE: &str = "completion.jsonl";
pub const DA_FILE: &str = "da.jsonl";
pub const SRL_FILE: &str = "srl.jsonl";
pub const CORPUS_FILES: [&str; 3] = [COMPLETION_FILE, DA_FILE, SRL_FILE];

/// SHA-256 over `blob <len>\0` followed by the content.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_hash(path: &Path) -> Result<String> {
    Ok(content_hash(&std::fs::read(path).map_err(|e| Error::io(path, e))?))
}

/// Writes the three corpora into `dir`. Existing files are only replaced
/// with `force`.
pub fn write_corpora(dir: &Path, corpus: &SyntheticCorpus, force: bool) -> Result<Vec<PathBuf>> {
    let paths: Vec<PathBuf> = CORPUS_FILES.iter().map(|f| dir.join(f)).collect();
    if !force {
        if let Some(p) = paths.iter().find(|p| p.exists()) {
            return Err(Error::Config(format!("{} exists; pass --force to overwrite", p.display())));
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let texts = [to_jsonl(&corpus.completion), to_jsonl(&corpus.da), to_jsonl(&corpus.srl)];
    for (p, t) in paths.iter().zip(texts) {
        std::fs::write(p, t).map_err(|e| Error::io(p, e))?;
    }
    Ok(paths)
}

/// The three corpora of a data directory with their content hashes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpora {
    pub completion: Vec<CompletionExample>,
    pub da: Vec<DaExample>,
    pub srl: Vec<SrlExample>,
    pub hashes: BTreeMap<String, String>,
}

fn require(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Error::Config(format!("corpus file {} not found", path.display())));
    }
    Ok(())
}

/// One corpus file with its content hash.
pub fn load_one<T: Record>(path: &Path, mapping: &FieldMapping) -> Result<(Vec<T>, String)> {
    require(path)?;
    Ok((load_jsonl(path, mapping)?, file_hash(path)?))
}

impl Corpora {
    pub fn load(dir: &Path, mapping: &FieldMapping) -> Result<Self> {
        let mut hashes = BTreeMap::new();
        for f in CORPUS_FILES {
            let p = dir.join(f);
            require(&p)?;
            hashes.insert(f.to_string(), file_hash(&p)?);
        }
        Ok(Corpora {
            completion: load_jsonl(&dir.join(COMPLETION_FILE), mapping)?,
            da: load_jsonl(&dir.join(DA_FILE), mapping)?,
            srl: load_jsonl(&dir.join(SRL_FILE), mapping)?,
            hashes,
        })
    }

    /// In-memory corpora, hashed as their serialized files would be.
    pub fn from_synthetic(c: SyntheticCorpus) -> Self {
        let hashes = [
            (COMPLETION_FILE, to_jsonl(&c.completion)),
            (DA_FILE, to_jsonl(&c.da)),
            (SRL_FILE, to_jsonl(&c.srl)),
        ]
        .into_iter()
        .map(|(f, t)| (f.to_string(), content_hash(t.as_bytes())))
        .collect();
        Corpora {
            completion: c.completion,
            da: c.da,
            srl: c.srl,
            hashes,
        }
    }
}

/// Train/test indices of an `n`-example corpus; the test share is rounded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Holdout {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Holdout {
    pub fn new(n: usize, test_fraction: f64, seed: u64) -> Result<Self> {
        let test_size = ((n as f64) * test_fraction).round() as usize;
        if n == 0 || test_size == n {
            return Ok(Holdout {
                train: vec![],
                test: (0..test_size).collect(),
            });
        }
        let s = kfold_split(n, 1, test_size, seed)?;
        let mut train = s.train_all();
        let mut test = s.test;
        train.sort_unstable();
        test.sort_unstable();
        Ok(Holdout { train, test })
    }
}

pub fn pick<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}
