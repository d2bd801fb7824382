//! The molecule corpus: `.mol` files carrying `meta id=<n>;` plus an arrow
//! file (`table1_arrows.txt`) listing corpus ids, seed types and
//! identification arrows.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::classify::{propagate, Arrow, CorpusEntry, ManifoldClass, PropagateError, Propagation, Seed};
use crate::molecule::{parse_molecule, Molecule, MoleculeError};

pub const ARROW_FILE: &str = "table1_arrows.txt";

const SHIPPED_MOLECULES: [(&str, &str); 6] = [
    ("m01.mol", include_str!("../corpus/m01.mol")),
    ("m07.mol", include_str!("../corpus/m07.mol")),
    ("m11.mol", include_str!("../corpus/m11.mol")),
    ("m13.mol", include_str!("../corpus/m13.mol")),
    ("m25.mol", include_str!("../corpus/m25.mol")),
    ("m31.mol", include_str!("../corpus/m31.mol")),
];
const SHIPPED_ARROWS: &str = include_str!("../corpus/table1_arrows.txt");

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Syntax { file: String, line: usize, message: String },
    #[error("{file}: {source}")]
    Molecule {
        file: String,
        #[source]
        source: MoleculeError,
    },
    #[error("{file}: missing or non-numeric `meta id=<n>;`")]
    MissingId { file: String },
    #[error("id {id} is defined by both {first} and {second}")]
    DuplicateId { id: u32, first: String, second: String },
    #[error("{file}: id {id} is outside the declared molecule range")]
    UndeclaredId { file: String, id: u32 },
}

impl CorpusError {
    /// True for read failures and malformed text (as opposed to invalid content).
    pub fn is_io_or_syntax(&self) -> bool {
        match self {
            CorpusError::Io { .. } | CorpusError::Syntax { .. } => true,
            CorpusError::Molecule { source, .. } => matches!(source, MoleculeError::Syntax { .. }),
            _ => false,
        }
    }
}

/// Parsed arrow file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ArrowFile {
    pub ids: Vec<u32>,
    pub seeds: BTreeMap<u32, Seed>,
    pub arrows: Vec<Arrow>,
}

pub fn parse_arrow_file(file: &str, text: &str) -> Result<ArrowFile, CorpusError> {
    let mut out = ArrowFile::default();
    for (i, raw) in text.lines().enumerate() {
        // `#` also appears inside class names, so only full-line comments exist
        let line = if raw.trim_start().starts_with('#') { "" } else { raw.trim() };
        if line.is_empty() {
            continue;
        }
        let err = |message: String| CorpusError::Syntax { file: file.to_string(), line: i + 1, message };
        let num = |s: Option<&str>, what: &str| -> Result<u32, CorpusError> {
            s.and_then(|s| s.parse().ok()).ok_or_else(|| err(format!("expected {what}")))
        };
        let mut words = line.split_whitespace();
        match words.next() {
            Some("molecules") => {
                let range = words.next().ok_or_else(|| err("expected <lo>-<hi>".into()))?;
                let (lo, hi) = range.split_once('-').ok_or_else(|| err("expected <lo>-<hi>".into()))?;
                let (lo, hi) = (num(Some(lo), "range start")?, num(Some(hi), "range end")?);
                if lo > hi {
                    return Err(err("empty molecule range".into()));
                }
                out.ids.extend(lo..=hi);
            }
            Some("seed") => {
                let id = num(words.next(), "seed id")?;
                let class_text = words.next().ok_or_else(|| err("expected manifold class".into()))?;
                let class: ManifoldClass = class_text.parse().map_err(|e| err(format!("{e}")))?;
                let source = words.collect::<Vec<_>>().join(" ");
                if out.seeds.insert(id, Seed { class, source }).is_some() {
                    return Err(err(format!("second seed for id {id}")));
                }
            }
            Some("arrow") => {
                let from = num(words.next(), "arrow source id")?;
                let to = num(words.next(), "arrow target id")?;
                let label = words.collect::<Vec<_>>().join(" ");
                out.arrows.push(Arrow { from, to, label });
            }
            Some(other) => return Err(err(format!("unknown directive `{other}`"))),
            None => {}
        }
    }
    out.ids.sort_unstable();
    out.ids.dedup();
    Ok(out)
}

/// Molecules, seeds and arrows of a corpus.
#[derive(Clone, Debug, Default)]
pub struct Corpus {
    pub molecules: BTreeMap<u32, Molecule>,
    /// File each molecule was read from, with its original text.
    pub sources: BTreeMap<u32, (String, String)>,
    pub arrow_file: ArrowFile,
}

impl Corpus {
    fn from_texts<'a>(
        arrows: (&str, &str),
        molecules: impl IntoIterator<Item = (String, &'a str)>,
    ) -> Result<Corpus, CorpusError> {
        let arrow_file = parse_arrow_file(arrows.0, arrows.1)?;
        let mut corpus = Corpus { arrow_file, ..Default::default() };
        for (file, text) in molecules {
            let m = parse_molecule(text).map_err(|source| CorpusError::Molecule { file: file.clone(), source })?;
            let id: u32 = m
                .meta
                .get("id")
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CorpusError::MissingId { file: file.clone() })?;
            if !corpus.arrow_file.ids.contains(&id) {
                return Err(CorpusError::UndeclaredId { file, id });
            }
            if let Some((first, _)) = corpus.sources.get(&id) {
                return Err(CorpusError::DuplicateId { id, first: first.clone(), second: file });
            }
            corpus.sources.insert(id, (file, text.to_string()));
            corpus.molecules.insert(id, m);
        }
        Ok(corpus)
    }

    /// The corpus compiled into the library.
    pub fn shipped() -> Corpus {
        Self::from_texts(
            (ARROW_FILE, SHIPPED_ARROWS),
            SHIPPED_MOLECULES.iter().map(|(f, t)| (f.to_string(), *t)),
        )
        .expect("shipped corpus is valid")
    }

    /// Reads `table1_arrows.txt` and every `*.mol` file of `dir`.
    pub fn load_dir(dir: &Path) -> Result<Corpus, CorpusError> {
        let read = |path: PathBuf| {
            std::fs::read_to_string(&path).map_err(|source| CorpusError::Io { path: path.clone(), source })
        };
        let arrows = read(dir.join(ARROW_FILE))?;
        let entries = std::fs::read_dir(dir).map_err(|source| CorpusError::Io { path: dir.to_path_buf(), source })?;
        let mut files: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "mol"))
            .collect();
        files.sort();
        let mut texts = Vec::new();
        for f in files {
            let name = f.file_name().unwrap().to_string_lossy().into_owned();
            texts.push((name, read(f)?));
        }
        Self::from_texts((ARROW_FILE, &arrows), texts.iter().map(|(n, t)| (n.clone(), t.as_str())))
    }

    /// Corpus entries: molecules where shipped, placeholders elsewhere.
    pub fn entries(&self) -> BTreeMap<u32, CorpusEntry> {
        self.arrow_file
            .ids
            .iter()
            .map(|id| {
                let e = match self.molecules.get(id) {
                    Some(m) => CorpusEntry::Molecule(Box::new(m.clone())),
                    None => CorpusEntry::Placeholder,
                };
                (*id, e)
            })
            .collect()
    }

    pub fn propagate(&self) -> Result<Propagation, PropagateError> {
        propagate(&self.entries(), &self.arrow_file.seeds, &self.arrow_file.arrows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_corpus_loads() {
        let c = Corpus::shipped();
        assert_eq!(c.arrow_file.ids, (1..=32).collect::<Vec<_>>());
        assert_eq!(c.molecules.keys().copied().collect::<Vec<_>>(), vec![1, 7, 11, 13, 25, 31]);
        assert_eq!(c.arrow_file.arrows.len(), 21);
        assert_eq!(c.arrow_file.seeds[&28].class, ManifoldClass::sum_of_s1xs2(2));
    }

    #[test]
    fn shipped_files_are_canonical() {
        for (file, text) in SHIPPED_MOLECULES {
            let m = parse_molecule(text).unwrap();
            assert_eq!(m.serialize(), text, "{file}");
        }
    }

    #[test]
    fn arrow_file_errors_carry_lines() {
        let err = parse_arrow_file("t", "molecules 1-3\nseed 1 S^3 x\nbogus 1\n").unwrap_err();
        assert!(matches!(err, CorpusError::Syntax { line: 3, .. }), "{err}");
        let err = parse_arrow_file("t", "seed 1 T^3 x\n").unwrap_err();
        assert!(matches!(err, CorpusError::Syntax { line: 1, .. }));
    }
}
