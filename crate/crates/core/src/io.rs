//! File formats and batch dataset plumbing.
//!
//! Posterior matrices use a binary format (magic `FMPB`, version `u16` LE,
//! length-prefixed utterance id, `T: u32`, `V: u32`, length-prefixed
//! vocabulary string with blank rendered as `_`, then `T*V` little-endian
//! `f32` values row-major) with a JSON mirror for tests and debugging.
//! Hypotheses and references travel as JSON lines.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posteriors::FramePosteriors;
use crate::synth::{Dataset, Utterance};
use crate::types::{NBestEntry, ServiceHypothesis};
use crate::vocab::Vocabulary;

const POSTERIOR_MAGIC: &[u8; 4] = b"FMPB";
const POSTERIOR_VERSION: u16 = 1;

/// On-disk representation for posterior matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosteriorFormat {
    Binary,
    Json,
}

impl PosteriorFormat {
    pub fn extension(self) -> &'static str {
        match self {
            PosteriorFormat::Binary => "fmpb",
            PosteriorFormat::Json => "json",
        }
    }
}

pub fn write_posteriors_binary<W: Write>(
    mut w: W,
    p: &FramePosteriors<f32>,
    vocab: &Vocabulary,
) -> Result<()> {
    w.write_all(POSTERIOR_MAGIC)?;
    w.write_u16::<LittleEndian>(POSTERIOR_VERSION)?;
    write_str(&mut w, p.utterance_id())?;
    w.write_u32::<LittleEndian>(p.frames() as u32)?;
    w.write_u32::<LittleEndian>(p.vocab_size() as u32)?;
    write_str(&mut w, &vocab.symbol_string())?;
    for &v in p.as_slice() {
        w.write_f32::<LittleEndian>(v)?;
    }
    Ok(())
}

pub fn read_posteriors_binary<R: Read>(mut r: R) -> Result<(FramePosteriors<f32>, Vocabulary)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Truncated("posterior matrix"))?;
    if &magic != POSTERIOR_MAGIC {
        return Err(Error::BadMagic { expected: "FMPB" });
    }
    let version = r.read_u16::<LittleEndian>()?;
    if version != POSTERIOR_VERSION {
        return Err(Error::UnsupportedVersion {
            kind: "posterior matrix",
            got: version,
            supported: POSTERIOR_VERSION,
        });
    }
    let id = read_str(&mut r)?;
    let frames = r.read_u32::<LittleEndian>()? as usize;
    let vocab_size = r.read_u32::<LittleEndian>()? as usize;
    let vocab = Vocabulary::from_symbol_string(&read_str(&mut r)?)?;
    if vocab.len() != vocab_size {
        return Err(Error::VocabSizeMismatch {
            n: vocab.len(),
            v: vocab_size,
        });
    }
    let mut probs = vec![0f32; frames * vocab_size];
    r.read_f32_into::<LittleEndian>(&mut probs)
        .map_err(|_| Error::Truncated("posterior matrix"))?;
    // Anything left over means the declared dimensions were wrong.
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Truncated("posterior matrix"));
    }
    Ok((FramePosteriors::from_raw(id, frames, vocab_size, probs)?, vocab))
}

#[derive(Debug, Serialize, Deserialize)]
struct PosteriorsJson {
    id: String,
    vocab: String,
    probs: Vec<Vec<f32>>,
}

pub fn write_posteriors_json<W: Write>(
    w: W,
    p: &FramePosteriors<f32>,
    vocab: &Vocabulary,
) -> Result<()> {
    let doc = PosteriorsJson {
        id: p.utterance_id().to_string(),
        vocab: vocab.symbol_string(),
        probs: (0..p.frames()).map(|t| p.row(t).to_vec()).collect(),
    };
    serde_json::to_writer(w, &doc)?;
    Ok(())
}

pub fn read_posteriors_json<R: Read>(r: R) -> Result<(FramePosteriors<f32>, Vocabulary)> {
    let doc: PosteriorsJson = serde_json::from_reader(r)?;
    let vocab = Vocabulary::from_symbol_string(&doc.vocab)?;
    Ok((FramePosteriors::from_rows(doc.id, &doc.probs)?, vocab))
}

/// Reads either format, sniffing the magic bytes.
pub fn read_posteriors_file(path: &Path) -> Result<(FramePosteriors<f32>, Vocabulary)> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(POSTERIOR_MAGIC) {
        read_posteriors_binary(bytes.as_slice())
    } else {
        read_posteriors_json(bytes.as_slice())
    }
}

pub fn write_posteriors_file(
    path: &Path,
    p: &FramePosteriors<f32>,
    vocab: &Vocabulary,
    format: PosteriorFormat,
) -> Result<()> {
    let file = BufWriter::new(fs::File::create(path)?);
    match format {
        PosteriorFormat::Binary => write_posteriors_binary(file, p, vocab),
        PosteriorFormat::Json => write_posteriors_json(file, p, vocab),
    }
}

/// One hypothesis line: `{id, transcript, word_confidences?, nbest?}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HypothesisRecord {
    pub id: String,
    pub transcript: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word_confidences: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nbest: Option<Vec<NBestEntry>>,
}

impl HypothesisRecord {
    pub fn plain(id: impl Into<String>, transcript: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            transcript: transcript.into(),
            word_confidences: None,
            nbest: None,
        }
    }

    pub fn from_service(id: &str, svc: &ServiceHypothesis) -> Self {
        Self {
            id: id.to_string(),
            transcript: svc.transcript().to_string(),
            word_confidences: Some(svc.word_confidences().to_vec()),
            nbest: if svc.nbest().is_empty() {
                None
            } else {
                Some(svc.nbest().to_vec())
            },
        }
    }

    pub fn into_service(self) -> Result<ServiceHypothesis> {
        let svc = ServiceHypothesis::new(&self.transcript, self.word_confidences)?;
        Ok(match self.nbest {
            Some(n) => svc.with_nbest(n),
            None => svc,
        })
    }
}

/// One reference line: `{id, transcript}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReferenceRecord {
    pub id: String,
    pub transcript: String,
}

/// A malformed JSONL line, reported with its 1-based line number.
#[derive(Debug, Clone)]
pub struct JsonlIssue {
    pub line: usize,
    pub message: String,
}

/// Reads JSON lines; malformed lines are collected as issues and skipped so
/// a batch survives isolated bad records.
pub fn read_jsonl<T: DeserializeOwned, R: Read>(r: R) -> Result<(Vec<T>, Vec<JsonlIssue>)> {
    let reader = BufReader::new(r);
    let mut records = Vec::new();
    let mut issues = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<T>(&line) {
            Ok(rec) => records.push(rec),
            Err(e) => issues.push(JsonlIssue {
                line: i + 1,
                message: e.to_string(),
            }),
        }
    }
    Ok((records, issues))
}

pub fn write_jsonl<T: Serialize, W: Write>(mut w: W, items: &[T]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl_file<T: DeserializeOwned>(path: &Path) -> Result<(Vec<T>, Vec<JsonlIssue>)> {
    read_jsonl(fs::File::open(path)?)
}

pub fn write_jsonl_file<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_jsonl(&mut w, items)?;
    w.flush()?;
    Ok(())
}

/// Versioned tuned-parameter file (JSON).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsFile {
    pub version: u16,
    #[serde(flatten)]
    pub params: crate::tune::TunedParams,
}

pub const PARAMS_VERSION: u16 = 1;

pub fn write_params_file(path: &Path, params: &crate::tune::TunedParams) -> Result<()> {
    let doc = ParamsFile {
        version: PARAMS_VERSION,
        params: *params,
    };
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &doc)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_params_file(path: &Path) -> Result<crate::tune::TunedParams> {
    let doc: ParamsFile = serde_json::from_reader(fs::File::open(path)?)?;
    if doc.version != PARAMS_VERSION {
        return Err(Error::UnsupportedVersion {
            kind: "parameter file",
            got: doc.version,
            supported: PARAMS_VERSION,
        });
    }
    Ok(doc.params)
}

/// Writes a generated dataset as a directory tree:
/// `train.txt`, then per split `refs.jsonl`, `service.jsonl` and one
/// posterior file per utterance under `posteriors/`.
pub fn write_dataset(
    dir: &Path,
    dataset: &Dataset,
    vocab: &Vocabulary,
    format: PosteriorFormat,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("train.txt"), dataset.train_sentences.join("\n") + "\n")?;
    for (split, utts) in [("val", &dataset.val), ("test", &dataset.test)] {
        let split_dir = dir.join(split);
        let post_dir = split_dir.join("posteriors");
        fs::create_dir_all(&post_dir)?;
        let refs: Vec<ReferenceRecord> = utts
            .iter()
            .map(|u| ReferenceRecord {
                id: u.id.clone(),
                transcript: u.reference.clone(),
            })
            .collect();
        write_jsonl_file(&split_dir.join("refs.jsonl"), &refs)?;
        let service: Vec<HypothesisRecord> = utts
            .iter()
            .map(|u| HypothesisRecord::from_service(&u.id, &u.service))
            .collect();
        write_jsonl_file(&split_dir.join("service.jsonl"), &service)?;
        for u in utts {
            let path = post_dir.join(format!("{}.{}", u.id, format.extension()));
            write_posteriors_file(&path, &u.posteriors, vocab, format)?;
        }
    }
    Ok(())
}

/// Loads one split directory back into utterances (requires references).
/// Returns the utterances in `refs.jsonl` order plus any malformed-line
/// issues encountered.
pub fn read_split(dir: &Path) -> Result<(Vec<Utterance>, Vec<JsonlIssue>, Vocabulary)> {
    let (refs, mut issues) = read_jsonl_file::<ReferenceRecord>(&dir.join("refs.jsonl"))?;
    let (service, service_issues) =
        read_jsonl_file::<HypothesisRecord>(&dir.join("service.jsonl"))?;
    issues.extend(service_issues);
    let services: std::collections::HashMap<String, HypothesisRecord> =
        service.into_iter().map(|h| (h.id.clone(), h)).collect();

    let mut vocab: Option<Vocabulary> = None;
    let mut utterances = Vec::with_capacity(refs.len());
    for r in refs {
        let svc = services
            .get(&r.id)
            .cloned()
            .ok_or_else(|| Error::MissingUtterance(r.id.clone(), "service.jsonl".to_string()))?
            .into_service()?;
        let path = find_posterior_file(&dir.join("posteriors"), &r.id)?;
        let (posteriors, file_vocab) = read_posteriors_file(&path)?;
        if let Some(v) = &vocab {
            if v.symbol_string() != file_vocab.symbol_string() {
                return Err(Error::VocabSizeMismatch {
                    n: v.len(),
                    v: file_vocab.len(),
                });
            }
        } else {
            vocab = Some(file_vocab);
        }
        utterances.push(Utterance {
            id: r.id,
            reference: r.transcript,
            posteriors,
            service: svc,
        });
    }
    let vocab = vocab.ok_or(Error::EmptyDataset)?;
    Ok((utterances, issues, vocab))
}

/// Resolves `<dir>/<id>.fmpb` or `<dir>/<id>.json`.
pub fn find_posterior_file(dir: &Path, id: &str) -> Result<PathBuf> {
    for ext in ["fmpb", "json"] {
        let p = dir.join(format!("{id}.{ext}"));
        if p.exists() {
            return Ok(p);
        }
    }
    Err(Error::MissingUtterance(
        id.to_string(),
        dir.display().to_string(),
    ))
}

/// Lists the posterior files of a directory sorted by utterance id.
pub fn list_posterior_files(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if !path.is_file() {
            continue;
        }
        match path.extension().and_then(|e| e.to_str()) {
            Some("fmpb") | Some("json") => {}
            _ => continue,
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.push((stem.to_string(), path.clone()));
        }
    }
    out.sort();
    Ok(out)
}

fn write_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    w.write_u32::<LittleEndian>(s.len() as u32)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_str<R: Read>(r: &mut R) -> Result<String> {
    let len = r.read_u32::<LittleEndian>()? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Truncated("string field"))?;
    String::from_utf8(buf).map_err(|_| Error::Truncated("string field"))
}
