use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use finemerge::align::{smooth, viterbi_align, SMOOTH_EPS};
use finemerge::baselines::{rescore_nbest, rover_chars, rover_words, RoverParams, TiePreference};
use finemerge::decode::{beam_decode, greedy_decode, BeamParams};
use finemerge::io::{
    find_posterior_file, list_posterior_files, read_jsonl_file, read_params_file,
    read_posteriors_file, read_split, write_dataset, write_jsonl_file, write_params_file,
    HypothesisRecord, JsonlIssue, PosteriorFormat, ReferenceRecord,
};
use finemerge::lm::{train_trigram, NGramLM};
use finemerge::merge::MergeParams;
use finemerge::metrics::{aligned_diff, cer, per_word_error_reduction, wer};
use finemerge::pipeline::{finemerge, finemerge_greedy};
use finemerge::posteriors::{validate_posteriors, FramePosteriors};
use finemerge::synth::{gen_dataset, SynthConfig};
use finemerge::tune::{grid_search, GridSpec, TunedParams};
use finemerge::vocab::Vocabulary;

/// Sequence decoding that fuses a black-box ASR transcript with local
/// frame-level character posteriors.
#[derive(Parser)]
#[command(name = "finemerge", version, about)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Tuned parameter file (JSON, written by `tune`).
    #[arg(long, global = true)]
    params: Option<PathBuf>,

    /// Trained language model file.
    #[arg(long, global = true)]
    lm: Option<PathBuf>,

    /// Seed for all randomness.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for batch commands (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Posterior file format for outputs.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Binary)]
    format: FormatArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Binary,
    Json,
}

impl From<FormatArg> for PosteriorFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Binary => PosteriorFormat::Binary,
            FormatArg::Json => PosteriorFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic benchmark dataset.
    Synth(SynthArgs),
    /// Train the trigram language model from a sentence-per-line corpus.
    LmTrain(LmTrainArgs),
    /// Force-align a transcript onto one posterior file and dump the path.
    Align(AlignArgs),
    /// Decode posterior files with the local model only.
    Decode(DecodeArgs),
    /// Run the full fusion pipeline over a batch.
    Merge(MergeArgs),
    /// Combine two hypothesis files by confidence voting.
    Rover(RoverArgs),
    /// Rerank service N-best lists with the language model.
    Rescore(RescoreArgs),
    /// Score hypotheses against references (WER/CER, reports, diffs).
    Eval(EvalArgs),
    /// Grid-search decoder and fusion parameters on a validation split.
    Tune(TuneArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Total sentence count (split 85-5-10 into train/val/test).
    #[arg(long, default_value_t = 500)]
    n: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LmTrainArgs {
    /// UTF-8 text, one sentence per line.
    #[arg(long)]
    corpus: PathBuf,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AlignArgs {
    /// Posterior file (binary or JSON).
    #[arg(long)]
    posteriors: PathBuf,
    /// Transcript to align (normalized automatically).
    #[arg(long)]
    transcript: String,
}

#[derive(Args)]
struct DecodeArgs {
    /// Posterior file or directory of posterior files.
    #[arg(long)]
    posteriors: PathBuf,
    /// Use prefix beam search with the LM instead of greedy decoding.
    #[arg(long)]
    beam: bool,
    /// Attach per-word confidences estimated by forced alignment.
    #[arg(long)]
    confidences: bool,
    #[command(flatten)]
    decode: DecodeParamArgs,
    /// Output hypotheses (JSON lines); required for directory input.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeParamArgs {
    /// LM weight.
    #[arg(long)]
    alpha: Option<f64>,
    /// Word insertion bonus.
    #[arg(long)]
    beta: Option<f64>,
    /// Beam width.
    #[arg(long)]
    width: Option<usize>,
    /// Ranked alternatives to keep.
    #[arg(long, default_value_t = 1)]
    nbest: usize,
}

#[derive(Args)]
struct MergeArgs {
    /// Directory of posterior files.
    #[arg(long)]
    posteriors: PathBuf,
    /// Service hypotheses (JSON lines).
    #[arg(long)]
    service: PathBuf,
    /// Greedy-decode the revised distribution instead of beam search
    /// (no LM needed).
    #[arg(long)]
    greedy: bool,
    /// Service probability threshold.
    #[arg(long)]
    psi: Option<f64>,
    /// Service mixing weight.
    #[arg(long)]
    omega: Option<f64>,
    /// Blank mixing weight.
    #[arg(long)]
    gamma: Option<f64>,
    #[command(flatten)]
    decode: DecodeParamArgs,
    /// Output hypotheses (JSON lines).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RoverArgs {
    /// First hypothesis file (wins exact ties; by convention the service).
    #[arg(long)]
    first: PathBuf,
    /// Second hypothesis file (by convention the local model).
    #[arg(long)]
    second: PathBuf,
    /// Vote per character instead of per word.
    #[arg(long)]
    chars: bool,
    /// Confidence of the null (deletion) arc.
    #[arg(long)]
    conf_null: Option<f64>,
    /// Output hypotheses (JSON lines).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RescoreArgs {
    /// Service hypotheses with N-best lists (JSON lines).
    #[arg(long)]
    service: PathBuf,
    /// Service score weight.
    #[arg(long)]
    lambda: Option<f64>,
    /// Output hypotheses (JSON lines).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Reference transcripts (JSON lines).
    #[arg(long)]
    refs: PathBuf,
    /// Hypotheses to score (JSON lines).
    #[arg(long)]
    hyps: PathBuf,
    /// Second system for the per-word error-reduction table.
    #[arg(long)]
    compare: Option<PathBuf>,
    /// Minimum occurrences for the per-word table.
    #[arg(long, default_value_t = 5)]
    min_count: usize,
    /// Write a JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print aligned reference/hypothesis diffs.
    #[arg(long)]
    diff: bool,
}

#[derive(Args)]
struct TuneArgs {
    /// Dataset directory (containing `val/`) or a split directory itself.
    #[arg(long)]
    data: PathBuf,
    /// Beam width used while evaluating grid points.
    #[arg(long, default_value_t = 16)]
    width: usize,
    /// Where to write the winning parameters (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Where to write the full grid trace (JSON).
    #[arg(long)]
    trace: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .context("configuring worker pool")?;
    }
    match &cli.command {
        Command::Synth(args) => cmd_synth(&cli, args),
        Command::LmTrain(args) => cmd_lm_train(args),
        Command::Align(args) => cmd_align(args),
        Command::Decode(args) => cmd_decode(&cli, args),
        Command::Merge(args) => cmd_merge(&cli, args),
        Command::Rover(args) => cmd_rover(&cli, args),
        Command::Rescore(args) => cmd_rescore(&cli, args),
        Command::Eval(args) => cmd_eval(args),
        Command::Tune(args) => cmd_tune(&cli, args),
    }
}

fn load_params(cli: &Cli) -> Result<Option<TunedParams>> {
    match &cli.params {
        Some(path) => Ok(Some(
            read_params_file(path).with_context(|| format!("reading {}", path.display()))?,
        )),
        None => Ok(None),
    }
}

fn load_lm(cli: &Cli) -> Result<NGramLM> {
    let path = cli
        .lm
        .as_ref()
        .ok_or_else(|| anyhow!("this command needs --lm <model file>"))?;
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(NGramLM::read_from(std::io::BufReader::new(file))?)
}

fn beam_params(cli: &Cli, args: &DecodeParamArgs) -> Result<BeamParams> {
    let tuned = load_params(cli)?;
    let defaults = BeamParams::default();
    let alpha = args
        .alpha
        .or(tuned.map(|t| t.alpha))
        .unwrap_or(defaults.alpha);
    let beta = args.beta.or(tuned.map(|t| t.beta)).unwrap_or(defaults.beta);
    let width = args
        .width
        .or(tuned.map(|t| t.beam_width))
        .unwrap_or(defaults.width);
    Ok(BeamParams::new(width, alpha, beta, args.nbest.min(width))?)
}

fn merge_params(cli: &Cli, args: &MergeArgs) -> Result<MergeParams> {
    let tuned = load_params(cli)?;
    let psi = args
        .psi
        .or(tuned.map(|t| t.psi))
        .ok_or_else(|| anyhow!("psi needed: pass --psi or --params"))?;
    let omega = args
        .omega
        .or(tuned.map(|t| t.omega))
        .ok_or_else(|| anyhow!("omega needed: pass --omega or --params"))?;
    let gamma = args
        .gamma
        .or(tuned.map(|t| t.gamma))
        .ok_or_else(|| anyhow!("gamma needed: pass --gamma or --params"))?;
    Ok(MergeParams::new(psi, omega, gamma)?)
}

fn report_issues(source: &Path, issues: &[JsonlIssue]) {
    for issue in issues {
        eprintln!(
            "warning: {}:{}: skipping malformed line: {}",
            source.display(),
            issue.line,
            issue.message
        );
    }
    if !issues.is_empty() {
        eprintln!(
            "warning: {} malformed line(s) skipped in {}",
            issues.len(),
            source.display()
        );
    }
}

fn cmd_synth(cli: &Cli, args: &SynthArgs) -> Result<()> {
    eprintln!("seed: {}", cli.seed);
    let vocab = Vocabulary::english();
    let cfg = SynthConfig::with_seed(cli.seed);
    let dataset = gen_dataset(&cfg, args.n, &vocab)?;
    write_dataset(&args.out, &dataset, &vocab, cli.format.into())?;
    println!(
        "wrote {} train sentences, {} val and {} test utterances to {}",
        dataset.train_sentences.len(),
        dataset.val.len(),
        dataset.test.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_lm_train(args: &LmTrainArgs) -> Result<()> {
    let text = fs::read_to_string(&args.corpus)
        .with_context(|| format!("reading {}", args.corpus.display()))?;
    let lm = train_trigram(text.lines().map(finemerge::normalize_text))?;
    let mut out = std::io::BufWriter::new(fs::File::create(&args.out)?);
    lm.write_to(&mut out)?;
    out.flush()?;
    println!("trained trigram model ({} words) -> {}", lm.vocab_size(), args.out.display());
    Ok(())
}

fn cmd_align(args: &AlignArgs) -> Result<()> {
    let (posteriors, vocab) = read_posteriors_file(&args.posteriors)?;
    let posteriors: FramePosteriors<f64> = validate_posteriors(posteriors, &vocab)?.cast();
    let transcript = finemerge::normalize_text(&args.transcript);
    if transcript.is_empty() {
        bail!("transcript is empty after normalization");
    }
    let alignment = viterbi_align(&transcript, &smooth(&posteriors, SMOOTH_EPS)?, &vocab)?;
    println!("utterance: {}", posteriors.utterance_id());
    println!("transcript: {transcript}");
    println!("log_prob: {:.6}", alignment.log_prob);
    println!("frame\tchar\tsource\tprob");
    for t in 0..posteriors.frames() {
        let state = alignment.states[t];
        let source = alignment.source_char_positions[t]
            .map(|p| p.to_string())
            .unwrap_or_else(|| "-".to_string());
        println!(
            "{}\t{}\t{}\t{:.6e}",
            t + 1,
            vocab.char_at(state),
            source,
            posteriors.prob(t, state)
        );
    }
    Ok(())
}

type PosteriorBatch = Vec<(String, FramePosteriors<f64>)>;

fn read_posterior_batch(dir: &Path) -> Result<(PosteriorBatch, Vocabulary)> {
    let files = list_posterior_files(dir)?;
    if files.is_empty() {
        bail!("no posterior files in {}", dir.display());
    }
    let mut vocab: Option<Vocabulary> = None;
    let mut out = Vec::with_capacity(files.len());
    for (id, path) in files {
        let (p, file_vocab) = read_posteriors_file(&path)?;
        let p = validate_posteriors(p, &file_vocab)?;
        if vocab.is_none() {
            vocab = Some(file_vocab);
        }
        out.push((id, p.cast::<f64>()));
    }
    Ok((out, vocab.expect("nonempty batch")))
}

fn cmd_decode(cli: &Cli, args: &DecodeArgs) -> Result<()> {
    if args.posteriors.is_dir() {
        let out_path = args
            .out
            .as_ref()
            .ok_or_else(|| anyhow!("--out is required when decoding a directory"))?;
        let (batch, vocab) = read_posterior_batch(&args.posteriors)?;
        let attach_confidences = |id: &str, p: &FramePosteriors<f64>, transcript: String| {
            let mut record = HypothesisRecord::plain(id, transcript);
            if args.confidences {
                let local = finemerge::decode::local_confidences(p, &record.transcript, &vocab);
                record.word_confidences = Some(local.word_confidences);
            }
            record
        };
        let records: Vec<HypothesisRecord> = if args.beam {
            let lm = load_lm(cli)?;
            let params = beam_params(cli, &args.decode)?;
            batch
                .par_iter()
                .map(|(id, p)| {
                    let top = beam_decode(p, &lm, &vocab, &params)
                        .into_iter()
                        .next()
                        .map(|(t, _)| t)
                        .unwrap_or_default();
                    attach_confidences(id, p, top)
                })
                .collect()
        } else {
            batch
                .par_iter()
                .map(|(id, p)| attach_confidences(id, p, greedy_decode(p, &vocab)))
                .collect()
        };
        write_jsonl_file(out_path, &records)?;
        println!("decoded {} utterances -> {}", records.len(), out_path.display());
    } else {
        let (p, vocab) = read_posteriors_file(&args.posteriors)?;
        let p: FramePosteriors<f64> = validate_posteriors(p, &vocab)?.cast();
        if args.beam {
            let lm = load_lm(cli)?;
            let params = beam_params(cli, &args.decode)?;
            for (transcript, score) in beam_decode(&p, &lm, &vocab, &params) {
                println!("{score:.6}\t{transcript}");
            }
        } else {
            println!("{}", greedy_decode(&p, &vocab));
        }
    }
    Ok(())
}

fn cmd_merge(cli: &Cli, args: &MergeArgs) -> Result<()> {
    let (service, issues) = read_jsonl_file::<HypothesisRecord>(&args.service)?;
    report_issues(&args.service, &issues);
    if service.is_empty() {
        bail!("no service hypotheses in {}", args.service.display());
    }
    let merge = merge_params(cli, args)?;

    // Load posteriors in service-file order.
    let mut vocab: Option<Vocabulary> = None;
    let mut batch = Vec::with_capacity(service.len());
    for rec in service {
        let path = find_posterior_file(&args.posteriors, &rec.id)?;
        let (p, file_vocab) = read_posteriors_file(&path)?;
        let p = validate_posteriors(p, &file_vocab)?;
        if vocab.is_none() {
            vocab = Some(file_vocab);
        }
        batch.push((rec.id.clone(), p.cast::<f64>(), rec.into_service()?));
    }
    let vocab = vocab.expect("nonempty batch");

    let (records, fallbacks) = if args.greedy {
        let results: Vec<(HypothesisRecord, bool)> = batch
            .par_iter()
            .map(|(id, p, svc)| {
                let (transcript, fallback) = finemerge_greedy(p, svc, &merge, &vocab);
                (HypothesisRecord::plain(id, transcript), fallback)
            })
            .collect();
        split_fallbacks(results)
    } else {
        let lm = load_lm(cli)?;
        let beam = beam_params(cli, &args.decode)?;
        let results: Vec<(HypothesisRecord, bool)> = batch
            .par_iter()
            .map(|(id, p, svc)| {
                let out = finemerge(p, svc, &merge, &beam, &lm, &vocab);
                (HypothesisRecord::plain(id, out.transcript), out.used_fallback)
            })
            .collect();
        split_fallbacks(results)
    };
    write_jsonl_file(&args.out, &records)?;
    if fallbacks > 0 {
        eprintln!("note: {fallbacks} utterance(s) fell back to local-only decoding");
    }
    println!("merged {} utterances -> {}", records.len(), args.out.display());
    Ok(())
}

fn split_fallbacks(results: Vec<(HypothesisRecord, bool)>) -> (Vec<HypothesisRecord>, usize) {
    let fallbacks = results.iter().filter(|(_, f)| *f).count();
    (results.into_iter().map(|(r, _)| r).collect(), fallbacks)
}

fn cmd_rover(cli: &Cli, args: &RoverArgs) -> Result<()> {
    let (first, issues) = read_jsonl_file::<HypothesisRecord>(&args.first)?;
    report_issues(&args.first, &issues);
    let (second, issues) = read_jsonl_file::<HypothesisRecord>(&args.second)?;
    report_issues(&args.second, &issues);
    let by_id: std::collections::HashMap<String, HypothesisRecord> =
        second.into_iter().map(|h| (h.id.clone(), h)).collect();
    let conf_null = args
        .conf_null
        .or(load_params(cli)?.map(|t| t.conf_null))
        .unwrap_or(RoverParams::default().conf_null);
    let params = RoverParams::new(conf_null, TiePreference::First)?;

    let mut records = Vec::with_capacity(first.len());
    for a in first {
        let b = by_id
            .get(&a.id)
            .ok_or_else(|| anyhow!("utterance {:?} missing from {}", a.id, args.second.display()))?;
        let a_confs = a.word_confidences.clone().unwrap_or_default();
        let b_confs = b.word_confidences.clone().unwrap_or_default();
        let voted = if args.chars {
            rover_chars(&a.transcript, &a_confs, &b.transcript, &b_confs, &params)
        } else {
            rover_words(&a.transcript, &a_confs, &b.transcript, &b_confs, &params)
        };
        records.push(HypothesisRecord::plain(&a.id, voted));
    }
    write_jsonl_file(&args.out, &records)?;
    println!("voted {} utterances -> {}", records.len(), args.out.display());
    Ok(())
}

fn cmd_rescore(cli: &Cli, args: &RescoreArgs) -> Result<()> {
    let lm = load_lm(cli)?;
    let lambda = args
        .lambda
        .or(load_params(cli)?.map(|t| t.lambda))
        .unwrap_or(1.0);
    let (service, issues) = read_jsonl_file::<HypothesisRecord>(&args.service)?;
    report_issues(&args.service, &issues);
    let mut records = Vec::with_capacity(service.len());
    for rec in service {
        let id = rec.id.clone();
        let svc = rec.into_service()?;
        let best = rescore_nbest(&svc, &lm, lambda)?;
        records.push(HypothesisRecord::plain(&id, best));
    }
    write_jsonl_file(&args.out, &records)?;
    println!("rescored {} utterances -> {}", records.len(), args.out.display());
    Ok(())
}

#[derive(serde::Serialize)]
struct EvalReport {
    wer: finemerge::metrics::CorpusMetric,
    cer: finemerge::metrics::CorpusMetric,
    utterances: Vec<finemerge::metrics::EvalRecord>,
    skipped_lines: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_word: Option<Vec<finemerge::metrics::WordErrorReduction>>,
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let (refs, ref_issues) = read_jsonl_file::<ReferenceRecord>(&args.refs)?;
    report_issues(&args.refs, &ref_issues);
    let (hyps, hyp_issues) = read_jsonl_file::<HypothesisRecord>(&args.hyps)?;
    report_issues(&args.hyps, &hyp_issues);
    let hyp_by_id: std::collections::HashMap<String, String> = hyps
        .into_iter()
        .map(|h| (h.id, finemerge::normalize_text(&h.transcript)))
        .collect();

    let mut ref_texts = Vec::with_capacity(refs.len());
    let mut hyp_texts = Vec::with_capacity(refs.len());
    let mut records = Vec::with_capacity(refs.len());
    for r in &refs {
        let hyp = hyp_by_id
            .get(&r.id)
            .ok_or_else(|| anyhow!("utterance {:?} missing from {}", r.id, args.hyps.display()))?;
        let reference = finemerge::normalize_text(&r.transcript);
        ref_texts.push(reference.clone());
        hyp_texts.push(hyp.clone());
        let mut hypotheses = std::collections::BTreeMap::new();
        hypotheses.insert("hyp".to_string(), hyp.clone());
        records.push(finemerge::metrics::EvalRecord {
            id: r.id.clone(),
            reference,
            hypotheses,
        });
    }

    let wer_metric = wer(&ref_texts, &hyp_texts)?;
    let cer_metric = cer(&ref_texts, &hyp_texts)?;
    println!("WER {:.3}", wer_metric.rate);
    println!("CER {:.3}", cer_metric.rate);

    if args.diff {
        for (record, hyp) in records.iter().zip(&hyp_texts) {
            if record.reference != *hyp {
                println!("--- {}", record.id);
                println!("{}", aligned_diff(&record.reference, hyp));
            }
        }
    }

    let per_word = match &args.compare {
        Some(path) => {
            let (compare, issues) = read_jsonl_file::<HypothesisRecord>(path)?;
            report_issues(path, &issues);
            let by_id: std::collections::HashMap<String, String> = compare
                .into_iter()
                .map(|h| (h.id, finemerge::normalize_text(&h.transcript)))
                .collect();
            let mut compare_texts = Vec::with_capacity(refs.len());
            for (r, record) in refs.iter().zip(&mut records) {
                let text = by_id
                    .get(&r.id)
                    .ok_or_else(|| anyhow!("utterance {:?} missing from {}", r.id, path.display()))?;
                record
                    .hypotheses
                    .insert("compare".to_string(), text.clone());
                compare_texts.push(text.clone());
            }
            let table =
                per_word_error_reduction(&ref_texts, &hyp_texts, &compare_texts, args.min_count)?;
            println!("word\toccurrences\terr_hyp\terr_compare\treduction");
            for row in table.iter().take(20) {
                println!(
                    "{}\t{}\t{:.3}\t{:.3}\t{:+.3}",
                    row.word, row.occurrences, row.err_a, row.err_b, row.reduction
                );
            }
            Some(table)
        }
        None => None,
    };

    if let Some(path) = &args.report {
        let report = EvalReport {
            wer: wer_metric,
            cer: cer_metric,
            utterances: records,
            skipped_lines: ref_issues.len() + hyp_issues.len(),
            per_word,
        };
        let mut w = std::io::BufWriter::new(fs::File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &report)?;
        w.write_all(b"\n")?;
        w.flush()?;
        println!("report -> {}", path.display());
    }
    Ok(())
}

fn cmd_tune(cli: &Cli, args: &TuneArgs) -> Result<()> {
    let lm = load_lm(cli)?;
    let split_dir = if args.data.join("val").is_dir() {
        args.data.join("val")
    } else {
        args.data.clone()
    };
    let (utterances, issues, vocab) = read_split(&split_dir)?;
    report_issues(&split_dir, &issues);
    let outcome = grid_search(&utterances, &lm, &vocab, &GridSpec::default(), args.width)?;
    println!(
        "validation WER: service {:.4}  local {:.4}  finemerge {:.4}  rover {:.4}  rescore {:.4}",
        outcome.service_wer,
        outcome.local_wer,
        outcome.finemerge_wer,
        outcome.rover_wer,
        outcome.rescore_wer
    );
    println!(
        "best: psi={} omega={} gamma={} alpha={} beta={} conf_null={} lambda={} (beam width {})",
        outcome.params.psi,
        outcome.params.omega,
        outcome.params.gamma,
        outcome.params.alpha,
        outcome.params.beta,
        outcome.params.conf_null,
        outcome.params.lambda,
        outcome.params.beam_width
    );
    write_params_file(&args.out, &outcome.params)?;
    println!("params -> {}", args.out.display());
    if let Some(path) = &args.trace {
        let mut w = std::io::BufWriter::new(fs::File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &outcome.trace)?;
        w.write_all(b"\n")?;
        w.flush()?;
        println!("trace -> {}", path.display());
    }
    Ok(())
}
