//! Two-stage validation-set grid search: decoder weights (alpha, beta) on
//! plain local decoding first, then fusion parameters (psi, omega, gamma)
//! with the decoder frozen. The ROVER null confidence and the rescoring
//! weight get their own passes.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::{smooth, viterbi_align, FrameAlignment, SMOOTH_EPS};
use crate::baselines::{rescore_nbest, rover_words, RoverParams, TiePreference};
use crate::decode::{beam_decode, local_confidences, BeamParams};
use crate::error::{Error, Result};
use crate::lm::NGramLM;
use crate::merge::{revise, MergeParams};
use crate::metrics::wer;
use crate::posteriors::FramePosteriors;
use crate::synth::Utterance;
use crate::vocab::{normalize_text, Vocabulary};

/// Candidate values per parameter; evaluated in order, first minimum wins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub psi: Vec<f64>,
    pub omega: Vec<f64>,
    pub gamma: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub conf_null: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            psi: vec![1e-4, 1e-3, 1e-2, 0.05, 0.1],
            omega: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            gamma: vec![0.05, 0.1, 0.2, 0.4],
            alpha: vec![0.5, 1.0, 1.5, 2.0],
            beta: vec![0.0, 0.5, 1.0, 1.5],
            conf_null: vec![0.2, 0.35, 0.45, 0.55, 0.7],
            lambda: vec![0.1, 0.3, 1.0, 3.0],
        }
    }
}

/// Best parameters found by [`grid_search`]; consumed by the fusion and
/// baseline commands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunedParams {
    pub psi: f64,
    pub omega: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub conf_null: f64,
    pub lambda: f64,
    pub beam_width: usize,
}

/// One evaluated grid point.
#[derive(Debug, Clone, Serialize)]
pub struct GridTracePoint {
    pub stage: &'static str,
    pub params: BTreeMap<&'static str, f64>,
    pub wer: f64,
}

/// Everything the tuner measured.
#[derive(Debug, Clone, Serialize)]
pub struct TuneOutcome {
    pub params: TunedParams,
    pub service_wer: f64,
    pub local_wer: f64,
    pub finemerge_wer: f64,
    pub rover_wer: f64,
    pub rescore_wer: f64,
    pub trace: Vec<GridTracePoint>,
}

struct PreparedUtterance {
    reference: String,
    posteriors: FramePosteriors<f64>,
    alignment: Option<(String, FrameAlignment<f64>, Vec<f64>)>,
    service: crate::types::ServiceHypothesis,
}

fn prepare(val: &[Utterance], vocab: &Vocabulary) -> Vec<PreparedUtterance> {
    val.par_iter()
        .map(|u| {
            let posteriors: FramePosteriors<f64> = u.posteriors.cast();
            let s = normalize_text(u.service.transcript());
            let alignment = if s.is_empty() {
                None
            } else {
                smooth(&posteriors, SMOOTH_EPS)
                    .ok()
                    .and_then(|lp| viterbi_align(&s, &lp, vocab).ok())
                    .map(|a| {
                        let confs =
                            if u.service.word_confidences().len() == s.split_whitespace().count() {
                                u.service.word_confidences().to_vec()
                            } else {
                                Vec::new()
                            };
                        (s, a, confs)
                    })
            };
            PreparedUtterance {
                reference: u.reference.clone(),
                posteriors,
                alignment,
                service: u.service.clone(),
            }
        })
        .collect()
}

fn corpus_wer(prepared: &[PreparedUtterance], hyps: &[String]) -> Result<f64> {
    let refs: Vec<&str> = prepared.iter().map(|p| p.reference.as_str()).collect();
    Ok(wer(&refs, hyps)?.rate)
}

/// Exhaustive staged grid search minimizing corpus WER. Grid points are
/// evaluated in declaration order and ties keep the earliest point, so the
/// result is independent of thread scheduling.
pub fn grid_search(
    val: &[Utterance],
    lm: &NGramLM,
    vocab: &Vocabulary,
    grids: &GridSpec,
    beam_width: usize,
) -> Result<TuneOutcome> {
    if val.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for (name, grid) in [
        ("psi", &grids.psi),
        ("omega", &grids.omega),
        ("gamma", &grids.gamma),
        ("alpha", &grids.alpha),
        ("beta", &grids.beta),
        ("conf_null", &grids.conf_null),
        ("lambda", &grids.lambda),
    ] {
        if grid.is_empty() {
            return Err(Error::EmptyGrid(name));
        }
    }

    let prepared = prepare(val, vocab);
    let mut trace = Vec::new();

    // Stage 1: alpha/beta on plain local decoding.
    let mut best_ab: Option<(f64, f64, f64)> = None;
    for &alpha in &grids.alpha {
        for &beta in &grids.beta {
            let params = BeamParams {
                width: beam_width,
                alpha,
                beta,
                nbest: 1,
            };
            let hyps: Vec<String> = prepared
                .par_iter()
                .map(|p| {
                    beam_decode(&p.posteriors, lm, vocab, &params)
                        .into_iter()
                        .next()
                        .map(|(t, _)| t)
                        .unwrap_or_default()
                })
                .collect();
            let rate = corpus_wer(&prepared, &hyps)?;
            trace.push(GridTracePoint {
                stage: "local",
                params: BTreeMap::from([("alpha", alpha), ("beta", beta)]),
                wer: rate,
            });
            if best_ab.is_none_or(|(w, _, _)| rate < w) {
                best_ab = Some((rate, alpha, beta));
            }
        }
    }
    let (local_wer, alpha, beta) = best_ab.expect("nonempty alpha/beta grids");
    let beam = BeamParams {
        width: beam_width,
        alpha,
        beta,
        nbest: 1,
    };

    // Local hypotheses at the chosen decoder settings back the fallbacks,
    // ROVER and the confidence estimates.
    let local_hyps: Vec<String> = prepared
        .par_iter()
        .map(|p| {
            beam_decode(&p.posteriors, lm, vocab, &beam)
                .into_iter()
                .next()
                .map(|(t, _)| t)
                .unwrap_or_default()
        })
        .collect();

    // Stage 2: psi/omega/gamma on the fusion pipeline with alpha/beta frozen.
    let mut best_fm: Option<(f64, f64, f64, f64)> = None;
    for &psi in &grids.psi {
        for &omega in &grids.omega {
            for &gamma in &grids.gamma {
                let merge_params = MergeParams::new(psi, omega, gamma)?;
                let hyps: Vec<String> = prepared
                    .par_iter()
                    .enumerate()
                    .map(|(i, p)| match &p.alignment {
                        Some((s, a, confs)) => revise(&p.posteriors, a, s, confs, &merge_params)
                            .ok()
                            .and_then(|revised| {
                                beam_decode(&revised, lm, vocab, &beam)
                                    .into_iter()
                                    .next()
                                    .map(|(t, _)| t)
                            })
                            .unwrap_or_else(|| local_hyps[i].clone()),
                        None => local_hyps[i].clone(),
                    })
                    .collect();
                let rate = corpus_wer(&prepared, &hyps)?;
                trace.push(GridTracePoint {
                    stage: "finemerge",
                    params: BTreeMap::from([
                        ("psi", psi),
                        ("omega", omega),
                        ("gamma", gamma),
                    ]),
                    wer: rate,
                });
                if best_fm.is_none_or(|(w, _, _, _)| rate < w) {
                    best_fm = Some((rate, psi, omega, gamma));
                }
            }
        }
    }
    let (finemerge_wer, psi, omega, gamma) = best_fm.expect("nonempty fusion grids");

    // ROVER null confidence.
    let local_with_confs: Vec<crate::types::LocalHypothesis> = prepared
        .par_iter()
        .zip(&local_hyps)
        .map(|(p, hyp)| local_confidences(&p.posteriors, hyp, vocab))
        .collect();
    let mut best_rover: Option<(f64, f64)> = None;
    for &conf_null in &grids.conf_null {
        let rover_params = RoverParams::new(conf_null, TiePreference::First)?;
        let hyps: Vec<String> = prepared
            .par_iter()
            .zip(&local_with_confs)
            .map(|(p, local)| {
                rover_words(
                    p.service.transcript(),
                    p.service.word_confidences(),
                    &local.transcript,
                    &local.word_confidences,
                    &rover_params,
                )
            })
            .collect();
        let rate = corpus_wer(&prepared, &hyps)?;
        trace.push(GridTracePoint {
            stage: "rover",
            params: BTreeMap::from([("conf_null", conf_null)]),
            wer: rate,
        });
        if best_rover.is_none_or(|(w, _)| rate < w) {
            best_rover = Some((rate, conf_null));
        }
    }
    let (rover_wer, conf_null) = best_rover.expect("nonempty conf_null grid");

    // Rescoring weight.
    let mut best_rescore: Option<(f64, f64)> = None;
    for &lambda in &grids.lambda {
        let hyps: Vec<String> = prepared
            .par_iter()
            .map(|p| {
                rescore_nbest(&p.service, lm, lambda)
                    .unwrap_or_else(|_| p.service.transcript().to_string())
            })
            .collect();
        let rate = corpus_wer(&prepared, &hyps)?;
        trace.push(GridTracePoint {
            stage: "rescore",
            params: BTreeMap::from([("lambda", lambda)]),
            wer: rate,
        });
        if best_rescore.is_none_or(|(w, _)| rate < w) {
            best_rescore = Some((rate, lambda));
        }
    }
    let (rescore_wer, lambda) = best_rescore.expect("nonempty lambda grid");

    let service_hyps: Vec<String> = prepared
        .iter()
        .map(|p| p.service.transcript().to_string())
        .collect();
    let service_wer = corpus_wer(&prepared, &service_hyps)?;

    Ok(TuneOutcome {
        params: TunedParams {
            psi,
            omega,
            gamma,
            alpha,
            beta,
            conf_null,
            lambda,
            beam_width,
        },
        service_wer,
        local_wer,
        finemerge_wer,
        rover_wer,
        rescore_wer,
        trace,
    })
}
