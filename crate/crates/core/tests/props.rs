//! Property tests for the library-wide invariants.

use proptest::prelude::*;

use finemerge::align::{min_frames, smooth, viterbi_align, SMOOTH_EPS};
use finemerge::baselines::{rover_words, RoverParams, TiePreference};
use finemerge::decode::{beam_decode, ctc_logprob, greedy_decode, BeamParams};
use finemerge::lm::train_trigram;
use finemerge::merge::{revise, MergeParams};
use finemerge::metrics::edit_distance;
use finemerge::posteriors::{validate_posteriors, FramePosteriors};
use finemerge::vocab::{normalize_text, Vocabulary};

fn vocab4() -> Vocabulary {
    Vocabulary::from_symbols(&['_', 'a', 'b', ' '], 0).unwrap()
}

/// A random stochastic row of width `v`.
fn row_strategy(v: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.01f64..1.0, v).prop_map(|mut row| {
        let sum: f64 = row.iter().sum();
        for x in &mut row {
            *x /= sum;
        }
        row
    })
}

fn matrix_strategy(v: usize, max_t: usize) -> impl Strategy<Value = FramePosteriors<f64>> {
    proptest::collection::vec(row_strategy(v), 1..=max_t)
        .prop_map(|rows| FramePosteriors::from_rows("prop", &rows).unwrap())
}

fn transcript_strategy(max_len: usize) -> impl Strategy<Value = String> {
    proptest::collection::vec(prop_oneof![Just('a'), Just('b')], 1..=max_len)
        .prop_map(|chars| chars.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alignment_collapse_reproduces_transcript(
        p in matrix_strategy(4, 8),
        s in transcript_strategy(3),
    ) {
        prop_assume!(p.frames() >= min_frames(&s));
        let vocab = vocab4();
        let a = viterbi_align(&s, &smooth(&p, SMOOTH_EPS).unwrap(), &vocab).unwrap();
        prop_assert_eq!(a.collapse(&vocab), s);
        // Source positions never decrease over non-blank frames.
        let positions: Vec<usize> = a.source_char_positions.iter().flatten().copied().collect();
        prop_assert!(positions.windows(2).all(|w| w[0] <= w[1]));
        // The path log-probability matches its frames.
        let recomputed: f64 = (0..p.frames())
            .map(|t| (p.prob(t, a.states[t]) + SMOOTH_EPS).ln())
            .sum();
        prop_assert!((recomputed - a.log_prob).abs() < 1e-9);
    }

    #[test]
    fn revision_rows_stay_stochastic_and_boosted(
        p in matrix_strategy(4, 6),
        s in transcript_strategy(2),
        psi in 1e-6f64..0.5,
        omega in 0.0f64..1.0,
        gamma in 0.0f64..1.0,
        conf in 0.0f64..1.0,
    ) {
        prop_assume!(p.frames() >= min_frames(&s));
        let vocab = vocab4();
        let p = validate_posteriors(p, &vocab).unwrap();
        let a = viterbi_align(&s, &smooth(&p, SMOOTH_EPS).unwrap(), &vocab).unwrap();
        let params = MergeParams::new(psi, omega, gamma).unwrap();
        let confs = vec![conf; s.split_whitespace().count()];
        let revised = revise(&p, &a, &s, &confs, &params).unwrap();
        for t in 0..p.frames() {
            let row = revised.row(t);
            let sum: f64 = row.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|&x| x >= 0.0));
            let aligned = a.states[t];
            // Aligned symbol never loses mass; everything else never gains.
            prop_assert!(revised.prob(t, aligned) >= p.prob(t, aligned) - 1e-12);
            for c in 0..p.vocab_size() {
                if c != aligned {
                    prop_assert!(revised.prob(t, c) <= p.prob(t, c) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn revision_is_identity_when_disabled(
        p in matrix_strategy(4, 6),
        s in transcript_strategy(2),
    ) {
        prop_assume!(p.frames() >= min_frames(&s));
        let vocab = vocab4();
        let p = validate_posteriors(p, &vocab).unwrap();
        let a = viterbi_align(&s, &smooth(&p, SMOOTH_EPS).unwrap(), &vocab).unwrap();
        // omega = gamma = 0.
        let off = MergeParams::new(1e-4, 0.0, 0.0).unwrap();
        let out = revise(&p, &a, &s, &[], &off).unwrap();
        prop_assert_eq!(out.as_slice(), p.as_slice());
        // psi >= 1: the gate can never fire.
        let gated = MergeParams::new(1.0, 0.9, 0.9).unwrap();
        let out = revise(&p, &a, &s, &[], &gated).unwrap();
        prop_assert_eq!(out.as_slice(), p.as_slice());
    }

    #[test]
    fn validation_idempotent_on_random_matrices(p in matrix_strategy(4, 6)) {
        let vocab = vocab4();
        let once = validate_posteriors(p, &vocab).unwrap();
        let twice = validate_posteriors(once.clone(), &vocab).unwrap();
        let a: Vec<u64> = once.as_slice().iter().map(|x| x.to_bits()).collect();
        let b: Vec<u64> = twice.as_slice().iter().map(|x| x.to_bits()).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn greedy_never_exceeds_total_probability(p in matrix_strategy(4, 6)) {
        let vocab = vocab4();
        let y = greedy_decode(&p, &vocab);
        let lp = ctc_logprob(&p, &y, &vocab).unwrap();
        prop_assert!(lp <= 1e-12);
    }

    #[test]
    fn edit_distance_triangle_inequality(
        a in proptest::collection::vec(0u8..3, 0..6),
        b in proptest::collection::vec(0u8..3, 0..6),
        c in proptest::collection::vec(0u8..3, 0..6),
    ) {
        let ab = edit_distance(&a, &b).0;
        let bc = edit_distance(&b, &c).0;
        let ac = edit_distance(&a, &c).0;
        prop_assert!(ac <= ab + bc);
        prop_assert_eq!(edit_distance(&a, &a).0, 0);
    }

    #[test]
    fn rover_is_idempotent_on_identical_inputs(
        words in proptest::collection::vec(prop_oneof![Just("a"), Just("bb"), Just("cab")], 1..5),
        confs in proptest::collection::vec(0.0f64..1.0, 5),
    ) {
        let transcript = words.join(" ");
        let confs = &confs[..words.len()];
        let out = rover_words(
            &transcript,
            confs,
            &transcript,
            confs,
            &RoverParams::default(),
        );
        prop_assert_eq!(out, transcript);
    }

    #[test]
    fn rover_symmetry_up_to_tie_policy(
        a_words in proptest::collection::vec(prop_oneof![Just("x"), Just("y"), Just("z")], 1..4),
        b_words in proptest::collection::vec(prop_oneof![Just("x"), Just("y"), Just("z")], 1..4),
        seed in 0u64..1000,
    ) {
        // Distinct confidences per slot avoid exact ties.
        let mut conf = 0.91;
        let mut next_conf = || { conf -= 0.07 + (seed % 7) as f64 * 1e-4; conf };
        let a_confs: Vec<f64> = a_words.iter().map(|_| next_conf()).collect();
        let b_confs: Vec<f64> = b_words.iter().map(|_| next_conf()).collect();
        let a = a_words.join(" ");
        let b = b_words.join(" ");
        let fwd = rover_words(&a, &a_confs, &b, &b_confs,
            &RoverParams::new(0.33, TiePreference::First).unwrap());
        let rev = rover_words(&b, &b_confs, &a, &a_confs,
            &RoverParams::new(0.33, TiePreference::Second).unwrap());
        prop_assert_eq!(fwd, rev);
    }

    #[test]
    fn normalize_text_is_idempotent(raw in "\\PC*") {
        let once = normalize_text(&raw);
        prop_assert_eq!(normalize_text(&once), once.clone());
        prop_assert!(Vocabulary::english().contains_text(&once));
    }
}

/// Increasing the word bonus never shortens the top transcript (exhaustive
/// beam over a seeded grid of small instances).
#[test]
fn beta_monotonically_encourages_words() {
    use rand::Rng;
    use rand::SeedableRng;
    let vocab = vocab4();
    let lm = train_trigram(["a b", "b a", "a", "ab"]).unwrap();
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0xBE7A);
    for _ in 0..30 {
        let t = rng.gen_range(2..=5);
        let rows: Vec<Vec<f64>> = (0..t)
            .map(|_| {
                let mut row: Vec<f64> = (0..4).map(|_| rng.gen_range(0.05..1.0)).collect();
                let sum: f64 = row.iter().sum();
                row.iter_mut().for_each(|x| *x /= sum);
                row
            })
            .collect();
        let p = FramePosteriors::from_rows("beta", &rows).unwrap();
        let alpha = rng.gen_range(0.0..1.0);
        let mut last_words = 0usize;
        for beta in [0.0, 0.5, 1.0, 2.0] {
            let params = BeamParams {
                width: 100_000,
                alpha,
                beta,
                nbest: 1,
            };
            let out = beam_decode(&p, &lm, &vocab, &params);
            let words = out[0].0.split_whitespace().count();
            assert!(
                words >= last_words,
                "beta={beta}: words {words} < previous {last_words}"
            );
            last_words = words;
        }
    }
}
