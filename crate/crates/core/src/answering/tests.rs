use std::sync::Mutex;

use super::*;
use crate::chunking::StaticFrameProvider;
use crate::model::{StateAtom, Trajectory};

fn id(s: &str) -> ObjectId {
    ObjectId::new(s).unwrap()
}

fn ts(millis: u64) -> Timestamp {
    Timestamp::from_millis(millis)
}

fn sample_set() -> TrajectorySet {
    let mut set = TrajectorySet::new("v1", "fp");
    let mut p66 = Trajectory::new(id("player_66"), (0, id("player_66")));
    p66.merge_record(
        ts(2000),
        [
            StateAtom::unary("wearing_red_shirt").unwrap(),
            StateAtom::relation("passes_to", id("player_27")).unwrap(),
        ],
    );
    p66.merge_record(ts(8000), [StateAtom::unary("running").unwrap()]);
    set.insert(p66).unwrap();
    let mut referee = Trajectory::new(id("referee"), (0, id("referee")));
    referee.merge_record(ts(1000), [StateAtom::unary("whistling").unwrap()]);
    set.insert(referee).unwrap();
    set
}

mod retrieval {
    use super::*;

    #[test]
    fn none_mode_is_identity() {
        let set = sample_set();
        let q = Query::yes_no("q1", "anything at all");
        let cfg = RetrievalConfig {
            mode: RetrievalMode::None,
            top_k: 1,
            seed: 0,
        };
        let out = retrieve(&set, &q, &cfg).unwrap();
        assert_eq!(out, set);
    }

    #[test]
    fn scored_mode_ranks_token_overlap() {
        let set = sample_set();
        let q = Query::yes_no("q1", "Does player number 66 wear a red shirt?");
        let cfg = RetrievalConfig {
            mode: RetrievalMode::Scored,
            top_k: 1,
            seed: 0,
        };
        let out = retrieve(&set, &q, &cfg).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out.get(&id("player_66")).is_some());
    }

    #[test]
    fn random_mode_is_seed_deterministic() {
        let set = sample_set();
        let q = Query::yes_no("q1", "whatever");
        let cfg = RetrievalConfig {
            mode: RetrievalMode::RandomTopK,
            top_k: 1,
            seed: 77,
        };
        let first = retrieve(&set, &q, &cfg).unwrap();
        let second = retrieve(&set, &q, &cfg).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn output_is_always_a_subset() {
        let set = sample_set();
        let q = Query::yes_no("q1", "red shirt");
        for mode in [
            RetrievalMode::Scored,
            RetrievalMode::None,
            RetrievalMode::RandomTopK,
        ] {
            for top_k in 1..=3 {
                let cfg = RetrievalConfig {
                    mode,
                    top_k,
                    seed: 5,
                };
                let out = retrieve(&set, &q, &cfg).unwrap();
                for (object, _) in out.iter() {
                    assert!(set.get(object).is_some());
                }
                assert_eq!(out.video_id, set.video_id);
                assert_eq!(out.provenance, set.provenance);
            }
        }
    }
}

mod rendering {
    use super::*;

    #[test]
    fn empty_set_renders_header_only() {
        let set = TrajectorySet::new("v1", "fp");
        let block = render_trajectories(&set, &AnswerConfig::default());
        assert_eq!(block, "trajectories:\n");
    }

    #[test]
    fn sorted_lines_are_nondecreasing_in_time() {
        let block = render_trajectories(&sample_set(), &AnswerConfig::default());
        let mut last_t: Option<f64> = None;
        for line in block.lines() {
            if line.starts_with("object: ") {
                last_t = None;
                continue;
            }
            if let Some(rest) = line.trim_start().strip_prefix("t=") {
                let seconds: f64 = rest.split(':').next().unwrap().parse().unwrap();
                if let Some(prev) = last_t {
                    assert!(seconds >= prev, "line out of order: {line}");
                }
                last_t = Some(seconds);
            }
        }
        assert!(block.contains("  t=2.000: passes_to → player_27\n"));
        assert!(block.contains("object: player_66\n"));
    }

    #[test]
    fn shuffle_is_reproducible_per_seed() {
        let cfg = AnswerConfig {
            trajectory_order: TrajectoryOrder::Shuffled { seed: 9 },
            ..AnswerConfig::default()
        };
        let a = render_trajectories(&sample_set(), &cfg);
        let b = render_trajectories(&sample_set(), &cfg);
        assert_eq!(a, b);
        let other_seed = AnswerConfig {
            trajectory_order: TrajectoryOrder::Shuffled { seed: 10 },
            ..AnswerConfig::default()
        };
        // Same lines, possibly different order; compare as multisets.
        let c = render_trajectories(&sample_set(), &other_seed);
        let mut lines_a: Vec<&str> = a.lines().collect();
        let mut lines_c: Vec<&str> = c.lines().collect();
        lines_a.sort_unstable();
        lines_c.sort_unstable();
        assert_eq!(lines_a, lines_c);
    }

    #[test]
    fn token_budget_truncates_whole_lines() {
        let block = render_trajectories(&sample_set(), &AnswerConfig::default());
        let truncated = truncate_to_token_budget(&block, 4);
        assert!(truncated.lines().count() < block.lines().count());
        assert!(truncated.starts_with("trajectories:\n"));
        for line in truncated.lines() {
            assert!(block.contains(line));
        }
    }

    #[test]
    fn alternative_styles_render_deterministically() {
        for style in [RenderStyle::Prose, RenderStyle::DenseCaption] {
            let cfg = AnswerConfig {
                render_style: style,
                ..AnswerConfig::default()
            };
            let a = render_trajectories(&sample_set(), &cfg);
            let b = render_trajectories(&sample_set(), &cfg);
            assert_eq!(a, b);
            assert!(a.starts_with("trajectories:\n"));
        }
    }
}

mod normalization {
    use super::*;

    fn mc_query(choices: &[&str]) -> Query {
        Query {
            question_id: "q".into(),
            text: "which?".into(),
            choices: Some(choices.iter().map(|c| c.to_string()).collect()),
            expected_form: ExpectedForm::MultipleChoice,
        }
    }

    #[test]
    fn yes_no_takes_first_token_match() {
        let q = Query::yes_no("q", "text");
        assert_eq!(normalize_answer("Yes, he does.", &q), "yes");
        assert_eq!(normalize_answer("Well... no, never.", &q), "no");
        assert_eq!(normalize_answer("NO!", &q), "no");
        assert_eq!(normalize_answer("I cannot tell", &q), "unparseable");
    }

    #[test]
    fn multiple_choice_letter_and_text_matches() {
        let q = mc_query(&["the blue car", "the red suitcase", "the green bag", "none"]);
        assert_eq!(normalize_answer("The answer is (B)", &q), "B");
        assert_eq!(normalize_answer("(C) the green bag", &q), "C");
        assert_eq!(normalize_answer("it was the red suitcase", &q), "B");
        assert_eq!(normalize_answer("maybe the purple van", &q), "unparseable");
    }

    #[test]
    fn free_text_trims_and_lowercases() {
        let q = Query {
            question_id: "q".into(),
            text: "describe".into(),
            choices: None,
            expected_form: ExpectedForm::FreeText,
        };
        assert_eq!(normalize_answer("  The Red Suitcase \n", &q), "the red suitcase");
    }
}

/// Captures the requests it receives and echoes a fixed response.
struct CapturingBackend {
    response: String,
    seen: Mutex<Vec<AnswerRequest>>,
}

impl CapturingBackend {
    fn new(response: &str) -> CapturingBackend {
        CapturingBackend {
            response: response.to_string(),
            seen: Mutex::new(Vec::new()),
        }
    }
}

impl AnswerBackend for CapturingBackend {
    fn answer(&self, request: &AnswerRequest) -> crate::error::Result<String> {
        self.seen.lock().unwrap().push(request.clone());
        Ok(self.response.clone())
    }
}

mod answer_path {
    use super::*;

    fn provider() -> StaticFrameProvider {
        StaticFrameProvider::from_entries([("v1".to_string(), ts(60_000))])
    }

    #[test]
    fn scripted_yes_normalizes() {
        let backend = CapturingBackend::new("yes");
        let q = Query::yes_no("q1", "Does player_66 run?");
        let out = answer(
            &sample_set(),
            &q,
            &RetrievalConfig::default(),
            &AnswerConfig::default(),
            &backend,
            Some(&provider()),
        )
        .unwrap();
        assert_eq!(out, "yes");
        let seen = backend.seen.lock().unwrap();
        assert_eq!(seen.len(), 1);
        assert_eq!(seen[0].frame_refs.len(), 64);
        assert!(seen[0].trajectory_block.starts_with("trajectories:\n"));
    }

    #[test]
    fn text_only_sends_zero_frames() {
        let backend = CapturingBackend::new("no");
        let q = Query::yes_no("q1", "anything");
        let cfg = AnswerConfig {
            frames_at_answerer: 0,
            modality: Modality::TextOnly,
            ..AnswerConfig::default()
        };
        answer(
            &sample_set(),
            &q,
            &RetrievalConfig::default(),
            &cfg,
            &backend,
            None,
        )
        .unwrap();
        let seen = backend.seen.lock().unwrap();
        assert!(seen[0].frame_refs.is_empty());
        assert!(!seen[0].trajectory_block.is_empty());
    }

    #[test]
    fn frames_only_sends_empty_block() {
        let backend = CapturingBackend::new("yes");
        let q = Query::yes_no("q1", "anything");
        let cfg = AnswerConfig {
            modality: Modality::FramesOnly,
            ..AnswerConfig::default()
        };
        answer(
            &sample_set(),
            &q,
            &RetrievalConfig::default(),
            &cfg,
            &backend,
            Some(&provider()),
        )
        .unwrap();
        let seen = backend.seen.lock().unwrap();
        assert!(seen[0].trajectory_block.is_empty());
        assert_eq!(seen[0].frame_refs.len(), 64);
    }

    #[test]
    fn multiple_choice_normalization_applies() {
        let backend = CapturingBackend::new("The answer is (B)");
        let q = Query {
            question_id: "q1".into(),
            text: "which?".into(),
            choices: Some(vec!["a car".into(), "a bike".into(), "a bus".into(), "a van".into()]),
            expected_form: ExpectedForm::MultipleChoice,
        };
        let out = answer(
            &sample_set(),
            &q,
            &RetrievalConfig::default(),
            &AnswerConfig::default(),
            &backend,
            Some(&provider()),
        )
        .unwrap();
        assert_eq!(out, "B");
    }

    #[test]
    fn backend_errors_carry_question_id() {
        struct FailingBackend;
        impl AnswerBackend for FailingBackend {
            fn answer(&self, _request: &AnswerRequest) -> crate::error::Result<String> {
                Err(crate::error::Error::domain("model offline"))
            }
        }
        let q = Query::yes_no("q42", "anything");
        let err = answer(
            &sample_set(),
            &q,
            &RetrievalConfig::default(),
            &AnswerConfig::default(),
            &FailingBackend,
            Some(&provider()),
        )
        .unwrap_err();
        match err {
            Error::AnswerBackend { question_id, .. } => assert_eq!(question_id, "q42"),
            other => panic!("expected answer-backend error, got {other}"),
        }
    }

    #[test]
    fn answer_path_is_pure_given_scripted_backend() {
        let q = Query::yes_no("q1", "Does player_66 run?");
        let run = || {
            let backend = CapturingBackend::new("yes");
            answer(
                &sample_set(),
                &q,
                &RetrievalConfig {
                    mode: RetrievalMode::RandomTopK,
                    top_k: 1,
                    seed: 3,
                },
                &AnswerConfig {
                    trajectory_order: TrajectoryOrder::Shuffled { seed: 4 },
                    ..AnswerConfig::default()
                },
                &backend,
                Some(&provider()),
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn config_invariant_rejects_zero_frames_with_frames_modality() {
        let cfg = AnswerConfig {
            frames_at_answerer: 0,
            modality: Modality::TextAndFrames,
            ..AnswerConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = AnswerConfig {
            frames_at_answerer: 8,
            modality: Modality::TextOnly,
            ..AnswerConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
