use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use signcorpus_core::lifecycle::{replay, transition, LifecycleEvent as E, LifecycleState as S};

const LEGAL: [(S, E, S); 6] = [
    (S::PendingVideoValidation, E::VideoVerdictCorrect, S::PendingAnnotation),
    (S::PendingVideoValidation, E::VideoVerdictIncorrect, S::VideoRejected),
    (S::VideoRejected, E::Requeue, S::PendingVideoValidation),
    (S::PendingAnnotation, E::AnnotationSubmitted, S::PendingAnnotationValidation),
    (S::PendingAnnotationValidation, E::AnnotationVerdictAccepted, S::AnnotationValidated),
    (S::PendingAnnotationValidation, E::AnnotationVerdictCorrected, S::AnnotationValidated),
];

pub fn run() {
    let mut legal = BTreeSet::new();
    let mut pairs = 0;
    for s in S::ALL {
        for e in E::ALL {
            pairs += 1;
            let expected = LEGAL.iter().find(|(from, ev, _)| *from == s && *ev == e).map(|t| t.2);
            match (transition(s, e), expected) {
                (Ok(to), Some(want)) => {
                    assert_eq!(to, want, "{s} + {e}");
                    legal.insert((s, e));
                }
                (Err(err), None) => assert_eq!(err.code(), "E_ILLEGAL_TRANSITION", "{s} + {e}"),
                (got, want) => panic!("{s} + {e}: got {got:?}, want {want:?}"),
            }
        }
    }
    assert_eq!(pairs, 35);
    assert_eq!(legal.len(), 6);

    let mut rng = StdRng::seed_from_u64(1);
    for _ in 0..1000 {
        let mut log = vec![E::VideoSubmitted];
        let mut state = S::PendingVideoValidation;
        for _ in 0..rng.random_range(0..12) {
            let moves: Vec<_> = LEGAL.iter().filter(|t| t.0 == state).collect();
            if moves.is_empty() {
                break;
            }
            let (_, e, to) = moves[rng.random_range(0..moves.len())];
            log.push(*e);
            state = *to;
        }
        assert_eq!(replay(&log).expect("legal run replays"), state);
    }
}
