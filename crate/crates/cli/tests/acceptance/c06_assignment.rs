use chrono::Utc;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use signcorpus_core::assignment::{select_recording, AssignmentPolicy, RecordingItem, TaskKind, UserHistory};
use signcorpus_core::domain::{
    CameraView, ContentType, Fps, Lighting, Prompt, PromptId, Recording, RecordingId, Resolution, Role, TrimWindow,
    UserId, UserProfile, VideoMeta,
};
use signcorpus_core::lifecycle::LifecycleState;
use signcorpus_core::testkit::*;


/// Upper 1% point of chi-square with 2 degrees of freedom: -2 ln 0.01.
fn critical_2dof_p01() -> f64 {
    -2.0 * 0.01f64.ln()
}

fn uniform_draws() {
    let w = World::new();
    let user = w.user("drawer", ENGLISH, &[]);
    w.prompts(&[("One.", "text", ENGLISH), ("Two.", "text", ENGLISH), ("Three.", "text", ENGLISH)]);
    let ids: Vec<PromptId> = w.platform.prompts().expect("prompts").into_iter().map(|p| p.id).collect();
    let mut rng = StdRng::seed_from_u64(6);
    let mut counts = [0f64; 3];
    for _ in 0..30_000 {
        let task = w.platform.draw(&user, TaskKind::Record, &mut rng).expect("draw").expect("a task");
        counts[ids.iter().position(|id| *id == task.prompt.id).expect("known prompt")] += 1.0;
    }
    let expected = 10_000.0;
    let stat: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    assert!(stat < critical_2dof_p01(), "counts {counts:?}, statistic {stat}");
}

fn recording(i: usize, signer: &UserId, prompt: &Prompt, state: LifecycleState) -> Recording {
    Recording {
        id: RecordingId(format!("r{i}")),
        prompt_id: prompt.id.clone(),
        signer_id: signer.clone(),
        video_key: signcorpus_store::key_for(format!("v{i}").as_bytes(), ".webm").expect("key"),
        meta: VideoMeta {
            lighting: Lighting::Indoor,
            camera_view: CameraView::Front,
            resolution: Resolution { width: 640, height: 480 },
            duration_ms: 5000,
            fps: Fps::whole(30).expect("fps"),
            container: "video/webm".into(),
        },
        trim: TrimWindow::new(0, 5000),
        state,
        script: None,
        keypoints_key: None,
        version: 0,
        created_at: Utc::now(),
    }
}

fn random_worlds() {
    let mut rng = StdRng::seed_from_u64(60);
    let prompt = Prompt {
        id: PromptId::from("p"),
        content: "Hello.".into(),
        content_type: ContentType::Text,
        language: ENGLISH.parse().expect("code"),
    };
    let mut offered = 0;
    for _ in 0..10_000 {
        let users: Vec<UserProfile> = (0..rng.random_range(1..5))
            .map(|i| UserProfile {
                id: UserId(format!("u{i}")),
                username: format!("u{i}"),
                selected_language: prompt.language.clone(),
                gender: None,
                age: None,
                locality: None,
                roles: Role::crowd_defaults(),
            })
            .collect();
        let any = |rng: &mut StdRng| users[rng.random_range(0..users.len())].id.clone();
        let items: Vec<RecordingItem> = (0..rng.random_range(0..6))
            .map(|i| {
                let state = if rng.random_bool(0.5) {
                    LifecycleState::PendingVideoValidation
                } else {
                    LifecycleState::PendingAnnotationValidation
                };
                let signer = any(&mut rng);
                let annotators = match state {
                    LifecycleState::PendingAnnotationValidation => vec![any(&mut rng)],
                    _ => vec![],
                };
                RecordingItem { recording: recording(i, &signer, &prompt, state), prompt: prompt.clone(), annotators }
            })
            .collect();
        let user = &users[rng.random_range(0..users.len())];
        for kind in [TaskKind::ValidateVideo, TaskKind::ValidateAnnotation] {
            let policy = AssignmentPolicy::default();
            if let Some(item) = select_recording(user, &items, kind, &UserHistory::default(), &policy, &mut rng) {
                offered += 1;
                assert_ne!(item.recording.signer_id, user.id, "own recording offered");
                assert!(!item.annotators.contains(&user.id), "own annotation offered");
            }
        }
    }
    assert!(offered > 1000, "only {offered} offers");
}

pub fn run() {
    assert!((critical_2dof_p01() - 9.2103).abs() < 1e-4);
    uniform_draws();
    random_worlds();
}
