use signcorpus_core::domain::{Fps, TrimWindow};
use signcorpus_core::keypoints::{check_alignment, write_sidecar, KeypointFrame, KeypointSidecar};
use signcorpus_core::testkit::*;

use crate::common::block_on;

fn sidecar(frames: u64) -> Vec<u8> {
    write_sidecar(&KeypointSidecar {
        frames: (0..frames)
            .map(|frame_index| KeypointFrame {
                frame_index,
                body: vec![[320.0, 240.0, 0.9]; 3],
                face: vec![[300.0, 120.0, 0.8]],
                left_hand: vec![[200.0, 300.0, 0.7]; 2],
                right_hand: vec![[440.0, 300.0, 0.7]; 2],
            })
            .collect(),
    })
}

pub fn run() {
    let trim = TrimWindow::new(250, 250 + 13_374);
    let fps = Fps::whole(30).expect("fps");
    // 13.374 s x 30 frames/s = 401.22 frames; the nearest whole count is 401.
    let expected: u64 = (13_374 * 30 + 500) / 1000;
    assert_eq!(expected, 401);
    for frames in 0..1000u64 {
        let ok = check_alignment(frames, trim, fps).is_ok();
        assert_eq!(ok, (400..=402).contains(&frames), "{frames} frames");
    }

    block_on(async {
        let w = World::new();
        let signer = w.user("signer", BANGLA, &[]);
        let p = &w.prompts(&[("আমি আগামীকাল বেড়াতে যাবো", "text", BANGLA)])[0];
        let mut new = new_recording(p, w.upload().await, 14_000);
        new.trim = trim;
        let rec = w.platform.submit_recording(&signer, new, None).await.expect("record");
        for frames in [399, 403, 800] {
            let err = w.platform.attach_keypoints(&rec.id, sidecar(frames).into()).await.unwrap_err();
            assert_eq!(err.code(), "E_FRAME_MISMATCH", "{frames}");
        }
        for frames in [400, 401, 402] {
            w.platform.attach_keypoints(&rec.id, sidecar(frames).into()).await.expect("aligned sidecar");
        }
        assert!(w.platform.recording(&rec.id).expect("recording").keypoints_key.is_some());
    });
}
