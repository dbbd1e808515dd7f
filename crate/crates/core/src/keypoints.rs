//! Per-frame pose keypoint sidecars produced by an external estimator.
//!
//! One JSON object per line:
//! `{"frame_index":0,"body":[[x,y,c],...],"face":[...],"left_hand":[...],"right_hand":[...]}`
//! with pixel coordinates and a confidence in `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::domain::{Fps, TrimWindow};
use crate::error::{Error, Result};

/// Frames of slack allowed between the sidecar and the trimmed duration.
pub const FRAME_TOLERANCE: u64 = 1;

pub type Keypoint = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeypointFrame {
    pub frame_index: u64,
    pub body: Vec<Keypoint>,
    pub face: Vec<Keypoint>,
    pub left_hand: Vec<Keypoint>,
    pub right_hand: Vec<Keypoint>,
}

impl KeypointFrame {
    fn arity(&self) -> [usize; 4] {
        [
            self.body.len(),
            self.face.len(),
            self.left_hand.len(),
            self.right_hand.len(),
        ]
    }

    fn points(&self) -> impl Iterator<Item = &Keypoint> {
        self.body
            .iter()
            .chain(&self.face)
            .chain(&self.left_hand)
            .chain(&self.right_hand)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KeypointSidecar {
    pub frames: Vec<KeypointFrame>,
}

impl KeypointSidecar {
    pub fn frame_count(&self) -> u64 {
        self.frames.len() as u64
    }
}

/// Parses and checks a sidecar. Blank lines are ignored; frame indices must
/// run 0, 1, 2, ... and every frame must have the same group sizes.
pub fn parse_sidecar(bytes: &[u8]) -> Result<KeypointSidecar> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::SidecarSyntax {
        line: 0,
        detail: format!("not UTF-8: {e}"),
    })?;
    let mut frames: Vec<KeypointFrame> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |detail: String| Error::SidecarSyntax { line: i + 1, detail };
        let frame: KeypointFrame = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        let expected_index = frames.len() as u64;
        if frame.frame_index != expected_index {
            return Err(bad(format!(
                "frame_index {} where {expected_index} was expected",
                frame.frame_index
            )));
        }
        if let Some(first) = frames.first() {
            if first.arity() != frame.arity() {
                return Err(bad(format!(
                    "group sizes {:?} differ from first frame {:?}",
                    frame.arity(),
                    first.arity()
                )));
            }
        }
        if let Some(p) = frame
            .points()
            .find(|p| !p[0].is_finite() || !p[1].is_finite() || !(0.0..=1.0).contains(&p[2]))
        {
            return Err(bad(format!("invalid keypoint {p:?}")));
        }
        frames.push(frame);
    }
    Ok(KeypointSidecar { frames })
}

/// Frames a sidecar for `trim` at `fps` should contain.
pub fn expected_frames(trim: TrimWindow, fps: Fps) -> u64 {
    fps.frames_in(trim.duration_ms())
}

/// Accepts a frame count within [`FRAME_TOLERANCE`] of the expectation.
pub fn check_alignment(frame_count: u64, trim: TrimWindow, fps: Fps) -> Result<()> {
    let expected = expected_frames(trim, fps);
    if frame_count.abs_diff(expected) <= FRAME_TOLERANCE && frame_count > 0 {
        Ok(())
    } else {
        Err(Error::FrameMismatch {
            expected,
            actual: frame_count,
        })
    }
}

/// Serializes frames back into sidecar bytes.
pub fn write_sidecar(sidecar: &KeypointSidecar) -> Vec<u8> {
    let mut out = Vec::new();
    for frame in &sidecar.frames {
        out.extend(serde_json::to_vec(frame).expect("frames serialize"));
        out.push(b'\n');
    }
    out
}
