use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::sync::Arc;

use reqwest::Method;
use serde_json::{json, Value};
use signcorpus_core::config::Settings;
use signcorpus_core::domain::{Fps, LanguageCode, TrimWindow};
use signcorpus_core::keypoints::{write_sidecar, KeypointFrame, KeypointSidecar};
use signcorpus_core::testkit::{gloss_track, sentence_track};
use signcorpus_core::Platform;
use signcorpus_server::testing::{Client, TestServer};

use crate::common::{block_on, files};

const PASSWORD: &str = "three signers password";
const DATE: &str = "2026-06-01";
const REJECT: [usize; 3] = [3, 10, 17];
const LEFT_UNANNOTATED: [usize; 2] = [5, 13];
const LATE: usize = 8;

fn cli(config: &Path, args: &[&str], stdin: Option<&str>) -> Output {
    use std::io::Write;
    let mut child = Command::new(env!("CARGO_BIN_EXE_signcorpus"))
        .arg("--config")
        .arg(config)
        .args(args)
        .env("RUST_LOG", "warn")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn cli");
    let mut input = child.stdin.take().expect("stdin");
    if let Some(text) = stdin {
        input.write_all(text.as_bytes()).expect("write stdin");
    }
    drop(input);
    let out = child.wait_with_output().expect("cli output");
    assert!(
        out.status.success(),
        "signcorpus {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stat(out: &Output, key: &str) -> String {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .find_map(|l| Some(l.strip_prefix(key)?.strip_prefix(": ")?.to_string()))
        .unwrap_or_else(|| panic!("no {key} line"))
}

struct Prompts {
    rows: Vec<(String, &'static str)>,
}

impl Prompts {
    fn new() -> Self {
        let subjects = ["আমি", "তুমি", "সে"];
        let predicates = ["ভাত খাই।", "স্কুলে যাই।", "বই পড়ি।", "গান গাই।", "আগামীকাল বেড়াতে যাবো।"];
        let mut rows = Vec::new();
        for (n, (s, p)) in subjects.iter().flat_map(|s| predicates.iter().map(move |p| (s, p))).enumerate() {
            let extra = if n % 4 == 1 { " ভালো থেকো!" } else { "" };
            rows.push((format!("{s} {p}{extra}"), "text"));
        }
        for topic in ["আমার গ্রাম", "প্রিয় খাবার", "ছুটির দিন", "আমার পরিবার", "বর্ষাকাল"] {
            rows.push((topic.to_string(), "topic"));
        }
        Prompts { rows }
    }

    fn csv(&self) -> String {
        let mut out = String::from("content,content_type,language\n");
        for (content, kind) in &self.rows {
            out.push_str(&format!("{content},{kind},bn-BdSL\n"));
        }
        out
    }
}

fn script(topic: &str) -> String {
    ["এক", "দুই", "তিন", "চার", "পাঁচ"]
        .iter()
        .map(|n| format!("{topic} নিয়ে কথা {n}।"))
        .collect::<Vec<_>>()
        .join(" ")
}

async fn body(res: reqwest::Response) -> Value {
    let status = res.status();
    let text = res.text().await.expect("body");
    assert!(status.is_success(), "{status}: {text}");
    serde_json::from_str(&text).expect("json body")
}

struct Take {
    rid: String,
    signer: usize,
    trim: TrimWindow,
    reference: String,
    script: Option<String>,
    annotator: Option<usize>,
    video: String,
}

/// Draws tasks of `kind` round-robin until no user is offered anything.
async fn drain(users: &[Client], kind: &str, mut handle: impl AsyncFnMut(usize, Value)) {
    let (mut idle, mut u) = (0, 0);
    while idle < users.len() {
        let res = users[u].get(&format!("/tasks/{kind}")).await;
        if res.status() == 204 {
            idle += 1;
        } else {
            idle = 0;
            handle(u, body(res).await).await;
        }
        u = (u + 1) % users.len();
    }
}

fn annotation(t: &Take, lang: &LanguageCode, trim: TrimWindow) -> Value {
    json!({
        "tracks": [sentence_track(&t.reference, lang, trim), gloss_track(&t.reference, trim)],
        "script": t.script,
    })
}

pub fn run() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = dir.path().join("signcorpus.toml");
    std::fs::write(
        &config,
        "database = \"corpus.db\"\n[storage]\nroot = \"objects\"\n[languages]\n\"bn-BdSL\" = \"Bangla / Bangladeshi Sign Language\"\n",
    )
    .expect("config");
    let prompts = Prompts::new();
    let csv = dir.path().join("prompts.csv");
    std::fs::write(&csv, prompts.csv()).expect("csv");

    let out = cli(&config, &["user-add", "admin", "--language", "bn-BdSL", "--role", "admin", "--password-stdin"], Some(PASSWORD));
    assert_eq!(stat(&out, "roles"), "admin");
    let out = cli(&config, &["ingest", csv.to_str().expect("path")], None);
    assert_eq!(stat(&out, "accepted"), "20");

    let (validated, excluded) = block_on(async {
        let platform = Arc::new(Platform::open(Settings::load(&config).expect("settings")).expect("platform"));
        let server = TestServer::start(platform).await;
        let flow = drive(&server).await;
        server.stop().await;
        flow
    });

    let exports: Vec<_> = ["first", "second"]
        .iter()
        .map(|name| {
            let out_dir = dir.path().join(name);
            let out = cli(&config, &["export", "--out", out_dir.to_str().expect("path"), "--date", DATE], None);
            assert_eq!(stat(&out, "exported"), validated.len().to_string());
            assert_eq!(stat(&out, "rejected_excluded"), REJECT.len().to_string());
            assert_eq!(stat(&out, "recording_count"), validated.len().to_string());
            out_dir.join("snapshot").join(DATE)
        })
        .collect();
    let snapshot = files(&exports[0]);
    assert_eq!(snapshot, files(&exports[1]), "re-export differs");

    let manifest: Vec<Value> = std::str::from_utf8(&snapshot[Path::new("manifest.jsonl")])
        .expect("utf-8")
        .lines()
        .map(|l| serde_json::from_str(l).expect("manifest line"))
        .collect();
    let ids: BTreeSet<String> = manifest.iter().map(|e| e["recording_id"].as_str().expect("id").to_string()).collect();
    assert_eq!(ids, validated.keys().cloned().collect::<BTreeSet<_>>());
    assert_eq!(manifest.len(), ids.len());
    for entry in &manifest {
        let (video, srts) = &validated[entry["recording_id"].as_str().expect("id")];
        assert_eq!(entry["video"], video.as_str());
        assert!(snapshot.contains_key(Path::new(video)), "{video} missing");
        assert_eq!(entry["license"], "CC-BY-SA-4.0");
        for (kind, srt) in srts {
            let path = entry["subtitles"][kind].as_str().expect("subtitle path");
            assert_eq!(&snapshot[Path::new(path)], srt.as_bytes(), "{path}");
        }
    }
    assert_eq!(manifest.iter().filter(|e| !e["keypoints"].is_null()).count(), 1);
    let exported_videos = snapshot.keys().filter(|p| p.starts_with("videos")).count();
    assert_eq!(exported_videos, validated.len());
    for (rid, video) in &excluded {
        for (path, bytes) in &snapshot {
            let text = String::from_utf8_lossy(bytes);
            assert!(!text.contains(rid.as_str()) && !text.contains(video.as_str()), "{rid} leaked into {path:?}");
            assert!(!path.to_string_lossy().contains(rid.as_str()));
        }
    }
    let out = cli(&config, &["stats"], None);
    assert_eq!(stat(&out, "recording_count"), validated.len().to_string());
}

type Validated = BTreeMap<String, (String, Vec<(String, String)>)>;

/// Runs the whole flow over HTTP. Returns validated recordings with their video
/// key and subtitles, and the excluded ones with their video key.
async fn drive(server: &TestServer) -> (Validated, Vec<(String, String)>) {
    let anon = server.client();
    let admin = anon.login("admin", PASSWORD).await;
    let mut users = Vec::new();
    for name in ["rina", "tanvir", "mitu"] {
        users.push(anon.signup(name, PASSWORD, "bn-BdSL").await);
    }
    let lang: LanguageCode = "bn-BdSL".parse().expect("code");
    let listed = body(users[0].get("/prompts").await).await;
    let listed = listed.as_array().expect("prompt list");
    assert_eq!(listed.len(), 20);
    assert_eq!(listed.iter().filter(|p| p["content_type"] == "text").count(), 15);
    assert_eq!(listed.iter().filter(|p| p["content_type"] == "topic").count(), 5);
    let prompts = Prompts::new();

    let mut takes: Vec<Take> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (i, (content, kind)) in prompts.rows.iter().enumerate() {
        let signer = i % 3;
        let client = &users[signer];
        let task = body(client.get(&format!("/tasks/record?seed={i}")).await).await;
        assert_eq!(task["kind"], "record");
        let prompt = listed.iter().find(|p| p["content"] == content.as_str()).expect("listed prompt");
        let key = body(client.upload(format!("webm clip {i}").into_bytes(), "video/webm").await).await["key"]
            .as_str()
            .expect("key")
            .to_string();
        let duration = 6000 + i as i64 * 250;
        let trim = TrimWindow::new(300, duration - 300);
        let new = json!({
            "prompt_id": prompt["id"],
            "key": key,
            "meta": {"lighting": "indoor", "camera_view": "front", "resolution": {"width": 1280, "height": 720},
                     "duration_ms": duration, "fps": 30},
            "trim": trim,
        });
        let idem = format!("record-{i}");
        let rec = body(client.post("/recordings", &new, Some(&idem)).await).await;
        assert_eq!(body(client.post("/recordings", &new, Some(&idem)).await).await["id"], rec["id"]);
        let rid = rec["id"].as_str().expect("id").to_string();
        let script = (*kind == "topic").then(|| script(content));
        index.insert(rid.clone(), i);
        takes.push(Take {
            rid,
            signer,
            trim,
            reference: script.clone().unwrap_or_else(|| content.clone()),
            script,
            annotator: None,
            video: key,
        });
    }

    drain(&users, "validate-video", async |u, task| {
        let i = index[task["recording"]["id"].as_str().expect("id")];
        assert_ne!(takes[i].signer, u, "own recording offered");
        let verdict = if REJECT.contains(&i) { "incorrect" } else { "correct" };
        let path = format!("/recordings/{}/validation", takes[i].rid);
        body(users[u].post(&path, &json!({ "verdict": verdict }), None).await).await;
    })
    .await;

    for (i, t) in takes.iter_mut().enumerate() {
        if REJECT.contains(&i) || LEFT_UNANNOTATED.contains(&i) || i == LATE {
            continue;
        }
        let annotator = (i + 2) % 3;
        let path = format!("/recordings/{}/annotation", t.rid);
        let state = body(users[annotator].post(&path, &annotation(t, &lang, t.trim), Some(&format!("ann-{i}"))).await).await;
        assert_eq!(state["state"], "PendingAnnotationValidation");
        t.annotator = Some(annotator);
    }

    drain(&users, "validate-annotation", async |u, task| {
        let i = index[task["recording"]["id"].as_str().expect("id")];
        let t = &takes[i];
        assert!(t.signer != u && t.annotator != Some(u), "self review offered");
        let path = format!("/recordings/{}/annotation-validation", t.rid);
        let verdict = if i.is_multiple_of(4) {
            let narrower = TrimWindow::new(t.trim.start_ms + 100, t.trim.end_ms - 100);
            let mut v = annotation(t, &lang, narrower);
            v["verdict"] = json!("corrected");
            v.as_object_mut().expect("object").remove("script");
            v
        } else {
            json!({"verdict": "accepted"})
        };
        let state = body(users[u].post(&path, &verdict, None).await).await;
        assert_eq!(state["state"], "AnnotationValidated");
    })
    .await;

    let late = &takes[LATE];
    let path = format!("/recordings/{}/annotation", late.rid);
    body(users[(LATE + 2) % 3].post(&path, &annotation(late, &lang, late.trim), None).await).await;

    let mut validated = Validated::new();
    let mut excluded = Vec::new();
    for (i, t) in takes.iter().enumerate() {
        let view = body(users[0].get(&format!("/recordings/{}", t.rid)).await).await;
        let state = view["recording"]["state"].as_str().expect("state").to_string();
        let expected = if REJECT.contains(&i) {
            "VideoRejected"
        } else if LEFT_UNANNOTATED.contains(&i) {
            "PendingAnnotation"
        } else if i == LATE {
            "PendingAnnotationValidation"
        } else {
            "AnnotationValidated"
        };
        assert_eq!(state, expected, "prompt {i}");
        if state != "AnnotationValidated" {
            excluded.push((t.rid.clone(), t.video.clone()));
            continue;
        }
        let mut srts = Vec::new();
        for kind in ["sentence", "gloss"] {
            let res = users[1].get(&format!("/recordings/{}/subtitles.srt?kind={kind}", t.rid)).await;
            assert_eq!(res.status(), 200);
            srts.push((kind.to_string(), res.text().await.expect("srt")));
        }
        validated.insert(t.rid.clone(), (t.video.clone(), srts));
    }

    let first = takes.iter().find(|t| validated.contains_key(&t.rid)).expect("a validated recording");
    let frames = Fps::whole(30).expect("fps").frames_in(first.trim.duration_ms());
    let sidecar = write_sidecar(&KeypointSidecar {
        frames: (0..frames)
            .map(|frame_index| KeypointFrame {
                frame_index,
                body: vec![[1.0, 2.0, 0.5]; 25],
                face: vec![[3.0, 4.0, 0.5]; 70],
                left_hand: vec![[5.0, 6.0, 0.5]; 21],
                right_hand: vec![[7.0, 8.0, 0.5]; 21],
            })
            .collect(),
    });
    let res = admin
        .request(Method::POST, &format!("/recordings/{}/keypoints", first.rid))
        .body(sidecar)
        .send()
        .await
        .expect("keypoints request");
    body(res).await;
    let stats = body(users[2].get("/stats").await).await;
    assert_eq!(stats["recording_count"], validated.len());
    (validated, excluded)
}
