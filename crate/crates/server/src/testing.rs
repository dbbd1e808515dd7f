//! An in-process server on a loopback port and a thin JSON client for it.

use std::sync::Arc;

use reqwest::{Method, RequestBuilder, Response};
use serde::Serialize;
use signcorpus_core::Platform;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use crate::{API_PREFIX, IDEMPOTENCY_KEY};

pub struct TestServer {
    pub base: String,
    pub platform: Arc<Platform>,
    http: reqwest::Client,
    shutdown: Option<oneshot::Sender<()>>,
    task: Option<JoinHandle<std::io::Result<()>>>,
}

impl TestServer {
    pub async fn start(platform: Arc<Platform>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").await.expect("bind loopback");
        let addr = listener.local_addr().expect("local addr");
        let (tx, rx) = oneshot::channel();
        let task = tokio::spawn(crate::serve(platform.clone(), listener, async {
            let _ = rx.await;
        }));
        TestServer {
            base: format!("http://{addr}{API_PREFIX}"),
            platform,
            http: reqwest::Client::new(),
            shutdown: Some(tx),
            task: Some(task),
        }
    }

    pub fn client(&self) -> Client {
        Client {
            http: self.http.clone(),
            base: self.base.clone(),
            token: None,
        }
    }

    pub async fn stop(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(task) = self.task.take() {
            task.await.expect("server task").expect("server io");
        }
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        if let Some(task) = &self.task {
            task.abort();
        }
    }
}

#[derive(Clone)]
pub struct Client {
    pub http: reqwest::Client,
    pub base: String,
    pub token: Option<String>,
}

impl Client {
    pub fn with_token(&self, token: impl Into<String>) -> Client {
        Client {
            token: Some(token.into()),
            ..self.clone()
        }
    }

    pub fn request(&self, method: Method, path: &str) -> RequestBuilder {
        let req = self.http.request(method, format!("{}{path}", self.base));
        match &self.token {
            Some(t) => req.bearer_auth(t),
            None => req,
        }
    }

    pub async fn get(&self, path: &str) -> Response {
        self.request(Method::GET, path).send().await.expect("request")
    }

    pub async fn post<T: Serialize + ?Sized>(&self, path: &str, body: &T, idem: Option<&str>) -> Response {
        let mut req = self.request(Method::POST, path).json(body);
        if let Some(key) = idem {
            req = req.header(IDEMPOTENCY_KEY, key);
        }
        req.send().await.expect("request")
    }

    /// Registers `username` and returns a client logged in as them.
    pub async fn signup(&self, username: &str, password: &str, language: &str) -> Client {
        let res = self
            .post(
                "/users",
                &serde_json::json!({
                    "username": username,
                    "password": password,
                    "selected_language": language,
                    "gender": "female",
                    "age": 31,
                    "locality": "Khulna",
                }),
                None,
            )
            .await;
        assert_eq!(res.status(), 201, "signup {username}: {}", res.text().await.unwrap_or_default());
        self.login(username, password).await
    }

    pub async fn login(&self, username: &str, password: &str) -> Client {
        let res = self
            .post("/sessions", &serde_json::json!({ "username": username, "password": password }), None)
            .await;
        assert_eq!(res.status(), 201, "login {username}");
        let session: serde_json::Value = res.json().await.expect("session json");
        self.with_token(session["token"].as_str().expect("token"))
    }

    /// Uploads `bytes` as a multipart file field of the given media type.
    pub async fn upload(&self, bytes: Vec<u8>, media_type: &str) -> Response {
        let part = reqwest::multipart::Part::bytes(bytes)
            .file_name("clip")
            .mime_str(media_type)
            .expect("media type");
        let form = reqwest::multipart::Form::new().part("video", part);
        self.request(Method::POST, "/videos").multipart(form).send().await.expect("request")
    }
}
