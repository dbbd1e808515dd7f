use std::path::PathBuf;

use async_trait::async_trait;
use bytes::Bytes;
use chrono::Utc;
use reqwest::{header, Body, Client, Method, StatusCode, Url};
use tokio_util::io::ReaderStream;

use crate::sigv4::{self, Credentials, EMPTY_PAYLOAD_SHA256};
use crate::spool::spool;
use crate::{ByteStream, ObjectKey, ObjectStore, Result, StoreError};

/// Connection settings for an S3-compatible endpoint (path-style addressing).
#[derive(Clone)]
pub struct S3Config {
    pub endpoint: String,
    pub bucket: String,
    pub key_id: String,
    pub secret: String,
    pub region: String,
    /// Directory for spooling uploads before they are sent.
    pub spool_dir: PathBuf,
}

impl std::fmt::Debug for S3Config {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("S3Config")
            .field("endpoint", &self.endpoint)
            .field("bucket", &self.bucket)
            .field("key_id", &self.key_id)
            .field("region", &self.region)
            .finish_non_exhaustive()
    }
}

/// Remote backend. Uploads are spooled and digested locally first, then sent
/// with a single signed PUT, so a dropped client never leaves a partial
/// object in the bucket.
pub struct S3Store {
    client: Client,
    endpoint: Url,
    cfg: S3Config,
    max_object_bytes: u64,
}

impl S3Store {
    pub fn new(cfg: S3Config, max_object_bytes: u64) -> Result<Self> {
        let endpoint = Url::parse(&cfg.endpoint)
            .map_err(|e| StoreError::Backend(format!("bad endpoint {:?}: {e}", cfg.endpoint)))?;
        std::fs::create_dir_all(&cfg.spool_dir)?;
        Ok(S3Store {
            client: Client::new(),
            endpoint,
            cfg,
            max_object_bytes,
        })
    }

    fn object_path(&self, key: &ObjectKey) -> String {
        let base = self.endpoint.path().trim_end_matches('/');
        format!("{base}/{}/{}", self.cfg.bucket, key)
    }

    fn host(&self) -> String {
        let host = self.endpoint.host_str().unwrap_or_default();
        match self.endpoint.port() {
            Some(port) => format!("{host}:{port}"),
            None => host.to_string(),
        }
    }

    fn request(
        &self,
        method: Method,
        key: &ObjectKey,
        payload_sha256: &str,
    ) -> reqwest::RequestBuilder {
        let path = self.object_path(key);
        let now = Utc::now();
        let headers = [
            ("host", self.host()),
            ("x-amz-content-sha256", payload_sha256.to_string()),
            ("x-amz-date", sigv4::amz_date(now)),
        ];
        let auth = sigv4::authorization(
            &sigv4::Request {
                method: method.as_str(),
                path: &path,
                query: "",
                headers: &headers,
                payload_sha256,
            },
            &Credentials {
                key_id: &self.cfg.key_id,
                secret: &self.cfg.secret,
                region: &self.cfg.region,
            },
            now,
        );
        let mut url = self.endpoint.clone();
        url.set_path(&sigv4::encode_path(&path));
        self.client
            .request(method, url)
            .header("x-amz-content-sha256", payload_sha256)
            .header("x-amz-date", headers[2].1.clone())
            .header(header::AUTHORIZATION, auth)
    }

    async fn send(&self, req: reqwest::RequestBuilder) -> Result<reqwest::Response> {
        req.send()
            .await
            .map_err(|e| StoreError::Backend(e.to_string()))
    }
}

fn unexpected(status: StatusCode, what: &str) -> StoreError {
    StoreError::Backend(format!("{what}: unexpected status {status}"))
}

#[async_trait]
impl ObjectStore for S3Store {
    async fn put_stream(&self, body: ByteStream, ext: &str) -> Result<ObjectKey> {
        crate::ObjectKind::for_ext(ext)?;
        let spooled = spool(body, &self.cfg.spool_dir, self.max_object_bytes).await?;
        let key = ObjectKey::from_digest(spooled.digest, ext)?;
        if self.exists(&key).await? {
            return Ok(key);
        }
        let file = tokio::fs::File::open(spooled.file.path()).await?;
        let req = self
            .request(Method::PUT, &key, key.digest_hex())
            .header(header::CONTENT_LENGTH, spooled.len)
            .body(Body::wrap_stream(ReaderStream::new(file)));
        let resp = self.send(req).await?;
        if !resp.status().is_success() {
            return Err(unexpected(resp.status(), "put"));
        }
        Ok(key)
    }

    async fn get_object(&self, key: &ObjectKey) -> Result<Bytes> {
        let resp = self
            .send(self.request(Method::GET, key, EMPTY_PAYLOAD_SHA256))
            .await?;
        match resp.status() {
            s if s.is_success() => resp
                .bytes()
                .await
                .map_err(|e| StoreError::Backend(e.to_string())),
            StatusCode::NOT_FOUND => Err(StoreError::NotFound(key.to_string())),
            s => Err(unexpected(s, "get")),
        }
    }

    async fn exists(&self, key: &ObjectKey) -> Result<bool> {
        let resp = self
            .send(self.request(Method::HEAD, key, EMPTY_PAYLOAD_SHA256))
            .await?;
        match resp.status() {
            s if s.is_success() => Ok(true),
            StatusCode::NOT_FOUND => Ok(false),
            s => Err(unexpected(s, "head")),
        }
    }

    fn max_object_bytes(&self) -> u64 {
        self.max_object_bytes
    }

    fn backend_name(&self) -> &'static str {
        "s3"
    }
}
