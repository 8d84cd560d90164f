use std::fs::File;
use std::io::{self, BufReader, Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use thiserror::Error;
use ureq::Agent;

pub const HTTP_ATTEMPTS: u32 = 3;
pub const HTTP_BACKOFF: Duration = Duration::from_millis(500);
pub const HTTP_TIMEOUT: Duration = Duration::from_secs(30);
/// Size of each ranged request when the server supports them.
pub const HTTP_BLOCK_BYTES: u64 = 4 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("{uri}: HTTP status {code}")]
    HttpStatus { uri: String, code: u16 },
    #[error("{0}: request timed out")]
    NetworkTimeout(String),
    #[error("{uri}: {message}")]
    Network { uri: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl SourceError {
    fn into_io(self) -> io::Error {
        let kind = match &self {
            SourceError::NotFound(_) => io::ErrorKind::NotFound,
            SourceError::NetworkTimeout(_) => io::ErrorKind::TimedOut,
            _ => io::ErrorKind::Other,
        };
        io::Error::new(kind, self)
    }
}

/// Timeouts and retry policy for HTTP sources.
#[derive(Debug, Clone, Copy)]
pub struct HttpOptions {
    pub attempts: u32,
    pub backoff: Duration,
    pub timeout: Duration,
    pub block_bytes: u64,
}

impl Default for HttpOptions {
    fn default() -> Self {
        HttpOptions {
            attempts: HTTP_ATTEMPTS,
            backoff: HTTP_BACKOFF,
            timeout: HTTP_TIMEOUT,
            block_bytes: HTTP_BLOCK_BYTES,
        }
    }
}

enum Inner {
    Local(BufReader<File>),
    Http(HttpReader),
}

/// A local file or HTTP resource read front to back.
pub struct ByteSource {
    uri: String,
    size: Option<u64>,
    inner: Inner,
}

impl std::fmt::Debug for ByteSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ByteSource")
            .field("uri", &self.uri)
            .field("size", &self.size)
            .finish()
    }
}

pub fn is_http(uri: &str) -> bool {
    let lower = uri.to_ascii_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://")
}

/// Opens a local path or an `http(s)://` URL with default HTTP options.
pub fn open_byte_source(uri: &str) -> Result<ByteSource, SourceError> {
    open_byte_source_with(uri, HttpOptions::default())
}

pub fn open_byte_source_with(uri: &str, http: HttpOptions) -> Result<ByteSource, SourceError> {
    if is_http(uri) {
        let reader = HttpReader::open(uri, http)?;
        Ok(ByteSource {
            uri: uri.to_owned(),
            size: reader.size,
            inner: Inner::Http(reader),
        })
    } else {
        let path = Path::new(uri);
        let file = File::open(path).map_err(|source| match source.kind() {
            io::ErrorKind::NotFound => SourceError::NotFound(uri.to_owned()),
            _ => SourceError::Io {
                path: path.to_path_buf(),
                source,
            },
        })?;
        let size = file.metadata().ok().map(|m| m.len());
        Ok(ByteSource {
            uri: uri.to_owned(),
            size,
            inner: Inner::Local(BufReader::with_capacity(1 << 20, file)),
        })
    }
}

impl ByteSource {
    pub fn uri(&self) -> &str {
        &self.uri
    }

    /// Total size when the file system or server reported one.
    pub fn size(&self) -> Option<u64> {
        self.size
    }

    /// Whether [`ByteSource::read_range`] is available.
    pub fn supports_ranges(&self) -> bool {
        match &self.inner {
            Inner::Local(_) => true,
            Inner::Http(h) => h.ranges,
        }
    }

    /// Reads `len` bytes at `offset` without disturbing the sequential
    /// position. Intended for metadata probing.
    pub fn read_range(&mut self, offset: u64, len: u64) -> Result<Vec<u8>, SourceError> {
        match &mut self.inner {
            Inner::Local(r) => {
                let path = PathBuf::from(&self.uri);
                let io = |source| SourceError::Io {
                    path: path.clone(),
                    source,
                };
                let file = r.get_mut();
                let here = file.stream_position().map_err(io)?;
                file.seek(SeekFrom::Start(offset)).map_err(io)?;
                let mut buf = Vec::new();
                let res = (&mut *file).take(len).read_to_end(&mut buf);
                file.seek(SeekFrom::Start(here)).map_err(io)?;
                res.map_err(io)?;
                Ok(buf)
            }
            Inner::Http(h) => {
                if !h.ranges {
                    return Err(SourceError::Network {
                        uri: self.uri.clone(),
                        message: "server does not accept byte ranges".into(),
                    });
                }
                h.fetch_range(offset, len)
            }
        }
    }
}

impl Read for ByteSource {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        match &mut self.inner {
            Inner::Local(r) => r.read(buf),
            Inner::Http(h) => h.read(buf),
        }
    }
}

struct HttpReader {
    uri: String,
    agent: Agent,
    opts: HttpOptions,
    size: Option<u64>,
    ranges: bool,
    pos: u64,
    block: Vec<u8>,
    block_pos: usize,
    stream: Option<Box<dyn Read + Send>>,
}

fn agent(timeout: Duration) -> Agent {
    Agent::config_builder()
        .user_agent(format!("{}/{}", crate::SOFTWARE_NAME, crate::SOFTWARE_VERSION))
        .http_status_as_error(false)
        .timeout_connect(Some(timeout))
        .timeout_send_request(Some(timeout))
        .timeout_recv_response(Some(timeout))
        .build()
        .into()
}

enum Attempt<T> {
    Done(T),
    Retry(SourceError),
    Fail(SourceError),
}

impl HttpReader {
    fn open(uri: &str, opts: HttpOptions) -> Result<Self, SourceError> {
        let agent = agent(opts.timeout);
        let mut reader = HttpReader {
            uri: uri.to_owned(),
            agent,
            opts,
            size: None,
            ranges: false,
            pos: 0,
            block: Vec::new(),
            block_pos: 0,
            stream: None,
        };
        let head = reader.retry(|r| {
            let res = r.agent.head(&r.uri).call();
            r.classify(res, |resp| {
                let header = |name: &str| resp.headers().get(name).and_then(|v| v.to_str().ok()).map(str::to_owned);
                (resp.status().as_u16(), header("content-length"), header("accept-ranges"))
            })
        });
        match head {
            Ok((_, len, accept)) => {
                reader.size = len.and_then(|v| v.trim().parse().ok());
                reader.ranges = accept.is_some_and(|v| v.split(',').any(|t| t.trim().eq_ignore_ascii_case("bytes")));
            }
            // Some servers refuse HEAD; a plain GET is still worth trying.
            Err(SourceError::HttpStatus { code: 405 | 501, .. }) => {}
            Err(e) => return Err(e),
        }
        if !reader.ranges {
            reader.open_stream()?;
        }
        Ok(reader)
    }

    fn classify<T>(
        &self,
        res: Result<ureq::http::Response<ureq::Body>, ureq::Error>,
        ok: impl FnOnce(&ureq::http::Response<ureq::Body>) -> T,
    ) -> Attempt<(T, ureq::http::Response<ureq::Body>)> {
        match res {
            Ok(resp) => {
                let code = resp.status().as_u16();
                match code {
                    200..=299 => Attempt::Done((ok(&resp), resp)),
                    404 | 410 => Attempt::Fail(SourceError::NotFound(self.uri.clone())),
                    500..=599 | 408 | 429 => Attempt::Retry(SourceError::HttpStatus {
                        uri: self.uri.clone(),
                        code,
                    }),
                    _ => Attempt::Fail(SourceError::HttpStatus {
                        uri: self.uri.clone(),
                        code,
                    }),
                }
            }
            Err(ureq::Error::Timeout(_)) => Attempt::Retry(SourceError::NetworkTimeout(self.uri.clone())),
            Err(e @ (ureq::Error::BadUri(_) | ureq::Error::HostNotFound)) => Attempt::Fail(SourceError::Network {
                uri: self.uri.clone(),
                message: e.to_string(),
            }),
            Err(e) => Attempt::Retry(SourceError::Network {
                uri: self.uri.clone(),
                message: e.to_string(),
            }),
        }
    }

    /// Runs `f` up to `attempts` times with doubling backoff between tries.
    fn retry<T>(
        &mut self,
        mut f: impl FnMut(&mut Self) -> Attempt<(T, ureq::http::Response<ureq::Body>)>,
    ) -> Result<T, SourceError> {
        self.retry_response(|r| f(r)).map(|(t, _)| t)
    }

    fn retry_response<T>(
        &mut self,
        mut f: impl FnMut(&mut Self) -> Attempt<T>,
    ) -> Result<T, SourceError> {
        let mut delay = self.opts.backoff;
        let mut last = None;
        for attempt in 0..self.opts.attempts.max(1) {
            if attempt > 0 {
                thread::sleep(delay);
                delay *= 2;
            }
            match f(self) {
                Attempt::Done(v) => return Ok(v),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e) => last = Some(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    fn open_stream(&mut self) -> Result<(), SourceError> {
        let (_, resp) = self.retry_response(|r| {
            let res = r.agent.get(&r.uri).call();
            r.classify(res, |_| ())
        })?;
        if self.size.is_none() {
            self.size = resp
                .headers()
                .get("content-length")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse().ok());
        }
        self.stream = Some(Box::new(resp.into_body().into_reader()));
        Ok(())
    }

    fn fetch_range(&mut self, offset: u64, len: u64) -> Result<Vec<u8>, SourceError> {
        if len == 0 || self.size.is_some_and(|s| offset >= s) {
            return Ok(Vec::new());
        }
        let range = format!("bytes={}-{}", offset, offset + len - 1);
        let timeout = self.opts.timeout;
        self.retry_response(|r| {
            let res = r
                .agent
                .get(&r.uri)
                .header("Range", &range)
                .config()
                .timeout_per_call(Some(timeout))
                .build()
                .call();
            match r.classify(res, |resp| resp.status().as_u16()) {
                Attempt::Done((status, resp)) => {
                    let mut body = Vec::new();
                    match resp.into_body().into_reader().read_to_end(&mut body) {
                        Ok(_) => {}
                        Err(e) if e.kind() == io::ErrorKind::TimedOut => {
                            return Attempt::Retry(SourceError::NetworkTimeout(r.uri.clone()))
                        }
                        Err(e) => {
                            return Attempt::Retry(SourceError::Network {
                                uri: r.uri.clone(),
                                message: e.to_string(),
                            })
                        }
                    }
                    if status == 200 {
                        // server ignored the range and sent the whole body
                        let start = (offset as usize).min(body.len());
                        let end = (offset + len).min(body.len() as u64) as usize;
                        body = body[start..end].to_vec();
                    }
                    Attempt::Done(body)
                }
                Attempt::Retry(e) => Attempt::Retry(e),
                Attempt::Fail(SourceError::HttpStatus { code: 416, .. }) => Attempt::Done(Vec::new()),
                Attempt::Fail(e) => Attempt::Fail(e),
            }
        })
    }
}

impl Read for HttpReader {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        if let Some(stream) = &mut self.stream {
            let n = stream.read(buf)?;
            self.pos += n as u64;
            return Ok(n);
        }
        if self.block_pos == self.block.len() {
            let block = self
                .fetch_range(self.pos, self.opts.block_bytes)
                .map_err(SourceError::into_io)?;
            self.block = block;
            self.block_pos = 0;
            if self.block.is_empty() {
                return Ok(0);
            }
        }
        let n = buf.len().min(self.block.len() - self.block_pos);
        buf[..n].copy_from_slice(&self.block[self.block_pos..self.block_pos + n]);
        self.block_pos += n;
        self.pos += n as u64;
        Ok(n)
    }
}
