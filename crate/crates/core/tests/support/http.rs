//! Minimal blocking HTTP/1.1 file server for transport tests.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

#[derive(Debug, Clone, Copy)]
pub struct ServerOptions {
    pub ranges: bool,
    pub head: bool,
    /// Answer this many requests with 503 before serving normally.
    pub fail_first: usize,
}

impl Default for ServerOptions {
    fn default() -> Self {
        ServerOptions {
            ranges: true,
            head: true,
            fail_first: 0,
        }
    }
}

pub struct TestServer {
    pub base: String,
    requests: Arc<AtomicUsize>,
    ranged: Arc<AtomicUsize>,
}

impl TestServer {
    /// Serves `body` at `/<name>`; every other path is a 404.
    pub fn start(name: &str, body: Vec<u8>, opts: ServerOptions) -> TestServer {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind test server");
        let base = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(AtomicUsize::new(0));
        let ranged = Arc::new(AtomicUsize::new(0));
        let body = Arc::new(body);
        let path = format!("/{name}");
        let (req, rng) = (requests.clone(), ranged.clone());
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let (body, path, req, rng) = (body.clone(), path.clone(), req.clone(), rng.clone());
                thread::spawn(move || {
                    let _ = serve(stream, &body, &path, opts, &req, &rng);
                });
            }
        });
        TestServer { base, requests, ranged }
    }

    pub fn url(&self, name: &str) -> String {
        format!("{}/{name}", self.base)
    }

    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn ranged_requests(&self) -> usize {
        self.ranged.load(Ordering::SeqCst)
    }
}

fn parse_range(value: &str, len: usize) -> Option<(usize, usize)> {
    let spec = value.trim().strip_prefix("bytes=")?;
    let (a, b) = spec.split_once('-')?;
    let start: usize = a.parse().ok()?;
    let end = if b.is_empty() { len.saturating_sub(1) } else { b.parse::<usize>().ok()?.min(len.saturating_sub(1)) };
    (start <= end && start < len).then_some((start, end))
}

fn serve(
    stream: TcpStream,
    body: &[u8],
    path: &str,
    opts: ServerOptions,
    requests: &AtomicUsize,
    ranged: &AtomicUsize,
) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut out = stream;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Ok(());
        }
        let mut parts = line.split_whitespace();
        let (method, target) = (parts.next().unwrap_or("").to_owned(), parts.next().unwrap_or("").to_owned());
        let mut range = None;
        loop {
            let mut h = String::new();
            if reader.read_line(&mut h)? == 0 || h.trim().is_empty() {
                break;
            }
            if let Some((k, v)) = h.split_once(':') {
                if k.eq_ignore_ascii_case("range") {
                    range = Some(v.trim().to_owned());
                }
            }
        }
        let n = requests.fetch_add(1, Ordering::SeqCst);
        let head_only = method == "HEAD";
        let (status, extra, payload): (&str, String, &[u8]) = if n < opts.fail_first {
            ("503 Service Unavailable", String::new(), b"")
        } else if target != path {
            ("404 Not Found", String::new(), b"")
        } else if head_only && !opts.head {
            ("405 Method Not Allowed", String::new(), b"")
        } else {
            let accept = if opts.ranges { "Accept-Ranges: bytes\r\n" } else { "" };
            match range.filter(|_| opts.ranges) {
                Some(r) => match parse_range(&r, body.len()) {
                    Some((a, b)) => {
                        ranged.fetch_add(1, Ordering::SeqCst);
                        (
                            "206 Partial Content",
                            format!("{accept}Content-Range: bytes {a}-{b}/{}\r\n", body.len()),
                            &body[a..=b],
                        )
                    }
                    None => (
                        "416 Range Not Satisfiable",
                        format!("Content-Range: bytes */{}\r\n", body.len()),
                        b"",
                    ),
                },
                None => ("200 OK", accept.to_owned(), body),
            }
        };
        let header = format!(
            "HTTP/1.1 {status}\r\nContent-Length: {}\r\nContent-Type: application/octet-stream\r\n{extra}\r\n",
            payload.len()
        );
        out.write_all(header.as_bytes())?;
        if !head_only {
            out.write_all(payload)?;
        }
        out.flush()?;
    }
}
