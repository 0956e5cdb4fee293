use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde_json::{json, Value};

/// Misbehaviour to inject into responses.
#[derive(Debug, Clone, PartialEq)]
pub enum Fault {
    None,
    /// Answer the first `n` POST requests with HTTP 503.
    Unavailable(usize),
    /// Answer every POST request with this status.
    Status(u16),
    /// Drop the last item of every response.
    DropItem,
    /// Echo a different aspect in ABSA responses.
    WrongAspect,
    /// Respond with a body that is not JSON.
    Garbage,
    /// Claim an unsupported protocol version.
    WrongVersion,
}

#[derive(Default)]
struct Canned {
    sentiment: HashMap<String, (String, f64)>,
    absa: HashMap<(String, String), (String, f64)>,
    models: Vec<String>,
}

struct Shared {
    canned: Canned,
    fault: Mutex<Fault>,
    posts: AtomicUsize,
    requests: Mutex<Vec<Value>>,
}

/// Canned-response server bound to an ephemeral localhost port. Unknown ids
/// get item-level `error` entries. Stops when dropped.
pub struct StubServer {
    addr: String,
    shared: Arc<Shared>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    /// `sentiment` lines are `{review_id, label, confidence, ...}`; `absa`
    /// lines are `{review_id, aspect, polarity, confidence}`.
    pub fn start(sentiment: &[Value], absa: &[Value], models: &[&str]) -> Self {
        let mut canned = Canned {
            models: models.iter().map(|m| m.to_string()).collect(),
            ..Canned::default()
        };
        for r in sentiment {
            canned.sentiment.insert(
                r["review_id"].as_str().unwrap().to_string(),
                (r["label"].as_str().unwrap().to_string(), r["confidence"].as_f64().unwrap()),
            );
        }
        for r in absa {
            canned.absa.insert(
                (
                    r["review_id"].as_str().unwrap().to_string(),
                    r["aspect"].as_str().unwrap().to_string(),
                ),
                (r["polarity"].as_str().unwrap().to_string(), r["confidence"].as_f64().unwrap()),
            );
        }
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub");
        let addr = format!("http://{}", listener.local_addr().unwrap());
        let shared = Arc::new(Shared {
            canned,
            fault: Mutex::new(Fault::None),
            posts: AtomicUsize::new(0),
            requests: Mutex::new(Vec::new()),
        });
        let stop = Arc::new(AtomicBool::new(false));
        let handle = {
            let shared = shared.clone();
            let stop = stop.clone();
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    if let Ok(stream) = stream {
                        let shared = shared.clone();
                        std::thread::spawn(move || {
                            let _ = handle_connection(stream, &shared);
                        });
                    }
                }
            })
        };
        Self {
            addr,
            shared,
            stop,
            handle: Some(handle),
        }
    }

    pub fn url(&self) -> &str {
        &self.addr
    }

    pub fn set_fault(&self, fault: Fault) {
        *self.shared.fault.lock().unwrap() = fault;
    }

    /// POST requests received so far.
    pub fn post_count(&self) -> usize {
        self.shared.posts.load(Ordering::SeqCst)
    }

    /// Bodies of all POST requests, in arrival order.
    pub fn requests(&self) -> Vec<Value> {
        self.shared.requests.lock().unwrap().clone()
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr.trim_start_matches("http://"));
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn handle_connection(stream: TcpStream, shared: &Shared) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut parts = request_line.split_whitespace();
    let method = parts.next().unwrap_or("").to_string();
    let path = parts.next().unwrap_or("").to_string();
    let mut length = 0usize;
    loop {
        let mut header = String::new();
        if reader.read_line(&mut header)? == 0 {
            break;
        }
        let header = header.trim_end();
        if header.is_empty() {
            break;
        }
        if let Some((name, value)) = header.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body)?;
    let (status, payload) = respond(&method, &path, &body, shared);
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        503 => "Service Unavailable",
        _ => "Status",
    };
    let mut out = stream;
    write!(
        out,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        payload.len()
    )?;
    out.write_all(payload.as_bytes())?;
    out.flush()
}

fn respond(method: &str, path: &str, body: &[u8], shared: &Shared) -> (u16, String) {
    if method == "GET" && path == "/healthz" {
        return (200, json!({"status": "ok", "models": shared.canned.models}).to_string());
    }
    if method != "POST" {
        return (404, json!({"error": "not found"}).to_string());
    }
    let n = shared.posts.fetch_add(1, Ordering::SeqCst);
    let fault = shared.fault.lock().unwrap().clone();
    let request: Value = match serde_json::from_slice(body) {
        Ok(v) => v,
        Err(_) => return (400, json!({"error": "invalid JSON"}).to_string()),
    };
    shared.requests.lock().unwrap().push(request.clone());
    match fault {
        Fault::Unavailable(k) if n < k => return (503, json!({"error": "warming up"}).to_string()),
        Fault::Status(code) => return (code, json!({"error": "injected"}).to_string()),
        Fault::Garbage => return (200, "<html>not json</html>".to_string()),
        _ => {}
    }
    let items = request["items"].as_array().cloned().unwrap_or_default();
    let mut out: Vec<Value> = match path {
        "/v1/sentiment" => items
            .iter()
            .map(|item| {
                let id = item["id"].as_str().unwrap_or("");
                match shared.canned.sentiment.get(id) {
                    Some((label, conf)) => json!({"id": id, "label": label, "confidence": conf}),
                    None => json!({"id": id, "error": "unknown id"}),
                }
            })
            .collect(),
        "/v1/absa" => items
            .iter()
            .map(|item| {
                let id = item["id"].as_str().unwrap_or("");
                let aspect = item["aspect"].as_str().unwrap_or("");
                let echoed = if fault == Fault::WrongAspect { "Features-x" } else { aspect };
                match shared.canned.absa.get(&(id.to_string(), aspect.to_string())) {
                    Some((label, conf)) => json!({"id": id, "aspect": echoed, "label": label, "confidence": conf}),
                    None => json!({"id": id, "aspect": echoed, "error": "unknown id"}),
                }
            })
            .collect(),
        _ => return (404, json!({"error": "not found"}).to_string()),
    };
    if fault == Fault::DropItem {
        out.pop();
    }
    let mut doc = json!({"items": out});
    if fault == Fault::WrongVersion {
        doc["version"] = json!("v2");
    }
    (200, doc.to_string())
}
