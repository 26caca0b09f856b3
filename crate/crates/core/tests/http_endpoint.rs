use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use dialsum_core::annotate::{ChatEndpoint, ChatRequest, EndpointError, HttpEndpoint};

struct Seen {
    headers: Vec<String>,
    body: String,
}

/// Serves one connection per scripted reply, then stops. `delay` holds the
/// reply back to provoke client timeouts.
fn serve(replies: Vec<(u16, String, Duration)>) -> (String, mpsc::Receiver<Seen>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!(
        "http://{}/v1/chat/completions",
        listener.local_addr().unwrap()
    );
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body, delay) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut headers = Vec::new();
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end().to_string();
                if line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                headers.push(line);
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            let _ = tx.send(Seen {
                headers,
                body: String::from_utf8(buf).unwrap(),
            });
            thread::sleep(delay);
            let mut stream = stream;
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    (url, rx)
}

fn ok_body(text: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": text}}]})
        .to_string()
}

fn request() -> ChatRequest {
    ChatRequest::user("test-model", "Ann: hi\nTl;dr:".into(), 0.0)
}

#[test]
fn posts_json_with_bearer_token() {
    let (url, rx) = serve(vec![(200, ok_body("Ann says hi."), Duration::ZERO)]);
    let ep = HttpEndpoint::new(url, Some("sekret".into()), Duration::from_secs(5));
    assert_eq!(ep.complete(&request()).unwrap(), "Ann says hi.");
    let seen = rx.recv().unwrap();
    assert!(seen.headers[0].starts_with("POST /v1/chat/completions"));
    assert!(seen
        .headers
        .iter()
        .any(|h| h == "Authorization: Bearer sekret" || h == "authorization: Bearer sekret"));
    let body: serde_json::Value = serde_json::from_str(&seen.body).unwrap();
    assert_eq!(body, serde_json::to_value(request()).unwrap());
}

#[test]
fn no_key_means_no_authorization_header() {
    let (url, rx) = serve(vec![(200, ok_body("x"), Duration::ZERO)]);
    HttpEndpoint::new(url, None, Duration::from_secs(5))
        .complete(&request())
        .unwrap();
    let seen = rx.recv().unwrap();
    assert!(!seen
        .headers
        .iter()
        .any(|h| h.to_ascii_lowercase().starts_with("authorization")));
}

#[test]
fn error_statuses_carry_the_code() {
    let (url, _rx) = serve(vec![
        (429, "{\"error\":\"rate\"}".into(), Duration::ZERO),
        (500, "oops".into(), Duration::ZERO),
    ]);
    let ep = HttpEndpoint::new(url, None, Duration::from_secs(5));
    assert!(matches!(
        ep.complete(&request()),
        Err(EndpointError::Status { status: 429, .. })
    ));
    match ep.complete(&request()) {
        Err(EndpointError::Status { status, body }) => {
            assert_eq!(status, 500);
            assert_eq!(body, "oops");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn malformed_body_is_a_bad_response() {
    let (url, _rx) = serve(vec![(200, "{\"choices\":[]}".into(), Duration::ZERO)]);
    let ep = HttpEndpoint::new(url, None, Duration::from_secs(5));
    assert!(matches!(
        ep.complete(&request()),
        Err(EndpointError::BadResponse(_))
    ));
}

#[test]
fn slow_server_times_out() {
    let (url, _rx) = serve(vec![(200, ok_body("late"), Duration::from_millis(1500))]);
    let ep = HttpEndpoint::new(url, None, Duration::from_millis(200));
    assert_eq!(ep.complete(&request()), Err(EndpointError::Timeout));
}

#[test]
fn refused_connection_is_a_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let ep = HttpEndpoint::new(
        format!("http://127.0.0.1:{port}/"),
        None,
        Duration::from_secs(2),
    );
    assert!(matches!(
        ep.complete(&request()),
        Err(EndpointError::Transport(_))
    ));
}
