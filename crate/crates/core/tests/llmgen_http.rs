use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};

use cookiefeat::llmgen::{generate, EndpointConfig, GenerationKind, HttpTransport, DESCRIPTION_PROMPT};

type Seen = Arc<Mutex<Vec<(String, String)>>>;

/// Answers `n` requests with a fixed completion and records each body.
fn serve(n: usize, status: &'static str) -> (String, Seen) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming().take(n) {
            let mut stream = stream.unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut auth = String::new();
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let l = line.trim_end().to_ascii_lowercase();
                if l.is_empty() {
                    break;
                }
                if let Some(v) = l.strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                if l.starts_with("authorization:") {
                    auth = line.trim_end()["authorization:".len()..].trim().to_string();
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            log.lock().unwrap().push((auth, String::from_utf8(body).unwrap()));
            let reply = r#"{"choices":[{"message":{"role":"assistant","content":"A boy stands on a stool."}}]}"#;
            write!(
                stream,
                "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            )
            .unwrap();
        }
    });
    (url, seen)
}

fn config(url: String, key_env: &str) -> EndpointConfig {
    EndpointConfig {
        url,
        model: "test-model".into(),
        retries: 0,
        backoff_ms: 0,
        parallelism: 2,
        timeout_secs: 10,
        api_key_env: key_env.into(),
        ..Default::default()
    }
}

#[test]
fn descriptions_round_trip_through_http() {
    std::env::set_var("COOKIEFEAT_HTTP_TEST_KEY", "secret");
    let (url, seen) = serve(4, "200 OK");
    let cfg = config(url, "COOKIEFEAT_HTTP_TEST_KEY");
    let transport = HttpTransport::from_config(&cfg).unwrap();
    let mut log = Vec::new();
    let run = generate(GenerationKind::Descriptions, None, 4, &cfg, &transport, &mut log).unwrap();
    assert_eq!(run.responses, vec!["A boy stands on a stool."; 4]);

    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 4);
    for (auth, body) in seen.iter() {
        assert_eq!(auth, "Bearer secret");
        let v: serde_json::Value = serde_json::from_str(body).unwrap();
        assert_eq!(v["model"], "test-model");
        assert_eq!(v["messages"][0]["content"], DESCRIPTION_PROMPT);
    }
}

#[test]
fn http_errors_are_recorded_per_iteration() {
    std::env::set_var("COOKIEFEAT_HTTP_TEST_KEY2", "secret");
    let (url, _) = serve(2, "500 Internal Server Error");
    let cfg = config(url, "COOKIEFEAT_HTTP_TEST_KEY2");
    let transport = HttpTransport::from_config(&cfg).unwrap();
    let mut log = Vec::new();
    let err = generate(GenerationKind::Descriptions, None, 2, &cfg, &transport, &mut log).unwrap_err();
    assert!(err.to_string().contains("0 of 2"), "{err}");
    let text = String::from_utf8(log).unwrap();
    assert_eq!(text.matches("HTTP 500").count(), 2);
}

#[test]
fn unreachable_endpoint_fails_after_retries() {
    std::env::set_var("COOKIEFEAT_HTTP_TEST_KEY3", "secret");
    // bind then drop to get a port nobody listens on
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut cfg = config(format!("http://127.0.0.1:{port}/v1/chat/completions"), "COOKIEFEAT_HTTP_TEST_KEY3");
    cfg.retries = 2;
    let transport = HttpTransport::from_config(&cfg).unwrap();
    let mut log = Vec::new();
    let err = generate(GenerationKind::Descriptions, None, 1, &cfg, &transport, &mut log).unwrap_err();
    assert!(err.to_string().contains("after 3 attempts"), "{err}");
}
