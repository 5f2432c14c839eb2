use scenaug::llm::{chat, BackendConfig, ChatBackend, ChatMessage, HttpBackend, ImageAttachment, LlmError};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

/// Serves the given (status, body) replies in order, one per connection,
/// recording each request body. Extra requests get the last reply.
struct Stub {
    url: String,
    bodies: Arc<Mutex<Vec<String>>>,
}

fn stub(replies: Vec<(u16, String)>) -> Stub {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let bodies = Arc::new(Mutex::new(Vec::new()));
    let seen = bodies.clone();
    thread::spawn(move || {
        for (n, stream) in listener.incoming().enumerate() {
            let Ok(mut stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap_or(0);
                }
            }
            let mut body = vec![0u8; len];
            reader.read_exact(&mut body).ok();
            seen.lock().unwrap().push(String::from_utf8_lossy(&body).into_owned());
            let (code, text) = replies.get(n).or(replies.last()).cloned().unwrap();
            let resp = format!(
                "HTTP/1.1 {code} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{text}",
                text.len()
            );
            stream.write_all(resp.as_bytes()).ok();
        }
    });
    Stub { url, bodies }
}

fn completion(text: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
}

fn backend(url: &str, retries: u32) -> HttpBackend {
    let mut cfg = BackendConfig::new(url, "stub-model");
    cfg.max_retries = retries;
    cfg.backoff_base_s = 0.001;
    cfg.timeout_s = 5.0;
    cfg.api_key_env = "SCENAUG_TEST_UNSET_KEY".into();
    HttpBackend::new(cfg).unwrap()
}

#[test]
fn transient_errors_are_retried_then_succeed() {
    let s = stub(vec![(503, "{}".into()), (429, "{}".into()), (200, completion("hello"))]);
    let b = backend(&s.url, 3);
    assert_eq!(chat(&b, &[ChatMessage::user("hi")]).unwrap(), "hello");
    assert_eq!(s.bodies.lock().unwrap().len(), 3);
    assert_eq!(b.call_log().len(), 1);
}

#[test]
fn retries_never_exceed_the_limit() {
    for retries in 0..4 {
        let s = stub(vec![(500, "{}".into())]);
        let b = backend(&s.url, retries);
        let err = chat(&b, &[ChatMessage::user("hi")]).unwrap_err();
        assert!(matches!(err, LlmError::Backend(_)), "{err:?}");
        assert_eq!(s.bodies.lock().unwrap().len(), retries as usize + 1);
    }
}

#[test]
fn client_errors_fail_without_retry() {
    for (code, auth) in [(401, true), (403, true), (400, false)] {
        let s = stub(vec![(code, r#"{"error":"no"}"#.into()), (200, completion("late"))]);
        let b = backend(&s.url, 3);
        let err = chat(&b, &[ChatMessage::user("hi")]).unwrap_err();
        assert_eq!(matches!(err, LlmError::Auth(_)), auth, "{code}: {err:?}");
        assert_eq!(s.bodies.lock().unwrap().len(), 1, "{code}");
    }
}

#[test]
fn request_carries_model_and_base64_image() {
    let s = stub(vec![(200, completion("ok"))]);
    let b = backend(&s.url, 0);
    let png = vec![0x89, b'P', b'N', b'G', 1, 2, 3];
    let msg = ChatMessage::user_with_image("look", ImageAttachment::png(png));
    chat(&b, &[msg]).unwrap();
    let body: serde_json::Value = serde_json::from_str(&s.bodies.lock().unwrap()[0]).unwrap();
    assert_eq!(body["model"], "stub-model");
    let parts = body["messages"][0]["content"].as_array().unwrap();
    assert_eq!(parts[0]["text"], "look");
    assert_eq!(parts[1]["image_url"]["url"], "data:image/png;base64,iVBORwECAw==");
    assert_eq!(b.call_log()[0].request[0].image_bytes, Some(7));
}

#[test]
fn malformed_completion_is_an_error() {
    let s = stub(vec![(200, "not json".into())]);
    let b = backend(&s.url, 2);
    assert!(matches!(chat(&b, &[ChatMessage::user("hi")]), Err(LlmError::Backend(_))));
    assert_eq!(s.bodies.lock().unwrap().len(), 1);
}
