use axum::body::Body;
use axum::http::{Request, StatusCode};
use cpi_cli::api::{router, AppState};
use cpi_cli::run::{load, parse_bound, report_json, synthesize, Engine};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const EXAMPLE: &str = include_str!("../../../models/example.cpi");

async fn call(method: &str, uri: &str, body: Body) -> (StatusCode, String) {
    let app = router(AppState::new(100_000, 2));
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json").body(body).unwrap();
    let resp = app.oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn post(uri: &str, body: Value) -> (StatusCode, Value) {
    let (status, text) = call("POST", uri, Body::from(body.to_string())).await;
    (status, serde_json::from_str(&text).unwrap())
}

#[tokio::test]
async fn health_is_ok() {
    let (status, body) = call("GET", "/health", Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, r#"{"status":"ok"}"#);
}

#[tokio::test]
async fn synthesize_example() {
    let (status, body) = post("/synthesize", json!({ "text": EXAMPLE, "bound": [155, 7.5] })).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["strategy"]["exists"], json!(true));
    assert_eq!(body["strategy"]["expected_impact"], json!([151.0, 6.6]));
    assert_eq!(body["strategy"]["schema"], json!(1));
    assert!(body["stats"]["nodes"].as_u64().unwrap() > 0);
    assert!(body["wall_time_ms"].is_number());
}

#[tokio::test]
async fn strategy_json_matches_command_line_bytes() {
    let (status, text) =
        call("POST", "/synthesize", Body::from(json!({ "text": EXAMPLE, "bound": ["155", "15/2"] }).to_string())).await;
    assert_eq!(status, StatusCode::OK);
    let loaded = load(EXAMPLE).unwrap();
    let expected = report_json(&synthesize(&loaded, &parse_bound("155,7.5").unwrap(), Engine::Game, 100_000).unwrap().report);
    assert!(text.starts_with(&format!("{{\"strategy\":{expected},")), "{text}");
}

#[tokio::test]
async fn engines_selectable() {
    for engine in ["recursive", "brute", "all"] {
        let (status, body) = post("/synthesize", json!({ "text": EXAMPLE, "bound": [150, 6], "engine": engine })).await;
        assert_eq!(status, StatusCode::OK, "{engine}");
        assert_eq!(body["strategy"]["exists"], json!(false), "{engine}");
    }
}

#[tokio::test]
async fn empty_parse_body_is_rejected() {
    let (status, _) = call("POST", "/parse", Body::empty()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn parse_errors_carry_a_span() {
    let (status, body) = post("/parse", json!({ "text": "A[1]{1},\n  B[1]{0}" })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["span"]["line"], json!(2));
    assert_eq!(body["error"]["span"]["column"], json!(8));
    assert_eq!(body["error"]["kind"], json!("semantic"));
}

#[tokio::test]
async fn parse_describes_diagram() {
    let (status, body) = post("/parse", json!({ "text": EXAMPLE })).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["impact_dim"], json!(2));
    let kinds: Vec<&str> = body["nodes"].as_array().unwrap().iter().map(|n| n["kind"].as_str().unwrap()).collect();
    assert!(kinds.contains(&"nature") && kinds.contains(&"choice") && kinds.contains(&"parallel_split"));
    assert!(body["dot"].as_str().unwrap().starts_with("digraph"));
}

#[tokio::test]
async fn node_cap_breach_is_413() {
    let (status, body) = post("/synthesize", json!({ "text": EXAMPLE, "bound": [155, 7.5], "node_cap": 5 })).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(body["error"]["kind"], json!("budget"));
}

#[tokio::test]
async fn bad_bounds_are_400() {
    for bound in [json!([1]), json!(["x", 1]), json!([-1, 1])] {
        let (status, _) = post("/synthesize", json!({ "text": EXAMPLE, "bound": bound })).await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_requests_are_independent() {
    let app = router(AppState::new(100_000, 2));
    let bounds = [json!([155, 7.5]), json!([150, 6]), json!([131, 9]), json!([100, 1])];
    let handles: Vec<_> = bounds
        .iter()
        .map(|b| {
            let app = app.clone();
            let body = json!({ "text": EXAMPLE, "bound": b }).to_string();
            tokio::spawn(async move {
                let req = Request::post("/synthesize").body(Body::from(body)).unwrap();
                let resp = app.oneshot(req).await.unwrap();
                let bytes = resp.into_body().collect().await.unwrap().to_bytes();
                serde_json::from_slice::<Value>(&bytes).unwrap()["strategy"]["exists"].as_bool().unwrap()
            })
        })
        .collect();
    let mut got = Vec::new();
    for h in handles {
        got.push(h.await.unwrap());
    }
    assert_eq!(got, vec![true, false, true, false]);
}
