use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{header, HeaderMap, Method, Request, StatusCode};
use axum::Router;
use chrono::Utc;
use crowdwalk_core::controller::{Genome, GenomeId, DEFAULT_HIDDEN};
use crowdwalk_core::evolve::{evaluate, EpisodeConfig, GAParams, OptimizerConfig, RunConfig};
use crowdwalk_core::gallery::*;
use crowdwalk_core::sim::SkeletonSpec;
use crowdwalk_core::NetworkTopology;
use crowdwalk_service::*;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

fn base_record() -> &'static SolutionRecord {
    static RECORD: OnceLock<SolutionRecord> = OnceLock::new();
    RECORD.get_or_init(|| {
        let episode = EpisodeConfig { max_steps: 30, ..EpisodeConfig::new(SkeletonSpec::walker()) };
        let topology = NetworkTopology::for_skeleton(&episode.skeleton, &DEFAULT_HIDDEN).unwrap();
        let weights = vec![0.05; topology.genome_length()];
        let genome = Genome::new(GenomeId(3), topology, weights).unwrap();
        let eval = evaluate(&genome, &episode).unwrap();
        SolutionRecord {
            schema_version: SCHEMA_VERSION,
            id: SolutionId::new("base").unwrap(),
            created_at: Utc::now(),
            skeleton_name: "walker".into(),
            optimizer: RunConfig::new(OptimizerConfig::Ga(GAParams::default()), 5, 10),
            episode,
            mechanistic_fitness: eval.fitness,
            genome,
            trace: eval.trace,
            ratings: Vec::new(),
        }
    })
}

fn record(id: &str, fitness: f64) -> SolutionRecord {
    SolutionRecord {
        id: SolutionId::new(id).unwrap(),
        mechanistic_fitness: fitness,
        ..base_record().clone()
    }
}

/// A record for a differently named skeleton, for filter tests.
fn hopper_record(id: &str) -> SolutionRecord {
    let mut rec = record(id, 0.0);
    rec.skeleton_name = "hopper".into();
    rec.episode.skeleton.name = "hopper".into();
    rec.trace.skeleton_name = "hopper".into();
    rec
}

struct Fixture {
    dir: TempDir,
    store: Arc<GalleryStore>,
    app: Router,
}

fn fixture() -> Fixture {
    let dir = TempDir::new().unwrap();
    let store = Arc::new(GalleryStore::open(dir.path(), DEFAULT_THRESHOLD).unwrap());
    let app = router(AppState { store: store.clone(), page_size: 50 });
    Fixture { dir, store, app }
}

struct Reply {
    status: StatusCode,
    headers: HeaderMap,
    body: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| {
            panic!("non-JSON body ({e}): {}", String::from_utf8_lossy(&self.body))
        })
    }

    fn error(&self) -> ApiError {
        let err: ApiError = serde_json::from_slice(&self.body).expect("error body has the ApiError shape");
        assert_eq!(err.status, self.status.as_u16());
        err
    }
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<&str>) -> Reply {
    call_with(app, Request::builder().method(method).uri(uri), body).await
}

async fn call_with(app: &Router, builder: axum::http::request::Builder, body: Option<&str>) -> Reply {
    let req = match body {
        Some(b) => builder.header(header::CONTENT_TYPE, "application/json").body(Body::from(b.to_string())),
        None => builder.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, headers, body }
}

async fn post_record(app: &Router, rec: &SolutionRecord) -> Reply {
    call(app, Method::POST, "/api/solutions", Some(&rec.to_json())).await
}

async fn post_rating(app: &Router, id: &str, value: f64, token: &str) -> Reply {
    let body = json!({ "value": value, "rater_token": token }).to_string();
    call(app, Method::POST, &format!("/api/solutions/{id}/ratings"), Some(&body)).await
}

fn is_json(reply: &Reply) -> bool {
    reply.headers.get(header::CONTENT_TYPE).and_then(|v| v.to_str().ok()) == Some("application/json")
}

#[tokio::test]
async fn healthz_is_ok() {
    let f = fixture();
    let r = call(&f.app, Method::GET, "/healthz", None).await;
    assert_eq!(r.status, StatusCode::OK);
}

#[tokio::test]
async fn healthz_reports_an_unreadable_store() {
    let f = fixture();
    std::fs::remove_dir_all(f.dir.path()).unwrap();
    let r = call(&f.app, Method::GET, "/healthz", None).await;
    assert_eq!(r.status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(r.error().code, "store_unreadable");
}

#[tokio::test]
async fn empty_store_lists_nothing() {
    let f = fixture();
    let r = call(&f.app, Method::GET, "/api/solutions", None).await;
    assert_eq!(r.status, StatusCode::OK);
    assert!(is_json(&r));
    assert_eq!(r.json(), json!({ "items": [], "next_cursor": null }));
}

#[tokio::test]
async fn create_then_fetch() {
    let f = fixture();
    let rec = record("walker-1", 0.75);
    let r = post_record(&f.app, &rec).await;
    assert_eq!(r.status, StatusCode::CREATED);
    assert_eq!(r.json(), json!({ "id": "walker-1" }));
    assert_eq!(r.headers[header::LOCATION], "/api/solutions/walker-1");

    let r = call(&f.app, Method::GET, "/api/solutions/walker-1", None).await;
    assert_eq!(r.status, StatusCode::OK);
    let doc = r.json();
    assert!(doc.get("trace").is_none());
    assert_eq!(doc["mechanistic_fitness"], json!(0.75));
    assert_eq!(doc["skeleton_name"], json!("walker"));
    assert_eq!(doc["score"], json!({ "mean": 0.0, "count": 0, "class": "unrated" }));
    let genome: Genome = serde_json::from_value(doc["genome"].clone()).unwrap();
    assert_eq!(genome, rec.genome);

    let r = call(&f.app, Method::GET, "/api/solutions", None).await;
    let items = r.json()["items"].clone();
    assert_eq!(items.as_array().unwrap().len(), 1);
    for key in ["id", "skeleton", "mechanistic_fitness", "mean", "count", "class"] {
        assert!(items[0].get(key).is_some(), "summary lacks {key}");
    }
    assert_eq!(items[0]["skeleton"], json!("walker"));
}

#[tokio::test]
async fn trace_is_served_byte_for_byte() {
    let f = fixture();
    post_record(&f.app, &record("t1", 0.1)).await;
    let r = call(&f.app, Method::GET, "/api/solutions/t1/trace", None).await;
    assert_eq!(r.status, StatusCode::OK);
    assert!(is_json(&r));
    let on_disk = std::fs::read(f.dir.path().join("solutions/t1/trace.json")).unwrap();
    assert_eq!(r.body, on_disk);
    assert_eq!(r.body, base_record().trace.to_json().into_bytes());

    let r = call(&f.app, Method::GET, "/api/solutions/nope/trace", None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.error().code, "not_found");
}

#[tokio::test]
async fn create_rejections() {
    let f = fixture();
    let rec = record("dup", 0.2);
    assert_eq!(post_record(&f.app, &rec).await.status, StatusCode::CREATED);

    let r = post_record(&f.app, &rec).await;
    assert_eq!((r.status, r.error().code.as_str()), (StatusCode::CONFLICT, "duplicate"));

    for body in ["", "{", "[]", "{\"id\": \"x\"}", "not json"] {
        let r = call(&f.app, Method::POST, "/api/solutions", Some(body)).await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST, "{body:?}");
        assert_eq!(r.error().code, "malformed_body");
    }

    let mut with_extra: Value = serde_json::from_str(&record("extra", 0.0).to_json()).unwrap();
    with_extra["surprise"] = json!(1);
    let r = call(&f.app, Method::POST, "/api/solutions", Some(&with_extra.to_string())).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);

    let mut mismatched = record("mismatch", 0.0);
    mismatched.skeleton_name = "hopper".into();
    let r = post_record(&f.app, &mismatched).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let err = r.error();
    assert_eq!(err.code, "validation_failed");
    assert!(err.message.contains("skeleton_name"), "{}", err.message);

    let mut old = record("old", 0.0);
    old.schema_version = 99;
    let r = post_record(&f.app, &old).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.error().code, "unsupported_schema_version");

    let r = call_with(
        &f.app,
        Request::builder().method(Method::POST).uri("/api/solutions").header(header::CONTENT_TYPE, "text/plain"),
        None,
    )
    .await;
    assert_eq!(r.status, StatusCode::UNSUPPORTED_MEDIA_TYPE);
    r.error();

    assert_eq!(f.store.len(), 1);
}

#[tokio::test]
async fn unknown_ids_are_404() {
    let f = fixture();
    for uri in ["/api/solutions/ghost", "/api/solutions/bad%20id", "/api/solutions/ghost/trace"] {
        let r = call(&f.app, Method::GET, uri, None).await;
        assert_eq!(r.status, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(r.error().code, "not_found");
    }
    let r = post_rating(&f.app, "ghost", 1.0, "tok").await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.error().code, "not_found");
}

#[tokio::test]
async fn rating_flow() {
    let f = fixture();
    post_record(&f.app, &record("r1", 0.3)).await;

    let r = post_rating(&f.app, "r1", 1.0, "alice").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json(), json!({ "mean": 1.0, "count": 1, "class": "good" }));

    // same token again: replaced, not added
    let r = post_rating(&f.app, "r1", 0.0, "alice").await;
    assert_eq!(r.json(), json!({ "mean": 0.0, "count": 1, "class": "poor" }));

    let r = post_rating(&f.app, "r1", 1.0, "bob").await;
    assert_eq!(r.json(), json!({ "mean": 0.5, "count": 2, "class": "good" }));

    let r = call(&f.app, Method::GET, "/api/solutions/r1", None).await;
    assert_eq!(r.json()["score"], json!({ "mean": 0.5, "count": 2, "class": "good" }));
}

#[tokio::test]
async fn rating_rejections() {
    let f = fixture();
    post_record(&f.app, &record("r2", 0.3)).await;

    for value in [1.5, -0.01, 1e300] {
        let r = post_rating(&f.app, "r2", value, "carol").await;
        assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY, "{value}");
        assert_eq!(r.error().code, "rating_out_of_range");
    }

    let r = post_rating(&f.app, "r2", 0.5, "   ").await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.error().code, "validation_failed");

    for body in [
        "",
        "{}",
        "{\"value\": 1}",
        "{\"rater_token\": \"x\"}",
        "{\"value\": \"yes\", \"rater_token\": \"x\"}",
        "{\"value\": 1, \"rater_token\": \"x\", \"extra\": true}",
        "{\"value\": 1, \"rater_token\": \"x\"",
    ] {
        let r = call(&f.app, Method::POST, "/api/solutions/r2/ratings", Some(body)).await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST, "{body:?}");
        assert_eq!(r.error().code, "malformed_body");
    }

    assert_eq!(f.store.score(&SolutionId::new("r2").unwrap()).unwrap().count, 0);
}

#[tokio::test]
async fn paging_walks_every_solution_once() {
    let f = fixture();
    for i in 0..120 {
        f.store.put_solution(&record(&format!("s{i:03}"), i as f64)).unwrap();
    }
    f.store.put_solution(&hopper_record("h1")).unwrap();

    let mut seen = Vec::new();
    let mut sizes = Vec::new();
    let mut uri = "/api/solutions?skeleton=walker".to_string();
    loop {
        let r = call(&f.app, Method::GET, &uri, None).await;
        assert_eq!(r.status, StatusCode::OK);
        let page: SolutionPage = serde_json::from_slice(&r.body).unwrap();
        sizes.push(page.items.len());
        seen.extend(page.items.iter().map(|s| s.id.to_string()));
        match page.next_cursor {
            Some(c) => uri = format!("/api/solutions?skeleton=walker&cursor={c}"),
            None => break,
        }
    }
    assert_eq!(sizes, vec![50, 50, 20]);
    let expected: Vec<String> = (0..120).map(|i| format!("s{i:03}")).collect();
    assert_eq!(seen, expected);

    let r = call(&f.app, Method::GET, "/api/solutions?skeleton=hopper", None).await;
    let page: SolutionPage = serde_json::from_slice(&r.body).unwrap();
    assert_eq!(page.items.len(), 1);
    assert_eq!(page.items[0].skeleton, "hopper");
    assert_eq!(page.next_cursor, None);

    let r = call(&f.app, Method::GET, "/api/solutions", None).await;
    assert_eq!(r.json()["items"].as_array().unwrap().len(), 50);

    for bad in ["zzz", "50", "o-1"] {
        let r = call(&f.app, Method::GET, &format!("/api/solutions?cursor={bad}"), None).await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST, "{bad}");
        assert_eq!(r.error().code, "invalid_cursor");
    }
}

#[tokio::test]
async fn page_size_is_configurable() {
    let f = fixture();
    for i in 0..5 {
        f.store.put_solution(&record(&format!("p{i}"), 0.0)).unwrap();
    }
    let app = router(AppState { store: f.store.clone(), page_size: 2 });
    let r = call(&app, Method::GET, "/api/solutions", None).await;
    let page: SolutionPage = serde_json::from_slice(&r.body).unwrap();
    assert_eq!(page.items.len(), 2);
    assert!(page.next_cursor.is_some());
}

#[tokio::test]
async fn top_rated_endpoint() {
    let f = fixture();
    for (id, fit) in [("a", 1.0), ("b", 2.0), ("c", 3.0), ("d", 4.0)] {
        post_record(&f.app, &record(id, fit)).await;
    }
    post_record(&f.app, &hopper_record("h")).await;
    for (id, votes) in [("a", [1.0, 1.0]), ("b", [1.0, 0.0]), ("c", [0.0, 0.0]), ("h", [1.0, 1.0])] {
        for (i, v) in votes.iter().enumerate() {
            post_rating(&f.app, id, *v, &format!("v{i}")).await;
        }
    }

    let r = call(&f.app, Method::GET, "/api/solutions/top?skeleton=walker&k=5", None).await;
    assert_eq!(r.status, StatusCode::OK);
    let views: Vec<SolutionView> = serde_json::from_slice(&r.body).unwrap();
    let ids: Vec<&str> = views.iter().map(|v| v.id.as_str()).collect();
    assert_eq!(ids, ["a", "b"]);
    assert_eq!(views[0].score.mean, 1.0);

    let r = call(&f.app, Method::GET, "/api/solutions/top?k=1", None).await;
    let views: Vec<SolutionView> = serde_json::from_slice(&r.body).unwrap();
    // a and h tie on mean and count; a has the higher fitness
    assert_eq!(views.len(), 1);
    assert_eq!(views[0].id.as_str(), "a");

    let r = call(&f.app, Method::GET, "/api/solutions/top", None).await;
    assert_eq!(r.json().as_array().unwrap().len(), 3);

    for q in ["k=0", "k=-1", "k=abc", "k=100000"] {
        let r = call(&f.app, Method::GET, &format!("/api/solutions/top?{q}"), None).await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST, "{q}");
        assert_eq!(r.error().code, "invalid_query");
    }
}

#[tokio::test]
async fn unknown_routes_and_methods_use_the_error_shape() {
    let f = fixture();
    let r = call(&f.app, Method::GET, "/api/nothing", None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.error().code, "not_found");

    let r = call(&f.app, Method::DELETE, "/api/solutions", None).await;
    assert_eq!(r.status, StatusCode::METHOD_NOT_ALLOWED);
    assert_eq!(r.error().code, "method_not_allowed");

    let r = call(&f.app, Method::GET, "/api/solutions/x/ratings", None).await;
    assert_eq!(r.status, StatusCode::METHOD_NOT_ALLOWED);
    r.error();
}

fn preflight(uri: &str, method: &str) -> axum::http::request::Builder {
    Request::builder()
        .method(Method::OPTIONS)
        .uri(uri)
        .header(header::ORIGIN, "http://ui.example")
        .header(header::ACCESS_CONTROL_REQUEST_METHOD, method)
        .header(header::ACCESS_CONTROL_REQUEST_HEADERS, "content-type")
}

fn allowed_methods(reply: &Reply) -> String {
    reply
        .headers
        .get(header::ACCESS_CONTROL_ALLOW_METHODS)
        .map(|v| v.to_str().unwrap().to_string())
        .unwrap_or_default()
}

#[tokio::test]
async fn cors_allows_reads_and_votes_only() {
    let f = fixture();
    post_record(&f.app, &record("c1", 0.0)).await;

    let r = call_with(
        &f.app,
        Request::builder().uri("/api/solutions").header(header::ORIGIN, "http://ui.example"),
        None,
    )
    .await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.headers[header::ACCESS_CONTROL_ALLOW_ORIGIN], "*");

    let r = call_with(&f.app, preflight("/api/solutions/c1/ratings", "POST"), None).await;
    assert!(r.status.is_success(), "{} {:?} {}", r.status, r.headers, String::from_utf8_lossy(&r.body));
    assert!(allowed_methods(&r).contains("POST"), "{}", allowed_methods(&r));

    let r = call_with(&f.app, preflight("/api/solutions/c1/trace", "GET"), None).await;
    assert!(r.status.is_success());
    assert!(allowed_methods(&r).contains("GET"));

    let r = call_with(&f.app, preflight("/api/solutions", "POST"), None).await;
    assert!(!allowed_methods(&r).contains("POST"), "{}", allowed_methods(&r));
}

fn checksum(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let key = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(key, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[tokio::test]
async fn reads_never_mutate_the_store() {
    let f = fixture();
    post_record(&f.app, &record("q1", 1.0)).await;
    post_record(&f.app, &record("q2", 2.0)).await;
    post_rating(&f.app, "q1", 1.0, "x").await;
    let before = checksum(f.dir.path());
    let uris = [
        "/healthz",
        "/api/solutions",
        "/api/solutions?skeleton=walker",
        "/api/solutions?cursor=o1",
        "/api/solutions/q1",
        "/api/solutions/q2/trace",
        "/api/solutions/top?k=3",
        "/api/solutions/missing",
    ];
    for _ in 0..5 {
        for uri in uris {
            call(&f.app, Method::GET, uri, None).await;
        }
    }
    assert_eq!(checksum(f.dir.path()), before);
}

#[tokio::test]
async fn http_and_direct_calls_reach_the_same_state() {
    let f = fixture();
    let direct_dir = TempDir::new().unwrap();
    let direct = GalleryStore::open(direct_dir.path(), DEFAULT_THRESHOLD).unwrap();
    let script: &[(&str, f64, &str)] = &[
        ("e1", 1.0, "a"),
        ("e1", 0.25, "b"),
        ("e2", 0.0, "a"),
        ("e1", 0.5, "a"),
        ("e2", 3.0, "c"),
        ("e9", 1.0, "a"),
        ("e2", 0.75, "c"),
    ];
    for id in ["e1", "e2"] {
        post_record(&f.app, &record(id, 0.5)).await;
        direct.put_solution(&record(id, 0.5)).unwrap();
    }
    for &(id, value, token) in script {
        let over_http = post_rating(&f.app, id, value, token).await;
        let sid = SolutionId::new(id).unwrap();
        match direct.submit_rating(&sid, Rating::new(value, token)) {
            Ok(score) => {
                assert_eq!(over_http.status, StatusCode::OK);
                assert_eq!(serde_json::from_slice::<CrowdScore>(&over_http.body).unwrap(), score);
            }
            Err(e) => assert_eq!(over_http.error(), ApiError::from(e)),
        }
    }
    let strip = |s: SolutionSummary| (s.id, s.mean, s.count, s.class);
    let (http_side, _) = f.store.list(None, 0, 10);
    let (direct_side, _) = direct.list(None, 0, 10);
    assert_eq!(
        http_side.into_iter().map(strip).collect::<Vec<_>>(),
        direct_side.into_iter().map(strip).collect::<Vec<_>>()
    );
}

async fn live_server() -> (TempDir, std::net::SocketAddr, tokio::sync::oneshot::Sender<()>, tokio::task::JoinHandle<Result<(), ServiceError>>) {
    let dir = TempDir::new().unwrap();
    let config = ServiceConfig {
        bind: "127.0.0.1:0".parse().unwrap(),
        store_path: dir.path().join("store"),
        ..ServiceConfig::default()
    };
    let server = Server::bind(&config).await.unwrap();
    let addr = server.local_addr();
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let handle = tokio::spawn(server.run(async move {
        let _ = rx.await;
    }));
    (dir, addr, tx, handle)
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn ten_concurrent_raters() {
    let (dir, addr, stop, handle) = live_server().await;
    let client = Client::new(&format!("http://{addr}"));
    client.health().await.unwrap();
    let id = client.upload(&record("crowd", 1.25)).await.unwrap();

    // dyadic values: the sum is exact in any order
    let values: Vec<f64> = (0..10).map(|i| [0.0, 0.125, 0.5, 0.875, 1.0][i % 5] * ((i % 3) as f64 / 2.0)).collect();
    let tasks: Vec<_> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let client = client.clone();
            let id = id.clone();
            tokio::spawn(async move { client.rate(&id, v, &format!("rater-{i}")).await.unwrap() })
        })
        .collect();
    for t in tasks {
        t.await.unwrap();
    }

    let oracle = values.iter().sum::<f64>() / values.len() as f64;
    let view = client.solution(&id).await.unwrap();
    assert_eq!(view.score.count, 10);
    assert_eq!(view.score.mean, oracle);
    assert_eq!(view.mechanistic_fitness, 1.25);
    assert_eq!(client.trace_bytes(&id).await.unwrap(), base_record().trace.to_json().into_bytes());

    stop.send(()).unwrap();
    handle.await.unwrap().unwrap();

    // everything acknowledged before shutdown is on disk
    let reopened = GalleryStore::open(dir.path().join("store"), DEFAULT_THRESHOLD).unwrap();
    let score = reopened.score(&id).unwrap();
    assert_eq!((score.count, score.mean), (10, oracle));
}

#[tokio::test]
async fn client_surfaces_api_and_transport_errors() {
    let (_dir, addr, stop, handle) = live_server().await;
    let client = Client::new(&format!("http://{addr}/"));
    let ghost = SolutionId::new("ghost").unwrap();
    match client.rate(&ghost, 1.0, "t").await {
        Err(ClientError::Api { error, endpoint }) => {
            assert_eq!(error.status, 404);
            assert!(endpoint.contains("/api/solutions/ghost/ratings"), "{endpoint}");
        }
        other => panic!("expected 404, got {other:?}"),
    }
    let page = client.page(None, Some("walker")).await.unwrap();
    assert!(page.items.is_empty());
    assert!(client.top_rated(None, 3).await.unwrap().is_empty());
    stop.send(()).unwrap();
    handle.await.unwrap().unwrap();

    match client.health().await {
        Err(ClientError::Transport { endpoint, .. }) => assert!(endpoint.contains("/healthz")),
        other => panic!("expected a transport error, got {other:?}"),
    }
}

#[tokio::test]
async fn startup_errors_name_their_cause() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("not-a-dir");
    std::fs::write(&file, b"x").unwrap();
    let config = ServiceConfig { store_path: file, bind: "127.0.0.1:0".parse().unwrap(), ..ServiceConfig::default() };
    assert!(matches!(Server::bind(&config).await, Err(ServiceError::Store { .. })));

    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let config = ServiceConfig {
        store_path: dir.path().join("ok"),
        bind: taken.local_addr().unwrap(),
        ..ServiceConfig::default()
    };
    assert!(matches!(Server::bind(&config).await, Err(ServiceError::Bind { .. })));

    let config = ServiceConfig { threshold: 1.5, ..config };
    assert!(matches!(Server::bind(&config).await, Err(ServiceError::Config(_))));
}
