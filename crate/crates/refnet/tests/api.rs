mod common;

use std::path::Path;

use axum::{
    body::Body,
    http::{header, Request, StatusCode},
    Router,
};
use common::*;
use proptest::prelude::*;
use refnet::api::{response_schemas, router, AppState};
use serde_json::Value;
use tower::ServiceExt;

struct Reply {
    status: StatusCode,
    cors: Option<String>,
    body: Value,
}

async fn get(app: &Router, uri: &str) -> Reply {
    let req = Request::get(uri)
        .header(header::ORIGIN, "http://localhost:5173")
        .body(Body::empty())
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let cors = resp
        .headers()
        .get(header::ACCESS_CONTROL_ALLOW_ORIGIN)
        .map(|v| v.to_str().unwrap().to_string());
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let body = serde_json::from_slice(&bytes).unwrap_or_else(|e| panic!("{uri}: {e}"));
    Reply { status, cors, body }
}

async fn ok(app: &Router, uri: &str) -> Value {
    let r = get(app, uri).await;
    assert_eq!(r.status, StatusCode::OK, "{uri}: {}", r.body);
    r.body
}

fn fixture_app(dir: &Path) -> Router {
    router(AppState::new(load(&fixture_dataset(dir))))
}

fn assert_valid(schema: &Value, instance: &Value, what: &str) {
    let v = jsonschema::validator_for(schema).unwrap();
    let errors: Vec<String> = v.iter_errors(instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{what}: {errors:?}\n{instance}");
}

#[tokio::test]
async fn every_response_matches_its_published_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let app = fixture_app(tmp.path());
    let schemas = ok(&app, "/schema").await["endpoints"].clone();
    assert_eq!(schemas, response_schemas());
    for (name, s) in schemas.as_object().unwrap() {
        assert!(jsonschema::meta::is_valid(s), "{name} is not a valid schema");
    }

    let cases = [
        ("/health", "/health"),
        ("/version", "/version"),
        ("/schema", "/schema"),
        ("/networks", "/networks"),
        ("/networks", "/networks?state=MA&limit=1&offset=1"),
        ("/networks", "/networks?year=2030"),
        ("/networks/{hsa}/{year}/graph", "/networks/k3/2017/graph"),
        ("/networks/{hsa}/{year}/graph", "/networks/dumbbell/2018/graph"),
        ("/networks/{hsa}/{year}/graph", "/networks/north%2Feast/2018/graph"),
        ("/features", "/features"),
        ("/features", "/features?columns=hsa,frc_mean,orc_mean&region=South"),
        ("/distributions", "/distributions?metric=orc&group=state"),
        ("/distributions", "/distributions?metric=density&group=region&bins=3"),
        ("/distributions", "/distributions?metric=frc&year=2018"),
        ("/correlate", "/correlate?x=frc_mean&y=density&permutations=50"),
        ("/correlate", "/correlate?x=orc_mean&y=mean_degree&method=spearman&group=year&permutations=20&seed=9"),
    ];
    for (endpoint, uri) in cases {
        let body = ok(&app, uri).await;
        assert_valid(&schemas[endpoint], &body, uri);
    }
    // The schemas do reject malformed bodies.
    let mut broken = ok(&app, "/networks/k3/2017/graph").await;
    broken["edges"][0]["orc"] = serde_json::json!(1.5);
    assert!(!jsonschema::is_valid(&schemas["/networks/{hsa}/{year}/graph"], &broken));
    let mut broken = ok(&app, "/networks").await;
    broken.as_object_mut().unwrap().remove("total");
    assert!(!jsonschema::is_valid(&schemas["/networks"], &broken));

    for uri in ["/nope", "/networks?limit=0", "/networks/k3/1999/graph", "/features?columns=nope"] {
        let r = get(&app, uri).await;
        assert!(r.status.is_client_error());
        assert_valid(&schemas["error"], &r.body, uri);
        assert_eq!(r.body["error"]["status"], r.status.as_u16());
    }
}

#[tokio::test]
async fn networks_and_graph_payloads() {
    let tmp = tempfile::tempdir().unwrap();
    let app = fixture_app(tmp.path());

    let v = ok(&app, "/networks").await;
    assert_eq!(v["total"], 6);
    let items = v["items"].as_array().unwrap();
    assert_eq!(items.len(), 6);
    assert_eq!(
        items[2],
        serde_json::json!({
            "hsa": "k3", "year": 2017, "node_count": 3, "edge_count": 3,
            "state": "MA", "region": "Northeast",
        })
    );
    assert_eq!(items[4]["state"], "unassigned");

    let g = ok(&app, "/networks/k3/2017/graph").await;
    assert_eq!(g["nodes"].as_array().unwrap().len(), 3);
    assert_eq!(g["edges"].as_array().unwrap().len(), 3);
    for e in g["edges"].as_array().unwrap() {
        assert_eq!(e["orc"], 0.5);
        assert_eq!(e["frc"], 3.0);
    }
    for n in g["nodes"].as_array().unwrap() {
        assert_eq!((n["degree"].as_u64(), n["degree_centrality"].as_f64()), (Some(2), Some(1.0)));
        assert_eq!(n["betweenness"], 0.0);
        assert_eq!(n["orc"], 0.5);
    }
    let ids: Vec<&str> = g["nodes"].as_array().unwrap().iter().map(|n| n["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["A", "B", "C"], "D only had a sub-threshold record");

    let bridge = ok(&app, "/networks/dumbbell/2017/graph").await;
    let e = bridge["edges"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["source"] == "H1" && e["target"] == "H2")
        .unwrap();
    assert_eq!(e["weight"], 40);
    assert_eq!(e["frc"], -2.0);
    assert!((e["orc"].as_f64().unwrap() + 2.0 / 3.0).abs() < 1e-12);

    let slash = ok(&app, "/networks/north%2Feast/2017/graph").await;
    assert_eq!(slash["hsa"], "north/east");
    assert_eq!(slash["nodes"].as_array().unwrap().len(), 6);
}

#[tokio::test]
async fn error_statuses() {
    let tmp = tempfile::tempdir().unwrap();
    let app = fixture_app(tmp.path());
    let cases = [
        ("/networks/k3/2016/graph", StatusCode::NOT_FOUND),
        ("/networks/zz/2017/graph", StatusCode::NOT_FOUND),
        ("/no/such/route", StatusCode::NOT_FOUND),
        ("/networks/k3/twenty/graph", StatusCode::BAD_REQUEST),
        ("/networks?limit=0", StatusCode::BAD_REQUEST),
        ("/networks?limit=10001", StatusCode::BAD_REQUEST),
        ("/networks?offset=-1", StatusCode::BAD_REQUEST),
        ("/networks?county=x", StatusCode::BAD_REQUEST),
        ("/networks?year=2017&year=2018", StatusCode::BAD_REQUEST),
        ("/features?year=last", StatusCode::BAD_REQUEST),
        ("/health?verbose=1", StatusCode::BAD_REQUEST),
        ("/correlate?x=frc_mean", StatusCode::BAD_REQUEST),
        ("/correlate?x=frc_mean&y=density&method=kendall", StatusCode::BAD_REQUEST),
        ("/correlate?x=frc_mean&y=density&permutations=2000000", StatusCode::BAD_REQUEST),
        ("/distributions", StatusCode::BAD_REQUEST),
        ("/distributions?metric=orc&bins=0", StatusCode::BAD_REQUEST),
        ("/features?columns=hsa,nope", StatusCode::UNPROCESSABLE_ENTITY),
        ("/correlate?x=nope&y=density", StatusCode::UNPROCESSABLE_ENTITY),
        ("/correlate?x=frc_mean&y=density&group=nope", StatusCode::UNPROCESSABLE_ENTITY),
        ("/correlate?x=hsa&y=density", StatusCode::UNPROCESSABLE_ENTITY),
        ("/distributions?metric=nope", StatusCode::UNPROCESSABLE_ENTITY),
        ("/distributions?metric=orc&group=nope", StatusCode::UNPROCESSABLE_ENTITY),
        ("/distributions?metric=density&group=nope", StatusCode::UNPROCESSABLE_ENTITY),
    ];
    for (uri, status) in cases {
        let r = get(&app, uri).await;
        assert_eq!(r.status, status, "{uri}: {}", r.body);
        assert!(r.body["error"]["message"].as_str().is_some_and(|m| !m.is_empty()));
    }
}

#[tokio::test]
async fn cors_headers_are_present() {
    let tmp = tempfile::tempdir().unwrap();
    let app = fixture_app(tmp.path());
    for uri in ["/health", "/networks", "/nope"] {
        assert_eq!(get(&app, uri).await.cors.as_deref(), Some("*"), "{uri}");
    }
}

#[tokio::test]
async fn features_filters_and_column_selection() {
    let tmp = tempfile::tempdir().unwrap();
    let app = fixture_app(tmp.path());
    let all = ok(&app, "/features").await;
    assert_eq!(all["total"], 6);
    let columns: Vec<&str> = all["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
    for c in ["density", "global_clustering", "degree_assortativity", "frc_mean", "orc_mean", "state", "region"] {
        assert!(columns.contains(&c), "{c}");
    }
    let row = &all["rows"][3];
    assert_eq!((row["hsa"].as_str(), row["year"].as_i64()), (Some("k3"), Some(2018)));
    assert_eq!(row["edge_count"], 3);

    let v = ok(&app, "/features?state=TX&columns=year,density").await;
    assert_eq!(v["total"], 2);
    assert_eq!(v["columns"], serde_json::json!(["year", "density"]));
    assert_eq!(v["rows"][1], serde_json::json!({"year": 2018, "density": 1}));
    assert_eq!(v["rows"][0]["density"], 0.3333333333333333);

    let v = ok(&app, "/features?hsa=north/east&year=2018").await;
    assert_eq!(v["total"], 1);
    assert_eq!(v["rows"][0]["region"], "unassigned");
}

fn page_union(app: &Router, base: &str, key: &str, limit: usize) -> (Value, Vec<Value>) {
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    rt.block_on(async {
        let sep = if base.contains('?') { '&' } else { '?' };
        let full = ok(app, &format!("{base}{sep}limit=10000")).await;
        let mut got = Vec::new();
        let mut offset = 0;
        loop {
            let page = ok(app, &format!("{base}{sep}limit={limit}&offset={offset}")).await;
            assert_eq!(page["total"], full["total"]);
            let items = page[key].as_array().unwrap();
            assert!(items.len() <= limit);
            if items.is_empty() {
                break;
            }
            got.extend(items.iter().cloned());
            offset += limit;
        }
        (full[key].clone(), got)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pages_partition_the_unpaged_result(limit in 1usize..8, filter in 0usize..4) {
        let tmp = tempfile::tempdir().unwrap();
        let app = fixture_app(tmp.path());
        let filter = ["", "?year=2018", "?region=South", "?state=unassigned"][filter];
        for (path, key) in [("/networks", "items"), ("/features", "rows")] {
            let (full, got) = page_union(&app, &format!("{path}{filter}"), key, limit);
            prop_assert_eq!(Value::Array(got), full);
        }
    }
}

#[tokio::test]
async fn correlate_matches_the_cli_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let edges = tmp.path().join("edges.csv");
    write(&edges, &random_edge_list(120, 21));
    let root = tmp.path().join("data");
    run_pipeline(&[edges], &root, 3);
    plant_census(&root, 0.6, 8);
    let mut regions = String::from("hsa,state,region\n");
    for h in 0..120 {
        regions.push_str(&format!("h{h:04},S{},R{}\n", h % 6, h % 2));
    }
    write(&root.join("regions.csv"), &regions);

    let app = router(AppState::new(load(&root)));
    for (flags, query) in [
        (vec![], "x=frc_mean&y=nonwhite_share"),
        (
            vec!["--method", "spearman", "--group", "region", "--permutations", "500", "--seed", "4"],
            "x=frc_mean&y=nonwhite_share&method=spearman&group=region&permutations=500&seed=4",
        ),
        (vec!["--region", "R1", "--permutations", "0"], "x=orc_mean&y=nonwhite_share&region=R1&permutations=0"),
    ] {
        let mut args = vec!["correlate", root.to_str().unwrap()];
        let q: Vec<(String, String)> = form_pairs(query);
        args.extend(["--x", &q[0].1, "--y", &q[1].1]);
        args.extend(flags.iter().copied());
        let cli = refnet(&args);
        assert_eq!(cli.code, 0, "{}", cli.stderr);
        let cli: Value = serde_json::from_str(&cli.stdout).unwrap();
        let api = ok(&app, &format!("/correlate?{query}")).await;
        assert_eq!(api, cli, "{query}");
        assert!(!api["results"].as_array().unwrap().is_empty());
    }
}

fn form_pairs(q: &str) -> Vec<(String, String)> {
    q.split('&')
        .map(|kv| {
            let (k, v) = kv.split_once('=').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

#[tokio::test]
async fn reload_swaps_the_whole_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let state = AppState::new(load(&fixture_dataset(tmp.path())));
    let app = router(state.clone());
    let before = state.snapshot();
    assert_eq!(ok(&app, "/networks").await["total"], 6);

    let other = tmp.path().join("other");
    let edges = tmp.path().join("small.csv");
    write(&edges, "npi_a,npi_b,shared_patients,hsa,year\nA,B,20,solo,2020\n");
    run_pipeline(&[edges], &other, 1);
    let old = state.swap(load(&other));
    assert!(std::sync::Arc::ptr_eq(&old, &before));
    assert_eq!(before.networks.len(), 6, "earlier snapshots are untouched");

    let v = ok(&app, "/networks").await;
    assert_eq!(v["total"], 1);
    assert_eq!(v["items"][0]["hsa"], "solo");
    assert_eq!(get(&app, "/networks/k3/2017/graph").await.status, StatusCode::NOT_FOUND);
}
