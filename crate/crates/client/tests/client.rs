use std::net::SocketAddr;

use metacust_client::{Client, ClientError};
use metacust_core::{Operation, Reason, Verdict};
use metacust_service::Config;

const SEC: &[u8] = include_bytes!("../../../testdata/sec.model.json");
const FIG2: &[u8] = include_bytes!("../../../testdata/fig2.model.json");

async fn server() -> Client {
    let config = Config {
        listen: SocketAddr::from(([127, 0, 0, 1], 0)),
        ..Config::default()
    };
    let (addr, _handle) = metacust_service::spawn(config).await.unwrap();
    Client::new(format!("http://{addr}/"))
}

#[tokio::test]
async fn full_round_trip() {
    let c = server().await;
    assert!(!c.base().ends_with('/'));
    let summary = c.load_model(SEC.to_vec()).await.unwrap();
    assert_eq!((summary.id.as_str(), summary.components), ("sec", 5));
    assert_eq!(c.model("sec").await.unwrap(), SEC);

    let s = c.create_session("sec", Some("acme"), None).await.unwrap();
    assert_eq!(s.state_version, 0);
    for x in ["x1", "x2"] {
        let d = c.apply(&s.session, &Operation::add("SEC", x)).await.unwrap();
        assert_eq!(d.reason, Reason::FreeAdd);
    }
    let d = c.apply(&s.session, &Operation::add("SEC", "x4")).await.unwrap();
    assert_eq!(d.verdict, Verdict::Valid);
    assert_eq!(d.satisfied_edge.as_ref().map(|e| e.as_str()), Some("eA"));
    assert_eq!(d.state_version, 3);

    let mismatched = Operation::Delete {
        component: "x4".into(),
        concern: None,
        revision: Some("7".into()),
    };
    let d = c.apply(&s.session, &mismatched).await.unwrap();
    assert_eq!(d.reason, Reason::RevisionMismatch);

    let state = c.state(&s.session).await.unwrap();
    let resumed = c.create_session("sec", None, Some(state.clone())).await.unwrap();
    assert_eq!(c.state(&resumed.session).await.unwrap(), state);
}

#[tokio::test]
async fn guidance_and_errors() {
    let c = server().await;
    c.load_model(FIG2.to_vec()).await.unwrap();
    let g = c.guidance("fig2", "c", Some("x6")).await.unwrap();
    assert_eq!(g.len(), 5);
    assert!(c.guidance("fig2", "c", Some("x1")).await.unwrap().is_empty());

    let err = c.guidance("fig2", "c", Some("x9")).await.unwrap_err();
    assert_eq!(err.status(), Some(404));
    match c.load_model(b"{".to_vec()).await.unwrap_err() {
        ClientError::Api { status, error, .. } => assert_eq!((status, error.as_str()), (400, "ParseError")),
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(c.create_session("nope", None, None).await.unwrap_err().status(), Some(404));
    let err = c.apply("missing", &Operation::delete("x1")).await.unwrap_err();
    assert_eq!(err.status(), Some(404));
    assert_eq!(c.state("missing").await.unwrap_err().status(), Some(404));
    let conflict = String::from_utf8(FIG2.to_vec()).unwrap().replace("\"X2\"", "\"other\"");
    assert_eq!(c.load_model(conflict.into_bytes()).await.unwrap_err().status(), Some(409));
}

#[tokio::test]
async fn unreachable_server_is_a_transport_error() {
    let c = Client::new("http://127.0.0.1:9");
    assert!(matches!(c.load_model(SEC.to_vec()).await, Err(ClientError::Transport(_))));
}
