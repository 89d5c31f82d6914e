//! One task per session: operations arrive through a mailbox and are
//! discharged strictly in arrival order.

use std::path::PathBuf;

use metacust_core::engine::Session;
use metacust_core::io::save_customization;
use metacust_core::{Decision, Operation};
use serde_json::json;
use tokio::io::AsyncWriteExt;
use tokio::sync::{mpsc, oneshot};

const MAILBOX: usize = 256;

enum Command {
    Apply(Operation, oneshot::Sender<Decision>),
    State(oneshot::Sender<Vec<u8>>),
}

#[derive(Clone)]
pub struct SessionHandle {
    pub model_id: String,
    tx: mpsc::Sender<Command>,
}

#[derive(Debug, thiserror::Error)]
#[error("session task stopped")]
pub struct SessionGone;

impl SessionHandle {
    pub fn spawn(session: Session, model_id: String, snapshot: Option<PathBuf>) -> Self {
        let (tx, rx) = mpsc::channel(MAILBOX);
        tokio::spawn(run(session, rx, snapshot));
        SessionHandle { model_id, tx }
    }

    pub async fn apply(&self, op: Operation) -> Result<Decision, SessionGone> {
        let (reply, rx) = oneshot::channel();
        self.tx.send(Command::Apply(op, reply)).await.map_err(|_| SessionGone)?;
        rx.await.map_err(|_| SessionGone)
    }

    /// The canonical customization document.
    pub async fn state(&self) -> Result<Vec<u8>, SessionGone> {
        let (reply, rx) = oneshot::channel();
        self.tx.send(Command::State(reply)).await.map_err(|_| SessionGone)?;
        rx.await.map_err(|_| SessionGone)
    }
}

async fn run(mut session: Session, mut rx: mpsc::Receiver<Command>, snapshot: Option<PathBuf>) {
    while let Some(cmd) = rx.recv().await {
        match cmd {
            Command::Apply(op, reply) => {
                let decision = session.apply(op.clone());
                if let Some(path) = &snapshot {
                    if let Err(e) = append_snapshot(path, &session, &op, &decision).await {
                        tracing::warn!(session = %session.id, error = %e, "snapshot append failed");
                    }
                }
                let _ = reply.send(decision);
            }
            Command::State(reply) => {
                let _ = reply.send(save_customization(session.customization()));
            }
        }
    }
}

async fn append_snapshot(
    path: &PathBuf,
    session: &Session,
    op: &Operation,
    decision: &Decision,
) -> std::io::Result<()> {
    let state: serde_json::Value = serde_json::from_slice(&save_customization(session.customization()))?;
    let mut line = serde_json::to_vec(&json!({ "op": op, "decision": decision, "state": state }))?;
    line.push(b'\n');
    let mut file = tokio::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .await?;
    file.write_all(&line).await?;
    file.flush().await
}
