//! Latency harness: in-process runs over model sizes and HTTP runs over
//! client concurrency levels.

use std::collections::BTreeMap;
use std::io::Write;
use std::net::SocketAddr;
use std::time::{Duration, Instant};

use metacust_client::Client;
use metacust_core::engine::apply;
use metacust_core::io::{generate_model, save_model, GeneratorError, GeneratorParams};
use metacust_core::workload::{summarize, valid_biased_ops, LatencySummary, Workload};
use metacust_core::{AppModel, Customization};
use serde::Serialize;

/// Model size used for the concurrency runs.
pub const CONCURRENCY_MODEL_SIZE: usize = 500;
pub const BENCH_TENANT: &str = "bench";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub run: usize,
    pub model_size: usize,
    pub op: &'static str,
    pub concurrency: usize,
    pub latency_us: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub model_size: usize,
    pub concurrency: usize,
    pub op: &'static str,
    pub summary: LatencySummary,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Operations whose decision differed from the serial replay, or whose
    /// request failed.
    pub failures: Vec<String>,
    /// Closure precomputation time per model size, kept out of the op rows.
    pub closure_ms: BTreeMap<usize, f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error("cannot start service: {0}")]
    Service(#[from] metacust_service::ServeError),
    #[error("service request failed: {0}")]
    Client(#[from] metacust_client::ClientError),
    #[error("cannot write csv: {0}")]
    Csv(#[from] csv::Error),
}

impl BenchReport {
    pub fn merge(&mut self, other: BenchReport) {
        let offset = self.runs();
        self.rows
            .extend(other.rows.into_iter().map(|r| BenchRow { run: r.run + offset, ..r }));
        self.failures.extend(other.failures);
        self.closure_ms.extend(other.closure_ms);
    }

    pub fn runs(&self) -> usize {
        self.rows.iter().map(|r| r.run + 1).max().unwrap_or(0)
    }

    /// Summaries per (model size, concurrency), first over all ops and then
    /// per op kind.
    pub fn summaries(&self) -> Vec<GroupSummary> {
        let mut groups: BTreeMap<(usize, usize, &'static str), Vec<u64>> = BTreeMap::new();
        for r in &self.rows {
            groups.entry((r.model_size, r.concurrency, "all")).or_default().push(r.latency_us);
            groups.entry((r.model_size, r.concurrency, r.op)).or_default().push(r.latency_us);
        }
        groups
            .into_iter()
            .filter_map(|((model_size, concurrency, op), lat)| {
                summarize(&lat).map(|summary| GroupSummary {
                    model_size,
                    concurrency,
                    op,
                    summary,
                })
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), BenchError> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn render_summary(&self) -> String {
        let mut s = String::from("model_size concurrency op     count  median_us  p95_us  mean_us\n");
        for g in self.summaries() {
            s.push_str(&format!(
                "{:>10} {:>11} {:<6} {:>5} {:>10} {:>7} {:>8.1}\n",
                g.model_size, g.concurrency, g.op, g.summary.count, g.summary.median_us, g.summary.p95_us, g.summary.mean_us
            ));
        }
        for (size, ms) in &self.closure_ms {
            s.push_str(&format!("closure precompute size={size}: {ms:.2} ms\n"));
        }
        s
    }
}

fn micros(d: Duration) -> u64 {
    d.as_micros().try_into().unwrap_or(u64::MAX)
}

pub fn bench_model(size: usize, seed: u64) -> Result<AppModel, GeneratorError> {
    generate_model(&GeneratorParams::sized(size, seed))
}

/// Time to build the closure of every concern, in milliseconds.
pub fn closure_precompute_ms(m: &AppModel) -> f64 {
    let start = Instant::now();
    for c in m.concern_ids() {
        if let Some(g) = m.concern_graph(c) {
            std::hint::black_box(g.closure());
        }
    }
    start.elapsed().as_secs_f64() * 1e3
}

/// One in-process run of `ops` operations per model size.
pub fn run_sizes(sizes: &[usize], ops: usize, seed: u64) -> Result<BenchReport, BenchError> {
    let mut report = BenchReport::default();
    for (run, &size) in sizes.iter().enumerate() {
        let m = bench_model(size, seed)?;
        report.closure_ms.insert(size, closure_precompute_ms(&m));
        let w = valid_biased_ops(&m, BENCH_TENANT, ops, seed);
        let mut td = Customization::new(&m, BENCH_TENANT);
        for (i, (op, expected)) in w.ops.iter().zip(&w.expected).enumerate() {
            let start = Instant::now();
            let d = apply(&m, &mut td, op);
            let latency_us = micros(start.elapsed());
            if &d != expected || !d.is_valid() {
                report
                    .failures
                    .push(format!("size {size} op {i}: {:?} {:?}", d.verdict, d.reason));
            }
            report.rows.push(BenchRow {
                run,
                model_size: size,
                op: op.kind(),
                concurrency: 1,
                latency_us,
            });
        }
    }
    Ok(report)
}

/// Splits `total` operations over `clients` as evenly as possible.
pub fn split_ops(total: usize, clients: usize) -> Vec<usize> {
    (0..clients)
        .map(|i| total / clients + usize::from(i < total % clients))
        .collect()
}

/// Workload of client `i` at one concurrency level.
pub fn client_workload(m: &AppModel, ops: usize, seed: u64, client: usize) -> Workload {
    valid_biased_ops(m, BENCH_TENANT, ops, seed.wrapping_add(client as u64))
}

/// Starts the service in-process on an ephemeral port and runs, for each
/// level, `ops` operations split over that many concurrent clients, each on
/// its own session. Every decision is compared with the client's serial
/// replay.
pub async fn run_concurrency(levels: &[usize], ops: usize, seed: u64) -> Result<BenchReport, BenchError> {
    let config = metacust_service::Config {
        listen: SocketAddr::from(([127, 0, 0, 1], 0)),
        ..Default::default()
    };
    let (addr, server) = metacust_service::spawn(config).await?;
    let result = drive(addr, levels, ops, seed).await;
    server.abort();
    result
}

async fn drive(addr: SocketAddr, levels: &[usize], ops: usize, seed: u64) -> Result<BenchReport, BenchError> {
    let m = bench_model(CONCURRENCY_MODEL_SIZE, seed)?;
    let client = Client::new(format!("http://{addr}"));
    let loaded = client.load_model(save_model(&m)).await?;
    let mut report = BenchReport::default();

    for (run, &level) in levels.iter().enumerate() {
        let mut tasks = Vec::with_capacity(level);
        for (i, n) in split_ops(ops, level).into_iter().enumerate() {
            let w = client_workload(&m, n, seed, i);
            let client = client.clone();
            let model_id = loaded.id.clone();
            tasks.push(tokio::spawn(async move { client_run(client, model_id, w, i).await }));
        }
        for task in tasks {
            let (samples, failures) = match task.await {
                Ok(r) => r,
                Err(e) => (Vec::new(), vec![format!("client task panicked: {e}")]),
            };
            report.failures.extend(failures);
            report.rows.extend(samples.into_iter().map(|(op, latency_us)| BenchRow {
                run,
                model_size: CONCURRENCY_MODEL_SIZE,
                op,
                concurrency: level,
                latency_us,
            }));
        }
    }
    Ok(report)
}

async fn client_run(
    client: Client,
    model_id: String,
    w: Workload,
    index: usize,
) -> (Vec<(&'static str, u64)>, Vec<String>) {
    let mut samples = Vec::with_capacity(w.ops.len());
    let mut failures = Vec::new();
    if w.ops.is_empty() {
        return (samples, failures);
    }
    let session = match client.create_session(&model_id, Some(BENCH_TENANT), None).await {
        Ok(s) => s.session,
        Err(e) => return (samples, vec![format!("client {index}: cannot create session: {e}")]),
    };
    for (i, (op, expected)) in w.ops.iter().zip(&w.expected).enumerate() {
        let start = Instant::now();
        let result = client.apply(&session, op).await;
        let latency_us = micros(start.elapsed());
        match result {
            Ok(d) if &d == expected => {}
            Ok(d) => failures.push(format!("client {index} op {i}: got {:?}, expected {:?}", d.reason, expected.reason)),
            Err(e) => failures.push(format!("client {index} op {i}: {e}")),
        }
        samples.push((op.kind(), latency_us));
    }
    (samples, failures)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_even_and_complete() {
        assert_eq!(split_ops(10, 4), vec![3, 3, 2, 2]);
        assert_eq!(split_ops(1000, 16).iter().sum::<usize>(), 1000);
        assert_eq!(split_ops(2, 4), vec![1, 1, 0, 0]);
    }

    #[test]
    fn size_mode_rows_and_summaries() {
        let r = run_sizes(&[100, 200], 50, 3).unwrap();
        assert_eq!(r.rows.len(), 100);
        assert_eq!(r.runs(), 2);
        assert!(r.failures.is_empty(), "{:?}", r.failures);
        let all: Vec<_> = r.summaries().into_iter().filter(|g| g.op == "all").collect();
        assert_eq!(all.len(), 2);
        assert_eq!(all.iter().map(|g| g.summary.count).sum::<usize>(), 100);

        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().next(), Some("run,model_size,op,concurrency,latency_us"));
        assert_eq!(text.lines().count(), 101);
    }

    #[test]
    fn merge_renumbers_runs() {
        let mut a = run_sizes(&[100], 5, 1).unwrap();
        let b = run_sizes(&[100], 5, 1).unwrap();
        a.merge(b);
        assert_eq!(a.runs(), 2);
        assert_eq!(a.rows.len(), 10);
    }
}
