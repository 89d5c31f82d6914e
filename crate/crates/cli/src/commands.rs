use std::fs;
use std::io::Write;
use std::path::Path;

use metacust_client::Client;
use metacust_core::engine::replay;
use metacust_core::io::{
    generate_model, load_model, matrix_json, render_matrix, save_customization, save_model, GeneratorParams, IoError,
};
use metacust_core::model::WellFormednessReport;
use metacust_core::{AppModel, Decision, ElementId, Metagraph, Operation};

use crate::bench::{run_concurrency, run_sizes, BenchReport};
use crate::{parse_levels, BenchArgs, Cli, Command, GenerateArgs, MatrixArgs, ReplayArgs, ServeArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or malformed input: exit code 2.
    #[error("{0}")]
    Input(String),
    /// The input was understood but the answer is negative: exit code 1.
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Check { model } => check(&model),
        Command::Matrix(a) => matrix(a),
        Command::Replay(a) => replay_cmd(a),
        Command::Generate(a) => generate(a),
        Command::Bench(a) => bench(a),
        Command::Serve(a) => serve(a),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Domain(format!("cannot write {}: {e}", path.display())))
}

fn render_report(report: &WellFormednessReport) -> String {
    report
        .violations
        .iter()
        .map(|v| format!("{:?} {}: {}\n", v.code, v.location, v.detail))
        .collect()
}

/// Parse and schema problems are input errors; an ill-formed model is a
/// domain failure whose report is printed first.
fn open_model(path: &Path) -> Result<AppModel, CliError> {
    match load_model(&read(path)?) {
        Ok(m) => Ok(m),
        Err(IoError::ModelInvalid(report)) => {
            print!("{}", render_report(&report));
            Err(CliError::Domain(format!(
                "{}: model is not well formed ({} violations)",
                path.display(),
                report.violations.len()
            )))
        }
        Err(e) => Err(CliError::Input(format!("{}: {e}", path.display()))),
    }
}

fn check(path: &Path) -> Result<(), CliError> {
    let m = open_model(path)?;
    println!(
        "ok: model {} revision {}: {} components, {} concerns, {} edges",
        m.id,
        m.revision,
        m.components().count(),
        m.concern_count(),
        m.app_graph().edge_count()
    );
    Ok(())
}

fn matrix(a: MatrixArgs) -> Result<(), CliError> {
    let m = open_model(&a.model)?;
    let graph: &Metagraph = match &a.concern {
        Some(c) => m
            .concern_graph(c)
            .ok_or_else(|| CliError::Domain(format!("unknown concern `{c}`")))?,
        None => m.app_graph(),
    };
    let (mut matrix, truncated) = if a.closure {
        let c = graph.closure();
        (c.matrix, c.truncated)
    } else {
        (graph.adjacency(), false)
    };
    if let Some(t) = &a.target {
        if !graph.contains(t) {
            return Err(CliError::Domain(format!("unknown element `{t}`")));
        }
        matrix = matrix.column(&ElementId::new(t.as_str()));
    }
    if a.json {
        let v = matrix_json(&matrix, truncated);
        println!("{}", serde_json::to_string_pretty(&v).expect("json values serialize"));
    } else {
        print!("{}", render_matrix(&matrix));
    }
    Ok(())
}

fn read_ops(path: &Path) -> Result<Vec<Operation>, CliError> {
    serde_json::from_slice(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn decision_line(d: &Decision) -> String {
    serde_json::to_string(d).expect("decisions serialize")
}

fn replay_cmd(a: ReplayArgs) -> Result<(), CliError> {
    let ops = read_ops(&a.ops)?;
    if let Some(server) = &a.server {
        let bytes = read(&a.model)?;
        return runtime()?.block_on(replay_remote(server, bytes, &ops, &a));
    }
    let m = open_model(&a.model)?;
    let outcome = replay(&m, &a.tenant, &ops);
    let shown = match (a.strict, outcome.first_invalid) {
        (true, Some(i)) => i + 1,
        _ => outcome.decisions.len(),
    };
    for d in &outcome.decisions[..shown] {
        println!("{}", decision_line(d));
    }
    if let (true, Some(i)) = (a.strict, outcome.first_invalid) {
        return Err(CliError::Domain(format!("operation {i} is invalid")));
    }
    if let Some(out) = &a.out {
        write(out, &save_customization(&outcome.customization))?;
    }
    Ok(())
}

async fn replay_remote(server: &str, model: Vec<u8>, ops: &[Operation], a: &ReplayArgs) -> Result<(), CliError> {
    let remote = |e: metacust_client::ClientError| match e.status() {
        Some(400) => CliError::Input(e.to_string()),
        _ => CliError::Domain(e.to_string()),
    };
    let client = Client::new(server);
    let loaded = client.load_model(model).await.map_err(remote)?;
    let session = client
        .create_session(&loaded.id, Some(&a.tenant), None)
        .await
        .map_err(remote)?;
    for (i, op) in ops.iter().enumerate() {
        let d = client.apply(&session.session, op).await.map_err(remote)?;
        println!("{}", decision_line(&d));
        if a.strict && !d.is_valid() {
            return Err(CliError::Domain(format!("operation {i} is invalid")));
        }
    }
    if let Some(out) = &a.out {
        let state = client.state(&session.session).await.map_err(remote)?;
        write(out, &state)?;
    }
    Ok(())
}

fn generate(a: GenerateArgs) -> Result<(), CliError> {
    let params = GeneratorParams {
        components: a.components,
        customization_points: a.points.unwrap_or((a.components / 10).max(1)),
        dimensions: a.dimensions,
        concerns_per_dimension: a.concerns_per_dimension,
        edge_density: a.edge_density,
        and_ratio: a.and_ratio,
        max_invertex: a.max_invertex,
        seed: a.seed,
    };
    let m = generate_model(&params).map_err(|e| CliError::Domain(e.to_string()))?;
    let bytes = save_model(&m);
    match &a.out {
        Some(path) => write(path, &bytes)?,
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::Domain(e.to_string()))?,
    }
    eprintln!(
        "generated {}: {} components, {} customization points, {} concerns, {} edges",
        m.id,
        m.components().count(),
        m.points().count(),
        m.concern_count(),
        m.app_graph().edge_count()
    );
    Ok(())
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Runtime::new().map_err(|e| CliError::Domain(format!("cannot start runtime: {e}")))
}

fn bench(a: BenchArgs) -> Result<(), CliError> {
    let levels = a
        .concurrency
        .as_deref()
        .map(parse_levels)
        .transpose()
        .map_err(CliError::Input)?;
    let sizes = if a.sizes.is_empty() && levels.is_none() {
        (1..=10).map(|i| i * 100).collect()
    } else {
        a.sizes.clone()
    };
    if sizes.contains(&0) {
        return Err(CliError::Input("model sizes must be positive".into()));
    }

    let mut report = BenchReport::default();
    if !sizes.is_empty() {
        report.merge(run_sizes(&sizes, a.ops, a.seed).map_err(|e| CliError::Domain(e.to_string()))?);
    }
    if let Some(levels) = levels {
        let r = runtime()?
            .block_on(run_concurrency(&levels, a.ops, a.seed))
            .map_err(|e| CliError::Domain(e.to_string()))?;
        report.merge(r);
    }

    if let Some(path) = &a.csv {
        let file = fs::File::create(path).map_err(|e| CliError::Domain(format!("cannot write {}: {e}", path.display())))?;
        report.write_csv(file).map_err(|e| CliError::Domain(e.to_string()))?;
    }
    print!("{}", report.render_summary());
    if !report.failures.is_empty() {
        for f in report.failures.iter().take(20) {
            eprintln!("{f}");
        }
        return Err(CliError::Domain(format!("{} operations failed", report.failures.len())));
    }
    Ok(())
}

fn serve(a: ServeArgs) -> Result<(), CliError> {
    let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).try_init();
    let config = metacust_service::Config {
        listen: a.listen,
        snapshot_dir: a.snapshot_dir,
        max_sessions: a.max_sessions,
    };
    runtime()?
        .block_on(metacust_service::serve(config))
        .map_err(|e| CliError::Domain(e.to_string()))
}
