//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails. Time limits are pinned below.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use metacust_cli::bench::{run_concurrency, run_sizes, BenchReport, CONCURRENCY_MODEL_SIZE};
use metacust_core::io::{load_customization, load_model, render_matrix, save_customization, save_model};
use metacust_core::metagraph::ElementSet;
use metacust_core::{EdgeId, ElementId, Metagraph, Triple, TripleMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FIG2_MODEL: &[u8] = include_bytes!("../../../testdata/fig2.model.json");
const FIG2_ADJACENCY: &str = include_str!("../../../testdata/fig2.adjacency.txt");
const FIG2_CLOSURE: &str = include_str!("../../../testdata/fig2.closure.txt");
const SEC_MODEL: &[u8] = include_bytes!("../../../testdata/sec.model.json");
const SEC_CUSTOMIZATION: &[u8] = include_bytes!("../../../testdata/sec.customization.json");
const SEC_FLOW_CUSTOMIZATION: &[u8] = include_bytes!("../../../testdata/sec_flow.customization.json");

const ADJACENCY_LIMIT: Duration = Duration::from_millis(1);
const CLOSURE_ORACLE_LIMIT: Duration = Duration::from_secs(10);
const SOUNDNESS_LIMIT: Duration = Duration::from_secs(60);
const BENCH_LIMIT: Duration = Duration::from_secs(300);

const CLOSURE_GRAPHS: usize = 200;
const SOUNDNESS_PAIRS: usize = 1000;
const SOUNDNESS_COMPONENTS: usize = 50;
const SOUNDNESS_OPS: usize = 200;
const BENCH_OPS: usize = 1000;
const CONCURRENCY_LEVELS: [usize; 5] = [1, 2, 4, 8, 16];

type Outcome = Result<String, String>;

fn set(xs: &[&str]) -> ElementSet {
    xs.iter().map(|x| ElementId::new(*x)).collect()
}

fn triple(ci: &[&str], co: &[&str], path: &[&str]) -> Triple {
    Triple::new(set(ci), set(co), path.iter().map(|e| EdgeId::new(*e)).collect())
}

fn fig2_graph() -> Metagraph {
    let m = load_model(FIG2_MODEL).expect("fig2 model loads");
    m.concern_graph("c").expect("concern c").clone()
}

fn matrix_of(g: &Metagraph, cells: &[(&str, &str, Triple)]) -> TripleMatrix {
    let mut m = TripleMatrix::empty(g.elements().clone());
    for (s, t, tr) in cells {
        m.insert(ElementId::new(*s), ElementId::new(*t), tr.clone());
    }
    m
}

fn fig2_adjacency_cells() -> Vec<(&'static str, &'static str, Triple)> {
    vec![
        ("x1", "x3", triple(&["x2"], &["x4"], &["e1"])),
        ("x1", "x4", triple(&["x2"], &["x3"], &["e1"])),
        ("x2", "x3", triple(&["x1"], &["x4"], &["e1"])),
        ("x2", "x4", triple(&["x1"], &["x3"], &["e1"])),
        ("x2", "x5", triple(&[], &[], &["e2"])),
        ("x4", "x6", triple(&["x5"], &[], &["e3"])),
        ("x5", "x6", triple(&["x4"], &[], &["e3"])),
    ]
}

fn adjacency_example() -> Outcome {
    let g = fig2_graph();
    let start = Instant::now();
    let a = g.adjacency();
    let elapsed = start.elapsed();
    support::same_cells(&a, &matrix_of(&g, &fig2_adjacency_cells()))?;
    if render_matrix(&a) != FIG2_ADJACENCY {
        return Err("rendering differs from golden text".into());
    }
    if elapsed > ADJACENCY_LIMIT {
        return Err(format!("took {elapsed:?}, limit {ADJACENCY_LIMIT:?}"));
    }
    Ok(format!("7 cells, {elapsed:?}"))
}

fn closure_example() -> Outcome {
    let g = fig2_graph();
    let mut cells = fig2_adjacency_cells();
    cells.extend([
        ("x1", "x6", triple(&["x2", "x5"], &["x3", "x4"], &["e1", "e3"])),
        ("x2", "x6", triple(&["x1", "x5"], &["x3", "x4"], &["e1", "e3"])),
        ("x2", "x6", triple(&["x4"], &["x5"], &["e2", "e3"])),
    ]);
    let c = g.closure();
    if c.truncated {
        return Err("closure reported truncation".into());
    }
    support::same_cells(&c.matrix, &matrix_of(&g, &cells))?;
    let pair = c.matrix.cell("x2", "x6").map_or(0, |cell| cell.len());
    if pair != 2 {
        return Err(format!("cell (x2,x6) holds {pair} triples"));
    }
    if render_matrix(&c.matrix) != FIG2_CLOSURE {
        return Err("rendering differs from golden text".into());
    }
    Ok("10 triples, (x2,x6) holds both paths".into())
}

fn path_examples() -> Outcome {
    let g = fig2_graph();
    let seq = [EdgeId::new("e1"), EdgeId::new("e3")];
    let check = g
        .is_simple_path(&seq, &ElementId::new("x2"), &ElementId::new("x6"))
        .map_err(|e| e.to_string())?;
    if !check.holds || check.coinput != set(&["x1", "x5"]) || check.cooutput != set(&["x3", "x4"]) || check.length != 2 {
        return Err(format!("<e1,e3> from x2 to x6: {check:?}"));
    }
    let edges = ["e1", "e2", "e3"].iter().map(|e| EdgeId::new(*e)).collect();
    if !g.is_metapath(&edges, &set(&["x1", "x2"]), &set(&["x6"])).map_err(|e| e.to_string())? {
        return Err("{e1,e2,e3} is not a metapath from {x1,x2} to {x6}".into());
    }
    Ok("simple path and metapath hold".into())
}

fn closure_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let start = Instant::now();
    for i in 0..CLOSURE_GRAPHS {
        let g = support::random_metagraph(&mut rng, 8, 6);
        let c = g.closure();
        if c.truncated {
            return Err(format!("graph {i}: truncated"));
        }
        support::same_cells(&c.matrix, &support::brute_closure(&g)).map_err(|e| format!("graph {i}: {e}"))?;
    }
    let elapsed = start.elapsed();
    if elapsed > CLOSURE_ORACLE_LIMIT {
        return Err(format!("took {elapsed:?}, limit {CLOSURE_ORACLE_LIMIT:?}"));
    }
    Ok(format!("{CLOSURE_GRAPHS} graphs, {elapsed:?}"))
}

fn soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let hand = support::hand_models();
    let start = Instant::now();
    for i in 0..SOUNDNESS_PAIRS {
        let m = if i < hand.len() * 10 {
            hand[i % hand.len()].clone()
        } else {
            support::random_model(&mut rng, SOUNDNESS_COMPONENTS)
        };
        let ops = support::uniform_ops(&mut rng, &m, SOUNDNESS_OPS);
        support::check_soundness(&m, &ops).map_err(|e| format!("pair {i}: {e}"))?;
    }
    let elapsed = start.elapsed();
    if elapsed > SOUNDNESS_LIMIT {
        return Err(format!("took {elapsed:?}, limit {SOUNDNESS_LIMIT:?}"));
    }
    Ok(format!("{SOUNDNESS_PAIRS} pairs, {elapsed:?}"))
}

fn determinism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..100 {
        let m = support::random_model(&mut rng, 30);
        let ops = support::uniform_ops(&mut rng, &m, 100);
        if support::replay_bytes(&m, &ops) != support::replay_bytes(&m, &ops) {
            return Err(format!("pair {i}: replays differ"));
        }
        let reloaded = load_model(&save_model(&m)).map_err(|e| e.to_string())?;
        if support::replay_bytes(&reloaded, &ops) != support::replay_bytes(&m, &ops) {
            return Err(format!("pair {i}: replay differs after a model round trip"));
        }
    }
    Ok("100 pairs byte-identical".into())
}

fn medians(report: &BenchReport) -> String {
    report
        .summaries()
        .iter()
        .filter(|g| g.op == "all")
        .map(|g| format!("{}x{}:{}us", g.model_size, g.concurrency, g.summary.median_us))
        .collect::<Vec<_>>()
        .join(" ")
}

fn bench() -> Outcome {
    let start = Instant::now();
    let sizes: Vec<usize> = (1..=10).map(|k| k * 100).collect();
    let serial = run_sizes(&sizes, BENCH_OPS, 0).map_err(|e| e.to_string())?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let concurrent = runtime
        .block_on(run_concurrency(&CONCURRENCY_LEVELS, BENCH_OPS, 0))
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    if !serial.failures.is_empty() || !concurrent.failures.is_empty() {
        let first = serial.failures.iter().chain(&concurrent.failures).next().unwrap();
        return Err(format!("{} failures, first: {first}", serial.failures.len() + concurrent.failures.len()));
    }
    for size in &sizes {
        let n = serial.rows.iter().filter(|r| r.model_size == *size).count();
        if n != BENCH_OPS {
            return Err(format!("size {size}: {n} rows"));
        }
    }
    for level in CONCURRENCY_LEVELS {
        let n = concurrent.rows.iter().filter(|r| r.concurrency == level && r.model_size == CONCURRENCY_MODEL_SIZE).count();
        if n != BENCH_OPS {
            return Err(format!("concurrency {level}: {n} rows"));
        }
    }
    if elapsed > BENCH_LIMIT {
        return Err(format!("took {elapsed:?}, limit {BENCH_LIMIT:?}"));
    }
    Ok(format!("{elapsed:?}; medians {} {}", medians(&serial), medians(&concurrent)))
}

fn round_trip() -> Outcome {
    let fig2 = load_model(FIG2_MODEL).map_err(|e| e.to_string())?;
    if save_model(&fig2) != FIG2_MODEL {
        return Err("fig2 model does not round-trip".into());
    }
    let sec = load_model(SEC_MODEL).map_err(|e| e.to_string())?;
    if save_model(&sec) != SEC_MODEL {
        return Err("sec model does not round-trip".into());
    }
    for (name, bytes) in [("sec", SEC_CUSTOMIZATION), ("sec_flow", SEC_FLOW_CUSTOMIZATION)] {
        let td = load_customization(bytes, &sec).map_err(|e| format!("{name}: {e}"))?;
        if save_customization(&td) != bytes {
            return Err(format!("{name} customization does not round-trip"));
        }
    }
    let g = fig2.concern_graph("c").ok_or("concern c")?;
    if render_matrix(&g.adjacency()) != FIG2_ADJACENCY || render_matrix(&g.closure().matrix) != FIG2_CLOSURE {
        return Err("matrix text differs from golden files".into());
    }
    Ok("4 documents and 2 matrix texts byte-identical".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("adjacency matrix of the example concern", adjacency_example),
        ("closure matrix of the example concern", closure_example),
        ("simple path and metapath examples", path_examples),
        ("closure agrees with brute force on random graphs", closure_oracle),
        ("engine soundness on random models and ops", soundness),
        ("replay determinism", determinism),
        ("benchmark sizes and concurrency", bench),
        ("golden document and matrix round trips", round_trip),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
