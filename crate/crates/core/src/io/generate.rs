//! Seeded random models for benchmarks and randomized tests.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metagraph::{Edge, ElementId};
use crate::model::{derive_none_concerns, AppModel, Component, Concern, CustomizationPoint, Dimension, Mode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub components: usize,
    pub customization_points: usize,
    pub dimensions: usize,
    pub concerns_per_dimension: usize,
    /// Probability that a component (other than the first in its concern's
    /// order) is the output of a requirement edge.
    pub edge_density: f64,
    /// Probability that a generated edge is conjunctive.
    pub and_ratio: f64,
    pub max_invertex: usize,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            components: 100,
            customization_points: 10,
            dimensions: 2,
            concerns_per_dimension: 4,
            edge_density: 0.5,
            and_ratio: 0.5,
            max_invertex: 2,
            seed: 0,
        }
    }
}

impl GeneratorParams {
    pub fn sized(components: usize, seed: u64) -> Self {
        GeneratorParams {
            components,
            customization_points: (components / 10).max(1),
            seed,
            ..GeneratorParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("infeasible generator parameters: {0}")]
pub struct GeneratorError(pub String);

fn check(p: &GeneratorParams) -> Result<(), GeneratorError> {
    let fail = |msg: String| Err(GeneratorError(msg));
    if p.components == 0 || p.customization_points == 0 || p.dimensions == 0 || p.concerns_per_dimension == 0 {
        return fail("all counts must be at least 1".into());
    }
    if p.customization_points > p.components {
        return fail(format!(
            "{} customization points for {} components",
            p.customization_points, p.components
        ));
    }
    if p.components < p.dimensions * p.concerns_per_dimension {
        return fail(format!(
            "{} components cannot populate {} dimensions x {} concerns",
            p.components, p.dimensions, p.concerns_per_dimension
        ));
    }
    if !(0.0..=1.0).contains(&p.edge_density) || !(0.0..=1.0).contains(&p.and_ratio) {
        return fail("probabilities must lie in [0, 1]".into());
    }
    if p.max_invertex == 0 {
        return fail("max_invertex must be at least 1".into());
    }
    Ok(())
}

fn width(n: usize) -> usize {
    n.to_string().len()
}

/// Builds a well-formed model deterministically from `p.seed`.
///
/// Components are dealt round-robin over customization points. Each
/// dimension partitions all components randomly over its concerns, leaving a
/// remainder to the None concern. Inside a concern edges only point forward
/// along a random order of its components, so every concern is acyclic.
pub fn generate_model(p: &GeneratorParams) -> Result<AppModel, GeneratorError> {
    check(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let cw = width(p.components);
    let pw = width(p.customization_points);

    let ids: Vec<ElementId> = (0..p.components).map(|i| format!("c{:0cw$}", i + 1).into()).collect();
    let mut points: Vec<CustomizationPoint> = (0..p.customization_points)
        .map(|i| {
            let id = format!("cp{:0pw$}", i + 1);
            CustomizationPoint {
                name: format!("Point {}", i + 1),
                id,
                components: Default::default(),
            }
        })
        .collect();
    let mut components = Vec::with_capacity(p.components);
    for (i, id) in ids.iter().enumerate() {
        let point = &mut points[i % p.customization_points];
        point.components.insert(id.clone());
        components.push(Component {
            id: id.clone(),
            point: point.id.clone(),
            label: format!("Component {}", i + 1),
            description: None,
        });
    }

    let mut edge_counter = 0usize;
    let mut dimensions = Vec::with_capacity(p.dimensions);
    for d in 0..p.dimensions {
        let mut order = ids.clone();
        order.shuffle(&mut rng);
        let k = p.concerns_per_dimension;
        let mut buckets: Vec<Vec<ElementId>> = vec![Vec::new(); k + 1];
        for (i, x) in order.into_iter().enumerate() {
            let b = if i < k { i } else { rng.random_range(0..=k) };
            buckets[b].push(x);
        }
        buckets.truncate(k);

        let mut concerns = Vec::with_capacity(k);
        for (ci, members) in buckets.into_iter().enumerate() {
            let mut concern = Concern::new(format!("d{}k{}", d + 1, ci + 1), format!("Concern {}.{}", d + 1, ci + 1))
                .with_components(members.iter().cloned());
            for (pos, x) in members.iter().enumerate().skip(1) {
                if !rng.random_bool(p.edge_density) {
                    continue;
                }
                let fan_in = rng.random_range(1..=p.max_invertex.min(pos));
                let invertex: Vec<ElementId> = members[..pos].choose_multiple(&mut rng, fan_in).cloned().collect();
                let mode = if rng.random_bool(p.and_ratio) { Mode::And } else { Mode::Or };
                edge_counter += 1;
                concern = concern.with_edge(Edge::new(format!("e{edge_counter:06}"), invertex, [x.clone()]), mode);
            }
            concerns.push(concern);
        }
        dimensions.push(Dimension::new(format!("d{}", d + 1), format!("Dimension {}", d + 1), concerns));
    }

    let model = AppModel::new(
        format!("gen-{}-{}", p.components, p.seed),
        "1",
        points,
        components,
        dimensions,
    )
    .map_err(|e| GeneratorError(e.to_string()))?;
    Ok(derive_none_concerns(model))
}
