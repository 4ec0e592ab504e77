//! Built-in scenario files, in their compact form.

use std::collections::BTreeMap;

use anyhow::bail;
use num_rational::BigRational;
use qagree::classical::{pooling_model, uniform_product_box, zero_one_box, zero_one_signed_model};
use qagree::scenarios::{
    example1_property_vector, example1_state, example2_property_vector, example2_state,
};

use crate::format::{
    vector_to_lit, BoxSpec, Body, ClassicalSpec, EventSpec, MeasurementSpec, PartitionSpec,
    PropertySpec, QuantumSpec, ScenarioFile, StateSpec,
};

pub struct Entry {
    pub name: &'static str,
    pub kind: &'static str,
    pub summary: &'static str,
}

pub const ENTRIES: &[Entry] = &[
    Entry {
        name: "example1",
        kind: "quantum",
        summary: "4x6x2 commuting scenario (parameter theta, default pi/3); common certainty 1/3",
    },
    Entry {
        name: "example2",
        kind: "quantum",
        summary: "3x2x2 scenario, E not commuting with Alice; CCD at (1/2, 1) with weight 2/3",
    },
    Entry {
        name: "pooling",
        kind: "classical",
        summary: "four states in a 2x2 grid; common certainty of 1/2, pooled posteriors 1 or 0",
    },
    Entry {
        name: "zero-one-box",
        kind: "box",
        summary: "no-signaling box on {a, b, e} with 0-1 disagreement",
    },
    Entry {
        name: "product-box",
        kind: "box",
        summary: "independent uniform outcomes in every context",
    },
    Entry {
        name: "signed-model",
        kind: "classical",
        summary: "signed measure on {0,1}^{a,b,e} realizing zero-one-box",
    },
];

fn subspaces(factor: usize, groups: &[&[usize]]) -> MeasurementSpec {
    MeasurementSpec::Subspaces {
        factor,
        subspaces: groups.iter().map(|g| g.to_vec()).collect(),
    }
}

pub fn example1_file(theta: f64) -> ScenarioFile {
    ScenarioFile::new(Body::Quantum(QuantumSpec {
        name: Some("example1".into()),
        parameters: BTreeMap::from([("theta".to_string(), theta)]),
        dims: vec![4, 6, 2],
        roles: None,
        state: StateSpec::Vector(vector_to_lit(&example1_state())),
        alice: subspaces(0, &[&[0, 1], &[2, 3]]),
        bob: subspaces(1, &[&[0, 1], &[2, 3], &[4, 5]]),
        property: PropertySpec {
            factors: Some(vec![2]),
            vector: Some(vector_to_lit(&example1_property_vector(theta))),
            subspace: None,
            projector: None,
        },
    }))
}

pub fn example2_file() -> ScenarioFile {
    ScenarioFile::new(Body::Quantum(QuantumSpec {
        name: Some("example2".into()),
        parameters: BTreeMap::new(),
        dims: vec![3, 2, 2],
        roles: None,
        state: StateSpec::Vector(vector_to_lit(&example2_state())),
        alice: subspaces(0, &[&[0], &[1], &[2]]),
        bob: subspaces(1, &[&[0], &[1]]),
        property: PropertySpec {
            factors: Some(vec![0, 2]),
            vector: Some(vector_to_lit(&example2_property_vector())),
            subspace: None,
            projector: None,
        },
    }))
}

pub fn builtin(name: &str, theta: Option<f64>) -> anyhow::Result<ScenarioFile> {
    if theta.is_some() && name != "example1" {
        bail!("only example1 takes --theta");
    }
    let named = |mut body: Body| {
        let label = Some(name.to_string());
        match &mut body {
            Body::Quantum(q) => q.name = label,
            Body::Classical(c) => c.name = label,
            Body::Box(b) => b.name = label,
        }
        ScenarioFile::new(body)
    };
    Ok(match name {
        "example1" => example1_file(theta.unwrap_or(std::f64::consts::FRAC_PI_3)),
        "example2" => example2_file(),
        "pooling" => named(Body::Classical(ClassicalSpec::from_model(
            &pooling_model::<BigRational>(),
        ))),
        "zero-one-box" => named(Body::Box(BoxSpec::from_box(&zero_one_box::<BigRational>()))),
        "product-box" => named(Body::Box(BoxSpec::from_box(
            &uniform_product_box::<BigRational>(),
        ))),
        "signed-model" => {
            let mut spec = ClassicalSpec::from_model(&zero_one_signed_model::<BigRational>());
            spec.alice = PartitionSpec::Label("a".into());
            spec.bob = PartitionSpec::Label("b".into());
            spec.event = EventSpec::Outcome {
                label: "e".into(),
                outcome: 1,
            };
            named(Body::Classical(spec))
        }
        other => {
            let names: Vec<&str> = ENTRIES.iter().map(|e| e.name).collect();
            bail!("unknown example '{other}' (known: {})", names.join(", "))
        }
    })
}
