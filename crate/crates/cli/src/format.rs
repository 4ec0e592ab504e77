//! JSON scenario files.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major nested
//! arrays. Rational weights may be written as `"p/q"` strings or integers;
//! any floating-point weight switches the whole model to float arithmetic.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use qagree::classical::{
    BoxContext, ClassicalModel, NoSignalingBox, PhaseSpace, StateSet, Weight,
};
use qagree::linalg::ComplexMatrix;
use qagree::quantum_model::{
    basis_projector, embed_on_factors, Agent, HilbertFactorization, Measurement, Role, Scenario,
};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

pub type Pair = [f64; 2];
pub type MatrixLit = Vec<Vec<Pair>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub format_version: u32,
    #[serde(flatten)]
    pub body: Body,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Body {
    Quantum(QuantumSpec),
    Classical(ClassicalSpec),
    Box(BoxSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, f64>,
    pub dims: Vec<usize>,
    /// Defaults by factor count: `[shared]`, `[alice, bob]`,
    /// `[alice, bob, inaccessible]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roles: Option<Vec<String>>,
    pub state: StateSpec,
    pub alice: MeasurementSpec,
    pub bob: MeasurementSpec,
    pub property: PropertySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSpec {
    Vector(Vec<Pair>),
    Density(MatrixLit),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasurementSpec {
    /// Spans of computational basis states of one factor.
    Subspaces {
        factor: usize,
        subspaces: Vec<Vec<usize>>,
    },
    /// Global projectors.
    Projectors { projectors: Vec<MatrixLit> },
}

/// A projector on the ordered product of `factors` (all factors when
/// omitted), given by exactly one of a unit vector, a list of basis
/// indices, or explicit matrix entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subspace: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projector: Option<MatrixLit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightLit {
    Int(i64),
    Float(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartitionSpec {
    Cells(Vec<Vec<usize>>),
    /// Cells by the outcome of a phase-space measurement.
    Label(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EventSpec {
    States(Vec<usize>),
    Outcome { label: String, outcome: u8 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// State names; defaults to `ω0, ω1, …` or the phase-space assignments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<String>>,
    /// Binary measurement labels; the states are then all assignments
    /// `{0,1}^labels`, first label most significant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_space: Option<Vec<String>>,
    #[serde(default)]
    pub signed: bool,
    pub weights: Vec<WeightLit>,
    pub alice: PartitionSpec,
    pub bob: PartitionSpec,
    pub event: EventSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSpec {
    pub pair: [String; 2],
    /// Over `(0,0), (1,0), (0,1), (1,1)`, first entry of each pair being the
    /// outcome of `pair[0]`.
    pub dist: [WeightLit; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub labels: Vec<String>,
    pub contexts: Vec<ContextSpec>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).context("malformed scenario file")?;
        if file.format_version != FORMAT_VERSION {
            bail!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                file.format_version
            );
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn new(body: Body) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            body,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files always serialize")
    }

    pub fn kind(&self) -> &'static str {
        match self.body {
            Body::Quantum(_) => "quantum",
            Body::Classical(_) => "classical",
            Body::Box(_) => "box",
        }
    }
}

fn complex(p: &Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn pair(z: &Complex64) -> Pair {
    [z.re, z.im]
}

pub fn matrix_from_lit(m: &MatrixLit) -> qagree::Result<ComplexMatrix> {
    ComplexMatrix::from_rows(
        &m.iter()
            .map(|row| row.iter().map(complex).collect())
            .collect::<Vec<_>>(),
    )
}

pub fn matrix_to_lit(m: &ComplexMatrix) -> MatrixLit {
    m.rows().map(|row| row.iter().map(pair).collect()).collect()
}

pub fn vector_from_lit(v: &[Pair]) -> Vec<Complex64> {
    v.iter().map(complex).collect()
}

pub fn vector_to_lit(v: &[Complex64]) -> Vec<Pair> {
    v.iter().map(pair).collect()
}

fn parse_role(s: &str) -> anyhow::Result<Role> {
    Ok(match s {
        "alice" => Role::Alice,
        "bob" => Role::Bob,
        "inaccessible" => Role::Inaccessible,
        "shared" => Role::Shared,
        other => bail!("unknown role '{other}'"),
    })
}

fn role_name(r: Role) -> &'static str {
    match r {
        Role::Alice => "alice",
        Role::Bob => "bob",
        Role::Inaccessible => "inaccessible",
        Role::Shared => "shared",
    }
}

fn default_roles(n: usize) -> anyhow::Result<Vec<Role>> {
    Ok(match n {
        1 => vec![Role::Shared],
        2 => vec![Role::Alice, Role::Bob],
        3 => vec![Role::Alice, Role::Bob, Role::Inaccessible],
        _ => bail!("roles must be given explicitly for {n} factors"),
    })
}

impl QuantumSpec {
    pub fn build(&self) -> anyhow::Result<Scenario> {
        let roles = match &self.roles {
            Some(r) => r.iter().map(|s| parse_role(s)).collect::<anyhow::Result<_>>()?,
            None => default_roles(self.dims.len())?,
        };
        let f = HilbertFactorization::new(self.dims.clone(), roles)?;
        let alice = build_measurement(Agent::Alice, &self.alice, &f).context("alice")?;
        let bob = build_measurement(Agent::Bob, &self.bob, &f).context("bob")?;
        let property = self.property.build(&f).context("property")?;
        Ok(match &self.state {
            StateSpec::Vector(v) => Scenario::from_pure(f, &vector_from_lit(v), alice, bob, property)?,
            StateSpec::Density(m) => Scenario::new(f, matrix_from_lit(m)?, alice, bob, property)?,
        })
    }

    /// Fully explicit description of a scenario.
    pub fn from_scenario(s: &Scenario) -> Self {
        let f = s.factorization();
        let projectors = |m: &Measurement| MeasurementSpec::Projectors {
            projectors: m.projectors().iter().map(matrix_to_lit).collect(),
        };
        Self {
            name: None,
            parameters: BTreeMap::new(),
            dims: f.dims().to_vec(),
            roles: Some(f.roles().iter().map(|&r| role_name(r).to_string()).collect()),
            state: StateSpec::Density(matrix_to_lit(s.rho())),
            alice: projectors(s.alice()),
            bob: projectors(s.bob()),
            property: PropertySpec {
                factors: None,
                vector: None,
                subspace: None,
                projector: Some(matrix_to_lit(s.property())),
            },
        }
    }
}

fn build_measurement(
    agent: Agent,
    spec: &MeasurementSpec,
    f: &HilbertFactorization,
) -> anyhow::Result<Measurement> {
    Ok(match spec {
        MeasurementSpec::Subspaces { factor, subspaces } => {
            Measurement::from_subspaces(agent, subspaces, *factor, f)?
        }
        MeasurementSpec::Projectors { projectors } => Measurement::new(
            agent,
            projectors
                .iter()
                .map(matrix_from_lit)
                .collect::<qagree::Result<_>>()?,
        )?,
    })
}

impl PropertySpec {
    fn build(&self, f: &HilbertFactorization) -> anyhow::Result<ComplexMatrix> {
        let factors: Vec<usize> = self
            .factors
            .clone()
            .unwrap_or_else(|| (0..f.dims().len()).collect());
        let mut local_dim = 1usize;
        for &k in &factors {
            local_dim *= *f.dims().get(k).ok_or_else(|| anyhow!("no factor {k}"))?;
        }
        let local = match (&self.vector, &self.subspace, &self.projector) {
            (Some(v), None, None) => {
                let v = vector_from_lit(v);
                let norm = qagree::linalg::vector_norm(&v);
                if (norm - 1.0).abs() > qagree::TOL {
                    return Err(qagree::Error::NotNormalized { norm }.into());
                }
                ComplexMatrix::projector_onto(&v)?
            }
            (None, Some(idx), None) => basis_projector(local_dim, idx)?,
            (None, None, Some(m)) => matrix_from_lit(m)?,
            _ => bail!("give exactly one of 'vector', 'subspace' or 'projector'"),
        };
        Ok(embed_on_factors(&local, &factors, f)?)
    }
}

/// A parsed weight: exact when written as an integer or `"p/q"`.
#[derive(Debug, Clone, PartialEq)]
pub enum Num {
    Exact(BigRational),
    Float(f64),
}

impl Num {
    pub fn to_f64(&self) -> f64 {
        match self {
            Num::Exact(r) => Weight::to_f64(r),
            Num::Float(x) => *x,
        }
    }
}

pub fn parse_weight(w: &WeightLit) -> anyhow::Result<Num> {
    Ok(match w {
        WeightLit::Int(n) => Num::Exact(BigRational::from_integer(BigInt::from(*n))),
        WeightLit::Float(x) => Num::Float(*x),
        WeightLit::Text(t) => {
            let t = t.trim();
            let (num, den) = t.split_once('/').unwrap_or((t, "1"));
            let num: BigInt = num.trim().parse().with_context(|| format!("bad weight '{t}'"))?;
            let den: BigInt = den.trim().parse().with_context(|| format!("bad weight '{t}'"))?;
            if den.is_zero() {
                bail!("weight '{t}' has zero denominator");
            }
            Num::Exact(BigRational::new(num, den))
        }
    })
}

/// Weight types a file can be read into.
pub trait FromNum: Weight {
    fn from_num(n: &Num) -> Option<Self>;
    /// Literal that reads back as the same value.
    fn to_lit(&self) -> WeightLit;
    /// A command-line value, rounded into this arithmetic if need be.
    fn from_q(n: &Num) -> Self;

    fn exact_text(&self) -> Option<String> {
        match self.to_lit() {
            WeightLit::Text(t) => Some(t),
            _ => None,
        }
    }
}

impl FromNum for BigRational {
    fn from_num(n: &Num) -> Option<Self> {
        match n {
            Num::Exact(r) => Some(r.clone()),
            Num::Float(_) => None,
        }
    }

    fn to_lit(&self) -> WeightLit {
        WeightLit::Text(self.to_string())
    }

    fn from_q(n: &Num) -> Self {
        match n {
            Num::Exact(r) => r.clone(),
            Num::Float(x) => BigRational::from_float(*x).unwrap_or_else(BigRational::zero),
        }
    }
}

impl FromNum for f64 {
    fn from_num(n: &Num) -> Option<Self> {
        Some(n.to_f64())
    }

    fn to_lit(&self) -> WeightLit {
        WeightLit::Float(*self)
    }

    fn from_q(n: &Num) -> Self {
        n.to_f64()
    }
}

/// A probability given on the command line: `p/q` or an integer is exact,
/// anything else is read as a float.
pub fn parse_q(text: &str) -> anyhow::Result<Num> {
    let t = text.trim();
    let n = if t.contains('/') || t.parse::<i64>().is_ok() {
        parse_weight(&WeightLit::Text(t.to_string()))?
    } else {
        Num::Float(t.parse().with_context(|| format!("bad probability '{t}'"))?)
    };
    let x = n.to_f64();
    if !(0.0..=1.0).contains(&x) {
        bail!("probability {t} outside [0, 1]");
    }
    Ok(n)
}

fn all_exact(ws: &[Num]) -> bool {
    ws.iter().all(|w| matches!(w, Num::Exact(_)))
}

fn convert<W: FromNum>(ws: &[Num]) -> Vec<W> {
    ws.iter()
        .map(|w| W::from_num(w).expect("checked exactness"))
        .collect()
}

/// A model or box in whichever arithmetic its file calls for.
#[derive(Debug, Clone, PartialEq)]
pub enum Exactness<E, F> {
    Exact(E),
    Float(F),
}

pub type AnyModel = Exactness<ClassicalModel<BigRational>, ClassicalModel<f64>>;
pub type AnyBox = Exactness<NoSignalingBox<BigRational>, NoSignalingBox<f64>>;

impl ClassicalSpec {
    fn numbers(&self) -> anyhow::Result<Vec<Num>> {
        self.weights.iter().map(parse_weight).collect()
    }

    pub fn is_exact(&self) -> anyhow::Result<bool> {
        Ok(all_exact(&self.numbers()?))
    }

    pub fn build_as<W: FromNum>(&self) -> anyhow::Result<ClassicalModel<W>> {
        let nums = self.numbers()?;
        if nums.iter().any(|n| W::from_num(n).is_none()) {
            bail!("model has floating-point weights and cannot be read exactly");
        }
        let measure: Vec<W> = convert(&nums);
        match &self.phase_space {
            Some(labels) => {
                let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
                let ps = PhaseSpace::binary(&labels);
                let cells = |p: &PartitionSpec| -> anyhow::Result<Vec<Vec<usize>>> {
                    Ok(match p {
                        PartitionSpec::Cells(c) => c.clone(),
                        PartitionSpec::Label(l) => ps.partition_by(l)?,
                    })
                };
                let event = match &self.event {
                    EventSpec::States(s) => s.iter().copied().collect(),
                    EventSpec::Outcome { label, outcome } => ps.event(label, *outcome)?,
                };
                let states = self.states.clone().unwrap_or_else(|| {
                    ps.values
                        .iter()
                        .map(|v| v.iter().map(|x| x.to_string()).collect())
                        .collect()
                });
                let model = ClassicalModel::new(
                    states,
                    measure,
                    cells(&self.alice)?,
                    cells(&self.bob)?,
                    event,
                    self.signed,
                )?;
                Ok(model.with_phase_space(ps)?)
            }
            None => {
                let cells = |p: &PartitionSpec| -> anyhow::Result<Vec<Vec<usize>>> {
                    match p {
                        PartitionSpec::Cells(c) => Ok(c.clone()),
                        PartitionSpec::Label(l) => {
                            bail!("partition by label '{l}' needs a phase_space")
                        }
                    }
                };
                let event: StateSet = match &self.event {
                    EventSpec::States(s) => s.iter().copied().collect(),
                    EventSpec::Outcome { label, .. } => {
                        bail!("event by label '{label}' needs a phase_space")
                    }
                };
                let states = self
                    .states
                    .clone()
                    .unwrap_or_else(|| (0..measure.len()).map(|i| format!("ω{i}")).collect());
                Ok(ClassicalModel::new(
                    states,
                    measure,
                    cells(&self.alice)?,
                    cells(&self.bob)?,
                    event,
                    self.signed,
                )?)
            }
        }
    }

    pub fn build(&self) -> anyhow::Result<AnyModel> {
        Ok(if self.is_exact()? {
            Exactness::Exact(self.build_as()?)
        } else {
            Exactness::Float(self.build_as()?)
        })
    }

    pub fn from_model<W: FromNum>(m: &ClassicalModel<W>) -> Self {
        let (phase_space, states) = match m.phase_space() {
            Some(ps) => (Some(ps.labels.clone()), None),
            None => (None, Some(m.states().to_vec())),
        };
        Self {
            name: None,
            states,
            phase_space,
            signed: m.is_signed(),
            weights: m.measure().iter().map(FromNum::to_lit).collect(),
            alice: PartitionSpec::Cells(m.alice_partition().to_vec()),
            bob: PartitionSpec::Cells(m.bob_partition().to_vec()),
            event: EventSpec::States(m.event().iter().copied().collect()),
        }
    }
}

impl BoxSpec {
    fn numbers(&self) -> anyhow::Result<Vec<[Num; 4]>> {
        self.contexts
            .iter()
            .map(|c| {
                let [a, b, x, y] = &c.dist;
                Ok([
                    parse_weight(a)?,
                    parse_weight(b)?,
                    parse_weight(x)?,
                    parse_weight(y)?,
                ])
            })
            .collect()
    }

    pub fn is_exact(&self) -> anyhow::Result<bool> {
        Ok(self.numbers()?.iter().all(|row| all_exact(row)))
    }

    pub fn build_as<W: FromNum>(&self) -> anyhow::Result<NoSignalingBox<W>> {
        let rows = self.numbers()?;
        let mut contexts = Vec::with_capacity(rows.len());
        for (c, row) in self.contexts.iter().zip(&rows) {
            if row.iter().any(|n| W::from_num(n).is_none()) {
                bail!("box has floating-point entries and cannot be read exactly");
            }
            let dist: Vec<W> = convert(row);
            let dist: [W; 4] = dist.try_into().expect("four entries");
            contexts.push(BoxContext::new(&c.pair[0], &c.pair[1], dist));
        }
        Ok(NoSignalingBox::new(self.labels.clone(), contexts)?)
    }

    pub fn build(&self) -> anyhow::Result<AnyBox> {
        Ok(if self.is_exact()? {
            Exactness::Exact(self.build_as()?)
        } else {
            Exactness::Float(self.build_as()?)
        })
    }

    pub fn from_box<W: FromNum>(b: &NoSignalingBox<W>) -> Self {
        Self {
            name: None,
            labels: b.labels().to_vec(),
            contexts: b
                .contexts()
                .iter()
                .map(|c| ContextSpec {
                    pair: [c.first.clone(), c.second.clone()],
                    dist: c.dist.clone().map(|w| w.to_lit()),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_parse_exactly() {
        let w = parse_weight(&WeightLit::Text("-3/16".into())).unwrap();
        assert_eq!(w, Num::Exact(BigRational::new((-3).into(), 16.into())));
        assert!(parse_weight(&WeightLit::Text("1/0".into())).is_err());
        assert!(parse_weight(&WeightLit::Text("x".into())).is_err());
        assert_eq!(parse_weight(&WeightLit::Float(0.5)).unwrap(), Num::Float(0.5));
    }

    #[test]
    fn untagged_weights() {
        let ws: Vec<WeightLit> = serde_json::from_str(r#"[1, 0.5, "1/3"]"#).unwrap();
        assert_eq!(
            ws,
            vec![
                WeightLit::Int(1),
                WeightLit::Float(0.5),
                WeightLit::Text("1/3".into())
            ]
        );
    }

    #[test]
    fn version_is_checked() {
        let text = r#"{"format_version": 7, "kind": "box", "labels": [], "contexts": []}"#;
        assert!(ScenarioFile::parse(text).is_err());
    }
}
