//! Regression corpus for the implication audit: built-in closed-form instances, seeded random
//! sampled graphs and user corpora read from JSON.

use std::f64::consts::FRAC_PI_3;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{audit_instance, Evaluation, ImplicationAuditReport, Override};
use crate::error::{Error, Result};
use crate::mappings::{MapVariant, Phi, Polyhedron, SetValuedMap, SmoothFn};
use crate::oracle::random_sampled_instance;
use crate::problem::{Hypotheses, Problem, ProblemSpec, Sampling};
use crate::spaces::{ProductPoint, ProductSpace};

/// Largest sampled graph produced by the random generator.
pub const RANDOM_MAX_POINTS: usize = 50;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub problem: ProblemSpec,
    #[serde(default, rename = "override", skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<Override>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomBatch {
    pub count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusFile {
    pub schema_version: u32,
    #[serde(default)]
    pub instances: Vec<CorpusEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomBatch>,
}

/// One instance ready to be audited.
#[derive(Debug, Clone)]
pub struct AuditCase {
    pub problem: Problem,
    pub overrides: Vec<Override>,
}

impl AuditCase {
    fn plain(problem: Problem) -> Self {
        AuditCase {
            problem,
            overrides: Vec::new(),
        }
    }
}

fn named(mut p: Problem, name: &str) -> Problem {
    p.name = Some(name.into());
    p
}

fn scalar_problem(
    variant: MapVariant,
    phi: Phi,
    radius: f64,
    resolution: usize,
    convex: bool,
) -> Result<Problem> {
    let map = SetValuedMap::new(
        ProductSpace::real_plane(),
        variant,
        ProductPoint::scalar(0.0, 0.0),
    )?;
    let sampling = Sampling {
        radius,
        resolution,
        ..Sampling::default()
    };
    Problem::new(
        map,
        phi,
        sampling,
        Hypotheses {
            convex,
            closed_graph: true,
        },
    )
}

pub fn cos_example(resolution: usize) -> Result<Problem> {
    let p = scalar_problem(
        MapVariant::Smooth {
            params: SmoothFn::OneMinusCos,
        },
        Phi::CosExample,
        FRAC_PI_3,
        resolution,
        false,
    )?;
    Ok(named(p, "cos_example"))
}

pub fn identity_map() -> Result<Problem> {
    let params = SmoothFn::Affine {
        a: vec![vec![1.0]],
        b: vec![0.0],
    };
    Ok(named(
        scalar_problem(
            MapVariant::Smooth { params },
            Phi::identity(),
            1.0,
            401,
            true,
        )?,
        "identity",
    ))
}

pub fn parabola(phi: Phi) -> Result<Problem> {
    let params = SmoothFn::Polynomial {
        coeffs: vec![0.0, 0.0, 1.0],
    };
    let name = format!("parabola_{}", phi_tag(&phi));
    Ok(named(
        scalar_problem(MapVariant::Smooth { params }, phi, 0.1, 401, false)?,
        &name,
    ))
}

/// gph F = {(x, y) : y ≥ |x|}.
pub fn abs_epigraph() -> Result<Problem> {
    let inequalities = Polyhedron {
        a: vec![vec![1.0, -1.0], vec![-1.0, -1.0]],
        b: vec![0.0, 0.0],
    };
    Ok(named(
        scalar_problem(
            MapVariant::Polyhedral { inequalities },
            Phi::identity(),
            0.1,
            201,
            true,
        )?,
        "abs_epigraph",
    ))
}

/// gph F = {(x, y) : y ≥ x²}.
pub fn parabola_epigraph(phi: Phi) -> Result<Problem> {
    let params = SmoothFn::Polynomial {
        coeffs: vec![0.0, 0.0, 1.0],
    };
    let name = format!("parabola_epigraph_{}", phi_tag(&phi));
    Ok(named(
        scalar_problem(MapVariant::Epigraph { params }, phi, 0.1, 201, true)?,
        &name,
    ))
}

pub fn constant_map() -> Result<Problem> {
    let params = SmoothFn::Polynomial { coeffs: vec![0.0] };
    Ok(named(
        scalar_problem(
            MapVariant::Smooth { params },
            Phi::identity(),
            1.0,
            101,
            true,
        )?,
        "constant",
    ))
}

fn phi_tag(phi: &Phi) -> String {
    match phi {
        Phi::Power { q } => format!("q{q}"),
        Phi::CosExample => "cos".into(),
        Phi::Table { .. } => "table".into(),
    }
}

/// Closed-form instances of the regression corpus.
pub fn builtin_cases() -> Result<Vec<AuditCase>> {
    Ok([
        cos_example(801)?,
        identity_map()?,
        parabola(Phi::identity())?,
        parabola(Phi::Power { q: 0.5 })?,
        abs_epigraph()?,
        parabola_epigraph(Phi::identity())?,
        parabola_epigraph(Phi::Power { q: 0.5 })?,
        constant_map()?,
    ]
    .into_iter()
    .map(AuditCase::plain)
    .collect())
}

pub fn random_cases(batch: RandomBatch) -> Vec<AuditCase> {
    (0..batch.count as u64)
        .map(|i| AuditCase::plain(random_sampled_instance(batch.seed, i, RANDOM_MAX_POINTS)))
        .collect()
}

pub fn load_corpus(text: &str) -> Result<Vec<AuditCase>> {
    let file: CorpusFile =
        serde_json::from_str(text).map_err(|e| Error::Input(format!("corpus: {e}")))?;
    if file.schema_version != 1 {
        return Err(Error::Input(format!(
            "unsupported corpus schema_version {}",
            file.schema_version
        )));
    }
    let mut cases = file
        .instances
        .into_iter()
        .map(|e| {
            Ok(AuditCase {
                problem: Problem::from_spec(e.problem)?,
                overrides: e.overrides,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(b) = file.random {
        cases.extend(random_cases(b));
    }
    Ok(cases)
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditSummary {
    pub schema_version: u32,
    pub seed: u64,
    pub gammas: Vec<f64>,
    pub instance_count: usize,
    pub total_violations: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub instances: Vec<ImplicationAuditReport>,
}

/// Audits every case in parallel; the report order follows the input order.
pub fn audit_cases(cases: &[AuditCase], gammas: &[f64], seed: u64) -> Result<AuditSummary> {
    let instances = cases
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let ev = Evaluation::new(&c.problem)?.with_overrides(&c.overrides);
            let mut r = audit_instance(&ev, gammas, seed.wrapping_add(i as u64))?;
            if c.problem.name.is_none() {
                r.instance = format!("instance_{i}");
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    let warnings = if cases.is_empty() {
        vec!["empty corpus".to_string()]
    } else {
        Vec::new()
    };
    Ok(AuditSummary {
        schema_version: 1,
        seed,
        gammas: gammas.to_vec(),
        instance_count: instances.len(),
        total_violations: instances.iter().map(|r| r.violations).sum(),
        warnings,
        instances,
    })
}
