//! Quantitative and qualitative subregularity criteria, the convex necessity bound and the
//! implication audit.
//!
//! Every condition reduces to one scalar quantity compared against γ (or against 0). Strict
//! inequalities are certified with a margin, so a value within the margin of the threshold is
//! reported as inconclusive rather than guessed.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dual_slopes::{
    dual_profile, DualProfile, LimitingCoderivativeSample, LimitingKind, SubdiffVariant,
};
use crate::error::{input, Error, Result};
use crate::ext;
use crate::mappings::{default_t_schedule, vartheta, VarthetaEstimate};
use crate::primal_slopes::{primal_profile, Family, PrimalProfile, SlopeEstimate, StrictVariant};
use crate::problem::Problem;
use crate::spaces::{Norm, ProductPoint};

/// Positivity thresholds of the qualitative checks: above HOLD certifies > 0, below FAIL
/// certifies a vanishing limit.
pub const QUALITATIVE_HOLD: f64 = 1e-2;
pub const QUALITATIVE_FAIL: f64 = 1e-3;
/// Relative tolerance of the one-sided hierarchy checks.
pub const HIERARCHY_TOL: f64 = 1e-2;
/// Relative and absolute tolerance of the two-sided equality checks.
pub const EQUALITY_REL: f64 = 0.05;
pub const EQUALITY_ABS: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

pub fn margin(gamma: f64) -> f64 {
    1e-2 * gamma.max(1.0)
}

/// v > γ certified as holds above γ + tol and as fails below γ − tol.
pub fn margin_verdict(v: f64, gamma: f64) -> Verdict {
    let tol = margin(gamma);
    if v > gamma + tol {
        Verdict::Holds
    } else if v < gamma - tol {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    }
}

pub fn positivity_verdict(v: f64) -> Verdict {
    if v > QUALITATIVE_HOLD {
        Verdict::Holds
    } else if v < QUALITATIVE_FAIL {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    }
}

/// Every scalar quantity a criterion can refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum QuantityKey {
    Modulus,
    Growth,
    Primal(Family, StrictVariant),
    Dual(Family, SubdiffVariant),
    XiFree(SubdiffVariant),
    Limiting(LimitingKind),
}

fn family_name(f: Family) -> &'static str {
    match f {
        Family::F => "f",
        Family::G => "g",
        Family::Phi => "phi",
    }
}

const SUBDIFF_VARIANTS: [(SubdiffVariant, &str); 4] = [
    (SubdiffVariant::Plain, "plain"),
    (SubdiffVariant::Approximate, "approximate"),
    (SubdiffVariant::Modified, "modified"),
    (SubdiffVariant::ApproximateModified, "approximate_modified"),
];
const STRICT_VARIANTS: [(StrictVariant, &str); 3] = [
    (StrictVariant::Plain, "plain"),
    (StrictVariant::Modified, "modified"),
    (StrictVariant::Uniform, "uniform"),
];
const LIMITING_KINDS: [(LimitingKind, &str); 3] = [
    (LimitingKind::G, "g"),
    (LimitingKind::GApproximate, "g_approximate"),
    (LimitingKind::Phi, "phi"),
];

fn name_of<T: PartialEq + Copy>(table: &[(T, &'static str)], v: T) -> &'static str {
    table
        .iter()
        .find(|(t, _)| *t == v)
        .map(|(_, n)| *n)
        .expect("table is exhaustive")
}

impl fmt::Display for QuantityKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            QuantityKey::Modulus => write!(f, "modulus"),
            QuantityKey::Growth => write!(f, "growth"),
            QuantityKey::Primal(fam, v) => write!(
                f,
                "primal.{}.{}",
                family_name(fam),
                name_of(&STRICT_VARIANTS, v)
            ),
            QuantityKey::Dual(fam, v) => write!(
                f,
                "dual.{}.{}",
                family_name(fam),
                name_of(&SUBDIFF_VARIANTS, v)
            ),
            QuantityKey::XiFree(v) => write!(f, "xi_free.{}", name_of(&SUBDIFF_VARIANTS, v)),
            QuantityKey::Limiting(k) => write!(f, "limiting.{}", name_of(&LIMITING_KINDS, k)),
        }
    }
}

impl FromStr for QuantityKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('.').collect();
        let fam = |n: &str| match n {
            "f" => Ok(Family::F),
            "g" => Ok(Family::G),
            "phi" => Ok(Family::Phi),
            _ => Err(Error::Input(format!("unknown family {n}"))),
        };
        let lookup = |n: &str| {
            SUBDIFF_VARIANTS
                .iter()
                .find(|(_, m)| *m == n)
                .map(|(v, _)| *v)
        };
        let key = match parts.as_slice() {
            ["modulus"] => QuantityKey::Modulus,
            ["growth"] => QuantityKey::Growth,
            ["primal", f, v] => QuantityKey::Primal(
                fam(f)?,
                STRICT_VARIANTS
                    .iter()
                    .find(|(_, m)| m == v)
                    .map(|(v, _)| *v)
                    .ok_or_else(|| Error::Input(s.into()))?,
            ),
            ["dual", f, v] => {
                QuantityKey::Dual(fam(f)?, lookup(v).ok_or_else(|| Error::Input(s.into()))?)
            }
            ["xi_free", v] => QuantityKey::XiFree(lookup(v).ok_or_else(|| Error::Input(s.into()))?),
            ["limiting", k] => QuantityKey::Limiting(
                LIMITING_KINDS
                    .iter()
                    .find(|(_, m)| m == k)
                    .map(|(k, _)| *k)
                    .ok_or_else(|| Error::Input(s.into()))?,
            ),
            _ => return Err(Error::Input(format!("unknown quantity {s}"))),
        };
        Ok(key)
    }
}

impl Serialize for QuantityKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for QuantityKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Replacement value for one quantity; used for negative controls in audit corpora.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Override {
    pub quantity: QuantityKey,
    #[serde(with = "ext")]
    pub value: f64,
}

/// Scalar view of a quantity with its bracket and witnesses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scalar {
    #[serde(with = "ext")]
    pub value: f64,
    #[serde(with = "ext")]
    pub lower: f64,
    #[serde(with = "ext")]
    pub upper: f64,
    #[serde(with = "ext::opt")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<ProductPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ystar: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xstar: Option<Vec<f64>>,
}

impl Scalar {
    fn from_estimate(e: &SlopeEstimate) -> Self {
        Scalar {
            value: e.value,
            lower: e.lower,
            upper: e.upper,
            rho: e.rho,
            witnesses: e
                .witness
                .iter()
                .map(|p| Witness {
                    point: Some(p.clone()),
                    ystar: None,
                    xstar: None,
                })
                .collect(),
        }
    }

    fn from_limiting(l: &LimitingCoderivativeSample) -> Self {
        let spread = l.pairs.iter().map(|p| p.spread).fold(0.0, f64::max);
        Scalar {
            value: l.inf_norm,
            lower: if l.inf_norm.is_finite() {
                (l.inf_norm - spread).max(0.0)
            } else {
                l.inf_norm
            },
            upper: if l.inf_norm.is_finite() {
                l.inf_norm + spread
            } else {
                l.inf_norm
            },
            rho: l.sequences.last().map(|s| s.rho),
            witnesses: l
                .pairs
                .iter()
                .map(|p| Witness {
                    point: None,
                    ystar: Some(p.ystar.clone()),
                    xstar: Some(p.xstar.clone()),
                })
                .collect(),
        }
    }
}

/// All slopes, moduli and coderivative data of one problem.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub problem: Problem,
    pub primal: PrimalProfile,
    pub dual: std::result::Result<DualProfile, String>,
    pub vartheta: VarthetaEstimate,
    pub estimates: Vec<(QuantityKey, SlopeEstimate)>,
    pub limiting: Vec<(LimitingKind, LimitingCoderivativeSample)>,
    pub overrides: Vec<Override>,
}

impl Evaluation {
    pub fn new(problem: &Problem) -> Result<Self> {
        Self::build(problem, true)
    }

    /// Primal slopes and moduli only; every dual quantity reads as unsupported.
    pub fn primal_only(problem: &Problem) -> Result<Self> {
        Self::build(problem, false)
    }

    fn build(problem: &Problem, with_dual: bool) -> Result<Self> {
        let primal = primal_profile(problem)?;
        let dual = match with_dual.then(|| dual_profile(problem)) {
            Some(Ok(d)) => Ok(d),
            Some(Err(Error::Unsupported(m))) => Err(m),
            Some(Err(e)) => return Err(e),
            None => Err("dual slopes not requested".to_string()),
        };
        let mut estimates = vec![
            (QuantityKey::Modulus, primal.modulus()),
            (QuantityKey::Growth, primal.growth()),
        ];
        for fam in [Family::G, Family::Phi] {
            for (v, _) in STRICT_VARIANTS {
                estimates.push((QuantityKey::Primal(fam, v), primal.strict(fam, v)));
            }
        }
        let mut limiting = Vec::new();
        if let Ok(d) = &dual {
            for fam in [Family::F, Family::G, Family::Phi] {
                for (v, _) in SUBDIFF_VARIANTS {
                    estimates.push((QuantityKey::Dual(fam, v), d.strict(fam, v)));
                }
            }
            for (v, _) in SUBDIFF_VARIANTS {
                estimates.push((QuantityKey::XiFree(v), d.xi_free(v)));
            }
            for (k, _) in LIMITING_KINDS {
                limiting.push((k, d.limiting(&problem.map, problem, k)));
            }
        }
        Ok(Evaluation {
            problem: problem.clone(),
            primal,
            dual,
            vartheta: vartheta(&problem.phi, &default_t_schedule())?,
            estimates,
            limiting,
            overrides: Vec::new(),
        })
    }

    pub fn with_overrides(mut self, overrides: &[Override]) -> Self {
        self.overrides.extend_from_slice(overrides);
        self
    }

    pub fn estimate(&self, key: QuantityKey) -> Option<&SlopeEstimate> {
        self.estimates
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, e)| e)
    }

    pub fn limiting_sample(&self, kind: LimitingKind) -> Option<&LimitingCoderivativeSample> {
        self.limiting
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, l)| l)
    }

    /// Scalar value of a quantity, None when its structure is unsupported.
    pub fn get(&self, key: QuantityKey) -> Option<Scalar> {
        let mut s = match key {
            QuantityKey::Limiting(k) => Scalar::from_limiting(self.limiting_sample(k)?),
            _ => Scalar::from_estimate(self.estimate(key)?),
        };
        if let Some(o) = self.overrides.iter().rev().find(|o| o.quantity == key) {
            s.value = o.value;
            s.lower = o.value;
            s.upper = o.value;
        }
        Some(s)
    }

    fn value(&self, key: QuantityKey) -> Option<f64> {
        self.get(key).map(|s| s.value)
    }

    pub fn dual_unsupported_reason(&self) -> Option<&str> {
        self.dual.as_ref().err().map(|s| s.as_str())
    }

    pub fn admissible_count(&self) -> usize {
        let k = self.primal.rhos.len() - 1;
        self.primal
            .records
            .iter()
            .filter(|r| self.primal.admissible(r, k))
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    Quantitative,
    Qualitative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    #[serde(with = "ext::opt")]
    pub margin: Option<f64>,
    #[serde(with = "ext::opt")]
    pub hold_above: Option<f64>,
    #[serde(with = "ext::opt")]
    pub fail_below: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub criterion_id: String,
    pub kind: CertificateKind,
    pub family: Family,
    #[serde(with = "ext::opt")]
    pub gamma: Option<f64>,
    #[serde(with = "ext::opt")]
    pub rho_used: Option<f64>,
    pub verdict: Verdict,
    #[serde(with = "ext")]
    pub value: f64,
    #[serde(with = "ext")]
    pub lower: f64,
    #[serde(with = "ext")]
    pub upper: f64,
    pub witnesses: Vec<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<String>,
    pub tolerances: Tolerances,
    pub provenance: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

struct Condition {
    id: &'static str,
    key: QuantityKey,
    what: &'static str,
}

const fn cond(id: &'static str, key: QuantityKey, what: &'static str) -> Condition {
    Condition { id, key, what }
}

use QuantityKey::{Dual as D, Growth, Limiting as L, Modulus, Primal as P};
use StrictVariant::{Modified as PM, Plain as PP, Uniform as PU};
use SubdiffVariant::{Approximate as SA, ApproximateModified as SAM, Modified as SM, Plain as SP};

const QUANT_G: &[Condition] = &[
    cond("a", Modulus, "subregularity modulus"),
    cond("b", P(Family::G, PU), "uniform strict g-slope"),
    cond("c", Growth, "liminf g(y)/d(x,xbar)"),
    cond("d", P(Family::G, PP), "strict g-slope"),
    cond("e", P(Family::G, PM), "modified strict g-slope"),
    cond(
        "f",
        D(Family::G, SA),
        "approximate strict subdifferential g-slope",
    ),
    cond(
        "g",
        D(Family::G, SAM),
        "modified approximate strict subdifferential g-slope",
    ),
    cond("h", D(Family::G, SP), "strict subdifferential g-slope"),
    cond(
        "i",
        D(Family::G, SM),
        "modified strict subdifferential g-slope",
    ),
    cond(
        "j",
        L(LimitingKind::GApproximate),
        "inf norm over the approximate limiting outer g-coderivative of the dual sphere",
    ),
    cond(
        "k",
        L(LimitingKind::G),
        "inf norm over the limiting outer g-coderivative of the dual sphere",
    ),
];

const QUANT_PHI: &[Condition] = &[
    cond("a", Modulus, "subregularity modulus"),
    cond("b", P(Family::Phi, PU), "uniform strict phi-slope"),
    cond("c", Growth, "liminf phi(d(y,ybar))/d(x,xbar)"),
    cond("d", P(Family::Phi, PP), "strict phi-slope"),
    cond("e", P(Family::Phi, PM), "modified strict phi-slope"),
    cond(
        "f",
        D(Family::Phi, SA),
        "approximate strict subdifferential phi-slope",
    ),
    cond(
        "g",
        D(Family::Phi, SAM),
        "modified approximate strict subdifferential phi-slope",
    ),
    cond("h", D(Family::Phi, SP), "strict subdifferential phi-slope"),
    cond(
        "i",
        D(Family::Phi, SM),
        "modified strict subdifferential phi-slope",
    ),
    cond(
        "j",
        L(LimitingKind::Phi),
        "inf norm over the limiting outer phi-coderivative of the dual sphere",
    ),
];

const QUAL_G: &[Condition] = &[
    cond("sr", Modulus, "subregularity modulus"),
    cond("a", P(Family::G, PU), "uniform strict g-slope"),
    cond("b", Growth, "liminf g(y)/d(x,xbar)"),
    cond("c", P(Family::G, PP), "strict g-slope"),
    cond("d", P(Family::G, PM), "modified strict g-slope"),
    cond(
        "e",
        D(Family::G, SA),
        "approximate strict subdifferential g-slope",
    ),
    cond(
        "f",
        D(Family::G, SAM),
        "modified approximate strict subdifferential g-slope",
    ),
    cond("g", D(Family::G, SP), "strict subdifferential g-slope"),
    cond(
        "h",
        D(Family::G, SM),
        "modified strict subdifferential g-slope",
    ),
    cond(
        "i",
        L(LimitingKind::GApproximate),
        "0 outside the approximate limiting outer g-coderivative of the dual sphere",
    ),
    cond(
        "j",
        L(LimitingKind::G),
        "0 outside the limiting outer g-coderivative of the dual sphere",
    ),
];

const QUAL_PHI: &[Condition] = &[
    cond("sr", Modulus, "subregularity modulus"),
    cond("a", P(Family::Phi, PU), "uniform strict phi-slope"),
    cond("b", Growth, "liminf phi(d(y,ybar))/d(x,xbar)"),
    cond("c", P(Family::Phi, PP), "strict phi-slope"),
    cond("d", P(Family::Phi, PM), "modified strict phi-slope"),
    cond(
        "e",
        D(Family::Phi, SA),
        "approximate strict subdifferential phi-slope",
    ),
    cond(
        "f",
        D(Family::Phi, SAM),
        "modified approximate strict subdifferential phi-slope",
    ),
    cond("g", D(Family::Phi, SP), "strict subdifferential phi-slope"),
    cond(
        "h",
        D(Family::Phi, SM),
        "modified strict subdifferential phi-slope",
    ),
    cond(
        "i",
        L(LimitingKind::Phi),
        "0 outside the limiting outer phi-coderivative of the dual sphere",
    ),
];

fn table(kind: CertificateKind, family: Family) -> Result<&'static [Condition]> {
    match (kind, family) {
        (CertificateKind::Quantitative, Family::G) => Ok(QUANT_G),
        (CertificateKind::Quantitative, Family::Phi) => Ok(QUANT_PHI),
        (CertificateKind::Qualitative, Family::G) => Ok(QUAL_G),
        (CertificateKind::Qualitative, Family::Phi) => Ok(QUAL_PHI),
        (_, Family::F) => input("criteria are stated for the g- and phi-families"),
    }
}

/// Condition ids of a criteria table, in order.
pub fn condition_ids(kind: CertificateKind, family: Family) -> Result<Vec<&'static str>> {
    Ok(table(kind, family)?.iter().map(|c| c.id).collect())
}

/// Structural facts that gate implications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InstanceHypotheses {
    /// Declared closed graph on a non-sampled representation.
    pub closed_graph: bool,
    /// Declared convex and not refuted by the midpoint spot-check.
    pub convex: bool,
    /// The norm of Y is differentiable away from 0, so g is differentiable except at ȳ.
    pub y_smooth: bool,
    pub phi_convex: bool,
    pub theta_positive: bool,
    pub sampled: bool,
}

impl InstanceHypotheses {
    pub fn of(ev: &Evaluation, convexity: Option<&ConvexityReport>) -> Self {
        let p = &ev.problem;
        let ys = p.map.spaces.y;
        let y_smooth = ys.dim == 1
            || matches!(ys.norm, Norm::Euclidean)
            || matches!(ys.norm, Norm::PNorm(q) if q > 1.0 && q.is_finite());
        let refuted = convexity.is_some_and(|c| c.failures > 0);
        InstanceHypotheses {
            closed_graph: p.hypotheses.closed_graph && !p.map.is_sampled(),
            convex: p.hypotheses.convex && !refuted,
            y_smooth,
            phi_convex: p.phi.convex_near_zero(),
            theta_positive: ev.vartheta.value > 0.0,
            sampled: p.map.is_sampled(),
        }
    }
}

fn search_sketch(ev: &Evaluation) -> String {
    format!(
        "exhaustive over {} admissible sample points, radius {}, resolution {}",
        ev.admissible_count(),
        ev.problem.sampling.radius,
        ev.problem.sampling.resolution
    )
}

fn certificate(
    ev: &Evaluation,
    c: &Condition,
    kind: CertificateKind,
    family: Family,
    gamma: Option<f64>,
) -> Certificate {
    let tolerances = match gamma {
        Some(g) => Tolerances {
            margin: Some(margin(g)),
            hold_above: None,
            fail_below: None,
        },
        None => Tolerances {
            margin: None,
            hold_above: Some(QUALITATIVE_HOLD),
            fail_below: Some(QUALITATIVE_FAIL),
        },
    };
    let mut notes = Vec::new();
    let (verdict, s) = match ev.get(c.key) {
        Some(s) if s.value.is_nan() => (Verdict::Inconclusive, s),
        Some(s) => (
            gamma.map_or_else(
                || positivity_verdict(s.value),
                |g| margin_verdict(s.value, g),
            ),
            s,
        ),
        None => {
            notes.push(format!(
                "dual structure unsupported: {}",
                ev.dual_unsupported_reason().unwrap_or("not computed")
            ));
            let nan = f64::NAN;
            (
                Verdict::Inconclusive,
                Scalar {
                    value: nan,
                    lower: nan,
                    upper: nan,
                    rho: None,
                    witnesses: Vec::new(),
                },
            )
        }
    };
    if s.value == f64::INFINITY {
        notes.push(
            "admissible set empty or no sequence found; holds vacuously with value +inf".into(),
        );
    }
    let search =
        (verdict != Verdict::Inconclusive && s.witnesses.is_empty()).then(|| search_sketch(ev));
    Certificate {
        criterion_id: c.id.into(),
        kind,
        family,
        gamma,
        rho_used: s.rho,
        verdict,
        value: s.value,
        lower: s.lower,
        upper: s.upper,
        witnesses: s.witnesses,
        search,
        tolerances,
        provenance: format!("{} [{}]", c.what, c.key),
        notes,
    }
}

/// Certificates for every condition of the quantitative criteria at level γ.
pub fn check_quantitative(ev: &Evaluation, family: Family, gamma: f64) -> Result<Vec<Certificate>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return input("gamma must be positive and finite");
    }
    Ok(table(CertificateKind::Quantitative, family)?
        .iter()
        .map(|c| certificate(ev, c, CertificateKind::Quantitative, family, Some(gamma)))
        .collect())
}

/// Positivity and kernel versions, with necessity and sufficiency annotations.
pub fn check_qualitative(ev: &Evaluation, family: Family) -> Result<Vec<Certificate>> {
    let h = InstanceHypotheses::of(ev, None);
    let mut out: Vec<Certificate> = table(CertificateKind::Qualitative, family)?
        .iter()
        .map(|c| certificate(ev, c, CertificateKind::Qualitative, family, None))
        .collect();
    for c in &mut out {
        match (family, c.criterion_id.as_str()) {
            (_, "a") if h.closed_graph => c
                .notes
                .push("necessary and sufficient (closed graph)".into()),
            (_, "a") => c.notes.push("necessary".into()),
            (Family::Phi, "g") if h.convex && h.theta_positive => {
                c.notes.push("necessary (convex F, vartheta > 0)".into())
            }
            (Family::G, "g" | "h") if !(h.y_smooth || h.convex) => c
                .notes
                .push("sufficiency needs g differentiable off ybar or F convex".into()),
            (Family::Phi, "g" | "h") if !(h.y_smooth || (h.convex && h.phi_convex)) => c
                .notes
                .push("sufficiency needs Y smooth, or F convex with phi convex".into()),
            (Family::G, "j") if !h.convex => c.notes.push("sufficiency needs F convex".into()),
            _ => {}
        }
        if !h.closed_graph && c.criterion_id != "sr" {
            c.notes.push("sufficiency needs a closed graph".into());
        }
    }
    Ok(out)
}

/// Midpoint convexity test on pairs of sampled graph points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConvexityReport {
    pub trials: usize,
    pub failures: usize,
}

pub fn convexity_spot_check(
    problem: &Problem,
    trials: usize,
    seed: u64,
) -> Result<ConvexityReport> {
    let pts = &problem
        .map
        .graph_sample(
            &problem.map.reference,
            problem.sampling.radius,
            problem.sampling.resolution.min(201),
        )?
        .points;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    if problem.map.is_sampled() || pts.len() < 2 {
        return Ok(ConvexityReport {
            trials: 0,
            failures: 0,
        });
    }
    for _ in 0..trials {
        let a = &pts[rng.gen_range(0..pts.len())];
        let b = &pts[rng.gen_range(0..pts.len())];
        let t: f64 = rng.gen_range(0.0..=1.0);
        let mix = |u: &[f64], v: &[f64]| {
            u.iter()
                .zip(v)
                .map(|(p, q)| (1.0 - t) * p + t * q)
                .collect::<Vec<f64>>()
        };
        let m = ProductPoint::new(mix(&a.x, &b.x), mix(&a.y, &b.y));
        if !problem.map.contains(&m) {
            failures += 1;
        }
    }
    Ok(ConvexityReport { trials, failures })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NecessityBound {
    #[serde(with = "ext")]
    pub vartheta: f64,
    #[serde(with = "ext")]
    pub modulus: f64,
    #[serde(with = "ext")]
    pub lhs: f64,
    #[serde(with = "ext")]
    pub rhs: f64,
    pub satisfied: bool,
}

/// ϑ[φ]·sr_φ against the strict subdifferential φ-slope, for convex F.
pub fn convex_necessity_bound(ev: &Evaluation) -> Result<NecessityBound> {
    if !ev.problem.hypotheses.convex {
        return input("the necessity bound needs F declared convex");
    }
    let rhs = ev
        .value(QuantityKey::Dual(Family::Phi, SubdiffVariant::Plain))
        .ok_or_else(|| {
            Error::Unsupported(ev.dual_unsupported_reason().unwrap_or("dual slopes").into())
        })?;
    let modulus = ev
        .value(QuantityKey::Modulus)
        .expect("modulus always computed");
    let lhs = if ev.vartheta.value == 0.0 {
        0.0
    } else {
        ev.vartheta.value * modulus
    };
    Ok(NecessityBound {
        vartheta: ev.vartheta.value,
        modulus,
        lhs,
        rhs,
        satisfied: lhs <= rhs + EQUALITY_ABS,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaRule {
    Grid,
    /// γ = 0.9·τ̂ with τ̂ the measured modulus.
    BelowTau,
    /// γ = 0.9·ϑ[φ]·τ̂.
    BelowThetaTau,
    /// Qualitative edge, no γ.
    Positivity,
}

/// The four implication diagrams: criteria family crossed with quantitative or qualitative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagram {
    GQuantitative,
    GQualitative,
    PhiQuantitative,
    PhiQualitative,
}

impl Diagram {
    fn table(self) -> &'static [Condition] {
        match self {
            Diagram::GQuantitative => QUANT_G,
            Diagram::GQualitative => QUAL_G,
            Diagram::PhiQuantitative => QUANT_PHI,
            Diagram::PhiQualitative => QUAL_PHI,
        }
    }
}

/// Hypotheses of an arrow: a label for reports and the predicate that gates it.
type Hyp = (&'static str, fn(&InstanceHypotheses) -> bool);

fn h_any(_: &InstanceHypotheses) -> bool {
    true
}
fn h_closed(h: &InstanceHypotheses) -> bool {
    h.closed_graph
}
fn h_smooth_closed_or_convex(h: &InstanceHypotheses) -> bool {
    h.y_smooth && (h.closed_graph || h.convex)
}
fn h_convex(h: &InstanceHypotheses) -> bool {
    h.convex
}
fn h_convex_gauge(h: &InstanceHypotheses) -> bool {
    h.convex && h.phi_convex
}
fn h_convex_gauge_closed(h: &InstanceHypotheses) -> bool {
    h.convex && h.phi_convex && h.closed_graph
}
fn h_convex_theta(h: &InstanceHypotheses) -> bool {
    h.convex && h.theta_positive
}
fn h_dual_sufficient(h: &InstanceHypotheses) -> bool {
    h.closed_graph && (h.y_smooth || (h.convex && (h.phi_convex || h.y_smooth)))
}
fn h_kernel_sufficient(h: &InstanceHypotheses) -> bool {
    h.closed_graph && h.convex && (h.phi_convex || h.y_smooth)
}

const ANY: Hyp = ("none", h_any);
const CLOSED: Hyp = ("closed graph", h_closed);
const SMOOTH: Hyp = (
    "smooth norm on Y; closed graph or convex F",
    h_smooth_closed_or_convex,
);
const CONVEX: Hyp = ("convex F", h_convex);
const CONVEX_GAUGE: Hyp = ("convex F and convex gauge", h_convex_gauge);
const CONVEX_GAUGE_CLOSED: Hyp = (
    "convex F, convex gauge, closed graph",
    h_convex_gauge_closed,
);
const CONVEX_THETA: Hyp = ("convex F and vartheta > 0", h_convex_theta);
const DUAL_SUFFICIENT: Hyp = (
    "closed graph; smooth norm on Y, or convex F with convex or smooth gauge",
    h_dual_sufficient,
);
const KERNEL_SUFFICIENT: Hyp = (
    "closed graph, convex F, convex or smooth gauge",
    h_kernel_sufficient,
);

#[derive(Clone, Copy)]
pub struct EdgeSpec {
    pub diagram: Diagram,
    pub from: &'static str,
    pub to: &'static str,
    pub gamma: GammaRule,
    pub hypotheses: Hyp,
}

fn push_chain(
    out: &mut Vec<EdgeSpec>,
    diagram: Diagram,
    chain: &[&'static str],
    gamma: GammaRule,
    hypotheses: Hyp,
) {
    for w in chain.windows(2) {
        out.push(EdgeSpec {
            diagram,
            from: w[0],
            to: w[1],
            gamma,
            hypotheses,
        });
    }
}

fn push_equiv(
    out: &mut Vec<EdgeSpec>,
    diagram: Diagram,
    chain: &[&'static str],
    gamma: GammaRule,
    hypotheses: Hyp,
) {
    push_chain(out, diagram, chain, gamma, hypotheses);
    let rev: Vec<&'static str> = chain.iter().rev().copied().collect();
    push_chain(out, diagram, &rev, gamma, hypotheses);
}

/// Every arrow of the four implication diagrams. Qualitative sufficiency arrows point to "sr".
pub fn edges() -> Vec<EdgeSpec> {
    use Diagram::*;
    use GammaRule::*;
    let mut e = Vec::new();
    let d = GQuantitative;
    for ch in [
        &["c", "e"][..],
        &["d", "e"],
        &["e", "b"],
        &["f", "g", "i"],
        &["f", "h", "i"],
        &["j", "k"],
    ] {
        push_chain(&mut e, d, ch, Grid, ANY);
    }
    push_chain(&mut e, d, &["a", "b"], BelowTau, ANY);
    push_chain(&mut e, d, &["b", "a"], Grid, CLOSED);
    push_chain(&mut e, d, &["f", "d"], Grid, CLOSED);
    push_chain(&mut e, d, &["g", "e"], Grid, CLOSED);
    push_equiv(&mut e, d, &["h", "d"], Grid, SMOOTH);
    push_equiv(&mut e, d, &["i", "e"], Grid, SMOOTH);
    push_equiv(&mut e, d, &["b", "d", "e", "h", "i"], Grid, CONVEX_GAUGE);
    push_equiv(&mut e, d, &["f", "j"], Grid, ANY);
    push_equiv(&mut e, d, &["h", "k"], Grid, ANY);

    let d = GQualitative;
    for c in ["a", "b", "c", "d", "e", "f", "i"] {
        push_chain(&mut e, d, &[c, "sr"], Positivity, CLOSED);
    }
    for c in ["g", "h"] {
        push_chain(&mut e, d, &[c, "sr"], Positivity, DUAL_SUFFICIENT);
    }
    push_chain(&mut e, d, &["j", "sr"], Positivity, KERNEL_SUFFICIENT);
    push_chain(&mut e, d, &["sr", "a"], Positivity, ANY);
    for ch in [
        &["b", "d"][..],
        &["c", "d"],
        &["d", "a"],
        &["e", "f", "h"],
        &["e", "g", "h"],
        &["i", "j"],
    ] {
        push_chain(&mut e, d, ch, Positivity, ANY);
    }
    push_chain(&mut e, d, &["e", "c"], Positivity, CLOSED);
    push_chain(&mut e, d, &["f", "d"], Positivity, CLOSED);
    push_equiv(&mut e, d, &["e", "c"], Positivity, SMOOTH);
    push_equiv(&mut e, d, &["f", "d"], Positivity, SMOOTH);
    push_equiv(
        &mut e,
        d,
        &["a", "c", "d", "g", "h"],
        Positivity,
        CONVEX_GAUGE_CLOSED,
    );
    push_equiv(&mut e, d, &["e", "i"], Positivity, ANY);
    push_equiv(&mut e, d, &["g", "j"], Positivity, ANY);

    let d = PhiQuantitative;
    for ch in [
        &["c", "e"][..],
        &["d", "e"],
        &["e", "b"],
        &["f", "g", "i"],
        &["f", "h", "i"],
    ] {
        push_chain(&mut e, d, ch, Grid, ANY);
    }
    push_chain(&mut e, d, &["a", "b"], BelowTau, ANY);
    push_chain(&mut e, d, &["b", "a"], Grid, CLOSED);
    push_chain(&mut e, d, &["a", "h"], BelowThetaTau, CONVEX);
    push_chain(&mut e, d, &["f", "d"], Grid, CLOSED);
    push_chain(&mut e, d, &["g", "e"], Grid, CLOSED);
    push_equiv(&mut e, d, &["h", "d"], Grid, SMOOTH);
    push_equiv(&mut e, d, &["i", "e"], Grid, SMOOTH);
    push_equiv(&mut e, d, &["b", "d", "e", "h", "i"], Grid, CONVEX_GAUGE);
    push_equiv(&mut e, d, &["f", "h", "j"], Grid, ANY);

    let d = PhiQualitative;
    for c in ["a", "b", "c", "d", "e", "f", "i"] {
        push_chain(&mut e, d, &[c, "sr"], Positivity, CLOSED);
    }
    for c in ["g", "h"] {
        push_chain(&mut e, d, &[c, "sr"], Positivity, DUAL_SUFFICIENT);
    }
    push_chain(&mut e, d, &["sr", "a"], Positivity, ANY);
    for ch in [
        &["b", "d"][..],
        &["c", "d"],
        &["d", "a"],
        &["e", "f", "h"],
        &["e", "g", "h"],
    ] {
        push_chain(&mut e, d, ch, Positivity, ANY);
    }
    push_chain(&mut e, d, &["e", "c"], Positivity, CLOSED);
    push_chain(&mut e, d, &["f", "d"], Positivity, CLOSED);
    push_equiv(&mut e, d, &["e", "c"], Positivity, SMOOTH);
    push_equiv(&mut e, d, &["f", "d"], Positivity, SMOOTH);
    push_chain(&mut e, d, &["sr", "g"], Positivity, CONVEX_THETA);
    push_equiv(
        &mut e,
        d,
        &["a", "c", "d", "g", "h"],
        Positivity,
        CONVEX_GAUGE_CLOSED,
    );
    push_equiv(&mut e, d, &["e", "g", "i"], Positivity, ANY);
    e
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeState {
    Consistent,
    Vacuous,
    Undetermined,
    Violated,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeStatus {
    pub diagram: Diagram,
    pub edge: String,
    pub hypotheses: &'static str,
    #[serde(with = "ext::opt")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<Verdict>,
    pub status: EdgeState,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantCheck {
    pub id: String,
    pub status: EdgeState,
    #[serde(with = "ext")]
    pub lhs: f64,
    #[serde(with = "ext")]
    pub rhs: f64,
    pub relation: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImplicationAuditReport {
    pub instance: String,
    pub hypotheses: InstanceHypotheses,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convexity: Option<ConvexityReport>,
    pub edges: Vec<EdgeStatus>,
    pub invariants: Vec<InvariantCheck>,
    pub violations: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

/// γ levels at which the grid-type quantitative edges are tested.
pub const DEFAULT_GAMMAS: [f64; 6] = [0.1, 0.25, 0.5, 0.75, 1.25, 2.0];

fn condition_verdict(
    ev: &Evaluation,
    diagram: Diagram,
    id: &str,
    gamma: Option<f64>,
) -> Option<Verdict> {
    let c = diagram.table().iter().find(|c| c.id == id)?;
    let v = ev.value(c.key)?;
    if v.is_nan() {
        return None;
    }
    Some(match gamma {
        Some(g) => margin_verdict(v, g),
        None => positivity_verdict(v),
    })
}

fn le_check(id: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> InvariantCheck {
    let ok =
        lhs <= rhs || lhs - rhs <= tol || (lhs.is_infinite() && rhs.is_infinite() && lhs == rhs);
    InvariantCheck {
        id: id.into(),
        status: if lhs.is_nan() || rhs.is_nan() {
            EdgeState::Undetermined
        } else if ok {
            EdgeState::Consistent
        } else {
            EdgeState::Violated
        },
        lhs,
        rhs,
        relation: "<=",
    }
}

fn rel_tol(v: f64) -> f64 {
    if v.is_finite() {
        HIERARCHY_TOL * v.abs().max(1.0)
    } else {
        0.0
    }
}

fn eq_check(id: impl Into<String>, a: f64, b: f64) -> InvariantCheck {
    let ok = if a.is_infinite() || b.is_infinite() {
        a == b
    } else {
        (a - b).abs() <= EQUALITY_REL * a.abs().max(b.abs()) + EQUALITY_ABS
    };
    InvariantCheck {
        id: id.into(),
        status: if a.is_nan() || b.is_nan() {
            EdgeState::Undetermined
        } else if ok {
            EdgeState::Consistent
        } else {
            EdgeState::Violated
        },
        lhs: a,
        rhs: b,
        relation: "~=",
    }
}

/// Worst case of an exact per-point or per-step relation, reported as one check.
fn worst_le(id: &str, pairs: impl Iterator<Item = (f64, f64)>, rel: f64) -> InvariantCheck {
    let mut worst = le_check(id, 0.0, 0.0, 0.0);
    let mut gap = f64::NEG_INFINITY;
    for (l, r) in pairs {
        let tol = rel * l.abs().max(r.abs()).max(1.0);
        let c = le_check(id, l, r, if l.is_finite() { tol } else { 0.0 });
        let d = if l.is_finite() && r.is_finite() {
            l - r - tol
        } else if c.status == EdgeState::Violated {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        // Violations have d > 0 and everything else d <= 0, so the largest gap is the worst.
        if d > gap {
            gap = d;
            worst = c;
        }
    }
    worst
}

/// Inequality hierarchy checks that hold for every instance satisfying their hypotheses.
pub fn hierarchy_checks(ev: &Evaluation, h: &InstanceHypotheses) -> Vec<InvariantCheck> {
    let mut out = Vec::new();
    let pr = &ev.primal;
    let sp = ev.problem.map.spaces;
    let reference = &ev.problem.map.reference;
    let exact = 1e-12;
    // Nonlocal slopes dominate both the local slope and g/d_rho, per point and step.
    out.push(worst_le(
        "nonlocal >= max(local, g/d_rho) [g]",
        pr.records.iter().flat_map(|r| {
            pr.rhos.iter().enumerate().flat_map(move |(k, rho)| {
                let d = f64::max(
                    sp.x.dist(&reference.x, &r.point.x),
                    rho * sp.y.dist(&reference.y, &r.point.y),
                );
                [(r.loc_g[k].value, r.nl_g[k]), (r.g / d, r.nl_g[k])]
            })
        }),
        exact,
    ));
    out.push(worst_le(
        "nonlocal >= max(phi' local, g/d_rho) [phi]",
        pr.records.iter().flat_map(|r| {
            pr.rhos.iter().enumerate().flat_map(move |(k, rho)| {
                let d = f64::max(
                    sp.x.dist(&reference.x, &r.point.x),
                    rho * sp.y.dist(&reference.y, &r.point.y),
                );
                let scaled = if r.dphi == 0.0 || r.loc_d[k].value == 0.0 {
                    0.0
                } else {
                    r.dphi * r.loc_d[k].value
                };
                [(scaled, r.nl_phi[k]), (r.g / d, r.nl_phi[k])]
            })
        }),
        HIERARCHY_TOL,
    ));
    let get = |k: QuantityKey| ev.get(k);
    let traj = |k: QuantityKey| {
        ev.estimate(k)
            .map(|e| e.trajectory.iter().map(|s| s.value).collect::<Vec<f64>>())
    };
    // Modified >= plain per step; uniform >= modified at the final step.
    for fam in [Family::G, Family::Phi] {
        let n = family_name(fam);
        if let (Some(a), Some(b)) = (traj(P(fam, PP)), traj(P(fam, PM))) {
            out.push(worst_le(
                &format!("strict <= modified [{n}]"),
                a.into_iter().zip(b),
                exact,
            ));
        }
        if let (Some(m), Some(u)) = (get(P(fam, PM)), get(P(fam, PU))) {
            out.push(le_check(
                format!("modified <= uniform [{n}]"),
                m.value,
                u.value,
                rel_tol(u.value),
            ));
        }
        if let (Some(s), Some(u)) = (get(Modulus), get(P(fam, PU))) {
            out.push(le_check(
                format!("modulus <= uniform [{n}]"),
                s.value,
                u.value,
                rel_tol(u.value),
            ));
            if h.closed_graph {
                out.push(eq_check(
                    format!("modulus = uniform, closed graph [{n}]"),
                    s.value,
                    u.value,
                ));
            }
        }
    }
    let Ok(dual) = &ev.dual else { return out };
    // Subdifferential variants are ordered per point and per step.
    out.push(worst_le(
        "approximate <= plain per point [g, phi]",
        dual.records.iter().flat_map(|r| {
            r.steps
                .iter()
                .flat_map(|s| [(s.g_approx.0, s.g.value), (s.phi_approx.0, s.phi_scaled)])
        }),
        exact,
    ));
    for fam in [Family::G, Family::Phi] {
        let n = family_name(fam);
        for (a, b, what) in [
            (SA, SP, "approximate <= plain"),
            (SP, SM, "plain <= modified"),
            (SA, SAM, "approximate <= approximate modified"),
            (SAM, SM, "approximate modified <= modified"),
        ] {
            if let (Some(x), Some(y)) = (traj(D(fam, a)), traj(D(fam, b))) {
                out.push(worst_le(
                    &format!("{what} per step [{n}]"),
                    x.into_iter().zip(y),
                    exact,
                ));
            }
        }
    }
    let val = |k: QuantityKey| ev.value(k).unwrap_or(f64::NAN);
    // phi-family >= xi-free forms; equal when phi'(0) < inf.
    for (v, name) in SUBDIFF_VARIANTS {
        let (lhs, rhs) = (val(D(Family::Phi, v)), val(QuantityKey::XiFree(v)));
        out.push(le_check(
            format!("xi-free <= phi-family [{name}]"),
            rhs,
            lhs,
            rel_tol(lhs),
        ));
        if ev.problem.phi.deriv_at_zero_finite() {
            out.push(eq_check(
                format!("xi-free = phi-family, phi'(0) finite [{name}]"),
                rhs,
                lhs,
            ));
        }
    }
    // Strict g-slope <= strict subdifferential slope of f.
    out.push(le_check(
        "strict g-slope <= strict subdifferential f-slope",
        val(P(Family::G, PP)),
        val(D(Family::F, SP)),
        rel_tol(val(D(Family::F, SP))),
    ));
    // f- and g-forms agree for differentiable or convex gauges.
    if h.y_smooth || (h.convex && h.phi_convex) {
        out.push(eq_check(
            "subdifferential f-slope = g-slope",
            val(D(Family::F, SP)),
            val(D(Family::G, SP)),
        ));
        out.push(eq_check(
            "modified subdifferential f-slope = g-slope",
            val(D(Family::F, SM)),
            val(D(Family::G, SM)),
        ));
    }
    // Primal strict slopes against their subdifferential counterparts.
    for fam in [Family::G, Family::Phi] {
        let n = family_name(fam);
        if h.closed_graph {
            out.push(le_check(
                format!("approximate subdifferential <= strict slope [{n}]"),
                val(D(fam, SA)),
                val(P(fam, PP)),
                rel_tol(val(P(fam, PP))) + EQUALITY_ABS,
            ));
        }
        if h.y_smooth && (h.closed_graph || h.convex) {
            out.push(eq_check(
                format!("strict slope = subdifferential [{n}]"),
                val(P(fam, PP)),
                val(D(fam, SP)),
            ));
            out.push(eq_check(
                format!("modified strict slope = subdifferential [{n}]"),
                val(P(fam, PM)),
                val(D(fam, SM)),
            ));
        }
    }
    // Strict subdifferential slopes equal the limiting coderivative image.
    out.push(eq_check(
        "strict subdifferential g-slope = limiting image",
        val(D(Family::G, SP)),
        val(L(LimitingKind::G)),
    ));
    out.push(eq_check(
        "approximate strict subdifferential g-slope = approximate limiting image",
        val(D(Family::G, SA)),
        val(L(LimitingKind::GApproximate)),
    ));
    out.push(eq_check(
        "strict subdifferential phi-slope = limiting phi image",
        val(D(Family::Phi, SP)),
        val(L(LimitingKind::Phi)),
    ));
    // Convex necessity bound.
    if h.convex {
        if let Ok(b) = convex_necessity_bound(ev) {
            out.push(le_check(
                "vartheta * modulus <= strict subdifferential phi-slope",
                b.lhs,
                b.rhs,
                EQUALITY_ABS,
            ));
        }
    }
    out
}

/// Audits one instance: every edge of the four diagrams plus the hierarchy checks.
pub fn audit_instance(
    ev: &Evaluation,
    gammas: &[f64],
    seed: u64,
) -> Result<ImplicationAuditReport> {
    let convexity = if ev.problem.hypotheses.convex {
        Some(convexity_spot_check(&ev.problem, 1000, seed)?)
    } else {
        None
    };
    let h = InstanceHypotheses::of(ev, convexity.as_ref());
    let mut diagnostics = Vec::new();
    if convexity.is_some_and(|c| c.failures > 0) {
        diagnostics.push(
            "declared convexity refuted by the midpoint spot-check; convex-only edges skipped"
                .into(),
        );
    }
    if let Some(r) = ev.dual_unsupported_reason() {
        diagnostics.push(format!("dual conditions undetermined: {r}"));
    }
    let tau = ev.value(Modulus).unwrap_or(f64::NAN);
    let mut statuses = Vec::new();
    for e in edges() {
        let name = format!("({}) => ({})", e.from, e.to);
        if !(e.hypotheses.1)(&h) {
            statuses.push(EdgeStatus {
                edge: name,
                diagram: e.diagram,
                hypotheses: e.hypotheses.0,
                gamma: None,
                source: None,
                target: None,
                status: EdgeState::NotApplicable,
            });
            continue;
        }
        let levels: Vec<Option<f64>> = match e.gamma {
            GammaRule::Positivity => vec![None],
            GammaRule::Grid => gammas.iter().map(|g| Some(*g)).collect(),
            GammaRule::BelowTau => vec![Some(0.9 * tau)],
            GammaRule::BelowThetaTau => vec![Some(0.9 * ev.vartheta.value * tau)],
        };
        for gamma in levels {
            if gamma.is_some_and(|g| !(g > 0.0 && g.is_finite())) {
                statuses.push(EdgeStatus {
                    edge: name.clone(),
                    diagram: e.diagram,
                    hypotheses: e.hypotheses.0,
                    gamma,
                    source: None,
                    target: None,
                    status: EdgeState::NotApplicable,
                });
                continue;
            }
            let s = condition_verdict(ev, e.diagram, e.from, gamma);
            let t = condition_verdict(ev, e.diagram, e.to, gamma);
            let status = match (s, t) {
                (Some(Verdict::Holds), Some(Verdict::Fails)) => EdgeState::Violated,
                (Some(Verdict::Holds), Some(Verdict::Holds)) => EdgeState::Consistent,
                (Some(Verdict::Holds), _) | (None, _) => EdgeState::Undetermined,
                _ => EdgeState::Vacuous,
            };
            statuses.push(EdgeStatus {
                edge: name.clone(),
                diagram: e.diagram,
                hypotheses: e.hypotheses.0,
                gamma,
                source: s,
                target: t,
                status,
            });
        }
    }
    let invariants = hierarchy_checks(ev, &h);
    let violations = statuses
        .iter()
        .filter(|s| s.status == EdgeState::Violated)
        .count()
        + invariants
            .iter()
            .filter(|c| c.status == EdgeState::Violated)
            .count();
    Ok(ImplicationAuditReport {
        instance: ev.problem.name.clone().unwrap_or_else(|| "unnamed".into()),
        hypotheses: h,
        convexity,
        edges: statuses,
        invariants,
        violations,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mappings::{MapVariant, Phi, Polyhedron, SetValuedMap, SmoothFn};
    use crate::problem::{Hypotheses, Sampling};
    use crate::spaces::ProductSpace;
    use std::f64::consts::FRAC_PI_3;

    fn smooth(params: SmoothFn, phi: Phi, radius: f64, res: usize) -> Problem {
        let map = SetValuedMap::new(
            ProductSpace::real_plane(),
            MapVariant::Smooth { params },
            ProductPoint::scalar(0.0, 0.0),
        )
        .unwrap();
        let s = Sampling {
            radius,
            resolution: res,
            ..Sampling::default()
        };
        Problem::new(
            map,
            phi,
            s,
            Hypotheses {
                convex: false,
                closed_graph: true,
            },
        )
        .unwrap()
    }

    #[test]
    fn margin_rule() {
        assert_eq!(margin_verdict(1.0, 0.9), Verdict::Holds);
        assert_eq!(margin_verdict(0.9, 0.9), Verdict::Inconclusive);
        assert_eq!(margin_verdict(0.0, 0.5), Verdict::Fails);
        assert_eq!(margin_verdict(f64::INFINITY, 0.5), Verdict::Holds);
        assert_eq!(positivity_verdict(0.005), Verdict::Inconclusive);
    }

    #[test]
    fn quantity_keys_round_trip() {
        for k in [
            Modulus,
            Growth,
            P(Family::Phi, PU),
            D(Family::F, SAM),
            QuantityKey::XiFree(SA),
            L(LimitingKind::GApproximate),
        ] {
            assert_eq!(k.to_string().parse::<QuantityKey>().unwrap(), k);
        }
        assert!("dual.h.plain".parse::<QuantityKey>().is_err());
    }

    #[test]
    fn cos_example_certificates() {
        let p = smooth(SmoothFn::OneMinusCos, Phi::CosExample, FRAC_PI_3, 401);
        let ev = Evaluation::new(&p).unwrap();
        let certs = check_quantitative(&ev, Family::Phi, 0.9).unwrap();
        for id in ["a", "b", "d", "h"] {
            let c = certs.iter().find(|c| c.criterion_id == id).unwrap();
            assert_eq!(c.verdict, Verdict::Holds, "{id}: {}", c.value);
            assert!(!c.witnesses.is_empty() || c.search.is_some());
        }
        let q = check_qualitative(&ev, Family::Phi).unwrap();
        for id in ["a", "c", "i"] {
            assert_eq!(
                q.iter().find(|c| c.criterion_id == id).unwrap().verdict,
                Verdict::Holds
            );
        }
    }

    #[test]
    fn parabola_fails_linear_subregularity() {
        let p = smooth(
            SmoothFn::Polynomial {
                coeffs: vec![0.0, 0.0, 1.0],
            },
            Phi::identity(),
            0.1,
            401,
        );
        let ev = Evaluation::new(&p).unwrap();
        let a = &check_quantitative(&ev, Family::G, 0.5).unwrap()[0];
        assert_eq!(a.verdict, Verdict::Fails);
        let q = check_qualitative(&ev, Family::G).unwrap();
        assert_eq!(q[0].verdict, Verdict::Fails);
        let half = ev.problem.with_phi(Phi::Power { q: 0.5 }).unwrap();
        let evh = Evaluation::new(&half).unwrap();
        let b = check_qualitative(&evh, Family::Phi)
            .unwrap()
            .into_iter()
            .find(|c| c.criterion_id == "b")
            .unwrap();
        assert_eq!(b.verdict, Verdict::Holds);
    }

    #[test]
    fn constant_map_is_vacuous() {
        let p = smooth(
            SmoothFn::Polynomial { coeffs: vec![0.0] },
            Phi::identity(),
            1.0,
            21,
        );
        let ev = Evaluation::new(&p).unwrap();
        for c in check_quantitative(&ev, Family::G, 0.5).unwrap() {
            assert_eq!(c.verdict, Verdict::Holds, "{}", c.criterion_id);
            assert_eq!(c.value, f64::INFINITY);
        }
    }

    #[test]
    fn convex_epigraph_audit_is_clean() {
        let map = SetValuedMap::new(
            ProductSpace::real_plane(),
            MapVariant::Polyhedral {
                inequalities: Polyhedron {
                    a: vec![vec![1.0, -1.0], vec![-1.0, -1.0]],
                    b: vec![0.0, 0.0],
                },
            },
            ProductPoint::scalar(0.0, 0.0),
        )
        .unwrap();
        let s = Sampling {
            radius: 0.1,
            resolution: 201,
            ..Sampling::default()
        };
        let p = Problem::new(
            map,
            Phi::identity(),
            s,
            Hypotheses {
                convex: true,
                closed_graph: true,
            },
        )
        .unwrap();
        let ev = Evaluation::new(&p).unwrap();
        let rep = audit_instance(&ev, &DEFAULT_GAMMAS, 1).unwrap();
        let bad: Vec<_> = rep
            .edges
            .iter()
            .filter(|e| e.status == EdgeState::Violated)
            .collect();
        let badi: Vec<_> = rep
            .invariants
            .iter()
            .filter(|e| e.status == EdgeState::Violated)
            .collect();
        assert_eq!(rep.violations, 0, "{bad:?} {badi:?}");
        assert_eq!(rep.convexity.unwrap().failures, 0);
        let b = convex_necessity_bound(&ev).unwrap();
        assert!(b.satisfied && (b.lhs - 1.0).abs() < 1e-6);
    }

    #[test]
    fn override_triggers_violation() {
        let p = smooth(
            SmoothFn::Affine {
                a: vec![vec![1.0]],
                b: vec![0.0],
            },
            Phi::identity(),
            1.0,
            201,
        );
        let ev = Evaluation::new(&p).unwrap().with_overrides(&[Override {
            quantity: P(Family::G, PM),
            value: 0.0,
        }]);
        let rep = audit_instance(&ev, &DEFAULT_GAMMAS, 1).unwrap();
        assert!(rep.violations > 0);
    }

    #[test]
    fn nonconvex_declared_convex_is_refuted() {
        let mut p = smooth(SmoothFn::OneMinusCos, Phi::identity(), 1.0, 101);
        p.hypotheses.convex = true;
        let r = convexity_spot_check(&p, 1000, 3).unwrap();
        assert!(r.failures > 0);
    }
}
