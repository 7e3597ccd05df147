//! Primal slopes: local and nonlocal ρ-slopes, their strict (limiting) versions and the
//! error-bound / subregularity moduli, all realized on finite samples of gph F.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::ext;
use crate::mappings::{g_from_phi, Gauge, LiftedFunction, Phi, SetValuedMap, ZERO_TOL};
use crate::problem::{Problem, Sampling};
use crate::spaces::{ProductPoint, ProductSpace};

pub use crate::problem::RhoSchedule;

/// Which gauge family a slope or modulus refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// The lifted function f = g + i_{gph F}.
    F,
    /// The gauge g = φ∘d(·,ȳ), slopes evaluated directly.
    G,
    /// The φ-form: φ′(d(y,ȳ)) times the ρ-slope of F.
    Phi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrictVariant {
    Plain,
    Modified,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplingInfo {
    pub radius: f64,
    pub resolution: usize,
}

impl From<&Sampling> for SamplingInfo {
    fn from(s: &Sampling) -> Self {
        SamplingInfo {
            radius: s.radius,
            resolution: s.resolution,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryStep {
    pub rho: f64,
    #[serde(with = "ext")]
    pub value: f64,
    #[serde(with = "ext")]
    pub lower: f64,
    #[serde(with = "ext")]
    pub upper: f64,
}

/// A sampled estimate of a slope or modulus with its bracket.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeEstimate {
    #[serde(with = "ext")]
    pub value: f64,
    #[serde(with = "ext")]
    pub lower: f64,
    #[serde(with = "ext")]
    pub upper: f64,
    #[serde(with = "ext::opt")]
    pub rho: Option<f64>,
    pub sampling: SamplingInfo,
    pub witness: Option<ProductPoint>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trajectory: Vec<TrajectoryStep>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl SlopeEstimate {
    pub(crate) fn exact(
        value: f64,
        rho: Option<f64>,
        sampling: &Sampling,
        witness: Option<ProductPoint>,
    ) -> Self {
        SlopeEstimate {
            value,
            lower: value,
            upper: value,
            rho,
            sampling: sampling.into(),
            witness,
            trajectory: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn bracket_ok(&self) -> bool {
        self.lower <= self.value && self.value <= self.upper
            || (self.value.is_nan() && self.lower.is_nan() && self.upper.is_nan())
    }
}

/// num/den with the division guard: tiny denominators give +∞ for positive numerators and are
/// skipped otherwise.
pub(crate) fn guarded_ratio(num: f64, den: f64) -> Option<f64> {
    if den < ZERO_TOL {
        (num > 0.0).then_some(f64::INFINITY)
    } else {
        Some(num / den)
    }
}

/// a·b on extended nonnegative reals with 0·∞ = 0.
pub(crate) fn mul_ext(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// Running maximum with the lexicographic witness tie-break.
pub(crate) fn improves_max(
    r: f64,
    q: &ProductPoint,
    best: f64,
    witness: Option<&ProductPoint>,
) -> bool {
    r > best || (r == best && witness.is_none_or(|w| q.lex_cmp(w) == Ordering::Less))
}

pub(crate) fn improves_min(
    r: f64,
    q: &ProductPoint,
    best: f64,
    witness: Option<&ProductPoint>,
) -> bool {
    r < best || (r == best && witness.is_none_or(|w| q.lex_cmp(w) == Ordering::Less))
}

/// Global sample of gph F around (x̄,ȳ).
#[derive(Debug, Clone)]
pub struct Cloud {
    pub points: Vec<ProductPoint>,
    pub isolated: bool,
}

impl Cloud {
    pub fn new(map: &SetValuedMap, sampling: &Sampling) -> Result<Self> {
        let s = map.graph_sample(&map.reference, sampling.radius, sampling.resolution)?;
        Ok(Cloud {
            points: s.points,
            isolated: s.isolated,
        })
    }
}

/// Nested punctured local samples around p at radii r₀·2^{-j}.
pub fn local_levels(
    map: &SetValuedMap,
    sampling: &Sampling,
    p: &ProductPoint,
) -> Vec<Vec<ProductPoint>> {
    let r0 = sampling.local_r0(map);
    (0..sampling.level_count(map))
        .map(|j| map.local_sample(p, r0 * 0.5f64.powi(j as i32), sampling.local_points))
        .collect()
}

/// Local limsup at one ρ: final-level maximum with the cross-level bracket.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOutcome {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub witness: Option<ProductPoint>,
}

/// max over q of [g(p) − g(q)]₊ / d_ρ(q,p) per level, for every ρ in `rhos`.
pub(crate) fn local_batch(
    sp: &ProductSpace,
    p: &ProductPoint,
    levels: &[Vec<ProductPoint>],
    gauge: &Gauge,
    rhos: &[f64],
) -> Vec<LocalOutcome> {
    let gp = gauge.value(&p.y);
    let mut per_level: Vec<Vec<(f64, Option<&ProductPoint>)>> = Vec::with_capacity(levels.len());
    for level in levels {
        let mut best: Vec<(f64, Option<&ProductPoint>)> = vec![(0.0, None); rhos.len()];
        for q in level {
            let num = (gp - gauge.value(&q.y)).max(0.0);
            let dx = sp.x.dist(&q.x, &p.x);
            let dy = sp.y.dist(&q.y, &p.y);
            for (b, rho) in best.iter_mut().zip(rhos) {
                if let Some(r) = guarded_ratio(num, f64::max(dx, rho * dy)) {
                    if improves_max(r, q, b.0, b.1) {
                        *b = (r, Some(q));
                    }
                }
            }
        }
        per_level.push(best);
    }
    (0..rhos.len())
        .map(|k| {
            let Some(last) = per_level.last() else {
                return LocalOutcome {
                    value: 0.0,
                    lower: 0.0,
                    upper: 0.0,
                    witness: None,
                };
            };
            let vals = per_level.iter().map(|l| l[k].0);
            LocalOutcome {
                value: last[k].0,
                lower: vals.clone().fold(f64::INFINITY, f64::min),
                upper: vals.fold(f64::NEG_INFINITY, f64::max),
                witness: last[k].1.cloned(),
            }
        })
        .collect()
}

/// sup over competitors q ≠ p of [g(p) − g(q)] / d_ρ(q,p), with or without the positive part.
/// No competitor gives 0.
pub(crate) fn nonlocal_batch<'a>(
    sp: &ProductSpace,
    p: &ProductPoint,
    competitors: impl Iterator<Item = (&'a ProductPoint, f64)>,
    gauge: &Gauge,
    rhos: &[f64],
    positive: bool,
) -> Vec<(f64, Option<ProductPoint>)> {
    let gp = gauge.value(&p.y);
    let init = if positive { 0.0 } else { f64::NEG_INFINITY };
    let mut best: Vec<(f64, Option<&ProductPoint>)> = vec![(init, None); rhos.len()];
    for (q, gq) in competitors {
        if q == p {
            continue;
        }
        let num = if positive {
            (gp - gq).max(0.0)
        } else {
            gp - gq
        };
        let dx = sp.x.dist(&q.x, &p.x);
        let dy = sp.y.dist(&q.y, &p.y);
        for (b, rho) in best.iter_mut().zip(rhos) {
            if let Some(r) = guarded_ratio(num, f64::max(dx, rho * dy)) {
                if improves_max(r, q, b.0, b.1) {
                    *b = (r, Some(q));
                }
            }
        }
    }
    best.into_iter()
        .map(|(v, w)| {
            if v == f64::NEG_INFINITY {
                (0.0, None)
            } else {
                (v, w.cloned())
            }
        })
        .collect()
}

fn require_on_graph(map: &SetValuedMap, p: &ProductPoint) -> Result<()> {
    map.spaces.check(p)?;
    if !map.contains(p) {
        return input("point is not on the graph of F (f(p) = +inf)");
    }
    Ok(())
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return input("rho must be positive and finite");
    }
    Ok(())
}

fn local_estimate(
    map: &SetValuedMap,
    gauge: &Gauge,
    p: &ProductPoint,
    rho: f64,
    sampling: &Sampling,
) -> SlopeEstimate {
    let levels = local_levels(map, sampling, p);
    let out = local_batch(&map.spaces, p, &levels, gauge, &[rho]).remove(0);
    let mut est = SlopeEstimate::exact(out.value, Some(rho), sampling, out.witness);
    est.lower = out.lower;
    est.upper = out.upper;
    if levels.iter().all(|l| l.is_empty()) {
        est.diagnostics
            .push("no graph neighbours sampled; slope set to 0".into());
    }
    est
}

/// ρ-slope |∇f|_ρ(p) of the lifted function.
pub fn local_rho_slope_f(
    f: &LiftedFunction,
    p: &ProductPoint,
    rho: f64,
    sampling: &Sampling,
) -> Result<SlopeEstimate> {
    check_rho(rho)?;
    require_on_graph(f.map, p)?;
    Ok(local_estimate(f.map, f.gauge, p, rho, sampling))
}

fn nonlocal_estimate(
    map: &SetValuedMap,
    gauge: &Gauge,
    p: &ProductPoint,
    rho: f64,
    sampling: &Sampling,
    positive: bool,
) -> Result<SlopeEstimate> {
    let cloud = Cloud::new(map, sampling)?;
    let levels = local_levels(map, sampling, p);
    let comps = cloud
        .points
        .iter()
        .chain(levels.iter().flatten())
        .map(|q| (q, gauge.value(&q.y)));
    let (v, w) = nonlocal_batch(&map.spaces, p, comps, gauge, &[rho], positive).remove(0);
    Ok(SlopeEstimate::exact(v, Some(rho), sampling, w))
}

/// Nonlocal ρ-slope of f (equivalently the nonlocal (g,ρ)-slope): competitors are the global
/// sample together with the nested local samples around p.
pub fn nonlocal_rho_slope(
    f: &LiftedFunction,
    p: &ProductPoint,
    rho: f64,
    sampling: &Sampling,
) -> Result<SlopeEstimate> {
    check_rho(rho)?;
    require_on_graph(f.map, p)?;
    nonlocal_estimate(f.map, f.gauge, p, rho, sampling, true)
}

/// Nonlocal (φ,ρ)-slope: the same supremum without the positive part.
pub fn phi_nonlocal_slope(
    map: &SetValuedMap,
    phi: &Phi,
    p: &ProductPoint,
    rho: f64,
    sampling: &Sampling,
) -> Result<SlopeEstimate> {
    check_rho(rho)?;
    require_on_graph(map, p)?;
    let gauge = g_from_phi(phi.clone(), map.ybar(), map.spaces.y);
    nonlocal_estimate(map, &gauge, p, rho, sampling, false)
}

pub fn distance_gauge(map: &SetValuedMap) -> Gauge {
    g_from_phi(Phi::identity(), map.ybar(), map.spaces.y)
}

/// ρ-slope |∇F|_ρ(p) with numerator [d(y,ȳ) − d(v,ȳ)]₊.
#[allow(non_snake_case)]
pub fn rho_slope_F(
    map: &SetValuedMap,
    p: &ProductPoint,
    rho: f64,
    sampling: &Sampling,
) -> Result<SlopeEstimate> {
    check_rho(rho)?;
    require_on_graph(map, p)?;
    Ok(local_estimate(map, &distance_gauge(map), p, rho, sampling))
}

/// Direct (g,ρ)-slope together with the factorized value φ′(d(y,ȳ))·|∇F|_ρ(p).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GSlope {
    pub direct: SlopeEstimate,
    #[serde(with = "ext")]
    pub factorized: f64,
}

#[allow(non_snake_case)]
pub fn g_rho_slope_F(
    map: &SetValuedMap,
    gauge: &Gauge,
    p: &ProductPoint,
    rho: f64,
    sampling: &Sampling,
) -> Result<GSlope> {
    check_rho(rho)?;
    require_on_graph(map, p)?;
    let t = gauge.dist(&p.y);
    if t <= ZERO_TOL {
        return Err(Error::Domain("phi' queried at 0 (y = ybar)".into()));
    }
    let direct = local_estimate(map, gauge, p, rho, sampling);
    let plain = local_estimate(map, &distance_gauge(map), p, rho, sampling);
    Ok(GSlope {
        direct,
        factorized: mul_ext(gauge.phi.deriv(t), plain.value),
    })
}

/// Per-point data for every admissible candidate, evaluated on the whole ρ-schedule.
#[derive(Debug, Clone)]
pub struct PointRecord {
    pub point: ProductPoint,
    pub dx: f64,
    pub dy: f64,
    /// g(y) = φ(d(y,ȳ)).
    pub g: f64,
    /// φ′(d(y,ȳ)).
    pub dphi: f64,
    /// d(x, F⁻¹(ȳ)).
    pub dist_inv: f64,
    /// Local ρ-slope of F per schedule step.
    pub loc_d: Vec<LocalOutcome>,
    /// Local (g,ρ)-slope per schedule step.
    pub loc_g: Vec<LocalOutcome>,
    /// Nonlocal (g,ρ)-slope per step.
    pub nl_g: Vec<f64>,
    /// Nonlocal (φ,ρ)-slope per step.
    pub nl_phi: Vec<f64>,
}

/// Everything the primal criteria need, computed once per problem.
#[derive(Debug, Clone)]
pub struct PrimalProfile {
    pub rhos: Vec<f64>,
    pub sampling: Sampling,
    pub cloud: Cloud,
    pub records: Vec<PointRecord>,
}

/// Cloud points with ‖x − x̄‖ < ρ, d(y,ȳ) < ρ and x ∉ F⁻¹(ȳ).
pub(crate) fn admissible_candidates<'a>(
    problem: &Problem,
    cloud: &'a Cloud,
    rho: f64,
) -> Vec<&'a ProductPoint> {
    let map = &problem.map;
    let gauge = problem.gauge();
    cloud
        .points
        .iter()
        .filter(|p| {
            map.spaces.x.dist(&p.x, map.xbar()) < rho
                && gauge.dist(&p.y) < rho
                && !map.in_inverse(&p.x)
        })
        .collect()
}

pub fn primal_profile(problem: &Problem) -> Result<PrimalProfile> {
    let map = &problem.map;
    let sampling = problem.sampling;
    let rhos = problem.schedule().rhos();
    let cloud = Cloud::new(map, &sampling)?;
    let gauge = problem.gauge();
    let dgauge = distance_gauge(map);
    let sp = map.spaces;
    let cloud_g: Vec<f64> = cloud.points.iter().map(|q| gauge.value(&q.y)).collect();
    let candidates = admissible_candidates(problem, &cloud, rhos[0]);
    let records: Vec<Result<PointRecord>> = candidates
        .par_iter()
        .map(|p| {
            let p = *p;
            let levels = local_levels(map, &sampling, p);
            let dy = gauge.dist(&p.y);
            let comps = || {
                cloud
                    .points
                    .iter()
                    .zip(cloud_g.iter().copied())
                    .chain(levels.iter().flatten().map(|q| (q, gauge.value(&q.y))))
            };
            Ok(PointRecord {
                point: p.clone(),
                dx: sp.x.dist(&p.x, map.xbar()),
                dy,
                g: gauge.value(&p.y),
                dphi: gauge.phi.deriv(dy),
                dist_inv: map.dist_to_inverse_image(&p.x, sampling.window)?,
                loc_d: local_batch(&sp, p, &levels, &dgauge, &rhos),
                loc_g: local_batch(&sp, p, &levels, &gauge, &rhos),
                nl_g: nonlocal_batch(&sp, p, comps(), &gauge, &rhos, true)
                    .into_iter()
                    .map(|r| r.0)
                    .collect(),
                nl_phi: nonlocal_batch(&sp, p, comps(), &gauge, &rhos, false)
                    .into_iter()
                    .map(|r| r.0)
                    .collect(),
            })
        })
        .collect();
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(PrimalProfile {
        rhos,
        sampling,
        cloud,
        records,
    })
}

/// Value with bracket for one admissible point at one step.
pub type Triple = (f64, f64, f64);

/// Infimum over admissible records of `f(record, step)`, one trajectory entry per step.
/// The value and witness come from the final step.
pub(crate) fn schedule_inf<R>(
    rhos: &[f64],
    sampling: &Sampling,
    records: &[R],
    key: impl Fn(&R) -> (&ProductPoint, f64, f64),
    f: impl Fn(&R, usize) -> Triple,
    isolated: bool,
) -> SlopeEstimate {
    let mut trajectory = Vec::with_capacity(rhos.len());
    let mut diagnostics = Vec::new();
    let mut witness = None;
    for (k, &rho) in rhos.iter().enumerate() {
        let mut best = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut w: Option<&ProductPoint> = None;
        for r in records {
            let (p, dx, dy) = key(r);
            if !(dx < rho && dy < rho) {
                continue;
            }
            let t = f(r, k);
            if improves_min(t.0, p, best.0, w) {
                best.0 = t.0;
                w = Some(p);
            }
            best.1 = best.1.min(t.1);
            best.2 = best.2.min(t.2);
        }
        if w.is_none() {
            diagnostics.push(format!(
                "no admissible graph point at rho = {rho}; inf over the empty set is +inf"
            ));
        }
        if k + 1 == rhos.len() {
            witness = w.cloned();
        }
        trajectory.push(TrajectoryStep {
            rho,
            value: best.0,
            lower: best.1,
            upper: best.2,
        });
    }
    if isolated {
        diagnostics.push("reference point is isolated in the sample".into());
    }
    let last = *trajectory.last().expect("schedule is nonempty");
    SlopeEstimate {
        value: last.value,
        lower: last.lower,
        upper: last.upper,
        rho: Some(last.rho),
        sampling: sampling.into(),
        witness,
        trajectory,
        diagnostics,
    }
}

fn max_triple(t: Triple, c: f64) -> Triple {
    (t.0.max(c), t.1.max(c), t.2.max(c))
}

fn scale_triple(s: f64, l: &LocalOutcome) -> Triple {
    (
        mul_ext(s, l.value),
        mul_ext(s, l.lower),
        mul_ext(s, l.upper),
    )
}

fn local_triple(l: &LocalOutcome) -> Triple {
    (l.value, l.lower, l.upper)
}

impl PrimalProfile {
    pub fn admissible(&self, r: &PointRecord, k: usize) -> bool {
        r.dx < self.rhos[k] && r.dy < self.rhos[k]
    }

    pub fn schedule_inf(&self, f: impl Fn(&PointRecord, usize) -> Triple) -> SlopeEstimate {
        schedule_inf(
            &self.rhos,
            &self.sampling,
            &self.records,
            |r| (&r.point, r.dx, r.dy),
            f,
            self.cloud.isolated,
        )
    }

    /// Strict slope of the given family and variant.
    pub fn strict(&self, family: Family, variant: StrictVariant) -> SlopeEstimate {
        match (family, variant) {
            (Family::F | Family::G, StrictVariant::Plain) => {
                self.schedule_inf(|r, k| local_triple(&r.loc_g[k]))
            }
            (Family::F | Family::G, StrictVariant::Modified) => {
                self.schedule_inf(|r, k| max_triple(local_triple(&r.loc_g[k]), r.g / r.dx))
            }
            (Family::F | Family::G, StrictVariant::Uniform) => {
                self.schedule_inf(|r, k| (r.nl_g[k], r.nl_g[k], r.nl_g[k]))
            }
            (Family::Phi, StrictVariant::Plain) => {
                self.schedule_inf(|r, k| scale_triple(r.dphi, &r.loc_d[k]))
            }
            (Family::Phi, StrictVariant::Modified) => {
                self.schedule_inf(|r, k| max_triple(scale_triple(r.dphi, &r.loc_d[k]), r.g / r.dx))
            }
            (Family::Phi, StrictVariant::Uniform) => {
                self.schedule_inf(|r, k| (r.nl_phi[k], r.nl_phi[k], r.nl_phi[k]))
            }
        }
    }

    /// The ρ-modified quantity max{slope, g(y)/d_ρ((x,y),(x̄,ȳ))}, bounded above by the
    /// nonlocal slope at every step.
    pub fn rho_modified(&self, family: Family) -> SlopeEstimate {
        let rhos = &self.rhos;
        self.schedule_inf(|r, k| {
            let c = r.g / f64::max(r.dx, rhos[k] * r.dy);
            match family {
                Family::Phi => max_triple(scale_triple(r.dphi, &r.loc_d[k]), c),
                _ => max_triple(local_triple(&r.loc_g[k]), c),
            }
        })
    }

    /// liminf of g(y)/d(x, F⁻¹(ȳ)) over admissible points.
    pub fn modulus(&self) -> SlopeEstimate {
        tail_bracket(self.schedule_inf(|r, _| {
            let v = guarded_ratio(r.g, r.dist_inv).unwrap_or(f64::INFINITY);
            (v, v, v)
        }))
    }

    /// liminf of g(y)/d(x, x̄) over admissible points.
    pub fn growth(&self) -> SlopeEstimate {
        tail_bracket(self.schedule_inf(|r, _| {
            let v = r.g / r.dx;
            (v, v, v)
        }))
    }
}

/// Bracket of a schedule limit: min/max over the finite tail half of the trajectory.
fn tail_bracket(mut est: SlopeEstimate) -> SlopeEstimate {
    let n = est.trajectory.len();
    let tail = &est.trajectory[n / 2..];
    let finite: Vec<f64> = tail
        .iter()
        .map(|s| s.value)
        .filter(|v| v.is_finite())
        .collect();
    if est.value.is_finite() && !finite.is_empty() {
        est.lower = finite.iter().copied().fold(est.value, f64::min);
        est.upper = finite.iter().copied().fold(est.value, f64::max);
    }
    est
}

/// Strict slope of any of the nine family/variant combinations.
pub fn strict_slope(
    problem: &Problem,
    family: Family,
    variant: StrictVariant,
) -> Result<SlopeEstimate> {
    Ok(primal_profile(problem)?.strict(family, variant))
}

/// Error-bound modulus Er f(x̄,ȳ) of the lifted function.
pub fn error_bound_modulus(problem: &Problem) -> Result<SlopeEstimate> {
    Ok(primal_profile(problem)?.modulus())
}

/// Subregularity modulus sr for the f-, g- or φ-gauge of the problem. With g = φ∘d(·,ȳ) all
/// three coincide; the nearest y ∈ F(x) is realized by the admissible-set infimum.
pub fn subregularity_modulus(problem: &Problem, _family: Family) -> Result<SlopeEstimate> {
    Ok(primal_profile(problem)?.modulus())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mappings::{lift, MapVariant, SmoothFn};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

    fn cos_problem(phi: Phi, resolution: usize) -> Problem {
        let map = SetValuedMap::new(
            ProductSpace::real_plane(),
            MapVariant::Smooth {
                params: SmoothFn::OneMinusCos,
            },
            ProductPoint::scalar(0.0, 0.0),
        )
        .unwrap();
        let sampling = Sampling {
            radius: FRAC_PI_3,
            resolution,
            ..Sampling::default()
        };
        Problem::new(map, phi, sampling, Default::default()).unwrap()
    }

    fn graph_point(x: f64) -> ProductPoint {
        ProductPoint::scalar(x, 1.0 - x.cos())
    }

    #[test]
    fn rho_slope_matches_sine() {
        let p = cos_problem(Phi::identity(), 2001);
        for x in [0.1, 0.3, FRAC_PI_6, FRAC_PI_4, 1.0, FRAC_PI_2] {
            let s = rho_slope_F(&p.map, &graph_point(x), 0.5, &p.sampling).unwrap();
            assert!((s.value - x.sin()).abs() < 1e-3, "x = {x}: {}", s.value);
            assert!(s.bracket_ok());
        }
    }

    #[test]
    fn lifted_local_slope_with_identity_gauge() {
        let p = cos_problem(Phi::identity(), 2001);
        let g = p.gauge();
        let f = lift(&p.map, &g);
        let s = local_rho_slope_f(&f, &graph_point(FRAC_PI_6), 0.5, &p.sampling).unwrap();
        assert!((s.value - 0.5).abs() < 1e-3);
        let off = ProductPoint::scalar(0.3, 2.0);
        assert!(local_rho_slope_f(&f, &off, 0.5, &p.sampling).is_err());
    }

    #[test]
    fn factorized_slope_is_one_on_cos_example() {
        let p = cos_problem(Phi::CosExample, 2001);
        let g = p.gauge();
        for x in [0.05, 0.2, 0.6] {
            let s = g_rho_slope_F(&p.map, &g, &graph_point(x), 0.5, &p.sampling).unwrap();
            assert!((s.factorized - 1.0).abs() < 1e-3, "{x}: {}", s.factorized);
            assert!((s.direct.value - s.factorized).abs() <= 1e-2 * (1.0 + s.factorized));
        }
        assert!(matches!(
            g_rho_slope_F(&p.map, &g, &p.map.reference, 0.5, &p.sampling),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn cos_example_strict_slopes_and_modulus() {
        let p = cos_problem(Phi::CosExample, 401);
        let prof = primal_profile(&p).unwrap();
        for v in [
            StrictVariant::Plain,
            StrictVariant::Modified,
            StrictVariant::Uniform,
        ] {
            let s = prof.strict(Family::Phi, v);
            assert!((s.value - 1.0).abs() < 2e-2, "{v:?}: {}", s.value);
        }
        let m = prof.modulus();
        assert!((m.value - 1.0).abs() < 1e-6, "{}", m.value);
    }

    #[test]
    fn constant_map_is_vacuous() {
        let map = SetValuedMap::new(
            ProductSpace::real_plane(),
            MapVariant::Smooth {
                params: SmoothFn::Polynomial { coeffs: vec![0.0] },
            },
            ProductPoint::scalar(0.0, 0.0),
        )
        .unwrap();
        let p = Problem::new(
            map,
            Phi::identity(),
            Sampling {
                resolution: 21,
                ..Default::default()
            },
            Default::default(),
        )
        .unwrap();
        let s = strict_slope(&p, Family::G, StrictVariant::Plain).unwrap();
        assert_eq!(s.value, f64::INFINITY);
        assert!(!s.diagnostics.is_empty());
    }

    #[test]
    fn parabola_holder_moduli() {
        let map = SetValuedMap::new(
            ProductSpace::real_plane(),
            MapVariant::Smooth {
                params: SmoothFn::Polynomial {
                    coeffs: vec![0.0, 0.0, 1.0],
                },
            },
            ProductPoint::scalar(0.0, 0.0),
        )
        .unwrap();
        let sampling = Sampling {
            radius: 0.1,
            resolution: 401,
            ..Default::default()
        };
        let half = Problem::new(
            map.clone(),
            Phi::Power { q: 0.5 },
            sampling,
            Default::default(),
        )
        .unwrap();
        let lin = Problem::new(map, Phi::identity(), sampling, Default::default()).unwrap();
        assert!((subregularity_modulus(&half, Family::Phi).unwrap().value - 1.0).abs() < 1e-9);
        assert!(subregularity_modulus(&lin, Family::Phi).unwrap().value < 0.05);
    }

    #[test]
    fn single_point_nonlocal_is_zero() {
        let p0 = ProductPoint::scalar(0.0, 0.0);
        let map = SetValuedMap::new(
            ProductSpace::real_plane(),
            MapVariant::Sampled {
                samples: vec![p0.clone()],
            },
            p0.clone(),
        )
        .unwrap();
        let g = distance_gauge(&map);
        let f = lift(&map, &g);
        let s = nonlocal_rho_slope(&f, &p0, 1.0, &Sampling::default()).unwrap();
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn three_point_nonlocal_by_hand() {
        let pts = vec![
            ProductPoint::scalar(0.0, 0.0),
            ProductPoint::scalar(1.0, 1.0),
            ProductPoint::scalar(2.0, 1.0),
        ];
        let map = SetValuedMap::new(
            ProductSpace::real_plane(),
            MapVariant::Sampled {
                samples: pts.clone(),
            },
            pts[0].clone(),
        )
        .unwrap();
        let g = distance_gauge(&map);
        let f = lift(&map, &g);
        let sampling = Sampling {
            radius: 10.0,
            ..Default::default()
        };
        let s = nonlocal_rho_slope(&f, &pts[2], 1.0, &sampling).unwrap();
        assert_eq!(s.value, 0.5);
        assert_eq!(s.witness, Some(pts[0].clone()));
    }
}
