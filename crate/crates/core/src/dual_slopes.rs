//! Normal cones, coderivatives, subdifferential slopes and limiting outer coderivatives.
//!
//! Coderivatives are computed from the structure of the graph: the gradient for smooth maps,
//! active constraints for polyhedral and epigraph graphs. Finite samples only get a numerical
//! normal-cone test; their coderivatives are reported as unsupported.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext;
use crate::mappings::{Gauge, LiftedFunction, MapVariant, SetValuedMap, GRAPH_TOL, ZERO_TOL};
use crate::primal_slopes::{
    admissible_candidates, schedule_inf, Cloud, Family, SlopeEstimate, Triple,
};
use crate::problem::{Problem, Sampling};
use crate::spaces::{self, lex_cmp, ProductPoint, Space};

const DIRECTION_TOL: f64 = 1e-3;
const PERSISTENCE: usize = 4;
const KERNEL_TOL: f64 = 1e-3;
const NORMAL_SCORE_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DualKind {
    Singleton,
    ConeFace,
    Polytope,
    SphereFlag,
}

/// Finite description of a set of dual vectors. Polytope generators are vertices and may have
/// infinite coordinates for unbounded intervals; cone-face generators span a cone; an empty
/// polytope is the empty set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualVectorSet {
    pub kind: DualKind,
    pub generators: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub scores: Vec<f64>,
}

impl DualVectorSet {
    pub fn singleton(v: Vec<f64>) -> Self {
        DualVectorSet {
            kind: DualKind::Singleton,
            generators: vec![v],
            scores: Vec::new(),
        }
    }

    pub fn cone(generators: Vec<Vec<f64>>) -> Self {
        DualVectorSet {
            kind: DualKind::ConeFace,
            generators,
            scores: Vec::new(),
        }
    }

    pub fn polytope(mut generators: Vec<Vec<f64>>) -> Self {
        generators.sort_by(|a, b| lex_cmp(a, b));
        generators.dedup();
        if generators.len() == 1 {
            return DualVectorSet::singleton(generators.remove(0));
        }
        DualVectorSet {
            kind: DualKind::Polytope,
            generators,
            scores: Vec::new(),
        }
    }

    pub fn empty() -> Self {
        DualVectorSet {
            kind: DualKind::Polytope,
            generators: Vec::new(),
            scores: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.kind == DualKind::Polytope && self.generators.is_empty()
    }
}

/// Local description of N_{gph F}(x,y) in the form used by the coderivative.
#[derive(Debug, Clone, PartialEq)]
enum NormalModel {
    /// Graph of a smooth map: x* = ∇F(x)ᵀ y* for every y*.
    Linear { jac: Vec<Vec<f64>> },
    /// x* = y*·w for y* with sign·y* ≥ 0 (scalar y).
    Ray { w: Vec<f64>, sign: f64 },
    /// N = cone{(a, 0)}: only y* = 0, with x* on the ray λa.
    HorizontalRay { a: Vec<f64> },
    /// N = {0}.
    Zero,
    /// dim X = dim Y = 1: N = cone of the listed (n_x, n_y) generators.
    Cone2d { gens: Vec<[f64; 2]> },
}

fn normal_model(map: &SetValuedMap, p: &ProductPoint) -> Result<NormalModel> {
    map.spaces.check(p)?;
    if !map.contains(p) {
        return Err(Error::OffGraph);
    }
    let n = map.spaces.x.dim;
    match &map.variant {
        MapVariant::Smooth { params } => Ok(NormalModel::Linear {
            jac: params.jacobian(&p.x),
        }),
        MapVariant::Epigraph { params } => {
            let f = params.eval(&p.x)[0];
            if p.y[0] - f <= GRAPH_TOL {
                Ok(NormalModel::Ray {
                    w: params.jacobian(&p.x).remove(0),
                    sign: 1.0,
                })
            } else {
                Ok(NormalModel::Zero)
            }
        }
        MapVariant::Polyhedral { inequalities } => {
            let active = inequalities.active(&p.x, &p.y, GRAPH_TOL);
            let rows: Vec<&Vec<f64>> = active.iter().map(|&i| &inequalities.a[i]).collect();
            let rows: Vec<&Vec<f64>> = rows
                .into_iter()
                .filter(|r| r.iter().any(|v| *v != 0.0))
                .collect();
            match rows.len() {
                0 => Ok(NormalModel::Zero),
                1 => {
                    let (ax, ay) = (&rows[0][..n], rows[0][n]);
                    if ay == 0.0 {
                        Ok(NormalModel::HorizontalRay { a: ax.to_vec() })
                    } else {
                        Ok(NormalModel::Ray {
                            w: spaces::scale(ax, -1.0 / ay),
                            sign: -ay.signum(),
                        })
                    }
                }
                _ if n == 1 => Ok(NormalModel::Cone2d {
                    gens: rows.iter().map(|r| [r[0], r[1]]).collect(),
                }),
                _ => Err(Error::Unsupported(
                    "polyhedral vertex cones need dim X = 1".into(),
                )),
            }
        }
        MapVariant::Sampled { .. } => Err(Error::Unsupported(
            "coderivatives of finite samples are not computable".into(),
        )),
    }
}

/// Fréchet normal cone N_{gph F}(p) as generators (x*, y*) of the concatenated dual space.
pub fn normal_cone(map: &SetValuedMap, p: &ProductPoint) -> Result<DualVectorSet> {
    let (n, m) = (map.spaces.x.dim, map.spaces.y.dim);
    if map.is_sampled() {
        return sampled_normal_cone(map, p);
    }
    Ok(match normal_model(map, p)? {
        NormalModel::Linear { jac } => {
            let mut gens = Vec::new();
            for (i, row) in jac.iter().enumerate().take(m) {
                for s in [1.0, -1.0] {
                    let mut g: Vec<f64> = row.iter().take(n).map(|a| s * a).collect();
                    g.extend((0..m).map(|k| if k == i { -s } else { 0.0 }));
                    gens.push(g);
                }
            }
            DualVectorSet::cone(gens)
        }
        NormalModel::Ray { w, sign } => {
            let mut g = spaces::scale(&w, sign);
            g.push(-sign);
            DualVectorSet::cone(vec![g])
        }
        NormalModel::HorizontalRay { a } => {
            let mut g = a;
            g.push(0.0);
            DualVectorSet::cone(vec![g])
        }
        NormalModel::Zero => DualVectorSet::singleton(vec![0.0; n + m]),
        NormalModel::Cone2d { gens } => {
            DualVectorSet::cone(gens.iter().map(|g| g.to_vec()).collect())
        }
    })
}

/// Shrinking-quotient test on a finite sample: unit directions n with
/// sup ⟨n, q − p⟩/‖q − p‖ ≤ tol over nearby sample points, with their scores.
fn sampled_normal_cone(map: &SetValuedMap, p: &ProductPoint) -> Result<DualVectorSet> {
    if !map.is_scalar() {
        return Err(Error::Unsupported(
            "numerical normal cones need dim X = dim Y = 1".into(),
        ));
    }
    if !map.contains(p) {
        return Err(Error::OffGraph);
    }
    let MapVariant::Sampled { samples } = &map.variant else {
        unreachable!()
    };
    let mut near: Vec<(f64, [f64; 2])> = samples
        .iter()
        .filter(|q| *q != p)
        .map(|q| {
            let d = [q.x[0] - p.x[0], q.y[0] - p.y[0]];
            ((d[0] * d[0] + d[1] * d[1]).sqrt(), d)
        })
        .collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0));
    near.truncate(8);
    let mut gens = Vec::new();
    let mut scores = Vec::new();
    for k in 0..360 {
        let th = std::f64::consts::TAU * k as f64 / 360.0;
        let nv = [th.cos(), th.sin()];
        let score = near
            .iter()
            .map(|(r, d)| (nv[0] * d[0] + nv[1] * d[1]) / r)
            .fold(f64::NEG_INFINITY, f64::max);
        if score <= NORMAL_SCORE_TOL {
            gens.push(nv.to_vec());
            scores.push(score);
        }
    }
    if near.is_empty() {
        gens.clear();
        scores.clear();
    }
    Ok(DualVectorSet {
        kind: DualKind::ConeFace,
        generators: gens,
        scores,
    })
}

/// Directions d ∈ cone(gens) in the plane.
fn in_cone_2d(gens: &[[f64; 2]], d: [f64; 2]) -> bool {
    let tol = 1e-12;
    for g in gens {
        let cross = g[0] * d[1] - g[1] * d[0];
        let dot = g[0] * d[0] + g[1] * d[1];
        if cross.abs() <= tol * (g[0].abs() + g[1].abs()) && dot > 0.0 {
            return true;
        }
    }
    for (i, a) in gens.iter().enumerate() {
        for b in &gens[i + 1..] {
            let det = a[0] * b[1] - a[1] * b[0];
            if det.abs() <= tol {
                continue;
            }
            let u = (d[0] * b[1] - d[1] * b[0]) / det;
            let v = (a[0] * d[1] - a[1] * d[0]) / det;
            if u >= -tol && v >= -tol {
                return true;
            }
        }
    }
    false
}

/// inf |s| over (s,t) ∈ cone(gens) with t in [tlo, thi] (open strip if `open`).
/// Returns (value, s, t) at a minimizer, or None when the set is empty.
fn cone_strip_min(gens: &[[f64; 2]], tlo: f64, thi: f64, open: bool) -> Option<(f64, f64, f64)> {
    let mut cands: Vec<[f64; 2]> = Vec::new();
    if tlo <= 0.0 && 0.0 <= thi {
        cands.push([0.0, 0.0]);
    }
    for g in gens {
        if g[1] == 0.0 {
            continue;
        }
        for t in [tlo, thi] {
            let lam = t / g[1];
            if lam >= 0.0 {
                cands.push([g[0] * lam, t]);
            }
        }
    }
    if cands.is_empty() {
        return None;
    }
    if open {
        let tmin = cands.iter().map(|c| c[1]).fold(f64::INFINITY, f64::min);
        let tmax = cands.iter().map(|c| c[1]).fold(f64::NEG_INFINITY, f64::max);
        if !(tmax > tlo && tmin < thi) {
            return None;
        }
    }
    cands.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let lo = cands[0];
    let hi = cands[cands.len() - 1];
    let up = in_cone_2d(gens, [1.0, 0.0]);
    let down = in_cone_2d(gens, [-1.0, 0.0]);
    if let Some(c) = cands.iter().find(|c| c[0] == 0.0) {
        return Some((0.0, 0.0, c[1]));
    }
    let smin = if down { f64::NEG_INFINITY } else { lo[0] };
    let smax = if up { f64::INFINITY } else { hi[0] };
    if smin <= 0.0 && 0.0 <= smax {
        let t = if lo[0] < 0.0 && hi[0] > 0.0 {
            let th = hi[0] / (hi[0] - lo[0]);
            th * lo[1] + (1.0 - th) * hi[1]
        } else if lo[0] > 0.0 {
            lo[1]
        } else {
            hi[1]
        };
        return Some((0.0, 0.0, t));
    }
    if smin > 0.0 {
        Some((lo[0], lo[0], lo[1]))
    } else {
        Some((-hi[0], hi[0], hi[1]))
    }
}

/// x*-interval of the slice {s : (s,t) ∈ cone(gens)}.
fn cone_slice(gens: &[[f64; 2]], t: f64) -> Option<(f64, f64)> {
    let mut ss: Vec<f64> = Vec::new();
    if t == 0.0 {
        ss.push(0.0);
    }
    for g in gens {
        if g[1] != 0.0 && t / g[1] >= 0.0 {
            ss.push(g[0] * (t / g[1]));
        }
    }
    if ss.is_empty() {
        return None;
    }
    let mut lo = ss.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = ss.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if in_cone_2d(gens, [1.0, 0.0]) {
        hi = f64::INFINITY;
    }
    if in_cone_2d(gens, [-1.0, 0.0]) {
        lo = f64::NEG_INFINITY;
    }
    Some((lo, hi))
}

fn matvec_t(jac: &[Vec<f64>], ystar: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| jac.iter().zip(ystar).map(|(row, y)| row[j] * y).sum())
        .collect()
}

/// D*F(p)(y*) for each generator of `ystar`, as one dual set.
pub fn coderivative(
    map: &SetValuedMap,
    p: &ProductPoint,
    ystar: &DualVectorSet,
) -> Result<DualVectorSet> {
    let model = normal_model(map, p)?;
    let n = map.spaces.x.dim;
    if ystar.kind == DualKind::SphereFlag {
        return Err(Error::Unsupported(
            "coderivative of the whole dual sphere".into(),
        ));
    }
    for y in &ystar.generators {
        map.spaces.y.check(y)?;
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut cone_out: Option<Vec<Vec<f64>>> = None;
    for y in &ystar.generators {
        let zero = y.iter().all(|v| *v == 0.0);
        match &model {
            NormalModel::Linear { jac } => out.push(matvec_t(jac, y, n)),
            NormalModel::Ray { w, sign } => {
                if zero {
                    out.push(vec![0.0; n]);
                } else if sign * y[0] >= 0.0 {
                    out.push(spaces::scale(w, y[0]));
                }
            }
            NormalModel::Zero => {
                if zero {
                    out.push(vec![0.0; n]);
                }
            }
            NormalModel::HorizontalRay { a } => {
                if zero {
                    cone_out = Some(vec![a.clone()]);
                }
            }
            NormalModel::Cone2d { gens } => {
                if let Some((lo, hi)) = cone_slice(gens, -y[0]) {
                    out.push(vec![lo]);
                    out.push(vec![hi]);
                }
            }
        }
    }
    if let Some(c) = cone_out {
        return Ok(DualVectorSet::cone(c));
    }
    if out.is_empty() {
        return Ok(DualVectorSet::empty());
    }
    if ystar.kind == DualKind::Singleton && out.len() == 1 {
        return Ok(DualVectorSet::singleton(out.remove(0)));
    }
    Ok(DualVectorSet::polytope(out))
}

/// Minimizer of ‖x*‖ over x* ∈ D*F(p)(y*), ‖y* − c‖ ≤ r.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualMin {
    #[serde(with = "ext")]
    pub value: f64,
    pub ystar: Vec<f64>,
    pub xstar: Vec<f64>,
}

impl DualMin {
    fn empty() -> Self {
        DualMin {
            value: f64::INFINITY,
            ystar: Vec::new(),
            xstar: Vec::new(),
        }
    }

    fn better(&self, other: &DualMin) -> bool {
        self.value < other.value
            || (self.value == other.value
                && lex_cmp(
                    self.ystar.iter().chain(&self.xstar),
                    other.ystar.iter().chain(&other.xstar),
                ) == Ordering::Less)
    }
}

/// Point of [a, b] ∩ {sign·s ≥ 0} nearest to 0 (open interval if `open`); None if empty.
fn nearest_to_zero(a: f64, b: f64, sign: Option<f64>, open: bool) -> Option<f64> {
    let (mut lo, mut hi) = (a, b);
    let (mut lo_open, mut hi_open) = (open, open);
    match sign {
        Some(s) if s > 0.0 && (0.0 > lo || (0.0 == lo && !lo_open)) => {
            lo = 0.0;
            lo_open = false;
        }
        Some(s) if !(s > 0.0) && (0.0 < hi || (0.0 == hi && !hi_open)) => {
            hi = 0.0;
            hi_open = false;
        }
        _ => {}
    }
    if lo > hi || (lo == hi && (lo_open || hi_open)) {
        return None;
    }
    let inside_lo = if lo_open { lo < 0.0 } else { lo <= 0.0 };
    let inside_hi = if hi_open { 0.0 < hi } else { 0.0 <= hi };
    Some(if inside_lo && inside_hi {
        0.0
    } else if lo > 0.0 || (lo == 0.0 && !inside_lo) {
        lo
    } else {
        hi
    })
}

fn min_over_ball(
    model: &NormalModel,
    ys: &Space,
    xs: &Space,
    c: &[f64],
    r: f64,
    open: bool,
) -> Result<DualMin> {
    let n = xs.dim;
    if ys.dim == 1 {
        let (a, b) = (c[0] - r, c[0] + r);
        let scalar = |w: &[f64], sign: Option<f64>| match nearest_to_zero(a, b, sign, open) {
            Some(y) => {
                let x = spaces::scale(w, y);
                DualMin {
                    value: xs.dual_norm(&x),
                    ystar: vec![y],
                    xstar: x,
                }
            }
            None => DualMin::empty(),
        };
        // only y* = 0 is feasible, so the ball must contain it
        let zero_only = || {
            if (open && a < 0.0 && 0.0 < b) || (!open && a <= 0.0 && 0.0 <= b) {
                DualMin {
                    value: 0.0,
                    ystar: vec![0.0],
                    xstar: vec![0.0; n],
                }
            } else {
                DualMin::empty()
            }
        };
        return Ok(match model {
            NormalModel::Linear { jac } => scalar(&jac[0], None),
            NormalModel::Ray { w, sign } => scalar(w, Some(*sign)),
            NormalModel::Zero | NormalModel::HorizontalRay { .. } => zero_only(),
            NormalModel::Cone2d { gens } => match cone_strip_min(gens, -b, -a, open) {
                Some((v, s, t)) => DualMin {
                    value: v,
                    ystar: vec![-t],
                    xstar: vec![s],
                },
                None => DualMin::empty(),
            },
        });
    }
    let NormalModel::Linear { jac } = model else {
        return Err(Error::Unsupported(
            "set-valued graphs with dim Y > 1".into(),
        ));
    };
    if ys.dual_norm(c) <= r {
        return Ok(DualMin {
            value: 0.0,
            ystar: vec![0.0; ys.dim],
            xstar: vec![0.0; n],
        });
    }
    let h = |u: &[f64]| {
        let y: Vec<f64> = c.iter().zip(u).map(|(ci, ui)| ci + r * ui).collect();
        let x = matvec_t(jac, &y, n);
        (xs.dual_norm(&x), y, x)
    };
    let dirs = sphere_directions(ys)?;
    let mut best = DualMin::empty();
    for u in &dirs {
        let (v, y, x) = h(u);
        let cand = DualMin {
            value: v,
            ystar: y,
            xstar: x,
        };
        if cand.better(&best) {
            best = cand;
        }
    }
    Ok(best)
}

/// Deterministic directions on the dual unit sphere of Y (dims 2 and 3).
fn sphere_directions(ys: &Space) -> Result<Vec<Vec<f64>>> {
    let raw: Vec<Vec<f64>> = match ys.dim {
        2 => (0..1440)
            .map(|k| {
                let th = std::f64::consts::TAU * k as f64 / 1440.0;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        3 => {
            let n = 4000;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                    let rr = (1.0 - z * z).sqrt();
                    let th = golden * k as f64;
                    vec![rr * th.cos(), rr * th.sin(), z]
                })
                .collect()
        }
        _ => {
            return Err(Error::Unsupported(
                "dual ball search needs dim Y <= 3".into(),
            ))
        }
    };
    Ok(raw
        .into_iter()
        .map(|u| {
            let nu = ys.dual_norm(&u);
            spaces::scale(&u, 1.0 / nu)
        })
        .collect())
}

/// inf ‖x*‖ over x* ∈ D*F(p)(y*) with ‖y* − c‖_* ≤ r (< r if `open`), minimized over the
/// listed centers.
pub fn min_coderivative_norm(
    map: &SetValuedMap,
    p: &ProductPoint,
    centers: &[Vec<f64>],
    r: f64,
    open: bool,
) -> Result<DualMin> {
    let model = normal_model(map, p)?;
    min_with_model(&model, map, centers, r, open)
}

fn min_with_model(
    model: &NormalModel,
    map: &SetValuedMap,
    centers: &[Vec<f64>],
    r: f64,
    open: bool,
) -> Result<DualMin> {
    let mut best = DualMin::empty();
    for c in centers {
        let cand = min_over_ball(model, &map.spaces.y, &map.spaces.x, c, r, open)?;
        if cand.better(&best) {
            best = cand;
        }
    }
    Ok(best)
}

/// Generators of J(v) with midpoints of consecutive face vertices.
fn duality_points(v: &[f64], ys: &Space) -> Vec<Vec<f64>> {
    let gens = spaces::duality_mapping(v, ys).generators();
    let mut out = gens.clone();
    for w in gens.windows(2) {
        out.push(w[0].iter().zip(&w[1]).map(|(a, b)| 0.5 * (a + b)).collect());
    }
    out
}

/// Subdifferential data at one graph point over a ρ-schedule.
#[derive(Debug, Clone)]
pub struct SubdiffValues {
    /// inf ‖x*‖ over D*F(p)(∂g(y) + ρB*) with its minimizer.
    pub g: DualMin,
    /// φ′(‖y − ȳ‖)·|∂F|_{ξρ}(p).
    pub phi_scaled: f64,
    /// φ′(‖y − ȳ‖)·|∂F|_ρ(p), the ξ-free form.
    pub phi_free: f64,
    /// Open-ball form: inf ‖x*‖ over (x*, y*) ∈ ∂f(p), ‖y*‖ < ρ.
    pub f_open: f64,
    /// Approximate forms (value, lower, upper).
    pub g_approx: Triple,
    pub phi_approx: Triple,
    pub free_approx: Triple,
}

fn subdiff_at(
    model: &NormalModel,
    map: &SetValuedMap,
    gauge: &Gauge,
    p: &ProductPoint,
    rhos: &[f64],
    levels: usize,
) -> Result<Vec<SubdiffValues>> {
    let ys = &map.spaces.y;
    let t = gauge.dist(&p.y);
    if t <= ZERO_TOL {
        return Err(Error::Domain(
            "subdifferential slopes need y != ybar".into(),
        ));
    }
    let dphi = gauge.phi.deriv(t);
    let xi = 1.0 / dphi;
    let v = spaces::sub(&p.y, &gauge.ybar);
    let j = duality_points(&v, ys);
    let dg: Vec<Vec<f64>> = j.iter().map(|u| spaces::scale(u, dphi)).collect();
    let mut shifted: Vec<Vec<Vec<f64>>> = Vec::with_capacity(levels);
    for l in 1..=levels {
        let delta = t * 0.5f64.powi(l as i32);
        let mut lvl = Vec::new();
        for i in 0..ys.dim {
            for s in [-1.0, 1.0] {
                let mut w = v.clone();
                w[i] += s * delta;
                lvl.push(w);
            }
        }
        shifted.push(lvl);
    }
    let mut out = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let g = min_with_model(model, map, &dg, rho, false)?;
        let phi_scaled = crate::primal_slopes::mul_ext(
            dphi,
            min_with_model(model, map, &j, xi * rho, false)?.value,
        );
        let phi_free =
            crate::primal_slopes::mul_ext(dphi, min_with_model(model, map, &j, rho, false)?.value);
        let f_open = min_with_model(model, map, &dg, rho, true)?.value;
        let mut lv_g = Vec::with_capacity(levels);
        let mut lv_phi = Vec::with_capacity(levels);
        let mut lv_free = Vec::with_capacity(levels);
        let (mut cur_g, mut cur_phi, mut cur_free) = (g.value, phi_scaled, phi_free);
        for lvl in &shifted {
            let (mut mg, mut mp, mut mf) = (g.value, phi_scaled, phi_free);
            for w in lvl {
                let tw = ys.norm(w);
                if tw <= ZERO_TOL {
                    continue;
                }
                let jw = duality_points(w, ys);
                let dgw: Vec<Vec<f64>> = jw
                    .iter()
                    .map(|u| spaces::scale(u, gauge.phi.deriv(tw)))
                    .collect();
                mg = mg.min(min_with_model(model, map, &dgw, rho, false)?.value);
                mp = mp.min(crate::primal_slopes::mul_ext(
                    dphi,
                    min_with_model(model, map, &jw, xi * rho, false)?.value,
                ));
                mf = mf.min(crate::primal_slopes::mul_ext(
                    dphi,
                    min_with_model(model, map, &jw, rho, false)?.value,
                ));
            }
            lv_g.push(mg);
            lv_phi.push(mp);
            lv_free.push(mf);
            cur_g = mg;
            cur_phi = mp;
            cur_free = mf;
        }
        let tri = |cur: f64, lv: &[f64]| {
            if lv.is_empty() {
                (cur, cur, cur)
            } else {
                (
                    cur,
                    lv.iter().copied().fold(f64::INFINITY, f64::min),
                    lv.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                )
            }
        };
        out.push(SubdiffValues {
            g_approx: tri(cur_g, &lv_g),
            phi_approx: tri(cur_phi, &lv_phi),
            free_approx: tri(cur_free, &lv_free),
            g,
            phi_scaled,
            phi_free,
            f_open,
        });
    }
    Ok(out)
}

/// Subdifferential (g,ρ)-slope or its approximate version at one point.
pub fn g_subdiff_rho_slope(
    map: &SetValuedMap,
    gauge: &Gauge,
    p: &ProductPoint,
    rho: f64,
    approximate: bool,
    sampling: &Sampling,
) -> Result<SlopeEstimate> {
    let model = normal_model(map, p)?;
    let v = subdiff_at(&model, map, gauge, p, &[rho], sampling.levels)?.remove(0);
    let (value, lower, upper) = if approximate {
        v.g_approx
    } else {
        (v.g.value, v.g.value, v.g.value)
    };
    Ok(point_estimate(value, lower, upper, rho, sampling))
}

fn point_estimate(
    value: f64,
    lower: f64,
    upper: f64,
    rho: f64,
    sampling: &Sampling,
) -> SlopeEstimate {
    SlopeEstimate {
        value,
        lower,
        upper,
        rho: Some(rho),
        sampling: sampling.into(),
        witness: None,
        trajectory: Vec::new(),
        diagnostics: Vec::new(),
    }
}

/// Subdifferential ρ-slope in both the φ-free form (J(y − ȳ) + ρB*) and the φ-scaled form
/// φ′(‖y − ȳ‖)·|∂F|_{ξ_φ(y)ρ}, plus the direct g-form for cross-checking.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiSubdiff {
    pub free: SlopeEstimate,
    #[serde(with = "ext")]
    pub scaled: f64,
    #[serde(with = "ext")]
    pub g_form: f64,
}

pub fn phi_subdiff_rho_slope(
    map: &SetValuedMap,
    gauge: &Gauge,
    p: &ProductPoint,
    rho: f64,
    approximate: bool,
    sampling: &Sampling,
) -> Result<PhiSubdiff> {
    let model = normal_model(map, p)?;
    let t = gauge.dist(&p.y);
    if t <= ZERO_TOL {
        return Err(Error::Domain(
            "phi subdifferential slope queried at y = ybar".into(),
        ));
    }
    let v = subdiff_at(&model, map, gauge, p, &[rho], sampling.levels)?.remove(0);
    let j = duality_points(&spaces::sub(&p.y, &gauge.ybar), &map.spaces.y);
    let free = if approximate {
        let tri = v.free_approx;
        let s = 1.0 / gauge.phi.deriv(t);
        point_estimate(tri.0 * s, tri.1 * s, tri.2 * s, rho, sampling)
    } else {
        let m = min_with_model(&model, map, &j, rho, false)?.value;
        point_estimate(m, m, m, rho, sampling)
    };
    let (scaled, g_form) = if approximate {
        (v.phi_approx.0, v.g_approx.0)
    } else {
        (v.phi_scaled, v.g.value)
    };
    Ok(PhiSubdiff {
        free,
        scaled,
        g_form,
    })
}

/// Subdifferential ρ-slope of the lifted function: inf ‖x*‖ over (x*, y*) ∈ ∂f(p), ‖y*‖ < ρ,
/// with ∂f(p) = {(x*, v* − w*) : x* ∈ D*F(p)(w*), v* ∈ ∂g(y)}.
pub fn subdiff_rho_slope_f(
    f: &LiftedFunction,
    p: &ProductPoint,
    rho: f64,
    sampling: &Sampling,
) -> Result<SlopeEstimate> {
    if !(rho > 0.0) {
        return Err(Error::Input("rho must be positive".into()));
    }
    let model = normal_model(f.map, p)?;
    let v = subdiff_at(&model, f.map, f.gauge, p, &[rho], 0)?.remove(0);
    Ok(point_estimate(v.f_open, v.f_open, v.f_open, rho, sampling))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubdiffVariant {
    Plain,
    Approximate,
    Modified,
    ApproximateModified,
}

#[derive(Debug, Clone)]
pub struct DualRecord {
    pub point: ProductPoint,
    pub dx: f64,
    pub dy: f64,
    pub g: f64,
    pub steps: Vec<SubdiffValues>,
}

/// Subdifferential slopes at every admissible candidate over the whole ρ-schedule.
#[derive(Debug, Clone)]
pub struct DualProfile {
    pub rhos: Vec<f64>,
    pub sampling: Sampling,
    pub isolated: bool,
    pub records: Vec<DualRecord>,
}

pub fn dual_profile(problem: &Problem) -> Result<DualProfile> {
    let map = &problem.map;
    if map.is_sampled() {
        return Err(Error::Unsupported(
            "dual criteria on a finite sample".into(),
        ));
    }
    let sampling = problem.sampling;
    let rhos = problem.schedule().rhos();
    let cloud = Cloud::new(map, &sampling)?;
    let gauge = problem.gauge();
    let cands = admissible_candidates(problem, &cloud, rhos[0]);
    let records: Vec<Result<DualRecord>> = cands
        .par_iter()
        .map(|p| {
            let model = normal_model(map, p)?;
            Ok(DualRecord {
                point: (*p).clone(),
                dx: map.spaces.x.dist(&p.x, map.xbar()),
                dy: gauge.dist(&p.y),
                g: gauge.value(&p.y),
                steps: subdiff_at(&model, map, &gauge, p, &rhos, sampling.levels)?,
            })
        })
        .collect();
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(DualProfile {
        rhos,
        sampling,
        isolated: cloud.isolated,
        records,
    })
}

fn modified(t: Triple, c: f64, on: bool) -> Triple {
    if on {
        (t.0.max(c), t.1.max(c), t.2.max(c))
    } else {
        t
    }
}

fn flat(v: f64) -> Triple {
    (v, v, v)
}

impl DualProfile {
    fn inf(&self, f: impl Fn(&DualRecord, usize) -> Triple) -> SlopeEstimate {
        schedule_inf(
            &self.rhos,
            &self.sampling,
            &self.records,
            |r| (&r.point, r.dx, r.dy),
            f,
            self.isolated,
        )
    }

    /// Strict subdifferential slope. The f-family has no approximate variants; its
    /// approximate requests fall back to the plain ones.
    pub fn strict(&self, family: Family, variant: SubdiffVariant) -> SlopeEstimate {
        let approx = matches!(
            variant,
            SubdiffVariant::Approximate | SubdiffVariant::ApproximateModified
        );
        let modi = matches!(
            variant,
            SubdiffVariant::Modified | SubdiffVariant::ApproximateModified
        );
        self.inf(|r, k| {
            let s = &r.steps[k];
            let base = match (family, approx) {
                (Family::F, _) => flat(s.f_open),
                (Family::G, false) => flat(s.g.value),
                (Family::G, true) => s.g_approx,
                (Family::Phi, false) => flat(s.phi_scaled),
                (Family::Phi, true) => s.phi_approx,
            };
            modified(base, r.g / r.dx, modi)
        })
    }

    /// ξ-free right-hand sides: inf of φ′(‖y − ȳ‖)·|∂F|_ρ (or its approximate form), optionally
    /// maxed with φ(‖y − ȳ‖)/‖x − x̄‖.
    pub fn xi_free(&self, variant: SubdiffVariant) -> SlopeEstimate {
        let approx = matches!(
            variant,
            SubdiffVariant::Approximate | SubdiffVariant::ApproximateModified
        );
        let modi = matches!(
            variant,
            SubdiffVariant::Modified | SubdiffVariant::ApproximateModified
        );
        self.inf(|r, k| {
            let s = &r.steps[k];
            modified(
                if approx {
                    s.free_approx
                } else {
                    flat(s.phi_free)
                },
                r.g / r.dx,
                modi,
            )
        })
    }
}

pub fn strict_subdiff_slope(
    problem: &Problem,
    family: Family,
    variant: SubdiffVariant,
) -> Result<SlopeEstimate> {
    Ok(dual_profile(problem)?.strict(family, variant))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitingKind {
    /// Limiting outer g-coderivative.
    G,
    /// Approximate limiting outer g-coderivative.
    GApproximate,
    /// Limiting outer φ-coderivative.
    Phi,
}

/// One recorded sequence element (x_k, y_k, x*_k, y*_k, v*_k).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceElement {
    pub level: usize,
    pub rho: f64,
    pub point: ProductPoint,
    pub xstar: Vec<f64>,
    pub ystar: Vec<f64>,
    pub vstar: Vec<f64>,
}

/// Limit pair (y*, x*) with ‖y*‖ = 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitPair {
    pub ystar: Vec<f64>,
    pub xstar: Vec<f64>,
    /// Consecutive levels (ending at the last) over which the cluster persisted.
    pub persistence: usize,
    /// max ‖x*_j − x*‖ over the persistence window.
    pub spread: f64,
    /// Sequences with y*_k = 0 for all k (g-kinds only).
    pub zero_branch: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitingCoderivativeSample {
    pub kind: LimitingKind,
    pub sequences: Vec<SequenceElement>,
    pub pairs: Vec<LimitPair>,
    /// inf{‖x*‖ : x* ∈ D̄*(𝕊*)}; +∞ when no pair was found.
    #[serde(with = "ext")]
    pub inf_norm: f64,
    pub kernel_contains_zero: bool,
    /// Sequences whose y*_k vanish in the limit direction; kept apart from the 𝕊* image.
    pub zero_fiber: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

fn direction(v: &[f64], s: &Space, dual: bool) -> Option<Vec<f64>> {
    let n = if dual { s.dual_norm(v) } else { s.norm(v) };
    (n > 1e-12).then(|| spaces::scale(v, 1.0 / n))
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(u, v)| (u - v).abs() <= DIRECTION_TOL)
}

/// Cluster key: (y* direction, x* direction or None for x* = 0).
type ClusterKey = (Vec<f64>, Option<Vec<f64>>);

fn key_index(keys: &mut Vec<ClusterKey>, k: &ClusterKey) -> usize {
    for (i, e) in keys.iter().enumerate() {
        let xs_match = match (&e.1, &k.1) {
            (None, None) => true,
            (Some(a), Some(b)) => close(a, b),
            _ => false,
        };
        if close(&e.0, &k.0) && xs_match {
            return i;
        }
    }
    keys.push(k.clone());
    keys.len() - 1
}

impl DualProfile {
    /// Limit pairs from per-level minimizers of inf ‖x*‖ over D*F(x_k,y_k)(∂g(y_k) + ρ_kB*).
    pub fn limiting(
        &self,
        map: &SetValuedMap,
        problem: &Problem,
        kind: LimitingKind,
    ) -> LimitingCoderivativeSample {
        let (xs, ys) = (&map.spaces.x, &map.spaces.y);
        let gauge = problem.gauge();
        let levels = self.rhos.len();
        let mut keys: Vec<ClusterKey> = Vec::new();
        // best[key][level] = (‖x*‖, element)
        let mut best: Vec<Vec<Option<SequenceElement>>> = Vec::new();
        let mut zero_fiber = 0;
        let mut zero_levels = vec![false; levels];
        for (k, &rho) in self.rhos.iter().enumerate() {
            for r in self.records.iter().filter(|r| r.dx < rho && r.dy < rho) {
                let m = &r.steps[k].g;
                if !m.value.is_finite() {
                    continue;
                }
                if m.ystar.iter().all(|v| *v == 0.0) {
                    zero_fiber += 1;
                    zero_levels[k] = true;
                    continue;
                }
                let Some(yd) = direction(&m.ystar, ys, true) else {
                    continue;
                };
                let key = (yd, direction(&m.xstar, xs, true));
                let i = key_index(&mut keys, &key);
                if best.len() < keys.len() {
                    best.push(vec![None; levels]);
                }
                let v = spaces::sub(&r.point.y, map.ybar());
                let vstar = spaces::duality_mapping(&v, ys)
                    .representative()
                    .map(|s| s.to_vec())
                    .unwrap_or_default();
                let el = SequenceElement {
                    level: k,
                    rho,
                    point: r.point.clone(),
                    xstar: m.xstar.clone(),
                    ystar: m.ystar.clone(),
                    vstar: spaces::scale(&vstar, gauge.phi.deriv(r.dy)),
                };
                let slot = &mut best[i][k];
                let replace = match slot {
                    None => true,
                    Some(old) => {
                        let (a, b) = (xs.dual_norm(&el.xstar), xs.dual_norm(&old.xstar));
                        a < b || (a == b && el.point.lex_cmp(&old.point) == Ordering::Less)
                    }
                };
                if replace {
                    *slot = Some(el);
                }
            }
        }
        let need = PERSISTENCE.min(levels);
        let mut diagnostics = Vec::new();
        if levels < PERSISTENCE {
            diagnostics.push(format!(
                "schedule has {levels} levels; persistence window shortened"
            ));
        }
        let mut pairs = Vec::new();
        let mut sequences = Vec::new();
        for (i, key) in keys.iter().enumerate() {
            let run = best[i].iter().rev().take_while(|e| e.is_some()).count();
            if run < need {
                continue;
            }
            let last = best[i][levels - 1]
                .as_ref()
                .expect("run ends at the last level");
            let window = &best[i][levels - run..];
            let spread = window
                .iter()
                .flatten()
                .map(|e| xs.dual_norm(&spaces::sub(&e.xstar, &last.xstar)))
                .fold(0.0, f64::max);
            sequences.extend(window.iter().flatten().cloned());
            pairs.push(LimitPair {
                ystar: key.0.clone(),
                xstar: last.xstar.clone(),
                persistence: run,
                spread,
                zero_branch: false,
            });
        }
        let zero_run = zero_levels.iter().rev().take_while(|z| **z).count();
        if kind != LimitingKind::Phi && zero_run >= need {
            // y*_k = 0 with x*_k = 0 ∈ D*F(x_k,y_k)(0) pairs with every y* ∈ 𝕊*.
            let mut y = vec![0.0; ys.dim];
            y[0] = 1.0;
            let y = direction(&y, ys, true).unwrap_or(y);
            pairs.push(LimitPair {
                ystar: y,
                xstar: vec![0.0; xs.dim],
                persistence: zero_run,
                spread: 0.0,
                zero_branch: true,
            });
        }
        pairs.sort_by(|a, b| {
            lex_cmp(
                a.ystar.iter().chain(&a.xstar),
                b.ystar.iter().chain(&b.xstar),
            )
        });
        if pairs.is_empty() {
            diagnostics.push(
                "no admissible sequence persisted; the sampled image of the dual sphere is empty"
                    .into(),
            );
        }
        let inf_norm = pairs
            .iter()
            .map(|p| xs.dual_norm(&p.xstar))
            .fold(f64::INFINITY, f64::min);
        LimitingCoderivativeSample {
            kind,
            sequences,
            pairs,
            inf_norm,
            kernel_contains_zero: inf_norm <= KERNEL_TOL,
            zero_fiber,
            diagnostics,
        }
    }
}

pub fn limiting_outer_coderivative(
    problem: &Problem,
    kind: LimitingKind,
) -> Result<LimitingCoderivativeSample> {
    Ok(dual_profile(problem)?.limiting(&problem.map, problem, kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mappings::{g_from_phi, lift, Phi, Polyhedron, SmoothFn};
    use crate::problem::Sampling;
    use crate::spaces::ProductSpace;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_6};

    fn cos_map() -> SetValuedMap {
        SetValuedMap::new(
            ProductSpace::real_plane(),
            MapVariant::Smooth {
                params: SmoothFn::OneMinusCos,
            },
            ProductPoint::scalar(0.0, 0.0),
        )
        .unwrap()
    }

    fn abs_epi() -> SetValuedMap {
        SetValuedMap::new(
            ProductSpace::real_plane(),
            MapVariant::Polyhedral {
                inequalities: Polyhedron {
                    a: vec![vec![1.0, -1.0], vec![-1.0, -1.0]],
                    b: vec![0.0, 0.0],
                },
            },
            ProductPoint::scalar(0.0, 0.0),
        )
        .unwrap()
    }

    fn gp(x: f64) -> ProductPoint {
        ProductPoint::scalar(x, 1.0 - x.cos())
    }

    #[test]
    fn normal_cone_examples() {
        let n = normal_cone(&cos_map(), &gp(0.5)).unwrap();
        assert_eq!(n.kind, DualKind::ConeFace);
        assert!((n.generators[0][0] - 0.5f64.sin()).abs() < 1e-15 && n.generators[0][1] == -1.0);
        let n = normal_cone(&abs_epi(), &ProductPoint::scalar(1.0, 1.0)).unwrap();
        assert_eq!(n.generators, vec![vec![1.0, -1.0]]);
        // the cone inequality ⟨n, q − p⟩ ≤ 0 over graph points
        for (x, y) in [(0.0, 0.0), (2.0, 3.0), (-1.0, 1.5), (1.0, 1.0)] {
            assert!((x - 1.0) - (y - 1.0) <= 1e-12);
        }
        let n = normal_cone(&abs_epi(), &ProductPoint::scalar(0.0, 1.0)).unwrap();
        assert_eq!(n, DualVectorSet::singleton(vec![0.0, 0.0]));
    }

    #[test]
    fn coderivative_examples() {
        let c = coderivative(
            &cos_map(),
            &gp(FRAC_PI_6),
            &DualVectorSet::singleton(vec![1.0]),
        )
        .unwrap();
        assert!((c.generators[0][0] - 0.5).abs() < 1e-15);
        let z = coderivative(
            &cos_map(),
            &gp(FRAC_PI_6),
            &DualVectorSet::singleton(vec![0.0]),
        )
        .unwrap();
        assert_eq!(z, DualVectorSet::singleton(vec![0.0]));
        let c = coderivative(
            &abs_epi(),
            &ProductPoint::scalar(1.0, 1.0),
            &DualVectorSet::singleton(vec![1.0]),
        )
        .unwrap();
        assert_eq!(c, DualVectorSet::singleton(vec![1.0]));
        let v = coderivative(
            &abs_epi(),
            &ProductPoint::scalar(0.0, 0.0),
            &DualVectorSet::singleton(vec![1.0]),
        )
        .unwrap();
        assert_eq!(v.generators, vec![vec![-1.0], vec![1.0]]);
        let e = coderivative(
            &abs_epi(),
            &ProductPoint::scalar(1.0, 1.0),
            &DualVectorSet::singleton(vec![-1.0]),
        )
        .unwrap();
        assert!(e.is_empty());
        assert!(matches!(
            coderivative(
                &abs_epi(),
                &ProductPoint::scalar(1.0, 0.0),
                &DualVectorSet::singleton(vec![1.0])
            ),
            Err(Error::OffGraph)
        ));
    }

    #[test]
    fn homogeneity_is_exact() {
        for t in [0.25, 2.0, 8.0] {
            for y in [0.75, -1.5] {
                let base =
                    coderivative(&cos_map(), &gp(0.4), &DualVectorSet::singleton(vec![y])).unwrap();
                let sc = coderivative(&cos_map(), &gp(0.4), &DualVectorSet::singleton(vec![t * y]))
                    .unwrap();
                assert_eq!(sc.generators[0][0], t * base.generators[0][0]);
            }
        }
    }

    #[test]
    fn subdiff_slopes_by_endpoint_enumeration() {
        let map = cos_map();
        let s = Sampling::default();
        let id = g_from_phi(Phi::identity(), &[0.0], Space::real_line());
        let v = g_subdiff_rho_slope(&map, &id, &gp(FRAC_PI_6), 0.1, false, &s).unwrap();
        assert!((v.value - 0.45).abs() < 1e-12);
        let cosg = g_from_phi(Phi::CosExample, &[0.0], Space::real_line());
        let ph = phi_subdiff_rho_slope(&map, &cosg, &gp(FRAC_PI_6), 0.1, false, &s).unwrap();
        assert!((ph.free.value - 0.45).abs() < 1e-12);
        assert!((ph.scaled - ph.g_form).abs() < 1e-12);
        let f = lift(&map, &id);
        let so = subdiff_rho_slope_f(&f, &gp(FRAC_PI_6), 0.1, &s).unwrap();
        assert!((so.value - 0.45).abs() < 1e-12);

        let e = abs_epi();
        let v =
            g_subdiff_rho_slope(&e, &id, &ProductPoint::scalar(1.0, 1.0), 0.25, false, &s).unwrap();
        assert_eq!(v.value, 0.75);
    }

    #[test]
    fn approximate_never_exceeds_plain() {
        let map = cos_map();
        let s = Sampling::default();
        let g = g_from_phi(Phi::Power { q: 0.5 }, &[0.0], Space::real_line());
        for x in [0.05, 0.3, 0.9] {
            let a = g_subdiff_rho_slope(&map, &g, &gp(x), 0.2, true, &s).unwrap();
            let p = g_subdiff_rho_slope(&map, &g, &gp(x), 0.2, false, &s).unwrap();
            assert!(a.value <= p.value && a.bracket_ok());
        }
    }

    fn problem(map: SetValuedMap, phi: Phi, radius: f64, res: usize) -> Problem {
        let sampling = Sampling {
            radius,
            resolution: res,
            ..Sampling::default()
        };
        Problem::new(map, phi, sampling, Default::default()).unwrap()
    }

    #[test]
    fn cos_example_limiting_image() {
        let p = problem(cos_map(), Phi::CosExample, FRAC_PI_3, 401);
        let prof = dual_profile(&p).unwrap();
        let s = prof.strict(Family::Phi, SubdiffVariant::Plain);
        assert!((s.value - 1.0).abs() < 1e-2, "{}", s.value);
        let lim = prof.limiting(&p.map, &p, LimitingKind::Phi);
        assert!((lim.inf_norm - 1.0).abs() < 1e-2, "{:?}", lim.pairs);
        assert!(!lim.kernel_contains_zero);
        let xs: Vec<f64> = lim.pairs.iter().map(|p| p.xstar[0].signum()).collect();
        assert_eq!(xs, vec![-1.0, 1.0]);
    }

    #[test]
    fn convex_epigraph_strict_subdiff() {
        let p = problem(abs_epi(), Phi::identity(), 0.1, 101);
        let prof = dual_profile(&p).unwrap();
        let s = prof.strict(Family::G, SubdiffVariant::Plain);
        assert!((s.value - 1.0).abs() < 1e-2, "{}", s.value);
    }

    #[test]
    fn sampled_graph_is_unsupported() {
        let pts = vec![
            ProductPoint::scalar(0.0, 0.0),
            ProductPoint::scalar(1.0, 1.0),
        ];
        let map = SetValuedMap::new(
            ProductSpace::real_plane(),
            MapVariant::Sampled {
                samples: pts.clone(),
            },
            pts[0].clone(),
        )
        .unwrap();
        let p = problem(map, Phi::identity(), 2.0, 3);
        assert!(matches!(dual_profile(&p), Err(Error::Unsupported(_))));
    }

    #[test]
    fn cone_strip_cases() {
        // cone{(1,-1),(-1,-1)}: (s,t) with t <= -|s|
        let g = [[1.0, -1.0], [-1.0, -1.0]];
        assert_eq!(
            cone_strip_min(&g, -2.0, -1.0, false).map(|m| m.0),
            Some(0.0)
        );
        assert_eq!(cone_strip_min(&g, 0.5, 1.0, false), None);
        // single ray (1,-1): s = -t
        let r = [[1.0, -1.0]];
        assert_eq!(
            cone_strip_min(&r, -1.25, -0.75, false),
            Some((0.75, 0.75, -0.75))
        );
        assert_eq!(cone_strip_min(&r, 0.0, 1.0, true), None);
        assert_eq!(cone_strip_min(&r, 0.0, 1.0, false), Some((0.0, 0.0, 0.0)));
    }
}
