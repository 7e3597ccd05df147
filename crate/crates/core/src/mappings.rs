//! Set-valued mappings F, the modulation φ, the gauge g = φ∘d(·,ȳ) and the lifted function f.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::spaces::{self, lex_cmp, Duality, Norm, ProductPoint, ProductSpace, Space};

/// Tolerance for graph membership of user-supplied points.
pub const GRAPH_TOL: f64 = 1e-10;
/// Values at or below this are treated as zero (division guard and y = ȳ tests).
pub const ZERO_TOL: f64 = 1e-14;
/// Central-difference step for Jacobians that are not supplied.
pub const FD_STEP: f64 = 1e-6;

const ROOT_SEEDS_PER_UNIT: f64 = 64.0;
const MIN_ROOT_SEEDS: usize = 64;
const BISECTION_ITERS: usize = 200;
const GOLDEN_ITERS: usize = 200;
const LATTICE_Y_POINTS: usize = 21;
const MAX_LATTICE: usize = 1 << 20;

pub type Evaluator = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type JacobianEvaluator = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;

/// User-supplied smooth map; the Jacobian falls back to central differences.
#[derive(Clone)]
pub struct CustomFn {
    pub eval: Evaluator,
    pub jacobian: Option<JacobianEvaluator>,
}

impl fmt::Debug for CustomFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFn")
            .field("jacobian", &self.jacobian.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SmoothFn {
    /// y = A x + b, with A given row by row (one row per y coordinate).
    Affine { a: Vec<Vec<f64>>, b: Vec<f64> },
    /// y = 1 − cos x on the real line.
    OneMinusCos,
    /// y = Σ c_k x^k on the real line.
    Polynomial { coeffs: Vec<f64> },
    #[serde(skip)]
    Custom(CustomFn),
}

impl SmoothFn {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            SmoothFn::Affine { a, b } => a
                .iter()
                .zip(b)
                .map(|(row, bi)| spaces::dot(row, x) + bi)
                .collect(),
            SmoothFn::OneMinusCos => {
                let s = (0.5 * x[0]).sin();
                vec![2.0 * s * s]
            }
            SmoothFn::Polynomial { coeffs } => {
                vec![coeffs.iter().rev().fold(0.0, |acc, c| acc * x[0] + c)]
            }
            SmoothFn::Custom(c) => (c.eval)(x),
        }
    }

    /// Jacobian as rows ∇F_i(x).
    pub fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        match self {
            SmoothFn::Affine { a, .. } => a.clone(),
            SmoothFn::OneMinusCos => vec![vec![x[0].sin()]],
            SmoothFn::Polynomial { coeffs } => {
                let d = coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (k, c)| acc * x[0] + k as f64 * c);
                vec![vec![d]]
            }
            SmoothFn::Custom(c) => match &c.jacobian {
                Some(j) => j(x),
                None => finite_difference_jacobian(&*c.eval, x),
            },
        }
    }

    fn check_dims(&self, s: &ProductSpace) -> Result<()> {
        let scalar = s.x.dim == 1 && s.y.dim == 1;
        match self {
            SmoothFn::Affine { a, b } => {
                if a.len() != s.y.dim || b.len() != s.y.dim || a.iter().any(|r| r.len() != s.x.dim)
                {
                    return input("affine map shape does not match the declared spaces");
                }
                Ok(())
            }
            SmoothFn::OneMinusCos | SmoothFn::Polynomial { .. } if !scalar => {
                input("scalar smooth families require dim X = dim Y = 1")
            }
            _ => Ok(()),
        }
    }
}

pub fn finite_difference_jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64]) -> Vec<Vec<f64>> {
    let m = f(x).len();
    let mut jac = vec![vec![0.0; x.len()]; m];
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for j in 0..x.len() {
        xp[j] = x[j] + FD_STEP;
        xm[j] = x[j] - FD_STEP;
        let (fp, fm) = (f(&xp), f(&xm));
        for i in 0..m {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * FD_STEP);
        }
        xp[j] = x[j];
        xm[j] = x[j];
    }
    jac
}

/// Linear inequalities A·(x,y) ≤ b over the concatenated coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyhedron {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl Polyhedron {
    fn slack(&self, x: &[f64], y: &[f64]) -> impl Iterator<Item = f64> + '_ {
        let z: Vec<f64> = x.iter().chain(y).copied().collect();
        self.a
            .iter()
            .zip(&self.b)
            .map(move |(row, bi)| spaces::dot(row, &z) - bi)
    }

    pub fn contains(&self, x: &[f64], y: &[f64], tol: f64) -> bool {
        self.slack(x, y).all(|s| s <= tol)
    }

    /// Indices of constraints active at (x,y).
    pub fn active(&self, x: &[f64], y: &[f64], tol: f64) -> Vec<usize> {
        self.slack(x, y)
            .enumerate()
            .filter(|(_, s)| s.abs() <= tol)
            .map(|(i, _)| i)
            .collect()
    }

    /// F(x) for scalar y as an interval [lo, hi]; None if empty.
    fn fiber(&self, x: &[f64]) -> Option<(f64, f64)> {
        let n = x.len();
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (row, bi) in self.a.iter().zip(&self.b) {
            let rest = bi - spaces::dot(&row[..n], x);
            let c = row[n];
            if c > 0.0 {
                hi = hi.min(rest / c);
            } else if c < 0.0 {
                lo = lo.max(rest / c);
            } else if rest < -ZERO_TOL {
                return None;
            }
        }
        (lo <= hi + ZERO_TOL).then_some((lo, hi.max(lo)))
    }

    /// {x : A_x x ≤ b − A_y y} as (rows, rhs).
    fn section(&self, n: usize, y: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let rows = self.a.iter().map(|r| r[..n].to_vec()).collect();
        let rhs = self
            .a
            .iter()
            .zip(&self.b)
            .map(|(r, bi)| bi - spaces::dot(&r[n..], y))
            .collect();
        (rows, rhs)
    }
}

/// Euclidean projection onto {x : ⟨a_i,x⟩ ≤ b_i ∀i} by Dykstra's alternating projections.
pub fn project_halfspaces(rows: &[Vec<f64>], rhs: &[f64], x: &[f64]) -> Vec<f64> {
    let k = rows.len();
    let mut z = x.to_vec();
    let mut incr = vec![vec![0.0; x.len()]; k];
    for _ in 0..20_000 {
        let mut change = 0.0;
        for i in 0..k {
            let w = spaces::add(&z, &incr[i]);
            let nn = spaces::dot(&rows[i], &rows[i]);
            let viol = spaces::dot(&rows[i], &w) - rhs[i];
            let proj = if viol > 0.0 && nn > 0.0 {
                spaces::sub(&w, &spaces::scale(&rows[i], viol / nn))
            } else {
                w.clone()
            };
            incr[i] = spaces::sub(&w, &proj);
            change += spaces::sub(&proj, &z).iter().map(|d| d * d).sum::<f64>();
            z = proj;
        }
        if change < 1e-30 {
            break;
        }
    }
    z
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum MapVariant {
    /// Single-valued smooth F.
    Smooth { params: SmoothFn },
    /// Finite list of graph points.
    Sampled { samples: Vec<ProductPoint> },
    /// Convex polyhedral graph.
    Polyhedral { inequalities: Polyhedron },
    /// gph F = {(x,y) : y ≥ f(x)} for a smooth f; convex whenever f is.
    Epigraph { params: SmoothFn },
}

#[derive(Debug, Clone)]
pub struct SetValuedMap {
    pub spaces: ProductSpace,
    pub variant: MapVariant,
    pub reference: ProductPoint,
}

/// Finite set of graph points with a flag for the isolated-center case.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample {
    pub points: Vec<ProductPoint>,
    pub isolated: bool,
}

impl SetValuedMap {
    pub fn new(spaces: ProductSpace, variant: MapVariant, reference: ProductPoint) -> Result<Self> {
        spaces.x.norm.validate()?;
        spaces.y.norm.validate()?;
        spaces.check(&reference)?;
        match &variant {
            MapVariant::Smooth { params } => params.check_dims(&spaces)?,
            MapVariant::Epigraph { params } => {
                params.check_dims(&spaces)?;
                if spaces.y.dim != 1 {
                    return input("epigraph graphs require dim Y = 1");
                }
            }
            MapVariant::Polyhedral { inequalities: p } => {
                if p.a.len() != p.b.len()
                    || p.a.iter().any(|r| r.len() != spaces.x.dim + spaces.y.dim)
                {
                    return input("inequality rows must have dim X + dim Y entries");
                }
                if spaces.y.dim != 1 {
                    return input("polyhedral graphs require dim Y = 1");
                }
            }
            MapVariant::Sampled { samples } => {
                if samples.is_empty() {
                    return input("sampled graph is empty");
                }
                for s in samples {
                    spaces.check(s)?;
                }
                let mut sorted: Vec<&ProductPoint> = samples.iter().collect();
                sorted.sort_by(|a, b| a.lex_cmp(b));
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return input("sampled graph contains duplicate points");
                }
            }
        }
        let map = SetValuedMap {
            spaces,
            variant,
            reference,
        };
        if !map.contains(&map.reference) {
            return input("reference point is not on the graph");
        }
        Ok(map)
    }

    pub fn xbar(&self) -> &[f64] {
        &self.reference.x
    }

    pub fn ybar(&self) -> &[f64] {
        &self.reference.y
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self.variant, MapVariant::Sampled { .. })
    }

    pub fn is_scalar(&self) -> bool {
        self.spaces.x.dim == 1 && self.spaces.y.dim == 1
    }

    /// Graph membership, within GRAPH_TOL for the continuous variants.
    pub fn contains(&self, p: &ProductPoint) -> bool {
        if self.spaces.check(p).is_err() {
            return false;
        }
        match &self.variant {
            MapVariant::Smooth { params } => {
                let fx = params.eval(&p.x);
                self.spaces.y.dist(&fx, &p.y) <= GRAPH_TOL
            }
            MapVariant::Sampled { samples } => samples.iter().any(|s| s == p),
            MapVariant::Polyhedral { inequalities } => inequalities.contains(&p.x, &p.y, GRAPH_TOL),
            MapVariant::Epigraph { params } => p.y[0] >= params.eval(&p.x)[0] - GRAPH_TOL,
        }
    }

    /// Whether ȳ ∈ F(x).
    pub fn in_inverse(&self, x: &[f64]) -> bool {
        let ybar = self.ybar();
        match &self.variant {
            MapVariant::Smooth { params } => self.spaces.y.dist(&params.eval(x), ybar) <= ZERO_TOL,
            MapVariant::Sampled { samples } => samples
                .iter()
                .any(|s| s.x.as_slice() == x && self.spaces.y.dist(&s.y, ybar) <= ZERO_TOL),
            MapVariant::Polyhedral { inequalities } => inequalities.contains(x, ybar, ZERO_TOL),
            MapVariant::Epigraph { params } => ybar[0] >= params.eval(x)[0] - ZERO_TOL,
        }
    }

    /// d(x, F⁻¹(ȳ)); the search window defaults to ‖x − x̄‖·10 + 1.
    pub fn dist_to_inverse_image(&self, x: &[f64], window: Option<f64>) -> Result<f64> {
        self.spaces.x.check(x)?;
        let sx = &self.spaces.x;
        let upper = sx.dist(x, self.xbar());
        let w = window.unwrap_or(upper * 10.0 + 1.0);
        let ybar = self.ybar().to_vec();
        let d = match &self.variant {
            MapVariant::Sampled { samples } => samples
                .iter()
                .filter(|s| self.spaces.y.dist(&s.y, &ybar) <= ZERO_TOL)
                .map(|s| sx.dist(x, &s.x))
                .fold(f64::INFINITY, f64::min),
            MapVariant::Smooth {
                params: SmoothFn::Affine { a, b },
            } if sx.dim > 1 => {
                if sx.norm != Norm::Euclidean {
                    return Err(Error::Unsupported(
                        "affine inverse image needs a euclidean X".into(),
                    ));
                }
                let mut rows = Vec::new();
                let mut rhs = Vec::new();
                for (row, (bi, yi)) in a.iter().zip(b.iter().zip(&ybar)) {
                    rows.push(row.clone());
                    rhs.push(yi - bi);
                    rows.push(spaces::scale(row, -1.0));
                    rhs.push(bi - yi);
                }
                sx.dist(x, &project_halfspaces(&rows, &rhs, x))
            }
            MapVariant::Polyhedral { inequalities } => {
                let (rows, rhs) = inequalities.section(sx.dim, &ybar);
                if sx.dim == 1 {
                    interval_dist(x[0], &rows, &rhs)
                } else if sx.norm == Norm::Euclidean {
                    sx.dist(x, &project_halfspaces(&rows, &rhs, x))
                } else {
                    return Err(Error::Unsupported(
                        "polyhedral inverse image needs a euclidean X".into(),
                    ));
                }
            }
            MapVariant::Smooth { params } => {
                if sx.dim != 1 {
                    return Err(Error::Unsupported(
                        "inverse image of a non-affine map needs dim X = 1".into(),
                    ));
                }
                let params = params.clone();
                let sy = self.spaces.y;
                if sy.dim == 1 {
                    nearest_zero(x[0], w, |u| params.eval(&[u])[0] - ybar[0])
                } else {
                    nearest_touch(x[0], w, |u| sy.dist(&params.eval(&[u]), &ybar))
                }
            }
            MapVariant::Epigraph { params } => {
                if sx.dim != 1 {
                    return Err(Error::Unsupported(
                        "epigraph inverse image needs dim X = 1".into(),
                    ));
                }
                let params = params.clone();
                nearest_sublevel(x[0], w, |u| params.eval(&[u])[0] - ybar[0])
            }
        };
        if d.is_infinite() && !self.is_sampled() {
            return Ok(upper);
        }
        if d.is_infinite() {
            return input("inverse image is empty");
        }
        Ok(d.min(upper))
    }

    fn x_lattice(&self, center: &[f64], radius: f64, resolution: usize) -> Vec<Vec<f64>> {
        let n = self.spaces.x.dim;
        let per_axis = if n == 1 {
            resolution.max(1)
        } else {
            ((resolution as f64).powf(1.0 / n as f64).floor() as usize).max(3)
        };
        let per_axis = per_axis
            .min((MAX_LATTICE as f64).powf(1.0 / n as f64) as usize)
            .max(1);
        let axis: Vec<f64> = if per_axis == 1 {
            vec![0.0]
        } else {
            (0..per_axis)
                .map(|i| radius * (2.0 * i as f64 / (per_axis - 1) as f64 - 1.0))
                .collect()
        };
        let mut out = Vec::with_capacity(per_axis.pow(n as u32));
        let mut idx = vec![0usize; n];
        loop {
            out.push((0..n).map(|k| center[k] + axis[idx[k]]).collect());
            let mut k = 0;
            while k < n {
                idx[k] += 1;
                if idx[k] < per_axis {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == n {
                break;
            }
        }
        out
    }

    /// Vertical fiber F(u) for the set-valued variants with scalar y.
    fn fiber(&self, u: &[f64]) -> Option<(f64, f64)> {
        match &self.variant {
            MapVariant::Polyhedral { inequalities } => inequalities.fiber(u),
            MapVariant::Epigraph { params } => Some((params.eval(u)[0], f64::INFINITY)),
            _ => None,
        }
    }

    /// Deterministic graph points within d₁-distance `radius` of `center`, center included.
    pub fn graph_sample(
        &self,
        center: &ProductPoint,
        radius: f64,
        resolution: usize,
    ) -> Result<GraphSample> {
        self.spaces.check(center)?;
        if !(radius >= 0.0) {
            return input("radius must be nonnegative");
        }
        let within = |q: &ProductPoint| {
            spaces::rho_dist_unchecked(&self.spaces, q, center, 1.0) <= radius * (1.0 + 1e-12)
        };
        let mut points: Vec<ProductPoint> = match &self.variant {
            MapVariant::Sampled { samples } => {
                samples.iter().filter(|q| within(q)).cloned().collect()
            }
            MapVariant::Smooth { params } if radius > 0.0 => self
                .x_lattice(&center.x, radius, resolution)
                .into_iter()
                .map(|u| {
                    let v = params.eval(&u);
                    ProductPoint::new(u, v)
                })
                .filter(|q| within(q))
                .collect(),
            MapVariant::Polyhedral { .. } | MapVariant::Epigraph { .. } if radius > 0.0 => {
                let ny = resolution.clamp(1, LATTICE_Y_POINTS);
                let mut pts = Vec::new();
                for u in self.x_lattice(&center.x, radius, resolution) {
                    let Some((lo, hi)) = self.fiber(&u) else {
                        continue;
                    };
                    let (a, b) = (lo.max(center.y[0] - radius), hi.min(center.y[0] + radius));
                    if a > b {
                        continue;
                    }
                    let mut ys = vec![a, b];
                    if ny > 1 {
                        let (ga, gb) = (center.y[0] - radius, center.y[0] + radius);
                        for k in 0..ny {
                            let v = ga + (gb - ga) * k as f64 / (ny - 1) as f64;
                            if v > a && v < b {
                                ys.push(v);
                            }
                        }
                    }
                    for v in ys {
                        pts.push(ProductPoint::new(u.clone(), vec![v]));
                    }
                }
                pts.retain(|q| within(q));
                pts
            }
            _ => Vec::new(),
        };
        if self.contains(center) && !points.contains(center) {
            points.push(center.clone());
        }
        points.sort_by(|a, b| a.lex_cmp(b));
        points.dedup();
        let isolated = points.len() <= 1;
        if points.is_empty() {
            points.push(center.clone());
        }
        Ok(GraphSample { points, isolated })
    }

    /// Graph points q ≠ p near p: an x-grid of `m` points per side and direction, at
    /// x-distance up to `r`; vertical lattice for set-valued variants. Finite samples are
    /// filtered by d₁(q,p) ≤ r instead.
    pub fn local_sample(&self, p: &ProductPoint, r: f64, m: usize) -> Vec<ProductPoint> {
        let m = m.max(1);
        let mut out = Vec::new();
        match &self.variant {
            MapVariant::Sampled { samples } => {
                for q in samples {
                    if q != p && spaces::rho_dist_unchecked(&self.spaces, q, p, 1.0) <= r {
                        out.push(q.clone());
                    }
                }
            }
            MapVariant::Smooth { params } => {
                for u in x_offsets(&self.spaces.x, &p.x, r, m) {
                    let v = params.eval(&u);
                    out.push(ProductPoint::new(u, v));
                }
            }
            MapVariant::Polyhedral { .. } | MapVariant::Epigraph { .. } => {
                let mut us = vec![p.x.clone()];
                us.extend(x_offsets(&self.spaces.x, &p.x, r, m));
                for u in us {
                    let Some((lo, hi)) = self.fiber(&u) else {
                        continue;
                    };
                    let mut ys = Vec::with_capacity(2 * m + 3);
                    for l in -(m as i64)..=(m as i64) {
                        let v = p.y[0] + r * l as f64 / m as f64;
                        if v >= lo && v <= hi {
                            ys.push(v);
                        }
                    }
                    for b in [lo, hi] {
                        if b.is_finite() && (b - p.y[0]).abs() <= r {
                            ys.push(b);
                        }
                    }
                    for v in ys {
                        let q = ProductPoint::new(u.clone(), vec![v]);
                        if q != *p {
                            out.push(q);
                        }
                    }
                }
            }
        }
        out
    }

    /// Export to the finite representation used by the oracle.
    pub fn to_sampled(
        &self,
        center: &ProductPoint,
        radius: f64,
        resolution: usize,
    ) -> Result<SetValuedMap> {
        let mut samples = self.graph_sample(center, radius, resolution)?.points;
        if !samples.contains(&self.reference) {
            samples.push(self.reference.clone());
            samples.sort_by(|a, b| a.lex_cmp(b));
        }
        SetValuedMap::new(
            self.spaces,
            MapVariant::Sampled { samples },
            self.reference.clone(),
        )
    }
}

/// Offsets x + r·(k/m)·e for k = 1..m over a deterministic direction set.
fn x_offsets(space: &Space, x: &[f64], r: f64, m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    if n <= 3 {
        for code in 0..3usize.pow(n as u32) {
            let mut c = code;
            let d: Vec<f64> = (0..n)
                .map(|_| {
                    let v = (c % 3) as f64 - 1.0;
                    c /= 3;
                    v
                })
                .collect();
            if d.iter().any(|v| *v != 0.0) {
                let nd = space.norm(&d);
                dirs.push(d.iter().map(|v| v / nd).collect());
            }
        }
    } else {
        for i in 0..n {
            for s in [-1.0, 1.0] {
                let mut d = vec![0.0; n];
                d[i] = s;
                dirs.push(d);
            }
        }
    }
    dirs.sort_by(|a, b| lex_cmp(a, b));
    let mut out = Vec::with_capacity(dirs.len() * m);
    for d in &dirs {
        for k in 1..=m {
            let t = r * k as f64 / m as f64;
            out.push(x.iter().zip(d).map(|(a, b)| a + t * b).collect());
        }
    }
    out
}

/// Distance from x to the nearest point of {u : lo_i ≤ ...} given rows·u ≤ rhs in one dimension.
fn interval_dist(x: f64, rows: &[Vec<f64>], rhs: &[f64]) -> f64 {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (r, b) in rows.iter().zip(rhs) {
        let c = r[0];
        if c > 0.0 {
            hi = hi.min(b / c);
        } else if c < 0.0 {
            lo = lo.max(b / c);
        } else if *b < -ZERO_TOL {
            return f64::INFINITY;
        }
    }
    if lo > hi + ZERO_TOL {
        return f64::INFINITY;
    }
    if x < lo {
        lo - x
    } else if x > hi {
        x - hi
    } else {
        0.0
    }
}

fn seed_grid(x: f64, w: f64) -> Vec<f64> {
    let n = ((2.0 * w * ROOT_SEEDS_PER_UNIT).ceil() as usize).max(MIN_ROOT_SEEDS);
    (0..=n)
        .map(|i| x - w + 2.0 * w * i as f64 / n as f64)
        .collect()
}

fn bisect(mut a: f64, mut b: f64, r: &dyn Fn(f64) -> f64) -> f64 {
    let mut ra = r(a);
    for _ in 0..BISECTION_ITERS {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let rm = r(m);
        if rm == 0.0 {
            return m;
        }
        if (rm > 0.0) == (ra > 0.0) {
            a = m;
            ra = rm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn golden_min(mut a: f64, mut b: f64, h: &dyn Fn(f64) -> f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut hc, mut hd) = (h(c), h(d));
    for _ in 0..GOLDEN_ITERS {
        if b - a <= f64::EPSILON * (a.abs() + b.abs()) + f64::MIN_POSITIVE {
            break;
        }
        if hc <= hd {
            b = d;
            d = c;
            hd = hc;
            c = b - g * (b - a);
            hc = h(c);
        } else {
            a = c;
            c = d;
            hc = hd;
            d = a + g * (b - a);
            hd = h(d);
        }
    }
    if hc <= hd {
        c
    } else {
        d
    }
}

/// Candidate zeros of a scalar residual: sign changes and touching minima of |r|.
fn zero_candidates(x: f64, w: f64, r: &dyn Fn(f64) -> f64) -> Vec<f64> {
    let grid = seed_grid(x, w);
    let vals: Vec<f64> = grid.iter().map(|u| r(*u)).collect();
    let mut roots = Vec::new();
    for i in 0..grid.len() {
        if vals[i] == 0.0 {
            roots.push(grid[i]);
        }
        if i + 1 < grid.len()
            && vals[i] != 0.0
            && vals[i + 1] != 0.0
            && (vals[i] > 0.0) != (vals[i + 1] > 0.0)
        {
            roots.push(bisect(grid[i], grid[i + 1], r));
        }
        if i > 0 && i + 1 < grid.len() {
            let (a, b, c) = (vals[i - 1].abs(), vals[i].abs(), vals[i + 1].abs());
            if b <= a && b <= c && b > 0.0 {
                let u = golden_min(grid[i - 1], grid[i + 1], &|u| r(u).abs());
                if r(u).abs() <= GRAPH_TOL {
                    roots.push(u);
                }
            }
        }
    }
    roots
}

fn nearest_zero(x: f64, w: f64, r: impl Fn(f64) -> f64) -> f64 {
    zero_candidates(x, w, &r)
        .iter()
        .map(|u| (x - u).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Nearest touching point of a nonnegative residual.
fn nearest_touch(x: f64, w: f64, h: impl Fn(f64) -> f64) -> f64 {
    nearest_zero(x, w, h)
}

/// Nearest point of {u : r(u) ≤ 0}.
fn nearest_sublevel(x: f64, w: f64, r: impl Fn(f64) -> f64) -> f64 {
    if r(x) <= ZERO_TOL {
        return 0.0;
    }
    let grid = seed_grid(x, w);
    let mut best = f64::INFINITY;
    for u in &grid {
        if r(*u) <= ZERO_TOL {
            best = best.min((x - u).abs());
        }
    }
    for u in zero_candidates(x, w, &r) {
        best = best.min((x - u).abs());
    }
    best
}

/// Modulation function φ: R₊ → R₊ with φ(0) = 0 and φ′ > 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phi {
    /// φ(t) = t^q, q ∈ (0,1]; q = 1 is the identity.
    Power { q: f64 },
    /// arccos(1 − t) for t < 1/2, continued linearly with slope 2/√3.
    CosExample,
    /// Piecewise linear through (0,0) and the listed (t, φ(t)) nodes.
    Table { table: Vec<[f64; 2]> },
}

impl Phi {
    pub fn identity() -> Self {
        Phi::Power { q: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Phi::Power { q } if !(*q > 0.0 && *q <= 1.0) => {
                input(format!("power exponent q must lie in (0,1], got {q}"))
            }
            Phi::Table { table } => {
                let mut prev = [0.0, 0.0];
                if table.is_empty() {
                    return input("phi table is empty");
                }
                for node in table {
                    if !(node[0] > prev[0] && node[1] > prev[1]) {
                        return input("phi table must be strictly increasing in t and φ(t), starting above (0,0)");
                    }
                    prev = *node;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Phi::Power { q } if *q == 1.0 => t,
            Phi::Power { q } => t.powf(*q),
            Phi::CosExample => {
                if t < 0.5 {
                    2.0 * (0.5 * t).sqrt().asin()
                } else {
                    std::f64::consts::FRAC_PI_3 + (2.0 * t - 1.0) / 3f64.sqrt()
                }
            }
            Phi::Table { table } => {
                let (i, t0, v0, slope) = table_segment(table, t);
                let _ = i;
                v0 + slope * (t - t0)
            }
        }
    }

    /// φ′(t); right derivative at 0, possibly +∞.
    pub fn deriv(&self, t: f64) -> f64 {
        match self {
            Phi::Power { q } if *q == 1.0 => 1.0,
            Phi::Power { q } => {
                if t == 0.0 {
                    f64::INFINITY
                } else {
                    q * t.powf(q - 1.0)
                }
            }
            Phi::CosExample => {
                if t == 0.0 {
                    f64::INFINITY
                } else if t < 0.5 {
                    1.0 / (t * (2.0 - t)).sqrt()
                } else {
                    2.0 / 3f64.sqrt()
                }
            }
            Phi::Table { table } => table_segment(table, t).3,
        }
    }

    pub fn holder_exponent(&self) -> Option<f64> {
        match self {
            Phi::Power { q } => Some(*q),
            _ => None,
        }
    }

    pub fn convex_near_zero(&self) -> bool {
        match self {
            Phi::Power { q } => *q == 1.0,
            Phi::CosExample => false,
            Phi::Table { table } => {
                let mut prev = [0.0, 0.0];
                let mut last = 0.0;
                for node in table {
                    let s = (node[1] - prev[1]) / (node[0] - prev[0]);
                    if s < last {
                        return false;
                    }
                    last = s;
                    prev = *node;
                }
                true
            }
        }
    }

    pub fn deriv_at_zero_finite(&self) -> bool {
        self.deriv(0.0).is_finite()
    }

    /// φ(0) = 0, φ′ > 0 and strict monotonicity on a grid over (0, t_max].
    pub fn check_invariants(&self, t_max: f64, n: usize) -> Result<()> {
        self.validate()?;
        if self.value(0.0) != 0.0 {
            return Err(Error::Invariant("phi(0) must be 0".into()));
        }
        let mut prev = 0.0;
        for k in 1..=n {
            let t = t_max * k as f64 / n as f64;
            let (v, d) = (self.value(t), self.deriv(t));
            if !(d > 0.0) || !(v > prev) {
                return Err(Error::Invariant(format!(
                    "phi is not strictly increasing near t = {t}"
                )));
            }
            prev = v;
        }
        Ok(())
    }

    /// Jumps larger than `tol` between neighbouring grid values flag a discontinuity.
    pub fn continuity_spot_check(&self, t_max: f64, n: usize, tol: f64) -> bool {
        let mut prev = self.value(0.0);
        for k in 1..=n {
            let v = self.value(t_max * k as f64 / n as f64);
            if (v - prev).abs() > tol {
                return false;
            }
            prev = v;
        }
        true
    }
}

fn table_segment(table: &[[f64; 2]], t: f64) -> (usize, f64, f64, f64) {
    let mut prev = [0.0, 0.0];
    for (i, node) in table.iter().enumerate() {
        if t < node[0] || i + 1 == table.len() {
            let slope = (node[1] - prev[1]) / (node[0] - prev[0]);
            return (i, prev[0], prev[1], slope);
        }
        prev = *node;
    }
    (0, 0.0, 0.0, 0.0)
}

/// Liminf estimate of t·φ′(t)/φ(t) as t ↓ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarthetaEstimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
}

/// ϑ[φ] over a decreasing schedule; the liminf is the minimum over the schedule's tail half.
pub fn vartheta(phi: &Phi, t_schedule: &[f64]) -> Result<VarthetaEstimate> {
    if let Some(q) = phi.holder_exponent() {
        return Ok(VarthetaEstimate {
            value: q,
            lower: q,
            upper: q,
            exact: true,
        });
    }
    if t_schedule.is_empty()
        || t_schedule.windows(2).any(|w| !(w[1] < w[0]))
        || t_schedule.iter().any(|t| *t <= 0.0)
    {
        return input("t schedule must be positive and strictly decreasing");
    }
    let mut ratios = Vec::with_capacity(t_schedule.len());
    for &t in t_schedule {
        let v = phi.value(t);
        if v <= 0.0 {
            return Err(Error::Invariant(format!("phi({t}) = 0 for t > 0")));
        }
        ratios.push(t * phi.deriv(t) / v);
    }
    let tail = &ratios[ratios.len() / 2..];
    let lower = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let upper = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(VarthetaEstimate {
        value: lower,
        lower,
        upper,
        exact: false,
    })
}

/// Default schedule t_k = 2^{-k}, k = 1..20.
pub fn default_t_schedule() -> Vec<f64> {
    (1..=20).map(|k| 0.5f64.powi(k)).collect()
}

/// g(y) = φ(‖y − ȳ‖) with ∂g(y) = φ′(‖y − ȳ‖)·J(y − ȳ) for y ≠ ȳ.
#[derive(Debug, Clone, PartialEq)]
pub struct Gauge {
    pub phi: Phi,
    pub ybar: Vec<f64>,
    pub space: Space,
}

pub fn g_from_phi(phi: Phi, ybar: &[f64], space: Space) -> Gauge {
    Gauge {
        phi,
        ybar: ybar.to_vec(),
        space,
    }
}

impl Gauge {
    pub fn dist(&self, y: &[f64]) -> f64 {
        self.space.dist(y, &self.ybar)
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        self.phi.value(self.dist(y))
    }

    pub fn duality(&self, y: &[f64]) -> Duality {
        spaces::duality_mapping(&spaces::sub(y, &self.ybar), &self.space)
    }

    /// Generators of ∂g(y); requires y ≠ ȳ.
    pub fn subdiff(&self, y: &[f64]) -> Result<Vec<Vec<f64>>> {
        let t = self.dist(y);
        if t <= ZERO_TOL {
            return Err(Error::Domain(
                "subdifferential of g queried at y = ybar".into(),
            ));
        }
        let d = self.phi.deriv(t);
        Ok(self
            .duality(y)
            .generators()
            .into_iter()
            .map(|v| spaces::scale(&v, d))
            .collect())
    }

    /// ξ_φ(y) = 1/φ′(‖y − ȳ‖).
    pub fn xi(&self, y: &[f64]) -> f64 {
        1.0 / self.phi.deriv(self.dist(y))
    }

    /// (P1′) and a finite refutation test for (P2′) over sample points y ≠ ȳ.
    pub fn check_properties(&self, ys: &[Vec<f64>]) -> GaugeReport {
        let mut p1 = true;
        let mut ratio = f64::INFINITY;
        for y in ys {
            let t = self.dist(y);
            if t > ZERO_TOL {
                let g = self.value(y);
                p1 &= g > 0.0;
                ratio = ratio.min(g / t);
            }
        }
        GaugeReport {
            p1_holds: p1,
            p2_min_ratio: ratio,
            p2_not_refuted: ratio > 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaugeReport {
    pub p1_holds: bool,
    pub p2_min_ratio: f64,
    /// A finite sample can only refute (P2′); `true` means "not refuted at this resolution".
    pub p2_not_refuted: bool,
}

/// f(x,y) = g(y) + i_{gph F}(x,y).
#[derive(Debug, Clone, Copy)]
pub struct LiftedFunction<'a> {
    pub map: &'a SetValuedMap,
    pub gauge: &'a Gauge,
}

pub fn lift<'a>(map: &'a SetValuedMap, gauge: &'a Gauge) -> LiftedFunction<'a> {
    LiftedFunction { map, gauge }
}

impl LiftedFunction<'_> {
    pub fn eval(&self, p: &ProductPoint) -> f64 {
        if self.map.contains(p) {
            self.gauge.value(&p.y)
        } else {
            f64::INFINITY
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, PI};

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

    fn parabola() -> SetValuedMap {
        SetValuedMap::new(
            ProductSpace::real_plane(),
            MapVariant::Smooth {
                params: SmoothFn::Polynomial {
                    coeffs: vec![0.0, 0.0, 1.0],
                },
            },
            ProductPoint::scalar(0.0, 0.0),
        )
        .unwrap()
    }

    fn abs_epigraph() -> SetValuedMap {
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

    #[test]
    fn g_from_phi_examples() {
        let e2 = Space::new(2, Norm::Euclidean).unwrap();
        let g = g_from_phi(Phi::identity(), &[0.0, 0.0], e2);
        assert_eq!(g.value(&[3.0, 4.0]), 5.0);
        assert_eq!(g.subdiff(&[3.0, 4.0]).unwrap(), vec![vec![0.6, 0.8]]);

        let h = g_from_phi(Phi::Power { q: 0.5 }, &[0.0], Space::real_line());
        assert_eq!(h.value(&[4.0]), 2.0);
        assert_eq!(h.subdiff(&[4.0]).unwrap(), vec![vec![0.25]]);
        assert_eq!(h.value(&[0.0]), 0.0);
        assert!(matches!(h.subdiff(&[0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn lift_examples() {
        let map = cos_map();
        let g = g_from_phi(Phi::identity(), &[0.0], Space::real_line());
        let f = lift(&map, &g);
        let x: f64 = 0.4;
        let y = 1.0 - x.cos();
        assert!((f.eval(&ProductPoint::scalar(x, y)) - y).abs() < 1e-15);
        assert_eq!(f.eval(&ProductPoint::scalar(x, y + 1e-3)), f64::INFINITY);
        assert_eq!(f.eval(&map.reference), 0.0);
    }

    #[test]
    fn dist_to_inverse_examples() {
        let d = cos_map().dist_to_inverse_image(&[0.3], Some(PI)).unwrap();
        assert!((d - 0.3).abs() < 1e-9, "{d}");
        let d = parabola().dist_to_inverse_image(&[0.7], None).unwrap();
        assert!((d - 0.7).abs() < 1e-9, "{d}");
        assert_eq!(parabola().dist_to_inverse_image(&[0.0], None).unwrap(), 0.0);
        assert_eq!(
            abs_epigraph()
                .dist_to_inverse_image(&[-0.25], None)
                .unwrap(),
            0.25
        );
    }

    #[test]
    fn dist_to_inverse_far_root() {
        let x = 2.0 * PI - 0.1;
        let d = cos_map().dist_to_inverse_image(&[x], None).unwrap();
        assert!((d - 0.1).abs() < 1e-8, "{d}");
    }

    #[test]
    fn graph_sample_examples() {
        let map = cos_map();
        let s = map.graph_sample(&map.reference, 0.5, 11).unwrap();
        assert_eq!(s.points.len(), 11);
        for (i, p) in s.points.iter().enumerate() {
            let x = -0.5 + 0.1 * i as f64;
            assert!((p.x[0] - x).abs() < 1e-12);
            assert!((p.y[0] - (1.0 - x.cos())).abs() < 1e-12);
        }
        let z = map.graph_sample(&map.reference, 0.0, 11).unwrap();
        assert_eq!(z.points, vec![map.reference.clone()]);
        assert!(z.isolated);
    }

    #[test]
    fn sampled_filter_identity() {
        let pts: Vec<ProductPoint> = (0..5)
            .map(|i| ProductPoint::scalar(i as f64 * 0.1, (i * i) as f64 * 0.01))
            .collect();
        let map = SetValuedMap::new(
            ProductSpace::real_plane(),
            MapVariant::Sampled {
                samples: pts.clone(),
            },
            pts[0].clone(),
        )
        .unwrap();
        assert_eq!(map.graph_sample(&pts[0], 10.0, 3).unwrap().points, pts);
    }

    #[test]
    fn duplicate_samples_rejected() {
        let p = ProductPoint::scalar(0.0, 0.0);
        let r = SetValuedMap::new(
            ProductSpace::real_plane(),
            MapVariant::Sampled {
                samples: vec![p.clone(), p.clone()],
            },
            p,
        );
        assert!(r.is_err());
    }

    #[test]
    fn vartheta_examples() {
        let sched = default_t_schedule();
        assert_eq!(vartheta(&Phi::Power { q: 0.5 }, &sched).unwrap().value, 0.5);
        assert_eq!(vartheta(&Phi::identity(), &sched).unwrap().value, 1.0);
        // arccos(1 − t) ~ √(2t) and φ′(t) ~ 1/√(2t), so tφ′/φ → 1/2.
        let v = vartheta(&Phi::CosExample, &sched).unwrap();
        assert!((v.value - 0.5).abs() < 1e-3, "{v:?}");
    }

    #[test]
    fn cos_phi_matches_closed_form() {
        let phi = Phi::CosExample;
        for t in [1e-6, 0.01, 0.2, 0.49] {
            assert!((phi.value(t) - (1.0 - t).acos()).abs() < 1e-7);
        }
        assert!((phi.value(0.5) - FRAC_PI_3).abs() < 1e-15);
        assert_eq!(phi.deriv(0.0), f64::INFINITY);
        assert!((phi.deriv(0.75) - 2.0 / 3f64.sqrt()).abs() < 1e-15);
        phi.check_invariants(2.0, 400).unwrap();
    }

    #[test]
    fn polyhedral_membership() {
        let m = abs_epigraph();
        assert!(m.contains(&ProductPoint::scalar(1.0, 1.0)));
        assert!(m.contains(&ProductPoint::scalar(-0.5, 2.0)));
        assert!(!m.contains(&ProductPoint::scalar(1.0, 0.5)));
        assert!(m.in_inverse(&[0.0]));
        assert!(!m.in_inverse(&[0.1]));
    }

    #[test]
    fn finite_difference_matches_closed_form() {
        let f = |x: &[f64]| vec![x[0].sin() * x[1], x[0] + x[1] * x[1]];
        let j = finite_difference_jacobian(&f, &[0.3, -1.2]);
        assert!((j[0][0] - 0.3f64.cos() * -1.2).abs() < 1e-8);
        assert!((j[0][1] - 0.3f64.sin()).abs() < 1e-8);
        assert!((j[1][1] + 2.4).abs() < 1e-8);
    }

    #[test]
    fn dykstra_projects_onto_line() {
        let rows = vec![vec![1.0, 1.0], vec![-1.0, -1.0]];
        let rhs = vec![1.0, -1.0];
        let z = project_halfspaces(&rows, &rhs, &[2.0, 2.0]);
        assert!(
            (z[0] - 0.5).abs() < 1e-9 && (z[1] - 0.5).abs() < 1e-9,
            "{z:?}"
        );
    }
}
