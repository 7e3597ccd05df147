//! Finite-dimensional normed spaces, the product ρ-metrics and the duality mapping.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// Relative tolerance used to decide which coordinates attain a max norm.
const FACE_TOL: f64 = 1e-12;
/// Faces with more free coordinates than this are not enumerated.
const MAX_FREE_COORDS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    Euclidean,
    Max,
    PNorm(f64),
}

impl Norm {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Norm::PNorm(p) if !(p >= 1.0 && p.is_finite()) => {
                input(format!("p-norm exponent must be finite and >= 1, got {p}"))
            }
            _ => Ok(()),
        }
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        if v.len() == 1 {
            return v[0].abs();
        }
        match *self {
            Norm::Euclidean => euclidean(v),
            Norm::Max => v.iter().fold(0.0, |m, a| f64::max(m, a.abs())),
            Norm::PNorm(1.0) => v.iter().map(|a| a.abs()).sum(),
            Norm::PNorm(2.0) => euclidean(v),
            Norm::PNorm(p) => {
                let scale = v.iter().fold(0.0, |m, a| f64::max(m, a.abs()));
                if scale == 0.0 {
                    return 0.0;
                }
                let s: f64 = v.iter().map(|a| (a.abs() / scale).powf(p)).sum();
                scale * s.powf(1.0 / p)
            }
        }
    }

    /// Norm of the dual space, in closed form.
    pub fn dual(&self) -> Norm {
        match *self {
            Norm::Euclidean => Norm::Euclidean,
            Norm::Max => Norm::PNorm(1.0),
            Norm::PNorm(1.0) => Norm::Max,
            Norm::PNorm(2.0) => Norm::Euclidean,
            Norm::PNorm(p) => Norm::PNorm(p / (p - 1.0)),
        }
    }

    pub fn dual_norm(&self, v: &[f64]) -> f64 {
        self.dual().norm(v)
    }

    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        if a.len() == 1 {
            return (a[0] - b[0]).abs();
        }
        self.norm(&sub(a, b))
    }
}

fn euclidean(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0, |m, a| f64::max(m, a.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let s: f64 = v.iter().map(|a| (a / scale) * (a / scale)).sum();
    scale * s.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Space {
    pub dim: usize,
    pub norm: Norm,
}

impl Space {
    pub fn new(dim: usize, norm: Norm) -> Result<Self> {
        if dim == 0 {
            return input("space dimension must be positive");
        }
        norm.validate()?;
        Ok(Space { dim, norm })
    }

    pub fn real_line() -> Self {
        Space {
            dim: 1,
            norm: Norm::Euclidean,
        }
    }

    pub fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(())
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        self.norm.norm(v)
    }

    pub fn dual_norm(&self, v: &[f64]) -> f64 {
        self.norm.dual_norm(v)
    }

    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        self.norm.dist(a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductSpace {
    pub x: Space,
    pub y: Space,
}

impl ProductSpace {
    pub fn real_plane() -> Self {
        ProductSpace {
            x: Space::real_line(),
            y: Space::real_line(),
        }
    }

    pub fn check(&self, p: &ProductPoint) -> Result<()> {
        self.x.check(&p.x)?;
        self.y.check(&p.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ProductPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        ProductPoint { x, y }
    }

    pub fn scalar(x: f64, y: f64) -> Self {
        ProductPoint {
            x: vec![x],
            y: vec![y],
        }
    }

    /// Lexicographic order on the coordinate vector (x, y); used for witness tie-breaks.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        lex_cmp(self.x.iter().chain(&self.y), other.x.iter().chain(&other.y))
    }
}

pub fn lex_cmp<'a>(
    a: impl IntoIterator<Item = &'a f64>,
    b: impl IntoIterator<Item = &'a f64>,
) -> Ordering {
    for (u, v) in a.into_iter().zip(b) {
        match u.total_cmp(v) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// d_ρ((x,y),(u,v)) = max{d(x,u), ρ·d(y,v)}.
pub fn rho_dist(s: &ProductSpace, p: &ProductPoint, q: &ProductPoint, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    s.check(p)?;
    s.check(q)?;
    Ok(rho_dist_unchecked(s, p, q, rho))
}

pub(crate) fn rho_dist_unchecked(
    s: &ProductSpace,
    p: &ProductPoint,
    q: &ProductPoint,
    rho: f64,
) -> f64 {
    f64::max(s.x.dist(&p.x, &q.x), rho * s.y.dist(&p.y, &q.y))
}

/// d¹_ρ((x,y),(u,v)) = d(x,u) + ρ·d(y,v).
pub fn rho_sum_dist(s: &ProductSpace, p: &ProductPoint, q: &ProductPoint, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    s.check(p)?;
    s.check(q)?;
    Ok(s.x.dist(&p.x, &q.x) + rho * s.y.dist(&p.y, &q.y))
}

/// ‖(x*,y*)‖_ρ = ‖x*‖ + ρ⁻¹‖y*‖ in the dual norms.
pub fn rho_dual_norm(s: &ProductSpace, xstar: &[f64], ystar: &[f64], rho: f64) -> Result<f64> {
    check_rho(rho)?;
    s.x.check(xstar)?;
    s.y.check(ystar)?;
    Ok(s.x.dual_norm(xstar) + s.y.dual_norm(ystar) / rho)
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return input(format!("rho must be positive and finite, got {rho}"));
    }
    Ok(())
}

/// Value of the duality mapping J(y) = {y* ∈ S* : ⟨y*,y⟩ = ‖y‖}.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Duality {
    Single(Vec<f64>),
    /// Convex hull of the listed vertices, sorted lexicographically.
    Face(Vec<Vec<f64>>),
    /// J(0): the whole dual unit sphere.
    Sphere,
}

impl Duality {
    /// Finite generating set; empty for the sphere flag.
    pub fn generators(&self) -> Vec<Vec<f64>> {
        match self {
            Duality::Single(v) => vec![v.clone()],
            Duality::Face(vs) => vs.clone(),
            Duality::Sphere => Vec::new(),
        }
    }

    /// Deterministic representative: the lexicographically smallest vertex.
    pub fn representative(&self) -> Option<&[f64]> {
        match self {
            Duality::Single(v) => Some(v),
            Duality::Face(vs) => vs.first().map(|v| v.as_slice()),
            Duality::Sphere => None,
        }
    }
}

pub fn duality_mapping(y: &[f64], space: &Space) -> Duality {
    if y.iter().all(|a| *a == 0.0) {
        return Duality::Sphere;
    }
    if y.len() == 1 {
        return Duality::Single(vec![y[0].signum()]);
    }
    let n = space.norm.norm(y);
    match space.norm {
        Norm::Euclidean => Duality::Single(y.iter().map(|a| a / n).collect()),
        Norm::PNorm(2.0) => Duality::Single(y.iter().map(|a| a / n).collect()),
        Norm::Max => {
            let mut vs: Vec<Vec<f64>> = (0..y.len())
                .filter(|&i| y[i].abs() >= n * (1.0 - FACE_TOL))
                .map(|i| {
                    let mut v = vec![0.0; y.len()];
                    v[i] = y[i].signum();
                    v
                })
                .collect();
            finish_face(&mut vs)
        }
        Norm::PNorm(1.0) => {
            let free: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 0.0).collect();
            let base: Vec<f64> = y
                .iter()
                .map(|a| if *a == 0.0 { 0.0 } else { a.signum() })
                .collect();
            if free.len() > MAX_FREE_COORDS {
                return Duality::Face(vec![base]);
            }
            let mut vs = Vec::with_capacity(1 << free.len());
            for mask in 0..(1usize << free.len()) {
                let mut v = base.clone();
                for (k, &i) in free.iter().enumerate() {
                    v[i] = if mask & (1 << k) == 0 { -1.0 } else { 1.0 };
                }
                vs.push(v);
            }
            finish_face(&mut vs)
        }
        Norm::PNorm(p) => {
            let scale = n.powf(p - 1.0);
            Duality::Single(
                y.iter()
                    .map(|a| a.signum() * a.abs().powf(p - 1.0) / scale)
                    .collect(),
            )
        }
    }
}

fn finish_face(vs: &mut Vec<Vec<f64>>) -> Duality {
    vs.sort_by(|a, b| lex_cmp(a, b));
    if vs.len() == 1 {
        Duality::Single(vs.pop().unwrap_or_default())
    } else {
        Duality::Face(std::mem::take(vs))
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(u, v)| u - v).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(u, v)| u + v).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

pub fn scale(a: &[f64], t: f64) -> Vec<f64> {
    a.iter().map(|u| u * t).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> ProductPoint {
        ProductPoint::scalar(x, y)
    }

    #[test]
    fn rho_dist_examples() {
        let s = ProductSpace::real_plane();
        assert_eq!(
            rho_dist(&s, &pt(0.0, 0.0), &pt(1.0, 2.0), 0.5).unwrap(),
            1.0
        );
        assert_eq!(
            rho_dist(&s, &pt(0.0, 0.0), &pt(1.0, 2.0), 2.0).unwrap(),
            4.0
        );
        assert_eq!(
            rho_dist(&s, &pt(0.3, -1.0), &pt(0.3, -1.0), 7.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn rho_sum_dist_examples() {
        let s = ProductSpace::real_plane();
        assert_eq!(
            rho_sum_dist(&s, &pt(0.0, 0.0), &pt(1.0, 2.0), 0.5).unwrap(),
            2.0
        );
        assert_eq!(
            rho_sum_dist(&s, &pt(2.0, 2.0), &pt(2.0, 2.0), 0.5).unwrap(),
            0.0
        );
        for rho in [0.01, 1.0, 30.0] {
            assert_eq!(
                rho_sum_dist(&s, &pt(0.0, 0.0), &pt(1.0, 0.0), rho).unwrap(),
                1.0
            );
        }
    }

    #[test]
    fn dual_norm_examples() {
        let s = ProductSpace {
            x: Space::new(2, Norm::Euclidean).unwrap(),
            y: Space::real_line(),
        };
        assert_eq!(rho_dual_norm(&s, &[0.0, 0.0], &[0.0], 0.3).unwrap(), 0.0);
        assert_eq!(rho_dual_norm(&s, &[3.0, 4.0], &[0.0], 0.3).unwrap(), 5.0);
        assert_eq!(rho_dual_norm(&s, &[0.0, 0.0], &[1.0], 0.25).unwrap(), 4.0);
    }

    #[test]
    fn dimension_mismatch_is_input_error() {
        let s = ProductSpace::real_plane();
        let bad = ProductPoint::new(vec![0.0, 1.0], vec![0.0]);
        assert!(matches!(
            rho_dist(&s, &bad, &pt(0.0, 0.0), 1.0),
            Err(Error::Dimension { .. })
        ));
        assert!(rho_dist(&s, &pt(0.0, 0.0), &pt(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn duality_examples() {
        let e2 = Space::new(2, Norm::Euclidean).unwrap();
        assert_eq!(
            duality_mapping(&[3.0, 4.0], &e2),
            Duality::Single(vec![0.6, 0.8])
        );
        assert_eq!(
            duality_mapping(&[-2.0], &Space::real_line()),
            Duality::Single(vec![-1.0])
        );
        assert_eq!(duality_mapping(&[0.0, 0.0], &e2), Duality::Sphere);
    }

    #[test]
    fn duality_max_norm_face() {
        let m = Space::new(2, Norm::Max).unwrap();
        let j = duality_mapping(&[1.0, -1.0], &m);
        assert_eq!(j, Duality::Face(vec![vec![0.0, -1.0], vec![1.0, 0.0]]));
        assert_eq!(j.representative(), Some(&[0.0, -1.0][..]));
        assert_eq!(
            duality_mapping(&[0.5, -1.0], &m),
            Duality::Single(vec![0.0, -1.0])
        );
    }

    #[test]
    fn duality_l1_face_has_free_coordinates() {
        let l1 = Space::new(3, Norm::PNorm(1.0)).unwrap();
        let j = duality_mapping(&[2.0, 0.0, -1.0], &l1);
        let gens = j.generators();
        assert_eq!(gens.len(), 2);
        for g in gens {
            assert_eq!(l1.dual_norm(&g), 1.0);
            assert_eq!(dot(&g, &[2.0, 0.0, -1.0]), 3.0);
        }
    }

    #[test]
    fn dual_exponents() {
        assert_eq!(Norm::Max.dual(), Norm::PNorm(1.0));
        assert_eq!(Norm::PNorm(1.0).dual(), Norm::Max);
        assert_eq!(Norm::PNorm(3.0).dual(), Norm::PNorm(1.5));
        assert!(Norm::PNorm(0.5).validate().is_err());
    }
}
