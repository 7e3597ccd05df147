//! Brute-force evaluation of slopes and moduli on finite graph samples.
//!
//! Everything is plain enumeration over points and pairs. The local competitor set of a point is
//! every other sample point within the declared local radius in the max-metric, which is the
//! finite stand-in for "u → x". Ties between attaining points go to the lexicographically
//! smallest one, so results do not depend on input order.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::criteria::{margin_verdict, Verdict};
use crate::error::{Error, Result};
use crate::ext;
use crate::mappings::{lift, MapVariant, Phi, SetValuedMap, ZERO_TOL};
use crate::primal_slopes::{
    local_rho_slope_f, nonlocal_rho_slope, phi_nonlocal_slope, primal_profile, rho_slope_F, Family,
    SlopeEstimate, StrictVariant,
};
use crate::problem::{Problem, Sampling};
use crate::spaces::{ProductPoint, ProductSpace, Space};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "quantity", rename_all = "snake_case")]
pub enum QuantityId {
    /// Local ρ-slope of the lifted function at sample point `point`.
    LocalSlope { point: usize, rho: f64 },
    /// Local ρ-slope of F (distance gauge).
    RhoSlope { point: usize, rho: f64 },
    /// Nonlocal (g,ρ)-slope.
    NonlocalSlope { point: usize, rho: f64 },
    /// Nonlocal (φ,ρ)-slope, no positive part.
    PhiNonlocalSlope { point: usize, rho: f64 },
    /// Strict slope at schedule step `step`.
    Strict {
        family: Family,
        variant: StrictVariant,
        step: usize,
    },
    /// g(y)/d(x, F⁻¹(ȳ)) minimized over the admissible set at `step`.
    Modulus { step: usize },
    /// g(y)/d(x, x̄) minimized over the admissible set at `step`.
    Growth { step: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExhaustiveResult {
    pub quantity: QuantityId,
    #[serde(with = "ext")]
    pub value: f64,
    pub attaining: Option<ProductPoint>,
}

struct Instance<'a> {
    sp: ProductSpace,
    pts: &'a [ProductPoint],
    xbar: &'a [f64],
    ybar: &'a [f64],
    phi: &'a Phi,
    r_local: f64,
}

impl Instance<'_> {
    fn dy(&self, y: &[f64]) -> f64 {
        self.sp.y.dist(y, self.ybar)
    }

    fn g(&self, y: &[f64]) -> f64 {
        self.phi.value(self.dy(y))
    }

    fn d_rho(&self, p: &ProductPoint, q: &ProductPoint, rho: f64) -> f64 {
        f64::max(self.sp.x.dist(&q.x, &p.x), rho * self.sp.y.dist(&q.y, &p.y))
    }

    fn neighbours<'b>(
        &'b self,
        p: &'b ProductPoint,
    ) -> impl Iterator<Item = &'b ProductPoint> + 'b {
        self.pts.iter().filter(move |q| {
            *q != p
                && f64::max(self.sp.x.dist(&q.x, &p.x), self.sp.y.dist(&q.y, &p.y)) <= self.r_local
        })
    }

    /// max over competitors of num(q)/d_ρ with the zero-denominator convention.
    fn sup_ratio<'b>(
        &self,
        p: &ProductPoint,
        comps: impl Iterator<Item = &'b ProductPoint>,
        num: impl Fn(&ProductPoint) -> f64,
        rho: f64,
        empty: f64,
    ) -> (f64, Option<ProductPoint>) {
        let mut best: Option<(f64, &ProductPoint)> = None;
        for q in comps {
            let n = num(q);
            let den = self.d_rho(p, q, rho);
            let r = if den < ZERO_TOL {
                if n > 0.0 {
                    f64::INFINITY
                } else {
                    continue;
                }
            } else {
                n / den
            };
            best = match best {
                Some((b, w)) if !(r > b || (r == b && q.lex_cmp(w) == Ordering::Less)) => {
                    Some((b, w))
                }
                _ => Some((r, q)),
            };
        }
        match best {
            Some((v, w)) if v != f64::NEG_INFINITY => (v, Some(w.clone())),
            _ => (empty, None),
        }
    }

    fn local(
        &self,
        p: &ProductPoint,
        rho: f64,
        distance_only: bool,
    ) -> (f64, Option<ProductPoint>) {
        let h = |y: &[f64]| if distance_only { self.dy(y) } else { self.g(y) };
        let hp = h(&p.y);
        let (v, w) = self.sup_ratio(p, self.neighbours(p), |q| (hp - h(&q.y)).max(0.0), rho, 0.0);
        // an empty maximum over the positive part is 0
        if v < 0.0 {
            (0.0, None)
        } else {
            (v, w)
        }
    }

    fn nonlocal(&self, p: &ProductPoint, rho: f64, positive: bool) -> (f64, Option<ProductPoint>) {
        let gp = self.g(&p.y);
        let (v, w) = self.sup_ratio(
            p,
            self.pts.iter().filter(|q| *q != p),
            |q| {
                let d = gp - self.g(&q.y);
                if positive {
                    d.max(0.0)
                } else {
                    d
                }
            },
            rho,
            0.0,
        );
        if positive && v < 0.0 {
            (0.0, None)
        } else {
            (v, w)
        }
    }

    fn in_inverse(&self, x: &[f64]) -> bool {
        self.pts
            .iter()
            .any(|s| s.x.as_slice() == x && self.dy(&s.y) <= ZERO_TOL)
    }

    fn dist_inv(&self, x: &[f64]) -> f64 {
        let d = self
            .pts
            .iter()
            .filter(|s| self.dy(&s.y) <= ZERO_TOL)
            .map(|s| self.sp.x.dist(x, &s.x))
            .fold(f64::INFINITY, f64::min);
        d.min(self.sp.x.dist(x, self.xbar))
    }

    fn admissible(&self, rho: f64) -> impl Iterator<Item = &ProductPoint> + '_ {
        self.pts.iter().filter(move |p| {
            self.sp.x.dist(&p.x, self.xbar) < rho && self.dy(&p.y) < rho && !self.in_inverse(&p.x)
        })
    }

    fn inf_over(&self, rho: f64, f: impl Fn(&ProductPoint) -> f64) -> (f64, Option<ProductPoint>) {
        let mut best: Option<(f64, &ProductPoint)> = None;
        for p in self.admissible(rho) {
            let v = f(p);
            best = match best {
                Some((b, w)) if !(v < b || (v == b && p.lex_cmp(w) == Ordering::Less)) => {
                    Some((b, w))
                }
                _ => Some((v, p)),
            };
        }
        match best {
            Some((v, w)) => (v, Some(w.clone())),
            None => (f64::INFINITY, None),
        }
    }
}

fn mul_ext(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// Evaluates one quantity on a finite-sample problem by full enumeration.
pub fn exhaustive_slope(quantity: QuantityId, problem: &Problem) -> Result<ExhaustiveResult> {
    let MapVariant::Sampled { samples } = &problem.map.variant else {
        return Err(Error::Unsupported(
            "the oracle only evaluates finite samples".into(),
        ));
    };
    let map = &problem.map;
    let inst = Instance {
        sp: map.spaces,
        pts: samples,
        xbar: map.xbar(),
        ybar: map.ybar(),
        phi: &problem.phi,
        r_local: problem.sampling.local_r0(map),
    };
    let rhos = problem.schedule().rhos();
    let point = |i: usize| {
        samples
            .get(i)
            .ok_or_else(|| Error::Input(format!("no sample point {i}")))
    };
    let step = |k: usize| {
        rhos.get(k)
            .copied()
            .ok_or_else(|| Error::Input(format!("no schedule step {k}")))
    };
    let (value, attaining) = match quantity {
        QuantityId::LocalSlope { point: i, rho } => inst.local(point(i)?, rho, false),
        QuantityId::RhoSlope { point: i, rho } => inst.local(point(i)?, rho, true),
        QuantityId::NonlocalSlope { point: i, rho } => inst.nonlocal(point(i)?, rho, true),
        QuantityId::PhiNonlocalSlope { point: i, rho } => inst.nonlocal(point(i)?, rho, false),
        QuantityId::Strict {
            family,
            variant,
            step: k,
        } => {
            let rho = step(k)?;
            inst.inf_over(rho, |p| {
                let dx = inst.sp.x.dist(&p.x, inst.xbar);
                let g = inst.g(&p.y);
                let base = match (family, variant) {
                    (Family::Phi, StrictVariant::Uniform) => inst.nonlocal(p, rho, false).0,
                    (_, StrictVariant::Uniform) => inst.nonlocal(p, rho, true).0,
                    (Family::Phi, _) => {
                        mul_ext(inst.phi.deriv(inst.dy(&p.y)), inst.local(p, rho, true).0)
                    }
                    _ => inst.local(p, rho, false).0,
                };
                if variant == StrictVariant::Modified {
                    base.max(g / dx)
                } else {
                    base
                }
            })
        }
        QuantityId::Modulus { step: k } => {
            let rho = step(k)?;
            inst.inf_over(rho, |p| {
                let (g, d) = (inst.g(&p.y), inst.dist_inv(&p.x));
                if d < ZERO_TOL {
                    f64::INFINITY
                } else {
                    g / d
                }
            })
        }
        QuantityId::Growth { step: k } => {
            let rho = step(k)?;
            inst.inf_over(rho, |p| inst.g(&p.y) / inst.sp.x.dist(&p.x, inst.xbar))
        }
    };
    Ok(ExhaustiveResult {
        quantity,
        value,
        attaining,
    })
}

/// Every primal quantity of `problem` that differs from the oracle, by bit pattern.
///
/// Per-point slopes are compared at every sample point and schedule step, strict slopes and
/// moduli at every step. An empty result means the estimators agree with enumeration exactly.
pub fn primal_mismatches(problem: &Problem) -> Result<Vec<String>> {
    let MapVariant::Sampled { samples } = &problem.map.variant else {
        return Err(Error::Unsupported(
            "the oracle only evaluates finite samples".into(),
        ));
    };
    let (map, s) = (&problem.map, &problem.sampling);
    let gauge = problem.gauge();
    let f = lift(map, &gauge);
    let mut out = Vec::new();
    let mut cmp = |id: QuantityId, got: Result<f64>| {
        let want = exhaustive_slope(id, problem).map(|r| r.value);
        match (got, want) {
            (Ok(a), Ok(b)) if a.to_bits() == b.to_bits() => {}
            (a, b) => out.push(format!("{id:?}: estimator {a:?}, oracle {b:?}")),
        }
    };
    let rhos = problem.schedule().rhos();
    for (i, p) in samples.iter().enumerate() {
        for &rho in &rhos {
            cmp(
                QuantityId::LocalSlope { point: i, rho },
                local_rho_slope_f(&f, p, rho, s).map(|e| e.value),
            );
            cmp(
                QuantityId::RhoSlope { point: i, rho },
                rho_slope_F(map, p, rho, s).map(|e| e.value),
            );
            cmp(
                QuantityId::NonlocalSlope { point: i, rho },
                nonlocal_rho_slope(&f, p, rho, s).map(|e| e.value),
            );
            cmp(
                QuantityId::PhiNonlocalSlope { point: i, rho },
                phi_nonlocal_slope(map, &problem.phi, p, rho, s).map(|e| e.value),
            );
        }
    }
    let prof = primal_profile(problem)?;
    let step_values = |e: SlopeEstimate| e.trajectory.iter().map(|t| t.value).collect::<Vec<f64>>();
    let modulus = step_values(prof.modulus());
    let growth = step_values(prof.growth());
    let strict: Vec<(Family, StrictVariant, Vec<f64>)> = [Family::G, Family::Phi]
        .into_iter()
        .flat_map(|fam| {
            [
                StrictVariant::Plain,
                StrictVariant::Modified,
                StrictVariant::Uniform,
            ]
            .map(|v| (fam, v, step_values(prof.strict(fam, v))))
        })
        .collect();
    for k in 0..rhos.len() {
        let at = |v: &[f64]| {
            v.get(k)
                .copied()
                .ok_or_else(|| Error::Invariant(format!("no trajectory step {k}")))
        };
        cmp(QuantityId::Modulus { step: k }, at(&modulus));
        cmp(QuantityId::Growth { step: k }, at(&growth));
        for (family, variant, v) in &strict {
            cmp(
                QuantityId::Strict {
                    family: *family,
                    variant: *variant,
                    step: k,
                },
                at(v),
            );
        }
    }
    Ok(out)
}

/// Primal edges of the quantitative corollaries that the oracle can decide on a finite sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleEdge {
    /// growth > γ ⇒ modified strict slope > γ
    CImpliesE,
    /// strict slope > γ ⇒ modified strict slope > γ
    DImpliesE,
    /// modified strict slope > γ ⇒ uniform strict slope > γ
    EImpliesB,
    /// subregular with τ > γ ⇒ uniform strict slope > γ
    AImpliesB,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImplicationTruth {
    pub edge: OracleEdge,
    pub family: Family,
    pub gamma: f64,
    pub source: Verdict,
    pub target: Verdict,
    pub consistent: bool,
}

/// Both ends of an edge evaluated exhaustively at the final schedule step.
pub fn exhaustive_implication_truth(
    problem: &Problem,
    edge: OracleEdge,
    family: Family,
    gamma: f64,
) -> Result<ImplicationTruth> {
    let last = problem.schedule().steps - 1;
    let q = |id| exhaustive_slope(id, problem).map(|r| r.value);
    let strict = |variant| {
        q(QuantityId::Strict {
            family,
            variant,
            step: last,
        })
    };
    let (s, t) = match edge {
        OracleEdge::CImpliesE => (
            q(QuantityId::Growth { step: last })?,
            strict(StrictVariant::Modified)?,
        ),
        OracleEdge::DImpliesE => (
            strict(StrictVariant::Plain)?,
            strict(StrictVariant::Modified)?,
        ),
        OracleEdge::EImpliesB => (
            strict(StrictVariant::Modified)?,
            strict(StrictVariant::Uniform)?,
        ),
        OracleEdge::AImpliesB => (
            q(QuantityId::Modulus { step: last })?,
            strict(StrictVariant::Uniform)?,
        ),
    };
    let (source, target) = (margin_verdict(s, gamma), margin_verdict(t, gamma));
    Ok(ImplicationTruth {
        edge,
        family,
        gamma,
        source,
        target,
        consistent: !(source == Verdict::Holds && target == Verdict::Fails),
    })
}

/// Seeded random finite graph around (0,0), at most `max_points` points.
///
/// The zero set F⁻¹(0) is {0} plus a few points (u,0); every other point has
/// y = c|x|^a(1 + noise/2) > 0 with x = ±2^{-U(0,9)}. Points with ρ_K·|y| > |x − u| for a
/// zero-set abscissa u are redrawn, so the zero set is always the nearest competitor in the
/// final-step ρ-metric and the finite surrogate of d(x, F⁻¹(ȳ)) is faithful.
pub fn random_sampled_instance(seed: u64, index: u64, max_points: usize) -> Problem {
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index));
    let sampling = Sampling {
        radius: 8.0,
        resolution: 3,
        ..Sampling::default()
    };
    let rho_last = sampling.rho_schedule.last();
    let n = rng.gen_range(3..=max_points.max(3));
    let n_zero = rng.gen_range(0..=3usize).min(n - 2);
    let mut zeros = vec![0.0];
    while zeros.len() < 1 + n_zero {
        let u: f64 = rng.gen_range(0.3..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        if !zeros.contains(&u) {
            zeros.push(u);
        }
    }
    let c: f64 = rng.gen_range(0.5..2.0);
    let a: f64 = rng.gen_range(0.5..2.0);
    let mut pts: Vec<ProductPoint> = zeros
        .iter()
        .map(|u| ProductPoint::scalar(*u, 0.0))
        .collect();
    let mut attempts = 0;
    while pts.len() < n && attempts < 20 * n {
        attempts += 1;
        let x = 2f64.powf(-rng.gen_range(0.0..9.0)) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let y = c * x.abs().powf(a) * (1.0 + 0.5 * rng.gen_range(-1.0..1.0));
        if zeros.iter().any(|u| rho_last * y > (x - u).abs()) || pts.iter().any(|p| p.x[0] == x) {
            continue;
        }
        pts.push(ProductPoint::scalar(x, y));
    }
    let phi = match rng.gen_range(0..3) {
        0 => Phi::identity(),
        1 => Phi::Power { q: 0.5 },
        _ => Phi::Power { q: 0.75 },
    };
    let reference = pts[0].clone();
    let map = SetValuedMap::new(
        ProductSpace::real_plane(),
        MapVariant::Sampled { samples: pts },
        reference,
    )
    .expect("generated sample is valid");
    let mut p =
        Problem::new(map, phi, sampling, Default::default()).expect("generated problem is valid");
    p.name = Some(format!("random-{seed}-{index}"));
    p
}

/// Largest max-metric distance between two sample points.
pub fn sample_diameter(samples: &[ProductPoint], sx: &Space, sy: &Space) -> f64 {
    let mut d: f64 = 0.0;
    for p in samples {
        for q in samples {
            d = d.max(sx.dist(&p.x, &q.x)).max(sy.dist(&p.y, &q.y));
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_point() -> Problem {
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
        let s = Sampling {
            radius: 10.0,
            ..Sampling::default()
        };
        Problem::new(map, Phi::identity(), s, Default::default()).unwrap()
    }

    #[test]
    fn hand_enumerated_values() {
        let p = three_point();
        let r = exhaustive_slope(QuantityId::NonlocalSlope { point: 2, rho: 1.0 }, &p).unwrap();
        assert_eq!(r.value, 0.5);
        assert_eq!(r.attaining, Some(ProductPoint::scalar(0.0, 0.0)));
        // F⁻¹(0) = {0}: min over x ≠ 0 of g(y)/|x| = min(1/1, 1/2)
        let m = exhaustive_slope(
            QuantityId::Modulus { step: 0 },
            &Problem {
                sampling: Sampling {
                    rho_schedule: crate::problem::RhoSchedule::new(4.0, 0.5, 1).unwrap(),
                    ..p.sampling
                },
                ..p.clone()
            },
        )
        .unwrap();
        assert_eq!(m.value, 0.5);
    }

    #[test]
    fn single_point_has_no_competitor() {
        let p0 = ProductPoint::scalar(0.0, 0.0);
        let map = SetValuedMap::new(
            ProductSpace::real_plane(),
            MapVariant::Sampled {
                samples: vec![p0.clone()],
            },
            p0,
        )
        .unwrap();
        let p = Problem::new(
            map,
            Phi::identity(),
            Sampling::default(),
            Default::default(),
        )
        .unwrap();
        let r = exhaustive_slope(QuantityId::NonlocalSlope { point: 0, rho: 1.0 }, &p).unwrap();
        assert_eq!(r.value, 0.0);
        let s = exhaustive_slope(
            QuantityId::Strict {
                family: Family::G,
                variant: StrictVariant::Plain,
                step: 0,
            },
            &p,
        )
        .unwrap();
        assert_eq!(s.value, f64::INFINITY);
    }

    #[test]
    fn order_independent() {
        let p = random_sampled_instance(7, 3, 30);
        let MapVariant::Sampled { samples } = &p.map.variant else {
            unreachable!()
        };
        let mut rev = samples.clone();
        rev.reverse();
        let q = Problem {
            map: SetValuedMap::new(
                p.map.spaces,
                MapVariant::Sampled { samples: rev },
                p.map.reference.clone(),
            )
            .unwrap(),
            ..p.clone()
        };
        for k in 0..p.schedule().steps {
            for id in [
                QuantityId::Modulus { step: k },
                QuantityId::Strict {
                    family: Family::Phi,
                    variant: StrictVariant::Uniform,
                    step: k,
                },
                QuantityId::Strict {
                    family: Family::G,
                    variant: StrictVariant::Modified,
                    step: k,
                },
            ] {
                assert_eq!(
                    exhaustive_slope(id, &p).unwrap(),
                    exhaustive_slope(id, &q).unwrap()
                );
            }
        }
    }

    #[test]
    fn generator_is_deterministic_and_bounded() {
        let a = random_sampled_instance(11, 5, 50);
        let b = random_sampled_instance(11, 5, 50);
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let MapVariant::Sampled { samples } = &a.map.variant else {
            unreachable!()
        };
        assert!(samples.len() <= 50);
        assert!(sample_diameter(samples, &a.map.spaces.x, &a.map.spaces.y) <= a.sampling.radius);
    }

    #[test]
    fn estimators_match_enumeration() {
        for i in 0..5 {
            let p = random_sampled_instance(2, i, 25);
            let bad = primal_mismatches(&p).unwrap();
            assert!(bad.is_empty(), "{bad:#?}");
        }
        assert!(primal_mismatches(&three_point()).unwrap().is_empty());
    }

    #[test]
    fn monotone_edges_consistent() {
        for i in 0..10 {
            let p = random_sampled_instance(1, i, 40);
            for e in [OracleEdge::CImpliesE, OracleEdge::DImpliesE] {
                for g in [0.1, 0.5, 1.0] {
                    assert!(
                        exhaustive_implication_truth(&p, e, Family::G, g)
                            .unwrap()
                            .consistent
                    );
                }
            }
        }
    }
}
