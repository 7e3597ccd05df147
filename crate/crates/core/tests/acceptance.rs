//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any criterion fails.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};
use std::time::Instant;

use subreg::cli::{self, Axis, Common, Format, GaugeSel};
use subreg::corpus::{
    self, abs_epigraph, builtin_cases, cos_example, identity_map, parabola, parabola_epigraph,
    random_cases, RandomBatch,
};
use subreg::criteria::{convex_necessity_bound, Evaluation, QuantityKey, DEFAULT_GAMMAS};
use subreg::dual_slopes::{LimitingKind, SubdiffVariant};
use subreg::mappings::{default_t_schedule, vartheta, MapVariant, Phi};
use subreg::oracle::{primal_mismatches, random_sampled_instance, sample_diameter};
use subreg::primal_slopes::{rho_slope_F, Family, StrictVariant};
use subreg::spaces::ProductPoint;
use subreg::Result;

const SEED: u64 = 20240601;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Result<Outcome>);

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn within(v: f64, lo: f64, hi: f64) -> bool {
    v >= lo && v <= hi
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

fn common() -> Common {
    Common {
        problem: None,
        gauge: GaugeSel::Phi,
        gamma: None,
        rho0: None,
        rho_factor: None,
        rho_steps: None,
        radius: None,
        resolution: None,
        format: Format::Json,
        seed: SEED,
        out: None,
    }
}

fn value(report: &cli::AnalyzeReport, key: QuantityKey) -> f64 {
    report
        .quantities
        .iter()
        .find(|q| q.quantity == key)
        .map_or(f64::NAN, |q| q.scalar.value)
}

fn c1_cos_example() -> Result<Outcome> {
    let t = Instant::now();
    let report = cli::analyze(&cos_example(2001)?)?;
    let secs = t.elapsed().as_secs_f64();
    let sr = value(&report, QuantityKey::Modulus);
    let strict = value(
        &report,
        QuantityKey::Primal(Family::Phi, StrictVariant::Plain),
    );
    let uniform = value(
        &report,
        QuantityKey::Primal(Family::Phi, StrictVariant::Uniform),
    );
    let ok = [sr, strict, uniform].iter().all(|v| within(*v, 0.95, 1.05)) && secs < 10.0;
    outcome(
        ok,
        format!("sr_phi={sr:.5} strict={strict:.5} uniform={uniform:.5} analyze {secs:.2}s"),
    )
}

fn c2_rho_slope() -> Result<Outcome> {
    let p = cos_example(2001)?;
    let mut worst: f64 = 0.0;
    for x in [0.1, 0.3, FRAC_PI_6, FRAC_PI_4, 1.0] {
        let pt = ProductPoint::scalar(x, 1.0 - x.cos());
        for rho in [p.schedule().rho0, p.schedule().last()] {
            let s = rho_slope_F(&p.map, &pt, rho, &p.sampling)?;
            worst = worst.max((s.value - x.sin().abs()).abs());
        }
    }
    outcome(
        worst <= 1e-3,
        format!("max |slope - |sin x|| = {worst:.2e} over 5 points and rho in {{1, 1/128}}"),
    )
}

fn c3_vartheta() -> Result<Outcome> {
    let ts = default_t_schedule();
    let mut exact = true;
    for q in [0.25, 0.5, 1.0] {
        exact &= vartheta(&Phi::Power { q }, &ts)?.value == q;
    }
    let cos = vartheta(&Phi::CosExample, &ts)?;
    let cos_ok = within(cos.value, 0.98, 1.02);
    let why = if cos_ok {
        ""
    } else {
        "; t*phi'(t)/phi(t) -> 1/2 for arccos(1-t), outside [0.98, 1.02]"
    };
    outcome(
        exact && cos_ok,
        format!(
            "holder exact={exact}, cos example vartheta={:.6} [{:.6}, {:.6}]{why}",
            cos.value, cos.lower, cos.upper
        ),
    )
}

fn c4_holder_sweep() -> Result<Outcome> {
    let t = Instant::now();
    let p = parabola(Phi::identity())?;
    let r = cli::sweep(&p, &common(), Axis::Q, &[1.0, 0.5])?;
    let secs = t.elapsed().as_secs_f64();
    let (m1, mh) = (r.rows[0].modulus.value, r.rows[1].modulus.value);
    outcome(
        mh >= 0.95 && m1 <= 0.05 && secs < 5.0,
        format!("modulus q=1: {m1:.4}, q=0.5: {mh:.4}, |x|<=0.1, {secs:.2}s"),
    )
}

fn c5_hierarchy() -> Result<Outcome> {
    let t = Instant::now();
    let mut cases = builtin_cases()?;
    let n_builtin = cases.len();
    cases.extend(random_cases(RandomBatch {
        count: 200,
        seed: SEED,
    }));
    let s = corpus::audit_cases(&cases, &DEFAULT_GAMMAS, SEED)?;
    let secs = t.elapsed().as_secs_f64();
    let checks: usize = s
        .instances
        .iter()
        .map(|r| r.invariants.len() + r.edges.len())
        .sum();
    let mut detail = format!(
        "{n_builtin} built-in + 200 random instances, {checks} checks, {} violations, {secs:.1}s",
        s.total_violations
    );
    if let Some(r) = s.instances.iter().find(|r| r.violations > 0) {
        detail.push_str(&format!("; first offender {}", r.instance));
    }
    outcome(s.total_violations == 0 && secs < 60.0, detail)
}

fn c6_oracle() -> Result<Outcome> {
    let mut compared = 0;
    let mut bad = Vec::new();
    for i in 0..100 {
        let mut p = random_sampled_instance(SEED, i, corpus::RANDOM_MAX_POINTS);
        let MapVariant::Sampled { samples } = &p.map.variant else {
            unreachable!()
        };
        let d = sample_diameter(samples, &p.map.spaces.x, &p.map.spaces.y);
        p.sampling.window = Some(d.max(p.sampling.radius));
        let m = primal_mismatches(&p)?;
        compared += 1;
        if !m.is_empty() {
            bad.push(format!("{}: {}", p.name.clone().unwrap_or_default(), m[0]));
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{compared} instances, {} with mismatches{}",
            bad.len(),
            bad.first().map(|b| format!("; {b}")).unwrap_or_default()
        ),
    )
}

fn c7_coderivative() -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [cos_example(401)?, identity_map()?] {
        let ev = Evaluation::new(&p)?;
        let d = ev
            .get(QuantityKey::Dual(Family::Phi, SubdiffVariant::Plain))
            .map_or(f64::NAN, |s| s.value);
        let l = ev
            .get(QuantityKey::Limiting(LimitingKind::Phi))
            .map_or(f64::NAN, |s| s.value);
        ok &= close(d, l, 0.05);
        parts.push(format!(
            "{}: slope={d:.5} limiting={l:.5}",
            p.name.unwrap_or_default()
        ));
    }
    outcome(ok, parts.join(", "))
}

fn c8_convex_bound() -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [abs_epigraph()?, parabola_epigraph(Phi::Power { q: 0.5 })?] {
        let b = convex_necessity_bound(&Evaluation::new(&p)?)?;
        ok &= b.lhs <= b.rhs + 1e-2;
        parts.push(format!(
            "{}: {:.4}*{:.4}={:.4} <= {:.4}",
            p.name.unwrap_or_default(),
            b.vartheta,
            b.modulus,
            b.lhs,
            b.rhs
        ));
    }
    outcome(ok, parts.join(", "))
}

fn c9_convex_chain() -> Result<Outcome> {
    let ev = Evaluation::new(&abs_epigraph()?)?;
    let keys = [
        QuantityKey::Primal(Family::G, StrictVariant::Uniform),
        QuantityKey::Primal(Family::G, StrictVariant::Plain),
        QuantityKey::Primal(Family::G, StrictVariant::Modified),
        QuantityKey::Dual(Family::G, SubdiffVariant::Plain),
        QuantityKey::Dual(Family::G, SubdiffVariant::Modified),
    ];
    let v: Vec<f64> = keys
        .iter()
        .map(|k| ev.get(*k).map_or(f64::NAN, |s| s.value))
        .collect();
    let ok = v.iter().all(|a| v.iter().all(|b| close(*a, *b, 0.05)));
    let shown: Vec<String> = keys
        .iter()
        .zip(&v)
        .map(|(k, x)| format!("{k}={x:.5}"))
        .collect();
    outcome(ok, shown.join(" "))
}

fn c10_determinism() -> Result<Outcome> {
    let dir = tempfile::tempdir().map_err(|e| subreg::Error::Input(e.to_string()))?;
    let mut outputs = Vec::new();
    for run in 0..2 {
        let path = dir.path().join(format!("audit{run}.json"));
        let args = [
            "subreg",
            "audit",
            "--seed",
            &SEED.to_string(),
            "--out",
            path.to_str().unwrap(),
        ];
        let code = cli::run(args);
        outputs.push((code, std::fs::read(&path).unwrap_or_default()));
    }
    let same = outputs[0] == outputs[1] && !outputs[0].1.is_empty();
    outcome(
        same,
        format!(
            "exit codes {} and {}, {} bytes, identical={same}",
            outputs[0].0,
            outputs[1].0,
            outputs[0].1.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("worked example reproduction", c1_cos_example),
        ("rho-slope formula", c2_rho_slope),
        ("vartheta", c3_vartheta),
        ("hoelder sweep", c4_holder_sweep),
        ("inequality hierarchy", c5_hierarchy),
        ("oracle equivalence", c6_oracle),
        ("coderivative equality", c7_coderivative),
        ("convex necessity bound", c8_convex_bound),
        ("convex equality chain", c9_convex_chain),
        ("determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f().unwrap_or_else(|e| Outcome {
            pass: false,
            detail: format!("error: {e}"),
        });
        let secs = t.elapsed().as_secs_f64();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!(
            "criterion {:>2} {tag} [{secs:6.2}s] {name}: {}",
            i + 1,
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
