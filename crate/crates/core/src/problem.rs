//! Problem specification: the mapping, φ, sampling configuration and declared hypotheses,
//! with the versioned JSON representation.

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::mappings::{g_from_phi, Gauge, MapVariant, Phi, SetValuedMap};
use crate::spaces::{ProductPoint, ProductSpace};

pub const SCHEMA_VERSION: u32 = 1;

/// Geometric ρ-schedule ρ_k = ρ₀·factor^k, k = 0..steps−1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoSchedule {
    pub rho0: f64,
    pub factor: f64,
    pub steps: usize,
}

impl Default for RhoSchedule {
    fn default() -> Self {
        RhoSchedule {
            rho0: 1.0,
            factor: 0.5,
            steps: 8,
        }
    }
}

impl RhoSchedule {
    pub fn new(rho0: f64, factor: f64, steps: usize) -> Result<Self> {
        let s = RhoSchedule {
            rho0,
            factor,
            steps,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho0 > 0.0 && self.rho0.is_finite()) {
            return input("rho0 must be positive and finite");
        }
        if !(self.factor > 0.0 && self.factor < 1.0) {
            return input("rho factor must lie in (0,1)");
        }
        if self.steps == 0 {
            return input("rho schedule needs at least one step");
        }
        Ok(())
    }

    pub fn rhos(&self) -> Vec<f64> {
        (0..self.steps)
            .map(|k| self.rho0 * self.factor.powi(k as i32))
            .collect()
    }

    pub fn last(&self) -> f64 {
        self.rho0 * self.factor.powi(self.steps as i32 - 1)
    }
}

/// Sampling parameters shared by every estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Sampling {
    /// d₁-radius of the global sample around (x̄,ȳ).
    pub radius: f64,
    pub resolution: usize,
    pub rho_schedule: RhoSchedule,
    /// Search window for d(x, F⁻¹(ȳ)); None means ‖x − x̄‖·10 + 1.
    pub window: Option<f64>,
    /// Outer radius of the nested local samples; None means the global grid spacing
    /// (the sample radius for finite graphs).
    pub local_radius: Option<f64>,
    pub local_points: usize,
    pub levels: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            radius: 1.0,
            resolution: 201,
            rho_schedule: RhoSchedule::default(),
            window: None,
            local_radius: None,
            local_points: 10,
            levels: 6,
        }
    }
}

impl Sampling {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius >= 0.0 && self.radius.is_finite()) {
            return input("sampling radius must be finite and nonnegative");
        }
        if self.resolution < 3 {
            return input("resolution must be at least 3");
        }
        if self.local_points == 0 {
            return input("local_points must be positive");
        }
        if let Some(w) = self.window {
            if !(w > 0.0) {
                return input("window must be positive");
            }
        }
        if let Some(r) = self.local_radius {
            if !(r > 0.0) {
                return input("local_radius must be positive");
            }
        }
        self.rho_schedule.validate()
    }

    pub fn local_r0(&self, map: &SetValuedMap) -> f64 {
        self.local_radius.unwrap_or(if map.is_sampled() {
            self.radius
        } else {
            2.0 * self.radius / (self.resolution - 1) as f64
        })
    }

    /// Nested level count; finite graphs have a single level.
    pub fn level_count(&self, map: &SetValuedMap) -> usize {
        if map.is_sampled() {
            1
        } else {
            self.levels + 1
        }
    }
}

/// User-declared structural hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Hypotheses {
    pub convex: bool,
    pub closed_graph: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub spaces: ProductSpace,
    pub mapping: MapVariant,
    pub reference_point: ProductPoint,
    #[serde(default = "Phi::identity")]
    pub phi: Phi,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub hypotheses: Hypotheses,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

/// Validated problem instance.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: Option<String>,
    pub map: SetValuedMap,
    pub phi: Phi,
    pub sampling: Sampling,
    pub hypotheses: Hypotheses,
}

impl Problem {
    pub fn new(
        map: SetValuedMap,
        phi: Phi,
        sampling: Sampling,
        hypotheses: Hypotheses,
    ) -> Result<Self> {
        phi.validate()?;
        sampling.validate()?;
        Ok(Problem {
            name: None,
            map,
            phi,
            sampling,
            hypotheses,
        })
    }

    pub fn from_spec(spec: ProblemSpec) -> Result<Self> {
        if spec.schema_version != SCHEMA_VERSION {
            return input(format!(
                "unsupported schema_version {}",
                spec.schema_version
            ));
        }
        let map = SetValuedMap::new(spec.spaces, spec.mapping, spec.reference_point)?;
        let mut p = Problem::new(map, spec.phi, spec.sampling, spec.hypotheses)?;
        p.name = spec.name;
        Ok(p)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ProblemSpec =
            serde_json::from_str(text).map_err(|e| Error::Input(e.to_string()))?;
        Problem::from_spec(spec)
    }

    pub fn to_spec(&self) -> ProblemSpec {
        ProblemSpec {
            schema_version: SCHEMA_VERSION,
            name: self.name.clone(),
            spaces: self.map.spaces,
            mapping: self.map.variant.clone(),
            reference_point: self.map.reference.clone(),
            phi: self.phi.clone(),
            sampling: self.sampling,
            hypotheses: self.hypotheses,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.to_spec()).map_err(|e| Error::Input(e.to_string()))
    }

    pub fn with_phi(&self, phi: Phi) -> Result<Self> {
        phi.validate()?;
        Ok(Problem {
            phi,
            ..self.clone()
        })
    }

    pub fn with_sampling(&self, sampling: Sampling) -> Result<Self> {
        sampling.validate()?;
        Ok(Problem {
            sampling,
            ..self.clone()
        })
    }

    pub fn gauge(&self) -> Gauge {
        g_from_phi(self.phi.clone(), self.map.ybar(), self.map.spaces.y)
    }

    pub fn schedule(&self) -> RhoSchedule {
        self.sampling.rho_schedule
    }
}
