use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupName {
    U1,
    Su2,
    So3,
    /// SO(n), n ≥ 2.
    So(usize),
}

impl GroupName {
    pub fn algebra_dim(&self) -> usize {
        match self {
            GroupName::U1 => 1,
            GroupName::Su2 | GroupName::So3 => 3,
            GroupName::So(n) => n * n.saturating_sub(1) / 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ActionConfig {
    Trivial,
    /// Plane rotations `(x₂ₖ, x₂ₖ₊₁)` by `wₖ θ`; one-dimensional groups only.
    Linear { weights: Vec<i32> },
    Adjoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticTerm {
    pub i: usize,
    pub j: usize,
    pub coeffs: Vec<f64>,
}

/// `c(x) = exp(Σ xᵢ Aᵢ + Σ xᵢxⱼ Aᵢⱼ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistConfig {
    pub linear: Vec<Vec<f64>>,
    #[serde(default)]
    pub quadratic: Vec<QuadraticTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModeConfig {
    Nested,
    Grid { degree: usize, base_points: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub group_nodes: usize,
    pub base_points: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AxiomConfig {
    pub samples: usize,
    pub tol: f64,
    /// Extra right factor `exp(v)` injected into the product.
    pub mutation: Option<Vec<f64>>,
}

impl Default for AxiomConfig {
    fn default() -> Self {
        AxiomConfig {
            samples: 200,
            tol: 1e-9,
            mutation: None,
        }
    }
}

/// Lemma construction from the reference densities
/// `1 + a·Re g₀₀ + b·Im g₀₁ + c·|x|²/ρ²` (μ₀) and the same with `a, b` swapped
/// and negated (ν₀).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HaarConfig {
    pub resolution: usize,
    pub samples: usize,
    pub density: [f64; 3],
    pub mass_tol: f64,
    pub invariance_tol: f64,
    pub tv_tol: f64,
}

impl Default for HaarConfig {
    fn default() -> Self {
        HaarConfig {
            resolution: 16,
            samples: 8,
            density: [0.3, 0.2, 0.5],
            mass_tol: 1e-9,
            invariance_tol: 1e-6,
            tv_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearizeConfig {
    pub enabled: bool,
    pub quadrature_resolution: usize,
    /// Radius of the sphere for the conjugacy and halving tests.
    pub radius: f64,
    pub samples: usize,
    pub axiom_tol: f64,
    pub representation_tol: f64,
    pub halving_target: f64,
    pub halving_band: f64,
}

impl Default for LinearizeConfig {
    fn default() -> Self {
        LinearizeConfig {
            enabled: false,
            quadrature_resolution: 8,
            radius: 0.04,
            samples: 32,
            axiom_tol: 1e-6,
            representation_tol: 1e-6,
            halving_target: 4.0,
            halving_band: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub name: String,
    pub group: GroupName,
    pub base_dim: usize,
    pub radius: f64,
    pub action: ActionConfig,
    /// Quadratic forms `Qᵢ` of the conjugating map `x ↦ x + Σ eᵢ xᵀQᵢx`.
    pub conjugation: Option<Vec<Vec<Vec<f64>>>>,
    pub twist: Option<TwistConfig>,
    pub epsilon: f64,
    /// Perturbation scales for `convergence-study`.
    pub epsilons: Vec<f64>,
    pub seed: u64,
    pub quadrature_resolution: usize,
    pub mode: ModeConfig,
    pub pairs: PairConfig,
    pub tol: f64,
    pub max_iter: usize,
    pub admissibility: f64,
    pub output: String,
    pub axioms: AxiomConfig,
    pub haar: HaarConfig,
    pub linearize: LinearizeConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "scenario".into(),
            group: GroupName::Su2,
            base_dim: 2,
            radius: 0.2,
            action: ActionConfig::Trivial,
            conjugation: None,
            twist: None,
            epsilon: 1e-2,
            epsilons: vec![3e-2, 1e-2, 3e-3],
            seed: 11,
            quadrature_resolution: 10,
            mode: ModeConfig::Grid {
                degree: 6,
                base_points: 3,
            },
            pairs: PairConfig {
                group_nodes: 24,
                base_points: 3,
                seed: 7,
            },
            tol: 1e-9,
            max_iter: 12,
            admissibility: 0.1,
            output: "out".into(),
            axioms: AxiomConfig::default(),
            haar: HaarConfig::default(),
            linearize: LinearizeConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Pretty JSON with every field explicit.
    pub fn emit(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = self.group.algebra_dim();
        if let GroupName::So(k) = self.group {
            if k < 2 {
                return Err(invalid(format!("SO(n) needs n >= 2, got {k}")));
            }
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(invalid(format!("radius must be positive, got {}", self.radius)));
        }
        for &e in std::iter::once(&self.epsilon).chain(&self.epsilons) {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(invalid(format!("epsilon must be >= 0, got {e}")));
            }
        }
        if !(self.tol > 0.0) {
            return Err(invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.admissibility > 0.0) {
            return Err(invalid(format!("admissibility must be positive, got {}", self.admissibility)));
        }
        if self.quadrature_resolution < 2 || self.haar.resolution < 2 || self.linearize.quadrature_resolution < 2 {
            return Err(invalid("quadrature resolutions must be >= 2"));
        }
        if self.pairs.group_nodes < 2 {
            return Err(invalid("pairs.group_nodes must be >= 2"));
        }
        if self.pairs.base_points == 0 || (self.base_dim > 0 && self.pairs.base_points < 2) {
            return Err(invalid("pairs.base_points must be >= 2 on a nontrivial base"));
        }
        if let ModeConfig::Grid { degree, base_points } = self.mode {
            if degree < 1 {
                return Err(invalid("grid degree must be >= 1"));
            }
            if base_points.is_multiple_of(2) || (self.base_dim > 0 && base_points < 3) {
                return Err(invalid(format!(
                    "grid base_points must be odd and >= 3 on a nontrivial base, got {base_points}"
                )));
            }
        }
        if self.axioms.samples == 0 || self.haar.samples == 0 || self.linearize.samples == 0 {
            return Err(invalid("sample counts must be >= 1"));
        }
        match &self.action {
            ActionConfig::Trivial => {}
            ActionConfig::Linear { weights } => {
                if n != 1 {
                    return Err(invalid("linear action needs a one-dimensional group"));
                }
                if weights.len() != self.base_dim / 2 {
                    return Err(invalid(format!(
                        "linear action on R^{} needs {} weights, got {}",
                        self.base_dim,
                        self.base_dim / 2,
                        weights.len()
                    )));
                }
            }
            ActionConfig::Adjoint => {
                if self.base_dim != n {
                    return Err(invalid(format!("adjoint action needs base_dim = {n}, got {}", self.base_dim)));
                }
            }
        }
        if let Some(forms) = &self.conjugation {
            if forms.len() != self.base_dim
                || forms.iter().any(|q| q.len() != self.base_dim || q.iter().any(|r| r.len() != self.base_dim))
            {
                return Err(invalid(format!(
                    "conjugation needs {0} quadratic forms of size {0}x{0}",
                    self.base_dim
                )));
            }
        }
        if let Some(t) = &self.twist {
            if t.linear.len() != self.base_dim || t.linear.iter().any(|v| v.len() != n) {
                return Err(invalid(format!(
                    "twist.linear needs {} algebra vectors of length {n}",
                    self.base_dim
                )));
            }
            if t.quadratic.iter().any(|q| q.i >= self.base_dim || q.j >= self.base_dim || q.coeffs.len() != n) {
                return Err(invalid("twist.quadratic term out of range"));
            }
        }
        if let Some(m) = &self.axioms.mutation {
            if m.len() != n {
                return Err(invalid(format!("axioms.mutation needs {n} coefficients")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_fields() {
        let cfg = ScenarioConfig::parse(r#"{"epsilon": 0.03}"#).unwrap();
        assert_eq!(cfg.epsilon, 0.03);
        assert_eq!(cfg.pairs, ScenarioConfig::default().pairs);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ScenarioConfig::parse(r#"{"epsilonn": 0.03}"#).is_err());
        assert!(ScenarioConfig::parse(r#"{"mode": {"kind": "grid", "degree": 2, "base_points": 3, "x": 1}}"#).is_err());
    }

    #[test]
    fn invariants_are_enforced() {
        for bad in [
            r#"{"radius": 0.0}"#,
            r#"{"epsilon": -1.0}"#,
            r#"{"tol": 0.0}"#,
            r#"{"quadrature_resolution": 1}"#,
            r#"{"action": {"kind": "adjoint"}}"#,
            r#"{"mode": {"kind": "grid", "degree": 2, "base_points": 4}}"#,
        ] {
            assert!(ScenarioConfig::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn echo_round_trips() {
        let cfg = ScenarioConfig {
            group: GroupName::So(4),
            base_dim: 0,
            twist: None,
            conjugation: None,
            epsilon: 0.1 + 0.2,
            ..Default::default()
        };
        assert_eq!(ScenarioConfig::parse(&cfg.emit()).unwrap(), cfg);
        let u1 = ScenarioConfig {
            group: GroupName::U1,
            action: ActionConfig::Linear { weights: vec![1] },
            twist: Some(TwistConfig {
                linear: vec![vec![0.3], vec![0.0]],
                quadratic: vec![QuadraticTerm { i: 0, j: 1, coeffs: vec![-0.25] }],
            }),
            conjugation: Some(vec![vec![vec![0.8, 0.3], vec![0.3, -0.5]], vec![vec![-0.4, 0.6], vec![0.6, 0.7]]]),
            mode: ModeConfig::Nested,
            ..Default::default()
        };
        assert_eq!(ScenarioConfig::parse(&u1.emit()).unwrap(), u1);
    }
}
