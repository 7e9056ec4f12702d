//! TOML experiment configuration and its translation into domain objects.
//!
//! Every scalar-valued key is a string parsed by `ExactScalar`, so configs
//! carry exact quantities ("(sqrt(5)-1)/2", "1/3") rather than floats.

use num_traits::One;
use serde::Deserialize;

use crate::diophantine::{below_sequence, liouville_below, BelowApprox};
use crate::error::{Error, Result};
use crate::exact::{ExactScalar, Rational};
use crate::group::{GroupPoint, GroupSpace, PAdicPoint, SpaceKind};
use crate::target::{BoxUnion, IntervalUnion, PAdicBallUnion, TargetSet, TorusBox};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: SpaceConfig,
    pub target: Option<TargetConfig>,
    pub alpha: Option<AlphaConfig>,
    #[serde(default)]
    pub approx: ApproxConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub group: String,
    pub dim: Option<u32>,
    pub prime: Option<u32>,
    pub depth: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub set: String,
    /// `set = "intervals"`: list of [start, end] endpoint strings.
    pub intervals: Option<Vec<[String; 2]>>,
    /// `set = "boxes"`: list of boxes, each a list of per-axis [start, end].
    pub boxes: Option<Vec<Vec<[String; 2]>>>,
    /// `set = "padic_balls"`: list of [center_value, radius_exponent].
    pub padic_balls: Option<Vec<[u64; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaConfig {
    /// Explicit exact step: one coordinate string per torus axis, or a
    /// p-adic integer value.
    pub value: Option<String>,
    pub values: Option<Vec<String>>,
    pub padic_value: Option<u64>,
    /// Alternative to an explicit value: draw this many uniform steps (the
    /// master seed becomes mandatory).
    pub samples: Option<u32>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ApproxConfig {
    /// Approximation order k ≥ 2.
    pub k: Option<u32>,
    /// "convergents" (default for irrational measure), "rational" (default
    /// for rational measure), "liouville", or "explicit".
    pub source: Option<String>,
    /// Below-sequence length for the convergents source.
    pub count: Option<usize>,
    /// Liouville construction: γ = Σ base^(−k^j), j < levels.
    pub base: Option<u32>,
    pub levels: Option<u32>,
    /// Explicit entries [[p, q], …] with a certificate constant c2.
    pub entries: Option<Vec<[String; 2]>>,
    pub c2: Option<String>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Schedule depth (number of stages) for the irrational branch.
    pub depth: Option<usize>,
    /// Explicit horizons: heavy-scan stages and the rational-branch schedule.
    pub horizons: Option<Vec<u64>>,
    /// Grid resolution R.
    pub resolution: Option<u64>,
    /// Largest horizon any stage may use.
    pub max_n: Option<u64>,
    /// Pass margin over the theoretical bound (default 0.25).
    pub slack: Option<f64>,
    /// Dump per-grid-point verdicts from heavy-scan.
    pub dump_verdicts: Option<bool>,
    /// ε grid for the regularity command.
    pub eps_grid: Option<Vec<String>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Monte-Carlo sample count for the statistical checks.
    pub samples: Option<u64>,
    /// Number of index pairs for the orthogonality check.
    pub pairs: Option<usize>,
    /// Horizons for the partial-sum maximum bound.
    pub loeve_horizons: Option<Vec<u64>>,
    /// Points sampled for trace-level checks (discreteness, transfer).
    pub trace_points: Option<u64>,
}

pub fn load(path: &std::path::Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn scalar(s: &str, what: &str) -> Result<ExactScalar> {
    s.parse::<ExactScalar>()
        .map_err(|e| Error::Config(format!("{what} {s:?}: {e}")))
}

impl ExperimentConfig {
    pub fn space(&self) -> Result<GroupSpace> {
        match self.space.group.as_str() {
            "torus" => {
                let dim = self.space.dim.unwrap_or(1);
                if self.space.prime.is_some() || self.space.depth.is_some() {
                    return Err(Error::Config(
                        "prime/depth only apply to group = \"padic\"".into(),
                    ));
                }
                GroupSpace::torus(dim)
            }
            "padic" => {
                let prime = self
                    .space
                    .prime
                    .ok_or_else(|| Error::Config("padic space needs a prime".into()))?;
                let depth = self
                    .space
                    .depth
                    .ok_or_else(|| Error::Config("padic space needs a depth".into()))?;
                if self.space.dim.is_some() {
                    return Err(Error::Config("dim only applies to group = \"torus\"".into()));
                }
                GroupSpace::padic(prime, depth)
            }
            other => Err(Error::Config(format!("unknown group {other:?}"))),
        }
    }

    pub fn target(&self, space: &GroupSpace) -> Result<TargetSet> {
        let t = self
            .target
            .as_ref()
            .ok_or_else(|| Error::Config("missing [target] section".into()))?;
        let set = match t.set.as_str() {
            "intervals" => {
                let pairs = t
                    .intervals
                    .as_ref()
                    .ok_or_else(|| Error::Config("intervals key missing".into()))?;
                let endpoints = pairs
                    .iter()
                    .map(|[l, r]| Ok((scalar(l, "interval endpoint")?, scalar(r, "interval endpoint")?)))
                    .collect::<Result<Vec<_>>>()?;
                TargetSet::Intervals(IntervalUnion::from_endpoints(&endpoints)?)
            }
            "boxes" => {
                let boxes = t
                    .boxes
                    .as_ref()
                    .ok_or_else(|| Error::Config("boxes key missing".into()))?;
                let dim = space
                    .torus_dim()
                    .ok_or_else(|| Error::Config("boxes need a torus space".into()))?;
                let mut parsed = Vec::with_capacity(boxes.len());
                for sides in boxes {
                    let endpoints = sides
                        .iter()
                        .map(|[l, r]| Ok((scalar(l, "box endpoint")?, scalar(r, "box endpoint")?)))
                        .collect::<Result<Vec<_>>>()?;
                    parsed.push(TorusBox::from_endpoints(&endpoints)?);
                }
                TargetSet::Boxes(BoxUnion::new(dim, parsed)?)
            }
            "padic_balls" => {
                let balls = t
                    .padic_balls
                    .as_ref()
                    .ok_or_else(|| Error::Config("padic_balls key missing".into()))?;
                let (prime, depth) = match space.kind() {
                    SpaceKind::PAdic { prime, depth } => (*prime, *depth),
                    _ => return Err(Error::Config("padic balls need a padic space".into())),
                };
                let centers = balls
                    .iter()
                    .map(|&[value, exponent]| {
                        let e = u32::try_from(exponent).map_err(|_| {
                            Error::Config(format!("ball exponent {exponent} out of range"))
                        })?;
                        Ok((PAdicPoint::from_value(prime, depth, value), e))
                    })
                    .collect::<Result<Vec<_>>>()?;
                TargetSet::PAdicBalls(PAdicBallUnion::from_centers(prime, &centers)?)
            }
            other => return Err(Error::Config(format!("unknown target kind {other:?}"))),
        };
        set.check_space(space)
            .map_err(|e| Error::Config(format!("target/space mismatch: {e}")))?;
        Ok(set)
    }

    /// The translation steps to run: explicit value(s) or seeded samples.
    /// Every sampled step is flagged for the report if its rationality makes
    /// the schedule degenerate at desk scale.
    pub fn alpha_steps(
        &self,
        space: &GroupSpace,
        seed: Option<u64>,
    ) -> Result<Vec<GroupPoint>> {
        let a = self
            .alpha
            .as_ref()
            .ok_or_else(|| Error::Config("missing [alpha] section".into()))?;
        let explicit = [
            a.value.is_some(),
            a.values.is_some(),
            a.padic_value.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        if explicit > 1 {
            return Err(Error::Config("give at most one of value/values/padic_value".into()));
        }
        if explicit == 1 && a.samples.is_some() {
            return Err(Error::Config("explicit step and samples are mutually exclusive".into()));
        }
        if let Some(v) = &a.value {
            let x = scalar(v, "step")?;
            return match space.kind() {
                SpaceKind::Torus { dim: 1 } => Ok(vec![GroupPoint::torus1(x.mod1())]),
                _ => Err(Error::Config(
                    "a single value needs the circle; use values or padic_value".into(),
                )),
            };
        }
        if let Some(vs) = &a.values {
            let dim = space
                .torus_dim()
                .ok_or_else(|| Error::Config("values needs a torus space".into()))?;
            if vs.len() != dim as usize {
                return Err(Error::Config(format!(
                    "step has {} coordinates, space has {dim}",
                    vs.len()
                )));
            }
            let coords = vs
                .iter()
                .map(|v| Ok(scalar(v, "step coordinate")?.mod1()))
                .collect::<Result<Vec<_>>>()?;
            return Ok(vec![GroupPoint::torus(coords)]);
        }
        if let Some(v) = a.padic_value {
            let (prime, depth) = match space.kind() {
                SpaceKind::PAdic { prime, depth } => (*prime, *depth),
                _ => return Err(Error::Config("padic_value needs a padic space".into())),
            };
            return Ok(vec![GroupPoint::PAdic(PAdicPoint::from_value(prime, depth, v))]);
        }
        let count = a
            .samples
            .ok_or_else(|| Error::Config("alpha needs a value or a sample count".into()))?;
        if count == 0 {
            return Err(Error::Config("alpha sample count must be positive".into()));
        }
        let seed = seed.ok_or_else(|| {
            Error::Config("--seed is mandatory when sampling steps".into())
        })?;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        Ok((0..count).map(|_| space.uniform_point(&mut rng)).collect())
    }

    pub fn order_k(&self) -> Result<u32> {
        let k = self.approx.k.unwrap_or(2);
        if k < 2 {
            return Err(Error::Config("approximation order k must be at least 2".into()));
        }
        Ok(k)
    }

    /// How the below-approximation schedule is sourced for a given measure.
    pub fn approx_source(&self, gamma: &ExactScalar) -> Result<ApproxSource> {
        let k = self.order_k()?;
        let named = self.approx.source.as_deref();
        let source = match named {
            None => {
                if gamma.is_rational() {
                    "rational"
                } else {
                    "convergents"
                }
            }
            Some(s) => s,
        };
        match source {
            "rational" => {
                let level = gamma
                    .as_rational()
                    .ok_or_else(|| {
                        Error::Config("rational branch needs a rational target measure".into())
                    })?
                    .clone();
                Ok(ApproxSource::Rational { level })
            }
            "convergents" => {
                if gamma.is_rational() {
                    return Err(Error::Config(
                        "convergents need an irrational target measure; use source = \"rational\""
                            .into(),
                    ));
                }
                let count = self.approx.count.unwrap_or(6);
                Ok(ApproxSource::Sequence(below_sequence(gamma, count)?))
            }
            "liouville" => {
                let base = self.approx.base.unwrap_or(2);
                let levels = self
                    .approx
                    .levels
                    .ok_or_else(|| Error::Config("liouville source needs levels".into()))?;
                let (value, seq) = liouville_below(k, levels, base)?;
                if value.compare(gamma)? != std::cmp::Ordering::Equal {
                    return Err(Error::Config(
                        "liouville source: target measure must equal the constructed value"
                            .into(),
                    ));
                }
                Ok(ApproxSource::Sequence(seq))
            }
            "explicit" => {
                let entries = self
                    .approx
                    .entries
                    .as_ref()
                    .ok_or_else(|| Error::Config("explicit source needs entries".into()))?;
                let c2 = match &self.approx.c2 {
                    Some(s) => scalar(s, "c2")?
                        .as_rational()
                        .cloned()
                        .ok_or_else(|| Error::Config("c2 must be rational".into()))?,
                    None => Rational::one(),
                };
                let fractions = entries
                    .iter()
                    .map(|[p, q]| {
                        let p = p
                            .parse()
                            .map_err(|e| Error::Config(format!("entry numerator {p:?}: {e}")))?;
                        let q = q
                            .parse()
                            .map_err(|e| Error::Config(format!("entry denominator {q:?}: {e}")))?;
                        Ok((p, q))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ApproxSource::Sequence(BelowApprox::from_entries(
                    gamma.clone(),
                    &fractions,
                    k,
                    c2,
                )?))
            }
            other => Err(Error::Config(format!("unknown approx source {other:?}"))),
        }
    }

    /// Liouville configs may omit [target]: A = [0, γ] by construction.
    pub fn liouville_default_target(&self) -> Result<Option<(ExactScalar, TargetSet)>> {
        if self.target.is_some() || self.approx.source.as_deref() != Some("liouville") {
            return Ok(None);
        }
        let k = self.order_k()?;
        let base = self.approx.base.unwrap_or(2);
        let levels = self
            .approx
            .levels
            .ok_or_else(|| Error::Config("liouville source needs levels".into()))?;
        let (value, _) = liouville_below(k, levels, base)?;
        let union = IntervalUnion::from_endpoints(&[(ExactScalar::zero(), value.clone())])?;
        Ok(Some((value, TargetSet::Intervals(union))))
    }

    pub fn resolution(&self) -> Result<u64> {
        let r = self.run.resolution.unwrap_or(1000);
        if r == 0 {
            return Err(Error::Config("resolution must be positive".into()));
        }
        Ok(r)
    }

    pub fn horizons(&self) -> Result<Vec<u64>> {
        let hs = self
            .run
            .horizons
            .clone()
            .unwrap_or_else(|| vec![10, 100, 1000]);
        if hs.is_empty() {
            return Err(Error::Config("horizons must be nonempty".into()));
        }
        for w in hs.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Config("horizons must strictly increase".into()));
            }
        }
        if hs[0] == 0 {
            return Err(Error::Config("horizons must be positive".into()));
        }
        Ok(hs)
    }

    pub fn slack(&self) -> f64 {
        self.run.slack.unwrap_or(0.25)
    }

    pub fn eps_grid(&self) -> Result<Vec<ExactScalar>> {
        let strings = self
            .run
            .eps_grid
            .clone()
            .unwrap_or_else(|| vec!["1/2".into(), "1/4".into(), "1/8".into(), "1/16".into()]);
        strings.iter().map(|s| scalar(s, "epsilon")).collect()
    }
}

pub enum ApproxSource {
    /// Rational branch: the level is μ(A) itself and horizons come from
    /// configuration.
    Rational { level: Rational },
    /// Irrational branch: a certified below-approximation sequence.
    Sequence(BelowApprox),
}
