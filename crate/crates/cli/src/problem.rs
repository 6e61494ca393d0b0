//! The self-describing problem-file format: a single JSON document carrying
//! the graph, vectors, marked points, times, phase blocks and options.
//! Complex numbers are written as `x` or `[re, im]`; the string `"inf"`
//! marks the part at infinity.

use anyhow::{anyhow, bail, Context, Result};
use isoflow_core::flow::FlowState;
use isoflow_core::linalg::{CMat, C};
use isoflow_core::orbits::JordanData;
use isoflow_core::phase::{FourierConfig, FourierPoint, GradedSpace, PhasePoint, TimeConfig};
use isoflow_core::root::{ParamVector, RootVector};
use isoflow_core::SupernovaGraph;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Cx {
    Real(f64),
    Pair(f64, f64),
}

impl Cx {
    pub fn value(&self) -> C {
        match *self {
            Cx::Real(x) => C::new(x, 0.0),
            Cx::Pair(re, im) => C::new(re, im),
        }
    }

    pub fn of(z: C) -> Self {
        if z.im == 0.0 {
            Cx::Real(z.re)
        } else {
            Cx::Pair(z.re, z.im)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Point {
    Infinity(String),
    Finite(Cx),
}

impl Point {
    pub fn value(&self) -> Result<FourierPoint> {
        match self {
            Point::Infinity(s) if s == "inf" => Ok(FourierPoint::Infinity),
            Point::Infinity(s) => bail!("unknown point literal {s:?} (use \"inf\" or a number)"),
            Point::Finite(x) => Ok(FourierPoint::Finite(x.value())),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSpec {
    pub core_parts: Vec<usize>,
    #[serde(default)]
    pub leg_lengths: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseBlock {
    /// source part index (the block maps W_from → W_to)
    pub from: usize,
    pub to: usize,
    /// row-major entries, dimensions (part dim of `to`) × (part dim of `from`)
    pub matrix: Vec<Vec<Cx>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitSpec {
    /// eigenvalue and its Jordan partition
    pub blocks: Vec<(Cx, Vec<usize>)>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Options {
    pub step: Option<f64>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub depth: Option<usize>,
    pub node: Option<String>,
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub version: u32,
    pub graph: Option<GraphSpec>,
    #[serde(default)]
    pub dims: Option<Vec<i64>>,
    #[serde(default)]
    pub params: Option<Vec<Cx>>,
    #[serde(default)]
    pub fourier: Option<Vec<Point>>,
    #[serde(default)]
    pub times: Option<Vec<Vec<Cx>>>,
    #[serde(default)]
    pub phase_blocks: Option<Vec<PhaseBlock>>,
    #[serde(default)]
    pub path: Option<Vec<Vec<Vec<Cx>>>>,
    #[serde(default)]
    pub orbits: Option<Vec<OrbitSpec>>,
    #[serde(default)]
    pub markings: Option<Vec<Vec<Cx>>>,
    #[serde(default)]
    pub weyl: Option<WeylSpec>,
    #[serde(default)]
    pub options: Options,
}

/// An explicit pencil (α, β, γ) for the spectral command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeylSpec {
    pub alpha: Vec<Vec<Cx>>,
    pub beta: Vec<Vec<Cx>>,
    pub gamma: Vec<Vec<Cx>>,
}

pub fn load(path: &std::path::Path) -> Result<ProblemFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read problem file {}", path.display()))?;
    let file: ProblemFile = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse problem file {}", path.display()))?;
    if file.version != 1 {
        bail!("unsupported problem-file version {}", file.version);
    }
    Ok(file)
}

impl ProblemFile {
    pub fn graph(&self) -> Result<SupernovaGraph> {
        let spec = self
            .graph
            .as_ref()
            .ok_or_else(|| anyhow!("problem file has no graph block"))?;
        let core_count: usize = spec.core_parts.iter().sum();
        let legs = spec
            .leg_lengths
            .clone()
            .unwrap_or_else(|| vec![0; core_count]);
        Ok(SupernovaGraph::build(&spec.core_parts, &legs)?)
    }

    pub fn dims(&self, graph: &SupernovaGraph) -> Result<RootVector> {
        let dims = self
            .dims
            .as_ref()
            .ok_or_else(|| anyhow!("problem file has no dims vector"))?;
        if dims.len() != graph.node_count() {
            bail!(
                "dims has {} entries, graph has {} nodes",
                dims.len(),
                graph.node_count()
            );
        }
        Ok(RootVector(dims.clone()))
    }

    pub fn params(&self, graph: &SupernovaGraph) -> Result<ParamVector> {
        let params = self
            .params
            .as_ref()
            .ok_or_else(|| anyhow!("problem file has no params vector"))?;
        if params.len() != graph.node_count() {
            bail!(
                "params has {} entries, graph has {} nodes",
                params.len(),
                graph.node_count()
            );
        }
        let lam = ParamVector(params.iter().map(Cx::value).collect());
        if let Some(dims) = &self.dims {
            let pairing: C = lam
                .0
                .iter()
                .zip(dims)
                .map(|(l, &d)| l * C::new(d as f64, 0.0))
                .sum();
            let scale = lam.0.iter().map(|z| z.norm()).fold(1.0, f64::max);
            if pairing.norm() > 1e-10 * scale {
                bail!(
                    "params and dims violate the moment condition: λ·d = {pairing} (tolerance 1e-10)"
                );
            }
        }
        Ok(lam)
    }

    /// Build phase-space data: graded space over the core nodes (dims from
    /// the `dims` vector), marked points, times and Γ blocks.
    pub fn flow_state(&self) -> Result<FlowState> {
        let graph = self.graph()?;
        let dims = self.dims(&graph)?;
        let points: Vec<FourierPoint> = self
            .fourier
            .as_ref()
            .ok_or_else(|| anyhow!("problem file has no fourier points"))?
            .iter()
            .map(Point::value)
            .collect::<Result<_>>()?;
        if points.len() != graph.part_count() {
            bail!(
                "fourier lists {} points, core has {} parts",
                points.len(),
                graph.part_count()
            );
        }
        let node_dims: Vec<Vec<usize>> = (0..graph.part_count())
            .map(|j| {
                graph
                    .part_nodes(j)
                    .iter()
                    .map(|&i| {
                        let d = dims.0[i];
                        if d < 0 {
                            bail!("negative dimension at core node {i}");
                        }
                        Ok(d as usize)
                    })
                    .collect::<Result<Vec<usize>>>()
            })
            .collect::<Result<_>>()?;
        let space = GradedSpace::new(node_dims);
        let fourier = FourierConfig::new(points)?;
        let times_raw = self
            .times
            .as_ref()
            .ok_or_else(|| anyhow!("problem file has no times"))?;
        if times_raw.len() != graph.part_count() {
            bail!("times lists {} parts, core has {}", times_raw.len(), graph.part_count());
        }
        let times = TimeConfig::new(
            times_raw
                .iter()
                .map(|part| part.iter().map(Cx::value).collect())
                .collect(),
        )?;
        for (j, part) in times.values().iter().enumerate() {
            if part.len() != space.node_dims()[j].len() {
                bail!(
                    "part {j} has {} times but {} nodes",
                    part.len(),
                    space.node_dims()[j].len()
                );
            }
        }
        let mut m = CMat::zeros(space.dim(), space.dim());
        for block in self.phase_blocks.iter().flatten() {
            if block.from >= graph.part_count() || block.to >= graph.part_count() {
                bail!("phase block references part {} or {}, out of range", block.from, block.to);
            }
            if block.from == block.to {
                bail!("phase blocks must connect two different parts");
            }
            let rt = space.part_range(block.to);
            let rf = space.part_range(block.from);
            if block.matrix.len() != rt.len() {
                bail!(
                    "block {}→{} has {} rows, expected {}",
                    block.from,
                    block.to,
                    block.matrix.len(),
                    rt.len()
                );
            }
            for (r, row) in block.matrix.iter().enumerate() {
                if row.len() != rf.len() {
                    bail!(
                        "block {}→{} row {r} has {} entries, expected {}",
                        block.from,
                        block.to,
                        row.len(),
                        rf.len()
                    );
                }
                for (cidx, v) in row.iter().enumerate() {
                    m[(rt.start + r, rf.start + cidx)] = v.value();
                }
            }
        }
        let phase = PhasePoint::new(&space, m)?;
        Ok(FlowState::new(fourier, space, phase, times))
    }

    pub fn path(&self) -> Result<Vec<Vec<Vec<C>>>> {
        Ok(self
            .path
            .as_ref()
            .ok_or_else(|| anyhow!("problem file has no path"))?
            .iter()
            .map(|waypoint| {
                waypoint
                    .iter()
                    .map(|part| part.iter().map(Cx::value).collect())
                    .collect()
            })
            .collect())
    }

    pub fn orbit_data(&self) -> Result<Vec<JordanData>> {
        self.orbits
            .iter()
            .flatten()
            .map(|spec| {
                JordanData::new(
                    spec.blocks
                        .iter()
                        .map(|(v, parts)| (v.value(), parts.clone()))
                        .collect(),
                )
                .map_err(|e| anyhow!("bad orbit: {e}"))
            })
            .collect()
    }

    pub fn pencil(&self) -> Result<Option<(CMat, CMat, CMat)>> {
        let Some(w) = &self.weyl else {
            return Ok(None);
        };
        let to_mat = |rows: &Vec<Vec<Cx>>| -> Result<CMat> {
            let n = rows.len();
            let mut m = CMat::zeros(n, rows.first().map_or(0, Vec::len));
            for (r, row) in rows.iter().enumerate() {
                if row.len() != m.ncols() {
                    bail!("ragged matrix in weyl block");
                }
                for (c, v) in row.iter().enumerate() {
                    m[(r, c)] = v.value();
                }
            }
            Ok(m)
        };
        Ok(Some((to_mat(&w.alpha)?, to_mat(&w.beta)?, to_mat(&w.gamma)?)))
    }

    /// Node index from a canonical name like `core:0:1` or `leg:2:1`.
    pub fn node_index(&self, graph: &SupernovaGraph, name: &str) -> Result<usize> {
        Ok(graph.graph().node_index(name)?)
    }
}

/// Canonical serialization: parse → serialize → parse is the identity on
/// files produced by this function.
pub fn to_canonical_json(file: &ProblemFile) -> Result<String> {
    Ok(serde_json::to_string_pretty(file)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip() {
        let text = std::fs::read_to_string(
            std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/schlesinger.json"),
        )
        .unwrap();
        let parsed: ProblemFile = serde_json::from_str(&text).unwrap();
        let canonical = to_canonical_json(&parsed).unwrap();
        let reparsed: ProblemFile = serde_json::from_str(&canonical).unwrap();
        let again = to_canonical_json(&reparsed).unwrap();
        assert_eq!(canonical, again);
        // and the semantic content survives
        let s1 = parsed.flow_state().unwrap();
        let s2 = reparsed.flow_state().unwrap();
        assert_eq!(s1.gamma(), s2.gamma());
        assert_eq!(s1.times.values(), s2.times.values());
    }

    #[test]
    fn rejects_bad_moment_condition() {
        let text = r#"{
            "version": 1,
            "graph": { "core_parts": [1, 1] },
            "dims": [1, 1],
            "params": [1.0, 2.0]
        }"#;
        let parsed: ProblemFile = serde_json::from_str(text).unwrap();
        let graph = parsed.graph().unwrap();
        assert!(parsed.params(&graph).is_err());
    }

    #[test]
    fn rejects_wrong_version() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v2.json");
        std::fs::write(&path, r#"{"version": 2}"#).unwrap();
        assert!(load(&path).is_err());
    }
}
