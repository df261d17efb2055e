//! Discretized domains: an ambient finite metric space split into interior
//! samples and boundary samples, plus the JSON file format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{Ambient, DistanceMatrix, Distances, FiniteMetricSpace};

pub const DEFAULT_BETA: f64 = 0.5;
pub const DEFAULT_K: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshParams {
    pub beta: f64,
    pub k: usize,
}

impl Default for MeshParams {
    fn default() -> Self {
        Self {
            beta: DEFAULT_BETA,
            k: DEFAULT_K,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Interior(usize),
    Boundary,
    Unused,
}

#[derive(Debug, Clone)]
pub struct DomainSpace {
    ambient: FiniteMetricSpace,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    roles: Vec<Role>,
    /// Indexed like `interior`.
    boundary_distance: Vec<f64>,
    mesh: MeshParams,
}

impl DomainSpace {
    pub fn new(
        ambient: FiniteMetricSpace,
        interior: Vec<usize>,
        boundary: Vec<usize>,
        mesh: MeshParams,
    ) -> Result<Self> {
        let n = ambient.len();
        if boundary.is_empty() {
            return Err(Error::InvalidDomain("boundary sample set is empty".into()));
        }
        let mut roles = vec![Role::Unused; n];
        for &b in &boundary {
            if b >= n {
                return Err(Error::UnknownPoint(b));
            }
            if roles[b] != Role::Unused {
                return Err(Error::InvalidDomain(format!("boundary point {b} listed twice")));
            }
            roles[b] = Role::Boundary;
        }
        for (local, &x) in interior.iter().enumerate() {
            if x >= n {
                return Err(Error::UnknownPoint(x));
            }
            match roles[x] {
                Role::Boundary => {
                    return Err(Error::InvalidDomain(format!(
                        "point {x} is both interior and boundary"
                    )))
                }
                Role::Interior(_) => {
                    return Err(Error::InvalidDomain(format!("interior point {x} listed twice")))
                }
                Role::Unused => roles[x] = Role::Interior(local),
            }
        }
        let boundary_distance: Vec<f64> = interior
            .iter()
            .map(|&x| {
                boundary
                    .iter()
                    .map(|&b| ambient.dist(x, b))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        if let Some(pos) = boundary_distance.iter().position(|&d| d <= 0.0) {
            return Err(Error::InvalidDomain(format!(
                "interior point {} has zero distance to the boundary",
                interior[pos]
            )));
        }
        Ok(Self {
            ambient,
            interior,
            boundary,
            roles,
            boundary_distance,
            mesh,
        })
    }

    pub fn ambient(&self) -> &FiniteMetricSpace {
        &self.ambient
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn mesh_params(&self) -> MeshParams {
        self.mesh
    }

    pub fn with_mesh_params(mut self, mesh: MeshParams) -> Self {
        self.mesh = mesh;
        self
    }

    pub fn dist(&self, x: usize, y: usize) -> f64 {
        self.ambient.dist(x, y)
    }

    /// Position of `x` in the interior list.
    pub fn interior_index(&self, x: usize) -> Result<usize> {
        match self.roles.get(x) {
            Some(Role::Interior(i)) => Ok(*i),
            Some(_) => Err(Error::NotInterior(x)),
            None => Err(Error::UnknownPoint(x)),
        }
    }

    pub fn is_interior(&self, x: usize) -> bool {
        matches!(self.roles.get(x), Some(Role::Interior(_)))
    }

    /// `d(x) = d(x, boundary)`, the minimum over the boundary samples.
    pub fn boundary_distance(&self, x: usize) -> Result<f64> {
        Ok(self.boundary_distance[self.interior_index(x)?])
    }

    /// Boundary distances in interior order.
    pub fn boundary_distances(&self) -> &[f64] {
        &self.boundary_distance
    }

    /// Interior point closest to the given coordinates (ties by id).
    pub fn nearest_interior(&self, coords: &[f64]) -> Result<usize> {
        let dim = self
            .ambient
            .dim()
            .ok_or_else(|| Error::InvalidParameter("matrix spaces have no coordinates".into()))?;
        if coords.len() != dim {
            return Err(Error::InvalidParameter(format!(
                "expected {dim} coordinates, got {}",
                coords.len()
            )));
        }
        let sq = |p: &[f64]| p.iter().zip(coords).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        self.interior
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let (pa, pb) = (self.ambient.point(a).unwrap(), self.ambient.point(b).unwrap());
                sq(pa).total_cmp(&sq(pb)).then(a.cmp(&b))
            })
            .ok_or_else(|| Error::InvalidDomain("domain has no interior points".into()))
    }

    pub fn to_file(&self) -> DomainFile {
        let (kind, epsilon, matrix, arclength) = match self.ambient.ambient() {
            Some(Ambient::Euclidean) => (AmbientKind::Euclidean, None, None, None),
            Some(Ambient::Snowflake(e)) => (AmbientKind::Snowflake, Some(*e), None, None),
            Some(Ambient::CurveArclength(s)) => (AmbientKind::Curve, None, None, Some(s.clone())),
            None => (
                AmbientKind::Matrix,
                None,
                self.ambient.matrix().map(DistanceMatrix::to_rows),
                None,
            ),
        };
        DomainFile {
            ambient: AmbientSpec {
                kind,
                epsilon,
                matrix,
                arclength,
            },
            points: self.ambient.points(),
            interior: self.interior.clone(),
            boundary: self.boundary.clone(),
            mesh: self.mesh,
        }
    }

    pub fn from_file(file: DomainFile) -> Result<Self> {
        let ambient = file.ambient.build(file.points.as_deref())?;
        Self::new(ambient, file.interior, file.boundary, file.mesh)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("domain serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_file(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmbientKind {
    Euclidean,
    Snowflake,
    Matrix,
    Curve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbientSpec {
    pub kind: AmbientKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Curve parameters; defaults to cumulative polyline length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arclength: Option<Vec<f64>>,
}

impl AmbientSpec {
    pub fn build(&self, points: Option<&[Vec<f64>]>) -> Result<FiniteMetricSpace> {
        let need_points = || {
            points.ok_or_else(|| {
                Error::InvalidDomain(format!("ambient kind {:?} needs coordinates", self.kind))
            })
        };
        match self.kind {
            AmbientKind::Euclidean => FiniteMetricSpace::euclidean(need_points()?),
            AmbientKind::Snowflake => {
                let eps = self.epsilon.ok_or_else(|| {
                    Error::InvalidDomain("snowflake ambient needs \"epsilon\"".into())
                })?;
                FiniteMetricSpace::snowflake(need_points()?, eps)
            }
            AmbientKind::Curve => FiniteMetricSpace::curve(need_points()?, self.arclength.clone()),
            AmbientKind::Matrix => {
                let rows = self
                    .matrix
                    .as_ref()
                    .ok_or_else(|| Error::InvalidDomain("matrix ambient needs \"matrix\"".into()))?;
                FiniteMetricSpace::from_rows(rows)
            }
        }
    }
}

/// On-disk domain description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainFile {
    pub ambient: AmbientSpec,
    pub points: Option<Vec<Vec<f64>>>,
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
    #[serde(default)]
    pub mesh: MeshParams,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halfline() -> DomainSpace {
        let pts: Vec<Vec<f64>> = [0.0, 1.0, 2.0, 3.0].iter().map(|&x| vec![x]).collect();
        DomainSpace::new(
            FiniteMetricSpace::euclidean(&pts).unwrap(),
            vec![1, 2, 3],
            vec![0],
            MeshParams::default(),
        )
        .unwrap()
    }

    #[test]
    fn boundary_distance_on_the_halfline() {
        let dom = halfline();
        assert_eq!(dom.boundary_distance(2).unwrap(), 2.0);
        assert!(matches!(dom.boundary_distance(0), Err(Error::NotInterior(0))));
        assert!(matches!(dom.boundary_distance(9), Err(Error::UnknownPoint(9))));
    }

    #[test]
    fn unit_disk_boundary_distance() {
        let mut pts: Vec<Vec<f64>> = (0..720)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / 720.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        pts.push(vec![0.5, 0.0]);
        pts.push(vec![0.3, 0.4]);
        let dom = DomainSpace::new(
            FiniteMetricSpace::euclidean(&pts).unwrap(),
            vec![720, 721],
            (0..720).collect(),
            MeshParams::default(),
        )
        .unwrap();
        let err_bound = 2.0 * (std::f64::consts::PI / 720.0).sin();
        for id in [720, 721] {
            let d = dom.boundary_distance(id).unwrap();
            assert!(d >= 0.5 - 1e-12 && d <= 0.5 + err_bound);
        }
        assert!((dom.boundary_distance(720).unwrap() - 0.5).abs() < 1e-4);
    }

    #[test]
    fn invalid_domains() {
        let pts: Vec<Vec<f64>> = [0.0, 1.0].iter().map(|&x| vec![x]).collect();
        let sp = FiniteMetricSpace::euclidean(&pts).unwrap();
        assert!(DomainSpace::new(sp.clone(), vec![1], vec![], MeshParams::default()).is_err());
        assert!(DomainSpace::new(sp.clone(), vec![1], vec![1], MeshParams::default()).is_err());
        assert!(DomainSpace::new(sp, vec![1, 1], vec![0], MeshParams::default()).is_err());
    }

    #[test]
    fn json_round_trip() {
        let dom = halfline();
        let text = dom.to_json();
        let back = DomainSpace::from_file(serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.to_json(), text);
        assert!(serde_json::from_str::<DomainFile>(r#"{"ambient":{"kind":"euclidean","bogus":1},"points":[[1]],"interior":[0],"boundary":[]}"#).is_err());
    }
}
