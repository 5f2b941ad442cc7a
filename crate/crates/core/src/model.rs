//! LoD-2 building model assembly: footprint union, corner height
//! assignment, wall and ground face construction, OBJ/GeoJSON export.

use crate::faces::{extract_faces, FaceError, PlanarGraph, RoofPolygon};
use crate::geom::{interior_point, locate_point, PointLocation};
use crate::raster::{window_extremum, ExtremumMode, Raster, RasterError, Window};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("roof polygons are not edge-compatible: edges ({0}, {1}) and ({2}, {3}) partially overlap")]
    PartialEdgeOverlap(usize, usize, usize, usize),
    #[error("no boundary edges; footprint is empty")]
    EmptyFootprint,
    #[error("corner ({row}, {col}) has a nodata-only height window")]
    NodataHeight { row: usize, col: usize },
    #[error(transparent)]
    Face(#[from] FaceError),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Boundary of the merged roof faces: one or more closed rings over the
/// shared corner index space. Counter-clockwise; interior rings are holes.
#[derive(Debug, Clone)]
pub struct Footprint {
    pub rings: Vec<FootprintRing>,
}

#[derive(Debug, Clone)]
pub struct FootprintRing {
    pub ring: Vec<usize>,
    pub is_hole: bool,
}

impl Footprint {
    pub fn outer_rings(&self) -> impl Iterator<Item = &FootprintRing> {
        self.rings.iter().filter(|r| !r.is_hole)
    }

    pub fn holes(&self) -> impl Iterator<Item = &FootprintRing> {
        self.rings.iter().filter(|r| r.is_hole)
    }
}

/// Merge the roof faces of one building into its outline.
///
/// The boundary consists of the edges used by exactly one roof polygon,
/// chained into closed rings by the same face walk used for roofs.
pub fn footprint_union(
    roofs: &[RoofPolygon],
    vertices: &[(f64, f64)],
) -> Result<Footprint, ModelError> {
    let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut all_edges: Vec<(usize, usize)> = Vec::new();
    for roof in roofs {
        let n = roof.ring.len();
        for i in 0..n {
            let a = roof.ring[i];
            let b = roof.ring[(i + 1) % n];
            let key = (a.min(b), a.max(b));
            *edge_count.entry(key).or_insert(0) += 1;
            all_edges.push(key);
        }
    }
    // Edge compatibility: distinct edges must not overlap collinearly.
    for (i, &(a, b)) in all_edges.iter().enumerate() {
        for &(c, d) in &all_edges[i + 1..] {
            if (a, b) == (c, d) {
                continue;
            }
            if crate::geom::segments_cross(vertices[a], vertices[b], vertices[c], vertices[d]) {
                return Err(ModelError::PartialEdgeOverlap(a, b, c, d));
            }
        }
    }
    let boundary: Vec<(usize, usize)> = edge_count
        .iter()
        .filter(|&(_, &count)| count == 1)
        .map(|(&e, _)| e)
        .collect();
    if boundary.is_empty() {
        return Err(ModelError::EmptyFootprint);
    }
    let graph = PlanarGraph {
        vertices: vertices.to_vec(),
        adjacency: boundary,
    };
    let rings = extract_faces(&graph, 0)?;
    // A ring strictly inside another ring is a hole.
    let positions: Vec<Vec<(f64, f64)>> = rings.iter().map(|r| r.positions(vertices)).collect();
    let mut out = Vec::new();
    for (i, ring) in rings.iter().enumerate() {
        let probe = interior_point(&positions[i]);
        let is_hole = positions
            .iter()
            .enumerate()
            .any(|(j, other)| i != j && locate_point(probe, other) == PointLocation::Inside);
        out.push(FootprintRing {
            ring: ring.ring.clone(),
            is_hole,
        });
    }
    Ok(Footprint { rings: out })
}

/// Roof corner heights: the 5x5 (by default) window maximum of the nDSM
/// around each corner pixel. A nodata-only window is an error; the caller
/// drops the building with a warning.
pub fn assign_heights(
    ndsm: &Raster,
    corners: &[(usize, usize)],
    half: usize,
) -> Result<Vec<f32>, ModelError> {
    corners
        .iter()
        .map(|&(row, col)| {
            let z = window_extremum(ndsm, Window::new(row, col, half), ExtremumMode::Max)?;
            if z == ndsm.nodata {
                Err(ModelError::NodataHeight { row, col })
            } else {
                Ok(z)
            }
        })
        .collect()
}

/// A fully assembled 3D building: roof faces at corner heights, one wall
/// quad per footprint boundary edge, ground face(s) at z = 0.
#[derive(Debug, Clone)]
pub struct BuildingModel3D {
    pub instance_id: u32,
    /// World coordinates in meters.
    pub vertices: Vec<[f64; 3]>,
    pub roof_faces: Vec<Vec<usize>>,
    pub wall_faces: Vec<Vec<usize>>,
    pub ground_faces: Vec<Vec<usize>>,
    /// Outer footprint ring(s) in world meters.
    pub footprint: Vec<Vec<(f64, f64)>>,
    /// Non-fatal issues encountered during assembly (e.g. dropped holes).
    pub warnings: Vec<String>,
}

impl BuildingModel3D {
    pub fn faces(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.roof_faces
            .iter()
            .chain(&self.wall_faces)
            .chain(&self.ground_faces)
    }

    /// Maximum roof height.
    pub fn ridge_m(&self) -> f64 {
        self.roof_faces
            .iter()
            .flatten()
            .map(|&v| self.vertices[v][2])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Minimum roof height on the footprint boundary.
    pub fn eave_m(&self) -> f64 {
        // Wall top vertices are exactly the boundary roof corners.
        let top: Vec<f64> = self
            .wall_faces
            .iter()
            .flat_map(|f| f.iter())
            .map(|&v| self.vertices[v][2])
            .filter(|&z| z > 0.0)
            .collect();
        if top.is_empty() {
            self.ridge_m()
        } else {
            top.iter().copied().fold(f64::INFINITY, f64::min)
        }
    }
}

/// Assemble the 3D model of one building.
///
/// `positions` and `heights` are indexed by the corner index space shared
/// by `roofs` and `footprint`. Footprint holes are dropped with a warning.
pub fn build_model(
    instance_id: u32,
    roofs: &[RoofPolygon],
    footprint: &Footprint,
    positions: &[(f64, f64)],
    heights: &[f32],
) -> BuildingModel3D {
    let mut warnings = Vec::new();
    let n_holes = footprint.holes().count();
    if n_holes > 0 {
        warnings.push(format!(
            "building {instance_id}: dropped {n_holes} footprint hole(s); courtyard walls are not generated"
        ));
    }
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut top_id: BTreeMap<usize, usize> = BTreeMap::new();
    let mut bottom_id: BTreeMap<usize, usize> = BTreeMap::new();
    // Deterministic vertex order: roof corners first (sorted), then
    // footprint bottoms (sorted).
    let mut used: Vec<usize> = roofs.iter().flat_map(|r| r.ring.iter().copied()).collect();
    used.sort_unstable();
    used.dedup();
    for &c in &used {
        top_id.insert(c, vertices.len());
        let (x, y) = positions[c];
        vertices.push([x, y, heights[c] as f64]);
    }
    let mut boundary_corners: Vec<usize> = footprint
        .outer_rings()
        .flat_map(|r| r.ring.iter().copied())
        .collect();
    boundary_corners.sort_unstable();
    boundary_corners.dedup();
    for &c in &boundary_corners {
        bottom_id.insert(c, vertices.len());
        let (x, y) = positions[c];
        vertices.push([x, y, 0.0]);
    }
    let roof_faces: Vec<Vec<usize>> = roofs
        .iter()
        .map(|r| r.ring.iter().map(|c| top_id[c]).collect())
        .collect();
    let mut wall_faces = Vec::new();
    let mut ground_faces = Vec::new();
    let mut footprint_world = Vec::new();
    for ring in footprint.outer_rings() {
        let n = ring.ring.len();
        // Ring is counter-clockwise; one outward-facing wall quad per edge.
        for i in 0..n {
            let a = ring.ring[i];
            let b = ring.ring[(i + 1) % n];
            wall_faces.push(vec![bottom_id[&a], bottom_id[&b], top_id[&b], top_id[&a]]);
        }
        // Ground face: reversed ring, normal pointing down.
        ground_faces.push(ring.ring.iter().rev().map(|c| bottom_id[c]).collect());
        footprint_world.push(ring.ring.iter().map(|&c| positions[c]).collect());
    }
    BuildingModel3D {
        instance_id,
        vertices,
        roof_faces,
        wall_faces,
        ground_faces,
        footprint: footprint_world,
        warnings,
    }
}

/// Every undirected 3D edge must be shared by exactly two faces.
pub fn is_closed_mesh(model: &BuildingModel3D) -> bool {
    let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for face in model.faces() {
        let n = face.len();
        for i in 0..n {
            let a = face[i];
            let b = face[(i + 1) % n];
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    count.values().all(|&c| c == 2)
}

/// Euler characteristic V - E + F of the mesh.
pub fn euler_characteristic(model: &BuildingModel3D) -> i64 {
    let mut edges = std::collections::BTreeSet::new();
    let mut used = std::collections::BTreeSet::new();
    let mut f = 0i64;
    for face in model.faces() {
        f += 1;
        let n = face.len();
        for i in 0..n {
            let a = face[i];
            let b = face[(i + 1) % n];
            edges.insert((a.min(b), a.max(b)));
            used.insert(a);
        }
    }
    used.len() as i64 - edges.len() as i64 + f
}

/// OBJ export: one `o building_<id>` group per building in id order,
/// polygon faces with global 1-based indices.
pub fn export_obj(models: &[BuildingModel3D]) -> String {
    let mut sorted: Vec<&BuildingModel3D> = models.iter().collect();
    sorted.sort_by_key(|m| m.instance_id);
    let mut out = String::new();
    let mut base = 1usize;
    for m in sorted {
        writeln!(out, "o building_{}", m.instance_id).unwrap();
        for v in &m.vertices {
            writeln!(out, "v {:.6} {:.6} {:.6}", v[0], v[1], v[2]).unwrap();
        }
        for face in m.faces() {
            out.push('f');
            for &v in face {
                write!(out, " {}", base + v).unwrap();
            }
            out.push('\n');
        }
        base += m.vertices.len();
    }
    out
}

/// GeoJSON export: per-building footprint polygon with ridge/eave
/// attributes.
pub fn export_geojson(models: &[BuildingModel3D]) -> String {
    let mut sorted: Vec<&BuildingModel3D> = models.iter().collect();
    sorted.sort_by_key(|m| m.instance_id);
    let features: Vec<serde_json::Value> = sorted
        .iter()
        .map(|m| {
            let rings: Vec<Vec<[f64; 2]>> = m
                .footprint
                .iter()
                .map(|ring| {
                    let mut coords: Vec<[f64; 2]> =
                        ring.iter().map(|&(x, y)| [x, y]).collect();
                    if let Some(&first) = coords.first() {
                        coords.push(first);
                    }
                    coords
                })
                .collect();
            let geometry = if rings.len() == 1 {
                serde_json::json!({"type": "Polygon", "coordinates": rings})
            } else {
                let parts: Vec<Vec<Vec<[f64; 2]>>> =
                    rings.into_iter().map(|r| vec![r]).collect();
                serde_json::json!({"type": "MultiPolygon", "coordinates": parts})
            };
            serde_json::json!({
                "type": "Feature",
                "geometry": geometry,
                "properties": {
                    "instance_id": m.instance_id,
                    "ridge_m": m.ridge_m(),
                    "eave_m": m.eave_m(),
                    "n_roof_faces": m.roof_faces.len(),
                }
            })
        })
        .collect();
    serde_json::to_string_pretty(&serde_json::json!({
        "type": "FeatureCollection",
        "features": features,
    }))
    .unwrap()
}
