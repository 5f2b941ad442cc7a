//! LoD-2 building vectorization from a refined DSM plus edge and corner
//! probability rasters.
//!
//! The pipeline turns per-pixel network outputs into polygonal 3D models:
//! nDSM generation by morphological opening, corner selection by windowed
//! non-maximum suppression, building instance labeling, corner-pair edge
//! vectorization, planar face extraction, and assembly of closed roof /
//! wall / ground meshes with exportable OBJ and GeoJSON output, plus the
//! quality metrics to evaluate them.

pub mod cli;
pub mod components;
pub mod edges;
pub mod faces;
pub mod geom;
pub mod metrics;
pub mod model;
pub mod nms;
pub mod pipeline;
pub mod raster;
pub mod synth;
pub mod terrain;
