//! Canonical 2.5D layout model and ingestion from OSM XML or semantic +
//! height rasters.

pub mod osm;
pub mod raster;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::math::{Rect, Vec2};
use crate::num::{cast, Real};

pub use osm::parse_osm;
pub use raster::{parse_raster_layout, RasterLayout};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;
pub const METERS_PER_LEVEL: f64 = 3.0;
pub const DEFAULT_BUILDING_HEIGHT_M: f64 = 9.0;
pub const DEFAULT_ROAD_WIDTH_M: f64 = 6.0;

/// Stable identifier of a layout element / scene asset.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AssetId(pub String);

impl AssetId {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AssetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The four rendered element categories plus the artificial ground plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssetCategory {
    Buildings,
    RoadsPaths,
    ForestVegetation,
    Water,
    Ground,
}

impl AssetCategory {
    /// Id written into semantic frames; 255 is reserved for background.
    pub fn semantic_id(self) -> u8 {
        match self {
            AssetCategory::Buildings => 0,
            AssetCategory::RoadsPaths => 1,
            AssetCategory::ForestVegetation => 2,
            AssetCategory::Water => 3,
            AssetCategory::Ground => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AssetCategory::Buildings => "buildings",
            AssetCategory::RoadsPaths => "roads_paths",
            AssetCategory::ForestVegetation => "forest_vegetation",
            AssetCategory::Water => "water",
            AssetCategory::Ground => "ground",
        }
    }

    pub fn all_renderable() -> [AssetCategory; 4] {
        [
            AssetCategory::Buildings,
            AssetCategory::RoadsPaths,
            AssetCategory::ForestVegetation,
            AssetCategory::Water,
        ]
    }
}

/// Element footprint: closed simple polygons for area categories, open
/// polylines for roads. Raster-traced roads arrive as polygons and are
/// meshed as flat areas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Footprint<S> {
    Polygon(Vec<Vec2<S>>),
    Polyline(Vec<Vec2<S>>),
}

impl<S> Footprint<S> {
    pub fn points(&self) -> &[Vec2<S>] {
        match self {
            Footprint::Polygon(p) | Footprint::Polyline(p) => p,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutElement<S> {
    pub id: AssetId,
    pub category: AssetCategory,
    pub footprint: Footprint<S>,
    /// Extrusion height for buildings, zero otherwise.
    pub height_m: S,
    /// Ribbon width for roads.
    pub width_m: S,
    pub tags: BTreeMap<String, String>,
    /// Inner rings of multipolygon relations; recorded but not meshed.
    pub holes: Vec<Vec<Vec2<S>>>,
}

/// Geographic reference point in degrees.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LatLon<S> {
    pub lat: S,
    pub lon: S,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoLayout<S> {
    pub origin: LatLon<S>,
    pub elements: Vec<LayoutElement<S>>,
    /// Axis-aligned extent of all element coordinates, local meters.
    pub bounds: Rect<S>,
    /// Parse diagnostics (skipped ways etc.); count doubles as warning count.
    pub warnings: Vec<String>,
}

impl<S: Real> GeoLayout<S> {
    pub fn empty() -> Self {
        Self {
            origin: LatLon { lat: S::zero(), lon: S::zero() },
            elements: Vec::new(),
            bounds: Rect::new(Vec2::zero(), Vec2::zero()),
            warnings: Vec::new(),
        }
    }
}

/// Map OSM-style tags onto an asset category. Total function; unmapped tag
/// sets yield `None`.
pub fn categorize(tags: &BTreeMap<String, String>) -> Option<AssetCategory> {
    let has_key_prefix =
        |p: &str| tags.keys().any(|k| k == p || k.starts_with(&format!("{p}:")));
    if has_key_prefix("building") {
        return Some(AssetCategory::Buildings);
    }
    if tags.contains_key("highway") {
        return Some(AssetCategory::RoadsPaths);
    }
    let tag_is = |k: &str, v: &str| tags.get(k).is_some_and(|t| t == v);
    if tag_is("natural", "wood")
        || tag_is("landuse", "forest")
        || tag_is("leisure", "park")
        || tag_is("landuse", "grass")
    {
        return Some(AssetCategory::ForestVegetation);
    }
    if tag_is("natural", "water") || tags.contains_key("waterway") {
        return Some(AssetCategory::Water);
    }
    None
}

/// Equirectangular projection of a geographic point into local meters
/// about `origin`.
pub fn project_to_local<S: Real>(lat: S, lon: S, origin: LatLon<S>) -> (S, S) {
    let radius: S = cast(EARTH_RADIUS_M);
    let deg: S = cast(std::f64::consts::PI / 180.0);
    let x = radius * (lon - origin.lon) * (origin.lat * deg).cos() * deg;
    let y = radius * (lat - origin.lat) * deg;
    (x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn categorize_building() {
        assert_eq!(categorize(&tags(&[("building", "yes")])), Some(AssetCategory::Buildings));
        assert_eq!(
            categorize(&tags(&[("building:levels", "3")])),
            Some(AssetCategory::Buildings)
        );
    }

    #[test]
    fn categorize_road_and_none() {
        assert_eq!(
            categorize(&tags(&[("highway", "residential")])),
            Some(AssetCategory::RoadsPaths)
        );
        assert_eq!(categorize(&tags(&[("amenity", "bench")])), None);
    }

    #[test]
    fn categorize_vegetation_and_water() {
        assert_eq!(
            categorize(&tags(&[("landuse", "grass")])),
            Some(AssetCategory::ForestVegetation)
        );
        assert_eq!(categorize(&tags(&[("waterway", "river")])), Some(AssetCategory::Water));
        assert_eq!(categorize(&tags(&[("natural", "water")])), Some(AssetCategory::Water));
    }

    #[test]
    fn project_origin_to_itself() {
        let o = LatLon { lat: 48.2f64, lon: 16.3 };
        assert_eq!(project_to_local(48.2, 16.3, o), (0.0, 0.0));
    }

    #[test]
    fn project_one_degree_east_at_equator() {
        // oracle: 6_371_000 * pi / 180 with full f64 precision
        let expected = 6_371_000.0 * std::f64::consts::PI / 180.0;
        let (x, y) = project_to_local(0.0f64, 1.0, LatLon { lat: 0.0, lon: 0.0 });
        assert!((x - expected).abs() < 1e-6, "x = {x}, expected {expected}");
        assert_eq!(y, 0.0);
        assert!((x - 111_194.926_644_558_7).abs() < 1e-6);
    }

    #[test]
    fn project_one_degree_north_lacks_cos_factor() {
        let expected = 6_371_000.0 * std::f64::consts::PI / 180.0;
        for origin_lat in [0.0f64, 45.0, -60.0] {
            let (_, y) =
                project_to_local(origin_lat + 1.0, 5.0, LatLon { lat: origin_lat, lon: 5.0 });
            assert!((y - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn projection_is_affine_midpoints_map_to_midpoints() {
        let o = LatLon { lat: 40.0f64, lon: -70.0 };
        let a = (40.1, -70.2);
        let b = (39.7, -69.9);
        let pa = project_to_local(a.0, a.1, o);
        let pb = project_to_local(b.0, b.1, o);
        let mid = project_to_local((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0, o);
        assert!((mid.0 - (pa.0 + pb.0) / 2.0).abs() < 1e-9);
        assert!((mid.1 - (pa.1 + pb.1) / 2.0).abs() < 1e-9);
    }
}
