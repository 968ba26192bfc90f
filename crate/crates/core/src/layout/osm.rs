//! OSM XML ingestion: ways and multipolygon relations with recognized tags
//! become layout elements in local metric coordinates.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::layout::{
    categorize, AssetCategory, AssetId, Footprint, GeoLayout, LatLon, LayoutElement,
    DEFAULT_BUILDING_HEIGHT_M, DEFAULT_ROAD_WIDTH_M, METERS_PER_LEVEL,
};
use crate::math::polygon::{dedup_ring, ensure_ccw, is_simple};
use crate::math::{Rect, Vec2};
use crate::num::{cast, Real};

struct RawElement {
    id: AssetId,
    category: AssetCategory,
    ring: Vec<(f64, f64)>, // lat/lon pairs
    closed_shape: bool,
    tags: BTreeMap<String, String>,
    holes: Vec<Vec<(f64, f64)>>,
}

/// Parse an OSM XML export into a [`GeoLayout`]. Element order follows the
/// document; identical bytes produce identical layouts.
pub fn parse_osm<S: Real>(xml_bytes: &[u8]) -> Result<GeoLayout<S>> {
    let text = std::str::from_utf8(xml_bytes)
        .map_err(|e| Error::Parse(format!("input is not valid UTF-8: {e}")))?;
    let doc = roxmltree::Document::parse(text)
        .map_err(|e| Error::Parse(format!("malformed XML: {e}")))?;
    let root = doc.root_element();

    let mut nodes: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for node in root.children().filter(|n| n.has_tag_name("node")) {
        let id = attr_i64(&node, "id")?;
        let lat = attr_f64(&node, "lat")?;
        let lon = attr_f64(&node, "lon")?;
        nodes.insert(id, (lat, lon));
    }

    let mut ways: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
    let mut warnings: Vec<String> = Vec::new();
    let mut raw: Vec<RawElement> = Vec::new();

    for child in root.children() {
        if child.has_tag_name("way") {
            let way_id = attr_i64(&child, "id")?;
            let refs: Vec<i64> = child
                .children()
                .filter(|n| n.has_tag_name("nd"))
                .map(|n| attr_i64(&n, "ref"))
                .collect::<Result<_>>()?;
            ways.insert(way_id, refs.clone());

            let tags = read_tags(&child);
            if tags.is_empty() {
                continue; // bare geometry, usually a relation member
            }
            let Some(category) = categorize(&tags) else {
                warnings.push(format!("way {way_id}: unrecognized tags, skipped"));
                continue;
            };
            let coords = resolve_refs(way_id, &refs, &nodes)?;
            push_element(
                AssetId::new(format!("way/{way_id}")),
                category,
                coords,
                tags,
                Vec::new(),
                &mut raw,
                &mut warnings,
            );
        } else if child.has_tag_name("relation") {
            let rel_id = attr_i64(&child, "id")?;
            let tags = read_tags(&child);
            if tags.get("type").map(String::as_str) != Some("multipolygon") {
                continue;
            }
            let Some(category) = categorize(&tags) else {
                warnings.push(format!("relation {rel_id}: unrecognized tags, skipped"));
                continue;
            };
            let mut outer_refs: Vec<Vec<i64>> = Vec::new();
            let mut inner_refs: Vec<Vec<i64>> = Vec::new();
            for member in child.children().filter(|n| n.has_tag_name("member")) {
                if member.attribute("type") != Some("way") {
                    continue;
                }
                let way_ref = attr_i64(&member, "ref")?;
                let Some(refs) = ways.get(&way_ref) else {
                    warnings.push(format!(
                        "relation {rel_id}: member way {way_ref} not in document, skipped"
                    ));
                    continue;
                };
                match member.attribute("role") {
                    Some("inner") => inner_refs.push(refs.clone()),
                    _ => outer_refs.push(refs.clone()),
                }
            }
            let Some(outer) = chain_rings(&outer_refs) else {
                warnings.push(format!("relation {rel_id}: no closed outer ring, skipped"));
                continue;
            };
            let coords = resolve_refs(rel_id, &outer, &nodes)?;
            let mut holes = Vec::new();
            for hole in &inner_refs {
                if let Ok(h) = resolve_refs(rel_id, hole, &nodes) {
                    holes.push(h);
                }
            }
            push_element(
                AssetId::new(format!("rel/{rel_id}")),
                category,
                coords,
                tags,
                holes,
                &mut raw,
                &mut warnings,
            );
        }
    }

    // Local frame: equirectangular projection about the centroid of the
    // lat/lon bounds of all emitted coordinates.
    let mut lat_range: Option<(f64, f64)> = None;
    let mut lon_range: Option<(f64, f64)> = None;
    for e in &raw {
        for &(lat, lon) in e.ring.iter().chain(e.holes.iter().flatten()) {
            lat_range = Some(lat_range.map_or((lat, lat), |(a, b)| (a.min(lat), b.max(lat))));
            lon_range = Some(lon_range.map_or((lon, lon), |(a, b)| (a.min(lon), b.max(lon))));
        }
    }
    let origin = LatLon::<S> {
        lat: cast(lat_range.map_or(0.0, |(a, b)| (a + b) / 2.0)),
        lon: cast(lon_range.map_or(0.0, |(a, b)| (a + b) / 2.0)),
    };

    let mut elements: Vec<LayoutElement<S>> = Vec::new();
    for e in raw {
        let project = |&(lat, lon): &(f64, f64)| {
            let (x, y) =
                super::project_to_local::<S>(cast(lat), cast(lon), origin);
            Vec2::new(x, y)
        };
        let mut points: Vec<Vec2<S>> = e.ring.iter().map(project).collect();
        let footprint = if e.closed_shape {
            points = dedup_ring(&points, cast(1e-9));
            if points.len() < 3 {
                warnings.push(format!("{}: degenerate ring after dedup, skipped", e.id));
                continue;
            }
            ensure_ccw(&mut points);
            if !is_simple(&points) {
                warnings.push(format!("{}: self-intersecting ring, skipped", e.id));
                continue;
            }
            Footprint::Polygon(points)
        } else {
            points.dedup_by(|a, b| a == b);
            if points.len() < 2 {
                warnings.push(format!("{}: degenerate polyline, skipped", e.id));
                continue;
            }
            Footprint::Polyline(points)
        };
        let holes: Vec<Vec<Vec2<S>>> =
            e.holes.iter().map(|h| h.iter().map(project).collect()).collect();
        let (height_m, width_m) = dimensions_from_tags::<S>(e.category, &e.tags);
        elements.push(LayoutElement {
            id: e.id,
            category: e.category,
            footprint,
            height_m,
            width_m,
            tags: e.tags,
            holes,
        });
    }

    let bounds = Rect::from_points(elements.iter().flat_map(|e| e.footprint.points()))
        .unwrap_or(Rect::new(Vec2::zero(), Vec2::zero()));

    Ok(GeoLayout { origin, elements, bounds, warnings })
}

fn push_element(
    id: AssetId,
    category: AssetCategory,
    mut coords: Vec<(f64, f64)>,
    tags: BTreeMap<String, String>,
    holes: Vec<Vec<(f64, f64)>>,
    raw: &mut Vec<RawElement>,
    warnings: &mut Vec<String>,
) {
    let closed_shape = category != AssetCategory::RoadsPaths;
    if closed_shape {
        // Closed ways repeat their first node; unclosed area ways are
        // auto-closed by appending the first vertex (which dedup folds away).
        if coords.first() == coords.last() {
            coords.pop();
        }
        if coords.len() < 3 {
            warnings.push(format!("{id}: fewer than 3 distinct vertices, skipped"));
            return;
        }
    } else if coords.len() < 2 {
        warnings.push(format!("{id}: road with fewer than 2 vertices, skipped"));
        return;
    }
    raw.push(RawElement { id, category, ring: coords, closed_shape, tags, holes });
}

fn dimensions_from_tags<S: Real>(
    category: AssetCategory,
    tags: &BTreeMap<String, String>,
) -> (S, S) {
    let parse_meters = |v: &String| -> Option<f64> {
        v.trim().trim_end_matches(|c: char| c.is_alphabetic() || c == ' ').trim().parse().ok()
    };
    let height = match category {
        AssetCategory::Buildings => tags
            .get("height")
            .and_then(parse_meters)
            .or_else(|| {
                tags.get("building:levels")
                    .and_then(parse_meters)
                    .map(|l| l * METERS_PER_LEVEL)
            })
            .unwrap_or(DEFAULT_BUILDING_HEIGHT_M),
        _ => 0.0,
    };
    let width = match category {
        AssetCategory::RoadsPaths => {
            tags.get("width").and_then(parse_meters).unwrap_or(DEFAULT_ROAD_WIDTH_M)
        }
        _ => 0.0,
    };
    (cast(height), cast(width))
}

fn read_tags(node: &roxmltree::Node) -> BTreeMap<String, String> {
    node.children()
        .filter(|n| n.has_tag_name("tag"))
        .filter_map(|n| {
            Some((n.attribute("k")?.to_string(), n.attribute("v")?.to_string()))
        })
        .collect()
}

fn resolve_refs(
    owner_id: i64,
    refs: &[i64],
    nodes: &BTreeMap<i64, (f64, f64)>,
) -> Result<Vec<(f64, f64)>> {
    refs.iter()
        .map(|r| {
            nodes.get(r).copied().ok_or_else(|| {
                Error::Parse(format!("way {owner_id} references missing node {r}"))
            })
        })
        .collect()
}

/// Chain outer member ways of a multipolygon into one closed ring. Returns
/// the node refs of the first ring that closes; v1 ignores additional rings.
fn chain_rings(members: &[Vec<i64>]) -> Option<Vec<i64>> {
    if members.is_empty() {
        return None;
    }
    let mut remaining: Vec<Vec<i64>> = members.to_vec();
    let mut ring = remaining.remove(0);
    loop {
        if ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
            return Some(ring);
        }
        let tail = *ring.last()?;
        let pos = remaining.iter().position(|w| {
            w.first() == Some(&tail) || w.last() == Some(&tail)
        })?;
        let mut next = remaining.remove(pos);
        if next.last() == Some(&tail) {
            next.reverse();
        }
        ring.extend(next.into_iter().skip(1));
    }
}

fn attr_i64(node: &roxmltree::Node, name: &str) -> Result<i64> {
    node.attribute(name)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| {
            Error::Parse(format!(
                "<{}> missing or invalid attribute `{name}`",
                node.tag_name().name()
            ))
        })
}

fn attr_f64(node: &roxmltree::Node, name: &str) -> Result<f64> {
    node.attribute(name)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| {
            Error::Parse(format!(
                "<{}> missing or invalid attribute `{name}`",
                node.tag_name().name()
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::polygon::{is_ccw, is_simple};

    fn osm_fixture(body: &str) -> String {
        format!("<?xml version=\"1.0\"?>\n<osm version=\"0.6\">\n{body}\n</osm>")
    }

    const SQUARE_NODES: &str = r#"
        <node id="1" lat="0.0000" lon="0.0000"/>
        <node id="2" lat="0.0000" lon="0.0010"/>
        <node id="3" lat="0.0010" lon="0.0010"/>
        <node id="4" lat="0.0010" lon="0.0000"/>
    "#;

    #[test]
    fn single_building_way() {
        let xml = osm_fixture(&format!(
            r#"{SQUARE_NODES}
            <way id="10">
              <nd ref="1"/><nd ref="2"/><nd ref="3"/><nd ref="4"/><nd ref="1"/>
              <tag k="building" v="yes"/><tag k="height" v="10"/>
            </way>"#
        ));
        let layout = parse_osm::<f64>(xml.as_bytes()).unwrap();
        assert_eq!(layout.elements.len(), 1);
        let e = &layout.elements[0];
        assert_eq!(e.category, AssetCategory::Buildings);
        assert_eq!(e.height_m, 10.0);
        assert_eq!(e.footprint.points().len(), 4);
        assert!(layout.warnings.is_empty());
    }

    #[test]
    fn isolated_nodes_only() {
        let layout = parse_osm::<f64>(osm_fixture(SQUARE_NODES).as_bytes()).unwrap();
        assert_eq!(layout.elements.len(), 0);
        assert_eq!(layout.warnings.len(), 0);
    }

    #[test]
    fn levels_rule_when_height_absent() {
        let xml = osm_fixture(&format!(
            r#"{SQUARE_NODES}
            <way id="10">
              <nd ref="1"/><nd ref="2"/><nd ref="3"/><nd ref="4"/>
              <tag k="building:levels" v="3"/>
            </way>"#
        ));
        let layout = parse_osm::<f64>(xml.as_bytes()).unwrap();
        assert_eq!(layout.elements[0].height_m, 9.0);
    }

    #[test]
    fn default_height_when_untagged() {
        let xml = osm_fixture(&format!(
            r#"{SQUARE_NODES}
            <way id="10">
              <nd ref="1"/><nd ref="2"/><nd ref="3"/><nd ref="4"/>
              <tag k="building" v="yes"/>
            </way>"#
        ));
        let layout = parse_osm::<f64>(xml.as_bytes()).unwrap();
        assert_eq!(layout.elements[0].height_m, DEFAULT_BUILDING_HEIGHT_M);
    }

    #[test]
    fn unclosed_building_way_is_auto_closed() {
        let xml = osm_fixture(&format!(
            r#"{SQUARE_NODES}
            <way id="11">
              <nd ref="1"/><nd ref="2"/><nd ref="3"/><nd ref="4"/>
              <tag k="building" v="yes"/>
            </way>"#
        ));
        let layout = parse_osm::<f64>(xml.as_bytes()).unwrap();
        assert_eq!(layout.elements.len(), 1);
        assert_eq!(layout.elements[0].footprint.points().len(), 4);
    }

    #[test]
    fn missing_node_names_the_way() {
        let xml = osm_fixture(
            r#"<node id="1" lat="0" lon="0"/>
            <way id="99"><nd ref="1"/><nd ref="77"/><tag k="building" v="yes"/></way>"#,
        );
        let err = parse_osm::<f64>(xml.as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("99") && msg.contains("77"), "got: {msg}");
    }

    #[test]
    fn malformed_xml_is_a_parse_error() {
        let err = parse_osm::<f64>(b"<osm><way></osm>").unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }

    #[test]
    fn unrecognized_way_counts_one_warning() {
        let xml = osm_fixture(&format!(
            r#"{SQUARE_NODES}
            <way id="12">
              <nd ref="1"/><nd ref="2"/><nd ref="3"/><nd ref="4"/>
              <tag k="amenity" v="fountain"/>
            </way>"#
        ));
        let layout = parse_osm::<f64>(xml.as_bytes()).unwrap();
        assert_eq!(layout.elements.len(), 0);
        assert_eq!(layout.warnings.len(), 1);
    }

    #[test]
    fn road_stays_a_polyline_with_default_width() {
        let xml = osm_fixture(
            r#"<node id="1" lat="0" lon="0"/>
            <node id="2" lat="0" lon="0.001"/>
            <way id="20"><nd ref="1"/><nd ref="2"/><tag k="highway" v="residential"/></way>"#,
        );
        let layout = parse_osm::<f64>(xml.as_bytes()).unwrap();
        let e = &layout.elements[0];
        assert!(matches!(e.footprint, Footprint::Polyline(_)));
        assert_eq!(e.width_m, DEFAULT_ROAD_WIDTH_M);
    }

    #[test]
    fn multipolygon_outer_ring_and_hole_recorded() {
        let xml = osm_fixture(
            r#"<node id="1" lat="0" lon="0"/><node id="2" lat="0" lon="0.002"/>
            <node id="3" lat="0.002" lon="0.002"/><node id="4" lat="0.002" lon="0"/>
            <node id="5" lat="0.0005" lon="0.0005"/><node id="6" lat="0.0005" lon="0.001"/>
            <node id="7" lat="0.001" lon="0.001"/>
            <way id="30"><nd ref="1"/><nd ref="2"/><nd ref="3"/></way>
            <way id="31"><nd ref="3"/><nd ref="4"/><nd ref="1"/></way>
            <way id="32"><nd ref="5"/><nd ref="6"/><nd ref="7"/><nd ref="5"/></way>
            <relation id="40">
              <member type="way" ref="30" role="outer"/>
              <member type="way" ref="31" role="outer"/>
              <member type="way" ref="32" role="inner"/>
              <tag k="type" v="multipolygon"/><tag k="natural" v="water"/>
            </relation>"#,
        );
        let layout = parse_osm::<f64>(xml.as_bytes()).unwrap();
        assert_eq!(layout.elements.len(), 1);
        let e = &layout.elements[0];
        assert_eq!(e.category, AssetCategory::Water);
        assert_eq!(e.footprint.points().len(), 4);
        assert_eq!(e.holes.len(), 1);
    }

    #[test]
    fn parsing_is_deterministic_and_polygons_are_ccw_simple() {
        let xml = osm_fixture(&format!(
            r#"{SQUARE_NODES}
            <node id="5" lat="0.002" lon="0.002"/>
            <node id="6" lat="0.002" lon="0.003"/>
            <node id="7" lat="0.003" lon="0.003"/>
            <way id="10">
              <nd ref="1"/><nd ref="4"/><nd ref="3"/><nd ref="2"/>
              <tag k="building" v="yes"/>
            </way>
            <way id="11">
              <nd ref="5"/><nd ref="6"/><nd ref="7"/>
              <tag k="natural" v="water"/>
            </way>"#
        ));
        let a = parse_osm::<f64>(xml.as_bytes()).unwrap();
        let b = parse_osm::<f64>(xml.as_bytes()).unwrap();
        assert_eq!(a, b);
        for e in &a.elements {
            if let Footprint::Polygon(ring) = &e.footprint {
                assert!(is_ccw(ring), "{} not ccw", e.id);
                assert!(is_simple(ring), "{} not simple", e.id);
                for p in ring {
                    assert!(a.bounds.contains(*p, 1e-9));
                }
            }
        }
    }

    #[test]
    fn self_intersecting_way_is_skipped_with_warning() {
        let xml = osm_fixture(
            r#"<node id="1" lat="0" lon="0"/><node id="2" lat="0.001" lon="0.001"/>
            <node id="3" lat="0" lon="0.001"/><node id="4" lat="0.001" lon="0"/>
            <way id="13">
              <nd ref="1"/><nd ref="2"/><nd ref="3"/><nd ref="4"/>
              <tag k="building" v="yes"/>
            </way>"#,
        );
        let layout = parse_osm::<f64>(xml.as_bytes()).unwrap();
        assert_eq!(layout.elements.len(), 0);
        assert_eq!(layout.warnings.len(), 1);
    }
}
