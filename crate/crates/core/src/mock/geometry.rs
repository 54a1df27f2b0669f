//! Planar geometry for the topology processes: shoelace area, bounding
//! boxes and rectangle intersection, plus the GeoJSON subset used on the wire.

use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("unsupported GeoJSON: {0}")]
    UnsupportedGeoJson(String),
}

/// A simple polygon given by its exterior ring, implicitly closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    ring: Vec<(f64, f64)>,
}

impl Polygon {
    /// An explicitly closed ring (last vertex equal to the first) is accepted
    /// and stored without the closing duplicate.
    pub fn new(mut ring: Vec<(f64, f64)>) -> Result<Self, GeometryError> {
        if ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        if ring.len() < 3 {
            return Err(GeometryError::DegenerateGeometry(format!(
                "polygon needs at least 3 distinct vertices, got {}",
                ring.len()
            )));
        }
        if ring.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(GeometryError::DegenerateGeometry(
                "non-finite coordinate".into(),
            ));
        }
        if let Some(i) = (0..ring.len()).find(|&i| ring[i] == ring[(i + 1) % ring.len()]) {
            return Err(GeometryError::DegenerateGeometry(format!(
                "vertices {i} and {} coincide",
                (i + 1) % ring.len()
            )));
        }
        Ok(Polygon { ring })
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.ring
    }

    pub fn from_geojson(value: &Value) -> Result<Self, GeometryError> {
        let unsupported = |msg: &str| GeometryError::UnsupportedGeoJson(msg.to_string());
        let geometry = match value.get("type").and_then(Value::as_str) {
            Some("Feature") => value
                .get("geometry")
                .ok_or_else(|| unsupported("feature without geometry"))?,
            Some("Polygon") => value,
            Some(other) => {
                return Err(GeometryError::UnsupportedGeoJson(format!(
                    "geometry type `{other}`"
                )))
            }
            None => return Err(unsupported("missing `type` member")),
        };
        if geometry.get("type").and_then(Value::as_str) != Some("Polygon") {
            return Err(unsupported("only Polygon geometries are accepted"));
        }
        let rings = geometry
            .get("coordinates")
            .and_then(Value::as_array)
            .ok_or_else(|| unsupported("coordinates must be an array of rings"))?;
        match rings.len() {
            0 => return Err(unsupported("polygon has no rings")),
            1 => {}
            _ => return Err(unsupported("polygons with holes are not supported")),
        }
        let ring = rings[0]
            .as_array()
            .ok_or_else(|| unsupported("ring must be an array of positions"))?
            .iter()
            .map(|pos| match pos.as_array().map(Vec::as_slice) {
                Some([x, y, ..]) => match (x.as_f64(), y.as_f64()) {
                    (Some(x), Some(y)) => Ok((x, y)),
                    _ => Err(unsupported("position coordinates must be numbers")),
                },
                _ => Err(unsupported("position needs two coordinates")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Polygon::new(ring)
    }

    pub fn from_geojson_bytes(bytes: &[u8]) -> Result<Self, GeometryError> {
        let value: Value = serde_json::from_slice(bytes)
            .map_err(|e| GeometryError::UnsupportedGeoJson(e.to_string()))?;
        Polygon::from_geojson(&value)
    }

    pub fn to_geojson(&self) -> Value {
        let mut ring: Vec<Value> = self.ring.iter().map(|(x, y)| json!([x, y])).collect();
        ring.push(ring[0].clone());
        json!({"type": "Polygon", "coordinates": [ring]})
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub minx: f64,
    pub miny: f64,
    pub maxx: f64,
    pub maxy: f64,
}

impl Rect {
    pub fn new(minx: f64, miny: f64, maxx: f64, maxy: f64) -> Option<Self> {
        (minx <= maxx && miny <= maxy).then_some(Rect {
            minx,
            miny,
            maxx,
            maxy,
        })
    }

    pub fn contains(&self, (x, y): (f64, f64)) -> bool {
        self.minx <= x && x <= self.maxx && self.miny <= y && y <= self.maxy
    }

    pub fn to_geojson(&self) -> Value {
        json!({
            "type": "Polygon",
            "coordinates": [[
                [self.minx, self.miny],
                [self.maxx, self.miny],
                [self.maxx, self.maxy],
                [self.minx, self.maxy],
                [self.minx, self.miny],
            ]],
        })
    }
}

/// Absolute shoelace area, in the squared units of the coordinates.
pub fn area(p: &Polygon) -> f64 {
    let ring = p.vertices();
    let n = ring.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (x0, y0) = ring[i];
            let (x1, y1) = ring[(i + 1) % n];
            x0 * y1 - x1 * y0
        })
        .sum();
    twice.abs() / 2.0
}

pub fn bounding_box(p: &Polygon) -> Rect {
    let init = Rect {
        minx: f64::INFINITY,
        miny: f64::INFINITY,
        maxx: f64::NEG_INFINITY,
        maxy: f64::NEG_INFINITY,
    };
    p.vertices().iter().fold(init, |r, &(x, y)| Rect {
        minx: r.minx.min(x),
        miny: r.miny.min(y),
        maxx: r.maxx.max(x),
        maxy: r.maxy.max(y),
    })
}

/// `None` when the rectangles are disjoint. Touching edges give a
/// zero-width rectangle.
pub fn intersect(a: &Rect, b: &Rect) -> Option<Rect> {
    Rect::new(
        a.minx.max(b.minx),
        a.miny.max(b.miny),
        a.maxx.min(b.maxx),
        a.maxy.min(b.maxy),
    )
}
