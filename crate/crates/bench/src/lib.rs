//! Fixtures shared by the benchmarks.

use wpsrest_core::mock::{data_uri, AREA_PROCESS};
use wpsrest_core::wps::{DataValue, ExecuteRequest, LiteralType, OperationRequest, ResponseForm};

/// A closed regular polygon with `n` vertices on the unit circle.
pub fn regular_ring(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let a = i as f64 * std::f64::consts::TAU / n as f64;
            (a.cos(), a.sin())
        })
        .collect()
}

fn polygon_geojson(n: usize) -> String {
    let mut ring = regular_ring(n);
    ring.push(ring[0]);
    format!(r#"{{"type":"Polygon","coordinates":[{}]}}"#, coordinates(&ring))
}

fn area_execute(polygon: DataValue) -> OperationRequest {
    OperationRequest::Execute(ExecuteRequest {
        process_id: AREA_PROCESS.into(),
        inputs: vec![
            ("polygon".into(), polygon),
            ("label".into(), DataValue::literal("bench", LiteralType::String)),
        ],
        response_form: ResponseForm::ByValue,
    })
}

/// An Area execute request whose polygon has `n` vertices, sent inline.
pub fn area_request(n: usize) -> OperationRequest {
    area_execute(DataValue::inline("application/json", polygon_geojson(n).into_bytes()))
}

/// The same request with the polygon passed by reference, so it fits in a query string.
pub fn area_request_by_reference(n: usize) -> OperationRequest {
    let href = data_uri("application/json", polygon_geojson(n).as_bytes());
    area_execute(DataValue::reference("application/json", href))
}

fn coordinates(ring: &[(f64, f64)]) -> String {
    let pts: Vec<String> = ring.iter().map(|(x, y)| format!("[{x:?},{y:?}]")).collect();
    format!("[{}]", pts.join(","))
}
