//! GeoJSON export of subgraphs and ranked pairs for map viewers.

use std::collections::HashMap;

use serde_json::{json, Value};

use crate::dependencies::DependencyPair;
use crate::error::{Error, Result};
use crate::merging::{SgId, Subgraph};
use crate::road_graph::{TransportGraph, UnitIdx};

fn multi_line(g: &TransportGraph, units: &[UnitIdx]) -> Result<Value> {
    let mut lines = Vec::with_capacity(units.len());
    for &u in units {
        let unit = g.unit(u)?;
        let coords: Vec<[f64; 2]> = unit.geometry.iter().map(|p| [p.lon, p.lat]).collect();
        lines.push(coords);
    }
    Ok(json!({ "type": "MultiLineString", "coordinates": lines }))
}

fn collection(features: Vec<Value>) -> Value {
    json!({ "type": "FeatureCollection", "features": features })
}

/// One MultiLineString feature per subgraph, in the given order.
pub fn subgraphs_geojson(g: &TransportGraph, subgraphs: &[Subgraph]) -> Result<Value> {
    let features = subgraphs
        .iter()
        .map(|sg| {
            Ok(json!({
                "type": "Feature",
                "geometry": multi_line(g, &sg.units)?,
                "properties": {
                    "sg_id": sg.id.0,
                    "unit_count": sg.units.len(),
                    "source_timepoint_count": sg.source_timepoints.len(),
                },
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(collection(features))
}

/// One feature per ranked pair holding the geometry of both subgraphs.
/// Ranks start at 1.
pub fn ranked_pairs_geojson(
    g: &TransportGraph,
    subgraphs: &[Subgraph],
    ranked: &[DependencyPair],
) -> Result<Value> {
    let by_id: HashMap<SgId, &Subgraph> = subgraphs.iter().map(|s| (s.id, s)).collect();
    let get = |id: SgId| {
        by_id
            .get(&id)
            .copied()
            .ok_or_else(|| Error::Contract(format!("ranked subgraph {} is unknown", id.0)))
    };
    let mut features = Vec::with_capacity(ranked.len());
    for (i, p) in ranked.iter().enumerate() {
        let (a, b) = (get(p.sg1)?, get(p.sg2)?);
        let mut units = a.units.clone();
        units.extend_from_slice(&b.units);
        units.sort_unstable();
        units.dedup();
        features.push(json!({
            "type": "Feature",
            "geometry": multi_line(g, &units)?,
            "properties": {
                "rank": i + 1,
                "sg1_id": p.sg1.0,
                "sg2_id": p.sg2.0,
                "mi_bits": p.mi,
                "dist_m": p.dist_m,
                "score": p.score,
            },
        }));
    }
    Ok(collection(features))
}
