use std::collections::BTreeMap;

use serde_json::{json, Value};

use super::{
    BlockCatalog, BlockCycleType, BlockKind, BlockShape, DegreeWeights, LengthSet, Species, SpeciesError,
    SpeciesKind, Weight,
};

fn err(msg: impl Into<String>) -> SpeciesError {
    SpeciesError::Json(msg.into())
}

fn weight_of(v: &Value) -> Result<Weight, SpeciesError> {
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_u64() {
                Ok(Weight::integer(i as i64))
            } else {
                Weight::from_f64(n.as_f64().ok_or_else(|| err("bad number"))?)
            }
        }
        Value::String(s) => Weight::parse(s),
        other => Err(err(format!("weight must be a number or \"p/q\" string, got {other}"))),
    }
}

fn usize_of(v: &Value, what: &str) -> Result<usize, SpeciesError> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| err(format!("{what} must be a nonnegative integer")))
}

/// Reads the species schema
/// `{"kind": ..., "weights": {"0":1,"2":1}, "lengths": [..], "k": 2,
///   "catalog": [{"size": m, "block": "edge"|"polygon",
///                "cycle_types": [{"cycles": [..], "weight": w}]}]}`.
pub fn parse_species_json(text: &str) -> Result<Species, SpeciesError> {
    let v: Value = serde_json::from_str(text).map_err(|e| err(e.to_string()))?;
    let kind = v.get("kind").and_then(Value::as_str).ok_or_else(|| err("missing \"kind\""))?;
    let kind = match kind.to_ascii_uppercase().as_str() {
        "SET_WEIGHTED" | "SET" => match v.get("weights") {
            None | Some(Value::Null) => SpeciesKind::SetWeighted(DegreeWeights::Uniform),
            Some(Value::String(s)) if s == "uniform" || s == "all" => {
                SpeciesKind::SetWeighted(DegreeWeights::Uniform)
            }
            Some(Value::Object(map)) => {
                let mut w = BTreeMap::new();
                for (k, val) in map {
                    let d: usize = k.parse().map_err(|_| err(format!("degree key {k:?} is not an integer")))?;
                    w.insert(d, weight_of(val)?);
                }
                SpeciesKind::SetWeighted(DegreeWeights::Finite(w))
            }
            Some(other) => return Err(err(format!("bad weights {other}"))),
        },
        "SEQ_RESTRICTED" | "SEQ" => match v.get("lengths") {
            None | Some(Value::Null) => SpeciesKind::SeqRestricted(LengthSet::All),
            Some(Value::String(s)) if s == "all" => SpeciesKind::SeqRestricted(LengthSet::All),
            Some(Value::Array(a)) => SpeciesKind::SeqRestricted(LengthSet::Finite(
                a.iter().map(|x| usize_of(x, "length")).collect::<Result<_, _>>()?,
            )),
            Some(other) => return Err(err(format!("bad lengths {other}"))),
        },
        "SEQK_SET" => {
            let k = usize_of(v.get("k").ok_or_else(|| err("missing \"k\""))?, "k")?;
            SpeciesKind::SeqKSet { k }
        }
        "SET_DERIVED_BLOCKS" | "SET_BLOCKS" => {
            let cat = v.get("catalog").and_then(Value::as_array).ok_or_else(|| err("missing \"catalog\""))?;
            let mut blocks = Vec::new();
            for b in cat {
                let size = usize_of(b.get("size").ok_or_else(|| err("block without \"size\""))?, "size")?;
                let shape = match b.get("block").and_then(Value::as_str) {
                    None => None,
                    Some("edge") => Some(BlockShape::Edge),
                    Some("polygon") => Some(BlockShape::Polygon),
                    Some(other) => return Err(err(format!("unknown block shape {other:?}"))),
                };
                let cts = b.get("cycle_types").and_then(Value::as_array).ok_or_else(|| err("missing cycle_types"))?;
                let mut cycle_types = Vec::new();
                for ct in cts {
                    let cycles = ct
                        .get("cycles")
                        .and_then(Value::as_array)
                        .ok_or_else(|| err("missing cycles"))?
                        .iter()
                        .map(|x| usize_of(x, "cycle length").map(|c| c as u32))
                        .collect::<Result<Vec<_>, _>>()?;
                    let weight = weight_of(ct.get("weight").ok_or_else(|| err("missing weight"))?)?;
                    cycle_types.push(BlockCycleType { cycles, weight });
                }
                blocks.push(BlockKind { size, shape, cycle_types });
            }
            SpeciesKind::SetDerivedBlocks(BlockCatalog { blocks })
        }
        other => return Err(err(format!("unknown kind {other:?}"))),
    };
    Species::new(kind)
}

impl Species {
    pub fn to_json(&self) -> Value {
        match self.kind() {
            SpeciesKind::SetWeighted(DegreeWeights::Uniform) => json!({"kind": "SET_WEIGHTED", "weights": "uniform"}),
            SpeciesKind::SetWeighted(DegreeWeights::Finite(w)) => {
                let m: serde_json::Map<String, Value> =
                    w.iter().map(|(d, x)| (d.to_string(), Value::String(x.to_string()))).collect();
                json!({"kind": "SET_WEIGHTED", "weights": m})
            }
            SpeciesKind::SeqRestricted(LengthSet::All) => json!({"kind": "SEQ_RESTRICTED", "lengths": "all"}),
            SpeciesKind::SeqRestricted(LengthSet::Finite(l)) => json!({"kind": "SEQ_RESTRICTED", "lengths": l}),
            SpeciesKind::SeqKSet { k } => json!({"kind": "SEQK_SET", "k": k}),
            SpeciesKind::SetDerivedBlocks(cat) => {
                let blocks: Vec<Value> = cat
                    .blocks
                    .iter()
                    .map(|b| {
                        let shape = match b.shape {
                            Some(BlockShape::Edge) => Value::from("edge"),
                            Some(BlockShape::Polygon) => Value::from("polygon"),
                            None => Value::Null,
                        };
                        json!({
                            "size": b.size,
                            "block": shape,
                            "cycle_types": b.cycle_types.iter().map(|ct| json!({
                                "cycles": ct.cycles,
                                "weight": ct.weight.to_string(),
                            })).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                json!({"kind": "SET_DERIVED_BLOCKS", "catalog": blocks})
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_from_json() {
        let s = parse_species_json(r#"{"kind":"SET_WEIGHTED","weights":{"0":1,"2":1}}"#).unwrap();
        assert_eq!(s, Species::set_with_weights(&[(0, Weight::one()), (2, Weight::one())]).unwrap());
    }

    #[test]
    fn round_trip() {
        for s in [
            Species::polya(),
            Species::seq(),
            Species::seqk_set(2).unwrap(),
            Species::blocks(BlockCatalog::cacti(5)).unwrap(),
            Species::set_with_weights(&[(0, Weight::one()), (2, Weight::from_ratio(2, 3))]).unwrap(),
        ] {
            let back = parse_species_json(&s.to_json().to_string()).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn unknown_kind() {
        assert!(parse_species_json(r#"{"kind":"TREE"}"#).is_err());
    }
}
