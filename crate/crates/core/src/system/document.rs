//! JSON input document for systems.
//!
//! ```json
//! { "dimension": 2,
//!   "points": [ { "location": {"re": "0", "im": "0"},
//!                 "tail": [ {"order": -1, "matrix": [["1/2", "1"], ["0", "-1/2"]]} ] } ],
//!   "polynomial": [] }
//! ```
//!
//! A point may use the location `"infinity-check-only"`; its tail (in the
//! chart `w = 1/z`) is then checked against the finite data and it can carry
//! `asserted_exponents`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Location, SingularPoint, SystemSpec};
use crate::error::{Error, Result};
use crate::numkernel::{MatrixC, Scalar};

pub const INFINITY_MARKER: &str = "infinity-check-only";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    dimension: usize,
    points: Vec<PointDoc>,
    #[serde(default)]
    polynomial: Vec<TermDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointDoc {
    location: LocationDoc,
    tail: Vec<TermDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    asserted_exponents: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LocationDoc {
    Finite { re: String, im: String },
    Marker(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDoc {
    order: i64,
    matrix: Vec<Vec<String>>,
}

fn parse_matrix(rows: &[Vec<String>], p: usize, what: &str) -> Result<MatrixC> {
    if rows.len() != p || rows.iter().any(|r| r.len() != p) {
        return Err(Error::DimensionMismatch(format!("{} is not {}x{}", what, p, p)));
    }
    let entries = rows.iter().map(|r| r.iter().map(|e| Scalar::parse(e)).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?;
    MatrixC::from_rows(entries)
}

fn print_matrix(m: &MatrixC) -> Vec<Vec<String>> {
    (0..m.rows()).map(|i| m.row(i).iter().map(|x| x.to_string()).collect()).collect()
}

/// Parses and validates a system document.
pub fn parse_system(text: &str) -> Result<SystemSpec> {
    let doc: Document = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    let p = doc.dimension;
    if p == 0 {
        return Err(Error::Schema("dimension must be positive".into()));
    }
    let mut points = Vec::with_capacity(doc.points.len());
    for (idx, pd) in doc.points.iter().enumerate() {
        let location = match &pd.location {
            LocationDoc::Finite { re, im } => {
                let re = Scalar::parse(re)?;
                let im = Scalar::parse(im)?;
                if !re.im().is_zero() || !im.im().is_zero() {
                    return Err(Error::Schema(format!("point {}: location parts must be real", idx)));
                }
                Location::Finite(&re + &(&im * &Scalar::gauss(0, 1, 1, 1)))
            }
            LocationDoc::Marker(s) if s == INFINITY_MARKER => Location::Infinity,
            LocationDoc::Marker(s) => return Err(Error::Schema(format!("point {}: unknown location {:?}", idx, s))),
        };
        if pd.tail.is_empty() {
            return Err(Error::Schema(format!("point {}: empty tail", idx)));
        }
        let mut by_order = BTreeMap::new();
        for t in &pd.tail {
            if t.order >= 0 {
                return Err(Error::Schema(format!("point {}: tail order {} is not negative", idx, t.order)));
            }
            let m = parse_matrix(&t.matrix, p, &format!("point {} order {}", idx, t.order))?;
            if by_order.insert(-t.order, m).is_some() {
                return Err(Error::Schema(format!("point {}: order {} given twice", idx, t.order)));
            }
        }
        // Missing intermediate orders are zero.
        let top = *by_order.keys().next_back().expect("non-empty") as usize;
        let tail: Vec<MatrixC> = (1..=top).map(|k| by_order.remove(&(k as i64)).unwrap_or_else(|| MatrixC::zeros(p, p))).collect();
        if tail.last().expect("non-empty").is_zero() {
            return Err(Error::ZeroLeadingMatrix(idx));
        }
        let mut pt = SingularPoint::new(location, tail).map_err(|_| Error::ZeroLeadingMatrix(idx))?;
        if let Some(ex) = &pd.asserted_exponents {
            pt.asserted_exponents = Some(ex.iter().map(|e| Scalar::parse(e)).collect::<Result<_>>()?);
        }
        points.push(pt);
    }
    let mut poly: BTreeMap<usize, MatrixC> = BTreeMap::new();
    for t in &doc.polynomial {
        if t.order < 0 {
            return Err(Error::Schema(format!("polynomial order {} is negative", t.order)));
        }
        let m = parse_matrix(&t.matrix, p, &format!("polynomial order {}", t.order))?;
        if poly.insert(t.order as usize, m).is_some() {
            return Err(Error::Schema(format!("polynomial order {} given twice", t.order)));
        }
    }
    let polynomial = match poly.keys().next_back() {
        Some(&top) => (0..=top).map(|k| poly.remove(&k).unwrap_or_else(|| MatrixC::zeros(p, p))).collect(),
        None => vec![],
    };
    SystemSpec::new(p, points, polynomial)
}

/// Serialises a system to the input document format.
pub fn print_system(spec: &SystemSpec) -> String {
    let point_doc = |pt: &SingularPoint| PointDoc {
        location: match &pt.location {
            Location::Finite(a) => LocationDoc::Finite { re: a.re().to_string(), im: a.im().to_string() },
            Location::Infinity => LocationDoc::Marker(INFINITY_MARKER.into()),
        },
        tail: pt.tail().iter().enumerate().rev().map(|(k, m)| TermDoc { order: -(k as i64) - 1, matrix: print_matrix(m) }).collect(),
        asserted_exponents: pt.asserted_exponents.as_ref().map(|v| v.iter().map(|x| x.to_string()).collect()),
    };
    let mut points: Vec<PointDoc> = spec.finite_points().iter().map(point_doc).collect();
    if let Some(inf) = spec.declared_infinity() {
        points.push(point_doc(inf));
    }
    let doc = Document {
        dimension: spec.dimension(),
        points,
        polynomial: spec.polynomial().iter().enumerate().map(|(k, m)| TermDoc { order: k as i64, matrix: print_matrix(m) }).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serialisable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::PointRef;

    const FUCHSIAN: &str = r#"{
        "dimension": 2,
        "points": [
            {"location": {"re": "0", "im": "0"}, "tail": [{"order": -1, "matrix": [["1/2", "1"], ["0", "-1/2"]]}]},
            {"location": {"re": "1", "im": "0"}, "tail": [{"order": -1, "matrix": [["-1/2", "-1"], ["0", "1/2"]]}]}
        ]
    }"#;

    #[test]
    fn parses_a_fuchsian_document() {
        let s = parse_system(FUCHSIAN).unwrap();
        assert_eq!(s.dimension(), 2);
        assert!(s.is_exact());
        assert_eq!(s.singular_points(), vec![PointRef::Finite(0), PointRef::Finite(1)]);
    }

    #[test]
    fn round_trip_examples() {
        let irregular = r#"{"dimension": 2, "points": [{"location": {"re": "0", "im": "0"},
            "tail": [{"order": -2, "matrix": [["1", "0"], ["0", "2"]]}, {"order": -1, "matrix": [["1/10 i", "0"], ["0", "-1/10 i"]]}]}],
            "polynomial": [{"order": 0, "matrix": [["1", "0"], ["0", "3"]]}]}"#;
        let gap = r#"{"dimension": 2, "points": [{"location": {"re": "1/3", "im": "-2"},
            "tail": [{"order": -3, "matrix": [["0", "1"], ["0", "0"]]}, {"order": -1, "matrix": [["1.5e-3", "0"], ["0", "0"]]}]}]}"#;
        for text in [FUCHSIAN, irregular, gap] {
            let s = parse_system(text).unwrap();
            let again = parse_system(&print_system(&s)).unwrap();
            assert_eq!(again, s);
        }
        let gap = parse_system(gap).unwrap();
        assert!(!gap.is_exact());
        assert_eq!(gap.finite_points()[0].tail().len(), 3);
        assert!(gap.finite_points()[0].tail()[1].is_zero());
    }

    #[test]
    fn distinct_errors() {
        assert!(matches!(parse_system("{"), Err(Error::Schema(_))));
        assert!(matches!(parse_system(r#"{"dimension": 2, "points": [], "extra": 1}"#), Err(Error::Schema(_))));
        let dup = r#"{"dimension": 1, "points": [
            {"location": {"re": "0", "im": "0"}, "tail": [{"order": -1, "matrix": [["1"]]}]},
            {"location": {"re": "0", "im": "0"}, "tail": [{"order": -1, "matrix": [["2"]]}]}]}"#;
        assert!(matches!(parse_system(dup), Err(Error::DuplicatePoint(_))));
        let zero = r#"{"dimension": 1, "points": [{"location": {"re": "0", "im": "0"}, "tail": [{"order": -2, "matrix": [["0"]]}, {"order": -1, "matrix": [["1"]]}]}]}"#;
        assert!(matches!(parse_system(zero), Err(Error::ZeroLeadingMatrix(0))));
        let dim = r#"{"dimension": 2, "points": [{"location": {"re": "0", "im": "0"}, "tail": [{"order": -1, "matrix": [["1"]]}]}]}"#;
        assert!(matches!(parse_system(dim), Err(Error::DimensionMismatch(_))));
        let entry = r#"{"dimension": 1, "points": [{"location": {"re": "0", "im": "0"}, "tail": [{"order": -1, "matrix": [["x"]]}]}]}"#;
        assert!(matches!(parse_system(entry), Err(Error::BadEntry { .. })));
    }

    #[test]
    fn declared_infinity_is_checked() {
        let ok = r#"{"dimension": 1, "points": [
            {"location": {"re": "0", "im": "0"}, "tail": [{"order": -1, "matrix": [["1"]]}]},
            {"location": "infinity-check-only", "tail": [{"order": -1, "matrix": [["-1"]]}], "asserted_exponents": ["-1"]}]}"#;
        let s = parse_system(ok).unwrap();
        assert_eq!(s.asserted_exponents(PointRef::Infinity).unwrap(), &[Scalar::int(-1)]);
        let bad = ok.replace(r#"[["-1"]]}]"#, r#"[["2"]]}]"#);
        assert!(matches!(parse_system(&bad), Err(Error::InfinityMismatch(_))));
    }
}
