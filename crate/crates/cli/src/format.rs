//! On-disk JSON documents: states, POMs, Hermitian matrices and manifests.

use num_complex::Complex64;
use pomalg::{ComplexMatrix, GeneralPom, Ket, MaximalPom, Observable, PomElement, State, Tolerance};
use pomalg::pom::MaximalElement;
use serde_json::{json, Map, Value};
use thiserror::Error;

/// Schema violation, located by a JSON pointer into the offending document.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("{pointer}: {message}")]
pub struct FormatError {
    pub pointer: String,
    pub message: String,
}

impl FormatError {
    fn new(pointer: &str, message: impl Into<String>) -> Self {
        let pointer = if pointer.is_empty() { "/".to_string() } else { pointer.to_string() };
        Self { pointer, message: message.into() }
    }
}

type FResult<T> = Result<T, FormatError>;

pub const FORMAT_VERSION: &str = "1";

/// Rounds to 12 significant digits; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    json!(if r == 0.0 { 0.0 } else { r })
}

pub fn complex(z: Complex64) -> Value {
    json!([num(z.re), num(z.im)])
}

pub fn vector(v: &[Complex64]) -> Value {
    Value::Array(v.iter().map(|z| complex(*z)).collect())
}

pub fn matrix(m: &ComplexMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex(m[(i, j)])).collect()))
            .collect(),
    )
}

pub fn reals(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| num(*x)).collect())
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str, at: &str) -> FResult<&'a Value> {
    obj.get(name).ok_or_else(|| FormatError::new(at, format!("missing field `{name}`")))
}

fn object<'a>(v: &'a Value, at: &str) -> FResult<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| FormatError::new(at, "expected an object"))
}

fn array<'a>(v: &'a Value, at: &str) -> FResult<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| FormatError::new(at, "expected an array"))
}

fn real(v: &Value, at: &str) -> FResult<f64> {
    v.as_f64().ok_or_else(|| FormatError::new(at, "expected a number"))
}

fn dim(obj: &Map<String, Value>, at: &str) -> FResult<usize> {
    let ptr = format!("{at}/dim");
    let d = field(obj, "dim", at)?
        .as_u64()
        .ok_or_else(|| FormatError::new(&ptr, "expected a positive integer"))?;
    if d == 0 {
        return Err(FormatError::new(&ptr, "dimension must be positive"));
    }
    Ok(d as usize)
}

/// `[re, im]`.
pub fn parse_complex(v: &Value, at: &str) -> FResult<Complex64> {
    let pair = array(v, at)?;
    if pair.len() != 2 {
        return Err(FormatError::new(at, format!("expected [re, im], found {} entries", pair.len())));
    }
    Ok(Complex64::new(real(&pair[0], &format!("{at}/0"))?, real(&pair[1], &format!("{at}/1"))?))
}

pub fn parse_vector(v: &Value, len: usize, at: &str) -> FResult<Vec<Complex64>> {
    let items = array(v, at)?;
    if items.len() != len {
        return Err(FormatError::new(at, format!("expected {len} entries, found {}", items.len())));
    }
    items
        .iter()
        .enumerate()
        .map(|(i, z)| parse_complex(z, &format!("{at}/{i}")))
        .collect()
}

pub fn parse_matrix(v: &Value, d: usize, at: &str) -> FResult<ComplexMatrix> {
    let rows = array(v, at)?;
    if rows.len() != d {
        return Err(FormatError::new(at, format!("expected {d} rows, found {}", rows.len())));
    }
    let mut m = ComplexMatrix::zeros(d, d);
    for (i, row) in rows.iter().enumerate() {
        let entries = parse_vector(row, d, &format!("{at}/{i}"))?;
        for (j, z) in entries.into_iter().enumerate() {
            m[(i, j)] = z;
        }
    }
    Ok(m)
}

/// `{"dim": d, "amplitudes": [[re, im], ...]}`; the norm is checked against
/// `tol.eps_eq`.
pub fn parse_state(v: &Value, tol: &Tolerance) -> FResult<State> {
    let obj = object(v, "")?;
    let d = dim(obj, "")?;
    let amps = parse_vector(field(obj, "amplitudes", "")?, d, "/amplitudes")?;
    State::new(Ket::from_slice(&amps), tol).map_err(|e| FormatError::new("/amplitudes", e.to_string()))
}

pub fn emit_state(psi: &State) -> Value {
    json!({
        "dim": psi.dim(),
        "amplitudes": vector(psi.vector().as_slice()),
    })
}

/// `{"dim": d, "matrix": [[[re, im], ...], ...]}`.
pub fn parse_hermitian(v: &Value) -> FResult<ComplexMatrix> {
    let obj = object(v, "")?;
    let d = dim(obj, "")?;
    parse_matrix(field(obj, "matrix", "")?, d, "/matrix")
}

pub fn emit_hermitian(m: &ComplexMatrix) -> Value {
    json!({ "dim": m.nrows(), "matrix": matrix(m) })
}

/// A POM document in either encoding.
#[derive(Debug, Clone)]
pub enum PomDoc {
    General(GeneralPom),
    Maximal(MaximalPom),
}

impl PomDoc {
    pub fn kind(&self) -> &'static str {
        match self {
            PomDoc::General(_) => "general",
            PomDoc::Maximal(_) => "maximal",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            PomDoc::General(p) => p.dim(),
            PomDoc::Maximal(p) => p.dim(),
        }
    }
}

pub fn parse_pom(v: &Value) -> FResult<PomDoc> {
    let obj = object(v, "")?;
    let d = dim(obj, "")?;
    let kind = field(obj, "kind", "")?
        .as_str()
        .ok_or_else(|| FormatError::new("/kind", "expected a string"))?;
    let elements = array(field(obj, "elements", "")?, "/elements")?;
    if elements.is_empty() {
        return Err(FormatError::new("/elements", "a POM needs at least one element"));
    }
    let outcome = |e: &Map<String, Value>, at: &str| -> FResult<f64> {
        let x = real(field(e, "outcome", at)?, &format!("{at}/outcome"))?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(FormatError::new(&format!("{at}/outcome"), "outcome must be finite"))
        }
    };
    match kind {
        "general" => {
            let mut out = Vec::with_capacity(elements.len());
            for (i, e) in elements.iter().enumerate() {
                let at = format!("/elements/{i}");
                let e = object(e, &at)?;
                out.push(PomElement {
                    outcome: outcome(e, &at)?,
                    operator: parse_matrix(field(e, "matrix", &at)?, d, &format!("{at}/matrix"))?,
                });
            }
            GeneralPom::new(d, out)
                .map(PomDoc::General)
                .map_err(|e| FormatError::new("/elements", e.to_string()))
        }
        "maximal" => {
            let mut out = Vec::with_capacity(elements.len());
            for (i, e) in elements.iter().enumerate() {
                let at = format!("/elements/{i}");
                let e = object(e, &at)?;
                let ket = parse_vector(field(e, "ket", &at)?, d, &format!("{at}/ket"))?;
                out.push(MaximalElement { outcome: outcome(e, &at)?, ket: Ket::from_slice(&ket) });
            }
            MaximalPom::new(d, out)
                .map(PomDoc::Maximal)
                .map_err(|e| FormatError::new("/elements", e.to_string()))
        }
        other => Err(FormatError::new("/kind", format!("unknown kind `{other}` (expected general or maximal)"))),
    }
}

pub fn emit_general(p: &GeneralPom) -> Value {
    json!({
        "dim": p.dim(),
        "kind": "general",
        "elements": p.elements().iter().map(|e| json!({
            "outcome": num(e.outcome),
            "matrix": matrix(&e.operator),
        })).collect::<Vec<_>>(),
    })
}

pub fn emit_maximal(p: &MaximalPom) -> Value {
    json!({
        "dim": p.dim(),
        "kind": "maximal",
        "elements": p.elements().iter().map(|e| json!({
            "outcome": num(e.outcome),
            "ket": vector(e.ket.amplitudes().as_slice()),
        })).collect::<Vec<_>>(),
    })
}

pub fn emit_pom(p: &PomDoc) -> Value {
    match p {
        PomDoc::General(g) => emit_general(g),
        PomDoc::Maximal(m) => emit_maximal(m),
    }
}

/// Run configuration loaded with `--manifest`.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub format_version: String,
    pub tolerance: Tolerance,
    pub seed: Option<u64>,
}

pub fn parse_manifest(v: &Value) -> FResult<Manifest> {
    let obj = object(v, "")?;
    let version = field(obj, "format_version", "")?
        .as_str()
        .ok_or_else(|| FormatError::new("/format_version", "expected a string"))?;
    if version != FORMAT_VERSION {
        return Err(FormatError::new(
            "/format_version",
            format!("unsupported format version `{version}` (expected {FORMAT_VERSION})"),
        ));
    }
    let mut tolerance = Tolerance::default();
    if let Some(t) = obj.get("tolerance") {
        let t = object(t, "/tolerance")?;
        for (key, value) in t {
            let at = format!("/tolerance/{key}");
            let x = real(value, &at)?;
            if !(x.is_finite() && x >= 0.0) {
                return Err(FormatError::new(&at, "tolerance must be a non-negative number"));
            }
            match key.as_str() {
                "eps_pos" => tolerance.eps_pos = x,
                "eps_eq" => tolerance.eps_eq = x,
                "eps_rank" => tolerance.eps_rank = x,
                "eps_match" => tolerance.eps_match = x,
                _ => return Err(FormatError::new(&at, "unknown tolerance")),
            }
        }
    }
    let seed = match obj.get("seed") {
        None | Some(Value::Null) => None,
        Some(s) => Some(s.as_u64().ok_or_else(|| FormatError::new("/seed", "expected a non-negative integer"))?),
    };
    Ok(Manifest { format_version: version.to_string(), tolerance, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(0.1137731282349876), json!(0.113773128235));
        assert_eq!(num(-0.0), json!(0.0));
        assert_eq!(num(f64::NAN), Value::Null);
        assert_eq!(num(1.0), json!(1.0));
    }

    #[test]
    fn pointer_of_nested_error() {
        let doc = json!({"dim": 2, "kind": "maximal", "elements": [
            {"outcome": 0, "ket": [[1, 0], [0, 0]]},
            {"outcome": 1, "ket": [[0, 0], [1]]},
        ]});
        let err = parse_pom(&doc).unwrap_err();
        assert_eq!(err.pointer, "/elements/1/ket/1");
    }

    #[test]
    fn manifest_rejects_unknown_version() {
        let err = parse_manifest(&json!({"format_version": "9"})).unwrap_err();
        assert_eq!(err.pointer, "/format_version");
        let m = parse_manifest(&json!({"format_version": "1", "tolerance": {"eps_eq": 1e-6}, "seed": 4})).unwrap();
        assert_eq!(m.tolerance.eps_eq, 1e-6);
        assert_eq!(m.seed, Some(4));
    }
}
