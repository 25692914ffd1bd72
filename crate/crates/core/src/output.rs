//! Versioned JSON documents and fixed-precision number formatting.

use crate::error::{Error, Result};
use crate::freq::certify::Certificate;
use crate::iqc::Trajectory;
use serde_json::ser::Formatter;
use serde_json::{json, Map, Value};
use std::io;

pub const SCHEMA_VERSION: &str = "v1";

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// JSON formatter writing floats with [`fmt_f64`]. Non-finite floats are
/// emitted as `null` by the serializer before reaching it.
#[derive(Default)]
pub struct Precise17(serde_json::ser::PrettyFormatter<'static>);

impl Formatter for Precise17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string(value: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Precise17::default());
    serde::Serialize::serialize(value, &mut ser).expect("serializing a Value to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

pub fn certificate_json(cert: &Certificate) -> Value {
    json!({
        "schema": SCHEMA_VERSION,
        "rho": num(cert.rho),
        "lambda": num(cert.lambda),
        "gamma": cert.gamma.map(num).unwrap_or(Value::Null),
        "kind": cert.kind.as_str(),
        "endpoints": [num(cert.endpoint_values.0), num(cert.endpoint_values.1)],
        "witness": cert.witness.as_ref().map(|w| json!({
            "N_scalar": num(w.n_scalar),
            "epsilon": num(w.epsilon),
        })).unwrap_or(Value::Null),
    })
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| bad(format!("missing field `{key}`")))
}

fn number(obj: &Map<String, Value>, key: &str) -> Result<f64> {
    field(obj, key)?
        .as_f64()
        .ok_or_else(|| bad(format!("`{key}` must be a number")))
}

fn check_schema(obj: &Map<String, Value>) -> Result<()> {
    match field(obj, "schema")?.as_str() {
        Some(SCHEMA_VERSION) => Ok(()),
        _ => Err(bad("`schema` must be \"v1\"")),
    }
}

fn object(v: &Value) -> Result<&Map<String, Value>> {
    v.as_object().ok_or_else(|| bad("expected a JSON object"))
}

/// Validates a certificate object.
pub fn validate_certificate(v: &Value) -> Result<()> {
    let obj = object(v)?;
    check_schema(obj)?;
    number(obj, "rho")?;
    if number(obj, "lambda")? < 0.0 {
        return Err(bad("`lambda` must be nonnegative"));
    }
    match field(obj, "gamma")? {
        Value::Null => {}
        g => {
            if g.as_f64().is_none_or(|g| g < 0.0) {
                return Err(bad("`gamma` must be null or a nonnegative number"));
            }
        }
    }
    let kind = field(obj, "kind")?.as_str().unwrap_or("");
    if !["sector-noiseless", "sector-noisy", "off-by-one-noisy"].contains(&kind) {
        return Err(bad(format!("unknown certificate kind `{kind}`")));
    }
    let ends = field(obj, "endpoints")?
        .as_array()
        .ok_or_else(|| bad("`endpoints` must be an array"))?;
    if ends.len() != 2 || ends.iter().any(|e| !e.is_number()) {
        return Err(bad("`endpoints` must hold two numbers"));
    }
    let w = object(field(obj, "witness")?)?;
    number(w, "N_scalar")?;
    number(w, "epsilon")?;
    Ok(())
}

/// Validates any document emitted by the command-line tool.
pub fn validate_document(v: &Value) -> Result<()> {
    let obj = object(v)?;
    check_schema(obj)?;
    if obj.contains_key("kind") {
        return validate_certificate(v);
    }
    let mode = field(obj, "mode")?.as_str().unwrap_or("");
    match mode {
        "optimize" => {
            number(obj, "rho")?;
            field(obj, "divergent")?
                .as_bool()
                .ok_or_else(|| bad("`divergent` must be a boolean"))?;
            validate_certificate(field(obj, "certificate")?)
        }
        "decide" => {
            number(obj, "rho")?;
            let certified = field(obj, "certified")?
                .as_bool()
                .ok_or_else(|| bad("`certified` must be a boolean"))?;
            match (certified, field(obj, "certificate")?) {
                (true, c) => validate_certificate(c),
                (false, Value::Null) => Ok(()),
                (false, _) => Err(bad("uncertified decisions carry a null certificate")),
            }
        }
        "simulate" => {
            number(obj, "seed")?;
            let rate = field(obj, "empirical_rate")?;
            if !(rate.is_number() || rate.is_null()) {
                return Err(bad("`empirical_rate` must be a number or null"));
            }
            number(obj, "certified_rate")?;
            field(obj, "sound")?
                .as_bool()
                .ok_or_else(|| bad("`sound` must be a boolean"))?;
            Ok(())
        }
        "verify" => {
            field(obj, "passed")?
                .as_bool()
                .ok_or_else(|| bad("`passed` must be a boolean"))?;
            let stages = field(obj, "stages")?
                .as_array()
                .ok_or_else(|| bad("`stages` must be an array"))?;
            for s in stages {
                let s = object(s)?;
                field(s, "name")?.as_str().ok_or_else(|| bad("stage `name` must be a string"))?;
                field(s, "passed")?.as_bool().ok_or_else(|| bad("stage `passed` must be a boolean"))?;
            }
            Ok(())
        }
        other => Err(bad(format!("unknown mode `{other}`"))),
    }
}

/// Header and rows of the trajectory table: `k`, state components,
/// `|x - x⋆|`, `|∇f|`, `|e|` and the off-by-one state components.
pub fn trajectory_table(traj: &Trajectory) -> (Vec<String>, Vec<Vec<String>>) {
    let n = traj.dim();
    let mut header = vec!["k".to_string()];
    header.extend((0..n).map(|i| format!("x{i}")));
    header.extend(["dist".into(), "grad_norm".into(), "noise_norm".into()]);
    header.extend((0..n).map(|i| format!("v{i}")));
    let rows = (0..traj.len())
        .map(|k| {
            let mut row = vec![k.to_string()];
            row.extend(traj.x[k].iter().map(|v| fmt_f64(*v)));
            row.push(fmt_f64(traj.distance(k)));
            row.push(fmt_f64(traj.u[k].norm()));
            row.push(fmt_f64(traj.e.as_ref().map_or(0.0, |e| e[k].norm())));
            match &traj.v {
                Some(v) => row.extend(v[k].iter().map(|x| fmt_f64(*x))),
                None => row.extend((0..n).map(|_| String::new())),
            }
            row
        })
        .collect();
    (header, rows)
}
