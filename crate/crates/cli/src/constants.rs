//! `constants` queries: `key=value` arguments in, schema-versioned JSON out.

use std::collections::BTreeMap;

use fracns::estimates::{self, ConstantsLedger, LocalRadiusInputs};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

pub const SCHEMA: &str = "fracns.constants.v1";

pub const QUERIES: [&str; 8] = [
    "gamma",
    "c0",
    "c1",
    "epsilon54",
    "epsilon-local",
    "leray-h1",
    "leray-halpha",
    "tstar",
];

const LEDGER_KEYS: [&str; 4] = ["c_bar", "d_bar", "c2_lemma", "c1_k"];

fn required(query: &str) -> &'static [&'static str] {
    match query {
        "gamma" | "c0" => &["s", "beta"],
        "c1" => &[],
        "epsilon54" => &["m", "delta"],
        "epsilon-local" => &["s", "alpha", "beta", "delta", "t", "norm_s1", "norm_high"],
        "leray-h1" => &["grad_norm", "alpha"],
        "leray-halpha" => &["halpha_norm", "alpha"],
        "tstar" => &["m", "alpha"],
        _ => &[],
    }
}

fn optional(query: &str) -> &'static [&'static str] {
    match query {
        "c1" => &["k"],
        _ => &[],
    }
}

#[derive(Debug, Serialize)]
pub struct ConstantsOutput {
    pub schema: &'static str,
    pub query: String,
    pub inputs: BTreeMap<String, f64>,
    pub ledger: ConstantsLedger,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch: Option<String>,
    pub flags: BTreeMap<String, Value>,
}

fn parse_args(query: &str, args: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    let mut map = BTreeMap::new();
    for arg in args {
        let (k, v) = arg
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected key=value, got {arg:?}")))?;
        let key = k.trim().to_ascii_lowercase();
        let allowed = required(query).contains(&key.as_str())
            || optional(query).contains(&key.as_str())
            || LEDGER_KEYS.contains(&key.as_str());
        if !allowed {
            return Err(CliError::Usage(format!("{query} does not take {k:?}")));
        }
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{k} = {v:?} is not a number")))?;
        if map.insert(key, value).is_some() {
            return Err(CliError::Usage(format!("{k} given twice")));
        }
    }
    for key in required(query) {
        if !map.contains_key(*key) {
            return Err(CliError::Usage(format!("{query} needs {key}=<value>")));
        }
    }
    Ok(map)
}

fn apply_ledger(base: ConstantsLedger, args: &BTreeMap<String, f64>) -> Result<ConstantsLedger, CliError> {
    let mut l = base;
    if let Some(&v) = args.get("c_bar") {
        l.c_bar = v;
    }
    if let Some(&v) = args.get("d_bar") {
        l.d_bar = v;
    }
    if let Some(&v) = args.get("c2_lemma") {
        l.c2_lemma = v;
    }
    if let Some(&v) = args.get("c1_k") {
        l.c1_k = Some(v);
    }
    l.validate()?;
    Ok(l)
}

fn branch_name<T: Serialize>(b: &T) -> Option<String> {
    serde_json::to_value(b).ok().and_then(|v| v.as_str().map(str::to_owned))
}

pub fn evaluate(query: &str, args: &[String], base: ConstantsLedger) -> Result<ConstantsOutput, CliError> {
    if !QUERIES.contains(&query) {
        return Err(CliError::Usage(format!(
            "unknown constant {query:?}; expected one of {}",
            QUERIES.join(", ")
        )));
    }
    let inputs = parse_args(query, args)?;
    let ledger = apply_ledger(base, &inputs)?;
    let get = |k: &str| inputs[k];
    let mut flags = BTreeMap::new();
    let mut branch = None;
    let value = match query {
        "gamma" => estimates::gamma_exponent(get("s"), get("beta"))?,
        "c0" => {
            let c = estimates::constant_c0(get("s"), get("beta"), &ledger)?;
            branch = branch_name(&c.branch);
            flags.insert("cap".into(), json!(c.cap));
            flags.insert("within_cap".into(), json!(c.within_cap));
            c.value
        }
        "c1" => match inputs.get("k") {
            Some(&k) => {
                if !(k >= 0.0 && k.fract() == 0.0 && k <= u32::MAX as f64) {
                    return Err(CliError::Usage(format!("k must be a nonnegative integer, got {k}")));
                }
                estimates::constant_c1_k(k as u32, &ledger)?
            }
            None => estimates::constant_c1(&ledger),
        },
        "epsilon54" => {
            let r = estimates::epsilon_54(get("m"), get("delta"), &ledger)?;
            branch = branch_name(&r.branch);
            flags.insert("log10_value".into(), json!(r.log10_value));
            flags.insert("underflow".into(), json!(r.underflow));
            flags.insert("overflow".into(), json!(r.overflow));
            r.value
        }
        "epsilon-local" => estimates::epsilon_local(
            &LocalRadiusInputs {
                s: get("s"),
                alpha: get("alpha"),
                beta: get("beta"),
                delta: get("delta"),
                horizon: get("t"),
                norm_s1: get("norm_s1"),
                norm_high: get("norm_high"),
            },
            &ledger,
        )?,
        "leray-h1" => estimates::leray_time_h1(get("grad_norm"), get("alpha"), &ledger)?,
        "leray-halpha" => {
            flags.insert(
                "constant".into(),
                json!(estimates::leray_halpha_constant(get("alpha"), &ledger)),
            );
            estimates::leray_time_halpha(get("halpha_norm"), get("alpha"), &ledger)?
        }
        "tstar" => {
            let t = estimates::tstar(get("m"), get("alpha"), &ledger)?;
            branch = branch_name(&t.branch);
            flags.insert("cap".into(), json!(t.cap));
            flags.insert("cap_below_threshold".into(), json!(t.cap_below_threshold));
            t.threshold
        }
        _ => unreachable!("checked against QUERIES"),
    };
    Ok(ConstantsOutput {
        schema: SCHEMA,
        query: query.to_string(),
        inputs,
        ledger,
        value,
        branch,
        flags,
    })
}
