//! JSON encodings of matrices, free sets, channels and reports.
//!
//! Reals are written with 12 significant digits; `+∞` is the string `"inf"`.

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::applications::{GoldenCandidate, MaxResReport, SeppComparison, WeakConverse};
use crate::error::{Error, Result};
use crate::freesets::{FreeSet, FreeSetKind};
use crate::monotones::Decomposition;
use crate::opalg::{ChannelChoi, CMatrix, DensityMatrix, HermitianOperator, C64};
use crate::transitions::{MorphismCertificate, TransitionVerdict};

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Extended real as JSON: a number, `"inf"`, `"-inf"`, or `null` for NaN.
pub fn num(x: f64) -> Value {
    if x == f64::INFINITY {
        Value::from("inf")
    } else if x == f64::NEG_INFINITY {
        Value::from("-inf")
    } else if x.is_nan() {
        Value::Null
    } else {
        Value::from(round12(x))
    }
}

/// Inverse of [`num`].
pub fn parse_num(v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| Error::Parse(format!("not a real: {n}"))),
        Value::String(s) if s == "inf" => Ok(f64::INFINITY),
        Value::String(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
        other => Err(Error::Parse(format!("expected a real or \"inf\", got {other}"))),
    }
}

/// Same text for a CSV cell.
pub fn num_text(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x.is_nan() {
        String::new()
    } else {
        Value::from(round12(x)).to_string()
    }
}

pub fn matrix_to_json(op: &HermitianOperator) -> Value {
    let d = op.dim();
    let rows: Vec<Value> = (0..d)
        .map(|i| {
            Value::Array(
                (0..d)
                    .map(|j| {
                        let z = op.get(i, j);
                        json!([round12(z.re), round12(z.im)])
                    })
                    .collect(),
            )
        })
        .collect();
    json!({"dim": d, "entries": rows})
}

fn entry(v: &Value) -> Result<C64> {
    match v {
        Value::Array(pair) if pair.len() == 2 => Ok(C64::new(parse_num(&pair[0])?, parse_num(&pair[1])?)),
        Value::Number(_) => Ok(C64::new(parse_num(v)?, 0.0)),
        other => Err(Error::Parse(format!("matrix entry must be [re, im] or a real, got {other}"))),
    }
}

/// Parses `{"dim": d, "entries": [[[re, im], ...], ...]}` (row-major).
pub fn matrix_from_json(v: &Value) -> Result<CMatrix> {
    let obj = v.as_object().ok_or_else(|| Error::Parse("matrix must be a JSON object".into()))?;
    let rows = obj
        .get("entries")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("matrix lacks an \"entries\" array".into()))?;
    let d = match obj.get("dim") {
        Some(x) => x.as_u64().ok_or_else(|| Error::Parse("\"dim\" must be a positive integer".into()))? as usize,
        None => rows.len(),
    };
    if d == 0 || rows.len() != d {
        return Err(Error::Parse(format!("expected {d} rows, found {}", rows.len())));
    }
    let mut m = CMatrix::zeros(d, d);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| Error::Parse(format!("row {i} is not an array")))?;
        if row.len() != d {
            return Err(Error::Parse(format!("row {i} has {} entries, expected {d}", row.len())));
        }
        for (j, x) in row.iter().enumerate() {
            m[(i, j)] = entry(x)?;
        }
    }
    Ok(m)
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).expect("values serialize");
    std::fs::write(path, text + "\n").map_err(|e| Error::Parse(format!("cannot write {}: {e}", path.display())))
}

pub fn state_from_json(v: &Value) -> Result<DensityMatrix> {
    DensityMatrix::from_matrix(matrix_from_json(v)?)
}

pub fn read_state(path: &Path) -> Result<DensityMatrix> {
    state_from_json(&read_json(path)?)
}

pub fn free_set_to_json(free: &FreeSet) -> Value {
    match free.kind() {
        FreeSetKind::Full => json!({"kind": "full"}),
        FreeSetKind::Singleton(g) => json!({"kind": "singleton", "state": matrix_to_json(g)}),
        FreeSetKind::Incoherent => json!({"kind": "incoherent"}),
        FreeSetKind::Ppt { dim_a, dim_b } => json!({"kind": "ppt", "dims": [dim_a, dim_b]}),
    }
}

/// Parses free-set JSON; `dim` sizes the kinds that do not carry their own dimension.
pub fn free_set_from_json(v: &Value, dim: usize) -> Result<FreeSet> {
    let kind = v
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Parse("free set lacks a \"kind\" string".into()))?;
    let free = match kind {
        "full" => FreeSet::full(dim),
        "incoherent" => FreeSet::incoherent(dim),
        "singleton" => FreeSet::singleton(state_from_json(
            v.get("state").ok_or_else(|| Error::Parse("singleton free set lacks \"state\"".into()))?,
        )?),
        "ppt" => {
            let dims = v
                .get("dims")
                .and_then(Value::as_array)
                .filter(|a| a.len() == 2)
                .ok_or_else(|| Error::Parse("ppt free set needs \"dims\": [dA, dB]".into()))?;
            let get = |x: &Value| x.as_u64().map(|n| n as usize).ok_or_else(|| Error::Parse("ppt dims must be integers".into()));
            FreeSet::ppt(get(&dims[0])?, get(&dims[1])?)?
        }
        other => return Err(Error::Parse(format!("unknown free-set kind '{other}'"))),
    };
    if free.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: free.dim(),
            actual: dim,
        });
    }
    Ok(free)
}

/// Parses a command-line free-set spec: `full`, `incoherent`, `ppt:AxB`,
/// `singleton:<state.json>`, or a path to free-set JSON.
pub fn parse_free_set(spec: &str, dim: usize) -> Result<FreeSet> {
    let free = match spec {
        "full" => FreeSet::full(dim),
        "incoherent" => FreeSet::incoherent(dim),
        s if s.starts_with("ppt:") => {
            let (a, b) = s[4..]
                .split_once('x')
                .ok_or_else(|| Error::Parse(format!("expected ppt:AxB, got '{s}'")))?;
            let parse = |t: &str| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad ppt dimension '{t}'")));
            FreeSet::ppt(parse(a)?, parse(b)?)?
        }
        s if s.starts_with("singleton:") => FreeSet::singleton(read_state(Path::new(&s[10..]))?),
        path => return free_set_from_json(&read_json(Path::new(path))?, dim),
    };
    if free.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: free.dim(),
            actual: dim,
        });
    }
    Ok(free)
}

pub fn choi_to_json(channel: &ChannelChoi) -> Value {
    json!({
        "dim_in": channel.dim_in,
        "dim_out": channel.dim_out,
        "choi": matrix_to_json(&channel.choi),
    })
}

pub fn choi_from_json(v: &Value) -> Result<ChannelChoi> {
    let get = |k: &str| {
        v.get(k)
            .and_then(Value::as_u64)
            .map(|n| n as usize)
            .ok_or_else(|| Error::Parse(format!("channel lacks integer \"{k}\"")))
    };
    let choi = HermitianOperator::new(matrix_from_json(
        v.get("choi").ok_or_else(|| Error::Parse("channel lacks \"choi\"".into()))?,
    )?)?;
    ChannelChoi::new(get("dim_in")?, get("dim_out")?, choi)
}

fn opt_matrix(op: Option<&HermitianOperator>) -> Value {
    op.map(matrix_to_json).unwrap_or(Value::Null)
}

fn opt_state(s: Option<&DensityMatrix>) -> Value {
    opt_matrix(s.map(|x| x.as_operator()))
}

pub fn verdict_to_json(v: &TransitionVerdict) -> Value {
    let w = &v.witnesses;
    let quantities: Map<String, Value> = v.quantities.iter().map(|(k, x)| (k.clone(), num(*x))).collect();
    json!({
        "decided_by": v.decided_by.as_str(),
        "lhs": num(v.lhs),
        "rhs": num(v.rhs),
        "eps_total": num(v.eps_total),
        "witnesses": {
            "P_star": opt_matrix(w.p_star.as_ref()),
            "omega_star": opt_state(w.omega_star.as_ref()),
            "sigma_tilde": opt_state(w.sigma_tilde.as_ref()),
            "sigma_tilde_plus": opt_state(w.sigma_tilde_plus.as_ref()),
            "M": num(w.m),
            "phi": opt_state(w.phi.as_ref()),
        },
        "quantities": quantities,
    })
}

pub fn certificate_to_json(c: &MorphismCertificate) -> Value {
    json!({
        "pass": c.pass(),
        "cp_residual": num(c.cp_residual),
        "tp_residual": num(c.tp_residual),
        "error": num(c.error),
        "eps_budget": num(c.eps_budget),
        "preservation": {
            "vertex_certified": c.preservation.vertex_certified,
            "samples_checked": c.preservation.samples_checked,
            "worst_membership_residual": num(c.preservation.worst_membership_residual),
        },
    })
}

pub fn decomposition_to_json(d: &Decomposition) -> Value {
    json!({
        "value": num(d.gff),
        "gff": num(d.gff),
        "dmax_f_to_plus": num(d.dmax_f_to_plus),
        "sigma_plus": matrix_to_json(&d.sigma_plus),
        "sigma_zero": matrix_to_json(&d.sigma_zero),
        "sigma_minus": matrix_to_json(&d.sigma_minus),
    })
}

pub fn weak_converse_to_json(w: &WeakConverse) -> Value {
    json!({
        "applicable": w.applicable,
        "implied_bound_holds": w.implied_bound_holds,
        "impossible": w.impossible(),
        "premise_lhs": num(w.premise_lhs),
        "premise_rhs": num(w.premise_rhs),
        "bound_lhs": num(w.bound_lhs),
        "bound_rhs": num(w.bound_rhs),
    })
}

pub fn max_res_to_json(r: &MaxResReport) -> Value {
    json!({
        "cond_i_holds": r.cond_i_holds,
        "cond_i_residual": num(r.cond_i_residual),
        "cond_i_global": r.cond_i_global,
        "cond_ii_holds": r.cond_ii_holds,
        "cond_ii_residual": num(r.cond_ii_residual),
        "d_min": num(r.d_min),
        "d_max": num(r.d_max),
        "d_max_f": num(r.d_max_f),
        "overlap_spread": num(r.overlap_spread),
        "pool_max_d_max": num(r.pool_max_d_max),
        "pool_max_d_max_f": num(r.pool_max_d_max_f),
        "pool_size": r.pool_size,
        "state": matrix_to_json(&r.state),
    })
}

pub fn sepp_to_json(s: &SeppComparison) -> Value {
    json!({
        "d_min_rho": num(s.d_min_rho),
        "d_max_f_sigma": num(s.d_max_f_sigma),
        "distill_dilute_ok": s.distill_dilute_ok,
        "direct_ok": s.direct_ok,
    })
}

pub fn golden_to_json(g: &GoldenCandidate) -> Value {
    json!({
        "d_min": num(g.d_min),
        "d_max": num(g.d_max),
        "gap": num(g.gap),
        "candidate": matrix_to_json(&g.candidate),
    })
}
