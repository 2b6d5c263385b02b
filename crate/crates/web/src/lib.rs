//! WebAssembly bindings for the browser demo. Each export returns a JSON
//! string; errors come back as JS exceptions carrying the message.

use num::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use liftpir::cli::{decimal, rate_row};
use liftpir::exec::{decode, lifted_message_len, run, schedule_from_plan, LiftedBuilder};
use liftpir::lift::lifted_rate;
use liftpir::plan::SchemeBuilder;
use liftpir::{Database, FieldSpec, StorageConfig, SymbolicMatrix};

/// Symbolic matrix as aligned text plus entry counts and lineage.
pub fn matrix_view(n: usize, r: usize, m: usize) -> Result<Value, String> {
    if m > 7 || n > 12 {
        return Err("keep N <= 12 and M <= 7 in the browser".into());
    }
    let s = SymbolicMatrix::for_messages(n, r, m).map_err(|e| e.to_string())?;
    let counts: Vec<usize> = (1..=m).map(|k| s.count_entries(k).unwrap_or(0)).collect();
    Ok(json!({
        "text": s.render_text(),
        "rows": s.rows(),
        "counts": counts,
        "groups": s.groups.len(),
    }))
}

/// Rates for `M = 1..=m_max` at fixed `(N, K, T)`.
pub fn rate_curves(n: usize, k: usize, t: usize, m_max: usize) -> Result<Value, String> {
    if m_max == 0 || m_max > 12 {
        return Err("M range must be 1..=12".into());
    }
    let mut rows = Vec::new();
    for m in 1..=m_max {
        let row = rate_row(n, k, t, m).map_err(|e| e.to_string())?;
        let cell = |x: &num::BigRational| {
            json!({ "exact": x.to_string(), "value": x.to_f64(), "decimal": decimal(x) })
        };
        rows.push(json!({
            "m": m,
            "one_shot": cell(&row.one_shot),
            "refined": cell(&row.refined),
            "lifted": cell(&row.lifted),
            "lifted_coded": cell(&row.lifted_coded),
            "capacity": row.capacity.as_ref().map(cell),
            "note": row.note,
        }));
    }
    Ok(json!({ "n": n, "k": k, "t": t, "r": k + t - 1, "rows": rows }))
}

/// One full retrieval against simulated servers.
pub fn retrieval(n: usize, k: usize, t: usize, m: usize, desired: usize, seed: u64) -> Result<Value, String> {
    let err = |e: liftpir::PirError| e.to_string();
    if m > 4 || n > 6 {
        return Err("keep N <= 6 and M <= 4 in the browser".into());
    }
    let field = FieldSpec::new(65537).map_err(err)?;
    let cfg = StorageConfig::new(n, k, t, m, lifted_message_len(n, k, m), field).map_err(err)?;
    let builder = LiftedBuilder::new(cfg.clone()).map_err(err)?;
    let db = Database::random(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(err)?;
    let plan = builder.plan(desired).map_err(err)?;
    let schedule = schedule_from_plan(&plan, seed ^ 0x9e37_79b9).map_err(err)?;
    let transcript = run(&schedule, &db).map_err(err)?;
    let message = decode(&transcript, &schedule).map_err(err)?;
    // what each server can see: how many queries touch each message subset
    let servers: Vec<Value> = schedule
        .slot_meta
        .iter()
        .enumerate()
        .map(|(c, metas)| {
            let mut tags: Vec<String> = metas
                .iter()
                .map(|s| {
                    let names: Vec<String> = s.subset.iter().map(|j| format!("W{j}")).collect();
                    names.join("+")
                })
                .collect();
            tags.sort();
            json!({ "server": c + 1, "queries": metas.len(), "tags": tags })
        })
        .collect();
    let rate = num::BigRational::new((cfg.l as i64).into(), (transcript.download_count as i64).into());
    let expected = lifted_rate(n, builder.r(), m).map_err(err)?;
    let preview: Vec<u64> = message.symbols.iter().take(8).copied().collect();
    Ok(json!({
        "l": cfg.l,
        "rounds": builder.rounds(),
        "download_count": transcript.download_count,
        "rate": rate.to_string(),
        "expected_rate": expected.to_string(),
        "correct": message == *db.message(desired),
        "preview": preview,
        "servers": servers,
    }))
}

fn js(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn render_matrix(n: usize, r: usize, m: usize) -> Result<String, JsValue> {
    js(matrix_view(n, r, m))
}

#[wasm_bindgen]
pub fn rates(n: usize, k: usize, t: usize, m_max: usize) -> Result<String, JsValue> {
    js(rate_curves(n, k, t, m_max))
}

#[wasm_bindgen]
pub fn simulate_retrieval(n: usize, k: usize, t: usize, m: usize, desired: usize, seed: u32) -> Result<String, JsValue> {
    js(retrieval(n, k, t, m, desired, seed as u64))
}
