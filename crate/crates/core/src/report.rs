//! JSON and CSV renderings of module results.
//!
//! Exact rationals become `{"num", "den", "decimal"}` objects with a
//! 30-significant-digit decimal; floats are strings with 17 significant
//! digits. Objects use sorted keys, so equal inputs give identical bytes.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Map, Value};

use crate::classifier::{Counterexample, EmpiricalData, Verdict};
use crate::error::Error;
use crate::exact::{decimal_sig, rational_string};
use crate::recursion::{RecursionTable, SeriesTerms, WeightTable};
use crate::sandpile::{ChainStats, GreenEntry};
use crate::simulator::SimEstimate;
use crate::solver::{SiteValues, SolveResult};

pub fn rational(r: &BigRational) -> Value {
    json!({
        "num": r.numer().to_string(),
        "den": r.denom().to_string(),
        "decimal": decimal_sig(r, 30),
    })
}

pub fn rationals(v: &[BigRational]) -> Value {
    Value::Array(v.iter().map(rational).collect())
}

pub fn integer(n: &BigInt) -> Value {
    Value::String(n.to_string())
}

pub fn integers(v: &[BigInt]) -> Value {
    Value::Array(v.iter().map(integer).collect())
}

/// 17 significant digits.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn float_value(x: f64) -> Value {
    Value::String(float(x))
}

pub fn error(e: &Error) -> Value {
    json!({ "error": { "code": e.code(), "message": e.to_string() } })
}

pub fn recursion(t: &RecursionTable) -> Value {
    json!({
        "n": t.n,
        "x": integers(&t.x),
        "p": integers(&t.p),
        "q": integers(&t.q),
        "a": rationals(&t.a),
    })
}

pub fn weights(w: &WeightTable) -> Value {
    json!({
        "W": integers(&w.w),
        "p_n": integer(&w.p_n),
        "mu": rationals(&w.mu),
        "R": rationals(&w.r),
        "eps": rational(&w.eps),
        "u": rational(&w.u),
    })
}

pub fn series(s: &SeriesTerms) -> Value {
    json!({ "terms": rationals(&s.terms), "partial_sums": rationals(&s.partial_sums) })
}

pub fn verdict(v: &Verdict) -> Value {
    let evidence: Map<String, Value> =
        v.evidence.iter().map(|(k, val)| (k.clone(), Value::String(val.clone()))).collect();
    json!({
        "status": v.status.to_string(),
        "rule": v.rule.map(|r| r.to_string()),
        "applicable_rules": v.applicable.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
        "evidence": evidence,
        "caveats": v.caveats,
    })
}

pub fn empirical(d: &EmpiricalData) -> Value {
    json!({
        "x": integers(&d.x),
        "a": rationals(&d.a),
        "lower_partial_sums": rationals(&d.lower_partial_sums),
        "r4_terms": rationals(&d.r4_terms),
        "lower_ratios": rationals(&d.lower_ratios),
        "upper_ratios": rationals(&d.upper_ratios),
    })
}

pub fn site_values(v: &SiteValues) -> Value {
    Value::Array(v.iter().map(|(x, r)| json!({ "x": x, "value": rational(r) })).collect())
}

pub fn halfline(r: &SolveResult) -> Value {
    let pieces: Vec<Value> = r
        .pieces
        .iter()
        .enumerate()
        .map(|(k, p)| json!({ "k": k, "a": rational(&p.a), "b": rational(&p.b) }))
        .collect();
    json!({
        "N": r.n,
        "x": integers(&r.x),
        "A": rational(&r.a),
        "E": rationals(&r.e_at_traps),
        "pieces": pieces,
    })
}

pub fn sim(e: &SimEstimate) -> Value {
    let hist: Map<String, Value> = e.histogram.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    json!({
        "mean": float_value(e.mean),
        "stderr": float_value(e.stderr),
        "samples": e.samples,
        "seed": e.seed,
        "mode": e.mode.to_string(),
        "sink_fraction": float_value(e.sink_fraction),
        "sink_stderr": float_value(e.sink_stderr),
        "left_fraction": float_value(e.left_fraction),
        "right_fraction": float_value(e.right_fraction),
        "trap_visit_histogram": hist,
    })
}

pub fn chain(s: &ChainStats) -> Value {
    let sites: Vec<i64> = (0..s.additions.len()).map(|i| s.site(i)).collect();
    let matrix = |m: &Vec<Vec<f64>>| -> Value {
        Value::Array(m.iter().map(|row| Value::Array(row.iter().map(|&v| float_value(v)).collect())).collect())
    };
    json!({
        "volume": [-s.radius, s.radius],
        "traps": s.traps,
        "steps": s.steps,
        "burnin": s.burnin,
        "seed": s.seed,
        "batches": s.batches,
        "sites": sites,
        "additions": s.additions,
        "mean_avalanche_size": s.mean_size.iter().map(|&v| float(v)).collect::<Vec<_>>(),
        "mean_topples": matrix(&s.topples),
        "mean_topples_stderr": matrix(&s.topples_stderr),
        "mean_emissions": matrix(&s.emissions),
        "conserved": s.conserved,
    })
}

pub fn green_entries(entries: &[GreenEntry]) -> Value {
    Value::Array(
        entries
            .iter()
            .map(|g| {
                json!({
                    "x": g.x,
                    "y": g.y,
                    "exact": rational(&g.exact),
                    "empirical": float_value(g.empirical),
                    "stderr": float_value(g.stderr),
                    "z": float_value(g.z_score()),
                })
            })
            .collect(),
    )
}

pub fn counterexample(ce: &Counterexample, checks: Option<&[(usize, BigRational)]>) -> Value {
    let cert: Vec<Value> = ce
        .certificate
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut o = json!({
                "i": i + 1,
                "a": c.a,
                "b": c.b,
                "jump_value": integer(&c.jump_value),
                "v": rational(&c.v),
                "target": rational(&c.target),
            });
            if let Some((n, u)) = checks.and_then(|ch| ch.get(i)) {
                o["check_n"] = json!(n);
                o["check_u_n"] = json!(decimal_sig(u, 30));
                o["check_u_n_ge_v"] = json!(*u >= c.v);
            }
            o
        })
        .collect();
    json!({
        "length": ce.x.len(),
        "x_tail": integers(&ce.x[ce.x.len().saturating_sub(3)..]),
        "jump_indices": ce.certificate.iter().map(|c| c.b).collect::<Vec<_>>(),
        "certificate": cert,
        "caveats": ce.caveats,
    })
}

/// CSV writer over any sink, fields quoted when needed.
pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn recursion_csv(t: &RecursionTable, w: Option<&WeightTable>) -> String {
    let mut header = vec!["k", "x", "p", "q", "a", "a_decimal"];
    if w.is_some() {
        header.extend(["W", "mu", "R"]);
    }
    let rows: Vec<Vec<String>> = (0..t.n)
        .map(|k| {
            let mut row = vec![
                (k + 1).to_string(),
                t.x[k].to_string(),
                t.p[k].to_string(),
                t.q[k].to_string(),
                rational_string(&t.a[k]),
                decimal_sig(&t.a[k], 20),
            ];
            if let Some(w) = w {
                row.push(w.w[k].to_string());
                row.push(rational_string(&w.mu[k]));
                row.push(rational_string(&w.r[k + 1]));
            }
            row
        })
        .collect();
    csv_string(&header, &rows)
}

pub fn counterexample_csv(ce: &Counterexample) -> String {
    let rows: Vec<Vec<String>> = ce
        .certificate
        .iter()
        .enumerate()
        .map(|(i, c)| {
            vec![
                (i + 1).to_string(),
                c.a.to_string(),
                c.b.to_string(),
                c.jump_value.to_string(),
                rational_string(&c.v),
                decimal_sig(&c.v, 20),
                rational_string(&c.target),
            ]
        })
        .collect();
    csv_string(&["i", "a_i", "b_i", "x_b_plus_1", "v_i", "v_i_decimal", "t_i"], &rows)
}

pub fn green_csv(entries: &[GreenEntry]) -> String {
    let rows: Vec<Vec<String>> = entries
        .iter()
        .map(|g| {
            vec![
                g.x.to_string(),
                g.y.to_string(),
                rational_string(&g.exact),
                decimal_sig(&g.exact, 17),
                float(g.empirical),
                float(g.stderr),
                float(g.z_score()),
            ]
        })
        .collect();
    csv_string(&["x", "y", "G_exact", "G_exact_decimal", "topples_mean", "topples_stderr", "z"], &rows)
}

pub fn site_values_csv(v: &SiteValues, name: &str) -> String {
    let rows: Vec<Vec<String>> = v
        .iter()
        .map(|(x, r)| vec![x.to_string(), rational_string(r), decimal_sig(r, 17)])
        .collect();
    csv_string(&["x", name, &format!("{name}_decimal")], &rows)
}

pub fn histogram_csv(e: &SimEstimate) -> String {
    let rows: Vec<Vec<String>> = e.histogram.iter().map(|(k, v)| vec![k.to_string(), v.to_string()]).collect();
    csv_string(&["trap_visits", "sink_episodes"], &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn rational_objects() {
        let v = rational(&rat(5, 2));
        assert_eq!(v.to_string(), r#"{"decimal":"2.5","den":"2","num":"5"}"#);
    }

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(float(1.0), "1.0000000000000000e0");
        assert_eq!(float(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_quotes_commas() {
        let s = csv_string(&["a"], &[vec!["x,y".into()]]);
        assert_eq!(s, "a\n\"x,y\"\n");
    }
}
