//! Job description, orchestration and JSON reports for the command-line front end.

use nalgebra::{Dim, Matrix, RawStorage, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::abel::{abel_map, Divisor2, CERT_TOL};
use crate::cpoly::{c, CPoly, SpherePoint, C64};
use crate::disks::{find_disks, DiskTriple};
use crate::error::{Error, Result};
use crate::kleinian::{
    check_weierstrass, sigma_zeta_from, wp_from, EvalOptions, Evaluator, SVec, FIT_TOL,
};
use crate::periods::{compute_periods, is_quasi_reduced, PeriodData};
use crate::richelot::{iterate_tower, RichelotTower, DEFAULT_MAX_ITER, DEFAULT_TOL};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Richelot,
    Theta,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub tower_tol: f64,
    pub fit_tol: f64,
    pub cert_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tower_tol: DEFAULT_TOL,
            fit_tol: FIT_TOL,
            cert_tol: CERT_TOL,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Iterate,
    Periods,
    Eval,
    Abel,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JobSpec {
    #[serde(deserialize_with = "de_poly")]
    pub polynomial: CPoly,
    #[serde(default)]
    pub disks: Option<DiskTriple>,
    #[serde(default)]
    pub points: Vec<[C64; 2]>,
    #[serde(default)]
    pub divisors: Vec<Divisor2>,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub derivatives: bool,
    #[serde(default)]
    pub weierstrass: bool,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
}

impl JobSpec {
    pub fn new(polynomial: CPoly) -> Self {
        JobSpec {
            polynomial,
            disks: None,
            points: Vec::new(),
            divisors: Vec::new(),
            method: Method::default(),
            derivatives: false,
            weierstrass: false,
            tolerances: Tolerances::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        for (name, v) in [
            ("tower_tol", t.tower_tol),
            ("fit_tol", t.fit_tol),
            ("cert_tol", t.cert_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Input(format!("{name} must be positive, got {v}")));
            }
        }
        if self.weierstrass {
            check_weierstrass(&self.polynomial)?;
        }
        Ok(())
    }
}

/// Parses a coefficient list (constant term first); entries are numbers or `[re, im]`.
pub fn parse_poly_value(v: &Value) -> Result<CPoly> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Input("polynomial must be a JSON array of coefficients".into()))?;
    let mut coeffs = Vec::with_capacity(arr.len());
    for (k, e) in arr.iter().enumerate() {
        let z = match e {
            Value::Number(n) => c(n.as_f64().unwrap_or(f64::NAN), 0.0),
            Value::Array(p) if p.len() == 2 && p.iter().all(Value::is_number) => c(
                p[0].as_f64().unwrap_or(f64::NAN),
                p[1].as_f64().unwrap_or(f64::NAN),
            ),
            _ => {
                return Err(Error::Input(format!(
                    "coefficient {k} must be a number or [re, im]"
                )))
            }
        };
        coeffs.push(z);
    }
    CPoly::new(coeffs)
}

fn de_poly<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<CPoly, D::Error> {
    let v = Value::deserialize(d)?;
    parse_poly_value(&v).map_err(serde::de::Error::custom)
}

/// Parses JSON text, reporting line and column on failure.
pub fn parse_json<T: serde::de::DeserializeOwned>(what: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Input(format!("{what}: {e}")))
}

pub fn cjson(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn mat_json<R: Dim, C: Dim, S: RawStorage<C64, R, C>>(m: &Matrix<C64, R, C, S>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| cjson(m[(i, j)])).collect()))
            .collect(),
    )
}

fn sphere_json(p: &SpherePoint) -> Value {
    match p {
        SpherePoint::Finite(z) => cjson(*z),
        SpherePoint::Infinity => json!("inf"),
    }
}

fn vec4_json(v: &[C64; 4]) -> Value {
    Value::Array(v.iter().map(|z| cjson(*z)).collect())
}

pub fn tower_json(t: &RichelotTower) -> Value {
    json!({
        "disks": t.disks,
        "steps": t.steps.len(),
        "levels": t.levels,
        "deltas": t.steps.iter().map(|s| cjson(s.delta)).collect::<Vec<_>>(),
        "gap_history": t.gap_history(),
        "limit": {
            "c": cjson(t.limit.c),
            "t": t.limit.t.iter().map(sphere_json).collect::<Vec<_>>(),
        },
    })
}

pub fn periods_json(p: &PeriodData) -> Result<Value> {
    Ok(json!({
        "W": mat_json(&p.w),
        "E": mat_json(&p.e),
        "A": mat_json(&p.a),
        "B": mat_json(&p.b),
        "etaA": mat_json(&p.eta_a),
        "omega": mat_json(&p.omega),
        "quasi_reduced": is_quasi_reduced(&p.omega)?,
    }))
}

fn svec_json(s: &SVec, derivatives: bool) -> Value {
    let mut v = json!({ "S": vec4_json(&s.s) });
    if derivatives {
        v["dS1"] = vec4_json(&s.ds1);
        v["dS2"] = vec4_json(&s.ds2);
    }
    v
}

fn point_report(s: &SVec, job: &JobSpec) -> Value {
    let mut v = svec_json(s, job.derivatives);
    match wp_from(s) {
        Ok(w) => v["wp"] = json!({ "p22": cjson(w[0]), "p12": cjson(w[1]), "p11": cjson(w[2]) }),
        Err(e) => v["wp_error"] = json!(e.to_string()),
    }
    if job.weierstrass {
        match sigma_zeta_from(s) {
            Ok((sigma, zeta)) => {
                v["sigma_2z"] = cjson(sigma);
                v["zeta"] = json!([cjson(zeta[0]), cjson(zeta[1])]);
            }
            Err(e) => v["sigma_error"] = json!(e.to_string()),
        }
    }
    v
}

fn build_tower(job: &JobSpec) -> Result<RichelotTower> {
    let disks = match &job.disks {
        Some(d) => *d,
        None => find_disks(&job.polynomial)?,
    };
    iterate_tower(
        &job.polynomial,
        &disks,
        job.tolerances.tower_tol,
        DEFAULT_MAX_ITER,
    )
}

fn evaluator(job: &JobSpec) -> Result<Evaluator> {
    let tower = build_tower(job)?;
    let periods = compute_periods(&tower)?;
    Evaluator::new(
        tower,
        periods,
        EvalOptions {
            fit_tol: job.tolerances.fit_tol,
            seed: job.seed,
        },
    )
}

fn transfer_json(ev: &Evaluator) -> Value {
    json!(ev
        .transfers
        .iter()
        .map(|t| json!({ "fit": t.fit_residual, "holdout": t.holdout_residual }))
        .collect::<Vec<_>>())
}

/// Runs one job and returns the JSON report.
pub fn run(cmd: Command, job: &JobSpec) -> Result<Value> {
    job.validate()?;
    match cmd {
        Command::Iterate => Ok(json!({ "tower": tower_json(&build_tower(job)?) })),
        Command::Periods => {
            let tower = build_tower(job)?;
            let p = compute_periods(&tower)?;
            Ok(json!({ "steps": tower.steps.len(), "periods": periods_json(&p)? }))
        }
        Command::Eval => run_eval(job),
        Command::Abel => run_abel(job),
    }
}

fn run_eval(job: &JobSpec) -> Result<Value> {
    let ev = evaluator(job)?;
    let pts: Vec<Vector2<C64>> = job
        .points
        .iter()
        .map(|p| Vector2::new(p[0], p[1]))
        .collect();
    let rows: Vec<(Value, f64)> = pts
        .par_iter()
        .map(|z| -> Result<(Value, f64)> {
            let mut row = json!({ "z": [cjson(z[0]), cjson(z[1])] });
            let rich = matches!(job.method, Method::Richelot | Method::Both)
                .then(|| ev.eval_s(z))
                .transpose()?;
            let theta = matches!(job.method, Method::Theta | Method::Both)
                .then(|| ev.oracle_s(z))
                .transpose()?;
            if let Some(s) = &rich {
                row["richelot"] = point_report(s, job);
            }
            if let Some(s) = &theta {
                row["theta"] = point_report(s, job);
            }
            let gap = match (&rich, &theta) {
                (Some(a), Some(b)) => {
                    let d = a.rel_diff(b);
                    row["discrepancy"] = json!(d);
                    d
                }
                _ => 0.0,
            };
            Ok((row, gap))
        })
        .collect::<Result<_>>()?;
    let mut out = json!({
        "method": job.method,
        "steps": ev.levels(),
        "transfer_residuals": transfer_json(&ev),
        "points": rows.iter().map(|r| r.0.clone()).collect::<Vec<_>>(),
    });
    if job.method == Method::Both {
        out["max_discrepancy"] = json!(rows.iter().map(|r| r.1).fold(0.0, f64::max));
    }
    Ok(out)
}

fn run_abel(job: &JobSpec) -> Result<Value> {
    if job.divisors.is_empty() {
        return Err(Error::Input("abel needs at least one divisor".into()));
    }
    let ev = evaluator(job)?;
    let results: Vec<Value> = job
        .divisors
        .par_iter()
        .enumerate()
        .map(|(k, d)| {
            let r = abel_map(
                &ev,
                d,
                job.seed.wrapping_add(k as u64),
                job.tolerances.cert_tol,
            )?;
            Ok(json!({ "divisor": d, "result": r }))
        })
        .collect::<Result<_>>()?;
    Ok(
        json!({ "steps": ev.levels(), "transfer_residuals": transfer_json(&ev), "divisors": results }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn job_parses_mixed_coefficients() {
        let job: JobSpec = parse_json(
            "job",
            r#"{"polynomial": [-1, 0, 0, 0, 0, [0, 0], 1], "method": "both"}"#,
        )
        .unwrap();
        assert_eq!(job.polynomial.degree(), Some(6));
        assert_eq!(job.method, Method::Both);
        assert_eq!(job.tolerances, Tolerances::default());
    }

    #[test]
    fn malformed_json_reports_location() {
        let err = parse_json::<JobSpec>("job", "{\n \"polynomial\": [1, 2,\n}").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn sextic_periods_report_is_quasi_reduced() {
        let job = JobSpec::new(CPoly::from_real(&[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap());
        let out = run(Command::Periods, &job).unwrap();
        assert_eq!(out["periods"]["quasi_reduced"], json!(true));
    }

    #[test]
    fn output_is_deterministic() {
        let mut job =
            JobSpec::new(CPoly::from_real(&[0.7, -0.2, 1.1, 0.4, -0.9, 0.3, 1.5]).unwrap());
        job.points = vec![[c(0.1, 0.2), c(-0.3, 0.05)], [c(0.25, -0.1), c(0.0, 0.3)]];
        job.method = Method::Both;
        let a = serde_json::to_string(&run(Command::Eval, &job).unwrap()).unwrap();
        let b = serde_json::to_string(&run(Command::Eval, &job).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_tolerance_is_input_error() {
        let mut job =
            JobSpec::new(CPoly::from_real(&[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap());
        job.tolerances.fit_tol = -1.0;
        assert_eq!(run(Command::Periods, &job).unwrap_err().exit_code(), 2);
    }
}
