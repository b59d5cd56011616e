//! Text artifacts: CSV for plotting, JSON for reports.

use std::fmt::Write;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::dynamics::Trajectory;
use crate::error::Result;
use crate::periods::{LevelSetPolyline, PeriodReport};
use crate::spectral::CurveSpec;

fn num(x: f64) -> String {
    // shortest round-trip form keeps files byte-stable
    format!("{x:e}")
}

fn opt(v: &[f64], i: usize) -> String {
    v.get(i).map(|x| num(*x)).unwrap_or_default()
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.n();
    let mut out = String::from("t");
    for i in 1..=n {
        write!(out, ",re_x{i},im_x{i}").unwrap();
    }
    for i in 1..=n {
        write!(out, ",re_q{i},im_q{i}").unwrap();
    }
    out.push_str(",energy_drift,lax_residual\n");
    for (idx, (t, s)) in traj.times.iter().zip(&traj.states).enumerate() {
        out.push_str(&num(*t));
        for x in &traj.unwrapped[idx] {
            write!(out, ",{},{}", num(x.re), num(x.im)).unwrap();
        }
        for q in s.q() {
            write!(out, ",{},{}", num(q.re), num(q.im)).unwrap();
        }
        writeln!(out, ",{},{}", opt(&traj.stats.energy_drift, idx), opt(&traj.stats.lax_residual, idx)).unwrap();
    }
    out
}

pub fn trajectory_json(traj: &Trajectory) -> Value {
    let pair = |z: &Complex64| json!([z.re, z.im]);
    let samples: Vec<Value> = traj
        .times
        .iter()
        .zip(&traj.states)
        .enumerate()
        .map(|(idx, (t, s))| {
            json!({
                "t": t,
                "x": traj.unwrapped[idx].iter().map(pair).collect::<Vec<_>>(),
                "q": s.q().iter().map(pair).collect::<Vec<_>>(),
                "energy_drift": traj.stats.energy_drift.get(idx),
                "lax_residual": traj.stats.lax_residual.get(idx),
            })
        })
        .collect();
    json!({
        "N": traj.n(),
        "dt": traj.dt,
        "max_energy_drift": traj.stats.max_energy_drift,
        "max_lax_residual": traj.stats.max_lax_residual,
        "samples": samples,
    })
}

/// Characteristic-polynomial coefficients `r_i(z)` at the given points.
pub fn curve_csv(curve: &CurveSpec, zs: &[Complex64]) -> Result<String> {
    let mut out = String::from("re_z,im_z,i,re_ri,im_ri\n");
    for z in zs {
        for (i, r) in curve.coefficients(*z)?.iter().enumerate() {
            writeln!(out, "{},{},{i},{},{}", num(z.re), num(z.im), num(r.re), num(r.im)).unwrap();
        }
    }
    Ok(out)
}

pub fn level_set_csv(leaf: &LevelSetPolyline) -> String {
    let mut out = String::from("s,re_z,im_z,re_F1,im_F1\n");
    for ((s, z), f) in leaf.s.iter().zip(&leaf.points).zip(&leaf.f1) {
        writeln!(out, "{},{},{},{},{}", num(*s), num(z.re), num(z.im), num(f.re), num(f.im)).unwrap();
    }
    out
}

pub fn periods_json(reports: &[PeriodReport]) -> Value {
    Value::Array(reports.iter().map(PeriodReport::to_json).collect())
}
