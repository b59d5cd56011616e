use std::path::Path;
use std::sync::Arc;

use calogero::dynamics::{integrate_with, lax_residual, sample_state, sample_tame_state, IntegrateOptions};
use calogero::elliptic::{lattice_invariants, EllipticData};
use calogero::export;
use calogero::periods::{
    base_case_check, degree_check, phi_period, torus_real_basis, torus_zeros, trace_level_set, word_loops,
    DifferentialOnCurve, LeafEnd, Which,
};
use calogero::spectral::{fit_h, leading_laurent, singularity_census, CensusOptions, CurveSpec};
use calogero::suite::run_suite;
use calogero::Complex64 as C;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{Format, RunConfig};

pub type Outcome = Result<bool, Box<dyn std::error::Error>>;

fn write(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> std::io::Result<()> {
    write(dir, name, &(serde_json::to_string_pretty(value).expect("json value") + "\n"))
}

fn setup(cfg: &RunConfig) -> Result<(Arc<EllipticData>, ChaCha8Rng), calogero::Error> {
    Ok((Arc::new(lattice_invariants(cfg.suite.tau)?), ChaCha8Rng::seed_from_u64(cfg.suite.seed)))
}

fn pair(z: C) -> serde_json::Value {
    json!([z.re, z.im])
}

/// A fixed probe point for the Lax residual and the curve samples.
fn probe(data: &EllipticData) -> C {
    C::new(0.31, 0.0) + data.tau() * 0.42
}

pub fn simulate(cfg: &RunConfig) -> Outcome {
    let (data, mut rng) = setup(cfg)?;
    let s = &cfg.suite;
    let state = sample_tame_state(s.n, &data, s.t_end, &mut rng)?;
    let mut opts = IntegrateOptions::new(s.t_end, s.dt);
    opts.lax_probe = Some(probe(&data));
    opts.drift_bound = f64::INFINITY;
    let traj = integrate_with(&state, &opts)?;
    match cfg.format {
        Format::Csv => write(&cfg.out, "trajectory.csv", &export::trajectory_csv(&traj))?,
        Format::Json => write_json(&cfg.out, "trajectory.json", &export::trajectory_json(&traj))?,
    }
    let pass = traj.stats.max_energy_drift < s.tol && traj.stats.max_lax_residual < 1e-8;
    write_json(
        &cfg.out,
        "simulate.json",
        &json!({
            "N": s.n,
            "steps": traj.times.len() - 1,
            "max_energy_drift": traj.stats.max_energy_drift,
            "energy_bound": s.tol,
            "max_lax_residual": traj.stats.max_lax_residual,
            "final_lax_residual": lax_residual(traj.last(), probe(&data))?,
            "pass": pass,
        }),
    )?;
    Ok(pass)
}

pub fn spectral(cfg: &RunConfig) -> Outcome {
    let (data, mut rng) = setup(cfg)?;
    let curve = CurveSpec::det(sample_state(cfg.suite.n, &data, &mut rng)?);
    let zs: Vec<C> = (0..6)
        .flat_map(|i| (0..6).map(move |j| (i, j)))
        .map(|(i, j)| C::new(-0.4 + 0.16 * i as f64 + 0.013, 0.0) + data.tau() * (-0.4 + 0.16 * j as f64 + 0.021))
        .collect();
    match cfg.format {
        Format::Csv => write(&cfg.out, "curve.csv", &export::curve_csv(&curve, &zs)?)?,
        Format::Json => {
            let rows = zs
                .iter()
                .map(|&z| Ok(json!({"z": pair(z), "r": curve.coefficients(z)?.into_iter().map(pair).collect::<Vec<_>>()})))
                .collect::<Result<Vec<_>, calogero::Error>>()?;
            write_json(&cfg.out, "curve.json", &json!(rows))?
        }
    }
    let laurent = leading_laurent(&curve)?;
    let fit = fit_h(&curve, &mut rng)?;
    let census = singularity_census(&curve, &CensusOptions::default())?;
    let pass = fit.residual < 1e-6 && census.unclassified.is_empty();
    write_json(
        &cfg.out,
        "spectral.json",
        &json!({
            "N": curve.n(),
            "laurent": laurent.iter().map(|b| json!({"a": pair(b.a), "h": pair(b.h)})).collect::<Vec<_>>(),
            "fit": {
                "I": fit.i.iter().map(|&v| pair(v)).collect::<Vec<_>>(),
                "residual": fit.residual,
                "condition": fit.condition,
            },
            "census": census.to_json(),
            "branch_points": census.branch_points.iter().map(|&z| pair(z)).collect::<Vec<_>>(),
            "pass": pass,
        }),
    )?;
    Ok(pass)
}

pub fn periods(cfg: &RunConfig) -> Outcome {
    let (data, mut rng) = setup(cfg)?;
    let curve = CurveSpec::det(sample_state(2, &data, &mut rng)?);
    let words = [(1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2)];
    let loops = word_loops(&curve, &words, 0, 0.05)?;
    let mut reports = Vec::new();
    for which in [Which::Phi1, Which::Phi2] {
        let diff = DifferentialOnCurve::new(curve.clone(), which);
        for lp in &loops {
            reports.push(phi_period(&diff, lp)?);
        }
    }
    write_json(&cfg.out, "periods.json", &export::periods_json(&reports))?;
    let degree = degree_check(&curve)?;
    write_json(&cfg.out, "degree.json", &serde_json::to_value(&degree)?)?;
    Ok(reports.iter().all(|r| r.is_integer()) && degree.deviation.is_some_and(|d| d < 1e-4))
}

pub fn torus(cfg: &RunConfig) -> Outcome {
    let (data, _) = setup(cfg)?;
    let (p1, p2) = torus_real_basis(&data);
    let base = base_case_check(&data)?;
    let zeros1 = torus_zeros(&p1)?;
    let zeros2 = torus_zeros(&p2)?;
    // start halfway between the pole and the first zero, off the critical leaf
    let start = zeros1.zeros[0] * 0.5 + C::new(0.0, 0.0371);
    let leaf = trace_level_set(&p1, start, 1.0)?;
    match cfg.format {
        Format::Csv => write(&cfg.out, "leaf.csv", &export::level_set_csv(&leaf))?,
        Format::Json => write_json(&cfg.out, "leaf.json", &serde_json::to_value(&leaf)?)?,
    }
    let saddle = match leaf.end {
        LeafEnd::Saddle { zero } => Some(pair(zero)),
        _ => None,
    };
    let differential = |p: &calogero::periods::TorusDifferential| {
        let (a, b) = p.periods();
        json!({"b": pair(p.b), "periods": [pair(a), pair(b)], "wp_level": pair(p.wp_level())})
    };
    let pass = base.pass && leaf.im_drift() < cfg.suite.tol && leaf.re_monotone();
    write_json(
        &cfg.out,
        "torus.json",
        &json!({
            "tau": pair(data.tau()),
            "psi1": differential(&p1),
            "psi2": differential(&p2),
            "zeros1": zeros1.zeros.iter().map(|&z| pair(z)).collect::<Vec<_>>(),
            "zeros2": zeros2.zeros.iter().map(|&z| pair(z)).collect::<Vec<_>>(),
            "base_case": serde_json::to_value(&base)?,
            "leaf": {
                "start": pair(start),
                "samples": leaf.points.len(),
                "im_drift": leaf.im_drift(),
                "closed_through_pole": leaf.closed_through_pole,
                "saddle": saddle,
            },
            "pass": pass,
        }),
    )?;
    Ok(pass)
}

pub fn verify(cfg: &RunConfig) -> Outcome {
    let report = run_suite(&cfg.suite)?;
    write(&cfg.out, "report.json", &report.to_json())?;
    for c in &report.criteria {
        let measured = c.measured.map_or("n/a".to_string(), |m| format!("{m:.3e}"));
        println!("{} {:<4} {} ({measured} vs {:.1e})", if c.pass { "PASS" } else { "FAIL" }, c.id, c.description, c.bound);
    }
    Ok(report.all_pass())
}
