//! Command implementations.
//!
//! Exit-code contract: 0 success, 1 verification failure (an identity,
//! estimate or parameter condition measurably fails), 2 usage/config
//! error.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use serde_json::json;

use nsr2d_core::exponents::check_exponents_str;
use nsr2d_core::grid::next_pow2;
use nsr2d_core::intervals::IntervalSet;
use nsr2d_core::jets::{build_jets, JetParams, STANDARD_MU0};
use nsr2d_core::ops::operator_identity_sweep;
use nsr2d_core::quad;
use nsr2d_core::regression::fit_loglog;
use nsr2d_core::scheme::{run_iteration_step, EnergyTarget, SchemeParams};
use nsr2d_core::snapshot::{write_sym_tensor, write_vector};
use nsr2d_core::perturbation::StressTrajectory;
use nsr2d_core::stress::VelocityTrajectory;
use nsr2d_core::temporal::{build_temporal, standard_offsets, TemporalParams};
use nsr2d_core::universality::{rough_field, universality_init, FractionalHeatFlow};
use nsr2d_core::{Grid, ScalarField};

use crate::config::{BaselineConfig, EnergyConfig, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

// ---------------------------------------------------------------- check-params

/// Print the per-condition exponent table and verdicts; exit 0 iff all
/// nine conditions pass.
pub fn cmd_check_params(gamma: &str, p: &str, r: &str) -> Result<i32> {
    let report = match check_exponents_str(gamma, p, r) {
        Ok(rep) => rep,
        Err(e) => {
            eprintln!("invalid parameters: {e}");
            return Ok(EXIT_USAGE);
        }
    };
    println!("exponent conditions for (gamma, p, r) = ({gamma}, {p}, {r})");
    println!("{:<16} {:>14}  verdict", "condition", "exponent");
    for c in &report.conditions {
        println!(
            "{:<16} {:>14.8}  {}",
            c.name,
            c.exponent_f64(),
            if c.pass { "pass" } else { "FAIL" }
        );
    }
    let s_p = rational_f64(&report.s_p);
    let reg = rational_f64(&report.regularity_exponent);
    println!("regularity: s_p = {s_p:.6}, exponent s_p(2g+1) - 1 + 20g = {reg:.8}");
    if report.all_pass() {
        println!("verdict: all nine conditions pass");
        Ok(EXIT_OK)
    } else {
        println!("verdict: FAIL ({})", report.failing().join(", "));
        Ok(EXIT_VERIFICATION)
    }
}

fn rational_f64(q: &num::rational::BigRational) -> f64 {
    use num::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

// ------------------------------------------------------------------ verify-ops

/// Re-run the operator identity sweep on random inputs.
pub fn cmd_verify_ops(grid_n: usize, count: usize, seed: u64) -> Result<i32> {
    let grid = Grid::new(grid_n, 1)?;
    let worst = operator_identity_sweep(grid, count, seed)?;
    println!(
        "operator identities on {count} random inputs (grid {grid_n}, seed {seed}): \
         worst relative defect {worst:.3e}"
    );
    if worst <= 1e-12 {
        println!("verdict: pass (<= 1e-12)");
        Ok(EXIT_OK)
    } else {
        println!("verdict: FAIL (> 1e-12)");
        Ok(EXIT_VERIFICATION)
    }
}

// ------------------------------------------------------------------------ init

/// Build a semigroup trajectory pair from a rough random initial datum and
/// verify its residual at sampled times.
#[allow(clippy::too_many_arguments)]
pub fn cmd_init(
    grid_n: usize,
    bandwidth: usize,
    decay: f64,
    alpha: f64,
    nu_visc: f64,
    seed: u64,
    samples: usize,
    out: Option<&Path>,
) -> Result<i32> {
    let grid = Grid::new(grid_n, 2)?;
    let u0 = rough_field(grid, bandwidth, decay, seed)?;
    let flow = universality_init(u0, alpha, nu_visc)?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..samples.max(2) {
        let t = i as f64 / (samples.max(2) - 1) as f64;
        let res = flow.residual(t)?;
        let r_l1 = flow.stress_l1(t)?;
        let energy = flow.velocity(t).l2_norm();
        worst = worst.max(res);
        rows.push(json!({"t": t, "residual": res, "stress_l1": r_l1, "u_l2": energy}));
        println!("t = {t:.4}: residual {res:.3e}, |R|_L1 {r_l1:.6e}, |u|_L2 {energy:.6e}");
    }
    let integral = flow.stress_l1_time_integral(0.0, 1.0, 8, 8);
    println!("int_0^1 |R(t)|_L1 dt = {integral:.6e}");
    println!("worst residual {worst:.3e}");
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let summary = json!({
            "schema_version": 1,
            "grid_n": grid_n,
            "bandwidth": bandwidth,
            "decay": decay,
            "alpha": alpha,
            "nu_visc": nu_visc,
            "seed": seed,
            "slices": rows,
            "worst_residual": worst,
            "stress_l1_time_integral": integral,
        });
        fs::write(dir.join("init.json"), serde_json::to_string_pretty(&summary)?)?;
        write_vector(dir.join("u0.nsrf"), flow.initial())?;
        println!("wrote {}", dir.join("init.json").display());
    }
    if worst <= 1e-8 {
        Ok(EXIT_OK)
    } else {
        println!("verdict: FAIL (residual > 1e-8)");
        Ok(EXIT_VERIFICATION)
    }
}

// --------------------------------------------------------------------- iterate

/// Materialize the configured baseline pair.
fn build_baseline(cfg: &BaselineConfig, grid: Grid) -> Result<Arc<FractionalHeatFlow>> {
    match cfg {
        BaselineConfig::TwoMode { amplitude, ratio, alpha, nu_visc } => {
            let (a, b) = (*amplitude, amplitude * ratio);
            let psi = ScalarField::from_fn(grid, |x, y| {
                a * (TWO_PI * x).sin() * (TWO_PI * y).cos() + b * (TWO_PI * (x + 2.0 * y)).cos()
            });
            let u0 = psi.truncated(2).0.grad_perp();
            Ok(Arc::new(universality_init(u0, *alpha, *nu_visc)?))
        }
        BaselineConfig::Rough { seed, bandwidth, decay, target_sup, alpha, nu_visc } => {
            let mut u0 = rough_field(grid, *bandwidth, *decay, *seed)?;
            // the stress is dominated by its u-linear part, so a couple of
            // proportional corrections land the scanned sup on target
            for _ in 0..3 {
                let flow = universality_init(u0.clone(), *alpha, *nu_visc)?;
                let mut sup: f64 = 0.0;
                for i in 0..=8 {
                    sup = sup.max(flow.stress(i as f64 / 8.0)?.linf_norm());
                }
                if sup <= 0.0 {
                    anyhow::bail!("rough baseline produced a vanishing stress");
                }
                if (sup / target_sup - 1.0).abs() < 0.05 {
                    break;
                }
                u0 = u0.scaled(target_sup / sup);
            }
            Ok(Arc::new(universality_init(u0, *alpha, *nu_visc)?))
        }
    }
}

struct FlowStress(Arc<FractionalHeatFlow>);
impl StressTrajectory for FlowStress {
    fn stress_at(&self, t: f64) -> nsr2d_core::Result<nsr2d_core::SymTensorField> {
        self.0.stress(t)
    }
}

/// Run one full iteration step from a config file and write the report
/// artifacts.
pub fn cmd_iterate(cfg: &RunConfig, out: &Path) -> Result<i32> {
    cfg.scheme.validate()?;
    let grid = cfg.scheme.grid()?;
    let flow = build_baseline(&cfg.baseline, grid)?;
    let stress = FlowStress(flow.clone());

    let energy_target = cfg.energy.as_ref().map(|e: &EnergyConfig| EnergyTarget {
        profile: {
            let e = e.clone();
            Box::new(move |t| e.eval_profile(t))
        },
        good: IntervalSet::new(e.good.clone()),
        t_next: e.t_next,
        mu_c: e.mu_c,
    });

    let outcome = run_iteration_step(
        &cfg.scheme,
        flow.as_ref() as &dyn VelocityTrajectory,
        &stress,
        energy_target.as_ref(),
        &cfg.snapshot_times,
    )?;

    fs::create_dir_all(out)?;
    fs::write(out.join("report.json"), outcome.report.to_json()?)?;
    fs::write(out.join("report.csv"), outcome.report.csv())?;
    fs::write(
        out.join("exceptional_set.json"),
        serde_json::to_string_pretty(&json!({
            "schema_version": 1,
            "components": outcome.exceptional_set.components(),
            "measure": outcome.exceptional_set.measure(),
        }))?,
    )?;
    let mut snapshot_files = Vec::new();
    for (i, s) in outcome.snapshots.iter().enumerate() {
        let u_path = out.join(format!("u1_{i}.nsrf"));
        let r_path = out.join(format!("r1_{i}.nsrf"));
        write_vector(&u_path, &s.u1)?;
        write_sym_tensor(&r_path, &s.r1)?;
        snapshot_files.push(json!({"t": s.t, "u1": u_path, "r1": r_path}));
    }
    let conditions: Vec<_> = outcome
        .exponent_report
        .conditions
        .iter()
        .map(|c| json!({"name": c.name, "exponent": c.exponent_f64(), "pass": c.pass}))
        .collect();
    let summary = json!({
        "schema_version": 1,
        "exponent_conditions": conditions,
        "exponents_all_pass": outcome.exponent_report.all_pass(),
        "residual": outcome.residual,
        "quantities": outcome.quantities,
        "snapshots": snapshot_files,
    });
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;

    println!(
        "iteration step verified: baseline residual {:.3e}, new-pair residual {:.3e}",
        outcome.residual.baseline, outcome.residual.aggregate
    );
    println!(
        "contract: |w|_L2(I) = {:.6e}, |R1|_L1Lr = {:.6e} (delta {}), L1(E)/t <= {:.6e}",
        outcome.quantities.w_l2_spacetime,
        outcome.quantities.r1_l1_lr,
        if outcome.quantities.r1_below_delta { "ok" } else { "EXCEEDED" },
        outcome.quantities.e_density
    );
    println!("wrote report artifacts to {}", out.display());
    Ok(EXIT_OK)
}

// ----------------------------------------------------------------------- sweep

/// One measurable quantity with its reference (continuum) value as a
/// function of the knob vector, from which the declared power law along
/// any axis follows by a two-point log ratio.
struct SweepQuantity {
    name: &'static str,
    measure: fn(&SchemeParams) -> Result<f64>,
    reference: fn(&SchemeParams) -> f64,
}

fn jet_grid(p: &SchemeParams) -> Result<Grid> {
    // at least eight samples per across-jet feature width 1/(mu0 mu); the
    // corrector's L¹ norm needs the extra margin to sit on its power law
    let n = next_pow2((8.0 * STANDARD_MU0 * p.mu).ceil() as usize).max(64);
    Ok(Grid::new(n, 2)?)
}

fn jet_norm(p: &SchemeParams, pick: fn(&nsr2d_core::jets::Jet) -> f64) -> Result<f64> {
    let fam = build_jets(JetParams {
        bandwidth: None,
        ..JetParams::standard(jet_grid(p)?, p.nu, p.mu)
    })?;
    Ok(pick(&fam.jets[0]))
}

fn temporal_profiles(p: &SchemeParams) -> Result<nsr2d_core::temporal::TemporalProfiles> {
    Ok(build_temporal(TemporalParams {
        kappa: p.kappa,
        sigma: p.sigma,
        omega: p.omega,
        offsets: standard_offsets(4),
    })?)
}

fn g_lp_measured(p: &SchemeParams, q: f64) -> Result<f64> {
    let profiles = temporal_profiles(p)?;
    let mut acc = 0.0;
    for &(a, b) in profiles.g_support(0).components() {
        acc += quad::integrate(|t| profiles.g(0, t).abs().powf(q), a, b, 16, 8);
    }
    Ok(acc.powf(1.0 / q))
}

fn sweep_quantities() -> Vec<SweepQuantity> {
    use nsr2d_core::jets::{reference_psi_lp, reference_w_lp, reference_wc_lp};
    vec![
        SweepQuantity {
            name: "w_l1",
            measure: |p| jet_norm(p, |j| j.w.lp_norm(1.0)),
            reference: |p| reference_w_lp(p.nu, p.mu, STANDARD_MU0, 1.0),
        },
        SweepQuantity {
            name: "w_l2",
            measure: |p| jet_norm(p, |j| j.w.l2_norm()),
            reference: |p| reference_w_lp(p.nu, p.mu, STANDARD_MU0, 2.0),
        },
        SweepQuantity {
            name: "wc_l1",
            measure: |p| jet_norm(p, |j| j.w_c.lp_norm(1.0)),
            reference: |p| reference_wc_lp(p.nu, p.mu, STANDARD_MU0, 1.0),
        },
        SweepQuantity {
            name: "psi_l1",
            measure: |p| jet_norm(p, |j| j.psi.lp_norm(1.0)),
            reference: |p| reference_psi_lp(p.nu, p.mu, STANDARD_MU0, 1.0),
        },
        SweepQuantity {
            name: "g_l1",
            measure: |p| g_lp_measured(p, 1.0),
            reference: |p| p.kappa.powf(0.5 - 1.0),
        },
        SweepQuantity {
            name: "g_l2",
            measure: |p| g_lp_measured(p, 2.0),
            reference: |_| 1.0,
        },
        SweepQuantity {
            name: "e_measure",
            measure: |p| Ok(temporal_profiles(p)?.exceptional_set().measure()),
            reference: |p| 1.0 / (p.kappa * p.sigma as f64),
        },
    ]
}

fn set_axis(p: &mut SchemeParams, axis: &str, v: f64) -> Result<()> {
    match axis {
        "mu" => p.mu = v,
        "nu" => p.nu = v,
        "kappa" => p.kappa = v,
        "omega" => p.omega = v,
        "sigma" => {
            if v.fract() != 0.0 || v < 1.0 {
                anyhow::bail!("sigma sweep values must be positive integers, got {v}");
            }
            p.sigma = v as usize;
        }
        other => anyhow::bail!("unknown sweep axis '{other}' (mu|nu|kappa|sigma|omega)"),
    }
    Ok(())
}

/// Sweep one knob over >= 3 values, fit log-log slopes and compare them
/// against the declared reference exponents.
pub fn cmd_sweep(cfg: &RunConfig, axis: &str, values: &[f64], out: &Path) -> Result<i32> {
    if values.len() < 3 {
        eprintln!("sweep needs at least 3 points, got {}", values.len());
        return Ok(EXIT_USAGE);
    }
    let spatial_axis = matches!(axis, "mu" | "nu");
    let quantities: Vec<_> = sweep_quantities()
        .into_iter()
        .filter(|q| {
            let temporal = matches!(q.name, "g_l1" | "g_l2" | "e_measure");
            if spatial_axis {
                !temporal
            } else {
                temporal
            }
        })
        .collect();

    let mut table: Vec<Vec<f64>> = Vec::new();
    for &v in values {
        let mut p = cfg.scheme.clone();
        set_axis(&mut p, axis, v)?;
        let mut row = vec![v];
        for q in &quantities {
            row.push((q.measure)(&p).with_context(|| format!("measuring {}", q.name))?);
        }
        table.push(row);
    }

    // data CSV
    fs::create_dir_all(out)?;
    let mut csv = String::from(axis.to_string());
    for q in &quantities {
        csv.push(',');
        csv.push_str(q.name);
    }
    csv.push('\n');
    for row in &table {
        csv.push_str(
            &row.iter().map(|v| format!("{v:.12e}")).collect::<Vec<_>>().join(","),
        );
        csv.push('\n');
    }
    fs::write(out.join("sweep.csv"), &csv)?;

    // slopes: fitted vs declared, with R²
    let xs: Vec<f64> = values.to_vec();
    let (v_lo, v_hi) = (values[0], values[values.len() - 1]);
    let mut slopes = String::from("quantity,slope,r_squared,reference_slope,deviation\n");
    let mut worst_dev: f64 = 0.0;
    println!("{:<10} {:>10} {:>10} {:>10}", "quantity", "slope", "reference", "r2");
    for (j, q) in quantities.iter().enumerate() {
        let ys: Vec<f64> = table.iter().map(|r| r[j + 1]).collect();
        let constant = ys.iter().all(|&y| (y / ys[0] - 1.0).abs() < 1e-14);
        let fit = fit_loglog(&xs, &ys);
        let slope = if constant { 0.0 } else { fit.slope };
        let (mut plo, mut phi) = (cfg.scheme.clone(), cfg.scheme.clone());
        set_axis(&mut plo, axis, v_lo)?;
        set_axis(&mut phi, axis, v_hi)?;
        let (r_lo, r_hi) = ((q.reference)(&plo), (q.reference)(&phi));
        let ref_slope = if (r_hi / r_lo - 1.0).abs() < 1e-14 {
            0.0
        } else {
            (r_hi / r_lo).ln() / (v_hi / v_lo).ln()
        };
        let dev = (slope - ref_slope).abs();
        worst_dev = worst_dev.max(dev);
        println!("{:<10} {:>10.4} {:>10.4} {:>10.6}", q.name, slope, ref_slope, fit.r_squared);
        slopes.push_str(&format!(
            "{},{:.8},{:.8},{:.8},{:.8}\n",
            q.name, slope, fit.r_squared, ref_slope, dev
        ));
    }
    fs::write(out.join("slopes.csv"), &slopes)?;

    // gnuplot script over the data CSV
    let mut gp = String::new();
    gp.push_str("set datafile separator ','\nset logscale xy\nset key outside\n");
    gp.push_str(&format!("set xlabel '{axis}'\nset term pngcairo size 900,600\n"));
    gp.push_str(&format!("set output 'sweep_{axis}.png'\nplot \\\n"));
    for (j, q) in quantities.iter().enumerate() {
        let sep = if j + 1 == quantities.len() { "\n" } else { ", \\\n" };
        gp.push_str(&format!(
            "  'sweep.csv' using 1:{} with linespoints title '{}'{}",
            j + 2,
            q.name,
            sep
        ));
    }
    fs::write(out.join("plot.gp"), &gp)?;

    println!("wrote sweep artifacts to {}", out.display());
    if worst_dev <= 0.1 {
        Ok(EXIT_OK)
    } else {
        println!("verdict: FAIL (worst slope deviation {worst_dev:.4} > 0.1)");
        Ok(EXIT_VERIFICATION)
    }
}
