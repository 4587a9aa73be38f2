//! The seven experiment drivers behind the subcommands. Each one resolves
//! the scene from the configuration, runs the corresponding toolkit
//! pipeline, writes its artifacts under the output directory, and reports
//! whether the run's acceptance gates held.

use std::path::Path;

use foliated_xray::error::Result;
use foliated_xray::geometry::{alpha, ChartMetric, FoliationSpec, Region, Rho};
use foliated_xray::inversion::{
    contraction_probe, layer_strip, local_reconstruct, measure_profile, probe_csv,
    probe_csv_header, relative_l2_error, restricted_forward, stability_drift, stability_report,
    ReconReport, SlabReport, StabilityReport,
};
use foliated_xray::inversion::add_gaussian_noise;
use foliated_xray::normal_op::{apply_af, apply_af_composed, NormalOpConfig};
use foliated_xray::scene::Scene;
use foliated_xray::symbols::{
    boundary_symbol_closed, calibrate_symbol_constant, numeric_symbol, SymbolConfig,
};
use foliated_xray::transform::{
    eval_weight, lift_adapted, xray, AdaptedProfile, Sinogram, WeightSpec,
};
use foliated_xray::vec2::{Axis, Rect, Vec2};

use crate::config::ExperimentConfig;
use crate::output::{out_path, read_sinogram, write_profile, write_sinogram, RunStamp};
use crate::phantom::make_phantom;

/// What a finished run tells the shell: all gates held, or one failed.
pub enum Outcome {
    Pass,
    Fail(String),
}

fn kv(k: &str, v: impl std::fmt::Display) -> (String, String) {
    (k.to_string(), v.to_string())
}

/// Synthesize data from the configured phantom, or load it from the
/// configured file. Returns the ground truth when one exists.
fn resolve_data(
    cfg: &ExperimentConfig,
    scene: &Scene,
) -> Result<(Sinogram, Option<AdaptedProfile>)> {
    match &cfg.data {
        Some(path) => Ok((read_sinogram(Path::new(path), scene)?, None)),
        None => {
            let c = scene.collar_depth();
            let truth = make_phantom(&cfg.phantom, c, cfg.profile_n)?;
            let mut data = restricted_forward(&truth, scene)?;
            if cfg.noise.rel_sigma > 0.0 {
                data = add_gaussian_noise(&data, cfg.noise.rel_sigma, cfg.seed);
            }
            Ok((data, Some(truth)))
        }
    }
}

/// Integrate the unit-disk indicator along the horizontal chord at distance
/// 0.6 from the center: the exact value is the chord length
/// 2·√(1 − 0.36) = 1.6. A fixed-geometry self-check of the ray quadrature,
/// independent of the configured scene grids.
fn disk_chord_witness(weight_value: f64) -> Result<f64> {
    let radius = 1.5;
    let fol = FoliationSpec::new(
        Rho::Disk {
            center: Vec2::ZERO,
            radius,
        },
        Vec2::new(radius, 0.0),
        0.0,
        1.0,
    )?;
    let m = radius + 0.1;
    let region = Region::new(fol, Rect::new(-m, m, -m, m));
    let w = WeightSpec::constant(weight_value)?;
    let ind = |z: Vec2| if z.norm2() <= 1.0 { 1.0 } else { 0.0 };
    let h = 1e-4;
    let r = xray(
        &ChartMetric::Euclidean,
        &region,
        &w,
        &ind,
        Vec2::new(h / 4.0, 0.6),
        Vec2::new(1.0, 0.0),
        h,
    )?;
    Ok(r.value / weight_value)
}

pub fn cmd_forward(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let scene = cfg.build_scene()?;
    let c = scene.collar_depth();
    let echo = cfg.echo();
    let stamp = RunStamp {
        command: "forward",
        echo: &echo,
    };

    let profile = make_phantom(&cfg.phantom, c, cfg.profile_n)?;
    let mut data = restricted_forward(&profile, &scene)?;
    if cfg.noise.rel_sigma > 0.0 {
        data = add_gaussian_noise(&data, cfg.noise.rel_sigma, cfg.seed);
    }

    let grid_path = out_path(out, "sinogram.grid")?;
    write_sinogram(&grid_path, &stamp, &data)?;
    write_profile(&out_path(out, "phantom.grid")?, &stamp, &profile)?;

    let n = data.values.len() as f64;
    let l2 = data.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mean_abs = data.values.iter().map(|v| v.abs()).sum::<f64>() / n;
    let vmin = data.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let vmax = data
        .values
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut rows = vec![
        format!("rays,{}", data.grid.rays()),
        format!("dropped_rays,{}", data.dropped_rays),
        format!("quad_step,{:e}", data.quad_step),
        format!("weight,{}", data.weight_name),
        format!("min,{vmin:.12e}"),
        format!("max,{vmax:.12e}"),
        format!("mean_abs,{mean_abs:.12e}"),
        format!("l2,{l2:.12e}"),
    ];

    if cfg.scene == "euclidean-disk" {
        let got = disk_chord_witness(cfg.weight.value)?;
        rows.push(format!("witness_chord_distance,{}", 0.6));
        rows.push(format!("witness_chord_value,{got:.12e}"));
        rows.push(format!("witness_chord_expected,{}", 1.6));
        rows.push(format!("witness_chord_abs_err,{:.3e}", (got - 1.6).abs()));
        println!("witness chord at d=0.6: {got:.6} (expected 1.6)");
    }

    stamp.write_csv(
        &out_path(out, "forward_summary.csv")?,
        &[],
        "key,value",
        &(rows.join("\n") + "\n"),
    )?;
    println!(
        "forward: {} rays ({} dropped), wrote {}",
        data.grid.rays(),
        data.dropped_rays,
        grid_path.display()
    );
    Ok(Outcome::Pass)
}

pub fn cmd_normal_op(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let scene = cfg.build_scene()?;
    let c = scene.collar_depth();
    let echo = cfg.echo();
    let stamp = RunStamp {
        command: "normal-op",
        echo: &echo,
    };

    let y_mid = 0.5 * (scene.rays.y.lo + scene.rays.y.hi);
    let al = alpha(
        &scene.metric,
        &scene.region.fol,
        &scene.frame,
        0.0,
        y_mid,
        0.0,
        1.0,
    )?;
    let n = &cfg.normal;
    let y_span = scene.rays.y.hi - scene.rays.y.lo;
    let ncfg = NormalOpConfig {
        f_const: cfg.f_const,
        lambda_step: n.lambda_step,
        t_step: n.t_step,
        chi: cfg.chi.build(al, cfg.f_const)?,
        eval_x: Axis::new(
            n.x_lo.unwrap_or(0.1 * c),
            n.x_hi.unwrap_or(0.9 * c),
            n.x_n,
        ),
        eval_y: Axis::new(
            n.y_lo.unwrap_or(scene.rays.y.lo + 0.25 * y_span),
            n.y_hi.unwrap_or(scene.rays.y.hi - 0.25 * y_span),
            n.y_n,
        ),
    };

    let profile = make_phantom(&cfg.phantom, c, cfg.profile_n)?;
    let lifted = lift_adapted(&profile, &scene.region.fol)?;
    let field = apply_af(
        &scene.metric,
        &scene.region,
        &scene.frame,
        &scene.weight,
        &lifted,
        &ncfg,
    )?;

    // Cross-check the two operator forms on a coarse subgrid.
    let coarse = NormalOpConfig {
        eval_x: Axis::new(ncfg.eval_x.lo, ncfg.eval_x.hi, n.consistency_n),
        eval_y: Axis::new(ncfg.eval_y.lo, ncfg.eval_y.hi, n.consistency_n),
        ..ncfg.clone()
    };
    let direct = apply_af(
        &scene.metric,
        &scene.region,
        &scene.frame,
        &scene.weight,
        &lifted,
        &coarse,
    )?;
    let composed = apply_af_composed(
        &scene.metric,
        &scene.region,
        &scene.frame,
        &scene.weight,
        &lifted,
        &coarse,
    )?;
    let scale = direct
        .values
        .data
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    let consistency = direct
        .values
        .data
        .iter()
        .zip(&composed.values.data)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale;

    let g = &field.values;
    let header = stamp.grid_meta(
        foliated_xray::io::GridHeader::real(
            vec![g.ay.n, g.ax.n],
            vec![
                foliated_xray::io::AxisMeta::of("y", &g.ay),
                foliated_xray::io::AxisMeta::of("x", &g.ax),
            ],
        )
        .with_meta("f_const", format!("{:e}", cfg.f_const)),
    );
    let grid_path = out_path(out, "normal_field.grid")?;
    foliated_xray::io::write_grid(&grid_path, &header, &g.data)?;

    let rows = [
        format!("eval_x_n,{}", g.ax.n),
        format!("eval_y_n,{}", g.ay.n),
        format!("dropped_rays,{}", field.dropped_rays),
        format!("consistency_max_rel,{consistency:.12e}"),
        format!("f_const,{:e}", cfg.f_const),
        format!("alpha_at_base,{al:.12e}"),
    ];
    stamp.write_csv(
        &out_path(out, "normal_summary.csv")?,
        &[],
        "key,value",
        &(rows.join("\n") + "\n"),
    )?;
    println!(
        "normal-op: field {}x{}, dropped {}, two forms agree to {:.3e} (rel), wrote {}",
        g.ax.n,
        g.ay.n,
        field.dropped_rays,
        consistency,
        grid_path.display()
    );
    Ok(Outcome::Pass)
}

pub fn cmd_symbol_check(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let scene = cfg.build_scene()?;
    let echo = cfg.echo();
    let stamp = RunStamp {
        command: "symbol-check",
        echo: &echo,
    };
    let s = &cfg.symbol;
    let y0 = s.base_y.unwrap_or(0.5 * (scene.rays.y.lo + scene.rays.y.hi));
    let al = alpha(
        &scene.metric,
        &scene.region.fol,
        &scene.frame,
        0.0,
        y0,
        0.0,
        1.0,
    )?;
    let z0 = scene.frame.from_adapted(0.0, y0);
    let leaf_dir = scene.frame.ray_velocity(0.0, y0, 0.0, 1.0);
    let rho_ff = eval_weight(&scene.weight, z0, z0, Some(leaf_dir))?;

    let scfg = SymbolConfig {
        f_const: cfg.f_const,
        chi: cfg.chi.build(al, cfg.f_const)?,
        rel_tol: s.rel_tol,
        ..SymbolConfig::default()
    };

    let radii: Vec<f64> = if s.n_zeta <= 1 {
        vec![s.zeta_lo]
    } else {
        (0..s.n_zeta)
            .map(|j| {
                s.zeta_lo * (s.zeta_hi / s.zeta_lo).powf(j as f64 / (s.n_zeta - 1) as f64)
            })
            .collect()
    };
    let angles: Vec<f64> =
        (0..s.n_angles.max(1))
            .map(|k| 2.0 * std::f64::consts::PI * k as f64 / s.n_angles.max(1) as f64)
            .collect();

    let mut cert_rows = String::new();
    let mut cal_rows = String::new();
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    let mut cone_min = f64::INFINITY;
    let mut failures = 0usize;
    for &theta in &angles {
        for &r in &radii {
            let (xi, eta) = (r * theta.cos(), r * theta.sin());
            let numeric = cfg.chi.scale
                * numeric_symbol(
                    &scene.metric,
                    &scene.region,
                    &scene.frame,
                    &scene.weight,
                    &scfg,
                    0.0,
                    y0,
                    xi,
                    eta,
                )?
                .norm();
            let on_cone = xi.abs() >= eta.abs();
            let bound = r * numeric;
            let status = if !on_cone {
                "not-certified"
            } else if bound >= cfg.chi.claim {
                "pass"
            } else {
                failures += 1;
                "fail"
            };
            if on_cone {
                cone_min = cone_min.min(bound);
                let closed = boundary_symbol_closed(xi, eta, cfg.f_const, al, rho_ff)?;
                pairs.push((numeric, closed));
            }
            cert_rows.push_str(&format!(
                "{theta:.12e},{xi:.12e},{eta:.12e},{r:.12e},{bound:.12e},{status}\n"
            ));
        }
    }

    // One-constant calibration of the numeric symbol against the closed
    // boundary form, over the cone points.
    let (cal, max_rel) = if cfg.chi.scale > 0.0 {
        let cal = calibrate_symbol_constant(&pairs)?;
        let mut max_rel = 0.0f64;
        for &(num, closed) in &pairs {
            let want = cal * closed;
            if want.abs() > 0.0 {
                max_rel = max_rel.max((num - want).abs() / want.abs());
            }
            cal_rows.push_str(&format!(
                "{num:.12e},{closed:.12e},{want:.12e},{:.12e}\n",
                if want.abs() > 0.0 {
                    (num - want).abs() / want.abs()
                } else {
                    0.0
                }
            ));
        }
        (cal, max_rel)
    } else {
        (0.0, 0.0)
    };
    const CAL_TOL: f64 = 0.02;

    stamp.write_csv(
        &out_path(out, "ellipticity_certificate.csv")?,
        &[
            kv("claim", cfg.chi.claim),
            kv("cone_min_bound", format!("{cone_min:.12e}")),
            kv("base_y", y0),
        ],
        "theta,xi,eta,zeta_norm,bound,status",
        &cert_rows,
    )?;
    stamp.write_csv(
        &out_path(out, "calibration.csv")?,
        &[
            kv("constant", format!("{cal:.12e}")),
            kv("max_rel_err", format!("{max_rel:.12e}")),
            kv("tolerance", CAL_TOL),
            kv("alpha", format!("{al:.12e}")),
            kv("rho_ff", format!("{rho_ff:.12e}")),
        ],
        "numeric,closed,calibrated,rel_err",
        &cal_rows,
    )?;

    println!(
        "symbol-check: {} directions × {} scales, cone min |ζ||a| = {cone_min:.6e}, \
         calibration constant {cal:.6e} (max rel dev {max_rel:.3e})",
        angles.len(),
        radii.len()
    );
    if failures > 0 {
        return Ok(Outcome::Fail(format!(
            "{failures} cone samples fell below the claimed ellipticity \
             constant {} (min bound {cone_min:.6e})",
            cfg.chi.claim
        )));
    }
    if cfg.chi.scale > 0.0 && max_rel > CAL_TOL {
        return Ok(Outcome::Fail(format!(
            "calibrated boundary symbol deviates {max_rel:.3e} > {CAL_TOL} \
             from the closed form"
        )));
    }
    Ok(Outcome::Pass)
}

fn print_recon(report: &ReconReport) {
    println!(
        "reconstruction: {} iterations ({}), residual {:.3e}, mu {:.3e}{}",
        report.iterations(),
        if report.converged {
            "converged"
        } else if report.stagnated {
            "stagnated"
        } else {
            "iteration cap"
        },
        report.final_residual(),
        report.mu,
        report
            .rel_error
            .map(|e| format!(", rel error {:.3e}", e))
            .unwrap_or_default()
    );
}

pub fn cmd_reconstruct(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let scene = cfg.build_scene()?;
    let c = scene.collar_depth();
    let echo = cfg.echo();
    let stamp = RunStamp {
        command: "reconstruct",
        echo: &echo,
    };
    let icfg = cfg.inversion_config(c);
    let (data, truth) = resolve_data(cfg, &scene)?;
    let (got, mut report) = local_reconstruct(&data, &scene, &icfg)?;
    if let Some(truth) = &truth {
        report.rel_error = Some(relative_l2_error(&got, truth));
    }

    write_profile(&out_path(out, "profile.grid")?, &stamp, &got)?;
    stamp.write_csv(
        &out_path(out, "recon_report.csv")?,
        &[],
        ReconReport::csv_header(),
        &(report.csv_row() + "\n"),
    )?;
    let residuals = report.residual_csv();
    let (res_head, res_body) = residuals.split_once('\n').unwrap_or(("", ""));
    stamp.write_csv(&out_path(out, "residuals.csv")?, &[], res_head, res_body)?;

    print_recon(&report);
    Ok(Outcome::Pass)
}

pub fn cmd_layer_strip(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let scene = cfg.build_scene()?;
    let c = scene.collar_depth();
    let echo = cfg.echo();
    let stamp = RunStamp {
        command: "layer-strip",
        echo: &echo,
    };
    let icfg = cfg.inversion_config(c);
    let (data, truth) = resolve_data(cfg, &scene)?;
    let (got, slabs) = layer_strip(&data, &scene, &icfg)?;

    write_profile(&out_path(out, "strip_profile.grid")?, &stamp, &got)?;
    let body: String = slabs.iter().map(|s| s.csv_row() + "\n").collect();
    stamp.write_csv(
        &out_path(out, "slabs.csv")?,
        &[kv("ladder", format!("{:?}", icfg.c_ladder))],
        SlabReport::csv_header(),
        &body,
    )?;

    if let Some(truth) = &truth {
        let n = got.len();
        let h = c / (n - 1) as f64;
        let mut rows = String::new();
        for s in &slabs {
            let (mut d2, mut r2) = (0.0, 0.0);
            for i in s.nodes.clone() {
                let depth = -c + h * i as f64;
                let t = truth.eval(depth);
                let d = got.values()[i] - t;
                d2 += d * d;
                r2 += t * t;
            }
            let err = if r2 > 0.0 {
                (d2 / r2).sqrt()
            } else {
                d2.sqrt()
            };
            rows.push_str(&format!(
                "{},{:.12e},{:.12e},{err:.12e}\n",
                s.slab, s.x_tilde_lo, s.x_tilde_hi
            ));
            println!(
                "slab {} [{:.4}, {:.4}]: {} rays, rel error {:.3e}",
                s.slab, s.x_tilde_lo, s.x_tilde_hi, s.rays, err
            );
        }
        stamp.write_csv(
            &out_path(out, "slab_errors.csv")?,
            &[],
            "slab,x_tilde_lo,x_tilde_hi,rel_err",
            &rows,
        )?;
    } else {
        for s in &slabs {
            println!(
                "slab {} [{:.4}, {:.4}]: {} rays, residual {:.3e}",
                s.slab,
                s.x_tilde_lo,
                s.x_tilde_hi,
                s.rays,
                s.recon.final_residual()
            );
        }
    }
    Ok(Outcome::Pass)
}

pub fn cmd_stability(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let scene = cfg.build_scene()?;
    let c = scene.collar_depth();
    let echo = cfg.echo();
    let stamp = RunStamp {
        command: "stability",
        echo: &echo,
    };
    let icfg = cfg.inversion_config(c);

    // The configured phantom is measured first as a deterministic witness;
    // an invisible phantom raises the injectivity alarm here and the run
    // exits nonzero.
    let witness_profile = make_phantom(&cfg.phantom, c, cfg.profile_n)?;
    let witness = measure_profile(&scene, &icfg, &witness_profile, 0)?;

    let mut extra = vec![
        kv("witness_ratio", format!("{:.12e}", witness.ratio)),
        kv("count", cfg.stability.count),
        kv("seed", cfg.seed),
    ];
    let report: StabilityReport;
    if cfg.stability.drift {
        let (coarse, fine, drift) =
            stability_drift(&scene, &icfg, cfg.stability.count, cfg.seed)?;
        extra.push(kv("refined_max_ratio", format!("{:.12e}", fine.max_ratio)));
        extra.push(kv("drift", format!("{drift:.12e}")));
        report = coarse;
    } else {
        report = stability_report(&scene, &icfg, cfg.stability.count, cfg.seed)?;
    }
    extra.push(kv("max_ratio", format!("{:.12e}", report.max_ratio)));
    extra.push(kv("median_ratio", format!("{:.12e}", report.median_ratio)));

    let csv = report.csv();
    let (head, body) = csv.split_once('\n').unwrap_or(("", ""));
    stamp.write_csv(&out_path(out, "stability.csv")?, &extra, head, body)?;

    println!(
        "stability: {} phantoms, max ratio {:.6e}, median {:.6e}, witness {:.6e}",
        report.entries.len(),
        report.max_ratio,
        report.median_ratio,
        witness.ratio
    );
    Ok(Outcome::Pass)
}

pub fn cmd_probe(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let scene = cfg.build_scene()?;
    let c = scene.collar_depth();
    let echo = cfg.echo();
    let stamp = RunStamp {
        command: "probe",
        echo: &echo,
    };
    let icfg = cfg.inversion_config(c);
    let ladder = cfg.resolve_ladder(c);
    let entries = contraction_probe(&scene, &ladder, &icfg)?;

    stamp.write_csv(
        &out_path(out, "probe.csv")?,
        &[kv("ladder", format!("{ladder:?}"))],
        probe_csv_header(),
        &probe_csv(&entries),
    )?;
    for e in &entries {
        println!(
            "collar {:.4}: sigma [{:.6e}, {:.6e}], condition {:.3e}{}",
            e.c,
            e.sigma_min,
            e.sigma_max,
            e.condition,
            if e.converged { "" } else { " (unsettled)" }
        );
    }
    Ok(Outcome::Pass)
}
