//! Pipeline stages behind the subcommands.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use num_complex::Complex;
use serde_json::json;

use cgo_scatter::born::{born_reconstruct, compute_h0, jump_ring, regularity_report, RegularityOptions};
use cgo_scatter::cgo::{compute_constants, CgoSolver, SolverOptions, SolverConstants};
use cgo_scatter::dbar::{beurling_transform, cauchy_transform};
use cgo_scatter::faddeev::{
    estimate_c_gamma, faddeev_convolve_factorized, faddeev_convolve_multiplier, prop1_probe, FaddeevOptions,
    MultiplierOptions,
};
use cgo_scatter::field::io::{write_atomic, write_scalar, write_spectral};
use cgo_scatter::field::{norm_l2, GridSpec, ScalarField};
use cgo_scatter::forward::{directions, far_field_check, scattering_amplitude, ForwardOptions, HelmholtzSolver, IncidentWave};
use cgo_scatter::potential::{verify_conditions, BuiltinPotential, PotentialKind, PotentialModel, LIPSCHITZ_PROBE_RADIUS};
use cgo_scatter::transform::{assemble_transform, transform_boundary, transform_volume, TransformMode, CONTOUR_NODES};

use crate::config::{CGammaSource, ConfigError, ModeConfig, RunConfig};
use crate::plot;
use crate::runlog::RunLog;

#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] cgo_scatter::Error),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("verification failed: {0}")]
    Acceptance(String),
}

impl StageError {
    pub fn exit_code(&self) -> u8 {
        match self {
            StageError::Config(_) => 1,
            StageError::Numerical(_) | StageError::Io(_) => 2,
            StageError::Acceptance(_) => 3,
        }
    }
}

type Result<T> = std::result::Result<T, StageError>;

/// Validated configuration, output directory and log shared by all stages.
pub struct Context {
    pub cfg: RunConfig,
    pub log: RunLog,
    dir: PathBuf,
}

impl Context {
    /// Validates `cfg`, prepares the output directory, stores the resolved config and opens the log.
    pub fn open(cfg: RunConfig, stage: &str) -> Result<Self> {
        cfg.validate()?;
        let dir = cfg.output.directory.clone();
        std::fs::create_dir_all(&dir)?;
        write_atomic(&dir.join("config.toml"), cfg.to_toml().as_bytes())?;
        let log = RunLog::create(&dir.join(format!("{stage}.jsonl")), cfg.output.timestamps)?;
        log.record("start", json!({ "stage": stage }));
        Ok(Self { cfg, log, dir })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn text(&self, name: &str, body: &str) -> Result<()> {
        if self.cfg.output.text() {
            write_atomic(&self.path(name), body.as_bytes())?;
        }
        Ok(())
    }

    fn field(&self, name: &str, f: &ScalarField<f64>) -> Result<()> {
        if self.cfg.output.fields() {
            write_scalar(&self.path(name), f)?;
        }
        Ok(())
    }

    fn grid(&self) -> Result<GridSpec<f64>> {
        Ok(self.cfg.grid_spec()?)
    }

    fn model(&self) -> Result<PotentialModel<f64>> {
        Ok(PotentialModel::new(Arc::new(self.cfg.potential()?), self.grid()?)?)
    }

    fn solver_options(&self) -> SolverOptions<f64> {
        let s = &self.cfg.solver;
        SolverOptions { tol: s.tol, max_iter: s.max_iter, strict_cutoff: s.strict_cutoff, ..Default::default() }
    }

    /// Solver constants, probing `c_gamma` on the built-in corpus unless overridden.
    fn constants(&self, m: &PotentialModel<f64>) -> Result<SolverConstants<f64>> {
        let c = &self.cfg.constants;
        let c_gamma = match (c.c_gamma_source, c.c_gamma) {
            (CGammaSource::Override, Some(v)) => v,
            _ => {
                let est = estimate_c_gamma(c.gamma, &corpus(*m.grid())?, &Z_MAGS, &ANGLES, &FaddeevOptions::default())?;
                self.log.record("c_gamma_probe", json!({ "observed": est.observed, "safety": est.safety, "c_gamma": est.c_gamma }));
                est.c_gamma
            }
        };
        let mut consts = compute_constants(c.gamma, c_gamma, m.alpha_norm(), m.beta_norm())?;
        if let Some(cut) = c.cutoff {
            consts = consts.with_cutoff(cut)?;
        }
        self.log.record(
            "constants",
            json!({
                "gamma": consts.gamma, "c_gamma": consts.c_gamma, "alpha_norm": consts.alpha_norm,
                "beta_norm": consts.beta_norm, "c0_raw": consts.c0_raw, "cutoff": consts.cutoff, "rho": consts.rho
            }),
        );
        Ok(consts)
    }

    fn cgo_solver(&self) -> Result<CgoSolver<f64>> {
        let m = self.model()?;
        let consts = self.constants(&m)?;
        Ok(CgoSolver::new(m, consts, self.solver_options())?)
    }

    fn lattice(&self) -> Result<GridSpec<f64>> {
        Ok(self.cfg.lattice_spec()?)
    }

    fn transform_mode(&self) -> TransformMode<f64> {
        match self.cfg.transform.mode {
            ModeConfig::Volume => TransformMode::Volume,
            ModeConfig::Boundary => {
                let g = &self.cfg.grid;
                let radius = self.cfg.transform.contour_radius.unwrap_or((g.support_radius + g.half_width / 2.0) / 2.0);
                TransformMode::Boundary { radius }
            }
        }
    }
}

const Z_MAGS: [f64; 5] = [5.0, 10.0, 20.0, 40.0, 80.0];
const ANGLES: [f64; 2] = [0.0, 0.785];

/// Unit-amplitude linear disk, gaussian and two-disk fields on `g`.
fn corpus(g: GridSpec<f64>) -> Result<Vec<ScalarField<f64>>> {
    [PotentialKind::Disk, PotentialKind::Gaussian, PotentialKind::TwoDisks]
        .into_iter()
        .map(|k| {
            let p = BuiltinPotential::new(k, Complex::new(1.0, 0.0), g.support_radius().min(1.0), 0.0, 1.0)?;
            Ok(PotentialModel::new(Arc::new(p), g)?.h0_field([1.0, 0.0]))
        })
        .collect()
}

pub fn forward(ctx: &Context) -> Result<()> {
    let f = &ctx.cfg.forward;
    let solver = HelmholtzSolver::new(ctx.model()?, f.k)?;
    let wave = IncidentWave::from_angle(f.k, f.angle)?;
    let sol = solver.solve(wave, &ForwardOptions { tol: f.tol, max_iter: f.max_iter })?;
    ctx.log.record("forward", json!({ "k": f.k, "angle": f.angle, "iterations": sol.iterations, "residual": sol.residual }));
    let amp = scattering_amplitude(&solver, &sol, &directions(f.directions, 0.0));
    write_atomic(&ctx.path("amplitude.txt"), amp.table().as_bytes())?;
    ctx.field("u.field", &sol.u)?;
    ctx.field("u_sc.field", &sol.u_sc)?;
    ctx.text("u_sc_cross_section.txt", &plot::cross_section(&sol.u_sc))?;
    ctx.text("u_sc_radial.txt", &plot::radial(&sol.u_sc, 64))?;
    let g = solver.grid();
    let radii: Vec<f64> = [4.0, 6.0, 8.0, 12.0]
        .iter()
        .map(|m| m * g.support_radius())
        .filter(|&r| r + 2.0 * g.spacing() < g.half_width())
        .collect();
    if radii.is_empty() {
        ctx.log.record("far_field", json!({ "skipped": "grid too small for radii >= 4 R" }));
    } else {
        let rep = far_field_check(&sol, &amp, &radii)?;
        ctx.log.record("far_field", json!({ "rows": rep.rows, "degenerate": rep.degenerate, "decreasing": rep.decreasing }));
        ctx.text("far_field.txt", &plot::table("radius relative_mismatch", &rep.rows))?;
    }
    println!("forward: {} iterations, residual {:.2e}, max |A| {:.4e}", sol.iterations, sol.residual,
        amp.values.iter().fold(0.0f64, |m, v| m.max(v.norm())));
    Ok(())
}

pub fn cgo(ctx: &Context, xi: [f64; 2]) -> Result<()> {
    let solver = ctx.cgo_solver()?;
    let sol = solver.solve(xi)?;
    ctx.log.record(
        "solve",
        json!({
            "xi": xi, "iterations": sol.iterations, "residual": sol.residual, "sup_norm": sol.sup_norm(),
            "rho": sol.rho_used, "below_cutoff": sol.below_cutoff, "contraction_ratios": sol.contraction_ratios
        }),
    );
    ctx.field("remainder.field", &sol.r)?;
    ctx.text("remainder_radial.txt", &plot::radial(&sol.r, 64))?;
    ctx.text("remainder_cross_section.txt", &plot::cross_section(&sol.r))?;
    println!("cgo: |xi| {:.4}, {} iterations, ||R|| {:.4e}, residual {:.2e}", sol.param.xi_magnitude(),
        sol.iterations, sol.sup_norm(), sol.residual);
    Ok(())
}

fn run_transform(ctx: &Context, solver: &CgoSolver<f64>) -> Result<cgo_scatter::transform::TransformSamples<f64>> {
    let lattice = ctx.lattice()?;
    let t = assemble_transform(solver, &lattice, ctx.transform_mode(), true)?;
    for r in &t.records {
        ctx.log.record(
            "solve",
            json!({ "index": r.index, "xi_magnitude": r.xi_magnitude, "iterations": r.iterations,
                    "residual": r.residual, "provenance": r.provenance.to_string() }),
        );
    }
    for f in &t.failures {
        ctx.log.record("solve_failed", json!({ "index": f.index, "xi_magnitude": f.xi_magnitude, "message": f.message }));
    }
    ctx.log.record(
        "transform",
        json!({ "points": lattice.len(), "solved": t.records.len(), "failed": t.failures.len(),
                "below_cutoff": t.below_cutoff_count(), "cutoff": t.cutoff }),
    );
    if ctx.cfg.output.fields() {
        write_spectral(&ctx.path("transform.field"), &t.values)?;
    }
    t.write_sidecar(&ctx.path("transform_points.txt"))?;
    if !t.failures.is_empty() {
        return Err(StageError::Numerical(cgo_scatter::Error::InvalidArgument(format!(
            "{} of {} lattice solves failed; see transform_points.txt",
            t.failures.len(),
            t.failures.len() + t.records.len()
        ))));
    }
    Ok(t)
}

pub fn transform(ctx: &Context) -> Result<()> {
    let solver = ctx.cgo_solver()?;
    let t = run_transform(ctx, &solver)?;
    println!("transform: {} solves, {} points below cutoff {:.4}", t.records.len(), t.below_cutoff_count(), t.cutoff);
    Ok(())
}

pub fn reconstruct(ctx: &Context) -> Result<()> {
    let solver = ctx.cgo_solver()?;
    let t = run_transform(ctx, &solver)?;
    let lattice = ctx.lattice()?;
    let qb = born_reconstruct(&t)?;
    let h0 = compute_h0(solver.model(), &lattice)?;
    ctx.field("q_b.field", &qb)?;
    ctx.field("h0.field", &h0)?;
    ctx.text("q_b_cross_section.txt", &plot::cross_section(&qb))?;
    ctx.text("q_b_radial.txt", &plot::radial(&qb, 64))?;
    ctx.text("h0_cross_section.txt", &plot::cross_section(&h0))?;
    let [lo, hi] = ctx.cfg.transform.band;
    let rep = regularity_report(&qb, &h0, None, &RegularityOptions { band: (lo, hi), ..Default::default() })?;
    write_atomic(&ctx.path("regularity.txt"), rep.table().as_bytes())?;
    ctx.text("tail_h0.txt", &plot::table("xi mean_power", &rep.h0.annuli))?;
    ctx.text("tail_difference.txt", &plot::table("xi mean_power", &rep.difference.annuli))?;
    ctx.log.record(
        "regularity",
        json!({ "band": [lo, hi], "tail_h0": rep.h0.exponent, "tail_difference": rep.difference.exponent,
                "gain": rep.gain, "passed": rep.passed, "smooth": rep.smooth, "imag_ratio": rep.imag_ratio }),
    );
    let radius = ctx.cfg.potential.as_ref().and_then(|p| p.radius).unwrap_or(1.0);
    let ring = jump_ring(&qb, radius, lattice.half_width() * 0.625)?;
    ctx.text("q_b_gradient_profile.txt", &plot::table("r mean_gradient", &ring.profile))?;
    ctx.log.record("jump_ring", json!({ "radius": ring.ring_radius, "offset_cells": ring.offset_cells }));
    println!(
        "reconstruct: tail(h0) {:.3}, tail(q_B - h0) {:.3}, jump ring at {:.3}",
        rep.h0.exponent, rep.difference.exponent, ring.ring_radius
    );
    Ok(())
}

/// Which checks `verify` runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    Faddeev,
    Dbar,
    GreenIdentity,
    Conditions,
}

impl Check {
    pub const ALL: [Check; 4] = [Check::Faddeev, Check::Dbar, Check::GreenIdentity, Check::Conditions];

    fn name(self) -> &'static str {
        match self {
            Check::Faddeev => "faddeev",
            Check::Dbar => "dbar",
            Check::GreenIdentity => "green-identity",
            Check::Conditions => "conditions",
        }
    }
}

struct Verdict {
    passed: bool,
    summary: String,
}

fn verify_faddeev(ctx: &Context) -> Result<Verdict> {
    let g = ctx.grid()?;
    let mut passed = true;
    let mut lines = Vec::new();
    for (f, kind) in corpus(g)?.iter().zip(["disk", "gaussian", "two-disks"]) {
        let p = prop1_probe(f, &Z_MAGS, &ANGLES, &FaddeevOptions::default())?;
        ctx.text(&format!("decay_{kind}.txt"), &plot::table("z ratio", &p.samples))?;
        ctx.log.record("decay_probe", json!({ "corpus": kind, "samples": p.samples, "slope": p.slope }));
        passed &= p.slope <= -0.5;
        lines.push(format!("{kind} slope {:.3}", p.slope));
    }
    let f = &corpus(g)?[1];
    let target = g.support_radius();
    let mut worst = 0.0f64;
    for xi in [[4.0, 0.0], [5.0, -6.0]] {
        let a = faddeev_convolve_factorized(f, xi, target, &FaddeevOptions::default())?;
        let b = faddeev_convolve_multiplier(f, xi, target, &MultiplierOptions::default())?;
        let inner = target * 2.0 / 3.0;
        let gap = norm_l2(&a.sub(&b)?.restrict_to_disk(inner)) / norm_l2(&a.restrict_to_disk(inner));
        ctx.log.record("two_route", json!({ "xi": xi, "relative_gap": gap }));
        worst = worst.max(gap);
    }
    passed &= worst < 1e-4;
    lines.push(format!("route gap {worst:.2e}"));
    Ok(Verdict { passed, summary: lines.join(", ") })
}

fn verify_dbar(ctx: &Context) -> Result<Verdict> {
    let g = GridSpec::<f64>::new(512, 4.0, 1.5)?;
    let disk = PotentialModel::new(Arc::new(BuiltinPotential::disk(1.0, 1.0)), g)?.h0_field([1.0, 0.0]);
    let u = cauchy_transform(&disk)?;
    let h = g.spacing();
    let mut worst = 0.0f64;
    for k in 0..g.len() {
        let [a, b] = g.point(k);
        let rho = a.hypot(b);
        if (rho - 1.0).abs() < 2.0 * h || a.abs() > 2.0 || b.abs() > 2.0 {
            continue;
        }
        let z = Complex::new(a, b);
        let exact = if rho < 1.0 { z.conj() } else { z.inv() };
        worst = worst.max((u.values()[k] - exact).norm());
    }
    let mean = disk.integral() / (4.0 * g.half_width() * g.half_width());
    let f0 = disk.map(|v| v - mean);
    let iso = (norm_l2(&beurling_transform(&f0)?) - norm_l2(&f0)).abs() / norm_l2(&f0);
    ctx.log.record("dbar", json!({ "cauchy_disk_error": worst, "beurling_isometry_defect": iso }));
    Ok(Verdict { passed: worst < 1e-3 && iso < 1e-10, summary: format!("Cauchy error {worst:.2e}, isometry {iso:.1e}") })
}

fn verify_green_identity(ctx: &Context) -> Result<Verdict> {
    let solver = ctx.cgo_solver()?;
    let mag = 1.5 * solver.constants().cutoff;
    let g = solver.grid();
    let radius = ctx.cfg.transform.contour_radius.unwrap_or((g.support_radius() + g.half_width() / 2.0) / 2.0);
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for angle in [0.3, 1.9] {
        let xi = [mag * f64::cos(angle), mag * f64::sin(angle)];
        let sol = solver.solve(xi)?;
        let v = transform_volume(&solver, &sol)?;
        let b = transform_boundary(&solver, &sol, radius, CONTOUR_NODES)?;
        let rel = (b - v).norm() / v.norm();
        ctx.log.record("green_identity", json!({ "xi": xi, "volume": [v.re, v.im], "boundary": [b.re, b.im], "relative_gap": rel }));
        rows.push((angle, rel));
        worst = worst.max(rel);
    }
    ctx.text("green_identity.txt", &plot::table("angle relative_gap", &rows))?;
    Ok(Verdict { passed: worst < 0.02, summary: format!("|xi| {mag:.3}, boundary vs volume {worst:.2e}") })
}

fn verify_potential_conditions(ctx: &Context) -> Result<Verdict> {
    let m = ctx.model()?;
    let consts = ctx.constants(&m)?;
    let xi_max = ctx.cfg.constants.xi_max;
    let xis: Vec<[f64; 2]> = (0..8)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / 8.0;
            let r = xi_max * (j + 1) as f64 / 8.0;
            [r * a.cos(), r * a.sin()]
        })
        .collect();
    let r_bound = consts.rho.min(LIPSCHITZ_PROBE_RADIUS);
    let rep = verify_conditions(m.potential(), &xis, 256, r_bound, 0x5eed);
    ctx.log.record(
        "conditions",
        json!({ "r_bound": r_bound, "boundedness_ratio": rep.boundedness_ratio, "lipschitz_ratio": rep.lipschitz_ratio,
                "samples": rep.samples, "passed": rep.passed() }),
    );
    Ok(Verdict {
        passed: rep.passed(),
        summary: format!("boundedness {:.3}, Lipschitz {:.3}", rep.boundedness_ratio, rep.lipschitz_ratio),
    })
}

pub fn verify(ctx: &Context, checks: &[Check]) -> Result<()> {
    let mut failed = Vec::new();
    let mut report = String::new();
    for &c in checks {
        let v = match c {
            Check::Faddeev => verify_faddeev(ctx)?,
            Check::Dbar => verify_dbar(ctx)?,
            Check::GreenIdentity => verify_green_identity(ctx)?,
            Check::Conditions => verify_potential_conditions(ctx)?,
        };
        let tag = if v.passed { "PASS" } else { "FAIL" };
        let line = format!("{tag} {}: {}", c.name(), v.summary);
        println!("{line}");
        report.push_str(&line);
        report.push('\n');
        ctx.log.record("check", json!({ "check": c.name(), "passed": v.passed, "summary": v.summary }));
        if !v.passed {
            failed.push(c.name());
        }
    }
    write_atomic(&ctx.path("verify.txt"), report.as_bytes())?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(StageError::Acceptance(failed.join(", ")))
    }
}

pub fn potential_dump(ctx: &Context, xi: [f64; 2]) -> Result<()> {
    let m = ctx.model()?;
    let f = m.h0_field(xi);
    ctx.field("potential.field", &f)?;
    ctx.text("potential_cross_section.txt", &plot::cross_section(&f))?;
    ctx.text("potential_radial.txt", &plot::radial(&f, 64))?;
    let p = m.potential();
    ctx.log.record(
        "potential",
        json!({ "name": p.name(), "support_radius": p.support_radius(), "alpha_norm": m.alpha_norm(),
                "beta_norm": m.beta_norm(), "linear": p.is_linear(), "xi": xi }),
    );
    println!("potential {}: alpha norm {:.6}, beta norm {:.6}", p.name(), m.alpha_norm(), m.beta_norm());
    Ok(())
}
