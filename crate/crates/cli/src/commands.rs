use std::f64::consts::PI;
use std::fmt::Write as _;

use qwalk_core::diabolo::{lattice_profile, lattice_run, ASYMPTOTIC_MIN_RATIO, GROUP_SPEED};
use qwalk_core::io::{field_bytes, probability_bytes, surface_bytes, velocity_csv};
use qwalk_core::spectral::{compute_slice, compute_surface, find_degeneracies, velocity_field, DispersionSurface};
use qwalk_core::{
    azimuthal_symmetry, branch_weights, build_packet, compare_exact_continuum, diabolo_coin_state, dispersion_model,
    moments, probability_field, project_onto_branches, ring_features, BackendRegistry, CoinMatrix, CoinRegistry,
    LatticeField, ProbabilityField, QwError, RadialProfile, RadialSpectrum,
};

use crate::config::{DiaboloMode, RunConfig};
use crate::error::CliError;
use crate::output::OutputDir;

fn coin(cfg: &RunConfig) -> Result<CoinMatrix, CliError> {
    Ok(CoinRegistry::default().resolve(&cfg.coin, cfg.dim)?)
}

/// `0, stride, 2 stride, ...` and always `steps` itself.
pub fn snapshot_times(steps: u64, stride: u64) -> Vec<u64> {
    let mut t: Vec<u64> = (0..=steps).step_by(stride as usize).collect();
    if t.last() != Some(&steps) {
        t.push(steps);
    }
    t
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Mean probability in unit-width rings around `center`.
fn radial_average(p: &ProbabilityField, center: &[f64]) -> String {
    let mut acc: Vec<(f64, usize)> = Vec::new();
    for (i, v) in p.values.iter().enumerate() {
        let r: f64 = p
            .grid
            .coords(i)
            .iter()
            .zip(center)
            .map(|(&x, c)| (x as f64 - c).powi(2))
            .sum::<f64>()
            .sqrt();
        let b = r.round() as usize;
        if acc.len() <= b {
            acc.resize(b + 1, (0.0, 0));
        }
        acc[b].0 += v;
        acc[b].1 += 1;
    }
    let mut out = String::from("r,P\n");
    for (b, (sum, n)) in acc.iter().enumerate() {
        if *n > 0 {
            let _ = writeln!(out, "{b},{}", num(sum / *n as f64));
        }
    }
    out
}

fn to_io(e: CliError) -> QwError {
    QwError::Io(std::io::Error::other(e.to_string()))
}

/// Evolves `state` and writes the snapshots requested in `[outputs]`.
fn run_trajectory(cfg: &RunConfig, c: &CoinMatrix, state: &LatticeField, center: &[f64], out: &mut OutputDir) -> Result<(), CliError> {
    let backends = BackendRegistry::default();
    let backend = backends.get(&cfg.backend)?;
    let times = snapshot_times(cfg.steps, cfg.stride);
    log::info!(
        "backend={} coin={} shape={:?} steps={} snapshots={}",
        backend.name(),
        c.id(),
        cfg.shape,
        cfg.steps,
        times.len()
    );
    let n = cfg.dim;
    let mut csv = String::from("t,total");
    for a in 1..=n {
        let _ = write!(csv, ",c{a}");
    }
    for a in 1..=n {
        let _ = write!(csv, ",s{a}");
    }
    csv.push('\n');
    let outputs = cfg.outputs.clone();
    let mut sink = |f: &LatticeField| -> qwalk_core::Result<()> {
        let p = probability_field(f);
        // Logged to the diagnostics stream by the field itself.
        let _ = p.wrap_warning();
        if outputs.probability {
            out.write(&format!("prob_t{:06}.qwp", f.time), &probability_bytes(&p)).map_err(to_io)?;
        }
        if outputs.moments {
            let m = moments(&p)?;
            let _ = write!(csv, "{},{}", f.time, num(m.total));
            for v in m.centroid.iter().chain(m.std_devs().iter()) {
                let _ = write!(csv, ",{}", num(*v));
            }
            csv.push('\n');
        }
        if outputs.radial_cuts {
            out.write(&format!("radial_t{:06}.csv", f.time), radial_average(&p, center).as_bytes())
                .map_err(to_io)?;
        }
        if outputs.field && f.time == cfg.steps {
            out.write(&format!("field_t{:06}.qwf", f.time), &field_bytes(f, c.id())).map_err(to_io)?;
        }
        Ok(())
    };
    backend.trajectory(state, c, &times, &mut sink)?;
    if cfg.outputs.moments {
        out.write("moments.csv", csv.as_bytes())?;
    }
    Ok(())
}

pub fn evolve(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let c = coin(cfg)?;
    let grid = cfg.grid()?;
    let spec = cfg.packet_spec()?;
    let center = spec.center_on(&grid);
    let state = build_packet(&spec, &c, grid)?;
    run_trajectory(cfg, &c, &state, &center, out)
}

/// Keeps only the requested branches of the initial packet, then evolves it.
pub fn project(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let branches = &cfg
        .project
        .as_ref()
        .ok_or_else(|| CliError::Config("section [project] is required by this command".into()))?
        .branches;
    let c = coin(cfg)?;
    let grid = cfg.grid()?;
    let spec = cfg.packet_spec()?;
    let center = spec.center_on(&grid);
    let state = build_packet(&spec, &c, grid)?;
    let mut text = String::from("branch,weight\n");
    for (s, w) in branch_weights(&state, &c)?.iter().enumerate() {
        let _ = writeln!(text, "{},{}", s + 1, num(*w));
    }
    out.write("branch_weights.csv", text.as_bytes())?;
    let projected = project_onto_branches(&state, &c, branches)?;
    let kept = projected.norm_sqr();
    log::info!("projection onto branches {branches:?} keeps weight {kept:.6e}");
    if kept < 1e-14 {
        log::warn!("the packet has no weight on branches {branches:?}");
    }
    out.write("projected_t000000.qwf", &field_bytes(&projected, c.id()))?;
    run_trajectory(cfg, &c, &projected, &center, out)
}

pub fn compare(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let c = coin(cfg)?;
    let grid = cfg.grid()?;
    let spec = cfg.packet_spec()?;
    let report = compare_exact_continuum(&spec, &c, grid, cfg.steps)?;
    let mut text = report.to_text();
    for (i, pc) in report.predicted_centers.iter().enumerate() {
        let coords: Vec<String> = pc.iter().map(|x| num(*x)).collect();
        let _ = writeln!(text, "predicted_center[{i}]=({})", coords.join(","));
    }
    out.write("report.txt", text.as_bytes())?;
    out.write("exact.qwp", &probability_bytes(&report.exact))?;
    out.write("continuum.qwp", &probability_bytes(&report.continuum))?;
    print!("{}", report.to_text());
    Ok(())
}

pub fn dispersion(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let d = cfg
        .dispersion
        .as_ref()
        .ok_or_else(|| CliError::Config("section [dispersion] is required by this command".into()))?;
    let c = coin(cfg)?;
    let model = dispersion_model(&d.model, &c)?;
    let mut surfaces: Vec<(String, DispersionSurface)> = Vec::new();
    match &d.slices {
        Some(values) => {
            for (i, v) in values.iter().enumerate() {
                let mut fixed = vec![None; cfg.dim - 1];
                fixed.push(Some(v * PI));
                log::info!("slice {i}: k{} = {v} pi", cfg.dim);
                surfaces.push((format!("slice{i}"), compute_slice(model.as_ref(), d.resolution, &fixed)?));
            }
        }
        None => surfaces.push(("full".into(), compute_surface(model.as_ref(), d.resolution)?)),
    }
    for (tag, surf) in &surfaces {
        out.write(&format!("surface_{tag}.qwd"), &surface_bytes(surf, model.name()))?;
        if let Some(s) = d.velocity_branch {
            let v = velocity_field(model.as_ref(), surf, s)?;
            let singular = v.iter().filter(|x| x.is_none()).count();
            if singular > 0 {
                log::warn!("{tag}: group velocity of branch {s} undefined at {singular} sample(s)");
            }
            out.write(&format!("velocity_s{s}_{tag}.csv"), velocity_csv(surf, &v).as_bytes())?;
        }
    }
    if d.degeneracies {
        let report = find_degeneracies(&c, d.resolution, d.tolerance)?;
        log::info!(
            "degeneracies: {} point cluster(s), {} line(s)",
            report.points().count(),
            report.lines().count()
        );
        out.write("degeneracies.txt", report.to_text().as_bytes())?;
        print!("{}", report.to_text());
    }
    Ok(())
}

pub fn diabolo(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let d = cfg
        .diabolo
        .as_ref()
        .ok_or_else(|| CliError::Config("section [diabolo] is required by this command".into()))?;
    let c = coin(cfg)?;
    let ct = GROUP_SPEED * d.t as f64;
    let asymptotic_ok = ct >= ASYMPTOTIC_MIN_RATIO * d.sigma;
    if !asymptotic_ok {
        log::warn!(
            "c t = {ct:.3} is below {ASYMPTOTIC_MIN_RATIO} sigma = {:.3}: outside the asymptotic regime, asymptotic output suppressed",
            ASYMPTOTIC_MIN_RATIO * d.sigma
        );
    }
    let mut summary = String::new();
    let mut emit = |out: &mut OutputDir, tag: &str, prof: &RadialProfile| -> Result<(), CliError> {
        out.write(&format!("profile_{tag}.csv"), prof.to_csv().as_bytes())?;
        match ring_features(prof) {
            Ok(f) => {
                out.write(&format!("features_{tag}.txt"), f.to_text().as_bytes())?;
                let _ = write!(summary, "{tag}: {}", f.to_text());
            }
            Err(e) => log::warn!("{tag}: {e}"),
        }
        Ok(())
    };
    if d.mode == DiaboloMode::Full {
        let spectrum = RadialSpectrum::gaussian(d.sigma)?;
        let prof = RadialProfile::from_quadrature(&spectrum, GROUP_SPEED, d.t as f64, d.xi_min, d.xi_max, d.xi_step)?;
        emit(out, "quadrature", &prof)?;
    }
    if asymptotic_ok {
        emit(out, "asymptotic", &RadialProfile::asymptotic(d.xi_min, d.xi_max, d.xi_step))?;
    }
    if let Some(side) = d.lattice_side {
        let p = probability_field(&lattice_run(&c, d.sigma, diabolo_coin_state(), side, d.t)?);
        let _ = p.wrap_warning();
        let prof = lattice_profile(&p, d.sigma, ct, d.xi_min, d.xi_max)?;
        emit(out, "lattice", &prof)?;
        let asym = azimuthal_symmetry(&p, &[0.0, 0.0])?;
        let _ = writeln!(summary, "lattice azimuthal_deviation={asym:.6}");
        out.write("lattice.qwp", &probability_bytes(&p))?;
    }
    out.write("features.txt", summary.as_bytes())?;
    print!("{summary}");
    Ok(())
}
