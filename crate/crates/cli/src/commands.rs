//! One function per subcommand. Each returns the files it wants written and
//! a JSON object of diagnostics; nothing touches the disk here.

use rayon::prelude::*;
use serde_json::{json, Value};

use ringcav::hilbert::{DensityState, LatticeSpec};
use ringcav::io::{csv_table, profile_csv, snapshot_text, trajectory_csv, wigner_csv};
use ringcav::meanfield::{self, MeanFieldConfig, MeanFieldState};
use ringcav::model::build_hamiltonian;
use ringcav::observables::wigner::{extract_field, wigner, WignerOptions};
use ringcav::observables::{self, is_passive, Mode as FieldMode};
use ringcav::quantum::{self, Trajectory};
use ringcav::steady::steady_state;
use ringcav::sweep::{onset, run_sweep, SWEEP_COLUMNS};
use ringcav::{PhysicalParams, RationalAngle};

use crate::config::RunConfig;

/// Files produced by a command, keyed by file name, and its diagnostics.
pub struct Outputs {
    pub files: Vec<(String, String)>,
    pub diagnostics: Value,
    /// Largest boundary population seen, compared against `checks.boundary_limit`.
    pub boundary: f64,
}

fn column_max(traj: &Trajectory, names: &[&str]) -> f64 {
    names
        .iter()
        .filter_map(|n| traj.get(n))
        .flat_map(|s| s.iter().copied())
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
}

fn column(traj: &Trajectory, name: &str) -> Vec<f64> {
    traj.get(name).map(<[f64]>::to_vec).unwrap_or_default()
}

fn distribution_csv(name: &str, values: &[f64]) -> String {
    csv_table(&["n", name], values.iter().enumerate().map(|(n, p)| vec![n as f64, *p]))
}

fn quantum_run(cfg: &RunConfig) -> ringcav::Result<(LatticeSpec, Trajectory)> {
    let params = cfg.physical.params();
    let spec = cfg.lattice.spec(params.angle)?;
    let h = build_hamiltonian(&spec, &params)?;
    let rho0 = DensityState::ground(&spec);
    let traj = quantum::evolve(&rho0, &h, &spec, params.kappa, &cfg.integrator)?;
    Ok((spec, traj))
}

fn quantum_outputs(cfg: &RunConfig, spec: &LatticeSpec, traj: &Trajectory) -> ringcav::Result<Outputs> {
    let rho = traj.final_state().expect("final state is always kept");
    let mut files = vec![("quantum_trajectory.csv".to_owned(), trajectory_csv(traj))];
    let mom = observables::momentum_stats(rho, spec)?;
    files.push((
        "quantum_momentum.csv".into(),
        profile_csv(["p", "probability"], &mom.distribution),
    ));
    let mut passive = serde_json::Map::new();
    for mode in [FieldMode::Plus, FieldMode::Minus] {
        let p = observables::photon_distribution(rho, mode)?;
        passive.insert(mode.tag().into(), json!(is_passive(&p)));
        files.push((format!("quantum_photons_{}.csv", mode.tag()), distribution_csv("probability", &p)));
        let red = observables::reduced_mode(rho, mode)?;
        files.push((format!("quantum_state_{}.txt", mode.tag()), snapshot_text(&red)));
    }
    files.push((
        "quantum_state_atom.txt".into(),
        snapshot_text(&observables::reduced_atom(rho)?),
    ));
    if cfg.output.full_state {
        files.push(("quantum_state.txt".into(), snapshot_text(rho)));
    }
    let trace = column(traj, "trace");
    let drift = trace.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max);
    let min_eig = column(traj, "min_eigenvalue").into_iter().fold(f64::INFINITY, f64::min);
    let boundary = column_max(traj, &["boundary_momentum", "boundary_plus", "boundary_minus"]);
    let times = &traj.times;
    let p = column(traj, "p_mean");
    let t_end = cfg.integrator.t_final;
    let stats = traj.stats.as_ref();
    let diagnostics = json!({
        "dimension": spec.dim(),
        "trace_drift": drift,
        "min_eigenvalue": min_eig,
        "boundary_max": boundary,
        "final_p_mean": p.last(),
        "final_log_negativity": column(traj, "log_negativity").last(),
        "slope_last_unit": (t_end >= 1.0).then(|| meanfield::slope(times, &p, t_end - 1.0, t_end)),
        "passive": passive,
        "accepted_steps": stats.map(|s| s.accepted),
        "rejected_steps": stats.map(|s| s.rejected),
    });
    Ok(Outputs {
        files,
        diagnostics,
        boundary,
    })
}

pub fn dynamics(cfg: &RunConfig) -> ringcav::Result<Outputs> {
    let (spec, traj) = quantum_run(cfg)?;
    quantum_outputs(cfg, &spec, &traj)
}

fn meanfield_run(
    params: &PhysicalParams,
    mf: &MeanFieldConfig,
) -> ringcav::Result<(Trajectory, MeanFieldState)> {
    let initial = meanfield::default_initial(params.angle, mf)?;
    meanfield::evolve(initial, params, mf)
}

fn meanfield_outputs(traj: &Trajectory, state: &MeanFieldState, t_end: f64) -> Outputs {
    let k = state.grid.k();
    let mut dist: Vec<(f64, f64)> = k.iter().copied().zip(state.momentum_distribution()).collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0));
    let norm = column(traj, "trace");
    let drift = norm.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max);
    let boundary = column_max(traj, &["boundary_momentum"]);
    let p = column(traj, "p_mean");
    let diagnostics = json!({
        "grid_points": state.grid.len(),
        "norm_drift": drift,
        "boundary_max": boundary,
        "final_p_mean": p.last(),
        "final_abs_alpha_plus": state.alpha_plus.norm(),
        "final_abs_alpha_minus": state.alpha_minus.norm(),
        "slope_second_last_unit": (t_end >= 2.0).then(|| meanfield::slope(&traj.times, &p, t_end - 2.0, t_end - 1.0)),
        "slope_last_unit": (t_end >= 1.0).then(|| meanfield::slope(&traj.times, &p, t_end - 1.0, t_end)),
    });
    Outputs {
        files: vec![
            ("meanfield_trajectory.csv".into(), trajectory_csv(traj)),
            ("meanfield_momentum.csv".into(), profile_csv(["p", "probability"], &dist)),
        ],
        diagnostics,
        boundary,
    }
}

pub fn meanfield(cfg: &RunConfig) -> ringcav::Result<Outputs> {
    let params = cfg.physical.params();
    let (traj, state) = meanfield_run(&params, &cfg.meanfield)?;
    Ok(meanfield_outputs(&traj, &state, cfg.meanfield.t_final))
}

/// Quantum and mean-field dynamics on a shared time grid, plus the
/// mean-field run repeated with the seed scaled by 10 and by 0.1.
pub fn compare(cfg: &RunConfig) -> ringcav::Result<Outputs> {
    let params = cfg.physical.params();
    let mf = cfg.compare_meanfield();
    let seeds = [mf.seed, mf.seed * 10.0, mf.seed * 0.1];
    let (quantum, mf_runs) = rayon::join(
        || quantum_run(cfg),
        || {
            seeds
                .par_iter()
                .map(|&seed| meanfield_run(&params, &MeanFieldConfig { seed, ..mf }))
                .collect::<ringcav::Result<Vec<_>>>()
        },
    );
    let (spec, qtraj) = quantum?;
    let mf_runs = mf_runs?;
    let (mtraj, mstate) = &mf_runs[0];
    let aligned = qtraj.times.len() == mtraj.times.len()
        && qtraj.times.iter().zip(&mtraj.times).all(|(a, b)| (a - b).abs() < 1e-9);
    if !aligned {
        return Err(ringcav::Error::InvalidParameter(
            "quantum and mean-field sample times differ; choose a record_interval that divides t_final".into(),
        ));
    }

    let mut q = quantum_outputs(cfg, &spec, &qtraj)?;
    let m = meanfield_outputs(mtraj, mstate, mf.t_final);
    q.files.extend(m.files);

    let t_end = cfg.integrator.t_final;
    let qp = column(&qtraj, "p_mean");
    let mp = column(mtraj, "p_mean");
    let times = &qtraj.times;
    let windows: Vec<(f64, f64)> = (0..t_end.floor() as usize).map(|i| (i as f64, i as f64 + 1.0)).collect();
    let slope_rows = windows.iter().map(|&(a, b)| {
        vec![
            a,
            b,
            meanfield::slope(times, &qp, a, b),
            meanfield::slope(times, &mp, a, b),
        ]
    });
    q.files.push((
        "compare_slopes.csv".into(),
        csv_table(&["t_start", "t_end", "quantum_slope", "meanfield_slope"], slope_rows),
    ));
    let aligned = times.iter().enumerate().map(|(i, t)| {
        vec![
            *t,
            qp[i],
            mp[i],
            qtraj.get("log_negativity").map_or(f64::NAN, |s| s[i]),
        ]
    });
    q.files.push((
        "compare_momentum.csv".into(),
        csv_table(&["time", "quantum_p_mean", "meanfield_p_mean", "log_negativity"], aligned),
    ));
    let sensitivity: Vec<Value> = seeds
        .iter()
        .zip(&mf_runs)
        .map(|(s, (traj, _))| {
            json!({
                "seed": s,
                "final_p_mean": traj.get("p_mean").and_then(|p| p.last()),
            })
        })
        .collect();
    q.diagnostics = json!({
        "quantum": q.diagnostics,
        "meanfield": m.diagnostics,
        "seed_sensitivity": sensitivity,
    });
    q.boundary = q.boundary.max(m.boundary);
    Ok(q)
}

fn angle_tag(a: RationalAngle) -> String {
    format!("{}_{}", a.numerator(), a.denominator())
}

/// Independent η sweeps per pump angle, run concurrently.
pub fn sweep(cfg: &RunConfig) -> ringcav::Result<Outputs> {
    let scfg = cfg.sweep.config();
    let base = cfg.physical.params();
    let results = cfg
        .sweep
        .chains
        .par_iter()
        .map(|chain| {
            let spec = chain.spec(&cfg.lattice)?;
            let angle = chain.sin_phi;
            let params = PhysicalParams { angle, ..base };
            run_sweep(&spec, &params, &scfg).map(|rows| (angle, rows))
        })
        .collect::<ringcav::Result<Vec<_>>>()?;
    let mut files = Vec::new();
    let mut diag = serde_json::Map::new();
    let mut boundary: f64 = 0.0;
    for (angle, rows) in &results {
        let tag = angle_tag(*angle);
        files.push((
            format!("sweep_sin_{tag}.csv"),
            csv_table(&SWEEP_COLUMNS, rows.iter().map(|r| r.values())),
        ));
        let b = rows
            .iter()
            .map(|r| r.boundary_momentum.max(r.boundary_plus).max(r.boundary_minus))
            .fold(0.0, f64::max);
        boundary = boundary.max(b);
        diag.insert(
            format!("sin_{tag}"),
            json!({
                "onset_alpha_plus": onset(rows, |r| r.abs_alpha_plus_q),
                "onset_alpha_minus": onset(rows, |r| r.abs_alpha_minus_q),
                "max_residual": rows.iter().map(|r| r.residual).fold(0.0, f64::max),
                "max_symmetric_residual": rows.iter().map(|r| r.symmetric_residual).fold(0.0, f64::max),
                "max_mode_coherence": rows.iter().map(|r| r.mode_coherence).fold(0.0, f64::max),
                "boundary_max": b,
            }),
        );
    }
    Ok(Outputs {
        files,
        diagnostics: Value::Object(diag),
        boundary,
    })
}

/// Coherent-state Wigner function `(2/π) e^{−2(x−|α|)²}` along the real axis.
fn coherent_cut(x: f64, amplitude: f64) -> f64 {
    2.0 / std::f64::consts::PI * (-2.0 * (x - amplitude).powi(2)).exp()
}

/// Steady-state Wigner functions of both modes with radial profiles and
/// cuts. The cuts carry a coherent-state reference at the mean-field
/// amplitude reached at the end of the mean-field run.
pub fn wigner_maps(cfg: &RunConfig) -> ringcav::Result<Outputs> {
    let params = cfg.physical.params();
    let spec = cfg.lattice.spec(params.angle)?;
    let (steady, mf) = rayon::join(
        || {
            let h = build_hamiltonian(&spec, &params)?;
            steady_state(&h, &spec, params.kappa, &cfg.sweep.steady, None)
        },
        || meanfield_run(&params, &cfg.meanfield),
    );
    let ss = steady?;
    let (_, mstate) = mf?;
    let rho = &ss.rho_ss;
    let opts = WignerOptions {
        points: cfg.wigner.points,
        half_width: cfg.wigner.half_width,
    };
    let mut files = vec![("steady_state_atom.txt".to_owned(), snapshot_text(&observables::reduced_atom(rho)?))];
    let mut modes = serde_json::Map::new();
    for (mode, amp) in [
        (FieldMode::Plus, mstate.alpha_plus.norm()),
        (FieldMode::Minus, mstate.alpha_minus.norm()),
    ] {
        let tag = mode.tag();
        let red = observables::reduced_mode(rho, mode)?;
        let w = wigner(&red, &opts, Some(mode))?;
        let field = extract_field(&w)?;
        files.push((format!("wigner_{tag}.csv"), wigner_csv(&w)));
        files.push((format!("steady_state_{tag}.txt"), snapshot_text(&red)));
        files.push((
            format!("wigner_radial_{tag}.csv"),
            profile_csv(["r", "w"], &field.radial_profile),
        ));
        files.push((
            format!("wigner_cut_{tag}.csv"),
            csv_table(
                &["re_alpha", "w", "w_coherent_meanfield"],
                field.cut.iter().map(|&(x, v)| vec![x, v, coherent_cut(x, amp)]),
            ),
        ));
        let m = red.matrix();
        let coherence = (0..m.nrows())
            .flat_map(|r| (0..m.ncols()).filter(move |c| *c != r).map(move |c| (r, c)))
            .map(|(r, c)| m[(r, c)].norm())
            .fold(0.0, f64::max);
        modes.insert(
            tag.into(),
            json!({
                "magnitude": field.magnitude,
                "is_annulus": field.is_annulus,
                "integral": w.integral(),
                "tail_weight": w.tail_weight,
                "mode_coherence": coherence,
                "meanfield_amplitude": amp,
            }),
        );
    }
    let trunc = quantum::check_truncation(rho, &spec);
    let order = observables::order_parameters(rho, &spec)?;
    let diagnostics = json!({
        "dimension": spec.dim(),
        "residual": ss.residual,
        "converge_time": ss.time,
        "boundary": trunc,
        "theta_abs": [order.theta_plus.norm(), order.theta_minus.norm()],
        "alpha_abs": [
            observables::field_moments(rho, FieldMode::Plus)?.0.norm(),
            observables::field_moments(rho, FieldMode::Minus)?.0.norm(),
        ],
        "modes": modes,
    });
    Ok(Outputs {
        files,
        diagnostics,
        boundary: trunc.max(),
    })
}
