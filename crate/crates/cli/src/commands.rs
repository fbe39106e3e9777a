use std::f64::consts::PI;

use qst_memory::chain::{boundary_provider, PstClosedForm};
use qst_memory::channel::{
    capacity_upper_bound, choi, first_use_map, max_coherent_information, reconstruct_map, second_use_map,
    second_use_params, InputSearch,
};
use qst_memory::entanglement::{default_grid, distribution_profile, zero_windows_below, DEFAULT_GRID_POINTS};
use qst_memory::oracle::{ManyBodyModel, Oracle, ProtocolSchedule};
use qst_memory::validation::{run_validation, ValidationConfig};
use qst_memory::LOCC_LIMIT;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{delta_time, RunConfig, Scheme};
use crate::error::CliError;
use crate::output::{Cell, Table};

pub const DECOMPOSITION_TOLERANCE: f64 = 1e-10;
pub const CHOI_TOLERANCE: f64 = 1e-9;

/// A rendered table plus, for `validate`, what failed.
pub struct Report {
    pub table: Table,
    pub failure: Option<String>,
}

impl From<Table> for Report {
    fn from(table: Table) -> Self {
        Report { table, failure: None }
    }
}

fn metadata(command: &str, cfg: &RunConfig, extra: Value) -> Value {
    let mut m = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "tolerances": {
            "decomposition": DECOMPOSITION_TOLERANCE,
            "choi_psd": CHOI_TOLERANCE,
            "zero_threshold": cfg.zero_threshold,
        },
        "locc_limit": LOCC_LIMIT,
    });
    if let (Value::Object(m), Value::Object(extra)) = (&mut m, extra) {
        m.extend(extra);
    }
    m
}

fn linspace(a: f64, b: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![a];
    }
    (0..points).map(|i| a + (b - a) * i as f64 / (points - 1) as f64).collect()
}

fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn amplitudes(cfg: &RunConfig) -> Result<Report, CliError> {
    let provider = boundary_provider(&cfg.chain()?)?;
    let grid = linspace(cfg.t_min.unwrap_or(0.0), cfg.t_max.unwrap_or(PI), cfg.points.unwrap_or(201));
    let rows = grid
        .par_iter()
        .map(|&t| {
            let b = provider.boundary(t);
            vec![t.into(), b.f11.re.into(), b.f11.im.into(), b.f1n.re.into(), b.f1n.im.into()]
        })
        .collect();
    Ok(Table {
        metadata: metadata("amplitudes", cfg, json!({})),
        columns: columns(&["t", "re_f11", "im_f11", "re_f1N", "im_f1N"]),
        rows,
    }
    .into())
}

pub fn sweep_uses(cfg: &RunConfig) -> Result<Report, CliError> {
    if cfg.times.is_some() {
        return Err(CliError::Config("sweep-uses takes deltas, not times".into()));
    }
    let n_max = cfg.uses.unwrap_or(10);
    let deltas = cfg.deltas.clone().unwrap_or_else(|| vec![0.0, 0.01, 0.02, 0.05, 0.1]);
    let kernel = cfg.kernel(n_max - 1)?;
    let provider = boundary_provider(&cfg.chain()?)?;
    let cells: Vec<(usize, usize)> = (1..=n_max).flat_map(|n| (0..deltas.len()).map(move |d| (n, d))).collect();
    let values = cells
        .par_iter()
        .map(|&(n, d)| kernel.nth_use_fidelity(&vec![delta_time(deltas[d]); n], provider.as_ref()))
        .collect::<qst_memory::Result<Vec<f64>>>()?;
    let rows = values
        .chunks(deltas.len())
        .enumerate()
        .map(|(i, chunk)| {
            let mut row = vec![Cell::from(i + 1)];
            row.extend(chunk.iter().map(|&f| Cell::from(f)));
            row
        })
        .collect();
    let mut cols = vec!["n".to_string()];
    cols.extend(deltas.iter().map(|d| format!("delta_{d}")));
    Ok(Table {
        metadata: metadata("sweep-uses", cfg, json!({})),
        columns: cols,
        rows,
    }
    .into())
}

pub fn sweep_length(cfg: &RunConfig) -> Result<Report, CliError> {
    if cfg.scheme != Scheme::Pst {
        return Err(CliError::Config("sweep-length uses the closed-form PST amplitudes".into()));
    }
    if cfg.times.is_some() {
        return Err(CliError::Config("sweep-length takes delta, not times".into()));
    }
    let t = delta_time(cfg.delta.unwrap_or(0.01));
    let kernel = cfg.kernel(cfg.max_uses - 1)?;
    let lengths: Vec<usize> = (cfg.length_min..=cfg.length_max).step_by(cfg.length_step).collect();
    let table = lengths
        .par_iter()
        .map(|&n| {
            let p = PstClosedForm::new(n)?;
            (1..=cfg.max_uses)
                .map(|uses| kernel.nth_use_fidelity(&vec![t; uses], &p))
                .collect::<qst_memory::Result<Vec<f64>>>()
        })
        .collect::<qst_memory::Result<Vec<_>>>()?;
    let first_below: Vec<Option<usize>> = (0..cfg.max_uses)
        .map(|u| lengths.iter().zip(&table).find(|(_, f)| f[u] <= LOCC_LIMIT).map(|(&n, _)| n))
        .collect();
    let rows = lengths
        .iter()
        .zip(&table)
        .map(|(&n, fs)| {
            let mut row = vec![Cell::from(n)];
            row.extend(fs.iter().map(|&f| Cell::from(f)));
            row
        })
        .collect();
    let mut cols = vec!["N".to_string()];
    cols.extend((1..=cfg.max_uses).map(|u| format!("F{u}")));
    Ok(Table {
        metadata: metadata("sweep-length", cfg, json!({ "first_length_at_or_below_locc": first_below })),
        columns: cols,
        rows,
    }
    .into())
}

pub fn map(cfg: &RunConfig) -> Result<Report, CliError> {
    if cfg.uses.is_some_and(|n| n != 2) {
        return Err(CliError::Config("map reports the second-use decomposition; uses must be 2".into()));
    }
    let spec = cfg.chain()?;
    let times = cfg.schedule(2)?;
    let (t1, t2) = (times[0], times[1]);
    let provider = boundary_provider(&spec)?;
    let (gad, pd) = second_use_params(t1, t2, provider.as_ref())?;
    let analytic = second_use_map(t1, t2, provider.as_ref())?;
    let oracle = Oracle::new(&ManyBodyModel::xx(&spec)?, 2)?;
    let reconstructed = reconstruct_map(&ProtocolSchedule::haar(&spec, times.clone())?, &oracle)?;
    let residual = reconstructed.max_difference(&analytic);
    let mut eig = choi(&reconstructed).eigenvalues()?;
    eig.sort_by(f64::total_cmp);
    let bound = capacity_upper_bound(gad.gamma, gad.p)?;
    let first = max_coherent_information(&first_use_map(t1, provider.as_ref())?, InputSearch::Diagonal)?.max(0.0);
    let mut rows: Vec<Vec<Cell>> = vec![
        vec!["t1".into(), t1.into()],
        vec!["t2".into(), t2.into()],
        vec!["gamma2".into(), gad.gamma.into()],
        vec!["p2".into(), gad.p.into()],
        vec!["lambda2".into(), pd.lambda.into()],
    ];
    for (i, e) in eig.iter().enumerate() {
        rows.push(vec![format!("choi_eigenvalue_{}", i + 1).into(), (*e).into()]);
    }
    rows.push(vec!["capacity_bound".into(), bound.into()]);
    rows.push(vec!["coherent_information_first_use".into(), first.into()]);
    rows.push(vec!["decomposition_residual".into(), residual.into()]);
    Ok(Table {
        metadata: metadata(
            "map",
            cfg,
            json!({
                "decomposition_ok": residual <= DECOMPOSITION_TOLERANCE,
                "choi_psd": eig[0] >= -CHOI_TOLERANCE,
            }),
        ),
        columns: columns(&["quantity", "value"]),
        rows,
    }
    .into())
}

pub fn concurrence(cfg: &RunConfig) -> Result<Report, CliError> {
    let spec = cfg.chain()?;
    let points = cfg.points.unwrap_or(DEFAULT_GRID_POINTS);
    let grid = match (cfg.t_min, cfg.t_max) {
        (None, None) => default_grid(points),
        (a, b) => linspace(a.unwrap_or(0.0), b.unwrap_or(PI), points),
    };
    let first = distribution_profile(1, &spec, &grid)?;
    let second = distribution_profile(2, &spec, &grid)?;
    let windows: Vec<[f64; 2]> = zero_windows_below(&second, cfg.zero_threshold)
        .into_iter()
        .map(|(a, b)| [a, b])
        .collect();
    let rows = first
        .iter()
        .zip(&second)
        .map(|(a, b)| vec![a.t.into(), a.concurrence.into(), b.concurrence.into()])
        .collect();
    Ok(Table {
        metadata: metadata("concurrence", cfg, json!({ "second_use_zero_windows": windows })),
        columns: columns(&["t", "C1", "C2"]),
        rows,
    }
    .into())
}

pub fn validate(cfg: &RunConfig) -> Result<Report, CliError> {
    let report = run_validation(&ValidationConfig {
        seed: cfg.seed,
        instances: cfg.instances,
        ..ValidationConfig::default()
    });
    let rows = report
        .checks
        .iter()
        .map(|c| {
            vec![
                c.suite.name().into(),
                c.instances.into(),
                c.worst.into(),
                c.tolerance.into(),
                c.passed.into(),
                c.error.clone().unwrap_or_default().into(),
            ]
        })
        .collect();
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.suite.name()).collect();
    Ok(Report {
        table: Table {
            metadata: metadata("validate", cfg, json!({ "all_passed": report.all_passed() })),
            columns: columns(&["suite", "instances", "worst", "tolerance", "passed", "error"]),
            rows,
        },
        failure: (!failed.is_empty()).then(|| failed.join(", ")),
    })
}
