//! Subcommand implementations. Each returns named tables; nodes that fail
//! inside a sweep are kept as `NaN` rows with `mask = 1`.

use jct_core::dynamics::{fidelity_scan, gap_period, loschmidt_echo, uniform_times};
use jct_core::ep::{classify, sweep_surface, EpKind};
use jct_core::model::build_effective_matrix;
use jct_core::perturb::{
    coalescing_pair, fit_scaling, log_ladder, puiseux_2ep, puiseux_3ep, three_ep_seed,
    track_ladder, ScalingFit,
};
use jct_core::spectral::{
    cardano_eigenvalues, cardano_pq, eigensystem3, track_branches, DEFECTIVENESS_TOL, REALITY_TOL,
};
use jct_core::{ModelParams, C64};
use rayon::prelude::*;

use crate::config::{resolve, Axis, ParamValue, RunConfig, Scenario};
use crate::error::{CliError, CliResult};
use crate::table::{complex_cells, complex_columns, Cell, ResultTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Slice,
    Surface,
    Classify,
    Perturb,
    Fidelity,
    Quench,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Slice => "slice",
            Command::Surface => "surface",
            Command::Classify => "classify",
            Command::Perturb => "perturb",
            Command::Fidelity => "fidelity",
            Command::Quench => "quench",
        }
    }
}

/// A table and the file stem it is written under.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub stem: String,
    pub table: ResultTable,
}

pub fn run(cmd: Command, cfg: &RunConfig) -> CliResult<Vec<Output>> {
    let mut outputs = match cmd {
        Command::Spectrum => spectrum(cfg)?,
        Command::Slice => slice(cfg)?,
        Command::Surface => surface(cfg)?,
        Command::Classify => classify_point(cfg)?,
        Command::Perturb => perturb(cfg)?,
        Command::Fidelity => fidelity(cfg)?,
        Command::Quench => quench(cfg)?,
    };
    let hash = cfg.hash();
    for o in &mut outputs {
        let mut header = vec![
            (
                "tool".to_string(),
                format!("jct {}", env!("CARGO_PKG_VERSION")),
            ),
            ("command".to_string(), cmd.as_str().to_string()),
            ("config".to_string(), cfg.name.clone()),
            ("config-sha256".to_string(), hash.clone()),
            (
                "tolerances".to_string(),
                format!(
                    "classify={:e} defectiveness={:e} reality={:e}",
                    cfg.tolerances.classify, DEFECTIVENESS_TOL, REALITY_TOL
                ),
            ),
        ];
        header.append(&mut o.table.header);
        o.table.header = header;
    }
    Ok(outputs)
}

fn missing(block: &str) -> CliError {
    CliError::Config(format!("config has no [{block}] block"))
}

/// Base parameters with axis values applied, then critical-line keywords
/// resolved (skipped for quantities an axis sets directly).
fn node(cfg: &RunConfig, axes: &[(&Axis, f64)]) -> jct_core::Result<ModelParams> {
    let mut p = cfg.params.base();
    for (axis, v) in axes {
        p = axis.apply(p, *v);
    }
    let swept = |n: &str| axes.iter().any(|(a, _)| a.name == n);
    let theta = if swept("theta") {
        ParamValue::Number(p.theta)
    } else {
        cfg.params.theta.clone()
    };
    let gamma = if swept("gamma") {
        ParamValue::Number(p.gamma)
    } else {
        cfg.params.gamma.clone()
    };
    resolve(p, &theta, &gamma)
}

fn energy_columns(prefix: &str) -> Vec<String> {
    (1..=3)
        .flat_map(|n| complex_columns(&format!("{prefix}{n}")))
        .collect()
}

fn energy_cells(e: &[C64; 3]) -> Vec<Cell> {
    e.iter().flat_map(|z| complex_cells(*z)).collect()
}

fn nan_cells(n: usize) -> Vec<Cell> {
    vec![Cell::Num(f64::NAN); n]
}

fn spectrum(cfg: &RunConfig) -> CliResult<Vec<Output>> {
    let block = cfg.spectrum.as_ref().ok_or_else(|| missing("spectrum"))?;
    let [a0, a1] = &block.axes;
    let grid: Vec<(f64, f64)> = a0
        .values()
        .into_iter()
        .flat_map(|x| a1.values().into_iter().map(move |y| (x, y)))
        .collect();
    let rows: Vec<Vec<Cell>> = grid
        .par_iter()
        .map(|&(x, y)| {
            let mut row = vec![Cell::Num(x), Cell::Num(y)];
            let point = node(cfg, &[(a0, x), (a1, y)]).and_then(|p| {
                Ok((
                    cardano_eigenvalues(&p)?,
                    classify(&p, cfg.tolerances.classify)?.kind,
                ))
            });
            match point {
                Ok((e, kind)) => {
                    row.extend(energy_cells(&e));
                    row.push(Cell::Text(kind.as_str().into()));
                    row.push(Cell::Int(0));
                }
                Err(_) => {
                    row.extend(nan_cells(6));
                    row.push(Cell::Text(String::new()));
                    row.push(Cell::Int(1));
                }
            }
            row
        })
        .collect();
    let mut columns = vec![a0.name.clone(), a1.name.clone()];
    columns.extend(energy_columns("E"));
    columns.extend(["kind".into(), "mask".into()]);
    let mut table = ResultTable::new(columns);
    table.annotate("labels", "closed-form index at each node");
    rows.into_iter().for_each(|r| table.push(r));
    Ok(vec![Output {
        stem: format!("{}_spectrum", cfg.name),
        table,
    }])
}

fn slice(cfg: &RunConfig) -> CliResult<Vec<Output>> {
    let axis = &cfg.slice.as_ref().ok_or_else(|| missing("slice"))?.axis;
    let values = axis.values();
    let points: Vec<jct_core::Result<([C64; 3], EpKind, f64)>> = values
        .par_iter()
        .map(|&v| {
            let p = node(cfg, &[(axis, v)])?;
            let e = cardano_eigenvalues(&p)?;
            let kind = classify(&p, cfg.tolerances.classify)?.kind;
            let defect = eigensystem3(&build_effective_matrix(&p)?.entries)?.defectiveness;
            Ok((e, kind, defect))
        })
        .collect();
    // continuity labels across consecutive valid nodes
    let mut tracked: Vec<Option<[C64; 3]>> = Vec::with_capacity(points.len());
    let mut prev: Option<[C64; 3]> = None;
    for pt in &points {
        match pt {
            Ok((e, _, _)) => {
                let next = match prev {
                    Some(p) => track_branches(&[p, *e])[1],
                    None => *e,
                };
                tracked.push(Some(next));
                prev = Some(next);
            }
            Err(_) => {
                tracked.push(None);
                prev = None;
            }
        }
    }
    let mut columns = vec![axis.name.clone()];
    columns.extend(energy_columns("E"));
    columns.extend(["kind".into(), "defectiveness".into(), "mask".into()]);
    let mut table = ResultTable::new(columns);
    table.annotate(
        "labels",
        "closed-form index at the first node, continued by minimal displacement",
    );
    for ((v, pt), e) in values.iter().zip(&points).zip(&tracked) {
        let mut row = vec![Cell::Num(*v)];
        match (pt, e) {
            (Ok((_, kind, defect)), Some(e)) => {
                row.extend(energy_cells(e));
                row.extend([
                    Cell::Text(kind.as_str().into()),
                    Cell::Num(*defect),
                    Cell::Int(0),
                ]);
            }
            _ => {
                row.extend(nan_cells(6));
                row.extend([Cell::Text(String::new()), Cell::Num(f64::NAN), Cell::Int(1)]);
            }
        }
        table.push(row);
    }
    Ok(vec![Output {
        stem: format!("{}_slice", cfg.name),
        table,
    }])
}

fn surface(cfg: &RunConfig) -> CliResult<Vec<Output>> {
    let block = cfg.surface.as_ref().ok_or_else(|| missing("surface"))?;
    let (gs, js) = (block.g_ratio.values(), block.j_ratio.values());
    let set = sweep_surface(&gs, &js, &cfg.params.base());
    let mut table = ResultTable::new(vec![
        "g_ratio".into(),
        "j_ratio".into(),
        "theta_3c".into(),
        "gamma_3c".into(),
        "mask".into(),
    ]);
    table.annotate("mask", "1 where no third-order point exists");
    for (gi, g) in gs.iter().enumerate() {
        for (ji, j) in js.iter().enumerate() {
            let (t, gm) = (set.theta(gi, ji), set.gamma(gi, ji));
            table.push(vec![
                Cell::Num(*g),
                Cell::Num(*j),
                Cell::Num(t.unwrap_or(f64::NAN)),
                Cell::Num(gm.unwrap_or(f64::NAN)),
                Cell::Int(t.is_none() as i64),
            ]);
        }
    }
    Ok(vec![Output {
        stem: format!("{}_surface", cfg.name),
        table,
    }])
}

fn classify_point(cfg: &RunConfig) -> CliResult<Vec<Output>> {
    let p = node(cfg, &[])?;
    let c = classify(&p, cfg.tolerances.classify)?;
    let pq = cardano_pq(&p)?;
    let e = cardano_eigenvalues(&p)?;
    let defect = eigensystem3(&build_effective_matrix(&p)?.entries)?.defectiveness;
    let mut columns: Vec<String> = [
        "theta",
        "gamma",
        "kind",
        "p",
        "q",
        "discriminant",
        "residual_p",
        "residual_q",
        "residual_discriminant",
        "scale",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    columns.extend(energy_columns("E"));
    columns.push("defectiveness".into());
    let mut row = vec![
        Cell::Num(p.theta),
        Cell::Num(p.gamma),
        Cell::Text(c.kind.as_str().into()),
        Cell::Num(pq.p),
        Cell::Num(pq.q),
        Cell::Num(pq.discriminant),
        Cell::Num(c.residuals.p),
        Cell::Num(c.residuals.q),
        Cell::Num(c.residuals.discriminant),
        Cell::Num(c.residuals.scale),
    ];
    row.extend(energy_cells(&e));
    row.push(Cell::Num(defect));
    let mut table = ResultTable::new(columns);
    table.push(row);
    Ok(vec![Output {
        stem: format!("{}_classify", cfg.name),
        table,
    }])
}

fn fit_row(scenario: &Scenario, kind: EpKind, quantity: &str, samples: &[(f64, f64)]) -> Vec<Cell> {
    let mut row = vec![
        Cell::Text(scenario.name.clone()),
        Cell::Text(kind.as_str().into()),
        Cell::Int(scenario.site as i64),
        Cell::Text(quantity.into()),
    ];
    match fit_scaling(samples) {
        Ok(ScalingFit {
            exponent,
            log_prefactor,
            r_squared,
            window,
            samples,
        }) => row.extend([
            Cell::Num(exponent),
            Cell::Num(log_prefactor),
            Cell::Num(r_squared),
            Cell::Num(window.0),
            Cell::Num(window.1),
            Cell::Int(samples as i64),
            Cell::Int(0),
        ]),
        Err(_) => {
            row.extend(nan_cells(5));
            row.extend([Cell::Int(samples.len() as i64), Cell::Int(1)]);
        }
    }
    row
}

fn perturb(cfg: &RunConfig) -> CliResult<Vec<Output>> {
    let block = cfg.perturb.as_ref().ok_or_else(|| missing("perturb"))?;
    let mut outputs = Vec::new();
    let mut fits = ResultTable::new(
        [
            "scenario",
            "kind",
            "site",
            "quantity",
            "exponent",
            "log_prefactor",
            "r_squared",
            "eps_min",
            "eps_max",
            "samples",
            "mask",
        ]
        .into_iter()
        .map(String::from)
        .collect(),
    );
    fits.annotate("fit", "least squares of ln|split| against ln eps");
    for s in &block.scenario {
        let mut p = cfg.params.base();
        let theta = s.theta.clone().unwrap_or_else(|| cfg.params.theta.clone());
        let gamma = s.gamma.clone().unwrap_or_else(|| cfg.params.gamma.clone());
        if let ParamValue::Number(t) = theta {
            p.theta = t;
        }
        if let ParamValue::Number(g) = gamma {
            p.gamma = g;
        }
        let p = resolve(p, &theta, &gamma)?;
        let kind = classify(&p, cfg.tolerances.classify)?.kind;
        let eps = log_ladder(
            s.eps_min.unwrap_or(block.eps_min),
            s.eps_max.unwrap_or(block.eps_max),
            block.count,
        );
        let unperturbed = cardano_eigenvalues(&p)?;
        let seed = match kind {
            EpKind::Ep3 => three_ep_seed(&p, s.site, eps[0])?,
            _ => unperturbed,
        };
        let ladder = track_ladder(&p, s.site, &eps, seed)?;

        let mut columns = vec!["eps".to_string()];
        columns.extend(energy_columns("E"));
        let mut table;
        match kind {
            EpKind::Ep3 => {
                columns.extend(["re_split_12", "re_split_13", "re_split_23"].map(String::from));
                let predict = s.site == 1;
                if predict {
                    columns.extend(["pred_re_split_12", "pred_re_split_13"].map(String::from));
                }
                table = ResultTable::new(columns);
                table.annotate(
                    "point",
                    format!("EP3 theta={:.16e} gamma={:.16e}", p.theta, p.gamma),
                );
                let (mut s12, mut s23) = (Vec::new(), Vec::new());
                for (e, r) in eps.iter().zip(&ladder) {
                    let mut row = vec![Cell::Num(*e)];
                    row.extend(energy_cells(r));
                    let (d12, d13, d23) = ((r[1] - r[0]).re, (r[2] - r[0]).re, (r[1] - r[2]).re);
                    row.extend([Cell::Num(d12), Cell::Num(d13), Cell::Num(d23)]);
                    if predict {
                        let pr = puiseux_3ep(&p, *e)?;
                        row.extend([Cell::Num(pr.re_split_12), Cell::Num(pr.re_split_13)]);
                    }
                    table.push(row);
                    s12.push((*e, d12.abs()));
                    s23.push((*e, d23.abs()));
                }
                fits.push(fit_row(s, kind, "re_split_12", &s12));
                fits.push(fit_row(s, kind, "re_split_23", &s23));
            }
            EpKind::Ep2 => {
                let (i, j) = coalescing_pair(&unperturbed);
                columns.extend(["re_split_pair", "pred_re_split_pair_alpha"].map(String::from));
                columns.extend(complex_columns("pred_split_pair_expansion"));
                table = ResultTable::new(columns);
                table.annotate(
                    "point",
                    format!("EP2 theta={:.16e} gamma={:.16e}", p.theta, p.gamma),
                );
                table.annotate("pair", format!("E{} E{}", i + 1, j + 1));
                let mut samples = Vec::new();
                for (e, r) in eps.iter().zip(&ladder) {
                    let pr = puiseux_2ep(&p, s.site, *e)?;
                    let split = (r[i] - r[j]).re.abs();
                    let mut row = vec![Cell::Num(*e)];
                    row.extend(energy_cells(r));
                    row.extend([Cell::Num(split), Cell::Num(pr.re_split_23)]);
                    row.extend(complex_cells(pr.split_23_expansion));
                    table.push(row);
                    samples.push((*e, split));
                }
                if puiseux_2ep(&p, s.site, eps[0])?.complex_branch {
                    table.annotate(
                        "alpha",
                        "radicand off the non-negative real axis; principal root used",
                    );
                }
                fits.push(fit_row(s, kind, "re_split_pair", &samples));
            }
            _ => {
                columns.push("max_shift".into());
                table = ResultTable::new(columns);
                table.annotate(
                    "point",
                    format!("{kind} theta={:.16e} gamma={:.16e}", p.theta, p.gamma),
                );
                let mut samples = Vec::new();
                for (e, r) in eps.iter().zip(&ladder) {
                    let shift = (0..3)
                        .map(|n| (r[n] - unperturbed[n]).norm())
                        .fold(0.0, f64::max);
                    let mut row = vec![Cell::Num(*e)];
                    row.extend(energy_cells(r));
                    row.push(Cell::Num(shift));
                    table.push(row);
                    samples.push((*e, shift));
                }
                fits.push(fit_row(s, kind, "max_shift", &samples));
            }
        }
        table.annotate("site", s.site.to_string());
        outputs.push(Output {
            stem: format!("{}_perturb_{}", cfg.name, s.name),
            table,
        });
    }
    outputs.push(Output {
        stem: format!("{}_perturb_fits", cfg.name),
        table: fits,
    });
    Ok(outputs)
}

fn fidelity(cfg: &RunConfig) -> CliResult<Vec<Output>> {
    let block = cfg.fidelity.as_ref().ok_or_else(|| missing("fidelity"))?;
    let p = node(cfg, &[])?;
    let gammas = block.axis.values();
    let scan = fidelity_scan(&p, &gammas, block.eps);
    let mut table = ResultTable::new(
        ["gamma", "F1", "F2", "F3", "ambiguous", "mask"]
            .into_iter()
            .map(String::from)
            .collect(),
    );
    table.annotate("eps", format!("{:e}", block.eps));
    table.annotate("theta", format!("{:.16e}", p.theta));
    table.annotate(
        "ambiguous",
        "1 where tied branch pairings disagree; values use the first in lexicographic order",
    );
    for (g, point) in gammas.iter().zip(scan) {
        let mut row = vec![Cell::Num(*g)];
        match point {
            Ok(f) => {
                row.extend(f.values.map(Cell::Num));
                row.extend([Cell::Int(f.ambiguous as i64), Cell::Int(0)]);
            }
            Err(_) => {
                row.extend(nan_cells(3));
                row.extend([Cell::Int(0), Cell::Int(1)]);
            }
        }
        table.push(row);
    }
    Ok(vec![Output {
        stem: format!("{}_fidelity", cfg.name),
        table,
    }])
}

fn quench(cfg: &RunConfig) -> CliResult<Vec<Output>> {
    let block = cfg.quench.as_ref().ok_or_else(|| missing("quench"))?;
    let mut base = cfg.params.base();
    base.gamma = block.gamma_initial;
    let p = resolve(
        base,
        &cfg.params.theta,
        &ParamValue::Number(block.gamma_initial),
    )?;
    let (pi, pf) = (
        p.with_gamma(block.gamma_initial),
        p.with_gamma(block.gamma_final),
    );
    let times = uniform_times(block.t_max.unwrap_or(20.0 / p.j1), block.samples);
    let series = (1..=3)
        .into_par_iter()
        .map(|n| loschmidt_echo(&pi, &pf, n, &times))
        .collect::<jct_core::Result<Vec<_>>>()?;
    let post = eigensystem3(&build_effective_matrix(&pf)?.entries)?.eigenvalues;
    let mut table = ResultTable::new(
        ["t", "L1", "L2", "L3"]
            .into_iter()
            .map(String::from)
            .collect(),
    );
    table.annotate(
        "quench",
        format!(
            "theta={:.16e} gamma {:e} -> {:e}",
            p.theta, block.gamma_initial, block.gamma_final
        ),
    );
    let levels: Vec<String> = post
        .iter()
        .map(|e| format!("{:.16e}{:+.16e}i", e.re, e.im))
        .collect();
    table.annotate("post-quench levels", levels.join(" "));
    if post
        .iter()
        .all(|e| e.im.abs() < REALITY_TOL * e.re.abs().max(1.0))
    {
        if let Some(t) = gap_period(&post) {
            table.annotate("gap period", format!("{t:.16e}"));
        }
    }
    for (k, t) in times.iter().enumerate() {
        table.push(vec![
            Cell::Num(*t),
            Cell::Num(series[0].values[k]),
            Cell::Num(series[1].values[k]),
            Cell::Num(series[2].values[k]),
        ]);
    }
    Ok(vec![Output {
        stem: format!("{}_quench", cfg.name),
        table,
    }])
}
