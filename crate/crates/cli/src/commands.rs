use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use aerial_noma::analysis::{coverage_report, CoverageReport, DecodingThresholds};
use aerial_noma::channel::los_probability;
use aerial_noma::exec;
use aerial_noma::montecarlo::estimate_with;
use aerial_noma::planner::plan_trajectory;
use aerial_noma::trajectory::{chord_walk_points, read_csv, spiral_points, write_csv};
use aerial_noma::{Error, Execution, LosModel, TrajectoryPoint};

use crate::config::{LosKind, RunConfig, TrajectorySource};

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Validation(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Validation(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Validation(m) => write!(f, "validation failed: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Quadrature { .. } | Error::Overflow(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

/// Shortest round-trip decimal; negative zero prints as `0`.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        x.to_string()
    }
}

fn los_models(cfg: &RunConfig) -> Vec<(String, LosModel)> {
    match cfg.los.kind {
        LosKind::Itu => cfg
            .los
            .environments
            .iter()
            .map(|name| (name.clone(), LosModel::Itu(cfg.los.presets[name])))
            .collect(),
        LosKind::ThreeGppUrban => vec![("3gpp-urban".into(), LosModel::ThreeGppUrban)],
        LosKind::Fixed => vec![("fixed".into(), LosModel::Fixed(cfg.los.fixed_probability))],
    }
}

pub fn trajectory_points(cfg: &RunConfig) -> Result<Vec<TrajectoryPoint>, Failure> {
    Ok(match &cfg.trajectory {
        TrajectorySource::Spiral(s) => spiral_points(s)?,
        TrajectorySource::ChordWalk(c) => chord_walk_points(c)?,
        TrajectorySource::CsvFile(path) => {
            let file = fs::File::open(path)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            read_csv(file, cfg.system.cell_radius)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
    })
}

fn write_output(dir: &Path, name: &str, body: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Threshold pairs with their dB labels, `θ_T` outermost.
struct Pair {
    th: DecodingThresholds,
    a_db: f64,
    t_db: f64,
}

fn threshold_pairs(cfg: &RunConfig) -> Vec<Pair> {
    cfg.theta_t
        .iter()
        .flat_map(|&t| {
            cfg.theta_a.iter().map(move |&a| Pair {
                th: DecodingThresholds {
                    theta_a: a.linear,
                    theta_t: t.linear,
                },
                a_db: a.db,
                t_db: t.db,
            })
        })
        .collect()
}

const COVERAGE_HEADER: &str =
    "n,r_A_m,h_m,theta_A_dB,theta_T_dB,p1,p2,p3,p4,p_tot,p_aue,p_tue,method";

fn coverage_row(out: &mut String, p: &TrajectoryPoint, pair: &Pair, r: &CoverageReport) {
    let fields = [
        p.n.to_string(),
        num(p.r_a),
        num(p.h_a),
        num(pair.a_db),
        num(pair.t_db),
        num(r.p1),
        num(r.p2),
        num(r.p3),
        num(r.p4),
        num(r.p_tot),
        num(r.p_aue),
        num(r.p_tue),
        r.method.as_str().into(),
    ];
    out.push_str(&fields.join(","));
}

/// Probabilities compared during validation, by name.
fn probabilities(r: &CoverageReport) -> [(&'static str, f64); 7] {
    [
        ("p1", r.p1),
        ("p2", r.p2),
        ("p3", r.p3),
        ("p4", r.p4),
        ("p_tot", r.p_tot),
        ("p_aue", r.p_aue),
        ("p_tue", r.p_tue),
    ]
}

/// Agreement rule between an analytic value and a Monte Carlo frequency.
pub fn within_tolerance(analytic: f64, estimate: f64, trials: u64) -> bool {
    let band = 3.0 * (estimate * (1.0 - estimate) / trials as f64).sqrt() + 1e-4;
    (analytic - estimate).abs() <= band
}

pub struct Report {
    pub files: Vec<PathBuf>,
    pub mismatches: Vec<String>,
}

pub fn coverage(cfg: &RunConfig, validate: bool) -> Result<Report, Failure> {
    let points = trajectory_points(cfg)?;
    let pairs = threshold_pairs(cfg);
    let tasks: Vec<(usize, usize)> = (0..pairs.len())
        .flat_map(|t| (0..points.len()).map(move |p| (t, p)))
        .collect();
    let mut report = Report {
        files: Vec::new(),
        mismatches: Vec::new(),
    };
    for (env, los) in los_models(cfg) {
        let analytic: Vec<CoverageReport> = exec::map(Execution::Parallel, &tasks, |&(t, p)| {
            coverage_report(&cfg.system, &los, &points[p], &pairs[t].th)
        })
        .into_iter()
        .collect::<Result<_, _>>()?;
        let simulated: Vec<CoverageReport> = if validate {
            tasks
                .iter()
                .map(|&(t, p)| {
                    estimate_with(
                        &cfg.system,
                        &los,
                        &points[p],
                        &pairs[t].th,
                        &cfg.mc,
                        Execution::Parallel,
                    )
                })
                .collect::<Result<_, _>>()?
        } else {
            Vec::new()
        };

        let mut body = String::from(COVERAGE_HEADER);
        if validate {
            body.push_str(",ci_halfwidth,trials");
        }
        body.push('\n');
        for (i, &(t, p)) in tasks.iter().enumerate() {
            coverage_row(&mut body, &points[p], &pairs[t], &analytic[i]);
            body.push_str(if validate { ",,\n" } else { "\n" });
            if let Some(mc) = simulated.get(i) {
                coverage_row(&mut body, &points[p], &pairs[t], mc);
                let ci = mc.ci_halfwidth.map(num).unwrap_or_default();
                let _ = writeln!(body, ",{ci},{}", cfg.mc.trials);
                for ((name, a), (_, m)) in probabilities(&analytic[i])
                    .into_iter()
                    .zip(probabilities(mc))
                {
                    if !within_tolerance(a, m, cfg.mc.trials) {
                        report.mismatches.push(format!(
                            "{env} n={} theta_A={} dB theta_T={} dB {name}: analytic {a} vs monte carlo {m}",
                            points[p].n,
                            num(pairs[t].a_db),
                            num(pairs[t].t_db),
                        ));
                    }
                }
            }
        }
        report.files.push(write_output(
            &cfg.output,
            &format!("coverage_{env}.csv"),
            &body,
        )?);
    }
    Ok(report)
}

const PLANNER_HEADER: &str =
    "n,r_A_m,theta_A_dB,theta_T_dB,env,min_height_m,best_height_m,best_p_tot";

pub fn min_height(cfg: &RunConfig) -> Result<Report, Failure> {
    let points = trajectory_points(cfg)?;
    let pairs = threshold_pairs(cfg);
    let mut body = format!("{PLANNER_HEADER}\n");
    for (env, los) in los_models(cfg) {
        for pair in &pairs {
            let results = plan_trajectory(
                &cfg.system,
                &los,
                &points,
                &pair.th,
                &cfg.search,
                Execution::Parallel,
            )?;
            for (p, r) in points.iter().zip(&results) {
                let fields = [
                    p.n.to_string(),
                    num(p.r_a),
                    num(pair.a_db),
                    num(pair.t_db),
                    env.clone(),
                    r.min_height.map(num).unwrap_or_default(),
                    num(r.best_height),
                    num(r.best_p_tot),
                ];
                body.push_str(&fields.join(","));
                body.push('\n');
            }
        }
    }
    let file = write_output(&cfg.output, "min_height.csv", &body)?;
    Ok(Report {
        files: vec![file],
        mismatches: Vec::new(),
    })
}

pub fn trajectory(cfg: &RunConfig) -> Result<Report, Failure> {
    let points = trajectory_points(cfg)?;
    let mut buf = Vec::new();
    write_csv(&mut buf, &points)?;
    let body = String::from_utf8(buf).expect("CSV writer emits UTF-8");
    let file = write_output(&cfg.output, "trajectory.csv", &body)?;
    Ok(Report {
        files: vec![file],
        mismatches: Vec::new(),
    })
}

pub fn los_table(cfg: &RunConfig) -> Result<Report, Failure> {
    let step = cfg.los.table_r_step;
    let radius = cfg.system.cell_radius;
    let steps = (radius / step + 1e-9).floor() as usize;
    let h_b = cfg.system.bs_height;
    let mut body = String::from("env,h_m,r_A_m,elevation_deg,p_los\n");
    for (env, los) in los_models(cfg) {
        for &h in &cfg.los.table_heights {
            for k in 0..=steps {
                let r = k as f64 * step;
                let p = los_probability(&los, r, h, h_b)?;
                let elevation = (h - h_b).atan2(r).to_degrees();
                let _ = writeln!(
                    body,
                    "{env},{},{},{},{}",
                    num(h),
                    num(r),
                    num(elevation),
                    num(p)
                );
            }
        }
    }
    let file = write_output(&cfg.output, "los_table.csv", &body)?;
    Ok(Report {
        files: vec![file],
        mismatches: Vec::new(),
    })
}
