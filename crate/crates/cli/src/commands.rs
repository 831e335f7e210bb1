use hsio_core::curvature::curvature_energy;
use hsio_core::kernels::{check_growth, check_hoelder, check_homogeneity, AuditReport, CzParams, KernelSpec};
use hsio_core::koch::{build_stage, build_stage_with_budget, lipschitz_bound, AngleSchedule, PlanarPoint, DEFAULT_VERTEX_BUDGET};
use hsio_core::lifts::{
    cantor_build, cantor_points, horizontal_lift, lemma54_scan, lift_stage, log_curve_point, write_point_cloud, Sampling,
};
use hsio_core::measure::{ahlfors_check, from_cantor, from_polyline, DiscreteMeasure};
use hsio_core::sio::{
    kernel_matrix, koch_stagewise_form, l1_divergence_scan, l2_norm_estimate, min_offdiagonal, quadratic_form, row_sup,
    write_series,
};

use crate::args::*;
use crate::expr::{parse_angle, parse_angle_list};
use crate::settings::Settings;
use crate::CliError;

/// A result table plus summary lines for the manifest.
pub struct Outcome {
    pub table: Vec<u8>,
    pub summary: Vec<(String, String)>,
}

impl Outcome {
    fn new(table: Vec<u8>) -> Self {
        Outcome { table, summary: Vec::new() }
    }

    fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.summary.push((key.to_string(), value.to_string()));
        self
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn io(e: std::io::Error) -> CliError {
    CliError::Io { context: "writing table".into(), source: e }
}

fn parse_list(key: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|v| parse_angle(v).map_err(|e| usage(format!("--{key}: {e}"))))
        .collect()
}

fn kernel(s: &mut Settings, flag: Option<String>, default: &str) -> Result<KernelSpec, CliError> {
    let text = s.get("kernel", flag, default.to_string())?;
    let k: KernelSpec = text.parse()?;
    s.note("kernel", k);
    Ok(k)
}

fn schedule(s: &mut Settings, a: &ScheduleArgs, default_c: f64) -> Result<(AngleSchedule, (PlanarPoint, PlanarPoint)), CliError> {
    let explicit = s.get_opt("theta", a.theta.clone())?;
    let schedule = match explicit {
        Some(text) => AngleSchedule::explicit(parse_angle_list(&text).map_err(|e| usage(format!("--theta: {e}")))?)?,
        None => {
            let c = s.get("theta-c", a.theta_c, default_c)?;
            let e = s.get("theta-exp", a.theta_exp, 2.0)?;
            AngleSchedule::power_law(c, e)?
        }
    };
    s.note("schedule", &schedule);
    let j0_text = s.get("j0", a.j0.clone(), "0,0,1,0".to_string())?;
    let c = parse_list("j0", &j0_text)?;
    if c.len() != 4 {
        return Err(usage("--j0 expects four numbers x0,y0,x1,y1"));
    }
    Ok((schedule, (PlanarPoint::new(c[0], c[1]), PlanarPoint::new(c[2], c[3]))))
}

fn measure(s: &mut Settings, a: &MeasureArgs, default_c: f64) -> Result<DiscreteMeasure, CliError> {
    let curve = s.get("curve", a.curve.clone(), "koch".to_string())?;
    match curve.as_str() {
        "koch" => {
            let stages = s.get("stages", a.stages, 3usize)?;
            let sub = s.get("subdivisions", a.subdivisions, 1usize)?;
            let (sch, j0) = schedule(s, &a.schedule, default_c)?;
            let stage = build_stage(stages, &sch, j0)?;
            Ok(from_polyline(&lift_stage(&stage, 0.0)?, sub)?)
        }
        "cantor" => {
            let depth = s.get("depth", a.depth, 8usize)?;
            Ok(from_cantor(&cantor_build(depth)?)?)
        }
        "line" => {
            let n = s.get("subdivisions", a.subdivisions, 64usize)?;
            let line = horizontal_lift(&[PlanarPoint::ORIGIN, PlanarPoint::new(1.0, 0.0)], 0.0)?;
            Ok(from_polyline(&line, n)?)
        }
        other => Err(usage(format!("unknown curve `{other}`, expected koch, cantor or line"))),
    }
}

pub fn koch_build(s: &mut Settings, a: &KochBuildArgs) -> Result<Outcome, CliError> {
    let stages = s.get("stages", a.stages, 3usize)?;
    let budget = s.get("budget", a.budget, DEFAULT_VERTEX_BUDGET)?;
    let (sch, j0) = schedule(s, &a.schedule, 0.2)?;
    let stage = build_stage_with_budget(stages, &sch, j0, budget)?;
    let mut table = Vec::new();
    stage.write_table(&mut table).map_err(io)?;
    Ok(Outcome::new(table)
        .with("vertices", stage.vertices.len())
        .with("segment_length", stage.segment_length)
        .with("max_abs_slope", stage.max_abs_slope())
        .with("lipschitz_bound", lipschitz_bound(&sch, stages)?)
        .with("angle_condition", sch.satisfies_angle_condition()))
}

pub fn lift(s: &mut Settings, a: &LiftArgs) -> Result<Outcome, CliError> {
    let curve = s.get("curve", a.curve.clone(), "koch".to_string())?;
    let mut table = Vec::new();
    let count = match curve.as_str() {
        "koch" => {
            let stages = s.get("stages", a.stages, 3usize)?;
            let z0 = s.get("z0", a.z0, 0.0)?;
            let (sch, j0) = schedule(s, &a.schedule, 0.2)?;
            let l = lift_stage(&build_stage(stages, &sch, j0)?, z0)?;
            l.write_table(&mut table).map_err(io)?;
            l.vertices.len()
        }
        "log" => {
            let t_min = s.get("t-min", a.t_min, 1.0)?;
            let t_max = s.get("t-max", a.t_max, 100.0)?;
            let n = s.get("points", a.points, 1000usize)?;
            if !(t_min > 0.0 && t_max > t_min) || n < 2 {
                return Err(usage("need 0 < t-min < t-max and at least two points"));
            }
            let pts = (0..n)
                .map(|k| Ok((log_curve_point(t_min + (t_max - t_min) * k as f64 / (n - 1) as f64)?, None, String::new())))
                .collect::<Result<Vec<_>, CliError>>()?;
            write_point_cloud(&mut table, pts).map_err(io)?;
            n
        }
        "cantor" => {
            let depth = s.get("depth", a.depth, 6usize)?;
            let pts = cantor_points(&cantor_build(depth)?);
            let n = pts.len();
            write_point_cloud(&mut table, pts.into_iter().map(|(p, w)| (p, Some(w), String::new()))).map_err(io)?;
            n
        }
        other => return Err(usage(format!("unknown curve `{other}`, expected koch, log or cantor"))),
    };
    Ok(Outcome::new(table).with("points", count))
}

pub fn regularity(s: &mut Settings, a: &RegularityArgs) -> Result<Outcome, CliError> {
    let m = measure(s, &a.measure, 0.3)?;
    let centers = s.get("centers", a.centers, 0usize)?;
    let seed = s.get("seed", None, 0u64)?;
    let floor = match s.get_opt("floor", a.floor)? {
        Some(f) => f,
        None => 4.0 * m.point_spacing(),
    };
    let radii = match s.get_opt("radii", a.radii.clone())? {
        Some(text) => parse_list("radii", &text)?,
        None => {
            let mut r = vec![m.diameter()];
            while r.last().unwrap() * 0.5 >= floor {
                r.push(r.last().unwrap() * 0.5);
            }
            r
        }
    };
    let centers = if centers == 0 { m.len() } else { centers };
    let report = ahlfors_check(&m, centers, &radii, floor, seed)?;
    let mut table = Vec::new();
    report.write_table(&mut table).map_err(io)?;
    Ok(Outcome::new(table)
        .with("atoms", m.len())
        .with("diameter", m.diameter())
        .with("point_spacing", report.point_spacing)
        .with("radius_floor", floor)
        .with("min_ratio", report.min_ratio)
        .with("max_ratio", report.max_ratio))
}

pub fn quadform(s: &mut Settings, a: &QuadformArgs) -> Result<Outcome, CliError> {
    let m = measure(s, &a.measure, 0.2)?;
    let k = kernel(s, a.kernel.clone(), "alpha:4")?;
    let eps = s.get("epsilon", a.epsilon, 0.0)?;
    let tol = s.get("tolerance", a.tolerance, 1e-10)?;
    let iters = s.get("max-iterations", a.max_iterations, 10_000usize)?;
    let seed = s.get("seed", None, 0u64)?;
    let q = quadratic_form(k, &m, eps)?;
    let sup = row_sup(k, &m, eps)?;
    let l2 = l2_norm_estimate(&kernel_matrix(k, &m, eps)?, tol, iters, seed)?;
    let table = format!(
        "kernel,epsilon,atoms,quadratic_form,row_sup,l2_estimate\n{k},{eps},{},{},{sup},{l2}\n",
        q.point_count, q.value
    );
    Ok(Outcome::new(table.into_bytes()).with("measure", q.measure))
}

pub fn l1scan(s: &mut Settings, a: &L1scanArgs) -> Result<Outcome, CliError> {
    let base = s.get("s", a.s, 1.0)?;
    let n_min = s.get("n-min", a.n_min, 3usize)?;
    let n_max = s.get("n-max", a.n_max, 20usize)?;
    let points = s.get("points", a.points, 16usize)?;
    let rows = l1_divergence_scan(base, n_min, n_max, points)?;
    let mut table = Vec::new();
    write_series(&rows, &mut table).map_err(io)?;
    let last = rows.last().map(|r| r.partial_sum).unwrap_or(0.0);
    Ok(Outcome::new(table).with("rows", rows.len()).with("final_partial_sum", last))
}

pub fn lemma54(s: &mut Settings, a: &Lemma54Args) -> Result<Outcome, CliError> {
    let stages = s.get("stages", a.stages, 8usize)?;
    let n_min = s.get("n-min", a.n_min, 1usize)?;
    let samples = s.get("samples", a.samples, 200usize)?;
    let budget = s.get("budget", a.budget, 300_000usize)?;
    let seed = s.get("seed", None, 0u64)?;
    let (sch, j0) = schedule(s, &a.schedule, 0.2)?;
    if n_min == 0 || n_min > stages {
        return Err(usage("need 1 <= n-min <= stages"));
    }
    let mut table = String::from("n,min_ratio,pairs,mode,p_word,q_word,segment_length,theta\n");
    let mut overall = f64::INFINITY;
    for n in n_min..=stages {
        let sampling = Sampling::Auto { budget, samples, seed: seed.wrapping_add(n as u64) };
        let r = lemma54_scan(&sch, j0, n, sampling)?;
        overall = overall.min(r.min_ratio);
        let mode = if r.exhaustive { "exhaustive" } else { "sampled" };
        table.push_str(&format!(
            "{},{},{},{mode},{},{},{},{}\n",
            r.n, r.min_ratio, r.pairs, r.argmin.0, r.argmin.1, r.segment_length, r.theta
        ));
    }
    Ok(Outcome::new(table.into_bytes()).with("min_ratio", overall))
}

pub fn stagewise(s: &mut Settings, a: &StagewiseArgs) -> Result<Outcome, CliError> {
    let alpha = s.get("alpha", a.alpha, 0.5)?;
    let stages = s.get("stages", a.stages, 8usize)?;
    let samples = s.get("samples", a.samples, 20_000usize)?;
    let budget = s.get("budget", a.budget, 300_000usize)?;
    let seed = s.get("seed", None, 0u64)?;
    let (sch, j0) = schedule(s, &a.schedule, 0.2)?;
    let r = koch_stagewise_form(&sch, j0, alpha, stages, Sampling::Auto { budget, samples, seed })?;
    let mut table = Vec::new();
    write_series(&r.rows, &mut table).map_err(io)?;
    let exhaustive = r.exhaustive.iter().filter(|e| **e).count();
    Ok(Outcome::new(table)
        .with("exhaustive_stages", exhaustive)
        .with("final_partial_sum", r.rows.last().map(|x| x.partial_sum).unwrap_or(0.0)))
}

pub fn cantor_rowsup(s: &mut Settings, a: &CantorRowsupArgs) -> Result<Outcome, CliError> {
    let depth = s.get("depth", a.depth, 8usize)?;
    let depth_min = s.get("depth-min", a.depth_min, 1usize)?;
    let k = kernel(s, a.kernel.clone(), "b")?;
    let eps = s.get("epsilon", a.epsilon, 0.0)?;
    if depth_min > depth {
        return Err(usage("depth-min exceeds depth"));
    }
    let mut table = String::from("depth,atoms,row_sup,min_offdiagonal\n");
    for d in depth_min..=depth {
        let m = from_cantor(&cantor_build(d)?)?;
        let sup = row_sup(k, &m, eps)?;
        let min_off = if m.len() > 1 { min_offdiagonal(k, &m)?.to_string() } else { String::new() };
        table.push_str(&format!("{d},{},{sup},{min_off}\n", m.len()));
    }
    Ok(Outcome::new(table.into_bytes()))
}

pub fn curvature(s: &mut Settings, a: &CurvatureArgs) -> Result<Outcome, CliError> {
    let m = measure(s, &a.measure, 0.3)?;
    let alpha = s.get("alpha", a.alpha, 0.5)?;
    let center = s.get("center-index", a.center_index, m.len() / 2)?;
    let radii_text = s.get("radii", a.radii.clone(), "0.0625,0.125,0.25".to_string())?;
    let budget = s.get("budget", a.budget, 5_000_000usize)?;
    let seed = s.get("seed", None, 0u64)?;
    let c = *m.points().get(center).ok_or_else(|| usage(format!("center index {center} out of range")))?;
    let mut table = Vec::new();
    table.extend_from_slice(hsio_core::curvature::CurvatureSumReport::HEADER.as_bytes());
    table.push(b'\n');
    for r in parse_list("radii", &radii_text)? {
        curvature_energy(&m, alpha, c, r, budget, seed)?.write_row(&mut table).map_err(io)?;
    }
    Ok(Outcome::new(table).with("atoms", m.len()))
}

pub fn czcheck(s: &mut Settings, a: &CzcheckArgs) -> Result<Outcome, CliError> {
    let k = kernel(s, a.kernel.clone(), "alpha:4")?;
    let kappa = s.get("kappa", a.kappa, 0.1)?;
    let beta = s.get("beta", a.beta, 1.0)?;
    let ck = s.get("ck", a.ck, 2.0)?;
    let samples = s.get("samples", a.samples, 100_000usize)?;
    let check = s.get("check", a.check.clone(), "all".to_string())?;
    let seed = s.get("seed", None, 0u64)?;
    let params = CzParams::new(kappa, beta, ck)?;
    let (growth, hoelder, homog) = (
        matches!(check.as_str(), "all" | "growth"),
        matches!(check.as_str(), "all" | "hoelder"),
        matches!(check.as_str(), "all" | "homogeneity"),
    );
    if !(growth || hoelder || homog) {
        return Err(usage(format!("unknown check `{check}`")));
    }
    let mut reports: Vec<AuditReport> = Vec::new();
    if growth {
        reports.push(check_growth(&k, params, samples, seed)?);
    }
    if hoelder {
        reports.push(check_hoelder(&k, params, samples, seed)?);
    }
    let mut table = String::from("check,x1,y1,z1,x2,y2,z2,ratio,bound\n").into_bytes();
    let mut out = Outcome::new(Vec::new()).with("cz_admissible", params.is_admissible());
    for r in &reports {
        let mut body = Vec::new();
        r.write_records(&mut body).map_err(io)?;
        // drop the per-report header line
        let start = body.iter().position(|b| *b == b'\n').map_or(body.len(), |i| i + 1);
        table.extend_from_slice(&body[start..]);
        out = out
            .with(&format!("{}_max_ratio", r.kind), r.max_ratio)
            .with(&format!("{}_violations", r.kind), r.violation_count);
    }
    if homog {
        out = out.with("homogeneity_max_deviation", check_homogeneity(&k, samples, (1e-3, 1e3), seed)?);
    }
    out.table = table;
    Ok(out)
}
