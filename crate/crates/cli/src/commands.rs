//! Subcommand bodies. Each returns the text for the primary output; the
//! caller writes it to `--out` or stdout. Diagnostics go to stderr.

use serde_json::{json, Value};

use mixture_ldp::oracle::{self, GridSpec};
use mixture_ldp::output::format_real;
use mixture_ldp::ratefn::{rate_closed_s3_affine, RateProblem, RateResult};
use mixture_ldp::sim::{self, SimulationPlan, TailMode};
use mixture_ldp::SimplexVector;

use crate::config::{self, ProblemConfig};
use crate::error::CliError;

/// Deviation allowed between the general rate and a closed form.
pub const CLOSED_FORM_TOL: f64 = 1e-8;
/// Step of the central second difference compared against the curvature formula.
pub const CURVATURE_FD_STEP: f64 = 1e-4;
/// Tolerance for the affine-spacing test of three constraint functions.
const AFFINE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// The command's output text and whether it passed its own check.
pub struct Outcome {
    pub text: String,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, failure: None }
    }
}

/// JSON number rounded to twelve significant digits; non-finite values become strings.
pub fn num(x: f64) -> Value {
    let s = format_real(x);
    match s.parse::<f64>().ok().filter(|v| v.is_finite()).and_then(serde_json::Number::from_f64) {
        Some(n) => Value::Number(n),
        None => Value::String(s),
    }
}

fn opt_num(x: Option<f64>) -> Value {
    x.map(num).unwrap_or(Value::Null)
}

fn config_value(cfg: &ProblemConfig) -> Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| if i + 1 == points { hi } else { lo + step * i as f64 }).collect()
}

/// `points` values strictly inside the support, evenly spaced.
fn interior_grid(problem: &RateProblem, points: usize) -> Vec<f64> {
    let b = problem.support_bounds();
    let span = b.upper - b.lower;
    (1..=points).map(|i| b.lower + span * i as f64 / (points + 1) as f64).collect()
}

fn diagnostics(cfg: &ProblemConfig, problem: &RateProblem) {
    let b = problem.support_bounds();
    eprintln!("config: {}", cfg.to_json());
    eprintln!("r0 = {}, support = [{}, {}]", format_real(b.r0), format_real(b.lower), format_real(b.upper));
    match problem.curvature() {
        Ok(c) => eprintln!("curvature at r0 = {}", format_real(c)),
        Err(e) => eprintln!("curvature unavailable: {e}"),
    }
}

fn minimizer_cells(res: &RateResult, s: usize) -> Vec<f64> {
    match &res.minimizer {
        Some(p) => p.as_slice().to_vec(),
        None => vec![f64::NAN; s],
    }
}

pub fn rate_curve(cfg: &ProblemConfig, format: Format) -> Result<Outcome, CliError> {
    let problem = cfg.problem()?;
    diagnostics(cfg, &problem);
    let b = problem.support_bounds();
    let pad = if b.upper > b.lower { 0.0 } else { 1.0 };
    let lo = cfg.options.r_min.unwrap_or(b.lower - pad);
    let hi = cfg.options.r_max.unwrap_or(b.upper + pad);
    let rs = linspace(lo, hi, cfg.options.points.unwrap_or(config::DEFAULT_POINTS));
    let rows = problem.rate_curve(&rs).into_iter().collect::<mixture_ldp::Result<Vec<_>>>()?;
    let s = problem.original_len();

    let text = match format {
        Format::Csv => {
            let mut header = vec!["r".to_string(), "H".into(), "branch".into(), "lambda_star".into()];
            header.extend((1..=s).map(|j| format!("p{j}")));
            let mut out = header.join(",");
            out.push('\n');
            for row in &rows {
                let mut cells = vec![format_real(row.r), format_real(row.value), row.branch.as_str().to_string()];
                cells.push(format_real(row.lambda_star.unwrap_or(f64::NAN)));
                cells.extend(minimizer_cells(row, s).into_iter().map(format_real));
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|row| {
                    json!({
                        "r": num(row.r),
                        "H": num(row.value),
                        "branch": row.branch.as_str(),
                        "lambda_star": opt_num(row.lambda_star),
                        "minimizer": row.minimizer.as_ref().map(|p| p.iter().map(|x| num(*x)).collect::<Vec<_>>()),
                    })
                })
                .collect();
            pretty(&json!({
                "config": config_value(cfg),
                "r0": num(b.r0),
                "lower": num(b.lower),
                "upper": num(b.upper),
                "curvature": problem.curvature().ok().map(num),
                "rows": rows,
            }))
        }
    };
    Ok(Outcome::ok(text))
}

pub fn oracle_check(cfg: &ProblemConfig, format: Format, negative_control: bool) -> Result<Outcome, CliError> {
    let problem = cfg.problem()?;
    diagnostics(cfg, &problem);
    let b = problem.support_bounds().clone();
    let m = cfg.options.resolution.unwrap_or(config::DEFAULT_RESOLUTION);
    let gen_grid = GridSpec::for_general(m, b.upper - b.lower)?;
    let cond_bound = oracle::condition_resolution_bound(m);
    let gen_bound = oracle::general_resolution_bound(m);
    let rs = match (cfg.options.r_min, cfg.options.r_max) {
        (Some(lo), Some(hi)) => linspace(lo, hi, cfg.options.points.unwrap_or(config::DEFAULT_ORACLE_POINTS))
            .into_iter()
            .filter(|r| *r > b.lower && *r < b.upper)
            .collect(),
        _ => interior_grid(&problem, cfg.options.points.unwrap_or(config::DEFAULT_ORACLE_POINTS)),
    };
    if negative_control {
        eprintln!("negative control: first constraint function has its sign flipped");
    }

    let mut rows = Vec::new();
    let mut flagged = 0usize;
    let (mut max_c, mut max_g) = (0.0f64, 0.0f64);
    for &r in &rs {
        let h = problem.rate(r)?.value;
        let mut profile = problem.profile(r)?;
        if negative_control {
            profile.values[0] = -profile.values[0];
        }
        let cond_grid = GridSpec::for_profile(m, &profile)?;
        let cond = oracle::grid_min_condition(&profile, problem.weights(), &cond_grid)?;
        let gen = oracle::grid_min_general(problem.risk_measure(), problem.components(), problem.weights(), r, &gen_grid)?;
        let dev_c = deviation(h, cond.min_entropy);
        let dev_g = deviation(h, gen.min_entropy);
        let flag = dev_c.is_nan() || dev_g.is_nan() || dev_c > cond_bound || dev_g > gen_bound;
        flagged += flag as usize;
        max_c = max_c.max(dev_c);
        max_g = max_g.max(dev_g);
        rows.push((r, h, cond.min_entropy, gen.min_entropy, dev_c, dev_g, flag));
    }

    let text = match format {
        Format::Csv => {
            let mut out = String::from("r,H,grid_min_condition,grid_min_general,deviation_condition,deviation_general,flagged\n");
            for (r, h, c, g, dc, dg, f) in &rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    format_real(*r),
                    format_real(*h),
                    format_real(*c),
                    format_real(*g),
                    format_real(*dc),
                    format_real(*dg),
                    f
                ));
            }
            out
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|(r, h, c, g, dc, dg, f)| {
                    json!({
                        "r": num(*r), "H": num(*h),
                        "grid_min_condition": num(*c), "grid_min_general": num(*g),
                        "deviation_condition": num(*dc), "deviation_general": num(*dg),
                        "flagged": f,
                    })
                })
                .collect();
            pretty(&json!({
                "config": config_value(cfg),
                "resolution": m,
                "negative_control": negative_control,
                "condition_bound": num(cond_bound),
                "general_bound": num(gen_bound),
                "max_deviation_condition": num(max_c),
                "max_deviation_general": num(max_g),
                "flagged": flagged,
                "rows": rows,
            }))
        }
    };
    let failure = (flagged > 0).then(|| CliError::Verification(format!("{flagged} of {} grid points exceed the resolution bound", rs.len())));
    Ok(Outcome { text, failure })
}

// |a − b| with both infinite counting as agreement
fn deviation(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

pub fn simulate(cfg: &ProblemConfig, format: Format) -> Result<Outcome, CliError> {
    let problem = cfg.problem()?;
    eprintln!("config: {}", cfg.to_json());
    let o = &cfg.options;
    let plan = SimulationPlan {
        problem,
        delta: o.delta.unwrap_or(config::DEFAULT_DELTA),
        n_grid: o.n_grid.clone().unwrap_or_else(|| config::DEFAULT_N_GRID.to_vec()),
        replicas: o.replicas.unwrap_or(config::DEFAULT_REPLICAS),
        seed: o.seed.unwrap_or(0),
        mode: if o.exact_binomial.unwrap_or(false) { TailMode::ExactBinomial } else { TailMode::MonteCarlo },
    };
    let est = sim::decay_slope(&plan)?;
    let summary = json!({
        "delta": num(plan.delta),
        "final_n": est.per_n.last().map(|r| r.n),
        "final_rate": num(est.final_rate),
        "regression_rate": opt_num(est.regression_rate),
        "regression_intercept": opt_num(est.regression_intercept),
        "h_delta": num(est.h_delta_reference),
        "ratio": num(est.ratio()),
    });
    eprintln!("summary: {summary}");
    let text = match format {
        Format::Csv => est.to_csv(),
        Format::Json => {
            let rows: Vec<Value> = est
                .per_n
                .iter()
                .map(|r| {
                    json!({
                        "n": r.n, "estimate": num(r.estimate), "stderr": num(r.stderr),
                        "minus_log_p_over_n": num(r.minus_log_p_over_n),
                    })
                })
                .collect();
            pretty(&json!({ "config": config_value(cfg), "summary": summary, "rows": rows }))
        }
    };
    Ok(Outcome::ok(text))
}

pub fn curvature(cfg: &ProblemConfig, format: Format) -> Result<Outcome, CliError> {
    let problem = cfg.problem()?;
    eprintln!("config: {}", cfg.to_json());
    let b = problem.support_bounds();
    let c = problem.curvature()?;
    let h = CURVATURE_FD_STEP;
    let fd = if b.r0 - h > b.lower && b.r0 + h < b.upper {
        let f = |r: f64| problem.rate(r).map(|x| x.value);
        Some((f(b.r0 + h)? - 2.0 * f(b.r0)? + f(b.r0 - h)?) / (h * h))
    } else {
        None
    };
    let rel = fd.map(|fd| ((fd - c) / c).abs());
    let text = match format {
        Format::Csv => format!(
            "r0,lower,upper,curvature,finite_difference,relative_error\n{},{},{},{},{},{}\n",
            format_real(b.r0),
            format_real(b.lower),
            format_real(b.upper),
            format_real(c),
            format_real(fd.unwrap_or(f64::NAN)),
            format_real(rel.unwrap_or(f64::NAN))
        ),
        Format::Json => pretty(&json!({
            "config": config_value(cfg),
            "r0": num(b.r0),
            "lower": num(b.lower),
            "upper": num(b.upper),
            "curvature": num(c),
            "finite_difference": opt_num(fd),
            "relative_error": opt_num(rel),
        })),
    };
    Ok(Outcome::ok(text))
}

/// Reorders a three-component problem so its constraint functions read
/// `Ψ(r), Ψ(r)+a, Ψ(r)+2a` on the whole grid, returning the order and `a`.
fn affine_order(problem: &RateProblem, rs: &[f64]) -> Result<(Vec<usize>, f64), CliError> {
    let roots = problem.component_roots();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&i, &j| roots[i].total_cmp(&roots[j]));
    let mut spacing: Option<f64> = None;
    for &r in rs {
        let psi = problem.psi_values(r)?;
        let (p0, p1, p2) = (psi[order[0]], psi[order[1]], psi[order[2]]);
        let a = p1 - p0;
        let scale = 1.0 + a.abs();
        let same = spacing.is_none_or(|s| (s - a).abs() <= AFFINE_TOL * scale);
        if !(a > 0.0 && (p2 - p0 - 2.0 * a).abs() <= AFFINE_TOL * scale && same) {
            return Err(CliError::Unsupported("constraint functions are not affinely spaced".into()));
        }
        spacing.get_or_insert(a);
    }
    Ok((order, spacing.unwrap_or(1.0)))
}

pub fn closed_form_check(cfg: &ProblemConfig, format: Format) -> Result<Outcome, CliError> {
    let problem = cfg.problem()?;
    diagnostics(cfg, &problem);
    if problem.is_degenerate() {
        return Err(CliError::Unsupported("closed forms need distinct component roots".into()));
    }
    let rs = interior_grid(&problem, cfg.options.points.unwrap_or(50));
    let s = problem.components().len();
    let closed: Box<dyn Fn(f64) -> mixture_ldp::Result<f64>> = match s {
        2 => Box::new(|r| problem.rate_closed_s2(r)),
        3 => {
            let (order, a) = affine_order(&problem, &rs)?;
            let pi = problem.weights();
            let weights = SimplexVector::normalized(order.iter().map(|&i| pi[i]).collect())?;
            let first = problem.components()[order[0]].clone();
            let rho = problem.risk_measure().clone();
            Box::new(move |r| rate_closed_s3_affine(|x| rho.psi(&first, x).unwrap_or(f64::NAN), a, &weights, r))
        }
        _ => return Err(CliError::Unsupported(format!("closed forms exist for two or three components, got {s}"))),
    };
    let mut rows = Vec::with_capacity(rs.len());
    let mut worst = 0.0f64;
    for &r in &rs {
        let h = problem.rate(r)?.value;
        let c = closed(r)?;
        let d = (h - c).abs();
        worst = if d.is_nan() { f64::NAN } else { worst.max(d) };
        rows.push((r, h, c, d));
    }
    let text = match format {
        Format::Csv => {
            let mut out = String::from("r,H,closed_form,abs_deviation\n");
            for (r, h, c, d) in &rows {
                out.push_str(&format!("{},{},{},{}\n", format_real(*r), format_real(*h), format_real(*c), format_real(*d)));
            }
            out
        }
        Format::Json => pretty(&json!({
            "config": config_value(cfg),
            "components": s,
            "tolerance": num(CLOSED_FORM_TOL),
            "max_abs_deviation": num(worst),
            "rows": rows.iter().map(|(r, h, c, d)| json!({"r": num(*r), "H": num(*h), "closed_form": num(*c), "abs_deviation": num(*d)})).collect::<Vec<_>>(),
        })),
    };
    let failure = (worst.is_nan() || worst > CLOSED_FORM_TOL)
        .then(|| CliError::Verification(format!("closed form deviates by {} > {CLOSED_FORM_TOL:e}", format_real(worst))));
    Ok(Outcome { text, failure })
}
