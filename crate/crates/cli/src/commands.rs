use std::f64::consts::FRAC_PI_2;

use metricforge_core::dynamics::{orthogonality_scan, PairMetricLayout};
use metricforge_core::linalg::eigensystem;
use metricforge_core::metric::{biorth_system_of, check_pseudo_hermitian, validate_metric};
use metricforge_core::phase::Boundary;
use metricforge_core::{
    build_entangled_pair, classify, compare_metrics, das_metric, discriminate, evolve,
    find_exceptional, sweep, time_grid, Axis, Classification, ComplexMatrix, ComplexVector, Error,
    Family, MetricMethod, MetricOperator, Normalization, Tolerances,
};
use serde_json::{json, Map, Value};

use crate::input::{self, Source};
use crate::output::{to_compact, to_pretty, OutDir, OutputDocument};
use crate::{exit, CliError, Command, FamilyArgs, InputArgs, Method, ModelCommand, RunArgs};

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable result")
}

fn error_value(e: &Error) -> Value {
    json!({ "error": e.code(), "message": e.to_string() })
}

struct Context {
    echo: Vec<String>,
    tol: Tolerances,
}

impl Context {
    fn new(echo: Vec<String>, run: &RunArgs) -> Result<Self, CliError> {
        Ok(Context {
            echo,
            tol: input::tolerances(&run.tol)?,
        })
    }

    /// Write `result.json` (when `--out` is given) and return the stdout text.
    fn finish(
        self,
        out: &OutDir,
        source: Option<&Source>,
        results: Map<String, Value>,
    ) -> Result<String, CliError> {
        let doc = OutputDocument::new(
            self.echo,
            source.map(Source::document).as_ref(),
            self.tol,
            Value::Object(results),
        );
        out.write("result.json", format!("{}\n", to_pretty(&doc)).as_bytes())?;
        Ok(format!("{}\n", to_compact(&doc)))
    }
}

fn resolve(args: &InputArgs, tol: &Tolerances) -> Result<Source, CliError> {
    input::resolve(
        args.input.as_deref(),
        args.model.as_deref(),
        args.params.as_deref(),
        tol,
    )
}

fn normalization(source: &Source, flag: Option<&str>) -> Result<Normalization, CliError> {
    if let Some(name) = flag {
        return Normalization::parse(name).map_err(|e| CliError::parse(e.to_string()));
    }
    Ok(match source {
        Source::Model(f) => f.instance()?.normalization,
        Source::Matrix(_) => Normalization::UnitLeft,
    })
}

fn spectral(
    source: &Source,
    norm: &Normalization,
    tol: &Tolerances,
) -> Result<MetricOperator, Error> {
    metricforge_core::spectral_metric_of(
        &source
            .hamiltonian()
            .map_err(|e| Error::InvalidParams(e.message))?,
        norm,
        tol,
    )
}

/// Generator-based metric; `Ok(None)` when the input carries no generator data.
fn das(
    source: &Source,
    norm: &Normalization,
    tol: &Tolerances,
) -> Result<Option<MetricOperator>, Error> {
    match source {
        Source::Model(f) => {
            let inst = f.instance()?;
            if inst.das_data.is_none() {
                return Ok(None);
            }
            inst.das_metric(tol).map(Some)
        }
        Source::Matrix(m) => {
            if m.das.is_none() {
                return Ok(None);
            }
            let sys = biorth_system_of(&m.h, norm, tol)?;
            let max_imag = sys.max_imag();
            if max_imag > tol.real_tol * m.h.norm() {
                return Err(Error::BrokenPhase { max_imag });
            }
            let c = input::das_construction(source, &sys)?.expect("checked above");
            let q = das_metric(&c, tol)?;
            MetricOperator::new(&m.h, q.matrix, MetricMethod::Das, tol).map(Some)
        }
    }
}

fn matrix_csv(m: &ComplexMatrix) -> impl FnOnce(&mut Vec<u8>) -> metricforge_core::Result<()> + '_ {
    move |buf| {
        use std::fmt::Write;
        let mut text = String::from("row,col,re,im\n");
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let z = m[(i, j)];
                let _ = writeln!(
                    text,
                    "{i},{j},{},{}",
                    metricforge_core::io::fmt_f64(z.re),
                    metricforge_core::io::fmt_f64(z.im)
                );
            }
        }
        buf.extend_from_slice(text.as_bytes());
        Ok(())
    }
}

pub(crate) fn dispatch(command: Command, echo: Vec<String>) -> Result<String, CliError> {
    match command {
        Command::Metric {
            input,
            method,
            normalization,
            run,
        } => cmd_metric(
            Context::new(echo, &run)?,
            &input,
            method,
            normalization.as_deref(),
            &run,
        ),
        Command::Validate {
            input,
            normalization,
            run,
        } => cmd_validate(
            Context::new(echo, &run)?,
            &input,
            normalization.as_deref(),
            &run,
        ),
        Command::Compare {
            input,
            normalization,
            run,
        } => cmd_compare(
            Context::new(echo, &run)?,
            &input,
            normalization.as_deref(),
            &run,
        ),
        Command::Sweep { family, axis, run } => {
            cmd_sweep(Context::new(echo, &run)?, &family, &axis, &run)
        }
        Command::Ep {
            family,
            param,
            lo,
            hi,
            run,
        } => cmd_ep(Context::new(echo, &run)?, &family, &param, lo, hi, &run),
        Command::Evolve {
            input,
            t_max,
            steps,
            psi0,
            hbar,
            allow_broken,
            normalization,
            run,
        } => {
            let opts = EvolveOptions {
                t_max,
                steps,
                psi0,
                hbar,
                allow_broken,
                normalization,
            };
            cmd_evolve(Context::new(echo, &run)?, &input, &opts, &run)
        }
        Command::Discriminate {
            theta,
            eps,
            sin_theta,
            model,
            params,
            scan,
            run,
        } => {
            let opts = DiscriminateOptions {
                theta,
                eps,
                sin_theta,
                model,
                params,
                scan,
            };
            cmd_discriminate(Context::new(echo, &run)?, &opts, &run)
        }
        Command::Model {
            command: ModelCommand::Show { family, run },
        } => cmd_model_show(Context::new(echo, &run)?, &family, &run),
    }
}

fn cmd_metric(
    ctx: Context,
    args: &InputArgs,
    method: Method,
    norm_flag: Option<&str>,
    run: &RunArgs,
) -> Result<String, CliError> {
    let source = resolve(args, &ctx.tol)?;
    let norm = normalization(&source, norm_flag)?;
    let out = OutDir(run.out.as_deref());
    out.prepare()?;
    let mut results = Map::new();
    results.insert("normalization".into(), json!(norm.name()));

    let spectral_metric = if method != Method::Das {
        Some(spectral(&source, &norm, &ctx.tol)?)
    } else {
        None
    };
    let das_result = if method != Method::Spectral {
        Some(das(&source, &norm, &ctx.tol)?.ok_or_else(|| {
            CliError::parse(
                "the generator method needs a model input or a 'das' block in the matrix input"
                    .into(),
            )
        })?)
    } else {
        None
    };
    if let Some(m) = &spectral_metric {
        results.insert("spectral".into(), to_value(m));
        out.write_csv("metric_spectral.csv", matrix_csv(&m.matrix))?;
    }
    if let Some(m) = &das_result {
        results.insert("das".into(), to_value(m));
        out.write_csv("metric_das.csv", matrix_csv(&m.matrix))?;
    }
    if let (Some(s), Some(d)) = (&spectral_metric, &das_result) {
        let verdict = compare_metrics(&d.matrix, &s.matrix, &ctx.tol)?;
        results.insert("comparison".into(), to_value(&verdict));
    }
    ctx.finish(&out, Some(&source), results)
}

fn cmd_validate(
    ctx: Context,
    args: &InputArgs,
    norm_flag: Option<&str>,
    run: &RunArgs,
) -> Result<String, CliError> {
    let source = resolve(args, &ctx.tol)?;
    let norm = normalization(&source, norm_flag)?;
    let out = OutDir(run.out.as_deref());
    out.prepare()?;
    let tol = &ctx.tol;
    let h = source.hamiltonian()?;
    let mut results = Map::new();
    results.insert("phase".into(), to_value(&classify(&h, tol)?));
    match &source {
        Source::Model(f) => {
            let inst = f.instance()?;
            results.insert("analytic_phase".into(), to_value(&inst.phase));
            results.insert(
                "pseudo_hermitian_residual".into(),
                json!(inst.pseudo_hermitian_residual(tol)?),
            );
            if let Some(m) = &inst.analytic_metric {
                results.insert("analytic_metric".into(), to_value(&m.report));
            }
        }
        Source::Matrix(m) => {
            if let Some(s) = &m.s {
                results.insert(
                    "pseudo_hermitian_residual".into(),
                    json!(check_pseudo_hermitian(&h, s, tol)?),
                );
            }
            if let Some(metric) = &m.metric {
                results.insert(
                    "supplied_metric".into(),
                    to_value(&validate_metric(&h, metric, tol)?),
                );
            }
        }
    }
    let spectral_report = match spectral(&source, &norm, tol) {
        Ok(m) => to_value(&m.report),
        Err(e) => error_value(&e),
    };
    results.insert("spectral_metric".into(), spectral_report);
    ctx.finish(&out, Some(&source), results)
}

fn cmd_compare(
    ctx: Context,
    args: &InputArgs,
    norm_flag: Option<&str>,
    run: &RunArgs,
) -> Result<String, CliError> {
    let source = resolve(args, &ctx.tol)?;
    let norm = normalization(&source, norm_flag)?;
    let out = OutDir(run.out.as_deref());
    out.prepare()?;
    let tol = &ctx.tol;
    let reference = spectral(&source, &norm, tol)?;
    let mut candidates: Vec<(&str, ComplexMatrix)> = Vec::new();
    if let Some(d) = das(&source, &norm, tol)? {
        candidates.push(("das", d.matrix));
    }
    match &source {
        Source::Model(f) => {
            if let Some(m) = f.instance()?.analytic_metric {
                candidates.push(("analytic", m.matrix));
            }
        }
        Source::Matrix(m) => {
            if let Some(metric) = &m.metric {
                candidates.push(("supplied", metric.clone()));
            }
        }
    }
    if candidates.is_empty() {
        return Err(CliError::parse(
            "nothing to compare: supply a 'metric' or 'das' block".into(),
        ));
    }
    let mut comparisons = Vec::new();
    for (name, m) in &candidates {
        let verdict = compare_metrics(m, &reference.matrix, tol)?;
        comparisons
            .push(json!({ "metric": name, "against": "spectral", "result": to_value(&verdict) }));
    }
    let mut results = Map::new();
    results.insert("normalization".into(), json!(norm.name()));
    results.insert("comparisons".into(), Value::Array(comparisons));
    ctx.finish(&out, Some(&source), results)
}

fn model_source(args: &FamilyArgs) -> Result<Source, CliError> {
    Ok(Source::Model(input::family(
        &args.model,
        args.params.as_deref(),
    )?))
}

fn refine(family: &Family, b: &Boundary, tol: &Tolerances) -> Value {
    let fixed =
        b.at.iter()
            .try_fold(family.clone(), |f, (name, value)| f.with(name, *value));
    match fixed.and_then(|f| find_exceptional(&f, &b.axis, b.lo, b.hi, tol)) {
        Ok(ep) => to_value(&ep),
        Err(e) => error_value(&e),
    }
}

fn cmd_sweep(
    ctx: Context,
    args: &FamilyArgs,
    axis_specs: &[String],
    run: &RunArgs,
) -> Result<String, CliError> {
    let source = model_source(args)?;
    let Source::Model(family) = &source else {
        unreachable!()
    };
    let axes: Vec<Axis> = axis_specs
        .iter()
        .map(|s| {
            Axis::parse(s)
                .map_err(|e| CliError::new("malformed_axis", e.to_string(), exit::BROKEN_PHASE))
        })
        .collect::<Result<_, _>>()?;
    for a in &axes {
        if family.get(&a.name).is_none() {
            return Err(CliError::new(
                "malformed_axis",
                format!("{} has no parameter '{}'", family.name(), a.name),
                exit::BROKEN_PHASE,
            ));
        }
    }
    let out = OutDir(run.out.as_deref());
    out.prepare()?;
    let diagram = sweep(family, &axes, &ctx.tol)?;

    let mut counts = Map::new();
    for c in [
        Classification::Unbroken,
        Classification::Broken,
        Classification::Exceptional,
    ] {
        let k = diagram
            .points
            .iter()
            .filter(|p| p.classification == Some(c))
            .count();
        counts.insert(c.name().into(), json!(k));
    }
    let failed = diagram.points.iter().filter(|p| p.error.is_some()).count();
    counts.insert("failed".into(), json!(failed));

    let boundaries: Vec<Value> = diagram
        .boundaries()
        .iter()
        .map(|b| {
            let mut v = to_value(b);
            v["exceptional_point"] = refine(family, b, &ctx.tol);
            v
        })
        .collect();

    let mut results = Map::new();
    results.insert("family".into(), json!(family.name()));
    results.insert(
        "axes".into(),
        Value::Array(
            axes.iter()
                .map(|a| json!({ "name": a.name, "start": a.values[0], "stop": a.values[a.values.len() - 1], "count": a.values.len() }))
                .collect(),
        ),
    );
    results.insert("points".into(), json!(diagram.points.len()));
    results.insert("classification_counts".into(), Value::Object(counts));
    results.insert("boundaries".into(), Value::Array(boundaries));
    if out.enabled() {
        out.write_csv("diagram.csv", |buf| diagram.write_csv(buf))?;
        out.write(
            "diagram.json",
            format!("{}\n", to_pretty(&diagram)).as_bytes(),
        )?;
    } else {
        results.insert("diagram".into(), to_value(&diagram));
    }
    ctx.finish(&out, Some(&source), results)
}

fn cmd_ep(
    ctx: Context,
    args: &FamilyArgs,
    param: &str,
    lo: f64,
    hi: f64,
    run: &RunArgs,
) -> Result<String, CliError> {
    let source = model_source(args)?;
    let Source::Model(family) = &source else {
        unreachable!()
    };
    let out = OutDir(run.out.as_deref());
    out.prepare()?;
    let ep = find_exceptional(family, param, lo, hi, &ctx.tol)?;
    let at = family.with(param, ep.value)?;
    let h = at.hamiltonian()?;
    let point = classify(&h, &ctx.tol)?;
    let mut results = Map::new();
    results.insert("family".into(), json!(family.name()));
    results.insert("param".into(), json!(param));
    results.insert("exceptional_point".into(), to_value(&ep));
    results.insert("classification_at_point".into(), to_value(&point));
    results.insert(
        "eigenvalues".into(),
        to_value(
            &metricforge_core::linalg::eigenvalues(&h, &ctx.tol)?
                .iter()
                .map(|z| [z.re, z.im])
                .collect::<Vec<_>>(),
        ),
    );
    ctx.finish(&out, Some(&source), results)
}

struct EvolveOptions {
    t_max: f64,
    steps: usize,
    psi0: Option<String>,
    hbar: f64,
    allow_broken: bool,
    normalization: Option<String>,
}

fn cmd_evolve(
    ctx: Context,
    args: &InputArgs,
    opts: &EvolveOptions,
    run: &RunArgs,
) -> Result<String, CliError> {
    let source = resolve(args, &ctx.tol)?;
    let tol = &ctx.tol;
    if !(opts.t_max.is_finite() && opts.t_max >= 0.0) || opts.steps == 0 {
        return Err(CliError::parse("need t_max >= 0 and steps >= 1".into()));
    }
    let h = source.hamiltonian()?;
    let n = h.require_square()?;
    let psi0 = match opts.psi0.as_deref() {
        Some("growing") => growing_mode(&h, tol)?,
        Some(text) => input::parse_state(text, n)?,
        None => ComplexVector::basis(n, 0),
    };
    let point = classify(&h, tol)?;
    let phase = point.classification.expect("classified");
    let unbroken = phase == Classification::Unbroken;
    if !unbroken && !opts.allow_broken {
        return Err(CliError::new(
            "phase_violation",
            format!(
                "the Hamiltonian is in the {} phase; pass --allow-broken to evolve anyway",
                phase.name()
            ),
            exit::BROKEN_PHASE,
        ));
    }
    let (metric, metric_source) = if unbroken {
        let norm = normalization(&source, opts.normalization.as_deref())?;
        (spectral(&source, &norm, tol)?.matrix, "spectral")
    } else {
        (ComplexMatrix::identity(n), "identity")
    };
    let out = OutDir(run.out.as_deref());
    out.prepare()?;
    let times = time_grid(opts.t_max, opts.steps);
    let rec = evolve(&h, &psi0, &times, &metric, opts.hbar, tol)?;
    let dm = rec.max_metric_deviation();
    let ds = rec.max_standard_deviation();

    let mut results = Map::new();
    results.insert("phase".into(), json!(phase.name()));
    results.insert("metric".into(), json!(metric_source));
    results.insert("steps".into(), json!(opts.steps));
    results.insert("t_max".into(), json!(opts.t_max));
    results.insert("max_metric_norm_deviation".into(), json!(dm));
    results.insert("max_standard_norm_deviation".into(), json!(ds));
    let mut summary =
        format!("max metric-norm deviation {dm:.3e}, max standard-norm deviation {ds:.3e}");
    if !unbroken {
        let max_imag = point.min_imag_gap.unwrap_or(0.0) / opts.hbar;
        results.insert("max_imag_eigenvalue".into(), json!(max_imag));
        if let Some(rate) = rec.growth_rate(opts.t_max / 2.0, opts.t_max) {
            results.insert("growth_rate".into(), json!(rate));
            summary.push_str(&format!(
                ", growth rate {rate:.6e} vs max |Im E| {max_imag:.6e}"
            ));
        }
    }
    results.insert("summary".into(), json!(summary));
    if out.enabled() {
        out.write_csv("evolution.csv", |buf| rec.write_csv(buf))?;
    } else {
        results.insert("record".into(), to_value(&rec));
    }
    ctx.finish(&out, Some(&source), results)
}

/// Unit right eigenvector whose eigenvalue has the largest imaginary part.
fn growing_mode(h: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexVector, CliError> {
    let sys = eigensystem(h, tol)?;
    let pair = sys
        .pairs
        .iter()
        .max_by(|a, b| a.value.im.total_cmp(&b.value.im))
        .ok_or_else(|| CliError::parse("empty Hamiltonian".into()))?;
    Ok(pair.right.normalized())
}

struct DiscriminateOptions {
    theta: f64,
    eps: f64,
    sin_theta: Option<String>,
    model: Option<String>,
    params: Option<String>,
    scan: Option<usize>,
}

fn cmd_discriminate(
    ctx: Context,
    opts: &DiscriminateOptions,
    run: &RunArgs,
) -> Result<String, CliError> {
    let tol = &ctx.tol;
    if !(opts.theta.is_finite() && opts.eps.is_finite()) {
        return Err(CliError::parse("theta and eps must be finite".into()));
    }
    let mut source = None;
    let layouts: Vec<(Value, PairMetricLayout)> = match &opts.model {
        Some(name) => {
            let family = input::family(name, opts.params.as_deref())?;
            let p = match &family {
                Family::JcDoublet(p) => *p,
                Family::JcFull { model, .. } => *model,
                other => {
                    return Err(CliError::parse(format!(
                        "discrimination needs a spin-oscillator model, got {}",
                        other.name()
                    )))
                }
            };
            let layout = PairMetricLayout::from_jc(&p, tol)?;
            source = Some(Source::Model(family));
            vec![(json!("model"), layout)]
        }
        None => {
            let text = opts
                .sin_theta
                .as_deref()
                .unwrap_or("0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9");
            text.split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::parse(format!("bad --sin-theta value '{s}'")))
                        .map(|x| (json!(x), PairMetricLayout::from_sin_theta(x)))
                })
                .collect::<Result<_, _>>()?
        }
    };
    let out = OutDir(run.out.as_deref());
    out.prepare()?;
    let pair = build_entangled_pair(opts.theta, opts.eps);
    let mut rows = Vec::new();
    let mut csv = String::from("metric,standard_re,standard_im,metric_re,metric_im,gain\n");
    let f = metricforge_core::io::fmt_f64;
    let mut best: Option<(f64, Value)> = None;
    for (label, layout) in &layouts {
        let d = discriminate(&pair, &layout.assemble(), tol)?;
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            label
                .as_f64()
                .map(f)
                .unwrap_or_else(|| label.as_str().unwrap_or("").to_string()),
            f(d.standard_overlap.re),
            f(d.standard_overlap.im),
            f(d.metric_overlap.re),
            f(d.metric_overlap.im),
            f(d.distinguishability_gain)
        ));
        if best
            .as_ref()
            .is_none_or(|(g, _)| d.distinguishability_gain > *g)
        {
            best = Some((d.distinguishability_gain, label.clone()));
        }
        let mut row = to_value(&d);
        row["metric"] = label.clone();
        rows.push(row);
    }
    let mut results = Map::new();
    results.insert("theta".into(), json!(opts.theta));
    results.insert("eps".into(), json!(opts.eps));
    results.insert(
        "overlap_squared".into(),
        json!(pair.psi1.dot(&pair.psi2).norm_sqr()),
    );
    results.insert("rows".into(), Value::Array(rows));
    if let Some((gain, label)) = best {
        results.insert("max_gain".into(), json!({ "gain": gain, "metric": label }));
    }
    out.write("discrimination.csv", csv.as_bytes())?;
    if let Some(count) = opts.scan {
        if count == 0 {
            return Err(CliError::parse("--scan needs at least one point".into()));
        }
        let thetas: Vec<f64> = if count == 1 {
            vec![0.0]
        } else {
            (0..count)
                .map(|k| FRAC_PI_2 * k as f64 / (count - 1) as f64)
                .collect()
        };
        let metric = layouts[0].1.assemble();
        let scan = orthogonality_scan(&thetas, opts.eps, &metric, tol)?;
        results.insert("scan_metric".into(), layouts[0].0.clone());
        results.insert("crossings".into(), to_value(&scan.crossings));
        if out.enabled() {
            out.write_csv("scan.csv", |buf| scan.write_csv(buf))?;
        } else {
            results.insert("scan".into(), to_value(&scan.rows));
        }
    }
    ctx.finish(&out, source.as_ref(), results)
}

fn cmd_model_show(ctx: Context, args: &FamilyArgs, run: &RunArgs) -> Result<String, CliError> {
    let source = model_source(args)?;
    let Source::Model(family) = &source else {
        unreachable!()
    };
    let out = OutDir(run.out.as_deref());
    out.prepare()?;
    let inst = family.instance()?;
    let mut results = Map::new();
    results.insert("family".into(), json!(family.name()));
    results.insert("params".into(), to_value(&family.params()));
    results.insert("discriminant".into(), json!(family.discriminant()));
    results.insert(
        "pseudo_hermitian_residual".into(),
        json!(inst.pseudo_hermitian_residual(&ctx.tol)?),
    );
    results.insert("model".into(), to_value(&inst));
    ctx.finish(&out, Some(&source), results)
}
