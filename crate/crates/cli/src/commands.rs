use std::f64::consts::TAU;
use std::fmt::Display;
use std::fs;
use std::path::Path;

use anyhow::Context;
use limitlyap::conformal::{theodorsen_map, verify_diffeomorphism, ConformalError, JordanCurve, DEFAULT_MAX_ITER};
use limitlyap::cycle::{find_cycle_radii, CycleError, LimitCycle};
use limitlyap::decomp::Decomposer;
use limitlyap::definition::{parse_definition, Definition, DefinitionError, DefinitionErrorKind};
use limitlyap::equiv::{shared_attractors, EquivError};
use limitlyap::expr::{parse, Bindings, Expr};
use limitlyap::lyapunov::LyapunovError;
use limitlyap::ode::{integrate_adaptive, sample_phase_portrait};
use limitlyap::pipeline::{run_pipeline, PipelineOptions, PipelineOutcome};
use limitlyap::system::{
    apply_transform, classify_radial_form, to_polar, PlanarSystem, PolarSystem, SystemError, Transform, Window,
};
use limitlyap::Error;
use serde::Serialize;

use crate::output::{json, num, tag, AnalysisReport, Artifacts, Provenance, RadialFormEcho, RunConfig, Table};
use crate::svg::Plot;
use crate::{Cli, CliError, Command, Common, Format};

pub struct RunOutput {
    pub text: String,
    pub passed: bool,
}

/// Bad input (rejected before analysis) versus an analysis that could not finish.
fn classify(e: Error, path: Option<&Path>) -> CliError {
    let input = matches!(
        &e,
        Error::Parse(_)
            | Error::Definition(_)
            | Error::System(SystemError::Parse { .. } | SystemError::WrongVariables { .. })
            | Error::Conformal(
                ConformalError::InvalidResolution(_) | ConformalError::WrongVariable(_) | ConformalError::Parse(_)
            )
            | Error::Cycle(CycleError::InvalidRange(_))
            | Error::Lyapunov(LyapunovError::InvalidGrid | LyapunovError::InvalidRange(_))
            | Error::Equiv(EquivError::InvalidGrid)
    );
    if input {
        CliError::Input {
            path: path.map(|p| p.display().to_string()),
            error: e,
        }
    } else {
        CliError::Analysis(e)
    }
}

fn analysis(e: impl Into<Error>) -> CliError {
    classify(e.into(), None)
}

fn validate(c: &Common) -> Result<(), CliError> {
    let usage = |m: &str| Err(CliError::Usage(m.to_string()));
    if c.grid < 2 {
        return usage("--grid must be at least 2");
    }
    if !(c.tol > 0.0 && c.tol.is_finite()) {
        return usage("--tol must be positive");
    }
    if !(c.rmax > 0.0 && c.rmax.is_finite()) {
        return usage("--rmax must be positive");
    }
    if c.format.is_empty() {
        return usage("--format needs at least one of csv, json, svg");
    }
    Ok(())
}

struct Ctx<'a> {
    common: &'a Common,
    config: RunConfig,
    text: String,
}

impl<'a> Ctx<'a> {
    fn kv(&mut self, key: &str, value: impl Display) {
        self.text.push_str(&format!("{key} = {value}\n"));
    }

    fn read(&mut self, role: &str, path: &Path) -> Result<String, CliError> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(CliError::Io)?;
        self.config.input(role, &text);
        Ok(text)
    }

    fn definition(&mut self, role: &str, path: &Path) -> Result<Definition, CliError> {
        let text = self.read(role, path)?;
        parse_definition(&text).map_err(|e| classify(e.into(), Some(path)))
    }

    fn window(&self, def: &Definition) -> Window {
        self.common.window.or(def.window).unwrap_or_default()
    }

    fn provenance(&self) -> Provenance {
        self.config.provenance()
    }

    fn finish(mut self, artifacts: Artifacts, passed: bool) -> RunOutput {
        for p in &artifacts.written {
            self.kv("artifact", p.display());
        }
        RunOutput {
            text: self.text,
            passed,
        }
    }
}

fn def_err(path: &Path) -> impl Fn(DefinitionError) -> CliError + '_ {
    move |e| classify(e.into(), Some(path))
}

/// A Cartesian system with its window and optional change of variables.
struct Loaded {
    system: PlanarSystem,
    transform: Option<Transform>,
    window: Window,
}

fn load_planar(ctx: &mut Ctx, path: &Path) -> Result<Loaded, CliError> {
    let def = ctx.definition("system", path)?;
    load_planar_from(ctx, def, path)
}

/// Polar form of a definition: given directly, or converted from Cartesian
/// (after the transform, if one is present).
fn load_polar(ctx: &mut Ctx, path: &Path) -> Result<(PolarSystem, Window), CliError> {
    let def = ctx.definition("system", path)?;
    if def.is_polar() {
        let p = def.polar().map_err(def_err(path))?;
        return Ok((p, ctx.window(&def)));
    }
    let l = load_planar_from(ctx, def, path)?;
    let s = match &l.transform {
        Some(t) => apply_transform(&l.system, t).map_err(analysis)?,
        None => l.system,
    };
    Ok((to_polar(&s), l.window))
}

fn load_planar_from(ctx: &mut Ctx, def: Definition, path: &Path) -> Result<Loaded, CliError> {
    let system = def.planar().map_err(def_err(path))?;
    let transform = match &ctx.common.transform {
        Some(tp) => {
            let tdef = ctx.definition("transform", tp)?;
            let t = tdef.transform().map_err(def_err(tp))?;
            Some(t.ok_or_else(|| {
                def_err(tp)(DefinitionError {
                    line: 0,
                    kind: DefinitionErrorKind::Missing("transform_u"),
                })
            })?)
        }
        None => def.transform().map_err(def_err(path))?,
    };
    Ok(Loaded {
        system,
        transform,
        window: ctx.window(&def),
    })
}

fn run_analysis(
    ctx: &Ctx,
    l: &Loaded,
    allow_non_smooth: bool,
    cycle_samples: usize,
) -> Result<PipelineOutcome, CliError> {
    let opts = PipelineOptions {
        window: l.window,
        grid: ctx.common.grid,
        r_max: ctx.common.rmax,
        cycle_samples,
        allow_non_smooth,
    };
    run_pipeline(&l.system, l.transform.as_ref(), &opts).map_err(analysis)
}

pub fn execute(cli: &Cli) -> Result<RunOutput, CliError> {
    let common = &cli.common;
    validate(common)?;
    let name = match &cli.command {
        Command::Polar { .. } => "polar",
        Command::Cycles { .. } => "cycles",
        Command::Lyapunov { .. } => "lyapunov",
        Command::Decompose { .. } => "decompose",
        Command::Criteria { .. } => "criteria",
        Command::Conformal { .. } => "conformal",
        Command::Portrait { .. } => "portrait",
        Command::Equiv { .. } => "equiv",
        Command::Pipeline { .. } => "pipeline",
    };
    let mut ctx = Ctx {
        common,
        config: RunConfig::new(name, common),
        text: String::new(),
    };
    let mut art = Artifacts::new(common)?;
    let passed = match &cli.command {
        Command::Polar { file } => polar(&mut ctx, &mut art, file)?,
        Command::Cycles { file, u0 } => cycles(&mut ctx, &mut art, file.as_deref(), u0.as_deref())?,
        Command::Lyapunov { file, allow_non_smooth } => lyapunov(&mut ctx, &mut art, file, *allow_non_smooth)?,
        Command::Decompose { file, phi } => decompose(&mut ctx, &mut art, file, phi.as_deref())?,
        Command::Criteria { file, samples } => criteria(&mut ctx, &mut art, file, *samples)?,
        Command::Conformal { file, rho } => conformal(&mut ctx, &mut art, file.as_deref(), rho.as_deref())?,
        Command::Portrait { file } => portrait(&mut ctx, &mut art, file)?,
        Command::Equiv { first, second } => equiv(&mut ctx, &mut art, first, second)?,
        Command::Pipeline { file, allow_non_smooth } => pipeline(&mut ctx, &mut art, file, *allow_non_smooth)?,
    };
    Ok(ctx.finish(art, passed))
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    command: &'a str,
    #[serde(flatten)]
    body: T,
    provenance: Provenance,
}

fn emit_json<T: Serialize>(ctx: &Ctx, art: &mut Artifacts, body: T) -> Result<(), CliError> {
    let command = ctx.config.command.clone();
    art.emit(Format::Json, &format!("{command}.json"), || {
        json(&Report {
            command: &command,
            body,
            provenance: ctx.provenance(),
        })
    })
}

fn polar(ctx: &mut Ctx, art: &mut Artifacts, file: &Path) -> Result<bool, CliError> {
    let (p, _) = load_polar(ctx, file)?;
    let form = classify_radial_form(&p);
    let echo = RadialFormEcho::new(&p.rdot, &form);
    ctx.kv("rdot", &echo.rdot);
    ctx.kv("thetadot", &echo.thetadot);
    ctx.kv("kind", tag(&echo.kind));
    for (k, v) in [("u0", &echo.upsilon0), ("u1", &echo.upsilon1), ("u2", &echo.upsilon2), ("diagnostic", &echo.diagnostic)] {
        if let Some(v) = v {
            ctx.kv(k, v);
        }
    }
    #[derive(Serialize)]
    struct Body {
        radial_form: RadialFormEcho,
    }
    emit_json(ctx, art, Body { radial_form: echo })?;
    Ok(true)
}

fn cycle_table(cycles: &[LimitCycle]) -> String {
    let mut t = Table::new(&["radius", "stability", "residual", "derivative"]);
    for c in cycles {
        t.row([num(c.radius), tag(&c.stability), num(c.residual), num(c.derivative)]);
    }
    t.finish()
}

fn print_cycles(ctx: &mut Ctx, cycles: &[LimitCycle]) {
    ctx.kv("cycles", cycles.len());
    if cycles.is_empty() {
        ctx.kv("note", "no limit cycle");
    }
    for (i, c) in cycles.iter().enumerate() {
        ctx.kv(&format!("cycle.{i}.radius"), sci(c.radius));
        ctx.kv(&format!("cycle.{i}.stability"), tag(&c.stability));
        ctx.kv(&format!("cycle.{i}.residual"), sci(c.residual));
        if let Some(w) = &c.warning {
            ctx.kv(&format!("cycle.{i}.warning"), w);
        }
    }
}

fn cycles(ctx: &mut Ctx, art: &mut Artifacts, file: Option<&Path>, u0: Option<&str>) -> Result<bool, CliError> {
    let u0 = match (u0, file) {
        (Some(text), None) => {
            ctx.config.option("u0", text);
            parse(text).map_err(|e| classify(e.into(), None))?
        }
        (None, Some(path)) => {
            let def = ctx.definition("system", path)?;
            match def.get("u0") {
                Some(e) => e.clone(),
                None => {
                    let p = if def.is_polar() {
                        def.polar().map_err(def_err(path))?
                    } else {
                        let l = load_planar_from(ctx, def, path)?;
                        let s = match &l.transform {
                            Some(t) => apply_transform(&l.system, t).map_err(analysis)?,
                            None => l.system,
                        };
                        to_polar(&s)
                    };
                    let form = classify_radial_form(&p);
                    form.upsilon0.ok_or_else(|| {
                        CliError::Analysis(Error::Pipeline(format!(
                            "no radial factor: {}",
                            form.diagnostic.as_deref().unwrap_or("unclassified")
                        )))
                    })?
                }
            }
        }
        _ => return Err(CliError::Usage("give either a definition file or --u0".into())),
    };
    let found = find_cycle_radii(&u0, ctx.common.rmax).map_err(analysis)?;
    ctx.kv("u0", &u0);
    print_cycles(ctx, &found);
    art.emit(Format::Csv, "cycles.csv", || cycle_table(&found))?;
    #[derive(Serialize)]
    struct Body<'a> {
        u0: String,
        cycles: &'a [LimitCycle],
        note: Option<&'a str>,
    }
    let note = found.is_empty().then_some("no limit cycle");
    emit_json(ctx, art, Body { u0: u0.to_string(), cycles: &found, note })?;
    Ok(true)
}

fn surface_table(phi: &Expr, window: Window, n: usize) -> String {
    let mut t = Table::new(&["x", "y", "phi"]);
    for (x, y) in window.grid(n, n) {
        let v = phi.eval(&Bindings::xy(x, y)).unwrap_or(f64::NAN);
        t.row([num(x), num(y), num(v)]);
    }
    t.finish()
}

fn print_analysis(ctx: &mut Ctx, out: &PipelineOutcome) {
    ctx.kv("kind", tag(&out.form.kind));
    if let Some(u0) = &out.form.upsilon0 {
        ctx.kv("u0", u0);
    }
    print_cycles(ctx, &out.cycles);
    ctx.kv("construction", tag(&out.potential.construction));
    if let Some(p) = &out.potential.phi_r {
        ctx.kv("phi_r", p);
    }
    if out.phi_rectified != out.phi {
        ctx.kv("phi_rectified", &out.phi_rectified);
    }
    ctx.kv("phi", &out.phi);
    let l = &out.lyapunov;
    ctx.kv("min_phi", sci(l.min_phi));
    ctx.kv("max_lie", sci(l.max_lie));
    ctx.kv("max_lie_at", format!("{}, {}", l.argmax.0, l.argmax.1));
    ctx.kv("stationary", l.stationary.len());
    if let Some(a) = &out.angular {
        ctx.kv("angular_min", sci(a.min));
    }
    if let Some(c) = &out.infimum {
        ctx.kv("infimum", sci(c.infimum));
    }
}

/// Shortest round-trip form, switched to exponent notation when that is long.
fn sci(v: f64) -> String {
    let s = v.to_string();
    if s.len() > 20 {
        format!("{v:e}")
    } else {
        s
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

fn lyapunov(ctx: &mut Ctx, art: &mut Artifacts, file: &Path, allow_non_smooth: bool) -> Result<bool, CliError> {
    ctx.config.option("allow_non_smooth", allow_non_smooth);
    let l = load_planar(ctx, file)?;
    let out = run_analysis(ctx, &l, allow_non_smooth, 360)?;
    print_analysis(ctx, &out);
    ctx.kv("verdict", verdict(out.pass));
    art.emit(Format::Csv, "lyapunov_surface.csv", || surface_table(&out.phi, l.window, ctx.common.grid))?;
    let mut report = AnalysisReport::new("lyapunov", &l.system, l.transform.as_ref(), &out, ctx.provenance());
    report.criteria = None;
    art.emit(Format::Json, "lyapunov.json", || json(&report))?;
    Ok(out.pass)
}

fn decompose(ctx: &mut Ctx, art: &mut Artifacts, file: &Path, phi: Option<&str>) -> Result<bool, CliError> {
    let l = load_planar(ctx, file)?;
    let phi = match phi {
        Some(text) => {
            ctx.config.option("phi", text);
            parse(text).map_err(|e| classify(e.into(), None))?
        }
        None => run_analysis(ctx, &l, false, 360)?.phi,
    };
    let n = ctx.common.grid;
    let samples = Decomposer::new(&l.system, &phi)
        .grid(l.window, n, n)
        .map_err(analysis)?;
    let fold = |f: fn(f64, f64) -> f64, init: f64, g: fn(&limitlyap::decomp::DecompSample) -> f64| {
        samples.iter().map(g).filter(|v| !v.is_nan()).fold(init, f)
    };
    let singular = samples.iter().filter(|s| s.singular).count();
    let min_hp = fold(f64::min, f64::INFINITY, |s| s.hp);
    let max_hp = fold(f64::max, f64::NEG_INFINITY, |s| s.hp);
    let min_div = fold(f64::min, f64::INFINITY, |s| s.div);
    let max_div = fold(f64::max, f64::NEG_INFINITY, |s| s.div);
    ctx.kv("phi", &phi);
    ctx.kv("points", samples.len());
    ctx.kv("singular", singular);
    ctx.kv("min_hp", sci(min_hp));
    ctx.kv("max_hp", sci(max_hp));
    ctx.kv("min_div", sci(min_div));
    ctx.kv("max_div", sci(max_div));
    art.emit(Format::Csv, "decompose.csv", || {
        let mut t = Table::new(&["x", "y", "D", "q", "s", "t", "H_P", "div", "singular"]);
        for s in &samples {
            t.row([
                num(s.x),
                num(s.y),
                num(s.d),
                num(s.q),
                num(s.s),
                num(s.t),
                num(s.hp),
                num(s.div),
                s.singular.to_string(),
            ]);
        }
        t.finish()
    })?;
    #[derive(Serialize)]
    struct Body {
        phi: String,
        window: Window,
        grid: usize,
        points: usize,
        singular: usize,
        min_hp: f64,
        max_hp: f64,
        min_div: f64,
        max_div: f64,
    }
    let body = Body {
        phi: phi.to_string(),
        window: l.window,
        grid: n,
        points: samples.len(),
        singular,
        min_hp,
        max_hp,
        min_div,
        max_div,
    };
    emit_json(ctx, art, body)?;
    Ok(true)
}

fn criteria(ctx: &mut Ctx, art: &mut Artifacts, file: &Path, samples: usize) -> Result<bool, CliError> {
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    ctx.config.option("samples", samples);
    let l = load_planar(ctx, file)?;
    let out = run_analysis(ctx, &l, false, samples)?;
    let Some(c) = out.criteria.as_ref() else {
        return Err(CliError::Analysis(Error::Pipeline("no limit cycle to sample".into())));
    };
    ctx.kv("phi", &out.phi);
    ctx.kv("radius", sci(c.radius));
    ctx.kv("samples", c.n);
    ctx.kv("max_abs_hp", sci(c.max_abs_hp));
    ctx.kv("min_div", sci(c.min_div));
    ctx.kv("max_div", sci(c.max_div));
    ctx.kv("disagreements", c.disagreements);
    ctx.kv("criteria", tag(&c.verdict));
    art.emit(Format::Csv, "criteria.csv", || {
        let mut t = Table::new(&["x", "y", "H_P", "div"]);
        for s in &c.samples {
            t.row([num(s.x), num(s.y), num(s.hp), num(s.div)]);
        }
        t.finish()
    })?;
    emit_json(ctx, art, c)?;
    Ok(true)
}

fn conformal(ctx: &mut Ctx, art: &mut Artifacts, file: Option<&Path>, rho: Option<&str>) -> Result<bool, CliError> {
    let curve = match (rho, file) {
        (Some(text), None) => {
            ctx.config.option("rho", text);
            JordanCurve::parse(text).map_err(|e| classify(e.into(), None))?
        }
        (None, Some(path)) => ctx.definition("curve", path)?.curve().map_err(def_err(path))?,
        _ => return Err(CliError::Usage("give either a curve file or --rho".into())),
    };
    let map = theodorsen_map(&curve, ctx.common.n, ctx.common.tol, DEFAULT_MAX_ITER).map_err(analysis)?;
    let report = verify_diffeomorphism(&map);
    ctx.kv("rho", &curve.rho);
    ctx.kv("n", map.n);
    ctx.kv("iterations", map.iterations);
    ctx.kv("residual", sci(map.residual));
    ctx.kv("margin", sci(report.margin));
    ctx.kv("periodicity_defect", sci(report.periodicity_defect));
    ctx.kv("spectral_tail", sci(report.spectral_tail));
    if let Some(w) = &map.warning {
        ctx.kv("warning", w);
    }
    ctx.kv("verdict", verdict(report.pass));
    let mut rows = Vec::with_capacity(map.n);
    for (k, tau) in map.tau.iter().enumerate() {
        let theta = TAU * k as f64 / map.n as f64;
        rows.push((theta, *tau, curve.radius(*tau).map_err(analysis)?));
    }
    art.emit(Format::Csv, "conformal.csv", || {
        let mut t = Table::new(&["theta", "tau", "rho"]);
        for (a, b, c) in &rows {
            t.row([num(*a), num(*b), num(*c)]);
        }
        t.finish()
    })?;
    #[derive(Serialize)]
    struct Body<'a> {
        rho: String,
        n: usize,
        iterations: usize,
        residual: f64,
        warning: Option<&'a str>,
        diffeomorphism: &'a limitlyap::conformal::DiffeoReport,
    }
    let body = Body {
        rho: curve.rho.to_string(),
        n: map.n,
        iterations: map.iterations,
        residual: map.residual,
        warning: map.warning.as_deref(),
        diffeomorphism: &report,
    };
    emit_json(ctx, art, body)?;
    Ok(report.pass)
}

/// Seeds near the centre and near the edges of the window.
fn seeds(w: Window) -> Vec<[f64; 2]> {
    let (cx, cy) = ((w.xmin + w.xmax) / 2.0, (w.ymin + w.ymax) / 2.0);
    let (hx, hy) = ((w.xmax - w.xmin) / 2.0, (w.ymax - w.ymin) / 2.0);
    let mut out = Vec::new();
    for scale in [0.1, 0.9] {
        for k in 0..8 {
            let a = TAU * (k as f64 + 0.5) / 8.0;
            out.push([cx + scale * hx * a.cos(), cy + scale * hy * a.sin()]);
        }
    }
    out
}

fn portrait_plot(ctx: &Ctx, s: &PlanarSystem, window: Window) -> Plot {
    let n = ctx.common.grid;
    let field = sample_phase_portrait(s, window, n, n);
    let mut plot = Plot::new(window);
    plot.axes();
    plot.arrows(&field.samples, n, n, 21);
    let rtol = ctx.common.tol.max(1e-12);
    for x0 in seeds(window) {
        // trajectories that blow up or stall are left out of the picture
        if let Ok(tr) = integrate_adaptive(s, x0, 20.0, rtol, rtol * 1e-2) {
            let pts: Vec<(f64, f64)> = tr.states.iter().map(|p| (p[0], p[1])).collect();
            plot.curve(&pts, "#c0392b", 1.2);
        }
    }
    plot
}

fn portrait(ctx: &mut Ctx, art: &mut Artifacts, file: &Path) -> Result<bool, CliError> {
    let l = load_planar(ctx, file)?;
    let n = ctx.common.grid;
    let field = sample_phase_portrait(&l.system, l.window, n, n);
    let missing = field.samples.iter().filter(|s| s.value.is_none()).count();
    ctx.kv("points", field.samples.len());
    ctx.kv("missing", missing);
    art.emit(Format::Csv, "portrait.csv", || {
        let mut t = Table::new(&["x", "y", "fx", "fy"]);
        for s in &field.samples {
            let [fx, fy] = s.value.unwrap_or([f64::NAN; 2]);
            t.row([num(s.x), num(s.y), num(fx), num(fy)]);
        }
        t.finish()
    })?;
    if art.wants(Format::Svg) {
        let svg = portrait_plot(ctx, &l.system, l.window).finish();
        art.emit(Format::Svg, "portrait.svg", || svg)?;
    }
    #[derive(Serialize)]
    struct Body {
        window: Window,
        grid: usize,
        points: usize,
        missing: usize,
    }
    let body = Body {
        window: l.window,
        grid: n,
        points: field.samples.len(),
        missing,
    };
    emit_json(ctx, art, body)?;
    Ok(true)
}

fn equiv(ctx: &mut Ctx, art: &mut Artifacts, first: &Path, second: &Path) -> Result<bool, CliError> {
    let (p1, window) = load_polar(ctx, first)?;
    let (p2, _) = load_polar(ctx, second)?;
    let report = shared_attractors(&p1, &p2, ctx.common.rmax, window, ctx.common.grid).map_err(analysis)?;
    let par = &report.parallelism;
    ctx.kv("parallel_residual", sci(par.residual));
    ctx.kv("parallel_worst_at", format!("{}, {}", par.argmax.0, par.argmax.1));
    ctx.kv("compared", par.compared);
    ctx.kv("skipped", par.skipped);
    for (i, c) in report.shared_cycles.iter().enumerate() {
        ctx.kv(&format!("cycle.{i}"), format!("{} first={} second={}", c.r, c.in_first, c.in_second));
    }
    for (i, c) in report.shared_fixed_points.iter().enumerate() {
        ctx.kv(&format!("rest.{i}"), format!("{} first={} second={}", c.r, c.in_first, c.in_second));
    }
    ctx.kv("verdict", tag(&report.verdict));
    art.emit(Format::Csv, "equiv.csv", || {
        let mut t = Table::new(&["kind", "r", "in_first", "in_second"]);
        let rows = report
            .shared_cycles
            .iter()
            .map(|c| ("cycle", c))
            .chain(report.shared_fixed_points.iter().map(|c| ("rest", c)));
        for (kind, c) in rows {
            t.row([kind.to_string(), num(c.r), c.in_first.to_string(), c.in_second.to_string()]);
        }
        t.finish()
    })?;
    emit_json(ctx, art, &report)?;
    Ok(true)
}

fn pipeline(ctx: &mut Ctx, art: &mut Artifacts, file: &Path, allow_non_smooth: bool) -> Result<bool, CliError> {
    ctx.config.option("allow_non_smooth", allow_non_smooth);
    let l = load_planar(ctx, file)?;
    let out = run_analysis(ctx, &l, allow_non_smooth, 360)?;
    print_analysis(ctx, &out);
    match &out.criteria {
        Some(c) => {
            ctx.kv("criteria", tag(&c.verdict));
            ctx.kv("criteria_max_abs_hp", sci(c.max_abs_hp));
            ctx.kv("criteria_div_range", format!("{}, {}", c.min_div, c.max_div));
        }
        None => ctx.kv("criteria", "skipped (no limit cycle)"),
    }
    ctx.kv("verdict", verdict(out.pass));
    let report = AnalysisReport::new("pipeline", &l.system, l.transform.as_ref(), &out, ctx.provenance());
    art.emit(Format::Json, "pipeline.json", || json(&report))?;
    art.emit(Format::Csv, "pipeline_cycles.csv", || cycle_table(&out.cycles))?;
    art.emit(Format::Csv, "pipeline_surface.csv", || surface_table(&out.phi, l.window, ctx.common.grid))?;
    if art.wants(Format::Svg) {
        let mut plot = portrait_plot(ctx, &l.system, l.window);
        for c in &out.cycles {
            let pts: Vec<(f64, f64)> = (0..=256)
                .filter_map(|k| {
                    let a = TAU * k as f64 / 256.0;
                    let (u, v) = (c.radius * a.cos(), c.radius * a.sin());
                    match &l.transform {
                        Some(t) => t.map_inverse(u, v).ok(),
                        None => Some((u, v)),
                    }
                })
                .collect();
            plot.curve(&pts, "#1e8449", 2.5);
        }
        let svg = plot.finish();
        art.emit(Format::Svg, "pipeline.svg", || svg)?;
    }
    Ok(out.pass)
}
