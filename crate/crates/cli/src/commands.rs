//! Subcommand implementations: parse, call the library, serialize.

use crate::report::{write_output, Flagged, RunReport};
use crate::source::{load_points, load_target, Target};
use crate::{
    DitherArgs, EnergyArgs, GridsolveArgs, InitChoice, KernelChoice, QuantizeArgs, RuleChoice,
    SolverArgs, Status, TileArgs, TvArgs, TvChoice,
};
use anyhow::{bail, Context, Result};
use measquant::energy::{
    fourier_energy, particle_energy, symmetrized_energy, target_self_energy, FourierQuadrature,
};
use measquant::kernels::{EstimationKernel, PowerKernel};
use measquant::measure::{wasserstein1_1d, write_pgm, write_points_csv, PgmImage};
use measquant::solver::{
    grid_objective, minimize_grid, minimize_particles, Direction, Init, SolverConfig, SolverTrace,
    Termination,
};
use measquant::tiling::{build_tiling, tiling_csv, tiling_points, PointRule};
use measquant::tv::{
    bandwidth_schedule, grid_tv, kernel_tv, pointdiff_tv_1d, TVEstimate, TvMethod,
};
use measquant::{GridDensity, Measure, ParticleMeasure};
use serde::Serialize;
use std::time::Instant;

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        bail!("n must be ≥ 1");
    }
    Ok(())
}

fn estimation_kernel(k: KernelChoice) -> EstimationKernel {
    match k {
        KernelChoice::Triangular => EstimationKernel::Triangular,
        KernelChoice::Gaussian => EstimationKernel::Gaussian,
    }
}

fn solver_config(a: &SolverArgs) -> SolverConfig {
    SolverConfig {
        max_iters: a.max_iters,
        grad_tol: a.grad_tol,
        lambda: a.lambda,
        tv_method: match a.tv {
            TvChoice::None => None,
            TvChoice::Kernel => Some(TvMethod::KernelEstimate),
            TvChoice::Pointdiff => Some(TvMethod::PointDifference),
        },
        tv_kernel: estimation_kernel(a.kernel),
        tv_bandwidth: a.bandwidth,
        tv_smoothing: a.smoothing,
        init: match a.init {
            InitChoice::Tiling => Init::Tiling,
            InitChoice::Random => Init::Random { seed: a.seed },
        },
        direction: if a.gradient_descent {
            Direction::GradientDescent
        } else {
            Direction::Lbfgs { memory: 10 }
        },
        ..Default::default()
    }
}

fn tv_of(
    points: &ParticleMeasure,
    method: TvChoice,
    bandwidth: Option<f64>,
    kernel: KernelChoice,
) -> Result<Option<TVEstimate>> {
    Ok(match method {
        TvChoice::None => None,
        TvChoice::Pointdiff => Some(pointdiff_tv_1d(points)?),
        TvChoice::Kernel => {
            let h = match bandwidth {
                Some(h) => h,
                None => bandwidth_schedule(points.len(), points.dim())?,
            };
            Some(kernel_tv(points, h, estimation_kernel(kernel))?)
        }
    })
}

#[derive(Debug, Serialize)]
struct Energies {
    attraction: f64,
    repulsion: f64,
    total: f64,
    symmetrized: Option<f64>,
    fourier: Option<f64>,
    tv: Option<Flagged>,
    tv_method: Option<TvMethod>,
    tv_bandwidth: Option<f64>,
}

/// `V`, `W`, `E`, plus `Ẽ` when `q_a = q_r` and `Ê` when also `q < 2` and requested.
fn energies(
    points: &ParticleMeasure,
    target: &Measure,
    kernel: &PowerKernel,
    fourier: bool,
) -> Result<Energies> {
    let r = particle_energy(points, target, kernel)?;
    let symmetric = kernel.q_a == kernel.q_r;
    let symmetrized = match (symmetric, target) {
        (false, _) => None,
        (true, Measure::Particles(p)) => Some(symmetrized_energy(points, p, kernel.q_a)?),
        (true, Measure::Grid(g)) => Some(r.total - target_self_energy(g, kernel.q_a)),
    };
    let fourier = if symmetric && kernel.q_a < 2.0 && fourier && points.dim() <= 2 {
        Some(fourier_energy(
            points,
            target,
            kernel,
            &FourierQuadrature::default(),
        )?)
    } else {
        None
    };
    Ok(Energies {
        attraction: r.attraction,
        repulsion: r.repulsion,
        total: r.total,
        symmetrized,
        fourier,
        tv: None,
        tv_method: None,
        tv_bandwidth: None,
    })
}

fn w1_1d(points: &ParticleMeasure, target: &Measure) -> Result<Option<f64>> {
    if points.dim() != 1 {
        return Ok(None);
    }
    Ok(Some(wasserstein1_1d(points, target)?))
}

#[derive(Debug, Serialize)]
struct SolveResult {
    n: usize,
    dim: usize,
    termination: Termination,
    iterations: usize,
    final_objective: f64,
    energy: Energies,
    w1: Option<f64>,
    uniform_fallback: bool,
}

fn status(t: Termination) -> Status {
    if t == Termination::Converged {
        Status::Done
    } else {
        Status::NotConverged
    }
}

/// Solves and evaluates; shared by quantize and dither.
fn solve(
    target: &Target,
    n: usize,
    a: &SolverArgs,
    fourier: bool,
) -> Result<(ParticleMeasure, SolverTrace, SolveResult)> {
    check_n(n)?;
    let d = target.measure.dim();
    let kernel = PowerKernel::new(d, a.qa, a.qr)?;
    let cfg = solver_config(a);
    let (points, trace) = minimize_particles(&target.measure, n, &kernel, &cfg)?;
    let points = points.sorted();
    if !trace.converged() {
        log::warn!("solver stopped with {:?}", trace.termination);
    }
    let mut energy = energies(&points, &target.measure, &kernel, fourier || d == 1)?;
    if a.lambda > 0.0 && a.tv != TvChoice::None {
        if let Some(t) = tv_of(&points, a.tv, a.bandwidth, a.kernel)? {
            energy.tv = Some(t.value.into());
            energy.tv_method = Some(t.method);
            energy.tv_bandwidth = t.bandwidth;
        }
    }
    let result = SolveResult {
        n,
        dim: d,
        termination: trace.termination,
        iterations: trace.iterations(),
        final_objective: trace.final_energy(),
        energy,
        w1: w1_1d(&points, &target.measure)?,
        uniform_fallback: target.uniform_fallback,
    };
    Ok((points, trace, result))
}

pub fn quantize(a: &QuantizeArgs) -> Result<Status> {
    let start = Instant::now();
    check_n(a.n)?;
    let target = load_target(&a.omega)?;
    let (points, trace, result) = solve(&target, a.n, &a.solver, a.fourier)?;
    let st = status(result.termination);
    let mut report = RunReport::new("quantize", a, result);
    report.outputs.push(write_output(
        &a.out,
        "points.csv",
        write_points_csv(&points),
    )?);
    report
        .outputs
        .push(write_output(&a.out, "trace.csv", trace.to_csv())?);
    report
        .outputs
        .push(a.out.join("report.json").display().to_string());
    if a.timing {
        report.timing_secs = Some(start.elapsed().as_secs_f64());
    }
    write_output(&a.out, "report.json", report.to_json()?)?;
    log::info!("quantize finished in {:.3}s", start.elapsed().as_secs_f64());
    println!(
        "{} points, E = {}, termination {:?}",
        a.n, report.result.energy.total, report.result.termination
    );
    Ok(st)
}

/// Lightened copy of the image, upscaled by `scale`, with the points drawn black.
fn preview(img: &PgmImage, points: &[[f64; 2]], scale: usize) -> PgmImage {
    let (w, h) = (img.width * scale, img.height * scale);
    let max = img.maxval;
    let mut pixels = vec![0u16; w * h];
    for y in 0..h {
        for x in 0..w {
            let p = img.pixels[(y / scale) * img.width + x / scale];
            pixels[y * w + x] = max - (max - p) / 2;
        }
    }
    let r = (scale / 2).max(1);
    for &[px, py] in points {
        let cx = ((px * scale as f64) as usize).min(w - 1);
        let cy = ((py * scale as f64) as usize).min(h - 1);
        for y in cy.saturating_sub(r / 2)..(cy + r.div_ceil(2)).min(h) {
            for x in cx.saturating_sub(r / 2)..(cx + r.div_ceil(2)).min(w) {
                pixels[y * w + x] = 0;
            }
        }
    }
    PgmImage {
        width: w,
        height: h,
        maxval: max,
        pixels,
    }
}

pub fn dither(a: &DitherArgs) -> Result<Status> {
    let start = Instant::now();
    check_n(a.n)?;
    if a.preview_scale == 0 {
        bail!("preview scale must be ≥ 1");
    }
    let bytes =
        std::fs::read(&a.image).with_context(|| format!("reading {}", a.image.display()))?;
    let img = measquant::measure::parse_pgm(&bytes)?;
    let decoded = measquant::measure::grid_from_image(&bytes)?;
    let target = Target {
        measure: Measure::Grid(decoded.density),
        uniform_fallback: decoded.uniform_fallback,
    };
    let (points, trace, result) = solve(&target, a.n, &a.solver, false)?;
    let st = status(result.termination);

    // unit square to pixel coordinates
    let pixel: Vec<[f64; 2]> = points
        .points()
        .map(|p| [p[0] * img.width as f64, p[1] * img.height as f64])
        .collect();
    let image_points = ParticleMeasure::from_points(2, &pixel)?;
    let mut report = RunReport::new("dither", a, result);
    report.outputs.push(write_output(
        &a.out,
        "points.csv",
        write_points_csv(&image_points),
    )?);
    report.outputs.push(write_output(
        &a.out,
        "preview.pgm",
        write_pgm(&preview(&img, &pixel, a.preview_scale)),
    )?);
    report
        .outputs
        .push(write_output(&a.out, "trace.csv", trace.to_csv())?);
    report
        .outputs
        .push(a.out.join("report.json").display().to_string());
    if a.timing {
        report.timing_secs = Some(start.elapsed().as_secs_f64());
    }
    write_output(&a.out, "report.json", report.to_json()?)?;
    println!(
        "{} points on a {}x{} image, E = {}, termination {:?}",
        a.n, img.width, img.height, report.result.energy.total, report.result.termination
    );
    Ok(st)
}

fn cell(v: Option<f64>) -> String {
    // print a signed zero as 0
    v.map_or_else(|| "n/a".into(), |x| format!("{}", x + 0.0))
}

pub fn energy(a: &EnergyArgs) -> Result<Status> {
    let points = load_points(&a.points)?;
    let target = load_target(&a.omega)?;
    let kernel = PowerKernel::new(points.dim(), a.qa, a.qr)?;
    let e = energies(
        &points,
        &target.measure,
        &kernel,
        a.fourier || points.dim() == 1,
    )?;
    let w1 = w1_1d(&points, &target.measure)?;
    if a.json {
        #[derive(Serialize)]
        struct Out {
            energy: Energies,
            w1: Option<f64>,
        }
        print!(
            "{}",
            RunReport::new("energy", a, Out { energy: e, w1 }).to_json()?
        );
    } else {
        let header = ["V", "W", "E", "E_sym", "E_fourier", "W1"];
        let row = [
            cell(Some(e.attraction)),
            cell(Some(e.repulsion)),
            cell(Some(e.total)),
            cell(e.symmetrized),
            cell(e.fourier),
            cell(w1),
        ];
        let width = row.iter().map(String::len).max().unwrap_or(0).max(10) + 2;
        println!(
            "{}",
            header
                .iter()
                .map(|h| format!("{h:<width$}"))
                .collect::<String>()
                .trim_end()
        );
        println!(
            "{}",
            row.iter()
                .map(|c| format!("{c:<width$}"))
                .collect::<String>()
                .trim_end()
        );
    }
    Ok(Status::Done)
}

fn grid_target(src: &str) -> Result<GridDensity> {
    match load_target(src)?.measure {
        Measure::Grid(g) => Ok(g),
        Measure::Particles(_) => bail!("{src} is a point set; a grid density is required"),
    }
}

pub fn tile(a: &TileArgs) -> Result<Status> {
    check_n(a.n)?;
    let omega = grid_target(&a.omega)?;
    let t = build_tiling(&omega, a.n)?;
    let csv = tiling_csv(&t);
    if let Some(p) = &a.points_out {
        let rule = match a.rule {
            RuleChoice::Center => PointRule::Center,
            RuleChoice::Centroid => PointRule::MassCentroid,
        };
        std::fs::write(p, write_points_csv(&tiling_points(&t, rule)?))
            .with_context(|| format!("writing {}", p.display()))?;
    }
    match &a.out {
        Some(p) => {
            std::fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?;
            println!(
                "{} tiles, counts {:?}, n_tilde {}{}",
                t.len(),
                t.counts,
                t.plan.n_tilde,
                if t.degenerate {
                    ", degenerate cuts"
                } else {
                    ""
                }
            );
        }
        None => print!("{csv}"),
    }
    Ok(Status::Done)
}

pub fn tv(a: &TvArgs) -> Result<Status> {
    let points = load_points(&a.points)?;
    if a.method == TvChoice::None {
        bail!("choose --method kernel or pointdiff");
    }
    let t = tv_of(&points, a.method, a.bandwidth, a.kernel)?.expect("method is set");
    if a.json {
        #[derive(Serialize)]
        struct Out {
            tv: Flagged,
            method: TvMethod,
            bandwidth: Option<f64>,
        }
        let out = Out {
            tv: t.value.into(),
            method: t.method,
            bandwidth: t.bandwidth,
        };
        print!("{}", RunReport::new("tv", a, out).to_json()?);
    } else {
        println!("{}", t.value);
    }
    Ok(Status::Done)
}

#[derive(Debug, Serialize)]
struct SweepEntry {
    lambda: f64,
    termination: Termination,
    iterations: usize,
    objective: f64,
    tv: f64,
    max: f64,
    l1_to_datum: f64,
    l1_to_reference: Option<f64>,
    l2_to_reference: Option<f64>,
    file: String,
}

fn distances(u: &GridDensity, v: &GridDensity) -> (f64, f64) {
    let h = u.geometry().cell_width(0);
    let (mut l1, mut l2) = (0.0, 0.0);
    for (a, b) in u.values().iter().zip(v.values()) {
        l1 += (a - b).abs();
        l2 += (a - b) * (a - b);
    }
    (l1 * h, (l2 * h).sqrt())
}

fn density_csv(u: &GridDensity, lambda: Option<f64>, q: f64) -> String {
    let edges = u.geometry().edges(0);
    let mut out = match lambda {
        Some(l) => format!("# lambda={l} q={q} cells={}\n", u.values().len()),
        None => format!("# datum cells={}\n", u.values().len()),
    };
    out.push_str("x_lo,x_hi,u\n");
    for (e, v) in edges.windows(2).zip(u.values()) {
        out.push_str(&format!("{},{},{}\n", e[0], e[1], v));
    }
    out
}

pub fn gridsolve(a: &GridsolveArgs) -> Result<Status> {
    let start = Instant::now();
    let w = grid_target(&a.omega)?;
    if w.dim() != 1 {
        bail!(
            "gridsolve needs a 1D grid density, got dimension {}",
            w.dim()
        );
    }
    let reference = match &a.reference {
        Some(src) => {
            let r = grid_target(src)?;
            if r.geometry() != w.geometry() {
                bail!("reference {src} lives on a different grid than the datum");
            }
            Some(r)
        }
        None => None,
    };
    if a.lambda.is_empty() {
        bail!("give at least one λ");
    }
    let configs: Vec<SolverConfig> = a
        .lambda
        .iter()
        .map(|&lambda| {
            let cfg = SolverConfig {
                lambda,
                max_iters: a.max_iters,
                tv_smoothing: a.smoothing,
                residual_tol: a.residual_tol,
                ..Default::default()
            };
            cfg.validate().map(|_| cfg)
        })
        .collect::<measquant::Result<_>>()?;

    let solves: Vec<measquant::Result<(GridDensity, SolverTrace)>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| {
                let w = &w;
                s.spawn(move || minimize_grid(w, a.q, cfg))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });

    let mut entries = Vec::new();
    let mut outputs = vec![write_output(
        &a.out,
        "datum.csv",
        density_csv(&w, None, a.q),
    )?];
    let mut all_converged = true;
    for (i, (res, &lambda)) in solves.into_iter().zip(&a.lambda).enumerate() {
        let (u, trace) = res?;
        all_converged &= trace.converged();
        let file = write_output(
            &a.out,
            &format!("u_{i}.csv"),
            density_csv(&u, Some(lambda), a.q),
        )?;
        outputs.push(file.clone());
        let (l1_ref, l2_ref) = match &reference {
            Some(r) => {
                let (l1, l2) = distances(&u, r);
                (Some(l1), Some(l2))
            }
            None => (None, None),
        };
        entries.push(SweepEntry {
            lambda,
            termination: trace.termination,
            iterations: trace.iterations(),
            objective: grid_objective(&u, &w, a.q, lambda)?,
            tv: grid_tv(&u).value,
            max: u.values().iter().cloned().fold(0.0, f64::max),
            l1_to_datum: distances(&u, &w).0,
            l1_to_reference: l1_ref,
            l2_to_reference: l2_ref,
            file,
        });
    }
    for e in &entries {
        println!(
            "lambda {:<10} {:?} after {} iterations, objective {}, max u {}{}",
            e.lambda,
            e.termination,
            e.iterations,
            e.objective,
            e.max,
            e.l1_to_reference
                .map_or(String::new(), |d| format!(", L1 to reference {d}"))
        );
    }
    let mut report = RunReport::new("gridsolve", a, entries);
    outputs.push(a.out.join("report.json").display().to_string());
    report.outputs = outputs;
    if a.timing {
        report.timing_secs = Some(start.elapsed().as_secs_f64());
    }
    write_output(&a.out, "report.json", report.to_json()?)?;
    Ok(if all_converged {
        Status::Done
    } else {
        Status::NotConverged
    })
}
