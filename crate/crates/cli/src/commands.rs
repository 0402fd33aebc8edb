//! Subcommand implementations. Each one resolves its settings (flag, then
//! config file, then default), delegates to the library and writes its
//! artifacts plus a manifest under the output directory.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use serde::Serialize;

use rweno::analysis::{self, ConvergenceRow, Metadata, StudyTarget};
use rweno::fmt::real;
use rweno::funcspace::{self, eval_function, DatasetConfig, EvalFunction};
use rweno::ratnet::Arch;
use rweno::solver::{self, Problem};
use rweno::train::registry::{self, MANIFEST_FILE};
use rweno::train::{self, Criterion, LossHyper, SweepSpec, TrainConfig};
use rweno::{Error, Result, Scheme};

use crate::config::{write_manifest, FileConfig, Global};

fn create_out(global: &Global) -> Result<()> {
    fs::create_dir_all(&global.out)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", global.out.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", path.display())))
}

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Config(format!("cannot write {}: {e}", path.display()))
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// Grid sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub nx: Option<Vec<usize>>,
    /// Samples per grid size; must be divisible by every nx.
    #[arg(long)]
    pub pairs_per_grid: Option<usize>,
}

fn dataset_config(global: &Global, file: &FileConfig, nx: Option<Vec<usize>>, pairs: Option<usize>) -> DatasetConfig {
    let d = DatasetConfig::default();
    DatasetConfig {
        nx_values: nx.or_else(|| file.data.nx.clone()).unwrap_or(d.nx_values),
        pairs_per_grid: pairs.or(file.data.pairs_per_grid).unwrap_or(d.pairs_per_grid),
        seed: global.seed,
    }
}

pub fn gen_data(global: &Global, file: &FileConfig, args: GenDataArgs) -> Result<()> {
    let cfg = dataset_config(global, file, args.nx, args.pairs_per_grid);
    cfg.validate()?;
    create_out(global)?;
    let samples = funcspace::build_dataset(&cfg)?;
    let path = global.out.join("dataset.csv");
    let mut w = create(&path)?;
    funcspace::write_dataset(&mut w, &samples).map_err(write_err(&path))?;
    w.flush().map_err(write_err(&path))?;

    #[derive(Serialize)]
    struct Resolved<'a> {
        dataset: &'a DatasetConfig,
        rng: &'a str,
        rows: usize,
    }
    write_manifest(global, "gen-data", &Resolved { dataset: &cfg, rng: funcspace::RNG_NAME, rows: samples.len() })?;
    println!("wrote {} samples to {}", samples.len(), path.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset CSV written by `gen-data` [default: <out>/dataset.csv].
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// `rational` (default) or `delta-swish`.
    #[arg(long)]
    pub arch: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Smoothness exponents to sweep.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Deviation-loss weights to sweep.
    #[arg(long, value_delimiter = ',')]
    pub beta_d: Option<Vec<f64>>,
    #[arg(long)]
    pub beta_w: Option<f64>,
    /// Peak learning rates to sweep.
    #[arg(long, value_delimiter = ',')]
    pub peak_lr: Option<Vec<f64>>,
    /// Training seeds [default: the global seed].
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Held-out samples per grid for the loss-based criteria.
    #[arg(long)]
    pub heldout_pairs: Option<usize>,
}

fn parse_arch(name: &str) -> Result<Arch> {
    match name {
        "rational" => Ok(Arch::rational_default()),
        "delta-swish" => Ok(Arch::delta_swish_default()),
        _ => Err(Error::Config(format!("unknown arch `{name}`; valid: rational, delta-swish"))),
    }
}

pub fn train(global: &Global, file: &FileConfig, args: TrainArgs) -> Result<()> {
    let t = &file.train;
    let data_path = args
        .data
        .or_else(|| t.data.clone())
        .unwrap_or_else(|| global.out.join("dataset.csv"));
    let arch_name = args.arch.or_else(|| t.arch.clone()).unwrap_or_else(|| "rational".into());
    let defaults = TrainConfig::default();
    let sweep_defaults = SweepSpec::default();
    let steps = args.steps.or(t.steps).unwrap_or(defaults.total_steps);
    let base = TrainConfig {
        arch: parse_arch(&arch_name)?,
        batch_size: args.batch_size.or(t.batch_size).unwrap_or(defaults.batch_size),
        hyper: LossHyper {
            beta_w: args.beta_w.or(t.beta_w).unwrap_or(defaults.hyper.beta_w),
            ..defaults.hyper
        },
        ..defaults.with_steps(steps)
    };
    let sweep = SweepSpec {
        alpha: args.alpha.or_else(|| t.alpha.clone()).unwrap_or(sweep_defaults.alpha),
        beta_d: args.beta_d.or_else(|| t.beta_d.clone()).unwrap_or(sweep_defaults.beta_d),
        peak_lr: args.peak_lr.or_else(|| t.peak_lr.clone()).unwrap_or(sweep_defaults.peak_lr),
        seeds: args.seeds.or_else(|| t.seeds.clone()).unwrap_or_else(|| vec![global.seed]),
    };
    let configs = sweep.configs(&base);
    if configs.is_empty() {
        return Err(Error::Config("the sweep is empty".into()));
    }
    for c in &configs {
        c.validate()?;
    }
    let heldout_pairs = args.heldout_pairs.or(t.heldout_pairs).unwrap_or(2048);

    let file_in = File::open(&data_path)
        .map_err(|e| Error::Config(format!("cannot open dataset {}: {e}", data_path.display())))?;
    let dataset = funcspace::read_dataset(BufReader::new(file_in))?;
    if dataset.is_empty() {
        return Err(Error::Config(format!("dataset {} has no rows", data_path.display())));
    }
    let heldout_cfg = train::heldout_config(&DatasetConfig {
        pairs_per_grid: heldout_pairs,
        ..dataset_config(global, file, None, None)
    });
    let heldout = funcspace::build_dataset(&heldout_cfg)?;

    create_out(global)?;
    let dir = global.out.join("models");
    eprintln!("training {} configuration(s) on {} thread(s)", configs.len(), global.jobs);
    let results = train::run_sweep(&dataset, &heldout, &configs, global.jobs);
    let models = results.into_iter().collect::<Result<Vec<_>>>()?;
    registry::write_registry(&dir, &models)?;
    for m in &models {
        let path = dir.join(format!("{}.log.csv", m.id));
        let mut w = create(&path)?;
        train::write_log(&mut w, &m.log).map_err(write_err(&path))?;
        w.flush().map_err(write_err(&path))?;
    }

    #[derive(Serialize)]
    struct Resolved<'a> {
        data: &'a Path,
        arch: &'a str,
        base: &'a TrainConfig,
        sweep: &'a SweepSpec,
        heldout: &'a DatasetConfig,
    }
    write_manifest(
        global,
        "train",
        &Resolved { data: &data_path, arch: &arch_name, base: &base, sweep: &sweep, heldout: &heldout_cfg },
    )?;
    for m in &models {
        println!(
            "{}  order_g {:.3}  order_h {:.3}  recon {:.3e}  dev {:.3e}",
            m.id, m.metrics.study_g.order, m.metrics.study_h.order, m.metrics.recon_loss, m.metrics.dev_loss
        );
    }
    println!("wrote {} model(s) to {}", models.len(), dir.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Registry manifest [default: <out>/models/manifest.csv].
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// conv-sine-step (default), conv-sin-cubed, least-recon-loss or least-dev-loss.
    #[arg(long)]
    pub criterion: Option<String>,
}

pub fn select(global: &Global, file: &FileConfig, args: SelectArgs) -> Result<()> {
    let manifest = args
        .manifest
        .or_else(|| file.select.manifest.clone())
        .unwrap_or_else(|| global.out.join("models").join(MANIFEST_FILE));
    let criterion: Criterion = args
        .criterion
        .or_else(|| file.select.criterion.clone())
        .unwrap_or_else(|| Criterion::ConvSineStep.name().into())
        .parse()?;
    let mut rows = registry::read_manifest(&manifest)?;
    let summaries: Vec<_> = rows.iter().map(|r| r.summary.clone()).collect();
    let best = train::select_model(&summaries, criterion)
        .ok_or_else(|| Error::Config(format!("manifest {} lists no models", manifest.display())))?;
    if !rows[best].criteria.contains(&criterion) {
        rows[best].criteria.push(criterion);
    }
    registry::write_manifest(&manifest, &rows)?;

    let id = rows[best].summary.model_id.clone();
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let weights = registry::weight_path(dir, &id);
    create_out(global)?;
    #[derive(Serialize)]
    struct Resolved<'a> {
        manifest: &'a Path,
        criterion: &'a str,
        selected: &'a str,
        weights: &'a Path,
    }
    write_manifest(
        global,
        "select",
        &Resolved { manifest: &manifest, criterion: criterion.name(), selected: &id, weights: &weights },
    )?;
    println!("{id}");
    println!("{}", weights.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// advection-cosine (default), advection-sigmoid, burgers-shock,
    /// burgers-transonic or burgers-rarefaction.
    #[arg(long)]
    pub problem: Option<String>,
    /// weno3-js (default), weno3-z, weno5-js, quick, ideal3 or nn:<weights.json>.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub nx: Option<usize>,
    /// Final time [default: 5].
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub cfl: Option<f64>,
}

fn problem_with(name: &str, t: Option<f64>, cfl: Option<f64>) -> Result<Problem> {
    let mut p = Problem::parse(name)?;
    if let Some(t) = t {
        p = p.with_t(t);
    }
    if let Some(c) = cfl {
        p = p.with_cfl(c);
    }
    Ok(p)
}

pub fn solve(global: &Global, file: &FileConfig, args: SolveArgs) -> Result<()> {
    let s = &file.solve;
    let problem_name = args.problem.or_else(|| s.problem.clone()).unwrap_or_else(|| "advection-cosine".into());
    let scheme_name = args.scheme.or_else(|| s.scheme.clone()).unwrap_or_else(|| "weno3-js".into());
    let nx = args.nx.or(s.nx).unwrap_or(256);
    let problem = problem_with(&problem_name, args.t.or(s.t), args.cfl.or(s.cfl))?;
    let scheme = Scheme::parse(&scheme_name)?;
    problem.grid(nx)?;
    create_out(global)?;

    let start = Instant::now();
    let report = solver::run(&problem, nx, &scheme)?;
    let wall = start.elapsed().as_secs_f64();

    let state_path = global.out.join("final_state.csv");
    let mut w = create(&state_path)?;
    let mut body = String::from("x,u,u_exact\n");
    for ((x, u), e) in report.centers.iter().zip(&report.final_state).zip(&report.exact_final) {
        body.push_str(&format!("{},{},{}\n", real(*x), real(*u), real(*e)));
    }
    w.write_all(body.as_bytes()).map_err(write_err(&state_path))?;
    w.flush().map_err(write_err(&state_path))?;

    let err_path = global.out.join("error_series.csv");
    let mut w = create(&err_path)?;
    let mut body = String::from("t,l1\n");
    for (t, e) in report.times.iter().zip(&report.l1_errors) {
        body.push_str(&format!("{},{}\n", real(*t), real(*e)));
    }
    w.write_all(body.as_bytes()).map_err(write_err(&err_path))?;
    w.flush().map_err(write_err(&err_path))?;

    #[derive(Serialize)]
    struct Resolved<'a> {
        problem: &'a str,
        scheme: &'a str,
        nx: usize,
        cfl: f64,
        t: f64,
        steps: usize,
        final_l1: f64,
        wall_time_s: f64,
    }
    write_manifest(
        global,
        "solve",
        &Resolved {
            problem: &problem_name,
            scheme: &scheme_name,
            nx,
            cfl: problem.cfl,
            t: problem.t_final,
            steps: report.steps(),
            final_l1: report.final_error(),
            wall_time_s: wall,
        },
    )?;
    println!(
        "scheme={} nx={} cfl={} T={} wall_time_s={:.3} final_l1={}",
        scheme_name,
        nx,
        problem.cfl,
        problem.t_final,
        wall,
        real(report.final_error())
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    /// A solver problem name, or `interp:sin-cubed` / `interp:sine-step` for
    /// face-interpolation studies [default: advection-cosine].
    #[arg(long)]
    pub target: Option<String>,
    /// Schemes, comma separated [default: the four classical schemes].
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<String>>,
    /// Grid sizes, comma separated [default: 32,64,128,256,512].
    #[arg(long, value_delimiter = ',')]
    pub nx: Option<Vec<usize>>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub cfl: Option<f64>,
}

fn default_schemes() -> Vec<String> {
    Scheme::classical().iter().map(|s| s.name().to_string()).collect()
}

fn parse_schemes(names: &[String]) -> Result<Vec<Scheme>> {
    names.iter().map(|n| Scheme::parse(n)).collect()
}

fn jobs_pool(global: &Global) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(global.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} worker threads: {e}", global.jobs)))
}

pub fn converge(global: &Global, file: &FileConfig, args: ConvergeArgs) -> Result<()> {
    let c = &file.converge;
    let target_name = args.target.or_else(|| c.target.clone()).unwrap_or_else(|| "advection-cosine".into());
    let names = args.schemes.or_else(|| c.schemes.clone()).unwrap_or_else(default_schemes);
    let nx = args.nx.or_else(|| c.nx.clone()).unwrap_or_else(|| vec![32, 64, 128, 256, 512]);
    let (t, cfl) = (args.t.or(c.t), args.cfl.or(c.cfl));
    let target = match target_name.as_str() {
        "interp:sin-cubed" => StudyTarget::Interpolate(eval_function(EvalFunction::SinCubed)),
        "interp:sine-step" => StudyTarget::Interpolate(eval_function(EvalFunction::SineStep)),
        name => StudyTarget::Solve(problem_with(name, t, cfl)?),
    };
    let schemes = parse_schemes(&names)?;
    create_out(global)?;
    let rows: Vec<ConvergenceRow> =
        jobs_pool(global)?.install(|| analysis::convergence_study(&schemes, &target, &nx))?;
    let path = global.out.join("convergence.csv");
    analysis::emit_report(&path, &Metadata::new(Some(global.seed)), &rows)?;

    #[derive(Serialize)]
    struct Resolved<'a> {
        target: &'a str,
        schemes: &'a [String],
        nx: &'a [usize],
        t: Option<f64>,
        cfl: Option<f64>,
    }
    write_manifest(global, "converge", &Resolved { target: &target_name, schemes: &names, nx: &nx, t, cfl })?;
    for chunk in rows.chunks(nx.len()) {
        println!("{:<12} slope {:.3}", chunk[0].scheme, chunk[0].slope);
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct AdrArgs {
    /// Schemes, comma separated [default: the four classical schemes].
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<String>>,
    /// Periodic grid size [default: 256].
    #[arg(long)]
    pub nx: Option<usize>,
}

pub fn adr(global: &Global, file: &FileConfig, args: AdrArgs) -> Result<()> {
    let names = args.schemes.or_else(|| file.adr.schemes.clone()).unwrap_or_else(default_schemes);
    let nx = args.nx.or(file.adr.nx).unwrap_or(analysis::ADR_NX);
    let schemes = parse_schemes(&names)?;
    let kappas = analysis::default_kappas(nx);
    create_out(global)?;
    let per_scheme = jobs_pool(global)?.install(|| {
        use rayon::prelude::*;
        schemes
            .par_iter()
            .map(|s| analysis::adr(s, &kappas, nx))
            .collect::<Result<Vec<_>>>()
    })?;
    let rows: Vec<_> = per_scheme.into_iter().flatten().collect();
    let path = global.out.join("adr.csv");
    analysis::emit_report(&path, &Metadata::new(Some(global.seed)), &rows)?;

    #[derive(Serialize)]
    struct Resolved<'a> {
        schemes: &'a [String],
        nx: usize,
        points: usize,
    }
    write_manifest(global, "adr", &Resolved { schemes: &names, nx, points: kappas.len() })?;
    let invalid = rows.iter().filter(|p| !p.is_valid()).count();
    println!("wrote {} points to {} ({invalid} invalid)", rows.len(), path.display());
    Ok(())
}
