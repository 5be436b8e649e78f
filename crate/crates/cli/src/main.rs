//! Command-line surface: generation, recovery, evaluation, hardness
//! tooling, and the bench table, all reproducible from a seed.
//!
//! Exit codes: 0 success, 2 usage/input error, 3 algorithm-declared
//! failure, 4 numerical failure.

mod config;

use clap::{Args, Parser, Subcommand};
use relurec::error::Error as CoreError;
use relurec::eval::{functional_error, match_weights};
use relurec::model::io::{read_matrix, write_matrix, InstanceManifest};
use relurec::model::{
    generate_instance, generate_weights, Activation, NetworkWeights, NoiseModel, UMode,
};
use relurec::numerics::Matrix;
use relurec::recover::RecoveryConfig;
use relurec::rng::SeedStream;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "relurec",
    about = "Synthesize and recover two-layer rectified networks",
    version
)]
struct Cli {
    /// Key = value config file; flags override file keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Root seed (mandatory for stochastic commands; may come from the
    /// config file).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (accepted for interface stability; execution is
    /// deterministic and identical for every value).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Override tolerance for recovery feasibility decisions.
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance: X, A, E, U, V plus a manifest.
    Gen(GenArgs),
    /// Recover weights from a generated instance directory.
    Recover(RecoverArgs),
    /// Evaluate recovered weights against an instance's ground truth.
    Eval(EvalArgs),
    /// Run acceptance-criterion experiments and print a result table.
    Bench(BenchArgs),
    /// SAT -> separability -> network reduction tools.
    Hardness(HardnessArgs),
    /// Fast end-to-end smoke check.
    Selftest,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// relu | power(c) | expm1
    #[arg(long)]
    activation: Option<String>,
    /// none | gaussian:SIGMA | rademacher:SIGMA | sparse:FRACTION:MAGNITUDE
    #[arg(long)]
    noise: Option<String>,
    /// Target condition number for V (achieved value is reported).
    #[arg(long)]
    kappa: Option<f64>,
    /// full-rank | orthonormal
    #[arg(long)]
    u_mode: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RecoverArgs {
    /// worstcase | exact | orthonormal-ica | noisy | fpt-u | fpt-noise | sparse
    #[arg(long)]
    algo: Option<String>,
    /// Instance directory holding manifest.txt.
    #[arg(long)]
    dir: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Instance directory holding manifest.txt (ground truth).
    #[arg(long)]
    dir: Option<PathBuf>,
    /// Directory holding U_hat.mat / V_hat.mat.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated criteria (e.g. AC-1,AC-9) or "all".
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HardnessArgs {
    #[command(subcommand)]
    action: HardnessAction,
}

#[derive(Subcommand)]
enum HardnessAction {
    /// Read a 6-CNF (DIMACS-style), make it reversible, and emit the
    /// separability + network instances.
    Reduce {
        #[arg(long)]
        cnf: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify a witness (2 x dim matrix file: rows x and y) against a
    /// reduced instance directory.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        witness: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Tiny-scale brute-force search for a witness.
    Brute {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &CoreError) -> ExitCode {
    match e {
        CoreError::Io(_)
        | CoreError::Parse(_)
        | CoreError::InvalidShape(_)
        | CoreError::ShapeMismatch(_) => ExitCode::from(2),
        CoreError::NumericalFailure(_) => ExitCode::from(4),
        _ => ExitCode::from(3),
    }
}

struct Globals {
    seed: Option<u64>,
    threads: usize,
    tol: Option<f64>,
}

fn run(cli: Cli) -> Result<ExitCode, CoreError> {
    let file_cfg = match &cli.config {
        Some(path) => config::FileConfig::load(path)?,
        None => config::FileConfig::default(),
    };
    let globals = Globals {
        seed: cli.seed,
        threads: cli.threads,
        tol: cli.tol,
    };
    match cli.command {
        Command::Gen(args) => cmd_gen(&globals, &file_cfg, args),
        Command::Recover(args) => cmd_recover(&globals, &file_cfg, args),
        Command::Eval(args) => cmd_eval(&file_cfg, args),
        Command::Bench(args) => cmd_bench(&globals, &file_cfg, args),
        Command::Hardness(args) => cmd_hardness(args),
        Command::Selftest => cmd_selftest(),
    }
}

fn need<T>(v: Option<T>, what: &str) -> Result<T, CoreError> {
    v.ok_or_else(|| CoreError::Parse(format!("missing required parameter {what}")))
}

fn cmd_gen(cli: &Globals, file_cfg: &config::FileConfig, args: GenArgs) -> Result<ExitCode, CoreError> {
    let m = need(args.m.or(file_cfg.get_usize("m")?), "--m")?;
    let k = need(args.k.or(file_cfg.get_usize("k")?), "--k")?;
    let d = need(args.d.or(file_cfg.get_usize("d")?), "--d")?;
    let n = need(args.n.or(file_cfg.get_usize("n")?), "--n")?;
    let seed = need(cli.seed.or(file_cfg.get_u64("seed")?), "--seed")?;
    let out = need(args.out.or(file_cfg.get_path("out")), "--out")?;
    let activation = Activation::parse(
        &args
            .activation
            .or(file_cfg.get_string("activation"))
            .unwrap_or_else(|| "relu".into()),
    )?;
    let noise = NoiseModel::parse(
        &args
            .noise
            .or(file_cfg.get_string("noise"))
            .unwrap_or_else(|| "none".into()),
    )?;
    let kappa = args.kappa.or(file_cfg.get_f64("kappa")?).unwrap_or(1.5);
    let u_mode = match args
        .u_mode
        .or(file_cfg.get_string("u_mode"))
        .unwrap_or_else(|| "full-rank".into())
        .as_str()
    {
        "full-rank" => UMode::FullRank,
        "orthonormal" => UMode::Orthonormal,
        other => {
            return Err(CoreError::Parse(format!("unknown u_mode {other:?}")));
        }
    };

    let mut stream = SeedStream::new(seed).substream_named("gen");
    let (weights, achieved) = generate_weights(m, k, d, kappa, u_mode, &mut stream)?;
    let inst = generate_instance(&weights, &activation, n, &noise, &stream.substream(1), None)?;
    std::fs::create_dir_all(&out)?;
    relurec::model::io::write_instance(&out, &inst, seed)?;
    let effective = format!(
        "command gen\nseed {seed}\nthreads {}\nm {m}\nk {k}\nd {d}\nn {n}\nactivation {}\nnoise {}\nkappa_target {kappa}\nkappa_achieved {achieved:.6}\n",
        cli.threads,
        activation.name(),
        noise.describe(),
    );
    std::fs::write(out.join("effective_config.txt"), effective)?;
    println!("wrote instance to {}", out.display());
    Ok(ExitCode::SUCCESS)
}

struct LoadedInstance {
    manifest: InstanceManifest,
    x: Matrix,
    a: Matrix,
    u: Matrix,
    v: Matrix,
    activation: Activation,
}

fn load_instance(dir: &Path) -> Result<LoadedInstance, CoreError> {
    let manifest = InstanceManifest::read_from(&dir.join("manifest.txt"))?;
    let x = read_matrix(&dir.join(&manifest.x_file))?;
    let a = read_matrix(&dir.join(&manifest.a_file))?;
    let u = read_matrix(&dir.join(&manifest.u_file))?;
    let v = read_matrix(&dir.join(&manifest.v_file))?;
    let activation = Activation::parse(&manifest.activation)?;
    Ok(LoadedInstance {
        manifest,
        x,
        a,
        u,
        v,
        activation,
    })
}

fn cmd_recover(
    cli: &Globals,
    file_cfg: &config::FileConfig,
    args: RecoverArgs,
) -> Result<ExitCode, CoreError> {
    let algo = need(args.algo.or(file_cfg.get_string("algo")), "--algo")?;
    let dir = need(args.dir.or(file_cfg.get_path("dir")), "--dir")?;
    let out = need(args.out.or(file_cfg.get_path("out")), "--out")?;
    let seed = need(cli.seed.or(file_cfg.get_u64("seed")?), "--seed")?;
    let inst = load_instance(&dir)?;
    let k = inst.manifest.k;
    let mut cfg = RecoveryConfig {
        kappa_hint: Some(inst.manifest.kappa_v),
        ..Default::default()
    };
    if let Some(t) = cli.tol {
        cfg.zero_tol = Some(t);
    }
    let mut stream = SeedStream::new(seed).substream_named("recover");

    let weights: NetworkWeights = match algo.as_str() {
        "worstcase" => relurec::worstcase::exact_neural_net(&inst.a, &inst.x, k)?,
        "exact" => relurec::recover::recover_exact(
            &inst.a,
            &inst.x,
            k,
            &inst.activation,
            &cfg,
            &mut stream,
        )?,
        "orthonormal-ica" => relurec::recover::recover_orthonormal(
            &inst.a,
            &inst.x,
            k,
            &inst.activation,
            &cfg,
            &mut stream,
        )?,
        "noisy" => relurec::recover::recover_noisy(
            &inst.a,
            &inst.x,
            k,
            &inst.activation,
            &cfg,
            &mut stream,
        )?,
        "fpt-u" => relurec::recover::fpt_exact_arbitrary_u(
            &inst.a,
            &inst.x,
            k,
            &inst.activation,
            1e-8,
            &mut stream,
        )?,
        "fpt-noise" => {
            // oracle-guess mode: the sketched inverse comes from the
            // manifest's ground-truth U (the full grid is hopeless beyond
            // k = 1; the guess machinery is exercised by the bench suite)
            let sketch = relurec::robust::SketchConfig::for_k(k);
            let mut probe = stream.substream(1);
            let (s_mat, _) = relurec::robust::sketch_output(&inst.a, &sketch, &mut probe);
            let oracle = relurec::numerics::pinv(&s_mat.matmul(&inst.u), 1e-12);
            let grid = relurec::robust::GuessGrid::oracle(oracle);
            relurec::robust::fpt_noisy_recover(&inst.a, &inst.x, k, &grid, &sketch, &mut stream)?
        }
        "sparse" => relurec::robust::recover_sparse(
            &inst.a,
            &inst.x,
            k,
            &inst.activation,
            &cfg,
            &mut stream,
        )?,
        other => {
            return Err(CoreError::Parse(format!("unknown algorithm {other:?}")));
        }
    };

    std::fs::create_dir_all(&out)?;
    write_matrix(&out.join("U_hat.mat"), &weights.u)?;
    write_matrix(&out.join("V_hat.mat"), &weights.v)?;
    let truth = NetworkWeights::new(inst.u.clone(), inst.v.clone())?;
    let matched = match_weights(&weights, &truth, &inst.activation, false)?;
    let (fabs, frel) = functional_error(&inst.a, &weights, &inst.x, &inst.activation);
    let report = format!(
        "algo {algo}\nseed {seed}\nfunctional_abs {fabs:.17e}\nfunctional_rel {frel:.17e}\nu_error {:.17e}\nv_error {:.17e}\npermutation {:?}\n",
        matched.u_error, matched.v_error, matched.permutation
    );
    std::fs::write(out.join("report.txt"), &report)?;
    print!("{report}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(file_cfg: &config::FileConfig, args: EvalArgs) -> Result<ExitCode, CoreError> {
    let dir = need(args.dir.or(file_cfg.get_path("dir")), "--dir")?;
    let weights_dir = need(args.weights.or(file_cfg.get_path("weights")), "--weights")?;
    let inst = load_instance(&dir)?;
    let u_hat = read_matrix(&weights_dir.join("U_hat.mat"))?;
    let v_hat = read_matrix(&weights_dir.join("V_hat.mat"))?;
    let got = NetworkWeights::new(u_hat, v_hat)?;
    let truth = NetworkWeights::new(inst.u.clone(), inst.v.clone())?;
    let matched = match_weights(&got, &truth, &inst.activation, false)?;
    let (fabs, frel) = functional_error(&inst.a, &got, &inst.x, &inst.activation);
    let mut report = String::new();
    report.push_str(&format!("u_error {:.17e}\n", matched.u_error));
    report.push_str(&format!("v_error {:.17e}\n", matched.v_error));
    report.push_str(&format!("functional_abs {fabs:.17e}\n"));
    report.push_str(&format!("functional_rel {frel:.17e}\n"));
    for (i, e) in matched.row_errors.iter().enumerate() {
        report.push_str(&format!("row_error_{i} {e:.17e}\n"));
    }
    if let Some(out) = args.out {
        std::fs::write(out, &report)?;
    }
    print!("{report}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(
    cli: &Globals,
    file_cfg: &config::FileConfig,
    args: BenchArgs,
) -> Result<ExitCode, CoreError> {
    let seed = cli.seed.or(file_cfg.get_u64("seed")?).unwrap_or(0xACCE57);
    let names: Vec<String> = if args.suite == "all" {
        relurec::bench::CRITERIA
            .iter()
            .map(|s| s.to_string())
            .collect()
    } else {
        args.suite
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect()
    };
    let mut table = String::new();
    table.push_str("criterion  result  seconds  detail\n");
    let mut all_pass = true;
    for name in &names {
        let Some(result) = relurec::bench::run_criterion(name, seed) else {
            return Err(CoreError::Parse(format!("unknown criterion {name:?}")));
        };
        all_pass &= result.pass;
        table.push_str(&result.line());
        table.push('\n');
        println!("{}", result.line());
    }
    if let Some(out) = args.out {
        std::fs::write(out, &table)?;
    }
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

fn cmd_hardness(args: HardnessArgs) -> Result<ExitCode, CoreError> {
    use relurec::hardness::*;
    match args.action {
        HardnessAction::Reduce { cnf, out } => {
            let text = std::fs::read_to_string(&cnf)?;
            let psi = Cnf6::parse_dimacs(&text)?;
            let rev = make_reversible(&psi);
            let inst = reduce_sat_to_relusep(&rev);
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("formula.cnf"), rev.to_dimacs())?;
            let p_mat = Matrix::from_rows(&inst.p_set);
            let q_mat = Matrix::from_rows(&inst.q_set);
            write_matrix(&out.join("P.mat"), &p_mat)?;
            write_matrix(&out.join("Q.mat"), &q_mat)?;
            let (alpha, x, a) = reduce_relusep_to_network(&inst);
            write_matrix(&out.join("alpha.mat"), &alpha)?;
            write_matrix(&out.join("X.mat"), &x)?;
            write_matrix(&out.join("A.mat"), &a)?;
            println!(
                "reduced: dim {}, |P| {}, |Q| {}",
                inst.dim,
                inst.p_set.len(),
                inst.q_set.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        HardnessAction::Verify {
            instance,
            witness,
            tol,
        } => {
            let inst = load_relusep(&instance)?;
            let w = read_matrix(&witness)?;
            if w.rows() != 2 || w.cols() != inst.dim {
                return Err(CoreError::ShapeMismatch(format!(
                    "witness is {}x{}, want 2x{}",
                    w.rows(),
                    w.cols(),
                    inst.dim
                )));
            }
            let (ok, violations) = verify_witness(&inst, w.row(0), w.row(1), tol);
            if ok {
                println!("witness valid");
                Ok(ExitCode::SUCCESS)
            } else {
                for v in violations {
                    println!("violation: {v}");
                }
                Ok(ExitCode::from(3))
            }
        }
        HardnessAction::Brute { instance, budget } => {
            let inst = load_relusep(&instance)?;
            match brute_force_relusep(&inst, budget)? {
                Some((x, y)) => {
                    let w = Matrix::from_rows(&[x, y]);
                    write_matrix(&instance.join("witness.mat"), &w)?;
                    println!("witness found; wrote witness.mat");
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    println!("no witness exists");
                    Ok(ExitCode::from(3))
                }
            }
        }
    }
}

fn load_relusep(dir: &Path) -> Result<relurec::hardness::ReluSepInstance, CoreError> {
    let p_mat = read_matrix(&dir.join("P.mat"))?;
    let q_mat = read_matrix(&dir.join("Q.mat"))?;
    let dim = q_mat.cols();
    let p_set = (0..p_mat.rows()).map(|i| p_mat.row(i).to_vec()).collect();
    let q_set = (0..q_mat.rows()).map(|i| q_mat.row(i).to_vec()).collect();
    Ok(relurec::hardness::ReluSepInstance { dim, p_set, q_set })
}

fn cmd_selftest() -> Result<ExitCode, CoreError> {
    // tiny end-to-end: generate, recover with the worst-case solver, match
    let mut stream = SeedStream::new(7).substream_named("selftest");
    let (w, _) = generate_weights(3, 2, 3, 1.2, UMode::FullRank, &mut stream)?;
    let inst = generate_instance(
        &w,
        &Activation::Relu,
        14,
        &NoiseModel::None,
        &stream.substream(1),
        None,
    )?;
    let got = relurec::worstcase::exact_neural_net(&inst.a, &inst.x, 2)?;
    let matched = match_weights(&got, &w, &Activation::Relu, false)?;
    if matched.v_error > 1e-6 {
        return Err(CoreError::NumericalFailure(format!(
            "selftest recovery error {}",
            matched.v_error
        )));
    }
    // hardness round trip
    let psi = relurec::hardness::Cnf6::new(1, vec![[1, 1, 1, -1, -1, -1]])?;
    let rev = relurec::hardness::make_reversible(&psi);
    let assignment = rev.brute_force_sat().ok_or(CoreError::NoConvergence)?;
    let sep = relurec::hardness::reduce_sat_to_relusep(&rev);
    let (x, y) = relurec::hardness::assignment_to_witness(&assignment);
    let (ok, _) = relurec::hardness::verify_witness(&sep, &x, &y, 1e-9);
    if !ok {
        return Err(CoreError::NumericalFailure(
            "selftest witness invalid".into(),
        ));
    }
    println!("selftest ok");
    Ok(ExitCode::SUCCESS)
}
