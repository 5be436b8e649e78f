//! Python bindings: instance generation, the recovery algorithms, matching
//! metrics, and the hardness reduction, with matrices passed as nested
//! lists of floats.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use relurec::error::Error as CoreError;
use relurec::model::{
    generate_instance, generate_weights, Activation, NetworkWeights, NoiseModel, UMode,
};
use relurec::numerics::Matrix;
use relurec::recover::RecoveryConfig;
use relurec::rng::SeedStream;

fn to_matrix(rows: Vec<Vec<f64>>, what: &str) -> PyResult<Matrix> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(PyValueError::new_err(format!("{what} must be nonempty")));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err(format!("{what} has ragged rows")));
    }
    Ok(Matrix::from_rows(&rows))
}

fn from_matrix(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn core_err(e: CoreError) -> PyErr {
    match e {
        CoreError::Parse(_) | CoreError::InvalidShape(_) | CoreError::ShapeMismatch(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse_activation(name: &str) -> PyResult<Activation> {
    Activation::parse(name).map_err(core_err)
}

/// Generate an instance; returns a dict with x, a, e, u, v (lists of rows)
/// and the achieved condition number of V.
#[pyfunction]
#[pyo3(signature = (m, k, d, n, seed, activation="relu", noise="none", kappa=1.5, orthonormal_u=false))]
#[allow(clippy::too_many_arguments)]
fn generate(
    py: Python<'_>,
    m: usize,
    k: usize,
    d: usize,
    n: usize,
    seed: u64,
    activation: &str,
    noise: &str,
    kappa: f64,
    orthonormal_u: bool,
) -> PyResult<PyObject> {
    let f = parse_activation(activation)?;
    let noise = NoiseModel::parse(noise).map_err(core_err)?;
    let mode = if orthonormal_u {
        UMode::Orthonormal
    } else {
        UMode::FullRank
    };
    let mut stream = SeedStream::new(seed).substream_named("gen");
    let (weights, achieved) =
        generate_weights(m, k, d, kappa, mode, &mut stream).map_err(core_err)?;
    let inst = generate_instance(&weights, &f, n, &noise, &stream.substream(1), None)
        .map_err(core_err)?;
    let dict = pyo3::types::PyDict::new_bound(py);
    dict.set_item("x", from_matrix(&inst.x))?;
    dict.set_item("a", from_matrix(&inst.a))?;
    dict.set_item("e", from_matrix(&inst.e))?;
    dict.set_item("u", from_matrix(&inst.weights.u))?;
    dict.set_item("v", from_matrix(&inst.weights.v))?;
    dict.set_item("kappa_v", achieved)?;
    Ok(dict.into())
}

/// Recover weights; `algo` is one of worstcase | exact | orthonormal-ica |
/// noisy | fpt-u | fpt-noise | sparse. `u_truth` is required by fpt-noise
/// (oracle-guess mode). Returns (u, v).
#[pyfunction]
#[pyo3(signature = (algo, a, x, k, seed, activation="relu", u_truth=None))]
fn recover(
    algo: &str,
    a: Vec<Vec<f64>>,
    x: Vec<Vec<f64>>,
    k: usize,
    seed: u64,
    activation: &str,
    u_truth: Option<Vec<Vec<f64>>>,
) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let a = to_matrix(a, "a")?;
    let x = to_matrix(x, "x")?;
    let f = parse_activation(activation)?;
    let cfg = RecoveryConfig::default();
    let mut stream = SeedStream::new(seed).substream_named("recover");
    let weights = match algo {
        "worstcase" => relurec::worstcase::exact_neural_net(&a, &x, k),
        "exact" => relurec::recover::recover_exact(&a, &x, k, &f, &cfg, &mut stream),
        "orthonormal-ica" => {
            relurec::recover::recover_orthonormal(&a, &x, k, &f, &cfg, &mut stream)
        }
        "noisy" => relurec::recover::recover_noisy(&a, &x, k, &f, &cfg, &mut stream),
        "fpt-u" => relurec::recover::fpt_exact_arbitrary_u(&a, &x, k, &f, 1e-8, &mut stream),
        "fpt-noise" => {
            let u = to_matrix(
                u_truth.ok_or_else(|| {
                    PyValueError::new_err("fpt-noise needs u_truth for the oracle guess")
                })?,
                "u_truth",
            )?;
            let sketch = relurec::robust::SketchConfig::for_k(k);
            let mut probe = stream.substream(1);
            let (s_mat, _) = relurec::robust::sketch_output(&a, &sketch, &mut probe);
            let oracle = relurec::numerics::pinv(&s_mat.matmul(&u), 1e-12);
            let grid = relurec::robust::GuessGrid::oracle(oracle);
            relurec::robust::fpt_noisy_recover(&a, &x, k, &grid, &sketch, &mut stream)
        }
        "sparse" => relurec::robust::recover_sparse(&a, &x, k, &f, &cfg, &mut stream),
        other => return Err(PyValueError::new_err(format!("unknown algorithm {other:?}"))),
    }
    .map_err(core_err)?;
    Ok((from_matrix(&weights.u), from_matrix(&weights.v)))
}

/// Permutation/sign-invariant matching metrics between recovered and true
/// weights. Returns a dict with u_error, v_error, row_errors, permutation.
#[pyfunction]
#[pyo3(signature = (u, v, u_true, v_true, activation="relu", sign_aware=false))]
fn match_weights(
    py: Python<'_>,
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    u_true: Vec<Vec<f64>>,
    v_true: Vec<Vec<f64>>,
    activation: &str,
    sign_aware: bool,
) -> PyResult<PyObject> {
    let got = NetworkWeights {
        u: to_matrix(u, "u")?,
        v: to_matrix(v, "v")?,
    };
    let truth = NetworkWeights {
        u: to_matrix(u_true, "u_true")?,
        v: to_matrix(v_true, "v_true")?,
    };
    let f = parse_activation(activation)?;
    let m = relurec::eval::match_weights(&got, &truth, &f, sign_aware).map_err(core_err)?;
    let dict = pyo3::types::PyDict::new_bound(py);
    dict.set_item("u_error", m.u_error)?;
    dict.set_item("v_error", m.v_error)?;
    dict.set_item("row_errors", m.row_errors)?;
    dict.set_item("permutation", m.permutation)?;
    dict.set_item("functional_rel", m.functional_rel)?;
    Ok(dict.into())
}

/// `||A - U f(V X)||_F` and its ratio to `||A||_F`.
#[pyfunction]
#[pyo3(signature = (a, u, v, x, activation="relu"))]
fn functional_error(
    a: Vec<Vec<f64>>,
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    x: Vec<Vec<f64>>,
    activation: &str,
) -> PyResult<(f64, f64)> {
    let a = to_matrix(a, "a")?;
    let w = NetworkWeights {
        u: to_matrix(u, "u")?,
        v: to_matrix(v, "v")?,
    };
    let x = to_matrix(x, "x")?;
    let f = parse_activation(activation)?;
    Ok(relurec::eval::functional_error(&a, &w, &x, &f))
}

/// Fraction of sample columns on which the two probe networks differ.
#[pyfunction]
fn kappa_probe(a_param: f64, n: usize, seed: u64) -> PyResult<f64> {
    if !(0.0..=1.0).contains(&a_param) || a_param == 0.0 {
        return Err(PyValueError::new_err("a_param must be in (0, 1]"));
    }
    let mut s = SeedStream::new(seed);
    Ok(relurec::eval::kappa_probe(a_param, n, &mut s))
}

/// Reduce a 6-CNF (list of 6-literal clauses, DIMACS sign convention) to
/// the separability instance; returns a dict with p, q, and the witness
/// from a brute-force satisfying assignment when one exists.
#[pyfunction]
fn reduce_cnf(py: Python<'_>, num_vars: usize, clauses: Vec<Vec<i32>>) -> PyResult<PyObject> {
    let fixed: Vec<[i32; 6]> = clauses
        .into_iter()
        .map(|c| {
            if c.len() != 6 {
                return Err(PyValueError::new_err("each clause needs exactly 6 literals"));
            }
            Ok([c[0], c[1], c[2], c[3], c[4], c[5]])
        })
        .collect::<PyResult<_>>()?;
    let psi = relurec::hardness::Cnf6::new(num_vars, fixed).map_err(core_err)?;
    let rev = relurec::hardness::make_reversible(&psi);
    let inst = relurec::hardness::reduce_sat_to_relusep(&rev);
    let dict = pyo3::types::PyDict::new_bound(py);
    dict.set_item("dim", inst.dim)?;
    dict.set_item("p", inst.p_set.clone())?;
    dict.set_item("q", inst.q_set.clone())?;
    if let Some(assignment) = rev.brute_force_sat() {
        let (x, y) = relurec::hardness::assignment_to_witness(&assignment);
        let (ok, _) = relurec::hardness::verify_witness(&inst, &x, &y, 1e-9);
        dict.set_item("witness_x", x)?;
        dict.set_item("witness_y", y)?;
        dict.set_item("witness_valid", ok)?;
    } else {
        dict.set_item("witness_valid", false)?;
    }
    Ok(dict.into())
}

/// Run one acceptance criterion; returns (pass, detail).
#[pyfunction]
fn bench_criterion(name: &str, seed: u64) -> PyResult<(bool, String)> {
    match relurec::bench::run_criterion(name, seed) {
        Some(r) => Ok((r.pass, r.detail)),
        None => Err(PyValueError::new_err(format!("unknown criterion {name:?}"))),
    }
}

#[pymodule]
fn relurec_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(recover, m)?)?;
    m.add_function(wrap_pyfunction!(match_weights, m)?)?;
    m.add_function(wrap_pyfunction!(functional_error, m)?)?;
    m.add_function(wrap_pyfunction!(kappa_probe, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_cnf, m)?)?;
    m.add_function(wrap_pyfunction!(bench_criterion, m)?)?;
    Ok(())
}
