//! Command-line surface over the library: form and geodesic listings,
//! pointwise evaluation, plot grids, the constant term at i∞, and the
//! verification suites. JSON output carries `"schema": "qmodular/1"`; grids
//! are CSV. Exit codes: 0 success, 1 failed verification, 2 usage or domain
//! error, 3 numerical non-convergence.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::qforms::{component_signature, distance_to_exceptional, signature_hash, Params, QForm};
use crate::series::{self, SeriesValue, TruncationPolicy};
use crate::{maass, theta, verify};

const SCHEMA: &str = "qmodular/1";
const EXIT_OK: i32 = 0;
const EXIT_VERIFICATION: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_NONCONVERGENT: i32 = 3;

/// Function names accepted by `eval --fn` and `grid --fn` (case-sensitive:
/// lambda is the two-variable completion term, Lambda the local cusp form;
/// psi the holomorphic series, Psi its locally harmonic completion).
const FUNCTIONS: [&str; 12] = [
    "f", "psi", "phi", "rho", "lambda", "omega", "bigomega", "Lambda", "Psi", "eichler-hol",
    "eichler-nonhol", "theta",
];

#[derive(Parser, Debug)]
#[command(
    name = "qmodular",
    about = "Lattice sums, local cusp forms, and locally harmonic completions \
             over binary quadratic forms of fixed discriminant",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the forms of the discriminant with |a| ≤ bound, b reduced mod 2a
    Forms(FormsCmd),
    /// List the geodesics (center, radius, apex) carried by those forms
    Geodesics(FormsCmd),
    /// Evaluate one function at a point
    Eval(EvalCmd),
    /// Sample one function over a rectangle in the upper half-plane (CSV)
    Grid(GridCmd),
    /// Constant term at i∞ with a rigorous tail bound
    Cinfty(CinftyCmd),
    /// Run verification suites
    Verify(VerifyCmd),
}

#[derive(Args, Debug)]
struct Common {
    /// Discriminant D (positive non-square, ≡ 0 or 1 mod 4)
    #[arg(long, default_value_t = 5)]
    disc: i64,
    /// Weight parameter k (even, ≥ 2)
    #[arg(long, default_value_t = 2)]
    k: u32,
}

impl Common {
    fn params(&self) -> Result<Params> {
        Params::new(self.disc, self.k)
    }
}

#[derive(Args, Debug)]
struct FormsCmd {
    #[command(flatten)]
    common: Common,
    /// Leading-coefficient bound |a| ≤ bound
    #[arg(long = "bound-a", default_value_t = 64)]
    bound_a: u32,
    /// Write output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalCmd {
    #[command(flatten)]
    common: Common,
    /// Function to evaluate
    #[arg(long = "fn", value_parser = FUNCTIONS)]
    function: String,
    /// Base point τ in the upper half-plane
    #[arg(long, num_args = 2, value_names = ["RE", "IM"], allow_negative_numbers = true, required = true)]
    tau: Vec<f64>,
    /// Second variable w in the lower half-plane (rho, lambda, bigomega)
    #[arg(long, num_args = 2, value_names = ["RE", "IM"], allow_negative_numbers = true)]
    w: Option<Vec<f64>>,
    /// Second variable z in the upper half-plane (omega, theta)
    #[arg(long, num_args = 2, value_names = ["RE", "IM"], allow_negative_numbers = true)]
    z: Option<Vec<f64>>,
    /// Target absolute accuracy
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Override the leading-coefficient truncation bound
    #[arg(long = "bound-a")]
    bound_a: Option<u32>,
    /// Write output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GridCmd {
    #[command(flatten)]
    common: Common,
    /// Function to sample
    #[arg(long = "fn", value_parser = FUNCTIONS)]
    function: String,
    #[arg(long = "u-min", default_value_t = -0.5, allow_negative_numbers = true)]
    u_min: f64,
    #[arg(long = "u-max", default_value_t = 0.5, allow_negative_numbers = true)]
    u_max: f64,
    #[arg(long = "v-min", default_value_t = 0.35)]
    v_min: f64,
    #[arg(long = "v-max", default_value_t = 1.5)]
    v_max: f64,
    /// Samples along u
    #[arg(long, default_value_t = 50)]
    nx: u32,
    /// Samples along v
    #[arg(long, default_value_t = 50)]
    ny: u32,
    /// Second variable w (lower half-plane), for the functions that take it
    #[arg(long, num_args = 2, value_names = ["RE", "IM"], allow_negative_numbers = true)]
    w: Option<Vec<f64>>,
    /// Second variable z (upper half-plane), for the functions that take it
    #[arg(long, num_args = 2, value_names = ["RE", "IM"], allow_negative_numbers = true)]
    z: Option<Vec<f64>>,
    /// Target absolute accuracy per sample
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Override the leading-coefficient truncation bound
    #[arg(long = "bound-a")]
    bound_a: Option<u32>,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CinftyCmd {
    #[command(flatten)]
    common: Common,
    /// Tail bound target for the congruence-counting sum
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Write output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyCmd {
    #[command(flatten)]
    common: Common,
    /// Suite name, or "all"
    #[arg(long, default_value = "all")]
    suite: String,
    /// Sampling seed; output is byte-deterministic given (disc, k, seed)
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the report JSON here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Entry point for the binary: parse, dispatch, map errors to exit codes.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version render on stdout and exit cleanly
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e @ Error::NonConvergent { .. }) => {
            eprintln!("qmodular: {e}");
            EXIT_NONCONVERGENT
        }
        Err(e) => {
            eprintln!("qmodular: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Forms(cmd) => forms_cmd(cmd),
        Command::Geodesics(cmd) => geodesics_cmd(cmd),
        Command::Eval(cmd) => eval_cmd(cmd),
        Command::Grid(cmd) => grid_cmd(cmd),
        Command::Cinfty(cmd) => cinfty_cmd(cmd),
        Command::Verify(cmd) => verify_cmd(cmd),
    }
}

/// Write `text` (newline-terminated) to the path or stdout.
fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    let mut owned = text.to_string();
    if !owned.ends_with('\n') {
        owned.push('\n');
    }
    match out {
        Some(path) => fs::write(path, owned)?,
        None => print!("{owned}"),
    }
    Ok(())
}

fn emit_json(out: &Option<PathBuf>, payload: &Value) -> Result<i32> {
    let text = serde_json::to_string_pretty(payload)
        .map_err(|e| Error::Io(format!("serialization failed: {e}")))?;
    emit(out, &text)?;
    Ok(EXIT_OK)
}

fn pair(v: &[f64]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

/// One representative per T-orbit: for each |a| ≤ bound and each b ∈ (−|a|, |a|]
/// with b² ≡ D (mod 4a), the form [a, b, (b²−D)/4a]. Ordered by (|a|, a, b).
fn reduced_forms(params: &Params, bound_a: u32) -> Vec<QForm> {
    let d = params.d;
    let mut out = Vec::new();
    for abs_a in 1..=i64::from(bound_a) {
        for a in [-abs_a, abs_a] {
            for b in (1 - abs_a)..=abs_a {
                if (b * b - d).rem_euclid(4 * abs_a) == 0 {
                    out.push(QForm::new(a, b, (b * b - d) / (4 * a)));
                }
            }
        }
    }
    out
}

fn forms_cmd(cmd: FormsCmd) -> Result<i32> {
    let params = cmd.common.params()?;
    let forms = reduced_forms(&params, cmd.bound_a);
    let rows: Vec<Value> = forms.iter().map(|q| json!([q.a, q.b, q.c])).collect();
    emit_json(
        &cmd.out,
        &json!({
            "schema": SCHEMA,
            "command": "forms",
            "disc": params.d,
            "k": params.k,
            "bound_a": cmd.bound_a,
            "count": rows.len(),
            "forms": rows,
        }),
    )
}

fn geodesics_cmd(cmd: FormsCmd) -> Result<i32> {
    let params = cmd.common.params()?;
    let forms = reduced_forms(&params, cmd.bound_a);
    let rows: Vec<Value> = forms
        .iter()
        .map(|q| {
            let g = q.geodesic();
            json!({
                "form": [q.a, q.b, q.c],
                "center": g.center,
                "radius": g.radius,
                "apex": [g.center, g.radius],
                "ccw": g.ccw,
            })
        })
        .collect();
    emit_json(
        &cmd.out,
        &json!({
            "schema": SCHEMA,
            "command": "geodesics",
            "disc": params.d,
            "k": params.k,
            "bound_a": cmd.bound_a,
            "count": rows.len(),
            "geodesics": rows,
        }),
    )
}

/// A single evaluation, normalized across the function families.
struct EvalOut {
    value: Complex64,
    est_error: f64,
    terms_used: usize,
    extra: Vec<(&'static str, Value)>,
}

impl EvalOut {
    fn of(sv: SeriesValue) -> Self {
        EvalOut { value: sv.value, est_error: sv.est_error, terms_used: sv.terms_used, extra: vec![] }
    }
}

/// Evaluate with an explicit bound if the user gave one, otherwise escalate
/// the leading-coefficient bound until the error estimate clears the 10·tol
/// acceptance gate (the b-window tail alone is modeled at tol, so tol itself
/// is not a reachable estimate).
fn evaluate(
    params: &Params,
    name: &str,
    tau: Complex64,
    w: Option<Complex64>,
    z: Option<Complex64>,
    tol: f64,
    bound_a: Option<u32>,
) -> Result<EvalOut> {
    let single;
    let ladder: &[u32] = match bound_a {
        Some(b) => {
            single = [b];
            &single
        }
        None => &[64, 128, 256, 512, 1024, 2048],
    };
    let mut last = None;
    for &bound in ladder {
        let out = evaluate_once(params, name, tau, w, z, tol, bound)?;
        let done = out.est_error <= 10.0 * tol;
        last = Some(out);
        if done {
            break;
        }
    }
    Ok(last.expect("ladder is non-empty"))
}

fn evaluate_once(
    params: &Params,
    name: &str,
    tau: Complex64,
    w: Option<Complex64>,
    z: Option<Complex64>,
    tol: f64,
    bound_a: u32,
) -> Result<EvalOut> {
    let policy = TruncationPolicy::with_tol(tol).with_bound(bound_a);
    let need_w =
        || w.ok_or_else(|| Error::Domain(format!("'{name}' requires --w RE IM (lower half-plane)")));
    let need_z =
        || z.ok_or_else(|| Error::Domain(format!("'{name}' requires --z RE IM (upper half-plane)")));
    Ok(match name {
        "f" => EvalOut::of(series::eval_f(params, params.k + 1, tau, &policy)?),
        "psi" => EvalOut::of(series::eval_psi(params, tau, &policy)?),
        "phi" => EvalOut::of(series::eval_phi(params, tau, &policy)?),
        "rho" => EvalOut::of(series::eval_rho(params, tau, need_w()?, &policy)?),
        "lambda" => EvalOut::of(series::eval_lambda_pair(params, tau, need_w()?, &policy)?),
        "omega" => EvalOut::of(series::eval_omega(params, tau, need_z()?, &policy)?),
        "bigomega" => EvalOut::of(series::eval_bigomega(params, tau, need_w()?, &policy)?),
        "Lambda" => EvalOut::of(series::eval_lambda_local(params, tau, &policy)?),
        "Psi" => EvalOut::of(maass::eval_psi_maass(params, tau, &policy)?),
        "eichler-hol" => EvalOut::of(maass::eichler_hol(params, tau, &policy)?),
        "eichler-nonhol" => EvalOut::of(maass::eichler_nonhol(params, tau, &policy)?),
        "theta" => {
            let tv = theta::eval_theta_kernel(params, tau, need_z()?, tol)?;
            EvalOut {
                value: tv.value,
                est_error: tv.est_error,
                terms_used: tv.forms_used,
                extra: vec![("d_range", json!([tv.d_range.0, tv.d_range.1]))],
            }
        }
        other => return Err(Error::UnknownFunction(other.to_string())),
    })
}

fn eval_cmd(cmd: EvalCmd) -> Result<i32> {
    let params = cmd.common.params()?;
    let tau = pair(&cmd.tau);
    let w = cmd.w.as_deref().map(pair);
    let z = cmd.z.as_deref().map(pair);
    let out = evaluate(&params, &cmd.function, tau, w, z, cmd.tol, cmd.bound_a)?;
    let mut payload = json!({
        "schema": SCHEMA,
        "command": "eval",
        "fn": cmd.function,
        "disc": params.d,
        "k": params.k,
        "tau": [tau.re, tau.im],
        "tol": cmd.tol,
        "value": [out.value.re, out.value.im],
        "est_error": out.est_error,
        "terms_used": out.terms_used,
    });
    let map = payload.as_object_mut().expect("object payload");
    if let Some(w) = w {
        map.insert("w".into(), json!([w.re, w.im]));
    }
    if let Some(z) = z {
        map.insert("z".into(), json!([z.re, z.im]));
    }
    for (key, value) in out.extra {
        map.insert(key.into(), value);
    }
    emit_json(&cmd.out, &payload)?;
    if out.est_error > 10.0 * cmd.tol {
        eprintln!(
            "qmodular: estimated error {:.3e} exceeds 10x the requested tolerance {:.1e}",
            out.est_error, cmd.tol
        );
        return Ok(EXIT_NONCONVERGENT);
    }
    Ok(EXIT_OK)
}

/// One grid cell. Within 2e−3 of the exceptional set the value is replaced
/// by the two-sided vertical average (the functions with wall jumps stay
/// finite and plottable) and flagged; the component hash is then taken from
/// the upper side.
fn grid_cell(
    params: &Params,
    name: &str,
    p: Complex64,
    w: Option<Complex64>,
    z: Option<Complex64>,
    tol: f64,
    bound_a: Option<u32>,
) -> Result<String> {
    let near = distance_to_exceptional(params, p, 0.05) < 2e-3;
    let (value, est, hash_point) = if near {
        let mut last_err = None;
        let mut picked = None;
        for delta in [2e-3_f64.min(0.5 * p.im), 2.6e-3_f64.min(0.7 * p.im)] {
            let off = Complex64::new(0.0, delta);
            match (|| -> Result<_> {
                let up = evaluate(params, name, p + off, w, z, tol, bound_a)?;
                let dn = evaluate(params, name, p - off, w, z, tol, bound_a)?;
                Ok((
                    0.5 * (up.value + dn.value),
                    0.5 * (up.est_error + dn.est_error) + 0.5 * (up.value - dn.value).norm(),
                    p + off,
                ))
            })() {
                Ok(cell) => {
                    picked = Some(cell);
                    break;
                }
                Err(e) => last_err = Some(e),
            }
        }
        match picked {
            Some(cell) => cell,
            None => return Err(last_err.expect("two attempts were made")),
        }
    } else {
        let out = evaluate(params, name, p, w, z, tol, bound_a)?;
        (out.value, out.est_error, p)
    };
    let hash = signature_hash(&component_signature(params, hash_point)?);
    Ok(format!(
        "{},{},{},{},{},{},{}",
        p.re,
        p.im,
        value.re,
        value.im,
        hash,
        est,
        u8::from(near)
    ))
}

fn grid_cmd(cmd: GridCmd) -> Result<i32> {
    let params = cmd.common.params()?;
    if cmd.nx < 2 || cmd.ny < 2 {
        return Err(Error::InvalidParams("grid needs nx ≥ 2 and ny ≥ 2".into()));
    }
    if !(cmd.u_min < cmd.u_max) || !(cmd.v_min < cmd.v_max) || !(cmd.v_min > 0.0) {
        return Err(Error::InvalidParams(
            "grid window must satisfy u_min < u_max and 0 < v_min < v_max".into(),
        ));
    }
    let w = cmd.w.as_deref().map(pair);
    let z = cmd.z.as_deref().map(pair);
    let du = (cmd.u_max - cmd.u_min) / f64::from(cmd.nx - 1);
    let dv = (cmd.v_max - cmd.v_min) / f64::from(cmd.ny - 1);
    // rows in parallel, assembled in row-major (v-outer) order
    let rows = (0..cmd.ny)
        .into_par_iter()
        .map(|j| {
            let v = cmd.v_min + f64::from(j) * dv;
            let mut buf = String::new();
            for i in 0..cmd.nx {
                let u = cmd.u_min + f64::from(i) * du;
                let cell =
                    grid_cell(&params, &cmd.function, Complex64::new(u, v), w, z, cmd.tol, cmd.bound_a)?;
                buf.push_str(&cell);
                buf.push('\n');
            }
            Ok(buf)
        })
        .collect::<Result<Vec<String>>>()?;
    let mut csv = String::from("u,v,re,im,component_hash,est_error,near_disc\n");
    for row in rows {
        csv.push_str(&row);
    }
    emit(&cmd.out, &csv)?;
    Ok(EXIT_OK)
}

fn cinfty_cmd(cmd: CinftyCmd) -> Result<i32> {
    let params = cmd.common.params()?;
    let c = maass::c_infinity(&params, cmd.tol)?;
    emit_json(
        &cmd.out,
        &json!({
            "schema": SCHEMA,
            "command": "cinfty",
            "disc": params.d,
            "k": params.k,
            "tol": cmd.tol,
            "c_infinity": c,
        }),
    )
}

fn verify_cmd(cmd: VerifyCmd) -> Result<i32> {
    let params = cmd.common.params()?;
    let reports = if cmd.suite == "all" {
        verify::run_all(&params, cmd.seed)?
    } else {
        verify::suite_run(&params, &cmd.suite, cmd.seed)?
    };
    let all_passed = reports.iter().all(|r| r.passed);
    let payload = json!({
        "schema": SCHEMA,
        "command": "verify",
        "disc": params.d,
        "k": params.k,
        "seed": cmd.seed,
        "suite": cmd.suite,
        "all_passed": all_passed,
        "reports": reports,
    });
    emit_json(&cmd.out, &payload)?;
    Ok(if all_passed { EXIT_OK } else { EXIT_VERIFICATION })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_forms_smallest_window() {
        let p = Params::new(5, 2).unwrap();
        let forms = reduced_forms(&p, 1);
        let triples: Vec<(i64, i64, i64)> = forms.iter().map(|q| (q.a, q.b, q.c)).collect();
        assert_eq!(triples, vec![(-1, 1, 1), (1, 1, -1)]);
        for q in &forms {
            assert_eq!(q.disc(), 5);
        }
    }

    #[test]
    fn reduced_forms_are_t_inequivalent_and_complete() {
        let p = Params::new(12, 2).unwrap();
        let forms = reduced_forms(&p, 6);
        for q in &forms {
            assert_eq!(q.disc(), 12);
            assert!(q.b > -q.a.abs() && q.b <= q.a.abs());
        }
        // no duplicates
        let mut seen = std::collections::BTreeSet::new();
        for q in &forms {
            assert!(seen.insert((q.a, q.b, q.c)));
        }
        // every enumerated window form T-reduces into the list
        let w = crate::qforms::EnumWindow::new(0.0, 3.0, 2.0);
        for q in crate::qforms::enumerate_forms(&p, 6, &w) {
            let aa = q.a.abs();
            let mut b = q.b.rem_euclid(2 * aa);
            if b > aa {
                b -= 2 * aa;
            }
            let c = (b * b - 12) / (4 * q.a);
            assert!(
                forms.iter().any(|r| (r.a, r.b, r.c) == (q.a, b, c)),
                "missing reduction of [{}, {}, {}]",
                q.a,
                q.b,
                q.c
            );
        }
    }

    #[test]
    fn evaluate_rejects_unknown_and_missing_arguments() {
        let p = Params::new(5, 2).unwrap();
        let tau = Complex64::new(0.1, 1.7);
        assert!(matches!(
            evaluate(&p, "nope", tau, None, None, 1e-8, None),
            Err(Error::UnknownFunction(_))
        ));
        assert!(matches!(
            evaluate(&p, "rho", tau, None, None, 1e-8, None),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            evaluate(&p, "theta", tau, None, None, 1e-8, None),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn evaluate_dispatches_to_the_series() {
        let p = Params::new(5, 2).unwrap();
        let tau = Complex64::new(0.13, 1.62);
        let policy = TruncationPolicy::with_tol(1e-8);
        let direct = series::eval_psi(&p, tau, &policy).unwrap();
        let via = evaluate(&p, "psi", tau, None, None, 1e-8, None).unwrap();
        assert_eq!(via.value, direct.value);
        // the odd-exponent companion series vanishes identically
        let f = evaluate(&p, "f", tau, None, None, 1e-8, None).unwrap();
        assert!(f.value.norm() < 1e-14);
    }
}
