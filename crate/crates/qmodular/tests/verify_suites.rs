//! End-to-end runs of the verification suites at default parameters, with
//! the expected pass/fail structure pinned: every check passes except the
//! claimed Γ₀(4) law in the elliptic variable, which fails with a fitted
//! constant far from unimodular — a genuine property of the kernel as
//! defined, recorded here rather than papered over.

use qmodular::verify::{self, VerificationReport};
use qmodular::Params;

fn d5() -> Params {
    Params::new(5, 2).unwrap()
}

fn print_reports(reports: &[VerificationReport]) {
    for r in reports {
        println!(
            "  [{}] {:38} residual {:.3e}  tol {:.1e}  ({} pts)",
            if r.passed { "pass" } else { "FAIL" },
            r.check_id,
            r.residual,
            r.tolerance,
            r.points
        );
    }
}

#[test]
fn transforms_suite_all_pass() {
    let reports = verify::suite_run(&d5(), "transforms", 1).unwrap();
    print_reports(&reports);
    assert!(reports.len() >= 6);
    for r in &reports {
        assert!(r.passed, "{} residual {:.3e} > tol {:.1e}", r.check_id, r.residual, r.tolerance);
    }
}

#[test]
fn omega_suite_all_pass() {
    let reports = verify::suite_run(&d5(), "omega", 1).unwrap();
    print_reports(&reports);
    assert!(reports.len() == 5);
    for r in &reports {
        assert!(r.passed, "{} residual {:.3e} > tol {:.1e}", r.check_id, r.residual, r.tolerance);
    }
}

#[test]
fn split_suite_all_pass() {
    let reports = verify::suite_run(&d5(), "split", 1).unwrap();
    print_reports(&reports);
    assert!(reports.len() == 2);
    for r in &reports {
        assert!(r.passed, "{} residual {:.3e} > tol {:.1e}", r.check_id, r.residual, r.tolerance);
    }
}

#[test]
fn jumps_suite_all_pass() {
    let reports = verify::suite_run(&d5(), "jumps", 1).unwrap();
    print_reports(&reports);
    assert!(reports.len() == 3);
    for r in &reports {
        assert!(r.passed, "{} residual {:.3e} > tol {:.1e}", r.check_id, r.residual, r.tolerance);
    }
}

#[test]
fn diffops_suite_all_pass() {
    let reports = verify::suite_run(&d5(), "diffops", 1).unwrap();
    print_reports(&reports);
    assert!(reports.len() == 5);
    for r in &reports {
        assert!(r.passed, "{} residual {:.3e} > tol {:.1e}", r.check_id, r.residual, r.tolerance);
    }
}

#[test]
fn theta_suite_fails_only_on_z_law() {
    let reports = verify::suite_run(&d5(), "theta", 1).unwrap();
    print_reports(&reports);
    assert!(reports.len() == 5);
    for r in &reports {
        if r.check_id == "theta/z-gamma0-4-law" {
            assert!(
                !r.passed,
                "the claimed elliptic-variable law is not expected to hold; fitted constant {:?}",
                r.metadata.get("fitted_constant")
            );
        } else {
            assert!(r.passed, "{} residual {:.3e} > tol {:.1e}", r.check_id, r.residual, r.tolerance);
        }
    }
}

#[test]
fn eichler_local_suite_all_pass() {
    let reports = verify::suite_run(&d5(), "eichler-local", 1).unwrap();
    print_reports(&reports);
    assert!(reports.len() == 2);
    for r in &reports {
        assert!(r.passed, "{} residual {:.3e} > tol {:.1e}", r.check_id, r.residual, r.tolerance);
    }
}

#[test]
fn reports_are_bitwise_reproducible_across_worker_counts() {
    // same suite serialized under a 1-thread and a 4-thread pool must agree
    // byte for byte
    let p = d5();
    let run = |threads: usize| -> Vec<u8> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let reports = pool.install(|| verify::suite_run(&p, "transforms", 1).unwrap());
        serde_json::to_vec(&reports).unwrap()
    };
    let single = run(1);
    let quad = run(4);
    assert_eq!(single, quad, "suite output depends on the worker count");
}
