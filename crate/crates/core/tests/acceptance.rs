//! One PASS/FAIL line per acceptance criterion.

use std::io::Write;
use std::process::Command;

use nullstate::exponents::Kappa;
use nullstate::report::Check;
use nullstate::suites::{run_suite, Corruption, SuiteParams};

const KAPPAS: [f64; 2] = [6.0, 3.3333];

fn params(kappa: f64) -> SuiteParams {
    SuiteParams::new(Kappa::new(kappa).unwrap())
}

fn suite_at(name: &str, p: &SuiteParams) -> Vec<Check> {
    run_suite(name, p)
        .unwrap()
        .into_iter()
        .map(|mut c| {
            c.name = format!("{name} (kappa {}): {}", p.kappa.value(), c.name);
            c
        })
        .collect()
}

fn default_runs(name: &str) -> Vec<Check> {
    KAPPAS.iter().flat_map(|&k| suite_at(name, &params(k))).collect()
}

fn verdict(n: usize, title: &str, checks: &[Check]) -> bool {
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.passed).collect();
    let ok = failed.is_empty() && !checks.is_empty();
    // straight to the handle: libtest only captures the print macros
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "criterion {n} [{}] {title}: {} checks, {} failed",
        if ok { "PASS" } else { "FAIL" },
        checks.len(),
        failed.len()
    )
    .unwrap();
    for c in failed {
        writeln!(out, "    failing: {} = {:e} (tol {:e}) {}", c.name, c.value, c.tolerance, c.detail.as_deref().unwrap_or("")).unwrap();
    }
    ok
}

fn criterion_1() -> bool {
    verdict(1, "KPZ identities", &default_runs("exponents"))
}

fn criterion_2() -> bool {
    verdict(2, "Jacobi polynomials", &default_runs("jacobi"))
}

fn criterion_3() -> bool {
    let mut checks = default_runs("kernel");
    let mut p = params(6.0);
    p.alpha = Some(1.0 / 3.0);
    p.beta = Some(1.0 / 3.0);
    p.t_min = Some(1e-3);
    checks.extend(suite_at("kernel", &p));
    verdict(3, "Jacobi heat kernel", &checks)
}

fn criterion_4() -> bool {
    verdict(4, "causal Green function", &default_runs("green"))
}

fn criterion_5() -> bool {
    verdict(5, "null-state and Ward residuals", &default_runs("pde"))
}

fn criterion_6() -> bool {
    verdict(6, "interval-collapse asymptotics", &default_runs("asymptotics"))
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_nullstate")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn criterion_7() -> bool {
    let mut checks = Vec::new();
    for k in ["6", "3.3333"] {
        let (code, _) = cli(&["verify", "all", "--kappa", k]);
        checks.push(Check::flag(format!("verify all --kappa {k} exits 0"), code == 0).with_detail(format!("exit {code}")));
    }
    for (corrupt, suite) in [
        ("lambda0=1e-6", "green"),
        ("delta_plus=1e-6", "green"),
        ("norm=1e-6", "jacobi"),
    ] {
        let (code, stdout) = cli(&["verify", "all", "--kappa", "6", "--corrupt", corrupt]);
        let named = stdout.lines().any(|l| l.starts_with("FAIL") && l.contains(&format!("{suite}:")));
        checks.push(
            Check::flag(format!("--corrupt {corrupt} fails a named {suite} check"), code == 1 && named)
                .with_detail(format!("exit {code}")),
        );
    }
    let mut c = Corruption::default();
    Corruption::parse("lambda0=1e-6", &mut c).unwrap();
    let mut p = params(6.0);
    p.corrupt = c;
    let failing: Vec<String> = suite_at("green", &p).into_iter().filter(|c| !c.passed).map(|c| c.name).collect();
    checks.push(Check::flag("corrupted lambda0 names its failing check", !failing.is_empty()).with_detail(failing.join("; ")));
    verdict(7, "end to end", &checks)
}

#[test]
fn acceptance() {
    let results = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
