//! Acceptance run: one PASS/FAIL line per criterion at the pinned tolerance.
//! Exits nonzero if any criterion fails.

use std::path::PathBuf;
use std::process::Command;

use apconform::verify::{random_space, run_suite, SuiteConfig, VerificationReport, RHO_POOL};
use apconform::{fd, ApSpace, ConformalFactor, Conventions, Expr, PointGeometry, Stroke};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SPACES_PER_DIM: usize = 10;
const POINTS: usize = 20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn worst(reports: &[VerificationReport], prefix: &[&str]) -> (f64, String) {
    let mut best = (0.0, String::from("-"));
    for r in reports {
        for c in &r.checks {
            if prefix.iter().any(|p| c.name.starts_with(p)) && c.max_abs > best.0 {
                best = (c.max_abs, c.name.clone());
            }
        }
    }
    best
}

fn bounded(reports: &[VerificationReport], prefix: &[&str], tol: f64) -> Outcome {
    let (dev, name) = worst(reports, prefix);
    Outcome {
        pass: dev < tol,
        detail: format!("max deviation {dev:.3e} ({name}) vs {tol:.0e}"),
    }
}

fn space(rows: &[&[&str]]) -> ApSpace {
    let rows: Vec<Vec<&str>> = rows.iter().map(|r| r.to_vec()).collect();
    ApSpace::parse(rows.len(), &rows).unwrap()
}

fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> String {
    if depth == 0 || rng.random_range(0..4) == 0 {
        return if rng.random_bool(0.6) {
            format!("x{}", rng.random_range(1..=3))
        } else {
            format!("{:.3}", rng.random_range(-2.0..2.0))
        };
    }
    let a = random_expr(rng, depth - 1);
    let b = random_expr(rng, depth - 1);
    match rng.random_range(0..8) {
        0 => format!("({a} + {b})"),
        1 => format!("({a} - {b})"),
        2 => format!("({a} * {b})"),
        3 => format!("({a}) / (2.5 + sin({b}))"),
        4 => format!("sin({a})"),
        5 => format!("cos({a})"),
        6 => format!("exp(sin({a}))"),
        _ => format!("({a})^2"),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_rel = 0.0f64;
    for _ in 0..100 {
        let text = random_expr(&mut rng, 4);
        let e = Expr::parse(&text, 3).unwrap();
        let p: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let j = e.eval_jet(&p).unwrap();
        let est = fd::expr_derivatives(&e, &p, 1e-4).unwrap();
        for (x, y) in j
            .grad()
            .iter()
            .zip(&est.grad)
            .chain(j.hess().iter().zip(&est.hess))
        {
            worst_rel = worst_rel.max(rel(*x, *y));
        }
    }
    Outcome {
        pass: worst_rel < 1e-4,
        detail: format!(
            "100 expression/point pairs, max relative deviation {worst_rel:.3e} vs 1e-4"
        ),
    }
}

fn criterion_7() -> Outcome {
    let e1 = space(&[&["exp(x1)", "0"], &["0", "1"]]);
    let e2 = space(&[&["cos(x2)", "sin(x2)"], &["-sin(x2)", "cos(x2)"]]);
    let rho = ConformalFactor::parse("x1", 2).unwrap();
    let e2_bar = apconform::transform_frame(&e2, &rho);
    let points = [[0.0, 0.0], [0.3, -0.8], [-0.9, std::f64::consts::FRAC_PI_4]];
    let (mut engine, mut oracle) = (0.0f64, 0.0f64);
    let h = 1e-4;
    for p in &points {
        let g1 = PointGeometry::compute(&e1, p, Conventions::default()).unwrap();
        let fd_w1 = fd::weitzenbock(&e1, p, h).unwrap();
        let fd_lc1 = fd::christoffel(&e1, p, h).unwrap();
        engine = engine
            .max((g1.weitzenbock.coeff(0, 0, 0) + 1.0).abs())
            .max((g1.levi_civita.coeff(0, 0, 0) + 1.0).abs())
            .max(g1.contortion.max_abs())
            .max(g1.torsion.max_abs());
        oracle = oracle
            .max((fd_w1[0] + 1.0).abs())
            .max((fd_lc1[0] + 1.0).abs())
            .max(
                fd_w1
                    .iter()
                    .zip(&fd_lc1)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            );

        let g2 = PointGeometry::compute(&e2, p, Conventions::default()).unwrap();
        let gb = PointGeometry::compute(&e2_bar, p, Conventions::default()).unwrap();
        engine = engine
            .max((g2.weitzenbock.coeff(1, 0, 1) + 1.0).abs())
            .max((g2.weitzenbock.coeff(0, 1, 1) - 1.0).abs())
            .max((g2.c.lower.get(&[0]) - 1.0).abs())
            .max(g2.c.lower.get(&[1]).abs())
            .max(g2.t.max_abs())
            .max(g2.k.max_abs())
            .max((gb.c.lower.get(&[0]) - 2.0).abs())
            .max(gb.c.lower.get(&[1]).abs());
        let fd_w2 = fd::weitzenbock(&e2, p, h).unwrap();
        let fd_c2 = fd::contracted_torsion(&e2, p, h).unwrap();
        let fd_cb = fd::contracted_torsion(&e2_bar, p, h).unwrap();
        let fd_k2 = fd::tensor_k(&e2, p, h).unwrap();
        oracle = oracle
            .max((fd_w2[0b101] + 1.0).abs())
            .max((fd_w2[0b011] - 1.0).abs())
            .max((fd_c2[0] - 1.0).abs())
            .max(fd_c2[1].abs())
            .max((fd_cb[0] - 2.0).abs())
            .max(fd_cb[1].abs())
            .max(fd_k2.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    }
    Outcome {
        pass: engine < 1e-9 && oracle < 1e-5,
        detail: format!("engine {engine:.3e} vs 1e-9, finite differences {oracle:.3e} vs 1e-5"),
    }
}

fn criterion_6(spaces: &[ApSpace], reports: &[VerificationReport]) -> Outcome {
    let (dev, name) = worst(reports, &["ident.conn_hat_", "ident.conn_circ_"]);
    let default_ok = dev < 1e-8;
    // flipping the stroke convention must surface the mismatch diagnostic
    let cfg = SuiteConfig {
        points: 5,
        conventions: Conventions {
            stroke: Stroke::SymmetricPart,
            ..Conventions::default()
        },
        ..SuiteConfig::default()
    };
    let rho = ConformalFactor::parse("x1", 3).unwrap();
    let flipped = run_suite(&spaces[SPACES_PER_DIM], &rho, &cfg).unwrap();
    let flagged = ["ident.conn_hat_curvature", "ident.conn_circ_curvature"]
        .iter()
        .all(|n| {
            let c = flipped.check(n).unwrap();
            !c.pass
                && c.note
                    .as_deref()
                    .is_some_and(|s| s.contains("convention mismatch"))
        });
    Outcome {
        pass: default_ok && flagged,
        detail: format!(
            "default stroke max {dev:.3e} ({name}) vs 1e-8; symmetric stroke flagged: {flagged}"
        ),
    }
}

fn criterion_9() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_apconform");
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut problems = Vec::new();
    for name in ["identity.json", "e1.json", "e2.json"] {
        let path = dir.join(name);
        let args = ["check", path.to_str().unwrap(), "--format", "json"];
        let a = Command::new(bin).args(args).output().unwrap();
        let b = Command::new(bin).args(args).output().unwrap();
        if a.status.code() != Some(0) {
            problems.push(format!("{name} exit {:?}", a.status.code()));
        }
        if a.stdout != b.stdout {
            problems.push(format!("{name} rerun differs"));
        }
    }
    let tmp =
        std::env::temp_dir().join(format!("apconform-acceptance-{}.json", std::process::id()));
    std::fs::write(&tmp, r#"{"dimension": 1, "frame": [["1"]]}"#).unwrap();
    let bad = Command::new(bin)
        .args(["check", tmp.to_str().unwrap()])
        .output()
        .unwrap();
    let _ = std::fs::remove_file(&tmp);
    let err = String::from_utf8_lossy(&bad.stderr);
    if bad.status.code() != Some(2)
        || !err.contains("dimension must be ≥ 2")
        || !err.contains(".json: dimension")
    {
        problems.push(format!(
            "malformed config: exit {:?}, stderr {err:?}",
            bad.status.code()
        ));
    }
    Outcome {
        pass: problems.is_empty(),
        detail: if problems.is_empty() {
            "3 configs exit 0, reruns identical, malformed config exits 2 with location".into()
        } else {
            problems.join("; ")
        },
    }
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let spaces: Vec<ApSpace> = [2, 3, 4]
        .iter()
        .flat_map(|&n| (0..SPACES_PER_DIM).map(move |k| (n, k)))
        .map(|(n, _)| random_space(n, &mut rng))
        .collect();

    let mut reports = Vec::new();
    let mut errors = Vec::new();
    for (k, sp) in spaces.iter().enumerate() {
        for rho in RHO_POOL {
            let cfg = SuiteConfig {
                points: POINTS,
                seed: rng.random::<u64>() ^ k as u64,
                ..SuiteConfig::default()
            };
            let factor = ConformalFactor::parse(rho, sp.dim()).unwrap();
            match run_suite(sp, &factor, &cfg) {
                Ok(r) => reports.push(r),
                Err(e) => errors.push(format!("space {k}, rho {rho}: {e}")),
            }
        }
    }
    for e in &errors {
        println!("suite error: {e}");
    }
    let skipped: usize = reports.iter().map(|r| r.points_skipped).sum();
    println!(
        "sample set: {} spaces (n = 2, 3, 4), {} rho fixtures, {POINTS} points each, {} suite runs, {skipped} singular points skipped",
        spaces.len(),
        RHO_POOL.len(),
        reports.len()
    );

    let criteria: Vec<(&str, Outcome)> = vec![
        ("1 frame duality", bounded(&reports, &["duality."], 1e-10)),
        (
            "2a AP condition",
            bounded(&reports, &["ap_condition"], 1e-10),
        ),
        (
            "2b Weitzenbock flatness",
            bounded(&reports, &["flatness.weitzenbock"], 1e-9),
        ),
        ("3 transformation laws", bounded(&reports, &["law."], 1e-8)),
        ("4 invariance", bounded(&reports, &["invariance."], 1e-8)),
        (
            "5 torsion and curvature identification",
            bounded(&reports, &["ident.conn_gamma_"], 1e-8),
        ),
        ("6 B and Q identification", criterion_6(&spaces, &reports)),
        ("7 hand fixtures", criterion_7()),
        ("8 jet vs finite differences", criterion_8()),
        ("9 command line", criterion_9()),
    ];

    let mut all = errors.is_empty();
    for (name, o) in &criteria {
        println!(
            "criterion {name}: {} ({})",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        all &= o.pass;
    }
    let oracle_fail = reports.iter().flat_map(|r| r.failures()).count();
    println!("suite checks failing across all runs: {oracle_fail}");
    if !all {
        std::process::exit(1);
    }
}
