use std::fs::File;
use std::path::Path;
use std::time::Instant;

use leafquant::algebra::{BumpCover, PolynomialObservable};
use leafquant::bundle::{prequant_curvature_check, BundleModel, ParameterPath};
use leafquant::evolve::{split_evolution, DrivenHamiltonian, EvolutionMode};
use leafquant::linalg::DenseMatrix;
use leafquant::quantize::{FiberGrid, Ordering};
use leafquant::scenario::{preset, preset_names, read_fqu, run, verify, CheckResult, RunOptions, RunReport};
use leafquant::{parse_expr, Dims, Expr};

struct Line {
    id: usize,
    what: &'static str,
    measured: f64,
    bound: f64,
    at_least: bool,
    seconds: f64,
    budget: f64,
}

impl Line {
    fn passed(&self) -> bool {
        let ok = if self.at_least {
            self.measured >= self.bound
        } else {
            self.measured <= self.bound
        };
        ok && self.seconds < self.budget
    }

    fn print(&self) {
        println!(
            "{} {:>2} {:<30} {:.3e} {} {:.1e}  ({:.1} s, budget {} s)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.what,
            self.measured,
            if self.at_least { ">=" } else { "<=" },
            self.bound,
            self.seconds,
            self.budget
        );
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

fn check<'a>(checks: &'a [CheckResult], name: &str) -> &'a CheckResult {
    checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("no check named {name}"))
}

fn worst(checks: &[CheckResult], prefix: &str) -> f64 {
    checks
        .iter()
        .filter(|c| c.name.starts_with(prefix))
        .map(|c| c.measured)
        .fold(0.0, f64::max)
}

fn own_unitarity_defect(u: &DenseMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - DenseMatrix::identity(n, n)).norm()
}

fn run_preset(name: &str, dir: &Path) -> (RunReport, f64) {
    let config = preset(name).unwrap();
    let out = dir.join(name);
    timed(|| {
        run(
            &config,
            Some(&out),
            &RunOptions {
                steps: None,
                dump_unitary: config.integrator.mode == EvolutionMode::Unitary,
            },
        )
        .unwrap()
    })
}

fn commuting_system() -> DrivenHamiltonian {
    // G = p along chi = t and H' = p^2 = G^2
    let bundle = BundleModel::new(Dims::new(1, 1), vec![vec![Expr::one()]], vec![Expr::zero()], None).unwrap();
    let path = ParameterPath::closed_form(vec![parse_expr("t", &["t"]).unwrap()], (0.0, 1.0), false).unwrap();
    let h = PolynomialObservable::monomial(1, &[0, 0], Expr::one()).unwrap();
    DrivenHamiltonian::new(
        bundle,
        path,
        h,
        BumpCover::single(1, 8.0),
        FiberGrid::new(1, 64, 8.0).unwrap(),
        Ordering::Symmetric,
    )
    .unwrap()
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let mut lines = Vec::new();

    // 1, 2
    let (dirac, secs) = timed(|| verify("dirac").unwrap());
    lines.push(Line {
        id: 1,
        what: "dirac symbol defect",
        measured: check(&dirac.checks, "dirac_symbol").measured,
        bound: 1e-12,
        at_least: false,
        seconds: secs,
        budget: 5.0,
    });
    lines.push(Line {
        id: 2,
        what: "dirac grid ratio 256->512",
        measured: check(&dirac.checks, "dirac_grid_ratio").measured,
        bound: 3.5,
        at_least: true,
        seconds: secs,
        budget: 30.0,
    });

    // 3
    let (herm, secs) = timed(|| verify("hermiticity").unwrap());
    lines.push(Line {
        id: 3,
        what: "hermiticity defect",
        measured: worst(&herm.checks, "hermiticity_"),
        bound: 1e-12,
        at_least: false,
        seconds: secs,
        budget: 60.0,
    });

    // 4
    let (dec, secs) = timed(|| verify("decomposition").unwrap());
    lines.push(Line {
        id: 4,
        what: "partition and reconstruction",
        measured: check(&dec.checks, "partition_of_unity")
            .measured
            .max(check(&dec.checks, "reconstruction").measured),
        bound: 1e-12,
        at_least: false,
        seconds: secs,
        budget: 10.0,
    });

    // every preset, once
    let mut reports = Vec::new();
    for name in preset_names() {
        let (report, secs) = run_preset(name, dir.path());
        println!("ran {name} in {secs:.1} s");
        reports.push((name, report, secs));
    }
    let find = |n: &str| reports.iter().find(|r| r.0 == n).unwrap();

    // 5
    let mut unitarity: f64 = 0.0;
    for (name, report, _) in &reports {
        unitarity = unitarity.max(report.unitarity_defect).max(worst(&report.checks, "unitarity"));
        for c in report.checks.iter().filter(|c| c.name.contains("unitarity")) {
            unitarity = unitarity.max(c.measured);
        }
        for dump in ["unitary.fqu", "geometric.fqu"] {
            let path = dir.path().join(name).join(dump);
            if path.exists() {
                let u = read_fqu(&mut File::open(path).unwrap()).unwrap();
                unitarity = unitarity.max(own_unitarity_defect(&u));
            }
        }
    }
    lines.push(Line {
        id: 5,
        what: "unitarity over all presets",
        measured: unitarity,
        bound: 1e-10,
        at_least: false,
        seconds: reports.iter().map(|r| r.2).sum(),
        budget: f64::INFINITY,
    });

    // 6
    let (_, reparam, secs) = find("reparam_pair");
    lines.push(Line {
        id: 6,
        what: "reparametrization defect",
        measured: reparam.reparametrization.as_ref().unwrap().iter().map(|r| r.defect).fold(0.0, f64::max),
        bound: 5e-6,
        at_least: false,
        seconds: *secs,
        budget: 120.0,
    });

    // 7
    let (_, flat, secs) = find("flat_loop");
    let flat_geo = read_fqu(&mut File::open(dir.path().join("flat_loop/geometric.fqu")).unwrap()).unwrap();
    let n = flat_geo.nrows();
    let flat_distance = (&flat_geo - DenseMatrix::identity(n, n)).norm();
    assert!((flat_distance - flat.holonomy.as_ref().unwrap().distance_from_identity).abs() < 1e-12);
    lines.push(Line {
        id: 7,
        what: "flat holonomy ||U_geo - I||",
        measured: flat_distance,
        bound: 1e-7,
        at_least: false,
        seconds: *secs,
        budget: 60.0,
    });

    // 8
    let (_, nonabelian, secs) = find("nonabelian_loop");
    let conv = nonabelian.convergence.as_ref().unwrap();
    lines.push(Line {
        id: 8,
        what: "step-doubling ratio",
        measured: conv.ratio,
        bound: 3.5,
        at_least: true,
        seconds: *secs,
        budget: 180.0,
    });
    lines.push(Line {
        id: 8,
        what: "richardson stability",
        measured: conv.richardson_stability,
        bound: 1e-6,
        at_least: false,
        seconds: *secs,
        budget: 180.0,
    });
    lines.push(Line {
        id: 8,
        what: "nontrivial ||U_geo - I||",
        measured: conv.pinned_distance_from_identity,
        bound: 1e-2,
        at_least: true,
        seconds: *secs,
        budget: 180.0,
    });

    // 9: H = p^2/2 + (q - sin t)^2/2 + cos(t) p, so x = q - sin t and p rotate
    let (_, driven, driven_secs) = find("driven_oscillator");
    let first = &driven.rows[0];
    let (x0, p0) = (first.exp_q[0] - first.t.sin(), first.exp_p[0]);
    let (mut dq, mut dp): (f64, f64) = (0.0, 0.0);
    for o in &driven.rows {
        let (s, c) = o.t.sin_cos();
        dq = dq.max((o.exp_q[0] - (x0 * c + p0 * s + s)).abs());
        dp = dp.max((o.exp_p[0] - (p0 * c - x0 * s)).abs());
    }
    assert!((driven.rows.last().unwrap().t - 10.0).abs() < 1e-9);
    lines.push(Line {
        id: 9,
        what: "ehrenfest |<q> - q_cl|",
        measured: dq,
        bound: 1e-3,
        at_least: false,
        seconds: *driven_secs,
        budget: 300.0,
    });
    lines.push(Line {
        id: 9,
        what: "ehrenfest |<p> - p_cl|",
        measured: dp,
        bound: 1e-3,
        at_least: false,
        seconds: *driven_secs,
        budget: 300.0,
    });

    // 10
    let (split, secs) = timed(|| split_evolution(&commuting_system(), 256, 1e-8).unwrap());
    lines.push(Line {
        id: 10,
        what: "commuting ||U - U_geo U_dyn||",
        measured: split.report.factorization_defect,
        bound: 1e-8,
        at_least: false,
        seconds: secs,
        budget: 120.0,
    });
    let noncommuting = driven.commutator.as_ref().unwrap();
    assert!(!noncommuting.asserted && noncommuting.holds.is_none());
    assert!(driven.checks.iter().all(|c| c.name != "factorization"));
    lines.push(Line {
        id: 10,
        what: "driven factorization defect",
        measured: noncommuting.factorization_defect,
        bound: 1e-3,
        at_least: true,
        seconds: *driven_secs,
        budget: 120.0,
    });

    // 11: R_{p_k q^j} = i delta_k^j, exactly
    let (bad, secs) = timed(|| {
        let mut bad = 0usize;
        for n in [1, 2] {
            let r = prequant_curvature_check(n);
            assert_eq!(r.components.len(), 4 * n * n);
            for k in 1..=n {
                for j in 1..=n {
                    let c = r
                        .components
                        .iter()
                        .find(|c| c.row == format!("p{k}") && c.col == format!("q{j}"))
                        .unwrap();
                    let want = if k == j { 1.0 } else { 0.0 };
                    bad += usize::from(c.imag.as_const() != Some(want));
                }
            }
            bad += usize::from(!r.holds);
        }
        bad
    });
    lines.push(Line {
        id: 11,
        what: "prequantization mismatches",
        measured: bad as f64,
        bound: 0.0,
        at_least: false,
        seconds: secs,
        budget: 1.0,
    });

    for l in &lines {
        l.print();
    }
    let failed: Vec<usize> = lines.iter().filter(|l| !l.passed()).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
