//! Acceptance criteria, one PASS/FAIL/SKIP line each. Criteria 1-4 need the
//! ACTG 175 CSV, found through `SIMULBAND_ACTG175_CSV` or `data/actg175.csv`
//! at the workspace root.

use std::path::{Path, PathBuf};
use std::process::{Command as Process, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use simulband::analysis::ResultDoc;
use simulband::config::{resolve, Command, Overrides};
use simulband::ingest::write_synthetic;
use simulband::run::{compute, RESULT_FILE};
use simulband_core::coverage::{run_coverage, SimScenario};
use simulband_core::estimators::{build_emm_binary_ipw_model, build_emm_binary_model, expit, CovariateTerm};
use simulband_core::mest::solve;
use simulband_core::quantile::normal_quantile;
use simulband_core::regions::{bonferroni_critical, ellipsoid, supt_critical_value, wald_intervals};
use simulband_core::{ColumnMapping, Dataset, SolverOptions};

const DATA_ENV: &str = "SIMULBAND_ACTG175_CSV";

enum Status {
    Pass,
    Fail(Vec<String>),
    Skip(&'static str),
}

/// Collects failed comparisons for one criterion.
#[derive(Default)]
struct Checks(Vec<String>);

impl Checks {
    fn near(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        if !((got - want).abs() <= tol + 1e-9) {
            self.0.push(format!("{what}: got {got:.4}, want {want} +/- {tol}"));
        }
    }

    fn that(&mut self, what: &str, ok: bool) {
        if !ok {
            self.0.push(what.to_string());
        }
    }

    fn within(&mut self, what: &str, elapsed: Duration, limit: Duration) {
        if elapsed > limit {
            self.0.push(format!("{what}: took {elapsed:.2?}, limit {limit:?}"));
        }
    }

    fn status(self) -> Status {
        if self.0.is_empty() {
            Status::Pass
        } else {
            Status::Fail(self.0)
        }
    }
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn data_file() -> Option<PathBuf> {
    let path = std::env::var_os(DATA_ENV).map(PathBuf::from).unwrap_or_else(|| workspace_root().join("data/actg175.csv"));
    path.is_file().then_some(path)
}

fn actg(command: Command, data: &Path, ipw: bool) -> anyhow::Result<(ResultDoc, Duration)> {
    let file = Overrides::from_file(&workspace_root().join("configs/actg175.toml"))?;
    let flags = Overrides { data: Some(data.into()), ipw: Some(ipw), ..Default::default() };
    let cfg = resolve(command, Some(file), flags, None)?;
    let start = Instant::now();
    let (doc, _) = compute(&cfg)?;
    Ok((doc, start.elapsed()))
}

fn interest_cov(doc: &ResultDoc) -> DMatrix<f64> {
    let fit = doc.fit.as_ref().expect("fit");
    let idx = &fit.interest;
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| fit.covariance[idx[r]][idx[c]])
}

type Row = [(f64, f64); 4];

/// Estimate, intervals, Bonferroni and sup-t bands, then the three widths.
fn table_checks(c: &mut Checks, doc: &ResultDoc, est: [f64; 4], rows: [Row; 3], widths: [[f64; 4]; 3], tol: f64) {
    let r = doc.regions.as_ref().expect("regions");
    for j in 0..4 {
        c.near(&format!("estimate {j}"), r.pointwise.estimate[j], est[j], tol);
        for (set, want, label) in [(&r.pointwise, &rows[0], "interval"), (&r.bonferroni, &rows[1], "bonferroni"), (&r.supt, &rows[2], "sup-t")] {
            c.near(&format!("{label} lower {j}"), set.lower[j], want[j].0, tol);
            c.near(&format!("{label} upper {j}"), set.upper[j], want[j].1, tol);
        }
        for (set, want, label) in [(&r.pointwise, &widths[0], "interval"), (&r.bonferroni, &widths[1], "bonferroni"), (&r.supt, &widths[2], "sup-t")] {
            c.near(&format!("{label} width {j}"), set.widths[j], want[j], tol);
        }
    }
}

fn effects_unweighted(data: &Path) -> anyhow::Result<Status> {
    let (doc, elapsed) = actg(Command::Effects, data, false)?;
    let mut c = Checks::default();
    let r = doc.regions.as_ref().expect("regions");
    let v = interest_cov(&doc);
    for (j, want) in [51.3, 6.7].into_iter().enumerate() {
        c.near(&format!("psi {j}"), r.pointwise.estimate[j], want, 0.05);
    }
    c.near("var 0", v[(0, 0)], 52.8, 0.05);
    c.near("var 1", v[(1, 1)], 532.2, 0.05);
    c.near("cov", v[(0, 1)], 39.0, 0.05);
    for (j, (lo, hi)) in [(37.1, 65.6), (-38.6, 51.9)].into_iter().enumerate() {
        c.near(&format!("interval lower {j}"), r.pointwise.lower[j], lo, 0.05);
        c.near(&format!("interval upper {j}"), r.pointwise.upper[j], hi, 0.05);
    }
    c.near("bonferroni c", r.bonferroni.critical_value, 2.24, 0.005);
    for (j, (lo, hi)) in [(35.0, 67.6), (-45.0, 58.4)].into_iter().enumerate() {
        c.near(&format!("bonferroni lower {j}"), r.bonferroni.lower[j], lo, 0.05);
        c.near(&format!("bonferroni upper {j}"), r.bonferroni.upper[j], hi, 0.05);
    }
    c.near("sup-t c", r.supt.critical_value, 2.23, 0.01);
    for (j, (lo, hi)) in [(35.1, 67.6), (-45.0, 58.3)].into_iter().enumerate() {
        c.near(&format!("sup-t lower {j}"), r.supt.lower[j], lo, 0.15);
        c.near(&format!("sup-t upper {j}"), r.supt.upper[j], hi, 0.15);
    }
    c.within("runtime", elapsed, Duration::from_secs(5));
    Ok(c.status())
}

fn emm_binary_table(data: &Path) -> anyhow::Result<Status> {
    let (doc, elapsed) = actg(Command::EmmBinary, data, false)?;
    let mut c = Checks::default();
    table_checks(
        &mut c,
        &doc,
        [356.8, -25.5, 41.4, 12.6],
        [
            [(328.8, 384.8), (-55.9, 5.0), (5.4, 77.4), (-26.6, 51.7)],
            [(321.1, 392.5), (-64.3, 13.4), (-4.5, 87.2), (-37.4, 62.5)],
            [(324.1, 389.6), (-61.1, 10.2), (-0.7, 83.5), (-33.3, 58.4)],
        ],
        [[56.0, 60.9, 72.0, 78.3], [71.4, 77.7, 91.8, 99.8], [65.5, 71.3, 84.2, 91.6]],
        0.1,
    );
    let ratio = doc.regions.as_ref().expect("regions").hypervolume_ratios.bonferroni_over_supt;
    c.near("bonferroni/sup-t hypervolume", ratio, 1.4, 0.05);
    c.within("runtime", elapsed, Duration::from_secs(5));
    Ok(c.status())
}

fn emm_continuous_critical(data: &Path) -> anyhow::Result<Status> {
    let (doc, elapsed) = actg(Command::EmmContinuous, data, false)?;
    let mut c = Checks::default();
    let grid = doc.grid.as_ref().expect("grid");
    let at = |size: usize| grid.compare.iter().find(|g| g.grid_size == size);
    match (at(50), at(1000)) {
        (Some(a), Some(b)) => {
            c.near("bonferroni grid 50", a.bonferroni, 3.29, 0.005);
            c.near("bonferroni grid 1000", b.bonferroni, 4.06, 0.005);
            c.near("sup-t grid 50", a.supt, 2.80, 0.03);
            c.near("sup-t grid 1000", b.supt, 2.80, 0.03);
            c.near("sup-t grid difference", (a.supt - b.supt).abs(), 0.0, 0.05);
        }
        _ => c.that("grid sizes 50 and 1000 are compared", false),
    }
    c.that("m = 200000", doc.config.m == 200_000);
    c.within("runtime", elapsed, Duration::from_secs(30));
    Ok(c.status())
}

fn ipw_reproduction(data: &Path) -> anyhow::Result<Status> {
    let (doc, _) = actg(Command::Effects, data, true)?;
    let mut c = Checks::default();
    let r = doc.regions.as_ref().expect("regions");
    let fit = doc.fit.as_ref().expect("fit");
    for (j, want) in [53.6, -0.4].into_iter().enumerate() {
        c.near(&format!("psi {j}"), r.pointwise.estimate[j], want, 0.1);
    }
    for (j, (lo, hi)) in [(42.4, 64.8), (-30.5, 29.6)].into_iter().enumerate() {
        c.near(&format!("interval lower {j}"), r.pointwise.lower[j], lo, 0.1);
        c.near(&format!("interval upper {j}"), r.pointwise.upper[j], hi, 0.1);
    }
    for (j, (lo, hi)) in [(40.8, 66.5), (-34.8, 33.9)].into_iter().enumerate() {
        c.near(&format!("bonferroni lower {j}"), r.bonferroni.lower[j], lo, 0.1);
        c.near(&format!("bonferroni upper {j}"), r.bonferroni.upper[j], hi, 0.1);
    }
    c.near("sup-t c", r.supt.critical_value, 2.23, 0.01);
    c.that("nuisance block present", fit.theta_hat.len() > fit.interest.len() && fit.covariance.len() == fit.theta_hat.len());
    let v = interest_cov(&doc);
    for j in 0..2 {
        let want = 2.0 * r.pointwise.critical_value * v[(j, j)].sqrt();
        c.near(&format!("interval width {j} from interest block"), r.pointwise.widths[j], want, 1e-9);
    }

    let (doc, _) = actg(Command::EmmBinary, data, true)?;
    table_checks(
        &mut c,
        &doc,
        [356.0, -26.4, 42.4, 13.6],
        [
            [(327.6, 384.3), (-58.1, 5.3), (7.0, 77.7), (-26.4, 53.6)],
            [(319.1, 392.1), (-66.8, 14.0), (-2.7, 87.4), (-37.4, 64.6)],
            [(323.2, 388.7), (-63.1, 10.3), (1.5, 83.3), (-32.7, 59.9)],
        ],
        [[56.7, 63.4, 70.7, 80.0], [72.2, 80.7, 90.1, 102.0], [65.6, 73.3, 81.8, 92.6]],
        0.15,
    );
    Ok(c.status())
}

fn toy_binary() -> Dataset {
    let cols = [
        ("a", vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0]),
        ("v", vec![0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0]),
        ("w", vec![0.3, -1.2, 2.0, 0.4, -0.5, 1.1, 0.9, -0.8, 1.6, 0.2, -0.1, 0.7]),
        ("y", vec![4.1, 2.0, 6.3, 3.2, 3.9, 2.8, 7.4, 1.1, 5.5, 2.6, 3.3, 6.0]),
    ];
    let mapping = ColumnMapping {
        action: "a".into(),
        outcomes: vec!["y".into()],
        modifiers: vec!["v".into()],
        confounders: vec!["w".into()],
    };
    Dataset::new(cols.into_iter().map(|(k, v)| (k.to_string(), v)).collect(), mapping).unwrap()
}

/// `(X^T W X)^-1 X^T W y` by the normal equations.
fn normal_equations(d: &Dataset, weights: &[f64]) -> DVector<f64> {
    let (a, v, y) = (d.action(), d.column("v").unwrap(), d.column("y").unwrap());
    let x = DMatrix::from_fn(d.n(), 4, |r, c| [1.0, a[r], v[r], a[r] * v[r]][c]);
    let wx = DMatrix::from_fn(d.n(), 4, |r, c| x[(r, c)] * weights[r]);
    (x.transpose() * &wx).lu().solve(&(wx.transpose() * DVector::from_column_slice(y))).unwrap()
}

fn properties() -> anyhow::Result<Status> {
    let mut c = Checks::default();
    let m = 200_000;
    let seed = 7;
    let eye = DMatrix::<f64>::identity(2, 2);
    let ones = DMatrix::from_element(2, 2, 1.0);
    c.near("independence", supt_critical_value(&eye, 0.05, m, seed)?, normal_quantile((1.0 + 0.95f64.sqrt()) / 2.0), 0.01);
    c.near("independence value", supt_critical_value(&eye, 0.05, m, seed)?, 2.236, 0.01);
    c.near("perfect correlation", supt_critical_value(&ones, 0.05, m, seed)?, 1.960, 0.01);

    let z = normal_quantile(0.975);
    for (k, rho) in [(2, 0.3), (3, 0.8), (5, -0.2), (10, 0.5f64)] {
        let cov = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { rho });
        let s = supt_critical_value(&cov, 0.05, m, seed)?;
        c.that(&format!("z <= sup-t <= bonferroni + 0.01 for k={k}"), z <= s && s <= bonferroni_critical(k, 0.05) + 0.01);
        let d = DMatrix::from_diagonal(&DVector::from_fn(k, |i, _| [0.01, 3.0, 250.0, 1.7][i % 4]));
        let scaled = &d * &cov * &d;
        let t = supt_critical_value(&scaled, 0.05, m, seed)?;
        c.that(&format!("scale invariance bit-identical for k={k}"), s.to_bits() == t.to_bits());
    }

    for (k, want) in [(1, 1.9600), (2, 2.2414), (5, 2.5758), (10, 2.8070), (25, 3.0902), (50, 3.2905)] {
        c.near(&format!("bonferroni k={k}"), bonferroni_critical(k, 0.05), want, 1e-3);
    }

    let cov = DMatrix::from_row_slice(2, 2, &[52.8, 39.0, 39.0, 532.2]);
    let e = ellipsoid(&[51.3, 6.7], &cov, 0.05, 360)?;
    let worst = e
        .boundary
        .as_ref()
        .expect("boundary")
        .iter()
        .map(|p| (e.mahalanobis2(p) - e.chisq_radius).abs())
        .fold(0.0, f64::max);
    c.near("ellipse boundary residual", worst, 0.0, 1e-8);
    c.that("wald intervals", wald_intervals(&[0.0], &DMatrix::from_element(1, 1, 4.0), 0.05)?.upper[0] == 2.0 * z);

    let d = toy_binary();
    let opts = SolverOptions::default();
    let ols = solve(&build_emm_binary_model(&d, "y", "v")?.model, &opts)?;
    let want = normal_equations(&d, &[1.0; 12]);
    for j in 0..4 {
        c.near(&format!("ols {j}"), ols.theta_hat[j], want[j], 1e-8);
    }
    let terms = [CovariateTerm::Linear("w".into())];
    let ipw = solve(&build_emm_binary_ipw_model(&d, "y", "v", &terms)?.model, &opts)?;
    let (a, w) = (d.action(), d.column("w")?);
    let weights: Vec<f64> = (0..d.n())
        .map(|i| {
            let p = expit(ipw.theta_hat[0] + ipw.theta_hat[1] * w[i]);
            if a[i] == 1.0 { 1.0 / p } else { 1.0 / (1.0 - p) }
        })
        .collect();
    let want = normal_equations(&d, &weights);
    for j in 0..4 {
        c.near(&format!("wls {j}"), ipw.theta_hat[2 + j], want[j], 1e-8);
    }
    Ok(c.status())
}

fn coverage_simulation() -> anyhow::Result<Status> {
    let start = Instant::now();
    let report = run_coverage(&SimScenario::standard(2, 0.0, 500, 10_000, 0.05, simulband::config::DEFAULT_SEED))?;
    let elapsed = start.elapsed();
    let s = report.simultaneous;
    let mut c = Checks::default();
    c.near("pointwise", s.pointwise, 0.9025, 0.01);
    c.near("sup-t", s.supt, 0.95, 0.01);
    c.that(&format!("bonferroni {:.4} >= 0.945", s.bonferroni), s.bonferroni >= 0.945);
    c.near("ellipsoid", s.ellipsoid, 0.95, 0.01);
    c.that("no failed replicates", report.failures == 0);
    c.within("runtime", elapsed, Duration::from_secs(120));
    println!(
        "    coverage: pointwise {:.4}, bonferroni {:.4}, sup-t {:.4}, ellipsoid {:.4} in {elapsed:.1?}",
        s.pointwise, s.bonferroni, s.supt, s.ellipsoid
    );
    Ok(c.status())
}

fn determinism() -> anyhow::Result<Status> {
    let dir = tempfile::tempdir()?;
    let data = dir.path().join("trial.csv");
    write_synthetic(&data, 800, 3, true)?;
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get()).max(2).to_string();
    let mut c = Checks::default();
    let commands: [(&str, &[&str]); 4] = [
        ("effects", &["--ipw"]),
        ("emm-binary", &["--ipw"]),
        ("emm-continuous", &["--ipw"]),
        ("simulate", &["--reps", "300", "--n", "200", "--k", "3", "--rho", "0.4"]),
    ];
    for (name, extra) in commands {
        let mut outputs = Vec::new();
        for (i, t) in ["1", "1", threads.as_str()].into_iter().enumerate() {
            let out = dir.path().join(format!("{name}-{i}"));
            let mut p = Process::new(env!("CARGO_BIN_EXE_simulband"));
            p.args(["--threads", t, name, "--seed", "99", "--out"]).arg(&out).args(extra);
            if name != "simulate" {
                p.arg("--data").arg(&data);
            }
            let status = p.output()?;
            if !status.status.success() {
                c.that(&format!("{name} run failed: {}", String::from_utf8_lossy(&status.stderr).trim()), false);
                break;
            }
            outputs.push(std::fs::read(out.join(RESULT_FILE))?);
        }
        if outputs.len() == 3 {
            c.that(&format!("{name}: repeated run byte-identical"), outputs[0] == outputs[1]);
            c.that(&format!("{name}: 1 vs {threads} threads byte-identical"), outputs[0] == outputs[2]);
        }
    }
    Ok(c.status())
}

fn main() -> ExitCode {
    let data = data_file();
    type Check = Box<dyn Fn() -> anyhow::Result<Status>>;
    let with_data = |f: fn(&Path) -> anyhow::Result<Status>| -> Check {
        let data = data.clone();
        Box::new(move || match &data {
            Some(p) => f(p),
            None => Ok(Status::Skip("data-not-found")),
        })
    };
    let criteria: Vec<(&str, Check)> = vec![
        ("1 effects, unweighted", with_data(effects_unweighted)),
        ("2 binary modifier table", with_data(emm_binary_table)),
        ("3 continuous modifier critical values", with_data(emm_continuous_critical)),
        ("4 inverse probability weighting", with_data(ipw_reproduction)),
        ("5 property suite", Box::new(properties)),
        ("6 coverage simulation", Box::new(coverage_simulation)),
        ("7 determinism", Box::new(determinism)),
    ];

    let mut failed = 0;
    for (label, check) in criteria {
        match check() {
            Ok(Status::Pass) => println!("criterion {label}: PASS"),
            Ok(Status::Skip(why)) => println!("criterion {label}: SKIP ({why})"),
            Ok(Status::Fail(reasons)) => {
                failed += 1;
                println!("criterion {label}: FAIL");
                for r in reasons {
                    println!("    {r}");
                }
            }
            Err(e) => {
                failed += 1;
                println!("criterion {label}: FAIL ({e:#})");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
