//! Acceptance suite: one PASS/FAIL line per criterion.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C;
use pblab::ensemble::*;
use pblab::lax::*;
use pblab::odeim::*;
use pblab::poles::*;
use pblab::qpii::*;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Collects named checks; a criterion passes when all of its checks do.
#[derive(Default)]
struct Checks {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn within(&mut self, value: f64, bound: f64, what: &str) {
        self.check(value <= bound, format!("{what} = {value:.3e} (<= {bound:.0e})"));
    }

    fn runtime(&mut self, elapsed: Duration, limit_s: f64, what: &str) {
        let s = elapsed.as_secs_f64();
        self.check(s <= limit_s, format!("{what} runtime {s:.1}s (<= {limit_s}s)"));
    }

    fn fail(&mut self, what: String) {
        self.failures.push(what);
    }
}

fn tight() -> QuadOptions<f64> {
    QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_depth: 40,
    }
}

const MC_SAMPLES: usize = 100_000;

fn virasoro(k: &mut Checks) {
    for (m, beta, seed) in [(2usize, 2.0f64, 101u64), (4, 1.0, 102), (8, 3.7, 103)] {
        let start = Instant::now();
        let spec = EnsembleSpec::gaussian(m, beta, 1.0).unwrap();
        let batch = sample_gbeta(&spec, MC_SAMPLES, seed).unwrap();
        let mut worst = 0.0f64;
        for n in -1..=4 {
            let s = virasoro_residual(&batch, n).unwrap();
            worst = worst.max(s.mean.norm() / s.stderr);
        }
        k.runtime(start.elapsed(), 120.0, &format!("(M, beta) = ({m}, {beta})"));
        k.within(worst, 3.0, &format!("(M, beta) = ({m}, {beta}) max |mean|/stderr"));
        if m <= 2 {
            let worst = (-1..=4)
                .map(|n| virasoro_quadrature(&spec, n, tight()).unwrap().0.abs())
                .fold(0.0, f64::max);
            k.within(worst, 1e-6, &format!("(M, beta) = ({m}, {beta}) quadrature"));
        }
    }
}

fn bpz(k: &mut Checks) {
    let penner = EnsembleSpec::new(
        2,
        3.0,
        PotentialSpec::MultiPenner {
            masses: vec![2.0, 2.5],
            positions: vec![0.0, 1.0],
            c: -1.0,
            confinement: 0.0,
        },
    )
    .unwrap();
    let quartic = EnsembleSpec::new(1, 2.0, PotentialSpec::polynomial(vec![0.0, 0.3, -0.2, 0.1, -0.25])).unwrap();
    let pair = EnsembleSpec::new(2, 4.0, PotentialSpec::polynomial(vec![0.0, 0.0, -0.5, 0.0, -0.1])).unwrap();
    type Residual = fn(&EnsembleSpec<f64>, AlphaChoice, C, f64, QuadOptions<f64>) -> pblab::Result<BpzResidual<f64>>;
    let cases: [(&str, &EnsembleSpec<f64>, Residual, AlphaChoice, C, f64); 6] = [
        ("penner", &penner, bpz_ode_residual, AlphaChoice::One, c(0.4, 0.0), 2e-2),
        ("penner", &penner, bpz_ode_residual, AlphaChoice::MinusHalfBeta, c(1.7, 0.0), 2e-2),
        ("quartic", &quartic, confluent_bpz_residual, AlphaChoice::One, c(0.6, 0.0), 1e-2),
        ("quartic", &quartic, confluent_bpz_residual, AlphaChoice::MinusHalfBeta, c(0.6, 0.8), 1e-2),
        ("pair", &pair, confluent_bpz_residual, AlphaChoice::One, c(0.3, 1.0), 1e-2),
        ("pair", &pair, confluent_bpz_residual, AlphaChoice::MinusHalfBeta, c(0.3, 1.0), 1e-2),
    ];
    for (name, spec, residual, choice, z, h) in cases {
        let what = format!("{name} {choice:?}");
        match (residual(spec, choice, z, h, tight()), residual(spec, choice, z, h / 2.0, tight())) {
            (Ok(a), Ok(b)) => {
                k.within(a.residual / a.error_estimate, 10.0, &format!("{what} residual/estimate"));
                let ratio = a.residual / b.residual;
                k.check(ratio > 3.0 && ratio < 5.0, format!("{what} halving ratio {ratio:.3} (in (3, 5))"));
            }
            (Err(e), _) | (_, Err(e)) => k.fail(format!("{what}: {e}")),
        }
    }
}

fn tracy_widom(k: &mut Checks) {
    let start = Instant::now();
    let ts: Vec<f64> = (0..=140).map(|i| -5.0 + 0.05 * i as f64).collect();
    for (beta, bound, seed) in [(2.0f64, 0.02, 201u64), (4.0, 0.03, 202)] {
        let kappa = beta / 2.0;
        let field = solve_qpii(kappa, Grid2D::standard(), Terminal::default(), QpiiOptions::default()).unwrap();
        let pde = extract_tw(&field);
        let emp = empirical_soft_edge_cdf(beta, 400, MC_SAMPLES, seed, &ts, SoftEdgeScaling::default()).unwrap();
        k.within(emp.sup_distance(&pde, -5.0, 2.0), bound, &format!("beta = {beta} sup distance"));
    }
    k.runtime(start.elapsed(), 900.0, "total");
}

fn thin(traj: &Trajectory<f64>, every: usize) -> Trajectory<f64> {
    Trajectory {
        states: traj.states.iter().step_by(every).cloned().collect(),
        ..traj.clone()
    }
}

fn poles(k: &mut Checks) {
    let grid = [c(-1.5, 0.3), c(0.7, -0.4), c(2.0, 0.1), c(0.2, -1.2), c(-0.4, 2.5)];
    for kappa in 1..=4 {
        let start = Instant::now();
        let traj = integrate_poles(&PoleState::<f64>::demo(kappa).unwrap(), 3.0, 1e-11).unwrap();
        let i0 = first_integrals(&traj.states[0]).unwrap();
        let drift = traj
            .states
            .iter()
            .flat_map(|s| first_integrals(s).unwrap().into_iter().zip(&i0).map(|(a, b)| (a - b).norm()))
            .fold(0.0, f64::max);
        let sparse = thin(&traj, 8);
        let gov = governing_residual_with(&sparse, &grid, DtMode::Analytic).map(|r| r.max());
        let hir = hirota_residual_with(&sparse, &grid, DtMode::Analytic);
        k.runtime(start.elapsed(), 60.0, &format!("kappa = {kappa}"));
        k.within(drift, 1e-8, &format!("kappa = {kappa} first-integral drift"));
        match (gov, hir) {
            (Ok(g), Ok(h)) => {
                k.within(g, 1e-6, &format!("kappa = {kappa} governing"));
                k.within(h, 1e-6, &format!("kappa = {kappa} Hirota"));
            }
            (Err(e), _) | (_, Err(e)) => k.fail(format!("kappa = {kappa}: {e}")),
        }
    }
}

/// Twelve points on a circle of radius `r` around each pole.
fn rings(s: &PoleState<f64>, r: f64) -> Vec<C> {
    s.q.iter()
        .flat_map(|&q| (0..12).map(move |j| q + C::from_polar(r, 0.1 + j as f64 * std::f64::consts::PI / 6.0)))
        .collect()
}

fn lax(k: &mut Checks) {
    const INIT: [C; 2] = [C::new(1.0, 0.0), C::new(0.3, 0.1)];
    let path: Vec<C> = (0..=40).map(|i| c(-2.0 + 0.1 * i as f64, -0.6)).collect();
    let probes: Vec<C> = (0..20)
        .map(|i| {
            let a = i as f64 * 0.77;
            c(2.2 * a.cos() - 0.3, 1.8 * (1.3 * a).sin() - 0.6)
        })
        .collect();
    for kappa in 1..=3 {
        let s = PoleState::<f64>::demo(kappa).unwrap();
        let grid = rings(&s, 0.25);
        let curvature = |d: f64| {
            let mut off = s.clone();
            off.qdot[0] += c(d, 0.0);
            let traj = integrate_poles(&off, 0.1, 1e-12).unwrap();
            zero_curvature_residual_with(&traj, &grid, DtMode::Analytic).unwrap()
        };
        k.within(curvature(0.0), 1e-6, &format!("kappa = {kappa} on-shell curvature"));
        let off = curvature(1e-3);
        k.check(off >= 1e-2, format!("kappa = {kappa} off-shell curvature = {off:.3e} (>= 1e-2)"));

        let sol = reconstruct_f(&s, &path, INIT).unwrap();
        k.within(sol.ode_residual().unwrap(), 1e-6, &format!("kappa = {kappa} linear system"));
        let sep = separation_check(&s, &path, INIT, 1e-3).unwrap();
        k.within(sep.ode, 1e-6, &format!("kappa = {kappa} second-order ODE in x"));
        k.within(sep.first_order, 1e-4, &format!("kappa = {kappa} first-order PDE"));
        k.within(sep.qpii, 1e-4, &format!("kappa = {kappa} QPII"));

        let bp = probes
            .iter()
            .map(|&x| {
                let (l, b) = (eval_l(&s, x).unwrap(), eval_b(&s, x).unwrap());
                (b.a12 / l.a12 - eval_fields(&s, x).unwrap().b_plus).norm()
            })
            .fold(0.0, f64::max);
        k.within(bp, 1e-12, &format!("kappa = {kappa} b+ agreement"));
    }
}

fn odeim(k: &mut Checks) {
    let start = Instant::now();
    let p = SpectralProblem::new(2.0, 0.3).unwrap();
    let wronskian = (0..10)
        .map(|j| {
            let e = C::from_polar(0.5 + 2.0 * j as f64, 0.3 + 0.6 * j as f64);
            quantum_wronskian_residual(&p, e).unwrap().norm()
        })
        .fold(0.0, f64::max);
    k.within(wronskian, 1e-6, "quantum Wronskian");

    let shooting = eigenvalues(&p, 10).unwrap();
    let discrete = fd_eigenvalues(&p, 10, 1000, 6.0).unwrap();
    let gap = shooting.iter().zip(&discrete).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    k.within(gap, 1e-5, "zeros vs discretized operator");

    let zero = c(0.0, 0.0);
    let product = spectral_d(&p, zero).unwrap() * spectral_d(&p.reflected(), zero).unwrap();
    k.within((product - 1.0).norm(), 1e-6, "D(0, l) D(0, -l-1) - 1");

    for roots in 1..=2 {
        match bethe_solve(2.0, 0.3, roots, &default_bethe_init(2.0, 0.3, roots)) {
            Ok(r) => {
                k.within(r.residual, 1e-10, &format!("Bethe residual L = {roots}"));
                if roots == 1 {
                    let exact = (1.6f64.powi(2) - 16.0) / 8.0;
                    k.within((r.z[0] - exact).norm(), 1e-10, "L = 1 closed form");
                }
            }
            Err(e) => k.fail(format!("Bethe L = {roots}: {e}")),
        }
    }
    k.runtime(start.elapsed(), 300.0, "total");
}

/// Each command with a small configuration, plus the f32 and config-file paths.
const RUNS: &[(&str, &[&str])] = &[
    ("sample", &["sample", "--M", "3", "--samples", "500", "--seed", "4"]),
    ("virasoro", &["virasoro-check", "--M", "2", "--samples", "2000", "--seed", "5"]),
    ("bpz", &["bpz-check"]),
    ("bpz-confluent", &["bpz-check", "--kind", "confluent"]),
    ("qpii", &["qpii-solve", "--grid", "coarse"]),
    ("tw-table", &["tw-table", "--grid", "coarse", "--beta", "4"]),
    ("tw-empirical", &["tw-empirical", "--N", "60", "--samples", "800", "--seed", "6"]),
    ("poles", &["poles-run", "--t-final", "0.5"]),
    ("governing", &["governing-check", "--t-final", "0.5"]),
    ("hirota", &["hirota-check", "--t-final", "0.5"]),
    ("lax", &["lax-check"]),
    ("reconstruct", &["reconstruct"]),
    ("spectrum", &["odeim-spectrum", "--levels", "3"]),
    ("qwronskian", &["qwronskian-check", "--points", "3"]),
    ("bethe", &["bethe-solve", "--L", "2"]),
    ("f32", &["odeim-spectrum", "--levels", "2", "--oracle", "false", "--precision", "f32"]),
    ("config", &["poles-run", "--config", "CONFIG"]),
];

const CONFIG: &str = "[global]\nseed = 9\n\n[poles-run]\nkappa = 3\nt_final = 0.25\n";

fn pblab(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_pblab"))
        .args(args)
        .env("PBLAB_THREADS", "2")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn replay_run(tmp: &Path, name: &str, args: &[&str]) -> Result<usize, String> {
    let (first, second) = (tmp.join(name).join("a"), tmp.join(name).join("b"));
    let config = tmp.join("config.toml");
    let mut argv: Vec<&str> = args.iter().map(|&a| if a == "CONFIG" { config.to_str().unwrap() } else { a }).collect();
    argv.extend(["--out", first.to_str().unwrap()]);
    pblab(&argv)?;
    let manifest = first.join("manifest.json");
    pblab(&["replay", manifest.to_str().unwrap(), "--out", second.to_str().unwrap()])?;
    let (a, b) = (artifacts(&first), artifacts(&second));
    if a.is_empty() || a != b {
        return Err("artifacts differ".into());
    }
    let text = std::fs::read_to_string(&manifest).unwrap();
    let m: serde_json::Value = serde_json::from_str(&text).unwrap();
    let hash = m["config_hash"].as_str().unwrap_or_default();
    if hash.len() != 64 || !a.iter().all(|(_, bytes)| String::from_utf8_lossy(bytes).contains(hash)) {
        return Err("config_hash missing from an artifact".into());
    }
    Ok(a.len())
}

fn reproducibility(k: &mut Checks) {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("config.toml"), CONFIG).unwrap();
    let mut files = 0;
    for (name, args) in RUNS {
        match replay_run(tmp.path(), name, args) {
            Ok(n) => files += n,
            Err(e) => k.fail(format!("{name}: {e}")),
        }
    }
    k.check(true, format!("{} runs, {files} artifacts bit-identical on replay", RUNS.len()));
}

fn main() {
    let criteria: [(&str, fn(&mut Checks)); 7] = [
        ("Virasoro constraints", virasoro),
        ("BPZ equations", bpz),
        ("Tracy-Widom cross-oracle", tracy_widom),
        ("pole dynamics", poles),
        ("Lax pair", lax),
        ("ODE/IM", odeim),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut k = Checks::default();
        run(&mut k);
        let verdict = if k.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {} ({name}): {verdict} [{:.1}s]", i + 1, start.elapsed().as_secs_f64());
        for n in &k.notes {
            println!("    ok    {n}");
        }
        for f in &k.failures {
            println!("    FAIL  {f}");
        }
        failed += usize::from(!k.failures.is_empty());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
