//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed. Failures are reported but only
//! fail the process when `CHIST_ACCEPTANCE_STRICT=1`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use chist_core::histories::{
    branch_probabilities, check_consistency, coarse_grain, decoherence_functional, Dynamics, History,
    HistorySet,
};
use chist_core::hourglass::{simulate_hourglass, stability_metrics, DropDistribution};
use chist_core::scenarios::{
    correlated_families, full_quantum_set, run_canonical_observer, run_gambling,
    run_preparation_discrimination, run_state_estimation, run_theory_discrimination, EstimationMode,
    ScenarioOptions, ScenarioResult, Truth,
};
use chist_core::tensor::{OperatorMatrix, SpaceLayout};
use chist_core::{random, C64};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

// ---------------------------------------------------------------------------
// Dense oracle: plain row-major complex matrices, independent of the library.
// ---------------------------------------------------------------------------

#[derive(Clone)]
struct Dense {
    n: usize,
    a: Vec<C64>,
}

impl Dense {
    fn from_op(m: &OperatorMatrix) -> Self {
        let n = m.dim();
        Self {
            n,
            a: (0..n * n).map(|k| m.get(k / n, k % n)).collect(),
        }
    }

    fn identity(n: usize) -> Self {
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            a[i * n + i] = C64::new(1.0, 0.0);
        }
        Self { n, a }
    }

    fn mul(&self, o: &Dense) -> Dense {
        let n = self.n;
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let x = self.a[i * n + k];
                for j in 0..n {
                    a[i * n + j] += x * o.a[k * n + j];
                }
            }
        }
        Dense { n, a }
    }

    fn adjoint(&self) -> Dense {
        let n = self.n;
        Dense {
            n,
            a: (0..n * n).map(|k| self.a[(k % n) * n + k / n].conj()).collect(),
        }
    }

    fn scale(&self, c: C64) -> Dense {
        Dense {
            n: self.n,
            a: self.a.iter().map(|x| x * c).collect(),
        }
    }

    fn add(&self, o: &Dense) -> Dense {
        Dense {
            n: self.n,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x + y).collect(),
        }
    }

    fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.a[i * self.n + i]).sum()
    }

    /// `exp(-i H t)` by Taylor series with scaling and squaring.
    fn propagator(h: &Dense, t: f64) -> Dense {
        let norm: f64 = h.a.iter().map(|x| x.norm()).sum::<f64>() * t.abs();
        let squarings = (norm.max(1.0).log2().ceil() as u32) + 4;
        let x = h.scale(C64::new(0.0, -t / f64::from(1u32 << squarings)));
        let mut sum = Dense::identity(h.n);
        let mut term = Dense::identity(h.n);
        for k in 1..=30 {
            term = term.mul(&x).scale(C64::new(1.0 / k as f64, 0.0));
            sum = sum.add(&term);
        }
        for _ in 0..squarings {
            sum = sum.mul(&sum);
        }
        sum
    }
}

/// `Tr[C_a ρ0 C_b†]` with `C = P_N U_N ··· P_1 U_1`.
fn oracle_functional(set: &HistorySet) -> Vec<Vec<C64>> {
    let psi: Vec<C64> = set.psi0().amplitudes().to_vec();
    let n = psi.len();
    let rho = Dense {
        n,
        a: (0..n * n).map(|k| psi[k / n] * psi[k % n].conj()).collect(),
    };
    let steps: Vec<Dense> = match set.dynamics() {
        Dynamics::Hamiltonian(h) => {
            let h = Dense::from_op(h);
            let mut prev = 0.0;
            set.times()
                .iter()
                .map(|&t| {
                    let u = Dense::propagator(&h, t - prev);
                    prev = t;
                    u
                })
                .collect()
        }
        Dynamics::Steps(us) => us.iter().map(Dense::from_op).collect(),
    };
    let histories: Vec<History> = set.histories().collect();
    let chains: Vec<Dense> = histories
        .iter()
        .map(|h| {
            let mut c = Dense::identity(n);
            for (i, &k) in h.iter().enumerate() {
                let p = Dense::from_op(set.families()[i].projector(k));
                c = p.mul(&steps[i]).mul(&c);
            }
            c
        })
        .collect();
    chains
        .iter()
        .map(|ca| chains.iter().map(|cb| ca.mul(&rho).mul(&cb.adjoint()).trace()).collect())
        .collect()
}

fn qubits(n: usize) -> SpaceLayout {
    SpaceLayout::new((0..n).map(|i| (format!("q{i}"), 2))).unwrap()
}

fn random_set(rng: &mut ChaCha8Rng, index: usize) -> HistorySet {
    let l = qubits(rng.random_range(2..=3));
    let times = rng.random_range(2..=3);
    let families = (0..times)
        .map(|_| {
            let parts = rng.random_range(2..=3);
            random::family(rng, l.clone(), parts)
        })
        .collect();
    let psi0 = random::state(rng, l.clone());
    if index.is_multiple_of(2) {
        let mut t = 0.0;
        let ts = (0..times)
            .map(|_| {
                t += rng.random_range(0.2..1.5);
                t
            })
            .collect();
        HistorySet::new(psi0, Dynamics::Hamiltonian(random::hermitian(rng, l, 1.0)), ts, families).unwrap()
    } else {
        let steps = (0..times).map(|_| random::unitary(rng, l.clone())).collect();
        let ts = (1..=times).map(|t| t as f64).collect();
        HistorySet::new(psi0, Dynamics::Steps(steps), ts, families).unwrap()
    }
}

fn real(r: &ScenarioResult, key: &str) -> f64 {
    r.real(key).unwrap_or_else(|| panic!("derived key {key} missing"))
}

fn table_prob(r: &ScenarioResult, table: &str, label: &str) -> f64 {
    r.table(table)
        .and_then(|t| t.get(label))
        .unwrap_or_else(|| panic!("{table}/{label} missing"))
}

fn run_cli(args: &[&str], out: &Path) -> (i32, Value) {
    let status = Command::new(env!("CARGO_BIN_EXE_chist"))
        .args(args)
        .env("CHIST_OUT_DIR", out)
        .output()
        .expect("binary runs");
    let code = status.status.code().unwrap_or(-1);
    let config = Path::new(args.last().unwrap());
    let stem = config.file_stem().unwrap().to_string_lossy().into_owned();
    let text = std::fs::read_to_string(out.join(stem).join("report.json")).unwrap_or_else(|_| "null".into());
    (code, serde_json::from_str(&text).unwrap())
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

fn consistency_engine_vs_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let (mut worst_entry, mut worst_diag): (f64, f64) = (0.0, 0.0);
    let mut inconsistent = 0;
    for i in 0..50 {
        let set = random_set(&mut rng, i);
        let d = decoherence_functional(&set).map_err(|e| e.to_string())?;
        let oracle = oracle_functional(&set);
        for (a, row) in oracle.iter().enumerate() {
            for (b, &o) in row.iter().enumerate() {
                worst_entry = worst_entry.max((d.entry(a, b) - o).norm());
            }
        }
        worst_diag = worst_diag.max((d.diagonal_sum() - 1.0).abs());
        if !check_consistency(&d, 1e-8).unwrap().consistent {
            inconsistent += 1;
        }
    }
    ensure!(worst_entry <= 1e-10, "max entry deviation {worst_entry:e} > 1e-10");
    ensure!(worst_diag <= 1e-10, "max diagonal-sum deviation {worst_diag:e} > 1e-10");
    Ok(format!(
        "50 sets ({inconsistent} inconsistent): max entry dev {worst_entry:.1e}, max |sum diag - 1| {worst_diag:.1e}"
    ))
}

fn inconsistent_set_detection() -> Outcome {
    let out = tempfile::tempdir().unwrap();
    let path = configs().join("z-then-x.json");
    let (code, report) = run_cli(&["run", path.to_str().unwrap()], out.path());
    let measure = report["result"]["consistency"]["max_normalized_offdiag"].as_f64().unwrap_or(f64::NAN);
    ensure!(code == 2, "exit code {code}, expected 2");
    ensure!((measure - 1.0).abs() <= 1e-10, "measure {measure}");
    ensure!(report["result"].get("probabilities").is_none(), "probabilities were emitted");
    Ok(format!("exit 2, measure {measure}"))
}

fn gambling_winnings() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2002);
    let opts = ScenarioOptions { samples: 1000, ..Default::default() };
    let mut worst: f64 = 0.0;
    let mut accepts = 0;
    for i in 0..20 {
        let a2: f64 = rng.random_range(0.05..0.95);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let alpha = C64::from_polar(a2.sqrt(), phase);
        let beta = C64::from_polar((1.0 - a2).sqrt(), rng.random_range(0.0..std::f64::consts::TAU));
        let odds: f64 = rng.random_range(0.1..5.0);
        let r = run_gambling(alpha, beta, odds, i, &opts).map_err(|e| e.to_string())?;
        let (a2, b2) = (alpha.norm_sqr(), beta.norm_sqr());
        worst = worst.max((real(&r, "expected_winnings") - (odds * a2 - b2)).abs());
        let accept = b2 / a2 <= odds;
        ensure!(
            (r.text("decision") == Some("accept")) == accept,
            "pair {i}: decision {:?} with b2/a2 = {} and O = {odds}",
            r.text("decision"),
            b2 / a2
        );
        accepts += usize::from(accept);
    }
    ensure!(worst <= 1e-12, "max winnings deviation {worst:e}");
    Ok(format!("20 pairs ({accepts} accept): max deviation {worst:.1e}"))
}

fn product_law() -> Outcome {
    let opts = ScenarioOptions { samples: 1000, ..Default::default() };
    let (alpha, beta) = (C64::new(0.6, 0.0), C64::new(0.0, 0.8));
    let (a2, b2) = (alpha.norm_sqr(), beta.norm_sqr());
    let (mut worst, mut worst_all): (f64, f64) = (0.0, 0.0);
    for n in 1..=5 {
        let r = run_state_estimation(alpha, beta, n, 3, EstimationMode::FullQuantum, &opts)
            .map_err(|e| e.to_string())?;
        let seq = r.table("sequence").ok_or("sequence table missing")?;
        ensure!(seq.rows.len() == 1 << n, "N={n}: {} rows", seq.rows.len());
        for row in &seq.rows {
            let n1 = row.label.split(',').filter(|s| *s == "Q1").count() as i32;
            let law = a2.powi(n1) * b2.powi(n as i32 - n1);
            worst = worst.max((row.probability - law).abs());
        }
        let all = table_prob(&r, "sequence", &vec!["Q1"; n].join(","));
        worst_all = worst_all.max((all - a2.powi(n as i32)).abs());
    }
    ensure!(worst <= 1e-10, "max per-history deviation {worst:e}");
    ensure!(worst_all <= 1e-12, "all-Q1 deviation {worst_all:e}");
    Ok(format!("N=1..5: max deviation {worst:.1e}, all-Q1 deviation {worst_all:.1e}"))
}

fn theory_discrimination() -> Outcome {
    let start = Instant::now();
    let opts = ScenarioOptions::default();
    for n in [1usize, 5, 20] {
        let r = run_theory_discrimination(n, Truth::Quantum, 9, &opts).map_err(|e| e.to_string())?;
        let agreement = real(&r, "agreement_probability");
        ensure!((agreement - 0.5).abs() <= 1e-12, "agreement {agreement}");
        let mis = real(&r, "misclassification_probability");
        let exact = 0.5f64.powi(n as i32);
        ensure!((mis - exact).abs() <= 1e-12 * exact, "N={n}: misclassification {mis:e} vs {exact:e}");
    }
    let triples = 100_000;
    let r = run_theory_discrimination(triples, Truth::Classical, 9, &opts).map_err(|e| e.to_string())?;
    let agreements = real(&r, "agreements");
    ensure!(agreements == triples as f64, "classical agreements {agreements} of {triples}");
    let elapsed = start.elapsed().as_secs_f64();
    ensure!(elapsed <= 30.0, "runtime {elapsed:.1} s");
    Ok(format!("agreement 0.5, misclassification 2^-N, classical {triples}/{triples} agree, {elapsed:.2} s"))
}

fn consistent_sets(rng: &mut ChaCha8Rng) -> Vec<HistorySet> {
    (0..20)
        .map(|i| random::consistent_set(rng, 2 + i % 2, 2 + i % 2, 2))
        .collect()
}

fn canonical_observer() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    let opts = ScenarioOptions::default();
    let mut worst: f64 = 0.0;
    for set in consistent_sets(&mut rng) {
        let r = run_canonical_observer(&set, &opts).map_err(|e| e.to_string())?;
        worst = worst.max(real(&r, "max_extended_deviation")).max(real(&r, "max_recorder_deviation"));
    }
    ensure!(worst <= 1e-10, "recorder changed a probability by {worst:e}");
    let mut worst_tables: f64 = 0.0;
    for copies in 1..=3 {
        let r = correlated_families(C64::new(0.6, 0.0), C64::new(0.8, 0.0), copies, &opts)
            .map_err(|e| e.to_string())?;
        for key in ["pointer_vs_brain", "pointer_vs_joint", "brain_vs_joint"] {
            worst_tables = worst_tables.max(real(&r, key));
        }
    }
    ensure!(worst_tables <= 1e-10, "correlated tables differ by {worst_tables:e}");
    Ok(format!("20 sets: max change {worst:.1e}; correlated tables max diff {worst_tables:.1e}"))
}

fn preparation_discrimination() -> Outcome {
    let samples = 10_000;
    let opts = ScenarioOptions { samples, ..Default::default() };
    let mut lines = Vec::new();
    // |alpha|^2 N is an integer, so the pool fraction equals |alpha|^2
    for (a2, copies, seed) in [(0.36, 25usize, 1u64), (0.5, 10, 2), (0.2, 5, 3)] {
        let (alpha, beta) = (C64::new(f64::sqrt(a2), 0.0), C64::new(f64::sqrt(1.0 - a2), 0.0));
        let r = run_preparation_discrimination(alpha, beta, copies, seed, &opts).map_err(|e| e.to_string())?;
        let pure = table_prob(&r, "pure/rotated", "chi1");
        ensure!((pure - 1.0).abs() <= 1e-12, "pure rotated outcome-1 probability {pure}");
        let ideal = a2 * a2 + (1.0 - a2) * (1.0 - a2);
        let mix = table_prob(&r, "mixture/rotated", "chi1");
        ensure!((mix - ideal).abs() <= 1e-10, "mixture exact {mix} vs {ideal}");
        let freq = r
            .sampled_table("mixture/rotated")
            .and_then(|t| t.rows.first())
            .map(|row| row.frequency)
            .ok_or("sampled mixture table missing")?;
        let sigma = (ideal * (1.0 - ideal) / samples as f64).sqrt();
        let z = (freq - ideal).abs() / sigma;
        ensure!(z <= 3.0, "mixture Monte Carlo {freq} is {z:.2} sigma from {ideal}");
        lines.push(format!("a2={a2}: {z:.2} sigma"));
    }
    Ok(format!("pure = 1, mixture = a^4 + b^4 exactly; MC {}", lines.join(", ")))
}

fn hourglass_stability() -> Outcome {
    let start = Instant::now();
    let (mut max_f, mut min_g, mut sum_g, mut below): (f64, f64, f64, usize) = (0.0, 1.0, 0.0, 0);
    for seed in 0..100u64 {
        let run = simulate_hourglass(100, 1.0, DropDistribution::Uniform, seed).map_err(|e| e.to_string())?;
        ensure!(run.f_switches == 1, "seed {seed}: f switches {}", run.f_switches);
        ensure!(run.g_switches == 100, "seed {seed}: g switches {}", run.g_switches);
        let s = stability_metrics(&run, 0.01, 100, seed + 1000).map_err(|e| e.to_string())?;
        ensure!(
            s.f_disagreement < s.g_disagreement,
            "seed {seed}: f {} not below g {}",
            s.f_disagreement,
            s.g_disagreement
        );
        max_f = max_f.max(s.f_disagreement);
        min_g = min_g.min(s.g_disagreement);
        sum_g += s.g_disagreement;
        below += usize::from(s.g_disagreement < 0.3);
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure!(max_f <= 0.05, "max f-disagreement {max_f}");
    ensure!(
        min_g >= 0.3,
        "g-disagreement below 0.3 in {below}/100 seeds (min {min_g:.4}, mean {:.4})",
        sum_g / 100.0
    );
    ensure!(elapsed <= 10.0, "runtime {elapsed:.1} s");
    Ok(format!("100 seeds: max f-dis {max_f:.4}, min g-dis {min_g:.4}, {elapsed:.2} s"))
}

fn sum_rule() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4004);
    let mut sets = consistent_sets(&mut rng);
    for n in 1..=4 {
        sets.push(full_quantum_set(C64::new(0.6, 0.0), C64::new(0.0, 0.8), n).map_err(|e| e.to_string())?);
    }
    let mut worst: f64 = 0.0;
    for set in &sets {
        let d = decoherence_functional(set).map_err(|e| e.to_string())?;
        let report = check_consistency(&d, 1e-8).map_err(|e| e.to_string())?;
        ensure!(report.consistent, "suite set is inconsistent");
        let fine = branch_probabilities(&d, &report).map_err(|e| e.to_string())?;
        let mut hs: Vec<History> = set.histories().collect();
        for _ in 0..10 {
            hs.shuffle(&mut rng);
            let blocks = rng.random_range(1..=hs.len());
            let mut groups: Vec<Vec<History>> = hs[..blocks].iter().map(|h| vec![h.clone()]).collect();
            for h in &hs[blocks..] {
                let k = rng.random_range(0..blocks);
                groups[k].push(h.clone());
            }
            let coarse = coarse_grain(&d, &groups, None).map_err(|e| e.to_string())?;
            let creport = check_consistency(&coarse, 1e-8).map_err(|e| e.to_string())?;
            let cp = branch_probabilities(&coarse, &creport).map_err(|e| e.to_string())?;
            for (k, g) in groups.iter().enumerate() {
                let sum: f64 = g.iter().map(|h| fine.get(h).unwrap()).sum();
                worst = worst.max((cp.probabilities[k] - sum).abs());
            }
        }
    }
    ensure!(worst <= 1e-10, "max sum-rule violation {worst:e}");
    Ok(format!("{} sets x 10 partitions: max violation {worst:.1e}", sets.len()))
}

fn strip_timestamp(text: &str) -> String {
    text.lines().filter(|l| !l.trim_start().starts_with("\"generated_at\"")).collect::<Vec<_>>().join("\n")
}

fn determinism() -> Outcome {
    let names = [
        "gambling",
        "state-estimation",
        "preparation-discrimination",
        "theory-discrimination",
        "canonical-observer",
        "hourglass",
        "z-then-x",
        "xor-automaton",
    ];
    let mut compared = 0;
    for name in names {
        let path = configs().join(format!("{name}.json"));
        let mut texts = Vec::new();
        for _ in 0..2 {
            let out = tempfile::tempdir().unwrap();
            let (code, _) = run_cli(&["run", "--seed", "17", path.to_str().unwrap()], out.path());
            ensure!(code == 0 || code == 2, "{name}: exit {code}");
            texts.push(std::fs::read_to_string(out.path().join(name).join("report.json")).unwrap());
        }
        ensure!(texts[0].contains("\"generated_at\""), "{name}: no timestamp field");
        ensure!(strip_timestamp(&texts[0]) == strip_timestamp(&texts[1]), "{name}: reports differ");
        compared += 1;
    }
    Ok(format!("{compared} configs byte-identical modulo generated_at"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("consistency engine vs dense trace oracle", consistency_engine_vs_oracle),
        ("inconsistent-set detection and refusal", inconsistent_set_detection),
        ("gambling expected winnings and decision", gambling_winnings),
        ("product law of estimation branches", product_law),
        ("quantum vs classical theory discrimination", theory_discrimination),
        ("canonical observer and correlated families", canonical_observer),
        ("pure vs mixture preparation discrimination", preparation_discrimination),
        ("hourglass switch counts and stability", hourglass_stability),
        ("coarse-graining sum rule", sum_rule),
        ("CLI determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail} ({secs:.2} s)", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL [{:>2}] {name}: {detail} ({secs:.2} s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    let strict = std::env::var("CHIST_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if failures > 0 && strict {
        std::process::exit(1);
    }
}
