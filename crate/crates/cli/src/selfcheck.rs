//! Embedded property suites run by `gambit selfcheck`.

use gambit_core::catalog::CATALOG;
use gambit_core::chess::{perft, Position};
use gambit_core::eval::{cp_to_winprob, pawns_from_probability, PawnAdvantage, Perspective};
use gambit_core::mdp::{
    bellman_residual, brute_force_optimum, find_gambit_actions, random_mdp, seeded_gambit_mdp,
    solve,
};
use gambit_core::metrics::weighted_moments;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x6a6d_6269_7400;

/// Test hooks that deliberately break one component.
#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Perturbation {
    #[value(name = "cp_to_winprob")]
    CpToWinprob,
}

pub struct CheckResult {
    pub name: &'static str,
    pub outcome: Result<String, String>,
}

impl CheckResult {
    pub fn line(&self) -> String {
        match &self.outcome {
            Ok(msg) => format!("PASS {}: {msg}", self.name),
            Err(msg) => format!("FAIL {}: {msg}", self.name),
        }
    }
}

pub fn run(perturb: Option<Perturbation>) -> Vec<CheckResult> {
    let conv: fn(f64) -> f64 = match perturb {
        None => convert,
        Some(Perturbation::CpToWinprob) => convert_perturbed,
    };
    vec![
        CheckResult { name: "cp_to_winprob", outcome: check_conversion(conv) },
        CheckResult { name: "weighted_moments", outcome: check_moments() },
        CheckResult { name: "mdp_solve", outcome: check_mdp() },
        CheckResult { name: "perft", outcome: check_perft() },
        CheckResult { name: "mainlines", outcome: check_mainlines() },
    ]
}

fn convert(c: f64) -> f64 {
    cp_to_winprob(PawnAdvantage::new(c, Perspective::SideToMove).expect("finite")).value()
}

fn convert_perturbed(c: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf(-c / 4.1))
}

fn check_conversion(conv: fn(f64) -> f64) -> Result<String, String> {
    let anchors = [(0.0, 0.5), (4.0, 10.0 / 11.0), (-4.0, 1.0 / 11.0), (8.0, 100.0 / 101.0)];
    for (c, w) in anchors {
        let got = conv(c);
        if (got - w).abs() > 1e-12 {
            return Err(format!("{c:+} pawns gives {got:.15}, expected {w:.15}"));
        }
    }
    let w = conv(0.2);
    if !(0.523..=0.529).contains(&w) {
        return Err(format!("+0.2 pawns gives {w:.4}"));
    }
    let mut worst: f64 = 0.0;
    for i in 1..=99 {
        let w = f64::from(i) / 100.0;
        worst = worst.max((conv(pawns_from_probability(w)) - w).abs());
    }
    if worst >= 1e-12 {
        return Err(format!("roundtrip error {worst:.3e}"));
    }
    for i in 0..=80 {
        let c = f64::from(i) / 10.0;
        if (conv(c) + conv(-c) - 1.0).abs() > 1e-12 {
            return Err(format!("asymmetric at {c}"));
        }
    }
    Ok(format!("anchors exact, roundtrip error {worst:.1e}"))
}

fn naive_moments(p: &[f64], x: &[f64]) -> (f64, f64, f64) {
    let mut mean = 0.0;
    for i in 0..p.len() {
        mean += p[i] * x[i];
    }
    if x.iter().all(|&v| v == x[0]) {
        return (mean, 0.0, 0.0);
    }
    let mut var = 0.0;
    for i in 0..p.len() {
        let d = x[i] - mean;
        var += p[i] * d * d;
    }
    let sd = var.sqrt();
    let mut skew = 0.0;
    if sd > 0.0 {
        for i in 0..p.len() {
            let z = (x[i] - mean) / sd;
            skew += p[i] * z * z * z;
        }
    }
    (mean, sd, skew)
}

fn check_moments() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for trial in 0..1000 {
        let n = rng.gen_range(1..=8);
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let scale = rng.gen_range(0.2..1.0) / total;
        let p: Vec<f64> = raw.iter().map(|v| v * scale).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let m = weighted_moments(&p, &x);
        let (mean, sd, skew) = naive_moments(&p, &x);
        let err = (m.mean - mean).abs().max((m.sd - sd).abs()).max((m.skew - skew).abs());
        if err > 1e-12 {
            return Err(format!("trial {trial}: deviation {err:.3e}"));
        }
    }
    let m = weighted_moments(&[0.25, 0.5, 0.25], &[0.2, 0.5, 0.8]);
    if m.skew.abs() >= 1e-12 {
        return Err(format!("symmetric input has skew {:.3e}", m.skew));
    }
    Ok("1000 distributions agree to 1e-12".to_string())
}

fn check_mdp() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for trial in 0..200 {
        let n = rng.gen_range(1..=4);
        let mdp = random_mdp(&mut rng, n, 3, 0.9);
        let q = solve(&mdp).map_err(|e| format!("trial {trial}: {e}"))?;
        let (_, best) = brute_force_optimum(&mdp, 1e-9).map_err(|e| format!("trial {trial}: {e}"))?;
        let v = q.values();
        let err = v.iter().zip(&best).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if err > 1e-8 {
            return Err(format!("trial {trial}: value gap {err:.3e}"));
        }
        let r = bellman_residual(&mdp, &q);
        if r >= 1e-10 {
            return Err(format!("trial {trial}: residual {r:.3e}"));
        }
    }
    let seeded = seeded_gambit_mdp();
    let q = solve(&seeded).map_err(|e| e.to_string())?;
    let found = find_gambit_actions(&seeded, &q);
    if found != [(0, 1)] {
        return Err(format!("seeded gambit detection found {found:?}"));
    }
    Ok("200 random MDPs match enumeration, seeded gambit found".to_string())
}

fn check_perft() -> Result<String, String> {
    let expected = [20u64, 400, 8902, 197_281];
    let start = Position::startpos();
    for (d, want) in (1..).zip(expected) {
        let got = perft(&start, d);
        if got != want {
            return Err(format!("depth {d}: {got}, expected {want}"));
        }
    }
    Ok("start position depths 1-4".to_string())
}

fn check_mainlines() -> Result<String, String> {
    for e in CATALOG {
        e.spec().mainline().map_err(|err| format!("{}: {err}", e.name))?;
    }
    Ok(format!("{} catalog lines parse", CATALOG.len()))
}
