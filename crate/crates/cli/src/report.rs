//! Text and CSV renderings of reports, rankings and the summary row.

use std::fmt::Write as _;

use gambit_core::catalog::{self, CatalogEntry};
use gambit_core::chess::Color;
use gambit_core::eval::{win_probability, GambiteerEval};
use gambit_core::metrics::{
    aggregate_summary, rank_gambits, GambitReport, ProbabilityMode, RankKey, SummaryRow,
};

/// Skew differences beyond this are flagged against reference values.
pub const SKEW_FLAG: f64 = 0.05;

/// Which statistics order the skew ranking.
#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SkewBasis {
    /// Skewness and spread of the per-reply products P·w.
    Outcome,
    /// Probability-weighted moments of the reply win probabilities.
    Moment,
}

pub type OutputFile = (String, Vec<u8>);

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn pawns(q: GambiteerEval) -> String {
    q.pawns().map(f6).unwrap_or_default()
}

fn pct(x: f64) -> String {
    format!("{:.1}%", x * 100.0)
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

fn color_name(c: Color) -> &'static str {
    match c {
        Color::White => "white",
        Color::Black => "black",
    }
}

/// The catalog entry describing the same line, if any.
pub fn reference_for(report: &GambitReport) -> Option<&'static CatalogEntry> {
    let e = catalog::entry(&report.spec.name)?;
    let same = e.spec().mainline().ok()? == report.spec.mainline().ok()?;
    same.then_some(e)
}

fn gambit_move(report: &GambitReport) -> String {
    let ply = report.spec.gambit_ply;
    let san = report
        .series
        .get(ply)
        .map(|p| p.san.clone())
        .unwrap_or_default();
    let number = ply.div_ceil(2);
    let dots = if ply % 2 == 1 { "." } else { "..." };
    format!("{number}{dots}{san}")
}

fn weights(report: &GambitReport) -> Vec<f64> {
    let p: Vec<f64> = report.rows.iter().map(|r| r.probability).collect();
    match report.mode {
        ProbabilityMode::Raw => p,
        ProbabilityMode::Renormalized => {
            let total: f64 = p.iter().sum();
            p.iter().map(|x| if total > 0.0 { x / total } else { 0.0 }).collect()
        }
    }
}

struct Flags {
    reference_skew: f64,
    reference_volatility: f64,
    moment_delta: f64,
    outcome_delta: f64,
}

fn flags(report: &GambitReport) -> Option<Flags> {
    let t = reference_for(report)?.table?;
    let s = report.stats.as_ref()?;
    Some(Flags {
        reference_skew: t.skew,
        reference_volatility: t.volatility,
        moment_delta: s.skewness - t.skew,
        outcome_delta: s.outcome.skew - t.skew,
    })
}

fn flag_word(delta: f64) -> &'static str {
    if delta.abs() > SKEW_FLAG {
        "FLAG"
    } else {
        "ok"
    }
}

pub fn render_text(report: &GambitReport, title: Option<&str>) -> String {
    let mut out = String::new();
    let name = &report.spec.name;
    let _ = match title {
        Some(t) => writeln!(out, "{t} ({name})"),
        None => writeln!(out, "{name}"),
    };
    let line = |out: &mut String, k: &str, v: String| {
        let _ = writeln!(out, "{k:<20}{v}");
    };
    line(&mut out, "Mainline", report.spec.movetext.clone());
    line(
        &mut out,
        "Gambit move",
        format!(
            "{} (ply {}, {})",
            gambit_move(report),
            report.spec.gambit_ply,
            color_name(report.spec.gambiteer)
        ),
    );
    let depth = report.depth.map_or("-".to_string(), |d| d.to_string());
    line(&mut out, "Engine", format!("{}, depth {depth}", report.engine));
    line(&mut out, "Corpus", report.corpus.clone());
    line(&mut out, "Probability mode", report.mode.to_string());
    out.push('\n');

    line(&mut out, "Pre-gambit Q", report.pre_gambit_q.to_string());
    line(&mut out, "Initial Q", report.initial_q.to_string());
    line(&mut out, "Current Q", report.current_q.to_string());
    line(
        &mut out,
        "T(G)",
        report.test_statistic.map_or("-".to_string(), |t| format!("{t:+.2}")),
    );
    line(
        &mut out,
        "Bellman check",
        match report.bellman {
            Some(b) if b.consistent => "consistent".to_string(),
            Some(b) => format!("violated, gap {:.2}", b.gap),
            None => "-".to_string(),
        },
    );
    line(
        &mut out,
        "Classification",
        match report.classification {
            Some(c) => format!(
                "{} (strict: {})",
                c.verdict.as_str(),
                if c.strict { "yes" } else { "no" }
            ),
            None => "-".to_string(),
        },
    );

    if !report.rows.is_empty() {
        out.push('\n');
        let _ = writeln!(out, "{:<10}{:>12}{:>10}{:>10}{:>10}", "Reply", "Q", "Player", "Weight", "Win");
        for (r, w) in report.rows.iter().zip(weights(report)) {
            let _ = writeln!(
                out,
                "{:<10}{:>12}{:>10}{:>10}{:>10}",
                r.label,
                r.q.to_string(),
                pct(r.probability),
                pct(w),
                pct(r.win_prob)
            );
        }
    }

    if let Some(s) = &report.stats {
        out.push('\n');
        line(&mut out, "Q*", format!("{:.4}", s.q_star));
        line(&mut out, "Volatility", format!("{:.4}", s.volatility));
        line(&mut out, "Skewness", format!("{:+.4}", s.skewness));
        line(
            &mut out,
            "Weighted win prob",
            format!("{} raw, {} renorm", pct(s.weighted_win_prob_raw), pct(s.weighted_win_prob_renorm)),
        );
        line(&mut out, "Outcome volatility", format!("{:.4}", s.outcome.sd));
        line(&mut out, "Outcome skewness", format!("{:+.4}", s.outcome.skew));
        if let Some(m) = s.pawn_moments {
            line(
                &mut out,
                "Pawn moments",
                format!("mean {:+.4}, sd {:.4}, skew {:+.4}", m.mean, m.sd, m.skew),
            );
        }
    }

    if let Some(f) = flags(report) {
        out.push('\n');
        line(
            &mut out,
            "Reference",
            format!("skew {:+.2}, volatility {:.3}", f.reference_skew, f.reference_volatility),
        );
        line(
            &mut out,
            "  skewness delta",
            format!("{:+.4} {}", f.moment_delta, flag_word(f.moment_delta)),
        );
        line(
            &mut out,
            "  outcome delta",
            format!("{:+.4} {}", f.outcome_delta, flag_word(f.outcome_delta)),
        );
    }
    out
}

pub fn render_stats_csv(report: &GambitReport) -> Vec<u8> {
    let mut kv: Vec<(&str, String)> = vec![
        ("name", report.spec.name.clone()),
        ("engine", report.engine.clone()),
        ("depth", report.depth.map(|d| d.to_string()).unwrap_or_default()),
        ("corpus", report.corpus.clone()),
        ("mode", report.mode.to_string()),
        ("gambit_ply", report.spec.gambit_ply.to_string()),
        ("gambiteer", color_name(report.spec.gambiteer).to_string()),
        ("pre_gambit_q", report.pre_gambit_q.to_string()),
        ("initial_q", report.initial_q.to_string()),
        ("current_q", report.current_q.to_string()),
        ("test_statistic", report.test_statistic.map(f6).unwrap_or_default()),
        (
            "bellman",
            report
                .bellman
                .map(|b| if b.consistent { "consistent" } else { "violated" }.to_string())
                .unwrap_or_default(),
        ),
        ("bellman_gap", report.bellman.map(|b| f6(b.gap)).unwrap_or_default()),
        (
            "classification",
            report.classification.map(|c| c.verdict.as_str().to_string()).unwrap_or_default(),
        ),
        (
            "strict",
            report.classification.map(|c| c.strict.to_string()).unwrap_or_default(),
        ),
    ];
    if let Some(s) = &report.stats {
        kv.extend([
            ("q_star", f6(s.q_star)),
            ("volatility", f6(s.volatility)),
            ("skewness", f6(s.skewness)),
            ("weighted_win_prob_raw", f6(s.weighted_win_prob_raw)),
            ("weighted_win_prob_renorm", f6(s.weighted_win_prob_renorm)),
            ("outcome_volatility", f6(s.outcome.sd)),
            ("outcome_skewness", f6(s.outcome.skew)),
        ]);
    }
    if let Some(f) = flags(report) {
        kv.extend([
            ("reference_skewness", f6(f.reference_skew)),
            ("reference_volatility", f6(f.reference_volatility)),
            ("skewness_delta", f6(f.moment_delta)),
            ("skewness_flag", (f.moment_delta.abs() > SKEW_FLAG).to_string()),
            ("outcome_skewness_delta", f6(f.outcome_delta)),
            ("outcome_skewness_flag", (f.outcome_delta.abs() > SKEW_FLAG).to_string()),
        ]);
    }
    csv_bytes(
        &["key", "value"],
        kv.into_iter().map(|(k, v)| vec![k.to_string(), v]).collect(),
    )
}

pub fn render_rows_csv(report: &GambitReport) -> Vec<u8> {
    let rows = report
        .rows
        .iter()
        .zip(weights(report))
        .map(|(r, w)| {
            vec![
                r.label.clone(),
                r.q.to_string(),
                pawns(r.q),
                f6(r.probability),
                f6(w),
                f6(r.win_prob),
            ]
        })
        .collect();
    csv_bytes(&["reply", "q", "q_pawns", "probability", "weight", "win_prob"], rows)
}

pub fn render_series_csv(report: &GambitReport) -> Vec<u8> {
    let rows = report
        .series
        .iter()
        .map(|p| {
            vec![
                p.ply.to_string(),
                p.san.clone(),
                p.q.to_string(),
                pawns(p.q),
                f6(p.q.win_prob().value()),
            ]
        })
        .collect();
    csv_bytes(&["ply", "san", "q", "q_pawns", "win_prob"], rows)
}

/// All files for one analysed gambit.
pub fn gambit_files(report: &GambitReport, title: Option<&str>) -> Vec<OutputFile> {
    let n = &report.spec.name;
    vec![
        (format!("{n}.txt"), render_text(report, title).into_bytes()),
        (format!("{n}.csv"), render_stats_csv(report)),
        (format!("{n}_rows.csv"), render_rows_csv(report)),
        (format!("{n}_series.csv"), render_series_csv(report)),
    ]
}

fn summary_pairs(s: &SummaryRow) -> Vec<(&'static str, String)> {
    vec![
        ("reports", s.reports.to_string()),
        ("current_q", f6(s.current_q)),
        ("pre_gambit_q", f6(s.pre_gambit_q)),
        ("continuation_q", f6(s.continuation_q)),
        ("skewness", f6(s.skewness)),
        ("volatility", f6(s.volatility)),
        ("outcome_skewness", f6(s.outcome_skew)),
        ("outcome_volatility", f6(s.outcome_volatility)),
        ("player_probability", f6(s.player_probability)),
        ("win_prob", f6(s.win_prob)),
        ("weighted_win_prob", f6(s.weighted_win_prob)),
        ("weighted_row_mean", f6(s.weighted_row_mean)),
        ("weighted_product_of_means", f6(s.weighted_product_of_means)),
    ]
}

fn skew_keys(basis: SkewBasis) -> (RankKey, RankKey) {
    match basis {
        SkewBasis::Outcome => (RankKey::OutcomeSkew, RankKey::OutcomeVolatility),
        SkewBasis::Moment => (RankKey::Skew, RankKey::Volatility),
    }
}

/// The pawns to win-probability curve from -10 to +10 in steps of 0.1.
pub fn winprob_curve() -> Vec<u8> {
    let rows = (-100..=100)
        .map(|i| {
            let c = f64::from(i) / 10.0;
            vec![format!("{c:.1}"), f6(win_probability(c))]
        })
        .collect();
    csv_bytes(&["pawns", "win_prob"], rows)
}

/// Ranking CSVs, the summary row and a text overview. `failures` lists
/// gambits that could not be analysed.
pub fn ranking_files(
    reports: &[GambitReport],
    failures: &[(String, String)],
    basis: SkewBasis,
) -> Vec<OutputFile> {
    let by_q = rank_gambits(reports, RankKey::InitialQ);
    let q_rows: Vec<Vec<String>> = by_q
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                (i + 1).to_string(),
                r.spec.name.clone(),
                r.initial_q.to_string(),
                pawns(r.initial_q),
                f6(r.initial_q.win_prob().value()),
                r.classification.map(|c| c.verdict.as_str().to_string()).unwrap_or_default(),
            ]
        })
        .collect();

    let (skew_key, _) = skew_keys(basis);
    let by_skew: Vec<&GambitReport> = rank_gambits(reports, skew_key)
        .into_iter()
        .filter(|r| r.stats.is_some())
        .collect();
    let skew_rows: Vec<Vec<String>> = by_skew
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let s = r.stats.as_ref().expect("filtered on stats");
            let (skew, vol) = match basis {
                SkewBasis::Outcome => (s.outcome.skew, s.outcome.sd),
                SkewBasis::Moment => (s.skewness, s.volatility),
            };
            vec![
                (i + 1).to_string(),
                r.spec.name.clone(),
                f6(skew),
                f6(vol),
                f6(s.skewness),
                f6(s.volatility),
                f6(s.outcome.skew),
                f6(s.outcome.sd),
            ]
        })
        .collect();

    let summary = aggregate_summary(reports);
    let summary_rows: Vec<Vec<String>> = summary
        .as_ref()
        .map(summary_pairs)
        .unwrap_or_default()
        .into_iter()
        .map(|(k, v)| vec![k.to_string(), v])
        .collect();

    let basis_name = match basis {
        SkewBasis::Outcome => "outcome",
        SkewBasis::Moment => "moment",
    };
    let mut text = String::new();
    let _ = writeln!(text, "Initial Q ranking");
    for r in &q_rows {
        let _ = writeln!(text, "{:>3}  {:<20}{:>12}  {}", r[0], r[1], r[2], r[5]);
    }
    let _ = writeln!(text, "\nSkew ranking ({basis_name} basis)");
    let _ = writeln!(text, "{:>3}  {:<20}{:>10}{:>10}", "", "", "skew", "vol");
    for r in &skew_rows {
        let skew: f64 = r[2].parse().unwrap_or(0.0);
        let vol: f64 = r[3].parse().unwrap_or(0.0);
        let _ = writeln!(text, "{:>3}  {:<20}{:>+10.3}{:>10.3}", r[0], r[1], skew, vol);
    }
    if let Some(s) = &summary {
        let _ = writeln!(text, "\nAverages over {} analysed lines", s.reports);
        for (k, v) in summary_pairs(s).into_iter().skip(1) {
            let _ = writeln!(text, "  {k:<28}{v}");
        }
    }
    if !failures.is_empty() {
        let _ = writeln!(text, "\nFailed");
        for (name, err) in failures {
            let _ = writeln!(text, "  {name}: {err}");
        }
    }

    let mut files = vec![
        (
            "ranking_q.csv".to_string(),
            csv_bytes(&["rank", "name", "initial_q", "initial_q_pawns", "win_prob", "classification"], q_rows),
        ),
        (
            "ranking_skew.csv".to_string(),
            csv_bytes(
                &[
                    "rank",
                    "name",
                    "skew",
                    "volatility",
                    "moment_skew",
                    "moment_volatility",
                    "outcome_skew",
                    "outcome_volatility",
                ],
                skew_rows,
            ),
        ),
        ("summary.csv".to_string(), csv_bytes(&["key", "value"], summary_rows)),
        ("ranking.txt".to_string(), text.into_bytes()),
    ];
    files.push(("winprob_curve.csv".to_string(), winprob_curve()));
    if !failures.is_empty() {
        let rows = failures.iter().map(|(n, e)| vec![n.clone(), e.clone()]).collect();
        files.push(("failures.csv".to_string(), csv_bytes(&["name", "error"], rows)));
    }
    files
}
