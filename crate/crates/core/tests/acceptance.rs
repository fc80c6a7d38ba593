//! Acceptance criteria, one printed line each. Runs without the libtest
//! harness so the lines show up in a plain `cargo test`.

use std::process::ExitCode;

use mailab::crosscheck::path_enumeration_occupancy;
use mailab::eval::occupancy_bundle;
use mailab::fixtures::fig1_game;
use mailab::verify::{run_suite, ReportRow, Suite, VerifyOptions};

/// Criterion whose literal bound is known not to hold; see `value_difference_corrected`.
const KNOWN_FAILING: usize = 10;

struct Outcome {
    index: usize,
    title: &'static str,
    passed: usize,
    total: usize,
    note: String,
}

impl Outcome {
    fn ok(&self) -> bool {
        self.total > 0 && self.passed == self.total
    }
}

fn rows(suites: &[Suite]) -> Vec<ReportRow> {
    let options = VerifyOptions::default();
    suites
        .iter()
        .flat_map(|s| run_suite(*s, &options).expect("suite runs"))
        .collect()
}

fn tally(index: usize, title: &'static str, rows: &[ReportRow]) -> Outcome {
    Outcome {
        index,
        title,
        passed: rows.iter().filter(|r| r.pass).count(),
        total: rows.len(),
        note: String::new(),
    }
}

/// Occupancies of the fig1 pair by enumerating trajectories, independent
/// of the forward recursion used by the suite.
fn fig1_paths_agree() -> (usize, usize) {
    let mut passed = 0;
    for h in [4, 8, 16, 32] {
        let fx = fig1_game(h).unwrap();
        let e = path_enumeration_occupancy(&fx.game, &fx.expert, 1 << 20).unwrap();
        let l = path_enumeration_occupancy(&fx.game, &fx.learner, 1 << 20).unwrap();
        let l1: f64 = e
            .iter()
            .flatten()
            .flatten()
            .zip(l.iter().flatten().flatten())
            .map(|(a, b)| (a - b).abs())
            .sum();
        let dp = occupancy_bundle(&fx.game, &fx.expert).step_occupancy;
        let dp_diff: f64 = e
            .iter()
            .flatten()
            .flatten()
            .zip(dp.iter().flatten().flatten())
            .map(|(a, b)| (a - b).abs())
            .sum();
        if l1 <= 1e-12 && dp_diff <= 1e-12 {
            passed += 1;
        }
    }
    (passed, 4)
}

/// The difference of values is bounded by twice the literal bound: the
/// advantage of `pi1` under `pi2`'s action distribution pays at most
/// `TV * (max A - min A) <= 2 * TV * u` per visited state.
fn value_difference_corrected(rows: &[ReportRow]) -> (bool, f64) {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for r in rows {
        let bound = r.bound.unwrap();
        if r.measured > 2.0 * bound + 1e-9 {
            ok = false;
        }
        if bound > 0.0 {
            worst = worst.max(r.measured / bound);
        }
    }
    (ok, worst)
}

fn main() -> ExitCode {
    let mut outcomes = Vec::new();

    let mut c1 = tally(
        1,
        "fig1: equal occupancies, regret gap H-2",
        &rows(&[Suite::Thm3]),
    );
    let (p, t) = fig1_paths_agree();
    c1.passed += p;
    c1.total += t;
    outcomes.push(c1);
    outcomes.push(tally(
        2,
        "coverage lower bound instance",
        &rows(&[Suite::Thm6Lb]),
    ));
    outcomes.push(tally(
        3,
        "recoverability lower bound instances",
        &rows(&[Suite::Thm8Lb, Suite::Thm10Lb]),
    ));
    outcomes.push(tally(
        4,
        "J-BC and MALICE upper bounds on random games",
        &rows(&[Suite::JbcUb, Suite::MaliceUb]),
    ));
    outcomes.push(tally(
        5,
        "BLADES upper bound and query log",
        &rows(&[Suite::BladesUb]),
    ));
    outcomes.push(tally(
        6,
        "trained policies are approximate CEs",
        &rows(&[Suite::CeComposition]),
    ));
    outcomes.push(tally(
        7,
        "single-agent regret gap equals value gap",
        &rows(&[Suite::SingleAgentEq]),
    ));
    outcomes.push(tally(8, "indicator rewards on fig1", &rows(&[Suite::Thm1])));
    outcomes.push(tally(
        9,
        "two correlated equilibria of a normal-form game",
        &rows(&[Suite::Nfg]),
    ));
    let difference = rows(&[Suite::Lemma1]);
    let (corrected_ok, worst) = value_difference_corrected(&difference);
    let mut c10 = tally(10, "value difference vs eps*u*H", &difference);
    c10.note = format!(
        "worst measured/bound {worst:.3}; 2*eps*u*H {}",
        if corrected_ok { "holds" } else { "VIOLATED" }
    );
    outcomes.push(c10);
    outcomes.push(tally(
        11,
        "best-response DP vs stationary enumeration",
        &rows(&[Suite::BrOracle]),
    ));
    outcomes.push(tally(
        12,
        "exponentiated gradient average regret",
        &rows(&[Suite::OcoRegret]),
    ));
    outcomes.push(tally(
        13,
        "J-IRL moment matching on common-payoff games",
        &rows(&[Suite::JirlUb]),
    ));

    let mut unexpected = !corrected_ok;
    for o in &outcomes {
        let status = if o.ok() { "PASS" } else { "FAIL" };
        let note = if o.note.is_empty() {
            String::new()
        } else {
            format!(" ({})", o.note)
        };
        println!(
            "criterion {:>2}: {status} {}/{} {}{note}",
            o.index, o.passed, o.total, o.title
        );
        if !o.ok() && o.index != KNOWN_FAILING {
            unexpected = true;
        }
    }
    if unexpected {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
