//! Verification suites. Each suite rebuilds its instances from seeds, runs
//! the exact evaluators and learners, and emits one report row per check.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rand::Rng as _;
use serde::Serialize;

use crate::algorithms::{
    blades_train, j_bc, j_irl, malice_train, Algorithm, DemoSource, ExpertData, FillRule,
    JirlOptions, TrainConfig,
};
use crate::crosscheck::{best_fixed_single_state, layered_stationary_best_gain};
use crate::error::{Error, Result};
use crate::eval::{
    advantage_tensor, best_response_deviation, coverage_constant, is_approx_ce, layer_coverage,
    moment_matching_error, occupancy_bundle, occupancy_l1, recoverability_constant, regret,
    regret_gap, state_distribution, value, value_gap, weighted_tv_loss, RecoverabilityMode,
};
use crate::fixtures::{
    alice_lb_game, by_name, coverage_lb_game, fig1_game, multi_ce_nfg, random_deviations,
    random_mg, random_policy, Fixture, FixtureArgs, RandomGameSpec,
};
use crate::game::{DeviationClass, MediatorPolicy};
use crate::losses::{bc_loss, malice_loss, CompositeMaxLoss, WeightedTvLoss};
use crate::oco::{oco_run, OcoConfig};
use crate::oracle::ExpertOracle;
use crate::sampling::{derive_seed, rng_from_seed, sample_demonstrations};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const BOUND_SLACK: f64 = 1e-6;
pub const DEFAULT_BASE_SEED: u64 = 20240611;

/// One check. Columns are fixed; `fixture` carries `name#check`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReportRow {
    pub schema_version: u32,
    pub suite: String,
    pub fixture: String,
    pub algo: String,
    #[serde(rename = "H")]
    pub horizon: Option<usize>,
    pub m: Option<usize>,
    pub beta: Option<f64>,
    pub u: Option<f64>,
    pub eps: Option<f64>,
    #[serde(rename = "N")]
    pub rounds: Option<usize>,
    pub seed: Option<u64>,
    pub value_gap: Option<f64>,
    pub regret_gap: Option<f64>,
    pub bound: Option<f64>,
    pub expected: Option<f64>,
    pub measured: f64,
    pub pass: bool,
    pub runtime_ms: f64,
}

impl ReportRow {
    fn new(suite: Suite, fixture: impl Into<String>, check: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            suite: suite.name().to_string(),
            fixture: format!("{}#{check}", fixture.into()),
            algo: "none".into(),
            ..Self::default()
        }
    }

    fn algo(mut self, algo: &str) -> Self {
        self.algo = algo.into();
        self
    }

    /// `|measured - expected| <= tol`.
    fn equals(mut self, measured: f64, expected: f64, tol: f64) -> Self {
        self.measured = measured;
        self.expected = Some(expected);
        self.pass = (measured - expected).abs() <= tol;
        self
    }

    /// `measured <= bound + slack`; the stored bound excludes the slack.
    fn at_most(mut self, measured: f64, bound: f64, slack: f64) -> Self {
        self.measured = measured;
        self.bound = Some(bound);
        self.pass = measured <= bound + slack;
        self
    }

    fn holds(mut self, measured: f64, ok: bool) -> Self {
        self.measured = measured;
        self.pass = ok;
        self
    }

    fn timed(mut self, start: Instant) -> Self {
        self.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        self
    }
}

pub fn write_report<W: Write>(writer: W, rows: &[ReportRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suite {
    Thm3,
    Thm5Lb,
    Thm6Lb,
    Thm8Lb,
    Thm10Lb,
    SingleAgentEq,
    Nfg,
    MaliceUb,
    BladesUb,
    JbcUb,
    JirlUb,
    Lemma1,
    OcoRegret,
    CeComposition,
    Thm1,
    BrOracle,
}

impl Suite {
    pub const ALL: [Suite; 16] = [
        Suite::Thm3,
        Suite::Thm5Lb,
        Suite::Thm6Lb,
        Suite::Thm8Lb,
        Suite::Thm10Lb,
        Suite::SingleAgentEq,
        Suite::Nfg,
        Suite::MaliceUb,
        Suite::BladesUb,
        Suite::JbcUb,
        Suite::JirlUb,
        Suite::Lemma1,
        Suite::OcoRegret,
        Suite::CeComposition,
        Suite::Thm1,
        Suite::BrOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Thm3 => "thm3",
            Suite::Thm5Lb => "thm5-lb",
            Suite::Thm6Lb => "thm6-lb",
            Suite::Thm8Lb => "thm8-lb",
            Suite::Thm10Lb => "thm10-lb",
            Suite::SingleAgentEq => "single-agent-eq",
            Suite::Nfg => "nfg",
            Suite::MaliceUb => "malice-ub",
            Suite::BladesUb => "blades-ub",
            Suite::JbcUb => "jbc-ub",
            Suite::JirlUb => "jirl-ub",
            Suite::Lemma1 => "lemma1",
            Suite::OcoRegret => "oco-regret",
            Suite::CeComposition => "ce-composition",
            Suite::Thm1 => "thm1",
            Suite::BrOracle => "br-oracle",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "coverage" {
            return Ok(Suite::Thm6Lb);
        }
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Tolerance of closed-form equalities.
    pub tolerance: f64,
    pub base_seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            base_seed: DEFAULT_BASE_SEED,
        }
    }
}

pub fn run_suite(suite: Suite, options: &VerifyOptions) -> Result<Vec<ReportRow>> {
    if !(options.tolerance > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    match suite {
        Suite::Thm3 => thm3(options),
        Suite::Thm5Lb => thm5_lb(options),
        Suite::Thm6Lb => thm6_lb(options),
        Suite::Thm8Lb => alice_lb_suite(Suite::Thm8Lb, options),
        Suite::Thm10Lb => alice_lb_suite(Suite::Thm10Lb, options),
        Suite::SingleAgentEq => single_agent_eq(options),
        Suite::Nfg => nfg(options),
        Suite::MaliceUb => property_suite(Suite::MaliceUb, options),
        Suite::BladesUb => property_suite(Suite::BladesUb, options),
        Suite::JbcUb => property_suite(Suite::JbcUb, options),
        Suite::CeComposition => property_suite(Suite::CeComposition, options),
        Suite::JirlUb => jirl_ub(options),
        Suite::Lemma1 => lemma1(options),
        Suite::OcoRegret => oco_regret(options),
        Suite::Thm1 => thm1(options),
        Suite::BrOracle => br_oracle(options),
    }
}

fn with_fixture(mut row: ReportRow, fx: &Fixture) -> ReportRow {
    row.horizon = Some(fx.game.horizon);
    row.m = Some(fx.game.num_agents);
    row.beta = fx.param("beta");
    row.u = fx.param("u");
    row.eps = fx.param("eps");
    row
}

fn thm3(options: &VerifyOptions) -> Result<Vec<ReportRow>> {
    let suite = Suite::Thm3;
    let mut rows = Vec::new();
    for h in [4, 8, 16, 32] {
        let start = Instant::now();
        let fx = fig1_game(h)?;
        let class = DeviationClass::complete(2);
        let e = occupancy_bundle(&fx.game, &fx.expert);
        let l = occupancy_bundle(&fx.game, &fx.learner);
        let occ: f64 = e
            .step_occupancy
            .iter()
            .zip(&l.step_occupancy)
            .map(|(a, b)| occupancy_l1(a, b))
            .sum();
        let gap = regret_gap(&fx.game, &fx.expert, &fx.learner, &class)?;
        let vgap = value_gap(&fx.game, &fx.expert, &fx.learner);
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        let base = |check: &str| {
            let mut row = with_fixture(ReportRow::new(suite, "fig1", check), &fx);
            row.regret_gap = Some(gap);
            row.value_gap = Some(vgap);
            row.runtime_ms = elapsed;
            row
        };
        rows.push(base("occupancy_l1").at_most(occ, 0.0, 1e-12));
        rows.push(base("regret_gap").equals(gap, (h - 2) as f64, options.tolerance));
        rows.push(base("runtime_ms").at_most(elapsed, 1000.0, 0.0));
    }
    Ok(rows)
}

fn thm5_lb(options: &VerifyOptions) -> Result<Vec<ReportRow>> {
    let suite = Suite::Thm5Lb;
    let mut rows = Vec::new();
    for h in [4, 8, 16, 32] {
        let start = Instant::now();
        let fx = fig1_game(h)?;
        let class = DeviationClass::complete(2);
        let learner = j_bc(
            &fx.game,
            ExpertData::Exact(&fx.expert),
            &FillRule::Adversarial(class.clone()),
        )?;
        let d_e = state_distribution(&fx.game, &fx.expert);
        let bc = bc_loss(&fx.expert, &learner, &d_e)?;
        let gap = regret_gap(&fx.game, &fx.expert, &learner, &class)?;
        let base = |check: &str| {
            let mut row = with_fixture(ReportRow::new(suite, "fig1", check), &fx).algo("jbc");
            row.regret_gap = Some(gap);
            row.value_gap = Some(value_gap(&fx.game, &fx.expert, &learner));
            row.eps = Some(bc);
            row
        };
        rows.push(
            base("bc_loss")
                .equals(bc, 0.0, options.tolerance)
                .timed(start),
        );
        rows.push(
            base("regret_gap")
                .equals(gap, (h - 2) as f64, options.tolerance)
                .timed(start),
        );
    }
    Ok(rows)
}

fn thm6_lb(options: &VerifyOptions) -> Result<Vec<ReportRow>> {
    let suite = Suite::Thm6Lb;
    let start = Instant::now();
    let (h, u, beta, eps) = (20, 10.0, 0.05, 0.001);
    let fx = coverage_lb_game(h, u, beta, eps)?;
    let class = DeviationClass::complete(2);
    let d_e = state_distribution(&fx.game, &fx.expert);
    let bc = weighted_tv_loss(&fx.expert, &fx.learner, &d_e)?;
    let moment = moment_matching_error(&fx.game, &fx.expert, &fx.learner, true);
    let gap = regret_gap(&fx.game, &fx.expert, &fx.learner, &class)?;
    let u_floor = u.floor();
    let expected_gap = eps * h as f64 / (2.0 * beta) * (u_floor - 2.0);
    let u_measured = recoverability_constant(
        &fx.game,
        &fx.expert,
        &class,
        RecoverabilityMode::BestResponse,
    )?;
    let base = |check: &str| {
        let mut row = with_fixture(ReportRow::new(suite, "coverage-lb", check), &fx);
        row.regret_gap = Some(gap);
        row.value_gap = Some(value_gap(&fx.game, &fx.expert, &fx.learner));
        row
    };
    Ok(vec![
        base("bc_error")
            .equals(bc, eps, options.tolerance)
            .timed(start),
        base("moment_error")
            .at_most(moment, 2.0 * eps, options.tolerance)
            .timed(start),
        base("regret_gap")
            .equals(gap, expected_gap, options.tolerance)
            .timed(start),
        base("layer_coverage")
            .holds(
                layer_coverage(&fx.game, &fx.expert),
                layer_coverage(&fx.game, &fx.expert) >= beta - options.tolerance,
            )
            .timed(start),
        base("recoverability")
            .at_most(u_measured, u_floor, options.tolerance)
            .timed(start),
    ])
}

fn alice_lb_suite(suite: Suite, options: &VerifyOptions) -> Result<Vec<ReportRow>> {
    let start = Instant::now();
    let (h, u, beta, eps) = (20, 6.0, 0.1, 0.005);
    let fx = alice_lb_game(h, u, beta, eps)?;
    let complete = DeviationClass::complete(1);
    let witness = fx.explicit_class();
    let gap = regret_gap(&fx.game, &fx.expert, &fx.learner, &complete)?;
    let vgap = value_gap(&fx.game, &fx.expert, &fx.learner);
    let deviated = crate::algorithms::deviated_distributions(
        &fx.game,
        &fx.learner,
        &witness,
        crate::algorithms::DensityMode::Exact,
        0,
    )?;
    let (algo, loss) = if suite == Suite::Thm8Lb {
        let d_e = state_distribution(&fx.game, &fx.expert);
        (
            "malice",
            malice_loss(&fx.expert, &fx.learner, &d_e, &deviated)?,
        )
    } else {
        let oracle = ExpertOracle::full_row(fx.expert.clone());
        (
            "blades",
            crate::losses::blades_loss(&oracle, 0, &fx.learner, &deviated)?,
        )
    };
    let expected_gap = eps * h as f64 * (u.floor() - 1.0);
    let base = |check: &str| {
        let mut row = with_fixture(ReportRow::new(suite, "alice-lb", check), &fx).algo(algo);
        row.regret_gap = Some(gap);
        row.value_gap = Some(vgap);
        row
    };
    Ok(vec![
        base("self_consistent_loss")
            .at_most(loss, eps, options.tolerance)
            .timed(start),
        base("regret_gap")
            .equals(gap, expected_gap, options.tolerance)
            .timed(start),
        base("regret_gap_equals_value_gap")
            .equals(gap, vgap, 1e-8)
            .timed(start),
    ])
}

fn single_agent_eq(options: &VerifyOptions) -> Result<Vec<ReportRow>> {
    let suite = Suite::SingleAgentEq;
    let mut rows = Vec::new();
    for k in 0..100u64 {
        let start = Instant::now();
        let seed = derive_seed(options.base_seed ^ 7, k);
        let mut rng = rng_from_seed(seed);
        let mut spec = RandomGameSpec::new(
            rng.gen_range(1..=8),
            vec![rng.gen_range(2..=4)],
            rng.gen_range(1..=6),
        );
        spec.single_agent = true;
        let fx = random_mg(&spec, seed)?;
        let learner = random_policy(&mut rng, fx.game.num_states(), fx.game.num_joint_actions());
        let class = DeviationClass::complete(1);
        let gap = regret_gap(&fx.game, &fx.expert, &learner, &class)?;
        let vgap = value_gap(&fx.game, &fx.expert, &learner);
        let mut row = ReportRow::new(suite, format!("random-mdp-{k}"), "gap_difference");
        row.horizon = Some(fx.game.horizon);
        row.m = Some(1);
        row.seed = Some(seed);
        row.regret_gap = Some(gap);
        row.value_gap = Some(vgap);
        rows.push(row.at_most((gap - vgap).abs(), 0.0, 1e-8).timed(start));
    }
    Ok(rows)
}

fn nfg(_options: &VerifyOptions) -> Result<Vec<ReportRow>> {
    let suite = Suite::Nfg;
    let start = Instant::now();
    let (r, r_prime) = multi_ce_nfg();
    let class = DeviationClass::complete(2);
    let scale = r.param("reward_scale").unwrap_or(1.0);
    let sigma1 = &r.expert;
    let sigma2 = &r.learner;
    let reg1 = regret(&r.game, sigma1, &class)? * scale;
    let reg2 = regret(&r.game, sigma2, &class)? * scale;
    let j_diff = (value(&r.game, sigma1, 0) - value(&r.game, sigma2, 0)) * scale;
    let gap = regret_gap(&r.game, sigma1, sigma2, &class)? * scale;
    let vgap = value_gap(&r.game, sigma1, sigma2) * scale;
    let reg1_prime = regret(&r_prime.game, &r_prime.expert, &class)? * scale;
    let base = |name: &str, check: &str| {
        let mut row = ReportRow::new(suite, name, check);
        row.horizon = Some(1);
        row.m = Some(2);
        row.regret_gap = Some(gap);
        row.value_gap = Some(vgap);
        row
    };
    Ok(vec![
        base("multi-ce-nfg-r", "regret_sigma1")
            .equals(reg1, 0.0, 1e-12)
            .timed(start),
        base("multi-ce-nfg-r", "regret_sigma2")
            .equals(reg2, 0.0, 1e-12)
            .timed(start),
        base("multi-ce-nfg-r", "value_difference")
            .equals(j_diff, 1.0 / 3.0, 1e-12)
            .timed(start),
        base("multi-ce-nfg-r", "regret_gap")
            .equals(gap, 0.0, 1e-12)
            .timed(start),
        base("multi-ce-nfg-r", "value_gap_nonzero")
            .holds(vgap, vgap.abs() > 1e-9)
            .timed(start),
        base("multi-ce-nfg-r-prime", "regret_sigma1")
            .equals(reg1_prime, 0.0, 1e-12)
            .timed(start),
    ])
}

/// Instance `k` of the shared random property suite: a full-coverage
/// two-agent game and an explicit class of up to eight deviations
/// including both identities.
pub fn property_instance(base_seed: u64, k: u64) -> Result<(Fixture, DeviationClass, u64)> {
    let seed = derive_seed(base_seed, k);
    let mut rng = rng_from_seed(seed);
    let mut spec = RandomGameSpec::new(
        rng.gen_range(2..=6),
        vec![rng.gen_range(2..=3), rng.gen_range(2..=3)],
        rng.gen_range(2..=6),
    );
    spec.full_coverage_expert = true;
    let fx = random_mg(&spec, seed)?;
    let devs = random_deviations(&fx.game, 6, derive_seed(seed, 1));
    let class = DeviationClass::explicit_with_identities(&fx.game, devs);
    Ok((fx, class, seed))
}

pub const PROPERTY_GAMES: u64 = 50;
pub const PROPERTY_ROUNDS: usize = 500;
pub const PROPERTY_DEMOS: usize = 50;

fn property_suite(suite: Suite, options: &VerifyOptions) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for k in 0..PROPERTY_GAMES {
        let (fx, class, seed) = property_instance(options.base_seed, k)?;
        let game = &fx.game;
        let hf = game.horizon as f64;
        let u =
            recoverability_constant(game, &fx.expert, &class, RecoverabilityMode::BestResponse)?;
        let beta = coverage_constant(game, &fx.expert);
        let expert_regret = regret(game, &fx.expert, &class)?;
        let name = format!("random-{k}");
        let base = |check: &str, algo: &str, start: Instant| {
            let mut row = ReportRow::new(suite, name.clone(), check).algo(algo);
            row.horizon = Some(game.horizon);
            row.m = Some(game.num_agents);
            row.beta = Some(beta);
            row.u = Some(u);
            row.seed = Some(seed);
            row.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
            row
        };
        let mut trained: Vec<(&str, MediatorPolicy, Instant)> = Vec::new();
        let demos = sample_demonstrations(game, &fx.expert, PROPERTY_DEMOS, derive_seed(seed, 2))?;

        if matches!(suite, Suite::JbcUb | Suite::CeComposition) {
            let start = Instant::now();
            let sigma = j_bc(game, ExpertData::Sampled(&demos), &FillRule::Uniform)?;
            if suite == Suite::JbcUb {
                let d_e = state_distribution(game, &fx.expert);
                let eps = bc_loss(&fx.expert, &sigma, &d_e)?;
                let gap = regret_gap(game, &fx.expert, &sigma, &class)?;
                let bound = (eps / beta) * u * hf + 2.0 * eps * u * hf;
                let mut row = base("regret_gap_bound", "jbc", start);
                row.eps = Some(eps);
                row.regret_gap = Some(gap);
                row.value_gap = Some(value_gap(game, &fx.expert, &sigma));
                rows.push(row.at_most(gap, bound, BOUND_SLACK));
            }
            trained.push(("jbc", sigma, start));
        }
        if matches!(suite, Suite::MaliceUb | Suite::CeComposition) {
            let start = Instant::now();
            let mut cfg = TrainConfig::new(Algorithm::Malice, PROPERTY_ROUNDS, class.clone());
            cfg.oco.seed = seed;
            let out = malice_train(game, &fx.expert, &cfg)?;
            if suite == Suite::MaliceUb {
                let gap = regret_gap(game, &fx.expert, &out.policy, &class)?;
                let mut row = base("regret_gap_bound", "malice", start);
                row.eps = Some(out.final_loss);
                row.rounds = Some(PROPERTY_ROUNDS);
                row.regret_gap = Some(gap);
                row.value_gap = Some(value_gap(game, &fx.expert, &out.policy));
                rows.push(row.at_most(gap, 2.0 * out.final_loss * u * hf, BOUND_SLACK));
            }
            trained.push(("malice", out.policy, start));
        }
        if matches!(suite, Suite::BladesUb | Suite::CeComposition) {
            let start = Instant::now();
            let mut cfg = TrainConfig::new(Algorithm::Blades, PROPERTY_ROUNDS, class.clone());
            cfg.oco.seed = seed;
            cfg.demos = DemoSource::Sampled {
                count: PROPERTY_DEMOS,
            };
            let oracle = ExpertOracle::full_row(fx.expert.clone());
            let out = blades_train(game, &oracle, &demos, &cfg)?;
            if suite == Suite::BladesUb {
                let gap = regret_gap(game, &fx.expert, &out.policy, &class)?;
                let mut row = base("regret_gap_bound", "blades", start);
                row.eps = Some(out.final_loss);
                row.rounds = Some(PROPERTY_ROUNDS);
                row.regret_gap = Some(gap);
                row.value_gap = Some(value_gap(game, &fx.expert, &out.policy));
                rows.push(row.at_most(gap, 2.0 * out.final_loss * u * hf, BOUND_SLACK));
                let queries = out.query_count.unwrap_or(0);
                let logged = out.query_log.len() as u64;
                rows.push(
                    base("query_count", "blades", start)
                        .holds(queries as f64, queries > 0 && logged == queries),
                );
            }
            trained.push(("blades", out.policy, start));
        }
        if suite == Suite::CeComposition {
            for (algo, sigma, start) in trained {
                let gap = regret_gap(game, &fx.expert, &sigma, &class)?;
                let eps = expert_regret + gap + 1e-9;
                let ok = is_approx_ce(game, &sigma, &class, eps)?;
                let mut row = base("approx_ce", algo, start);
                row.regret_gap = Some(gap);
                row.bound = Some(eps);
                rows.push(row.holds(regret(game, &sigma, &class)?, ok));
            }
        }
    }
    Ok(rows)
}

pub const JIRL_GAMES: u64 = 20;
pub const JIRL_ROUNDS: usize = 500;
/// The unregularized sign reward can cycle without converging.
pub const JIRL_REGULARIZER: f64 = 0.05;

fn jirl_ub(options: &VerifyOptions) -> Result<Vec<ReportRow>> {
    let suite = Suite::JirlUb;
    let mut rows = Vec::new();
    for k in 0..JIRL_GAMES {
        let start = Instant::now();
        let seed = derive_seed(options.base_seed ^ 13, k);
        let mut rng = rng_from_seed(seed);
        let mut spec = RandomGameSpec::new(rng.gen_range(2..=5), vec![2, 2], rng.gen_range(2..=5));
        spec.common_payoff = true;
        let fx = random_mg(&spec, seed)?;
        let target = occupancy_bundle(&fx.game, &fx.expert).occupancy;
        let options = JirlOptions {
            regularizer: JIRL_REGULARIZER,
            ..JirlOptions::default()
        };
        let out = j_irl(&fx.game, &target, JIRL_ROUNDS, &options, None)?;
        let normalized = moment_matching_error(&fx.game, &fx.expert, &out.policy, true);
        let unnormalized = moment_matching_error(&fx.game, &fx.expert, &out.policy, false);
        let vgap = value_gap(&fx.game, &fx.expert, &out.policy);
        let base = |check: &str| {
            let mut row = ReportRow::new(suite, format!("random-common-{k}"), check).algo("jirl");
            row.horizon = Some(fx.game.horizon);
            row.m = Some(2);
            row.rounds = Some(JIRL_ROUNDS);
            row.seed = Some(seed);
            row.eps = Some(normalized);
            row.value_gap = Some(vgap);
            row
        };
        rows.push(
            base("value_gap_vs_moment")
                .at_most(vgap, unnormalized, 1e-9)
                .timed(start),
        );
        rows.push(
            base("moment_error")
                .at_most(normalized, 0.05, 0.0)
                .timed(start),
        );
    }
    Ok(rows)
}

pub const LEMMA1_TRIPLES: u64 = 200;

fn lemma1(options: &VerifyOptions) -> Result<Vec<ReportRow>> {
    let suite = Suite::Lemma1;
    let mut rows = Vec::new();
    for k in 0..LEMMA1_TRIPLES {
        let start = Instant::now();
        let seed = derive_seed(options.base_seed ^ 10, k);
        let mut rng = rng_from_seed(seed);
        let spec = RandomGameSpec::new(
            rng.gen_range(1..=6),
            vec![rng.gen_range(2..=3), rng.gen_range(2..=3)],
            rng.gen_range(1..=6),
        );
        let fx = random_mg(&spec, seed)?;
        let game = &fx.game;
        let (n, m) = (game.num_states(), game.num_joint_actions());
        let pi1 = random_policy(&mut rng, n, m);
        let pi2 = random_policy(&mut rng, n, m);
        let d2 = state_distribution(game, &pi2);
        let eps = weighted_tv_loss(&pi1, &pi2, &d2)?;
        for agent in 0..game.num_agents {
            let u = advantage_tensor(game, &pi1, agent).max_abs_advantage();
            let diff = (value(game, &pi1, agent) - value(game, &pi2, agent)).abs();
            let mut row = ReportRow::new(suite, format!("random-{k}"), &format!("agent{agent}"));
            row.horizon = Some(game.horizon);
            row.m = Some(game.num_agents);
            row.u = Some(u);
            row.eps = Some(eps);
            row.seed = Some(seed);
            rows.push(
                row.at_most(diff, eps * u * game.horizon as f64, 1e-9)
                    .timed(start),
            );
        }
    }
    Ok(rows)
}

pub const OCO_ROUNDS: usize = 4096;
pub const OCO_GRID: usize = 24;

/// Targets of each adversarial sequence over four joint actions. `None`
/// marks the adaptive adversary, which targets the action the learner
/// currently plays least.
fn oco_sequences(seed: u64) -> Vec<(&'static str, Option<Vec<usize>>)> {
    let n = OCO_ROUNDS;
    let alternating = (0..n).map(|t| t % 2).collect();
    let blocks = (0..n).map(|t| (t / 64) % 4).collect();
    let mut rng = rng_from_seed(seed);
    let random = (0..n).map(|_| rng.gen_range(0..4)).collect();
    let mut doubling = Vec::with_capacity(n);
    let mut len = 1;
    let mut which = 0;
    while doubling.len() < n {
        for _ in 0..len {
            doubling.push(which);
        }
        which = 1 - which;
        len *= 2;
    }
    doubling.truncate(n);
    vec![
        ("alternating", Some(alternating)),
        ("blocks", Some(blocks)),
        ("random", Some(random)),
        ("doubling", Some(doubling)),
        ("adaptive", None),
    ]
}

fn oco_regret(options: &VerifyOptions) -> Result<Vec<ReportRow>> {
    let suite = Suite::OcoRegret;
    let bound = 2.0 * (4f64.ln() / OCO_ROUNDS as f64).sqrt();
    let mut rows = Vec::new();
    for (name, targets) in oco_sequences(derive_seed(options.base_seed, 12)) {
        let start = Instant::now();
        let cfg = OcoConfig::exponentiated(OCO_ROUNDS);
        let run = oco_run(MediatorPolicy::uniform(1, 4), &cfg, |n, sigma| {
            let t = match &targets {
                Some(ts) => ts[n - 1],
                None => {
                    let row = &sigma.table[0];
                    (0..4).fold(0, |best, a| if row[a] < row[best] { a } else { best })
                }
            };
            let mut target = vec![0.0; 4];
            target[t] = 1.0;
            Ok(CompositeMaxLoss::single(WeightedTvLoss::new(
                vec![1.0],
                vec![target],
            )?))
        })?;
        let learner: f64 = run.rounds.iter().map(|r| r.loss).sum();
        let best = best_fixed_single_state(&run.losses, OCO_GRID)?;
        let avg_regret = (learner - best) / OCO_ROUNDS as f64;
        let mut row =
            ReportRow::new(suite, format!("one-state-{name}"), "average_regret").algo("eg");
        row.rounds = Some(OCO_ROUNDS);
        rows.push(row.at_most(avg_regret, bound, 0.0).timed(start));
    }
    Ok(rows)
}

fn thm1(options: &VerifyOptions) -> Result<Vec<ReportRow>> {
    let suite = Suite::Thm1;
    let start = Instant::now();
    let h = 8;
    let fx = fig1_game(h)?;
    let class = DeviationClass::complete(2);
    let n = fx.game.num_states();
    let m = fx.game.num_joint_actions();
    let mut max_value_gap: f64 = 0.0;
    let mut max_regret_gap = f64::NEG_INFINITY;
    let mut self_regret_gap: f64 = 0.0;
    for s in 0..n {
        for a in 0..m {
            let mut reward = vec![vec![0.0; m]; n];
            reward[s][a] = 1.0;
            let g = fx.game.with_common_reward(&reward);
            max_value_gap = max_value_gap.max(value_gap(&g, &fx.expert, &fx.learner).abs());
            max_regret_gap = max_regret_gap.max(regret_gap(&g, &fx.expert, &fx.learner, &class)?);
            self_regret_gap =
                self_regret_gap.max(regret_gap(&g, &fx.expert, &fx.expert, &class)?.abs());
        }
    }
    let true_gap = regret_gap(&fx.game, &fx.expert, &fx.learner, &class)?;
    let base = |check: &str| with_fixture(ReportRow::new(suite, "fig1", check), &fx);
    let mut rows = vec![
        base("indicator_value_gaps_zero")
            .at_most(max_value_gap, 0.0, options.tolerance)
            .timed(start),
        base("indicator_regret_gap_positive")
            .holds(max_regret_gap, max_regret_gap > options.tolerance)
            .timed(start),
        base("true_regret_gap")
            .equals(true_gap, (h - 2) as f64, options.tolerance)
            .timed(start),
    ];
    // a pair with zero regret gap under every indicator reward
    let occ = occupancy_l1(
        &occupancy_bundle(&fx.game, &fx.expert).occupancy,
        &occupancy_bundle(&fx.game, &fx.expert).occupancy,
    );
    rows.push(
        base("self_pair_occupancy")
            .holds(occ, self_regret_gap <= options.tolerance && occ <= 1e-12)
            .timed(start),
    );
    Ok(rows)
}

pub const BR_GAMES: u64 = 200;

fn br_oracle(options: &VerifyOptions) -> Result<Vec<ReportRow>> {
    let suite = Suite::BrOracle;
    let mut rows = Vec::new();
    for k in 0..BR_GAMES {
        let start = Instant::now();
        let seed = derive_seed(options.base_seed ^ 11, k);
        let mut rng = rng_from_seed(seed);
        let mut spec = RandomGameSpec::new(rng.gen_range(1..=6), vec![2, 2], rng.gen_range(1..=2));
        spec.layered = true;
        let fx = random_mg(&spec, seed)?;
        for agent in 0..2 {
            let dp = best_response_deviation(&fx.game, &fx.learner, agent)?.gain;
            let brute = layered_stationary_best_gain(&fx.game, &fx.learner, agent, 1 << 24)?;
            let mut row = ReportRow::new(suite, format!("layered-{k}"), &format!("agent{agent}"));
            row.horizon = Some(fx.game.horizon);
            row.m = Some(2);
            row.seed = Some(seed);
            rows.push(row.equals(dp, brute, 1e-10).timed(start));
        }
    }
    Ok(rows)
}

/// Parameters of one sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    pub fixture: String,
    pub algo: String,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
    pub tolerance: f64,
}

/// Evaluates (and, for a learner tag, trains on) one fixture instance.
/// With `algo = "none"` the fixture's own learner is checked against its
/// closed-form regret gap; otherwise the trained policy is checked against
/// the learner's bound.
pub fn sweep_cell(cell: &CellSpec) -> Result<ReportRow> {
    let start = Instant::now();
    let param = |k: &str| cell.params.get(k).copied();
    let defaults = FixtureArgs::default();
    let args = FixtureArgs {
        horizon: param("H").map_or(defaults.horizon, |h| h as usize),
        u: param("u").unwrap_or(defaults.u),
        beta: param("beta").unwrap_or(defaults.beta),
        eps: param("eps").unwrap_or(defaults.eps),
    };
    let rounds = param("N").map_or(PROPERTY_ROUNDS, |n| n as usize);
    let fx = if cell.fixture == "random" {
        property_instance(cell.seed, 0)?.0
    } else {
        by_name(&cell.fixture, args)?.remove(0)
    };
    let class = if fx.witness_deviations.is_empty() {
        let devs = random_deviations(&fx.game, 6, derive_seed(cell.seed, 1));
        DeviationClass::explicit_with_identities(&fx.game, devs)
    } else {
        fx.explicit_class()
    };
    let complete = DeviationClass::complete(fx.game.num_agents);
    let game = &fx.game;
    let hf = game.horizon as f64;
    let mut row = with_fixture(ReportRow::new_sweep(&fx.name), &fx).algo(&cell.algo);
    row.seed = Some(cell.seed);
    let (sigma, bound) = match cell.algo.as_str() {
        "none" => (fx.learner.clone(), None),
        tag => {
            let algorithm: Algorithm = tag.parse()?;
            let mut cfg = TrainConfig::new(algorithm, rounds, class.clone());
            cfg.oco.seed = cell.seed;
            if algorithm == Algorithm::Blades {
                cfg.demos = DemoSource::Sampled {
                    count: PROPERTY_DEMOS,
                };
            }
            row.rounds = Some(rounds);
            let out = crate::algorithms::train(game, &fx.expert, &cfg)?;
            let u = recoverability_constant(
                game,
                &fx.expert,
                &class,
                RecoverabilityMode::BestResponse,
            )?;
            row.u = Some(u);
            row.eps = Some(out.final_loss);
            let bound = match algorithm {
                Algorithm::Malice | Algorithm::Blades => 2.0 * out.final_loss * u * hf,
                Algorithm::Jbc => {
                    let beta = coverage_constant(game, &fx.expert);
                    if beta > 0.0 {
                        (out.final_loss / beta) * u * hf + 2.0 * out.final_loss * u * hf
                    } else {
                        f64::INFINITY
                    }
                }
                Algorithm::Jirl => out.final_loss * hf,
            };
            (out.policy, Some((algorithm, bound)))
        }
    };
    let gap = regret_gap(game, &fx.expert, &sigma, &complete)?;
    let vgap = value_gap(game, &fx.expert, &sigma);
    row.regret_gap = Some(gap);
    row.value_gap = Some(vgap);
    row = match bound {
        None => match fx.expected("regret_gap") {
            Some(expected) => row.equals(gap, expected, cell.tolerance),
            None => row.holds(gap, true),
        },
        Some((Algorithm::Jirl, b)) => row.at_most(vgap, b, BOUND_SLACK),
        Some((_, b)) => {
            let explicit_gap = regret_gap(game, &fx.expert, &sigma, &class)?;
            row.at_most(explicit_gap, b, BOUND_SLACK)
        }
    };
    Ok(row.timed(start))
}

impl ReportRow {
    fn new_sweep(fixture: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            suite: "sweep".into(),
            fixture: fixture.into(),
            algo: "none".into(),
            ..Self::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_roundtrip() {
        for suite in Suite::ALL {
            assert_eq!(suite.name().parse::<Suite>().unwrap(), suite);
        }
        assert_eq!("coverage".parse::<Suite>().unwrap(), Suite::Thm6Lb);
        assert!("thm99".parse::<Suite>().is_err());
    }

    #[test]
    fn report_header_is_fixed() {
        let mut buf = Vec::new();
        write_report(&mut buf, &[ReportRow::new(Suite::Nfg, "x", "y")]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "schema_version,suite,fixture,algo,H,m,beta,u,eps,N,seed,value_gap,regret_gap,bound,expected,measured,pass,runtime_ms"
        );
    }

    #[test]
    fn sweep_cell_fig1() {
        let mut params = BTreeMap::new();
        params.insert("H".to_string(), 9.0);
        let row = sweep_cell(&CellSpec {
            fixture: "fig1".into(),
            algo: "none".into(),
            params,
            seed: 1,
            tolerance: 1e-9,
        })
        .unwrap();
        assert!(row.pass);
        assert_eq!(row.regret_gap, Some(7.0));
    }
}
