//! File formats: games, policies and deviations as JSON, training traces as
//! CSV, oracle query logs as JSON lines.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::algorithms::TraceRow;
use crate::error::{Error, Result};
use crate::fixtures::Fixture;
use crate::game::{validate_game, Deviation, MarkovGame, MediatorPolicy};
use crate::oracle::QueryRecord;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Reads and validates a game file.
pub fn load_game(path: &Path) -> Result<MarkovGame> {
    let game: MarkovGame = read_json(path)?;
    validate_game(&game).into_result()?;
    Ok(game)
}

/// Reads a policy file and checks it against `game`.
pub fn load_policy(path: &Path, game: &MarkovGame) -> Result<MediatorPolicy> {
    let policy: MediatorPolicy = read_json(path)?;
    policy.check(game)?;
    Ok(policy)
}

/// On-disk deviation: `[state, own_action, new_action]` triples, identity
/// elsewhere.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviationFile {
    pub agent: usize,
    pub entries: Vec<[usize; 3]>,
}

impl DeviationFile {
    pub fn from_deviation(dev: &Deviation) -> Result<Self> {
        if !dev.is_stationary() {
            return Err(Error::InvalidArgument(
                "only stationary deviations have a file form".into(),
            ));
        }
        Ok(Self {
            agent: dev.agent(),
            entries: dev
                .swaps()
                .into_iter()
                .map(|(_, s, a, b)| [s, a, b])
                .collect(),
        })
    }

    pub fn to_deviation(&self, game: &MarkovGame) -> Result<Deviation> {
        if self.agent >= game.num_agents {
            return Err(Error::InvalidArgument(format!(
                "deviation for agent {} but the game has {} agents",
                self.agent, game.num_agents
            )));
        }
        let swaps: Vec<(usize, usize, usize)> =
            self.entries.iter().map(|&[s, a, b]| (s, a, b)).collect();
        Deviation::from_swaps(
            self.agent,
            game.num_states(),
            game.num_actions(self.agent),
            &swaps,
        )
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DeviationDoc {
    One(DeviationFile),
    Many(Vec<DeviationFile>),
}

/// Reads one deviation document or an array of them.
pub fn load_deviations(path: &Path, game: &MarkovGame) -> Result<Vec<Deviation>> {
    let files = match read_json::<DeviationDoc>(path)? {
        DeviationDoc::One(f) => vec![f],
        DeviationDoc::Many(fs) => fs,
    };
    files.iter().map(|f| f.to_deviation(game)).collect()
}

pub fn write_deviations(path: &Path, devs: &[Deviation]) -> Result<()> {
    let files = devs
        .iter()
        .map(DeviationFile::from_deviation)
        .collect::<Result<Vec<_>>>()?;
    write_json(path, &files)
}

/// Closed-form values and parameters of a fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedFile {
    pub fixture: String,
    pub expected: BTreeMap<String, f64>,
    pub params: BTreeMap<String, f64>,
    pub flags: BTreeMap<String, bool>,
}

/// Writes `game.json`, `expert.json`, `learner.json`, `deviations.json` and
/// `expected.json` for `fixture` under `dir`, prefixed with `prefix`.
pub fn write_fixture(dir: &Path, prefix: &str, fixture: &Fixture) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let path = |name: &str| dir.join(format!("{prefix}{name}.json"));
    let paths = vec![
        path("game"),
        path("expert"),
        path("learner"),
        path("deviations"),
        path("expected"),
    ];
    write_json(&paths[0], &fixture.game)?;
    write_json(&paths[1], &fixture.expert)?;
    write_json(&paths[2], &fixture.learner)?;
    write_deviations(&paths[3], &fixture.witness_deviations)?;
    write_json(
        &paths[4],
        &ExpectedFile {
            fixture: fixture.name.clone(),
            expected: fixture.expected.clone(),
            params: fixture.params.clone(),
            flags: fixture.flags.clone(),
        },
    )?;
    Ok(paths)
}

/// Trace CSV: `round,loss,achieving_agent,achieving_deviation,step_size`.
/// Learners without an achieving component leave those columns empty.
pub fn write_trace<W: Write>(writer: W, rows: &[TraceRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

/// One JSON object `{round, state, mode}` per line.
pub fn write_query_log<W: Write>(mut writer: W, log: &[QueryRecord]) -> Result<()> {
    for record in log {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fig1_game;
    use crate::oracle::QueryMode;

    #[test]
    fn deviation_roundtrip() {
        let fx = fig1_game(4).unwrap();
        let dev = &fx.witness_deviations[0];
        let file = DeviationFile::from_deviation(dev).unwrap();
        assert_eq!(file.entries, vec![[0, 0, 1], [1, 0, 1]]);
        assert_eq!(&file.to_deviation(&fx.game).unwrap(), dev);
    }

    #[test]
    fn fixture_files_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let fx = fig1_game(5).unwrap();
        let paths = write_fixture(dir.path(), "", &fx).unwrap();
        assert_eq!(paths.len(), 5);
        let game = load_game(&paths[0]).unwrap();
        assert_eq!(game, fx.game);
        assert_eq!(load_policy(&paths[2], &game).unwrap(), fx.learner);
        assert_eq!(
            load_deviations(&paths[3], &game).unwrap(),
            fx.witness_deviations
        );
        let expected: ExpectedFile = read_json(&paths[4]).unwrap();
        assert_eq!(expected.expected["regret_gap"], 3.0);
    }

    #[test]
    fn trace_and_log_formats() {
        let rows = [
            TraceRow {
                round: 1,
                loss: 0.5,
                achieving_agent: Some(1),
                achieving_deviation: Some(2),
                step_size: 0.25,
            },
            TraceRow {
                round: 2,
                loss: 0.0,
                achieving_agent: None,
                achieving_deviation: None,
                step_size: 0.5,
            },
        ];
        let mut buf = Vec::new();
        write_trace(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "round,loss,achieving_agent,achieving_deviation,step_size\n1,0.5,1,2,0.25\n2,0.0,,,0.5\n"
        );
        let mut buf = Vec::new();
        let log = [QueryRecord {
            round: 3,
            state: 1,
            mode: QueryMode::FullRow,
        }];
        write_query_log(&mut buf, &log).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"round\":3,\"state\":1,\"mode\":\"full-row\"}\n"
        );
    }
}
