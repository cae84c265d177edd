//! Map files, trajectory logs, training logs and greyscale images.

use std::io::{BufRead, Write};
use std::path::Path;

use image::{GrayImage, Luma};
use serde::{Deserialize, Serialize};
use vpm_core::episode::{EpisodeMeta, TrajectoryLog};
use vpm_core::grid::{load_map, Action, Cell, ParsedMap};
use vpm_core::nn::EpisodeStats;
use vpm_core::observation::{ObsCell, ObsGrid, OBS_SIZE};
use vpm_core::PenaltyField;

use crate::error::{io_err, Error, Result};

const BUNDLED: &[(&str, &str)] = &[
    ("open_10", include_str!("../maps/open_10.txt")),
    ("open_20", include_str!("../maps/open_20.txt")),
    ("open_50", include_str!("../maps/open_50.txt")),
    ("rooms", include_str!("../maps/rooms.txt")),
];

pub fn bundled_maps() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(name, _)| *name)
}

/// A bundled map by name, otherwise a map file by path.
pub fn read_map(name_or_path: &str) -> Result<ParsedMap> {
    if let Some((_, text)) = BUNDLED.iter().find(|(n, _)| *n == name_or_path) {
        return Ok(load_map(text)?);
    }
    let text = std::fs::read_to_string(name_or_path).map_err(io_err(name_or_path))?;
    Ok(load_map(&text)?)
}

#[derive(Serialize, Deserialize)]
struct MetaRecord {
    map: String,
    policy: String,
    seed: u64,
    steps: usize,
    height: usize,
    width: usize,
    agents: usize,
}

#[derive(Serialize, Deserialize)]
struct StepRecord {
    t: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    actions: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reward: Option<f64>,
    positions: Vec<[usize; 2]>,
}

/// One JSON object per line: a header, then the initial positions, then
/// one record per step.
pub fn write_log<W: Write>(log: &TrajectoryLog, mut out: W) -> Result<()> {
    let m = &log.meta;
    let meta = MetaRecord {
        map: m.map_id.clone(),
        policy: m.policy_id.clone(),
        seed: m.seed,
        steps: m.steps,
        height: m.height,
        width: m.width,
        agents: log.n_agents(),
    };
    let line = |out: &mut W, text: String| writeln!(out, "{text}").map_err(io_err("<trajectory log>"));
    line(&mut out, serde_json::to_string(&meta)?)?;
    for (t, positions) in log.positions.iter().enumerate() {
        let rec = StepRecord {
            t,
            actions: t.checked_sub(1).map(|k| log.actions[k].iter().map(|a| a.name().to_string()).collect()),
            reward: t.checked_sub(1).map(|k| log.rewards[k]),
            positions: positions.iter().map(|c| [c.row, c.col]).collect(),
        };
        line(&mut out, serde_json::to_string(&rec)?)?;
    }
    Ok(())
}

fn parse_action(name: &str) -> Option<Action> {
    Action::ALL.into_iter().find(|a| a.name() == name)
}

pub fn read_log<R: BufRead>(input: R) -> Result<TrajectoryLog> {
    let mut lines = input.lines().enumerate();
    let bad = |line: usize, message: String| Error::Log { line: line + 1, message };
    let (_, first) = lines.next().ok_or_else(|| bad(0, "empty log".into()))?;
    let meta: MetaRecord = serde_json::from_str(&first.map_err(io_err("<trajectory log>"))?)?;
    let mut log = TrajectoryLog {
        meta: EpisodeMeta {
            map_id: meta.map,
            policy_id: meta.policy,
            seed: meta.seed,
            steps: meta.steps,
            height: meta.height,
            width: meta.width,
        },
        ..Default::default()
    };
    for (i, line) in lines {
        let line = line.map_err(io_err("<trajectory log>"))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: StepRecord = serde_json::from_str(&line)?;
        if rec.t != log.positions.len() {
            return Err(bad(i, format!("expected t = {}, found {}", log.positions.len(), rec.t)));
        }
        if rec.positions.len() != meta.agents {
            return Err(bad(i, format!("{} positions for {} agents", rec.positions.len(), meta.agents)));
        }
        log.positions.push(rec.positions.iter().map(|&[r, c]| Cell::new(r, c)).collect());
        if rec.t > 0 {
            let names = rec.actions.ok_or_else(|| bad(i, "missing actions".into()))?;
            let actions = names
                .iter()
                .map(|n| parse_action(n).ok_or_else(|| bad(i, format!("unknown action {n:?}"))))
                .collect::<Result<Vec<_>>>()?;
            log.actions.push(actions);
            log.rewards.push(rec.reward.ok_or_else(|| bad(i, "missing reward".into()))?);
        }
    }
    log.validate()?;
    Ok(log)
}

pub fn save_log(log: &TrajectoryLog, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut w = std::io::BufWriter::new(file);
    write_log(log, &mut w)?;
    w.flush().map_err(io_err(path))
}

pub fn load_log(path: &Path) -> Result<TrajectoryLog> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    read_log(std::io::BufReader::new(file))
}

/// Training log with columns `episode, cumulative_penalty, loss, entropy`;
/// the last two are empty for episodes without an update.
pub struct TrainLog<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> TrainLog<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["episode", "cumulative_penalty", "loss", "entropy"])?;
        Ok(TrainLog { writer })
    }

    pub fn record(&mut self, s: &EpisodeStats) -> Result<()> {
        let (loss, entropy) = match s.loss {
            Some(l) => (l.total.to_string(), l.entropy.to_string()),
            None => (String::new(), String::new()),
        };
        self.writer.write_record([s.episode.to_string(), s.cumulative_penalty.to_string(), loss, entropy])?;
        self.writer.flush().map_err(io_err("<training log>"))
    }
}

/// Penalty magnitudes as a greyscale image: black is zero, white is
/// `r_max`; obstacles are mid-grey.
pub fn penalty_image(field: &PenaltyField, is_free: impl Fn(usize) -> bool) -> GrayImage {
    let (w, h) = (field.width() as u32, field.height() as u32);
    GrayImage::from_fn(w, h, |x, y| {
        let i = (y * w + x) as usize;
        if !is_free(i) {
            return Luma([128]);
        }
        Luma([(field.get(i).abs() / field.r_max() * 255.0).round().min(255.0) as u8])
    })
}

/// One rendered observation grid using raw codes clamped to a byte;
/// penalties are scaled so `r_max` maps to 100, leaving 150 and 200 for
/// obstacles and agents.
pub fn observation_image(grid: &ObsGrid, r_max: f64) -> GrayImage {
    GrayImage::from_fn(OBS_SIZE as u32, OBS_SIZE as u32, |x, y| {
        let cell = grid[y as usize * OBS_SIZE + x as usize];
        let v = match cell {
            ObsCell::Penalty(p) => p / r_max * 100.0,
            other => other.raw(),
        };
        Luma([v.round().clamp(0.0, 255.0) as u8])
    })
}

pub fn save_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let enc = image::codecs::pnm::PnmEncoder::new(std::io::BufWriter::new(file))
        .with_subtype(image::codecs::pnm::PnmSubtype::Graymap(image::codecs::pnm::SampleEncoding::Binary));
    img.write_with_encoder(enc)?;
    Ok(())
}
