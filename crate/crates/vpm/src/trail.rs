//! Trajectory trail images.

use std::io::Write;
use std::path::Path;

use image::{Rgb, RgbImage};
use vpm_core::episode::TrajectoryLog;
use vpm_core::GridMap;

use crate::error::{io_err, Error, Result};

const BACKGROUND: [u8; 3] = [255, 255, 255];
const OBSTACLE: [u8; 3] = [40, 40, 40];
const MARK: [u8; 3] = [0, 0, 0];
const PALETTE: [[u8; 3]; 8] = [
    [214, 39, 40],
    [31, 119, 180],
    [44, 160, 44],
    [255, 127, 14],
    [148, 103, 189],
    [23, 190, 207],
    [227, 119, 194],
    [140, 86, 75],
];

fn blend(hue: [u8; 3], weight: f64) -> [u8; 3] {
    let mix = |h: u8| (255.0 + (h as f64 - 255.0) * weight).round() as u8;
    [mix(hue[0]), mix(hue[1]), mix(hue[2])]
}

/// Renders `log` over `map` with `scale`×`scale` pixels per cell. Each
/// agent's visited cells are shaded in its own hue by visit frequency (the
/// most-visited agent wins a shared cell); obstacles are dark and each
/// agent's final cell gets a black centre mark.
pub fn emit_trail(log: &TrajectoryLog, map: &GridMap, scale: u32) -> Result<RgbImage> {
    if log.meta.height != map.height() || log.meta.width != map.width() {
        return Err(Error::Log { line: 1, message: "log and map sizes differ".into() });
    }
    let scale = scale.max(1);
    let n = log.n_agents();
    let mut counts = vec![vec![0u32; map.len()]; n];
    for step in &log.positions {
        for (a, c) in step.iter().enumerate() {
            counts[a][map.index(*c)] += 1;
        }
    }
    let peaks: Vec<u32> = counts.iter().map(|c| c.iter().copied().max().unwrap_or(0).max(1)).collect();
    let mut cells = vec![BACKGROUND; map.len()];
    for (i, px) in cells.iter_mut().enumerate() {
        if !map.is_free_index(i) {
            *px = OBSTACLE;
            continue;
        }
        let best = (0..n)
            .filter(|&a| counts[a][i] > 0)
            .map(|a| (a, counts[a][i] as f64 / peaks[a] as f64))
            .fold(None, |best: Option<(usize, f64)>, x| if best.is_none_or(|b| x.1 > b.1) { Some(x) } else { best });
        if let Some((a, f)) = best {
            *px = blend(PALETTE[a % PALETTE.len()], 0.25 + 0.75 * f);
        }
    }
    let (w, h) = (map.width() as u32 * scale, map.height() as u32 * scale);
    let mut img = RgbImage::from_fn(w, h, |x, y| Rgb(cells[(y / scale) as usize * map.width() + (x / scale) as usize]));
    if let Some(last) = log.positions.last() {
        let (lo, hi) = (scale / 4, scale - scale / 4);
        for c in last {
            for y in lo..hi.max(lo + 1) {
                for x in lo..hi.max(lo + 1) {
                    img.put_pixel(c.col as u32 * scale + x, c.row as u32 * scale + y, Rgb(MARK));
                }
            }
        }
    }
    Ok(img)
}

/// Binary PPM bytes of an image.
pub fn ppm_bytes(img: &RgbImage) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let enc = image::codecs::pnm::PnmEncoder::new(&mut buf)
        .with_subtype(image::codecs::pnm::PnmSubtype::Pixmap(image::codecs::pnm::SampleEncoding::Binary));
    img.write_with_encoder(enc)?;
    Ok(buf)
}

pub fn save_trail(log: &TrajectoryLog, map: &GridMap, scale: u32, path: &Path) -> Result<()> {
    let bytes = ppm_bytes(&emit_trail(log, map, scale)?)?;
    let mut f = std::fs::File::create(path).map_err(io_err(path))?;
    f.write_all(&bytes).map_err(io_err(path))
}
