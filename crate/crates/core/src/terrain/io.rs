//! Point cloud text and cost-map binary formats.
//!
//! Cost-map binary layout, all little-endian:
//!
//! ```text
//! magic   [u8; 4]  "GCM1"
//! origin  f64 x2   easting, northing of the lower-left corner
//! cell    f64      cell size in metres
//! width   u32
//! height  u32
//! cells   width*height records, row-major from the lower-left:
//!         roughness f64 (NaN = insufficient data), cost f64 (+inf = blocked)
//! ```

use super::{CostCell, CostMapGlobal, PointCloudWorld, RoughnessParams, TerrainError};
use nalgebra::{Vector2, Vector3};
use std::io::{BufRead, Read, Write};

const MAGIC: &[u8; 4] = b"GCM1";

/// Parses whitespace-separated `x y z` lines. Blank lines and `#` comments are skipped.
pub fn read_xyz(reader: impl BufRead) -> Result<PointCloudWorld, TerrainError> {
    let mut points = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let vals: Result<Vec<f64>, _> = t.split_whitespace().map(str::parse::<f64>).collect();
        let vals = vals.map_err(|e| TerrainError::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if vals.len() != 3 || vals.iter().any(|v| !v.is_finite()) {
            return Err(TerrainError::Parse {
                line: i + 1,
                reason: format!("expected 3 finite values, got {t:?}"),
            });
        }
        points.push(Vector3::new(vals[0], vals[1], vals[2]));
    }
    Ok(PointCloudWorld::new(points))
}

pub fn write_xyz(cloud: &PointCloudWorld, mut w: impl Write) -> std::io::Result<()> {
    for p in &cloud.points {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    Ok(())
}

pub fn write_costmap(map: &CostMapGlobal, mut w: impl Write) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&map.origin.x.to_le_bytes())?;
    w.write_all(&map.origin.y.to_le_bytes())?;
    w.write_all(&map.cell_size.to_le_bytes())?;
    w.write_all(&(map.width as u32).to_le_bytes())?;
    w.write_all(&(map.height as u32).to_le_bytes())?;
    for c in map.cells() {
        w.write_all(&c.roughness.unwrap_or(f64::NAN).to_le_bytes())?;
        w.write_all(&c.cost.to_le_bytes())?;
    }
    Ok(())
}

fn take<const N: usize>(buf: &[u8], at: &mut usize) -> Result<[u8; N], TerrainError> {
    let end = *at + N;
    let s = buf
        .get(*at..end)
        .ok_or_else(|| TerrainError::Format(format!("truncated at byte {}", *at)))?;
    *at = end;
    Ok(s.try_into().expect("slice length checked"))
}

pub fn read_costmap(mut r: impl Read) -> Result<CostMapGlobal, TerrainError> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let mut at = 0;
    if &take::<4>(&buf, &mut at)? != MAGIC {
        return Err(TerrainError::Format("bad magic".into()));
    }
    let ox = f64::from_le_bytes(take(&buf, &mut at)?);
    let oy = f64::from_le_bytes(take(&buf, &mut at)?);
    let cell = f64::from_le_bytes(take(&buf, &mut at)?);
    let width = u32::from_le_bytes(take(&buf, &mut at)?) as usize;
    let height = u32::from_le_bytes(take(&buf, &mut at)?) as usize;
    let expected = at + width * height * 16;
    if buf.len() != expected {
        return Err(TerrainError::Format(format!(
            "expected {expected} bytes for {width}x{height} cells, found {}",
            buf.len()
        )));
    }
    let mut cells = Vec::with_capacity(width * height);
    for _ in 0..width * height {
        let rough = f64::from_le_bytes(take(&buf, &mut at)?);
        let cost = f64::from_le_bytes(take(&buf, &mut at)?);
        cells.push(CostCell {
            roughness: (!rough.is_nan()).then_some(rough),
            cost,
        });
    }
    CostMapGlobal::from_cells(Vector2::new(ox, oy), cell, width, height, cells).map_err(|e| TerrainError::Format(e.to_string()))
}

/// Plain-text `key = value` sidecar describing a cost-map and the parameters that built it.
pub fn costmap_metadata(map: &CostMapGlobal, params: &RoughnessParams, source_points: usize) -> String {
    let total = map.width * map.height;
    format!(
        "format = \"GCM1\"\n\
         origin_easting = {}\n\
         origin_northing = {}\n\
         cell_size = {}\n\
         width = {}\n\
         height = {}\n\
         roughness_radius = {}\n\
         roughness_threshold = {}\n\
         min_points = {}\n\
         source_points = {}\n\
         navigable_cells = {}\n\
         blocked_cells = {}\n\
         unknown_cells = {}\n",
        map.origin.x,
        map.origin.y,
        map.cell_size,
        map.width,
        map.height,
        params.radius,
        params.threshold,
        params.min_points,
        source_points,
        map.navigable_count(),
        total - map.navigable_count() - map.unknown_count(),
        map.unknown_count(),
    )
}

/// One `ix,iy,easting,northing,roughness,navigable,cost` row per cell.
pub fn write_roughness_csv(map: &CostMapGlobal, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "ix,iy,easting,northing,roughness,navigable,cost")?;
    for iy in 0..map.height as i64 {
        for ix in 0..map.width as i64 {
            let c = map.cell(ix, iy).expect("in range");
            let ctr = map.cell_center(ix, iy);
            let rough = c.roughness.map(|r| r.to_string()).unwrap_or_default();
            let cost = if c.navigable() { c.cost.to_string() } else { String::new() };
            writeln!(w, "{ix},{iy},{},{},{rough},{},{cost}", ctr.x, ctr.y, c.navigable())?;
        }
    }
    Ok(())
}
