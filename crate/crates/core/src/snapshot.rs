//! Snapshot files: CSV rows `t,field,x,y,value`, or the compact binary
//! layout `SKPD | version | nx_i nx_s ny | fields`, then per snapshot the
//! time followed by every field in row-major order, all little-endian.

use num_complex::Complex64 as C64;
use std::collections::HashMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction2D, SidePair};
use crate::model::{Side, Species};
use crate::report::format_number;
use crate::simulator::{field_name, FieldState};

pub const MAGIC: &[u8; 4] = b"SKPD";
pub const VERSION: u32 = 1;
pub const FIELD_COUNT: u32 = 6;

/// The six fields in file order `J_I, A_I, H_I, J_S, A_S, H_S`.
pub fn field_order() -> [(Species, Side); 6] {
    let mut out = [(Species::Juvenile, Side::Infected); 6];
    for (i, side) in [Side::Infected, Side::Susceptible].into_iter().enumerate() {
        for s in Species::ALL {
            out[3 * i + s.index()] = (s, side);
        }
    }
    out
}

fn side_mut<T>(pair: &mut SidePair<T>, side: Side) -> &mut GridFunction2D<T> {
    match side {
        Side::Infected => &mut pair.infected,
        Side::Susceptible => &mut pair.susceptible,
    }
}

pub fn write_csv(snapshots: &[FieldState], out: &mut impl Write) -> Result<()> {
    writeln!(out, "t,field,x,y,value")?;
    for s in snapshots {
        let t = format_number(s.t);
        for (species, side) in field_order() {
            let g = s.field(species, side);
            let name = field_name(species, side);
            for i in 0..=g.nx {
                let x = format_number(g.x(i));
                for j in 0..=g.ny {
                    writeln!(out, "{t},{name},{x},{},{}", format_number(g.y(j)), format_number(g.at(i, j)))?;
                }
            }
        }
    }
    Ok(())
}

/// Complex fields of a resolvent solve: rows `field,x,y,re,im`.
pub fn write_complex_csv(fields: &[SidePair<C64>; 3], out: &mut impl Write) -> Result<()> {
    writeln!(out, "field,x,y,re,im")?;
    for (species, side) in field_order() {
        let g = fields[species.index()].side(side);
        let name = field_name(species, side);
        for i in 0..=g.nx {
            let x = format_number(g.x(i));
            for j in 0..=g.ny {
                let v = g.at(i, j);
                writeln!(out, "{name},{x},{},{},{}", format_number(g.y(j)), format_number(v.re), format_number(v.im))?;
            }
        }
    }
    Ok(())
}

fn node_index(v: f64, x0: f64, h: f64, n: usize, what: &str, line: usize) -> Result<usize> {
    let r = (v - x0) / h;
    let i = r.round();
    if (r - i).abs() > 1e-6 || i < 0.0 || i as usize > n {
        return Err(Error::GridMismatch(format!("line {line}: {what} = {v} is not a grid node")));
    }
    Ok(i as usize)
}

/// Read the first snapshot of a CSV written by [`write_csv`] onto `grid`.
/// Every node of every field must be present; the `t` column is kept.
pub fn read_fields_csv(text: &str, grid: &Grid) -> Result<FieldState> {
    let mut state = FieldState::zeros(grid);
    let names: HashMap<String, (Species, Side)> =
        field_order().into_iter().map(|(s, side)| (field_name(s, side), (s, side))).collect();
    let mut seen = vec![false; 6 * (grid.nx_i.max(grid.nx_s) + 1) * (grid.ny + 1)];
    let mut first_t = None;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "t,field,x,y,value" => {}
        _ => return Err(Error::Config("snapshot CSV must start with `t,field,x,y,value`".into())),
    }
    let stride = (grid.nx_i.max(grid.nx_s) + 1) * (grid.ny + 1);
    for (ln, line) in lines {
        let line_no = ln + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(Error::Config(format!("line {line_no}: expected 5 columns")));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Config(format!("line {line_no}: `{s}` is not a number")))
        };
        let t = num(cols[0])?;
        match first_t {
            None => first_t = Some(t),
            Some(t0) if t0 != t => break,
            _ => {}
        }
        let &(species, side) =
            names.get(cols[1]).ok_or_else(|| Error::Config(format!("line {line_no}: unknown field `{}`", cols[1])))?;
        let pair = &mut state.fields[species.index()];
        let g = side_mut(pair, side);
        let i = node_index(num(cols[2])?, g.x0, g.hx(), g.nx, "x", line_no)?;
        let j = node_index(num(cols[3])?, 0.0, g.hy(), g.ny, "y", line_no)?;
        g.set(i, j, num(cols[4])?);
        let pos = (species.index() + 3 * (side == Side::Susceptible) as usize) * stride + i * (grid.ny + 1) + j;
        seen[pos] = true;
    }
    for (species, side) in field_order() {
        let g = state.field(species, side);
        let base = (species.index() + 3 * (side == Side::Susceptible) as usize) * stride;
        if (0..(g.nx + 1) * (g.ny + 1)).any(|p| !seen[base + p]) {
            return Err(Error::GridMismatch(format!(
                "field {} does not cover the grid",
                field_name(species, side)
            )));
        }
    }
    state.t = first_t.unwrap_or(0.0);
    Ok(state)
}

pub fn write_binary_header(grid: &Grid, out: &mut impl Write) -> Result<()> {
    out.write_all(MAGIC)?;
    for v in [VERSION, grid.nx_i as u32, grid.nx_s as u32, grid.ny as u32, FIELD_COUNT] {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_binary_snapshot(state: &FieldState, out: &mut impl Write) -> Result<()> {
    out.write_all(&state.t.to_le_bytes())?;
    for (species, side) in field_order() {
        for v in &state.field(species, side).values {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_binary(grid: &Grid, snapshots: &[FieldState], out: &mut impl Write) -> Result<()> {
    write_binary_header(grid, out)?;
    for s in snapshots {
        write_binary_snapshot(s, out)?;
    }
    Ok(())
}

/// Read every snapshot of a binary file. The habitat widths are not stored
/// and come from `grid`, whose sizes must match the header.
pub fn read_binary(input: &mut impl Read, grid: &Grid) -> Result<Vec<FieldState>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < 24 || &bytes[..4] != MAGIC {
        return Err(Error::Io("not an SKPD snapshot file".into()));
    }
    let word = |k: usize| u32::from_le_bytes(bytes[4 + 4 * k..8 + 4 * k].try_into().expect("four bytes"));
    if word(0) != VERSION {
        return Err(Error::Io(format!("unsupported snapshot version {}", word(0))));
    }
    let dims = (word(1) as usize, word(2) as usize, word(3) as usize);
    if dims != (grid.nx_i, grid.nx_s, grid.ny) || word(4) != FIELD_COUNT {
        return Err(Error::GridMismatch(format!("file grid {dims:?} differs from the configured grid")));
    }
    let per_field = |nx: usize| (nx + 1) * (grid.ny + 1);
    let count = 1 + 3 * per_field(grid.nx_i) + 3 * per_field(grid.nx_s);
    let body = &bytes[24..];
    if body.len() % (8 * count) != 0 {
        return Err(Error::Io("truncated snapshot file".into()));
    }
    let floats: Vec<f64> =
        body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes"))).collect();
    Ok(floats
        .chunks_exact(count)
        .map(|chunk| {
            let mut state = FieldState::zeros(grid);
            state.t = chunk[0];
            let mut at = 1;
            for (species, side) in field_order() {
                let g = side_mut(&mut state.fields[species.index()], side);
                let len = g.values.len();
                g.values.copy_from_slice(&chunk[at..at + len]);
                at += len;
            }
            state
        })
        .collect())
}
