//! Output plumbing shared by every subcommand: CSV tables with an embedded
//! configuration echo, and conversions between in-memory arrays and the
//! toolkit's grid file format.

use std::path::{Path, PathBuf};

use foliated_xray::error::{Error, Result};
use foliated_xray::io::{read_grid, write_grid, AxisMeta, GridHeader};
use foliated_xray::scene::Scene;
use foliated_xray::transform::{AdaptedProfile, Sinogram, OMEGAS};

/// Context stamped into every artifact a command writes.
pub struct RunStamp<'a> {
    pub command: &'a str,
    pub echo: &'a str,
}

impl RunStamp<'_> {
    /// Comment prologue of a CSV file: command, configuration echo, then any
    /// extra `key: value` lines the caller wants recorded.
    fn csv_prologue(&self, extra: &[(String, String)]) -> String {
        let mut out = format!("# command: {}\n# config: {}\n", self.command, self.echo);
        for (k, v) in extra {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out
    }

    /// Write a CSV table: `#`-prologue, header row, data rows.
    pub fn write_csv(
        &self,
        path: &Path,
        extra: &[(String, String)],
        header_row: &str,
        body: &str,
    ) -> Result<()> {
        let mut text = self.csv_prologue(extra);
        text.push_str(header_row);
        if !header_row.ends_with('\n') {
            text.push('\n');
        }
        text.push_str(body);
        std::fs::write(path, text).map_err(|e| path_io(path, e))?;
        Ok(())
    }

    /// Base metadata of a grid header written by this run.
    pub fn grid_meta(&self, header: GridHeader) -> GridHeader {
        header
            .with_meta("command", self.command)
            .with_meta("config", self.echo)
    }
}

pub fn path_io(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

/// `dir/name`, after making sure `dir` exists.
pub fn out_path(dir: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| path_io(dir, e))?;
    Ok(dir.join(name))
}

/// Write a sinogram as a 4-D grid (ω, launch depth, leaf, slope).
pub fn write_sinogram(path: &Path, stamp: &RunStamp, s: &Sinogram) -> Result<()> {
    let g = &s.grid;
    let header = stamp.grid_meta(
        GridHeader::real(
            vec![OMEGAS.len(), g.x.n, g.y.n, g.lambda.n],
            vec![
                AxisMeta::new("omega", OMEGAS[0], OMEGAS[OMEGAS.len() - 1]),
                AxisMeta::of("x", &g.x),
                AxisMeta::of("y", &g.y),
                AxisMeta::of("lambda", &g.lambda),
            ],
        )
        .with_meta("quad_step", format!("{:e}", s.quad_step))
        .with_meta("weight", s.weight_name.clone())
        .with_meta("dropped_rays", s.dropped_rays.to_string()),
    );
    write_grid(path, &header, &s.values)
}

/// Read a sinogram written by [`write_sinogram`], checking that it belongs
/// to `scene`'s ray family.
pub fn read_sinogram(path: &Path, scene: &Scene) -> Result<Sinogram> {
    let (header, values) = read_grid(path)?;
    let g = &scene.rays;
    let want = [OMEGAS.len(), g.x.n, g.y.n, g.lambda.n];
    if header.dims != want {
        return Err(Error::validation(format!(
            "{}: sinogram dims {:?} do not match the scene's ray grid {:?}",
            path.display(),
            header.dims,
            want
        )));
    }
    for (meta, axis) in header.axes[1..].iter().zip([&g.x, &g.y, &g.lambda]) {
        let scale = axis.hi.abs().max(axis.lo.abs()).max(1e-12);
        if (meta.lo - axis.lo).abs() > 1e-9 * scale || (meta.hi - axis.hi).abs() > 1e-9 * scale {
            return Err(Error::validation(format!(
                "{}: axis '{}' spans [{}, {}] but the scene expects [{}, {}]",
                path.display(),
                meta.name,
                meta.lo,
                meta.hi,
                axis.lo,
                axis.hi
            )));
        }
    }
    let quad_step = header
        .meta
        .get("quad_step")
        .and_then(|v| v.parse().ok())
        .unwrap_or(scene.quad_step);
    let weight_name = header
        .meta
        .get("weight")
        .cloned()
        .unwrap_or_else(|| scene.weight.name.clone());
    let dropped_rays = header
        .meta
        .get("dropped_rays")
        .and_then(|v| v.parse().ok())
        .unwrap_or(0);
    Ok(Sinogram {
        grid: scene.rays,
        values,
        quad_step,
        weight_name,
        dropped_rays,
    })
}

/// Write a depth profile as a 1-D grid over the adapted depth axis.
pub fn write_profile(path: &Path, stamp: &RunStamp, p: &AdaptedProfile) -> Result<()> {
    let header = stamp.grid_meta(
        GridHeader::real(
            vec![p.len()],
            vec![AxisMeta::new("x_tilde", -p.c, 0.0)],
        )
        .with_meta("collar", format!("{:e}", p.c)),
    );
    write_grid(path, &header, p.values())
}
