//! Delimited-text writers: UTF-8, LF line endings, `.` decimal separator,
//! one header row, values formatted with full double precision.
//!
//! Scalar summaries (limits, residuals) go into trailing comment lines
//! prefixed with `#` so a plain column reader can skip them.

use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::montecarlo::FluxTally;
use crate::renewal::RenewalSolution;
use crate::spectral::{SpectralAbscissa, ZeroSet};

const DELIM: char = '\t';

fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

fn write_lines(path: &Path, lines: impl IntoIterator<Item = String>) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for line in lines {
        file.write_all(line.as_bytes())?;
        file.write_all(b"\n")?;
    }
    file.flush()?;
    Ok(())
}

/// Columns: t, mu, source. Footer: mu_infinity, residual_max.
pub fn write_solution(path: &Path, sol: &RenewalSolution) -> Result<()> {
    let header = format!("t{DELIM}mu{DELIM}source");
    let rows = sol.values.iter().zip(&sol.source_values).enumerate().map(|(i, (mu, s))| {
        format!("{}{DELIM}{}{DELIM}{}", fmt(i as f64 * sol.dt), fmt(*mu), fmt(*s))
    });
    let footer = [
        format!("# mu_infinity{DELIM}{}", fmt(sol.mu_infinity)),
        format!("# residual_max{DELIM}{}", fmt(sol.residual_max)),
    ];
    write_lines(path, std::iter::once(header).chain(rows).chain(footer))
}

/// Columns: re, im, residual. Footer: spectral abscissa and searched strip.
pub fn write_zero_set(path: &Path, zs: &ZeroSet, abscissa: Option<&SpectralAbscissa>) -> Result<()> {
    let header = format!("re{DELIM}im{DELIM}residual");
    let rows = zs.zeros.iter().zip(&zs.refinement_residuals).map(|(z, r)| {
        format!("{}{DELIM}{}{DELIM}{}", fmt(z.re), fmt(z.im), fmt(*r))
    });
    let mut footer = Vec::new();
    if let Some(a) = abscissa {
        footer.push(format!("# spectral_abscissa{DELIM}{}", fmt(a.alpha)));
        footer.push(format!(
            "# searched_strip{DELIM}{}{DELIM}{}",
            fmt(a.searched_strip.0),
            fmt(a.searched_strip.1)
        ));
    }
    write_lines(path, std::iter::once(header).chain(rows).chain(footer))
}

/// One abscissa column `t` followed by one column per named curve. All
/// curves must have the same length as `ts`.
pub fn write_curves(path: &Path, ts: &[f64], curves: &[(&str, &[f64])]) -> Result<()> {
    for (name, ys) in curves {
        assert_eq!(ys.len(), ts.len(), "curve `{name}` length mismatch");
    }
    let mut header = String::from("t");
    for (name, _) in curves {
        header.push(DELIM);
        header.push_str(name);
    }
    let rows = ts.iter().enumerate().map(|(i, t)| {
        let mut row = fmt(*t);
        for (_, ys) in curves {
            row.push(DELIM);
            row.push_str(&fmt(ys[i]));
        }
        row
    });
    write_lines(path, std::iter::once(header).chain(rows))
}

/// Columns: bin_center, flux, stderr. The flux is per unit wall area and
/// time; a header comment records the normalization and the mass that can
/// never reach the wall.
pub fn write_tally(path: &Path, tally: &FluxTally, radiative: bool) -> Result<()> {
    let norm = if radiative {
        "count / (4 pi^2 bin_width)"
    } else {
        "weight / (4 pi bin_width)"
    };
    let head = [
        format!("# normalization{DELIM}{norm}"),
        format!("# never_hit_mass{DELIM}{}", fmt(tally.never_hit_mass)),
        format!("bin_center{DELIM}flux{DELIM}stderr"),
    ];
    let rows = tally.flux.iter().zip(&tally.stderr).enumerate().map(|(i, (f, se))| {
        let mid = (i as f64 + 0.5) * tally.bin_width;
        format!("{}{DELIM}{}{DELIM}{}", fmt(mid), fmt(*f), fmt(*se))
    });
    write_lines(path, head.into_iter().chain(rows))
}

/// Columns: bin_center, count, density. The density column rescales counts
/// so the histogram integrates to 1, directly comparable to the exit-time
/// kernel.
pub fn write_interval_histogram(path: &Path, tally: &FluxTally) -> Result<()> {
    let header = format!("bin_center{DELIM}count{DELIM}density");
    let total = tally.interval_total.max(1) as f64;
    let rows = tally.interval_counts.iter().enumerate().map(|(i, &c)| {
        let mid = (i as f64 + 0.5) * tally.interval_bin_width;
        let density = c as f64 / (total * tally.interval_bin_width);
        format!("{}{DELIM}{}{DELIM}{}", fmt(mid), c, fmt(density))
    });
    write_lines(path, std::iter::once(header).chain(rows))
}
