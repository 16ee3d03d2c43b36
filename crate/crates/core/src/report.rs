//! CSV and SVG output for the stability sweep.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stability::{StabilityRecord, STABILITY_CONSTANT};

#[derive(Serialize)]
struct Row<'a> {
    id: &'a str,
    epsilon: f64,
    dist_ball: f64,
    dist_pgram: f64,
    bound: f64,
    slack: f64,
}

/// Columns id, epsilon, dist_ball, dist_pgram, bound, slack, one row per
/// record in the given order.
pub fn write_csv<W: Write>(out: W, records: &[StabilityRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(Row {
            id: &r.id,
            epsilon: r.epsilon,
            dist_ball: r.dist_ball,
            dist_pgram: r.dist_pgram,
            bound: r.bound,
            slack: r.slack,
        })
        .map_err(|e| Error::Invalid(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(records: &[StabilityRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, records)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

/// Scatter of (ε, dist_pgram) with the line 1 + 5√2·ε.
pub fn scatter_svg(records: &[StabilityRecord]) -> String {
    let (w, h, m) = (640.0, 480.0, 50.0);
    let eps_max = records.iter().map(|r| r.epsilon).fold(0.0, f64::max).max(1e-3) * 1.05;
    let y_lo = 1.0;
    let y_hi = records
        .iter()
        .map(|r| r.dist_pgram)
        .fold(2f64.sqrt(), f64::max)
        .max(1.0 + STABILITY_CONSTANT * eps_max.min(0.1))
        * 1.02;
    let sx = |e: f64| m + (w - 2.0 * m) * e / eps_max;
    let sy = |d: f64| h - m - (h - 2.0 * m) * (d - y_lo) / (y_hi - y_lo);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {b} H{r} M{m} {b} V{m}" stroke="black" fill="none"/>"#,
        b = h - m,
        r = w - m
    );
    // Bound line, clipped at the top of the plot.
    let e_top = ((y_hi - 1.0) / STABILITY_CONSTANT).min(eps_max);
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="red"/>"#,
        sx(0.0),
        sy(1.0),
        sx(e_top),
        sy(1.0 + STABILITY_CONSTANT * e_top)
    );
    for r in records {
        let color = if r.pass { "steelblue" } else { "crimson" };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}"/>"#,
            sx(r.epsilon),
            sy(r.dist_pgram.clamp(y_lo, y_hi))
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">epsilon = sqrt(2) - d(K, ball)</text>"#,
        w / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" font-size="12" transform="rotate(-90 15 {})" text-anchor="middle">d(K, square)</text>"#,
        h / 2.0,
        h / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{m}" y="{}" font-size="10">0</text><text x="{}" y="{}" font-size="10" text-anchor="end">{eps_max:.4}</text>"#,
        h - m + 14.0,
        w - m,
        h - m + 14.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{y_lo:.3}</text><text x="{}" y="{}" font-size="10" text-anchor="end">{y_hi:.3}</text>"#,
        m - 4.0,
        h - m,
        m - 4.0,
        m + 4.0
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::stability_scan;

    #[test]
    fn csv_is_deterministic() {
        let recs: Vec<_> = stability_scan(6, 3).into_iter().map(|r| r.unwrap()).collect();
        let a = csv_string(&recs).unwrap();
        let again: Vec<_> = stability_scan(6, 3).into_iter().map(|r| r.unwrap()).collect();
        assert_eq!(a, csv_string(&again).unwrap());
        let mut lines = a.lines();
        assert_eq!(lines.next(), Some("id,epsilon,dist_ball,dist_pgram,bound,slack"));
        assert_eq!(lines.count(), 6);
        let svg = scatter_svg(&recs);
        assert!(svg.starts_with("<svg") && svg.matches("<circle").count() == 6);
    }
}
