//! CSV, SVG and JSON writers. Every number goes through [`fmt_num`] so
//! identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use hmcf_core::{reconstruct, DiagnosticsRecord, StringRecord, StringState, SupportProfile, SupportState};

pub const DIAGNOSTICS_HEADER: &str = "t,L,A,k_min,k_max,grad_bound,conv_margin,width,isoper,\
dL_dt_residual,d2L_dt2_residual,dA_dt_residual,d2A_dt2_residual,d3A_dt3_residual,curvature_pde_residual";

pub const SNAPSHOT_HEADER: &str = "theta,S,S_tau,x,y,k";
pub const STRING_HEADER: &str = "t,mean_radius,diameter,gauge_residual,timelike_margin";
pub const STRING_SNAPSHOT_HEADER: &str = "u,x,y,vx,vy";
pub const ORACLE_HEADER: &str = "t,R,Rdot";

/// 17 significant digits in scientific notation.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn row(out: &mut String, values: impl IntoIterator<Item = String>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(',');
        }
        out.push_str(&v);
        first = false;
    }
    out.push('\n');
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::with_capacity(256 * (records.len() + 1));
    out.push_str(DIAGNOSTICS_HEADER);
    out.push('\n');
    for r in records {
        row(
            &mut out,
            [
                fmt_num(r.t),
                fmt_num(r.length),
                fmt_num(r.area),
                fmt_num(r.k_min),
                fmt_num(r.k_max),
                fmt_num(r.grad_bound),
                fmt_num(r.conv_margin),
                fmt_num(r.width),
                fmt_num(r.isoper),
                opt(r.dl_dt_residual),
                opt(r.d2l_dt2_residual),
                opt(r.da_dt_residual),
                opt(r.d2a_dt2_residual),
                opt(r.d3a_dt3_residual),
                opt(r.curvature_pde_residual),
            ],
        );
    }
    out
}

pub fn snapshot_csv(state: &SupportState) -> hmcf_core::Result<String> {
    let profile = SupportProfile::new(state.grid.clone(), state.s.clone())?;
    let curve = reconstruct(&profile)?;
    let mut out = String::with_capacity(128 * (state.n() + 1));
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    for j in 0..state.n() {
        row(
            &mut out,
            [state.grid.node(j), state.s[j], state.p[j], curve.x[j], curve.y[j], curve.k[j]].map(fmt_num),
        );
    }
    Ok(out)
}

pub fn string_csv(records: &[StringRecord]) -> String {
    let mut out = String::new();
    out.push_str(STRING_HEADER);
    out.push('\n');
    for r in records {
        row(&mut out, [r.t, r.mean_radius, r.diameter, r.gauge_residual, r.timelike_margin].map(fmt_num));
    }
    out
}

pub fn string_snapshot_csv(state: &StringState) -> String {
    let mut out = String::new();
    out.push_str(STRING_SNAPSHOT_HEADER);
    out.push('\n');
    for j in 0..state.m() {
        let (x, v) = (state.x[j], state.v[j]);
        row(&mut out, [state.grid.node(j), x[0], x[1], v[0], v[1]].map(fmt_num));
    }
    out
}

pub fn oracle_csv(times: &[f64], radius: &[f64], rate: &[f64]) -> String {
    let mut out = String::new();
    out.push_str(ORACLE_HEADER);
    out.push('\n');
    for ((t, r), v) in times.iter().zip(radius).zip(rate) {
        row(&mut out, [*t, *r, *v].map(fmt_num));
    }
    out
}

/// Closed polylines, one per curve, fitted into a square canvas.
pub fn curves_svg(curves: &[(f64, Vec<[f64; 2]>)]) -> String {
    const SIZE: f64 = 600.0;
    const PAD: f64 = 20.0;
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in curves.iter().flat_map(|(_, c)| c) {
        for i in 0..2 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let scale = (SIZE - 2.0 * PAD) / span;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">"
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let n = curves.len().max(2) as f64;
    for (i, (t, pts)) in curves.iter().enumerate() {
        let shade = (200.0 * (1.0 - i as f64 / (n - 1.0))) as u8;
        let _ = write!(
            out,
            "<polygon fill=\"none\" stroke=\"rgb({shade},{shade},255)\" stroke-width=\"1\" data-t=\"{}\" points=\"",
            fmt_num(*t)
        );
        for p in pts {
            let x = PAD + (p[0] - lo[0]) * scale;
            let y = SIZE - PAD - (p[1] - lo[1]) * scale;
            let _ = write!(out, "{x:.3},{y:.3} ");
        }
        out.push_str("\"/>\n");
    }
    out.push_str("</svg>\n");
    out
}

pub fn write(dir: &Path, name: &str, contents: &str) -> io::Result<()> {
    fs::write(dir.join(name), contents)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_have_seventeen_digits() {
        assert_eq!(fmt_num(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_num(-0.125), "-1.2500000000000000e-1");
        assert_eq!(fmt_num(1.2533141373155003), "1.2533141373155003e0");
    }

    #[test]
    fn header_column_count() {
        assert_eq!(DIAGNOSTICS_HEADER.split(',').count(), 15);
        assert!(DIAGNOSTICS_HEADER.starts_with("t,L,A,k_min"));
    }

    #[test]
    fn svg_has_one_polygon_per_curve() {
        let c = vec![(0.0, vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]); 3];
        let svg = curves_svg(&c);
        assert_eq!(svg.matches("<polygon").count(), 3);
    }
}
