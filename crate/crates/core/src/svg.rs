//! Plain SVG drawings of Stokes curves and walls.

use std::fmt::Write;

use num::complex::Complex64 as C64;

use crate::algfun::{PoleLocation, SpectralData};

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

/// One polyline to draw.
pub struct Stroke<'a> {
    pub points: &'a [C64],
    pub ty: (usize, usize),
    pub generation: usize,
}

fn color(ty: (usize, usize), rank: usize) -> &'static str {
    PALETTE[(ty.0 * rank.max(1) + ty.1) % PALETTE.len()]
}

fn num(x: f64) -> String {
    let s = format!("{x:.5}");
    if s == "-0.00000" {
        "0.00000".into()
    } else {
        s
    }
}

/// Render the curves of `s` inside the disc of radius `window`, with the
/// y axis pointing up.
pub fn render(s: &SpectralData, strokes: &[Stroke], collisions: &[C64], window: f64, title: &str) -> String {
    let r = window * 1.3;
    let unit = r / 200.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="600" height="600">"#,
        num(-r),
        num(-r),
        num(2.0 * r),
        num(2.0 * r)
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(out, r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#ffffff"/>"##, num(-r), num(-r), num(2.0 * r), num(2.0 * r));
    let _ = writeln!(out, r#"<g transform="scale(1,-1)">"#);
    let _ = writeln!(out, r##"<circle cx="0" cy="0" r="{}" fill="none" stroke="#bbbbbb" stroke-width="{}"/>"##, num(window), num(unit));
    for st in strokes {
        if st.points.len() < 2 {
            continue;
        }
        let mut d = String::new();
        for (k, p) in st.points.iter().enumerate() {
            let _ = write!(d, "{}{} {} ", if k == 0 { "M" } else { "L" }, num(p.re), num(p.im));
        }
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="{}" data-type="{},{}" data-generation="{}"/>"#,
            d.trim_end(),
            color(st.ty, s.rank()),
            num(unit * (1.5 + st.generation as f64)),
            st.ty.0 + 1,
            st.ty.1 + 1,
            st.generation
        );
    }
    for tp in s.turning_points() {
        let _ = writeln!(out, r##"<circle cx="{}" cy="{}" r="{}" fill="#d62728"/>"##, num(tp.z.re), num(tp.z.im), num(3.0 * unit));
    }
    for p in s.poles() {
        if let PoleLocation::Finite(z) = p.location {
            let h = 3.0 * unit;
            let _ = writeln!(out, r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#000000"/>"##, num(z.re - h), num(z.im - h), num(2.0 * h), num(2.0 * h));
        }
    }
    for c in collisions {
        let _ = writeln!(out, r##"<circle cx="{}" cy="{}" r="{}" fill="none" stroke="#000000" stroke-width="{}"/>"##, num(c.re), num(c.im), num(4.0 * unit), num(unit));
    }
    out.push_str("</g>\n</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
