//! Static SVG rendering of a trajectory map.

use std::fmt::Write;

use ftdiag_core::trajectory::Trajectory;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 540.0;
const MARGIN: f64 = 50.0;
const LEGEND_W: f64 = 110.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
];

/// Draws the first two signature coordinates of each trajectory; a
/// one-dimensional map is drawn along the horizontal axis.
pub fn render(trajectories: &[Trajectory], query: Option<[f64; 2]>) -> String {
    let xy = |c: &[f64]| [c[0], c.get(1).copied().unwrap_or(0.0)];
    let mut pts: Vec<[f64; 2]> = trajectories
        .iter()
        .flat_map(|t| t.points.iter().map(|p| xy(&p.coords)))
        .collect();
    pts.push([0.0, 0.0]);
    pts.extend(query);
    let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), p| (a.min(p[0]), b.max(p[0]), c.min(p[1]), d.max(p[1])),
    );
    for (lo, hi) in [(&mut x0, &mut x1), (&mut y0, &mut y1)] {
        let pad = ((*hi - *lo) * 0.05).max(1e-9);
        *lo -= pad;
        *hi += pad;
    }
    let plot_w = WIDTH - 2.0 * MARGIN - LEGEND_W;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>"##
    );
    // Axes through the golden point.
    let _ = writeln!(
        s,
        r##"<line x1="{:.3}" y1="{MARGIN}" x2="{:.3}" y2="{:.3}" stroke="#bbb" stroke-dasharray="4 3"/>"##,
        sx(0.0),
        sx(0.0),
        HEIGHT - MARGIN
    );
    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="#bbb" stroke-dasharray="4 3"/>"##,
        sy(0.0),
        MARGIN + plot_w,
        sy(0.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" font-size="12" text-anchor="middle">x1 (dB)</text>"#,
        MARGIN + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.3}" font-size="12" text-anchor="middle" transform="rotate(-90 15 {:.3})">x2 (dB)</text>"#,
        MARGIN + plot_h / 2.0,
        MARGIN + plot_h / 2.0
    );

    for (i, t) in trajectories.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let coords = t
            .points
            .iter()
            .map(|p| {
                let [x, y] = xy(&p.coords);
                format!("{:.3},{:.3}", sx(x), sy(y))
            })
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(
            s,
            r#"<polyline class="trajectory" data-component="{}" points="{coords}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            escape(&t.component)
        );
    }

    let _ = writeln!(s, r#"<g class="legend">"#);
    for (i, t) in trajectories.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let y = MARGIN + 10.0 + 18.0 * i as f64;
        let x = WIDTH - LEGEND_W - MARGIN / 2.0 + 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{x:.3}" y1="{y:.3}" x2="{:.3}" y2="{y:.3}" stroke="{colour}" stroke-width="3"/>"#,
            x + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-size="12">{}</text>"#,
            x + 26.0,
            y + 4.0,
            escape(&t.component)
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(
        s,
        r#"<circle class="origin" cx="{:.3}" cy="{:.3}" r="4" fill="black"/>"#,
        sx(0.0),
        sy(0.0)
    );
    if let Some([qx, qy]) = query {
        let _ = writeln!(
            s,
            r#"<polygon class="query" points="{}" fill="gold" stroke="black"/>"#,
            star(sx(qx), sy(qy), 9.0, 4.0)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn star(cx: f64, cy: f64, outer: f64, inner: f64) -> String {
    (0..10)
        .map(|k| {
            let r = if k % 2 == 0 { outer } else { inner };
            let a = std::f64::consts::PI * (k as f64 / 5.0 - 0.5);
            format!("{:.3},{:.3}", cx + r * a.cos(), cy + r * a.sin())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
