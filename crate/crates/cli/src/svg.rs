//! Trace plots as standalone SVG: one polyline of parameter value against
//! iteration, with labeled axes.

use std::fmt::Write as _;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 320.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 45.0;

/// Renders `(iteration, value)` points, already thinned/windowed by the
/// caller. The polyline holds exactly one point per input pair.
pub fn trace_svg(param_name: &str, points: &[(usize, f64)]) -> String {
    let (x0, x1) = match (points.first(), points.last()) {
        (Some(a), Some(b)) => (a.0 as f64, b.0 as f64),
        _ => (0.0, 1.0),
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(_, v) in points {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x_span = (x1 - x0).max(1.0);
    let y_span = hi - lo;
    let map_x = |it: f64| LEFT + plot_w * (it - x0) / x_span;
    let map_y = |v: f64| {
        if y_span == 0.0 {
            TOP + plot_h / 2.0
        } else {
            TOP + plot_h * (1.0 - (v - lo) / y_span)
        }
    };

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="white" stroke="black" stroke-width="1"/>"#
    );
    // Axis labels and end-point ticks.
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">iteration</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 8.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" font-size="14" transform="rotate(-90 16,{:.1})">{param_name}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{LEFT}" y="{:.1}" text-anchor="middle" font-size="12">{x0}</text>"#,
        HEIGHT - BOTTOM + 18.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{x1}</text>"#,
        WIDTH - RIGHT,
        HEIGHT - BOTTOM + 18.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="12">{lo:.3}</text>"#,
        LEFT - 6.0,
        HEIGHT - BOTTOM
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="12">{hi:.3}</text>"#,
        LEFT - 6.0,
        TOP + 10.0
    );

    svg.push_str(r##"<polyline fill="none" stroke="#1f77b4" stroke-width="0.6" points=""##);
    for (i, &(it, v)) in points.iter().enumerate() {
        if i > 0 {
            svg.push(' ');
        }
        let _ = write!(svg, "{:.2},{:.2}", map_x(it as f64), map_y(v));
    }
    svg.push_str("\"/>\n</svg>\n");
    svg
}

/// Applies the window (1-based, inclusive) and thinning to a component
/// series, yielding `(iteration, value)` pairs for [`trace_svg`].
pub fn trace_points(
    series: &[f64],
    window: Option<(usize, usize)>,
    thin: usize,
) -> Vec<(usize, f64)> {
    let (start, end) = match window {
        Some((a, b)) => (a.max(1), b.min(series.len())),
        None => (1, series.len()),
    };
    (start..=end)
        .step_by(thin.max(1))
        .map(|it| (it, series[it - 1]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Minimal well-formedness check: every opened tag is closed in order.
    pub(crate) fn xml_is_well_formed(text: &str) -> bool {
        let mut stack: Vec<String> = Vec::new();
        let mut rest = text;
        while let Some(start) = rest.find('<') {
            let Some(end_rel) = rest[start..].find('>') else {
                return false;
            };
            let tag = &rest[start + 1..start + end_rel];
            rest = &rest[start + end_rel + 1..];
            if tag.starts_with('?') || tag.starts_with('!') {
                continue;
            }
            if let Some(name) = tag.strip_prefix('/') {
                if stack.pop().as_deref() != Some(name.trim()) {
                    return false;
                }
            } else if !tag.ends_with('/') {
                let name = tag.split_whitespace().next().unwrap_or("");
                stack.push(name.to_string());
            }
        }
        stack.is_empty()
    }

    #[test]
    fn svg_is_well_formed_and_has_one_point_per_value() {
        let series: Vec<f64> = (0..500).map(|i| (i as f64 * 0.1).sin()).collect();
        let points = trace_points(&series, None, 1);
        let svg = trace_svg("beta0", &points);
        assert!(xml_is_well_formed(&svg), "malformed svg");
        let poly = svg.split("points=\"").nth(1).unwrap();
        let poly = &poly[..poly.find('"').unwrap()];
        assert_eq!(poly.split(' ').count(), 500);
        assert!(svg.contains(">iteration<"));
        assert!(svg.contains(">beta0<"));
    }

    #[test]
    fn window_and_thin_select_points() {
        let series: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let pts = trace_points(&series, Some((11, 30)), 5);
        assert_eq!(pts, vec![(11, 10.0), (16, 15.0), (21, 20.0), (26, 25.0)]);
        let all = trace_points(&series, None, 1);
        assert_eq!(all.len(), 100);
        assert_eq!(all[0], (1, 0.0));
        assert_eq!(all[99], (100, 99.0));
    }

    #[test]
    fn constant_series_stays_in_frame() {
        let pts = trace_points(&[2.0; 10], None, 1);
        let svg = trace_svg("beta1", &pts);
        assert!(xml_is_well_formed(&svg));
        assert!(!svg.contains("NaN"));
    }
}
