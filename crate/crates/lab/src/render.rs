//! SVG pictures of trajectories over the navigation layout.

use std::fmt::Write;

use polyrl_core::envs::{CoverageGrid, NavSpec};

use crate::experiment::TrajectoryRow;

const PALETTE: &[&str] = &["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// One polyline per episode over walls, puddle, start and goal. With
/// `coverage_cell`, visited cells are shaded first.
pub fn render_svg(trajectory: &[TrajectoryRow], spec: &NavSpec, coverage_cell: Option<f64>) -> String {
    let (w, h) = (spec.width, spec.height);
    let stroke = (w.max(h) / 400.0).max(0.05);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" width="600" height="{}">"#,
        600.0 * h / w
    );
    let _ = writeln!(s, r#"<g transform="translate(0 {h}) scale(1 -1)">"#);
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white" stroke="black" stroke-width="{}"/>"#,
        2.0 * stroke
    );
    if let Some(cell) = coverage_cell {
        let mut grid = CoverageGrid::new(spec, cell);
        for r in trajectory {
            grid.visit(&[r.x, r.y]);
        }
        let (nx, ny) = grid.shape();
        for j in 0..ny {
            for i in 0..nx {
                if grid.is_visited(i, j) {
                    let _ = writeln!(
                        s,
                        r##"<rect class="cell" x="{}" y="{}" width="{cell}" height="{cell}" fill="#c6dbef"/>"##,
                        i as f64 * cell,
                        j as f64 * cell
                    );
                }
            }
        }
    }
    if let Some(p) = &spec.puddle {
        let _ = writeln!(
            s,
            r##"<rect class="puddle" x="{}" y="{}" width="{}" height="{}" fill="#6baed6" fill-opacity="0.6"/>"##,
            p.min[0],
            p.min[1],
            p.width(),
            p.height()
        );
    }
    for wall in &spec.walls {
        let _ = writeln!(
            s,
            r#"<line class="wall" x1="{}" y1="{}" x2="{}" y2="{}" stroke="black" stroke-width="{}"/>"#,
            wall.a[0],
            wall.a[1],
            wall.b[0],
            wall.b[1],
            2.0 * stroke
        );
    }
    let mut start = 0;
    let mut k = 0;
    while start < trajectory.len() {
        let ep = trajectory[start].episode;
        let end = trajectory[start..]
            .iter()
            .position(|r| r.episode != ep)
            .map_or(trajectory.len(), |o| start + o);
        let pts: Vec<String> = trajectory[start..end].iter().map(|r| format!("{},{}", r.x, r.y)).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="episode" data-episode="{ep}" fill="none" stroke="{}" stroke-width="{stroke}" points="{}"/>"#,
            PALETTE[k % PALETTE.len()],
            pts.join(" ")
        );
        start = end;
        k += 1;
    }
    for (class, disc, color) in [("start", &spec.start, "red"), ("goal", &spec.goal, "green")] {
        let _ = writeln!(
            s,
            r#"<circle class="{class}" cx="{}" cy="{}" r="{}" fill="{color}"/>"#,
            disc.center[0],
            disc.center[1],
            disc.radius.max(0.5)
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(episode: u64, step: u64, x: f64, y: f64) -> TrajectoryRow {
        TrajectoryRow { episode, step, x, y, reward: 0.0, done: false }
    }

    #[test]
    fn empty_trajectory_has_overlays_only() {
        let svg = render_svg(&[], &NavSpec::nested_chambers(), None);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 0);
        assert_eq!(svg.matches(r#"class="wall""#).count(), 5);
        assert!(svg.contains(r#"class="start" cx="50" cy="50""#));
    }

    #[test]
    fn one_polyline_per_episode() {
        let t = [row(0, 0, 1.0, 2.0), row(0, 1, 2.0, 2.5), row(0, 2, 3.0, 3.0)];
        let svg = render_svg(&t, &NavSpec::chamber(), None);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains(r#"points="1,2 2,2.5 3,3""#));
        let t2 = [row(0, 0, 1.0, 2.0), row(1, 0, 5.0, 5.0)];
        assert_eq!(render_svg(&t2, &NavSpec::chamber(), None).matches("<polyline").count(), 2);
    }

    #[test]
    fn coverage_cells_and_puddle() {
        let t = [row(0, 0, 1.0, 1.0), row(0, 1, 15.0, 1.0)];
        let svg = render_svg(&t, &NavSpec::chamber_with_puddle(), Some(10.0));
        assert_eq!(svg.matches(r#"class="cell""#).count(), 2);
        assert!(svg.contains(r#"class="puddle" x="180" y="180" width="40" height="40""#));
        assert_eq!(svg, render_svg(&t, &NavSpec::chamber_with_puddle(), Some(10.0)));
    }
}
