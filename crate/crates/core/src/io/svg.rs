use crate::ca::CaSolution;
use crate::diagnostics::{decompose_inertia, percent, DuplicateGroup};
use crate::error::{Error, Result};
use crate::supplementary::SupplementarySolution;
use crate::table::ContingencyTable;
use serde::{Deserialize, Serialize};
use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// Rows and columns in principal coordinates.
    Symmetric,
    /// Rows principal, columns standard.
    AsymmetricRow,
    /// Rows standard, columns principal.
    AsymmetricCol,
    /// Rows principal, columns in contribution coordinates.
    ContributionBiplot,
}

impl std::str::FromStr for MapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(MapKind::Symmetric),
            "asymmetric_row" => Ok(MapKind::AsymmetricRow),
            "asymmetric_col" => Ok(MapKind::AsymmetricCol),
            "contribution_biplot" => Ok(MapKind::ContributionBiplot),
            other => Err(Error::InvalidConfig(format!("unknown map kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    Row,
    Col,
    SupRow,
    SupCol,
}

impl PointClass {
    fn css(self) -> &'static str {
        match self {
            PointClass::Row => "row",
            PointClass::Col => "col",
            PointClass::SupRow => "row sup",
            PointClass::SupCol => "col sup",
        }
    }

    fn is_row(self) -> bool {
        matches!(self, PointClass::Row | PointClass::SupRow)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapPoint {
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub class: PointClass,
    /// Tooltip, used for the member list of a collapsed group.
    pub title: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MapPlot {
    pub title: Option<String>,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<MapPoint>,
    pub size: f64,
}

#[derive(Debug, Clone)]
pub struct MapOptions<'a> {
    /// Width and height of the square canvas in pixels.
    pub size: f64,
    pub title: Option<String>,
    pub group_duplicates: bool,
    pub supplementary: Option<&'a SupplementarySolution>,
}

impl Default for MapOptions<'_> {
    fn default() -> Self {
        MapOptions {
            size: 640.0,
            title: None,
            group_duplicates: true,
            supplementary: None,
        }
    }
}

const MARGIN: f64 = 60.0;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn collapse(
    labels: &[String],
    coords: Vec<(f64, f64)>,
    groups: &[DuplicateGroup],
    class: PointClass,
) -> Vec<MapPoint> {
    let mut skip = vec![false; labels.len()];
    let mut titles = vec![None; labels.len()];
    for g in groups {
        titles[g.indices[0]] = Some(g.members.join(", "));
        for &m in &g.indices[1..] {
            skip[m] = true;
        }
    }
    labels
        .iter()
        .zip(coords)
        .enumerate()
        .filter(|(i, _)| !skip[*i])
        .map(|(i, (label, (x, y)))| MapPoint {
            label: label.clone(),
            x,
            y,
            class,
            title: titles[i].take(),
        })
        .collect()
}

/// Builds and renders a correspondence map of dimensions `dims` (1-based).
/// `t` is the table `sol` was fitted to.
pub fn render_map(
    t: &ContingencyTable,
    sol: &CaSolution,
    kind: MapKind,
    dims: (usize, usize),
    opts: &MapOptions,
) -> Result<String> {
    let (a, b) = (sol.check_dim(dims.0)?, sol.check_dim(dims.1)?);
    let sigma = |k: usize| sol.sigma[k];
    let (row_m, col_m) = match kind {
        MapKind::Symmetric => (&sol.f, &sol.g),
        MapKind::AsymmetricRow => (&sol.f, &sol.gamma),
        MapKind::AsymmetricCol => (&sol.phi, &sol.g),
        MapKind::ContributionBiplot => (&sol.f, &sol.gamma),
    };
    let pair = |m: &crate::linalg::Matrix, i: usize| (m[(i, a)], m[(i, b)]);
    let rows: Vec<(f64, f64)> = (0..sol.n_rows()).map(|i| pair(row_m, i)).collect();
    let cols: Vec<(f64, f64)> = (0..sol.n_cols())
        .map(|j| {
            let (x, y) = pair(col_m, j);
            if kind == MapKind::ContributionBiplot {
                let w = sol.col_masses[j].sqrt();
                (x * w, y * w)
            } else {
                (x, y)
            }
        })
        .collect();

    let (row_groups, col_groups) = if opts.group_duplicates {
        let dec = decompose_inertia(t, sol)?;
        (dec.row_groups, dec.col_groups)
    } else {
        (Vec::new(), Vec::new())
    };
    let mut points = collapse(t.row_labels(), rows, &row_groups, PointClass::Row);
    points.extend(collapse(t.col_labels(), cols, &col_groups, PointClass::Col));

    if let Some(sup) = opts.supplementary {
        // principal coordinates, rescaled to standard where the kind asks
        let row_scale = matches!(kind, MapKind::AsymmetricCol);
        let col_scale = matches!(kind, MapKind::AsymmetricRow);
        for (label, c) in &sup.sup_row_coords {
            let (x, y) = if row_scale {
                (c[a] / sigma(a), c[b] / sigma(b))
            } else {
                (c[a], c[b])
            };
            points.push(MapPoint {
                label: label.clone(),
                x,
                y,
                class: PointClass::SupRow,
                title: None,
            });
        }
        // contribution coordinates need a mass, which a supplementary
        // column does not have
        if kind != MapKind::ContributionBiplot {
            for (label, c) in &sup.sup_col_coords {
                let (x, y) = if col_scale {
                    (c[a] / sigma(a), c[b] / sigma(b))
                } else {
                    (c[a], c[b])
                };
                points.push(MapPoint {
                    label: label.clone(),
                    x,
                    y,
                    class: PointClass::SupCol,
                    title: None,
                });
            }
        }
    }

    let axis = |k: usize| format!("Dim {} ({})", k + 1, percent(sol.inertia_proportions[k]));
    Ok(render_svg(&MapPlot {
        title: opts.title.clone(),
        x_label: axis(a),
        y_label: axis(b),
        points,
        size: opts.size,
    }))
}

/// Renders points with equal unit lengths on both axes and the origin in view.
pub fn render_svg(plot: &MapPlot) -> String {
    let size = if plot.size > 2.0 * MARGIN {
        plot.size
    } else {
        640.0
    };
    let span = |vals: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = vals.fold((0.0f64, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let pad = ((hi - lo) * 0.08).max(1e-9);
        (lo - pad, hi + pad)
    };
    let (x0, x1) = span(&mut plot.points.iter().map(|p| p.x));
    let (y0, y1) = span(&mut plot.points.iter().map(|p| p.y));
    let inner = size - 2.0 * MARGIN;
    let scale = inner / (x1 - x0).max(y1 - y0);
    // centre the data box inside the square
    let ox = MARGIN + (inner - (x1 - x0) * scale) / 2.0;
    let oy = MARGIN + (inner - (y1 - y0) * scale) / 2.0;
    let px = |x: f64| ox + (x - x0) * scale;
    let py = |y: f64| oy + (y1 - y) * scale;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size:.0}" height="{size:.0}" viewBox="0 0 {size:.0} {size:.0}">"#
    );
    let _ = writeln!(
        s,
        "<style>.row{{fill:#1f5fa8}}.col{{fill:#c0392b}}.sup{{fill:none;stroke-width:1.5;stroke-dasharray:3 2}}\
         .row.sup{{stroke:#1f5fa8}}.col.sup{{stroke:#c0392b}}text{{font-family:sans-serif;font-size:11px}}\
         .axis{{stroke:#888;stroke-width:1}}</style>"
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(t) = &plot.title {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            size / 2.0,
            escape(t)
        );
    }
    let (cx, cy) = (px(0.0), py(0.0));
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{MARGIN:.2}" y1="{cy:.2}" x2="{:.2}" y2="{cy:.2}"/>"#,
        size - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{cx:.2}" y1="{MARGIN:.2}" x2="{cx:.2}" y2="{:.2}"/>"#,
        size - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
        size - MARGIN,
        size - MARGIN / 2.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
        MARGIN / 2.0,
        MARGIN,
        MARGIN / 2.0,
        MARGIN,
        escape(&plot.y_label)
    );

    for p in &plot.points {
        let (x, y) = (px(p.x), py(p.y));
        let _ = write!(s, r#"<g class="{}">"#, p.class.css());
        if let Some(t) = &p.title {
            let _ = write!(s, "<title>{}</title>", escape(t));
        }
        if p.class.is_row() {
            let _ = write!(
                s,
                r#"<circle class="{}" cx="{x:.2}" cy="{y:.2}" r="4"/>"#,
                p.class.css()
            );
        } else {
            let _ = write!(
                s,
                r#"<polygon class="{}" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}"/>"#,
                p.class.css(),
                x,
                y - 5.0,
                x - 4.5,
                y + 3.5,
                x + 4.5,
                y + 3.5
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text></g>"#,
            x + 6.0,
            y - 4.0,
            escape(&p.label)
        );
    }
    s.push_str("</svg>\n");
    s
}
