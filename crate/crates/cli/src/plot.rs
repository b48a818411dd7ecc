//! Log-log SVG plots of the study CSVs.

use std::fmt::Write as _;

use crate::CliError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 64.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// Maximal refinement error against `1/h`.
    Convergence,
    /// Maximal interpolation error against the number of sparse-grid points, one line per `h`.
    Interpolation,
}

impl std::str::FromStr for PlotKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "convergence" => Ok(PlotKind::Convergence),
            "interpolation" => Ok(PlotKind::Interpolation),
            other => Err(CliError::Config(format!("unknown plot kind `{other}`"))),
        }
    }
}

pub type Series = Vec<(String, Vec<(f64, f64)>)>;

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn number(s: &str, line: usize) -> Result<f64, CliError> {
    s.trim().parse::<f64>().map_err(|_| bad(format!("line {line}: `{s}` is not a number")))
}

/// Extracts the plotted series from a CSV written by this tool.
pub fn read_series(csv: &str, kind: PlotKind) -> Result<Series, CliError> {
    let mut lines = csv.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad("empty file"))?;
    let expected = match kind {
        PlotKind::Convergence => crate::run::CONVERGENCE_HEADER,
        PlotKind::Interpolation => crate::run::INTERPOLATION_HEADER,
    };
    if header.trim() != expected {
        return Err(bad(format!("header `{header}` does not match `{expected}`")));
    }
    let mut series: Series = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != expected.split(',').count() {
            return Err(bad(format!("line {line_no}: expected {} columns", expected.split(',').count())));
        }
        let (label, x, y) = match kind {
            PlotKind::Convergence => {
                if cols[1] != "max" {
                    continue;
                }
                (cols[0].to_string(), 1.0 / number(cols[2], line_no)?, number(cols[3], line_no)?)
            }
            PlotKind::Interpolation => {
                (format!("{} h={}", cols[0], cols[1]), number(cols[3], line_no)?, number(cols[4], line_no)?)
            }
        };
        if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
            continue;
        }
        match series.iter_mut().find(|(l, _)| *l == label) {
            Some((_, pts)) => pts.push((x, y)),
            None => series.push((label, vec![(x, y)])),
        }
    }
    if series.is_empty() {
        return Err(bad("no plottable rows"));
    }
    Ok(series)
}

/// Rate-1 guide anchored at the first point of the first series: `y = y0 x0 / x`.
pub fn guide(series: &Series) -> impl Fn(f64) -> f64 {
    let (x0, y0) = series[0].1[0];
    move |x| y0 * x0 / x
}

/// Renders a log-log plot; identical input gives byte-identical output.
pub fn render(series: &Series, kind: PlotKind) -> String {
    let g = guide(series);
    let all: Vec<(f64, f64)> = series.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    let (xmin, xmax) = all.iter().fold((f64::INFINITY, 0.0f64), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let mut ys: Vec<f64> = all.iter().map(|p| p.1).collect();
    ys.push(g(xmin));
    ys.push(g(xmax));
    let (ymin, ymax) = ys.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &y| (a.min(y), b.max(y)));
    let (lx0, lx1) = (xmin.log10().floor(), xmax.log10().ceil().max(xmin.log10().floor() + 1.0));
    let (ly0, ly1) = (ymin.log10().floor(), ymax.log10().ceil().max(ymin.log10().floor() + 1.0));
    let px = |x: f64| MARGIN + (x.log10() - lx0) / (lx1 - lx0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y.log10() - ly0) / (ly1 - ly0) * (HEIGHT - 2.0 * MARGIN);

    let (xlabel, ylabel) = match kind {
        PlotKind::Convergence => ("1/h", "max error (X norm)"),
        PlotKind::Interpolation => ("sparse grid points", "max interpolation error"),
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for d in lx0 as i32..=lx1 as i32 {
        let x = px(10f64.powi(d));
        let _ = writeln!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#ddd\"/>",
            MARGIN,
            HEIGHT - MARGIN
        );
        let _ = writeln!(
            s,
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">1e{d}</text>",
            HEIGHT - MARGIN + 18.0
        );
    }
    for d in ly0 as i32..=ly1 as i32 {
        let y = py(10f64.powi(d));
        let _ = writeln!(
            s,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#ddd\"/>",
            MARGIN,
            WIDTH - MARGIN
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">1e{d}</text>",
            MARGIN - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"14\" text-anchor=\"middle\">{xlabel}</text>",
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{:.2}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">{ylabel}</text>",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    let _ = writeln!(
        s,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>",
        px(xmin),
        py(g(xmin)),
        px(xmax),
        py(g(xmax))
    );
    for (i, (label, pts)) in series.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\"/>",
            path.join(" ")
        );
        for &(x, y) in pts {
            let _ = writeln!(s, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{colour}\"/>", px(x), py(y));
        }
        let ly = MARGIN + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{ly:.2}\" font-size=\"12\" fill=\"{colour}\" text-anchor=\"end\">{label}</text>",
            WIDTH - MARGIN - 8.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"gray\" text-anchor=\"end\">slope 1</text>",
        WIDTH - MARGIN - 8.0,
        MARGIN + 16.0 + 16.0 * series.len() as f64
    );
    s.push_str("</svg>\n");
    s
}
