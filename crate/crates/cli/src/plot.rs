//! Hand-rolled SVG scatter plot of a 2-feature dataset and its granular
//! balls: sample points as dots, balls as circles, both colored by label.

use gbt_core::dataset::Dataset;
use gbt_core::granulation::GranulationResult;

const SIZE: f64 = 640.0;
const MARGIN: f64 = 40.0;

pub fn ball_plot_svg(data: &Dataset, result: &GranulationResult) -> String {
    assert_eq!(data.m(), 2, "plots need exactly two features");
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    for i in 0..data.n() {
        for j in 0..2 {
            let v = data.features()[(i, j)];
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    for ball in &result.balls {
        for j in 0..2 {
            min[j] = min[j].min(ball.center[j] - ball.radius);
            max[j] = max[j].max(ball.center[j] + ball.radius);
        }
    }
    let span = (max[0] - min[0]).max(max[1] - min[1]).max(1e-12);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let sx = |x: f64| MARGIN + (x - min[0]) * scale;
    // flip y so larger values draw upward
    let sy = |y: f64| SIZE - MARGIN - (y - min[1]) * scale;
    let color = |label: f64| if label > 0.0 { "#c0392b" } else { "#2980b9" };

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" \
         viewBox=\"0 0 {SIZE} {SIZE}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for ball in &result.balls {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"{}\" fill-opacity=\"0.12\" \
             stroke=\"{}\" stroke-width=\"1.2\"/>\n",
            sx(ball.center[0]),
            sy(ball.center[1]),
            (ball.radius * scale).max(2.0),
            color(ball.label),
            color(ball.label),
        ));
    }
    for i in 0..data.n() {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"{}\"/>\n",
            sx(data.features()[(i, 0)]),
            sy(data.features()[(i, 1)]),
            color(data.label(i)),
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
