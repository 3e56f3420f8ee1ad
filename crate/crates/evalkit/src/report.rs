//! Static developer report: per-step attributions, states and actions of one
//! episode, with the gap between black-box and surrogate actions shaded.
//!
//! The output is plain SVG written with fixed number formatting, so the same input
//! always gives the same bytes.

use explain::{explain, AttributionFrame};
use harbor_env::{ACTION_NAMES, FEATURE_NAMES, N_ACTIONS, N_FEATURES};
use lmt_core::LmTree;
use policy::normalize;
use std::fmt::Write;

use crate::{Episode, EvalError};

const WIDTH: f64 = 960.0;
const PANEL_HEIGHT: f64 = 200.0;
const PANEL_GAP: f64 = 60.0;
const TOP: f64 = 50.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;

const PALETTE: [&str; N_FEATURES] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
];

/// Attribution frame of every step of `ep`, computed from `tree`.
pub fn attribution_frames(tree: &LmTree, ep: &Episode) -> Vec<AttributionFrame> {
    ep.steps
        .iter()
        .map(|s| explain(tree, &s.state.to_array(), s.step as u64))
        .collect()
}

/// Places data coordinates inside one panel.
struct Panel {
    top: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Panel {
    fn px(&self, x: f64) -> f64 {
        LEFT + (WIDTH - LEFT - RIGHT) * x / self.x_max
    }

    fn py(&self, y: f64) -> f64 {
        self.top + PANEL_HEIGHT * (self.y_max - y) / (self.y_max - self.y_min)
    }

    fn frame(&self, out: &mut String, title: &str, y_label: &str) {
        let (x0, x1) = (LEFT, WIDTH - RIGHT);
        let (y0, y1) = (self.top, self.top + PANEL_HEIGHT);
        let _ = writeln!(
            out,
            r##"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#000"/>"##,
            x1 - x0,
            y1 - y0
        );
        let _ = writeln!(
            out,
            r#"<text x="{x0:.2}" y="{:.2}" font-size="14" font-weight="bold">{title}</text>"#,
            y0 - 8.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" transform="rotate(-90 {:.2} {:.2})" text-anchor="middle">{y_label}</text>"#,
            x0 - 45.0,
            0.5 * (y0 + y1),
            x0 - 45.0,
            0.5 * (y0 + y1)
        );
        for k in 0..=4 {
            let v = self.y_min + (self.y_max - self.y_min) * k as f64 / 4.0;
            let y = self.py(v);
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="#000"/><text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{v:.2}</text>"##,
                x0 - 4.0,
                x0 - 6.0,
                y + 3.0
            );
        }
        for k in 0..=5 {
            let v = self.x_max * k as f64 / 5.0;
            let x = self.px(v);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{y1:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000"/><text x="{x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{v:.0}</text>"##,
                y1 + 4.0,
                y1 + 16.0
            );
        }
        if self.y_min < 0.0 && self.y_max > 0.0 {
            let y = self.py(0.0);
            let _ = writeln!(
                out,
                r##"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#bbb" stroke-dasharray="2,2"/>"##
            );
        }
    }

    fn points(&self, ys: &[f64]) -> String {
        let mut s = String::new();
        for (i, y) in ys.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{:.2},{:.2}", self.px(i as f64), self.py(*y));
        }
        s
    }

    fn line(&self, out: &mut String, ys: &[f64], color: &str, dashed: bool) {
        if ys.is_empty() {
            return;
        }
        let dash = if dashed { r#" stroke-dasharray="4,3""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.2"{dash}/>"#,
            self.points(ys)
        );
    }

    /// Closed polygon between two series.
    fn band(&self, out: &mut String, a: &[f64], b: &[f64], color: &str) {
        if a.is_empty() {
            return;
        }
        let mut pts = self.points(a);
        for i in (0..b.len()).rev() {
            let _ = write!(pts, " {:.2},{:.2}", self.px(i as f64), self.py(b[i]));
        }
        let _ = writeln!(
            out,
            r#"<polygon class="action-diff" points="{pts}" fill="{color}" fill-opacity="0.3" stroke="none"/>"#
        );
    }

    fn legend(&self, out: &mut String, labels: &[&str]) {
        for (k, l) in labels.iter().enumerate() {
            let y = self.top + 12.0 + 14.0 * k as f64;
            let x = WIDTH - RIGHT + 10.0;
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-size="10">{l}</text>"#,
                x + 16.0,
                PALETTE[k % PALETTE.len()],
                x + 20.0,
                y + 3.0
            );
        }
    }
}

fn series<const N: usize>(rows: &[[f64; N]], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k]).collect()
}

/// Renders the three-panel report for an episode recorded with a surrogate shadow.
///
/// Panel 1 shows the action-combined importance of every feature, panel 2 the
/// state features scaled by their largest magnitude in the episode, panel 3 the
/// normalized black-box actions (solid), surrogate actions (dashed) and the band
/// between them.
pub fn developer_report(ep: &Episode, frames: &[AttributionFrame]) -> Result<String, EvalError> {
    if frames.len() != ep.steps.len() {
        return Err(EvalError::Usage(format!(
            "{} attribution frames for {} steps",
            frames.len(),
            ep.steps.len()
        )));
    }
    let mut surrogate = Vec::with_capacity(ep.steps.len());
    for s in &ep.steps {
        let a = s.surrogate_action.ok_or_else(|| {
            EvalError::Usage(format!("step {} has no surrogate action", s.step))
        })?;
        surrogate.push(normalize(&a).0);
    }
    let policy: Vec<[f64; N_ACTIONS]> = ep.steps.iter().map(|s| normalize(&s.policy_action).0).collect();
    let combined: Vec<[f64; N_FEATURES]> = frames.iter().map(|f| f.combined).collect();
    let states: Vec<[f64; N_FEATURES]> = ep.steps.iter().map(|s| s.state.to_array()).collect();
    let scale: [f64; N_FEATURES] = std::array::from_fn(|k| {
        let m = states.iter().map(|r| r[k].abs()).fold(0.0, f64::max);
        if m > 0.0 {
            m
        } else {
            1.0
        }
    });
    let scaled: Vec<[f64; N_FEATURES]> = states
        .iter()
        .map(|r| std::array::from_fn(|k| r[k] / scale[k]))
        .collect();
    let combined_max = combined
        .iter()
        .flat_map(|r| r.iter().copied())
        .fold(1.0, f64::max);

    let x_max = (ep.steps.len().max(2) - 1) as f64;
    let panel = |i: usize, y_min: f64, y_max: f64| Panel {
        top: TOP + i as f64 * (PANEL_HEIGHT + PANEL_GAP),
        x_max,
        y_min,
        y_max,
    };
    let height = TOP + 3.0 * (PANEL_HEIGHT + PANEL_GAP);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{LEFT:.2}" y="24" font-size="16">{} — {} steps, {}, cumulative reward {:.2}</text>"#,
        ep.controller,
        ep.steps.len(),
        ep.outcome.as_str(),
        ep.cumulative_reward
    );

    let p = panel(0, 0.0, combined_max);
    p.frame(&mut out, "Feature attributions (sum over actions of |share|)", "importance");
    for k in 0..N_FEATURES {
        p.line(&mut out, &series(&combined, k), PALETTE[k], false);
    }
    p.legend(&mut out, &FEATURE_NAMES);

    let p = panel(1, -1.0, 1.0);
    p.frame(&mut out, "States (each scaled by its largest magnitude)", "scaled value");
    for k in 0..N_FEATURES {
        p.line(&mut out, &series(&scaled, k), PALETTE[k], false);
    }
    p.legend(&mut out, &FEATURE_NAMES);

    let p = panel(2, -1.0, 1.0);
    p.frame(
        &mut out,
        "Actions (normalized): black box solid, surrogate dashed, difference shaded",
        "normalized action",
    );
    for k in 0..N_ACTIONS {
        let (a, b) = (series(&policy, k), series(&surrogate, k));
        p.band(&mut out, &a, &b, PALETTE[k]);
        p.line(&mut out, &a, PALETTE[k], false);
        p.line(&mut out, &b, PALETTE[k], true);
    }
    p.legend(&mut out, &ACTION_NAMES);

    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">step</text>"#,
        0.5 * (LEFT + WIDTH - RIGHT),
        height - 12.0
    );
    out.push_str("</svg>\n");
    Ok(out)
}
