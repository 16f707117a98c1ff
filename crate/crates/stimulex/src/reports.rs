//! Plain-text, key-value and SVG renderings of the analysis results.

use std::fmt::Write as _;

use stimulex_core::agreement::AgreementReport;
use stimulex_core::analysis::{Context, CorpusStats, EmotionRow, PosContextTable};
use stimulex_core::crf::TrainReport;
use stimulex_core::eval::{EvalReport, MatchMode};
use stimulex_core::{Emotion, Pos};

use crate::ingest::FilterReport;

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

/// Scores in the layout of a results table: one row per matching mode.
pub fn eval_text(r: &EvalReport, label: &str) -> String {
    let mut out = String::new();
    out.push_str("# stimulex evaluation\n");
    out.push_str("averaging=micro\npairing=greedy-one-to-one\npartial=per-span\n");
    let _ = writeln!(out, "sentences={}", r.sentences);
    let _ = writeln!(out, "gold_spans={}", r.gold_spans);
    let _ = writeln!(out, "pred_spans={}", r.pred_spans);
    out.push('\n');
    let _ = writeln!(
        out,
        "{:<16} {:<8} {:>7} {:>7} {:>7} {:>6} {:>6} {:>6}",
        "model", "measure", "F1", "P", "R", "tp", "fp", "fn"
    );
    for (i, m) in MatchMode::ALL.iter().enumerate() {
        let c = r.counts(*m);
        let name = if i == 0 { label } else { "" };
        let _ = writeln!(
            out,
            "{:<16} {:<8} {:>7.4} {:>7.4} {:>7.4} {:>6} {:>6} {:>6}",
            name,
            title(m.as_str()),
            c.f1(),
            c.precision(),
            c.recall(),
            c.tp,
            c.fp,
            c.fn_
        );
    }
    out.push('\n');
    let _ = writeln!(out, "{:<12} {:>6}", "error", "count");
    for (e, n) in r.errors.iter() {
        let _ = writeln!(out, "{:<12} {:>6}", e.as_str(), n);
    }
    out
}

fn title(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

pub fn agreement_kv(r: &AgreementReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "sentences={}", r.sentences);
    let _ = writeln!(out, "stimulus_sentences={}", r.stimulus_sentences);
    let _ = writeln!(out, "kappa_cue={:.6}", r.kappa_cue);
    let _ = writeln!(out, "kappa_exp={:.6}", r.kappa_exp);
    let _ = writeln!(out, "kappa_emotion={:.6}", r.kappa_emotion);
    let _ = writeln!(out, "kappa_stimulus_token={:.6}", r.kappa_stimulus_token);
    let _ = writeln!(out, "f1_stimulus_token={:.6}", r.f1_stimulus_token);
    let _ = writeln!(out, "f1_stimulus_span={:.6}", r.f1_stimulus_span);
    let _ = writeln!(out, "f1_reference={}", AgreementReport::REFERENCE);
    for (e, k) in &r.kappa_per_emotion {
        let _ = writeln!(out, "kappa_emotion.{}={k:.6}", e.as_str());
    }
    out
}

pub fn filter_kv(r: &FilterReport) -> String {
    r.to_string()
}

pub fn train_kv(r: &TrainReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "instances={}", r.instances);
    let _ = writeln!(out, "features={}", r.features);
    let _ = writeln!(out, "iterations={}", r.iterations);
    let _ = writeln!(out, "termination={:?}", r.termination);
    let _ = writeln!(out, "final_loss={:?}", r.final_loss);
    let _ = writeln!(out, "grad_max_norm={:?}", r.grad_max_norm);
    let trace: Vec<String> = r.loss_trace.iter().map(|l| format!("{l:?}")).collect();
    let _ = writeln!(out, "loss_trace={}", trace.join(","));
    out
}

fn row_name(e: Option<Emotion>) -> &'static str {
    e.map_or("unlabeled", Emotion::as_str)
}

fn emotion_line(out: &mut String, name: &str, r: &EmotionRow) {
    let _ = writeln!(
        out,
        "{:<18} {:>7} {:>7} {:>7} {:>10} {:>9}",
        name,
        r.instances,
        r.with_cue,
        r.with_experiencer,
        r.with_stimulus,
        opt(r.mean_stimulus_len(), 2)
    );
}

pub fn analysis_text(s: &CorpusStats, pos: Option<&PosContextTable>) -> String {
    let mut out = String::new();
    out.push_str("# corpus statistics\n");
    let _ = writeln!(
        out,
        "{:<18} {:>7} {:>7} {:>7} {:>10} {:>9}",
        "emotion", "inst", "w/cue", "w/exp", "w/stimulus", "avg|stim|"
    );
    for (e, r) in &s.per_emotion {
        emotion_line(&mut out, row_name(*e), r);
    }
    emotion_line(&mut out, "All", &s.all);
    out.push('\n');
    let _ = writeln!(out, "tokens={}", s.tokens);
    let _ = writeln!(out, "unique_tokens={}", s.unique_tokens);
    let _ = writeln!(
        out,
        "min_len={}",
        s.min_len.map_or("-".into(), |v| v.to_string())
    );
    let _ = writeln!(out, "mean_len={}", opt(s.mean_len, 2));
    let _ = writeln!(
        out,
        "max_len={}",
        s.max_len.map_or("-".into(), |v| v.to_string())
    );
    let _ = writeln!(out, "ends_with_stimulus={}", opt(s.ends_with_stimulus, 4));
    let _ = writeln!(
        out,
        "begins_with_stimulus={}",
        opt(s.begins_with_stimulus, 4)
    );
    out.push_str("\n# top sources per emotion\n");
    for (e, srcs) in &s.sources {
        let mut ranked: Vec<(&String, &usize)> = srcs.iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        let top: Vec<String> = ranked
            .iter()
            .take(3)
            .map(|(n, c)| format!("{n} ({c})"))
            .collect();
        let _ = writeln!(out, "{:<18} {}", row_name(*e), top.join(", "));
    }
    if let Some(t) = pos {
        out.push_str("\n# POS context\n");
        let _ = writeln!(
            out,
            "{:<6} {:>7} {:>7} {:>6} {:>7} {:>6} {:>7} {:>6}",
            "pos", "all", "inside", "ratio", "before", "ratio", "after", "ratio"
        );
        for tag in t.tags_by_frequency() {
            let _ = writeln!(
                out,
                "{:<6} {:>7.4} {:>7.4} {:>6.2} {:>7.4} {:>6.2} {:>7.4} {:>6.2}",
                tag.as_str(),
                t.freq(tag, Context::All),
                t.freq(tag, Context::Inside),
                t.ratio(tag, Context::Inside),
                t.freq(tag, Context::Before1),
                t.ratio(tag, Context::Before1),
                t.freq(tag, Context::After1),
                t.ratio(tag, Context::After1),
            );
        }
    }
    out
}

pub fn analysis_kv(s: &CorpusStats, pos: Option<&PosContextTable>) -> String {
    let mut out = String::new();
    let row = |out: &mut String, name: &str, r: &EmotionRow| {
        let _ = writeln!(out, "{name}.instances={}", r.instances);
        let _ = writeln!(out, "{name}.with_cue={}", r.with_cue);
        let _ = writeln!(out, "{name}.with_experiencer={}", r.with_experiencer);
        let _ = writeln!(out, "{name}.with_stimulus={}", r.with_stimulus);
        let _ = writeln!(out, "{name}.stimulus_spans={}", r.stimulus_spans);
        let _ = writeln!(
            out,
            "{name}.mean_stimulus_len={}",
            opt(r.mean_stimulus_len(), 6)
        );
    };
    row(&mut out, "all", &s.all);
    for (e, r) in &s.per_emotion {
        row(&mut out, row_name(*e), r);
    }
    let _ = writeln!(out, "tokens={}", s.tokens);
    let _ = writeln!(out, "unique_tokens={}", s.unique_tokens);
    let _ = writeln!(out, "mean_len={}", opt(s.mean_len, 6));
    let _ = writeln!(out, "ends_with_stimulus={}", opt(s.ends_with_stimulus, 6));
    let _ = writeln!(
        out,
        "begins_with_stimulus={}",
        opt(s.begins_with_stimulus, 6)
    );
    if let Some(t) = pos {
        for tag in Pos::tagset() {
            for c in Context::ALL {
                let _ = writeln!(
                    out,
                    "pos.{}.{}={:.6}",
                    tag.as_str(),
                    c.as_str(),
                    t.freq(*tag, c)
                );
            }
        }
    }
    out
}

/// A vertical bar chart, one bar per labelled value.
pub fn bar_chart_svg(title: &str, bars: &[(String, f64)], y_max: f64) -> String {
    let (w, h, left, bottom, top) = (
        60.0 * bars.len().max(1) as f64 + 80.0,
        320.0,
        50.0,
        90.0,
        30.0,
    );
    let plot_h = h - bottom - top;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{left}" y="18" font-size="13">{}</text>"#,
        escape(title)
    );
    for k in 0..=4 {
        let v = y_max * k as f64 / 4.0;
        let y = top + plot_h * (1.0 - k as f64 / 4.0);
        let _ = writeln!(
            out,
            r##"<line x1="{left}" x2="{}" y1="{y:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">{v:.2}</text>"##,
            w - 20.0,
            left - 4.0,
            y + 4.0
        );
    }
    for (i, (label, v)) in bars.iter().enumerate() {
        let x = left + 10.0 + 60.0 * i as f64;
        let bh = plot_h * (v.max(0.0) / y_max).min(1.0);
        let _ = writeln!(
            out,
            r##"<rect x="{x:.1}" y="{:.1}" width="40" height="{bh:.1}" fill="#3465a4"><title>{}: {v:.4}</title></rect>"##,
            top + plot_h - bh,
            escape(label)
        );
        let _ = writeln!(
            out,
            r#"<text transform="translate({:.1},{:.1}) rotate(60)">{}</text>"#,
            x + 20.0,
            top + plot_h + 12.0,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Per-emotion share of instances that carry a stimulus.
pub fn stimulus_share_bars(s: &CorpusStats) -> Vec<(String, f64)> {
    s.per_emotion
        .iter()
        .filter(|(e, _)| e.is_some_and(Emotion::is_emotion))
        .map(|(e, r)| {
            let share = if r.instances == 0 {
                0.0
            } else {
                r.with_stimulus as f64 / r.instances as f64
            };
            (row_name(*e).to_string(), share)
        })
        .collect()
}

pub fn kappa_bars(r: &AgreementReport) -> Vec<(String, f64)> {
    r.kappa_per_emotion
        .iter()
        .filter(|(e, _)| e.is_emotion())
        .map(|(e, k)| (e.as_str().to_string(), *k))
        .collect()
}
