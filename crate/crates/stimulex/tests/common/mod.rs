//! A local stand-in for the translation service: `POST {text, source_lang,
//! target_lang}` answered with `{text}` from a fixed table, HTTP 500 for
//! anything the table lacks.
#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread::JoinHandle;

use rand::seq::IndexedRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stimulex_core::{Dataset, Emotion, Pos, Sentence, Span, Token};

pub struct MockServer {
    pub url: String,
    hits: Arc<AtomicUsize>,
    server: Arc<tiny_http::Server>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(table: HashMap<String, String>) -> MockServer {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").expect("bind mock server"));
        let port = server.server_addr().to_ip().expect("tcp listener").port();
        let hits = Arc::new(AtomicUsize::new(0));
        let (srv, count) = (Arc::clone(&server), Arc::clone(&hits));
        let handle = std::thread::spawn(move || {
            for mut req in srv.incoming_requests() {
                count.fetch_add(1, Ordering::SeqCst);
                let mut body = String::new();
                let _ = req.as_reader().read_to_string(&mut body);
                let text = serde_json::from_str::<serde_json::Value>(&body)
                    .ok()
                    .and_then(|v| v["text"].as_str().map(String::from));
                let json: tiny_http::Header = "Content-Type: application/json".parse().unwrap();
                let resp = match text.and_then(|t| table.get(&t).cloned()) {
                    Some(out) => tiny_http::Response::from_string(
                        serde_json::json!({ "text": out }).to_string(),
                    )
                    .with_header(json),
                    None => tiny_http::Response::from_string("{\"error\":\"no translation\"}")
                        .with_status_code(500)
                        .with_header(json),
                };
                let _ = req.respond(resp);
            }
        });
        MockServer {
            url: format!("http://127.0.0.1:{port}/translate"),
            hits,
            server,
            handle: Some(handle),
        }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

pub fn data_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

/// The recorded session as a source -> target table.
pub fn session_table() -> HashMap<String, String> {
    let text = std::fs::read_to_string(data_dir().join("session_en_de.jsonl")).unwrap();
    text.lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            (
                v["text"].as_str().unwrap().to_string(),
                v["translation"].as_str().unwrap().to_string(),
            )
        })
        .collect()
}

pub const SESSION_BACKEND: &str = "http:http://mt.invalid/translate";

/// Hand alignment of the recorded session: projected span per source id,
/// `None` where the German stimulus cannot be located.
pub const SESSION_ALIGNMENT: [(&str, Option<(usize, usize)>); 5] = [
    ("e1", Some((4, 8))),
    ("e2", Some((2, 6))),
    ("e3", None),
    ("e4", Some((2, 4))),
    ("e5", Some((0, 3))),
];

const EXPERIENCERS: [&str; 6] = ["Fans", "Eltern", "Bürger", "Bauern", "Lehrer", "Anwohner"];
const VERBS: [&str; 5] = ["jubeln", "trauern", "zittern", "streiten", "klagen"];
const PREPS: [&str; 3] = ["über", "wegen", "vor"];
const DETS: [&str; 3] = ["die", "den", "der"];
const ADJS: [&str; 5] = ["neue", "hohe", "späte", "harte", "große"];
const NOUNS: [&str; 6] = ["Regeln", "Mieten", "Niederlage", "Preise", "Sturm", "Wahl"];
const PLACES: [&str; 4] = ["Berlin", "München", "Hamburg", "Köln"];

/// A reproducible toy corpus of POS-tagged German headlines whose stimulus
/// is the phrase after a preposition, or the sentence-initial subject.
pub fn toy_corpus(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let pick = |rng: &mut ChaCha8Rng, xs: &[&'static str]| *xs.choose(rng).unwrap();
        let mut toks: Vec<Token> = Vec::new();
        let mut spans = Vec::new();
        let stimulus = |rng: &mut ChaCha8Rng, toks: &mut Vec<Token>| {
            let start = toks.len();
            toks.push(Token::new(pick(rng, &DETS), Pos::Det));
            toks.push(Token::new(pick(rng, &ADJS), Pos::Adj));
            toks.push(Token::new(pick(rng, &NOUNS), Pos::Noun));
            if rng.random_range(0..3) == 0 {
                toks.push(Token::new("in", Pos::Adp));
                toks.push(Token::new(pick(rng, &PLACES), Pos::Propn));
            }
            Span {
                start,
                end: toks.len(),
            }
        };
        match rng.random_range(0..4) {
            0 => {
                spans.push(stimulus(&mut rng, &mut toks));
                toks.push(Token::new("ärgert", Pos::Verb));
                toks.push(Token::new(pick(&mut rng, &EXPERIENCERS), Pos::Noun));
            }
            1 => {
                toks.push(Token::new(pick(&mut rng, &EXPERIENCERS), Pos::Noun));
                toks.push(Token::new("in", Pos::Adp));
                toks.push(Token::new(pick(&mut rng, &PLACES), Pos::Propn));
                toks.push(Token::new(pick(&mut rng, &VERBS), Pos::Verb));
            }
            _ => {
                toks.push(Token::new(pick(&mut rng, &EXPERIENCERS), Pos::Noun));
                toks.push(Token::new(pick(&mut rng, &VERBS), Pos::Verb));
                toks.push(Token::new(pick(&mut rng, &PREPS), Pos::Adp));
                spans.push(stimulus(&mut rng, &mut toks));
            }
        }
        if rng.random_range(0..2) == 0 {
            toks.push(Token::new("!", Pos::Punct));
        }
        let mut s = Sentence::new(format!("t{i}"), toks)
            .unwrap()
            .with_gold_spans(&spans)
            .unwrap();
        s.meta.emotion = Some(*Emotion::ALL[..10].choose(&mut rng).unwrap());
        s.meta.source = Some(pick(&mut rng, &["Bild", "Spiegel", "Zeit"]).to_string());
        out.push(s);
    }
    Dataset::new("toy", out).unwrap()
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_stimulex")
}

/// Run the binary; returns (exit code, stdout, stderr).
pub fn stimulex<I, S>(args: I) -> (i32, String, String)
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let out = std::process::Command::new(bin())
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}
