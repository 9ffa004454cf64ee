//! Deterministic template-grammar dialog generator.
//!
//! Every dialog is one system turn followed by a user reply, drawn either in
//! elliptical form (a fragment whose meaning depends on the system turn) or in
//! full form. Each dialog yields aligned views for all three corpora: the
//! completion pair, the dialog act labels of the reply, and SRL frames over
//! both the reply and its completion.
//!
//! Entities are nonce words built from syllables, so held-out entities are
//! mostly out of vocabulary and can only be reproduced by copying.
//!
//! "okay" replies to a do-you-like question are labelled `hold` but their
//! reference completion is, with probability `hold_noise`, the misleading
//! "okay i like X". A completion model trained on these references
//! reproduces the error, which is what the dialog act selection layer is
//! meant to absorb.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::inventory::act_ids;
use super::types::{
    CompletionCase, CompletionExample, DaExample, DialogTurn, PredicateSource, SrlAnnotation, SrlExample, Speaker,
};
use crate::error::{Error, Result};
use crate::rng::{stream, Rng};
use crate::understanding::bio::{spans_to_bio, Span};

/// Proportions of the three completion cases.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mix {
    pub had_ellipsis: f64,
    pub modified_to_ellipsis: f64,
    pub already_complete: f64,
}

impl Default for Mix {
    fn default() -> Self {
        Mix {
            had_ellipsis: 0.5,
            modified_to_ellipsis: 0.1,
            already_complete: 0.4,
        }
    }
}

impl Mix {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.had_ellipsis, self.modified_to_ellipsis, self.already_complete];
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("mix proportions must be finite and nonnegative"));
        }
        let s: f64 = parts.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("mix proportions sum to {s}, not 1")));
        }
        Ok(())
    }
}

impl std::str::FromStr for Mix {
    type Err = Error;

    /// `had,modified,complete`, e.g. `0.5,0.1,0.4`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::invalid(format!("mix `{s}`: {e}")))?;
        let [a, b, c] = parts[..] else {
            return Err(Error::invalid(format!("mix `{s}` needs three comma-separated values")));
        };
        let m = Mix {
            had_ellipsis: a,
            modified_to_ellipsis: b,
            already_complete: c,
        };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub mix: Mix,
    /// Probability that an "okay" hold reply gets the misleading completion.
    pub hold_noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            mix: Mix::default(),
            hold_noise: 0.9,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SyntheticCorpus {
    pub completion: Vec<CompletionExample>,
    pub da: Vec<DaExample>,
    pub srl: Vec<SrlExample>,
}

const CATEGORIES: &[&str] = &[
    "movie", "book", "game", "song", "band", "show", "food", "sport", "singer", "animal",
];
const LIKE_NOUNS: &[&str] = &[
    "dogs", "cats", "horses", "pizza", "jazz", "soccer", "museums", "cartoons", "poetry", "robots", "puzzles",
    "trains",
];
const OFTEN: &[(&str, &str)] = &[
    ("play", "guitar"),
    ("play", "tennis"),
    ("play", "chess"),
    ("play", "piano"),
    ("watch", "movies"),
    ("watch", "cartoons"),
    ("read", "books"),
    ("read", "comics"),
    ("cook", "pasta"),
    ("visit", "museums"),
    ("draw", "animals"),
];
const FREQUENCIES: &[&str] = &[
    "every single day",
    "once a week",
    "every weekend",
    "twice a month",
    "every morning",
    "all the time",
    "once a year",
];
const CHOICES: &[(&str, &str)] = &[
    ("watch", "movies"),
    ("read", "books"),
    ("eat", "dinner"),
    ("play", "games"),
    ("study", "math"),
];
const PLACES: &[&str] = &[
    "at home",
    "in the theater",
    "at the park",
    "at school",
    "in the city",
    "at the beach",
    "in the library",
];
const EVENTS: &[&str] = &[
    "you lost your phone",
    "it rained all week",
    "you won the lottery",
    "your team lost",
    "you met a celebrity",
    "your flight was cancelled",
    "you got a puppy",
];
const FEELINGS: &[&str] = &[
    "sad", "happy", "angry", "excited", "great", "terrible", "cool", "nice", "awesome", "bored", "scared", "funny",
    "weird",
];
const COMMENTS: &[&str] = &["cool", "nice", "awesome", "great", "terrible", "funny", "weird", "sad", "boring"];
const NEWS: &[&str] = &[
    "i just watched a movie called",
    "i recently heard a song by",
    "i read an article about",
    "yesterday i played a game called",
];
const TOPICS: &[&str] = &["music", "sports", "movies", "books", "games", "travel", "science", "food"];
const TOPIC_PROMPTS: &[&str] = &["what do you want to talk about", "what should we talk about next"];
const HOBBIES: &[&str] = &[
    "traveling", "swimming", "painting", "dancing", "camping", "singing", "skiing", "hiking",
];
const STATES: &[&str] = &["younger", "a kid", "in college", "a teenager", "in school"];
const OPENERS: &[&str] = &["i see", "tell me more", "that sounds fun", "what else is on your mind"];

const ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "dr", "gr", "kl", "pl", "st", "tr",
    "sh", "ch",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou", "ee"];
const CODAS: &[&str] = &["", "n", "r", "l", "x", "m", "s"];

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn pick<'a, T>(rng: &mut Rng, xs: &'a [T]) -> &'a T {
    xs.choose(rng).expect("nonempty list")
}

fn nonce_word(rng: &mut Rng) -> String {
    let mut w = String::new();
    for _ in 0..2 {
        w.push_str(pick(rng, ONSETS));
        w.push_str(pick(rng, VOWELS));
        w.push_str(pick(rng, CODAS));
    }
    w
}

/// One or two nonce tokens.
pub fn nonce_entity(rng: &mut Rng) -> Vec<String> {
    let n = if rng.gen_bool(0.3) { 2 } else { 1 };
    (0..n).map(|_| nonce_word(rng)).collect()
}

fn like_object(rng: &mut Rng) -> Vec<String> {
    if rng.gen_bool(0.5) {
        vec![pick(rng, LIKE_NOUNS).to_string()]
    } else {
        nonce_entity(rng)
    }
}

/// Completion tokens, each marked with whether it belongs to the user reply.
#[derive(Default)]
struct Builder {
    toks: Vec<String>,
    src: Vec<bool>,
}

impl Builder {
    fn push(&mut self, toks: Vec<String>, src: bool) -> Span {
        let start = self.toks.len();
        let n = toks.len();
        self.toks.extend(toks);
        self.src.extend(std::iter::repeat(src).take(n));
        Span::new(start, start + n - 1)
    }

    fn s(&mut self, text: &str) -> Span {
        self.push(words(text), true)
    }

    fn c(&mut self, text: &str) -> Span {
        self.push(words(text), false)
    }

    fn st(&mut self, toks: &[String]) -> Span {
        self.push(toks.to_vec(), true)
    }

    fn ct(&mut self, toks: &[String]) -> Span {
        self.push(toks.to_vec(), false)
    }

    /// Marks every token as part of the reply (full form).
    fn all_source(&mut self) {
        self.src.iter_mut().for_each(|s| *s = true);
    }
}

/// Frame over completion coordinates; `pred: None` means a context predicate.
#[derive(Clone)]
struct FrameSpec {
    pred: Option<Span>,
    args: Vec<(&'static str, Span)>,
}

fn frame(pred: Option<Span>, args: &[(&'static str, Span)]) -> FrameSpec {
    FrameSpec {
        pred,
        args: args.to_vec(),
    }
}

struct Draft {
    system: Vec<String>,
    b: Builder,
    ref_frames: Vec<FrameSpec>,
    src_frames: Vec<FrameSpec>,
    labels: &'static [&'static str],
}

impl Draft {
    fn full(system: Vec<String>, mut b: Builder, frames: Vec<FrameSpec>, labels: &'static [&'static str]) -> Self {
        b.all_source();
        Draft {
            system,
            b,
            src_frames: frames.clone(),
            ref_frames: frames,
            labels,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Template {
    Favorite,
    Like,
    Hold,
    Aux,
    HowOften,
    OrChoice,
    Feeling,
    Comment,
    Topic,
    Subordinate,
    OpenQuestion,
    YesNoQuestion,
    Complaint,
}

/// `(template, weight in elliptical draws, weight in full-form draws)`.
const TEMPLATES: &[(Template, f64, f64)] = &[
    (Template::Favorite, 3.0, 2.0),
    (Template::Like, 3.0, 3.0),
    (Template::Hold, 1.5, 0.0),
    (Template::Aux, 2.0, 1.5),
    (Template::HowOften, 2.0, 1.5),
    (Template::OrChoice, 1.0, 1.0),
    (Template::Feeling, 1.5, 1.0),
    (Template::Comment, 1.5, 1.0),
    (Template::Topic, 2.0, 1.5),
    (Template::Subordinate, 2.0, 1.5),
    (Template::OpenQuestion, 0.0, 1.5),
    (Template::YesNoQuestion, 0.0, 1.5),
    (Template::Complaint, 0.0, 1.0),
];

fn draw_template(rng: &mut Rng, elliptical: bool) -> Template {
    let w = |t: &(Template, f64, f64)| if elliptical { t.1 } else { t.2 };
    let total: f64 = TEMPLATES.iter().map(w).sum();
    let mut x = rng.gen::<f64>() * total;
    for t in TEMPLATES {
        x -= w(t);
        if x < 0.0 {
            return t.0;
        }
    }
    TEMPLATES.iter().rev().find(|t| w(t) > 0.0).unwrap().0
}

/// Returns the draft and whether it is actually elliptical (a hold reply
/// without injected noise is its own completion).
fn draft(t: Template, elliptical: bool, hold_noise: f64, rng: &mut Rng) -> (Draft, bool) {
    let mut b = Builder::default();
    let d = match t {
        Template::Favorite => {
            let cat = *pick(rng, CATEGORIES);
            let ent = nonce_entity(rng);
            let system = if rng.gen_bool(0.5) {
                format!("what is your favorite {cat}")
            } else {
                format!("what {cat} do you like best")
            };
            let a1 = b.c(&format!("my favorite {cat}"));
            let v = b.c("is");
            let a2 = b.st(&ent);
            let full = frame(Some(v), &[("ARG1", a1), ("ARG2", a2)]);
            if elliptical {
                Draft {
                    system: words(&system),
                    b,
                    ref_frames: vec![full],
                    src_frames: vec![frame(None, &[("ARG2", a2)])],
                    labels: &["statement"],
                }
            } else {
                Draft::full(words(&system), b, vec![full], &["statement"])
            }
        }
        Template::Like => {
            let x = like_object(rng);
            let system = format!("do you like {}", x.join(" "));
            let positive = rng.gen_bool(0.6);
            if elliptical {
                let (frames, labels): (Vec<FrameSpec>, &'static [&'static str]) = if positive {
                    b.s("yes");
                    let a0 = b.c("i");
                    let v = b.c("like");
                    let a1 = b.ct(&x);
                    (vec![frame(Some(v), &[("ARG0", a0), ("ARG1", a1)])], &["positive_answer"])
                } else {
                    b.s("no");
                    let a0 = b.c("i");
                    b.c("do");
                    let neg = b.c("not");
                    let v = b.c("like");
                    let a1 = b.ct(&x);
                    (
                        vec![frame(Some(v), &[("ARG0", a0), ("ARGM-NEG", neg), ("ARG1", a1)])],
                        &["negative_answer"],
                    )
                };
                Draft {
                    system: words(&system),
                    b,
                    ref_frames: frames,
                    src_frames: vec![],
                    labels,
                }
            } else if positive {
                let prefix = *pick(rng, &["yes", "okay", ""]);
                if !prefix.is_empty() {
                    b.s(prefix);
                }
                let a0 = b.s("i");
                let v = b.s("like");
                let a1 = b.st(&x);
                let f = frame(Some(v), &[("ARG0", a0), ("ARG1", a1)]);
                Draft::full(words(&system), b, vec![f], &["positive_answer", "statement"])
            } else {
                b.s("no");
                let a0 = b.s("i");
                b.s("do");
                let neg = b.s("not");
                let v = b.s("like");
                let a1 = b.st(&x);
                let f = frame(Some(v), &[("ARG0", a0), ("ARGM-NEG", neg), ("ARG1", a1)]);
                Draft::full(words(&system), b, vec![f], &["negative_answer", "statement"])
            }
        }
        Template::Hold => {
            let x = like_object(rng);
            let system = format!("do you like {}", x.join(" "));
            b.s("okay");
            let noisy = rng.gen_bool(hold_noise.clamp(0.0, 1.0));
            let mut ref_frames = vec![];
            if noisy {
                let a0 = b.c("i");
                let v = b.c("like");
                let a1 = b.ct(&x);
                ref_frames.push(frame(Some(v), &[("ARG0", a0), ("ARG1", a1)]));
            }
            let d = Draft {
                system: words(&system),
                b,
                ref_frames,
                src_frames: vec![],
                labels: &["hold"],
            };
            return (d, noisy);
        }
        Template::Aux => {
            let x = like_object(rng);
            let negative = rng.gen_bool(0.4);
            let (system, aux, verb) = match rng.gen_range(0..3) {
                0 => (format!("do you like {}", x.join(" ")), "do", "like"),
                1 => (format!("did you watch {}", x.join(" ")), "did", "watch"),
                _ => (format!("have you seen {}", x.join(" ")), "have", "seen"),
            };
            let labels: &'static [&'static str] = match (elliptical, negative) {
                (true, false) => &["positive_answer"],
                (true, true) => &["negative_answer"],
                (false, false) => &["positive_answer", "statement"],
                (false, true) => &["negative_answer", "statement"],
            };
            let a0 = b.s("i");
            let av = b.s(aux);
            let neg = negative.then(|| b.s("not"));
            let v = b.c(verb);
            let a1 = b.ct(&x);
            let mut full_args = vec![("ARG0", a0)];
            let mut aux_args = vec![("ARG0", a0)];
            if let Some(n) = neg {
                full_args.push(("ARGM-NEG", n));
                aux_args.push(("ARGM-NEG", n));
            }
            full_args.push(("ARG1", a1));
            let full = frame(Some(v), &full_args);
            if elliptical {
                Draft {
                    system: words(&system),
                    b,
                    ref_frames: vec![full],
                    src_frames: vec![frame(Some(av), &aux_args)],
                    labels,
                }
            } else {
                Draft::full(words(&system), b, vec![full], labels)
            }
        }
        Template::HowOften => {
            let (verb, obj) = *pick(rng, OFTEN);
            let lead = if rng.gen_bool(0.3) { "speaking of which " } else { "" };
            let system = format!("{lead}how often do you {verb} {obj}");
            let freq = *pick(rng, FREQUENCIES);
            let a0 = b.c("i");
            let v = b.c(verb);
            let a1 = b.c(obj);
            let tmp = b.s(freq);
            let full = frame(Some(v), &[("ARG0", a0), ("ARG1", a1), ("ARGM-TMP", tmp)]);
            if elliptical {
                Draft {
                    system: words(&system),
                    b,
                    ref_frames: vec![full],
                    src_frames: vec![frame(None, &[("ARGM-TMP", tmp)])],
                    labels: &["statement"],
                }
            } else {
                Draft::full(words(&system), b, vec![full], &["statement"])
            }
        }
        Template::OrChoice => {
            let (verb, obj) = *pick(rng, CHOICES);
            let mut places = PLACES.to_vec();
            places.shuffle(rng);
            let system = format!("do you prefer to {verb} {obj} {} or {}", places[0], places[1]);
            let chosen = places[rng.gen_range(0..2)];
            b.c("i prefer to");
            let v = b.c(verb);
            let a1 = b.c(obj);
            let loc = b.s(chosen);
            let full = frame(Some(v), &[("ARG1", a1), ("ARGM-LOC", loc)]);
            if elliptical {
                Draft {
                    system: words(&system),
                    b,
                    ref_frames: vec![full],
                    src_frames: vec![frame(None, &[("ARGM-LOC", loc)])],
                    labels: &["statement"],
                }
            } else {
                Draft::full(words(&system), b, vec![full], &["statement"])
            }
        }
        Template::Feeling => {
            let system = format!("how would you feel if {}", pick(rng, EVENTS));
            let adj = *pick(rng, FEELINGS);
            let a0 = b.c("i");
            b.c("would");
            let v = b.c("feel");
            let a1 = b.s(adj);
            let full = frame(Some(v), &[("ARG0", a0), ("ARG1", a1)]);
            if elliptical {
                Draft {
                    system: words(&system),
                    b,
                    ref_frames: vec![full],
                    src_frames: vec![frame(None, &[("ARG1", a1)])],
                    labels: &["opinion"],
                }
            } else {
                Draft::full(words(&system), b, vec![full], &["opinion"])
            }
        }
        Template::Comment => {
            let ent = nonce_entity(rng);
            let system = format!("{} {}", pick(rng, NEWS), ent.join(" "));
            let adj = *pick(rng, COMMENTS);
            let a1 = b.c("that");
            let v = b.c("is");
            let a2 = b.s(adj);
            let full = frame(Some(v), &[("ARG1", a1), ("ARG2", a2)]);
            if elliptical {
                Draft {
                    system: words(&system),
                    b,
                    ref_frames: vec![full],
                    src_frames: vec![frame(None, &[("ARG2", a2)])],
                    labels: &["comment"],
                }
            } else {
                Draft::full(words(&system), b, vec![full], &["comment"])
            }
        }
        Template::Topic => {
            let x = if rng.gen_bool(0.5) {
                vec![pick(rng, TOPICS).to_string()]
            } else {
                nonce_entity(rng)
            };
            let system = pick(rng, TOPIC_PROMPTS).to_string();
            b.c("i want to");
            let v = b.c("talk");
            b.c("about");
            let a1 = b.st(&x);
            let full = frame(Some(v), &[("ARG1", a1)]);
            if elliptical {
                Draft {
                    system: words(&system),
                    b,
                    ref_frames: vec![full],
                    src_frames: vec![frame(None, &[("ARG1", a1)])],
                    labels: &["command"],
                }
            } else {
                Draft::full(words(&system), b, vec![full], &["command"])
            }
        }
        Template::Subordinate => {
            let hobby = *pick(rng, HOBBIES);
            let state = *pick(rng, STATES);
            let system = format!("do you enjoy {hobby}");
            let a0 = b.c("i");
            let v = b.c("enjoyed");
            let a1 = b.c(hobby);
            let start = b.s("when").start;
            let i2 = b.s("i");
            let was = b.s("was");
            let st = b.s(state);
            let tmp = Span::new(start, st.end);
            let inner = frame(Some(was), &[("ARG1", i2), ("ARG2", st)]);
            let outer = frame(Some(v), &[("ARG0", a0), ("ARG1", a1), ("ARGM-TMP", tmp)]);
            if elliptical {
                Draft {
                    system: words(&system),
                    b,
                    ref_frames: vec![outer, inner.clone()],
                    src_frames: vec![frame(None, &[("ARGM-TMP", tmp)]), inner],
                    labels: &["statement"],
                }
            } else {
                Draft::full(words(&system), b, vec![outer, inner], &["statement"])
            }
        }
        Template::OpenQuestion => {
            let cat = *pick(rng, CATEGORIES);
            let f = if rng.gen_bool(0.5) {
                let a2 = b.s("what");
                let v = b.s("is");
                let a1 = b.s(&format!("your favorite {cat}"));
                frame(Some(v), &[("ARG2", a2), ("ARG1", a1)])
            } else {
                let a1 = b.s(&format!("what {cat}"));
                b.s("do");
                let a0 = b.s("you");
                let v = b.s("like");
                frame(Some(v), &[("ARG1", a1), ("ARG0", a0)])
            };
            Draft::full(words(pick(rng, OPENERS)), b, vec![f], &["open_question"])
        }
        Template::YesNoQuestion => {
            let f = if rng.gen_bool(0.5) {
                b.s("do");
                let a0 = b.s("you");
                let v = b.s("like");
                let a1 = b.st(&like_object(rng));
                frame(Some(v), &[("ARG0", a0), ("ARG1", a1)])
            } else {
                b.s("have");
                let a0 = b.s("you");
                let v = b.s("seen");
                let a1 = b.st(&nonce_entity(rng));
                frame(Some(v), &[("ARG0", a0), ("ARG1", a1)])
            };
            Draft::full(words(pick(rng, OPENERS)), b, vec![f], &["yes_no_question"])
        }
        Template::Complaint => {
            let f = if rng.gen_bool(0.5) {
                let a0 = b.s("you");
                b.s("are");
                let neg = b.s("not");
                let v = b.s("listening");
                frame(Some(v), &[("ARG0", a0), ("ARGM-NEG", neg)])
            } else {
                let a0 = b.s("you");
                b.s("do");
                let neg = b.s("not");
                let v = b.s("understand");
                let a1 = b.s("me");
                frame(Some(v), &[("ARG0", a0), ("ARGM-NEG", neg), ("ARG1", a1)])
            };
            Draft::full(words(pick(rng, OPENERS)), b, vec![f], &["complaint"])
        }
    };
    (d, elliptical)
}

fn annotations(frames: &[FrameSpec], map: &[Option<usize>], len: usize) -> Vec<SrlAnnotation> {
    let m = |s: Span| {
        let a = map[s.start].expect("frame span lies in the reply");
        let b = map[s.end].expect("frame span lies in the reply");
        Span::new(a, b)
    };
    frames
        .iter()
        .map(|f| {
            let spans: Vec<(String, Span)> = f.args.iter().map(|(r, s)| (r.to_string(), m(*s))).collect();
            let tags = spans_to_bio(len, &spans);
            match f.pred {
                Some(p) => SrlAnnotation {
                    predicate_source: PredicateSource::InUtterance,
                    predicate_span: Some(m(p)),
                    tags,
                },
                None => SrlAnnotation {
                    predicate_source: PredicateSource::InContext,
                    predicate_span: None,
                    tags,
                },
            }
        })
        .collect()
}

pub fn generate_synthetic(seed: u64, n: usize, config: &SynthConfig) -> Result<SyntheticCorpus> {
    config.mix.validate()?;
    if !(0.0..=1.0).contains(&config.hold_noise) {
        return Err(Error::invalid("hold_noise must lie in [0, 1]"));
    }
    let mut rng = stream(seed, "data");
    let mut out = SyntheticCorpus::default();
    let Mix {
        had_ellipsis,
        modified_to_ellipsis,
        ..
    } = config.mix;
    for _ in 0..n {
        let u = rng.gen::<f64>();
        let case = if u < had_ellipsis {
            CompletionCase::HadEllipsis
        } else if u < had_ellipsis + modified_to_ellipsis {
            CompletionCase::ModifiedToEllipsis
        } else {
            CompletionCase::AlreadyComplete
        };
        let elliptical = case != CompletionCase::AlreadyComplete;
        let t = draw_template(&mut rng, elliptical);
        let (d, really_elliptical) = draft(t, elliptical, config.hold_noise, &mut rng);
        let case = if really_elliptical {
            case
        } else {
            CompletionCase::AlreadyComplete
        };

        let mut map = vec![None; d.b.toks.len()];
        let mut source = Vec::new();
        for (i, (tok, &in_src)) in d.b.toks.iter().zip(&d.b.src).enumerate() {
            if in_src {
                map[i] = Some(source.len());
                source.push(tok.clone());
            }
        }
        let reference = d.b.toks.clone();
        let identity: Vec<Option<usize>> = (0..reference.len()).map(Some).collect();
        let context = vec![DialogTurn {
            speaker: Speaker::System,
            tokens: d.system.clone(),
        }];
        out.completion.push(CompletionExample {
            context: context.clone(),
            source: source.clone(),
            reference: reference.clone(),
            completion_case: case,
        });
        let mut labels = act_ids(d.labels)?;
        labels.sort_unstable();
        out.da.push(DaExample {
            context: context.clone(),
            utterance: source.clone(),
            labels,
        });
        out.srl.push(SrlExample {
            context,
            frames: annotations(&d.src_frames, &map, source.len()),
            utterance: source,
            reference_frames: Some(annotations(&d.ref_frames, &identity, reference.len())),
            reference: Some(reference),
        });
    }
    Ok(out)
}
