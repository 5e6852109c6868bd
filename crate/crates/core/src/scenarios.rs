//! Deterministic corpora and stdlib-only payload programs for end-to-end runs.

use std::str::FromStr;

use thiserror::Error;

use crate::agent::prompts::{ERROR_HEADER, LOOP_HEADER, REPORT_HEADER, REVIEW_HEADER, SUCCESS_HEADER};
use crate::parser::{fence, COMPLETE_TOKEN, FAILED_TOKEN};
use crate::provider::{ScriptEntry, ScriptedCorpus, ScriptedSource};

/// A payload program and the files it writes into an empty directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayloadScript {
    pub name: String,
    pub source: String,
    pub declared_outputs: Vec<String>,
}

const RW_PAYLOAD: &str = r##"import math
import os
import random
import sys


def parse_args(argv):
    ns = [16, 32, 64, 128, 256]
    samples = 400
    i = 0
    while i < len(argv):
        if argv[i] == "--n":
            ns = [int(x) for x in argv[i + 1].split(",") if x.strip()]
            i += 2
        elif argv[i] == "--samples":
            samples = int(argv[i + 1])
            i += 2
        else:
            sys.exit("usage: rw.py [--n 16,32,...] [--samples K]")
    if not ns or samples < 1:
        sys.exit("need a non-empty N list and at least one sample")
    return ns, samples


def unit_step(rng):
    while True:
        x, y, z = rng.gauss(0, 1), rng.gauss(0, 1), rng.gauss(0, 1)
        r = math.sqrt(x * x + y * y + z * z)
        if r > 0:
            return x / r, y / r, z / r


def chain(n, rng):
    pts = [(0.0, 0.0, 0.0)]
    for _ in range(n):
        dx, dy, dz = unit_step(rng)
        x, y, z = pts[-1]
        pts.append((x + dx, y + dy, z + dz))
    return pts


def fit(ns, r2):
    xs = [math.log(n) for n in ns]
    ys = [math.log(v) for v in r2]
    m = len(xs)
    mx, my = sum(xs) / m, sum(ys) / m
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx if sxx > 0 else float("nan")
    return slope, my - slope * mx


def svg_polyline(points, path, title):
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    sx = 380.0 / ((x1 - x0) or 1.0)
    sy = 380.0 / ((y1 - y0) or 1.0)
    coords = " ".join("%.2f,%.2f" % (10 + (x - x0) * sx, 390 - (y - y0) * sy) for x, y in points)
    with open(path, "w") as f:
        f.write('<svg xmlns="http://www.w3.org/2000/svg" width="400" height="400">\n')
        f.write("<title>%s</title>\n" % title)
        f.write('<polyline fill="none" stroke="black" points="%s"/>\n</svg>\n' % coords)


def main():
    ns, samples = parse_args(sys.argv[1:])
    rng = random.Random(1000 + int(os.environ.get("TRIAL_INDEX", "0")))
    means = []
    for n in ns:
        total = 0.0
        for _ in range(samples):
            end = chain(n, rng)[-1]
            total += end[0] ** 2 + end[1] ** 2 + end[2] ** 2
        means.append(total / samples)
    nu, c = fit(ns, means)
    with open("data.csv", "w") as f:
        f.write("N,mean_r2\n")
        for n, v in zip(ns, means):
            f.write("%d,%.6f\n" % (n, v))
    sample = chain(max(ns), rng)
    svg_polyline([(p[0], p[1]) for p in sample], "conformation.svg", "chain conformation")
    pts = [(math.log(n), math.log(v)) for n, v in zip(ns, means)]
    svg_polyline(pts, "fit.svg", "log R2 vs log N, slope %.4f" % nu)
    with open("report.md", "w") as f:
        f.write("# Introduction\nEnd-to-end distance of a freely jointed chain.\n\n")
        f.write("# Methods\nUnit steps in random directions, %d chains per length N in %s.\n\n" % (samples, ns))
        f.write("# Results\nLeast-squares fit of log <R^2> against log N.\n\nnu = %.4f\n\n" % nu)
        f.write("# Conclusion\nThe mean squared end-to-end distance grows linearly with N.\n")
    print("nu = %.4f" % nu)


main()
"##;

/// Random-walk study: writes `data.csv`, `conformation.svg`, `fit.svg` and
/// `report.md`, and prints the fitted exponent. Takes optional `--n` and
/// `--samples` arguments.
pub fn provided_rw_payload() -> PayloadScript {
    PayloadScript {
        name: "rw.py".into(),
        source: RW_PAYLOAD.into(),
        declared_outputs: ["conformation.svg", "data.csv", "fit.svg", "report.md"]
            .map(String::from)
            .to_vec(),
    }
}

pub const RW_PLAN: &str = "Simulate a freely jointed chain in three dimensions with unit bond length. \
For chain lengths N in {16, 32, 64, 128, 256}, sample many independent chains, compute the mean squared \
end-to-end distance, and fit its scaling with N on log-log axes. Save the data, a chain conformation \
plot and a scaling fit plot, then write a report with Introduction, Methods, Results and Conclusion \
sections that states the fitted exponent as `nu = <value>`.";

fn program_reply(intro: &str, source: &str) -> String {
    format!("{intro}\n\n{}\n", fence(source, "python"))
}

fn review_ok() -> ScriptEntry {
    ScriptEntry::when(REVIEW_HEADER, "The program follows the plan and has no obvious errors. Ready to run.")
}

fn broken_program(i: usize) -> String {
    format!("data = [1, 2, 3]\nprint('attempt {i}')\nprint(data[{}])\n", 10 + i)
}

pub fn happy_rw() -> ScriptedCorpus {
    ScriptedCorpus::new(vec![
        ScriptEntry::reply(program_reply(
            "Here is the simulation program.",
            RW_PAYLOAD,
        )),
        review_ok(),
        ScriptEntry::when(
            SUCCESS_HEADER,
            format!("Data, plots and report are saved. {COMPLETE_TOKEN}"),
        ),
    ])
}

pub fn broken_then_fixed() -> ScriptedCorpus {
    ScriptedCorpus::new(vec![
        ScriptEntry::reply(program_reply("First version.", &broken_program(0))),
        review_ok(),
        ScriptEntry::when(ERROR_HEADER, program_reply("Fixed the indexing.", RW_PAYLOAD)),
        ScriptEntry::when(SUCCESS_HEADER, format!("Everything is written. {COMPLETE_TOKEN}")),
    ])
}

/// A new broken program on every turn; `len` programs in total.
pub fn infinite_bug(len: usize) -> ScriptedCorpus {
    let mut entries = vec![
        ScriptEntry::reply(program_reply("Program:", &broken_program(0))),
        review_ok(),
    ];
    for i in 1..len {
        entries.push(ScriptEntry::when(
            ERROR_HEADER,
            program_reply("Another attempt.", &broken_program(i)),
        ));
    }
    ScriptedCorpus::new(entries)
}

/// One failing program, one different failing fix, then the fix resubmitted
/// unchanged twice.
pub fn error_loop() -> ScriptedCorpus {
    let second = broken_program(1);
    ScriptedCorpus::new(vec![
        ScriptEntry::reply(program_reply("Program:", &broken_program(0))),
        review_ok(),
        ScriptEntry::when(ERROR_HEADER, program_reply("Fixed.", &second)),
        ScriptEntry::when(ERROR_HEADER, program_reply("Fixed again.", &second)),
        ScriptEntry::when(LOOP_HEADER, program_reply("Trying once more.", &second)),
    ])
}

pub fn instant_complete() -> ScriptedCorpus {
    ScriptedCorpus::new(vec![ScriptEntry::reply(COMPLETE_TOKEN)])
}

fn file_task(name: &str, content: &str) -> String {
    format!("with open({name:?}, 'w') as f:\n    f.write({content:?})\nprint('wrote {name}')\n")
}

fn sub_corpus(program: &str, done: &str) -> ScriptedCorpus {
    ScriptedCorpus::new(vec![
        ScriptEntry::reply(program_reply("Task program:", program)),
        review_ok(),
        ScriptEntry::when(SUCCESS_HEADER, format!("{done} {COMPLETE_TOKEN}")),
    ])
}

pub const SUB_TASK_A: &str = "Write the text `alpha ready` into a file named part_a.txt in the working directory.";
pub const SUB_TASK_B: &str = "Write the text `beta ready` into a file named part_b.txt in the working directory.";

/// Main delegates two tasks, then finishes once both reports arrive.
pub fn main_sub() -> ScriptedSource {
    let main = ScriptedCorpus::new(vec![
        ScriptEntry::reply(format!(
            "I will split the work into two tasks.\n<<<prompt\n{SUB_TASK_A}\nend>>>\n<<<prompt\n{SUB_TASK_B}\nend>>>\n"
        )),
        ScriptEntry::when(REPORT_HEADER, format!("Both parts are in place. {COMPLETE_TOKEN}")),
    ]);
    ScriptedSource::single(main)
        .with("sub0", sub_corpus(&file_task("part_a.txt", "alpha ready\n"), "part_a.txt is written."))
        .with("sub1", sub_corpus(&file_task("part_b.txt", "beta ready\n"), "part_b.txt is written."))
}

/// Main delegates a server task without host or login details; the
/// subordinate cannot connect and reports failure.
pub fn main_sub_missing_credentials() -> ScriptedSource {
    let main = ScriptedCorpus::new(vec![
        ScriptEntry::reply(
            "<<<prompt\nRun sim.py on the compute server and download its CSV output.\nend>>>\n",
        ),
        ScriptEntry::when(
            "mission failed",
            format!("The server task could not be done. {FAILED_TOKEN}"),
        ),
    ]);
    let sub = ScriptedCorpus::new(vec![
        ScriptEntry::reply(format!(
            "Sending the job.\n\n{}\n",
            fence("upload sim.py\nrun python3 sim.py\ndownload *.csv", "remote")
        )),
        ScriptEntry::when(
            ERROR_HEADER,
            format!("No login details for the server were given. {FAILED_TOKEN}"),
        ),
    ]);
    ScriptedSource::single(main).with("sub0", sub)
}

/// Writes the random-walk program, runs it on the remote target, and the
/// CSV, plots and report come back.
pub fn remote_rw() -> ScriptedCorpus {
    let writer = format!(
        "src = {RW_PAYLOAD:?}\nwith open('sim.py', 'w') as f:\n    f.write(src)\nprint('sim.py saved')\n"
    );
    ScriptedCorpus::new(vec![
        ScriptEntry::reply(program_reply("Saving the simulation program.", &writer)),
        review_ok(),
        ScriptEntry::when(
            SUCCESS_HEADER,
            format!(
                "Running it remotely.\n\n{}\n",
                fence("upload sim.py\nrun python3 sim.py --samples 200\ndownload *", "remote")
            ),
        ),
        ScriptEntry::when(SUCCESS_HEADER, format!("Remote results downloaded. {COMPLETE_TOKEN}")),
    ])
}

/// Primary corpus whose payload starts `trials` nested missions through
/// `harness` (argv prefix of the CLI) with the given child corpus.
pub fn nested(trials: u32, harness: &[String], child_corpus: &str) -> ScriptedCorpus {
    let argv = harness
        .iter()
        .map(|a| format!("{a:?}"))
        .collect::<Vec<_>>()
        .join(", ");
    let program = format!(
        "import subprocess\n\
         plan = {RW_PLAN:?}\n\
         with open('p1.txt', 'w') as f:\n    f.write(plan)\n\
         codes = []\n\
         for i in range({trials}):\n    \
             r = subprocess.run([{argv}, 'run', '-s', 'p1.txt', '-n', str(i), '--corpus', {child_corpus:?}], capture_output=True, text=True)\n    \
             codes.append(r.returncode)\n    \
             print('trial', i, r.stdout.strip().splitlines()[-1] if r.stdout.strip() else 'no output')\n\
         print('exit codes', codes)\n"
    );
    ScriptedCorpus::new(vec![
        ScriptEntry::reply(program_reply("Launching the trials.", &program)),
        review_ok(),
        ScriptEntry::when(SUCCESS_HEADER, format!("All trials ran and files are organized. {COMPLETE_TOKEN}")),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    HappyRw,
    BrokenThenFixed,
    InfiniteBug,
    ErrorLoop,
    InstantComplete,
    MainSub,
    RemoteRw,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown scenario {0:?}")]
pub struct UnknownScenario(pub String);

impl FromStr for Scenario {
    type Err = UnknownScenario;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "happy_rw" => Scenario::HappyRw,
            "broken_then_fixed" => Scenario::BrokenThenFixed,
            "infinite_bug" => Scenario::InfiniteBug,
            "error_loop" => Scenario::ErrorLoop,
            "instant_complete" => Scenario::InstantComplete,
            "main_sub" => Scenario::MainSub,
            "remote_rw" => Scenario::RemoteRw,
            other => return Err(UnknownScenario(other.into())),
        })
    }
}

/// Corpus files for a scenario as `(mission label, corpus)` pairs. Nested
/// runs depend on the harness location and are built with [`nested`].
pub fn corpus_bundle(scenario: Scenario) -> Vec<(String, ScriptedCorpus)> {
    let main = |c| vec![("main".to_string(), c)];
    match scenario {
        Scenario::HappyRw => main(happy_rw()),
        Scenario::BrokenThenFixed => main(broken_then_fixed()),
        Scenario::InfiniteBug => main(infinite_bug(40)),
        Scenario::ErrorLoop => main(error_loop()),
        Scenario::InstantComplete => main(instant_complete()),
        Scenario::RemoteRw => main(remote_rw()),
        Scenario::MainSub => {
            let src = main_sub();
            ["main", "sub0", "sub1"]
                .iter()
                .map(|l| (l.to_string(), src.corpus(l).expect("bundled corpus").clone()))
                .collect()
        }
    }
}
