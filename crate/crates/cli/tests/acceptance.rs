//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria 1 to 12 run the verification suites in-process with the default
//! configuration. Criterion 13 drives the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rhs_spectra::config::VerifySection;
use rhs_spectra::error::exit;
use rhs_spectra::verify::{run_suite, Context, Record, SUITES};
use rhs_spectra_core::quadrature::QuadratureSpec;
use rhs_spectra_core::BarrierConfig;

const TITLES: [&str; 13] = [
    "free-particle reduction",
    "closed-form vs transfer-matrix coefficients",
    "Wronskian identities",
    "resolvent identity",
    "Stone formula vs closed-form density",
    "conjugate-pair identity",
    "unitarity and round trip",
    "diagonalization",
    "nuclear spectral theorem identities",
    "ket properties",
    "norm family",
    "time evolution",
    "CLI determinism and exit codes",
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn suite_outcome(records: &[Record]) -> Outcome {
    let failed: Vec<&Record> = records.iter().filter(|r| !r.pass).collect();
    if records.is_empty() {
        return Outcome {
            pass: false,
            detail: "no checks ran".into(),
        };
    }
    if failed.is_empty() {
        return Outcome {
            pass: true,
            detail: format!("{} checks", records.len()),
        };
    }
    let names: Vec<String> = failed
        .iter()
        .map(|r| match (&r.achieved, &r.note) {
            (_, Some(n)) => format!("{} ({n})", r.name),
            (Some(a), None) => format!("{} (achieved {a:e}, tolerance {:e})", r.name, r.tolerance),
            (None, None) => r.name.clone(),
        })
        .collect();
    Outcome {
        pass: false,
        detail: format!(
            "{} of {} checks failed: {}",
            failed.len(),
            records.len(),
            names.join("; ")
        ),
    }
}

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_rhs-spectra")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).expect("write config");
    p
}

fn run_cli(args: &[&str], threads: Option<&str>) -> (i32, Vec<u8>) {
    let mut cmd = Command::new(binary());
    cmd.args(args);
    match threads {
        Some(n) => cmd.env("RHS_SPECTRA_THREADS", n),
        None => cmd.env_remove("RHS_SPECTRA_THREADS"),
    };
    let out = cmd.output().expect("spawn rhs-spectra");
    (out.status.code().unwrap_or(-1), out.stdout)
}

const REDUCED_VERIFY: &str = r#"[verify]
random_functions = 2
ket_samples = 10
max_order = 2
suites = ["free_reduction", "coefficients", "wronskians", "resolvent", "stone", "conjugate_pair", "kets"]
"#;

const GREEN_EVAL: &str = r#"[eval]
quantity = "green"
energies = [-1.0]
r = [0.5, 1.5, 3.0]
s = [0.5, 1.5, 3.0]
"#;

const UNKNOWN_KEY: &str = "[barrier]\nv0 = 1.0\nwidth = 2.0\n";

const ON_SPECTRUM: &str = "[eval]\nquantity = \"green\"\nenergies = [2.0]\n";

const SHORT_ENERGY_CUTOFF: &str = r#"[quadrature]
e_cutoff = 0.5

[[functions]]
kind = "bump"
name = "b"
center = 3.5
halfwidth = 1.0

[transform]
function = "b"
mode = "dispersion"
"#;

const PRINTED: &str = "[verify]\ntranscription = \"printed\"\nsuites = [\"coefficients\"]\n";

fn cli_contract() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let d = dir.path();
    let s = |p: &Path| p.to_str().expect("utf-8 path").to_owned();
    let mut problems = Vec::new();

    let vcfg = s(&write(d, "verify.toml", REDUCED_VERIFY));
    let gcfg = s(&write(d, "green.toml", GREEN_EVAL));
    let mut outputs = Vec::new();
    for (i, threads) in [None, Some("1")].into_iter().enumerate() {
        let vout = s(&d.join(format!("verify{i}.json")));
        let eout = s(&d.join(format!("eval{i}.csv")));
        let (vc, _) = run_cli(&["verify", "--config", &vcfg, "--seed", "7", "--out", &vout], threads);
        let (ec, _) = run_cli(&["eval", "--out", &eout], threads);
        let (gc, gstdout) = run_cli(&["eval", "--config", &gcfg, "--stdout"], threads);
        for (what, code) in [("verify", vc), ("eval", ec), ("green eval", gc)] {
            if code != exit::OK {
                problems.push(format!("{what} run {i} exited {code}"));
            }
        }
        let read = |p: &str| std::fs::read(p).unwrap_or_default();
        outputs.push([read(&vout), read(&eout), gstdout]);
    }
    for (k, what) in ["verify report", "eval csv", "green eval stdout"].iter().enumerate() {
        if outputs[0][k].is_empty() {
            problems.push(format!("{what} is empty"));
        } else if outputs[0][k] != outputs[1][k] {
            problems.push(format!("{what} differs between runs"));
        }
    }

    let induced = [
        ("unknown config key", "eval", UNKNOWN_KEY, exit::CONFIG),
        ("energy on the spectrum", "eval", ON_SPECTRUM, exit::DOMAIN),
        (
            "energy cutoff too small",
            "transform",
            SHORT_ENERGY_CUTOFF,
            exit::QUADRATURE,
        ),
        ("printed transcription", "verify", PRINTED, exit::VERIFY_FAILED),
    ];
    for (i, (what, command, text, want)) in induced.into_iter().enumerate() {
        let cfg = s(&write(d, &format!("induced{i}.toml"), text));
        let (code, _) = run_cli(&[command, "--config", &cfg, "--stdout"], None);
        if code != want {
            problems.push(format!("{what}: exit {code}, expected {want}"));
        }
    }
    let (code, _) = run_cli(&["eval", "--no-such-flag"], None);
    if code != exit::CONFIG {
        problems.push(format!("unknown flag: exit {code}, expected {}", exit::CONFIG));
    }
    let (code, _) = run_cli(&["eval", "--stdout"], Some("zero"));
    if code != exit::CONFIG {
        problems.push(format!(
            "bad RHS_SPECTRA_THREADS: exit {code}, expected {}",
            exit::CONFIG
        ));
    }

    if problems.is_empty() {
        Outcome {
            pass: true,
            detail: "verify, eval and green outputs byte-identical; exit codes 1, 2, 3, 4 on induced failures".into(),
        }
    } else {
        Outcome {
            pass: false,
            detail: problems.join("; "),
        }
    }
}

fn main() -> ExitCode {
    let ctx = Context::new(
        BarrierConfig::default(),
        QuadratureSpec::default(),
        VerifySection::default(),
    );
    let started = Instant::now();
    let mut failures = 0;
    for (k, title) in TITLES.iter().enumerate() {
        let t = Instant::now();
        let outcome = match SUITES.get(k) {
            Some(name) => suite_outcome(&run_suite(&ctx, name).unwrap_or_default()),
            None => cli_contract(),
        };
        if !outcome.pass {
            failures += 1;
        }
        println!(
            "{} criterion {:>2}: {title}: {} [{:.1} s]",
            if outcome.pass { "PASS" } else { "FAIL" },
            k + 1,
            outcome.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1} s",
        TITLES.len() - failures,
        TITLES.len(),
        started.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
