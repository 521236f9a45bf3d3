//! `eval`, `transform`, `evolve` and `report-spectrum`.

use rayon::prelude::*;
use rhs_spectra_core::eigen::Eigenfunction;
use rhs_spectra_core::green::GreenKernel;
use rhs_spectra_core::spectral::{integrated_rho, rho, spectrum_info, stone_measure, DEFAULT_STONE_EPS};
use rhs_spectra_core::transform::{
    dispersion, evolve, l2_norm, to_energy, to_energy_rho, to_position, EnergyFunction, RadialFunction, TransformInfo,
};
use rhs_spectra_core::{BarrierConfig, Complex64, ComplexEnergy, Error};
use serde_json::{json, Value};

use crate::config::{GridSpec, NormalizationChoice, Quantity, RunConfig, TransformMode};
use crate::error::{CliError, Context};
use crate::output::{Cell, Table};

/// Main table plus optional metadata for the sidecar file.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub table: Table,
    pub meta: Option<Value>,
}

impl CommandOutput {
    fn plain(table: Table) -> Self {
        CommandOutput { table, meta: None }
    }
}

/// `2.0` for real energies, `2.0+1.0i` otherwise.
pub fn energy_label(e: ComplexEnergy) -> String {
    if e.im == 0.0 {
        format!("{:?}", e.re)
    } else {
        let sign = if e.im.is_sign_negative() { '-' } else { '+' };
        format!("{:?}{sign}{:?}i", e.re, e.im.abs())
    }
}

fn check_radii(rs: &[f64], field: &str) -> Result<(), CliError> {
    match rs.iter().find(|r| !(**r >= 0.0)) {
        Some(&r) => Err(CliError::Math {
            op: "radial grid",
            inputs: format!("{field} contains r={r}"),
            source: Error::Domain {
                what: "radius",
                value: r,
            },
        }),
        None => Ok(()),
    }
}

pub fn cmd_eval(config: &RunConfig) -> Result<CommandOutput, CliError> {
    config.validate()?;
    let cfg = config.barrier()?;
    let ev = &config.eval;
    match ev.quantity {
        Quantity::Eigenfunction => {
            let rs = ev.r()?;
            check_radii(&rs, "eval.r")?;
            let mut built = Vec::new();
            for e in ev.energies() {
                for fam in ev.families()? {
                    let f = Eigenfunction::new(&cfg, fam, e)
                        .during("eigenfunction", || format!("family={fam}, E={}", energy_label(e)))?;
                    built.push((energy_label(e), fam.name(), f));
                }
            }
            let rows: Vec<Vec<Vec<Cell>>> = rs
                .par_iter()
                .map(|&r| {
                    built
                        .iter()
                        .map(|(label, name, f)| {
                            let v = f.value(r);
                            vec![r.into(), label.clone().into(), (*name).into(), v.re.into(), v.im.into()]
                        })
                        .collect()
                })
                .collect();
            let mut t = Table::new(&["r", "E", "family", "re", "im"]);
            rows.into_iter().flatten().for_each(|row| t.push(row));
            Ok(CommandOutput::plain(t))
        }
        Quantity::Green => {
            let (rs, ss) = (ev.r()?, ev.s()?);
            check_radii(&rs, "eval.r")?;
            check_radii(&ss, "eval.s")?;
            let kernels = ev
                .energies()
                .into_iter()
                .map(|e| GreenKernel::new(&cfg, e).during("green_function", || format!("E={}", energy_label(e))))
                .collect::<Result<Vec<_>, _>>()?;
            let rows: Vec<Vec<Vec<Cell>>> = rs
                .par_iter()
                .map(|&r| {
                    let mut out = Vec::new();
                    for &s in &ss {
                        for k in &kernels {
                            let g = k.value(r, s);
                            out.push(vec![
                                r.into(),
                                s.into(),
                                k.energy.re.into(),
                                k.energy.im.into(),
                                g.re.into(),
                                g.im.into(),
                            ]);
                        }
                    }
                    out
                })
                .collect();
            let mut t = Table::new(&["r", "s", "Ere", "Eim", "re", "im"]);
            rows.into_iter().flatten().for_each(|row| t.push(row));
            Ok(CommandOutput::plain(t))
        }
        Quantity::Rho => {
            let es = ev.rho_energies()?;
            let mut t = Table::new(&["E", "rho"]);
            for e in es {
                let d = rho(&cfg, e).during("rho", || format!("E={e:?}"))?;
                t.push(vec![e.into(), d.rho.into()]);
            }
            Ok(CommandOutput::plain(t))
        }
    }
}

fn info_json(info: &TransformInfo) -> Value {
    json!({
        "r_cutoff": finite(info.r_cutoff),
        "e_cutoff": finite(info.e_cutoff),
        "panels": info.panels,
        "nodes": info.nodes,
        "error_estimate": finite(info.error_estimate),
        "tail_estimate": finite(info.tail_estimate),
        "band_error": finite(info.band_error),
    })
}

fn finite(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn required_function<'a>(name: &'a Option<String>, field: &str) -> Result<&'a str, CliError> {
    name.as_deref()
        .ok_or_else(|| CliError::config(format!("{field} is required for this command")))
}

/// Default output radii: 64 points over the numerical support.
fn default_radii(f: &RadialFunction, tol: f64) -> Vec<f64> {
    let (lo, hi) = f.support(tol, 0);
    let hi = hi.min(lo + 200.0);
    (0..64).map(|i| lo + (hi - lo) * i as f64 / 63.0).collect()
}

fn energy_rows(fhat: &EnergyFunction, energies: Option<&GridSpec>) -> Result<Table, CliError> {
    let points: Vec<f64> = match energies {
        Some(g) => g.points("transform.energies")?,
        None => {
            let s = fhat.samples();
            if s.is_empty() {
                let (lo, hi) = fhat.support();
                (0..64).map(|i| lo + (hi - lo) * i as f64 / 63.0).collect()
            } else {
                s.into_iter().map(|(e, _)| e).collect()
            }
        }
    };
    let mut t = Table::new(&["E", "re", "im"]);
    for e in points {
        let v = fhat.eval(e);
        t.push(vec![e.into(), v.re.into(), v.im.into()]);
    }
    Ok(t)
}

fn radial_rows(f: &RadialFunction, rs: &[f64]) -> Table {
    let vals: Vec<Complex64> = rs.par_iter().map(|&r| f.eval(r)).collect();
    let mut t = Table::new(&["r", "re", "im"]);
    for (&r, v) in rs.iter().zip(vals) {
        t.push(vec![r.into(), v.re.into(), v.im.into()]);
    }
    t
}

pub fn cmd_transform(config: &RunConfig) -> Result<CommandOutput, CliError> {
    config.validate()?;
    let cfg = config.barrier()?;
    let quad = config.quadrature()?;
    let tr = &config.transform;
    let name = required_function(&tr.function, "transform.function")?;
    let built = config.build_function(name)?;
    let f = built.function();
    let base = json!({ "function": name, "kind": built.kind() });
    let forward = |f: &RadialFunction| -> Result<EnergyFunction, CliError> {
        match tr.normalization {
            NormalizationChoice::Delta => to_energy(&cfg, f, &quad).during("to_energy", || name.to_string()),
            NormalizationChoice::Rho => to_energy_rho(&cfg, f, &quad).during("to_energy_rho", || name.to_string()),
        }
    };
    match tr.mode {
        TransformMode::Energy => {
            let fhat = forward(f)?;
            let table = energy_rows(&fhat, tr.energies.as_ref())?;
            let mut meta = base;
            meta["normalization"] = json!(match tr.normalization {
                NormalizationChoice::Delta => "delta",
                NormalizationChoice::Rho => "rho",
            });
            meta["transform"] = info_json(&fhat.info);
            Ok(CommandOutput {
                table,
                meta: Some(meta),
            })
        }
        TransformMode::RoundTrip => {
            if tr.normalization == NormalizationChoice::Rho {
                return Err(CliError::config(
                    "transform.normalization: round_trip uses the delta normalization",
                ));
            }
            let fhat = forward(f)?;
            let back = to_position(&cfg, &fhat, &quad).during("to_position", || name.to_string())?;
            let norm = l2_norm(&cfg, f, &quad).during("l2_norm", || name.to_string())?;
            let diff = back.plus(&f.scaled(Complex64::new(-1.0, 0.0)));
            let err = l2_norm(&cfg, &diff, &quad).during("l2_norm", || name.to_string())?;
            let rs = match &tr.r {
                Some(g) => g.points("transform.r")?,
                None => default_radii(f, quad.tol),
            };
            check_radii(&rs, "transform.r")?;
            let mut meta = base;
            meta["transform"] = info_json(&fhat.info);
            meta["l2_norm"] = finite(norm);
            meta["round_trip_relative_error"] = finite(if norm > 0.0 { err / norm } else { err });
            Ok(CommandOutput {
                table: radial_rows(&back, &rs),
                meta: Some(meta),
            })
        }
        TransformMode::Dispersion => {
            let norm = l2_norm(&cfg, f, &quad).during("l2_norm", || name.to_string())?;
            if !(norm > 0.0) {
                return Err(CliError::Math {
                    op: "dispersion",
                    inputs: name.to_string(),
                    source: Error::NormalizationError { norm },
                });
            }
            let unit = f.scaled(Complex64::new(1.0 / norm, 0.0));
            let d = dispersion(&cfg, &unit, &quad).during("dispersion", || name.to_string())?;
            let mut t = Table::new(&["mean", "disp", "delta"]);
            t.push(vec![d.mean.into(), d.disp.into(), d.delta.into()]);
            let mut meta = base;
            meta["l2_norm"] = finite(norm);
            Ok(CommandOutput {
                table: t,
                meta: Some(meta),
            })
        }
    }
}

pub fn cmd_evolve(config: &RunConfig) -> Result<CommandOutput, CliError> {
    config.validate()?;
    let cfg = config.barrier()?;
    let quad = config.quadrature()?;
    let ev = &config.evolve;
    let name = required_function(&ev.function, "evolve.function")?;
    let built = config.build_function(name)?;
    let f = built.function();
    let times = ev.times.clone().unwrap_or_else(|| vec![0.0, 0.5, 1.0, 2.0]);
    let rs = match &ev.r {
        Some(g) => g.points("evolve.r")?,
        None => default_radii(f, quad.tol),
    };
    check_radii(&rs, "evolve.r")?;
    let norm0 = l2_norm(&cfg, f, &quad).during("l2_norm", || name.to_string())?;
    let mut t = Table::new(&["t", "r", "re", "im"]);
    let mut norms = Vec::new();
    for &time in &times {
        let ft = evolve(&cfg, f, time, &quad).during("evolve", || format!("{name}, t={time:?}"))?;
        let nt = l2_norm(&cfg, &ft, &quad).during("l2_norm", || format!("{name}(t={time:?})"))?;
        norms.push(json!({ "t": time, "l2_norm": finite(nt) }));
        for row in radial_rows(&ft, &rs).rows {
            let mut r = vec![Cell::Num(time)];
            r.extend(row);
            t.push(r);
        }
    }
    let meta = json!({
        "function": name,
        "kind": built.kind(),
        "initial_l2_norm": finite(norm0),
        "norms": norms,
    });
    Ok(CommandOutput {
        table: t,
        meta: Some(meta),
    })
}

pub fn spectrum_report(config: &RunConfig) -> Result<Value, CliError> {
    config.validate()?;
    let cfg: BarrierConfig = config.barrier()?;
    let sp = &config.spectrum;
    let info = spectrum_info(&cfg);
    let mut density = Vec::new();
    for e in sp.energies.points("spectrum.energies")? {
        if !cfg.is_admissible_energy(e) {
            continue;
        }
        let d = rho(&cfg, e).during("rho", || format!("E={e:?}"))?;
        density.push(json!({ "E": e, "rho": d.rho }));
    }
    let [e1, e2] = sp.stone_interval;
    let stone = stone_measure(&cfg, e1, e2, &DEFAULT_STONE_EPS, 1e-4)
        .during("stone_measure", || format!("[{e1:?}, {e2:?}]"))?;
    let exact = integrated_rho(&cfg, e1, e2).during("integrated_rho", || format!("[{e1:?}, {e2:?}]"))?;
    let bands: Vec<Value> = cfg.exclusion_bands().iter().map(|(lo, hi)| json!([lo, hi])).collect();
    Ok(json!({
        "barrier": {
            "kappa": cfg.kappa, "hbar": cfg.hbar, "v0": cfg.v0, "a": cfg.a, "b": cfg.b,
            "eps_energy": cfg.eps_energy,
        },
        "continuous_spectrum": [info.continuous.0, finite(info.continuous.1)],
        "point_spectrum": info.point,
        "resolvent_set": info.resolvent_set,
        "multiplicity": info.multiplicity,
        "exclusion_bands": bands,
        "density": density,
        "stone": {
            "interval": [e1, e2],
            "eps": DEFAULT_STONE_EPS,
            "rho11": stone.rho11(),
            "rho12_abs": stone.entries[0][1].norm(),
            "rho21_abs": stone.entries[1][0].norm(),
            "rho22_abs": stone.entries[1][1].norm(),
            "extrapolation_error": stone.errors[0][0],
            "integrated_density": exact,
        },
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> Result<CommandOutput, CliError> {
        cmd_eval(&RunConfig::parse(text).unwrap())
    }

    #[test]
    fn free_rho_row() {
        let out = run("[barrier]\nv0 = 0.0\n[eval]\nquantity = \"rho\"\nrho_energies = [1.0]\n").unwrap();
        let csv = out.table.to_csv();
        let row = csv.strip_prefix("E,rho\n1.0,").unwrap();
        let rho: f64 = row.trim().parse().unwrap();
        assert!((rho - 1.0 / std::f64::consts::PI).abs() < 1e-15, "{csv}");
    }

    #[test]
    fn free_chi_dump() {
        let text = format!(
            "[barrier]\nv0 = 0.0\n[eval]\nenergies = [1.0]\nr = [{:?}]\n",
            std::f64::consts::FRAC_PI_2
        );
        let out = run(&text).unwrap();
        let row = &out.table.rows[0];
        assert_eq!(row[3], Cell::Num(1.0));
        assert_eq!(row[4], Cell::Num(0.0));
    }

    #[test]
    fn green_dump_is_symmetric() {
        let out = run("[eval]\nquantity = \"green\"\nr = [0.5, 1.5, 2.5, 3.5]\n").unwrap();
        let csv = out.table.to_csv();
        let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
        assert_eq!(rows.len(), 16);
        for row in &rows {
            assert_eq!(row[2], "-1.0");
            let swapped = rows.iter().find(|o| o[0] == row[1] && o[1] == row[0]).unwrap();
            assert_eq!(&row[4..], &swapped[4..]);
        }
    }

    #[test]
    fn complex_energy_labels() {
        assert_eq!(energy_label(ComplexEnergy::new(2.0, -1.0)), "2.0-1.0i");
        assert_eq!(energy_label(ComplexEnergy::real(0.5)), "0.5");
        let out = run("[eval]\nfamilies = [\"theta_plus\"]\nenergies = [[2.0, 1.0]]\nr = [3.0]\n").unwrap();
        assert_eq!(out.table.rows[0][1], Cell::Text("2.0+1.0i".into()));
    }

    #[test]
    fn domain_errors() {
        let err = run("[eval]\nenergies = [1.0]\n").unwrap_err();
        assert_eq!(err.exit_code(), 3, "{err}");
        let err = run("[eval]\nquantity = \"green\"\nenergies = [2.0]\n").unwrap_err();
        assert_eq!(err.exit_code(), 3, "{err}");
        let err = run("[eval]\nfamilies = [\"chi_tilde\"]\n").unwrap_err();
        assert_eq!(err.exit_code(), 3, "{err}");
        let err = run("[eval]\nr = [-1.0, 0.5]\n").unwrap_err();
        assert_eq!(err.exit_code(), 3, "{err}");
    }

    #[test]
    fn free_dispersion() {
        let text = "[barrier]\nv0 = 0.0\n[[functions]]\nkind = \"exp_poly\"\nname = \"f\"\nrate = 1.0\n\
                    coeffs = [0.0, 2.0]\n[transform]\nfunction = \"f\"\nmode = \"dispersion\"\n";
        let out = cmd_transform(&RunConfig::parse(text).unwrap()).unwrap();
        let Cell::Num(mean) = out.table.rows[0][0] else {
            panic!()
        };
        let Cell::Num(delta) = out.table.rows[0][2] else {
            panic!()
        };
        assert!(
            (mean - 1.0).abs() < 1e-6 && (delta - 2.0).abs() < 1e-6,
            "{mean} {delta}"
        );
    }

    #[test]
    fn round_trip_of_a_bump() {
        let text = "[[functions]]\nkind = \"bump\"\nname = \"b\"\ncenter = 3.5\nhalfwidth = 1.0\n\
                    [transform]\nfunction = \"b\"\nmode = \"round_trip\"\nr = { start = 2.5, stop = 4.5, count = 5 }\n";
        let out = cmd_transform(&RunConfig::parse(text).unwrap()).unwrap();
        let meta = out.meta.unwrap();
        assert!(meta["round_trip_relative_error"].as_f64().unwrap() < 1e-5, "{meta}");
        assert_eq!(out.table.rows.len(), 5);
    }

    #[test]
    fn evolution_at_zero_reproduces_input() {
        let text = "[[functions]]\nkind = \"bump\"\nname = \"b\"\ncenter = 3.5\nhalfwidth = 1.0\n\
                    [evolve]\nfunction = \"b\"\ntimes = [0.0]\nr = [3.0, 3.5, 4.0]\n";
        let config = RunConfig::parse(text).unwrap();
        let out = cmd_evolve(&config).unwrap();
        let f = config.build_function("b").unwrap();
        for row in &out.table.rows {
            let (Cell::Num(r), Cell::Num(re), Cell::Num(im)) = (&row[1], &row[2], &row[3]) else {
                panic!()
            };
            let want = f.function().eval(*r);
            assert!((Complex64::new(*re, *im) - want).norm() < 1e-5);
        }
    }

    #[test]
    fn missing_function_is_a_config_error() {
        let err = cmd_transform(&RunConfig::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn spectrum_report_contents() {
        let v = spectrum_report(&RunConfig::default()).unwrap();
        assert_eq!(v["point_spectrum"], json!([]));
        assert_eq!(v["continuous_spectrum"][1], Value::Null);
        let s = &v["stone"];
        let rel = (s["rho11"].as_f64().unwrap() - s["integrated_density"].as_f64().unwrap()).abs()
            / s["integrated_density"].as_f64().unwrap();
        assert!(rel < 1e-4, "{rel}");
    }
}
