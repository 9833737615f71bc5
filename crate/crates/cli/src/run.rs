//! Subcommand bodies. Each returns the process exit code.

use std::f64::consts::TAU;
use std::io::Write;

use cantor_core::certify::{certify, certify_map, CertificationReport, CertifyOptions, TrapMode, Verdict};
use cantor_core::critical::predicted_and_refined;
use cantor_core::dynamics::{itinerary, locate_component};
use cantor_core::family::FamilySpec;
use cantor_core::maps::AnyMap;
use cantor_core::parabolic::{
    certify_parabolic_map, parabolic_critical, parabolic_fixed_check, PLambdaSpec, ParabolicMap, ParabolicOptions,
    ParabolicSpec, PnSpec,
};
use cantor_core::params::{audit_budget, audit_passes, fit_budget, synth};
use cantor_core::presets::Preset;
use cantor_core::render::{render, RenderJob, RenderMode};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::input::{load, parse_complex, parse_list, UsageError};
use crate::{Cli, Command, ModeArg, ParabolicActions, ParabolicCommand, SpecSource, TrapsArg};

type Outcome = Result<i32, UsageError>;

fn write_out(cli: &Cli, bytes: &[u8]) -> Result<(), UsageError> {
    match &cli.out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| UsageError::new(format!("cannot write {p}: {e}"))),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(bytes).and_then(|_| so.flush()).map_err(|e| UsageError::new(format!("stdout: {e}")))
        }
    }
}

fn emit<T: Serialize>(cli: &Cli, v: &T) -> Result<(), UsageError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| UsageError::new(e.to_string()))?;
    s.push('\n');
    write_out(cli, s.as_bytes())
}

fn family_of(spec: Preset, what: &str) -> Result<FamilySpec, UsageError> {
    match spec {
        Preset::Family(f) => Ok(f),
        Preset::Mcmullen(m) => Ok(m.to_family()),
        Preset::Parabolic(_) => Err(UsageError::new(format!("{what} applies to the hyperbolic family only"))),
    }
}

fn source(src: &SpecSource) -> Result<Preset, UsageError> {
    load(src.preset.as_deref(), src.spec.as_deref())
}

/// Compile the map and certify it with default options.
fn prepare(spec: Preset) -> Result<(AnyMap, CertificationReport), UsageError> {
    match spec {
        Preset::Parabolic(p) => {
            let map = p.compile().map_err(|e| UsageError::new(e.to_string()))?;
            let rep = certify_parabolic_map(&map, &ParabolicOptions::default());
            Ok((AnyMap::Parabolic(map), rep))
        }
        other => {
            let f = family_of(other, "")?;
            let map = f.compile().map_err(|e| UsageError::new(e.to_string()))?;
            let rep = certify_map(&map, &CertifyOptions::default());
            Ok((AnyMap::Family(map), rep))
        }
    }
}

fn reasons(v: &Verdict) -> Vec<String> {
    match v {
        Verdict::Certified => Vec::new(),
        Verdict::Failed(r) | Verdict::Inconclusive(r) => r.clone(),
    }
}

pub fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Synth { p, degrees, shrink, with_budget } => {
            let d: Vec<u32> = parse_list(degrees, "degree")?;
            let (spec, budget) = synth(*p, &d, *shrink).map_err(|e| UsageError::new(e.to_string()))?;
            if *with_budget {
                emit(cli, &json!({ "spec": spec, "budget": budget }))?;
            } else {
                emit(cli, &spec)?;
            }
            Ok(0)
        }
        Command::Audit { src } => {
            let spec = family_of(source(src)?, "audit")?;
            let budget = fit_budget(&spec).map_err(|e| UsageError::new(e.to_string()))?;
            let entries = audit_budget(&spec, &budget);
            let pass = audit_passes(&entries);
            emit(cli, &json!({ "budget": budget, "entries": entries, "pass": pass }))?;
            Ok(if pass { 0 } else { 2 })
        }
        Command::Critical { src } => match source(src)? {
            Preset::Parabolic(p) => {
                let map = p.compile().map_err(|e| UsageError::new(e.to_string()))?;
                critical_parabolic(cli, &map)
            }
            other => {
                let spec = family_of(other, "critical")?;
                let map = spec.compile().map_err(|e| UsageError::new(e.to_string()))?;
                let budget = fit_budget(&spec).map_err(|e| UsageError::new(e.to_string()))?;
                match predicted_and_refined(&map, budget.ln_eps()) {
                    Ok(clusters) => {
                        emit(cli, &json!({ "ln_eps": budget.ln_eps(), "clusters": clusters }))?;
                        Ok(0)
                    }
                    Err(e) => {
                        emit(cli, &json!({ "error": e.to_string() }))?;
                        Ok(3)
                    }
                }
            }
        },
        Command::Certify { src, traps, s, outer, samples } => match source(src)? {
            Preset::Parabolic(p) => {
                let mut opts = ParabolicOptions::default();
                if let Some(n) = samples {
                    opts.samples = *n;
                }
                let map = p.compile().map_err(|e| UsageError::new(e.to_string()))?;
                let rep = certify_parabolic_map(&map, &opts);
                emit(cli, &rep)?;
                Ok(rep.verdict.exit_code())
            }
            other => {
                let spec = family_of(other, "certify")?;
                let mut opts = CertifyOptions {
                    trap_mode: match traps {
                        TrapsArg::Budget => TrapMode::Budget,
                        TrapsArg::Empirical => TrapMode::Empirical,
                        TrapsArg::Auto => TrapMode::Auto,
                    },
                    s: *s,
                    outer: *outer,
                    ..Default::default()
                };
                if let Some(n) = samples {
                    if *n < 64 || !n.is_power_of_two() {
                        return Err(UsageError::new("--samples must be a power of two >= 64"));
                    }
                    opts.samples = *n;
                }
                let rep = certify(&spec, &opts);
                emit(cli, &rep)?;
                Ok(rep.verdict.exit_code())
            }
        },
        Command::Itinerary { src, z, random, length } => {
            let (map, rep) = prepare(source(src)?)?;
            let Some(geom) = rep.geometry.clone() else {
                emit(cli, &json!({ "verdict": rep.verdict, "error": "no geometry available" }))?;
                return Ok(rep.verdict.exit_code().max(2));
            };
            let mut pts: Vec<Complex64> = z.iter().map(|s| parse_complex(s)).collect::<Result<_, _>>()?;
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let (lo, _) = geom.band_bounds(0);
            let (_, hi) = geom.band_bounds(geom.n - 1);
            for _ in 0..*random {
                let l = rng.gen_range(lo..hi);
                let th = rng.gen_range(0.0..TAU);
                pts.push(Complex64::from_polar(l.exp(), th));
            }
            let items: Vec<_> = pts
                .iter()
                .map(|&p| match itinerary(&map, &geom, p, *length) {
                    Ok(it) => json!({ "z": p, "itinerary": it }),
                    Err(e) => json!({ "z": p, "error": e.to_string() }),
                })
                .collect();
            emit(cli, &json!({ "verdict": rep.verdict, "symbols": geom.n, "points": items }))?;
            Ok(0)
        }
        Command::Locate { src, prefix, angle } => {
            let (map, rep) = prepare(source(src)?)?;
            let Some(geom) = rep.geometry.clone() else {
                emit(cli, &json!({ "verdict": rep.verdict, "error": "no geometry available" }))?;
                return Ok(rep.verdict.exit_code().max(2));
            };
            let pre: Vec<u8> = parse_list(prefix, "symbol")?;
            match locate_component(&map, &geom, &pre, *angle) {
                Ok(iv) => {
                    emit(cli, &json!({ "prefix": pre, "angle": angle, "interval": iv, "verdict": rep.verdict }))?;
                    Ok(0)
                }
                Err(cantor_core::Error::Validation(m)) => Err(UsageError::new(m)),
                Err(e) => {
                    emit(cli, &json!({ "prefix": pre, "angle": angle, "error": e.to_string() }))?;
                    Ok(3)
                }
            }
        }
        Command::Parabolic { family } => {
            let (spec, actions) = match family {
                ParabolicCommand::Plambda { m, n, lambda, phase, actions } => {
                    if !(*lambda > 0.0) {
                        return Err(UsageError::new("--lambda must be positive; use --phase for the argument"));
                    }
                    (ParabolicSpec::Plambda(PLambdaSpec::new(*m, *n, Complex64::from_polar(*lambda, *phase))), actions)
                }
                ParabolicCommand::Pn { n, s, actions } => {
                    let s = s.unwrap_or(1.0 / (25.0 * (*n as f64).powi(2)));
                    if !(s > 0.0 && s < 1.0) {
                        return Err(UsageError::new("--s must lie in (0, 1)"));
                    }
                    (ParabolicSpec::Pn(PnSpec::geometric(*n, s)), actions)
                }
            };
            parabolic(cli, &spec, actions)
        }
        Command::Render { src, center, halfwidth, px, mode, depth, max_iter, force } => {
            let (map, rep) = prepare(source(src)?)?;
            if !rep.verdict.is_certified() && !force {
                eprintln!(
                    "{}",
                    json!({ "error": "map is not certified; pass --force to render anyway", "reasons": reasons(&rep.verdict) })
                );
                return Ok(rep.verdict.exit_code());
            }
            let Some(geom) = rep.geometry.clone() else {
                return Err(UsageError::new("no geometry available for rendering"));
            };
            let dims: Vec<u32> = px
                .split('x')
                .map(|t| t.trim().parse::<u32>())
                .collect::<Result<_, _>>()
                .map_err(|_| UsageError::new(format!("bad --px '{px}'")))?;
            let (w, h) = match dims.as_slice() {
                [w] => (*w, *w),
                [w, h] => (*w, *h),
                _ => return Err(UsageError::new(format!("bad --px '{px}'"))),
            };
            let job = RenderJob {
                center: parse_complex(center)?,
                half_width: *halfwidth,
                width: w,
                height: h,
                mode: match mode {
                    ModeArg::Basin => RenderMode::Basin,
                    ModeArg::Escape => RenderMode::Escape,
                    ModeArg::Itinerary => RenderMode::Itinerary { depth: *depth },
                },
                max_iter: *max_iter,
            };
            let img = render(&map, &geom, &job).map_err(|e| UsageError::new(e.to_string()))?;
            write_out(cli, &img.to_ppm())?;
            Ok(0)
        }
        Command::Preset { name } => {
            match load(Some(name), None)? {
                Preset::Family(f) => emit(cli, &f)?,
                Preset::Mcmullen(m) => emit(cli, &m)?,
                Preset::Parabolic(p) => emit(cli, &p)?,
            }
            Ok(0)
        }
    }
}

fn critical_parabolic(cli: &Cli, map: &ParabolicMap) -> Outcome {
    match parabolic_critical(map) {
        Ok(c) => {
            emit(cli, &json!({ "clusters": c }))?;
            Ok(0)
        }
        Err(e) => {
            emit(cli, &json!({ "error": e.to_string() }))?;
            Ok(3)
        }
    }
}

fn parabolic(cli: &Cli, spec: &ParabolicSpec, a: &ParabolicActions) -> Outcome {
    let map = spec.compile().map_err(|e| UsageError::new(e.to_string()))?;
    let all = !(a.certify || a.critical || a.fixed_check);
    let mut out = json!({ "spec": spec });
    let mut code = 0;
    if let ParabolicMap::Pn(p) = &map {
        out["A_n"] = json!(p.a_n);
        out["B_n"] = json!(p.b_n);
        out["C_n"] = json!(p.c_n);
    }
    if a.fixed_check || all {
        let fc = parabolic_fixed_check(&map, map.fixed_point(), Complex64::new(1.0, 0.0));
        out["fixed_check"] = match fc {
            Ok(f) => json!(f),
            Err(e) => json!({ "error": e.to_string() }),
        };
    }
    if a.critical || all {
        out["critical"] = match parabolic_critical(&map) {
            Ok(c) => json!(c),
            Err(e) => {
                code = 3;
                json!({ "error": e.to_string() })
            }
        };
    }
    if a.certify || all {
        let mut opts = ParabolicOptions::default();
        if let Some(n) = a.samples {
            opts.samples = n;
        }
        if let Some(x) = a.exclusion {
            opts.exclusion = x;
        }
        let rep = certify_parabolic_map(&map, &opts);
        code = rep.verdict.exit_code();
        out["report"] = json!(rep);
    }
    emit(cli, &out)?;
    Ok(code)
}
