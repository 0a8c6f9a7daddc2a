//! The invariant suite behind `oce-risk verify`.
//!
//! Each named check aggregates every instance it ran on and reports the
//! worst measured residual.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::commands::fenchel_residual;
use super::{load_scenario, CliError, Report, VerifyArgs};
use crate::ext::ExtReal;
use crate::hulls::{gap_passes, hull_dual, HullMode, HullSpec, RiskDescriptor, WEAK_DUALITY_TOL};
use crate::oce;
use crate::prob_space::{ProbSpace, RandomVariable};
use crate::solver::projection::FeasibleSet;
use crate::solver::{golden_section, AscentConfig, QBall};
use crate::utility::Utility;

struct Tally {
    name: &'static str,
    worst: f64,
    tol: f64,
    passed: bool,
    runs: usize,
}

#[derive(Default)]
struct Suite {
    tallies: Vec<Tally>,
}

impl Suite {
    fn tally(&mut self, name: &'static str, tol: f64) -> &mut Tally {
        if let Some(i) = self.tallies.iter().position(|t| t.name == name) {
            return &mut self.tallies[i];
        }
        self.tallies.push(Tally {
            name,
            worst: 0.0,
            tol,
            passed: true,
            runs: 0,
        });
        self.tallies.last_mut().expect("just pushed")
    }

    fn measure(&mut self, name: &'static str, measured: f64, tol: f64) {
        let t = self.tally(name, tol);
        t.runs += 1;
        if !(measured <= tol) {
            t.passed = false;
        }
        if measured.is_nan() || measured > t.worst {
            t.worst = measured;
        }
    }

    fn flag(&mut self, name: &'static str, ok: bool) {
        self.measure(name, if ok { 0.0 } else { 1.0 }, 0.0);
    }

    fn finish(self, report: &mut Report) {
        for t in self.tallies {
            report.num(format!("runs.{}", t.name), t.runs as f64, 0.0);
            report.check_with(t.name, t.passed, t.worst, t.tol);
        }
    }
}

struct Instance {
    space: ProbSpace,
    x: RandomVariable,
    y: RandomVariable,
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> RandomVariable {
    RandomVariable::new((0..n).map(|_| rng.gen_range(-3.0..3.0)).collect()).expect("finite")
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<Report, CliError> {
    let c = &args.common;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut instances = Vec::new();
    if c.input.is_some() {
        let s = load_scenario(c)?;
        let x = s.column(c.column.as_deref())?.clone();
        let y = random_vector(&mut rng, x.len());
        instances.push(Instance { space: s.space, x, y });
    } else {
        if args.n == 0 {
            return Err(CliError::Usage("--n must be positive".into()));
        }
        for _ in 0..args.instances {
            let space = ProbSpace::new(random_weights(&mut rng, args.n))?;
            let x = random_vector(&mut rng, args.n);
            let y = random_vector(&mut rng, args.n);
            instances.push(Instance { space, x, y });
        }
    }

    let mut report = Report::new("verify");
    report.num("instances", instances.len() as f64, 0.0);
    let mut suite = Suite::default();
    let t0 = Instant::now();
    for inst in &instances {
        space_checks(&mut suite, inst)?;
    }
    utility_checks(&mut suite, c.tol_identity);
    report.timing("space_and_utility", t0.elapsed());
    let t1 = Instant::now();
    for inst in &instances {
        oce_checks(&mut suite, inst, c.tol_axiom, c.tol_fenchel, c.tol_identity)?;
    }
    report.timing("oce", t1.elapsed());
    let t2 = Instant::now();
    let cfg = AscentConfig {
        seed: c.seed,
        restarts: args.restarts.max(1),
        ..AscentConfig::default()
    };
    for inst in &instances {
        hull_checks(&mut suite, &mut report, inst, &cfg, c.tol_gap, c.tol_axiom)?;
    }
    report.timing("hulls", t2.elapsed());
    let t3 = Instant::now();
    solver_checks(&mut suite, &mut rng)?;
    report.timing("solver", t3.elapsed());
    suite.finish(&mut report);
    Ok(report)
}

fn space_checks(suite: &mut Suite, inst: &Instance) -> Result<(), CliError> {
    let total: f64 = inst.space.weights().iter().sum();
    suite.measure("weights_sum_to_one", (total - 1.0).abs(), 1e-12);
    let levels = [0.05, 0.1, 0.25, 0.5, 0.75, 0.95];
    let vars = levels
        .iter()
        .map(|b| inst.space.var_beta(&inst.x, *b))
        .collect::<Result<Vec<_>, _>>()?;
    // VaR is -(beta-quantile), so it cannot increase with beta.
    let worst = vars.windows(2).map(|w| (w[1] - w[0]).max(0.0)).fold(0.0, f64::max);
    suite.measure("var_nonincreasing_in_level", worst, 0.0);
    Ok(())
}

fn utility_catalog() -> Vec<Utility> {
    let mut v = Utility::catalog();
    v.push(Utility::cvar(0.25).expect("valid level"));
    v
}

fn utility_checks(suite: &mut Suite, tol: f64) {
    let grid: Vec<f64> = (-40..=40).map(|i| f64::from(i) / 8.0).collect();
    for v in utility_catalog() {
        suite.flag("utility_normalized", v.check_normalization());
        suite.flag("utility_attainment_condition", v.check_attainment_condition());
        for &t in &grid {
            let sub = v.subdiff(t);
            for &s in &grid {
                if let (ExtReal::Finite(a), ExtReal::Finite(b)) = (v.eval(t), v.conjugate(s)) {
                    suite.measure("utility_fenchel_young", (t * s - a - b).max(0.0), tol * (1.0 + (t * s).abs()));
                }
            }
            for s in [sub.lo(), sub.hi()] {
                if !s.is_finite() {
                    continue;
                }
                if let (ExtReal::Finite(a), ExtReal::Finite(b)) = (v.eval(t), v.conjugate(s)) {
                    suite.measure("utility_fenchel_equality", (a + b - t * s).abs(), tol * (1.0 + (t * s).abs()));
                }
            }
        }
    }
}

fn oce_checks(suite: &mut Suite, inst: &Instance, tol_axiom: f64, tol_fenchel: f64, tol_identity: f64) -> Result<(), CliError> {
    let (space, x, y) = (&inst.space, &inst.x, &inst.y);
    let rho = |z: &RandomVariable, v: &Utility| -> Result<f64, CliError> { Ok(oce::oce_value(space, v, z)?.value.to_f64()) };
    let mean = space.expectation(x)?;
    let mid = RandomVariable::new(x.values().iter().zip(y.values()).map(|(a, b)| 0.5 * (a + b)).collect())?;
    let up = RandomVariable::new(x.values().iter().zip(y.values()).map(|(a, b)| a + b.abs()).collect())?;
    for v in utility_catalog() {
        let r = oce::oce_value(space, &v, x)?;
        let rx = r.value.to_f64();
        suite.flag("oce_attained", r.attained);
        suite.measure("oce_lower_bound_minus_mean", (-mean - rx).max(0.0), tol_axiom);
        suite.measure("oce_cash_invariance", relative(rho(&x.shift(0.7), &v)?, rx - 0.7), tol_axiom);
        suite.measure("oce_monotone", (rho(&up, &v)? - rx).max(0.0), tol_axiom);
        let ry = rho(y, &v)?;
        suite.measure("oce_convex", (rho(&mid, &v)? - 0.5 * (rx + ry)).max(0.0), tol_axiom);
        let bx = oce::oce_subdiff_at(space, &v, x, r.lambda_bar)?;
        suite.flag("subdiff_nonempty", bx.is_nonempty(space));
        if let Some(m) = bx.feasible_point(space) {
            let conj = oce::oce_conjugate(space, &v, &m)?;
            suite.measure("subdiff_member_fenchel_equality", fenchel_residual(r.value, conj, space.pairing(&m, x)?), tol_fenchel);
        }
    }
    let beta = 0.25;
    let cv = oce::cvar(space, x, beta)?.value.to_f64();
    let v = Utility::cvar(beta)?;
    let at_var = oce::objective(space, &v, x, space.var_beta(x, beta)?).to_f64();
    suite.measure("cvar_attained_at_var", (at_var - cv).abs(), tol_identity);
    let closed: f64 = space
        .weights()
        .iter()
        .zip(x.values())
        .map(|(p, xi)| p * (-xi).exp())
        .sum::<f64>()
        .ln();
    suite.measure("entropic_closed_form", (rho(x, &Utility::Exponential)? - closed).abs(), tol_identity);
    suite.measure("worst_case_closed_form", (rho(x, &Utility::IndicatorNonneg)? + x.min()).abs(), tol_identity);

    // Scalar minimizer against a dense golden-section reference on phi.
    for v in utility_catalog() {
        let r = oce::oce_value(space, &v, x)?;
        let phi = |l: f64| oce::objective(space, &v, x, l).to_f64();
        let (lo, hi) = (-x.max() - 10.0, -x.min() + 10.0);
        let steps = 4000;
        let h = (hi - lo) / steps as f64;
        let k = (0..=steps)
            .min_by(|a, b| phi(lo + h * *a as f64).total_cmp(&phi(lo + h * *b as f64)))
            .expect("nonempty");
        let l0 = lo + h * k as f64;
        let (_, best) = golden_section(&phi, l0 - h, l0 + h, 200);
        let reference = best.min(phi(l0));
        suite.measure("scalar_vs_grid", (r.value.to_f64() - reference).abs(), 1e-6);
    }
    Ok(())
}

fn hull_catalog() -> Vec<RiskDescriptor> {
    vec![
        RiskDescriptor::lp_deviation(2.0, 0.5).expect("valid"),
        RiskDescriptor::lp_semi_deviation(1.5, 1.5).expect("valid"),
        RiskDescriptor::mean_lp(1.0, 0.5).expect("valid"),
        RiskDescriptor::lp_semi_moment(2.0, 0.5).expect("valid"),
        RiskDescriptor::Exponential,
        RiskDescriptor::Logarithmic,
    ]
}

fn hull_checks(
    suite: &mut Suite,
    report: &mut Report,
    inst: &Instance,
    cfg: &AscentConfig,
    tol_gap: f64,
    tol_axiom: f64,
) -> Result<(), CliError> {
    let (space, x) = (&inst.space, &inst.x);
    let one = HullSpec::constant(space, 1.0)?;
    for desc in hull_catalog() {
        for mode in HullMode::ALL {
            let sol = hull_dual(space, &desc, &one, x, mode, cfg)?;
            let weak = match (sol.primal_value, sol.dual_value) {
                (ExtReal::Finite(p), ExtReal::Finite(d)) => (d - p).max(0.0) / p.abs().max(1.0),
                (ExtReal::PosInf, _) | (_, ExtReal::NegInf) => 0.0,
                _ => f64::INFINITY,
            };
            suite.measure("hull_weak_duality", weak, WEAK_DUALITY_TOL);
            if weak > WEAK_DUALITY_TOL {
                report.note(format!(
                    "{desc} {mode}: dual {} exceeds primal {}",
                    sol.dual_value, sol.primal_value
                ));
            }
            if sol.slater_ok {
                let rel = match sol.primal_value {
                    ExtReal::Finite(p) => sol.gap.abs() / p.abs().max(1.0),
                    _ => sol.gap,
                };
                suite.measure("hull_duality_gap", rel, tol_gap);
                if !gap_passes(&sol, tol_gap) {
                    report.note(format!(
                        "{desc} {mode}: primal {} dual {} relative gap {rel:e}",
                        sol.primal_value, sol.dual_value
                    ));
                    if !sol.converged {
                        report.non_convergence = true;
                    }
                }
            } else {
                report.note(format!("{desc} {mode}: no Slater point, gap not checked"));
            }
            let fx = desc.eval(space, x)?;
            let fixed = match mode {
                HullMode::Monotone => desc.is_monotone(),
                HullMode::Invariant => desc.is_cash_invariant(),
                HullMode::Combined => false,
            };
            if fixed {
                if let ExtReal::Finite(f) = fx {
                    suite.measure("hull_fixed_point", relative(sol.primal_value.to_f64(), f), tol_gap);
                }
            }
            if desc == RiskDescriptor::Exponential && mode == HullMode::Invariant {
                let ent = oce::entropic(space, x)?.value.to_f64();
                suite.measure("invariant_exponential_is_entropic", (sol.primal_value.to_f64() - ent).abs(), 1e-8);
            }
        }
    }
    let restricted = RiskDescriptor::inf_deviation(f64::INFINITY)?;
    let mono = crate::hulls::monotone_hull_primal(space, &restricted, x)?;
    suite.measure("restricted_deviation_monotone_hull_zero", mono.to_f64().abs(), tol_axiom);
    let comb = crate::hulls::combined_hull_primal(space, &restricted, &one, x)?;
    suite.flag("constant_numeraire_combined_hull_divergent", comb == ExtReal::NegInf);
    Ok(())
}

fn solver_checks(suite: &mut Suite, rng: &mut ChaCha8Rng) -> Result<(), CliError> {
    for _ in 0..20 {
        let n = rng.gen_range(2..=6);
        let w = random_weights(rng, n);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..2.0)).collect();
        let mut boxed = FeasibleSet::new(&w);
        boxed.bounds = Some((vec![-3.0; n], vec![0.0; n]));
        boxed.affine = Some((a, -1.0));
        let mut ball = FeasibleSet::new(&w);
        ball.ball = Some(QBall {
            q: [1.0, 1.5, 2.0, f64::INFINITY][rng.gen_range(0..4)],
            radius: rng.gen_range(0.5..2.0),
        });
        for set in [boxed, ball] {
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let pu = set.project(&u, 2000, 1e-13)?.point;
            let pv = set.project(&v, 2000, 1e-13)?.point;
            let ppu = set.project(&pu, 2000, 1e-13)?.point;
            let idem = pu.iter().zip(&ppu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            suite.measure("projection_idempotent", idem, 1e-10);
            let dist = |p: &[f64], q: &[f64]| -> f64 {
                w.iter().zip(p.iter().zip(q)).map(|(m, (a, b))| m * (a - b).powi(2)).sum::<f64>().sqrt()
            };
            suite.measure("projection_nonexpansive", (dist(&pu, &pv) - dist(&u, &v)).max(0.0), 1e-10);
        }
    }
    Ok(())
}
