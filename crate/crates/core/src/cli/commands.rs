use std::time::Instant;

use super::{load_scenario, CliError, HullArgs, NumeraireSource, OceArgs, Report, UtilityChoice};
use crate::ext::ExtReal;
use crate::hulls::{gap_passes, hull_dual, HullMode, HullSpec, RiskDescriptor, WEAK_DUALITY_TOL};
use crate::oce::{self, LAMBDA_TOL, MEAN_TOL};
use crate::prob_space::{ProbSpace, RandomVariable};
use crate::solver::AscentConfig;

/// `|rho*(X*) + rho(X) - <X*, X>|`, `+inf` when either value is infinite.
pub(crate) fn fenchel_residual(rho: ExtReal, conj: ExtReal, pairing: f64) -> f64 {
    match (rho, conj) {
        (ExtReal::Finite(r), ExtReal::Finite(c)) => (c + r - pairing).abs(),
        _ => f64::INFINITY,
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

fn extreal_value(report: &mut Report, key: &str, v: ExtReal, tol: f64) {
    match v {
        ExtReal::Finite(x) => report.num(key, x, tol),
        other => report.text(key, other.to_string()),
    }
}

pub fn cmd_oce(args: &OceArgs) -> Result<Report, CliError> {
    let scenario = load_scenario(&args.common)?;
    let space = &scenario.space;
    let x = scenario.column(args.common.column.as_deref())?;
    let v = args.utility()?;
    let tol_fenchel = args.common.tol_fenchel;
    let tol_identity = args.common.tol_identity;
    let mut report = Report::new("oce");
    report.text("utility", format!("{v:?}"));
    report.num("atoms", space.len() as f64, 0.0);

    let t0 = Instant::now();
    let res = match args.utility {
        UtilityChoice::Cvar => oce::cvar(space, x, args.beta)?,
        _ => oce::oce_value(space, &v, x)?,
    };
    report.timing("value", t0.elapsed());
    extreal_value(&mut report, "value", res.value, tol_fenchel);
    report.num("lambda_bar", res.lambda_bar, LAMBDA_TOL);
    report.text("minimizer_interval", res.minimizer_interval.to_string());
    report.text("attained", res.attained.to_string());
    report.check_with(
        "attainment_condition",
        v.check_attainment_condition() && res.attained,
        0.0,
        0.0,
    );
    let rho = res.value;
    let mean = space.expectation(x)?;
    report.check("lower_bound_minus_mean", (-mean - rho.to_f64()).max(0.0), args.common.tol_axiom);

    match args.utility {
        UtilityChoice::Cvar => {
            let var = space.var_beta(x, args.beta)?;
            report.num("var_beta", var, 0.0);
            let at_var = oce::objective(space, &v, x, var).to_f64();
            report.check("cvar_attained_at_var", (at_var - rho.to_f64()).abs(), tol_identity);
        }
        UtilityChoice::Exponential | UtilityChoice::Entropic => {
            let closed = oce::entropic(space, x)?.value.to_f64();
            report.num("log_mean_exp", closed, tol_identity);
            report.check("entropic_closed_form", (closed - rho.to_f64()).abs(), tol_identity);
        }
        UtilityChoice::WorstCase => {
            report.check("worst_case_is_minus_min", (rho.to_f64() + x.min()).abs(), tol_identity);
        }
        UtilityChoice::TwoSlope | UtilityChoice::Pwl => {}
    }

    let t1 = Instant::now();
    let bx = oce::oce_subdiff_at(space, &v, x, res.lambda_bar)?;
    for (i, iv) in bx.intervals().iter().enumerate() {
        report.text(format!("subdiff.atom{i}"), iv.to_string());
    }
    report.text("subdiff.nonempty", bx.is_nonempty(space).to_string());
    report.check_with("subdiff_nonempty", bx.is_nonempty(space), 0.0, 0.0);
    if let Some(member) = bx.feasible_point(space) {
        report.text("subdiff.member", join(member.values()));
        let conj = oce::oce_conjugate(space, &v, &member)?;
        let r = fenchel_residual(rho, conj, space.pairing(&member, x)?);
        report.check("member_fenchel_equality", r, tol_fenchel);
    }
    report.timing("subdiff", t1.elapsed());

    if let Some(xs) = &args.xstar {
        let xstar = RandomVariable::new(xs.clone())?;
        space.check(&xstar)?;
        let conj = oce::oce_conjugate(space, &v, &xstar)?;
        extreal_value(&mut report, "conjugate", conj, MEAN_TOL);
        let r = fenchel_residual(rho, conj, space.pairing(&xstar, x)?);
        let member = bx.contains(space, &xstar)?;
        report.text("xstar.in_subdiff", member.to_string());
        report.num("xstar.fenchel_residual", r, tol_fenchel);
        report.check_with("membership_matches_fenchel", member == (r <= tol_fenchel), r, tol_fenchel);
    }
    Ok(report)
}

fn numeraire(space: &ProbSpace, source: &NumeraireSource, scenario: &super::Scenario) -> Result<HullSpec, CliError> {
    Ok(match source {
        NumeraireSource::Constant(c) => HullSpec::constant(space, *c)?,
        NumeraireSource::Column(name) => HullSpec::new(space, scenario.column(Some(name))?.clone())?,
    })
}

fn is_unit(spec: &HullSpec) -> bool {
    spec.numeraire().values().iter().all(|v| *v == 1.0)
}

pub fn cmd_hull(args: &HullArgs) -> Result<Report, CliError> {
    let scenario = load_scenario(&args.common)?;
    let space = &scenario.space;
    let x = scenario.column(args.common.column.as_deref())?;
    let desc = args.descriptor()?;
    let spec = numeraire(space, &args.numeraire, &scenario)?;
    let mode: HullMode = args.mode.into();
    let tol_gap = args.common.tol_gap;
    let cfg = AscentConfig {
        seed: args.common.seed,
        restarts: args.restarts.max(1),
        ..AscentConfig::default()
    };

    let mut report = Report::new("hull");
    report.text("descriptor", desc.to_string());
    report.text("mode", mode.as_str());
    report.text("numeraire", join(spec.numeraire().values()));
    let f = desc.eval(space, x)?;
    extreal_value(&mut report, "risk", f, 0.0);

    let t0 = Instant::now();
    let sol = hull_dual(space, &desc, &spec, x, mode, &cfg)?;
    report.timing("hull", t0.elapsed());

    extreal_value(&mut report, "primal", sol.primal_value, tol_gap);
    extreal_value(&mut report, "dual", sol.dual_value, tol_gap);
    if sol.gap.is_finite() {
        report.num("gap", sol.gap, tol_gap);
    } else {
        report.text("gap", "+inf");
    }
    if sol.primal_lower_bound.is_finite() {
        report.num("primal_lower_bound", sol.primal_lower_bound, tol_gap);
    }
    report.text(
        "verdict",
        match sol.primal_value {
            ExtReal::NegInf => "-inf (divergent)",
            ExtReal::PosInf => "+inf (empty domain)",
            ExtReal::Finite(_) => "finite",
        },
    );
    report.text("slater", sol.slater_ok.to_string());
    report.text("dual_feasible", sol.dual_feasible.to_string());
    report.text("dual_converged", sol.converged.to_string());
    report.num("dual_residual", sol.residual, cfg.projection_tol);
    if sol.dual_feasible {
        report.text("xstar", join(sol.xstar.values()));
    }

    let weak = match (sol.primal_value, sol.dual_value) {
        (ExtReal::Finite(p), ExtReal::Finite(d)) => (d - p).max(0.0) / p.abs().max(1.0),
        (ExtReal::PosInf, _) | (_, ExtReal::NegInf) => 0.0,
        _ => f64::INFINITY,
    };
    report.check("weak_duality", weak, WEAK_DUALITY_TOL);
    if sol.slater_ok {
        let rel = match sol.primal_value {
            ExtReal::Finite(p) => sol.gap.abs() / p.abs().max(1.0),
            _ => sol.gap,
        };
        let ok = report.check_with("duality_gap", gap_passes(&sol, tol_gap), rel, tol_gap);
        if !ok && !sol.converged {
            report.non_convergence = true;
            report.note(format!("dual ascent did not converge; best dual bound {}", sol.dual_value));
        }
    } else {
        report.note("no Slater point: strong duality is not guaranteed and the gap is not checked");
    }

    if let ExtReal::Finite(fx) = f {
        let own = match mode {
            HullMode::Monotone => desc.is_monotone(),
            HullMode::Invariant => desc.is_cash_invariant() && is_unit(&spec),
            HullMode::Combined => desc.is_monotone() && desc.is_cash_invariant() && is_unit(&spec),
        };
        if own {
            let d = (sol.primal_value.to_f64() - fx).abs() / fx.abs().max(1.0);
            report.check("hull_fixes_function", d, tol_gap);
        }
    }
    if desc == RiskDescriptor::Exponential && mode == HullMode::Invariant && is_unit(&spec) {
        let ent = oce::entropic(space, x)?.value.to_f64();
        report.num("entropic", ent, 1e-8);
        report.check("invariant_exponential_is_entropic", (sol.primal_value.to_f64() - ent).abs(), 1e-8);
    }
    Ok(report)
}
