use std::time::Instant;

use ccl_core::error::Result;
use ccl_core::space::SymmetricSpace;
use ccl_core::surface::{Hypersurface, SurfaceSpec};
use ccl_core::verify::{self, ContactRecord, Context, VerificationReport};

use crate::config::{CheckName, ConfigError, SuiteConfig};

/// Radius of the sample ball for the Hessian checks.
pub const HESSIAN_RADIUS: f64 = 2.0;
/// Radius of the sample ball for the Lipschitz audit.
pub const LIPSCHITZ_RADIUS: f64 = 1.0;
pub const DET_AUDIT_DIM: usize = 10;
pub const SQRT_AUDIT_DIM: usize = 12;

/// Runs the configured checks in order. Only configuration errors are
/// returned; a check that cannot be evaluated yields a failing report.
pub fn run_suite(config: &SuiteConfig) -> std::result::Result<Vec<VerificationReport>, ConfigError> {
    config.validate()?;
    let space = config.space_spec()?;
    let checks = config.resolved_checks()?;
    let mut surface: Option<Result<Hypersurface>> = None;
    let mut sweep: Option<Vec<Result<ContactRecord>>> = None;
    let mut out = Vec::with_capacity(checks.len());
    for check in checks {
        let start = Instant::now();
        if check.needs_surface() && surface.is_none() {
            surface = Some(build_surface(config, &space));
        }
        let report = match (check.needs_surface(), surface.as_ref()) {
            (true, Some(Err(e))) => failed(config, &space, check, e.to_string()),
            (true, Some(Ok(m))) => {
                if check.needs_sweep() && sweep.is_none() {
                    sweep = Some(verify::direction_sweep(m, m.center(), config.directions(), config.seed));
                }
                surface_check(check, m, sweep.as_deref().unwrap_or(&[]), config.seed)
            }
            _ => space_check(check, config, &space),
        };
        out.push(report.with_tolerances(&config.overrides_for(check)).timed(start));
    }
    Ok(out)
}

/// Contact records of the configured sweep.
pub fn run_sweep(config: &SuiteConfig) -> std::result::Result<Vec<Result<ContactRecord>>, ConfigError> {
    let space = config.space_spec()?;
    let m = build_surface(config, &space)?;
    Ok(verify::direction_sweep(&m, m.center(), config.directions(), config.seed))
}

fn build_surface(config: &SuiteConfig, space: &SymmetricSpace) -> Result<Hypersurface> {
    Hypersurface::new(space, &space.base_point(), config.surface_spec()?, config.grid_spec(space)?)
}

fn failed(config: &SuiteConfig, space: &SymmetricSpace, check: CheckName, reason: String) -> VerificationReport {
    let ctx = Context {
        space: config.space.clone(),
        surface: Some(config.surface_spec().map(|s| s.to_string()).unwrap_or_default()),
        grid: config.grid_spec(space).ok().map(|g| g.to_string()),
        kappa: space.curvature_lower_bound(),
        diameter: None,
        seed: Some(config.seed),
    };
    VerificationReport::failed(check.as_str(), &ctx, 0.0, reason)
}

fn surface_check(check: CheckName, m: &Hypersurface, sweep: &[Result<ContactRecord>], seed: u64) -> VerificationReport {
    let o = m.center();
    match check {
        CheckName::GaussConsistency => verify::gauss_consistency_check(m, o),
        CheckName::Contact => verify::contact_check(m, sweep, seed),
        CheckName::Jacobian => verify::jacobian_check(m, sweep, seed),
        CheckName::TotalCurvature => verify::total_curvature_check(m, sweep, seed),
        CheckName::Willmore => verify::willmore_check(m),
        _ => unreachable!("{check} does not run on a surface"),
    }
}

fn space_check(check: CheckName, config: &SuiteConfig, space: &SymmetricSpace) -> VerificationReport {
    let n = config.samples_for(check);
    let seed = config.seed;
    let result = match check {
        CheckName::HessianOracle => Ok(verify::hessian_oracle_check(space, n, HESSIAN_RADIUS, seed)),
        CheckName::HessianBounds => Ok(verify::hessian_bounds_check(space, n, HESSIAN_RADIUS, seed)),
        CheckName::Lipschitz => Ok(verify::lipschitz_check(space, n, LIPSCHITZ_RADIUS, seed)),
        CheckName::Isoperimetric => match config.surface_spec() {
            Ok(SurfaceSpec::GeodesicSphere { r }) => {
                config.grid_spec(space).and_then(|g| verify::isoperimetric_check(space, &space.base_point(), r, g))
            }
            Ok(_) => unreachable!("validated"),
            Err(e) => Err(e),
        },
        CheckName::DetAudit => verify::det_comparison_audit(config.audit_dim.unwrap_or(DET_AUDIT_DIM), n, seed),
        CheckName::SqrtAudit => verify::sqrt_perturbation_audit(config.audit_dim.unwrap_or(SQRT_AUDIT_DIM), n, seed),
        _ => unreachable!("{check} runs on a surface"),
    };
    result.unwrap_or_else(|e| failed(config, space, check, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_follow_config_order() {
        let mut c = SuiteConfig::new("euclidean:3");
        c.grid = Some("8x16".into());
        c.directions = Some(8);
        c.samples = Some(10);
        c.checks = vec![CheckName::Willmore, CheckName::DetAudit, CheckName::TotalCurvature, CheckName::Contact];
        let r = run_suite(&c).unwrap();
        let names: Vec<_> = r.iter().map(|r| r.check.as_str()).collect();
        assert_eq!(names, ["willmore", "det-audit", "total-curvature", "contact"]);
        assert!(r.iter().all(|r| r.pass), "{r:#?}");
    }

    #[test]
    fn failures_do_not_abort() {
        let mut c = SuiteConfig::new("euclidean:3");
        c.checks = vec![CheckName::DetAudit, CheckName::Willmore];
        c.samples = Some(5);
        c.grid = Some("8x16".into());
        c.tolerances.insert("det-audit.margin".into(), -1.0);
        let r = run_suite(&c).unwrap();
        assert!(!r[0].pass);
        assert!(r[1].pass);
    }
}
