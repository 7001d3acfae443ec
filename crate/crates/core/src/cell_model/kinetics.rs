use crate::{Error, Result, ELECTRONS, FARADAY, GAS_CONSTANT};

/// Arrhenius temperature scaling of a reference value.
pub fn arrhenius(x_ref: f64, activation: f64, t: f64, t_ref: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain { what: "temperature", value: t });
    }
    if !(t_ref > 0.0) {
        return Err(Error::Domain { what: "reference temperature", value: t_ref });
    }
    Ok(x_ref * (-(activation / GAS_CONSTANT) * (1.0 / t - 1.0 / t_ref)).exp())
}

/// Exchange current density `nF k c_s^a c_el^(1-a) (c_max - c_s)^(1-a)`.
#[inline]
pub fn exchange_current_density(k: f64, c_surf: f64, c_max: f64, c_el: f64, alpha: f64) -> f64 {
    let free = c_max - c_surf;
    let prod = if alpha == 0.5 {
        (c_surf * c_el * free).sqrt()
    } else {
        c_surf.powf(alpha) * (c_el * free).powf(1.0 - alpha)
    };
    ELECTRONS * FARADAY * k * prod
}

/// Current density produced by overpotential `eta`:
/// `i0 (exp(-a f eta) - exp((1-a) f eta))`, with the sign arrangement
/// used throughout this crate (a positive overpotential drives negative
/// current density).
#[inline]
pub fn butler_volmer(eta: f64, i0: f64, alpha: f64, t: f64) -> f64 {
    let f = ELECTRONS * FARADAY / (GAS_CONSTANT * t);
    i0 * ((-alpha * f * eta).exp() - ((1.0 - alpha) * f * eta).exp())
}

/// Overpotential that carries current density `i_density` through the
/// surface reaction.
///
/// Symmetric kinetics (`alpha = 0.5`) use the closed-form inverse
/// hyperbolic sine; other transfer coefficients use a bracketed
/// Newton/bisection search.
pub fn overpotential(
    i_density: f64,
    c_surf: f64,
    c_max: f64,
    c_el: f64,
    k: f64,
    t: f64,
    alpha: f64,
) -> Result<f64> {
    if !(c_surf > 0.0 && c_surf < c_max) {
        return Err(Error::Domain {
            what: "surface concentration",
            value: c_surf,
        });
    }
    if !(t > 0.0) {
        return Err(Error::Domain { what: "temperature", value: t });
    }
    if i_density == 0.0 {
        return Ok(0.0);
    }
    let i0 = exchange_current_density(k, c_surf, c_max, c_el, alpha);
    let f = ELECTRONS * FARADAY / (GAS_CONSTANT * t);
    if alpha == 0.5 {
        return Ok(-(2.0 / f) * (i_density / (2.0 * i0)).asinh());
    }
    solve_generic(i_density, i0, alpha, f)
}

fn solve_generic(i: f64, i0: f64, alpha: f64, f: f64) -> Result<f64> {
    let g = |eta: f64| i0 * ((-alpha * f * eta).exp() - ((1.0 - alpha) * f * eta).exp()) - i;
    let dg = |eta: f64| {
        -i0 * (alpha * f * (-alpha * f * eta).exp() + (1.0 - alpha) * f * ((1.0 - alpha) * f * eta).exp())
    };
    // g is strictly decreasing; bracket the root by doubling.
    let mut lo = -1e-3;
    let mut hi = 1e-3;
    while g(lo) < 0.0 {
        lo *= 2.0;
        if lo < -50.0 {
            return Err(Error::Domain { what: "current density", value: i });
        }
    }
    while g(hi) > 0.0 {
        hi *= 2.0;
        if hi > 50.0 {
            return Err(Error::Domain { what: "current density", value: i });
        }
    }
    let tol = 1e-10 * i.abs() + 1e-12;
    let mut eta = 0.5 * (lo + hi);
    for _ in 0..200 {
        let r = g(eta);
        if r.abs() < tol {
            return Ok(eta);
        }
        if r > 0.0 {
            lo = eta;
        } else {
            hi = eta;
        }
        let newton = eta - r / dg(eta);
        eta = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrhenius_identities() {
        assert_eq!(arrhenius(5.0, 1e4, 298.15, 298.15).unwrap(), 5.0);
        assert_eq!(arrhenius(5.0, 0.0, 350.0, 298.15).unwrap(), 5.0);
        assert!(arrhenius(1.0, 5e4, 308.15, 298.15).unwrap() > 1.0);
        assert!(arrhenius(1.0, 5e4, 0.0, 298.15).is_err());
        assert!(arrhenius(1.0, 5e4, 300.0, -1.0).is_err());
    }

    #[test]
    fn overpotential_is_odd_and_zero_at_equilibrium() {
        let args = (1.5e4, 3.3e4, 1000.0, 6.7e-12, 298.15, 0.5);
        let eta = |i| overpotential(i, args.0, args.1, args.2, args.3, args.4, args.5).unwrap();
        assert_eq!(eta(0.0), 0.0);
        assert_eq!(eta(3.0), -eta(-3.0));
        assert!(eta(3.0) < 0.0);
    }

    #[test]
    fn generic_transfer_coefficient_meets_residual_tolerance() {
        let (c, cm, ce, k, t, a) = (1.5e4, 3.3e4, 1000.0, 6.7e-12, 298.15, 0.35);
        let i0 = exchange_current_density(k, c, cm, ce, a);
        for &i in &[-20.0, -0.3, 1e-4, 0.7, 12.0] {
            let eta = overpotential(i, c, cm, ce, k, t, a).unwrap();
            let r = butler_volmer(eta, i0, a, t) - i;
            assert!(r.abs() < 1e-10 * f64::abs(i) + 1e-12, "i={i} r={r}");
        }
    }

    #[test]
    fn saturated_surface_is_rejected() {
        assert!(overpotential(1.0, 0.0, 3e4, 1e3, 1e-11, 298.0, 0.5).is_err());
        assert!(overpotential(1.0, 3e4, 3e4, 1e3, 1e-11, 298.0, 0.5).is_err());
    }
}
