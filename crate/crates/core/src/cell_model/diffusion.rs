//! Vertex-centred finite-volume discretisation of spherical Fick diffusion.
//!
//! Node `k` sits at `r_k = k * R / N` and owns the shell between the
//! neighbouring mid-points, so the centre and the surface are both nodes and
//! the surface concentration is read directly. Fluxes cross shared faces with
//! equal and opposite sign, which makes the discrete lithium inventory change
//! exactly by the imposed surface flux.

use serde::{Deserialize, Serialize};

use crate::{Electrode, Error, Result};

/// Geometry of one particle's radial grid. All volumes and areas carry the
/// common `4 pi` factor divided out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub intervals: usize,
    pub radius: f64,
    pub spacing: f64,
    /// Shell volume of each node, `(r_{k+1/2}^3 - r_{k-1/2}^3) / 3`.
    pub volumes: Vec<f64>,
    /// Area `r_{k+1/2}^2` of the face between node `k` and `k+1`.
    pub faces: Vec<f64>,
    /// Weights `w_k` with `sum w_k c_k = (1/R^3) * integral c r^2 dr`, exact
    /// for profiles that are piecewise quadratic on the stencils used.
    pub moment_weights: Vec<f64>,
}

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

impl RadialGrid {
    pub fn new(radius: f64, intervals: usize) -> Result<Self> {
        if intervals < 2 {
            return Err(Error::InvalidParameter {
                name: "radial_intervals".into(),
                reason: "need at least 2 intervals".into(),
            });
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter {
                name: "particle_radius".into(),
                reason: format!("must be positive, got {radius}"),
            });
        }
        let n = intervals;
        let dr = radius / n as f64;
        let mid = |k: f64| (k * dr).clamp(0.0, radius);
        let volumes = (0..=n)
            .map(|k| {
                let lo = mid(k as f64 - 0.5);
                let hi = mid(k as f64 + 0.5);
                (hi.powi(3) - lo.powi(3)) / 3.0
            })
            .collect();
        let faces = (0..n).map(|k| mid(k as f64 + 0.5).powi(2)).collect();
        let mut grid = Self {
            intervals: n,
            radius,
            spacing: dr,
            volumes,
            faces,
            moment_weights: Vec::new(),
        };
        let partial = grid.partial_moment_weights();
        grid.moment_weights = partial[n].iter().map(|w| w / radius.powi(3)).collect();
        Ok(grid)
    }

    pub fn nodes(&self) -> usize {
        self.intervals + 1
    }

    pub fn node_radius(&self, k: usize) -> f64 {
        k as f64 * self.spacing
    }

    /// Total particle volume `R^3 / 3` (over `4 pi`).
    pub fn total_volume(&self) -> f64 {
        self.radius.powi(3) / 3.0
    }

    /// Volume average of a nodal profile under the finite-volume shells.
    pub fn shell_average(&self, c: &[f64]) -> f64 {
        let s: f64 = c.iter().zip(&self.volumes).map(|(c, v)| c * v).sum();
        s / self.total_volume()
    }

    /// Quadratic stencil used on interval `[r_k, r_{k+1}]`.
    fn stencil(&self, k: usize) -> [usize; 3] {
        if k + 2 <= self.intervals {
            [k, k + 1, k + 2]
        } else {
            [k - 1, k, k + 1]
        }
    }

    /// `W[j][i]` such that `integral_0^{r_j} c(z) z^2 dz = sum_i W[j][i] c_i`
    /// when `c` is interpolated quadratically on each interval.
    pub fn partial_moment_weights(&self) -> Vec<Vec<f64>> {
        let n = self.intervals;
        let mut out = vec![vec![0.0; n + 1]; n + 1];
        for k in 0..n {
            let st = self.stencil(k);
            let r: [f64; 3] = st.map(|i| self.node_radius(i));
            let (a, b) = (self.node_radius(k), self.node_radius(k + 1));
            let mut contrib = [0.0; 3];
            for (xi, wq) in GAUSS3 {
                let z = 0.5 * (a + b) + 0.5 * (b - a) * xi;
                let wz = wq * 0.5 * (b - a) * z * z;
                for m in 0..3 {
                    let mut l = 1.0;
                    for q in 0..3 {
                        if q != m {
                            l *= (z - r[q]) / (r[m] - r[q]);
                        }
                    }
                    contrib[m] += wz * l;
                }
            }
            let prev = out[k].clone();
            out[k + 1] = prev;
            for m in 0..3 {
                out[k + 1][st[m]] += contrib[m];
            }
        }
        out
    }
}

/// LU factors of the implicit diffusion matrix for one `D * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionOperator {
    pub key: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    inv_pivot: Vec<f64>,
    /// Response of the new profile to a unit outward surface flux.
    pub gain: Vec<f64>,
}

impl DiffusionOperator {
    /// Builds the implicit-Euler operator for diffusivity `d` and step `dt`:
    /// `V_k c'_k - dt D sum_faces a (c'_nb - c'_k)/dr = V_k c_k - dt R^2 j [k=N]`.
    pub fn new(grid: &RadialGrid, d: f64, dt: f64) -> Self {
        let n = grid.nodes();
        let lam = d * dt / grid.spacing;
        let mut diag = grid.volumes.clone();
        let mut sub = vec![0.0; n];
        let mut sup = vec![0.0; n];
        for (k, &a) in grid.faces.iter().enumerate() {
            let c = lam * a;
            diag[k] += c;
            diag[k + 1] += c;
            sup[k] = -c;
            sub[k + 1] = -c;
        }
        // Thomas factorisation
        let mut inv_pivot = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut lower = vec![0.0; n];
        let mut piv = diag[0];
        inv_pivot[0] = 1.0 / piv;
        for k in 1..n {
            upper[k - 1] = sup[k - 1] * inv_pivot[k - 1];
            lower[k] = sub[k];
            piv = diag[k] - sub[k] * upper[k - 1];
            inv_pivot[k] = 1.0 / piv;
        }
        let mut op = Self {
            key: d * dt,
            lower,
            upper,
            inv_pivot,
            gain: Vec::new(),
        };
        let mut rhs = vec![0.0; n];
        rhs[n - 1] = -dt * grid.radius * grid.radius;
        op.solve_in_place(&mut rhs);
        op.gain = rhs;
        op
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        rhs[0] *= self.inv_pivot[0];
        for k in 1..n {
            rhs[k] = (rhs[k] - self.lower[k] * rhs[k - 1]) * self.inv_pivot[k];
        }
        for k in (0..n - 1).rev() {
            rhs[k] -= self.upper[k] * rhs[k + 1];
        }
    }

    /// Zero-flux part of the implicit step: solves `A c' = V c`.
    pub fn base_profile(&self, grid: &RadialGrid, c: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(c.iter().zip(&grid.volumes).map(|(c, v)| c * v));
        self.solve_in_place(out);
    }
}

/// Advances a profile by one implicit step with outward surface flux
/// `flux` (mol/(m^2 s)), checking the result stays within `[0, c_max]`.
pub fn implicit_step(
    grid: &RadialGrid,
    c: &[f64],
    diffusivity: f64,
    flux: f64,
    dt: f64,
    c_max: f64,
    electrode: Electrode,
) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::Domain { what: "timestep", value: dt });
    }
    if !flux.is_finite() {
        return Err(Error::Domain { what: "surface flux", value: flux });
    }
    let op = DiffusionOperator::new(grid, diffusivity, dt);
    let mut out = Vec::with_capacity(c.len());
    op.base_profile(grid, c, &mut out);
    for (o, g) in out.iter_mut().zip(&op.gain) {
        *o += flux * g;
    }
    check_bounds(&out, c_max, electrode)?;
    Ok(out)
}

pub(crate) fn check_bounds(c: &[f64], c_max: f64, electrode: Electrode) -> Result<()> {
    if c.iter().all(|&v| v >= 0.0 && v <= c_max) {
        return Ok(());
    }
    // report the worst offender
    let excess = |v: f64| if v.is_nan() { f64::INFINITY } else { (-v).max(v - c_max) };
    let node = (0..c.len())
        .max_by(|&a, &b| excess(c[a]).total_cmp(&excess(c[b])))
        .expect("non-empty profile");
    Err(Error::Saturation {
        electrode,
        node,
        value: c[node],
    })
}
