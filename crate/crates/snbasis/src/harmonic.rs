//! The harmonically confined, harmonically interacting N-body model.
//!
//! Everything here is closed form: the large-D structural parameters, the
//! auxiliary constants A..J, and all first-order and quadratic
//! binary-invariant coefficients of the Jacobian-weighted wave function.
//! The `oracle` module recovers the same coefficients numerically without
//! using any of these formulas.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graphs::{Edge, Graph, Signature, SlotKind};
use crate::invariants::{pair_position, InvariantTensor};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("system is unbound: 1 + N*lambda_p^2 = {discriminant} <= 0 (dissociation threshold)")]
    Dissociated { discriminant: f64 },
    #[error("invalid model input: {0}")]
    InvalidInput(String),
}

/// Derived constants of the model at the large-D symmetric point.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub n_particles: u32,
    pub omega_t: f64,
    pub omega_p2: f64,
    /// omega_p^2 / omega_t^2; may be negative (repulsive pair term).
    pub lambda_p2: f64,
    /// sqrt(1 + N lambda_p^2), the internal-to-trap frequency ratio.
    pub lambda: f64,
    /// Symmetric-point angle cosine.
    pub gamma_inf: f64,
    /// Symmetric-point dimensionless radius (squared).
    pub rbar_inf2: f64,
    pub rbar_inf: f64,
    pub lambda_eff: f64,
}

/// Populates the derived fields from the physical inputs.
pub fn derive_params(n_particles: u32, omega_t: f64, omega_p2: f64) -> Result<ModelParams, ModelError> {
    if n_particles < 2 {
        return Err(ModelError::InvalidInput(format!(
            "need at least two particles, got {n_particles}"
        )));
    }
    if !(omega_t > 0.0) {
        return Err(ModelError::InvalidInput(format!(
            "trap frequency must be positive, got {omega_t}"
        )));
    }
    let n = n_particles as f64;
    let lambda_p2 = omega_p2 / (omega_t * omega_t);
    let discriminant = 1.0 + n * lambda_p2;
    if discriminant <= 0.0 {
        return Err(ModelError::Dissociated { discriminant });
    }
    let lambda = discriminant.sqrt();
    let gamma_inf = (lambda - 1.0) / (n + lambda - 1.0);
    let rbar_inf2 = (n + lambda - 1.0) / (2.0 * lambda * n);
    let lambda_eff = n * lambda / (n + lambda - 1.0);
    Ok(ModelParams {
        n_particles,
        omega_t,
        omega_p2,
        lambda_p2,
        lambda,
        gamma_inf,
        rbar_inf2,
        rbar_inf: rbar_inf2.sqrt(),
        lambda_eff,
    })
}

impl ModelParams {
    /// Convenience constructor from the frequency ratio lambda (omega_t = 1).
    pub fn from_lambda(n_particles: u32, lambda: f64) -> Result<ModelParams, ModelError> {
        if !(lambda > 0.0) {
            return Err(ModelError::InvalidInput(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        let omega_p2 = (lambda * lambda - 1.0) / n_particles as f64;
        derive_params(n_particles, 1.0, omega_p2)
    }
}

/// The closed-form constants of the coefficient formulas.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub h: f64,
    pub i: f64,
    pub j: f64,
}

pub fn aux_constants(p: &ModelParams) -> AuxConstants {
    let n = p.n_particles as f64;
    let g = p.gamma_inf;
    let omg = 1.0 - g; // 1 - gamma_inf
    let opg = 1.0 + (n - 1.0) * g; // 1 + (N-1) gamma_inf
    AuxConstants {
        a: 1.0 / (6.0 * omg * opg),
        b: -8.0 * g.powi(3) / (omg * omg * opg * opg),
        c: -6.0 * g / (omg * omg * opg),
        d: 1.0 + (n - 3.0) * g,
        e: -g,
        f: (1.0 + (n - 4.0) * g) / (omg * omg),
        g: g / (omg * omg),
        h: 1.0 / (2.0 * omg * omg * opg),
        i: g * g / opg,
        j: (1.0 + (n - 3.0) * g) / 2.0,
    }
}

/// Named graph classes of the first-order wave function, with constructors
/// for their canonical graphs. Classes needing more vertices than particles
/// are skipped by the table builders.
mod class {
    use super::*;

    fn g(links: &[(u8, u8)], loops: &[u8]) -> Graph {
        let mut edges: Vec<Edge> = links.iter().map(|&(v, w)| Edge::Link(v, w)).collect();
        edges.extend(loops.iter().map(|&v| Edge::Loop(v)));
        Graph::new(edges).expect("valid class edges").canonicalize().0
    }

    pub fn r_loop() -> Graph {
        g(&[], &[1])
    }
    pub fn gamma_link() -> Graph {
        g(&[(1, 2)], &[])
    }
    pub fn rra() -> Graph {
        g(&[], &[1, 1])
    }
    pub fn rrb() -> Graph {
        g(&[], &[1, 2])
    }
    pub fn gra() -> Graph {
        g(&[(1, 2)], &[1])
    }
    pub fn grb() -> Graph {
        g(&[(1, 2)], &[3])
    }
    pub fn gga() -> Graph {
        g(&[(1, 2), (1, 2)], &[])
    }
    pub fn ggb() -> Graph {
        g(&[(1, 2), (1, 3)], &[])
    }
    pub fn ggc() -> Graph {
        g(&[(1, 2), (3, 4)], &[])
    }
    pub fn rrra() -> Graph {
        g(&[], &[1, 1, 1])
    }
    pub fn rrrb() -> Graph {
        g(&[], &[1, 1, 2])
    }
    pub fn rrrc() -> Graph {
        g(&[], &[1, 2, 3])
    }
    pub fn grra() -> Graph {
        g(&[(1, 2)], &[1, 1])
    }
    pub fn grrb() -> Graph {
        g(&[(1, 2)], &[1, 2])
    }
    pub fn grrc() -> Graph {
        g(&[(1, 2)], &[1, 3])
    }
    pub fn grrd() -> Graph {
        g(&[(1, 2)], &[3, 3])
    }
    pub fn grre() -> Graph {
        g(&[(1, 2)], &[3, 4])
    }
    pub fn ggr_all() -> Vec<Graph> {
        vec![
            g(&[(1, 2), (1, 2)], &[1]),
            g(&[(1, 2), (1, 2)], &[3]),
            g(&[(1, 2), (1, 3)], &[1]),
            g(&[(1, 2), (1, 3)], &[2]),
            g(&[(1, 2), (1, 3)], &[4]),
            g(&[(1, 2), (3, 4)], &[1]),
            g(&[(1, 2), (3, 4)], &[5]),
        ]
    }
    /// Triple link between two vertices.
    pub fn ggg_triple() -> Graph {
        g(&[(1, 2), (1, 2), (1, 2)], &[])
    }
    /// Doubled link plus a link sharing one vertex.
    pub fn ggg_double_shared() -> Graph {
        g(&[(1, 2), (1, 2), (1, 3)], &[])
    }
    /// Doubled link plus a disjoint link.
    pub fn ggg_double_disjoint() -> Graph {
        g(&[(1, 2), (1, 2), (3, 4)], &[])
    }
    /// Three links from one vertex.
    pub fn ggg_star() -> Graph {
        g(&[(1, 2), (1, 3), (1, 4)], &[])
    }
    /// Path of three links.
    pub fn ggg_path() -> Graph {
        g(&[(1, 2), (2, 3), (3, 4)], &[])
    }
    /// Triangle.
    pub fn ggg_triangle() -> Graph {
        g(&[(1, 2), (1, 3), (2, 3)], &[])
    }
    /// Two links sharing a vertex plus a disjoint link.
    pub fn ggg_shared_disjoint() -> Graph {
        g(&[(1, 2), (1, 3), (4, 5)], &[])
    }
    /// Three pairwise disjoint links.
    pub fn ggg_disjoint() -> Graph {
        g(&[(1, 2), (3, 4), (5, 6)], &[])
    }
}

pub use class::*;

/// First-order wave-function coefficients, one scalar per canonical graph.
/// Classes that are identically zero in the analytic solution are present
/// with coefficient exactly 0. Classes infeasible at this N are omitted.
#[derive(Clone, Debug)]
pub struct WaveFunctionCoefficients {
    pub linear: BTreeMap<Graph, f64>,
    pub quadratic: BTreeMap<Graph, f64>,
    pub cubic: BTreeMap<Graph, f64>,
}

impl WaveFunctionCoefficients {
    pub fn rank_table(&self, rank: usize) -> &BTreeMap<Graph, f64> {
        match rank {
            1 => &self.linear,
            2 => &self.quadratic,
            3 => &self.cubic,
            _ => panic!("rank must be 1..=3"),
        }
    }
}

/// All first-order and quadratic coefficients of the exact solution.
pub fn first_order_coefficients(p: &ModelParams) -> WaveFunctionCoefficients {
    let n = p.n_particles as f64;
    let k = aux_constants(p);
    let (lam, gamma, rbar) = (p.lambda, p.gamma_inf, p.rbar_inf);
    let max_v = p.n_particles.min(6) as u8;
    let insert = |map: &mut BTreeMap<Graph, f64>, g: Graph, v: f64| {
        if g.vertex_count() <= max_v {
            map.insert(g, v);
        }
    };

    let mut linear = BTreeMap::new();
    insert(&mut linear, r_loop(), -1.0 / rbar);
    insert(&mut linear, gamma_link(), k.a * 6.0 * (n + 1.0) * gamma);

    let mut quadratic = BTreeMap::new();
    insert(
        &mut quadratic,
        rra(),
        p.lambda_eff + (lam - 1.0) / (2.0 * n) * (p.lambda_eff - 1.0),
    );
    insert(&mut quadratic, rrb(), -(lam - 1.0) / (2.0 * n) * gamma);
    insert(&mut quadratic, gra(), -(lam - 1.0) / n * rbar);
    insert(&mut quadratic, grb(), 0.0);
    insert(&mut quadratic, gga(), k.h * (k.i + k.j));
    insert(&mut quadratic, ggb(), k.h * (k.i - gamma / 2.0));
    insert(&mut quadratic, ggc(), k.h * k.i);

    let mut cubic = BTreeMap::new();
    insert(&mut cubic, rrra(), 1.0 / (3.0 * rbar.powi(3)));
    insert(&mut cubic, rrrb(), 0.0);
    insert(&mut cubic, rrrc(), 0.0);
    insert(&mut cubic, grra(), 0.0);
    insert(&mut cubic, grrb(), (lam - 1.0) / n);
    insert(&mut cubic, grrc(), 0.0);
    insert(&mut cubic, grrd(), 0.0);
    insert(&mut cubic, grre(), 0.0);
    for g in ggr_all() {
        insert(&mut cubic, g, 0.0);
    }
    insert(&mut cubic, ggg_triple(), k.a * (k.b + k.c * k.d));
    insert(&mut cubic, ggg_triangle(), k.a * (k.b + k.c * k.e + k.f));
    insert(
        &mut cubic,
        ggg_double_shared(),
        k.a * (k.b + k.c * (k.d / 3.0 + 2.0 * k.e / 3.0)),
    );
    insert(&mut cubic, ggg_star(), k.a * (k.b + k.c * k.e));
    insert(
        &mut cubic,
        ggg_path(),
        k.a * (k.b + 2.0 * k.c * k.e / 3.0 - k.g),
    );
    insert(
        &mut cubic,
        ggg_double_disjoint(),
        k.a * (k.b + k.c * k.d / 3.0 + 2.0 * k.g),
    );
    insert(
        &mut cubic,
        ggg_shared_disjoint(),
        k.a * (k.b + k.c * k.e / 3.0),
    );
    insert(&mut cubic, ggg_disjoint(), k.a * k.b);

    WaveFunctionCoefficients {
        linear,
        quadratic,
        cubic,
    }
}

/// The quadratic form of the leading Gaussian, as per-block invariant
/// tensors plus an assembled symmetric matrix over the N(N+1)/2 space.
pub struct OmegaTensor {
    pub rr: InvariantTensor,
    pub gr: InvariantTensor,
    pub gg: InvariantTensor,
    n_particles: u32,
}

impl OmegaTensor {
    /// Symmetric matrix over [r'_1..r'_N, gamma'_(12), gamma'_(13), ...],
    /// row-major, such that the Gaussian exponent is -y^T M y with
    /// independent sums over the combined coordinates.
    pub fn matrix(&self) -> Vec<f64> {
        let n = self.n_particles as usize;
        let m = n * (n - 1) / 2;
        let dim = n + m;
        let mut out = vec![0.0; dim * dim];
        let space_rr = self.rr.space();
        let space_gr = self.gr.space();
        let space_gg = self.gg.space();
        for i in 0..n {
            for j in 0..n {
                out[i * dim + j] = self.rr.value_at(space_rr.position_unchecked(&[i, j]));
            }
        }
        for p in 0..m {
            for kk in 0..n {
                // the per-graph form counts each (gamma, r) pair once; the
                // symmetric matrix carries half on each side
                let v = 0.5 * self.gr.value_at(space_gr.position_unchecked(&[p, kk]));
                out[(n + p) * dim + kk] = v;
                out[kk * dim + (n + p)] = v;
            }
        }
        for p in 0..m {
            for q in 0..m {
                out[(n + p) * dim + (n + q)] =
                    self.gg.value_at(space_gg.position_unchecked(&[p, q]));
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        let n = self.n_particles as usize;
        n + n * (n - 1) / 2
    }
}

/// Assembles the quadratic coefficient table into per-block tensors.
pub fn omega_tensor(p: &ModelParams) -> OmegaTensor {
    let coeffs = first_order_coefficients(p);
    let quad = &coeffs.quadratic;
    let n = p.n_particles;
    let nn = n as usize;
    let val = |g: &Graph| quad.get(g).copied().unwrap_or(0.0);

    let sig_rr: Signature = Signature::new(vec![SlotKind::Radial, SlotKind::Radial]);
    let sig_gr: Signature = Signature::new(vec![SlotKind::Angular, SlotKind::Radial]);
    let sig_gg: Signature = Signature::new(vec![SlotKind::Angular, SlotKind::Angular]);

    let mut rr = InvariantTensor::zeros(sig_rr, n);
    let (v_rra, v_rrb) = (val(&rra()), val(&rrb()));
    for i in 0..nn {
        for j in 0..nn {
            let v = if i == j { v_rra } else { v_rrb };
            let pos = rr.space().position_unchecked(&[i, j]);
            rr.set_flat(pos, v);
        }
    }

    let pair_list = crate::invariants::pairs(n);
    let mut gr = InvariantTensor::zeros(sig_gr, n);
    let (v_gra, v_grb) = (val(&gra()), val(&grb()));
    for (p_idx, &(i, j)) in pair_list.iter().enumerate() {
        for k in 1..=n {
            let v = if k == i || k == j { v_gra } else { v_grb };
            let pos = gr.space().position_unchecked(&[p_idx, (k - 1) as usize]);
            gr.set_flat(pos, v);
        }
    }

    let mut gg = InvariantTensor::zeros(sig_gg, n);
    let (v_gga, v_ggb, v_ggc) = (val(&gga()), val(&ggb()), val(&ggc()));
    for (p_idx, &(i, j)) in pair_list.iter().enumerate() {
        for &(k, l) in &pair_list {
            let q_idx = pair_position(k, l);
            let shared = [i, j].iter().filter(|&&v| v == k || v == l).count();
            let v = match shared {
                2 => v_gga,
                1 => v_ggb,
                _ => v_ggc,
            };
            let pos = gg.space().position_unchecked(&[p_idx, q_idx]);
            gg.set_flat(pos, v);
        }
    }

    OmegaTensor {
        rr,
        gr,
        gg,
        n_particles: n,
    }
}
