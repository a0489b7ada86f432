//! Loss terms of the standard, separated and normalized-separated methods and
//! their gradient with respect to the network parameters.
//!
//! All terms read the unknown `u` at matching points `X'` and the problem data
//! (`κ`, `∇κ`, `Q`, `g`, `Φ`, `Ψ`) at original points `X`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    map_back_with_id, BoundaryRecord, Domain, InterfaceRecord, Point, ResidualRecord, SetKind,
    TrainingSet,
};
use crate::net::{BatchCotangents, BatchEvaluator, BatchJets, Jet, NetworkParams, Order, Real};
use crate::problems::{PdeData, ProblemSpec};

/// Records per batched forward/backward pass.
const CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Plain PINN on the original domain.
    Std,
    /// Separated domain with an interface term.
    Ds,
    /// Separated domain with data-normalized terms.
    Nds,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Std, Method::Ds, Method::Nds];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Std => "std",
            Method::Ds => "ds",
            Method::Nds => "nds",
        }
    }

    pub fn set_kind(self) -> SetKind {
        match self {
            Method::Std => SetKind::Standard,
            Method::Ds | Method::Nds => SetKind::Separated,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub w_b: f64,
    pub w_r: f64,
    pub w_gamma: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            w_b: 1.0,
            w_r: 1.0,
            w_gamma: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.w_b, self.w_r, self.w_gamma];
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || w.iter().all(|v| *v == 0.0) {
            return Err(Error::Config(format!(
                "loss weights must be non-negative and not all zero: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Mean squares of the problem data over the training set, fixed for a run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Normalizers {
    pub zeta_b: f64,
    pub zeta_r: f64,
    pub zeta_phi: f64,
    pub zeta_psi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_b: f64,
    pub l_r: f64,
    pub l_gamma: f64,
    pub total: f64,
    pub normalized: bool,
}

/// Something that can be differentiated twice at matching points.
pub trait Field {
    /// Jets at the flat point list `points` (`p*2 + k`).
    fn jets(&self, points: &[f64], order: Order) -> Result<BatchJets>;
}

/// The network as a field.
pub struct NetField<T: Real> {
    eval: BatchEvaluator<T>,
}

impl<T: Real> NetField<T> {
    pub fn new(params: &NetworkParams) -> Self {
        NetField {
            eval: BatchEvaluator::new(params),
        }
    }
}

impl<T: Real> Field for NetField<T> {
    fn jets(&self, points: &[f64], order: Order) -> Result<BatchJets> {
        let mut out = BatchJets {
            order,
            dim: 2,
            values: Vec::new(),
            grads: Vec::new(),
            hess_diag: Vec::new(),
        };
        for chunk in points.chunks(2 * CHUNK) {
            let (j, _) = self.eval.forward(chunk, order);
            out.values.extend(j.values);
            out.grads.extend(j.grads);
            out.hess_diag.extend(j.hess_diag);
        }
        Ok(out)
    }
}

/// Pointwise closed-form field.
pub struct FnField<F>(pub F);

impl<F: Fn(Point) -> Result<Jet>> Field for FnField<F> {
    fn jets(&self, points: &[f64], order: Order) -> Result<BatchJets> {
        let n = points.len() / 2;
        let mut out = BatchJets {
            order,
            dim: 2,
            values: Vec::with_capacity(n),
            grads: Vec::with_capacity(2 * n),
            hess_diag: Vec::with_capacity(2 * n),
        };
        for p in points.chunks_exact(2) {
            let j = (self.0)([p[0], p[1]])?;
            out.values.push(j.value);
            if order >= Order::Gradient {
                out.grads.extend_from_slice(&j.grad);
            }
            if order >= Order::Laplacian {
                out.hess_diag.extend_from_slice(&j.hess_diag);
            }
        }
        Ok(out)
    }
}

/// Exact solution read through the matching map of `domain`: the value at `X'`
/// is the owning subdomain's exact solution at `X`.
pub fn exact_field<'a>(
    problem: &'a ProblemSpec,
    domain: &'a Domain,
) -> FnField<impl Fn(Point) -> Result<Jet> + 'a> {
    FnField(move |xs: Point| {
        let (id, x) = map_back_with_id(xs, domain)?;
        Ok(problem.exact_jet(id, x))
    })
}

pub fn zero_field() -> FnField<impl Fn(Point) -> Result<Jet>> {
    FnField(|_: Point| {
        Ok(Jet {
            value: 0.0,
            grad: vec![0.0; 2],
            hess_diag: vec![0.0; 2],
        })
    })
}

#[derive(Debug, Clone, Copy)]
struct InterfaceData {
    kappa_minus: f64,
    kappa_plus: f64,
    n_minus: Point,
    n_plus: Point,
    phi: f64,
    psi: f64,
}

/// Training set with every parameter-independent quantity precomputed.
pub struct LossContext {
    pub method: Method,
    pub weights: LossWeights,
    pub normalizers: Normalizers,
    b_points: Vec<f64>,
    b_labels: Vec<f64>,
    r_points: Vec<f64>,
    r_data: Vec<PdeData>,
    /// Two points per record: minus side then plus side.
    g_points: Vec<f64>,
    g_data: Vec<InterfaceData>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Term {
    Boundary,
    Residual,
    Interface,
}

/// Sums of squared per-record residuals.
#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    b: f64,
    r: f64,
    phi: f64,
    psi: f64,
}

impl Sums {
    fn add(mut self, o: Sums) -> Sums {
        self.b += o.b;
        self.r += o.r;
        self.phi += o.phi;
        self.psi += o.psi;
        self
    }
}

/// Per-term multipliers `c` in `total = Σ c · (record residual)²`.
#[derive(Debug, Clone, Copy)]
struct Coefficients {
    b: f64,
    r: f64,
    phi: f64,
    psi: f64,
}

fn scale_by(zeta: f64, active: bool) -> f64 {
    if active && zeta != 0.0 {
        1.0 / zeta
    } else {
        1.0
    }
}

fn flatten(points: impl Iterator<Item = Point>) -> Vec<f64> {
    points.flat_map(|p| p.into_iter()).collect()
}

fn interface_data(rec: &InterfaceRecord, problem: &ProblemSpec) -> Result<InterfaceData> {
    let iface = problem
        .domain
        .interfaces
        .iter()
        .find(|i| i.id == rec.interface)
        .ok_or_else(|| Error::Usage(format!("unknown interface id {}", rec.interface)))?;
    Ok(InterfaceData {
        kappa_minus: problem.pde_data(iface.side_minus, rec.x).kappa,
        kappa_plus: problem.pde_data(iface.side_plus, rec.x).kappa,
        n_minus: rec.normal_minus,
        n_plus: rec.normal_plus,
        phi: problem.jump_u(iface.id, rec.x),
        psi: problem.jump_flux(iface.id, rec.x),
    })
}

pub fn compute_normalizers(set: &TrainingSet, problem: &ProblemSpec) -> Result<Normalizers> {
    let mean_sq = |v: &mut dyn Iterator<Item = f64>, n: usize| {
        if n == 0 {
            0.0
        } else {
            v.map(|x| x * x).sum::<f64>() / n as f64
        }
    };
    let mut phi = Vec::with_capacity(set.tau_gamma.len());
    let mut psi = Vec::with_capacity(set.tau_gamma.len());
    for rec in &set.tau_gamma {
        let d = interface_data(rec, problem)?;
        phi.push(d.phi);
        psi.push(d.psi);
    }
    Ok(Normalizers {
        zeta_b: mean_sq(&mut set.tau_b.iter().map(|r| r.label), set.tau_b.len()),
        zeta_r: mean_sq(
            &mut set
                .tau_r
                .iter()
                .map(|r| problem.pde_data(r.subdomain, r.x).source),
            set.tau_r.len(),
        ),
        zeta_phi: mean_sq(&mut phi.into_iter(), set.tau_gamma.len()),
        zeta_psi: mean_sq(&mut psi.into_iter(), set.tau_gamma.len()),
    })
}

impl LossContext {
    pub fn new(
        method: Method,
        set: &TrainingSet,
        problem: &ProblemSpec,
        weights: LossWeights,
        normalizers: Normalizers,
    ) -> Result<Self> {
        weights.validate()?;
        if set.kind != method.set_kind() {
            return Err(Error::Usage(format!(
                "method {method} needs a {:?} training set, got {:?}",
                method.set_kind(),
                set.kind
            )));
        }
        if set.tau_b.is_empty() || set.tau_r.is_empty() {
            return Err(Error::Usage(
                "training set has no boundary or residual records".into(),
            ));
        }
        if method != Method::Std
            && set.tau_gamma.is_empty()
            && !problem.domain.interfaces.is_empty()
        {
            return Err(Error::Usage(
                "separated training set has no interface records".into(),
            ));
        }
        let g_data = set
            .tau_gamma
            .iter()
            .map(|r| interface_data(r, problem))
            .collect::<Result<Vec<_>>>()?;
        Ok(LossContext {
            method,
            weights,
            normalizers,
            b_points: flatten(set.tau_b.iter().map(|r| r.shifted)),
            b_labels: set.tau_b.iter().map(|r| r.label).collect(),
            r_points: flatten(set.tau_r.iter().map(|r| r.shifted)),
            r_data: set
                .tau_r
                .iter()
                .map(|r| problem.pde_data(r.subdomain, r.x))
                .collect(),
            g_points: flatten(set.tau_gamma.iter().flat_map(|r| [r.minus, r.plus])),
            g_data,
        })
    }

    pub fn num_boundary(&self) -> usize {
        self.b_labels.len()
    }

    pub fn num_residual(&self) -> usize {
        self.r_data.len()
    }

    pub fn num_interface(&self) -> usize {
        self.g_data.len()
    }

    fn normalized(&self) -> bool {
        self.method == Method::Nds
    }

    fn coefficients(&self) -> Coefficients {
        let nds = self.normalized();
        let z = &self.normalizers;
        let per = |n: usize| if n == 0 { 0.0 } else { 1.0 / n as f64 };
        let gamma = if self.method == Method::Std {
            0.0
        } else {
            self.weights.w_gamma * per(self.num_interface())
        };
        Coefficients {
            b: self.weights.w_b * scale_by(z.zeta_b, nds) * per(self.num_boundary()),
            r: self.weights.w_r * scale_by(z.zeta_r, nds) * per(self.num_residual()),
            phi: gamma * scale_by(z.zeta_phi, nds),
            psi: gamma * scale_by(z.zeta_psi, nds),
        }
    }

    fn breakdown(&self, s: Sums) -> LossBreakdown {
        let mean = |v: f64, n: usize| if n == 0 { 0.0 } else { v / n as f64 };
        let c = self.coefficients();
        LossBreakdown {
            l_b: mean(s.b, self.num_boundary()),
            l_r: mean(s.r, self.num_residual()),
            l_gamma: mean(s.phi + s.psi, self.num_interface()),
            total: c.b * s.b + c.r * s.r + c.phi * s.phi + c.psi * s.psi,
            normalized: self.normalized(),
        }
    }

    /// Chunks of records, in fixed order.
    fn chunks(&self) -> Vec<(Term, usize, usize)> {
        let mut out = Vec::new();
        let mut push = |term, n: usize| {
            let mut start = 0;
            while start < n {
                let end = (start + CHUNK).min(n);
                out.push((term, start, end));
                start = end;
            }
        };
        push(Term::Boundary, self.num_boundary());
        push(Term::Residual, self.num_residual());
        if self.method != Method::Std {
            push(Term::Interface, self.num_interface());
        }
        out
    }

    fn points(&self, term: Term, start: usize, end: usize) -> (&[f64], Order) {
        match term {
            Term::Boundary => (&self.b_points[2 * start..2 * end], Order::Value),
            Term::Residual => (&self.r_points[2 * start..2 * end], Order::Laplacian),
            Term::Interface => (&self.g_points[4 * start..4 * end], Order::Gradient),
        }
    }

    /// Squared-residual sums of one chunk, and the output seeds of
    /// `Σ c·r²` when `c` is given.
    fn chunk_terms(
        &self,
        term: Term,
        start: usize,
        jets: &BatchJets,
        coef: Option<&Coefficients>,
    ) -> Result<(Sums, Option<BatchCotangents>)> {
        let n = match term {
            Term::Interface => jets.len() / 2,
            _ => jets.len(),
        };
        let mut sums = Sums::default();
        let mut seeds = coef.map(|_| BatchCotangents::zeros(jets.order, 2, jets.len()));
        let non_finite = |name, i| Error::NonFiniteRecord {
            term: name,
            index: start + i,
        };
        match term {
            Term::Boundary => {
                for i in 0..n {
                    let r = jets.values[i] - self.b_labels[start + i];
                    if !r.is_finite() {
                        return Err(non_finite("boundary", i));
                    }
                    sums.b += r * r;
                    if let (Some(s), Some(c)) = (seeds.as_mut(), coef) {
                        s.set_value(i, 2.0 * c.b * r);
                    }
                }
            }
            Term::Residual => {
                for i in 0..n {
                    let d = &self.r_data[start + i];
                    let g = jets.grad(i);
                    let h = jets.hess(i);
                    let r = -(d.grad_kappa[0] * g[0] + d.grad_kappa[1] * g[1])
                        - d.kappa * (h[0] + h[1])
                        - d.source;
                    if !r.is_finite() {
                        return Err(non_finite("residual", i));
                    }
                    sums.r += r * r;
                    if let (Some(s), Some(c)) = (seeds.as_mut(), coef) {
                        let w = 2.0 * c.r * r;
                        for k in 0..2 {
                            s.set_grad(i, k, -w * d.grad_kappa[k]);
                            s.set_hess(i, k, -w * d.kappa);
                        }
                    }
                }
            }
            Term::Interface => {
                for i in 0..n {
                    let d = &self.g_data[start + i];
                    let (m, p) = (2 * i, 2 * i + 1);
                    let gm = jets.grad(m);
                    let gp = jets.grad(p);
                    let a = jets.values[p] - jets.values[m] - d.phi;
                    let b = d.kappa_plus * (gp[0] * d.n_plus[0] + gp[1] * d.n_plus[1])
                        + d.kappa_minus * (gm[0] * d.n_minus[0] + gm[1] * d.n_minus[1])
                        + d.psi;
                    if !(a.is_finite() && b.is_finite()) {
                        return Err(non_finite("interface", i));
                    }
                    sums.phi += a * a;
                    sums.psi += b * b;
                    if let (Some(s), Some(c)) = (seeds.as_mut(), coef) {
                        let wa = 2.0 * c.phi * a;
                        let wb = 2.0 * c.psi * b;
                        s.set_value(p, wa);
                        s.set_value(m, -wa);
                        for k in 0..2 {
                            s.set_grad(p, k, wb * d.kappa_plus * d.n_plus[k]);
                            s.set_grad(m, k, wb * d.kappa_minus * d.n_minus[k]);
                        }
                    }
                }
            }
        }
        Ok((sums, seeds))
    }

    /// Loss terms of an arbitrary field.
    pub fn evaluate(&self, field: &dyn Field) -> Result<LossBreakdown> {
        let mut sums = Sums::default();
        for (term, start, end) in self.chunks() {
            let (pts, order) = self.points(term, start, end);
            let jets = field.jets(pts, order)?;
            sums = sums.add(self.chunk_terms(term, start, &jets, None)?.0);
        }
        Ok(self.breakdown(sums))
    }

    /// Loss terms and the gradient of `total` with respect to the flat parameters.
    pub fn loss_and_grad<T: Real>(
        &self,
        params: &NetworkParams,
    ) -> Result<(LossBreakdown, Vec<f64>)> {
        let eval = BatchEvaluator::<T>::new(params);
        let coef = self.coefficients();
        let n_params = params.parameter_count();
        let parts = self
            .chunks()
            .into_par_iter()
            .map(|(term, start, end)| -> Result<(Sums, Vec<f64>)> {
                let (pts, order) = self.points(term, start, end);
                let (jets, tape) = eval.forward(pts, order);
                let (sums, seeds) = self.chunk_terms(term, start, &jets, Some(&coef))?;
                let mut grad = vec![0.0; n_params];
                eval.backward(&tape, &seeds.expect("seeds requested"), &mut grad);
                Ok((sums, grad))
            })
            .collect::<Vec<_>>();
        // reduce in chunk order so results do not depend on scheduling
        let mut sums = Sums::default();
        let mut grad = vec![0.0; n_params];
        for part in parts {
            let (s, g) = part?;
            sums = sums.add(s);
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        Ok((self.breakdown(sums), grad))
    }
}

fn mean_squares(term: Term, ctx: &LossContext, field: &dyn Field) -> Result<f64> {
    let mut sums = Sums::default();
    for (t, start, end) in ctx.chunks().into_iter().filter(|c| c.0 == term) {
        let (pts, order) = ctx.points(t, start, end);
        let jets = field.jets(pts, order)?;
        sums = sums.add(ctx.chunk_terms(t, start, &jets, None)?.0);
    }
    let b = ctx.breakdown(sums);
    Ok(match term {
        Term::Boundary => b.l_b,
        Term::Residual => b.l_r,
        Term::Interface => b.l_gamma,
    })
}

/// Mean of `|u(X') - g(X)|²` over the boundary records.
pub fn supervised_loss(field: &dyn Field, tau_b: &[BoundaryRecord]) -> Result<f64> {
    if tau_b.is_empty() {
        return Err(Error::Usage(
            "supervised loss needs boundary records".into(),
        ));
    }
    let ctx = LossContext {
        b_points: flatten(tau_b.iter().map(|r| r.shifted)),
        b_labels: tau_b.iter().map(|r| r.label).collect(),
        ..LossContext::empty()
    };
    mean_squares(Term::Boundary, &ctx, field)
}

/// Mean squared PDE residual `-∇κ·∇u - κΔu - Q` over the residual records.
pub fn residual_loss(
    field: &dyn Field,
    tau_r: &[ResidualRecord],
    problem: &ProblemSpec,
) -> Result<f64> {
    if tau_r.is_empty() {
        return Err(Error::Usage("residual loss needs residual records".into()));
    }
    let ctx = LossContext {
        r_points: flatten(tau_r.iter().map(|r| r.shifted)),
        r_data: tau_r
            .iter()
            .map(|r| problem.pde_data(r.subdomain, r.x))
            .collect(),
        ..LossContext::empty()
    };
    mean_squares(Term::Residual, &ctx, field)
}

/// Mean over interface records of the squared value and flux mismatches.
pub fn interface_loss(
    field: &dyn Field,
    tau_gamma: &[InterfaceRecord],
    problem: &ProblemSpec,
) -> Result<f64> {
    if tau_gamma.is_empty() {
        return Err(Error::Usage(
            "interface loss needs interface records".into(),
        ));
    }
    let ctx = LossContext {
        g_points: flatten(tau_gamma.iter().flat_map(|r| [r.minus, r.plus])),
        g_data: tau_gamma
            .iter()
            .map(|r| interface_data(r, problem))
            .collect::<Result<Vec<_>>>()?,
        ..LossContext::empty()
    };
    mean_squares(Term::Interface, &ctx, field)
}

impl LossContext {
    fn empty() -> Self {
        LossContext {
            method: Method::Ds,
            weights: LossWeights::default(),
            normalizers: Normalizers::default(),
            b_points: Vec::new(),
            b_labels: Vec::new(),
            r_points: Vec::new(),
            r_data: Vec::new(),
            g_points: Vec::new(),
            g_data: Vec::new(),
        }
    }
}

pub fn total_loss(
    method: Method,
    field: &dyn Field,
    set: &TrainingSet,
    problem: &ProblemSpec,
    weights: LossWeights,
    normalizers: Normalizers,
) -> Result<LossBreakdown> {
    LossContext::new(method, set, problem, weights, normalizers)?.evaluate(field)
}

pub fn loss_and_grad(
    method: Method,
    params: &NetworkParams,
    set: &TrainingSet,
    problem: &ProblemSpec,
    weights: LossWeights,
    normalizers: Normalizers,
) -> Result<(LossBreakdown, Vec<f64>)> {
    LossContext::new(method, set, problem, weights, normalizers)?.loss_and_grad::<f64>(params)
}
