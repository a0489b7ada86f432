//! Built-in benchmark problems with closed-form exact solutions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    locate, Curve, Disk, Domain, InterfaceSpec, Point, Rect, Segment, Shape, SubdomainSpec,
};
use crate::net::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemName {
    /// Two materials split at `x = 2/3` on the unit square.
    Ex1,
    /// Four quadrants of `(-1, 1)²` with different constant coefficients.
    Ex3,
    /// Unit disk enclosed in `(-2, 2)²`.
    Ex4,
    /// Disk of radius 1/2 in `(-1, 1)²` with jumps in value and flux.
    Ex5,
    /// Single material split by a fictitious interface at `x = 1/2`.
    SmoothSanity,
}

impl ProblemName {
    pub const ALL: [ProblemName; 5] = [
        ProblemName::Ex1,
        ProblemName::Ex3,
        ProblemName::Ex4,
        ProblemName::Ex5,
        ProblemName::SmoothSanity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemName::Ex1 => "ex1",
            ProblemName::Ex3 => "ex3",
            ProblemName::Ex4 => "ex4",
            ProblemName::Ex5 => "ex5",
            ProblemName::SmoothSanity => "smooth_sanity",
        }
    }
}

impl fmt::Display for ProblemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown problem '{s}'")))
    }
}

/// Coefficient, its gradient and the source term at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeData {
    pub kappa: f64,
    pub grad_kappa: Point,
    pub source: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub name: ProblemName,
    /// Unseparated geometry (all offsets zero).
    pub domain: Domain,
    /// Unit offset per subdomain; the separated layout at distance `d` is `d` times this.
    pub separation_pattern: Vec<Point>,
    pub default_d: f64,
}

pub fn builtin(name: ProblemName) -> ProblemSpec {
    match name {
        ProblemName::Ex1 => two_strips(name, 2.0 / 3.0, 0.1),
        ProblemName::SmoothSanity => two_strips(name, 0.5, 0.1),
        ProblemName::Ex3 => quadrants(),
        ProblemName::Ex4 => disk_in_square(name, 1.0, 2.0, 3.5),
        ProblemName::Ex5 => disk_in_square(name, 0.5, 1.0, 2.0),
    }
}

pub fn builtin_by_name(name: &str) -> Result<ProblemSpec> {
    Ok(builtin(name.parse()?))
}

fn square_boundary(lo: f64, hi: f64) -> Vec<Segment> {
    vec![
        Segment {
            a: [lo, lo],
            b: [hi, lo],
        },
        Segment {
            a: [hi, lo],
            b: [hi, hi],
        },
        Segment {
            a: [hi, hi],
            b: [lo, hi],
        },
        Segment {
            a: [lo, hi],
            b: [lo, lo],
        },
    ]
}

fn subdomain(id: usize, shape: Shape) -> SubdomainSpec {
    SubdomainSpec {
        id,
        shape,
        offset: [0.0, 0.0],
    }
}

/// Unit square cut at `x = split`; the left piece owns the cut.
fn two_strips(name: ProblemName, split: f64, d: f64) -> ProblemSpec {
    let left = Rect::open([0.0, 0.0], [split, 1.0]).with_closed([[false, true], [false, false]]);
    let right = Rect::open([split, 0.0], [1.0, 1.0]);
    ProblemSpec {
        name,
        domain: Domain {
            extent: Rect::open([0.0, 0.0], [1.0, 1.0]),
            subdomains: vec![
                subdomain(1, Shape::Rect(left)),
                subdomain(2, Shape::Rect(right)),
            ],
            interfaces: vec![InterfaceSpec {
                id: 1,
                curve: Curve::Segment {
                    segment: Segment {
                        a: [split, 0.0],
                        b: [split, 1.0],
                    },
                    normal_minus: [1.0, 0.0],
                },
                side_minus: 1,
                side_plus: 2,
            }],
            boundary: square_boundary(0.0, 1.0),
        },
        separation_pattern: vec![[0.0, 0.0], [1.0, 0.0]],
        default_d: d,
    }
}

const EX3_KAPPA: [f64; 4] = [4.0, 1.0, 2.0, 1.0];
const EX3_SCALE: [f64; 4] = [1.0, 4.0, 2.0, 4.0];

fn quadrants() -> ProblemSpec {
    // Quadrants counter-clockwise from the lower left; x = 0 and y = 0 belong
    // to the left and lower pieces.
    let q1 = Rect::open([-1.0, -1.0], [0.0, 0.0]).with_closed([[false, true], [false, true]]);
    let q2 = Rect::open([0.0, -1.0], [1.0, 0.0]).with_closed([[false, false], [false, true]]);
    let q3 = Rect::open([0.0, 0.0], [1.0, 1.0]);
    let q4 = Rect::open([-1.0, 0.0], [0.0, 1.0]).with_closed([[false, true], [false, false]]);
    let seg = |a: Point, b: Point, n: Point| Curve::Segment {
        segment: Segment { a, b },
        normal_minus: n,
    };
    let iface = |id, curve, side_minus, side_plus| InterfaceSpec {
        id,
        curve,
        side_minus,
        side_plus,
    };
    ProblemSpec {
        name: ProblemName::Ex3,
        domain: Domain {
            extent: Rect::open([-1.0, -1.0], [1.0, 1.0]),
            subdomains: vec![
                subdomain(1, Shape::Rect(q1)),
                subdomain(2, Shape::Rect(q2)),
                subdomain(3, Shape::Rect(q3)),
                subdomain(4, Shape::Rect(q4)),
            ],
            interfaces: vec![
                iface(1, seg([0.0, -1.0], [0.0, 0.0], [1.0, 0.0]), 1, 2),
                iface(2, seg([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]), 2, 3),
                iface(3, seg([0.0, 0.0], [0.0, 1.0], [1.0, 0.0]), 4, 3),
                iface(4, seg([-1.0, 0.0], [0.0, 0.0], [0.0, 1.0]), 1, 4),
            ],
            boundary: square_boundary(-1.0, 1.0),
        },
        separation_pattern: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        default_d: 0.1,
    }
}

/// Open disk of radius `r` (subdomain 1) inside `(-half, half)²` (subdomain 2).
/// The disk is the piece that moves under separation.
fn disk_in_square(name: ProblemName, r: f64, half: f64, d: f64) -> ProblemSpec {
    let disk = Disk {
        center: [0.0, 0.0],
        radius: r,
    };
    let square = Rect::open([-half, -half], [half, half]);
    ProblemSpec {
        name,
        domain: Domain {
            extent: square,
            subdomains: vec![
                subdomain(1, Shape::Disk(disk)),
                subdomain(
                    2,
                    Shape::RectMinusDisk {
                        rect: square,
                        hole: disk,
                    },
                ),
            ],
            interfaces: vec![InterfaceSpec {
                id: 1,
                curve: Curve::Circle {
                    center: [0.0, 0.0],
                    radius: r,
                },
                side_minus: 1,
                side_plus: 2,
            }],
            boundary: square_boundary(-half, half),
        },
        separation_pattern: vec![[1.0, 0.0], [0.0, 0.0]],
        default_d: d,
    }
}

fn jet(value: f64, grad: Point, hess: Point) -> Jet {
    Jet {
        value,
        grad: grad.to_vec(),
        hess_diag: hess.to_vec(),
    }
}

/// Jet of `F(x² + y²)` from `F`, `F'`, `F''` at `s = x² + y²`.
fn radial_jet(x: Point, f: f64, f1: f64, f2: f64) -> Jet {
    jet(
        f,
        [2.0 * x[0] * f1, 2.0 * x[1] * f1],
        [
            2.0 * f1 + 4.0 * x[0] * x[0] * f2,
            2.0 * f1 + 4.0 * x[1] * x[1] * f2,
        ],
    )
}

/// Jet of `a·sin(p x)·sin(q y)`.
fn sine_product_jet(x: Point, a: f64, p: f64, q: f64) -> Jet {
    let (sx, cx) = (p * x[0]).sin_cos();
    let (sy, cy) = (q * x[1]).sin_cos();
    let u = a * sx * sy;
    jet(
        u,
        [a * p * cx * sy, a * q * sx * cy],
        [-p * p * u, -q * q * u],
    )
}

impl ProblemSpec {
    pub fn num_subdomains(&self) -> usize {
        self.domain.subdomains.len()
    }

    /// Whether the exact solution jumps across any interface.
    pub fn has_jumps(&self) -> bool {
        self.name == ProblemName::Ex5
    }

    pub fn separated_domain(&self, d: f64) -> Result<Domain> {
        self.domain.separated(&self.separation_pattern, d)
    }

    pub fn locate(&self, x: Point) -> Result<usize> {
        locate(x, &self.domain)
    }

    /// `κ`, `∇κ` and `Q` of subdomain `sub` at `x`.
    pub fn pde_data(&self, sub: usize, x: Point) -> PdeData {
        let constant = |kappa: f64, source: f64| PdeData {
            kappa,
            grad_kappa: [0.0, 0.0],
            source,
        };
        match self.name {
            ProblemName::Ex1 => {
                let s2y = (2.0 * PI * x[1]).sin();
                if sub == 1 {
                    constant(4.0, 20.0 * PI * PI * (PI * x[0]).sin() * s2y)
                } else {
                    constant(1.0, 20.0 * PI * PI * (4.0 * PI * x[0]).sin() * s2y)
                }
            }
            ProblemName::Ex3 => {
                let k = EX3_KAPPA[sub - 1];
                let a = EX3_SCALE[sub - 1];
                constant(
                    k,
                    2.0 * PI * PI * k * a * (PI * x[0]).sin() * (PI * x[1]).sin(),
                )
            }
            ProblemName::Ex4 => {
                let s = x[0] * x[0] + x[1] * x[1];
                if sub == 1 {
                    let t = PI * (s - 1.0);
                    constant(1.0, -4.0 * PI * t.cos() + 4.0 * PI * PI * s * t.sin())
                } else {
                    let t = PI / 4.0 * (s - 1.0);
                    constant(4.0, -4.0 * PI * t.cos() + PI * PI * s * t.sin())
                }
            }
            ProblemName::Ex5 => {
                let (sn, cs) = (x[0] + x[1]).sin_cos();
                if sub == 1 {
                    PdeData {
                        kappa: cs + 2.0,
                        grad_kappa: [-sn, -sn],
                        source: 4.0 * (cs + 1.0) * sn,
                    }
                } else {
                    let s = x[0] * x[0] + x[1] * x[1];
                    PdeData {
                        kappa: sn + 2.0,
                        grad_kappa: [cs, cs],
                        source: -2.0 * cs * (x[0] + x[1]) / s,
                    }
                }
            }
            ProblemName::SmoothSanity => {
                constant(1.0, 2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin())
            }
        }
    }

    pub fn eval_pde_data(&self, x: Point) -> Result<PdeData> {
        Ok(self.pde_data(self.locate(x)?, x))
    }

    /// Dirichlet data `g` at a point of `∂Ω`.
    pub fn dirichlet(&self, x: Point) -> f64 {
        match self.name {
            ProblemName::Ex1 | ProblemName::Ex3 | ProblemName::SmoothSanity => 0.0,
            ProblemName::Ex4 | ProblemName::Ex5 => {
                // along the edges y = ±h the free coordinate is x, and vice versa
                let free = if x[1].abs() >= x[0].abs() { x[0] } else { x[1] };
                if self.name == ProblemName::Ex4 {
                    (PI / 4.0 * (free * free + 3.0)).sin()
                } else {
                    (1.0 + free * free).ln()
                }
            }
        }
    }

    /// Prescribed jump `Φ = u|Γ⁺ - u|Γ⁻` on interface `iface`.
    pub fn jump_u(&self, _iface: usize, x: Point) -> f64 {
        match self.name {
            ProblemName::Ex5 => (x[0] * x[0] + x[1] * x[1]).ln() - (x[0] + x[1]).sin(),
            _ => 0.0,
        }
    }

    /// Prescribed flux jump `Ψ = (κ∇u·n₁)|Γ⁺ - (κ∇u·n₁)|Γ⁻`, with `n₁` the
    /// outward normal of the `side_minus` subdomain.
    pub fn jump_flux(&self, _iface: usize, x: Point) -> f64 {
        match self.name {
            ProblemName::Ex5 => {
                let r = x[0].hypot(x[1]);
                let (sn, cs) = (x[0] + x[1]).sin_cos();
                (sn + 2.0) * 2.0 / r - (cs + 2.0) * cs * (x[0] + x[1]) / r
            }
            _ => 0.0,
        }
    }

    /// Exact solution of subdomain `sub` with its gradient and Hessian diagonal.
    pub fn exact_jet(&self, sub: usize, x: Point) -> Jet {
        match self.name {
            ProblemName::Ex1 => {
                let p = if sub == 1 { PI } else { 4.0 * PI };
                sine_product_jet(x, 1.0, p, 2.0 * PI)
            }
            ProblemName::Ex3 => sine_product_jet(x, EX3_SCALE[sub - 1], PI, PI),
            ProblemName::Ex4 => {
                let s = x[0] * x[0] + x[1] * x[1];
                let c = if sub == 1 { PI } else { PI / 4.0 };
                let (sn, cs) = (c * (s - 1.0)).sin_cos();
                radial_jet(x, sn, c * cs, -c * c * sn)
            }
            ProblemName::Ex5 => {
                if sub == 1 {
                    let (sn, cs) = (x[0] + x[1]).sin_cos();
                    jet(sn, [cs, cs], [-sn, -sn])
                } else {
                    let s = x[0] * x[0] + x[1] * x[1];
                    radial_jet(x, s.ln(), 1.0 / s, -1.0 / (s * s))
                }
            }
            ProblemName::SmoothSanity => sine_product_jet(x, 1.0, PI, PI),
        }
    }

    /// Exact solution at `x`, using the subdomain that owns `x`.
    pub fn eval_exact(&self, x: Point) -> Result<f64> {
        Ok(self.exact_jet(self.locate(x)?, x).value)
    }
}
