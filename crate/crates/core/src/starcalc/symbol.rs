use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::poly::Poly;
use crate::error::{Error, Result};
use crate::phasegrid::{GridField, Interleaved, PhaseGrid};

/// Which Wigner component family a symbol belongs to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    #[default]
    None,
}

/// A function of momentum alone, evaluable off the lattice.
pub type MomentumFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

#[derive(Clone)]
pub(crate) enum Form {
    Sampled,
    Momentum(MomentumFn),
    Polynomial(Poly),
}

/// Phase-space function sampled on a grid. Symbols built from a closed form
/// keep it, so products of momentum functions and of polynomials stay exact
/// between lattice points.
#[derive(Clone)]
pub struct Symbol {
    field: GridField,
    parity: Parity,
    pub(crate) form: Form,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let form = match &self.form {
            Form::Sampled => "sampled".to_string(),
            Form::Momentum(_) => "momentum-only".to_string(),
            Form::Polynomial(p) => format!("{p:?}"),
        };
        f.debug_struct("Symbol")
            .field("grid", self.field.grid())
            .field("parity", &self.parity)
            .field("form", &form)
            .finish()
    }
}

impl Symbol {
    pub fn from_field(field: GridField) -> Result<Self> {
        if !field.is_finite() {
            return Err(Error::InvalidParameter {
                name: "symbol",
                reason: "values must be finite".into(),
            });
        }
        Ok(Self { field, parity: Parity::None, form: Form::Sampled })
    }

    pub(crate) fn sampled(field: GridField) -> Self {
        Self { field, parity: Parity::None, form: Form::Sampled }
    }

    pub fn from_fn(grid: PhaseGrid, f: impl Fn(f64, f64) -> C64 + Sync) -> Self {
        Self::sampled(GridField::from_fn(grid, f))
    }

    pub fn constant(grid: PhaseGrid, value: C64) -> Self {
        let poly = Poly::constant(value);
        Self { field: GridField::constant(grid, value), parity: Parity::None, form: Form::Polynomial(poly) }
    }

    /// A symbol depending on `p` only, e.g. a free dispersion relation.
    pub fn momentum(grid: PhaseGrid, f: impl Fn(f64) -> C64 + Send + Sync + 'static) -> Self {
        let f: MomentumFn = Arc::new(f);
        Self::momentum_arc(grid, f)
    }

    pub fn momentum_real(grid: PhaseGrid, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::momentum(grid, move |p| C64::new(f(p), 0.0))
    }

    pub(crate) fn momentum_arc(grid: PhaseGrid, f: MomentumFn) -> Self {
        let g = f.clone();
        Self {
            field: GridField::from_fn(grid, move |p, _| g(p)),
            parity: Parity::None,
            form: Form::Momentum(f),
        }
    }

    pub fn polynomial(grid: PhaseGrid, poly: Poly) -> Self {
        let field = GridField::from_fn(grid, |p, q| poly.eval(p, q));
        Self { field, parity: Parity::None, form: Form::Polynomial(poly) }
    }

    pub fn q(grid: PhaseGrid) -> Self {
        Self::polynomial(grid, Poly::q())
    }

    pub fn p(grid: PhaseGrid) -> Self {
        Self::polynomial(grid, Poly::p())
    }

    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = parity;
        self
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn field(&self) -> &GridField {
        &self.field
    }

    pub fn into_field(self) -> GridField {
        self.field
    }

    pub fn grid(&self) -> &PhaseGrid {
        self.field.grid()
    }

    pub fn polynomial_form(&self) -> Option<&Poly> {
        match &self.form {
            Form::Polynomial(p) => Some(p),
            _ => None,
        }
    }

    /// The constant value, when the symbol is known to be constant.
    pub fn constant_value(&self) -> Option<C64> {
        match &self.form {
            Form::Polynomial(p) if p.degree() == 0 => Some(p.coefficient(0, 0)),
            _ => {
                let v = self.field.values();
                let first = v[[0, 0]];
                v.iter().all(|&x| x == first).then_some(first)
            }
        }
    }

    /// True when the symbol does not depend on `q`.
    pub fn is_momentum_only(&self) -> bool {
        match &self.form {
            Form::Momentum(_) => true,
            Form::Polynomial(p) => p.is_momentum_only(),
            Form::Sampled => self.field.is_q_independent(1e-14),
        }
    }

    /// Evaluator of a momentum-only symbol at `p_k + t * dp / 2`. Sampled
    /// symbols fall back to band-limited interpolation of their profile.
    pub(crate) fn momentum_sampler(&self) -> Option<MomentumSampler> {
        let grid = *self.grid();
        match &self.form {
            Form::Momentum(f) => Some(MomentumSampler::Exact(grid, f.clone())),
            Form::Polynomial(p) if p.is_momentum_only() => {
                let p = p.clone();
                Some(MomentumSampler::Exact(grid, Arc::new(move |x| p.eval(x, 0.0))))
            }
            Form::Polynomial(_) => None,
            Form::Sampled => self
                .field
                .is_q_independent(1e-14)
                .then(|| MomentumSampler::Lattice(self.field.momentum_profile().interleaved())),
        }
    }

    pub fn conj(&self) -> Symbol {
        let form = match &self.form {
            Form::Sampled => Form::Sampled,
            Form::Momentum(f) => {
                let f = f.clone();
                Form::Momentum(Arc::new(move |p| f(p).conj()))
            }
            Form::Polynomial(p) => Form::Polynomial(p.conj()),
        };
        Symbol { field: self.field.conj(), parity: self.parity, form }
    }

    pub fn scale(&self, s: C64) -> Symbol {
        let form = match &self.form {
            Form::Sampled => Form::Sampled,
            Form::Momentum(f) => {
                let f = f.clone();
                Form::Momentum(Arc::new(move |p| s * f(p)))
            }
            Form::Polynomial(p) => Form::Polynomial(p.scale(s)),
        };
        Symbol { field: self.field.scale(s), parity: self.parity, form }
    }

    /// `a * self + b * other`, keeping a closed form when both sides have
    /// one of the same kind.
    pub fn combine(&self, a: C64, other: &Symbol, b: C64) -> Result<Symbol> {
        let field = self.field.axpby(a, &other.field, b)?;
        let form = match (&self.form, &other.form) {
            (Form::Polynomial(x), Form::Polynomial(y)) => Form::Polynomial(x.scale(a).add(&y.scale(b))),
            (Form::Momentum(f), Form::Momentum(g)) => {
                let (f, g) = (f.clone(), g.clone());
                Form::Momentum(Arc::new(move |p| a * f(p) + b * g(p)))
            }
            _ => Form::Sampled,
        };
        let parity = if self.parity == other.parity { self.parity } else { Parity::None };
        Ok(Symbol { field, parity, form })
    }

    pub fn try_add(&self, other: &Symbol) -> Result<Symbol> {
        self.combine(C64::new(1.0, 0.0), other, C64::new(1.0, 0.0))
    }

    pub fn try_sub(&self, other: &Symbol) -> Result<Symbol> {
        self.combine(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    pub fn max_abs_diff(&self, other: &Symbol) -> f64 {
        self.field.max_abs_diff(&other.field)
    }
}

pub(crate) enum MomentumSampler {
    Exact(PhaseGrid, MomentumFn),
    Lattice(Interleaved),
}

impl MomentumSampler {
    /// Value at `p_k + t * dp / 2`.
    pub(crate) fn at(&self, k: usize, t: i64) -> C64 {
        match self {
            MomentumSampler::Exact(grid, f) => f(grid.p(k) + 0.5 * t as f64 * grid.dp),
            MomentumSampler::Lattice(inter) => inter.at(k, t),
        }
    }
}
