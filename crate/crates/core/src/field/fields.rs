use crate::error::{Error, Result};
use crate::exec;

use super::grid::Grid;

/// Real periodic scalar field on a [`Grid`]; all values finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::shape(format!(
                "expected {} values for n = {}, got {}",
                grid.len(),
                grid.n(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scalar field".into()));
        }
        Ok(ScalarField { grid, values })
    }

    /// Skips the finiteness scan; callers guarantee finite input.
    pub(crate) fn from_trusted(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        ScalarField::new(grid, vec![c; grid.len()])
    }

    /// Samples `f` at every node.
    pub fn from_fn<F>(grid: Grid, f: F) -> Result<Self>
    where
        F: Fn([f64; 3]) -> f64 + Sync + Send,
    {
        let mut values = vec![0.0; grid.len()];
        exec::fill(&mut values, |idx| f(grid.position(idx)));
        ScalarField::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    pub fn max_abs(&self) -> f64 {
        exec::max(self.values.len(), |i| self.values[i].abs())
    }

    pub fn mean(&self) -> f64 {
        exec::sum(self.values.len(), |i| self.values[i]) / self.values.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync + Send) -> Result<Self> {
        let mut out = vec![0.0; self.values.len()];
        exec::fill(&mut out, |i| f(self.values[i]));
        ScalarField::new(self.grid, out)
    }

    pub fn scaled(&self, c: f64) -> Self {
        ScalarField::from_trusted(self.grid, self.values.iter().map(|v| v * c).collect())
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        Ok(ScalarField::from_trusted(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        Ok(ScalarField::from_trusted(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    /// Max-norm distance to `other`.
    pub fn max_diff(&self, other: &ScalarField) -> Result<f64> {
        same_grid(&self.grid, &other.grid)?;
        Ok(exec::max(self.values.len(), |i| {
            (self.values[i] - other.values[i]).abs()
        }))
    }
}

/// Three scalar components on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: [ScalarField; 3],
}

impl VectorField {
    pub fn new(components: [ScalarField; 3]) -> Result<Self> {
        let g = components[0].grid;
        same_grid(&g, &components[1].grid)?;
        same_grid(&g, &components[2].grid)?;
        Ok(VectorField { components })
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            components: [
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
            ],
        }
    }

    pub fn from_fn<F>(grid: Grid, f: F) -> Result<Self>
    where
        F: Fn([f64; 3]) -> [f64; 3] + Sync + Send,
    {
        let mut packed = vec![[0.0; 3]; grid.len()];
        exec::fill(&mut packed, |idx| f(grid.position(idx)));
        let comp = |a: usize| ScalarField::new(grid, packed.iter().map(|v| v[a]).collect());
        Ok(VectorField {
            components: [comp(0)?, comp(1)?, comp(2)?],
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.components[0].grid
    }

    pub fn component(&self, a: usize) -> &ScalarField {
        &self.components[a]
    }

    pub fn components(&self) -> &[ScalarField; 3] {
        &self.components
    }

    pub fn into_components(self) -> [ScalarField; 3] {
        self.components
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 3] {
        [
            self.components[0].values[idx],
            self.components[1].values[idx],
            self.components[2].values[idx],
        ]
    }

    #[inline]
    pub fn magnitude(&self, idx: usize) -> f64 {
        let v = self.at(idx);
        (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
    }

    /// `max |v|` over the grid.
    pub fn max_magnitude(&self) -> f64 {
        exec::max(self.grid().len(), |i| self.magnitude(i))
    }

    /// Largest componentwise absolute value.
    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .map(ScalarField::max_abs)
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Self {
        VectorField {
            components: [
                self.components[0].scaled(c),
                self.components[1].scaled(c),
                self.components[2].scaled(c),
            ],
        }
    }

    pub fn sub(&self, other: &VectorField) -> Result<Self> {
        Ok(VectorField {
            components: [
                self.components[0].sub(&other.components[0])?,
                self.components[1].sub(&other.components[1])?,
                self.components[2].sub(&other.components[2])?,
            ],
        })
    }

    pub fn max_diff(&self, other: &VectorField) -> Result<f64> {
        let mut m: f64 = 0.0;
        for a in 0..3 {
            m = m.max(self.components[a].max_diff(&other.components[a])?);
        }
        Ok(m)
    }

    /// Kinetic-energy integral `∫ |v|^2 dx` over the whole box.
    pub fn energy(&self) -> f64 {
        let g = self.grid();
        g.cell_volume()
            * exec::sum(g.len(), |i| {
                let v = self.at(i);
                v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
            })
    }
}

pub(crate) fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a != b {
        return Err(Error::shape(format!(
            "grid mismatch: n = {} / L = {} vs n = {} / L = {}",
            a.n(),
            a.box_length(),
            b.n(),
            b.box_length()
        )));
    }
    Ok(())
}

/// Either kind of field; the operand type of [`super::spectral::apply_operator`].
#[derive(Debug, Clone, PartialEq)]
pub enum AnyField {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl AnyField {
    pub fn grid(&self) -> &Grid {
        match self {
            AnyField::Scalar(s) => s.grid(),
            AnyField::Vector(v) => v.grid(),
        }
    }

    pub fn into_scalar(self) -> Result<ScalarField> {
        match self {
            AnyField::Scalar(s) => Ok(s),
            AnyField::Vector(_) => Err(Error::shape("expected a scalar field")),
        }
    }

    pub fn into_vector(self) -> Result<VectorField> {
        match self {
            AnyField::Vector(v) => Ok(v),
            AnyField::Scalar(_) => Err(Error::shape("expected a vector field")),
        }
    }
}

impl From<ScalarField> for AnyField {
    fn from(s: ScalarField) -> Self {
        AnyField::Scalar(s)
    }
}

impl From<VectorField> for AnyField {
    fn from(v: VectorField) -> Self {
        AnyField::Vector(v)
    }
}
