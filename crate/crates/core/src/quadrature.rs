//! Discretization of the channel-state space.
//!
//! Each axis is cut into cells whose exact probability mass comes from the
//! marginal CDF; the representative node of a cell is its conditional mean, so
//! expectations of affine functions are exact. Exponential axes use edges that
//! are logarithmically spaced down to a small offset near zero, truncated at
//! the `1 - 1e-6` quantile with the remaining tail lumped into one final cell.
//! Fine cells near zero matter: at large `beta` the effective capacity is
//! governed by the weakest states.
//!
//! The two-dimensional grid is kink-aware: for each main-channel node `z_M`,
//! the eavesdropper cell containing `z_M / gamma` is split in two there, so
//! the probability of the secure region is resolved exactly along every
//! main-channel node instead of being smeared over a staircase.

use std::ops::Range;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fading::{FadingDistribution, FadingState, Marginal};

/// Tail probability left beyond the last finite edge of an exponential axis.
pub const TAIL_PROBABILITY: f64 = 1e-6;
/// Exponential-axis edges are `c expm1(k h)` with `c = EDGE_OFFSET * mean`:
/// geometric above `c`, uniform (width `c h`) below it.
pub const EDGE_OFFSET: f64 = 0.01;

pub const DEFAULT_GRID_N: usize = 200;
pub const ACCEPTANCE_GRID_N: usize = 400;
pub const MIN_GRID_N: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub node: f64,
    pub mass: f64,
    pub lo: f64,
    /// Equal to `lo` for an atom; may be infinite for the lumped tail.
    pub hi: f64,
}

impl Cell {
    pub fn is_atom(&self) -> bool {
        self.lo == self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisGrid {
    marginal: Marginal,
    cells: Vec<Cell>,
}

impl AxisGrid {
    pub fn build(marginal: &Marginal, n: usize) -> Result<Self> {
        marginal.validate()?;
        if n < MIN_GRID_N {
            return Err(invalid(
                "n_per_axis",
                format!("must be >= {MIN_GRID_N}, got {n}"),
            ));
        }
        let cells = match marginal {
            Marginal::FiniteDiscrete { points, probs } => points
                .iter()
                .zip(probs)
                .map(|(&x, &p)| Cell {
                    node: x,
                    mass: p,
                    lo: x,
                    hi: x,
                })
                .collect(),
            Marginal::Exponential { mean } => {
                let z_max = marginal.quantile(1.0 - TAIL_PROBABILITY);
                let scale = *mean * EDGE_OFFSET;
                let span = (z_max / scale).ln_1p();
                let finite = n - 1;
                let mut edges: Vec<f64> = (0..=finite)
                    .map(|k| scale * (span * k as f64 / finite as f64).exp_m1())
                    .collect();
                edges[finite] = z_max;
                edges.push(f64::INFINITY);
                edges
                    .windows(2)
                    .map(|w| Cell {
                        node: marginal.conditional_mean(w[0], w[1]),
                        mass: marginal.cdf(w[1]) - marginal.cdf(w[0]),
                        lo: w[0],
                        hi: w[1],
                    })
                    .collect()
            }
        };
        Ok(Self {
            marginal: marginal.clone(),
            cells,
        })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.node).collect()
    }

    pub fn marginal(&self) -> &Marginal {
        &self.marginal
    }

    pub fn total_mass(&self) -> f64 {
        pairwise_sum(&self.cells.iter().map(|c| c.mass).collect::<Vec<_>>())
    }

    /// Splits every cell at `cut`: returns `(node, mass, below)` pieces where
    /// `below` means the piece lies in `[0, cut)`. Atoms exactly at `cut` count
    /// as not below.
    pub fn pieces(&self, cut: f64) -> Vec<(f64, f64, bool)> {
        let mut out = Vec::with_capacity(self.cells.len() + 1);
        for c in &self.cells {
            if c.is_atom() {
                out.push((c.node, c.mass, c.node < cut));
            } else if c.hi <= cut {
                out.push((c.node, c.mass, true));
            } else if c.lo >= cut {
                out.push((c.node, c.mass, false));
            } else {
                let m = &self.marginal;
                let below = m.cdf(cut) - m.cdf(c.lo);
                let above = m.cdf(c.hi) - m.cdf(cut);
                if below > 0.0 {
                    out.push((m.conditional_mean(c.lo, cut), below, true));
                }
                if above > 0.0 {
                    out.push((m.conditional_mean(cut, c.hi), above, false));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub z: FadingState,
    pub weight: f64,
    /// Index of the main-channel cell this point belongs to.
    pub main_cell: usize,
    /// Eavesdropper-side factor of `weight`.
    pub eve_mass: f64,
}

/// Immutable discretized state space for a given `gamma`.
#[derive(Debug, Clone)]
pub struct StateGrid {
    gamma: f64,
    main: AxisGrid,
    eve: AxisGrid,
    points: Vec<GridPoint>,
    main_ranges: Vec<Range<usize>>,
    /// False for grids built from an explicit joint state list.
    product_form: bool,
}

/// Builds the kink-aware grid for `dist` with `n_per_axis` cells per
/// continuous axis, splitting along `z_M = gamma * z_E`.
pub fn build_grid(dist: &FadingDistribution, n_per_axis: usize, gamma: f64) -> Result<StateGrid> {
    if !dist.independent() {
        return Err(Error::UnsupportedDistribution(
            "correlated joint fading".to_string(),
        ));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(invalid("gamma", format!("must be > 0, got {gamma}")));
    }
    let main = AxisGrid::build(&dist.main, n_per_axis)?;
    let eve = AxisGrid::build(&dist.eve, n_per_axis)?;
    let mut points = Vec::with_capacity(main.cells.len() * (eve.cells.len() + 1));
    let mut main_ranges = Vec::with_capacity(main.cells.len());
    for (i, mc) in main.cells.iter().enumerate() {
        let start = points.len();
        for (z_e, mass, _) in eve.pieces(mc.node / gamma) {
            points.push(GridPoint {
                z: FadingState::new(mc.node, z_e),
                weight: mc.mass * mass,
                main_cell: i,
                eve_mass: mass,
            });
        }
        main_ranges.push(start..points.len());
    }
    Ok(StateGrid {
        gamma,
        main,
        eve,
        points,
        main_ranges,
        product_form: true,
    })
}

fn marginal_of(values: impl Iterator<Item = (f64, f64)>) -> Result<Marginal> {
    let mut pairs: Vec<(f64, f64)> = values.collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut points: Vec<f64> = Vec::new();
    let mut probs: Vec<f64> = Vec::new();
    for (x, p) in pairs {
        if points.last() == Some(&x) {
            *probs.last_mut().unwrap() += p;
        } else {
            points.push(x);
            probs.push(p);
        }
    }
    Marginal::discrete(points, probs)
}

/// Grid over an explicit joint list of states, one point per state. Such a
/// grid carries no product structure, so main-CSI solvers reject it.
pub fn grid_from_states(states: &[FadingState], probs: &[f64], gamma: f64) -> Result<StateGrid> {
    if states.is_empty() || states.len() != probs.len() {
        return Err(invalid("states", "need one probability per state"));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(invalid("gamma", format!("must be > 0, got {gamma}")));
    }
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(invalid("probs", "must be finite and >= 0"));
    }
    if (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(invalid("probs", "must sum to 1"));
    }
    let main = AxisGrid::build(
        &marginal_of(states.iter().zip(probs).map(|(z, &p)| (z.z_m, p)))?,
        MIN_GRID_N,
    )?;
    let eve = AxisGrid::build(
        &marginal_of(states.iter().zip(probs).map(|(z, &p)| (z.z_e, p)))?,
        MIN_GRID_N,
    )?;
    let points = states
        .iter()
        .zip(probs)
        .enumerate()
        .map(|(i, (&z, &p))| GridPoint {
            z,
            weight: p,
            main_cell: i,
            eve_mass: 1.0,
        })
        .collect();
    Ok(StateGrid {
        gamma,
        main,
        eve,
        points,
        main_ranges: (0..states.len()).map(|i| i..i + 1).collect(),
        product_form: false,
    })
}

impl StateGrid {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Whether the weights factor into main and eavesdropper marginals.
    pub fn is_product_form(&self) -> bool {
        self.product_form
    }

    pub fn main_axis(&self) -> &AxisGrid {
        &self.main
    }

    pub fn eve_axis(&self) -> &AxisGrid {
        &self.eve
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.weight).collect()
    }

    pub fn total_weight(&self) -> f64 {
        pairwise_sum(&self.weights())
    }

    /// Points sharing main-channel cell `i`, contiguous in `points()`.
    pub fn main_cell_range(&self, i: usize) -> Range<usize> {
        self.main_ranges[i].clone()
    }

    pub fn main_cell_count(&self) -> usize {
        self.main_ranges.len()
    }

    /// Sum of weight * f over the grid. A non-finite value of `f` is an error.
    pub fn expect<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(FadingState) -> f64,
    {
        let mut terms = Vec::with_capacity(self.points.len());
        for p in &self.points {
            let v = f(p.z);
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    value: v,
                    z_m: p.z.z_m,
                    z_e: p.z.z_e,
                });
            }
            terms.push(p.weight * v);
        }
        Ok(pairwise_sum(&terms))
    }

    /// Weighted sum of per-point values already evaluated in grid order.
    pub fn expect_values(&self, values: &[f64]) -> Result<f64> {
        assert_eq!(values.len(), self.points.len(), "one value per grid point");
        let mut terms = Vec::with_capacity(values.len());
        for (p, &v) in self.points.iter().zip(values) {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    value: v,
                    z_m: p.z.z_m,
                    z_e: p.z.z_e,
                });
            }
            terms.push(p.weight * v);
        }
        Ok(pairwise_sum(&terms))
    }

    /// `∫_0^upper f(z_M, z_E) p_E(z_E) dz_E` for a fixed `z_M`, with the
    /// eavesdropper cell containing `upper` cut exactly there.
    pub fn expect_conditional_eve<F>(&self, z_m: f64, upper: f64, f: F) -> Result<f64>
    where
        F: Fn(FadingState) -> f64,
    {
        if upper.is_nan() || upper < 0.0 {
            return Err(invalid("upper", format!("must be >= 0, got {upper}")));
        }
        let mut terms = Vec::with_capacity(self.eve.cells.len() + 1);
        for (z_e, mass, below) in self.eve.pieces(upper) {
            if !below {
                continue;
            }
            let z = FadingState::new(z_m, z_e);
            let v = f(z);
            if !v.is_finite() {
                return Err(Error::NonFinite { value: v, z_m, z_e });
            }
            terms.push(mass * v);
        }
        Ok(pairwise_sum(&terms))
    }
}

/// Deterministic pairwise (tree) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
