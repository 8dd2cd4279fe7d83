//! Random hyperbolic disk model: point sampling, distances, graph
//! generation and the distribution of the distance between two random
//! points.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{PairRandom, UndirectedGraph};
use crate::quadrature::{cumulative_trapezoid, GaussLegendre};
use crate::scalar::sigmoid;
use crate::textio::format_sig;

/// Largest radius for which the distance pdf is evaluated without overflow.
pub const MAX_PDF_RADIUS: f64 = 300.0;

/// Default cap on the number of nodes of a generated graph.
pub const DEFAULT_MAX_NODES: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskPoint {
    pub r: f64,
    pub theta: f64,
}

impl DiskPoint {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) || !(0.0..2.0 * PI).contains(&theta) {
            return Err(Error::domain(format!(
                "invalid disk point r={r} theta={theta}"
            )));
        }
        Ok(DiskPoint { r, theta })
    }
}

/// Hyperbolic distance in the disk of curvature -1.
pub fn hyperbolic_distance(p1: DiskPoint, p2: DiskPoint) -> f64 {
    let gamma = PI - (PI - (p1.theta - p2.theta).abs()).abs();
    // Law of cosines written as cosh(r1-r2) + 2 sinh r1 sinh r2 sin²(γ/2),
    // which avoids cancellation for nearby points.
    let half = (0.5 * gamma).sin();
    let arg = (p1.r - p2.r).cosh() + 2.0 * p1.r.sinh() * p2.r.sinh() * half * half;
    arg.max(1.0).acosh()
}

/// `2 ln(8n / (π k̄))`, the disk radius giving mean degree about `k̄`.
pub fn radius_from_graph(n: usize, mean_degree: f64) -> Result<f64> {
    if n == 0 || !(mean_degree > 0.0) {
        return Err(Error::domain(format!(
            "need n >= 1 and k > 0, got n={n} k={mean_degree}"
        )));
    }
    let ratio = 8.0 * n as f64 / (PI * mean_degree);
    if ratio < 1.0 - 1e-12 {
        return Err(Error::domain(format!(
            "8n must be at least pi*k (n={n}, k={mean_degree})"
        )));
    }
    Ok((2.0 * ratio.ln()).max(0.0))
}

/// `n` points with uniform angle and radial density `sinh r / (cosh R - 1)`.
pub fn sample_disk(n: usize, radius: f64, seed: u64) -> Result<Vec<DiskPoint>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::domain(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Edge draws use streams indexed by vertex; keep points out of their way.
    rng.set_stream(u64::MAX);
    let scale = radius_scale(radius);
    Ok((0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            let v: f64 = rng.gen();
            let theta = 2.0 * PI * v;
            DiskPoint {
                r: (1.0 + u * scale).acosh().min(radius),
                theta: if theta < 2.0 * PI { theta } else { 0.0 },
            }
        })
        .collect())
}

/// `cosh R - 1`, accurate for small `R`.
fn radius_scale(radius: f64) -> f64 {
    let s = (0.5 * radius).sinh();
    2.0 * s * s
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiskModel {
    pub n: usize,
    pub radius: f64,
    /// Steepness of the connection probability `σ(c (R - x))`.
    pub c: f64,
    pub seed: u64,
    pub max_nodes: usize,
}

impl DiskModel {
    pub fn new(n: usize, radius: f64, c: f64, seed: u64) -> Result<Self> {
        let model = DiskModel {
            n,
            radius,
            c,
            seed,
            max_nodes: DEFAULT_MAX_NODES,
        };
        model.validate()?;
        Ok(model)
    }

    /// Radius chosen for a target mean degree.
    pub fn for_mean_degree(n: usize, mean_degree: f64, c: f64, seed: u64) -> Result<Self> {
        Self::new(n, radius_from_graph(n, mean_degree)?, c, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::domain("need at least 2 nodes"));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::domain(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::domain(format!("c must be positive, got {}", self.c)));
        }
        if self.n > self.max_nodes {
            return Err(Error::domain(format!(
                "{} nodes exceed the cap of {}; the pair loop is quadratic",
                self.n, self.max_nodes
            )));
        }
        Ok(())
    }
}

/// Samples points and connects them.
pub fn generate_rhg(model: &DiskModel) -> Result<(Vec<DiskPoint>, UndirectedGraph)> {
    model.validate()?;
    let points = sample_disk(model.n, model.radius, model.seed)?;
    let graph = connect_points(&points, model.radius, model.c, model.seed)?;
    Ok((points, graph))
}

/// Connects each pair independently with probability `σ(c (R - x_ij))`.
pub fn connect_points(
    points: &[DiskPoint],
    radius: f64,
    c: f64,
    seed: u64,
) -> Result<UndirectedGraph> {
    let n = points.len();
    if n > u32::MAX as usize {
        return Err(Error::domain("too many points"));
    }
    let draw = PairRandom::new(seed);
    let rows: Vec<Vec<(u32, u32)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = draw.row_from(i as u32, i as u32 + 1);
            (i + 1..n)
                .filter(|&j| {
                    let x = hyperbolic_distance(points[i], points[j]);
                    rng.gen::<f64>() < sigmoid(c * (radius - x))
                })
                .map(|j| (i as u32, j as u32))
                .collect()
        })
        .collect();
    UndirectedGraph::from_edges(n, rows.into_iter().flatten())
}

/// Tabulated density of the distance between two independent random
/// points of the disk.
#[derive(Clone, Debug, PartialEq)]
pub struct PdfTable {
    radius: f64,
    xs: Vec<f64>,
    densities: Vec<f64>,
    cumulative: Vec<f64>,
    mass: f64,
}

pub const DEFAULT_GRID_POINTS: usize = 1000;
pub const DEFAULT_QUADRATURE_NODES: usize = 400;

/// Density of the distance `X` on an even grid over `[0, 2R]`.
///
/// For each `x` the density is a double integral over the radii `r1, r2`
/// of `sinh x · ρ(r1) ρ(r2) / (π √((cosh x - cosh(r1-r2))(cosh(r1+r2) - cosh x)))`
/// on the region where a triangle with sides `r1, r2, x` exists. Both
/// levels integrate over the exact support with a cosine substitution,
/// which absorbs the inverse square-root singularities at its edges.
pub fn distance_pdf(radius: f64, grid_points: usize, quadrature_nodes: usize) -> Result<PdfTable> {
    if !(radius > 0.0 && radius <= MAX_PDF_RADIUS) {
        return Err(Error::domain(format!(
            "radius must lie in (0, {MAX_PDF_RADIUS}], got {radius}"
        )));
    }
    if grid_points < 3 || quadrature_nodes < 2 {
        return Err(Error::domain(
            "need at least 3 grid points and 2 quadrature nodes",
        ));
    }
    let rule = GaussLegendre::new(quadrature_nodes);
    let step = 2.0 * radius / (grid_points - 1) as f64;
    let xs: Vec<f64> = (0..grid_points).map(|i| i as f64 * step).collect();
    let densities: Vec<f64> = xs
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            if i == 0 || i == grid_points - 1 {
                0.0
            } else {
                distance_density(x, radius, &rule).max(0.0)
            }
        })
        .collect();
    let cumulative = cumulative_trapezoid(&xs, &densities);
    let mass = *cumulative.last().expect("grid is non-empty");
    if !(0.999..=1.001).contains(&mass) {
        return Err(Error::Quadrature { mass });
    }
    Ok(PdfTable {
        radius,
        xs,
        densities,
        cumulative,
        mass,
    })
}

fn distance_density(x: f64, radius: f64, rule: &GaussLegendre) -> f64 {
    if x <= 0.0 || x >= 2.0 * radius {
        return 0.0;
    }
    let lo = (x - radius).max(0.0);
    let mut cuts = vec![lo, radius];
    for b in [x, radius - x] {
        if b > lo && b < radius {
            cuts.push(b);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    cuts.dedup();

    let inner = |r1: f64| {
        let from = (x - r1).abs();
        let to = (r1 + x).min(radius);
        if to <= from {
            return 0.0;
        }
        let ea = (0.5 * (x + r1)).exp();
        let eb = (0.5 * (x - r1)).exp();
        let sum = rule.integrate_cosine(from, to, |r2| {
            let q = (0.5 * r2).exp();
            let s1 = 0.5 * (ea / q - q / ea); // sinh((x + r1 - r2)/2)
            let s2 = 0.5 * (eb * q - 1.0 / (eb * q)); // sinh((x - r1 + r2)/2)
            let s3 = 0.5 * (ea * q - 1.0 / (ea * q)); // sinh((x + r1 + r2)/2)
            let s4 = 0.5 * (q / eb - eb / q); // sinh((r1 + r2 - x)/2)
            let f = 4.0 * s1 * s2 * s3 * s4;
            if f > 0.0 {
                0.5 * (q * q - 1.0 / (q * q)) / f.sqrt()
            } else {
                0.0
            }
        });
        r1.sinh() * sum
    };
    let outer: f64 = cuts
        .windows(2)
        .map(|w| rule.integrate_cosine(w[0], w[1], inner))
        .sum();
    let scale = radius_scale(radius);
    x.sinh() / (PI * scale * scale) * outer
}

impl PdfTable {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    /// Trapezoid integral of the tabulated density.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Linear interpolation of the tabulated density; zero off the grid.
    pub fn density_at(&self, x: f64) -> f64 {
        self.interpolate(&self.densities, x, 0.0, 0.0)
    }

    /// Distribution function from the running trapezoid integral.
    pub fn cdf(&self, x: f64) -> f64 {
        self.interpolate(&self.cumulative, x, 0.0, self.mass)
    }

    /// `E[X]` of the normalised table.
    pub fn mean(&self) -> f64 {
        let weighted: Vec<f64> = self
            .xs
            .iter()
            .zip(&self.densities)
            .map(|(x, f)| x * f)
            .collect();
        crate::quadrature::trapezoid(&self.xs, &weighted) / self.mass
    }

    fn interpolate(&self, ys: &[f64], x: f64, below: f64, above: f64) -> f64 {
        let last = *self.xs.last().expect("grid is non-empty");
        if x <= 0.0 {
            return below;
        }
        if x >= last {
            return above;
        }
        let step = last / (self.xs.len() - 1) as f64;
        let i = ((x / step) as usize).min(self.xs.len() - 2);
        let t = (x - self.xs[i]) / step;
        ys[i] + t * (ys[i + 1] - ys[i])
    }

    /// CSV `x,density`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,density")?;
        for (x, f) in self.xs.iter().zip(&self.densities) {
            writeln!(out, "{},{}", format_sig(*x, 10), format_sig(*f, 10))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Histogram of observed score values next to the density of `R - X`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub radius: f64,
    /// Bin edges, one more than bins.
    pub edges: Vec<f64>,
    /// Fraction of score values in each bin.
    pub score_mass: Vec<f64>,
    /// Probability of `R - X` falling in each bin.
    pub model_mass: Vec<f64>,
    pub score_mean: f64,
    pub expected_r_minus_x: f64,
    /// `mean(score) - E[R - X]`.
    pub delta: f64,
    /// Number of finite score values used.
    pub samples: usize,
}

/// Compares finite score values with `Y = R - X`, `f_Y(y) = f_X(R - y)`.
/// Non-finite values (unobserved cells) are skipped.
pub fn compare_spmi_to_hyperbolic(
    values: &[f64],
    radius: f64,
    pdf: &PdfTable,
    bins: usize,
) -> Result<ComparisonReport> {
    if bins == 0 {
        return Err(Error::domain("need at least one bin"));
    }
    if !((pdf.radius - radius).abs() <= 1e-9 * radius.abs().max(1.0)) {
        return Err(Error::domain(format!(
            "distance table was built for R={} but the comparison uses R={radius}",
            pdf.radius
        )));
    }
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::domain("no finite score values to compare"));
    }
    let (min, max) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let lo = min.min(-radius);
    let hi = max.max(radius);
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|b| lo + b as f64 * width).collect();

    let mut counts = vec![0usize; bins];
    for &v in &finite {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let total = finite.len() as f64;
    let score_mass: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let model_mass: Vec<f64> = edges
        .windows(2)
        .map(|w| (pdf.cdf(radius - w[0]) - pdf.cdf(radius - w[1])) / pdf.mass)
        .collect();

    let score_mean = finite.iter().sum::<f64>() / total;
    let expected_r_minus_x = radius - pdf.mean();
    Ok(ComparisonReport {
        radius,
        edges,
        score_mass,
        model_mass,
        score_mean,
        expected_r_minus_x,
        delta: score_mean - expected_r_minus_x,
        samples: finite.len(),
    })
}

impl ComparisonReport {
    /// CSV `y,score_density,r_minus_x_density` at bin centres, then a
    /// `delta_shift=<value>` line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "y,score_density,r_minus_x_density")?;
        for (b, w) in self.edges.windows(2).enumerate() {
            let width = w[1] - w[0];
            writeln!(
                out,
                "{},{},{}",
                format_sig(0.5 * (w[0] + w[1]), 10),
                format_sig(self.score_mass[b] / width, 10),
                format_sig(self.model_mass[b] / width, 10)
            )?;
        }
        writeln!(out, "delta_shift={}", format_sig(self.delta, 10))?;
        out.flush()?;
        Ok(())
    }
}
