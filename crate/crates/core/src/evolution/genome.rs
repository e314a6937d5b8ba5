use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// One bit per candidate rule; a set bit keeps the rule.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Genome {
    bits: Vec<bool>,
}

impl Genome {
    pub fn new(bits: Vec<bool>) -> Self {
        Genome { bits }
    }

    pub fn zeros(n: usize) -> Self {
        Genome::new(vec![false; n])
    }

    pub fn ones(n: usize) -> Self {
        Genome::new(vec![true; n])
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Genome::new((0..n).map(|_| rng.gen_bool(0.5)).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Genome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Model(format!("invalid genome character '{}'", c))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Genome::new)
    }
}

/// `population_size` genomes with every gene drawn from Bernoulli(0.5).
pub fn init_population<R: Rng + ?Sized>(n_genes: usize, size: usize, rng: &mut R) -> Vec<Genome> {
    (0..size).map(|_| Genome::random(n_genes, rng)).collect()
}

/// Swaps every other segment between the sorted cut points, starting with
/// the segment before the first cut. One cut at `k` gives
/// `(b[..k] + a[k..], a[..k] + b[k..])`.
pub fn crossover_at(a: &Genome, b: &Genome, cuts: &[usize]) -> (Genome, Genome) {
    assert_eq!(a.len(), b.len(), "genome length mismatch");
    let mut x = a.bits.clone();
    let mut y = b.bits.clone();
    let mut bounds = vec![0];
    bounds.extend(cuts.iter().copied());
    bounds.push(a.len());
    for (seg, w) in bounds.windows(2).enumerate() {
        if seg % 2 == 0 {
            for i in w[0]..w[1] {
                std::mem::swap(&mut x[i], &mut y[i]);
            }
        }
    }
    (Genome::new(x), Genome::new(y))
}

/// Crossover at `points` distinct cut points drawn uniformly from
/// `1..len`. Genomes shorter than 2 are returned unchanged.
pub fn crossover<R: Rng + ?Sized>(
    a: &Genome,
    b: &Genome,
    points: usize,
    rng: &mut R,
) -> (Genome, Genome) {
    if a.len() < 2 {
        return (a.clone(), b.clone());
    }
    let n_cuts = points.clamp(1, a.len() - 1);
    let mut cuts: Vec<usize> = if n_cuts == 1 {
        vec![rng.gen_range(1..a.len())]
    } else {
        rand::seq::index::sample(rng, a.len() - 1, n_cuts)
            .into_iter()
            .map(|i| i + 1)
            .collect()
    };
    cuts.sort_unstable();
    crossover_at(a, b, &cuts)
}

/// Flips each gene independently with probability `p_gene`.
pub fn mutate<R: Rng + ?Sized>(g: &Genome, p_gene: f64, rng: &mut R) -> Genome {
    Genome::new(g.bits.iter().map(|&b| b ^ rng.gen_bool(p_gene)).collect())
}
