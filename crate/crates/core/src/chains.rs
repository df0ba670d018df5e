//! Posterior sample storage and the chain-level train/inference split.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One MCMC chain: row-major samples plus their unnormalized log posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    id: usize,
    samples: Vec<f64>,
    log_posterior: Vec<f64>,
}

impl Chain {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn len(&self) -> usize {
        self.log_posterior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_posterior.is_empty()
    }

    pub fn log_posterior(&self) -> &[f64] {
        &self.log_posterior
    }

    /// Row-major sample buffer of length `len() * dim`.
    pub fn flat_samples(&self) -> &[f64] {
        &self.samples
    }
}

/// Immutable collection of posterior chains sharing a dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Chains {
    dim: usize,
    chains: Vec<Chain>,
    total: usize,
}

impl Chains {
    /// Builds from per-chain lists of samples and aligned log-posterior values.
    ///
    /// Dimension is taken from the first sample. Rejects ragged vectors,
    /// non-finite coordinates and non-finite log-posterior values.
    pub fn build(samples: Vec<Vec<Vec<f64>>>, log_posterior: Vec<Vec<f64>>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("at least one chain required".into()));
        }
        if samples.len() != log_posterior.len() {
            return Err(Error::Misaligned {
                what: "chain count of samples and log posterior",
                left: samples.len(),
                right: log_posterior.len(),
            });
        }
        let dim = samples
            .iter()
            .flat_map(|c| c.first())
            .map(Vec::len)
            .next()
            .ok_or_else(|| Error::InvalidArgument("no samples".into()))?;
        let chains = samples
            .into_iter()
            .zip(log_posterior)
            .enumerate()
            .map(|(id, (rows, lp))| {
                if rows.len() != lp.len() {
                    return Err(Error::Misaligned {
                        what: "samples and log posterior in chain",
                        left: rows.len(),
                        right: lp.len(),
                    });
                }
                let mut flat = Vec::with_capacity(rows.len() * dim);
                for row in rows {
                    if row.len() != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            found: row.len(),
                        });
                    }
                    flat.extend_from_slice(&row);
                }
                Chain::new(id, dim, flat, lp)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_chains(dim, chains)
    }

    /// Builds from row-major buffers, one `(samples, log_posterior)` pair per chain.
    pub fn from_flat(dim: usize, chains: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let chains = chains
            .into_iter()
            .enumerate()
            .map(|(id, (flat, lp))| Chain::new(id, dim, flat, lp))
            .collect::<Result<Vec<_>>>()?;
        Self::from_chains(dim, chains)
    }

    fn from_chains(dim: usize, chains: Vec<Chain>) -> Result<Self> {
        if chains.is_empty() {
            return Err(Error::InvalidArgument("at least one chain required".into()));
        }
        let total = chains.iter().map(Chain::len).sum();
        Ok(Self { dim, chains, total })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    /// Total number of samples across chains.
    pub fn n_samples(&self) -> usize {
        self.total
    }

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    /// Original chain identifiers, preserved through [`Chains::split_half`].
    pub fn chain_ids(&self) -> Vec<usize> {
        self.chains.iter().map(Chain::id).collect()
    }

    /// Iterates `(sample, log_posterior)` in chain order.
    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.chains.iter().flat_map(move |c| {
            c.samples
                .chunks_exact(self.dim)
                .zip(c.log_posterior.iter().copied())
        })
    }

    /// All samples as owned vectors, in chain order.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(|(s, _)| s.to_vec()).collect()
    }

    /// Inverse of [`Chains::build`].
    pub fn decompose(&self) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<f64>>) {
        self.chains
            .iter()
            .map(|c| {
                (
                    c.samples.chunks_exact(self.dim).map(<[f64]>::to_vec).collect(),
                    c.log_posterior.clone(),
                )
            })
            .unzip()
    }

    /// Randomly partitions whole chains into a training and an inference set.
    ///
    /// With an odd chain count the training set receives the extra chain.
    pub fn split_half(&self, seed: u64) -> Result<(Chains, Chains)> {
        if self.chains.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "split needs at least 2 chains, got {}",
                self.chains.len()
            )));
        }
        let mut order: Vec<usize> = (0..self.chains.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = self.chains.len().div_ceil(2);
        let (train_idx, infer_idx) = order.split_at(n_train);
        let pick = |idx: &[usize]| {
            let mut idx = idx.to_vec();
            idx.sort_unstable();
            let chains = idx.iter().map(|&i| self.chains[i].clone()).collect();
            Self::from_chains(self.dim, chains)
        };
        Ok((pick(train_idx)?, pick(infer_idx)?))
    }

    /// Writes `chain_id,coord_0..coord_{D-1},log_posterior`, one row per sample.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["chain_id".to_string()];
        header.extend((0..self.dim).map(|i| format!("coord_{i}")));
        header.push("log_posterior".into());
        w.write_record(&header)?;
        for c in &self.chains {
            for (row, lp) in c.samples.chunks_exact(self.dim).zip(&c.log_posterior) {
                let mut rec = Vec::with_capacity(self.dim + 2);
                rec.push(c.id.to_string());
                rec.extend(row.iter().map(|v| format!("{v:e}")));
                rec.push(format!("{lp:e}"));
                w.write_record(&rec)?;
            }
        }
        w.flush().map_err(|e| Error::io("<chains csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Reads the format produced by [`Chains::write_csv`]. Rows of one chain
    /// need not be contiguous; chains are ordered by first appearance.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.len() < 3
            || &headers[0] != "chain_id"
            || &headers[headers.len() - 1] != "log_posterior"
        {
            return Err(Error::Dataset(
                "chains csv header must be chain_id,coord_*,log_posterior".into(),
            ));
        }
        let dim = headers.len() - 2;
        let mut ids: Vec<usize> = Vec::new();
        let mut data: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Dataset(format!("row {}: bad number {s:?}", line + 1)))
            };
            let id: usize = rec[0]
                .trim()
                .parse()
                .map_err(|_| Error::Dataset(format!("row {}: bad chain id", line + 1)))?;
            let slot = match ids.iter().position(|&x| x == id) {
                Some(p) => p,
                None => {
                    ids.push(id);
                    data.push((Vec::new(), Vec::new()));
                    ids.len() - 1
                }
            };
            for field in rec.iter().skip(1).take(dim) {
                data[slot].0.push(parse(field)?);
            }
            data[slot].1.push(parse(&rec[dim + 1])?);
        }
        let chains = ids
            .into_iter()
            .zip(data)
            .map(|(id, (flat, lp))| Chain::new(id, dim, flat, lp))
            .collect::<Result<Vec<_>>>()?;
        Self::from_chains(dim, chains)
    }
}

impl Chain {
    fn new(id: usize, dim: usize, samples: Vec<f64>, log_posterior: Vec<f64>) -> Result<Self> {
        if samples.len() != log_posterior.len() * dim {
            return Err(Error::Misaligned {
                what: "sample coordinates and log posterior",
                left: samples.len(),
                right: log_posterior.len() * dim,
            });
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample coordinate of chain {id}")));
        }
        if log_posterior.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("log posterior of chain {id}")));
        }
        Ok(Self {
            id,
            samples,
            log_posterior,
        })
    }
}
