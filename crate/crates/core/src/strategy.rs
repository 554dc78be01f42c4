//! Transmit and receive strategies produced by the beamforming schemes.


use crate::numerics::{hermitian_eigen, CMat};

/// Per-MT precoders with unit-norm columns and separate per-stream powers.
#[derive(Debug, Clone, PartialEq)]
pub struct TxStrategy {
    /// `precoders[u]` is `N x d_u`.
    pub precoders: Vec<CMat>,
    /// `powers[u][k]` is the power of stream `k` of MT `u`.
    pub powers: Vec<Vec<f64>>,
}

impl TxStrategy {
    pub fn num_mts(&self) -> usize {
        self.precoders.len()
    }

    pub fn stream_count(&self, mt: usize) -> usize {
        self.precoders[mt].ncols()
    }

    pub fn stream_counts(&self) -> Vec<usize> {
        (0..self.num_mts()).map(|u| self.stream_count(u)).collect()
    }

    /// Precoder columns scaled by the square root of their powers.
    pub fn scaled_precoder(&self, mt: usize) -> CMat {
        let mut v = self.precoders[mt].clone();
        for (k, &p) in self.powers[mt].iter().enumerate() {
            v.column_mut(k).scale_mut(p.max(0.0).sqrt());
        }
        v
    }

    /// Transmit covariance `V diag(p) V^H` of MT `mt`'s signal.
    pub fn covariance(&self, mt: usize) -> CMat {
        let v = self.scaled_precoder(mt);
        &v * v.adjoint()
    }

    pub fn mt_power(&self, mt: usize) -> f64 {
        self.powers[mt].iter().sum()
    }

    /// Total power radiated by each BS.
    pub fn bs_powers(&self, serving: &[usize], num_bs: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_bs];
        for (u, &b) in serving.iter().enumerate() {
            out[b] += self.mt_power(u);
        }
        out
    }

    /// Unit-norm columns, nonnegative powers and per-BS budget respected.
    pub fn satisfies_constraints(&self, serving: &[usize], num_bs: usize, budget: f64) -> bool {
        let unit = self.precoders.iter().all(|v| {
            (0..v.ncols()).all(|k| (v.column(k).norm() - 1.0).abs() < 1e-9)
        });
        let shapes = self
            .precoders
            .iter()
            .zip(&self.powers)
            .all(|(v, p)| v.ncols() == p.len());
        let nonneg = self.powers.iter().flatten().all(|&p| p >= 0.0);
        let within = self
            .bs_powers(serving, num_bs)
            .iter()
            .all(|&p| p <= budget + 1e-9);
        unit && shapes && nonneg && within
    }

    /// Splits transmit covariances into eigen-streams, dropping those with
    /// power below `threshold`.
    pub fn from_covariances(covs: &[CMat], threshold: f64) -> Self {
        let mut precoders = Vec::with_capacity(covs.len());
        let mut powers = Vec::with_capacity(covs.len());
        for q in covs {
            let (values, vectors) = hermitian_eigen(q);
            let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i] >= threshold).collect();
            let mut v = CMat::zeros(q.nrows(), keep.len());
            for (dst, &src) in keep.iter().enumerate() {
                v.set_column(dst, &vectors.column(src));
            }
            precoders.push(v);
            powers.push(keep.iter().map(|&i| values[i]).collect());
        }
        Self { precoders, powers }
    }

    /// Equal power per stream for every MT, `share` of the budget per MT.
    pub fn equal_power(precoders: Vec<CMat>, per_mt_power: &[f64]) -> Self {
        let powers = precoders
            .iter()
            .zip(per_mt_power)
            .map(|(v, &p)| {
                let d = v.ncols();
                vec![if d > 0 { p / d as f64 } else { 0.0 }; d]
            })
            .collect();
        Self { precoders, powers }
    }
}

/// Per-MT linear combiners with unit-norm rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RxStrategy {
    /// `combiners[u]` is `d_u x M`.
    pub combiners: Vec<CMat>,
}

impl RxStrategy {
    pub fn rows_unit_norm(&self) -> bool {
        self.combiners.iter().all(|w| {
            (0..w.nrows()).all(|i| (w.row(i).norm() - 1.0).abs() < 1e-9)
        })
    }
}

/// Result of running one beamforming scheme on one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutput {
    pub tx: TxStrategy,
    pub rx: RxStrategy,
    pub iterations_used: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
    /// Combiners used when feedback was formed, before IRC refinement.
    pub feedback_rx: Option<RxStrategy>,
}

impl SchemeOutput {
    pub fn closed_form(tx: TxStrategy, rx: RxStrategy) -> Self {
        Self {
            tx,
            rx,
            iterations_used: 0,
            converged: true,
            objective_trace: Vec::new(),
            feedback_rx: None,
        }
    }
}
