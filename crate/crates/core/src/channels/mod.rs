//! Channels stored as Choi matrices.
//!
//! Convention: `ϱ = Σ_ij |i⟩⟨j| ⊗ N(|i⟩⟨j|)`, ordered (input ⊗ output) and
//! unnormalized, so `Tr ϱ = dim_in` for trace-preserving maps. The
//! operator `ρ_{B|A} = ϱ^{T_A}` is available through [`Channel::rho`].
//! Transpositions are always taken in the computational basis.

pub(crate) mod io;
mod models;
mod random;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matlin::{
    eig_hermitian, partial_trace, partial_transpose, singular_values, ComplexMatrix, HermitianOperator,
    SubsystemShape, ZERO,
};

pub use io::{read_choi, read_choi_file, write_choi, write_choi_file};
pub use models::{collisional_pair, dephasing_hd, dephasing_parameter, dephasing_t, pauli_channel};
pub use random::{haar_unitary, random_channel, seeded_rng, unitary_mixture, SeededRng};

/// Completeness deviation above which Kraus input is rejected.
pub const KRAUS_TOLERANCE: f64 = 1e-6;
/// Smallest transfer-matrix singular value still treated as invertible.
pub const INVERTIBILITY_THRESHOLD: f64 = 1e-10;

/// A linear map given by its Choi matrix. Not necessarily CPTP: differences
/// and inverses of channels are represented with the same type.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    dim_in: usize,
    dim_out: usize,
    choi: HermitianOperator,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    dim_in: usize,
    dim_out: usize,
    operators: Vec<ComplexMatrix>,
}

impl KrausSet {
    pub fn new(dim_in: usize, dim_out: usize, operators: Vec<ComplexMatrix>) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 || operators.is_empty() {
            return Err(Error::DimensionMismatch("empty Kraus set".into()));
        }
        for k in &operators {
            if k.rows() != dim_out || k.cols() != dim_in {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator is {}x{}, expected {dim_out}x{dim_in}",
                    k.rows(),
                    k.cols()
                )));
            }
        }
        Ok(KrausSet { dim_in, dim_out, operators })
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    /// `max |Σ K†K - 1|`.
    pub fn completeness_deviation(&self) -> f64 {
        let mut acc = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.operators {
            acc = &acc + &(&k.adjoint() * k);
        }
        acc.max_abs_diff(&ComplexMatrix::identity(self.dim_in))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CptpStatus {
    Cptp,
    NotCp,
    NotTp,
    Neither,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CptpReport {
    pub status: CptpStatus,
    pub min_eigenvalue: f64,
    /// `max |Tr_out ϱ - 1|`.
    pub tp_deviation: f64,
}

/// Choi matrix of a map built from Kraus operators.
pub fn choi_from_kraus(k: &KrausSet) -> Result<Channel> {
    let deviation = k.completeness_deviation();
    if deviation > KRAUS_TOLERANCE {
        return Err(Error::IncompleteKraus { deviation });
    }
    let (din, dout) = (k.dim_in, k.dim_out);
    let mut choi = ComplexMatrix::zeros(din * dout, din * dout);
    for op in &k.operators {
        for r in 0..din * dout {
            let (i, b) = (r / dout, r % dout);
            let left = op[(b, i)];
            if left == ZERO {
                continue;
            }
            for c in 0..din * dout {
                let (j, g) = (c / dout, c % dout);
                choi[(r, c)] += left * op[(g, j)].conj();
            }
        }
    }
    Channel::from_choi(din, dout, HermitianOperator::symmetrized(choi))
}

/// Choi matrix of `later ∘ earlier`.
pub fn compose(later: &Channel, earlier: &Channel) -> Result<Channel> {
    if earlier.dim_out != later.dim_in {
        return Err(Error::DimensionMismatch(format!(
            "cannot compose a map with input {} after one with output {}",
            later.dim_in, earlier.dim_out
        )));
    }
    let (d0, d1, d2) = (earlier.dim_in, earlier.dim_out, later.dim_out);
    let a = earlier.choi.matrix();
    let b = later.choi.matrix();
    // ϱ20[(i,β),(j,γ)] = Σ_kl ϱ10[(i,k),(j,l)] ϱ21[(k,β),(l,γ)]
    let n = d0 * d2;
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..d0 {
        for j in 0..d0 {
            for k in 0..d1 {
                for l in 0..d1 {
                    let w = a[(i * d1 + k, j * d1 + l)];
                    if w == ZERO {
                        continue;
                    }
                    for beta in 0..d2 {
                        for gamma in 0..d2 {
                            out[(i * d2 + beta, j * d2 + gamma)] += w * b[(k * d2 + beta, l * d2 + gamma)];
                        }
                    }
                }
            }
        }
    }
    Channel::from_choi(d0, d2, HermitianOperator::symmetrized(out))
}

impl Channel {
    pub fn from_choi(dim_in: usize, dim_out: usize, choi: HermitianOperator) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 || choi.dim() != dim_in * dim_out {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix of dimension {} for a {dim_in} -> {dim_out} map",
                choi.dim()
            )));
        }
        Ok(Channel { dim_in, dim_out, choi })
    }

    /// Builds the stored Choi matrix from `ρ_{B|A} = ϱ^{T_A}`.
    pub fn from_rho(dim_in: usize, dim_out: usize, rho: &HermitianOperator) -> Result<Self> {
        let shape = SubsystemShape::new([dim_in, dim_out])?;
        Self::from_choi(dim_in, dim_out, partial_transpose(rho, &shape, 0)?)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_unitary(&ComplexMatrix::identity(dim))
    }

    /// `ρ ↦ U ρ U†`.
    pub fn from_unitary(u: &ComplexMatrix) -> Self {
        let (dout, din) = (u.rows(), u.cols());
        let v: Vec<Complex64> = (0..din * dout).map(|r| u[(r % dout, r / dout)]).collect();
        Channel { dim_in: din, dim_out: dout, choi: HermitianOperator::projector(&v) }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn choi(&self) -> &HermitianOperator {
        &self.choi
    }

    pub fn into_choi(self) -> HermitianOperator {
        self.choi
    }

    pub fn shape(&self) -> SubsystemShape {
        SubsystemShape::new([self.dim_in, self.dim_out]).expect("dimensions are positive")
    }

    /// `ρ_{B|A} = ϱ^{T_A}`.
    pub fn rho(&self) -> HermitianOperator {
        partial_transpose(&self.choi, &self.shape(), 0).expect("shape matches")
    }

    /// Whether every Choi entry is real.
    pub fn is_real(&self) -> bool {
        self.choi.matrix().as_slice().iter().all(|z| z.im == 0.0)
    }

    /// Applies the map to an arbitrary `dim_in x dim_in` operator.
    pub fn apply_matrix(&self, sigma: &ComplexMatrix) -> Result<ComplexMatrix> {
        if sigma.rows() != self.dim_in || sigma.cols() != self.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "input is {}x{}, map expects dimension {}",
                sigma.rows(),
                sigma.cols(),
                self.dim_in
            )));
        }
        let (din, dout) = (self.dim_in, self.dim_out);
        let c = self.choi.matrix();
        let mut out = ComplexMatrix::zeros(dout, dout);
        for i in 0..din {
            for j in 0..din {
                let s = sigma[(i, j)];
                if s == ZERO {
                    continue;
                }
                for b in 0..dout {
                    for g in 0..dout {
                        out[(b, g)] += s * c[(i * dout + b, j * dout + g)];
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, state: &HermitianOperator) -> Result<HermitianOperator> {
        Ok(HermitianOperator::symmetrized(self.apply_matrix(state.matrix())?))
    }

    pub fn is_cptp(&self, tol: f64) -> Result<CptpReport> {
        let min_eigenvalue = self.choi.min_eigenvalue()?;
        let reduced = partial_trace(&self.choi, &self.shape(), 1)?;
        let tp_deviation = reduced.max_abs_diff(&HermitianOperator::identity(self.dim_in));
        let cp = min_eigenvalue >= -tol;
        let tp = tp_deviation <= tol;
        let status = match (cp, tp) {
            (true, true) => CptpStatus::Cptp,
            (false, true) => CptpStatus::NotCp,
            (true, false) => CptpStatus::NotTp,
            (false, false) => CptpStatus::Neither,
        };
        Ok(CptpReport { status, min_eigenvalue, tp_deviation })
    }

    /// Natural representation: `vec(N(σ)) = T vec(σ)` with row-major `vec`.
    pub fn transfer_matrix(&self) -> ComplexMatrix {
        let (din, dout) = (self.dim_in, self.dim_out);
        let c = self.choi.matrix();
        ComplexMatrix::from_fn(dout * dout, din * din, |r, col| {
            let (b, g) = (r / dout, r % dout);
            let (i, j) = (col / din, col % din);
            c[(i * dout + b, j * dout + g)]
        })
    }

    fn from_transfer(dim_in: usize, dim_out: usize, t: &ComplexMatrix) -> Result<Self> {
        let n = dim_in * dim_out;
        let m = ComplexMatrix::from_fn(n, n, |r, c| {
            let (i, b) = (r / dim_out, r % dim_out);
            let (j, g) = (c / dim_out, c % dim_out);
            t[(b * dim_out + g, i * dim_in + j)]
        });
        Self::from_choi(dim_in, dim_out, HermitianOperator::new(m)?)
    }

    /// The linear inverse map, which need not be CP.
    pub fn try_invert(&self) -> Result<Channel> {
        if self.dim_in != self.dim_out {
            return Err(Error::DimensionMismatch("only square maps can be inverted".into()));
        }
        let t = self.transfer_matrix();
        let smallest = singular_values(&t)?.last().copied().unwrap_or(0.0);
        if smallest < INVERTIBILITY_THRESHOLD {
            return Err(Error::NonInvertible { smallest_singular_value: smallest });
        }
        let inv = t.inverse()?;
        Self::from_transfer(self.dim_in, self.dim_out, &inv)
    }

    /// `self - other`, a Hermiticity-preserving map.
    pub fn difference(&self, other: &Channel) -> Result<Channel> {
        self.check_same_shape(other)?;
        Ok(Channel { dim_in: self.dim_in, dim_out: self.dim_out, choi: &self.choi - &other.choi })
    }

    pub fn sum(&self, other: &Channel) -> Result<Channel> {
        self.check_same_shape(other)?;
        Ok(Channel { dim_in: self.dim_in, dim_out: self.dim_out, choi: &self.choi + &other.choi })
    }

    pub fn scale(&self, s: f64) -> Channel {
        Channel { dim_in: self.dim_in, dim_out: self.dim_out, choi: self.choi.scale(s) }
    }

    /// Largest entrywise difference between the two Choi matrices.
    pub fn max_abs_diff(&self, other: &Channel) -> f64 {
        self.choi.max_abs_diff(&other.choi)
    }

    fn check_same_shape(&self, other: &Channel) -> Result<()> {
        if self.dim_in != other.dim_in || self.dim_out != other.dim_out {
            return Err(Error::DimensionMismatch(format!(
                "{} -> {} map combined with {} -> {} map",
                self.dim_in, self.dim_out, other.dim_in, other.dim_out
            )));
        }
        Ok(())
    }

    /// Kraus operators from the spectral decomposition of the Choi matrix.
    /// Fails with `NotCp`-like diagnostics if the map is not CP within `tol`.
    pub fn kraus(&self, tol: f64) -> Result<KrausSet> {
        let eig = eig_hermitian(&self.choi)?;
        let (din, dout) = (self.dim_in, self.dim_out);
        let mut ops = Vec::new();
        for (k, &lambda) in eig.values.iter().enumerate() {
            if lambda < -tol {
                return Err(Error::OutOfRange(format!("map is not CP (Choi eigenvalue {lambda:.3e})")));
            }
            if lambda <= tol {
                continue;
            }
            let s = lambda.sqrt();
            ops.push(ComplexMatrix::from_fn(dout, din, |b, i| eig.vectors[(i * dout + b, k)] * s));
        }
        if ops.is_empty() {
            ops.push(ComplexMatrix::zeros(dout, din));
        }
        KrausSet::new(din, dout, ops)
    }
}
