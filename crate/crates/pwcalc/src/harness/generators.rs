//! Seeded random matrices and pair profiles.

use nalgebra::QR;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::matrix_core::{c, diag, hermitian_part, CMatrix, CVector, C64};

/// Independent stream for one trial of a seeded run.
pub fn rng_for(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_complex(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
    hermitian_part(&random_complex(rng, n, n))
}

pub fn random_unit_vector(rng: &mut impl Rng, n: usize) -> CVector {
    let v = CVector::from_fn(n, |_, _| gaussian(rng));
    let norm = v.norm();
    v.unscale(norm)
}

/// Haar-distributed unitary (QR of a Gaussian matrix with phases fixed).
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> CMatrix {
    let qr = QR::new(random_complex(rng, n, n));
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// n × k matrix with orthonormal columns.
pub fn random_isometry(rng: &mut impl Rng, n: usize, k: usize) -> CMatrix {
    random_unitary(rng, n).columns(0, k).into_owned()
}

/// U diag(values) U* for a Haar unitary U.
pub fn with_spectrum(rng: &mut impl Rng, values: &[f64]) -> CMatrix {
    let u = random_unitary(rng, values.len());
    hermitian_part(&(&u * diag(values) * u.adjoint()))
}

/// Random PSD matrix of the given rank with eigenvalues log-uniform in [0.1, 10].
pub fn random_psd(rng: &mut impl Rng, n: usize, rank: usize) -> CMatrix {
    let values: Vec<f64> = (0..n).map(|k| if k < rank { log_uniform(rng, 0.1, 10.0) } else { 0.0 }).collect();
    with_spectrum(rng, &values)
}

pub fn random_projection(rng: &mut impl Rng, n: usize, rank: usize) -> CMatrix {
    let v = random_isometry(rng, n, rank);
    hermitian_part(&(&v * v.adjoint()))
}

pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Random density matrix of full rank.
pub fn random_density(rng: &mut impl Rng, n: usize) -> CMatrix {
    let m = random_psd(rng, n, n);
    let t = m.trace();
    m.unscale(t.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "param")]
pub enum Profile {
    WellConditioned,
    /// Both matrices of rank min(k, n).
    RankDeficient(usize),
    Projection,
    CommutingPair,
    /// A ≥ α B by construction.
    DominatedPair(f64),
    /// ker B ⊄ ker A by construction.
    SingularPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RandomSpec {
    pub dim_min: usize,
    pub dim_max: usize,
    pub profile: Profile,
    pub seed: u64,
}

impl RandomSpec {
    pub fn new(dim: usize, profile: Profile, seed: u64) -> Self {
        Self { dim_min: dim, dim_max: dim, profile, seed }
    }

    pub fn with_dims(dim_min: usize, dim_max: usize, profile: Profile, seed: u64) -> Self {
        Self { dim_min, dim_max, profile, seed }
    }

    pub fn rng(&self, trial: u64) -> ChaCha8Rng {
        rng_for(self.seed, trial)
    }
}

/// The pair for one trial; deterministic in (seed, trial).
pub fn gen_pair(spec: &RandomSpec, trial: u64) -> (CMatrix, CMatrix) {
    let mut rng = spec.rng(trial);
    let n = rng.gen_range(spec.dim_min..=spec.dim_max);
    gen_pair_with(&mut rng, n, spec.profile)
}

pub fn gen_pair_with(rng: &mut impl Rng, n: usize, profile: Profile) -> (CMatrix, CMatrix) {
    match profile {
        Profile::WellConditioned => (random_psd(rng, n, n), random_psd(rng, n, n)),
        Profile::RankDeficient(k) => {
            let k = k.clamp(1, n);
            (random_psd(rng, n, k), random_psd(rng, n, k))
        }
        Profile::Projection => projection_pair(rng, n),
        Profile::CommutingPair => commuting_pair(rng, n),
        Profile::DominatedPair(alpha) => {
            let (rb, rx) = (rng.gen_range(1..=n), rng.gen_range(1..=n));
            let b = random_psd(rng, n, rb);
            let extra = random_psd(rng, n, rx);
            (hermitian_part(&(b.scale(alpha) + extra)), b)
        }
        Profile::SingularPair => {
            let n = n.max(2);
            let u = random_unitary(rng, n);
            let rank_b = rng.gen_range(1..n);
            let bvals: Vec<f64> = (0..n).map(|k| if k < rank_b { log_uniform(rng, 0.1, 10.0) } else { 0.0 }).collect();
            let b = hermitian_part(&(&u * diag(&bvals) * u.adjoint()));
            // A touches the kernel of B through the last column of U
            let rank_a = rng.gen_range(1..=n);
            let a = random_psd(rng, n, rank_a);
            let w = u.column(n - 1).into_owned();
            let bump = &w * w.adjoint();
            (hermitian_part(&(a + bump)), b)
        }
    }
}

fn projection_pair(rng: &mut impl Rng, n: usize) -> (CMatrix, CMatrix) {
    let u = random_unitary(rng, n);
    let shared = rng.gen_range(0..n.max(1));
    let rest = n - shared;
    let p_extra = if rest > 0 { rng.gen_range(0..=rest) } else { 0 };
    let q_extra = if rest > 0 { rng.gen_range(0..=rest) } else { 0 };
    let shared_basis = u.columns(0, shared).into_owned();
    let tail = u.columns(shared, rest).into_owned();
    // extras for P and Q in general position inside the complement of the shared part
    let vp = &tail * random_isometry(rng, rest, p_extra);
    let vq = &tail * random_isometry(rng, rest, q_extra);
    let proj = |extra: &CMatrix| {
        let mut m = &shared_basis * shared_basis.adjoint();
        m += extra * extra.adjoint();
        hermitian_part(&m)
    };
    (proj(&vp), proj(&vq))
}

fn commuting_pair(rng: &mut impl Rng, n: usize) -> (CMatrix, CMatrix) {
    let u = random_unitary(rng, n);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for k in 0..n {
        let (x, y) = match rng.gen_range(0..6) {
            0 => (0.0, log_uniform(rng, 0.1, 10.0)),
            1 => (log_uniform(rng, 0.1, 10.0), 0.0),
            2 if k > 0 => (a[k - 1], log_uniform(rng, 0.1, 10.0)),
            3 if k > 0 && n > 2 => (0.0, 0.0),
            _ => (log_uniform(rng, 0.1, 10.0), log_uniform(rng, 0.1, 10.0)),
        };
        a.push(x);
        b.push(y);
    }
    let conj = |v: &[f64]| hermitian_part(&(&u * diag(v) * u.adjoint()));
    (conj(&a), conj(&b))
}

/// Vector with entries sampled from the standard complex Gaussian, unnormalized.
pub fn random_vector(rng: &mut impl Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| gaussian(rng))
}

pub fn real_unit(n: usize, i: usize) -> CVector {
    CVector::from_fn(n, |k, _| if k == i { c(1.0) } else { c(0.0) })
}
