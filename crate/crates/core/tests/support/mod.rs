//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use polarflip::construction::FrozenSource;
use polarflip::{CrcSpec, PolarCode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FIXTURE: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/fixtures/p256_k128_crc24.frozen"
);

pub fn fixture_code() -> PolarCode {
    PolarCode::from_mask_file(FIXTURE, None).expect("fixture loads")
}

/// P(8,5) with u0, u1, u2 frozen.
pub fn p8_5() -> PolarCode {
    let mut mask = vec![false; 8];
    mask[..3].fill(true);
    PolarCode::build(3, 5, CrcSpec::none(), FrozenSource::Mask(mask)).unwrap()
}

pub fn ga_code(n: u32, k: usize, crc: CrcSpec) -> PolarCode {
    PolarCode::build(
        n,
        k,
        crc,
        FrozenSource::GaussianApproximation {
            design_ebn0_db: 2.0,
        },
    )
    .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_bits(rng: &mut impl Rng, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.random::<bool>() as u8).collect()
}

/// `x = u G^{⊗n}` by a dense matrix-vector product over GF(2).
pub fn encode_dense(u: &[u8]) -> Vec<u8> {
    let n = u.len();
    // Row i of G^{⊗n} has a one in column j iff the bits of j are a subset
    // of the bits of i.
    (0..n)
        .map(|j| {
            (0..n)
                .filter(|&i| i & j == j)
                .fold(0u8, |acc, i| acc ^ u[i])
        })
        .collect()
}

fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Result of the recursive reference SC decoder.
pub struct RefSc {
    pub u_hat: Vec<u8>,
    pub decision_llrs: Vec<f64>,
}

/// Recursive SC over `x = u (F ⊗ G')`: the first half of the channel
/// carries `u_a G' ⊕ u_b G'`, the second half `u_b G'`.
pub fn reference_sc(llrs: &[f64], frozen: &[bool], flips: &[usize]) -> RefSc {
    let mut out = RefSc {
        u_hat: vec![0; llrs.len()],
        decision_llrs: vec![0.0; llrs.len()],
    };
    recurse(llrs, frozen, flips, 0, &mut out);
    out
}

fn recurse(
    llrs: &[f64],
    frozen: &[bool],
    flips: &[usize],
    offset: usize,
    out: &mut RefSc,
) -> Vec<u8> {
    let len = llrs.len();
    if len == 1 {
        let i = offset;
        out.decision_llrs[i] = llrs[0];
        let bit = if frozen[i] {
            0
        } else {
            let hard = (llrs[0] < 0.0) as u8;
            hard ^ flips.contains(&i) as u8
        };
        out.u_hat[i] = bit;
        return vec![bit];
    }
    let half = len / 2;
    let (a, b) = llrs.split_at(half);
    let left: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| sgn(x) * sgn(y) * x.abs().min(y.abs()))
        .collect();
    let va = recurse(&left, frozen, flips, offset, out);
    let right: Vec<f64> = a
        .iter()
        .zip(b)
        .zip(&va)
        .map(|((&x, &y), &c)| y + if c == 0 { x } else { -x })
        .collect();
    let vb = recurse(&right, frozen, flips, offset + half, out);
    va.iter()
        .zip(&vb)
        .map(|(&p, &q)| p ^ q)
        .chain(vb.iter().copied())
        .collect()
}

/// `-ln P*` of a flip set, computed from decision probabilities.
///
/// `p` gives the probability that the hard decision of a bit with LLR
/// magnitude `x` is right, `q` the probability that it is wrong; each is
/// evaluated directly so that neither suffers cancellation.
pub fn neg_log_p_star(
    llrs: &[f64],
    info: &[usize],
    flips: &[usize],
    p: impl Fn(f64) -> f64,
    q: impl Fn(f64) -> f64,
) -> f64 {
    let last = *flips.last().expect("non-empty flip set");
    let mut prod = 1.0f64;
    for &i in info.iter().filter(|&&i| i <= last) {
        let x = llrs[i].abs();
        prod *= if flips.contains(&i) { q(x) } else { p(x) };
    }
    -prod.ln()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
