//! GF(2^8) arithmetic and linear algebra for random linear network coding.
//!
//! Field: polynomial basis modulo x^8 + x^4 + x^3 + x + 1 (0x11B). Addition
//! is XOR; multiplication goes through a 256x256 product table built once at
//! startup. Bulk row operations (`axpy`) additionally use nibble lookup
//! tables so they can run through PSHUFB on x86-64 when the CPU supports it.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Reduction polynomial, x^8 + x^4 + x^3 + x + 1.
pub const POLY: u16 = 0x11B;

/// An element of GF(2^8).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
#[repr(transparent)]
pub struct Gf256(pub u8);

impl Gf256 {
    pub const ZERO: Gf256 = Gf256(0);
    pub const ONE: Gf256 = Gf256(1);

    pub fn add(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }

    pub fn mul(self, rhs: Gf256) -> Gf256 {
        Gf256(tables().mul[self.0 as usize][rhs.0 as usize])
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(self) -> Option<Gf256> {
        if self.0 == 0 {
            None
        } else {
            Some(Gf256(tables().inv[self.0 as usize]))
        }
    }
}

impl std::ops::Add for Gf256 {
    type Output = Gf256;
    fn add(self, rhs: Gf256) -> Gf256 {
        Gf256::add(self, rhs)
    }
}

impl std::ops::Sub for Gf256 {
    type Output = Gf256;
    fn sub(self, rhs: Gf256) -> Gf256 {
        // characteristic 2: subtraction is addition
        Gf256::add(self, rhs)
    }
}

impl std::ops::Mul for Gf256 {
    type Output = Gf256;
    fn mul(self, rhs: Gf256) -> Gf256 {
        Gf256::mul(self, rhs)
    }
}

impl From<u8> for Gf256 {
    fn from(v: u8) -> Self {
        Gf256(v)
    }
}

/// Carry-less (peasant) multiplication modulo `POLY`. Only used to build the
/// tables; everything else goes through lookups.
fn clmul(mut a: u8, mut b: u8) -> u8 {
    let mut acc: u8 = 0;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        let carry = a & 0x80 != 0;
        a <<= 1;
        if carry {
            a ^= (POLY & 0xFF) as u8;
        }
        b >>= 1;
    }
    acc
}

struct Tables {
    mul: Vec<[u8; 256]>,
    inv: [u8; 256],
    // mul_lo[f][x] = f * x       for x in 0..16
    // mul_hi[f][x] = f * (x<<4)  for x in 0..16
    mul_lo: Vec<[u8; 16]>,
    mul_hi: Vec<[u8; 16]>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut mul = vec![[0u8; 256]; 256];
        for a in 0..256usize {
            for b in a..256usize {
                let p = clmul(a as u8, b as u8);
                mul[a][b] = p;
                mul[b][a] = p;
            }
        }
        let mut inv = [0u8; 256];
        for a in 1..256usize {
            for b in 1..256usize {
                if mul[a][b] == 1 {
                    inv[a] = b as u8;
                    break;
                }
            }
        }
        let mut mul_lo = vec![[0u8; 16]; 256];
        let mut mul_hi = vec![[0u8; 16]; 256];
        for f in 0..256usize {
            for x in 0..16usize {
                mul_lo[f][x] = mul[f][x];
                mul_hi[f][x] = mul[f][x << 4];
            }
        }
        Tables {
            mul,
            inv,
            mul_lo,
            mul_hi,
        }
    })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Kernel {
    Scalar,
    #[cfg(target_arch = "x86_64")]
    Ssse3,
    #[cfg(target_arch = "x86_64")]
    Avx2,
}

fn kernel() -> Kernel {
    static KERNEL: OnceLock<Kernel> = OnceLock::new();
    *KERNEL.get_or_init(|| {
        #[cfg(target_arch = "x86_64")]
        {
            if is_x86_feature_detected!("avx2") {
                return Kernel::Avx2;
            }
            if is_x86_feature_detected!("ssse3") {
                return Kernel::Ssse3;
            }
        }
        Kernel::Scalar
    })
}

/// `dst[i] ^= f * src[i]` over the overlap of the two slices.
pub fn axpy(dst: &mut [u8], src: &[u8], f: u8) {
    let n = dst.len().min(src.len());
    let (dst, src) = (&mut dst[..n], &src[..n]);
    if f == 0 || n == 0 {
        return;
    }
    if f == 1 {
        xor_slice(dst, src);
        return;
    }
    match kernel() {
        Kernel::Scalar => axpy_scalar(dst, src, f),
        #[cfg(target_arch = "x86_64")]
        Kernel::Ssse3 => unsafe { axpy_ssse3(dst, src, f) },
        #[cfg(target_arch = "x86_64")]
        Kernel::Avx2 => unsafe { axpy_avx2(dst, src, f) },
    }
}

/// The 256-entry product row of `f`: `row[x] = f * x`.
pub fn mul_row(f: u8) -> &'static [u8; 256] {
    &tables().mul[f as usize]
}

/// `dst[i] = f * dst[i]`.
pub fn scale(dst: &mut [u8], f: u8) {
    if f == 1 {
        return;
    }
    let row = &tables().mul[f as usize];
    for b in dst.iter_mut() {
        *b = row[*b as usize];
    }
}

fn xor_slice(dst: &mut [u8], src: &[u8]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

fn axpy_scalar(dst: &mut [u8], src: &[u8], f: u8) {
    let row = &tables().mul[f as usize];
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= row[*s as usize];
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "ssse3")]
unsafe fn axpy_ssse3(dst: &mut [u8], src: &[u8], f: u8) {
    use std::arch::x86_64::*;
    let t = tables();
    let lo = _mm_loadu_si128(t.mul_lo[f as usize].as_ptr() as *const __m128i);
    let hi = _mm_loadu_si128(t.mul_hi[f as usize].as_ptr() as *const __m128i);
    let mask = _mm_set1_epi8(0x0F);
    let n = dst.len();
    let mut i = 0;
    while i + 16 <= n {
        let s = _mm_loadu_si128(src.as_ptr().add(i) as *const __m128i);
        let d = _mm_loadu_si128(dst.as_ptr().add(i) as *const __m128i);
        let pl = _mm_shuffle_epi8(lo, _mm_and_si128(s, mask));
        let ph = _mm_shuffle_epi8(hi, _mm_and_si128(_mm_srli_epi16(s, 4), mask));
        let r = _mm_xor_si128(d, _mm_xor_si128(pl, ph));
        _mm_storeu_si128(dst.as_mut_ptr().add(i) as *mut __m128i, r);
        i += 16;
    }
    if i < n {
        axpy_scalar(&mut dst[i..], &src[i..], f);
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn axpy_avx2(dst: &mut [u8], src: &[u8], f: u8) {
    use std::arch::x86_64::*;
    let t = tables();
    let lo128 = _mm_loadu_si128(t.mul_lo[f as usize].as_ptr() as *const __m128i);
    let hi128 = _mm_loadu_si128(t.mul_hi[f as usize].as_ptr() as *const __m128i);
    let lo = _mm256_broadcastsi128_si256(lo128);
    let hi = _mm256_broadcastsi128_si256(hi128);
    let mask = _mm256_set1_epi8(0x0F);
    let n = dst.len();
    let mut i = 0;
    while i + 32 <= n {
        let s = _mm256_loadu_si256(src.as_ptr().add(i) as *const __m256i);
        let d = _mm256_loadu_si256(dst.as_ptr().add(i) as *const __m256i);
        let pl = _mm256_shuffle_epi8(lo, _mm256_and_si256(s, mask));
        let ph = _mm256_shuffle_epi8(hi, _mm256_and_si256(_mm256_srli_epi16(s, 4), mask));
        let r = _mm256_xor_si256(d, _mm256_xor_si256(pl, ph));
        _mm256_storeu_si256(dst.as_mut_ptr().add(i) as *mut __m256i, r);
        i += 32;
    }
    if i < n {
        axpy_scalar(&mut dst[i..], &src[i..], f);
    }
}

/// One received linear combination: coefficients over a fixed packet index
/// set plus the combined payload.
#[derive(Clone, Debug)]
pub struct CodedEquation {
    pub coeffs: Vec<Gf256>,
    pub payload: Vec<u8>,
}

impl CodedEquation {
    pub fn new(coeffs: Vec<Gf256>, payload: Vec<u8>) -> Self {
        CodedEquation { coeffs, payload }
    }

    fn coeff_bytes(&self) -> Vec<u8> {
        self.coeffs.iter().map(|c| c.0).collect()
    }
}

/// Incremental Gaussian elimination over GF(2^8).
///
/// Rows are kept in echelon form, indexed by pivot column, with the pivot
/// coefficient normalized to one. The unknown count may grow between
/// insertions (new unknowns append to the right); an equation shorter than
/// the current width is implicitly zero-padded.
pub struct Eliminator {
    payload_len: usize,
    rows: Vec<Option<EchelonRow>>,
    rank: usize,
}

struct EchelonRow {
    coeffs: Vec<u8>,
    payload: Vec<u8>,
}

impl Eliminator {
    pub fn new(payload_len: usize) -> Self {
        Eliminator {
            payload_len,
            rows: Vec::new(),
            rank: 0,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn width(&self) -> usize {
        self.rows.len()
    }

    /// Reduce one equation against the current system and install it if it is
    /// linearly independent. Returns whether the rank grew. An equation that
    /// reduces to zero coefficients but a nonzero payload is inconsistent.
    pub fn absorb(&mut self, mut coeffs: Vec<u8>, mut payload: Vec<u8>) -> Result<bool> {
        if payload.len() != self.payload_len {
            return Err(Error::Invalid(format!(
                "payload length {} does not match decoder ({})",
                payload.len(),
                self.payload_len
            )));
        }
        if coeffs.len() > self.rows.len() {
            self.rows.resize_with(coeffs.len(), || None);
        }
        let mut col = 0;
        while col < coeffs.len() {
            if coeffs[col] == 0 {
                col += 1;
                continue;
            }
            match &self.rows[col] {
                Some(row) => {
                    let f = coeffs[col];
                    if row.coeffs.len() > coeffs.len() {
                        coeffs.resize(row.coeffs.len(), 0);
                    }
                    // re-borrow after the resize above
                    let row = self.rows[col].as_ref().unwrap();
                    axpy(&mut coeffs[col..], &row.coeffs[col..], f);
                    axpy(&mut payload, &row.payload, f);
                    debug_assert_eq!(coeffs[col], 0);
                    col += 1;
                }
                None => {
                    let inv = Gf256(coeffs[col]).inv().unwrap().0;
                    scale(&mut coeffs[col..], inv);
                    scale(&mut payload, inv);
                    self.rows[col] = Some(EchelonRow { coeffs, payload });
                    self.rank += 1;
                    return Ok(true);
                }
            }
        }
        if payload.iter().any(|&b| b != 0) {
            return Err(Error::Integrity(
                "equation reduced to 0 = nonzero payload".into(),
            ));
        }
        Ok(false)
    }

    /// Solve for the first `unknown_count` unknowns by back-substitution.
    /// Returns `None` when the system does not determine all of them.
    pub fn solve(&self, unknown_count: usize) -> Option<Vec<Vec<u8>>> {
        if unknown_count > self.rows.len() {
            return None;
        }
        if self.rows[..unknown_count].iter().any(|r| r.is_none()) {
            return None;
        }
        let mut values = vec![vec![0u8; self.payload_len]; unknown_count];
        for col in (0..unknown_count).rev() {
            let row = self.rows[col].as_ref().unwrap();
            let mut v = row.payload.clone();
            for (j, &c) in row.coeffs.iter().enumerate().skip(col + 1) {
                if c != 0 && j < unknown_count {
                    axpy(&mut v, &values[j], c);
                }
            }
            values[col] = v;
        }
        Some(values)
    }
}

/// Batch rank computation and solve: Gaussian elimination of `rows` over
/// `unknown_count` unknowns. The payloads are returned only when the rank is
/// full. An inconsistent system is a protocol-integrity error.
pub fn rank_and_solve(
    rows: &[CodedEquation],
    unknown_count: usize,
) -> Result<(usize, Option<Vec<Vec<u8>>>)> {
    let payload_len = rows.first().map_or(0, |r| r.payload.len());
    let mut elim = Eliminator::new(payload_len);
    for (i, eq) in rows.iter().enumerate() {
        if eq.coeffs.len() != unknown_count {
            return Err(Error::Invalid(format!(
                "equation {} has {} coefficients, expected {}",
                i,
                eq.coeffs.len(),
                unknown_count
            )));
        }
        elim.absorb(eq.coeff_bytes(), eq.payload.clone())?;
    }
    let rank = elim.rank();
    let solution = if rank == unknown_count {
        elim.solve(unknown_count)
    } else {
        None
    };
    Ok((rank, solution))
}
