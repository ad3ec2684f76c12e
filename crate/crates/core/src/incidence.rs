//! The incidence matrix between planar pairings and its exact inverse.

use crate::combinat::{enumerate_dyck_paths, pairing_from_dyck, DyckPath, PairPartition};
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};

/// True when every link of `b` joins a left endpoint of `a` to a right
/// endpoint of `a`.
pub fn arrow_relation(a: &PairPartition, b: &PairPartition) -> Result<bool> {
    if a.num_points() != b.num_points() {
        return Err(Error::LengthMismatch(a.num_points(), b.num_points()));
    }
    let left = a.left_endpoint_mask();
    Ok(b.links().iter().all(|&(s, t)| left[s as usize] != left[t as usize]))
}

/// `M` and `M⁻¹` for pairings of `2N` points, indexed in lexicographic
/// Dyck order.
#[derive(Debug, Clone)]
pub struct Incidence {
    n: usize,
    paths: Vec<DyckPath>,
    pairings: Vec<PairPartition>,
    index: HashMap<DyckPath, usize>,
    m: Vec<i64>,
    inv: Vec<i64>,
}

impl Incidence {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.paths.len()
    }

    pub fn paths(&self) -> &[DyckPath] {
        &self.paths
    }

    pub fn pairings(&self) -> &[PairPartition] {
        &self.pairings
    }

    pub fn index_of(&self, d: &DyckPath) -> Option<usize> {
        self.index.get(d).copied()
    }

    pub fn index_of_pairing(&self, p: &PairPartition) -> Option<usize> {
        crate::combinat::dyck_from_pairing(p).ok().and_then(|d| self.index_of(&d))
    }

    pub fn m(&self, i: usize, j: usize) -> i64 {
        self.m[i * self.dim() + j]
    }

    pub fn inv(&self, i: usize, j: usize) -> i64 {
        self.inv[i * self.dim() + j]
    }

    /// Row `i` of `M⁻¹` as `(column, value)` pairs with nonzero value.
    pub fn inv_row(&self, i: usize) -> Vec<(usize, i64)> {
        let d = self.dim();
        (0..d).filter_map(|j| {
            let v = self.inv[i * d + j];
            (v != 0).then_some((j, v))
        })
        .collect()
    }

    /// Writes `M⁻¹` as CSV with the Dyck paths as the header.
    pub fn write_inverse_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let label = |d: &DyckPath| d.heights().iter().map(|h| h.to_string()).collect::<Vec<_>>().join("");
        write!(w, "alpha")?;
        for p in &self.paths {
            write!(w, ",{}", label(p))?;
        }
        writeln!(w)?;
        for (i, p) in self.paths.iter().enumerate() {
            write!(w, "{}", label(p))?;
            for j in 0..self.dim() {
                write!(w, ",{}", self.inv(i, j))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Builds `M` for `N` and inverts it exactly.
pub fn incidence_matrix(n: usize) -> Result<Incidence> {
    let paths = enumerate_dyck_paths(n)?;
    let pairings: Vec<PairPartition> = paths.iter().map(pairing_from_dyck).collect();
    let d = paths.len();
    let mut m = vec![0i64; d * d];
    for (i, a) in pairings.iter().enumerate() {
        for (j, b) in pairings.iter().enumerate() {
            if arrow_relation(a, b)? {
                m[i * d + j] = 1;
            }
        }
    }
    let inv = invert_exact(&m, d)?;
    let index = paths.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    Ok(Incidence { n, paths, pairings, index, m, inv })
}

/// Shared, lazily built incidence data for `N`.
pub fn incidence_cached(n: usize) -> Result<Arc<Incidence>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Incidence>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&n) {
        return Ok(hit.clone());
    }
    let built = Arc::new(incidence_matrix(n)?);
    cache.lock().unwrap().insert(n, built.clone());
    Ok(built)
}

/// Exact integer Gauss–Jordan elimination of `[A | I]`.
///
/// Every pivot must be `±1`; then no division ever leaves the integers and the
/// result is verified by multiplying back. A non-unit pivot or an overflow is
/// reported as an elimination failure.
pub fn invert_exact(a: &[i64], d: usize) -> Result<Vec<i64>> {
    let mut w: Vec<i64> = a.to_vec();
    let mut x = vec![0i64; d * d];
    for i in 0..d {
        x[i * d + i] = 1;
    }
    let overflow = || Error::Elimination("integer overflow".into());
    for col in 0..d {
        let piv = (col..d)
            .find(|&r| w[r * d + col] != 0)
            .ok_or_else(|| Error::Elimination(format!("singular at column {col}")))?;
        if piv != col {
            for k in 0..d {
                w.swap(piv * d + k, col * d + k);
                x.swap(piv * d + k, col * d + k);
            }
        }
        let p = w[col * d + col];
        if p != 1 && p != -1 {
            return Err(Error::Elimination(format!("non-unit pivot {p} at column {col}")));
        }
        if p == -1 {
            for k in 0..d {
                w[col * d + k] = -w[col * d + k];
                x[col * d + k] = -x[col * d + k];
            }
        }
        let wrow: Vec<(usize, i64)> =
            (0..d).filter(|&k| w[col * d + k] != 0).map(|k| (k, w[col * d + k])).collect();
        let xrow: Vec<(usize, i64)> =
            (0..d).filter(|&k| x[col * d + k] != 0).map(|k| (k, x[col * d + k])).collect();
        for r in 0..d {
            let f = w[r * d + col];
            if r == col || f == 0 {
                continue;
            }
            for &(k, v) in &wrow {
                let t = f.checked_mul(v).ok_or_else(overflow)?;
                w[r * d + k] = w[r * d + k].checked_sub(t).ok_or_else(overflow)?;
            }
            for &(k, v) in &xrow {
                let t = f.checked_mul(v).ok_or_else(overflow)?;
                x[r * d + k] = x[r * d + k].checked_sub(t).ok_or_else(overflow)?;
            }
        }
    }
    // Multiply back; the result has to be the identity.
    for i in 0..d {
        for j in 0..d {
            let mut s: i128 = 0;
            for k in 0..d {
                let (u, v) = (a[i * d + k], x[k * d + j]);
                if u != 0 && v != 0 {
                    s += u as i128 * v as i128;
                }
            }
            if s != (i == j) as i128 {
                return Err(Error::Elimination(format!("product differs from identity at ({i},{j})")));
            }
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrow_examples() {
        let a = PairPartition::new(vec![(1, 2), (3, 4)]).unwrap();
        let b = PairPartition::new(vec![(1, 4), (2, 3)]).unwrap();
        assert!(arrow_relation(&a, &b).unwrap());
        assert!(!arrow_relation(&b, &a).unwrap());
    }

    #[test]
    fn n2_matrices() {
        let inc = incidence_matrix(2).unwrap();
        assert_eq!(inc.m, vec![1, 1, 0, 1]);
        assert_eq!(inc.inv, vec![1, -1, 0, 1]);
    }

    #[test]
    fn singular_and_non_unit() {
        assert!(invert_exact(&[1, 1, 1, 1], 2).is_err());
        assert!(invert_exact(&[2, 0, 0, 1], 2).is_err());
        assert_eq!(invert_exact(&[0, 1, 1, 0], 2).unwrap(), vec![0, 1, 1, 0]);
    }

    #[test]
    fn csv_dump() {
        let inc = incidence_matrix(2).unwrap();
        let mut buf = Vec::new();
        inc.write_inverse_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "alpha,01010,01210\n01010,1,-1\n01210,0,1\n");
    }
}
