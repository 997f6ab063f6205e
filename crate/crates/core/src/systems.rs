//! Standard test systems.

use crate::poly::{parse_system, Monomial, PolySystem, Polynomial, SystemFile};
use crate::C64;

const HEART: &str = include_str!("../data/heart.sys");
const IPP2: &str = include_str!("../data/ipp2.sys");

/// A benchmark system with its known root counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchmarkEntry {
    pub name: &'static str,
    pub expected_complex_roots: usize,
    pub expected_real_roots: usize,
    pub bezout: u128,
}

pub const CORPUS: [BenchmarkEntry; 4] = [
    BenchmarkEntry { name: "heart", expected_complex_roots: 4, expected_real_roots: 2, bezout: 576 },
    BenchmarkEntry { name: "ipp2", expected_complex_roots: 16, expected_real_roots: 0, bezout: 1024 },
    BenchmarkEntry { name: "cyclic7", expected_complex_roots: 924, expected_real_roots: 56, bezout: 5040 },
    BenchmarkEntry { name: "katsura11", expected_complex_roots: 2048, expected_real_roots: 326, bezout: 2048 },
];

pub fn benchmark_entry(name: &str) -> Option<BenchmarkEntry> {
    CORPUS.iter().copied().find(|e| e.name == name)
}

/// Looks up a corpus system by name. Also accepts `cyclicN` and `katsuraN`
/// for any `N`.
pub fn by_name(name: &str) -> Option<SystemFile> {
    match name {
        "heart" => Some(parse_system(HEART).expect("bundled heart system parses")),
        "ipp2" => Some(parse_system(IPP2).expect("bundled ipp2 system parses")),
        _ => {
            if let Some(n) = name.strip_prefix("cyclic").and_then(|s| s.parse().ok()).filter(|&n: &usize| n >= 2) {
                return Some(named(cyclic(n), "x"));
            }
            if let Some(n) = name.strip_prefix("katsura").and_then(|s| s.parse().ok()).filter(|&n: &usize| n >= 1) {
                return Some(named(katsura(n), "u"));
            }
            None
        }
    }
}

fn named(system: PolySystem, prefix: &str) -> SystemFile {
    let variables = (0..system.nvars()).map(|i| format!("{prefix}{i}")).collect();
    SystemFile { variables, system }
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// Cyclic n-roots: the elementary cyclic sums of degree `1..n-1` vanish and
/// the product of all variables is one.
pub fn cyclic(n: usize) -> PolySystem {
    let mut polys = Vec::with_capacity(n);
    for k in 1..n {
        let terms = (0..n).map(|i| {
            let mut e = vec![0u32; n];
            for j in 0..k {
                e[(i + j) % n] += 1;
            }
            (one(), Monomial::new(e))
        });
        polys.push(Polynomial::new(n, terms));
    }
    polys.push(Polynomial::new(n, [(one(), Monomial::new(vec![1; n])), (-one(), Monomial::one(n))]));
    PolySystem::new(polys).expect("cyclic system is nonempty")
}

/// Katsura's magnetism system in the `n + 1` unknowns `u_0..u_n`, with
/// `u_l = u_{-l}` and `u_l = 0` for `|l| > n`.
pub fn katsura(n: usize) -> PolySystem {
    let nv = n + 1;
    let u = |l: i64| -> Option<Polynomial> {
        let l = l.unsigned_abs() as usize;
        (l <= n).then(|| Polynomial::var(nv, l))
    };
    let mut polys = Vec::with_capacity(nv);
    for m in 0..n as i64 {
        let mut p = Polynomial::zero(nv);
        for l in -(n as i64)..=(n as i64) {
            if let (Some(a), Some(b)) = (u(l), u(m - l)) {
                p = &p + &(&a * &b);
            }
        }
        polys.push(&p - &Polynomial::var(nv, m as usize));
    }
    let mut lin = Polynomial::constant(nv, -one());
    for l in -(n as i64)..=(n as i64) {
        lin = &lin + &u(l).expect("in range");
    }
    polys.push(lin);
    PolySystem::new(polys).expect("katsura system is nonempty")
}
