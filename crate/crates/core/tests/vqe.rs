use noisyopt_core::qsim::{EstimatorSpec, PauliSum};
use noisyopt_core::vqe::{reference_energies, toy_context};
use proptest::prelude::*;

/// Real symmetric embedding [[Re, -Im], [Im, Re]] of a Pauli sum, built
/// entry by entry from the action of each Pauli letter on basis states.
/// Qubit 0 is the most significant bit. Every eigenvalue appears twice.
fn real_embedding(n: usize, terms: &[(f64, String)]) -> Vec<Vec<f64>> {
    let d = 1usize << n;
    let mut m = vec![vec![0.0; 2 * d]; 2 * d];
    for (c, label) in terms {
        for col in 0..d {
            let mut row = col;
            // phase as i^k
            let mut k = 0u32;
            let mut sign = 1.0;
            for (q, ch) in label.chars().enumerate() {
                let bit = n - 1 - q;
                let set = (col >> bit) & 1 == 1;
                match ch {
                    'X' => row ^= 1 << bit,
                    'Y' => {
                        row ^= 1 << bit;
                        k += 1;
                        if set {
                            sign = -sign;
                        }
                    }
                    'Z' if set => sign = -sign,
                    _ => {}
                }
            }
            let (re, im) = match k % 4 {
                0 => (sign, 0.0),
                1 => (0.0, sign),
                2 => (-sign, 0.0),
                _ => (0.0, -sign),
            };
            m[row][col] += c * re;
            m[row + d][col + d] += c * re;
            m[row + d][col] += c * im;
            m[row][col + d] -= c * im;
        }
    }
    m
}

/// Cyclic Jacobi rotations until the off-diagonal mass vanishes.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (rp, rq) = (a[p].clone(), a[q].clone());
                for k in 0..n {
                    a[p][k] = c * rp[k] - s * rq[k];
                    a[q][k] = s * rp[k] + c * rq[k];
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn pauli_sum_strategy() -> impl Strategy<Value = (usize, Vec<(f64, String)>)> {
    (1usize..=3).prop_flat_map(|n| {
        let label =
            proptest::collection::vec(prop_oneof![Just('I'), Just('X'), Just('Y'), Just('Z')], n)
                .prop_map(|v| v.into_iter().collect::<String>());
        (
            Just(n),
            proptest::collection::vec((-2.0f64..2.0, label), 1..8),
        )
    })
}

#[test]
fn toy_reference_matches_closed_form() {
    let ctx = toy_context(EstimatorSpec::exact());
    let r = reference_energies(ctx.hamiltonian()).unwrap();
    assert!((r.e0 + 4.25f64.sqrt()).abs() < 1e-12);
    assert!((r.e1 + 0.5).abs() < 1e-12);
    assert!((r.e_sa - r.e0 - r.e1).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reference_energies_match_jacobi((n, terms) in pauli_sum_strategy()) {
        let h = PauliSum::new(terms.iter().map(|(c, l)| (*c, l.as_str()))).unwrap();
        prop_assume!(h.dim() >= 2);
        let r = reference_energies(&h).unwrap();
        let ev = jacobi_eigenvalues(real_embedding(n, &terms));
        prop_assert!((r.e0 - ev[0]).abs() < 1e-9, "e0 {} vs {}", r.e0, ev[0]);
        prop_assert!((r.e1 - ev[2]).abs() < 1e-9, "e1 {} vs {}", r.e1, ev[2]);
    }

    #[test]
    fn ensemble_cost_respects_variational_bound(theta in proptest::collection::vec(-7.0f64..7.0, 3)) {
        let ctx = toy_context(EstimatorSpec::exact());
        let r = reference_energies(ctx.hamiltonian()).unwrap();
        prop_assert!(ctx.sa_cost_exact(&theta).unwrap() >= r.e_sa - 1e-10);
    }
}
