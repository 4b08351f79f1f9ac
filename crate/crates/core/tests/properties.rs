use lipconc::harness::{random_measure, random_table, random_weights, rng};
use lipconc::lp::{lipschitz_constant, phi_norm};
use lipconc::mixing::{conditional_law, delta_matrix, eta, expand_markov, MarkovSpec};
use lipconc::psi::{psi, psi_norm};
use lipconc::rational::{int, ratio, sum};
use lipconc::word_space::{hamming_distance, hamming_edges, unindex, word_index, words};
use lipconc::{Rational, WeightVector, Word};
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = (usize, usize, u64)> {
    (1usize..=3, 0usize..=3, any::<u64>())
}

fn nonzero_rational() -> impl Strategy<Value = Rational> {
    (-20i64..=20, 1i64..=7)
        .prop_filter("nonzero", |(p, _)| *p != 0)
        .prop_map(|(p, q)| ratio(p, q))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn index_roundtrip((m, n, _) in shape(), k in any::<usize>()) {
        let len = m.pow(n as u32);
        let k = k % len;
        let x = unindex(k, m, n);
        prop_assert_eq!(word_index(&x, m).unwrap(), k);
    }

    #[test]
    fn triangle_inequality((m, n, seed) in shape()) {
        let w = random_weights(&mut rng(seed), n);
        let all: Vec<Word> = words(m, n).collect();
        for x in &all {
            for y in &all {
                let dxy = hamming_distance(x, y, &w).unwrap();
                prop_assert_eq!(&dxy, &hamming_distance(y, x, &w).unwrap());
                prop_assert_eq!(dxy.is_zero(), x == y);
                for z in &all {
                    prop_assert!(dxy <= hamming_distance(x, z, &w).unwrap() + hamming_distance(z, y, &w).unwrap());
                }
            }
        }
    }

    #[test]
    fn distance_is_edge_path_metric((m, n, seed) in shape()) {
        // Floyd–Warshall over single-coordinate edges reproduces d_w.
        let w = random_weights(&mut rng(seed), n);
        let len = m.pow(n as u32);
        let mut dist: Vec<Vec<Option<Rational>>> = vec![vec![None; len]; len];
        for (i, row) in dist.iter_mut().enumerate() {
            row[i] = Some(Rational::zero());
        }
        for (x, y, c) in hamming_edges(m, n) {
            dist[x][y] = Some(w[c].clone());
        }
        for k in 0..len {
            for i in 0..len {
                for j in 0..len {
                    if let (Some(a), Some(b)) = (dist[i][k].clone(), dist[k][j].clone()) {
                        let via = a + b;
                        if dist[i][j].as_ref().is_none_or(|d| via < *d) {
                            dist[i][j] = Some(via);
                        }
                    }
                }
            }
        }
        for i in 0..len {
            for j in 0..len {
                let direct = hamming_distance(&unindex(i, m, n), &unindex(j, m, n), &w).unwrap();
                prop_assert_eq!(dist[i][j].clone(), Some(direct));
            }
        }
    }

    #[test]
    fn projection_section_commute(m in 2usize..=3, n in 2usize..=3, seed in any::<u64>()) {
        let k = random_table(&mut rng(seed), m, n);
        for y in 0..m {
            prop_assert_eq!(
                k.y_section(y).unwrap().marginal_projection().unwrap(),
                k.marginal_projection().unwrap().y_section(y).unwrap()
            );
        }
    }

    #[test]
    fn sections_partition_mass(m in 1usize..=3, n in 1usize..=3, seed in any::<u64>()) {
        let k = random_table(&mut rng(seed), m, n);
        let total = (0..m).fold(Rational::zero(), |acc, y| acc + k.y_section(y).unwrap().sum());
        prop_assert_eq!(total, k.sum());
    }

    #[test]
    fn psi_homogeneity((m, n, seed) in shape(), a in nonzero_rational()) {
        let mut r = rng(seed);
        let k = random_table(&mut r, m, n);
        let w = random_weights(&mut r, n);
        if a.is_positive() {
            prop_assert_eq!(psi(&w, &k.scale(&a)).unwrap(), &a * psi(&w, &k).unwrap());
        }
        prop_assert_eq!(psi_norm(&w, &k.scale(&a)).unwrap(), a.abs() * psi_norm(&w, &k).unwrap());
        prop_assert!(!psi(&w, &k).unwrap().is_negative());
    }

    #[test]
    fn psi_monotone_in_weights((m, n, seed) in shape()) {
        let mut r = rng(seed);
        let k = random_table(&mut r, m, n);
        let w = random_weights(&mut r, n);
        let bump = random_weights(&mut r, n);
        let bigger = WeightVector::new(
            w.entries().iter().zip(bump.entries()).map(|(a, b)| a + b).collect()
        ).unwrap();
        prop_assert!(psi(&w, &k).unwrap() <= psi(&bigger, &k).unwrap());
    }

    #[test]
    fn phi_norm_homogeneous(m in 2usize..=3, n in 1usize..=2, seed in any::<u64>(), a in nonzero_rational()) {
        let mut r = rng(seed);
        let k = random_table(&mut r, m, n);
        let w = random_weights(&mut r, n);
        prop_assert_eq!(phi_norm(&k.scale(&a), &w).unwrap(), a.abs() * phi_norm(&k, &w).unwrap());
    }

    #[test]
    fn lipschitz_constant_dominates_all_pairs(m in 2usize..=3, n in 1usize..=3, seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = random_table(&mut r, m, n);
        let w = random_weights(&mut r, n);
        let lip = lipschitz_constant(&f, &w).unwrap();
        let all: Vec<Word> = words(m, n).collect();
        let mut worst = Rational::zero();
        for x in &all {
            for y in &all {
                if x != y {
                    let q = (f.at(x).unwrap() - f.at(y).unwrap()).abs() / hamming_distance(x, y, &w).unwrap();
                    worst = worst.max(q);
                }
            }
        }
        prop_assert_eq!(lip, worst);
    }

    #[test]
    fn markov_measures_normalized(m in 1usize..=3, n in 1usize..=4, seed in any::<u64>()) {
        use rand::Rng;
        let mut r = rng(seed);
        let dist = |r: &mut lipconc::harness::InstanceRng| {
            let raw: Vec<i64> = (0..m).map(|_| r.gen_range(1..=5)).collect();
            let total: i64 = raw.iter().sum();
            raw.into_iter().map(|k| ratio(k, total)).collect::<Vec<_>>()
        };
        let init = dist(&mut r);
        let transitions = (1..n).map(|_| (0..m).map(|_| dist(&mut r)).collect()).collect();
        let p = expand_markov(&MarkovSpec { initial: init, transitions }).unwrap();
        prop_assert!(sum(p.probabilities()).is_one());
    }

    #[test]
    fn conditional_laws_normalized_and_eta_symmetric(m in 2usize..=3, n in 2usize..=3, seed in any::<u64>()) {
        let p = random_measure(&mut rng(seed), m, n);
        for i in 1..n {
            for j in i + 1..=n {
                for y in words(m, i - 1) {
                    for z in 0..m {
                        for z2 in 0..m {
                            let (a, b) = (y.push(z), y.push(z2));
                            let admissible = p.prefix_probability(&a).unwrap().is_positive()
                                && p.prefix_probability(&b).unwrap().is_positive();
                            if !admissible {
                                continue;
                            }
                            prop_assert!(conditional_law(&p, &a, j).unwrap().sum().is_one());
                            let e = eta(&p, i, j, &y, z, z2).unwrap();
                            prop_assert_eq!(&e, &eta(&p, i, j, &y, z2, z).unwrap());
                            prop_assert!(!e.is_negative() && e <= int(1));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn delta_action_norm(m in 2usize..=3, n in 1usize..=3, seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_measure(&mut r, m, n);
        let w = random_weights(&mut r, n);
        let d = delta_matrix(&p).unwrap();
        let dw = d.apply(&w).unwrap();
        let direct = (0..n).fold(Rational::zero(), |acc, i| {
            let row = (0..n).fold(Rational::zero(), |s, j| s + &d.entries()[i][j] * &w[j]);
            acc + &row * &row
        });
        prop_assert_eq!(dw.iter().fold(Rational::zero(), |acc, v| acc + v * v), direct);
        for (i, row) in d.entries().iter().enumerate() {
            prop_assert!(row[i].is_one());
            prop_assert!(row[..i].iter().all(|e| e.is_zero()));
        }
    }
}
