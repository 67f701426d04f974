use leadsto_core::fdr::{
    analyze, fit_empirical_null, fit_mixture, FdrConfig, NullMode, ZTable, DEFAULT_BINS,
    DEFAULT_DEGREE,
};
use leadsto_core::stats::normal_pdf;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Draws from `Σ w_k · N(m_k, s_k)`.
fn mixture(seed: u64, n: usize, parts: &[(f64, f64, f64)]) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dists: Vec<(f64, Normal<f64>)> = parts
        .iter()
        .map(|&(w, m, s)| (w, Normal::new(m, s).unwrap()))
        .collect();
    (0..n)
        .map(|_| {
            let mut u: f64 = rng.random();
            for (w, d) in &dists {
                if u < *w {
                    return d.sample(&mut rng);
                }
                u -= w;
            }
            dists.last().unwrap().1.sample(&mut rng)
        })
        .collect()
}

fn table(z: Vec<f64>) -> ZTable {
    ZTable::from_z((0..z.len()).map(|i| format!("h{i}")).collect(), z).unwrap()
}

#[test]
fn density_fit_tracks_the_standard_normal() {
    let z = table(mixture(1, 10_000, &[(1.0, 0.0, 1.0)]));
    let f = fit_mixture(&z, DEFAULT_BINS, DEFAULT_DEGREE).unwrap();
    let worst = (0..=600)
        .map(|i| -3.0 + i as f64 * 0.01)
        .map(|x| (f.density_at(x) - normal_pdf(x, 0.0, 1.0)).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 0.02, "sup distance {worst}");
}

#[test]
fn density_fit_shows_the_right_shoulder() {
    let z = table(mixture(2, 10_000, &[(0.95, 0.0, 1.0), (0.05, 3.0, 1.0)]));
    let f = fit_mixture(&z, DEFAULT_BINS, DEFAULT_DEGREE).unwrap();
    assert!(f.density_at(3.0) > normal_pdf(3.0, 0.0, 1.0));
}

#[test]
fn empirical_null_of_pure_noise() {
    let z = table(mixture(3, 10_000, &[(1.0, 0.0, 1.0)]));
    let f = fit_mixture(&z, DEFAULT_BINS, DEFAULT_DEGREE).unwrap();
    let null = fit_empirical_null(&z, &f).unwrap();
    assert!(null.mean.abs() <= 0.05, "{null:?}");
    assert!((null.sd - 1.0).abs() <= 0.05, "{null:?}");
}

#[test]
fn empirical_null_follows_a_shift() {
    let z = table(mixture(4, 10_000, &[(1.0, 0.3, 1.0)]));
    let f = fit_mixture(&z, DEFAULT_BINS, DEFAULT_DEGREE).unwrap();
    let null = fit_empirical_null(&z, &f).unwrap();
    assert!((null.mean - 0.3).abs() <= 0.05, "{null:?}");
}

#[test]
fn theoretical_mode_ignores_the_data() {
    let z = table(mixture(5, 2_000, &[(1.0, 0.7, 2.0)]));
    let config = FdrConfig {
        null_mode: NullMode::Theoretical,
        ..FdrConfig::default()
    };
    let r = analyze(&z, config).unwrap();
    assert_eq!((r.null.mean, r.null.sd), (0.0, 1.0));
}

#[test]
fn separated_alternative_is_labeled() {
    let z = table(mixture(6, 10_000, &[(0.9, 0.0, 1.0), (0.1, 4.0, 0.5)]));
    let r = analyze(&z, FdrConfig::default()).unwrap();
    for e in &r.entries {
        if e.z > 3.5 {
            assert!(e.fdr < 0.01, "z {} fdr {}", e.z, e.fdr);
        }
        if e.z.abs() < 1.0 {
            assert!(e.fdr > 0.5, "z {} fdr {}", e.z, e.fdr);
        }
    }
}

#[test]
fn fdr_bounds_the_posterior_null_probability() {
    let (p0, alt_mean, alt_sd) = (0.95, 3.0, 1.0);
    let z = table(mixture(7, 200_000, &[(p0, 0.0, 1.0), (1.0 - p0, alt_mean, alt_sd)]));
    // The generating null is used so that only the dropped p0 factor and the
    // density estimate separate fdr from the posterior.
    let config = FdrConfig {
        null_mode: NullMode::Theoretical,
        ..FdrConfig::default()
    };
    let r = analyze(&z, config).unwrap();
    // With exact densities fdr >= posterior holds outright. The fitted f is
    // off by a few percent around z = 2 and overshoots in the far lower tail,
    // which the allowance and the cut at -2.5 absorb.
    let mut worst: f64 = 0.0;
    for e in r.entries.iter().filter(|e| e.z >= -2.5) {
        let null = p0 * normal_pdf(e.z, 0.0, 1.0);
        let posterior = null / (null + (1.0 - p0) * normal_pdf(e.z, alt_mean, alt_sd));
        worst = worst.max(posterior - e.fdr_raw);
    }
    assert!(worst <= 0.1, "fdr falls {worst} below the posterior");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn labels_are_monotone_within_each_tail(seed in any::<u64>(), share in 0.0f64..0.1) {
        let z = table(mixture(seed, 3_000, &[(1.0 - share, 0.0, 1.0), (share, 3.5, 0.7)]));
        let r = analyze(&z, FdrConfig::default()).unwrap();
        let center = r.null.mean;
        for a in &r.entries {
            if !a.significant {
                continue;
            }
            for b in &r.entries {
                let further = if a.z >= center { b.z >= a.z } else { b.z <= a.z };
                if further {
                    prop_assert!(b.significant, "{} significant but {} not", a.z, b.z);
                }
            }
        }
    }
}
