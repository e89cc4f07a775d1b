use approx::assert_relative_eq;
use proptest::prelude::*;

use wienerlab::frac_calc::{gls_integral, holder_norm};
use wienerlab::gauss_sim::{simulate, GaussianModel};
use wienerlab::path::{read_paths_csv, write_paths_csv};
use wienerlab::pricing::{sample_kernel, ThetaSpec};
use wienerlab::strategy::{g_nu, g_nu_prime, holder_budget, LemmaCase};
use wienerlab::utility::{optimal_profile_power, UtilitySpec};
use wienerlab::GridFunction;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smoothed_abs_is_sandwiched(x in -10.0f64..10.0, nu in 1e-8f64..1.0) {
        let g = g_nu(x, nu);
        prop_assert!(g <= x.abs() + 1e-15);
        prop_assert!(g >= x.abs() - nu - 1e-15);
        prop_assert!(g_nu_prime(x, nu).abs() < 1.0);
        prop_assert!(g_nu_prime(x, nu) * x >= 0.0);
    }

    #[test]
    fn marginal_inverts(x in 0.01f64..50.0, beta in 0.1f64..3.0, gamma in 0.05f64..0.95) {
        for u in [UtilitySpec::Exponential { beta }, UtilitySpec::Power { gamma }, UtilitySpec::Log] {
            let y = u.marginal(x);
            assert_relative_eq!(u.inverse_marginal(y), x, max_relative = 1e-9);
        }
    }

    #[test]
    fn gls_is_linear_in_integrand(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
        let g = simulate(&GaussianModel::fbm(0.7, 1.0).unwrap(), 64, 1, seed).unwrap().remove(0).to_grid();
        let f1 = GridFunction::from_fn(1.0, 64, |t| (2.0 * t).sin());
        let f2 = GridFunction::from_fn(1.0, 64, |t| t * t);
        let mix = GridFunction::from_fn(1.0, 64, |t| a * (2.0 * t).sin() + b * t * t);
        let lhs = gls_integral(&mix, &g, 0.35).unwrap();
        let rhs = a * gls_integral(&f1, &g, 0.35).unwrap() + b * gls_integral(&f2, &g, 0.35).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn holder_norm_is_absolutely_homogeneous(c in -5.0f64..5.0) {
        let f = GridFunction::from_fn(1.0, 128, |t| (5.0 * t).cos() - t);
        let cf = GridFunction::from_fn(1.0, 128, |t| c * ((5.0 * t).cos() - t));
        let n = holder_norm(&f, 0.3, 1.0).unwrap();
        assert_relative_eq!(holder_norm(&cf, 0.3, 1.0).unwrap(), c.abs() * n, max_relative = 1e-12, epsilon = 1e-300);
    }

    #[test]
    fn power_profile_scales_with_wealth(w in 0.1f64..10.0, gamma in 0.1f64..0.6) {
        let k = sample_kernel(
            &ThetaSpec::constant(0.3, 1.0).unwrap(),
            &simulate(&GaussianModel::wiener(1.0).unwrap(), 8, 200, 42).unwrap(),
        )
        .unwrap();
        let unit = optimal_profile_power(gamma, 1.0, &k).unwrap();
        let scaled = optimal_profile_power(gamma, w, &k).unwrap();
        for (a, b) in unit.x_star.iter().zip(&scaled.x_star) {
            assert_relative_eq!(*b, w * a, max_relative = 1e-12);
        }
        prop_assert!(scaled.budget_residual <= 1e-12 * w.max(1.0));
    }

    #[test]
    fn admissibility_tracks_theta_order(lambda in 0.01f64..2.0, h1 in 0.55f64..0.95, frac in 0.01f64..1.0) {
        let lo = 2.0 * h1 - 1.0;
        let h2 = lo + frac * (h1 - lo);
        prop_assume!(h2 > lo && h2 <= h1);
        let b = holder_budget(lambda, LemmaCase::I, h1, h2).unwrap();
        prop_assert_eq!(b.admissible, lambda * b.theta_order > b.h3);
    }

    #[test]
    fn path_csv_round_trips(values in proptest::collection::vec(-1e6f64..1e6, 2..40)) {
        let n = values.len() - 1;
        let mut f = GridFunction::from_fn(2.0, n, |_| 0.0);
        f.values = values;
        let mut buf = Vec::new();
        write_paths_csv(&mut buf, &[f.clone(), f.clone()]).unwrap();
        let back = read_paths_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), 2);
        prop_assert_eq!(&back[1].1, &f);
    }
}
