use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;

use lpradon::container::{Container, ContainerKind, Dtype, Header, Payload};
use lpradon::em::{default_initial, em_step, EmState};
use lpradon::filters::{apply_filter, make_filter_padded, FilterKind};
use lpradon::geometry::{
    map_s, map_s_inv, map_t, map_t_inv, min_n_rho, sampling_plan, sector_constants,
    sector_residual, theta_to_sector,
};
use lpradon::lp_ops::{fast_backprojection, fast_radon, RadonPlan};
use lpradon::oracle::{direct_backprojection, direct_radon};
use lpradon::raster::{relative_l2, Raster};
use lpradon::spline::{bspline, bspline_weights, prefilter_2d, Boundary};

fn plan32() -> &'static RadonPlan {
    static PLAN: OnceLock<RadonPlan> = OnceLock::new();
    PLAN.get_or_init(|| RadonPlan::new(sampling_plan(32, 3).unwrap()))
}

fn field(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

fn combine(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(p, q)| a * p + b * q).collect()
}

fn image32(d: Vec<f64>) -> Raster {
    Raster::from_vec(plan32().geometry.image_grid(), d).unwrap()
}

fn sino32(d: Vec<f64>) -> Raster {
    Raster::from_vec(plan32().geometry.sinogram_grid(), d).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn weights_sum_to_one(a in 0.0f64..1.0) {
        let s: f64 = bspline_weights(a).iter().sum();
        prop_assert!((s - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn weights_are_shifted_bsplines(a in 0.0f64..1.0) {
        let w = bspline_weights(a);
        for (i, wi) in w.iter().enumerate() {
            prop_assert!((wi - bspline(a - 2.0 + i as f64)).abs() < 1e-14);
        }
    }

    #[test]
    fn filter_weights_even(n_s in 4usize..200, pad in 1usize..4, k in 0usize..3) {
        let f = make_filter_padded(FilterKind::ALL[k], n_s, pad).unwrap();
        let l = f.padded_len();
        for i in 1..l {
            prop_assert_eq!(f.weights[i], f.weights[l - i]);
            if 2 * i != l {
                prop_assert_eq!(f.sigma(i), -f.sigma(l - i));
            }
        }
    }

    #[test]
    fn map_t_roundtrip(m_sec in 3usize..9, m in 0usize..9, x1 in -1.0f64..1.0, x2 in -1.0f64..1.0) {
        let c = sector_constants(m_sec).unwrap();
        let m = m % m_sec;
        let y = map_t(&c, m, [x1, x2]);
        let x = map_t_inv(&c, m, y);
        prop_assert!((x[0] - x1).abs() < 1e-12 && (x[1] - x2).abs() < 1e-12);
    }

    #[test]
    fn map_s_roundtrip(m_sec in 3usize..9, m in 0usize..9, phi_frac in -0.5f64..0.5, s in -1.0f64..1.0) {
        let c = sector_constants(m_sec).unwrap();
        let m = m % m_sec;
        let theta = m as f64 * c.beta + phi_frac * c.beta;
        let (phi, rho) = map_s(&c, m, theta, s).unwrap();
        let (t2, s2) = map_s_inv(&c, m, phi, rho);
        prop_assert!((t2 - theta).abs() < 1e-12);
        prop_assert!((s2 - s).abs() < 1e-10);
    }

    #[test]
    fn sector_lines_land_in_rho_band(
        m_sec in 3usize..9,
        m in 0usize..9,
        r in 0.0f64..0.999,
        ang in 0.0f64..(2.0 * PI),
        phi_frac in -0.5f64..0.5,
    ) {
        let c = sector_constants(m_sec).unwrap();
        let m = m % m_sec;
        let x = [r * ang.cos(), r * ang.sin()];
        let theta = m as f64 * c.beta + phi_frac * c.beta;
        let s = x[0] * theta.cos() + x[1] * theta.sin();
        let (_, rho) = map_s(&c, m, theta, s).unwrap();
        prop_assert!(rho <= 1e-12 && rho >= c.a_inner.ln() - 1e-12, "rho {}", rho);
    }

    #[test]
    fn rho_sampling_bounds(half_n in 8usize..300, m in 3usize..9) {
        let n = 2 * half_n;
        let c = sector_constants(m).unwrap();
        let nr = min_n_rho(n, &c);
        let drho = -c.a_inner.ln() / nr as f64;
        prop_assert!((drho * nr as f64).exp() >= 1.0 / c.a_inner * (1.0 - 1e-12));
        prop_assert!(drho.exp() <= 1.0 / (1.0 - 2.0 * c.a_scale / n as f64));
    }

    #[test]
    fn sectors_partition_half_circle(theta in 0.0f64..PI, m in 3usize..9) {
        let beta = PI / m as f64;
        let k = theta_to_sector(theta, m);
        let r = sector_residual(theta, m);
        prop_assert!(k < m);
        prop_assert!(r >= -beta / 2.0 - 1e-12 && r < beta / 2.0 + 1e-12);
        let centre = theta - r;
        let q = (centre / beta).round();
        prop_assert!((centre - q * beta).abs() < 1e-9);
        prop_assert_eq!((q as i64).rem_euclid(m as i64) as usize, k);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interpolation_condition(data in field(12 * 12), r in 2usize..10, c in 2usize..10) {
        let grid = sampling_plan(16, 3).unwrap().image_grid();
        let grid = lpradon::geometry::GridSpec { rows: 12, cols: 12, ..grid };
        let sc = prefilter_2d(&data, grid, Boundary::Mirror).unwrap();
        let v = sc.eval(r as f64, c as f64).unwrap();
        prop_assert!((v - data[r * 12 + c]).abs() < 1e-6);
    }

    #[test]
    fn two_lookups_match_sixteen_taps(data in field(10 * 14), u in 0.0f64..10.0, v in 0.0f64..14.0) {
        let grid = sampling_plan(16, 3).unwrap().image_grid();
        let grid = lpradon::geometry::GridSpec { rows: 10, cols: 14, ..grid };
        let sc = prefilter_2d(&data, grid, Boundary::Periodic).unwrap();
        let fast = sc.eval(u, v).unwrap();
        let (ku, kv) = (u.floor() as isize, v.floor() as isize);
        let mut direct = 0.0;
        for i in ku - 1..=ku + 2 {
            for j in kv - 1..=kv + 2 {
                let c = sc.values[(i.rem_euclid(10) * 14 + j.rem_euclid(14)) as usize];
                direct += c * bspline(u - i as f64) * bspline(v - j as f64);
            }
        }
        prop_assert!((fast - direct).abs() < 1e-6);
    }

    #[test]
    fn container_roundtrip(rows in 1usize..20, cols in 1usize..20, complex in any::<bool>(), seed in any::<u64>()) {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            f32::from_bits((state >> 32) as u32)
        };
        let grid = lpradon::geometry::GridSpec { rows, cols, ..sampling_plan(16, 3).unwrap().image_grid() };
        let (dtype, payload) = if complex {
            (Dtype::C32, Payload::Complex((0..rows * cols).map(|_| num_complex::Complex32::new(next(), next())).collect()))
        } else {
            (Dtype::F32, Payload::Real((0..rows * cols).map(|_| next()).collect()))
        };
        let c = Container {
            header: Header { kind: ContainerKind::Spectrum, rows, cols, dtype, grid, meta: Default::default() },
            payload,
        };
        let bytes = c.to_bytes().unwrap();
        let back = Container::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes().unwrap(), bytes);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fast_radon_is_linear(x in field(32 * 32), y in field(32 * 32), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let p = plan32();
        let lhs = fast_radon(&image32(combine(a, &x, b, &y)), p).unwrap();
        let rx = fast_radon(&image32(x), p).unwrap();
        let ry = fast_radon(&image32(y), p).unwrap();
        let rhs = combine(a, &rx.data, b, &ry.data);
        prop_assert!(relative_l2(&lhs.data, &rhs) <= 1e-6);
    }

    #[test]
    fn fast_backprojection_is_linear(x in field(48 * 32), y in field(48 * 32), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let p = plan32();
        let lhs = fast_backprojection(&sino32(combine(a, &x, b, &y)), p).unwrap();
        let bx = fast_backprojection(&sino32(x), p).unwrap();
        let by = fast_backprojection(&sino32(y), p).unwrap();
        let rhs = combine(a, &bx.data, b, &by.data);
        prop_assert!(relative_l2(&lhs.data, &rhs) <= 1e-6);
    }

    #[test]
    fn oracles_are_linear(x in field(32 * 32), y in field(32 * 32), s in field(48 * 32), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let g = &plan32().geometry;
        let sg = g.sinogram_grid();
        let lhs = direct_radon(&image32(combine(a, &x, b, &y)), sg);
        let rx = direct_radon(&image32(x.clone()), sg);
        let ry = direct_radon(&image32(y), sg);
        prop_assert!(relative_l2(&lhs.data, &combine(a, &rx.data, b, &ry.data)) <= 1e-12);
        let s2 = combine(b, &s, a, &x.iter().cycle().take(s.len()).copied().collect::<Vec<_>>());
        let lhs = direct_backprojection(&sino32(combine(a, &s, b, &s2)), g.image_grid());
        let bs = direct_backprojection(&sino32(s), g.image_grid());
        let bs2 = direct_backprojection(&sino32(s2), g.image_grid());
        prop_assert!(relative_l2(&lhs.data, &combine(a, &bs.data, b, &bs2.data)) <= 1e-12);
    }

    #[test]
    fn em_keeps_estimates_nonnegative(g in prop::collection::vec(0.0f64..5.0, 48 * 32)) {
        let p = plan32();
        let g = sino32(g);
        let mut st = EmState::new(p, default_initial(p)).unwrap();
        for _ in 0..3 {
            st = em_step(st, &g, p).unwrap();
            prop_assert!(st.estimate.data.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn filtering_commutes_with_row_scaling(x in field(48 * 32), a in -3.0f64..3.0) {
        let f = make_filter_padded(FilterKind::SheppLogan, 32, 2).unwrap();
        let s = sino32(x.clone());
        let fs = apply_filter(&s, &f).unwrap();
        let fa = apply_filter(&sino32(x.iter().map(|v| a * v).collect()), &f).unwrap();
        let scaled: Vec<f64> = fs.data.iter().map(|v| a * v).collect();
        prop_assert!(relative_l2(&fa.data, &scaled) <= 1e-12 || a.abs() < 1e-12);
    }
}
