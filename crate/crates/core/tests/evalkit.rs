use proptest::prelude::*;
use rotman::evalkit::{column_errors, interval_errors, mae, maev, TimingStats};
use rotman::posegen::{AngleRange, Axis, EulerPose};

fn poses(n: usize) -> impl Strategy<Value = Vec<EulerPose<f64>>> {
    prop::collection::vec(
        (-50.0f64..=50.0, -40.0f64..=40.0, -30.0f64..=30.0).prop_map(|(y, p, r)| EulerPose::new(y, p, r)),
        n,
    )
}

fn pair() -> impl Strategy<Value = (Vec<EulerPose<f64>>, Vec<EulerPose<f64>>)> {
    (1usize..60).prop_flat_map(|n| (poses(n), poses(n)))
}

proptest! {
    #[test]
    fn identical_lists_have_zero_error(p in (1usize..40).prop_flat_map(poses)) {
        prop_assert_eq!(maev(&p, &p).unwrap().mean, 0.0);
        prop_assert_eq!(mae(&p, &p).unwrap().mean, 0.0);
    }

    #[test]
    fn errors_are_symmetric_and_bounded((a, b) in pair()) {
        let ab = maev(&a, &b).unwrap();
        let ba = maev(&b, &a).unwrap();
        prop_assert!((ab.mean - ba.mean).abs() < 1e-9);
        prop_assert!(ab.mean >= 0.0 && ab.mean <= 180.0);
        prop_assert_eq!(mae(&a, &b).unwrap(), mae(&b, &a).unwrap());
    }

    #[test]
    fn column_angle_never_exceeds_the_summed_euler_offsets(a in poses(1), b in poses(1)) {
        // each column moves by at most |Δyaw| + |Δpitch| + |Δroll| (triangle inequality on SO(3))
        let e = column_errors(&a[0], &b[0]);
        let bound = (a[0].yaw - b[0].yaw).abs() + (a[0].pitch - b[0].pitch).abs() + (a[0].roll - b[0].roll).abs();
        prop_assert!(e.iter().all(|&v| v <= bound + 1e-9));
    }

    #[test]
    fn interval_tables_aggregate_to_the_global_mae((preds, gts) in pair(), bins in 1usize..10) {
        let global = mae(&preds, &gts).unwrap();
        for (axis, range, g) in [
            (Axis::Yaw, AngleRange { min: -50.0, max: 50.0 }, global.yaw),
            (Axis::Pitch, AngleRange { min: -40.0, max: 40.0 }, global.pitch),
            (Axis::Roll, AngleRange { min: -30.0, max: 30.0 }, global.roll),
        ] {
            let t = interval_errors(&preds, &gts, axis, range, bins).unwrap();
            prop_assert_eq!(t.total(), preds.len());
            prop_assert!((t.weighted_mae().unwrap() - g).abs() <= 1e-12);
            for b in &t.bins {
                prop_assert_eq!(b.mae.is_none(), b.count == 0);
            }
        }
    }

    #[test]
    fn timing_order_statistics_are_ordered(d in prop::collection::vec(1e-6f64..1e-1, 1..200)) {
        let t = TimingStats::from_durations(&d).unwrap();
        let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = d.iter().cloned().fold(0.0, f64::max);
        prop_assert!(lo <= t.median && t.median <= t.p95 && t.p95 <= hi);
        prop_assert!(lo <= t.mean && t.mean <= hi);
    }
}

#[test]
fn ten_degree_yaw_error_from_frontal() {
    let e = column_errors(&EulerPose::new(10.0, 0.0, 0.0), &EulerPose::new(0.0, 0.0, 0.0));
    assert!((e[0] - 10.0).abs() < 1e-12 && e[1].abs() < 1e-12 && (e[2] - 10.0).abs() < 1e-12);
    let m = maev(&[EulerPose::new(10.0, 0.0, 0.0)], &[EulerPose::new(0.0, 0.0, 0.0)]).unwrap();
    assert!((m.mean - 20.0 / 3.0).abs() < 1e-12);
}

#[test]
fn bin_edges_are_left_closed_with_closed_last_bin() {
    let range = AngleRange { min: -30.0, max: 30.0 };
    let gts = [-30.0, -20.0, 30.0].map(|r| EulerPose::new(0.0, 0.0, r));
    let preds = gts.map(|p| EulerPose::new(0.0, 0.0, p.roll + 1.0));
    let t = interval_errors(&preds, &gts, Axis::Roll, range, 6).unwrap();
    let counts: Vec<usize> = t.bins.iter().map(|b| b.count).collect();
    assert_eq!(counts, [1, 1, 0, 0, 0, 1]);
}
