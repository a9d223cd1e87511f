use nullcone::curves::{null_length, validate};
use nullcone::metricspace::FinitePointCloud;
use nullcone::nulldist::{estimate, write_estimates_csv};
use nullcone::{Error, EstimateOptions, PiecewiseCausalCurve, Point, Spacetime, Spatial, TimeExpr, TimeFunctionHandle};

fn torus() -> Spacetime {
    Spacetime::grw(TimeExpr::T, Spatial::FlatTorus(vec![1.0, 1.0])).unwrap()
}

#[test]
fn witness_survives_json_and_revalidates() {
    let st = torus();
    let tau = TimeFunctionHandle::coordinate_t();
    let (p, q) = (Point::new(vec![0.8, 0.1, 0.2]), Point::new(vec![1.1, 0.7, 0.9]));
    let e = estimate(&st, &tau, &p, &q, &EstimateOptions::default()).unwrap();
    let back = PiecewiseCausalCurve::from_json(&e.witness.to_json()).unwrap();
    assert_eq!(back, e.witness);
    assert!(validate(&st, &back, 1e-9).pass);
    assert!((null_length(&tau, &back).unwrap() - e.upper).abs() < 1e-12);
    assert_eq!(back.start(), Some(&p));
    assert_eq!(back.end(), Some(&q));
}

#[test]
fn estimates_feed_a_point_cloud() {
    let st = torus();
    let tau = TimeFunctionHandle::coordinate_t();
    let pts: Vec<Point> = (0..5)
        .map(|i| Point::new(vec![0.5, 0.2 * i as f64, 0.1 * i as f64]))
        .collect();
    let n = pts.len();
    let mut dist = vec![vec![0.0; n]; n];
    let mut rows = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let e = estimate(&st, &tau, &pts[i], &pts[j], &Default::default()).unwrap();
                dist[i][j] = e.upper;
                if i < j {
                    rows.push((pts[i].clone(), pts[j].clone(), e));
                }
            }
        }
    }
    let labels = (0..n).map(|i| format!("x{i}")).collect();
    let cloud = FinitePointCloud::from_upper_estimates(labels, dist).unwrap();
    assert!(cloud.caveat().is_some());
    let all: Vec<usize> = (0..n).collect();
    // At t = 0.5 every null distance is at most the slice diameter 0.5·√2/2.
    assert!(cloud.diameter(&all).unwrap() <= 0.5 * 2f64.sqrt() / 2.0 + 1e-3);

    let mut buf = Vec::new();
    cloud.write_csv(&mut buf).unwrap();
    let again = FinitePointCloud::read_csv(buf.as_slice()).unwrap();
    assert_eq!(again.dist(1, 3), cloud.dist(1, 3));

    let mut csv = Vec::new();
    write_estimates_csv(&mut csv, &rows).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 1 + n * (n - 1) / 2);
}

#[test]
fn points_outside_the_spacetime_are_rejected() {
    let st = torus();
    let tau = TimeFunctionHandle::coordinate_t();
    let bad = Point::new(vec![-0.5, 0.0, 0.0]);
    let good = Point::new(vec![0.5, 0.0, 0.0]);
    assert!(estimate(&st, &tau, &bad, &good, &Default::default()).is_err());
    let wrong_dim = Point::new(vec![0.5, 0.0]);
    assert!(matches!(
        estimate(&st, &tau, &wrong_dim, &good, &Default::default()),
        Err(Error::Argument(_))
    ));
}
