use dkp_elliptic::hodograph::{self, TGrid, DEFAULT_K, DEFAULT_SLOPE};
use dkp_elliptic::loewner::{integrate_field, Scenario};
use dkp_elliptic::metric::faber_speeds;

fn small() -> Scenario {
    let mut sc = Scenario::default_n2();
    sc.grid.extent = 3;
    sc
}

#[test]
fn scenario_json_round_trip() {
    for sc in [Scenario::default_n2(), Scenario::default_n3()] {
        let text = serde_json::to_string(&sc).unwrap();
        assert!(text.contains("\"N\""));
        assert_eq!(Scenario::from_json(&text).unwrap(), sc);
    }
    assert!(Scenario::by_name("nope").is_err());
}

#[test]
fn scenario_validation_rejects_bad_grids() {
    let mut sc = small();
    sc.grid.extent = 4;
    assert!(sc.validate().is_err());
    let mut sc = small();
    sc.step = 3e-3;
    assert!(sc.validate().is_err());
    let mut sc = small();
    sc.xi0 = vec![0.3, 0.3];
    assert!(Scenario::from_json(&serde_json::to_string(&sc).unwrap()).is_err());
}

#[test]
fn field_exports() {
    let sc = small();
    let f = integrate_field(&sc, &[0, 1]).unwrap();
    let nodes = f.grid_indices().len();
    assert_eq!(nodes, 9);

    let csv = f.to_csv();
    let mut lines = csv.lines();
    let head: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&head[..3], &["lambda1", "lambda2", "tau_im"]);
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), nodes);
    assert!(rows.iter().all(|r| r.len() == head.len()));
    assert!(rows.iter().all(|r| r.iter().all(|x| x.parse::<f64>().is_ok())));

    let json = f.to_json();
    let text = serde_json::to_string(&json).unwrap();
    let back: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(back, json);
}

#[test]
fn faber_and_time_point_tables() {
    let f = integrate_field(&small(), &[0, 1]).unwrap();
    let g = f.centre();
    let table = faber_speeds(&f.laurent(&g), &f.state(&g), DEFAULT_K).unwrap();
    let csv = table.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("j,k,phi"));
    let rows: Vec<(usize, usize, f64)> = lines
        .map(|l| {
            let p: Vec<&str> = l.split(',').collect();
            (p[0].parse().unwrap(), p[1].parse().unwrap(), p[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 2 * (DEFAULT_K + 1));
    assert!(rows.iter().filter(|r| r.1 == 0).all(|r| r.2 == 1.0));

    let grid = TGrid::default_for(2, DEFAULT_K);
    let sym = hodograph::manufactured_symmetry(&f, &grid.centre, &[DEFAULT_SLOPE; 2]).unwrap();
    let st = hodograph::TStencil::solve(&f, &sym, &grid).unwrap();
    let csv = hodograph::time_points_csv(&st.points());
    let head = csv.lines().next().unwrap();
    assert_eq!(head, "t0,t1,t2,t3,t4,t5,t6,lambda1,lambda2,iters");
    assert_eq!(csv.lines().count(), 1 + st.points().len());
}
