use std::sync::Arc;

use regsub::coupling::{
    dirichlet_energy_2d, product_energy, Component, ProductForm, TensorFunction,
};
use regsub::forms1d::{CoreFunction, Profile};
use regsub::scale::{Interval, ScaleFunction};
use regsub::simulate::{coupled_endpoints, ProductRule};

fn component(s: ScaleFunction) -> Component {
    Component {
        scale: Arc::new(s),
        interval: Interval { lo: 0.0, hi: 1.0 },
    }
}

fn bump(c: &Component, centre: f64, radius: f64) -> CoreFunction {
    CoreFunction::new(Profile::bump(centre, radius, 1.0).unwrap(), c.scale.clone()).unwrap()
}

#[test]
fn product_energy_of_a_fat_cantor_coupling_is_the_planar_brownian_energy() {
    let p = ProductForm::new(vec![
        component(ScaleFunction::identity()),
        component(ScaleFunction::fat_cantor(0.5, 6).unwrap()),
    ])
    .unwrap();
    let c = p.components();
    let u = TensorFunction::new(vec![bump(&c[0], 0.5, 0.3), bump(&c[1], 0.26, 0.2)]).unwrap();
    let e = product_energy(&p, &u, 256).unwrap();
    let fd = dirichlet_energy_2d(&u, 1024).unwrap();
    assert!((e - fd).abs() / e < 1e-3, "{e} vs {fd}");
}

#[test]
fn product_energy_is_quadratic_in_each_factor() {
    let p = ProductForm::new(vec![
        component(ScaleFunction::fat_cantor(0.5, 4).unwrap()),
        component(ScaleFunction::identity()),
    ])
    .unwrap();
    let c = p.components();
    let f = bump(&c[0], 0.25, 0.2);
    let g = bump(&c[1], 0.4, 0.3);
    let g3 = CoreFunction::new(g.profile().clone().scaled(3.0), c[1].scale.clone()).unwrap();
    let e1 = product_energy(&p, &TensorFunction::new(vec![f.clone(), g]).unwrap(), 128).unwrap();
    let e9 = product_energy(&p, &TensorFunction::new(vec![f, g3]).unwrap(), 128).unwrap();
    assert!((e9 - 9.0 * e1).abs() < 1e-12 * e9);
}

#[test]
fn coupled_coordinates_factorise() {
    let comps = [
        ScaleFunction::identity(),
        ScaleFunction::fat_cantor(0.5, 8).unwrap(),
    ];
    let ends = coupled_endpoints(&comps, &[0.5, 0.5], 0.2, 1e-3, None, 2024, 20_000).unwrap();
    let pairs: [(&dyn Fn(f64) -> f64, &dyn Fn(f64) -> f64); 3] = [
        (&|x| f64::from(u8::from(x > 0.5)), &|y| {
            f64::from(u8::from(y > 0.5))
        }),
        (&|x| (x * 3.0).sin(), &|y| f64::from(u8::from(y < 0.3))),
        (&|x| x.clamp(0.0, 1.0), &|y| (y - 0.5).abs().min(1.0)),
    ];
    for (f, g) in pairs {
        let fv: Vec<f64> = ends.iter().map(|r| f(r[0])).collect();
        let gv: Vec<f64> = ends.iter().map(|r| g(r[1])).collect();
        let rule = ProductRule::from_samples(&fv, &gv).unwrap();
        assert!(rule.holds(3.0), "{rule:?}");
    }
}
