//! Proximal maps and the Bregman loss they induce.

use ndarray::{arr1, Array3};
use sourceforge::functionals::{bregman_loss, group_soft_threshold, soft_threshold, ProxFunctional};

fn main() {
    let z = arr1(&[-2.0, -0.5, 0.0, 0.3, 1.5]);
    println!("z             = {z}");
    println!("shrink(z, 1)  = {}", soft_threshold(&z, 1.0));

    let field = Array3::from_shape_vec((1, 2, 2), vec![3.0, 4.0, 0.3, 0.4]).unwrap();
    let g = group_soft_threshold(&field, 1.0);
    println!("group shrink of (3,4) and (0.3,0.4) by 1: {:?}", g.iter().collect::<Vec<_>>());

    // B_J(u, u + s) vanishes exactly when s is a subgradient of J at u
    let j = ProxFunctional::l1(1.0);
    let u = arr1(&[1.0, 0.0, -2.0]);
    for s in [arr1(&[1.0, 0.5, -1.0]), arr1(&[1.0, 1.5, -1.0]), arr1(&[0.0, 0.0, 0.0])] {
        let p = &u + &s;
        println!("s = {s}: B_J(u, u + s) = {:.6}", bregman_loss(&j, u.view(), p.view()));
    }
}
