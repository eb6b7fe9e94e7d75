//! Points, arcs and lifts on the circle ℝ/ℤ.

use circle_rds::circle::{arc_diameter, cyclic_order, d, d_plus, Arc, CirclePoint, Lift};

fn main() {
    let x = CirclePoint::new(0.1);
    let y = CirclePoint::new(0.8);
    println!("x = {x}, y = {y}");
    println!("d+(x, y) = {}, d+(y, x) = {}", d_plus(x, y), d_plus(y, x));
    println!("d(x, y) = {}", d(x, y));

    // projection forgets the integer part
    println!("project(3.25) = {}", CirclePoint::new(3.25));

    let long = Arc::new(0.0, 0.8);
    println!("arc {long:?}: length {}, diameter {}", long.length(), arc_diameter(&long));
    println!("complement: {:?}", long.complement());

    let order = cyclic_order(CirclePoint::new(0.0), CirclePoint::new(0.3), CirclePoint::new(0.7));
    println!("cyclic order of (0, 0.3, 0.7): {order:?}");

    let lift = Lift::new(0.2);
    let moved = lift.translate(3);
    println!("lift {} translated by 3 is {}, same base: {}", lift.value(), moved.value(), lift.base() == moved.base());
}
