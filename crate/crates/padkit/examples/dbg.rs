use padkit::quadform::*;
use padkit::measure::*;
fn main() {
    let p = 3u64;
    let g = weighted_plane_grid(p, 4, padkit::Q::new(0,1));
    let total: padkit::C64 = g.masses.iter().sum();
    println!("plane grid total mass: {total}");
    let u = unary_grid(p, 4);
    let tu: padkit::C64 = u.masses.iter().sum();
    println!("unary grid total mass: {tu}");
    let q = QuadSpace::new(p, 2).unwrap();
    let f = pushforward_unit_lattice(&q, 4).unwrap();
    println!("pf mass: {:?}", f.integrate(Region::All).unwrap());
    for piece in f.step.pieces.iter().take(8) {
        println!("{:?} dens {}", piece.ball, piece.density);
    }
}
