use urbanforge::config::load_config;
use urbanforge::pipeline;
use urbanforge::Vec3;
use urbanforge::embodied::segment_free;

fn main() {
    let cfg = load_config(std::path::Path::new("/tmp/smoke/run.toml")).unwrap();
    let grid = pipeline::scene_occupancy(&cfg, 1.0).unwrap();
    let iz = 3;
    for iy in 40..70 {
        let mut row = String::new();
        for ix in 10..45 {
            row.push(if grid.occupied[grid.index(ix, iy, iz)] { '#' } else { '.' });
        }
        println!("{iy:3} {row}");
    }
    // plainly free segment far from any geometry
    let a = Vec3::new(10.0, 20.0, 5.0);
    let b = Vec3::new(20.0, 25.0, 5.0);
    println!("far free segment: {}", segment_free(&grid, a, b));
    let c = Vec3::new(-20.0, 0.0, 1.0);
    let d = Vec3::new(-20.0, 5.0, 1.5);
    println!("near start segment: {}", segment_free(&grid, c, d));
}
