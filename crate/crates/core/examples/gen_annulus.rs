//! Regenerates the bundled annulus meshes: `cargo run --example gen_annulus [dir]`.

use hipdg::mesh::{write_mesh, Shape};
use hipdg::study::{annulus_file_name, annulus_mesh};

fn main() -> hipdg::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data").to_string());
    std::fs::create_dir_all(&dir).map_err(|e| hipdg::Error::Io {
        path: dir.clone().into(),
        source: e,
    })?;
    for n in [4, 8, 16, 32, 64] {
        let mesh = annulus_mesh(n, Shape::Tri)?;
        let path = std::path::Path::new(&dir).join(annulus_file_name(n));
        write_mesh(&mesh, &path)?;
        println!("{} ({} elements)", path.display(), mesh.n_elements());
    }
    Ok(())
}
