//! NPY tensors and raw interleaved RGB buffers.

use styleforge::color::{permute_interleaved, ChannelPermutation};
use styleforge::io::{load_tensor, save_tensor, FeatureMap};

fn main() -> styleforge::Result<()> {
    let fm = FeatureMap::from_fn(3, 2, 4, |c, y, x| c as f32 + 0.1 * (y * 4 + x) as f32)?;
    let path = std::env::temp_dir().join("styleforge_tensor_example.npy");
    save_tensor(&fm, &path)?;
    let back = load_tensor(&path)?;
    println!(
        "{} -> {:?}, bit-identical {}",
        path.display(),
        back.dims(),
        back.bit_eq(&fm)
    );

    let mut pixels = vec![10u8, 20, 30, 40, 50, 60];
    permute_interleaved(&mut pixels, ChannelPermutation::new([2, 1, 0])?)?;
    println!("BGR view of two pixels: {pixels:?}");
    Ok(())
}
