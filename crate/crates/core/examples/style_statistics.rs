//! Region statistics, the box-to-cell partition and AdaIN restyling.

use styleforge::io::{AnnotationSet, BoundingBox, FeatureMap};
use styleforge::stats::{adain, build_partition, region_stats, split, Epsilon, Region, StyleKind};

fn main() -> styleforge::Result<()> {
    let fm = FeatureMap::from_fn(2, 4, 4, |c, y, x| (c * 16 + y * 4 + x) as f32 * 0.5)?;
    let eps = Epsilon::DEFAULT;

    let whole = region_stats(&fm, Region::Full, eps)?;
    println!("whole map: mu {:?} sigma {:?}", whole.mu, whole.sigma);

    // A 16x16 image with two boxes, seen through a 4x4 feature grid.
    let ann = AnnotationSet::new(1, "demo.png", 16, 16).with_boxes([
        BoundingBox::new(1.0, 1.0, 5.0, 5.0),
        BoundingBox::new(10.0, 9.0, 3.0, 2.0),
    ]);
    let part = build_partition(&ann, (16, 16), (4, 4));
    println!("partition: {}", part.to_debug_json());

    let patches = split(&fm, &part)?;
    let back = patches[0].stats(eps, StyleKind::Background)?;
    let obj = patches[1].stats(eps, StyleKind::Object)?;
    println!("background: mu {:?} sigma {:?}", back.mu, back.sigma);
    println!("object 1:   mu {:?} sigma {:?}", obj.mu, obj.sigma);

    let restyled = adain(&patches[1], &obj, &back)?;
    let after = restyled.stats(eps, StyleKind::Object)?;
    println!(
        "object 1 restyled to background: mu {:?} sigma {:?}",
        after.mu, after.sigma
    );
    Ok(())
}
