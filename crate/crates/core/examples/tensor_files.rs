//! Writes and reads the binary tensor format and the CSV formats, and
//! dumps the bytes of a 2×2 image.
//!
//! cargo run --release --example tensor_files
use spotdeconv::cli::codec::{self, Tensor};
use spotdeconv::detection::Detection;
use spotdeconv::{DetectionList, GroundTruth, Image, Volume};

fn main() -> spotdeconv::Result<()> {
    let dir = std::env::temp_dir().join("spotdeconv-tensor-files");
    std::fs::create_dir_all(&dir)?;

    let img = Image::new(2, 2, vec![1.0, 2.0, 3.0, 4.0])?;
    let bytes = codec::encode_image(&img);
    println!("2x2 image: {} bytes", bytes.len());
    for chunk in bytes.chunks(12) {
        let hex: Vec<String> = chunk.iter().map(|b| format!("{b:02x}")).collect();
        println!("  {}", hex.join(" "));
    }

    let vol = Volume::from_fn(3, 4, 2, |m, n, k| (m * 100 + n * 10 + k) as f64 / 7.0);
    let path = dir.join("vol.f64t");
    codec::write_volume(&path, &vol)?;
    match codec::read_tensor(&path)? {
        Tensor::Volume(v) => println!("volume {:?} round trip exact: {}", v.shape(), v == vol),
        Tensor::Image(_) => unreachable!("wrote a volume"),
    }

    let csv = codec::image_to_csv(&img);
    print!("image as CSV:\n{csv}");
    assert_eq!(codec::parse_image_csv(&csv)?, img);

    let dets = DetectionList::new(vec![
        Detection {
            row: 3.0,
            col: 4.5,
            pseudo_likelihood: 0.8,
        },
        Detection {
            row: 10.0,
            col: 2.0,
            pseudo_likelihood: 1.7,
        },
    ]);
    print!("detections CSV:\n{}", codec::detections_to_csv(&dets)?);
    let gt = GroundTruth::from_coords(&[(3.0, 4.0), (10.0, 2.0)])?;
    print!("ground-truth CSV:\n{}", codec::ground_truth_to_csv(&gt)?);

    let mut broken = bytes.clone();
    broken.truncate(50);
    println!(
        "decoding 50 of 60 bytes: {}",
        codec::decode_tensor(&broken).unwrap_err()
    );
    broken = bytes;
    broken[4] = 2;
    println!("decoding version 2: {}", codec::decode_tensor(&broken).unwrap_err());
    Ok(())
}
