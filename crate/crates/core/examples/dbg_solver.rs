use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn draw(rng: &mut ChaCha8Rng) -> usize {
    let _team = rng.gen_range(0..2u8);
    let step = rng.gen_range(0..50u32);
    let cell = rng.gen_range(0..20u32);
    (step * 20 + cell) as usize
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn main() {
    let n = 10_000u64;
    // (a) consecutive seeds straight into seed_from_u64
    let mut counts = vec![0u32; 1000];
    for s in 0..n {
        counts[draw(&mut ChaCha8Rng::seed_from_u64(s))] += 1;
    }
    println!("direct:   max={}", counts.iter().max().unwrap());
    // (b) splitmix-hashed seeds
    let mut counts = vec![0u32; 1000];
    for s in 0..n {
        counts[draw(&mut ChaCha8Rng::seed_from_u64(splitmix(s)))] += 1;
    }
    println!("splitmix: max={}", counts.iter().max().unwrap());
    // (c) different base offsets of consecutive seeds
    for base in [1_000_000u64, 42_424_242, 777] {
        let mut counts = vec![0u32; 1000];
        for s in 0..n {
            counts[draw(&mut ChaCha8Rng::seed_from_u64(base + s))] += 1;
        }
        println!("base {base}: max={}", counts.iter().max().unwrap());
    }
}
