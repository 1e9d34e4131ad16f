//! Signature micro-benchmarks and test-vector generation.

use std::fmt::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use harpocrates_crypto::proxy::Certificate;
use harpocrates_crypto::vectors::{write_signature_file, KeyFile, SignatureRecord};
use harpocrates_crypto::{
    build_warrant, delegate, keygen, pk_open, pk_seal, proxy_setup, proxy_sign, proxy_verify, schnorr_sign,
    schnorr_verify, Commitment, DelegationBundle, HmacKey, KeyPair, SchnorrGroup, VerificationKeyCache,
};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::engine::stream;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub label: &'static str,
    /// Median microseconds per operation.
    pub micros: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub q_bits: u64,
    pub iterations: usize,
    pub timings: Vec<Timing>,
}

impl BenchReport {
    pub fn get(&self, label: &str) -> f64 {
        self.timings
            .iter()
            .find(|t| t.label == label)
            .unwrap_or_else(|| panic!("no timing {label}"))
            .micros
    }

    pub fn table(&self) -> String {
        let base_sign = self.get("schnorr_sign");
        let base_verify = self.get("schnorr_verify");
        let mut out = format!("# q_bits {} iterations {}\n", self.q_bits, self.iterations);
        let _ = writeln!(out, "{:<28} {:>12} {:>10}", "operation", "us/op", "ratio");
        for t in &self.timings {
            let base = if t.label.contains("verify") { base_verify } else { base_sign };
            let _ = writeln!(out, "{:<28} {:>12.2} {:>10.3}", t.label, t.micros, t.micros / base);
        }
        out
    }
}

/// Delegation fixture: a producer, a proxy and a bundle.
pub struct Fixture {
    pub group: SchnorrGroup,
    pub producer: KeyPair,
    pub bundle: DelegationBundle,
}

pub fn fixture(group: &SchnorrGroup, rng: &mut ChaCha20Rng) -> Fixture {
    let producer = keygen(group, rng);
    let proxy = keygen(group, rng);
    let hmac_key = HmacKey::generate(rng);
    let commitment = Commitment::create(group, &proxy, b"/alice/video".to_vec(), vec![7; 32], hmac_key, rng);
    let cert = Certificate {
        id: b"proxy-cert".to_vec(),
        public_key: proxy.public().clone(),
    };
    let warrant = build_warrant(group, commitment, cert, producer.public().clone()).expect("valid commitment");
    let bundle = delegate(group, &producer, warrant, rng);
    Fixture {
        group: group.clone(),
        producer,
        bundle,
    }
}

/// Median of `samples`.
fn median(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(f64::total_cmp);
    samples[samples.len() / 2]
}

/// Times every primitive; `iterations` calls per operation split over
/// batches.
pub fn run(q_bits: u64, iterations: usize) -> Result<BenchReport> {
    let mut rng = stream(1, "bench");
    let group = if q_bits == 256 {
        SchnorrGroup::default_256()
    } else {
        SchnorrGroup::generate(q_bits, &mut rng)?
    };
    Ok(run_with(&group, iterations, &mut rng))
}

type Op<'a> = (&'static str, Box<dyn FnMut() + 'a>);

/// Operations run round-robin one batch at a time, so every operation
/// samples the same stretches of host speed and the ratios stay comparable
/// on a machine whose speed drifts.
pub fn run_with(group: &SchnorrGroup, iterations: usize, rng: &mut ChaCha20Rng) -> BenchReport {
    let fx = fixture(group, rng);
    let g = &fx.group;
    let mut msg = [0u8; 64];
    rng.fill_bytes(&mut msg);
    let msg = &msg;
    let per_batch = 10usize;
    let rounds = iterations.div_ceil(per_batch).max(3);
    let signer = proxy_setup(g, &fx.bundle, fx.producer.public()).expect("valid bundle");
    let schnorr_sig = schnorr_sign(g, &fx.producer, msg, rng);
    let proxy_sig = proxy_sign(&signer, msg, rng);
    let recipient = keygen(g, rng);
    let body = vec![0u8; 1024];
    let sealed = pk_seal(g, recipient.public(), &body, rng);
    let mut cache = VerificationKeyCache::new();
    let mut fork = || ChaCha20Rng::from_seed(rng.gen());
    let (mut r1, mut r2, mut r3, mut r4, mut r5) = (fork(), fork(), fork(), fork(), fork());
    let (fx, signer, recipient) = (&fx, &signer, &recipient);

    let mut ops: Vec<Op<'_>> = vec![
        ("schnorr_sign", Box::new(|| {
            std::hint::black_box(schnorr_sign(g, &fx.producer, msg, &mut r1));
        })),
        ("schnorr_verify", Box::new(|| assert!(schnorr_verify(g, fx.producer.public(), msg, &schnorr_sig)))),
        ("delegate", Box::new(|| {
            std::hint::black_box(delegate(g, &fx.producer, fx.bundle.warrant.clone(), &mut r2));
        })),
        ("proxy_setup", Box::new(|| {
            std::hint::black_box(proxy_setup(g, &fx.bundle, fx.producer.public()).expect("valid"));
        })),
        ("proxy_sign_unamortized", Box::new(|| {
            let s = proxy_setup(g, &fx.bundle, fx.producer.public()).expect("valid");
            std::hint::black_box(proxy_sign(&s, msg, &mut r3));
        })),
        ("proxy_sign", Box::new(|| {
            std::hint::black_box(proxy_sign(signer, msg, &mut r4));
        })),
        ("proxy_verify_unamortized", Box::new(|| assert!(proxy_verify(g, fx.producer.public(), &proxy_sig)))),
        ("proxy_verify_amortized", Box::new(|| assert!(cache.verify(g, fx.producer.public(), &proxy_sig)))),
        ("pk_seal_1KiB", Box::new(|| {
            std::hint::black_box(pk_seal(g, recipient.public(), &body, &mut r5));
        })),
        ("pk_open_1KiB", Box::new(|| {
            std::hint::black_box(pk_open(g, recipient.private(), &sealed).expect("own ciphertext"));
        })),
    ];
    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(rounds); ops.len()];
    for _ in 0..rounds {
        for (op, out) in ops.iter_mut().zip(&mut samples) {
            let t = Instant::now();
            for _ in 0..per_batch {
                (op.1)();
            }
            out.push(t.elapsed().as_secs_f64() * 1e6 / per_batch as f64);
        }
    }
    let medians: Vec<(&'static str, f64)> = ops.iter().map(|o| o.0).zip(samples.into_iter().map(median)).collect();
    let get = |label: &str| medians.iter().find(|m| m.0 == label).expect("timed").1;
    // One setup spread over `iterations` signatures.
    let amortized = get("proxy_sign") + get("proxy_setup") / iterations.max(1) as f64;
    let mut timings: Vec<Timing> = medians
        .iter()
        .filter(|m| m.0 != "proxy_sign")
        .map(|&(label, micros)| Timing { label, micros })
        .collect();
    let at = timings.iter().position(|t| t.label == "proxy_sign_unamortized").expect("timed") + 1;
    timings.insert(
        at,
        Timing {
            label: "proxy_sign_amortized",
            micros: amortized,
        },
    );
    BenchReport {
        q_bits: g.q().bits(),
        iterations,
        timings,
    }
}

/// Writes `keys.txt` and `signatures.txt` into `dir`.
pub fn write_vectors(dir: &Path, q_bits: u64, count: usize, seed: u64) -> Result<Vec<PathBuf>> {
    let mut rng = stream(seed, "vectors");
    let group = if q_bits == 256 {
        SchnorrGroup::default_256()
    } else {
        SchnorrGroup::generate(q_bits, &mut rng)?
    };
    std::fs::create_dir_all(dir)?;
    let key = keygen(&group, &mut rng);
    let keys = dir.join("keys.txt");
    std::fs::write(&keys, KeyFile::new(group.clone(), &key).to_text())?;
    let records: Vec<SignatureRecord> = (0..count)
        .map(|i| SignatureRecord::generate(&group, format!("message {i}").as_bytes(), &mut rng))
        .collect::<std::result::Result<_, _>>()?;
    let sigs = dir.join("signatures.txt");
    std::fs::write(&sigs, write_signature_file(&records))?;
    Ok(vec![keys, sigs])
}
