//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::BTreeMap;
use std::time::Instant;

use harpocrates::metrics::RunMetrics;
use harpocrates::sweep::{run_configs, Grid, SweepResult};
use harpocrates::{bench, onion, Mode};
use harpocrates_crypto::proxy::{congruence_holds, delegated_key, verification_key, warrant_digest, Certificate};
use harpocrates_crypto::schnorr::{reconstruct_commitment, response};
use harpocrates_crypto::{
    build_warrant, delegate, hmac_tag, keygen, proxy_setup, proxy_sign, proxy_verify, Commitment, HmacKey,
    ProxySignature, SchnorrGroup, Warrant,
};
use num_bigint::BigUint;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

const GRID: &str = "\
mode = pull, push, hybrid, direct, onion
collab_peers = 20, 40, 60
censor_frac = 0, 0.05, 0.1, 0.2, 0.4, 0.6
seeds = 1..10
";
const PEERS: [usize; 3] = [20, 40, 60];
const CENSORS: [f64; 6] = [0.0, 0.05, 0.1, 0.2, 0.4, 0.6];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn report(id: usize, title: &str, started: Instant, o: &Outcome) {
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    println!(
        "C{id:<2} {verdict} {title}: {} [{:.1} s]",
        o.detail,
        started.elapsed().as_secs_f64()
    );
}

fn tuple(group: &SchnorrGroup, rng: &mut ChaCha20Rng) -> (BigUint, ProxySignature) {
    let producer = keygen(group, rng);
    let proxy = keygen(group, rng);
    let key = HmacKey::generate(rng);
    let mut msg = vec![0u8; rng.gen_range(1..512)];
    rng.fill_bytes(&mut msg);
    let commitment = Commitment::create(group, &proxy, b"/alice/data".to_vec(), hmac_tag(&key, &msg).to_vec(), key, rng);
    let mut id = vec![0u8; 16];
    rng.fill_bytes(&mut id);
    let cert = Certificate {
        id,
        public_key: proxy.public().clone(),
    };
    let warrant = build_warrant(group, commitment, cert, producer.public().clone()).expect("valid commitment");
    let bundle = delegate(group, &producer, warrant, rng);
    let ctx = proxy_setup(group, &bundle, producer.public()).expect("fresh delegation");
    let sig = proxy_sign(&ctx, &msg, rng);
    (producer.public().clone(), sig)
}

fn flip_bit(bytes: &mut [u8], rng: &mut ChaCha20Rng) {
    let i = rng.gen_range(0..bytes.len());
    bytes[i] ^= 1 << rng.gen_range(0..8);
}

fn flip_uint(v: &BigUint, rng: &mut ChaCha20Rng) -> BigUint {
    v ^ (BigUint::from(1u32) << rng.gen_range(0..v.bits().max(1)))
}

fn c1_correctness() -> Outcome {
    let group = SchnorrGroup::default_256();
    let mut rng = ChaCha20Rng::seed_from_u64(0xC1);
    let (mut accepted, mut rejected, mut mutations) = (0, 0, 0);
    for _ in 0..1000 {
        let (pk, sig) = tuple(&group, &mut rng);
        accepted += usize::from(proxy_verify(&group, &pk, &sig));
        let mut variants: Vec<Option<ProxySignature>> = Vec::new();
        let mut m = sig.clone();
        flip_bit(&mut m.message, &mut rng);
        variants.push(Some(m));
        let mut w = sig.warrant.to_bytes();
        flip_bit(&mut w, &mut rng);
        variants.push(Warrant::from_bytes(&w).ok().map(|warrant| ProxySignature { warrant, ..sig.clone() }));
        variants.push(Some(ProxySignature { t: flip_uint(&sig.t, &mut rng), ..sig.clone() }));
        variants.push(Some(ProxySignature { a: flip_uint(&sig.a, &mut rng), ..sig.clone() }));
        variants.push(Some(ProxySignature { b: flip_uint(&sig.b, &mut rng), ..sig.clone() }));
        for v in variants {
            mutations += 1;
            // An undecodable warrant is a rejection.
            rejected += usize::from(v.is_none_or(|s| !proxy_verify(&group, &pk, &s)));
        }
    }
    outcome(
        accepted == 1000 && rejected == mutations,
        format!("{accepted}/1000 tuples accepted, {rejected}/{mutations} single-field mutations rejected"),
    )
}

fn c2_toy_vector() -> Outcome {
    let g = SchnorrGroup::toy();
    let n = |v: u32| BigUint::from(v);
    let pk_a = g.pow_g(&n(5));
    let (t, pr_s) = delegated_key(&g, &n(5), &n(3), &n(7));
    let pk_s = g.pow_g(&pr_s);
    let k = g.pow_g(&n(6));
    let b = response(&g, &pr_s, &n(6), &n(9));
    let y = verification_key(&g, &pk_a, &n(7), &t);
    let k_v = reconstruct_commitment(&g, &y, &n(9), &b);
    let got = [&t, &pr_s, &pk_s, &k, &b, &k_v].map(|v| v.to_string());
    let pass = got == ["18", "5", "12", "2", "5", "2"].map(String::from) && y == pk_s;
    outcome(pass, format!("t={} PR_S={} PK_S={} k={} b={} k_v={}", got[0], got[1], got[2], got[3], got[4], got[5]))
}

fn c3_congruence() -> Outcome {
    let group = SchnorrGroup::default_256();
    let q = group.q().clone();
    let mut rng = ChaCha20Rng::seed_from_u64(0xC3);
    let (mut holds, mut off_by_one_rejected) = (0, 0);
    for _ in 0..10_000 {
        let producer = keygen(&group, &mut rng);
        let proxy = keygen(&group, &mut rng);
        let key = HmacKey::generate(&mut rng);
        let commitment = Commitment::create(&group, &proxy, b"/d".to_vec(), vec![1; 32], key, &mut rng);
        let cert = Certificate {
            id: b"cert".to_vec(),
            public_key: proxy.public().clone(),
        };
        let warrant = build_warrant(&group, commitment, cert, producer.public().clone()).expect("valid");
        let bundle = delegate(&group, &producer, warrant, &mut rng);
        let digest = warrant_digest(&group, &bundle.warrant.to_bytes(), &bundle.t);
        let check = |pr: &BigUint| congruence_holds(&group, &group.pow_g(pr), producer.public(), &digest, &bundle.t);
        holds += usize::from(check(&bundle.delegated_private));
        let up = (&bundle.delegated_private + 1u32) % &q;
        let down = (&bundle.delegated_private + &q - 1u32) % &q;
        off_by_one_rejected += usize::from(!check(&up)) + usize::from(!check(&down));
    }
    outcome(
        holds == 10_000 && off_by_one_rejected == 20_000,
        format!("holds for {holds}/10000 delegations, PR_S+-1 rejected {off_by_one_rejected}/20000"),
    )
}

fn c4_amortization() -> Outcome {
    let r = bench::run(256, 500).expect("default group");
    let sign = r.get("schnorr_sign");
    let verify = r.get("schnorr_verify");
    let amortized = r.get("proxy_sign_amortized") / sign;
    let unamortized = r.get("proxy_sign_unamortized") / sign;
    let verify_ratio = r.get("proxy_verify_unamortized") / verify;
    let pass = (amortized - 1.0).abs() <= 0.15
        && (1.5..=5.0).contains(&unamortized)
        && (1.1..=3.0).contains(&verify_ratio);
    outcome(
        pass,
        format!(
            "schnorr_sign {sign:.1} us; proxy_sign amortized {amortized:.3}x, unamortized {unamortized:.3}x; \
             proxy_verify {verify_ratio:.3}x"
        ),
    )
}

type Key = (Mode, usize, u32);

fn key(mode: Mode, peers: usize, censor: f64) -> Key {
    (mode, peers, (censor * 1000.0).round() as u32)
}

struct Sweep {
    result: SweepResult,
    means: BTreeMap<Key, RunMetrics>,
}

impl Sweep {
    fn mean(&self, mode: Mode, peers: usize, censor: f64) -> &RunMetrics {
        &self.means[&key(mode, peers, censor)]
    }

    fn runs(&self, mode: Mode) -> impl Iterator<Item = &RunMetrics> {
        self.result.metrics().filter(move |m| m.mode == mode)
    }

    fn row(&self, mode: Mode, peers: usize, f: impl Fn(&RunMetrics) -> f64) -> Vec<f64> {
        CENSORS.iter().map(|&c| f(self.mean(mode, peers, c))).collect()
    }
}

fn fmt_row(v: &[f64], digits: usize) -> String {
    v.iter().map(|x| format!("{x:.digits$}")).collect::<Vec<_>>().join(" ")
}

/// Non-increasing, allowing at most one rise no larger than `slack`.
fn non_increasing_within(v: &[f64], slack: f64) -> bool {
    let rises: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).filter(|&d| d > 0.0).collect();
    rises.is_empty() || (rises.len() == 1 && rises[0] <= slack)
}

fn c5_success(s: &Sweep) -> Outcome {
    let robust_failures = s.runs(Mode::Push).chain(s.runs(Mode::Hybrid)).filter(|m| m.success_rate != 1.0).count();
    let mut pass = robust_failures == 0 && s.result.rows.iter().all(|r| r.is_ok());
    let mut rows = Vec::new();
    for p in PEERS {
        let v = s.row(Mode::Pull, p, |m| m.success_rate);
        let zero_ok = s.runs(Mode::Pull).filter(|m| m.collab_peers == p && m.censor_frac == 0.0).all(|m| m.success_rate == 1.0);
        pass &= zero_ok && v[2..].iter().all(|&x| x < 0.9) && non_increasing_within(&v, 0.02);
        rows.push(format!("{p}: {}", fmt_row(&v, 3)));
    }
    outcome(pass, format!("push/hybrid failures {robust_failures}; pull mean success {}", rows.join(" | ")))
}

fn c6_blocked(s: &Sweep) -> Outcome {
    let mut pass = true;
    let mut rows = Vec::new();
    for mode in [Mode::Pull, Mode::Hybrid] {
        for p in PEERS {
            let v = s.row(mode, p, |m| m.blocked_frac);
            let monotone = v.windows(2).all(|w| w[1] >= w[0]);
            // Reference range 0.58..0.75 widened by 0.15 on each side.
            let five = v[1] > 0.5 && (0.58 - 0.15..=0.75 + 0.15).contains(&v[1]);
            pass &= monotone && five;
            if mode == Mode::Hybrid {
                rows.push(format!("{p}: {}", fmt_row(&v[1..], 3)));
            }
        }
    }
    let same = PEERS.iter().all(|&p| s.row(Mode::Pull, p, |m| m.blocked_frac) == s.row(Mode::Hybrid, p, |m| m.blocked_frac));
    outcome(pass, format!("blocked fraction at 5..60% {} (pull identical: {same})", rows.join(" | ")))
}

fn c7_overhead(s: &Sweep) -> Outcome {
    let norm = |mode, p, c| s.mean(mode, p, c).overhead_norm.unwrap_or(f64::NAN);
    let pull_exact = s.runs(Mode::Pull).all(|m| m.overhead_norm == Some(1.0));
    let mut ordered = true;
    let (mut lo, mut hi) = (f64::MAX, 0.0f64);
    for p in PEERS {
        for c in CENSORS {
            let (push, hybrid, pull) = (norm(Mode::Push, p, c), norm(Mode::Hybrid, p, c), norm(Mode::Pull, p, c));
            ordered &= push >= hybrid && hybrid >= pull;
            lo = lo.min(push);
            hi = hi.max(push);
        }
    }
    let h0: Vec<f64> = PEERS.iter().map(|&p| norm(Mode::Hybrid, p, 0.0)).collect();
    let pass = pull_exact && ordered && h0.iter().all(|&h| h <= 1.05);
    outcome(
        pass,
        format!(
            "push >= hybrid >= pull at every point: {ordered}; pull exactly 1: {pull_exact}; hybrid at 0% {}; push {lo:.2}..{hi:.2}",
            fmt_row(&h0, 3)
        ),
    )
}

fn c8_delay(s: &Sweep) -> Outcome {
    let delay = |mode, p, c| s.mean(mode, p, c).pub_delay_ms;
    let mut pass = true;
    let mut rows = Vec::new();
    for p in PEERS {
        let push = s.row(Mode::Push, p, |m| m.pub_delay_ms);
        let push_mean = push.iter().sum::<f64>() / push.len() as f64;
        let spread = (push.iter().cloned().fold(f64::MIN, f64::max) - push.iter().cloned().fold(f64::MAX, f64::min)) / push_mean;
        let pull0 = delay(Mode::Pull, p, 0.0);
        let hybrid: Vec<f64> = CENSORS[1..].iter().map(|&c| delay(Mode::Hybrid, p, c)).collect();
        let between = hybrid.iter().all(|&h| push_mean.min(pull0) <= h && h <= push_mean.max(pull0));
        // Within noise: a rise of at most 2% between adjacent censor fractions.
        let converging = hybrid.windows(2).all(|w| w[1] <= w[0] * 1.02);
        pass &= spread < 0.10 && between && converging;
        rows.push(format!(
            "{p}: push {push_mean:.0} ms (spread {:.1}%), pull0 {pull0:.0}, hybrid {}",
            spread * 100.0,
            fmt_row(&hybrid, 0)
        ));
    }
    for mode in [Mode::Pull, Mode::Push, Mode::Hybrid] {
        let v: Vec<f64> = PEERS.iter().map(|&p| delay(mode, p, 0.0)).collect();
        pass &= v.windows(2).all(|w| w[1] < w[0]);
    }
    outcome(pass, rows.join(" | "))
}

fn c9_direct(s: &Sweep) -> Outcome {
    let ratios: Vec<f64> = PEERS
        .iter()
        .map(|&p| s.mean(Mode::Hybrid, p, 0.2).pub_delay_ms / s.mean(Mode::Direct, p, 0.2).pub_delay_ms)
        .collect();
    let pass = ratios.iter().all(|r| (1.2..=3.0).contains(r));
    outcome(pass, format!("hybrid/direct at 20% censors for 20/40/60 peers: {}", fmt_row(&ratios, 2)))
}

fn c10_onion(s: &Sweep, cost: onion::LayerCost) -> Outcome {
    let mut ratios = Vec::new();
    for p in PEERS {
        for c in CENSORS {
            ratios.push(s.mean(Mode::Onion, p, c).pub_delay_ms / s.mean(Mode::Hybrid, p, c).pub_delay_ms);
        }
    }
    let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
    let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
    outcome(
        lo > 1.0,
        format!(
            "layer cost {:.1}/{:.1} us; onion/hybrid delay ratio {lo:.2}..{hi:.2}",
            cost.encrypt_us, cost.decrypt_us
        ),
    )
}

fn c11_invariants(s: &Sweep) -> Outcome {
    let runs: Vec<&RunMetrics> = s.result.metrics().collect();
    let successful = runs.iter().filter(|m| m.complete).count();
    let unpublished = runs.iter().filter(|m| m.complete && !(m.published && m.integrity_ok)).count();
    let exposures: usize = runs.iter().map(|m| m.exposures).sum();
    let violation = s.result.invariant_violation();
    let pass = runs.len() == s.result.rows.len() && unpublished == 0 && exposures == 0 && violation.is_none();
    outcome(
        pass,
        format!(
            "{} runs, {successful} successful, {unpublished} without byte-identical HMAC-verified publication, \
             {exposures} censor-visible exposures{}",
            runs.len(),
            violation.map(|v| format!(", {v}")).unwrap_or_default()
        ),
    )
}

fn c12_determinism(s: &Sweep) -> Outcome {
    let subset: Vec<usize> = (0..s.result.configs.len()).filter(|&i| s.result.configs[i].seed == 1).collect();
    let configs = subset.iter().map(|&i| s.result.configs[i].clone()).collect();
    let rerun = run_configs(configs, Some(1)).expect("valid configs");
    let row = |r: &Result<RunMetrics, String>| r.as_ref().map(RunMetrics::csv_row).unwrap_or_else(|e| e.clone());
    let identical = subset
        .iter()
        .zip(&rerun.rows)
        .filter(|(&i, r)| row(&s.result.rows[i]) == row(r))
        .count();
    outcome(
        identical == subset.len(),
        format!("{identical}/{} seed-1 runs reproduced bit-identical CSV rows on one thread", subset.len()),
    )
}

fn main() {
    let mut failed = 0;
    let mut check = |id: usize, title: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        report(id, title, t, &o);
        failed += usize::from(!o.pass);
    };
    check(1, "proxy-signature correctness", &mut c1_correctness);
    check(2, "toy-group vector", &mut c2_toy_vector);
    check(3, "congruence identity", &mut c3_congruence);
    check(4, "amortization benchmark", &mut c4_amortization);

    let t = Instant::now();
    let group = SchnorrGroup::default_256();
    let mut grid = Grid::parse(GRID).expect("static grid");
    let cost = onion::calibrate(&group, grid.base.packet_size, 1000, &mut ChaCha20Rng::seed_from_u64(0xCA1));
    grid.base.onion_encrypt_us = cost.encrypt_us;
    grid.base.onion_decrypt_us = cost.decrypt_us;
    let result = run_configs(grid.expand().expect("valid grid"), None).expect("valid configs");
    let means = result
        .aggregates()
        .into_iter()
        .map(|m| (key(m.mode, m.collab_peers, m.censor_frac), m))
        .collect();
    let sweep = Sweep { result, means };
    println!("    sweep of {} runs took {:.1} s", sweep.result.rows.len(), t.elapsed().as_secs_f64());

    check(5, "success-rate reproduction", &mut || c5_success(&sweep));
    check(6, "blocked-peer trend", &mut || c6_blocked(&sweep));
    check(7, "overhead ordering", &mut || c7_overhead(&sweep));
    check(8, "delay trends", &mut || c8_delay(&sweep));
    check(9, "direct-upload ratio", &mut || c9_direct(&sweep));
    check(10, "onion comparison", &mut || c10_onion(&sweep, cost));
    check(11, "integrity and anonymity invariants", &mut || c11_invariants(&sweep));
    check(12, "determinism", &mut || c12_determinism(&sweep));

    println!("{} of 12 criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
