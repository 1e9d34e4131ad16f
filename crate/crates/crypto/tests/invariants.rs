use harpocrates_crypto::proxy::{Certificate, ProxySignature};
use harpocrates_crypto::symmetric::SEAL_OVERHEAD;
use harpocrates_crypto::{
    build_warrant, delegate, hmac_tag, hmac_verify, keygen, open, pk_open, pk_seal, proxy_setup,
    proxy_sign, proxy_verify, schnorr_sign, schnorr_verify, seal, Commitment, HmacKey,
    SchnorrGroup, SymmetricKey,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::sync::OnceLock;

fn group() -> &'static SchnorrGroup {
    static G: OnceLock<SchnorrGroup> = OnceLock::new();
    G.get_or_init(|| SchnorrGroup::generate(96, &mut ChaCha20Rng::seed_from_u64(77)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schnorr_round_trip(seed: u64, msg in proptest::collection::vec(any::<u8>(), 0..256)) {
        let g = group();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let key = keygen(g, &mut rng);
        let sig = schnorr_sign(g, &key, &msg, &mut rng);
        prop_assert!(schnorr_verify(g, key.public(), &msg, &sig));
    }

    #[test]
    fn seal_open_round_trip(seed: u64, msg in proptest::collection::vec(any::<u8>(), 0..2048)) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let key = SymmetricKey::generate(&mut rng);
        let ct = seal(&key, &msg, &mut rng);
        prop_assert_eq!(ct.len(), msg.len() + SEAL_OVERHEAD);
        prop_assert_eq!(open(&key, &ct).unwrap(), msg);
    }

    #[test]
    fn any_ciphertext_bit_flip_fails(seed: u64, msg in proptest::collection::vec(any::<u8>(), 1..128), pos: usize, bit in 0u8..8) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let key = SymmetricKey::generate(&mut rng);
        let mut ct = seal(&key, &msg, &mut rng);
        let i = pos % ct.len();
        ct[i] ^= 1 << bit;
        prop_assert!(open(&key, &ct).is_err());
    }

    #[test]
    fn hmac_detects_data_change(seed: u64, data in proptest::collection::vec(any::<u8>(), 1..256), pos: usize) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let key = HmacKey::generate(&mut rng);
        let tag = hmac_tag(&key, &data);
        prop_assert!(hmac_verify(&key, &data, &tag));
        let mut altered = data.clone();
        altered[pos % data.len()] ^= 0x80;
        prop_assert!(!hmac_verify(&key, &altered, &tag));
    }

    #[test]
    fn pk_seal_round_trip(seed: u64, msg in proptest::collection::vec(any::<u8>(), 0..512)) {
        let g = group();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let key = keygen(g, &mut rng);
        let ct = pk_seal(g, key.public(), &msg, &mut rng);
        prop_assert_eq!(pk_open(g, key.private(), &ct).unwrap(), msg);
    }

    #[test]
    fn proxy_signature_round_trip_and_byte_tamper(
        seed: u64,
        msg in proptest::collection::vec(any::<u8>(), 1..128),
        pos: usize,
    ) {
        let g = group();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let producer = keygen(g, &mut rng);
        let proxy = keygen(g, &mut rng);
        let key = HmacKey::generate(&mut rng);
        let tag = hmac_tag(&key, &msg).to_vec();
        let commitment = Commitment::create(g, &proxy, b"/p".to_vec(), tag, key, &mut rng);
        let cert = Certificate { id: b"c".to_vec(), public_key: proxy.public().clone() };
        let warrant = build_warrant(g, commitment, cert, producer.public().clone()).unwrap();
        let bundle = delegate(g, &producer, warrant, &mut rng);
        let ctx = proxy_setup(g, &bundle, producer.public()).unwrap();
        let sig = proxy_sign(&ctx, &msg, &mut rng);
        prop_assert!(proxy_verify(g, producer.public(), &sig));

        // Flipping any byte of the encoded signature either breaks decoding
        // or breaks verification.
        let mut raw = sig.to_bytes();
        let i = pos % raw.len();
        raw[i] ^= 0x01;
        if let Ok(altered) = ProxySignature::from_bytes(&raw) {
            prop_assert!(!proxy_verify(g, producer.public(), &altered));
        }
    }
}
