use std::rc::Rc;

use rand::{Rng, RngCore};
use rand_chacha::ChaCha20Rng;

use super::{parse_sync, RunRecord, Setup, SyncMessage};
use crate::config::CensorStrategy;
use crate::network::Ctx;
use crate::packet::{Data, Interest, Traffic};

/// A censoring node posing as a sync-group peer.
pub struct Censor {
    setup: Rc<Setup>,
    rng: ChaCha20Rng,
    pub observed: u64,
    pub forged: u64,
}

impl Censor {
    pub fn new(setup: Rc<Setup>, rng: ChaCha20Rng) -> Self {
        Self {
            setup,
            rng,
            observed: 0,
            forged: 0,
        }
    }

    pub fn start(&mut self, _ctx: &mut Ctx<'_, RunRecord>) {}

    pub fn on_interest(&mut self, ctx: &mut Ctx<'_, RunRecord>, interest: Rc<Interest>) {
        self.observed += 1;
        if self.setup.cfg.censor_strategy != CensorStrategy::Masquerade {
            return;
        }
        if let Some(SyncMessage::Pull { .. }) = parse_sync(&self.setup.cfg.sync_prefix, &interest.name) {
            // Bogus pieces match the legitimate size within a few bytes.
            let len = self.setup.nominal_piece_len + self.rng.gen_range(0..8);
            let mut bogus = vec![0u8; len];
            self.rng.fill_bytes(&mut bogus);
            self.forged += 1;
            ctx.send_data(Data::new(interest.name.clone(), bogus, Traffic::Bogus));
        }
    }

    pub fn on_data(&mut self, _ctx: &mut Ctx<'_, RunRecord>, _data: Rc<Data>) {}

    pub fn on_timer(&mut self, _ctx: &mut Ctx<'_, RunRecord>, _token: u64) {}
}
