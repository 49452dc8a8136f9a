use std::collections::{BinaryHeap, HashMap};
use std::cmp::Reverse;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use super::stats::{MomentAccumulator, ReceptionRecord};
use super::{mean_and_halfwidth, FrameStats, SchemeSpec, SimEvent, SimOptions, SimResult, BATCHES};
use crate::config::{AlohaConfig, ProtocolConfig};
use crate::error::{Error, Result};

/// Lazily integrated AoI. `aoi[u]` is the AoI of slot `last[u]`; between
/// receptions it grows by one per slot, so sums over slot ranges are
/// arithmetic series.
struct AoiLedger {
    last: Vec<u64>,
    aoi: Vec<u64>,
    area: Vec<u128>,
    warmup: u64,
    bounds: Vec<u64>,
    next_bound: usize,
    batch_area: Vec<u128>,
    total_at_bound: u128,
}

impl AoiLedger {
    fn new(users: usize, warmup: u64, horizon: u64) -> Self {
        let span = horizon - warmup;
        let batches = BATCHES.min(span);
        let bounds = (1..=batches).map(|b| warmup + span * b / batches).collect();
        AoiLedger {
            last: vec![0; users],
            aoi: vec![1; users],
            area: vec![0; users],
            warmup,
            bounds,
            next_bound: 0,
            batch_area: Vec::new(),
            total_at_bound: 0,
        }
    }

    fn flush(&mut self, u: usize, end: u64) {
        let (last, d) = (self.last[u], self.aoi[u]);
        if end <= last {
            return;
        }
        let from = last.max(self.warmup);
        if end > from {
            let c = (end - from) as u128;
            let first = (d + (from - last)) as u128;
            self.area[u] += c * first + c * (c - 1) / 2;
        }
        self.aoi[u] = d + (end - last);
        self.last[u] = end;
    }

    /// Closes every batch whose end is at or before `slot`.
    fn advance(&mut self, slot: u64) {
        while self.next_bound < self.bounds.len() && self.bounds[self.next_bound] <= slot {
            let b = self.bounds[self.next_bound];
            for u in 0..self.last.len() {
                self.flush(u, b);
            }
            let total: u128 = self.area.iter().sum();
            self.batch_area.push(total - self.total_at_bound);
            self.total_at_bound = total;
            self.next_bound += 1;
        }
    }

    /// AoI of slot `slot` before applying a reception in it.
    fn current(&mut self, u: usize, slot: u64) -> u64 {
        self.advance(slot);
        self.flush(u, slot);
        self.aoi[u]
    }

    /// Reception in `slot`: the AoI of `slot + 1` becomes `service`.
    fn receive(&mut self, u: usize, slot: u64, service: u64) {
        self.advance(slot + 1);
        self.flush(u, slot + 1);
        self.aoi[u] = service;
    }

    fn finish(mut self, horizon: u64) -> (Vec<f64>, f64, Option<f64>) {
        self.advance(horizon);
        let span = (horizon - self.warmup) as f64;
        let per_user: Vec<f64> = self.area.iter().map(|&a| a as f64 / span).collect();
        let network = per_user.iter().sum::<f64>() / per_user.len() as f64;
        let users = per_user.len() as f64;
        let mut start = self.warmup;
        let batch_means: Vec<f64> = self
            .bounds
            .iter()
            .zip(&self.batch_area)
            .map(|(&end, &a)| {
                let m = a as f64 / ((end - start) as f64 * users);
                start = end;
                m
            })
            .collect();
        let (_, ci) = mean_and_halfwidth(&batch_means);
        (per_user, network, ci)
    }
}

/// Per-user delivery bookkeeping for the trace quantities.
#[derive(Clone, Copy, Default)]
struct DeliveryMemo {
    /// Slot and frame of the previous delivery and its service time.
    prev: Option<(u64, u64, u64)>,
    /// First frame since the previous delivery with an eligible update.
    available_from: Option<u64>,
}

struct Recorder {
    moments: MomentAccumulator,
    trace: Option<Vec<ReceptionRecord>>,
    count: u64,
    warmup: u64,
}

impl Recorder {
    fn new(opts: &SimOptions) -> Self {
        Recorder {
            moments: MomentAccumulator::default(),
            trace: opts.record_trace.then(Vec::new),
            count: 0,
            warmup: opts.warmup,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        memo: &mut DeliveryMemo,
        user: u32,
        slot: u64,
        generation: u64,
        frame: u64,
        frame_len: u64,
        alpha: u64,
    ) -> u64 {
        let service = slot - generation + 1;
        let avail = memo.available_from.unwrap_or(frame);
        let gen_frame = generation / frame_len;
        if slot >= self.warmup {
            let rec = ReceptionRecord {
                index: self.count,
                user,
                t_prime: slot,
                generation_slot: generation,
                service,
                inter_departure: memo.prev.map(|(t, _, _)| slot - t),
                frame_gap: memo.prev.map(|(_, k, _)| (frame - k) * frame_len),
                waiting: memo.prev.map(|(_, k, _)| (avail - k - 1) * frame_len),
                contention: memo.prev.map(|_| (frame + 1 - avail) * frame_len),
                alpha,
                lead: (gen_frame + 1) * frame_len - generation,
                transmit_span: (frame - gen_frame) * frame_len,
                prev_service: memo.prev.map(|(_, _, s)| s),
            };
            self.moments.push(&rec);
            if let Some(t) = self.trace.as_mut() {
                t.push(rec);
            }
            self.count += 1;
        }
        memo.prev = Some((slot, frame, service));
        memo.available_from = None;
        service
    }
}

/// Users holding a transmittable packet, with O(1) insert and removal.
struct ActiveSet {
    members: Vec<u32>,
    pos: Vec<usize>,
}

impl ActiveSet {
    const ABSENT: usize = usize::MAX;

    fn new(users: usize) -> Self {
        ActiveSet {
            members: Vec::with_capacity(users),
            pos: vec![Self::ABSENT; users],
        }
    }

    fn contains(&self, u: u32) -> bool {
        self.pos[u as usize] != Self::ABSENT
    }

    fn insert(&mut self, u: u32) {
        if !self.contains(u) {
            self.pos[u as usize] = self.members.len();
            self.members.push(u);
        }
    }

    fn remove(&mut self, u: u32) {
        let i = self.pos[u as usize];
        if i == Self::ABSENT {
            return;
        }
        self.members.swap_remove(i);
        if let Some(&moved) = self.members.get(i) {
            self.pos[moved as usize] = i;
        }
        self.pos[u as usize] = Self::ABSENT;
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.members.swap(i, j);
        self.pos[self.members[i] as usize] = i;
        self.pos[self.members[j] as usize] = j;
    }

    fn clear(&mut self) {
        for &u in &self.members {
            self.pos[u as usize] = Self::ABSENT;
        }
        self.members.clear();
    }

    fn len(&self) -> usize {
        self.members.len()
    }
}

/// Idle slots before the next generation, by inversion (one uniform and
/// one logarithm per draw).
struct GenerationGaps {
    ln_idle: f64,
}

impl GenerationGaps {
    fn new(rho: f64) -> Self {
        GenerationGaps { ln_idle: f64::ln_1p(-rho) }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        if self.ln_idle == f64::NEG_INFINITY {
            return 0;
        }
        let u: f64 = 1.0 - rng.gen::<f64>();
        let k = u.ln() / self.ln_idle;
        if k >= u64::MAX as f64 / 2.0 {
            u64::MAX / 2
        } else {
            k as u64
        }
    }
}

pub(super) fn run_fsa<F>(
    spec: &SchemeSpec,
    cfg: &ProtocolConfig,
    one_shot: bool,
    opts: &SimOptions,
    rng: &mut ChaCha8Rng,
    mut observer: F,
) -> Result<SimResult>
where
    F: FnMut(SimEvent<'_>),
{
    let n = cfg.users;
    let m = cfg.frame_len as u64;
    let v = cfg.minislots;
    let data_slots = cfg.frame_len - 1;
    let gaps = GenerationGaps::new(cfg.rho);

    let mut next_gen: Vec<u64> = (0..n).map(|_| gaps.sample(rng)).collect();
    let mut pending: Vec<Option<u64>> = vec![None; n];
    let mut pending_users: Vec<u32> = Vec::new();
    let mut packet_gen: Vec<u64> = vec![0; n];
    let mut active = ActiveSet::new(n);
    let mut memo = vec![DeliveryMemo::default(); n];
    let mut ledger = AoiLedger::new(n, opts.warmup, opts.horizon);
    let mut recorder = Recorder::new(opts);

    let mut stats = FrameStats {
        active_histogram: vec![0; n + 1],
        delivery_slots: vec![0; data_slots],
        ..FrameStats::default()
    };
    let mut transitions: HashMap<(u32, u32), u64> = HashMap::new();
    let mut prev_active: Option<u32> = None;

    let mut occupancy = vec![0u32; v];
    let mut owner = vec![0u32; v];
    let mut choices: Vec<(u32, u32)> = Vec::new();
    let mut winners: Vec<(u32, u32)> = Vec::new();

    let mut frame = 0u64;
    while frame * m < opts.horizon {
        let start = frame * m;
        let end = start + m;

        // Updates from the previous frame become the transmit packets.
        for &u in &pending_users {
            let ui = u as usize;
            packet_gen[ui] = pending[ui].take().expect("pending user has an update");
            active.insert(u);
            memo[ui].available_from.get_or_insert(frame);
        }
        pending_users.clear();

        let a = active.len();
        let counted = start >= opts.warmup;
        if counted {
            stats.frames += 1;
            stats.active_histogram[a] += 1;
            if let Some(p) = prev_active {
                *transitions.entry((p, a as u32)).or_insert(0) += 1;
            }
            prev_active = Some(a as u32);
        }

        for u in 0..n {
            while next_gen[u] < end {
                let g = next_gen[u];
                if pending[u].replace(g).is_none() {
                    pending_users.push(u as u32);
                }
                observer(SimEvent::Generation { user: u as u32, slot: g });
                next_gen[u] = g + 1 + gaps.sample(rng);
            }
        }

        // Reservation: pick the reserving subset, then their mini-slots.
        let reservers = if a == 0 {
            0
        } else {
            Binomial::new(a as u64, cfg.gamma)
                .map_err(|e| Error::Numerical(format!("binomial sampler: {e}")))?
                .sample(rng) as usize
        };
        choices.clear();
        for i in 0..reservers {
            let j = rng.gen_range(i..a);
            active.swap(i, j);
            let u = active.members[i];
            let slot = rng.gen_range(0..v);
            occupancy[slot] += 1;
            owner[slot] = u;
            choices.push((u, slot as u32));
        }
        winners.clear();
        for slot in 0..v {
            if occupancy[slot] == 1 && winners.len() < data_slots {
                winners.push((owner[slot], winners.len() as u32 + 2));
            }
            occupancy[slot] = 0;
        }
        observer(SimEvent::Frame {
            index: frame,
            start,
            active: &active.members,
            choices: &choices,
            winners: &winners,
        });
        if counted {
            stats.reservations += reservers as u64;
        }

        for &(u, alpha) in &winners {
            let ui = u as usize;
            let slot = start + alpha as u64 - 1;
            active.remove(u);
            if slot >= opts.horizon {
                continue;
            }
            let generation = packet_gen[ui];
            let before = ledger.current(ui, slot);
            let service = recorder.record(&mut memo[ui], u, slot, generation, frame, m, alpha as u64);
            ledger.receive(ui, slot, service);
            if counted {
                stats.deliveries += 1;
                stats.delivery_slots[alpha as usize - 2] += 1;
            }
            observer(SimEvent::Reception {
                user: u,
                slot,
                generation_slot: generation,
                aoi_before: before,
                aoi_after: service,
            });
        }

        if one_shot {
            active.clear();
        }
        frame += 1;
    }

    let mut transitions: Vec<(u32, u32, u64)> = transitions.into_iter().map(|((i, j), c)| (i, j, c)).collect();
    transitions.sort_unstable();
    stats.transitions = transitions;
    Ok(finish(spec, opts, ledger, recorder, Some(stats)))
}

pub(super) fn run_aloha<F>(
    spec: &SchemeSpec,
    cfg: &AlohaConfig,
    opts: &SimOptions,
    rng: &mut ChaCha8Rng,
    mut observer: F,
) -> Result<SimResult>
where
    F: FnMut(SimEvent<'_>),
{
    let n = cfg.users;
    let gaps = GenerationGaps::new(cfg.rho);
    // Pr{exactly one of h holders transmits}.
    let lone: Vec<f64> = (0..=n)
        .map(|h| {
            if h == 0 {
                0.0
            } else {
                h as f64 * cfg.tau * (1.0 - cfg.tau).powi(h as i32 - 1)
            }
        })
        .collect();

    let mut next_gen: BinaryHeap<Reverse<(u64, u32)>> = BinaryHeap::with_capacity(n);
    for u in 0..n {
        next_gen.push(Reverse((gaps.sample(rng), u as u32)));
    }
    let mut packet_gen: Vec<u64> = vec![0; n];
    let mut holders = ActiveSet::new(n);
    let mut memo = vec![DeliveryMemo::default(); n];
    let mut ledger = AoiLedger::new(n, opts.warmup, opts.horizon);
    let mut recorder = Recorder::new(opts);

    let mut t = 0u64;
    while t < opts.horizon {
        while let Some(&Reverse((g, u))) = next_gen.peek() {
            if g != t {
                break;
            }
            next_gen.pop();
            let ui = u as usize;
            packet_gen[ui] = g;
            holders.insert(u);
            memo[ui].available_from.get_or_insert(t);
            observer(SimEvent::Generation { user: u, slot: g });
            next_gen.push(Reverse((g + 1 + gaps.sample(rng), u)));
        }

        let h = holders.len();
        if h == 0 {
            t = next_gen.peek().map_or(opts.horizon, |r| r.0 .0);
            continue;
        }
        let x: f64 = rng.gen();
        let success = x < lone[h];
        observer(SimEvent::AlohaSlot {
            slot: t,
            holders: h as u32,
            delivered: success,
        });
        if success {
            let u = holders.members[rng.gen_range(0..h)];
            let ui = u as usize;
            holders.remove(u);
            let generation = packet_gen[ui];
            let before = ledger.current(ui, t);
            let service = recorder.record(&mut memo[ui], u, t, generation, t, 1, 1);
            ledger.receive(ui, t, service);
            observer(SimEvent::Reception {
                user: u,
                slot: t,
                generation_slot: generation,
                aoi_before: before,
                aoi_after: service,
            });
        }
        t += 1;
    }
    Ok(finish(spec, opts, ledger, recorder, None))
}

fn finish(
    spec: &SchemeSpec,
    opts: &SimOptions,
    ledger: AoiLedger,
    recorder: Recorder,
    frame_stats: Option<FrameStats>,
) -> SimResult {
    let (per_user_aaoi, network_aaoi, ci_halfwidth) = ledger.finish(opts.horizon);
    SimResult {
        scheme: *spec,
        horizon: opts.horizon,
        warmup: opts.warmup,
        seed: opts.seed,
        replication: opts.replication,
        network_aaoi,
        per_user_aaoi,
        reception_count: recorder.count,
        empirical_moments: (recorder.moments.samples() >= 2).then(|| recorder.moments.summary()),
        ci_halfwidth,
        frame_stats,
        trace: recorder.trace,
    }
}
