use rand::Rng;
use rand_distr::Exp1;

use super::{EngineError, EngineWeight, PaintboxSource, MERGER_CAP};
use crate::measures::MeasureSpec;

/// A live block of the coalescent.
#[derive(Clone, Debug, PartialEq)]
pub struct Block<W> {
    /// Merger index at which the block was formed; doubles as its id.
    pub formed_at: usize,
    /// Indices of the singleton sets the block is made of, ascending.
    pub members: Vec<u32>,
    pub freq: W,
    pub contains_one: bool,
}

/// Who a coin is thrown for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoinTarget {
    /// The live block formed at this merger index.
    Block(usize),
    /// Individual 1 while it is still unmerged.
    One,
}

/// What happened at one merger.
#[derive(Clone, Debug, PartialEq)]
pub struct MergerRecord<W> {
    pub index: usize,
    pub paintbox: W,
    pub wait: f64,
    pub time: f64,
    /// `(block id, heads)` for every block live before the merger, in
    /// creation order.
    pub coins: Vec<(usize, bool)>,
    /// Coin of individual 1; `None` once 1 sits inside a block, whose coin
    /// is then listed in `coins`.
    pub coin_of_one: Option<bool>,
    /// Id of the block formed here (equal to `index`).
    pub new_block: usize,
    /// Whether the block containing 1 took part, i.e. `f1` jumped.
    pub one_joined: bool,
}

/// One realization of the Poisson construction, advanced merger by merger.
#[derive(Clone, Debug)]
pub struct CoalescentRun<'a, W> {
    spec: &'a MeasureSpec,
    source: PaintboxSource<W>,
    rate: f64,
    cap: usize,
    paintbox: Vec<W>,
    wait_times: Vec<f64>,
    singleton_freq: Vec<W>,
    time: f64,
    blocks: Vec<Block<W>>,
    first_merge: Vec<Option<usize>>,
    merged_count: usize,
    dust: W,
    log_dust: f64,
    c: Option<usize>,
    terminated: bool,
}

impl<'a, W: EngineWeight> CoalescentRun<'a, W> {
    pub fn new(spec: &'a MeasureSpec) -> Result<Self, EngineError> {
        let source = W::paintbox_source(spec)?;
        Ok(Self {
            spec,
            source,
            rate: spec.moments().mu2,
            cap: MERGER_CAP,
            paintbox: Vec::new(),
            wait_times: Vec::new(),
            singleton_freq: Vec::new(),
            time: 0.0,
            blocks: Vec::new(),
            first_merge: Vec::new(),
            merged_count: 0,
            dust: W::one(),
            log_dust: 0.0,
            c: None,
            terminated: false,
        })
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn spec(&self) -> &MeasureSpec {
        self.spec
    }

    /// Number of mergers executed so far.
    pub fn mergers(&self) -> usize {
        self.paintbox.len()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn paintbox(&self) -> &[W] {
        &self.paintbox
    }

    /// Inter-arrival times of the mergers, Exp(μ₋₂).
    pub fn wait_times(&self) -> &[f64] {
        &self.wait_times
    }

    /// Asymptotic frequency of singleton set `S_i` (1-based).
    pub fn singleton_freq(&self, i: usize) -> Option<&W> {
        i.checked_sub(1).and_then(|i| self.singleton_freq.get(i))
    }

    /// Live blocks in creation order.
    pub fn blocks(&self) -> &[Block<W>] {
        &self.blocks
    }

    pub fn block_of_one(&self) -> Option<&Block<W>> {
        self.blocks.iter().find(|b| b.contains_one)
    }

    /// `I(i)`: the merger at which block `i` next merged, if it has.
    pub fn first_merge(&self, i: usize) -> Option<usize> {
        i.checked_sub(1).and_then(|i| self.first_merge.get(i).copied().flatten())
    }

    /// Remaining dust frequency `∏_{j≤k}(1 - P_j)`.
    pub fn dust(&self) -> &W {
        &self.dust
    }

    /// Natural log of the dust frequency; stays finite after the float
    /// product underflows.
    pub fn log_dust(&self) -> f64 {
        self.log_dust
    }

    /// Merger at which individual 1 first merged.
    pub fn c(&self) -> Option<usize> {
        self.c
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    /// Draws the next paintbox value, waiting time and coins from `rng` and
    /// executes the merger.
    ///
    /// Draw order per merger: paintbox value (none for Dirac), waiting time,
    /// one coin per live block in creation order, then the coin of 1 if it
    /// is still unmerged.
    pub fn step_merger<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<MergerRecord<W>, EngineError> {
        self.ensure_can_step()?;
        let p = match &self.source {
            PaintboxSource::Constant(p) => p.clone(),
            PaintboxSource::Sampled => W::from_sample(self.spec.sample_paintbox(rng)),
        };
        let wait = rng.sample::<f64, _>(Exp1) / self.rate;
        let prob = p.to_f64();
        self.apply_merger(p, wait, |_| rng.random_bool(prob))
    }

    fn ensure_can_step(&self) -> Result<(), EngineError> {
        if self.terminated {
            return Err(EngineError::Terminated);
        }
        if self.mergers() >= self.cap {
            return Err(EngineError::CapExceeded(self.cap));
        }
        Ok(())
    }

    /// Executes a merger with the given paintbox value, waiting time and
    /// coin outcomes. `coin` is called once per live block in creation order
    /// and then once for individual 1 if it is unmerged.
    pub fn apply_merger(
        &mut self,
        p: W,
        wait: f64,
        mut coin: impl FnMut(CoinTarget) -> bool,
    ) -> Result<MergerRecord<W>, EngineError> {
        self.ensure_can_step()?;
        let k = self.mergers() + 1;

        let singleton = p.mul(&self.dust);
        let mut freq = singleton.clone();
        let mut members = vec![k as u32];
        let mut contains_one = false;
        let mut coins = Vec::with_capacity(self.blocks.len());
        let mut kept = Vec::with_capacity(self.blocks.len() + 1);
        for block in self.blocks.drain(..) {
            let heads = coin(CoinTarget::Block(block.formed_at));
            coins.push((block.formed_at, heads));
            if heads {
                self.first_merge[block.formed_at - 1] = Some(k);
                self.merged_count += 1;
                freq = freq.add(&block.freq);
                members.extend_from_slice(&block.members);
                contains_one |= block.contains_one;
            } else {
                kept.push(block);
            }
        }
        let coin_of_one = if self.c.is_none() {
            let heads = coin(CoinTarget::One);
            if heads {
                self.c = Some(k);
                contains_one = true;
            }
            Some(heads)
        } else {
            None
        };
        members.sort_unstable();
        kept.push(Block { formed_at: k, members, freq, contains_one });
        self.blocks = kept;
        self.first_merge.push(None);

        let prob = p.to_f64();
        self.log_dust = if prob >= 1.0 { f64::NEG_INFINITY } else { self.log_dust + (-prob).ln_1p() };
        self.dust = self.dust.mul(&p.complement());
        self.terminated = p.is_one();
        self.singleton_freq.push(singleton);
        self.paintbox.push(p.clone());
        self.wait_times.push(wait);
        self.time += wait;

        Ok(MergerRecord {
            index: k,
            paintbox: p,
            wait,
            time: self.time,
            coins,
            coin_of_one,
            new_block: k,
            one_joined: contains_one,
        })
    }

    /// Live block count predicted by `k − Σ_{i<k} 1{I(i) ≤ k}`.
    pub fn predicted_block_count(&self) -> usize {
        let k = self.mergers();
        let merged_before_k = self.first_merge.iter().take(k.saturating_sub(1)).filter(|m| m.is_some_and(|m| m <= k)).count();
        k - merged_before_k
    }

    /// Verifies the partition of unity, the block-count identity, that each
    /// block's frequency is the sum of its singleton sets, and that 1 lies in
    /// at most one block.
    pub fn check_invariants(&self) -> Result<(), EngineError> {
        let k = self.mergers();
        let fail = |what: String| Err(EngineError::Invariant { merger: k, what });

        let mut total = self.dust.clone();
        for block in &self.blocks {
            total = total.add(&block.freq);
            let mut sum = W::zero();
            for &m in &block.members {
                sum = sum.add(&self.singleton_freq[m as usize - 1]);
            }
            if !sum.matches(&block.freq) {
                return fail(format!("block {} frequency {:?} != sum of its singleton sets {:?}", block.formed_at, block.freq, sum));
            }
        }
        if !total.matches(&W::one()) {
            return fail(format!("block frequencies plus dust sum to {total:?}"));
        }
        if self.blocks.len() != self.predicted_block_count() || self.blocks.len() != k - self.merged_count {
            return fail(format!("{} live blocks, identity predicts {}", self.blocks.len(), self.predicted_block_count()));
        }
        let holders = self.blocks.iter().filter(|b| b.contains_one).count();
        if holders != usize::from(self.c.is_some()) {
            return fail(format!("{holders} blocks contain 1 but C = {:?}", self.c));
        }
        Ok(())
    }
}
