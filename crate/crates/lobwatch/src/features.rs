//! Per-update trading signals: top of book, volume deltas, rolling mid-price
//! volatility and its relative variation, cumulative depth, and the relative
//! distance of the updated level to the same-side touch.
//!
//! One [`FeatureFrame`] is emitted per update. Book-derived quantities stay in
//! fixed point so frame streams replay exactly; the statistical signals
//! (sigma, delta-sigma, distance) live in the floating scalar `F`.

use std::collections::VecDeque;

use crate::num::{FixedDecimal, Real};
use crate::orderbook::{EffectKind, L2Update, OrderBook, Side, UpdateEffect, DEFAULT_DEPTH};

/// Relative-change guard: denominators below this are clamped.
pub const DSIGMA_EPSILON: f64 = 1e-12;

/// Number of values fed to the classifier per frame:
/// mid, spread, delta volume, update price, volatility, cum bid 25, cum ask 25.
/// The quoted touch pair enters as mid and spread, so the six listed signals
/// occupy seven slots.
pub const INPUT_DIM: usize = 7;

/// Rolling population standard deviation of the mid price over the last `W`
/// observations, plus a short sigma history for the lagged relative change.
#[derive(Debug, Clone)]
pub struct VolatilityState<F: Real> {
    window: VecDeque<F>,
    sigma_ring: VecDeque<F>,
    window_len: usize,
    lag: usize,
}

impl<F: Real> VolatilityState<F> {
    /// `window_len` = W observations for sigma, `lag` = k sigma steps for the
    /// variation signal.
    pub fn new(window_len: usize, lag: usize) -> Self {
        assert!(window_len >= 1 && lag >= 1);
        Self {
            window: VecDeque::with_capacity(window_len + 1),
            sigma_ring: VecDeque::with_capacity(lag + 2),
            window_len,
            lag,
        }
    }

    /// Appends a mid observation and returns the new sigma.
    pub fn update(&mut self, mid: F) -> F {
        self.window.push_back(mid);
        if self.window.len() > self.window_len {
            self.window.pop_front();
        }
        let sigma = self.population_std();
        self.sigma_ring.push_back(sigma);
        if self.sigma_ring.len() > self.lag + 1 {
            self.sigma_ring.pop_front();
        }
        sigma
    }

    fn population_std(&self) -> F {
        let n = self.window.len();
        if n < 2 {
            return F::zero();
        }
        let count = F::from_usize(n).unwrap();
        let mean = self.window.iter().copied().sum::<F>() / count;
        let var = self
            .window
            .iter()
            .map(|&x| {
                let d = x - mean;
                d * d
            })
            .sum::<F>()
            / count;
        var.sqrt()
    }

    pub fn current_sigma(&self) -> F {
        self.sigma_ring.back().copied().unwrap_or_else(F::zero)
    }

    /// Relative change of sigma over the lag:
    /// `(sigma_t - sigma_{t-k}) / max(sigma_{t-k}, 1e-12)`, using the oldest
    /// recorded sigma while fewer than k+1 are available.
    pub fn variation(&self) -> F {
        let Some(&current) = self.sigma_ring.back() else {
            return F::zero();
        };
        let oldest = *self.sigma_ring.front().expect("non-empty ring");
        let denom = oldest.max(F::from_f64_lossy(DSIGMA_EPSILON));
        (current - oldest) / denom
    }

    pub fn observation_count(&self) -> usize {
        self.window.len()
    }
}

/// Relative distance of `price` to the same-side touch: `|price - touch| / touch`.
/// `None` when that side of the book is empty.
pub fn distance_to_touch<F: Real>(book: &OrderBook, side: Side, price: FixedDecimal) -> Option<F> {
    let touch = book.touch(side)?;
    let diff: F = (price - touch).abs().to_real();
    Some(diff / touch.to_real())
}

/// All signals derived from one update. Exact (fixed-point) fields replay
/// bit-identically; `F` fields carry the statistical signals.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFrame<F: Real> {
    pub seq: u64,
    pub ts: i64,
    pub side: Side,
    /// Post-update touch prices; `None` while a side is empty.
    pub best_bid: Option<FixedDecimal>,
    pub best_ask: Option<FixedDecimal>,
    pub update_price: FixedDecimal,
    pub delta_volume: FixedDecimal,
    pub cancelled_volume: FixedDecimal,
    /// Post-update cumulative volumes over the 25 best levels.
    pub cum_bid_25: FixedDecimal,
    pub cum_ask_25: FixedDecimal,
    /// Same-side 25-level cumulative volume as of the instant *before* a
    /// cancellation was applied; zero for non-cancellation frames. This is
    /// the depth other participants saw and is the Condition-1 denominator.
    pub cum_side_25_pre: FixedDecimal,
    /// Mid and spread carried forward through one-sided stretches; classifier
    /// inputs.
    pub mid: F,
    pub spread: F,
    /// Rolling population std of the mid (carried forward when no mid).
    pub volatility: F,
    /// Lagged relative change of the volatility.
    pub vol_variation: F,
    /// Relative distance of the update price to the post-update same-side
    /// touch; `None` when that side emptied.
    pub distance: Option<F>,
    /// False when the frame cannot participate in labelling (no mid at this
    /// instant, or no same-side touch).
    pub labelable: bool,
}

impl<F: Real> FeatureFrame<F> {
    pub fn is_cancellation(&self) -> bool {
        self.cancelled_volume.is_positive()
    }

    /// The classifier input vector.
    pub fn classifier_input(&self) -> [F; INPUT_DIM] {
        [
            self.mid,
            self.spread,
            self.delta_volume.to_real(),
            self.update_price.to_real(),
            self.volatility,
            self.cum_bid_25.to_real(),
            self.cum_ask_25.to_real(),
        ]
    }
}

/// Streaming extractor: owns the book and volatility state, and emits one
/// frame per applied update.
#[derive(Debug, Clone)]
pub struct FramePipeline<F: Real> {
    book: OrderBook,
    vol: VolatilityState<F>,
    carried_mid: F,
    carried_spread: F,
    frames_emitted: u64,
}

impl<F: Real> FramePipeline<F> {
    pub fn new(window_len: usize, lag: usize) -> Self {
        Self {
            book: OrderBook::new(),
            vol: VolatilityState::new(window_len, lag),
            carried_mid: F::zero(),
            carried_spread: F::zero(),
            frames_emitted: 0,
        }
    }

    /// Seeds the book from a snapshot record before replaying updates.
    pub fn boot_snapshot(&mut self, bids: &[(FixedDecimal, FixedDecimal)], asks: &[(FixedDecimal, FixedDecimal)]) {
        self.book.apply_snapshot(bids, asks);
        if let Some(mid) = self.book.mid_price() {
            self.carried_mid = mid.to_real();
            self.carried_spread = self.book.spread().expect("two-sided").to_real();
        }
    }

    /// Applies `u` to the book and extracts the frame for it.
    pub fn process(&mut self, u: &L2Update) -> FeatureFrame<F> {
        // Pre-apply peek: the Condition-1 denominator must be the depth as it
        // stood while the soon-to-be-cancelled volume was still resting.
        let old_size = self.book.level_size(u.side, u.price).unwrap_or(FixedDecimal::ZERO);
        let will_cancel = u.size < old_size;
        let cum_side_25_pre = if will_cancel {
            self.book.cumulative_volume(u.side, DEFAULT_DEPTH)
        } else {
            FixedDecimal::ZERO
        };

        let effect = self.book.apply_update(u);
        self.extract(u, effect, cum_side_25_pre)
    }

    fn extract(&mut self, u: &L2Update, effect: UpdateEffect, cum_side_25_pre: FixedDecimal) -> FeatureFrame<F> {
        debug_assert!(matches!(effect.kind, EffectKind::Decreased | EffectKind::Removed) == cum_side_25_pre.is_positive() || !effect.cancelled_volume.is_positive());
        let (best_bid, best_ask) = self.book.top_of_book();
        let two_sided = best_bid.is_some() && best_ask.is_some();

        let (volatility, vol_variation) = if two_sided {
            let mid_f: F = best_bid.unwrap().midpoint(best_ask.unwrap()).to_real();
            self.carried_mid = mid_f;
            self.carried_spread = (best_ask.unwrap() - best_bid.unwrap()).to_real();
            let sigma = self.vol.update(mid_f);
            (sigma, self.vol.variation())
        } else {
            // One-sided book: sigma carried forward, frame unusable for labelling.
            (self.vol.current_sigma(), self.vol.variation())
        };

        let distance = distance_to_touch(&self.book, u.side, u.price);

        let frame = FeatureFrame {
            seq: u.seq,
            ts: u.ts,
            side: u.side,
            best_bid,
            best_ask,
            update_price: u.price,
            delta_volume: effect.delta_volume,
            cancelled_volume: effect.cancelled_volume,
            cum_bid_25: self.book.cumulative_volume(Side::Bid, DEFAULT_DEPTH),
            cum_ask_25: self.book.cumulative_volume(Side::Ask, DEFAULT_DEPTH),
            cum_side_25_pre,
            mid: self.carried_mid,
            spread: self.carried_spread,
            volatility,
            vol_variation,
            distance,
            labelable: two_sided && distance.is_some(),
        };
        self.frames_emitted += 1;
        frame
    }

    pub fn book(&self) -> &OrderBook {
        &self.book
    }

    pub fn frames_emitted(&self) -> u64 {
        self.frames_emitted
    }
}

/// Header for the frame CSV dump; fixed 12-column contract.
pub const FRAME_CSV_HEADER: &str =
    "ts,best_bid,best_ask,delta_volume,update_price,volatility,vol_variation,cum_bid_25,cum_ask_25,distance,cancelled_volume,side";

/// Renders one frame as a CSV row matching [`FRAME_CSV_HEADER`]. Absent
/// touches and distances render as empty cells.
pub fn frame_csv_row<F: Real>(frame: &FeatureFrame<F>) -> String {
    let opt = |v: Option<FixedDecimal>| v.map(|p| p.to_string()).unwrap_or_default();
    let optf = |v: Option<F>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    format!(
        "{},{},{},{},{},{:?},{:?},{},{},{},{},{}",
        frame.ts,
        opt(frame.best_bid),
        opt(frame.best_ask),
        frame.delta_volume,
        frame.update_price,
        frame.volatility,
        frame.vol_variation,
        frame.cum_bid_25,
        frame.cum_ask_25,
        optf(frame.distance),
        frame.cancelled_volume,
        frame.side,
    )
}
