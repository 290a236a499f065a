//! L2 order book reconstruction.
//!
//! The book is a pair of ordered price-level maps updated by absolute-size
//! level messages: size > 0 sets the level, size 0 deletes it. Bids are keyed
//! with [`std::cmp::Reverse`] so iteration yields descending prices; asks use
//! natural ascending order. The full book is kept in memory and the 25-level
//! cap is applied only at query time, so deep levels surfacing after removals
//! stay correct.

use std::cmp::Reverse;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::num::FixedDecimal;

/// Book side of an update or resting level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bid,
    Ask,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Bid => Side::Ask,
            Side::Ask => Side::Bid,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Bid => write!(f, "bid"),
            Side::Ask => write!(f, "ask"),
        }
    }
}

/// One price-level change from an exchange feed. `size` is the absolute
/// resting volume after the update; 0 removes the level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct L2Update {
    pub seq: u64,
    pub ts: i64,
    pub side: Side,
    pub price: FixedDecimal,
    pub size: FixedDecimal,
}

/// Classification of what an update did to its level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectKind {
    /// Level did not exist and now does.
    Added,
    /// Level existed and grew.
    Increased,
    /// Level existed and shrank (cancellation candidate).
    Decreased,
    /// Level existed and is gone (cancellation candidate).
    Removed,
    /// Nothing changed (size equal to current, or deletion of an absent level).
    Noop,
}

/// Outcome of applying one update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateEffect {
    pub kind: EffectKind,
    /// New size minus old size (signed).
    pub delta_volume: FixedDecimal,
    /// `max(0, old - new)`: the volume taken off the level. Positive exactly
    /// for `Decreased` and `Removed`.
    pub cancelled_volume: FixedDecimal,
}

/// Counters for stream irregularities that are tolerated rather than fatal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnomalyCounters {
    /// Deletions addressed at a level that was not in the book.
    pub remove_absent: u64,
    /// Updates that left the book crossed (best bid >= best ask).
    pub crossed_book: u64,
}

/// Aggregate L2 order book: price -> resting volume per side.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OrderBook {
    bids: BTreeMap<Reverse<FixedDecimal>, FixedDecimal>,
    asks: BTreeMap<FixedDecimal, FixedDecimal>,
    anomalies: AnomalyCounters,
}

/// Query depth used for the cumulative-volume features.
pub const DEFAULT_DEPTH: usize = 25;

impl OrderBook {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces the whole book with a snapshot. Zero-size entries are skipped.
    pub fn apply_snapshot(&mut self, bids: &[(FixedDecimal, FixedDecimal)], asks: &[(FixedDecimal, FixedDecimal)]) {
        self.bids.clear();
        self.asks.clear();
        for &(price, size) in bids {
            if size.is_positive() {
                self.bids.insert(Reverse(price), size);
            }
        }
        for &(price, size) in asks {
            if size.is_positive() {
                self.asks.insert(price, size);
            }
        }
    }

    /// Applies one absolute-size level update and classifies its effect.
    ///
    /// A deletion of an absent level is a no-op counted in
    /// [`AnomalyCounters::remove_absent`], not an error. An update that leaves
    /// the book crossed is applied as-is and counted.
    pub fn apply_update(&mut self, u: &L2Update) -> UpdateEffect {
        debug_assert!(u.price.is_positive(), "price must be positive");
        debug_assert!(!u.size.raw().is_negative(), "size must be non-negative");
        let old = self.level_size(u.side, u.price).unwrap_or(FixedDecimal::ZERO);
        let new = u.size;
        let effect = if new.is_zero() {
            if old.is_zero() {
                self.anomalies.remove_absent += 1;
                UpdateEffect {
                    kind: EffectKind::Noop,
                    delta_volume: FixedDecimal::ZERO,
                    cancelled_volume: FixedDecimal::ZERO,
                }
            } else {
                self.remove_level(u.side, u.price);
                UpdateEffect {
                    kind: EffectKind::Removed,
                    delta_volume: -old,
                    cancelled_volume: old,
                }
            }
        } else {
            self.set_level(u.side, u.price, new);
            let kind = if old.is_zero() {
                EffectKind::Added
            } else if new > old {
                EffectKind::Increased
            } else if new < old {
                EffectKind::Decreased
            } else {
                EffectKind::Noop
            };
            let cancelled = if new < old { old - new } else { FixedDecimal::ZERO };
            UpdateEffect {
                kind,
                delta_volume: new - old,
                cancelled_volume: cancelled,
            }
        };
        if self.is_crossed() {
            self.anomalies.crossed_book += 1;
        }
        effect
    }

    fn set_level(&mut self, side: Side, price: FixedDecimal, size: FixedDecimal) {
        match side {
            Side::Bid => {
                self.bids.insert(Reverse(price), size);
            }
            Side::Ask => {
                self.asks.insert(price, size);
            }
        }
    }

    fn remove_level(&mut self, side: Side, price: FixedDecimal) {
        match side {
            Side::Bid => {
                self.bids.remove(&Reverse(price));
            }
            Side::Ask => {
                self.asks.remove(&price);
            }
        }
    }

    /// Resting volume at an exact price, if the level exists.
    pub fn level_size(&self, side: Side, price: FixedDecimal) -> Option<FixedDecimal> {
        match side {
            Side::Bid => self.bids.get(&Reverse(price)).copied(),
            Side::Ask => self.asks.get(&price).copied(),
        }
    }

    pub fn best_bid(&self) -> Option<FixedDecimal> {
        self.bids.keys().next().map(|Reverse(p)| *p)
    }

    pub fn best_ask(&self) -> Option<FixedDecimal> {
        self.asks.keys().next().map(|p| *p)
    }

    /// Best price on one side (the touch).
    pub fn touch(&self, side: Side) -> Option<FixedDecimal> {
        match side {
            Side::Bid => self.best_bid(),
            Side::Ask => self.best_ask(),
        }
    }

    pub fn top_of_book(&self) -> (Option<FixedDecimal>, Option<FixedDecimal>) {
        (self.best_bid(), self.best_ask())
    }

    /// Arithmetic mid of the touch prices; `None` while either side is empty.
    pub fn mid_price(&self) -> Option<FixedDecimal> {
        Some(self.best_bid()?.midpoint(self.best_ask()?))
    }

    pub fn spread(&self) -> Option<FixedDecimal> {
        Some(self.best_ask()? - self.best_bid()?)
    }

    /// Sum of resting volume over the `depth` best levels of `side`
    /// (everything, if the book is shallower).
    pub fn cumulative_volume(&self, side: Side, depth: usize) -> FixedDecimal {
        assert!(depth >= 1, "depth must be >= 1");
        match side {
            Side::Bid => self.bids.values().take(depth).copied().sum(),
            Side::Ask => self.asks.values().take(depth).copied().sum(),
        }
    }

    pub fn is_crossed(&self) -> bool {
        match (self.best_bid(), self.best_ask()) {
            (Some(b), Some(a)) => b >= a,
            _ => false,
        }
    }

    pub fn bid_levels(&self) -> impl Iterator<Item = (FixedDecimal, FixedDecimal)> + '_ {
        self.bids.iter().map(|(Reverse(p), v)| (*p, *v))
    }

    pub fn ask_levels(&self) -> impl Iterator<Item = (FixedDecimal, FixedDecimal)> + '_ {
        self.asks.iter().map(|(p, v)| (*p, *v))
    }

    pub fn depth_counts(&self) -> (usize, usize) {
        (self.bids.len(), self.asks.len())
    }

    pub fn anomalies(&self) -> AnomalyCounters {
        self.anomalies
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn upd(seq: u64, side: Side, price: &str, size: &str) -> L2Update {
        L2Update {
            seq,
            ts: seq as i64 * 30,
            side,
            price: price.parse().unwrap(),
            size: size.parse().unwrap(),
        }
    }

    #[test]
    fn add_to_empty_book() {
        let mut book = OrderBook::new();
        let eff = book.apply_update(&upd(1, Side::Bid, "100.0", "5.0"));
        assert_eq!(eff.kind, EffectKind::Added);
        assert_eq!(eff.delta_volume, "5".parse().unwrap());
        assert_eq!(eff.cancelled_volume, FixedDecimal::ZERO);
        assert_eq!(book.level_size(Side::Bid, "100".parse().unwrap()), Some("5".parse().unwrap()));
    }

    #[test]
    fn size_reduction_reports_cancelled_volume() {
        let mut book = OrderBook::new();
        book.apply_update(&upd(1, Side::Bid, "100.0", "5.0"));
        let eff = book.apply_update(&upd(2, Side::Bid, "100.0", "2.0"));
        assert_eq!(eff.kind, EffectKind::Decreased);
        assert_eq!(eff.cancelled_volume, "3".parse().unwrap());
        assert_eq!(eff.delta_volume, "-3".parse().unwrap());
    }

    #[test]
    fn removal_and_absent_removal() {
        let mut book = OrderBook::new();
        book.apply_update(&upd(1, Side::Ask, "101", "4"));
        let eff = book.apply_update(&upd(2, Side::Ask, "101", "0"));
        assert_eq!(eff.kind, EffectKind::Removed);
        assert_eq!(eff.cancelled_volume, "4".parse().unwrap());
        assert_eq!(book.depth_counts(), (0, 0));

        let eff = book.apply_update(&upd(3, Side::Ask, "101", "0"));
        assert_eq!(eff.kind, EffectKind::Noop);
        assert_eq!(eff.delta_volume, FixedDecimal::ZERO);
        assert_eq!(book.anomalies().remove_absent, 1);
    }

    #[test]
    fn equal_size_update_is_noop_without_anomaly() {
        let mut book = OrderBook::new();
        book.apply_update(&upd(1, Side::Bid, "100", "5"));
        let eff = book.apply_update(&upd(2, Side::Bid, "100", "5"));
        assert_eq!(eff.kind, EffectKind::Noop);
        assert_eq!(book.anomalies().remove_absent, 0);
    }

    #[test]
    fn top_of_book_ordering() {
        let mut book = OrderBook::new();
        assert_eq!(book.top_of_book(), (None, None));
        book.apply_update(&upd(1, Side::Bid, "99", "1"));
        book.apply_update(&upd(2, Side::Bid, "100", "2"));
        book.apply_update(&upd(3, Side::Ask, "101", "1"));
        assert_eq!(
            book.top_of_book(),
            (Some("100".parse().unwrap()), Some("101".parse().unwrap()))
        );
        assert_eq!(book.mid_price(), Some("100.5".parse().unwrap()));
    }

    #[test]
    fn one_sided_book_has_no_mid() {
        let mut book = OrderBook::new();
        book.apply_update(&upd(1, Side::Bid, "100", "2"));
        assert_eq!(book.mid_price(), None);
        assert_eq!(book.spread(), None);
    }

    #[test]
    fn cumulative_volume_top_levels() {
        let mut book = OrderBook::new();
        book.apply_update(&upd(1, Side::Bid, "100", "2"));
        book.apply_update(&upd(2, Side::Bid, "99", "3"));
        book.apply_update(&upd(3, Side::Bid, "98", "4"));
        assert_eq!(book.cumulative_volume(Side::Bid, 2), "5".parse().unwrap());
        // Depth past the book sums everything.
        assert_eq!(book.cumulative_volume(Side::Bid, 25), "9".parse().unwrap());
    }

    #[test]
    fn crossed_book_is_counted_not_rejected() {
        let mut book = OrderBook::new();
        book.apply_update(&upd(1, Side::Ask, "100", "1"));
        book.apply_update(&upd(2, Side::Bid, "101", "1"));
        assert!(book.is_crossed());
        assert_eq!(book.anomalies().crossed_book, 1);
    }

    #[test]
    fn snapshot_replaces_book() {
        let mut book = OrderBook::new();
        book.apply_update(&upd(1, Side::Bid, "50", "1"));
        book.apply_snapshot(
            &[("100".parse().unwrap(), "5".parse().unwrap()), ("99".parse().unwrap(), FixedDecimal::ZERO)],
            &[("101".parse().unwrap(), "2".parse().unwrap())],
        );
        assert_eq!(book.depth_counts(), (1, 1));
        assert_eq!(book.best_bid(), Some("100".parse().unwrap()));
    }
}
