#pragma once

// Opinion Game order-book simulator with large-order execution.
//
// Traders hold an integer opinion p_i and either zero or one share. Buyers
// (no share) quote at their opinion on the bid side, sellers on the ask side.
// A round picks one trader with a weight decaying in its distance from the
// best quote, moves its opinion by a biased random jump and, if that crosses
// the spread, trades with a counterparty at the opposite best quote.

#include "lobexec/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace lobexec::sim {

using Price = std::int64_t;

struct MarketConfig {
    std::size_t trader_count = 2000;
    std::size_t share_count = 1000;
    double gamma = 1.5;
    int jump_range_l = 4;
    double mu_buyer = 1.1051709180756477;   // e^0.1
    double mu_seller = 0.9048374180359595;  // e^-0.1
    int requote_gap_min = 5;
    int requote_gap_max = 20;
    std::uint64_t burn_in_steps = 1'000'000;
    std::uint64_t seed = 1;
    /// Width of the uniform window the initial opinions are drawn from. Close
    /// to the steady-state book width; much wider windows relax over several
    /// million rounds.
    int init_window = 80;

    /// Throws InvalidArgument on the first violated constraint.
    void validate() const;
};

struct Quotes {
    Price best_bid = 0;
    Price best_ask = 0;
    /// (bid + ask) / 2, exact for half-integers.
    double mid_price = 0.0;
};

/// Order-book profile relative to the best quotes.
struct BookSnapshot {
    std::map<Price, std::size_t> ask_profile;  // offset >= 0 from best ask
    std::map<Price, std::size_t> bid_profile;  // offset <= 0 from best bid
    Price best_bid = 0;
    Price best_ask = 0;
};

/// Occupancy counts per integer price level; grows on demand.
class LevelCounts {
public:
    void add(Price p);
    void remove(Price p);
    std::int32_t count(Price p) const noexcept;
    /// Largest occupied level <= p, or kNone.
    Price next_down(Price p) const noexcept;
    /// Smallest occupied level >= p, or kNone.
    Price next_up(Price p) const noexcept;

    static constexpr Price kNone = INT64_MIN;

private:
    void ensure(Price p);

    std::vector<std::int32_t> counts_;
    Price base_ = 0;
};

class MarketState {
public:
    /// Builds a state from explicit opinions and holdings (0/1). The RNG is
    /// seeded from `seed`. Throws InvalidArgument when sizes mismatch or
    /// when nobody / everybody holds a share.
    MarketState(std::vector<Price> opinions, std::vector<std::uint8_t> holdings,
                std::uint64_t seed);

    std::size_t trader_count() const noexcept { return opinions_.size(); }
    std::size_t share_count() const noexcept { return share_count_; }
    std::span<const Price> opinions() const noexcept { return opinions_; }
    std::span<const std::uint8_t> holdings() const noexcept { return holdings_; }
    Price opinion(std::size_t i) const { return opinions_.at(i); }
    bool holds(std::size_t i) const { return holdings_.at(i) != 0; }

    Price best_bid() const noexcept { return best_bid_; }
    Price best_ask() const noexcept { return best_ask_; }
    bool is_stable() const noexcept { return best_bid_ < best_ask_; }
    /// Number of sellers quoting exactly at `p`.
    std::int32_t sellers_at(Price p) const noexcept { return sellers_.count(p); }
    std::int32_t buyers_at(Price p) const noexcept { return buyers_.count(p); }

    std::uint64_t time() const noexcept { return time_; }
    void advance_time(std::uint64_t dt = 1) noexcept { time_ += dt; }

    Rng& rng() noexcept { return rng_; }
    const Rng& rng() const noexcept { return rng_; }

    /// Moves trader i to `price` with the given holding. Keeps the level
    /// counts and cached best quotes consistent.
    void set_trader(std::size_t i, Price price, bool holding);

    /// Opinions reflected to `axis - p` and holdings complemented.
    MarketState mirrored(Price axis) const;

    /// Recomputes quotes from scratch and compares them with the cache.
    bool check_consistency() const;

    /// Deterministic byte encoding of opinions, holdings, time and RNG.
    std::string serialize() const;

    friend bool operator==(const MarketState& a, const MarketState& b) {
        return a.opinions_ == b.opinions_ && a.holdings_ == b.holdings_ &&
               a.time_ == b.time_ && a.rng_ == b.rng_;
    }

private:
    std::vector<Price> opinions_;
    std::vector<std::uint8_t> holdings_;
    std::size_t share_count_ = 0;
    std::uint64_t time_ = 0;
    Rng rng_;
    LevelCounts buyers_;
    LevelCounts sellers_;
    Price best_bid_ = LevelCounts::kNone;
    Price best_ask_ = LevelCounts::kNone;
};

Quotes best_quotes(const MarketState& state);
BookSnapshot snapshot_book(const MarketState& state);

/// Law of the opinion jump d on {-l, ..., l}.
class JumpLaw {
public:
    JumpLaw(int l, double mu_buyer, double mu_seller);

    /// P(d = m) for m = -l..l, index m + l.
    const std::vector<double>& masses(bool is_buyer) const noexcept {
        return is_buyer ? buyer_mass_ : seller_mass_;
    }
    int sample(bool is_buyer, Rng& rng) const noexcept;
    int range() const noexcept { return l_; }

private:
    static std::vector<double> build(int l, double mu);

    int l_;
    std::vector<double> buyer_mass_, seller_mass_;
    std::vector<double> buyer_cdf_, seller_cdf_;
};

struct PricePoint {
    std::uint64_t step = 0;
    Price best_bid = 0;
    Price best_ask = 0;
};

/// The dynamics for one validated MarketConfig. Immutable and shareable;
/// every random draw comes from the MarketState passed in.
class OpinionGame {
public:
    explicit OpinionGame(MarketConfig config);

    const MarketConfig& config() const noexcept { return config_; }
    const JumpLaw& jump_law() const noexcept { return jumps_; }

    /// Unburned state: opinions uniform on the init window, the M highest
    /// opinions hold the shares (ties at the boundary are resolved by lifting
    /// every holder one tick).
    MarketState initial_state(std::uint64_t seed) const;
    /// initial_state(seed) followed by config.burn_in_steps rounds.
    MarketState burned_in_state(std::uint64_t seed) const;

    /// Selection weight of trader i, (1 + distance to own best quote)^-gamma.
    /// Throws CorruptedState if the distance is negative.
    double selection_weight(const MarketState& state, std::size_t i) const;
    /// Normalised selection probabilities of every trader.
    std::vector<double> selection_probabilities(const MarketState& state) const;
    /// Draws the trader acting in the next round (exact rejection sampling).
    std::size_t choose_trader(MarketState& state) const;

    int sample_opinion_jump(bool is_buyer, Rng& rng) const noexcept {
        return jumps_.sample(is_buyer, rng);
    }

    /// One full round. Returns true when a trade took place.
    bool step(MarketState& state) const;
    /// `steps` rounds; the optional observer sees the state after each one.
    void run(MarketState& state, std::uint64_t steps,
             const std::function<void(const MarketState&)>& observer = {}) const;

    /// Checked after every executed unit; returning true ends the order early.
    using StopRule = std::function<bool(const MarketState&)>;

    /// Forced execution of up to `volume` unit buys against the ask; returns
    /// the execution price of every unit. Consumes one time step.
    std::vector<Price> execute_large_buy(MarketState& state, std::int64_t volume,
                                         const StopRule& stop = {}) const;
    /// Mirror image of execute_large_buy against the bid.
    std::vector<Price> execute_large_sell(MarketState& state, std::int64_t volume,
                                          const StopRule& stop = {}) const;

private:
    int draw_gap(Rng& rng) const noexcept {
        return static_cast<int>(rng.uniform_int(config_.requote_gap_min, config_.requote_gap_max));
    }
    double weight_at(Price distance) const;
    void trade_after_buyer_cross(MarketState& state, std::size_t i, Price crossed) const;
    void trade_after_seller_cross(MarketState& state, std::size_t i, Price crossed) const;

    MarketConfig config_;
    JumpLaw jumps_;
    std::vector<double> weight_table_;
};

}  // namespace lobexec::sim
