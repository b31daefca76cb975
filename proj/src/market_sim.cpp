#include "lobexec/market_sim.hpp"

#include "lobexec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace lobexec::sim {

void MarketConfig::validate() const {
    if (trader_count == 0) throw InvalidArgument("trader_count must be positive");
    if (share_count == 0 || share_count >= trader_count)
        throw InvalidArgument("share_count must satisfy 0 < share_count < trader_count");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("gamma must be positive");
    if (jump_range_l < 1) throw InvalidArgument("jump_range_l must be >= 1");
    if (!(mu_buyer > 1.0) || !std::isfinite(mu_buyer)) throw InvalidArgument("mu_buyer must be > 1");
    if (!(mu_seller > 0.0 && mu_seller < 1.0)) throw InvalidArgument("mu_seller must lie in (0, 1)");
    if (requote_gap_min < 1 || requote_gap_min > requote_gap_max)
        throw InvalidArgument("requote gaps must satisfy 1 <= min <= max");
    if (init_window < 1) throw InvalidArgument("init_window must be >= 1");
}

// ---------------------------------------------------------------------------
// LevelCounts

void LevelCounts::ensure(Price p) {
    if (counts_.empty()) {
        counts_.assign(1024, 0);
        base_ = p - 512;
        return;
    }
    const auto size = static_cast<Price>(counts_.size());
    if (p < base_) {
        const Price grow = std::max<Price>(size, base_ - p + 512);
        counts_.insert(counts_.begin(), static_cast<std::size_t>(grow), 0);
        base_ -= grow;
    } else if (p >= base_ + size) {
        const Price grow = std::max<Price>(size, p - (base_ + size) + 512);
        counts_.resize(counts_.size() + static_cast<std::size_t>(grow), 0);
    }
}

void LevelCounts::add(Price p) {
    ensure(p);
    ++counts_[static_cast<std::size_t>(p - base_)];
}

void LevelCounts::remove(Price p) {
    auto& c = counts_.at(static_cast<std::size_t>(p - base_));
    if (c <= 0) throw CorruptedState("removing a trader from an empty price level");
    --c;
}

std::int32_t LevelCounts::count(Price p) const noexcept {
    if (p < base_ || p >= base_ + static_cast<Price>(counts_.size())) return 0;
    return counts_[static_cast<std::size_t>(p - base_)];
}

Price LevelCounts::next_down(Price p) const noexcept {
    if (counts_.empty() || p < base_) return kNone;
    auto k = std::min<Price>(p - base_, static_cast<Price>(counts_.size()) - 1);
    for (; k >= 0; --k)
        if (counts_[static_cast<std::size_t>(k)] > 0) return base_ + k;
    return kNone;
}

Price LevelCounts::next_up(Price p) const noexcept {
    const auto size = static_cast<Price>(counts_.size());
    if (counts_.empty() || p >= base_ + size) return kNone;
    for (auto k = std::max<Price>(p - base_, 0); k < size; ++k)
        if (counts_[static_cast<std::size_t>(k)] > 0) return base_ + k;
    return kNone;
}

// ---------------------------------------------------------------------------
// MarketState

MarketState::MarketState(std::vector<Price> opinions, std::vector<std::uint8_t> holdings,
                         std::uint64_t seed)
    : opinions_(std::move(opinions)), holdings_(std::move(holdings)), rng_(seed) {
    if (opinions_.size() != holdings_.size())
        throw InvalidArgument("opinions and holdings differ in length");
    for (std::size_t i = 0; i < opinions_.size(); ++i) {
        if (holdings_[i] > 1) throw InvalidArgument("holdings must be 0 or 1");
        if (holdings_[i]) {
            ++share_count_;
            sellers_.add(opinions_[i]);
            if (best_ask_ == LevelCounts::kNone || opinions_[i] < best_ask_) best_ask_ = opinions_[i];
        } else {
            buyers_.add(opinions_[i]);
            if (best_bid_ == LevelCounts::kNone || opinions_[i] > best_bid_) best_bid_ = opinions_[i];
        }
    }
    if (share_count_ == 0 || share_count_ == opinions_.size())
        throw InvalidArgument("need at least one buyer and one seller");
}

void MarketState::set_trader(std::size_t i, Price price, bool holding) {
    const Price old = opinions_.at(i);
    const bool old_holding = holdings_[i] != 0;
    if (old == price && old_holding == holding) return;

    // Add before removing so that a side never becomes empty mid-update.
    if (holding) {
        sellers_.add(price);
        if (best_ask_ == LevelCounts::kNone || price < best_ask_) best_ask_ = price;
    } else {
        buyers_.add(price);
        if (best_bid_ == LevelCounts::kNone || price > best_bid_) best_bid_ = price;
    }
    if (old_holding) {
        sellers_.remove(old);
        if (old == best_ask_ && sellers_.count(old) == 0) best_ask_ = sellers_.next_up(old);
    } else {
        buyers_.remove(old);
        if (old == best_bid_ && buyers_.count(old) == 0) best_bid_ = buyers_.next_down(old);
    }
    opinions_[i] = price;
    holdings_[i] = holding ? 1 : 0;
    if (holding != old_holding) share_count_ += holding ? 1 : static_cast<std::size_t>(-1);
}

MarketState MarketState::mirrored(Price axis) const {
    std::vector<Price> ops(opinions_.size());
    std::vector<std::uint8_t> hs(holdings_.size());
    for (std::size_t i = 0; i < ops.size(); ++i) {
        ops[i] = axis - opinions_[i];
        hs[i] = holdings_[i] ? 0 : 1;
    }
    MarketState m(std::move(ops), std::move(hs), 0);
    m.rng_ = rng_;
    m.time_ = time_;
    return m;
}

bool MarketState::check_consistency() const {
    Price bid = LevelCounts::kNone, ask = LevelCounts::kNone;
    std::size_t holders = 0;
    for (std::size_t i = 0; i < opinions_.size(); ++i) {
        if (holdings_[i]) {
            ++holders;
            if (ask == LevelCounts::kNone || opinions_[i] < ask) ask = opinions_[i];
        } else if (bid == LevelCounts::kNone || opinions_[i] > bid) {
            bid = opinions_[i];
        }
    }
    return holders == share_count_ && bid == best_bid_ && ask == best_ask_ &&
           buyers_.count(bid) > 0 && sellers_.count(ask) > 0;
}

std::string MarketState::serialize() const {
    std::string out;
    auto put = [&out](const void* p, std::size_t n) {
        out.append(static_cast<const char*>(p), n);
    };
    const std::uint64_t n = opinions_.size();
    put(&n, sizeof n);
    for (Price p : opinions_) put(&p, sizeof p);
    put(holdings_.data(), holdings_.size());
    put(&time_, sizeof time_);
    for (auto w : rng_.state()) put(&w, sizeof w);
    return out;
}

Quotes best_quotes(const MarketState& state) {
    Quotes q;
    q.best_bid = state.best_bid();
    q.best_ask = state.best_ask();
    q.mid_price = 0.5 * static_cast<double>(q.best_bid + q.best_ask);
    return q;
}

BookSnapshot snapshot_book(const MarketState& state) {
    BookSnapshot s;
    s.best_bid = state.best_bid();
    s.best_ask = state.best_ask();
    const auto ops = state.opinions();
    const auto hs = state.holdings();
    for (std::size_t i = 0; i < ops.size(); ++i) {
        if (hs[i])
            ++s.ask_profile[ops[i] - s.best_ask];
        else
            ++s.bid_profile[ops[i] - s.best_bid];
    }
    return s;
}

// ---------------------------------------------------------------------------
// JumpLaw

std::vector<double> JumpLaw::build(int l, double mu) {
    std::vector<double> mass(static_cast<std::size_t>(2 * l + 1), 0.0);
    const double base = 1.0 / (2.0 * l + 1.0);
    double off_zero = 0.0;
    for (int m = -l; m <= l; ++m) {
        if (m == 0) continue;
        const double p = base * std::min(std::pow(mu, m), 1.0);
        mass[static_cast<std::size_t>(m + l)] = p;
        off_zero += p;
    }
    if (off_zero > 1.0) throw InvalidArgument("opinion jump masses exceed one");
    mass[static_cast<std::size_t>(l)] = 1.0 - off_zero;
    return mass;
}

JumpLaw::JumpLaw(int l, double mu_buyer, double mu_seller)
    : l_(l), buyer_mass_(build(l, mu_buyer)), seller_mass_(build(l, mu_seller)) {
    auto cdf = [](const std::vector<double>& m) {
        std::vector<double> c(m.size());
        std::partial_sum(m.begin(), m.end(), c.begin());
        c.back() = 1.0;
        return c;
    };
    buyer_cdf_ = cdf(buyer_mass_);
    seller_cdf_ = cdf(seller_mass_);
}

int JumpLaw::sample(bool is_buyer, Rng& rng) const noexcept {
    const auto& cdf = is_buyer ? buyer_cdf_ : seller_cdf_;
    const double u = rng.uniform01();
    std::size_t k = 0;
    while (u >= cdf[k]) ++k;
    return static_cast<int>(k) - l_;
}

// ---------------------------------------------------------------------------
// OpinionGame

namespace {

constexpr std::size_t kWeightTableSize = 8192;

// r-th trader (in index order) with the given holding at price p.
std::size_t nth_at(const MarketState& s, bool holding, Price p, std::uint64_t r) {
    const auto ops = s.opinions();
    const auto hs = s.holdings();
    for (std::size_t i = 0; i < ops.size(); ++i) {
        if ((hs[i] != 0) == holding && ops[i] == p) {
            if (r == 0) return i;
            --r;
        }
    }
    throw CorruptedState("price level count disagrees with traders");
}

// r-th trader (in index order) with the given holding.
std::size_t nth_with(const MarketState& s, bool holding, std::uint64_t r) {
    const auto hs = s.holdings();
    for (std::size_t i = 0; i < hs.size(); ++i) {
        if ((hs[i] != 0) == holding) {
            if (r == 0) return i;
            --r;
        }
    }
    throw CorruptedState("share count disagrees with holdings");
}

}  // namespace

OpinionGame::OpinionGame(MarketConfig config)
    : config_((config.validate(), config)),
      jumps_(config_.jump_range_l, config_.mu_buyer, config_.mu_seller) {
    weight_table_.resize(kWeightTableSize);
    for (std::size_t k = 0; k < kWeightTableSize; ++k)
        weight_table_[k] = std::pow(1.0 + static_cast<double>(k), -config_.gamma);
}

double OpinionGame::weight_at(Price distance) const {
    if (distance < 0) throw CorruptedState("trader quotes through its own best price");
    if (static_cast<std::uint64_t>(distance) < kWeightTableSize)
        return weight_table_[static_cast<std::size_t>(distance)];
    return std::pow(1.0 + static_cast<double>(distance), -config_.gamma);
}

double OpinionGame::selection_weight(const MarketState& state, std::size_t i) const {
    const Price p = state.opinion(i);
    return weight_at(state.holds(i) ? p - state.best_ask() : state.best_bid() - p);
}

std::vector<double> OpinionGame::selection_probabilities(const MarketState& state) const {
    std::vector<double> w(state.trader_count());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = selection_weight(state, i);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= total;
    return w;
}

std::size_t OpinionGame::choose_trader(MarketState& state) const {
    // Every weight is <= 1, so accepting a uniform candidate with probability
    // equal to its weight samples exactly proportional to the weights.
    const std::size_t n = state.trader_count();
    auto& rng = state.rng();
    for (;;) {
        const auto i = static_cast<std::size_t>(rng.below(n));
        const double w = selection_weight(state, i);
        if (w >= 1.0 || rng.uniform01() < w) return i;
    }
}

void OpinionGame::trade_after_buyer_cross(MarketState& state, std::size_t i, Price crossed) const {
    auto& rng = state.rng();
    const Price ask = state.best_ask();
    const auto j = nth_at(state, true, ask, rng.below(static_cast<std::uint64_t>(state.sellers_at(ask))));
    state.set_trader(i, crossed, true);
    state.set_trader(j, ask, false);
    const Price anchor = state.best_ask();
    const int gap_up = draw_gap(rng);
    const int gap_down = draw_gap(rng);
    state.set_trader(i, anchor + gap_up, true);
    state.set_trader(j, anchor - gap_down, false);
}

void OpinionGame::trade_after_seller_cross(MarketState& state, std::size_t i, Price crossed) const {
    auto& rng = state.rng();
    const Price bid = state.best_bid();
    const auto j = nth_at(state, false, bid, rng.below(static_cast<std::uint64_t>(state.buyers_at(bid))));
    state.set_trader(i, crossed, false);
    state.set_trader(j, bid, true);
    const Price anchor = state.best_bid();
    const int gap_down = draw_gap(rng);
    const int gap_up = draw_gap(rng);
    state.set_trader(i, anchor - gap_down, false);
    state.set_trader(j, anchor + gap_up, true);
}

bool OpinionGame::step(MarketState& state) const {
    const std::size_t i = choose_trader(state);
    const bool buyer = !state.holds(i);
    const int d = jumps_.sample(buyer, state.rng());
    state.advance_time();
    if (d == 0) return false;
    const Price moved = state.opinion(i) + d;
    if (buyer) {
        if (moved < state.best_ask()) {
            state.set_trader(i, moved, false);
            return false;
        }
        trade_after_buyer_cross(state, i, moved);
    } else {
        if (moved > state.best_bid()) {
            state.set_trader(i, moved, true);
            return false;
        }
        trade_after_seller_cross(state, i, moved);
    }
    return true;
}

void OpinionGame::run(MarketState& state, std::uint64_t steps,
                      const std::function<void(const MarketState&)>& observer) const {
    for (std::uint64_t k = 0; k < steps; ++k) {
        step(state);
        if (observer) observer(state);
    }
}

std::vector<Price> OpinionGame::execute_large_buy(MarketState& state, std::int64_t volume,
                                                  const StopRule& stop) const {
    if (volume <= 0) throw InvalidArgument("large order volume must be positive");
    const std::size_t n = state.trader_count();
    const std::size_t m = state.share_count();
    if (static_cast<std::uint64_t>(volume) > n - m)
        throw TailExhausted("buy volume exceeds the number of buyers in the tail");

    auto& rng = state.rng();
    std::vector<Price> prices;
    prices.reserve(static_cast<std::size_t>(volume));
    for (std::int64_t x = 0; x < volume; ++x) {
        const Price ask = state.best_ask();
        const auto ops = state.opinions();
        const auto lowest = static_cast<std::size_t>(
            std::min_element(ops.begin(), ops.end()) - ops.begin());
        if (state.holds(lowest)) throw CorruptedState("lowest opinion belongs to a seller");
        const auto partner = nth_at(state, true, ask,
                                    rng.below(static_cast<std::uint64_t>(state.sellers_at(ask))));
        const int gap = draw_gap(rng);
        // Requote offset of the new seller follows the current ask-side profile.
        const auto k = nth_with(state, true, rng.below(m));
        const Price offset = state.opinion(k) - ask;
        state.set_trader(lowest, ask + offset, true);
        state.set_trader(partner, ask - gap, false);
        prices.push_back(ask);
        if (stop && stop(state)) break;
    }
    state.advance_time();
    return prices;
}

std::vector<Price> OpinionGame::execute_large_sell(MarketState& state, std::int64_t volume,
                                                   const StopRule& stop) const {
    if (volume <= 0) throw InvalidArgument("large order volume must be positive");
    const std::size_t n = state.trader_count();
    const std::size_t m = state.share_count();
    if (static_cast<std::uint64_t>(volume) > m)
        throw TailExhausted("sell volume exceeds the number of sellers in the tail");

    auto& rng = state.rng();
    std::vector<Price> prices;
    prices.reserve(static_cast<std::size_t>(volume));
    for (std::int64_t x = 0; x < volume; ++x) {
        const Price bid = state.best_bid();
        const auto ops = state.opinions();
        const auto highest = static_cast<std::size_t>(
            std::max_element(ops.begin(), ops.end(),
                             [](Price a, Price b) { return a < b; }) - ops.begin());
        // max_element returns the first maximum, matching the buy-side tie rule.
        if (!state.holds(highest)) throw CorruptedState("highest opinion belongs to a buyer");
        const auto partner = nth_at(state, false, bid,
                                    rng.below(static_cast<std::uint64_t>(state.buyers_at(bid))));
        const int gap = draw_gap(rng);
        const auto k = nth_with(state, false, rng.below(n - m));
        const Price offset = bid - state.opinion(k);
        state.set_trader(highest, bid - offset, false);
        state.set_trader(partner, bid + gap, true);
        prices.push_back(bid);
        if (stop && stop(state)) break;
    }
    state.advance_time();
    return prices;
}

MarketState OpinionGame::initial_state(std::uint64_t seed) const {
    const std::size_t n = config_.trader_count;
    const std::size_t m = config_.share_count;
    Rng init(derive_seed(seed, 0));
    const Price half = config_.init_window / 2;
    std::vector<Price> ops(n);
    for (auto& p : ops) p = init.uniform_int(-half, half);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ops[a] < ops[b]; });
    std::vector<std::uint8_t> hs(n, 0);
    for (std::size_t r = n - m; r < n; ++r) hs[order[r]] = 1;
    if (ops[order[n - m]] <= ops[order[n - m - 1]]) {
        for (std::size_t r = n - m; r < n; ++r) ++ops[order[r]];
    }
    return MarketState(std::move(ops), std::move(hs), derive_seed(seed, 1));
}

MarketState OpinionGame::burned_in_state(std::uint64_t seed) const {
    MarketState s = initial_state(seed);
    run(s, config_.burn_in_steps);
    return s;
}

}  // namespace lobexec::sim
