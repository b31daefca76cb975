#include "lobexec/shape.hpp"

#include "lobexec/errors.hpp"

#include <algorithm>
#include <cmath>

namespace lobexec::model {

ShapeTable::ShapeTable(int first_offset, std::vector<double> values, double tail_value)
    : lo_(values.empty() ? 0 : first_offset), values_(std::move(values)), tail_(tail_value) {
    if (!(tail_ > 0.0) || !std::isfinite(tail_)) throw InvalidArgument("tail value must be positive");
    for (double v : values_)
        if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("shape values must be positive");
    const int n = static_cast<int>(values_.size());
    if (n > 0 && (lo_ > 0 || lo_ + n < 0))
        throw InvalidArgument("shape cells must cover offset 0");

    F_edge_.assign(static_cast<std::size_t>(n) + 1, 0.0);
    Ftilde_edge_.assign(static_cast<std::size_t>(n) + 1, 0.0);
    const int zero = -lo_;  // edge index of x = 0
    for (int k = zero; k < n; ++k) {
        const double a = lo_ + k;
        const auto u = static_cast<std::size_t>(k);
        F_edge_[u + 1] = F_edge_[u] + values_[u];
        Ftilde_edge_[u + 1] = Ftilde_edge_[u] + values_[u] * (a + 0.5);
    }
    for (int k = zero - 1; k >= 0; --k) {
        const double a = lo_ + k;
        const auto u = static_cast<std::size_t>(k);
        F_edge_[u] = F_edge_[u + 1] - values_[u];
        Ftilde_edge_[u] = Ftilde_edge_[u + 1] - values_[u] * (a + 0.5);
    }
}

ShapeTable ShapeTable::block(double q) { return ShapeTable(0, {}, q); }

ShapeTable ShapeTable::symmetric(const std::vector<double>& positive_cells, double tail_value) {
    const int n = static_cast<int>(positive_cells.size());
    std::vector<double> v(positive_cells.rbegin(), positive_cells.rend());
    v.insert(v.end(), positive_cells.begin(), positive_cells.end());
    return ShapeTable(-n, std::move(v), tail_value);
}

double ShapeTable::f(double x) const noexcept {
    const double rel = std::floor(x) - lo_;
    if (rel < 0.0 || rel >= static_cast<double>(values_.size())) return tail_;
    return values_[static_cast<std::size_t>(rel)];
}

double ShapeTable::F(double x) const noexcept {
    const double lo = lo_;
    const double hi = end_offset();
    if (values_.empty()) return tail_ * x;
    if (x < lo) return F_edge_.front() + tail_ * (x - lo);
    if (x >= hi) return F_edge_.back() + tail_ * (x - hi);
    const auto k = static_cast<std::size_t>(std::floor(x) - lo);
    return F_edge_[k] + values_[k] * (x - (lo + static_cast<double>(k)));
}

double ShapeTable::F_inverse(double y) const noexcept {
    if (values_.empty()) return y / tail_;
    const double lo = lo_;
    const double hi = end_offset();
    if (y < F_edge_.front()) return lo + (y - F_edge_.front()) / tail_;
    if (y >= F_edge_.back()) return hi + (y - F_edge_.back()) / tail_;
    auto it = std::upper_bound(F_edge_.begin(), F_edge_.end(), y);
    const auto k = static_cast<std::size_t>(it - F_edge_.begin()) - 1;
    return lo + static_cast<double>(k) + (y - F_edge_[k]) / values_[k];
}

double ShapeTable::F_tilde(double x) const noexcept {
    auto piece = [](double base, double v, double a, double b) {
        return base + 0.5 * v * (b - a) * (b + a);
    };
    if (values_.empty()) return 0.5 * tail_ * x * x;
    const double lo = lo_;
    const double hi = end_offset();
    if (x < lo) return piece(Ftilde_edge_.front(), tail_, lo, x);
    if (x >= hi) return piece(Ftilde_edge_.back(), tail_, hi, x);
    const auto k = static_cast<std::size_t>(std::floor(x) - lo);
    return piece(Ftilde_edge_[k], values_[k], lo + static_cast<double>(k), x);
}

double ShapeTable::min_value() const noexcept {
    double m = tail_;
    for (double v : values_) m = std::min(m, v);
    return m;
}

}  // namespace lobexec::model
