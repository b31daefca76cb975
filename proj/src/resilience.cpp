#include "lobexec/resilience.hpp"

#include "lobexec/errors.hpp"

#include <algorithm>
#include <cmath>

namespace lobexec::model {

ResilienceCurve::ResilienceCurve(std::vector<double> knots, std::vector<double> values,
                                 std::vector<double> slopes)
    : knots_(std::move(knots)), values_(std::move(values)), slopes_(std::move(slopes)) {
    if (knots_.empty() || knots_.size() != values_.size() || knots_.size() != slopes_.size())
        throw InvalidArgument("resilience knots, values and slopes must have equal non-zero length");
    if (knots_.front() < 0.0) throw InvalidArgument("resilience knots must be non-negative");
    for (std::size_t i = 1; i < knots_.size(); ++i)
        if (!(knots_[i] > knots_[i - 1])) throw InvalidArgument("resilience knots must increase");
    for (std::size_t i = 0; i < knots_.size(); ++i)
        if (!std::isfinite(values_[i]) || !std::isfinite(slopes_[i]) || !std::isfinite(knots_[i]))
            throw InvalidArgument("resilience data must be finite");
    compute_bounds();
}

ResilienceCurve ResilienceCurve::constant(double rho) {
    if (!(rho > 0.0)) throw InvalidArgument("constant resilience must be positive");
    return ResilienceCurve({0.0}, {rho}, {0.0});
}

ResilienceCurve ResilienceCurve::monotone(std::vector<double> knots, std::vector<double> values) {
    const std::size_t n = knots.size();
    std::vector<double> slopes(n, 0.0);
    if (n >= 3) {
        std::vector<double> h(n - 1), delta(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = knots[i + 1] - knots[i];
            delta[i] = (values[i + 1] - values[i]) / h[i];
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (delta[i - 1] * delta[i] <= 0.0) continue;
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            slopes[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    return ResilienceCurve(std::move(knots), std::move(values), std::move(slopes));
}

ResilienceCurve ResilienceCurve::hermite(std::vector<double> knots, std::vector<double> values,
                                         std::vector<double> slopes) {
    return ResilienceCurve(std::move(knots), std::move(values), std::move(slopes));
}

double ResilienceCurve::rate(double x) const noexcept {
    const double ax = std::fabs(x);
    if (ax <= knots_.front()) return values_.front();
    if (ax >= knots_.back()) return values_.back();
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), ax);
    const auto i = static_cast<std::size_t>(it - knots_.begin()) - 1;
    const double h = knots_[i + 1] - knots_[i];
    const double t = (ax - knots_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * values_[i] + (t3 - 2 * t2 + t) * h * slopes_[i] +
           (-2 * t3 + 3 * t2) * values_[i + 1] + (t3 - t2) * h * slopes_[i + 1];
}

double ResilienceCurve::derivative(double x) const noexcept {
    const double ax = std::fabs(x);
    if (ax <= knots_.front() || ax >= knots_.back()) return 0.0;
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), ax);
    const auto i = static_cast<std::size_t>(it - knots_.begin()) - 1;
    const double h = knots_[i + 1] - knots_[i];
    const double t = (ax - knots_[i]) / h;
    const double t2 = t * t;
    const double d = (6 * t2 - 6 * t) * (values_[i] - values_[i + 1]) / h +
                     (3 * t2 - 4 * t + 1) * slopes_[i] + (3 * t2 - 2 * t) * slopes_[i + 1];
    return x < 0.0 ? -d : d;
}

void ResilienceCurve::compute_bounds() {
    k_ = *std::min_element(values_.begin(), values_.end());
    K_ = *std::max_element(values_.begin(), values_.end());
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
        constexpr int kSamples = 64;
        const double h = knots_[i + 1] - knots_[i];
        for (int s = 1; s < kSamples; ++s) {
            const double r = rate(knots_[i] + h * s / kSamples);
            k_ = std::min(k_, r);
            K_ = std::max(K_, r);
        }
    }
}

}  // namespace lobexec::model
