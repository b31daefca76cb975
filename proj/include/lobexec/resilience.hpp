#pragma once

#include <vector>

namespace lobexec::model {

/// Impact-dependent resilience speed rho(x) with its first derivative.
///
/// A cubic Hermite interpolant through knots 0 <= x_0 < ... < x_m, clamped to
/// the end values outside [x_0, x_m] and extended evenly, rho(-x) = rho(x).
/// The curve is C^1 whenever the end slopes are zero (always true for the
/// monotone() factory); second derivatives jump at the knots.
class ResilienceCurve {
public:
    static ResilienceCurve constant(double rho);
    /// Fritsch-Butland (PCHIP-type) slopes, zero at both ends, so the curve is
    /// monotone wherever the data are and never leaves the knot range.
    static ResilienceCurve monotone(std::vector<double> knots, std::vector<double> values);
    /// Explicit slopes at every knot.
    static ResilienceCurve hermite(std::vector<double> knots, std::vector<double> values,
                                   std::vector<double> slopes);

    double rate(double x) const noexcept;
    double derivative(double x) const noexcept;
    double operator()(double x) const noexcept { return rate(x); }

    /// Bounds [k, K] of the range (exact for monotone/constant curves, dense
    /// sampling for general Hermite data).
    double lower_bound() const noexcept { return k_; }
    double upper_bound() const noexcept { return K_; }
    bool is_constant() const noexcept { return knots_.size() == 1; }

    const std::vector<double>& knots() const noexcept { return knots_; }
    const std::vector<double>& values() const noexcept { return values_; }
    const std::vector<double>& slopes() const noexcept { return slopes_; }

private:
    ResilienceCurve(std::vector<double> knots, std::vector<double> values, std::vector<double> slopes);
    void compute_bounds();

    std::vector<double> knots_, values_, slopes_;
    double k_ = 0.0, K_ = 0.0;
};

}  // namespace lobexec::model
