#pragma once

#include <vector>

namespace lobexec::model {

/// Right-continuous step shape function f on unit cells [o, o+1), o integer,
/// extended by a constant tail on both sides so that F is a bijection of R.
///
/// Cells cover the contiguous range [first_offset, first_offset + n); the
/// range must contain 0 unless it is empty (a pure block shape).
class ShapeTable {
public:
    ShapeTable(int first_offset, std::vector<double> values, double tail_value);

    /// f == q everywhere.
    static ShapeTable block(double q);
    /// Positive cells 0..n-1 from `values`, mirrored onto -n..-1 so that
    /// f(-x) = f(x - 1) cellwise; tail beyond both ends.
    static ShapeTable symmetric(const std::vector<double>& positive_cells, double tail_value);

    double f(double x) const noexcept;
    /// F(x) = int_0^x f.
    double F(double x) const noexcept;
    double F_inverse(double y) const noexcept;
    /// int_0^x t f(t) dt.
    double F_tilde(double x) const noexcept;
    /// G(y) = F_tilde(F^-1(y)); convex with G' = F^-1.
    double G(double y) const noexcept { return F_tilde(F_inverse(y)); }

    int first_offset() const noexcept { return lo_; }
    int end_offset() const noexcept { return lo_ + static_cast<int>(values_.size()); }
    const std::vector<double>& values() const noexcept { return values_; }
    double tail_value() const noexcept { return tail_; }
    /// Smallest value of f over the whole line.
    double min_value() const noexcept;

private:
    int lo_;
    std::vector<double> values_;
    double tail_;
    std::vector<double> F_edge_;       // F at lo_ + k
    std::vector<double> Ftilde_edge_;  // F_tilde at lo_ + k
};

}  // namespace lobexec::model
