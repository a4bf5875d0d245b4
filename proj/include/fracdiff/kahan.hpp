#pragma once

#include <cmath>

namespace fracdiff {

// Kahan-Babuska-Neumaier compensated accumulator. Keeps the running error of
// long alternating sums at O(eps) instead of O(n*eps).
class kahan_sum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Compensated in-place add for externally stored (sum, compensation) pairs;
// used where per-slot accumulators would be too heavy.
inline void compensated_add(double& sum, double& comp, double x) noexcept {
    const double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x)) {
        comp += (sum - t) + x;
    } else {
        comp += (x - t) + sum;
    }
    sum = t;
}

}  // namespace fracdiff
