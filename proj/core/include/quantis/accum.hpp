#ifndef QUANTIS_ACCUM_HPP
#define QUANTIS_ACCUM_HPP

#include <cmath>

namespace quantis {

// Neumaier compensated summation. Used everywhere a sum must not depend on
// how work was split across threads: partial sums are formed per fixed-size
// chunk and combined in chunk-index order.
class NeumaierSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  void merge(const NeumaierSum& other) {
    add(other.sum_);
    comp_ += other.comp_;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace quantis

#endif
