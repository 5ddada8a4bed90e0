#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace polarmem {

class TensorError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense real-valued tensor, row-major over its extents.
///
/// A rank-0 tensor holds one scalar. Axis labels are optional bookkeeping tags;
/// operations carry them along with the axes they describe but never inspect
/// them. Values are stored as given: nothing here renormalizes probabilities.
class Tensor {
 public:
  Tensor();
  explicit Tensor(std::vector<std::size_t> dims, double fill = 0.0);
  Tensor(std::vector<std::size_t> dims, std::vector<double> data);

  static Tensor scalar(double value);

  std::size_t rank() const noexcept { return dims_.size(); }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  const std::vector<std::size_t>& strides() const noexcept { return strides_; }
  std::size_t extent(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }
  std::span<const double> data() const noexcept { return data_; }

  double at(std::span<const std::size_t> index) const;
  double at(std::initializer_list<std::size_t> index) const;
  /// Value of a rank-0 tensor.
  double value() const;

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  Tensor with_labels(std::vector<std::string> labels) const;

  Tensor scaled(double factor) const;

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> strides_;
  std::vector<double> data_;
  std::vector<std::string> labels_;
};

/// Sums over the paired axes. The result's axes are A's free axes followed by
/// B's free axes, each group in its original order.
Tensor contract(const Tensor& a, std::span<const std::size_t> axes_a, const Tensor& b,
                std::span<const std::size_t> axes_b);
Tensor contract(const Tensor& a, std::initializer_list<std::size_t> axes_a, const Tensor& b,
                std::initializer_list<std::size_t> axes_b);

/// Slices `axis` at `value`; the rank drops by one.
Tensor fix_index(const Tensor& a, std::size_t axis, std::size_t value);
/// Sums `axis` out; the rank drops by one.
Tensor sum_index(const Tensor& a, std::size_t axis);
Tensor outer(const Tensor& a, const Tensor& b);

namespace tensors {

Tensor point(unsigned bit);
inline Tensor point0() { return point(0); }
inline Tensor point1() { return point(1); }
Tensor ones(std::size_t extent);
/// cnot[a,b,c,d] = 1 iff c = a and d = a xor b.
Tensor cnot();

}  // namespace tensors

}  // namespace polarmem
