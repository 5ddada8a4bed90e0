#include "polarmem/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

namespace polarmem {

namespace {

std::vector<std::size_t> row_major_strides(const std::vector<std::size_t>& dims) {
  std::vector<std::size_t> strides(dims.size());
  std::size_t stride = 1;
  for (std::size_t k = dims.size(); k-- > 0;) {
    strides[k] = stride;
    stride *= dims[k];
  }
  return strides;
}

std::size_t product(const std::vector<std::size_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

// Offsets (relative to the tensor origin) of every multi-index over `axes`,
// enumerated in row-major order of those axes.
std::vector<std::size_t> axis_offsets(const Tensor& t, const std::vector<std::size_t>& axes) {
  std::size_t count = 1;
  for (auto ax : axes) count *= t.extent(ax);
  std::vector<std::size_t> offsets(count, 0);
  std::vector<std::size_t> idx(axes.size(), 0);
  for (std::size_t n = 0; n < count; ++n) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < axes.size(); ++k) off += idx[k] * t.strides()[axes[k]];
    offsets[n] = off;
    for (std::size_t k = axes.size(); k-- > 0;) {
      if (++idx[k] < t.extent(axes[k])) break;
      idx[k] = 0;
    }
  }
  return offsets;
}

std::vector<std::size_t> free_axes(std::size_t rank, std::span<const std::size_t> used) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < rank; ++k)
    if (std::find(used.begin(), used.end(), k) == used.end()) out.push_back(k);
  return out;
}

void check_axes(const Tensor& t, std::span<const std::size_t> axes, const char* which) {
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (axes[i] >= t.rank()) {
      std::ostringstream os;
      os << "contract: axis " << axes[i] << " out of range for rank-" << t.rank() << " tensor "
         << which;
      throw TensorError(os.str());
    }
    for (std::size_t j = 0; j < i; ++j)
      if (axes[j] == axes[i]) throw TensorError(std::string("contract: duplicate axis in ") + which);
  }
}

std::vector<std::string> pick_labels(const Tensor& t, const std::vector<std::size_t>& axes) {
  if (t.labels().empty()) return std::vector<std::string>(axes.size());
  std::vector<std::string> out;
  for (auto ax : axes) out.push_back(t.labels()[ax]);
  return out;
}

Tensor make_with_labels(std::vector<std::size_t> dims, std::vector<double> data,
                        std::vector<std::string> labels) {
  Tensor t(std::move(dims), std::move(data));
  bool any = std::any_of(labels.begin(), labels.end(), [](const auto& s) { return !s.empty(); });
  return any ? t.with_labels(std::move(labels)) : t;
}

}  // namespace

Tensor::Tensor() : data_(1, 0.0) {}

Tensor::Tensor(std::vector<std::size_t> dims, double fill)
    : dims_(std::move(dims)), strides_(row_major_strides(dims_)) {
  for (auto e : dims_)
    if (e == 0) throw TensorError("tensor extents must be positive");
  data_.assign(product(dims_), fill);
}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> data)
    : dims_(std::move(dims)), strides_(row_major_strides(dims_)), data_(std::move(data)) {
  for (auto e : dims_)
    if (e == 0) throw TensorError("tensor extents must be positive");
  if (data_.size() != product(dims_)) throw TensorError("tensor data length does not match extents");
}

Tensor Tensor::scalar(double value) { return Tensor({}, std::vector<double>{value}); }

std::size_t Tensor::extent(std::size_t axis) const {
  if (axis >= rank()) throw TensorError("axis out of range");
  return dims_[axis];
}

double Tensor::at(std::span<const std::size_t> index) const {
  if (index.size() != rank()) throw TensorError("index rank mismatch");
  std::size_t off = 0;
  for (std::size_t k = 0; k < rank(); ++k) {
    if (index[k] >= dims_[k]) throw TensorError("index out of range");
    off += index[k] * strides_[k];
  }
  return data_[off];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  return at(std::span<const std::size_t>(index.begin(), index.size()));
}

double Tensor::value() const {
  if (rank() != 0) throw TensorError("value() requires a rank-0 tensor");
  return data_[0];
}

Tensor Tensor::with_labels(std::vector<std::string> labels) const {
  if (labels.size() != rank()) throw TensorError("one label per axis required");
  Tensor t = *this;
  t.labels_ = std::move(labels);
  return t;
}

Tensor Tensor::scaled(double factor) const {
  Tensor t = *this;
  for (auto& v : t.data_) v *= factor;
  return t;
}

Tensor contract(const Tensor& a, std::span<const std::size_t> axes_a, const Tensor& b,
                std::span<const std::size_t> axes_b) {
  if (axes_a.size() != axes_b.size()) throw TensorError("contract: axis lists differ in length");
  check_axes(a, axes_a, "A");
  check_axes(b, axes_b, "B");
  for (std::size_t k = 0; k < axes_a.size(); ++k)
    if (a.extent(axes_a[k]) != b.extent(axes_b[k]))
      throw TensorError("contract: extent mismatch on paired axes");

  const auto free_a = free_axes(a.rank(), axes_a);
  const auto free_b = free_axes(b.rank(), axes_b);
  const std::vector<std::size_t> sum_a(axes_a.begin(), axes_a.end());
  const std::vector<std::size_t> sum_b(axes_b.begin(), axes_b.end());

  const auto rows = axis_offsets(a, free_a);
  const auto cols = axis_offsets(b, free_b);
  const auto inner_a = axis_offsets(a, sum_a);
  const auto inner_b = axis_offsets(b, sum_b);

  std::vector<double> out(rows.size() * cols.size(), 0.0);
  auto da = a.data();
  auto db = b.data();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < inner_a.size(); ++k) {
      const double av = da[rows[r] + inner_a[k]];
      if (av == 0.0) continue;
      double* row = out.data() + r * cols.size();
      for (std::size_t c = 0; c < cols.size(); ++c) row[c] += av * db[cols[c] + inner_b[k]];
    }
  }

  std::vector<std::size_t> dims;
  for (auto ax : free_a) dims.push_back(a.extent(ax));
  for (auto ax : free_b) dims.push_back(b.extent(ax));
  auto labels = pick_labels(a, free_a);
  auto lb = pick_labels(b, free_b);
  labels.insert(labels.end(), lb.begin(), lb.end());
  return make_with_labels(std::move(dims), std::move(out), std::move(labels));
}

Tensor contract(const Tensor& a, std::initializer_list<std::size_t> axes_a, const Tensor& b,
                std::initializer_list<std::size_t> axes_b) {
  return contract(a, std::span<const std::size_t>(axes_a.begin(), axes_a.size()), b,
                  std::span<const std::size_t>(axes_b.begin(), axes_b.size()));
}

Tensor fix_index(const Tensor& a, std::size_t axis, std::size_t value) {
  if (axis >= a.rank()) throw TensorError("fix_index: axis out of range");
  if (value >= a.extent(axis)) throw TensorError("fix_index: value out of range");
  const std::size_t used[] = {axis};
  const auto rest = free_axes(a.rank(), used);
  const auto offsets = axis_offsets(a, rest);
  std::vector<double> out(offsets.size());
  const std::size_t base = value * a.strides()[axis];
  for (std::size_t n = 0; n < offsets.size(); ++n) out[n] = a.data()[base + offsets[n]];
  std::vector<std::size_t> dims;
  for (auto ax : rest) dims.push_back(a.extent(ax));
  return make_with_labels(std::move(dims), std::move(out), pick_labels(a, rest));
}

Tensor sum_index(const Tensor& a, std::size_t axis) {
  if (axis >= a.rank()) throw TensorError("sum_index: axis out of range");
  const std::size_t used[] = {axis};
  const auto rest = free_axes(a.rank(), used);
  const auto offsets = axis_offsets(a, rest);
  std::vector<double> out(offsets.size(), 0.0);
  for (std::size_t v = 0; v < a.extent(axis); ++v) {
    const std::size_t base = v * a.strides()[axis];
    for (std::size_t n = 0; n < offsets.size(); ++n) out[n] += a.data()[base + offsets[n]];
  }
  std::vector<std::size_t> dims;
  for (auto ax : rest) dims.push_back(a.extent(ax));
  return make_with_labels(std::move(dims), std::move(out), pick_labels(a, rest));
}

Tensor outer(const Tensor& a, const Tensor& b) {
  std::vector<double> out;
  out.reserve(a.size() * b.size());
  for (double x : a.data())
    for (double y : b.data()) out.push_back(x * y);
  std::vector<std::size_t> dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  std::vector<std::size_t> all_a(a.rank()), all_b(b.rank());
  std::iota(all_a.begin(), all_a.end(), 0);
  std::iota(all_b.begin(), all_b.end(), 0);
  auto labels = pick_labels(a, all_a);
  auto lb = pick_labels(b, all_b);
  labels.insert(labels.end(), lb.begin(), lb.end());
  return make_with_labels(std::move(dims), std::move(out), std::move(labels));
}

namespace tensors {

Tensor point(unsigned bit) {
  if (bit > 1) throw TensorError("point tensor value must be 0 or 1");
  std::vector<double> v{0.0, 0.0};
  v[bit] = 1.0;
  return Tensor({2}, std::move(v));
}

Tensor ones(std::size_t extent) { return Tensor({extent}, 1.0); }

Tensor cnot() {
  std::vector<double> v(16, 0.0);
  for (unsigned a = 0; a < 2; ++a)
    for (unsigned b = 0; b < 2; ++b) {
      const unsigned c = a, d = a ^ b;
      v[((a * 2 + b) * 2 + c) * 2 + d] = 1.0;
    }
  return Tensor({2, 2, 2, 2}, std::move(v));
}

}  // namespace tensors

}  // namespace polarmem
