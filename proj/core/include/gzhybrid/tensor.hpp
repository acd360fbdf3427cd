#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace gzhybrid {

// Dense row-major tensor. No views, no broadcasting; the layer kernels in
// net.hpp index it directly.
template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s)
      : shape(std::move(s)), data(numel(shape), T(0)) {}

  static std::size_t numel(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
  }

  std::size_t size() const { return data.size(); }
  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  std::size_t dim(std::size_t i) const { return shape.at(i); }

  void zero() { std::fill(data.begin(), data.end(), T(0)); }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  bool all_finite() const {
    for (const T& v : data)
      if (!std::isfinite(double(v))) return false;
    return true;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = U(data[i]);
    return out;
  }
};

inline std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s.empty() ? "scalar" : s;
}

// Named tensors of one network (an encoder or a head). Iteration follows
// creation order, which keeps optimizer sweeps, EMA updates and checkpoint
// layouts reproducible.
template <typename T>
class ParameterSet {
 public:
  Tensor<T>& add(const std::string& name, std::vector<std::size_t> shape) {
    if (index_.count(name))
      throw std::invalid_argument("duplicate parameter name: " + name);
    index_.emplace(name, names_.size());
    names_.push_back(name);
    tensors_.emplace_back(std::move(shape));
    return tensors_.back();
  }

  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  Tensor<T>& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end())
      throw std::out_of_range("no parameter named: " + name);
    return tensors_[it->second];
  }
  const Tensor<T>& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
      throw std::out_of_range("no parameter named: " + name);
    return tensors_[it->second];
  }

  const std::vector<std::string>& names() const { return names_; }
  std::size_t count() const { return names_.size(); }
  Tensor<T>& tensor(std::size_t i) { return tensors_[i]; }
  const Tensor<T>& tensor(std::size_t i) const { return tensors_[i]; }

  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
  }

  void zero_all() {
    for (auto& t : tensors_) t.zero();
  }

  // Same names and shapes, all values zero.
  ParameterSet<T> zeros_like() const {
    ParameterSet<T> out;
    for (std::size_t i = 0; i < names_.size(); ++i) out.add(names_[i], tensors_[i].shape);
    return out;
  }

  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (std::size_t i = 0; i < names_.size(); ++i) {
      auto& t = out.add(names_[i], tensors_[i].shape);
      for (std::size_t j = 0; j < tensors_[i].size(); ++j)
        t.data[j] = U(tensors_[i].data[j]);
    }
    return out;
  }

  bool all_finite() const {
    for (const auto& t : tensors_)
      if (!t.all_finite()) return false;
    return true;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor<T>> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace gzhybrid
