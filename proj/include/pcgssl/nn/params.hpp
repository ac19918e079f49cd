#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pcgssl/core/random.hpp"
#include "pcgssl/nn/tensor.hpp"

namespace pcgssl::nn {

/// Named collection of parameter tensors plus the set of frozen paths.
/// Optimizers never touch a frozen path.
template <std::floating_point T>
class ParameterSet {
 public:
  using Map = std::map<std::string, Tensor<T>>;

  Tensor<T>& add(const std::string& path, Tensor<T> tensor) {
    auto [it, inserted] = tensors_.emplace(path, std::move(tensor));
    require(inserted, Errc::InvalidArgument, "duplicate parameter path " + path);
    return it->second;
  }

  bool contains(const std::string& path) const { return tensors_.count(path) != 0; }

  Tensor<T>& at(const std::string& path) {
    auto it = tensors_.find(path);
    if (it == tensors_.end()) fail(Errc::InvalidArgument, "no parameter named " + path);
    return it->second;
  }
  const Tensor<T>& at(const std::string& path) const { return const_cast<ParameterSet&>(*this).at(path); }

  void erase(const std::string& path) {
    tensors_.erase(path);
    frozen_.erase(path);
  }

  std::size_t erase_prefix(std::string_view prefix) {
    std::size_t removed = 0;
    for (auto it = tensors_.begin(); it != tensors_.end();) {
      if (it->first.starts_with(prefix)) {
        frozen_.erase(it->first);
        it = tensors_.erase(it);
        ++removed;
      } else {
        ++it;
      }
    }
    return removed;
  }

  void freeze(const std::string& path) {
    require(contains(path), Errc::InvalidArgument, "cannot freeze unknown parameter " + path);
    frozen_.insert(path);
  }

  void freeze_prefix(std::string_view prefix) {
    for (const auto& [path, t] : tensors_) {
      if (path.starts_with(prefix)) frozen_.insert(path);
    }
  }

  bool is_frozen(const std::string& path) const { return frozen_.count(path) != 0; }
  const std::set<std::string>& frozen_paths() const { return frozen_; }

  std::vector<std::string> paths() const {
    std::vector<std::string> out;
    for (const auto& [path, t] : tensors_) out.push_back(path);
    return out;
  }

  typename Map::iterator begin() { return tensors_.begin(); }
  typename Map::iterator end() { return tensors_.end(); }
  typename Map::const_iterator begin() const { return tensors_.begin(); }
  typename Map::const_iterator end() const { return tensors_.end(); }

  std::size_t size() const { return tensors_.size(); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [path, t] : tensors_) n += t.size();
    return n;
  }

  void zero_grad() {
    for (auto& [path, t] : tensors_) t.zero_grad();
  }

  /// Copies every tensor (and frozen flag) of `other` into this set.
  void merge(const ParameterSet& other) {
    for (const auto& [path, t] : other) {
      add(path, t);
      if (other.is_frozen(path)) frozen_.insert(path);
    }
  }

  template <std::floating_point U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (const auto& [path, t] : tensors_) out.add(path, t.template cast<U>());
    for (const auto& path : frozen_) out.freeze(path);
    return out;
  }

  /// FNV-1a over paths, shapes and raw values of the tensors under `prefix`.
  std::uint64_t fingerprint(std::string_view prefix = {}) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* data, std::size_t n) {
      const auto* p = static_cast<const unsigned char*>(data);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
      }
    };
    for (const auto& [path, t] : tensors_) {
      if (!path.starts_with(prefix)) continue;
      mix(path.data(), path.size());
      for (std::size_t d : t.shape()) mix(&d, sizeof d);
      mix(t.ptr(), t.size() * sizeof(T));
    }
    return h;
  }

  /// Same paths, frozen flags and bit-identical values.
  bool operator==(const ParameterSet& other) const { return tensors_ == other.tensors_ && frozen_ == other.frozen_; }

 private:
  Map tensors_;
  std::set<std::string> frozen_;
};

/// He-uniform: U(-sqrt(6 / fan_in), sqrt(6 / fan_in)).
template <std::floating_point T>
Tensor<T> he_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor<T> t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(-limit, limit));
  return t;
}

}  // namespace pcgssl::nn
