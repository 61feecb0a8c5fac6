#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spiketext {

template <typename S>
S logsumexp(std::span<const S> v) {
  S m = *std::max_element(v.begin(), v.end());
  S acc = 0;
  for (S x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

// In-place stable softmax.
template <typename S>
void softmax(std::span<S> v) {
  S m = *std::max_element(v.begin(), v.end());
  S acc = 0;
  for (S& x : v) {
    x = std::exp(x - m);
    acc += x;
  }
  for (S& x : v) x /= acc;
}

// Cross-entropy of the target class, computed from raw logits.
template <typename S>
S cross_entropy(std::span<const S> logits, int target) {
  return logsumexp(logits) - logits[static_cast<size_t>(target)];
}

// Argmax with ties broken toward the lowest index.
template <typename S>
int argmax(std::span<const S> v) {
  int best = 0;
  for (size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = static_cast<int>(i);
  }
  return best;
}

// Dot product of two contiguous runs, four-lane unrolled. The lane structure
// is fixed, so the summation order (and therefore the result) never varies.
template <typename S>
S dot(const S* a, const S* b, size_t n) {
  S s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  S s = (s0 + s1) + (s2 + s3);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

template <typename S>
void axpy(S alpha, const S* x, S* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename S>
bool all_finite(std::span<const S> v) {
  for (S x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

}  // namespace spiketext
