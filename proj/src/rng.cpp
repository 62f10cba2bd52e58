#include "vcubeps/rng.hpp"

#include <algorithm>
#include <cmath>

namespace vcubeps {

std::vector<std::uint32_t> RngStream::sample_ids(std::uint32_t n, std::uint32_t k) {
  if (k > n) throw ArgumentError("sample_ids: k > n");
  // Partial Fisher-Yates over the id range.
  std::vector<std::uint32_t> pool(n);
  for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
  std::vector<std::uint32_t> out;
  out.reserve(k);
  for (std::uint32_t i = 0; i < k; ++i) {
    const std::uint32_t j = i + static_cast<std::uint32_t>(below(n - i));
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

ZipfSampler::ZipfSampler(std::uint32_t n, double coeff) {
  if (n == 0) throw ArgumentError("zipf: empty support");
  cdf_.resize(n);
  double acc = 0.0;
  for (std::uint32_t r = 1; r <= n; ++r) {
    acc += std::pow(static_cast<double>(r), -coeff);
    cdf_[r - 1] = acc;
  }
  for (auto& v : cdf_) v /= acc;
  cdf_.back() = 1.0;
}

std::uint32_t ZipfSampler::draw(RngStream& rng) const {
  const double u = rng.uniform01();
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<std::uint32_t>(it - cdf_.begin());
}

}  // namespace vcubeps
