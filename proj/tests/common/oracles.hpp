#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "actforge/policy.hpp"
#include "actforge/rng.hpp"

namespace actforge::checks {

/// Central finite difference of f along coordinate i.
inline double central_difference(const std::function<double(const policy::PolicyParams&)>& f,
                                 const policy::PolicyParams& p, std::size_t i, double h = 1e-5) {
  std::vector<double> w(p.weights().begin(), p.weights().end());
  const double w0 = w[i];
  w[i] = w0 + h;
  const double up = f(p.updated(w));
  w[i] = w0 - h;
  const double down = f(p.updated(w));
  return (up - down) / (2.0 * h);
}

/// ||analytic - numeric||_2 / max(||numeric||_2, 1e-6).
inline double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double diff = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    norm += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-6);
}

inline std::vector<double> numeric_gradient(const std::function<double(const policy::PolicyParams&)>& f,
                                            const policy::PolicyParams& p, double h = 1e-5) {
  std::vector<double> g(p.dim());
  for (std::size_t i = 0; i < p.dim(); ++i) g[i] = central_difference(f, p, i, h);
  return g;
}

/// A synthetic prompt with `n` responses (the last one malformed) and dense
/// random features in dimension `dim`.
inline policy::EncodedPrompt random_prompt(Rng& rng, std::size_t n, std::size_t dim) {
  policy::EncodedPrompt p;
  p.dim = dim;
  for (std::size_t i = 0; i < n; ++i) {
    const bool last = i + 1 == n;
    p.responses.push_back({last ? "" : "action " + std::to_string(i), !last,
                           last ? policy::ResponseKind::Malformed : policy::ResponseKind::OtherAdmissible});
    policy::SparseVector v;
    for (std::uint32_t j = 0; j < dim; ++j)
      if (rng.below(3) == 0) v.entries.emplace_back(j, rng.uniform() * 2.0 - 1.0);
    p.features.push_back(std::move(v));
  }
  return p;
}

inline policy::PolicyParams random_params(Rng& rng, std::size_t dim, double scale = 1.0) {
  std::vector<double> w(dim);
  for (auto& x : w) x = (rng.uniform() * 2.0 - 1.0) * scale;
  return policy::PolicyParams(std::move(w), 0, 0);
}

}  // namespace actforge::checks
