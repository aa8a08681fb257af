#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "galr/tensor.hpp"

namespace galr {

struct GradCheckEntry {
  std::string name;
  std::size_t elements = 0;
  double max_rel_error = 0.0;  // |analytic - numeric| / max(1, |numeric|)
  double max_abs_error = 0.0;
  double max_abs_gradient = 0.0;  // guards against vacuous passes
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  double worst() const {
    double w = 0.0;
    for (const auto& e : entries) w = std::max(w, e.max_rel_error);
    return w;
  }

  const GradCheckEntry* worst_entry() const {
    const GradCheckEntry* best = nullptr;
    for (const auto& e : entries)
      if (!best || e.max_rel_error > best->max_rel_error) best = &e;
    return best;
  }

  // Strict: a tolerance of zero never passes.
  bool passed(double tol) const {
    return std::all_of(entries.begin(), entries.end(), [tol](const auto& e) { return e.max_rel_error < tol; });
  }
};

template <typename T>
using NamedLeaves = std::vector<std::pair<std::string, Tensor<T>>>;

// Compares reverse-mode gradients of `loss_fn()` against central differences
// for every element of every leaf. `loss_fn` must rebuild the graph from the
// leaves on each call.
template <typename T, typename LossFn>
GradCheckReport check_gradients(LossFn&& loss_fn, NamedLeaves<T> leaves, double step = 1e-4,
                                const BackwardOptions& options = {}) {
  for (auto& [name, leaf] : leaves) {
    require(leaf.is_leaf(), "check_gradients: '" + name + "' is not a leaf tensor");
    leaf.set_requires_grad(true);
    leaf.zero_grad();
  }
  backward(loss_fn(), options);

  GradCheckReport report;
  for (auto& [name, leaf] : leaves) {
    GradCheckEntry entry;
    entry.name = name;
    entry.elements = leaf.numel();
    const std::vector<T> analytic =
        leaf.has_grad() ? std::vector<T>(leaf.grad().begin(), leaf.grad().end()) : std::vector<T>(leaf.numel(), T(0));
    auto values = leaf.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const T saved = values[i];
      values[i] = saved + static_cast<T>(step);
      const double up = static_cast<double>(loss_fn().item());
      values[i] = saved - static_cast<T>(step);
      const double down = static_cast<double>(loss_fn().item());
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double abs_err = std::abs(static_cast<double>(analytic[i]) - numeric);
      const double rel_err = abs_err / std::max(1.0, std::abs(numeric));
      if (rel_err > entry.max_rel_error || (i == 0 && entry.max_rel_error == 0.0)) {
        entry.max_rel_error = rel_err;
        entry.worst_index = i;
      }
      entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
      entry.max_abs_gradient = std::max(entry.max_abs_gradient, std::abs(static_cast<double>(analytic[i])));
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace galr
