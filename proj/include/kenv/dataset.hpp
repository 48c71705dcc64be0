#pragma once

#include <optional>
#include <string>

#include "kenv/types.hpp"

namespace kenv {

/// Noise-corrupted samples: y_i = f(x_i) + noise_i with
/// |noise_i| <= noise_bound_i (componentwise, known, non-negative).
struct Dataset {
  Mat sites;        ///< N x m, one sample location per row
  Vec labels;       ///< N
  Vec noise_bound;  ///< N, entries >= 0

  int size() const { return static_cast<int>(sites.rows()); }
  int dim() const { return static_cast<int>(sites.cols()); }

  /// Shape & finiteness checks plus pairwise distinctness
  /// (||x_i - x_j|| < 1e-9 * (1 + max |coordinate|) is rejected).
  void validate() const;
};

/// CSV with header x1,...,xm,y,delta_bar.  The delta_bar column may be
/// omitted if `default_noise_bound` is supplied.
Dataset read_dataset_csv(const std::string& path,
                         std::optional<double> default_noise_bound = std::nullopt);
void write_dataset_csv(const Dataset& data, const std::string& path);

}  // namespace kenv
