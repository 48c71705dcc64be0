#pragma once

#include <cstdint>
#include <vector>

#include "kenv/dataset.hpp"
#include "kenv/types.hpp"

namespace kenv {

/// Axis-aligned box; lo(i) < hi(i) required.
struct DomainBox {
  Vec lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
  void validate() const;
};

/// Fill distance sup_{x in box} min_i ||x - x_i||, estimated over a
/// Halton probe set plus the box corners.  `probes` <= 0 selects the
/// default 10^4 * dim.
double fill_distance(const Mat& sites, const DomainBox& box, int probes = -1);

/// Half the smallest pairwise distance.  Requires N >= 2.
double separation_distance(const Mat& sites);

/// Greedy farthest-point subsample keeping only points at least
/// `min_separation` away from every point already kept.  Traversal
/// starts at the site nearest the centroid, so the result is
/// deterministic; earlier-kept points win ties.  Labels and noise
/// bounds travel with their sites.
Dataset thin(const Dataset& data, double min_separation);

/// Full tensor grid, `counts[a]` equispaced values per axis, box corners
/// included.  Every count must be >= 2.
Mat sample_grid(const DomainBox& box, const std::vector<int>& counts);

/// n i.i.d. uniform points.  Reproducible across platforms: the stream
/// is mt19937_64(seed), each coordinate maps one draw r to
/// (r >> 11) * 2^-53 in [0,1).
Mat sample_uniform(const DomainBox& box, int n, std::uint64_t seed);

/// Equispaced points along every edge of the box (`per_edge` >= 2 points
/// per edge, corners included), duplicates removed.  A 2-D box with
/// per_edge = 10 yields 36 points.  In one dimension these are the two
/// endpoints.
Mat boundary_points(const DomainBox& box, int per_edge);

}  // namespace kenv
