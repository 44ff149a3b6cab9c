#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedpm/nn.hpp"
#include "fedpm/rng.hpp"

namespace fedpm {

struct Dataset {
  Matrix samples;  // count x feature_dim, features in [0, 1]
  std::vector<std::int32_t> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return samples.rows; }
  std::size_t feature_dim() const { return samples.cols; }
};

// IDX-format reader (big-endian dims, magic 0x803 images / 0x801 labels).
// Pixels are scaled by 1/255 and flattened.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Gaussian blobs, one per class, unit within-class std before rescaling.
// Class means sit on a circle of radius `separation` in the first two
// feature dims (on a line for dims == 1); features are then min-max scaled
// to [0, 1] per dimension. Deterministic by seed; samples are dealt
// round-robin across classes so n == classes gives one sample per class.
Dataset synth_dataset(std::uint64_t seed, std::size_t n, std::size_t dims,
                      std::size_t classes, double separation);

// Uniform shuffle-and-split into N near-equal disjoint shards (sizes differ
// by at most one; the union covers every sample).
std::vector<Dataset> partition_iid(const Dataset& ds, std::size_t n_clients, Rng& rng);

// Unbalanced non-IID split: client n gets a fraction p_n = j_n / sum(j) of
// the data with j_n ~ Uniform{10..100}, drawn only from c_max classes chosen
// uniformly per client. Every class is assigned to at least one client;
// within a class, samples go to its requesting clients proportionally to
// their p_n (remainders to the largest p_n). Infeasible assignments are
// redrawn up to a bounded attempt count, then PartitionError.
std::vector<Dataset> partition_noniid(const Dataset& ds, std::size_t n_clients,
                                      std::size_t c_max, Rng& rng);

}  // namespace fedpm
