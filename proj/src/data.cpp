#include "fedpm/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "fedpm/errors.hpp"

namespace fedpm {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw FormatError(path + ": truncated header");
  }
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

Dataset gather(const Dataset& ds, const std::vector<std::size_t>& idx) {
  Dataset out;
  out.num_classes = ds.num_classes;
  out.samples = Matrix(idx.size(), ds.feature_dim());
  out.labels.resize(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const double* src = &ds.samples.data[idx[r] * ds.feature_dim()];
    std::copy(src, src + ds.feature_dim(), &out.samples.data[r * ds.feature_dim()]);
    out.labels[r] = ds.labels[idx[r]];
  }
  return out;
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw IoError("cannot open " + images_path);
  std::ifstream lbl(labels_path, std::ios::binary);
  if (!lbl) throw IoError("cannot open " + labels_path);

  if (read_be32(img, images_path) != kImagesMagic) {
    throw FormatError(images_path + ": bad image magic");
  }
  const std::uint32_t n_images = read_be32(img, images_path);
  const std::uint32_t rows = read_be32(img, images_path);
  const std::uint32_t cols = read_be32(img, images_path);

  if (read_be32(lbl, labels_path) != kLabelsMagic) {
    throw FormatError(labels_path + ": bad label magic");
  }
  const std::uint32_t n_labels = read_be32(lbl, labels_path);
  if (n_images != n_labels) {
    throw FormatError(images_path + " / " + labels_path +
                      ": image and label counts differ");
  }

  const std::size_t dim = std::size_t(rows) * cols;
  Dataset ds;
  ds.samples = Matrix(n_images, dim);
  ds.labels.resize(n_images);

  std::vector<unsigned char> buf(dim);
  for (std::size_t i = 0; i < n_images; ++i) {
    if (!img.read(reinterpret_cast<char*>(buf.data()), std::streamsize(dim))) {
      throw FormatError(images_path + ": truncated image data");
    }
    double* row = &ds.samples.data[i * dim];
    for (std::size_t p = 0; p < dim; ++p) row[p] = buf[p] / 255.0;
  }
  std::vector<unsigned char> lab(n_labels);
  if (!lbl.read(reinterpret_cast<char*>(lab.data()), std::streamsize(n_labels))) {
    throw FormatError(labels_path + ": truncated label data");
  }
  std::int32_t max_label = 0;
  for (std::size_t i = 0; i < n_labels; ++i) {
    ds.labels[i] = lab[i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = std::size_t(max_label) + 1;
  return ds;
}

Dataset synth_dataset(std::uint64_t seed, std::size_t n, std::size_t dims,
                      std::size_t classes, double separation) {
  if (classes == 0 || dims == 0) throw DataError("synth_dataset: empty shape");
  if (n < classes) throw DataError("synth_dataset: need at least one sample per class");

  std::vector<std::vector<double>> means(classes, std::vector<double>(dims, 0.0));
  constexpr double kPi = 3.14159265358979323846;
  for (std::size_t c = 0; c < classes; ++c) {
    if (dims == 1) {
      means[c][0] = separation * static_cast<double>(c);
    } else {
      const double angle = 2.0 * kPi * static_cast<double>(c) / static_cast<double>(classes);
      means[c][0] = separation * std::cos(angle);
      means[c][1] = separation * std::sin(angle);
    }
  }

  Dataset ds;
  ds.num_classes = classes;
  ds.samples = Matrix(n, dims);
  ds.labels.resize(n);
  Rng rng = Rng::stream(seed, {kTagSynthTrain});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % classes;  // round-robin keeps classes balanced
    ds.labels[i] = static_cast<std::int32_t>(c);
    double* row = &ds.samples.data[i * dims];
    for (std::size_t d = 0; d < dims; ++d) row[d] = rng.next_normal(means[c][d], 1.0);
  }

  // Min-max scale each feature to [0, 1]; affine, so separability is kept.
  for (std::size_t d = 0; d < dims; ++d) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, ds.samples(i, d));
      hi = std::max(hi, ds.samples(i, d));
    }
    const double span = hi > lo ? hi - lo : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      ds.samples(i, d) = (ds.samples(i, d) - lo) / span;
    }
  }
  return ds;
}

std::vector<Dataset> partition_iid(const Dataset& ds, std::size_t n_clients, Rng& rng) {
  if (n_clients == 0 || n_clients > ds.size()) {
    throw PartitionError("partition_iid: need 1 <= clients <= samples");
  }
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);

  std::vector<Dataset> shards;
  shards.reserve(n_clients);
  const std::size_t base = ds.size() / n_clients;
  const std::size_t extra = ds.size() % n_clients;
  std::size_t pos = 0;
  for (std::size_t c = 0; c < n_clients; ++c) {
    const std::size_t take = base + (c < extra ? 1 : 0);
    shards.push_back(gather(ds, {idx.begin() + pos, idx.begin() + pos + take}));
    pos += take;
  }
  return shards;
}

std::vector<Dataset> partition_noniid(const Dataset& ds, std::size_t n_clients,
                                      std::size_t c_max, Rng& rng) {
  const std::size_t classes = ds.num_classes;
  if (n_clients == 0 || n_clients > ds.size()) {
    throw PartitionError("partition_noniid: need 1 <= clients <= samples");
  }
  if (c_max == 0 || c_max > classes) {
    throw PartitionError("partition_noniid: need 1 <= c_max <= num_classes");
  }

  // Unbalanced size coefficients p_n from j_n ~ Uniform{10..100}.
  std::vector<double> p(n_clients);
  double total_j = 0.0;
  for (std::size_t n = 0; n < n_clients; ++n) {
    p[n] = static_cast<double>(10 + rng.next_below(91));
    total_j += p[n];
  }
  for (double& v : p) v /= total_j;

  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  }

  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    // Each client draws c_max distinct classes uniformly.
    std::vector<std::vector<std::size_t>> assigned(n_clients);
    std::vector<std::vector<std::size_t>> requesters(classes);
    for (std::size_t n = 0; n < n_clients; ++n) {
      std::vector<std::size_t> pool(classes);
      std::iota(pool.begin(), pool.end(), 0);
      rng.shuffle(pool);
      assigned[n].assign(pool.begin(), pool.begin() + c_max);
      for (std::size_t c : assigned[n]) requesters[c].push_back(n);
    }

    bool feasible = true;
    for (std::size_t c = 0; c < classes; ++c) {
      if (requesters[c].empty() || by_class[c].size() < requesters[c].size()) {
        feasible = false;  // class unassigned, or not one sample per requester
        break;
      }
    }
    if (!feasible) continue;

    // Within each class, split proportionally to the requesters' p_n,
    // at least one sample each, remainder to the largest p_n.
    std::vector<std::vector<std::size_t>> shard_idx(n_clients);
    for (std::size_t c = 0; c < classes; ++c) {
      std::vector<std::size_t> samples = by_class[c];
      rng.shuffle(samples);
      const auto& req = requesters[c];
      double p_sum = 0.0;
      for (std::size_t n : req) p_sum += p[n];
      std::vector<std::size_t> share(req.size());
      std::size_t given = 0;
      for (std::size_t r = 0; r < req.size(); ++r) {
        const double ideal = p[req[r]] / p_sum * static_cast<double>(samples.size());
        share[r] = std::max<std::size_t>(1, static_cast<std::size_t>(ideal));
        given += share[r];
      }
      std::size_t largest = 0;
      for (std::size_t r = 1; r < req.size(); ++r) {
        if (p[req[r]] > p[req[largest]]) largest = r;
      }
      // Reconcile rounding so the class is fully distributed.
      while (given > samples.size()) {
        std::size_t victim = largest;
        for (std::size_t r = 0; r < req.size(); ++r) {
          if (share[r] > 1 && (share[victim] <= 1 || share[r] > share[victim])) victim = r;
        }
        if (share[victim] <= 1) break;
        --share[victim];
        --given;
      }
      if (given > samples.size()) { feasible = false; break; }
      share[largest] += samples.size() - given;

      std::size_t pos = 0;
      for (std::size_t r = 0; r < req.size(); ++r) {
        auto& dst = shard_idx[req[r]];
        dst.insert(dst.end(), samples.begin() + pos, samples.begin() + pos + share[r]);
        pos += share[r];
      }
    }
    if (!feasible) continue;

    std::vector<Dataset> shards;
    shards.reserve(n_clients);
    for (std::size_t n = 0; n < n_clients; ++n) {
      std::sort(shard_idx[n].begin(), shard_idx[n].end());
      shards.push_back(gather(ds, shard_idx[n]));
    }
    return shards;
  }
  throw PartitionError("partition_noniid: no feasible class assignment after " +
                       std::to_string(kMaxAttempts) + " attempts");
}

}  // namespace fedpm
