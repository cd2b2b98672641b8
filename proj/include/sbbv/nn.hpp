#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sbbv/rng.hpp"
#include "sbbv/tape.hpp"

namespace sbbv::nn {

// Gaussian init with a per-tensor seed derived from (seed, name), so the
// initialization does not depend on registration order.
Matrix gaussian_init(std::size_t rows, std::size_t cols, double stddev, std::uint64_t seed,
                     const std::string& name);

// y = x W + b, W stored (in x out).
struct Linear {
  ParamTensor* W = nullptr;
  ParamTensor* b = nullptr;

  static Linear create(ParamStore& store, const std::string& name, std::size_t in,
                       std::size_t out, std::uint64_t seed, double w_scale = -1.0);
  Tape::Ref apply(Tape& t, Tape::Ref x) const;
};

struct LayerNorm {
  ParamTensor* gain = nullptr;
  ParamTensor* bias = nullptr;
  double eps = 1e-5;

  static LayerNorm create(ParamStore& store, const std::string& name, std::size_t width,
                          double eps = 1e-5);
  Tape::Ref apply(Tape& t, Tape::Ref x) const;
};

// Euclidean distance between two 1xD rows after L2 normalization;
// eps keeps it differentiable when the rows coincide.
Tape::Ref normalized_distance(Tape& t, Tape::Ref a, Tape::Ref b);

// mean over batch of max(0, d(a,p) - d(a,n) + margin), distances as above.
Tape::Ref triplet_hinge(Tape& t, Tape::Ref d_ap, Tape::Ref d_an, double margin);

// Runs `sample_loss` for each index on its own tape, sums losses and
// accumulates parameter gradients in index order. The per-sample work runs
// under OpenMP when `parallel`; results are identical either way because
// each sample owns its tape and the reduction order is fixed.
double accumulate_batch(std::size_t n_samples,
                        const std::function<double(std::size_t, Tape&)>& sample_loss,
                        bool parallel = true);

}  // namespace sbbv::nn
