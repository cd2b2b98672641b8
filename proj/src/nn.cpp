#include "sbbv/nn.hpp"

#include <cmath>

#include "sbbv/hash.hpp"
#include "sbbv/parallel.hpp"

namespace sbbv::nn {

Matrix gaussian_init(std::size_t rows, std::size_t cols, double stddev, std::uint64_t seed,
                     const std::string& name) {
  Rng rng(fnv1a64(name, seed ^ kFnvOffset));
  Matrix m(rows, cols);
  for (double& v : m.a) v = stddev * rng.next_gaussian();
  return m;
}

Linear Linear::create(ParamStore& store, const std::string& name, std::size_t in,
                      std::size_t out, std::uint64_t seed, double w_scale) {
  if (w_scale < 0.0) w_scale = 1.0 / std::sqrt(static_cast<double>(in));
  Linear l;
  l.W = &store.add(name + ".W", gaussian_init(in, out, w_scale, seed, name + ".W"));
  l.b = &store.add(name + ".b", Matrix(1, out));
  return l;
}

Tape::Ref Linear::apply(Tape& t, Tape::Ref x) const {
  return t.add_rowvec(t.matmul(x, t.param(*W)), t.param(*b));
}

LayerNorm LayerNorm::create(ParamStore& store, const std::string& name, std::size_t width,
                            double eps) {
  LayerNorm ln;
  ln.gain = &store.add(name + ".gain", Matrix(1, width, 1.0));
  ln.bias = &store.add(name + ".bias", Matrix(1, width));
  ln.eps = eps;
  return ln;
}

Tape::Ref LayerNorm::apply(Tape& t, Tape::Ref x) const {
  return t.layer_norm(x, t.param(*gain), t.param(*bias), eps);
}

Tape::Ref normalized_distance(Tape& t, Tape::Ref a, Tape::Ref b) {
  Tape::Ref na = t.l2_normalize_rows(a, 1e-12);
  Tape::Ref nb = t.l2_normalize_rows(b, 1e-12);
  Tape::Ref d = t.sub(na, nb);
  return t.sqrt_eps(t.sum(t.mul(d, d)), 1e-12);
}

Tape::Ref triplet_hinge(Tape& t, Tape::Ref d_ap, Tape::Ref d_an, double margin) {
  return t.relu(t.add_scalar(t.sub(d_ap, d_an), margin));
}

double accumulate_batch(std::size_t n_samples,
                        const std::function<double(std::size_t, Tape&)>& sample_loss,
                        bool parallel) {
  std::vector<double> losses(n_samples, 0.0);
  std::vector<std::vector<std::pair<ParamTensor*, Matrix>>> grads(n_samples);

  auto body = [&](std::size_t i) {
    Tape tape;
    losses[i] = sample_loss(i, tape);
    grads[i] = tape.param_grads();
  };
  if (parallel) {
    par::parallel_for(n_samples, body);
  } else {
    par::serial_for(n_samples, body);
  }

  // Gradients are scaled so that what accumulates is the gradient of the
  // returned mean loss.
  const double inv = 1.0 / static_cast<double>(n_samples ? n_samples : 1);
  double total = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    total += losses[i];
    for (auto& [p, g] : grads[i]) {
      for (std::size_t j = 0; j < g.size(); ++j) p->grad.a[j] += g.a[j] * inv;
    }
  }
  return total * inv;
}

}  // namespace sbbv::nn
