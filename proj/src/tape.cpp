#include "sbbv/tape.hpp"

#include <algorithm>
#include <cmath>

#include "sbbv/errors.hpp"

namespace sbbv {

ParamTensor& ParamStore::add(const std::string& name, Matrix init) {
  params_.push_back(std::make_unique<ParamTensor>(name, std::move(init)));
  return *params_.back();
}

ParamTensor* ParamStore::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

const ParamTensor* ParamStore::find(const std::string& name) const {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

std::vector<ParamTensor*> ParamStore::all() {
  std::vector<ParamTensor*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

Tape::Ref Tape::push(Matrix val, std::function<void(Tape&)> back) {
  Node n;
  n.grad = Matrix(val.rows, val.cols);
  n.val = std::move(val);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<Ref>(nodes_.size() - 1);
}

Tape::Ref Tape::leaf(Matrix m) { return push(std::move(m), nullptr); }

Tape::Ref Tape::param(ParamTensor& p) {
  for (auto& [ref, slot] : param_nodes_) {
    if (param_grads_[slot].first == &p) return ref;
  }
  const std::size_t slot = param_grads_.size();
  param_grads_.emplace_back(&p, Matrix(p.value.rows, p.value.cols));
  Ref r = push(p.value, [slot](Tape& t) {
    const Matrix& g = t.grad_mut(t.param_nodes_[slot].first);
    Matrix& sink = t.param_grads_[slot].second;
    for (std::size_t i = 0; i < g.size(); ++i) sink.a[i] += g.a[i];
  });
  param_nodes_.emplace_back(r, slot);
  return r;
}

Tape::Ref Tape::matmul(Ref x, Ref y) {
  Matrix c = sbbv::matmul(val(x), val(y));
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, y, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);  // m x n
    const Matrix& a = t.val(x);         // m x k
    const Matrix& b = t.val(y);         // k x n
    Matrix& gx = t.grad_mut(x);
    Matrix& gy = t.grad_mut(y);
    const std::size_t m = a.rows, k = a.cols, n = b.cols;
    for (std::size_t i = 0; i < m; ++i) {
      const double* gi = &g.a[i * n];
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double* bk = &b.a[kk * n];
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += gi[j] * bk[j];
        gx.a[i * k + kk] += acc;
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double* gi = &g.a[i * n];
      const double* ai = &a.a[i * k];
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double v = ai[kk];
        if (v == 0.0) continue;
        double* gyk = &gy.a[kk * n];
        for (std::size_t j = 0; j < n; ++j) gyk[j] += v * gi[j];
      }
    }
  };
  return out;
}

Tape::Ref Tape::add(Ref x, Ref y) {
  const Matrix& a = val(x);
  const Matrix& b = val(y);
  assert(a.same_shape(b));
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < c.size(); ++i) c.a[i] = a.a[i] + b.a[i];
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, y, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    Matrix& gx = t.grad_mut(x);
    Matrix& gy = t.grad_mut(y);
    for (std::size_t i = 0; i < g.size(); ++i) {
      gx.a[i] += g.a[i];
      gy.a[i] += g.a[i];
    }
  };
  return out;
}

Tape::Ref Tape::sub(Ref x, Ref y) {
  const Matrix& a = val(x);
  const Matrix& b = val(y);
  assert(a.same_shape(b));
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < c.size(); ++i) c.a[i] = a.a[i] - b.a[i];
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, y, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    Matrix& gx = t.grad_mut(x);
    Matrix& gy = t.grad_mut(y);
    for (std::size_t i = 0; i < g.size(); ++i) {
      gx.a[i] += g.a[i];
      gy.a[i] -= g.a[i];
    }
  };
  return out;
}

Tape::Ref Tape::mul(Ref x, Ref y) {
  const Matrix& a = val(x);
  const Matrix& b = val(y);
  assert(a.same_shape(b));
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < c.size(); ++i) c.a[i] = a.a[i] * b.a[i];
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, y, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    const Matrix& av = t.val(x);
    const Matrix& bv = t.val(y);
    Matrix& gx = t.grad_mut(x);
    Matrix& gy = t.grad_mut(y);
    for (std::size_t i = 0; i < g.size(); ++i) {
      gx.a[i] += g.a[i] * bv.a[i];
      gy.a[i] += g.a[i] * av.a[i];
    }
  };
  return out;
}

Tape::Ref Tape::scale(Ref x, double s) {
  const Matrix& a = val(x);
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < c.size(); ++i) c.a[i] = a.a[i] * s;
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, s, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    Matrix& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx.a[i] += g.a[i] * s;
  };
  return out;
}

Tape::Ref Tape::add_scalar(Ref x, double s) {
  const Matrix& a = val(x);
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < c.size(); ++i) c.a[i] = a.a[i] + s;
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    Matrix& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx.a[i] += g.a[i];
  };
  return out;
}

Tape::Ref Tape::add_rowvec(Ref x, Ref rowv) {
  const Matrix& a = val(x);
  const Matrix& r = val(rowv);
  assert(r.rows == 1 && r.cols == a.cols);
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) c(i, j) = a(i, j) + r(0, j);
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, rowv, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    Matrix& gx = t.grad_mut(x);
    Matrix& gr = t.grad_mut(rowv);
    for (std::size_t i = 0; i < g.rows; ++i)
      for (std::size_t j = 0; j < g.cols; ++j) {
        gx(i, j) += g(i, j);
        gr(0, j) += g(i, j);
      }
  };
  return out;
}

Tape::Ref Tape::transpose(Ref x) {
  const Matrix& a = val(x);
  Matrix c(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) c(j, i) = a(i, j);
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    Matrix& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.rows; ++i)
      for (std::size_t j = 0; j < g.cols; ++j) gx(j, i) += g(i, j);
  };
  return out;
}

Tape::Ref Tape::row(Ref x, std::size_t r) {
  const Matrix& a = val(x);
  assert(r < a.rows);
  Matrix c(1, a.cols);
  for (std::size_t j = 0; j < a.cols; ++j) c(0, j) = a(r, j);
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, r, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    Matrix& gx = t.grad_mut(x);
    for (std::size_t j = 0; j < g.cols; ++j) gx(r, j) += g(0, j);
  };
  return out;
}

Tape::Ref Tape::stack_rows(const std::vector<Ref>& rows) {
  assert(!rows.empty());
  const std::size_t c = val(rows[0]).cols;
  Matrix m(rows.size(), c);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Matrix& r = val(rows[i]);
    assert(r.rows == 1 && r.cols == c);
    for (std::size_t j = 0; j < c; ++j) m(i, j) = r(0, j);
  }
  Ref out = push(std::move(m), nullptr);
  auto srcs = rows;
  nodes_[out].back = [srcs, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    for (std::size_t i = 0; i < srcs.size(); ++i) {
      Matrix& gi = t.grad_mut(srcs[i]);
      for (std::size_t j = 0; j < g.cols; ++j) gi(0, j) += g(i, j);
    }
  };
  return out;
}

Tape::Ref Tape::cols(Ref x, std::size_t c0, std::size_t c1) {
  const Matrix& a = val(x);
  assert(c0 < c1 && c1 <= a.cols);
  Matrix c(a.rows, c1 - c0);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = c0; j < c1; ++j) c(i, j - c0) = a(i, j);
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, c0, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    Matrix& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.rows; ++i)
      for (std::size_t j = 0; j < g.cols; ++j) gx(i, c0 + j) += g(i, j);
  };
  return out;
}

Tape::Ref Tape::concat_cols(const std::vector<Ref>& parts) {
  assert(!parts.empty());
  const std::size_t r = val(parts[0]).rows;
  std::size_t total = 0;
  for (Ref p : parts) {
    assert(val(p).rows == r);
    total += val(p).cols;
  }
  Matrix m(r, total);
  std::size_t off = 0;
  for (Ref p : parts) {
    const Matrix& a = val(p);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < a.cols; ++j) m(i, off + j) = a(i, j);
    off += a.cols;
  }
  Ref out = push(std::move(m), nullptr);
  auto srcs = parts;
  nodes_[out].back = [srcs, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    std::size_t off2 = 0;
    for (Ref p : srcs) {
      Matrix& gp = t.grad_mut(p);
      for (std::size_t i = 0; i < g.rows; ++i)
        for (std::size_t j = 0; j < gp.cols; ++j) gp(i, j) += g(i, off2 + j);
      off2 += gp.cols;
    }
  };
  return out;
}

Tape::Ref Tape::gather_rows(Ref table, const std::vector<int>& ids) {
  const Matrix& tbl = val(table);
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= tbl.rows)
      throw IdOutOfRange("gather_rows: id " + std::to_string(id) + " outside table of " +
                         std::to_string(tbl.rows) + " rows");
  }
  Matrix m(ids.size(), tbl.cols);
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = 0; j < tbl.cols; ++j) m(i, j) = tbl(static_cast<std::size_t>(ids[i]), j);
  Ref out = push(std::move(m), nullptr);
  auto idx = ids;
  nodes_[out].back = [table, idx, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    Matrix& gt = t.grad_mut(table);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < g.cols; ++j) gt(static_cast<std::size_t>(idx[i]), j) += g(i, j);
  };
  return out;
}

Tape::Ref Tape::sigmoid(Ref x) {
  const Matrix& a = val(x);
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < c.size(); ++i) c.a[i] = 1.0 / (1.0 + std::exp(-a.a[i]));
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    const Matrix& s = t.val(out);
    Matrix& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx.a[i] += g.a[i] * s.a[i] * (1.0 - s.a[i]);
  };
  return out;
}

Tape::Ref Tape::tanh_(Ref x) {
  const Matrix& a = val(x);
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < c.size(); ++i) c.a[i] = std::tanh(a.a[i]);
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    const Matrix& v = t.val(out);
    Matrix& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx.a[i] += g.a[i] * (1.0 - v.a[i] * v.a[i]);
  };
  return out;
}

Tape::Ref Tape::silu(Ref x) {
  const Matrix& a = val(x);
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double s = 1.0 / (1.0 + std::exp(-a.a[i]));
    c.a[i] = a.a[i] * s;
  }
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    const Matrix& v = t.val(x);
    Matrix& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = 1.0 / (1.0 + std::exp(-v.a[i]));
      gx.a[i] += g.a[i] * s * (1.0 + v.a[i] * (1.0 - s));
    }
  };
  return out;
}

Tape::Ref Tape::softplus(Ref x) {
  const Matrix& a = val(x);
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double v = a.a[i];
    c.a[i] = v > 30.0 ? v : (v < -30.0 ? std::exp(v) : std::log1p(std::exp(v)));
  }
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    const Matrix& v = t.val(x);
    Matrix& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i)
      gx.a[i] += g.a[i] / (1.0 + std::exp(-v.a[i]));
  };
  return out;
}

Tape::Ref Tape::relu(Ref x) {
  const Matrix& a = val(x);
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < c.size(); ++i) c.a[i] = a.a[i] > 0.0 ? a.a[i] : 0.0;
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    const Matrix& v = t.val(x);
    Matrix& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (v.a[i] > 0.0) gx.a[i] += g.a[i];
  };
  return out;
}

Tape::Ref Tape::huber(Ref x, double delta) {
  const Matrix& a = val(x);
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double r = a.a[i];
    const double ar = std::fabs(r);
    c.a[i] = ar <= delta ? 0.5 * r * r : delta * (ar - 0.5 * delta);
  }
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, delta, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    const Matrix& v = t.val(x);
    Matrix& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = v.a[i];
      const double d = std::fabs(r) <= delta ? r : (r > 0.0 ? delta : -delta);
      gx.a[i] += g.a[i] * d;
    }
  };
  return out;
}

Tape::Ref Tape::sqrt_eps(Ref x, double eps) {
  const Matrix& a = val(x);
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < c.size(); ++i) c.a[i] = std::sqrt(a.a[i] + eps);
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    const Matrix& v = t.val(out);
    Matrix& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx.a[i] += g.a[i] * 0.5 / v.a[i];
  };
  return out;
}

Tape::Ref Tape::scale_rows(Ref x, Ref r) {
  const Matrix& a = val(x);
  const Matrix& s = val(r);
  assert(s.rows == 1 && s.cols == a.rows);
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) c(i, j) = a(i, j) * s(0, i);
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, r, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    const Matrix& av = t.val(x);
    const Matrix& sv = t.val(r);
    Matrix& gx = t.grad_mut(x);
    Matrix& gs = t.grad_mut(r);
    for (std::size_t i = 0; i < g.rows; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < g.cols; ++j) {
        gx(i, j) += g(i, j) * sv(0, i);
        acc += g(i, j) * av(i, j);
      }
      gs(0, i) += acc;
    }
  };
  return out;
}

Tape::Ref Tape::layer_norm(Ref x, Ref gain, Ref bias, double eps) {
  const Matrix& a = val(x);
  const Matrix& g = val(gain);
  const Matrix& b = val(bias);
  assert(g.rows == 1 && g.cols == a.cols && b.rows == 1 && b.cols == a.cols);
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) mu += a(i, j);
    mu /= static_cast<double>(a.cols);
    double var = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) {
      const double d = a(i, j) - mu;
      var += d * d;
    }
    var /= static_cast<double>(a.cols);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < a.cols; ++j) c(i, j) = g(0, j) * (a(i, j) - mu) * inv + b(0, j);
  }
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, gain, bias, eps, out](Tape& t) {
    const Matrix& go = t.grad_mut(out);
    const Matrix& av = t.val(x);
    const Matrix& gv = t.val(gain);
    Matrix& gx = t.grad_mut(x);
    Matrix& gg = t.grad_mut(gain);
    Matrix& gb = t.grad_mut(bias);
    const std::size_t C = av.cols;
    const double n = static_cast<double>(C);
    for (std::size_t i = 0; i < av.rows; ++i) {
      double mu = 0.0;
      for (std::size_t j = 0; j < C; ++j) mu += av(i, j);
      mu /= n;
      double var = 0.0;
      for (std::size_t j = 0; j < C; ++j) {
        const double d = av(i, j) - mu;
        var += d * d;
      }
      var /= n;
      const double inv = 1.0 / std::sqrt(var + eps);
      // dxhat_j = go_j * gain_j ; standard layer-norm backward
      double sum_dxhat = 0.0;
      double sum_dxhat_xhat = 0.0;
      for (std::size_t j = 0; j < C; ++j) {
        const double xhat = (av(i, j) - mu) * inv;
        const double dxhat = go(i, j) * gv(0, j);
        sum_dxhat += dxhat;
        sum_dxhat_xhat += dxhat * xhat;
        gg(0, j) += go(i, j) * xhat;
        gb(0, j) += go(i, j);
      }
      for (std::size_t j = 0; j < C; ++j) {
        const double xhat = (av(i, j) - mu) * inv;
        const double dxhat = go(i, j) * gv(0, j);
        gx(i, j) += inv * (dxhat - sum_dxhat / n - xhat * sum_dxhat_xhat / n);
      }
    }
  };
  return out;
}

Tape::Ref Tape::softmax_rows(Ref x) {
  const Matrix& a = val(x);
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double mx = a(i, 0);
    for (std::size_t j = 1; j < a.cols; ++j) mx = std::max(mx, a(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) {
      c(i, j) = std::exp(a(i, j) - mx);
      z += c(i, j);
    }
    for (std::size_t j = 0; j < a.cols; ++j) c(i, j) /= z;
  }
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    const Matrix& p = t.val(out);
    Matrix& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < p.rows; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < p.cols; ++j) acc += g(i, j) * p(i, j);
      for (std::size_t j = 0; j < p.cols; ++j) gx(i, j) += p(i, j) * (g(i, j) - acc);
    }
  };
  return out;
}

Tape::Ref Tape::masked_softmax_row(Ref e, const std::vector<char>& keep) {
  const Matrix& a = val(e);
  assert(a.rows == 1 && keep.size() == a.cols);
  bool any = false;
  for (char k : keep) any = any || (k != 0);
  if (!any) throw AllPadded("masked_softmax_row: every position is padding");
  Matrix c(1, a.cols);
  double mx = -1e300;
  for (std::size_t j = 0; j < a.cols; ++j)
    if (keep[j]) mx = std::max(mx, a(0, j));
  double z = 0.0;
  for (std::size_t j = 0; j < a.cols; ++j) {
    if (keep[j]) {
      c(0, j) = std::exp(a(0, j) - mx);
      z += c(0, j);
    } else {
      c(0, j) = 0.0;
    }
  }
  for (std::size_t j = 0; j < a.cols; ++j)
    if (keep[j]) c(0, j) /= z;
  Ref out = push(std::move(c), nullptr);
  auto mask = keep;
  nodes_[out].back = [e, mask, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    const Matrix& p = t.val(out);
    Matrix& gx = t.grad_mut(e);
    double acc = 0.0;
    for (std::size_t j = 0; j < p.cols; ++j)
      if (mask[j]) acc += g(0, j) * p(0, j);
    for (std::size_t j = 0; j < p.cols; ++j)
      if (mask[j]) gx(0, j) += p(0, j) * (g(0, j) - acc);
  };
  return out;
}

Tape::Ref Tape::l2_normalize_rows(Ref x, double eps) {
  const Matrix& a = val(x);
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double ss = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) ss += a(i, j) * a(i, j);
    const double n = std::sqrt(ss + eps);
    for (std::size_t j = 0; j < a.cols; ++j) c(i, j) = a(i, j) / n;
  }
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, eps, out](Tape& t) {
    const Matrix& g = t.grad_mut(out);
    const Matrix& av = t.val(x);
    Matrix& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < av.rows; ++i) {
      double ss = 0.0;
      double gdotx = 0.0;
      for (std::size_t j = 0; j < av.cols; ++j) {
        ss += av(i, j) * av(i, j);
        gdotx += g(i, j) * av(i, j);
      }
      const double n = std::sqrt(ss + eps);
      const double n3 = n * n * n;
      for (std::size_t j = 0; j < av.cols; ++j)
        gx(i, j) += g(i, j) / n - av(i, j) * gdotx / n3;
    }
  };
  return out;
}

Tape::Ref Tape::sum(Ref x) {
  const Matrix& a = val(x);
  double s = 0.0;
  for (double v : a.a) s += v;
  Matrix c(1, 1);
  c.a[0] = s;
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, out](Tape& t) {
    const double g = t.grad_mut(out).a[0];
    Matrix& gx = t.grad_mut(x);
    for (double& v : gx.a) v += g;
  };
  return out;
}

Tape::Ref Tape::mean_all(Ref x) {
  const Matrix& a = val(x);
  const double n = static_cast<double>(a.size());
  double s = 0.0;
  for (double v : a.a) s += v;
  Matrix c(1, 1);
  c.a[0] = s / n;
  Ref out = push(std::move(c), nullptr);
  nodes_[out].back = [x, n, out](Tape& t) {
    const double g = t.grad_mut(out).a[0] / n;
    Matrix& gx = t.grad_mut(x);
    for (double& v : gx.a) v += g;
  };
  return out;
}

Tape::Ref Tape::softmax_xent_rows(Ref logits, const std::vector<int>& targets, int ignore_index) {
  const Matrix& a = val(logits);
  assert(targets.size() == a.rows);
  std::size_t valid = 0;
  for (int tgt : targets)
    if (tgt != ignore_index) {
      if (tgt < 0 || static_cast<std::size_t>(tgt) >= a.cols)
        throw IdOutOfRange("softmax_xent_rows: target " + std::to_string(tgt) + " outside " +
                           std::to_string(a.cols) + " classes");
      ++valid;
    }
  Matrix c(1, 1);
  if (valid == 0) return push(std::move(c), nullptr);

  double total = 0.0;
  for (std::size_t i = 0; i < a.rows; ++i) {
    if (targets[i] == ignore_index) continue;
    double mx = a(i, 0);
    for (std::size_t j = 1; j < a.cols; ++j) mx = std::max(mx, a(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) z += std::exp(a(i, j) - mx);
    total += std::log(z) - (a(i, static_cast<std::size_t>(targets[i])) - mx);
  }
  c.a[0] = total / static_cast<double>(valid);
  Ref out = push(std::move(c), nullptr);
  auto tgt = targets;
  nodes_[out].back = [logits, tgt, ignore_index, valid, out](Tape& t) {
    const double g = t.grad_mut(out).a[0] / static_cast<double>(valid);
    const Matrix& av = t.val(logits);
    Matrix& gx = t.grad_mut(logits);
    for (std::size_t i = 0; i < av.rows; ++i) {
      if (tgt[i] == ignore_index) continue;
      double mx = av(i, 0);
      for (std::size_t j = 1; j < av.cols; ++j) mx = std::max(mx, av(i, j));
      double z = 0.0;
      for (std::size_t j = 0; j < av.cols; ++j) z += std::exp(av(i, j) - mx);
      for (std::size_t j = 0; j < av.cols; ++j) {
        const double p = std::exp(av(i, j) - mx) / z;
        const double onehot = (static_cast<std::size_t>(tgt[i]) == j) ? 1.0 : 0.0;
        gx(i, j) += g * (p - onehot);
      }
    }
  };
  return out;
}

void Tape::backward(Ref loss) {
  Node& top = nodes_[static_cast<std::size_t>(loss)];
  assert(top.val.rows == 1 && top.val.cols == 1);
  top.grad.a[0] = 1.0;
  for (std::size_t i = static_cast<std::size_t>(loss) + 1; i-- > 0;) {
    if (nodes_[i].back) nodes_[i].back(*this);
  }
}

void Adam::step(const std::vector<ParamTensor*>& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (ParamTensor* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad.a[i];
      p->adam_m.a[i] = beta1_ * p->adam_m.a[i] + (1.0 - beta1_) * g;
      p->adam_v.a[i] = beta2_ * p->adam_v.a[i] + (1.0 - beta2_) * g * g;
      const double mh = p->adam_m.a[i] / bc1;
      const double vh = p->adam_v.a[i] / bc2;
      p->value.a[i] -= lr_ * mh / (std::sqrt(vh) + eps_);
    }
  }
}

GradCheckReport gradient_check(const std::vector<ParamTensor*>& params,
                               const std::function<double(bool)>& loss_fn, double step) {
  for (ParamTensor* p : params) p->zero_grad();
  loss_fn(true);

  GradCheckReport report;
  for (ParamTensor* p : params) {
    double worst = 0.0;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value.a[i];
      p->value.a[i] = saved + step;
      const double lp = loss_fn(false);
      p->value.a[i] = saved - step;
      const double lm = loss_fn(false);
      p->value.a[i] = saved;
      const double numeric = (lp - lm) / (2.0 * step);
      const double analytic = p->grad.a[i];
      const double rel = std::fabs(analytic - numeric) /
                         std::max(1e-6, std::fabs(analytic) + std::fabs(numeric));
      worst = std::max(worst, rel);
    }
    report.entries.push_back({p->name, worst});
    report.max_rel_err = std::max(report.max_rel_err, worst);
  }
  return report;
}

}  // namespace sbbv
