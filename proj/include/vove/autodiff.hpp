// Copyright 2026 The Vo-Ve Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "vove/error.hpp"

// Reverse-mode automatic differentiation on a tape. Node values are batches
// of double matrices so one graph handles a minibatch of spectrograms whose
// items may differ in length (each item is channels x time). Ops append
// nodes; backward() walks the tape in reverse, accumulating gradients.
namespace vove::ad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Batch = std::vector<Matrix>;

class Tape {
 public:
  // Adds a graph input. Parameters pass requires_grad = true.
  int leaf(Batch value, bool requires_grad = false) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int leaf(Matrix value, bool requires_grad = false) {
    return leaf(Batch{std::move(value)}, requires_grad);
  }

  // Adds a computed node. `backfn` receives the tape and the node's own id
  // and must scatter d(loss)/d(node) into the parents' grads.
  int emit(Batch value, const std::vector<int>& parents,
           std::function<void(Tape&, int)> backfn) {
    Node n;
    n.value = std::move(value);
    for (int p : parents) n.requires_grad |= nodes_.at(p).requires_grad;
    if (n.requires_grad) n.backfn = std::move(backfn);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  const Batch& value(int id) const { return nodes_.at(id).value; }
  bool requires_grad(int id) const { return nodes_.at(id).requires_grad; }

  // Gradient of the last backward()'s loss w.r.t. node `id`.
  const Batch& grad(int id) const {
    const Node& n = nodes_.at(id);
    if (n.grad.size() != n.value.size())
      throw ValidationError("Tape::grad: no gradient on this node");
    return n.grad;
  }

  // Mutable gradient accumulator, zero-initialized to the value's shapes.
  Batch& grad_mut(int id) {
    Node& n = nodes_.at(id);
    if (n.grad.size() != n.value.size()) {
      n.grad.clear();
      n.grad.reserve(n.value.size());
      for (const auto& m : n.value)
        n.grad.push_back(Matrix::Zero(m.rows(), m.cols()));
    }
    return n.grad;
  }

  // Seeds d(loss)/d(loss) = 1 and runs the tape backwards. `loss_id` must be
  // a batch-of-one 1x1 scalar.
  void backward(int loss_id) {
    const Batch& v = value(loss_id);
    if (v.size() != 1 || v[0].rows() != 1 || v[0].cols() != 1)
      throw ValidationError("Tape::backward: loss must be a 1x1 scalar");
    for (Node& n : nodes_) n.grad.clear();
    grad_mut(loss_id)[0](0, 0) = 1.0;
    for (int id = loss_id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.requires_grad && n.backfn && n.grad.size() == n.value.size())
        n.backfn(*this, id);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Batch value;
    Batch grad;
    bool requires_grad = false;
    std::function<void(Tape&, int)> backfn;
  };
  std::vector<Node> nodes_;
};

namespace detail {

inline void check_batch_one(const Batch& b, const char* who) {
  if (b.size() != 1)
    throw ShapeError(std::string(who) + ": parameter must be a single matrix");
}

inline double stable_sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise ops.

inline int relu(Tape& t, int x) {
  Batch out = t.value(x);
  for (auto& m : out) m = m.cwiseMax(0.0);
  return t.emit(std::move(out), {x}, [x](Tape& t, int self) {
    const Batch& g = t.grad(self);
    const Batch& v = t.value(x);
    Batch& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i)
      gx[i].array() += g[i].array() * (v[i].array() > 0.0).cast<double>();
  });
}

inline int sigmoid(Tape& t, int x) {
  Batch out = t.value(x);
  for (auto& m : out)
    m = m.unaryExpr([](double v) { return detail::stable_sigmoid(v); });
  return t.emit(std::move(out), {x}, [x](Tape& t, int self) {
    const Batch& g = t.grad(self);
    const Batch& y = t.value(self);
    Batch& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i)
      gx[i].array() += g[i].array() * y[i].array() * (1.0 - y[i].array());
  });
}

inline int tanh_op(Tape& t, int x) {
  Batch out = t.value(x);
  for (auto& m : out) m = m.array().tanh().matrix();
  return t.emit(std::move(out), {x}, [x](Tape& t, int self) {
    const Batch& g = t.grad(self);
    const Batch& y = t.value(self);
    Batch& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i)
      gx[i].array() += g[i].array() * (1.0 - y[i].array().square());
  });
}

inline int add(Tape& t, int a, int b) {
  const Batch& va = t.value(a);
  const Batch& vb = t.value(b);
  if (va.size() != vb.size())
    throw ShapeError("add: batch size mismatch");
  Batch out(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) {
    if (va[i].rows() != vb[i].rows() || va[i].cols() != vb[i].cols())
      throw ShapeError("add: item shape mismatch");
    out[i] = va[i] + vb[i];
  }
  return t.emit(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Batch& g = t.grad(self);
    if (t.requires_grad(a)) {
      Batch& ga = t.grad_mut(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(b)) {
      Batch& gb = t.grad_mut(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
}

inline int sub(Tape& t, int a, int b) {
  const Batch& va = t.value(a);
  const Batch& vb = t.value(b);
  if (va.size() != vb.size()) throw ShapeError("sub: batch size mismatch");
  Batch out(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = va[i] - vb[i];
  return t.emit(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Batch& g = t.grad(self);
    if (t.requires_grad(a)) {
      Batch& ga = t.grad_mut(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(b)) {
      Batch& gb = t.grad_mut(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

// Elementwise product. Passing the same node twice differentiates x^2
// correctly (both accumulations land on the one grad buffer).
inline int mul(Tape& t, int a, int b) {
  const Batch& va = t.value(a);
  const Batch& vb = t.value(b);
  if (va.size() != vb.size()) throw ShapeError("mul: batch size mismatch");
  Batch out(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) {
    if (va[i].rows() != vb[i].rows() || va[i].cols() != vb[i].cols())
      throw ShapeError("mul: item shape mismatch");
    out[i] = va[i].cwiseProduct(vb[i]);
  }
  return t.emit(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Batch& g = t.grad(self);
    const Batch& va = t.value(a);
    const Batch& vb = t.value(b);
    if (t.requires_grad(a)) {
      Batch& ga = t.grad_mut(a);
      for (std::size_t i = 0; i < g.size(); ++i)
        ga[i] += g[i].cwiseProduct(vb[i]);
    }
    if (t.requires_grad(b)) {
      Batch& gb = t.grad_mut(b);
      for (std::size_t i = 0; i < g.size(); ++i)
        gb[i] += g[i].cwiseProduct(va[i]);
    }
  });
}

inline int scale(Tape& t, int x, double c) {
  Batch out = t.value(x);
  for (auto& m : out) m *= c;
  return t.emit(std::move(out), {x}, [x, c](Tape& t, int self) {
    const Batch& g = t.grad(self);
    Batch& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += c * g[i];
  });
}

// sqrt(max(x, 0) + eps); the clamp's subgradient is 0 below zero.
inline int sqrt_eps(Tape& t, int x, double eps) {
  if (!(eps > 0.0)) throw ValidationError("sqrt_eps: eps must be positive");
  Batch out = t.value(x);
  for (auto& m : out)
    m = (m.array().max(0.0) + eps).sqrt().matrix();
  return t.emit(std::move(out), {x}, [x](Tape& t, int self) {
    const Batch& g = t.grad(self);
    const Batch& y = t.value(self);
    const Batch& v = t.value(x);
    Batch& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i)
      gx[i].array() += g[i].array() * (v[i].array() >= 0.0).cast<double>() /
                       (2.0 * y[i].array());
  });
}

// ---------------------------------------------------------------------------
// Linear algebra.

// W (single matrix) times each item: Y_i = W * X_i.
inline int matmul(Tape& t, int w, int x) {
  const Batch& vw = t.value(w);
  detail::check_batch_one(vw, "matmul");
  const Batch& vx = t.value(x);
  Batch out(vx.size());
  for (std::size_t i = 0; i < vx.size(); ++i) {
    if (vw[0].cols() != vx[i].rows())
      throw ShapeError("matmul: inner dimension mismatch");
    out[i] = vw[0] * vx[i];
  }
  return t.emit(std::move(out), {w, x}, [w, x](Tape& t, int self) {
    const Batch& g = t.grad(self);
    const Batch& vw = t.value(w);
    const Batch& vx = t.value(x);
    if (t.requires_grad(w)) {
      Batch& gw = t.grad_mut(w);
      for (std::size_t i = 0; i < g.size(); ++i)
        gw[0] += g[i] * vx[i].transpose();
    }
    if (t.requires_grad(x)) {
      Batch& gx = t.grad_mut(x);
      for (std::size_t i = 0; i < g.size(); ++i)
        gx[i] += vw[0].transpose() * g[i];
    }
  });
}

// Adds a column-vector bias (single C x 1 matrix) to every column of every
// item.
inline int add_bias(Tape& t, int x, int b) {
  const Batch& vb = t.value(b);
  detail::check_batch_one(vb, "add_bias");
  if (vb[0].cols() != 1) throw ShapeError("add_bias: bias must be a column");
  const Batch& vx = t.value(x);
  Batch out(vx.size());
  for (std::size_t i = 0; i < vx.size(); ++i) {
    if (vx[i].rows() != vb[0].rows())
      throw ShapeError("add_bias: row count mismatch");
    out[i] = vx[i].colwise() + vb[0].col(0);
  }
  return t.emit(std::move(out), {x, b}, [x, b](Tape& t, int self) {
    const Batch& g = t.grad(self);
    if (t.requires_grad(x)) {
      Batch& gx = t.grad_mut(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (t.requires_grad(b)) {
      Batch& gb = t.grad_mut(b);
      for (std::size_t i = 0; i < g.size(); ++i)
        gb[0].col(0) += g[i].rowwise().sum();
    }
  });
}

// Scales each column of X_i by the per-channel gate g_i (C x 1).
inline int broadcast_mul_cols(Tape& t, int x, int gate) {
  const Batch& vx = t.value(x);
  const Batch& vg = t.value(gate);
  if (vx.size() != vg.size())
    throw ShapeError("broadcast_mul_cols: batch size mismatch");
  Batch out(vx.size());
  for (std::size_t i = 0; i < vx.size(); ++i) {
    if (vg[i].cols() != 1 || vg[i].rows() != vx[i].rows())
      throw ShapeError("broadcast_mul_cols: gate must be C x 1");
    out[i] = vx[i].array().colwise() * vg[i].col(0).array();
  }
  return t.emit(std::move(out), {x, gate}, [x, gate](Tape& t, int self) {
    const Batch& g = t.grad(self);
    const Batch& vx = t.value(x);
    const Batch& vg = t.value(gate);
    if (t.requires_grad(x)) {
      Batch& gx = t.grad_mut(x);
      for (std::size_t i = 0; i < g.size(); ++i)
        gx[i].array() += g[i].array().colwise() * vg[i].col(0).array();
    }
    if (t.requires_grad(gate)) {
      Batch& gg = t.grad_mut(gate);
      for (std::size_t i = 0; i < g.size(); ++i)
        gg[i].col(0) += g[i].cwiseProduct(vx[i]).rowwise().sum();
    }
  });
}

inline int row_sum(Tape& t, int x) {
  const Batch& vx = t.value(x);
  Batch out(vx.size());
  for (std::size_t i = 0; i < vx.size(); ++i)
    out[i] = vx[i].rowwise().sum();
  return t.emit(std::move(out), {x}, [x](Tape& t, int self) {
    const Batch& g = t.grad(self);
    Batch& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i)
      gx[i].colwise() += g[i].col(0);
  });
}

inline int row_mean(Tape& t, int x) {
  const Batch& vx = t.value(x);
  Batch out(vx.size());
  for (std::size_t i = 0; i < vx.size(); ++i)
    out[i] = vx[i].rowwise().mean();
  return t.emit(std::move(out), {x}, [x](Tape& t, int self) {
    const Batch& g = t.grad(self);
    const Batch& vx = t.value(x);
    Batch& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i)
      gx[i].colwise() += g[i].col(0) / static_cast<double>(vx[i].cols());
  });
}

// Rows [begin, begin + count) of every item.
inline int slice_rows(Tape& t, int x, int begin, int count) {
  const Batch& vx = t.value(x);
  Batch out(vx.size());
  for (std::size_t i = 0; i < vx.size(); ++i) {
    if (begin < 0 || count <= 0 || begin + count > vx[i].rows())
      throw ShapeError("slice_rows: range out of bounds");
    out[i] = vx[i].middleRows(begin, count);
  }
  return t.emit(std::move(out), {x}, [x, begin, count](Tape& t, int self) {
    const Batch& g = t.grad(self);
    Batch& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i)
      gx[i].middleRows(begin, count) += g[i];
  });
}

// Vertical concatenation of several nodes' items.
inline int concat_rows(Tape& t, const std::vector<int>& xs) {
  if (xs.empty()) throw ShapeError("concat_rows: nothing to concatenate");
  const std::size_t batch = t.value(xs[0]).size();
  Batch out(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    Eigen::Index rows = 0;
    const Eigen::Index cols = t.value(xs[0])[i].cols();
    for (int x : xs) {
      const Batch& vx = t.value(x);
      if (vx.size() != batch) throw ShapeError("concat_rows: batch mismatch");
      if (vx[i].cols() != cols)
        throw ShapeError("concat_rows: column count mismatch");
      rows += vx[i].rows();
    }
    out[i].resize(rows, cols);
    Eigen::Index at = 0;
    for (int x : xs) {
      const Matrix& m = t.value(x)[i];
      out[i].middleRows(at, m.rows()) = m;
      at += m.rows();
    }
  }
  return t.emit(std::move(out), xs, [xs](Tape& t, int self) {
    const Batch& g = t.grad(self);
    for (std::size_t i = 0; i < g.size(); ++i) {
      Eigen::Index at = 0;
      for (int x : xs) {
        const Eigen::Index rows = t.value(x)[i].rows();
        if (t.requires_grad(x))
          t.grad_mut(x)[i] += g[i].middleRows(at, rows);
        at += rows;
      }
    }
  });
}

// ---------------------------------------------------------------------------
// 1-D convolution over time with dilation and zero "same" padding.
// Input items are C_in x T; the weight is C_out x (C_in * K) with column
// ci * K + ki addressing input channel ci, tap ki; output is C_out x T.
inline int conv1d(Tape& t, int x, int w, int b, int kernel, int dilation) {
  if (kernel < 1 || kernel % 2 == 0)
    throw ValidationError("conv1d: kernel must be odd and positive");
  if (dilation < 1) throw ValidationError("conv1d: dilation must be >= 1");
  const Batch& vx = t.value(x);
  const Batch& vw = t.value(w);
  detail::check_batch_one(vw, "conv1d");
  const Batch& vb = t.value(b);
  detail::check_batch_one(vb, "conv1d");
  const int center = kernel / 2;

  auto im2col = [kernel, dilation, center](const Matrix& item) {
    const Eigen::Index cin = item.rows(), T = item.cols();
    Matrix col = Matrix::Zero(cin * kernel, T);
    for (Eigen::Index ci = 0; ci < cin; ++ci)
      for (int ki = 0; ki < kernel; ++ki) {
        const Eigen::Index off =
            static_cast<Eigen::Index>((ki - center) * dilation);
        for (Eigen::Index tt = 0; tt < T; ++tt) {
          const Eigen::Index src = tt + off;
          if (src >= 0 && src < T) col(ci * kernel + ki, tt) = item(ci, src);
        }
      }
    return col;
  };

  Batch cols(vx.size());
  Batch out(vx.size());
  for (std::size_t i = 0; i < vx.size(); ++i) {
    if (vw[0].cols() != vx[i].rows() * kernel)
      throw ShapeError("conv1d: weight columns != C_in * kernel");
    cols[i] = im2col(vx[i]);
    out[i] = (vw[0] * cols[i]).colwise() + vb[0].col(0);
  }

  return t.emit(
      std::move(out), {x, w, b},
      [x, w, b, kernel, dilation, center, cols](Tape& t, int self) {
        const Batch& g = t.grad(self);
        const Batch& vw = t.value(w);
        if (t.requires_grad(w)) {
          Batch& gw = t.grad_mut(w);
          for (std::size_t i = 0; i < g.size(); ++i)
            gw[0] += g[i] * cols[i].transpose();
        }
        if (t.requires_grad(b)) {
          Batch& gb = t.grad_mut(b);
          for (std::size_t i = 0; i < g.size(); ++i)
            gb[0].col(0) += g[i].rowwise().sum();
        }
        if (t.requires_grad(x)) {
          Batch& gx = t.grad_mut(x);
          for (std::size_t i = 0; i < g.size(); ++i) {
            Matrix gcol = vw[0].transpose() * g[i];  // (C_in*K) x T
            const Eigen::Index cin = gx[i].rows(), T = gx[i].cols();
            for (Eigen::Index ci = 0; ci < cin; ++ci)
              for (int ki = 0; ki < kernel; ++ki) {
                const Eigen::Index off =
                    static_cast<Eigen::Index>((ki - center) * dilation);
                for (Eigen::Index tt = 0; tt < T; ++tt) {
                  const Eigen::Index src = tt + off;
                  if (src >= 0 && src < T)
                    gx[i](ci, src) += gcol(ci * kernel + ki, tt);
                }
              }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Batch normalization over channels (rows). Statistics pool every column of
// every item, so the same op serves C x T feature maps and C x 1 vectors.
// Biased variance is used both for normalization and the running buffers.
// Training mode updates running_mean / running_var in place as a forward
// side effect; eval mode freezes them.
inline int batchnorm(Tape& t, int x, int gamma, int beta,
                     Vector& running_mean, Vector& running_var, bool training,
                     double momentum = 0.1, double eps = 1e-5) {
  const Batch& vx = t.value(x);
  if (vx.empty()) throw ShapeError("batchnorm: empty batch");
  const Eigen::Index C = vx[0].rows();
  const Batch& vg = t.value(gamma);
  const Batch& vbeta = t.value(beta);
  detail::check_batch_one(vg, "batchnorm");
  detail::check_batch_one(vbeta, "batchnorm");
  if (vg[0].rows() != C || vbeta[0].rows() != C ||
      running_mean.size() != C || running_var.size() != C)
    throw ShapeError("batchnorm: channel count mismatch");

  Vector mean(C), var(C);
  double n_cols = 0;
  if (training) {
    mean.setZero();
    for (const auto& m : vx) {
      if (m.rows() != C) throw ShapeError("batchnorm: item channel mismatch");
      mean += m.rowwise().sum();
      n_cols += static_cast<double>(m.cols());
    }
    if (n_cols < 1) throw ShapeError("batchnorm: no columns");
    mean /= n_cols;
    var.setZero();
    for (const auto& m : vx)
      var += (m.colwise() - mean).array().square().matrix().rowwise().sum();
    var /= n_cols;
    running_mean = (1.0 - momentum) * running_mean + momentum * mean;
    running_var = (1.0 - momentum) * running_var + momentum * var;
  } else {
    mean = running_mean;
    var = running_var;
  }

  Vector inv_std = (var.array() + eps).rsqrt();
  Batch xhat(vx.size());
  Batch out(vx.size());
  for (std::size_t i = 0; i < vx.size(); ++i) {
    xhat[i] = ((vx[i].colwise() - mean).array().colwise() *
               inv_std.array()).matrix();
    out[i] = (xhat[i].array().colwise() * vg[0].col(0).array()).matrix()
                 .colwise() +
             vbeta[0].col(0);
  }

  return t.emit(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat, inv_std, n_cols, training](Tape& t, int self) {
        const Batch& g = t.grad(self);
        const Batch& vg = t.value(gamma);
        const Eigen::Index C = xhat[0].rows();
        if (t.requires_grad(gamma)) {
          Batch& ggamma = t.grad_mut(gamma);
          for (std::size_t i = 0; i < g.size(); ++i)
            ggamma[0].col(0) += g[i].cwiseProduct(xhat[i]).rowwise().sum();
        }
        if (t.requires_grad(beta)) {
          Batch& gbeta = t.grad_mut(beta);
          for (std::size_t i = 0; i < g.size(); ++i)
            gbeta[0].col(0) += g[i].rowwise().sum();
        }
        if (!t.requires_grad(x)) return;
        Batch& gx = t.grad_mut(x);
        if (!training) {
          // Frozen stats: a per-channel affine map.
          for (std::size_t i = 0; i < g.size(); ++i)
            gx[i].array() += g[i].array().colwise() *
                             (vg[0].col(0).array() * inv_std.array());
          return;
        }
        Vector s1 = Vector::Zero(C);  // sum of dy per channel
        Vector s2 = Vector::Zero(C);  // sum of dy * xhat per channel
        for (std::size_t i = 0; i < g.size(); ++i) {
          s1 += g[i].rowwise().sum();
          s2 += g[i].cwiseProduct(xhat[i]).rowwise().sum();
        }
        for (std::size_t i = 0; i < g.size(); ++i) {
          Eigen::ArrayXXd term =
              g[i].array() - (s1.array() / n_cols).replicate(1, g[i].cols()) -
              xhat[i].array().colwise() * (s2.array() / n_cols);
          gx[i].array() +=
              term.colwise() * (vg[0].col(0).array() * inv_std.array());
        }
      });
}

// ---------------------------------------------------------------------------
// Softmax across time (per row, over columns) for attention weights.
inline int softmax_time(Tape& t, int x) {
  const Batch& vx = t.value(x);
  Batch out(vx.size());
  for (std::size_t i = 0; i < vx.size(); ++i) {
    out[i].resizeLike(vx[i]);
    for (Eigen::Index r = 0; r < vx[i].rows(); ++r) {
      const double mx = vx[i].row(r).maxCoeff();
      Eigen::ArrayXd e = (vx[i].row(r).array() - mx).exp();
      out[i].row(r) = (e / e.sum()).matrix();
    }
  }
  return t.emit(std::move(out), {x}, [x](Tape& t, int self) {
    const Batch& g = t.grad(self);
    const Batch& y = t.value(self);
    Batch& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i)
      for (Eigen::Index r = 0; r < g[i].rows(); ++r) {
        const double dot = g[i].row(r).dot(y[i].row(r));
        gx[i].row(r) +=
            (y[i].row(r).array() * (g[i].row(r).array() - dot)).matrix();
      }
  });
}

// Sum of every element of every item; handy as a reduction in tests.
inline int sum_all(Tape& t, int x) {
  const Batch& vx = t.value(x);
  double s = 0.0;
  for (const auto& m : vx) s += m.sum();
  Matrix v(1, 1);
  v(0, 0) = s;
  return t.emit(Batch{v}, {x}, [x](Tape& t, int self) {
    const double g = t.grad(self)[0](0, 0);
    Batch& gx = t.grad_mut(x);
    for (auto& m : gx) m.array() += g;
  });
}

// ---------------------------------------------------------------------------
// Losses (fused with their final nonlinearity for numerical stability).

// Multi-label binary cross-entropy on logits: summed over labels within an
// item, averaged over the batch. Targets align with items.
inline int bce_with_logits(Tape& t, int logits,
                           const std::vector<Vector>& targets) {
  const Batch& vl = t.value(logits);
  if (vl.size() != targets.size())
    throw ShapeError("bce_with_logits: batch/targets size mismatch");
  const double n = static_cast<double>(vl.size());
  double total = 0.0;
  for (std::size_t i = 0; i < vl.size(); ++i) {
    if (vl[i].cols() != 1 || vl[i].rows() != targets[i].size())
      throw ShapeError("bce_with_logits: logits/target shape mismatch");
    for (Eigen::Index j = 0; j < vl[i].rows(); ++j) {
      const double l = vl[i](j, 0), y = targets[i](j);
      // max(l, 0) - l*y + log(1 + exp(-|l|))
      total += std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::fabs(l)));
    }
  }
  Matrix v(1, 1);
  v(0, 0) = total / n;
  return t.emit(Batch{v}, {logits}, [logits, targets, n](Tape& t, int self) {
    const double g = t.grad(self)[0](0, 0);
    const Batch& vl = t.value(logits);
    Batch& gl = t.grad_mut(logits);
    for (std::size_t i = 0; i < vl.size(); ++i)
      for (Eigen::Index j = 0; j < vl[i].rows(); ++j)
        gl[i](j, 0) += g / n *
                       (detail::stable_sigmoid(vl[i](j, 0)) - targets[i](j));
  });
}

// Softmax cross-entropy on logits against integer class labels, averaged
// over the batch.
inline int softmax_cross_entropy(Tape& t, int logits,
                                 const std::vector<int>& labels) {
  const Batch& vl = t.value(logits);
  if (vl.size() != labels.size())
    throw ShapeError("softmax_cross_entropy: batch/labels size mismatch");
  const double n = static_cast<double>(vl.size());
  double total = 0.0;
  for (std::size_t i = 0; i < vl.size(); ++i) {
    if (vl[i].cols() != 1)
      throw ShapeError("softmax_cross_entropy: logits must be a column");
    if (labels[i] < 0 || labels[i] >= vl[i].rows())
      throw ValidationError("softmax_cross_entropy: label out of range");
    const double mx = vl[i].maxCoeff();
    const double lse =
        mx + std::log((vl[i].array() - mx).exp().sum());
    total += lse - vl[i](labels[i], 0);
  }
  Matrix v(1, 1);
  v(0, 0) = total / n;
  return t.emit(Batch{v}, {logits}, [logits, labels, n](Tape& t, int self) {
    const double g = t.grad(self)[0](0, 0);
    const Batch& vl = t.value(logits);
    Batch& gl = t.grad_mut(logits);
    for (std::size_t i = 0; i < vl.size(); ++i) {
      const double mx = vl[i].maxCoeff();
      Eigen::ArrayXd e = (vl[i].col(0).array() - mx).exp();
      Eigen::ArrayXd sm = e / e.sum();
      for (Eigen::Index j = 0; j < vl[i].rows(); ++j)
        gl[i](j, 0) +=
            g / n * (sm(j) - (j == labels[i] ? 1.0 : 0.0));
    }
  });
}

}  // namespace vove::ad
